"""Dense brute-force references for small widths.

Two vectorizations appear here. The doubled-space vector of the MPS code
orders its indices ``(l1, r1, l2, r2, ...)``; superoperators built in this
module use column stacking, ``vec(X)[r + n * c] = X[r, c]``, for which
``vec(A X B) = (B^T kron A) vec(X)``. The ``*_to_*`` helpers convert between
them and plain matrices.

Qubit layout of the dense global gate: qubits ``0..W-1`` are the old layer
(site ``k`` is qubit ``k - 1``), qubits ``W..2W-1`` the fresh layer.
"""

import logging
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import ParameterError, ValidationError
from .gates import (
    PAULI,
    GlobalGate,
    NetworkConfig,
    PauliCoeffTable,
    hamiltonian_operator,
    jump_operator,
)

log = logging.getLogger(__name__)

MAX_CHANNEL_WIDTH = 6
MAX_LINDBLAD_WIDTH = 5


# ---------------------------------------------------------------------------
# vectorization bridges


def doubled_to_matrix(vec: np.ndarray, width: int) -> np.ndarray:
    """Doubled-space vector (``4 ** W`` entries) to a ``2^W x 2^W`` matrix."""
    t = np.asarray(vec).reshape((2, 2) * width)
    perm = list(range(0, 2 * width, 2)) + list(range(1, 2 * width, 2))
    return t.transpose(perm).reshape(2**width, 2**width)


def matrix_to_doubled(rho: np.ndarray) -> np.ndarray:
    n = rho.shape[0]
    width = int(round(np.log2(n)))
    if 2**width != n or rho.shape != (n, n):
        raise ParameterError(f"expected a square 2^W matrix, got shape {rho.shape}")
    t = np.asarray(rho).reshape((2,) * (2 * width))
    perm = [i for k in range(width) for i in (k, width + k)]
    return t.transpose(perm).reshape(-1)


def column_vec(x: np.ndarray) -> np.ndarray:
    return np.asarray(x).reshape(-1, order="F")


def column_unvec(v: np.ndarray) -> np.ndarray:
    n = int(round(np.sqrt(v.size)))
    return np.asarray(v).reshape(n, n, order="F")


def column_to_doubled_perm(width: int) -> np.ndarray:
    """Index map ``p`` with ``doubled[i] = column[p[i]]``."""
    n = 2**width
    idx = np.arange(n * n).reshape(n, n, order="F")  # idx[r, c] = column index
    return matrix_to_doubled(idx).astype(int)


def superop_to_doubled(s: np.ndarray, width: int) -> np.ndarray:
    """Column-stacking superoperator to the doubled-space ordering."""
    p = column_to_doubled_perm(width)
    return s[np.ix_(p, p)]


# ---------------------------------------------------------------------------
# dense global gate and channel


def _apply_local(psi: np.ndarray, op: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """Apply ``op`` to ``qubits`` of ``psi``, shaped ``(2,) * n + (batch,)``."""
    nq = len(qubits)
    o = op.reshape((2,) * (2 * nq))
    moved = np.tensordot(o, psi, axes=(list(range(nq, 2 * nq)), list(qubits)))
    return np.moveaxis(moved, list(range(nq)), list(qubits))


def dense_gate_isometry(gg: GlobalGate) -> np.ndarray:
    """``G (1 kron |0...0>)`` as a ``4^W x 2^W`` matrix (old-layer qubits first)."""
    width = gg.width
    if width > MAX_CHANNEL_WIDTH:
        raise ParameterError(f"dense channel limited to W <= {MAX_CHANNEL_WIDTH}, got {width}")
    n = 2 * width
    psi = np.zeros((2**width, 2**width, 2**width), dtype=complex)
    psi[np.arange(2**width), 0, np.arange(2**width)] = 1.0
    psi = psi.reshape((2,) * n + (2**width,))
    psi = _apply_local(psi, gg.r1, [0, width])
    for k in range(width, 1, -1):
        psi = _apply_local(psi, gg.interior[k - 2], [k - 2, k - 1, width + k - 1])
    psi = _apply_local(psi, gg.l1, [0, width])
    return psi.reshape(4**width, 2**width)


def dense_global_gate(gg: GlobalGate) -> np.ndarray:
    """Full ``4^W x 4^W`` unitary of the global gate."""
    width = gg.width
    if width > 4:
        raise ParameterError("full dense global gate limited to W <= 4")
    n = 2 * width
    psi = np.eye(4**width, dtype=complex).reshape((2,) * n + (4**width,))
    psi = _apply_local(psi, gg.r1, [0, width])
    for k in range(width, 1, -1):
        psi = _apply_local(psi, gg.interior[k - 2], [k - 2, k - 1, width + k - 1])
    psi = _apply_local(psi, gg.l1, [0, width])
    return psi.reshape(4**width, 4**width)


def kraus_operators(gg: GlobalGate) -> np.ndarray:
    """Kraus operators ``K_o = (<o| kron 1) G (1 kron |0>)``, shape ``(2^W, 2^W, 2^W)``."""
    n = 2**gg.width
    return dense_gate_isometry(gg).reshape(n, n, n)


def _as_gate(cfg) -> GlobalGate:
    if isinstance(cfg, GlobalGate):
        return cfg
    if isinstance(cfg, NetworkConfig):
        return GlobalGate.from_table(cfg.coeffs, cfg.dt, cfg.width)
    raise ParameterError(f"expected NetworkConfig or GlobalGate, got {type(cfg).__name__}")


def dense_channel_step(rho: np.ndarray, cfg, bra=None) -> np.ndarray:
    """``Tr_{l-1}(G (rho kron |0><0|) G^dagger)`` by explicit embedding.

    ``cfg`` may be a :class:`NetworkConfig` or a prebuilt :class:`GlobalGate`;
    passing ``bra`` uses a different gate on the right-hand side.
    """
    k = kraus_operators(_as_gate(cfg))
    kb = k if bra is None else kraus_operators(_as_gate(bra))
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != k.shape[1:]:
        raise ParameterError(f"state shape {rho.shape} does not match width {_as_gate(cfg).width}")
    return np.einsum("oij,jk,olk->il", k, rho, kb.conj(), optimize=True)


def dense_adjoint_step(e: np.ndarray, cfg) -> np.ndarray:
    """Adjoint channel ``sum_o K_o^dagger E K_o``."""
    k = kraus_operators(_as_gate(cfg))
    return np.einsum("oji,jk,okl->il", k.conj(), np.asarray(e, dtype=complex), k, optimize=True)


def dense_trajectory(rho0: np.ndarray, cfg, layers: int) -> list:
    """States ``rho_0 .. rho_layers`` under repeated channel steps."""
    gg = _as_gate(cfg)
    k = kraus_operators(gg)
    out = [np.asarray(rho0, dtype=complex)]
    for _ in range(layers):
        out.append(np.einsum("oij,jk,olk->il", k, out[-1], k.conj(), optimize=True))
    return out


def dense_superoperator(cfg) -> np.ndarray:
    """Channel matrix under column stacking, ``sum_o conj(K_o) kron K_o``."""
    k = kraus_operators(_as_gate(cfg))
    n = k.shape[1]
    return np.einsum("oab,ocd->acbd", k.conj(), k).reshape(n * n, n * n)


def choi_matrix(s: np.ndarray) -> np.ndarray:
    """Choi matrix ``sum_ij |i><j| kron Phi(|i><j|)`` of a column-stacking superoperator."""
    n = int(round(np.sqrt(s.shape[0])))
    # s[(a, b), (i, j)] with column-stacked (row, col) pairs, col slowest
    t = s.reshape(n, n, n, n)  # [col_out, row_out, col_in, row_in]
    return t.transpose(3, 1, 2, 0).reshape(n * n, n * n)


def is_cptp(s: np.ndarray, tol: float = 1e-10) -> bool:
    n = int(round(np.sqrt(s.shape[0])))
    ident = column_vec(np.eye(n))
    tp = np.allclose(ident @ s, ident, atol=tol)
    c = choi_matrix(s)
    psd = np.linalg.eigvalsh(0.5 * (c + c.conj().T)).min() >= -tol
    return bool(tp and psd)


def dense_mz(rho: np.ndarray) -> float:
    """``(1/2W) sum_k Tr(sigma^z_k rho) / Tr(rho)``."""
    n = rho.shape[0]
    width = int(round(np.log2(n)))
    diag = np.real(np.diag(rho)).reshape((2,) * width)
    total = 0.0
    for k in range(width):
        p = diag.sum(axis=tuple(i for i in range(width) if i != k))
        total += p[0] - p[1]
    return float(total / (2 * width) / np.real(np.trace(rho)))


def mz_observable(width: int, m_out: float = 0.0) -> np.ndarray:
    """Dense ``(1/2W) sum_k sigma^z_k - m_out``."""
    n = 2**width
    z = np.zeros(n)
    bits = (np.arange(n)[:, None] >> np.arange(width)[::-1]) & 1
    z = (1 - 2 * bits).sum(axis=1) / (2 * width)
    return np.diag(z - m_out).astype(complex)


def product_state(mz: float, width: int, phi: float = 0.0) -> np.ndarray:
    """Dense product state with every qubit at magnetization ``mz``."""
    theta = np.arccos(np.clip(2 * mz, -1, 1))
    v = np.array([np.cos(theta / 2), np.sin(theta / 2) * np.exp(1j * phi)])
    one = np.outer(v, v.conj())
    out = np.ones((1, 1), dtype=complex)
    for _ in range(width):
        out = np.kron(out, one)
    return out


def random_density_matrix(width: int, rng: np.random.Generator, rank: Optional[int] = None) -> np.ndarray:
    n = 2**width
    r = n if rank is None else rank
    a = rng.normal(size=(n, r)) + 1j * rng.normal(size=(n, r))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def random_product_state(width: int, rng: np.random.Generator) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for _ in range(width):
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        v /= np.linalg.norm(v)
        out = np.kron(out, np.outer(v, v.conj()))
    return out


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    d = a - b
    return float(0.5 * np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T))).sum())


def dense_loss(pairs, cfg) -> float:
    """Mean squared output error over ``(rho_in, target)`` pairs, by dense propagation."""
    gg = _as_gate(cfg)
    layers = cfg.depth if isinstance(cfg, NetworkConfig) else None
    return dense_loss_gate(pairs, gg, layers)


def dense_loss_gate(pairs, gg: GlobalGate, layers: int) -> float:
    k = kraus_operators(gg)
    total = 0.0
    for rho, target in pairs:
        for _ in range(layers):
            rho = np.einsum("oij,jk,olk->il", k, rho, k.conj(), optimize=True)
        total += (dense_mz(rho) - target) ** 2
    return total / len(pairs)


# ---------------------------------------------------------------------------
# Lindbladian


def _embed(op: np.ndarray, first: int, width: int) -> np.ndarray:
    nq = int(round(np.log2(op.shape[0])))
    return np.kron(np.kron(np.eye(2**first), op), np.eye(2 ** (width - first - nq)))


def lattice_operators(t: PauliCoeffTable, width: int):
    """Dense ``sum_k H_k`` and the list of ``J_k`` on a chain of ``width`` sites."""
    n = 2**width
    h = np.zeros((n, n), dtype=complex)
    jumps = []
    for k in range(1, width + 1):
        first = 0 if k == 1 else k - 2
        h += _embed(hamiltonian_operator(t, k), first, width)
        jumps.append(_embed(jump_operator(t, k), first, width))
    return h, jumps


def build_lindbladian(t: PauliCoeffTable, width: int) -> np.ndarray:
    """Column-stacking matrix of ``-i[H, .] + sum_k (J . J^dagger - {J^dagger J, .}/2)``."""
    if width > MAX_LINDBLAD_WIDTH:
        raise ParameterError(f"dense Lindbladian limited to W <= {MAX_LINDBLAD_WIDTH}, got {width}")
    if width < 1:
        raise ParameterError("width must be positive")
    h, jumps = lattice_operators(t, width)
    n = 2**width
    one = np.eye(n)
    out = -1j * (np.kron(one, h) - np.kron(h.T, one))
    for j in jumps:
        jj = j.conj().T @ j
        out += np.kron(j.conj(), j) - 0.5 * np.kron(one, jj) - 0.5 * np.kron(jj.T, one)
    return out


@dataclass(frozen=True)
class FirstOrderReport:
    dts: np.ndarray
    residuals: np.ndarray
    slope: float


def first_order_limit_check(
    t: PauliCoeffTable,
    width: int,
    dt_list: Sequence[float],
    n_states: int = 8,
    seed: int = 0,
) -> FirstOrderReport:
    """Residual ``max_rho ||Phi_dt[rho] - exp(dt L)[rho]||_1`` and its log-log slope in ``dt``."""
    if width > 4:
        raise ParameterError("first-order check limited to W <= 4")
    rng = np.random.default_rng(seed)
    states = [random_density_matrix(width, rng) for _ in range(n_states)]
    states += [random_product_state(width, rng) for _ in range(n_states)]
    lind = build_lindbladian(t, width)
    res = []
    for dt in dt_list:
        gg = GlobalGate.from_table(t, dt, width)
        prop = scipy.linalg.expm(dt * lind)
        worst = 0.0
        for rho in states:
            a = dense_channel_step(rho, gg)
            b = column_unvec(prop @ column_vec(rho))
            worst = max(worst, 2 * trace_distance(a, b))
        res.append(worst)
    res = np.array(res)
    dts = np.asarray(dt_list, dtype=float)
    if np.all(res == 0):
        slope = float("inf")
    else:
        slope = float(np.polyfit(np.log(dts), np.log(np.maximum(res, 1e-300)), 1)[0])
    return FirstOrderReport(dts, res, slope)


# ---------------------------------------------------------------------------
# spectral analysis


@dataclass(frozen=True)
class SpectralReport:
    """Sorted Liouvillian spectrum with biorthonormal eigenmatrices.

    ``left[k]`` and ``right[k]`` satisfy ``Tr(left[j] @ right[k]) = delta_jk``.
    ``separation_index`` is the 1-based ``m`` of the chosen gap.
    """

    eigenvalues: np.ndarray
    left: np.ndarray
    right: np.ndarray
    separation_index: int
    tau: float
    tau_prime: float
    gap_ratio: float
    steady_state: np.ndarray
    zero_multiplicity: int
    condition: float

    @property
    def stationary_state(self):
        return self.steady_state


def _biorthonormalize(vals, vl, vr, tol):
    """Rescale/mix right vectors so that ``vl^H vr = 1`` blockwise on eigenvalue clusters."""
    n = len(vals)
    vr = vr.copy()
    i = 0
    while i < n:
        j = i + 1
        while j < n and abs(vals[j] - vals[i]) < tol:
            j += 1
        block = vl[:, i:j].conj().T @ vr[:, i:j]
        vr[:, i:j] = vr[:, i:j] @ np.linalg.inv(block)
        i = j
    return vr


def spectral_analysis(l_matrix: np.ndarray, threshold: float = 0.2, cluster_tol: float = 1e-8) -> SpectralReport:
    """Full eigendecomposition of a Lindbladian and the metastable gap.

    ``m`` is the largest index with ``|Re l_m| / |Re l_{m+1}| < threshold``;
    ``m = 1`` means no metastable manifold beyond the steady state.
    """
    vals, vl, vr = scipy.linalg.eig(l_matrix, left=True, right=True)
    order = np.lexsort((-vals.imag, -vals.real))
    vals, vl, vr = vals[order], vl[:, order], vr[:, order]
    vr = _biorthonormalize(vals, vl, vr, cluster_tol)
    n = int(round(np.sqrt(l_matrix.shape[0])))
    left = np.array([column_unvec(vl[:, k].conj()).T for k in range(len(vals))])
    right = np.array([column_unvec(vr[:, k]) for k in range(len(vals))])
    cond = float(np.linalg.cond(vr))
    if not np.isfinite(cond) or cond > 1e12:
        warnings.warn(f"Lindbladian may be defective (eigenvector condition {cond:.2e})", RuntimeWarning, stacklevel=2)

    zero_mult = int(np.sum(np.abs(vals) < 1e-9))
    if zero_mult > 1:
        log.warning("steady state degenerate: %d zero eigenvalues", zero_mult)

    re = np.abs(vals.real)
    m = 1
    ratio = 0.0
    for k in range(1, len(vals) - 1):  # 0-based k is the 1-based index k + 1
        if re[k + 1] > 0 and re[k] / re[k + 1] < threshold:
            m = k + 1
            ratio = re[k] / re[k + 1]
    if m == 1:
        ratio = re[0] / re[1] if len(vals) > 1 and re[1] > 0 else 0.0
    tau = float(np.inf) if re[m - 1] < 1e-10 else float(1.0 / re[m - 1])
    tau_p = float(1.0 / re[m]) if m < len(vals) and re[m] > 0 else 0.0

    # normalize the steady state and its dual so that L_1 is the identity
    r1 = right[0]
    tr = np.trace(r1)
    if abs(tr) < 1e-14:
        raise ValidationError("zero mode is traceless; no steady state found")
    right[0] = r1 / tr
    left[0] = left[0] * tr
    ss = 0.5 * (right[0] + right[0].conj().T)
    return SpectralReport(vals, left, right, m, tau, tau_p, float(ratio), ss, zero_mult, cond)


def metastable_projection(report: SpectralReport, rho0: np.ndarray, t: float) -> np.ndarray:
    """``rho_ss + sum_{k=2}^m exp(i t Im l_k) c_k R_k`` with ``c_k = Tr(L_k rho0)``."""
    if not (report.tau_prime < t < report.tau):
        warnings.warn(
            f"t={t} outside the metastable window ({report.tau_prime:.3g}, {report.tau:.3g})",
            RuntimeWarning,
            stacklevel=2,
        )
    out = report.steady_state * np.trace(report.left[0] @ rho0)
    for k in range(1, report.separation_index):
        c = np.trace(report.left[k] @ rho0)
        out = out + np.exp(1j * t * report.eigenvalues[k].imag) * c * report.right[k]
    return out


def exact_evolution(l_matrix: np.ndarray, rho0: np.ndarray, t: float) -> np.ndarray:
    return column_unvec(scipy.linalg.expm(t * l_matrix) @ column_vec(rho0))


def single_site_pauli(index: int, site: int, width: int) -> np.ndarray:
    return _embed(PAULI[index], site - 1, width)
