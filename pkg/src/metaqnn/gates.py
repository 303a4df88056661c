"""Perceptron gates, the layer-to-layer global gate and its channel MPOs.

Conventions
-----------
Single qubits use the basis ``(|0>, |1>)`` with ``sigma_z = diag(1, -1)``, so
the vacuum has ``m_z = +1/2``. Ladder operators are unit normalized:
``sigma_minus = |0><1|`` (the jump that empties a site) and
``sigma_plus = |1><0|`` (excites the fresh site of the next layer).

Column ``k`` (1-based) of the network holds the qubits ``(k, l-1)`` and
``(k, l)``; its 4-dimensional operator space is indexed ``2 * a + b`` with
``a`` the old-layer and ``b`` the new-layer qubit. The perceptron ``G_k`` for
``k >= 2`` acts on ``((k-1, l-1), (k, l-1), (k, l))``; the boundary gate at
``k = 1`` acts on column 1 only.

The global gate applies, in time order, ``R_1``, ``G_W``, ..., ``G_2`` and
finally ``SWAP_1``, so every Hamiltonian term acts on old-layer spins that
have not been swapped out yet.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from .errors import ParameterError
from .mps import LayerMpo, compress_mpo
from .tensor import matrix_exp, svd_truncate

log = logging.getLogger(__name__)

I2 = np.eye(2, dtype=complex)
PAULI = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)

KINDS = ("hamiltonian", "jump_plus", "jump_minus")


@dataclass(frozen=True)
class PauliCoeffTable:
    """Couplings of the two-site Pauli strings ``sigma^a1 (x) sigma^a2``.

    ``c[a1, a2]`` builds the jump operator ``J = sum c sigma^a1 sigma^a2`` and
    ``d[a1, a2]`` the Hamiltonian ``H = sum d sigma^a1 sigma^a2``. At the
    open boundary ``k = 1`` only entries with ``a1 == 0`` act.
    """

    c: np.ndarray = field(default_factory=lambda: np.zeros((4, 4), dtype=complex))
    d: np.ndarray = field(default_factory=lambda: np.zeros((4, 4)))

    def __post_init__(self):
        c = np.array(self.c, dtype=complex).reshape(4, 4)
        d = np.array(self.d, dtype=complex).reshape(4, 4)
        if np.any(np.abs(d.imag) > 0):
            raise ParameterError("Hamiltonian couplings must be real")
        c.setflags(write=False)
        d = np.ascontiguousarray(d.real)
        d.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    def __eq__(self, other):
        if not isinstance(other, PauliCoeffTable):
            return NotImplemented
        return np.array_equal(self.c, other.c) and np.array_equal(self.d, other.d)

    def __hash__(self):
        return hash((self.c.tobytes(), self.d.tobytes()))

    def shifted(self, dc, dd, eps: float) -> "PauliCoeffTable":
        return PauliCoeffTable(self.c + eps * np.asarray(dc), self.d + eps * np.asarray(dd))

    def is_zero(self) -> bool:
        return not (np.any(self.c) or np.any(self.d))

    def to_dict(self) -> dict:
        return {
            "c_real": self.c.real.tolist(),
            "c_imag": self.c.imag.tolist(),
            "d": self.d.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PauliCoeffTable":
        c = np.asarray(data["c_real"]) + 1j * np.asarray(data["c_imag"])
        return cls(c, np.asarray(data["d"]))


@dataclass(frozen=True)
class IsingParams:
    """Transverse field, interaction and decay rate of the dissipative Ising model."""

    omega: float
    v: float
    kappa: float = 1.0

    def __post_init__(self):
        if not self.kappa > 0:
            raise ParameterError(f"kappa must be positive, got {self.kappa}")


@dataclass(frozen=True)
class NetworkConfig:
    """Geometry, time step, truncation caps and gate couplings of a network."""

    width: int
    depth: int
    dt: float
    coeffs: PauliCoeffTable
    chi_mps: int = 64
    chi_mpo: int = 16
    rel_tol: float = 1e-12

    def __post_init__(self):
        if self.width < 2:
            raise ParameterError(f"width must be at least 2, got {self.width}")
        if self.depth < 1:
            raise ParameterError(f"depth must be at least 1, got {self.depth}")
        if not self.dt > 0:
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if self.chi_mps < 1 or self.chi_mpo < 1:
            raise ParameterError("bond caps must be at least 1")

    def with_coeffs(self, coeffs: PauliCoeffTable) -> "NetworkConfig":
        return NetworkConfig(self.width, self.depth, self.dt, coeffs, self.chi_mps, self.chi_mpo, self.rel_tol)


def ising_coeffs(p: IsingParams) -> PauliCoeffTable:
    """``H_k = (Omega/2) sigma^x_k + (V/4) sigma^z_{k-1} sigma^z_k``, ``J_k = sqrt(kappa) sigma^-_k``."""
    c = np.zeros((4, 4), dtype=complex)
    d = np.zeros((4, 4))
    d[0, 1] = p.omega / 2
    d[3, 3] = p.v / 4
    # sigma_minus = (sigma_x + i sigma_y) / 2
    c[0, 1] = np.sqrt(p.kappa) / 2
    c[0, 2] = 1j * np.sqrt(p.kappa) / 2
    return PauliCoeffTable(c, d)


def sigma_y_jump_coeffs(p: IsingParams) -> PauliCoeffTable:
    """Ising Hamiltonian with the jump replaced by ``-i sqrt(kappa) sigma^y``."""
    t = ising_coeffs(p)
    c = np.zeros((4, 4), dtype=complex)
    c[0, 2] = -1j * np.sqrt(p.kappa)
    return PauliCoeffTable(c, t.d)


# ---------------------------------------------------------------------------
# local operators


def _check_site(k: int, width: Optional[int] = None) -> None:
    if k < 1 or (width is not None and k > width):
        raise ParameterError(f"site index {k} out of range 1..{width}")


def pauli_string(a1: int, a2: int, k: int) -> Optional[np.ndarray]:
    """``sigma^a1_{k-1} sigma^a2_k`` (4x4), or the boundary form (2x2) at ``k = 1``.

    Returns ``None`` when the boundary rule removes the term.
    """
    if k == 1:
        return PAULI[a2].copy() if a1 == 0 else None
    return np.kron(PAULI[a1], PAULI[a2])


def _pauli_sum(coeffs: np.ndarray, k: int) -> np.ndarray:
    if k == 1:
        return np.einsum("b,bij->ij", coeffs[0], PAULI)
    return np.einsum("ab,aij,bkl->ikjl", coeffs, PAULI, PAULI).reshape(4, 4)


def hamiltonian_operator(t: PauliCoeffTable, k: int) -> np.ndarray:
    _check_site(k)
    return _pauli_sum(t.d.astype(complex), k)


def jump_operator(t: PauliCoeffTable, k: int) -> np.ndarray:
    _check_site(k)
    return _pauli_sum(t.c, k)


def coupling_operator(t: PauliCoeffTable, k: int) -> np.ndarray:
    """``V_k = J_k (x) sigma^+ + J_k^dagger (x) sigma^-`` with the ladder on ``(k, l)``."""
    j = jump_operator(t, k)
    return np.kron(j, SIGMA_PLUS) + np.kron(j.conj().T, SIGMA_MINUS)


def _swap_factor(k: int) -> np.ndarray:
    return SWAP.copy() if k == 1 else np.kron(I2, SWAP)


@dataclass(frozen=True)
class GateFactors:
    """The three factors of a perceptron, ``gate = swap @ jump @ ham``."""

    swap: np.ndarray
    jump: np.ndarray
    ham: np.ndarray

    @property
    def gate(self) -> np.ndarray:
        return self.swap @ self.jump @ self.ham


def local_gate_factors(
    t: PauliCoeffTable,
    dt: float,
    k: int,
    update: Optional[PauliCoeffTable] = None,
    eps: float = 0.0,
) -> GateFactors:
    """Factors of ``G_k``; with ``update`` the multiplicative update is applied.

    The jump factor becomes ``exp(-i eps sqrt(dt)/2 V~) exp(-i sqrt(dt) V) exp(-i eps sqrt(dt)/2 V~)``
    and the Hamiltonian factor ``exp(-i dt H) exp(-i eps dt H~)``, where
    ``V~`` and ``H~`` are built from ``update`` like ``V`` and ``H``.
    """
    _check_site(k)
    h = np.kron(hamiltonian_operator(t, k), I2)
    ham = matrix_exp(h, -1j * dt)
    jump = matrix_exp(coupling_operator(t, k), -1j * np.sqrt(dt))
    if update is not None and eps != 0.0:
        half = matrix_exp(coupling_operator(update, k), -0.5j * eps * np.sqrt(dt))
        jump = half @ jump @ half
        ham = ham @ matrix_exp(np.kron(hamiltonian_operator(update, k), I2), -1j * eps * dt)
    return GateFactors(_swap_factor(k), jump, ham)


def build_local_gate(t: PauliCoeffTable, dt: float, k: int, width: int) -> np.ndarray:
    """``SWAP_k exp(-i sqrt(dt) V_k) exp(-i dt H_k (x) 1)``.

    An 8x8 unitary on ``((k-1, l-1), (k, l-1), (k, l))`` for ``k >= 2`` and a
    4x4 unitary on column 1 for ``k = 1``.
    """
    _check_site(k, width)
    return local_gate_factors(t, dt, k).gate


def gradient_insertion(
    t: PauliCoeffTable, dt: float, k: int, alpha: Tuple[int, int], kind: str
) -> Optional[np.ndarray]:
    """Modified perceptron whose substitution into the global gate yields a gradient trace.

    ``hamiltonian``: ``G_k S`` (``R_1 S`` at the boundary).
    ``jump_plus`` / ``jump_minus``: ``T (X E + E X) Hm`` with ``X = S^+ +/- S^-``,
    ``E`` the jump factor, ``Hm`` the Hamiltonian factor and ``T`` the swap
    (identity at the boundary).

    Returns ``None`` if the boundary rule removes the term.
    """
    if kind not in KINDS:
        raise ParameterError(f"unknown gradient kind {kind!r}")
    s = pauli_string(alpha[0], alpha[1], k)
    if s is None:
        return None
    f = local_gate_factors(t, dt, k)
    swap = f.swap if k >= 2 else np.eye(4, dtype=complex)
    if kind == "hamiltonian":
        return swap @ f.jump @ f.ham @ np.kron(s, I2)
    sign = 1.0 if kind == "jump_plus" else -1.0
    x = np.kron(s, SIGMA_PLUS) + sign * np.kron(s, SIGMA_MINUS)
    return swap @ (x @ f.jump + f.jump @ x) @ f.ham


# ---------------------------------------------------------------------------
# global gate


@dataclass(frozen=True)
class GlobalGate:
    """All perceptrons of one layer transition.

    ``r1`` is the boundary gate without its swap, ``l1`` the trailing column-1
    swap and ``interior[k - 2]`` the 8x8 gate ``G_k`` for ``k = 2..W``.
    """

    width: int
    r1: np.ndarray
    l1: np.ndarray
    interior: Tuple[np.ndarray, ...]

    @classmethod
    def from_table(
        cls,
        t: PauliCoeffTable,
        dt: float,
        width: int,
        update: Optional[PauliCoeffTable] = None,
        eps: float = 0.0,
    ) -> "GlobalGate":
        if width < 2:
            raise ParameterError("width must be at least 2")
        f1 = local_gate_factors(t, dt, 1, update, eps)
        # translation invariance: one interior gate serves every k >= 2
        g = local_gate_factors(t, dt, 2, update, eps).gate
        return cls(width, f1.jump @ f1.ham, SWAP.copy(), tuple(g for _ in range(width - 1)))

    def replaced(self, k: int, op: np.ndarray) -> "GlobalGate":
        if k == 1:
            return GlobalGate(self.width, op, self.l1, self.interior)
        inner = list(self.interior)
        inner[k - 2] = op
        return GlobalGate(self.width, self.r1, self.l1, tuple(inner))


def _split_interior(g: np.ndarray):
    """Operator-Schmidt factors of an 8x8 gate across ``(k-1, l-1) | column k``."""
    t = g.reshape(2, 2, 2, 2, 2, 2)  # o0 o1 o2 i0 i1 i2
    m = t.transpose(0, 3, 1, 2, 4, 5).reshape(4, 16)
    res = svd_truncate(m, 4)
    lefts = (res.u * res.s).T.reshape(-1, 2, 2)
    rights = res.v_dagger.reshape(-1, 2, 2, 2, 2).reshape(-1, 4, 4)
    return lefts, rights


def gate_mpo(gg: GlobalGate, insertions: Optional[Dict[int, np.ndarray]] = None) -> LayerMpo:
    """MPO of the global gate over columns, exact (bond <= 4 without insertions).

    With ``insertions`` (column -> replacement operator) the result is the
    sum over the keys of the gate with that single perceptron replaced.
    """
    width = gg.width
    split_g = _split_interior(gg.interior[0]) if all(
        g is gg.interior[0] for g in gg.interior
    ) else None

    def g_split(k):
        return split_g if split_g is not None else _split_interior(gg.interior[k - 2])

    # sectors[k]: bond between columns k-1 and k
    sectors = {}
    for k in range(2, width + 1):
        if insertions is None:
            sectors[k] = [("plain",) + tuple(g_split(k))]
            continue
        secs = []
        if any(j > k for j in insertions):
            secs.append(("pre",) + tuple(g_split(k)))
        if k in insertions:
            secs.append(("at",) + tuple(_split_interior(insertions[k])))
        if any(j < k for j in insertions):
            secs.append(("post",) + tuple(g_split(k)))
        sectors[k] = secs

    def dims(secs):
        return sum(s[1].shape[0] for s in secs)

    allowed = {("plain", "plain"), ("pre", "pre"), ("pre", "at"), ("at", "post"), ("post", "post")}
    tensors = []

    # column 1
    right = sectors[2]
    t1 = np.zeros((1, 4, 4, max(dims(right), 1)), dtype=complex)
    off = 0
    for name, lefts, _ in right:
        base = gg.r1
        if name == "post":
            base = insertions[1]
        for b in range(lefts.shape[0]):
            t1[0, :, :, off + b] = gg.l1 @ np.kron(lefts[b], I2) @ base
        off += lefts.shape[0]
    tensors.append(t1)

    for k in range(2, width):
        left, right = sectors[k], sectors[k + 1]
        t = np.zeros((max(dims(left), 1), 4, 4, max(dims(right), 1)), dtype=complex)
        offl = 0
        for nl, _, rights in left:
            offr = 0
            for nr, lefts, _ in right:
                if (nl, nr) in allowed:
                    for a in range(rights.shape[0]):
                        for b in range(lefts.shape[0]):
                            t[offl + a, :, :, offr + b] = rights[a] @ np.kron(lefts[b], I2)
                offr += lefts.shape[0]
            offl += rights.shape[0]
        tensors.append(t)

    left = sectors[width]
    tw = np.zeros((max(dims(left), 1), 4, 4, 1), dtype=complex)
    off = 0
    for name, _, rights in left:
        if name != "pre":
            tw[off : off + rights.shape[0], :, :, 0] = rights
        off += rights.shape[0]
    tensors.append(tw)
    return LayerMpo(tuple(tensors))


def channel_mpo(ket: LayerMpo, bra: LayerMpo) -> LayerMpo:
    """Doubled-space MPO of ``rho -> Tr_{l-1}(K (rho (x) |0><0|) B^dagger)``.

    ``ket`` and ``bra`` are column MPOs of global-gate-like operators ``K`` and
    ``B``; fresh-layer inputs are projected on ``|0>`` and old-layer outputs
    traced out.
    """
    out = []
    for g, h in zip(ket.tensors, bra.tensors):
        dl, _, _, dr = g.shape
        el, _, _, er = h.shape
        g0 = g.reshape(dl, 2, 2, 2, 2, dr)[:, :, :, :, 0, :]
        h0 = h.reshape(el, 2, 2, 2, 2, er)[:, :, :, :, 0, :].conj()
        f = np.einsum("aoxib,cozjd->acxzijbd", g0, h0, optimize=True)
        out.append(f.reshape(dl * el, 4, 4, dr * er))
    return LayerMpo(tuple(out))


def _finalize(f: LayerMpo, chi_mpo: int, what: str) -> LayerMpo:
    if f.max_bond <= chi_mpo:
        return f
    g = compress_mpo(f, chi_mpo)
    if g.truncation_error > 1e-10:
        warnings.warn(
            f"{what} compressed to chi_mpo={chi_mpo} with truncation error {g.truncation_error:.3e}",
            RuntimeWarning,
            stacklevel=3,
        )
    return g


def build_forward_mpo(cfg: NetworkConfig) -> LayerMpo:
    """Doubled-space MPO of the layer-to-layer channel."""
    gg = GlobalGate.from_table(cfg.coeffs, cfg.dt, cfg.width)
    g = gate_mpo(gg)
    return _finalize(channel_mpo(g, g), cfg.chi_mpo, "forward MPO")


def build_backward_mpo(cfg: NetworkConfig) -> LayerMpo:
    """Adjoint of the forward channel under the bilinear trace pairing."""
    return build_forward_mpo(cfg).transposed()


def build_gradient_mpo(
    cfg: NetworkConfig,
    site: Optional[int],
    alpha: Tuple[int, int],
    kind: str,
    sites: Optional[Iterable[int]] = None,
) -> Optional[LayerMpo]:
    """MPO of ``rho -> Tr_{l-1}(G~ (rho (x) |0><0|) G^dagger)``.

    ``G~`` is the global gate with the perceptron at ``site`` replaced by its
    gradient insertion. Passing ``site=None`` and ``sites`` (default: all
    columns) gives the sum over those columns in one MPO. Returns ``None``
    when every requested column is removed by the boundary rule.
    """
    width = cfg.width
    if site is not None:
        _check_site(site, width)
        cols = [site]
    else:
        cols = list(range(1, width + 1)) if sites is None else list(sites)
    gg = GlobalGate.from_table(cfg.coeffs, cfg.dt, width)
    ins = {}
    for k in cols:
        _check_site(k, width)
        op = gradient_insertion(cfg.coeffs, cfg.dt, k, alpha, kind)
        if op is not None:
            ins[k] = op
    if not ins:
        return None
    g_mod = gate_mpo(gg, ins)
    g = gate_mpo(gg)
    f = channel_mpo(g_mod, g)
    return LayerMpo(f.tensors, 0.0, {"sites": sorted(ins), "alpha": tuple(alpha), "kind": kind})


def random_coeffs(rng: np.random.Generator, scale: float = 0.5) -> PauliCoeffTable:
    """Table with independent normal couplings of standard deviation ``scale``."""
    c = rng.normal(scale=scale, size=(4, 4)) + 1j * rng.normal(scale=scale, size=(4, 4))
    return PauliCoeffTable(c, rng.normal(scale=scale, size=(4, 4)))


def unitarity_error(g: np.ndarray) -> float:
    """``max |G^dagger G - 1|``."""
    g = np.asarray(g)
    return float(np.abs(g.conj().T @ g - np.eye(g.shape[0])).max())
