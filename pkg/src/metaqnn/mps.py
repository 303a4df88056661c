"""Matrix-product states and operators on the doubled (vectorized) space.

A density matrix ``rho = sum rho[l, r] |l><r|`` on ``W`` qubits is stored as the
vector ``sum rho[l, r] |l1 r1 l2 r2 ... lW rW>``; each site fuses ``(l_k, r_k)``
into one physical index ``tau = 2 * l_k + r_k`` (00->0, 01->1, 10->2, 11->3).

Site tensors of a :class:`DoubledMps` have legs ``(left, phys, right)``; those
of a :class:`LayerMpo` have legs ``(left, out, in, right)``.
"""

import logging
import struct
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionError, NumericalError, ParameterError
from .tensor import svd_truncate

log = logging.getLogger(__name__)

PHYS = 4
# vectorized single-site identity and the l<->r swap of the fused index
IDENTITY_VEC = np.array([1.0, 0.0, 0.0, 1.0], dtype=complex)
TRANSPOSE_PERM = np.array([0, 2, 1, 3])


@dataclass(frozen=True)
class DoubledMps:
    """Open-boundary MPS with physical dimension 4 on every site."""

    tensors: Tuple[np.ndarray, ...]
    ortho_center: Optional[int] = None

    def __post_init__(self):
        ts = tuple(np.asarray(t, dtype=complex) for t in self.tensors)
        object.__setattr__(self, "tensors", ts)
        if not ts:
            raise DimensionError("an MPS needs at least one site")
        for k, t in enumerate(ts):
            if t.ndim != 3 or t.shape[1] != PHYS:
                raise DimensionError(f"site {k} has shape {t.shape}, expected (Dl, 4, Dr)")
        if ts[0].shape[0] != 1 or ts[-1].shape[2] != 1:
            raise DimensionError("boundary bonds must have length 1")
        for k in range(len(ts) - 1):
            if ts[k].shape[2] != ts[k + 1].shape[0]:
                raise DimensionError(f"bond mismatch between sites {k} and {k + 1}")
        if self.ortho_center is not None and not 0 <= self.ortho_center < len(ts):
            raise ParameterError(f"ortho_center {self.ortho_center} out of range")

    @property
    def width(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> List[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims, default=1)

    def to_dense(self) -> np.ndarray:
        """Full ``4**W`` vector; only sensible for small widths."""
        v = np.ones((1, 1), dtype=complex)
        for t in self.tensors:
            v = np.tensordot(v, t, axes=(1, 0)).reshape(-1, t.shape[2])
        return v[:, 0]

    def scaled(self, factor: complex) -> "DoubledMps":
        site = 0 if self.ortho_center is None else self.ortho_center
        ts = list(self.tensors)
        ts[site] = ts[site] * factor
        return DoubledMps(tuple(ts), self.ortho_center)


@dataclass(frozen=True)
class LayerMpo:
    """MPO acting on the doubled space of one layer.

    ``truncation_error`` is the square root of the summed squared singular
    values discarded while building it (zero if it is exact).
    """

    tensors: Tuple[np.ndarray, ...]
    truncation_error: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        ts = tuple(np.asarray(t, dtype=complex) for t in self.tensors)
        object.__setattr__(self, "tensors", ts)
        for k, t in enumerate(ts):
            if t.ndim != 4:
                raise DimensionError(f"MPO site {k} has rank {t.ndim}, expected 4")
        if ts[0].shape[0] != 1 or ts[-1].shape[3] != 1:
            raise DimensionError("boundary MPO bonds must have length 1")
        for k in range(len(ts) - 1):
            if ts[k].shape[3] != ts[k + 1].shape[0]:
                raise DimensionError(f"MPO bond mismatch between sites {k} and {k + 1}")

    @property
    def width(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> List[int]:
        return [t.shape[3] for t in self.tensors[:-1]]

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims, default=1)

    def to_dense(self) -> np.ndarray:
        """``(d_out, d_in)`` matrix of the whole operator."""
        m = np.ones((1, 1, 1), dtype=complex)  # (out, in, bond)
        for t in self.tensors:
            m = np.einsum("abx,xcdy->acbdy", m, t)
            m = m.reshape(m.shape[0] * m.shape[1], m.shape[2] * m.shape[3], m.shape[4])
        return m[:, :, 0]

    def transposed(self) -> "LayerMpo":
        """Operator transpose with both fused indices mapped ``(l, r) -> (r, l)``."""
        p = TRANSPOSE_PERM
        ts = tuple(t.transpose(0, 2, 1, 3)[:, p][:, :, p] for t in self.tensors)
        return LayerMpo(ts, self.truncation_error, dict(self.meta))


def identity_mpo(width: int) -> LayerMpo:
    eye = np.eye(PHYS, dtype=complex).reshape(1, PHYS, PHYS, 1)
    return LayerMpo(tuple(eye for _ in range(width)))


def product_mps(site_vectors: Sequence[np.ndarray]) -> DoubledMps:
    return DoubledMps(tuple(np.asarray(v, dtype=complex).reshape(1, PHYS, 1) for v in site_vectors))


def identity_mps(width: int) -> DoubledMps:
    """The vectorized identity operator ``|1>``."""
    return product_mps([IDENTITY_VEC] * width)


def from_dense(vec: np.ndarray, width: int, chi_max: Optional[int] = None, rel_tol: float = 0.0) -> DoubledMps:
    """Factor a ``4**W`` vector into an MPS by successive SVDs (left-canonical)."""
    vec = np.asarray(vec, dtype=complex)
    if vec.size != PHYS**width:
        raise DimensionError(f"vector of length {vec.size} does not match width {width}")
    chi = chi_max or PHYS**width
    tensors = []
    rest = vec.reshape(1, -1)
    for _ in range(width - 1):
        dl = rest.shape[0]
        res = svd_truncate(rest.reshape(dl * PHYS, -1), chi, rel_tol)
        tensors.append(res.u.reshape(dl, PHYS, -1))
        rest = res.s[:, None] * res.v_dagger
    tensors.append(rest.reshape(rest.shape[0], PHYS, 1))
    return DoubledMps(tuple(tensors), width - 1)


# ---------------------------------------------------------------------------
# canonical forms and compression


def _left_qr_sweep(tensors: List[np.ndarray], stop: int) -> None:
    for k in range(stop):
        t = tensors[k]
        dl, d, dr = t.shape
        q, r = np.linalg.qr(t.reshape(dl * d, dr))
        tensors[k] = q.reshape(dl, d, -1)
        tensors[k + 1] = np.tensordot(r, tensors[k + 1], axes=(1, 0))


def _right_qr_sweep(tensors: List[np.ndarray], stop: int) -> None:
    for k in range(len(tensors) - 1, stop, -1):
        t = tensors[k]
        dl, d, dr = t.shape
        q, r = np.linalg.qr(t.reshape(dl, d * dr).T)
        tensors[k] = q.T.reshape(-1, d, dr)
        tensors[k - 1] = np.tensordot(tensors[k - 1], r.T, axes=(2, 0))


def canonicalize(s: DoubledMps, center: int) -> DoubledMps:
    """Mixed-canonical form with the orthogonality center at ``center``."""
    if not 0 <= center < s.width:
        raise ParameterError(f"center {center} out of range for width {s.width}")
    ts = list(s.tensors)
    _left_qr_sweep(ts, center)
    _right_qr_sweep(ts, center)
    return DoubledMps(tuple(ts), center)


def _svd_sweep_right_to_left(ts: List[np.ndarray], chi_max: int, rel_tol: float) -> float:
    """Truncating sweep; ``ts`` must be left-canonical up to the last site."""
    weight = 0.0
    for k in range(len(ts) - 1, 0, -1):
        t = ts[k]
        dl, d, dr = t.shape
        res = svd_truncate(t.reshape(dl, d * dr), chi_max, rel_tol)
        weight += res.discarded_weight
        ts[k] = res.v_dagger.reshape(-1, d, dr)
        ts[k - 1] = np.tensordot(ts[k - 1], res.u * res.s, axes=(2, 0))
    return weight


def trace_pairing(s: DoubledMps) -> complex:
    """``<1|s>``, i.e. the trace of the represented operator."""
    env = np.ones(1, dtype=complex)
    for t in s.tensors:
        env = env @ np.tensordot(t, IDENTITY_VEC, axes=(1, 0))
    return complex(env[0])


def _finish(ts: List[np.ndarray], normalize: bool) -> Tuple[DoubledMps, float]:
    out = DoubledMps(tuple(ts), 0)
    defect = 0.0
    if normalize:
        tr = trace_pairing(out)
        if not np.isfinite(tr) or abs(tr) == 0.0:
            raise NumericalError(f"cannot renormalize a state with trace {tr}")
        defect = abs(tr - 1.0)
        if defect > 0.0:
            log.debug("trace defect before renormalization: %.3e", defect)
        out = out.scaled(1.0 / tr)
    return out, defect


def compress(
    s: DoubledMps, chi_max: int, rel_tol: float = 0.0, normalize: bool = False
) -> Tuple[DoubledMps, float]:
    """Truncate every bond to ``chi_max``.

    One left-to-right QR sweep followed by a right-to-left truncating SVD
    sweep. Returns the compressed state and the summed discarded weight,
    which equals the squared distance to the input when ``normalize`` is off.
    With ``normalize`` the result is rescaled to unit trace.
    """
    if chi_max is None or chi_max < 1:
        raise ParameterError(f"chi_max must be a positive integer, got {chi_max}")
    ts = list(s.tensors)
    _left_qr_sweep(ts, len(ts) - 1)
    weight = _svd_sweep_right_to_left(ts, chi_max, rel_tol)
    out, _ = _finish(ts, normalize)
    return out, weight


def apply_mpo_exact(op: LayerMpo, s: DoubledMps) -> DoubledMps:
    """Untruncated MPO-MPS product (bond dimensions multiply)."""
    if op.width != s.width:
        raise DimensionError(f"MPO width {op.width} != MPS width {s.width}")
    ts = []
    for o, a in zip(op.tensors, s.tensors):
        t = np.einsum("wtsv,asb->wavtb", o, a)
        w, al, v, d, b = t.shape
        ts.append(t.reshape(w * al, d, v * b))
    return DoubledMps(tuple(ts))


def apply_and_compress(
    op: LayerMpo,
    s: DoubledMps,
    chi_max: Optional[int] = None,
    rel_tol: float = 0.0,
    normalize: bool = False,
) -> Tuple[DoubledMps, float, float]:
    """Exact application followed by compression.

    The left QR sweep of the compression is fused with the site-by-site
    application so the full product is never held in memory. Returns
    ``(state, discarded_weight, trace_defect)``.
    """
    if op.width != s.width:
        raise DimensionError(f"MPO width {op.width} != MPS width {s.width}")
    n = s.width
    carry = np.ones((1, 1, 1), dtype=complex)  # (new bond, mpo bond, mps bond)
    ts = []
    for k, (o, a) in enumerate(zip(op.tensors, s.tensors)):
        x = np.tensordot(carry, a, axes=(2, 0))  # r w s b
        t = np.tensordot(x, o, axes=([1, 2], [0, 2])).transpose(0, 2, 3, 1)  # r t v b
        r, d, v, b = t.shape
        if k == n - 1:
            ts.append(t.reshape(r, d, v * b))
            break
        q, rm = np.linalg.qr(t.reshape(r * d, v * b))
        ts.append(q.reshape(r, d, -1))
        carry = rm.reshape(-1, v, b)
    chi = chi_max or PHYS**n
    weight = _svd_sweep_right_to_left(ts, chi, rel_tol)
    out, defect = _finish(ts, normalize)
    return out, weight, defect


def apply_mpo(op: LayerMpo, s: DoubledMps, chi_max: Optional[int] = None, rel_tol: float = 0.0) -> DoubledMps:
    """``op |s>`` compressed to ``chi_max`` (no truncation when ``None``)."""
    return apply_and_compress(op, s, chi_max, rel_tol)[0]


# ---------------------------------------------------------------------------
# overlaps


def _check_widths(*states) -> None:
    widths = {x.width for x in states}
    if len(widths) != 1:
        raise DimensionError(f"width mismatch: {sorted(widths)}")


def overlap(a: DoubledMps, b: DoubledMps) -> complex:
    """Hermitian inner product ``<a|b>`` (``a`` conjugated entrywise)."""
    _check_widths(a, b)
    env = np.ones((1, 1), dtype=complex)
    for ta, tb in zip(a.tensors, b.tensors):
        env = np.tensordot(np.tensordot(env, ta.conj(), axes=(0, 0)), tb, axes=([0, 1], [0, 1]))
    return complex(env[0, 0])


def flat_overlap(a: DoubledMps, b: DoubledMps) -> complex:
    """Bilinear trace pairing ``Tr(A B)`` of the two represented operators.

    No conjugation is applied; ``b``'s fused index is read transposed
    (``(l, r) -> (r, l)``) so that the pairing is the operator trace of the
    product even when neither operator is Hermitian.
    """
    _check_widths(a, b)
    env = np.ones((1, 1), dtype=complex)
    for ta, tb in zip(a.tensors, b.tensors):
        env = np.tensordot(np.tensordot(env, ta, axes=(0, 0)), tb[:, TRANSPOSE_PERM], axes=([0, 1], [0, 1]))
    return complex(env[0, 0])


def flat_expectation(a: DoubledMps, op: LayerMpo, b: DoubledMps) -> complex:
    """``flat_overlap(a, op |b>)`` contracted directly, without forming ``op |b>``."""
    _check_widths(a, b)
    if op.width != a.width:
        raise DimensionError(f"MPO width {op.width} != MPS width {a.width}")
    env = np.ones((1, 1, 1), dtype=complex)
    for ta, o, tb in zip(a.tensors, op.tensors, b.tensors):
        ta_t = ta[:, TRANSPOSE_PERM]
        x = np.tensordot(env, ta_t, axes=(0, 0))  # w y t a
        x = np.tensordot(x, o, axes=([0, 2], [0, 1]))  # y a s v
        env = np.tensordot(x, tb, axes=([0, 2], [0, 1]))  # a v b
    return complex(env[0, 0, 0])


# ---------------------------------------------------------------------------
# MPO compression


def compress_mpo(op: LayerMpo, chi_max: int, rel_tol: float = 0.0) -> LayerMpo:
    """SVD compression of an MPO seen as an MPS with physical dimension 16."""
    shapes = [t.shape for t in op.tensors]
    ts = [t.reshape(t.shape[0], t.shape[1] * t.shape[2], t.shape[3]) for t in op.tensors]
    for k in range(len(ts) - 1):
        t = ts[k]
        dl, d, dr = t.shape
        q, r = np.linalg.qr(t.reshape(dl * d, dr))
        ts[k] = q.reshape(dl, d, -1)
        ts[k + 1] = np.tensordot(r, ts[k + 1], axes=(1, 0))
    weight = _svd_sweep_right_to_left(ts, chi_max, rel_tol)
    out = tuple(t.reshape(t.shape[0], sh[1], sh[2], t.shape[2]) for t, sh in zip(ts, shapes))
    err = float(np.sqrt(weight + op.truncation_error**2))
    return LayerMpo(out, err, dict(op.meta))


# ---------------------------------------------------------------------------
# debug dump: little-endian, not a stable format

_MAGIC = b"DMPS"


def dump_mps(s: DoubledMps, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<q", s.width))
        for t in s.tensors:
            fh.write(struct.pack("<qqq", *t.shape))
            fh.write(np.ascontiguousarray(t, dtype="<c16").tobytes())


def load_mps(path) -> DoubledMps:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError(f"{path} is not an MPS dump")
        (width,) = struct.unpack("<q", fh.read(8))
        ts = []
        for _ in range(width):
            shape = struct.unpack("<qqq", fh.read(24))
            n = int(np.prod(shape))
            ts.append(np.frombuffer(fh.read(16 * n), dtype="<c16").reshape(shape).astype(complex))
    return DoubledMps(tuple(ts))
