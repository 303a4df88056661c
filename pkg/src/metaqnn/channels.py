"""Input states, forward/backward propagation and the magnetization readout."""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import NumericalError, ParameterError
from .gates import NetworkConfig, build_backward_mpo, build_forward_mpo
from .mps import IDENTITY_VEC, DoubledMps, LayerMpo, apply_and_compress, product_mps, trace_pairing

log = logging.getLogger(__name__)

Z_VEC = np.array([1.0, 0.0, 0.0, -1.0], dtype=complex)

N_BINS = 40
HIST_RANGE = (-0.5, 0.5)
TROUGH_FRACTION = 0.6
# a mode must hold at least this share of the samples
MIN_PEAK_FRACTION = 0.05


@dataclass(frozen=True)
class InputSpec:
    """Product input with every qubit at magnetization ``mz_in`` and azimuth ``phi``."""

    mz_in: float
    phi: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.mz_in) or abs(self.mz_in) > 0.5:
            raise ParameterError(f"input magnetization must lie in [-1/2, 1/2], got {self.mz_in}")

    @property
    def theta(self) -> float:
        return float(np.arccos(np.clip(2.0 * self.mz_in, -1.0, 1.0)))


@dataclass
class PropagationTrace:
    """Per-layer record of a forward propagation, layers ``0..L``."""

    mz_per_layer: List[float] = field(default_factory=list)
    trace_defect_per_layer: List[float] = field(default_factory=list)
    max_bond_used: List[int] = field(default_factory=list)
    discarded_weight_per_layer: List[float] = field(default_factory=list)
    states: Optional[List[DoubledMps]] = None


def single_site_vector(spec: InputSpec) -> np.ndarray:
    """Doubled-space vector of ``|psi><psi|``, ``|psi> = cos(t/2)|0> + e^{i phi} sin(t/2)|1>``."""
    c, s = np.cos(spec.theta / 2), np.sin(spec.theta / 2)
    q1 = c * s * np.exp(-1j * spec.phi)
    return np.array([c * c, q1, np.conj(q1), s * s], dtype=complex)


def product_input_mps(spec: InputSpec, width: int) -> DoubledMps:
    if width < 1:
        raise ParameterError("width must be positive")
    v = single_site_vector(spec)
    return product_mps([v] * width)


def error_operator_mps(m_out: float, width: int) -> DoubledMps:
    """Bond-growing MPS of ``(1/2W) sum_k sigma^z_k - m_out``.

    The bond after site ``k`` has dimension ``k + 1``: channel ``j < k`` carries
    the partial sum ending at site ``j + 1``, channel ``k`` the identity string.
    """
    if width < 2:
        raise ParameterError(f"width must be at least 2, got {width}")
    if not np.isfinite(m_out):
        raise ParameterError("m_out must be finite")
    wz = Z_VEC / (2 * width)
    u = IDENTITY_VEC
    ts = []
    first = np.zeros((1, 4, 2), dtype=complex)
    first[0, :, 0] = wz
    first[0, :, 1] = u
    ts.append(first)
    for k in range(2, width):
        t = np.zeros((k, 4, k + 1), dtype=complex)
        for j in range(k - 1):
            t[j, :, j] = u
        t[k - 1, :, k - 1] = wz
        t[k - 1, :, k] = u
        ts.append(t)
    last = np.zeros((width, 4, 1), dtype=complex)
    for j in range(width - 1):
        last[j, :, 0] = u
    last[width - 1, :, 0] = wz - m_out * u
    ts.append(last)
    return DoubledMps(tuple(ts))


def measure_mz(s: DoubledMps) -> float:
    """``(1/2W) sum_k Tr(sigma^z_k rho) / Tr(rho)``."""
    n = s.width
    t_id = [np.tensordot(t, IDENTITY_VEC, axes=(1, 0)) for t in s.tensors]
    t_z = [np.tensordot(t, Z_VEC, axes=(1, 0)) for t in s.tensors]
    # left[k] is the identity environment of sites < k
    left = [np.ones(1, dtype=complex)]
    for m in t_id:
        left.append(left[-1] @ m)
    trace = left[-1][0]
    if not np.isfinite(trace) or abs(trace) < 1e-300:
        raise NumericalError(f"cannot read out a state with trace {trace}")
    if abs(trace - 1.0) > 1e-10:
        log.debug("measure_mz: normalizing state with trace defect %.3e", abs(trace - 1.0))
    right = np.ones(1, dtype=complex)
    total = 0.0 + 0.0j
    for k in range(n - 1, -1, -1):
        total += left[k] @ t_z[k] @ right
        right = t_id[k] @ right
    val = total / (2 * n * trace)
    if abs(val.imag) > 1e-8:
        log.warning("measure_mz: imaginary residue %.3e", val.imag)
    return float(val.real)


def _check_finite_state(s: DoubledMps, layer: int) -> None:
    for k, t in enumerate(s.tensors):
        if not np.all(np.isfinite(t)):
            raise NumericalError(f"non-finite entries at layer {layer}, site {k + 1}")


def propagate_forward(
    s: DoubledMps,
    cfg: NetworkConfig,
    layers: int,
    retain_states: bool = False,
    mpo: Optional[LayerMpo] = None,
) -> Tuple[DoubledMps, PropagationTrace]:
    """Apply the forward channel ``layers`` times, compressing to ``cfg.chi_mps``.

    Each new state is renormalized to unit trace; the pre-normalization
    defect is recorded. With ``retain_states`` the trace keeps ``rho_0 ..
    rho_layers``.
    """
    if s.width != cfg.width:
        raise ParameterError(f"state width {s.width} != network width {cfg.width}")
    if layers < 0:
        raise ParameterError("layers must be non-negative")
    f = build_forward_mpo(cfg) if mpo is None else mpo
    tr = PropagationTrace(states=[s] if retain_states else None)
    tr.mz_per_layer.append(measure_mz(s))
    tr.trace_defect_per_layer.append(abs(trace_pairing(s) - 1.0))
    tr.max_bond_used.append(s.max_bond)
    tr.discarded_weight_per_layer.append(0.0)
    for layer in range(1, layers + 1):
        s, weight, defect = apply_and_compress(f, s, cfg.chi_mps, cfg.rel_tol, normalize=True)
        _check_finite_state(s, layer)
        if weight > 1e-10:
            log.info("layer %d: truncation discarded weight %.3e", layer, weight)
        mz = measure_mz(s)
        if not np.isfinite(mz):
            raise NumericalError(f"magnetization is not finite at layer {layer}")
        tr.mz_per_layer.append(mz)
        tr.trace_defect_per_layer.append(defect)
        tr.max_bond_used.append(s.max_bond)
        tr.discarded_weight_per_layer.append(weight)
        if retain_states:
            tr.states.append(s)
    return s, tr


def propagate_backward(
    e: DoubledMps,
    cfg: NetworkConfig,
    layers: int,
    mpo: Optional[LayerMpo] = None,
) -> List[DoubledMps]:
    """Adjoint-channel images ``[B e, B^2 e, ...]`` (``layers`` entries, never renormalized)."""
    if e.width != cfg.width:
        raise ParameterError(f"operator width {e.width} != network width {cfg.width}")
    b = build_backward_mpo(cfg) if mpo is None else mpo
    out = []
    cur = e
    for layer in range(layers):
        cur, weight, _ = apply_and_compress(b, cur, cfg.chi_mps, cfg.rel_tol)
        _check_finite_state(cur, layer)
        if weight > 1e-10:
            log.info("backward step %d: truncation discarded weight %.3e", layer + 1, weight)
        out.append(cur)
    return out


# ---------------------------------------------------------------------------
# histogram readout


@dataclass(frozen=True)
class Bimodality:
    """Result of the two-peak test on a histogram.

    ``peaks`` are the ``(first, last)`` bin indices of the two peaks with the
    deepest trough between them; ``score = 1 - trough / smaller peak``.
    """

    is_bimodal: bool
    score: float
    peaks: Tuple[Tuple[int, int], ...]
    trough: Optional[int]


def histogram(values: Sequence[float], bins: int = N_BINS, value_range=HIST_RANGE) -> Tuple[np.ndarray, np.ndarray]:
    """Counts and bin centers; values on the range edges fall in the end bins."""
    v = np.clip(np.asarray(values, dtype=float), value_range[0], value_range[1])
    counts, edges = np.histogram(v, bins=bins, range=value_range)
    return counts, 0.5 * (edges[:-1] + edges[1:])


def find_peaks(counts: Sequence[int]) -> List[Tuple[int, int]]:
    """Maximal runs of equal nonzero counts strictly above both neighbors."""
    c = list(counts)
    n = len(c)
    out = []
    i = 0
    while i < n:
        j = i
        while j + 1 < n and c[j + 1] == c[i]:
            j += 1
        left = c[i - 1] if i > 0 else -1
        right = c[j + 1] if j + 1 < n else -1
        if c[i] > 0 and c[i] > left and c[i] > right:
            out.append((i, j))
        i = j + 1
    return out


def bimodality(
    counts: Sequence[int],
    trough_fraction: float = TROUGH_FRACTION,
    min_peak_fraction: float = MIN_PEAK_FRACTION,
) -> Bimodality:
    """Two local maxima whose separating trough is below ``trough_fraction`` of the smaller one.

    Peaks holding less than ``min_peak_fraction`` of all samples are ignored
    so that isolated stragglers do not count as a mode. Among equally deep
    troughs the pair with the taller smaller peak wins.
    """
    c = np.asarray(counts)
    floor = min_peak_fraction * c.sum()
    peaks = [p for p in find_peaks(c) if c[p[0]] >= floor]
    best = (0.0, 0, None, None)
    for a in range(len(peaks)):
        for b in range(a + 1, len(peaks)):
            lo, hi = peaks[a][1], peaks[b][0]
            seg = c[lo : hi + 1]
            trough = lo + int(np.argmin(seg))
            smaller = min(c[peaks[a][0]], c[peaks[b][0]])
            score = 1.0 - c[trough] / smaller
            if (score, smaller) > best[:2]:
                best = (score, smaller, (peaks[a], peaks[b]), trough)
    score, _, pair, trough = best
    ok = pair is not None and score > 1.0 - trough_fraction
    return Bimodality(bool(ok), float(score), tuple(pair) if pair else (), trough)


def classify(values: Sequence[float], bins: int = N_BINS, value_range=HIST_RANGE):
    """Per-bin labels ``A`` (low-m_z peak side), ``B`` (high side) or ``unclassified``.

    The valley is the run of bins around the trough, between the two peaks,
    whose counts stay below ``TROUGH_FRACTION`` of the smaller peak. Bins left
    of it belong to class A, bins right of it to B. Valley bins and every bin
    of a non-bimodal histogram are unclassified.
    """
    counts, centers = histogram(values, bins, value_range)
    bm = bimodality(counts)
    labels = ["unclassified"] * len(counts)
    if bm.is_bimodal:
        (pa, pb) = bm.peaks
        limit = TROUGH_FRACTION * min(counts[pa[0]], counts[pb[0]])
        lo = hi = bm.trough
        while lo - 1 > pa[1] and counts[lo - 1] < limit:
            lo -= 1
        while hi + 1 < pb[0] and counts[hi + 1] < limit:
            hi += 1
        for i in range(len(counts)):
            if i < lo:
                labels[i] = "A"
            elif i > hi:
                labels[i] = "B"
    return counts, centers, labels, bm
