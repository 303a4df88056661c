"""Loss, analytic update directions and the gradient-descent training loop.

For a direction along a single parameter, the loss changes at first order by

* Hamiltonian entry ``d^a``: ``dL = (2/P) sum_x C_x sum 2 dt Im u^a``,
* real jump part ``x^a``:    ``dL = (2/P) sum_x C_x sum sqrt(dt) Im v+^a``,
* imaginary jump part ``y^a``: ``dL = (2/P) sum_x C_x sum sqrt(dt) Re v-^a``,

where ``C_x`` is the output error of pair ``x`` and the inner sums run over
layers and columns of the traces ``Tr(sigma_l Phi~[rho_{l-1}])`` with one
perceptron replaced by its gradient insertion (see
:func:`metaqnn.gates.gradient_insertion`). The update direction is minus
these derivatives. They are exact derivatives of the multiplicative update
(sandwich for the jump factor, right multiplication for the Hamiltonian
factor); the plain parameter shift agrees to first order in ``dt``.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .channels import (
    InputSpec,
    error_operator_mps,
    measure_mz,
    product_input_mps,
    propagate_backward,
    propagate_forward,
)
from .errors import NumericalError, ParameterError, TrainingAborted
from .gates import (
    KINDS,
    GlobalGate,
    NetworkConfig,
    PauliCoeffTable,
    build_backward_mpo,
    build_forward_mpo,
    build_gradient_mpo,
)
from .mps import flat_expectation

log = logging.getLogger(__name__)

Entry = Tuple[str, Tuple[int, int]]
ALPHAS = tuple((a1, a2) for a1 in range(4) for a2 in range(4))


@dataclass(frozen=True)
class TrainingPair:
    input: InputSpec
    target_mz: float

    def __post_init__(self):
        if not np.isfinite(self.target_mz) or abs(self.target_mz) > 0.5 + 1e-12:
            raise ParameterError(f"target magnetization must lie in [-1/2, 1/2], got {self.target_mz}")


def full_mask() -> FrozenSet[Entry]:
    return frozenset((kind, a) for kind in KINDS for a in ALPHAS)


def jump_sigma_x_mask() -> FrozenSet[Entry]:
    """Only the real jump shift along ``sigma^x`` on the new site."""
    return frozenset({("jump_plus", (0, 1))})


def normalize_mask(mask: Optional[Iterable]) -> FrozenSet[Entry]:
    if mask is None:
        return full_mask()
    out = set()
    for kind, a in mask:
        a = tuple(int(i) for i in a)
        if kind not in KINDS or len(a) != 2 or not all(0 <= i < 4 for i in a):
            raise ParameterError(f"invalid mask entry {(kind, a)!r}")
        out.add((kind, a))
    return frozenset(out)


@dataclass(frozen=True)
class UpdateDirection:
    """Steepest-descent direction; ``c~ = x~ + i y~``, masked entries are exactly zero."""

    d_tilde: np.ndarray
    x_tilde: np.ndarray
    y_tilde: np.ndarray
    restriction_mask: FrozenSet[Entry] = field(default_factory=full_mask)

    def __post_init__(self):
        keep = {"hamiltonian": self.d_tilde, "jump_plus": self.x_tilde, "jump_minus": self.y_tilde}
        for kind, arr in keep.items():
            arr = np.array(arr, dtype=float).reshape(4, 4)
            for a in ALPHAS:
                if (kind, a) not in self.restriction_mask:
                    arr[a] = 0.0
            arr.setflags(write=False)
            name = {"hamiltonian": "d_tilde", "jump_plus": "x_tilde", "jump_minus": "y_tilde"}[kind]
            object.__setattr__(self, name, arr)

    @classmethod
    def zeros(cls, mask=None) -> "UpdateDirection":
        z = np.zeros((4, 4))
        return cls(z, z, z, normalize_mask(mask))

    def as_table(self) -> PauliCoeffTable:
        return PauliCoeffTable(self.x_tilde + 1j * self.y_tilde, self.d_tilde)

    def component(self, kind: str, alpha: Tuple[int, int]) -> float:
        arr = {"hamiltonian": self.d_tilde, "jump_plus": self.x_tilde, "jump_minus": self.y_tilde}[kind]
        return float(arr[tuple(alpha)])

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.d_tilde**2) + np.sum(self.x_tilde**2) + np.sum(self.y_tilde**2)))


@dataclass(frozen=True)
class TrainRecord:
    round: int
    train_loss: float
    validation_loss: float
    coeffs: PauliCoeffTable


def loss(outputs: Sequence[Tuple[float, float]]) -> float:
    """Mean squared error over ``(actual_mz, target_mz)`` pairs."""
    outputs = list(outputs)
    if not outputs:
        raise ParameterError("loss needs at least one pair")
    return float(np.mean([(a - t) ** 2 for a, t in outputs]))


def magnetization_difference(actual_mz: float, target_mz: float) -> float:
    return actual_mz - target_mz


def network_output(spec: InputSpec, cfg: NetworkConfig, mpo=None) -> float:
    s = product_input_mps(spec, cfg.width)
    _, tr = propagate_forward(s, cfg, cfg.depth, mpo=mpo)
    return tr.mz_per_layer[-1]


def evaluate_loss(pairs: Sequence[TrainingPair], cfg: NetworkConfig) -> float:
    f = build_forward_mpo(cfg)
    return loss([(network_output(p.input, cfg, f), p.target_mz) for p in pairs])


def gradient_traces(
    pair: TrainingPair,
    cfg: NetworkConfig,
    entries: Sequence[Entry],
    forward=None,
    backward=None,
    gradient_mpos: Optional[Dict[Entry, object]] = None,
):
    """Output error and the layer- and column-summed traces for one pair.

    Returns ``(C, {entry: complex trace sum})``.
    """
    f = build_forward_mpo(cfg) if forward is None else forward
    b = build_backward_mpo(cfg) if backward is None else backward
    s0 = product_input_mps(pair.input, cfg.width)
    _, tr = propagate_forward(s0, cfg, cfg.depth, retain_states=True, mpo=f)
    c = magnetization_difference(tr.mz_per_layer[-1], pair.target_mz)
    e = error_operator_mps(pair.target_mz, cfg.width)
    back = propagate_backward(e, cfg, cfg.depth - 1, mpo=b)
    # sigma[l] for l = 1..L
    sigma = {cfg.depth: e}
    for j, op in enumerate(back):
        sigma[cfg.depth - 1 - j] = op
    sums = {}
    for entry in entries:
        g = gradient_mpos.get(entry) if gradient_mpos is not None else build_gradient_mpo(cfg, None, entry[1], entry[0])
        if g is None:
            sums[entry] = 0.0j
            continue
        total = 0.0j
        for layer in range(1, cfg.depth + 1):
            total += flat_expectation(sigma[layer], g, tr.states[layer - 1])
        sums[entry] = total
    return c, sums


def compute_update_direction(
    pairs: Sequence[TrainingPair],
    cfg: NetworkConfig,
    mask=None,
    return_outputs: bool = False,
):
    """Steepest-descent direction of the loss for every unmasked entry.

    With ``return_outputs`` also returns the ``(actual, target)`` list of the
    forward passes, which gives the current training loss for free.
    """
    pairs = list(pairs)
    if not pairs:
        raise ParameterError("need at least one training pair")
    mask = normalize_mask(mask)
    entries = sorted(mask)
    f = build_forward_mpo(cfg)
    b = f.transposed()
    gms = {entry: build_gradient_mpo(cfg, None, entry[1], entry[0]) for entry in entries}
    acc = {entry: 0.0 for entry in entries}
    outputs = []
    for pair in pairs:
        c, sums = gradient_traces(pair, cfg, entries, f, b, gms)
        outputs.append((c + pair.target_mz, pair.target_mz))
        if c == 0.0:
            continue
        for entry in entries:
            kind = entry[0]
            val = sums[entry]
            part = val.real if kind == "jump_minus" else val.imag
            acc[entry] += c * part
    n = len(pairs)
    d = np.zeros((4, 4))
    x = np.zeros((4, 4))
    y = np.zeros((4, 4))
    for (kind, a), v in acc.items():
        if kind == "hamiltonian":
            d[a] = -4.0 * cfg.dt / n * v
        elif kind == "jump_plus":
            x[a] = -2.0 * np.sqrt(cfg.dt) / n * v
        else:
            y[a] = -2.0 * np.sqrt(cfg.dt) / n * v
    direction = UpdateDirection(d, x, y, mask)
    if not np.all(np.isfinite(direction.d_tilde)) or not np.all(np.isfinite(direction.x_tilde)) or not np.all(
        np.isfinite(direction.y_tilde)
    ):
        raise NumericalError("update direction is not finite")
    if return_outputs:
        return direction, outputs
    return direction


def apply_update(t: PauliCoeffTable, direction: UpdateDirection, eps: float) -> PauliCoeffTable:
    """First-order parameter shift ``c += eps c~``, ``d += eps d~``."""
    if eps == 0.0:
        return t
    u = direction.as_table()
    return t.shifted(u.c, u.d, eps)


def sandwich_update_gate(
    t: PauliCoeffTable, direction: UpdateDirection, eps: float, dt: float, width: int
) -> GlobalGate:
    """Global gate with the exact multiplicative update (sandwich jump factor, right-multiplied Hamiltonian)."""
    return GlobalGate.from_table(t, dt, width, update=direction.as_table(), eps=eps)


def train(
    train_pairs: Sequence[TrainingPair],
    val_pairs: Sequence[TrainingPair],
    cfg: NetworkConfig,
    rounds: int,
    eps: float,
    mask=None,
    callback=None,
) -> List[TrainRecord]:
    """Plain gradient descent; returns ``rounds + 1`` records (round 0 is the initial network).

    Raises :class:`TrainingAborted` carrying the records so far if a loss
    becomes non-finite.
    """
    train_pairs = list(train_pairs)
    val_pairs = list(val_pairs)
    if not train_pairs:
        raise ParameterError("need at least one training pair")
    if rounds < 0:
        raise ParameterError("rounds must be non-negative")
    mask = normalize_mask(mask)
    table = cfg.coeffs
    records: List[TrainRecord] = []
    for r in range(rounds + 1):
        current = cfg.with_coeffs(table)
        try:
            if r < rounds:
                direction, outputs = compute_update_direction(train_pairs, current, mask, return_outputs=True)
                train_loss = loss(outputs)
            else:
                direction = None
                train_loss = evaluate_loss(train_pairs, current)
            val_loss = evaluate_loss(val_pairs, current) if val_pairs else float("nan")
        except NumericalError as exc:
            raise TrainingAborted(f"round {r}: {exc}", records) from exc
        if not np.isfinite(train_loss) or (val_pairs and not np.isfinite(val_loss)):
            raise TrainingAborted(f"round {r}: loss is not finite", records)
        rec = TrainRecord(r, train_loss, val_loss, table)
        records.append(rec)
        log.info("round %d: train %.6g validation %.6g", r, train_loss, val_loss)
        if callback is not None:
            callback(rec)
        if direction is not None:
            table = apply_update(table, direction, eps)
    return records


def uniform_inputs(n: int, lo: float = -0.5, hi: float = 0.5, phi: float = 0.0) -> List[InputSpec]:
    if n < 1:
        raise ParameterError("need at least one input")
    if n == 1:
        return [InputSpec(0.5 * (lo + hi), phi)]
    return [InputSpec(float(m), phi) for m in np.linspace(lo, hi, n)]


def generate_training_data(cfg_teacher: NetworkConfig, inputs: Sequence[InputSpec]) -> List[TrainingPair]:
    """Targets are the teacher network's output magnetizations."""
    f = build_forward_mpo(cfg_teacher)
    out = []
    for spec in inputs:
        try:
            m = network_output(spec, cfg_teacher, f)
        except NumericalError as exc:
            raise NumericalError(f"teacher propagation failed for input m_z={spec.mz_in}: {exc}") from exc
        out.append(TrainingPair(spec, float(np.clip(m, -0.5, 0.5))))
    return out
