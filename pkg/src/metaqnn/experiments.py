"""Experiment configuration, runners and plot-ready CSV/JSON output.

Config files are flat UTF-8 text, one ``section.key = value`` per line, with
``#`` starting a comment. Unknown keys are rejected. Example::

    run.mode = sweep
    network.width = 4
    network.depth = 60
    ising.omega = 59
    ising.v = 250
    sweep.n_inputs = 200
"""

import hashlib
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .channels import (
    InputSpec,
    classify,
    error_operator_mps,
    histogram,
    bimodality,
    product_input_mps,
    propagate_backward,
    propagate_forward,
)
from .errors import NumericalError, ParameterError, TrainingAborted
from .gates import (
    GlobalGate,
    IsingParams,
    NetworkConfig,
    PauliCoeffTable,
    build_forward_mpo,
    build_local_gate,
    ising_coeffs,
    random_coeffs,
    sigma_y_jump_coeffs,
    unitarity_error,
)
from .mps import flat_overlap
from .oracle import (
    build_lindbladian,
    dense_adjoint_step,
    dense_loss_gate,
    dense_superoperator,
    dense_trajectory,
    doubled_to_matrix,
    first_order_limit_check,
    is_cptp,
    matrix_to_doubled,
    metastable_projection,
    exact_evolution,
    random_product_state,
    spectral_analysis,
    trace_distance,
)
from .training import (
    ALPHAS,
    KINDS,
    TrainingPair,
    compute_update_direction,
    full_mask,
    generate_training_data,
    jump_sigma_x_mask,
    train,
    uniform_inputs,
)

log = logging.getLogger(__name__)

MODES = ("sweep", "train", "spectrum", "validate")
COUPLINGS = ("ising", "sigma_y_jump", "zero")


class ConfigError(ValueError):
    """The experiment configuration cannot be parsed or is inconsistent."""


class ValidationFailure(RuntimeError):
    """At least one validation check failed; ``report`` holds the details."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


@dataclass
class ExperimentConfig:
    mode: str = "sweep"
    seed: int = 0
    output_dir: str = "out"
    width: int = 4
    depth: int = 60
    dt: float = 0.1
    chi_mps: int = 64
    chi_mpo: int = 16
    couplings: str = "ising"
    omega: float = 59.0
    v: float = 250.0
    kappa: float = 1.0
    n_inputs: int = 200
    mz_min: float = -0.5
    mz_max: float = 0.5
    phi: float = 0.0
    readout_layer: Optional[int] = None
    compare_layer: int = 11
    rounds: int = 20
    eps: float = 10.0
    mask: str = "jump_sigma_x"
    n_train: int = 20
    n_val: int = 10
    teacher_omega: float = 70.0
    teacher_v: float = 250.0
    teacher_kappa: float = 1.0
    teacher_width: Optional[int] = None
    teacher_depth: Optional[int] = None
    after_sweep_inputs: int = 200
    validate_width: int = 3
    validate_depth: int = 10
    spectrum_width: int = 4
    spectrum_threshold: float = 0.2
    threads: int = 1
    long_running: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.couplings not in COUPLINGS:
            raise ConfigError(f"network.couplings must be one of {COUPLINGS}, got {self.couplings!r}")
        if self.n_inputs < 1:
            raise ConfigError("sweep.n_inputs must be at least 1")
        if self.readout_layer is not None and not 0 <= self.readout_layer <= self.depth:
            raise ConfigError(f"sweep.readout_layer must lie in 0..{self.depth}")
        if not -0.5 <= self.mz_min <= self.mz_max <= 0.5:
            raise ConfigError("sweep range must satisfy -0.5 <= mz_min <= mz_max <= 0.5")
        if self.mask not in ("jump_sigma_x", "full"):
            raise ConfigError(f"training.mask must be jump_sigma_x or full, got {self.mask!r}")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        try:
            self.network()
        except ParameterError as exc:
            raise ConfigError(str(exc)) from exc

    def table(self) -> PauliCoeffTable:
        p = IsingParams(self.omega, self.v, self.kappa)
        if self.couplings == "ising":
            return ising_coeffs(p)
        if self.couplings == "sigma_y_jump":
            return sigma_y_jump_coeffs(p)
        return PauliCoeffTable()

    def network(self) -> NetworkConfig:
        return NetworkConfig(self.width, self.depth, self.dt, self.table(), self.chi_mps, self.chi_mpo)

    def teacher(self) -> NetworkConfig:
        t = ising_coeffs(IsingParams(self.teacher_omega, self.teacher_v, self.teacher_kappa))
        return NetworkConfig(
            self.teacher_width or self.width,
            self.teacher_depth or self.depth,
            self.dt,
            t,
            self.chi_mps,
            self.chi_mpo,
        )

    def canonical_text(self) -> str:
        items = asdict(self)
        # runtime knobs that do not change results
        items.pop("threads")
        items.pop("output_dir")
        return "\n".join(f"{k} = {items[k]!r}" for k in sorted(items))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()[:16]


# key in file -> (field name, parser)
def _bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_int(s: str) -> Optional[int]:
    return None if s.strip().lower() in ("best", "none", "") else int(s)


_KEYS = {
    "run.mode": ("mode", str),
    "run.seed": ("seed", int),
    "run.output_dir": ("output_dir", str),
    "run.threads": ("threads", int),
    "run.long_running": ("long_running", _bool),
    "network.width": ("width", int),
    "network.depth": ("depth", int),
    "network.dt": ("dt", float),
    "network.chi_mps": ("chi_mps", int),
    "network.chi_mpo": ("chi_mpo", int),
    "network.couplings": ("couplings", str),
    "ising.omega": ("omega", float),
    "ising.v": ("v", float),
    "ising.kappa": ("kappa", float),
    "sweep.n_inputs": ("n_inputs", int),
    "sweep.mz_min": ("mz_min", float),
    "sweep.mz_max": ("mz_max", float),
    "sweep.phi": ("phi", float),
    "sweep.readout_layer": ("readout_layer", _opt_int),
    "sweep.compare_layer": ("compare_layer", int),
    "training.rounds": ("rounds", int),
    "training.eps": ("eps", float),
    "training.mask": ("mask", str),
    "training.n_train": ("n_train", int),
    "training.n_val": ("n_val", int),
    "training.after_sweep_inputs": ("after_sweep_inputs", int),
    "teacher.omega": ("teacher_omega", float),
    "teacher.v": ("teacher_v", float),
    "teacher.kappa": ("teacher_kappa", float),
    "teacher.width": ("teacher_width", _opt_int),
    "teacher.depth": ("teacher_depth", _opt_int),
    "validate.width": ("validate_width", int),
    "validate.depth": ("validate_depth", int),
    "spectrum.width": ("spectrum_width", int),
    "spectrum.threshold": ("spectrum_threshold", float),
}


def parse_config_text(text: str, **overrides) -> ExperimentConfig:
    """Parse ``section.key = value`` lines; keyword overrides win over the file."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value', got {raw!r}")
        key, val = (p.strip() for p in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        name, conv = _KEYS[key]
        try:
            values[name] = conv(val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path, **overrides) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, **overrides)


# ---------------------------------------------------------------------------
# output


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path, header: Sequence[str], rows, meta: Dict[str, object]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# {k}: {meta[k]}" for k in meta]
    lines.append(",".join(header))
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_json(path, data) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n", encoding="utf-8")
    return path


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _meta(cfg: ExperimentConfig, what: str) -> Dict[str, object]:
    return {"artifact": what, "config_hash": cfg.config_hash(), "mode": cfg.mode, "seed": cfg.seed}


# ---------------------------------------------------------------------------
# sweep


@dataclass
class SweepResult:
    inputs: List[float]
    mz: np.ndarray  # (n_inputs, depth + 1), NaN where an input failed
    trace_defect: np.ndarray
    max_bond: np.ndarray
    best_layer: int
    scores: List[float]
    failures: Dict[int, str] = field(default_factory=dict)

    def layer_values(self, layer: int) -> np.ndarray:
        col = self.mz[:, layer]
        return col[np.isfinite(col)]


def sweep(
    net: NetworkConfig,
    mz_values: Sequence[float],
    phi: float = 0.0,
    threads: int = 1,
) -> SweepResult:
    """Propagate one product input per magnetization through ``net.depth`` layers."""
    f = build_forward_mpo(net)
    n = len(mz_values)
    mz = np.full((n, net.depth + 1), np.nan)
    defect = np.full((n, net.depth + 1), np.nan)
    bonds = np.zeros((n, net.depth + 1), dtype=int)
    failures = {}

    def one(i):
        s = product_input_mps(InputSpec(float(mz_values[i]), phi), net.width)
        return propagate_forward(s, net, net.depth, mpo=f)[1]

    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(one, i) for i in range(n)]
        for i, fut in enumerate(futures):
            try:
                tr = fut.result()
            except (NumericalError, ParameterError) as exc:
                log.error("input %d (m_z=%g) failed: %s", i, mz_values[i], exc)
                failures[i] = str(exc)
                continue
            mz[i] = tr.mz_per_layer
            defect[i] = tr.trace_defect_per_layer
            bonds[i] = tr.max_bond_used
    scores = [0.0]
    for layer in range(1, net.depth + 1):
        col = mz[:, layer]
        counts, _ = histogram(col[np.isfinite(col)])
        scores.append(bimodality(counts).score)
    best = int(np.argmax(scores[1:])) + 1 if net.depth >= 1 else 0
    return SweepResult(list(map(float, mz_values)), mz, defect, bonds, best, scores, failures)


def _write_sweep(cfg: ExperimentConfig, res: SweepResult, out: Path, prefix: str, meta_extra=None) -> Dict:
    meta = _meta(cfg, f"{prefix}trajectory")
    if meta_extra:
        meta.update(meta_extra)
    rows = []
    for layer in range(res.mz.shape[1]):
        for i in range(res.mz.shape[0]):
            if i in res.failures:
                continue
            rows.append((layer, i, res.mz[i, layer], res.trace_defect[i, layer], int(res.max_bond[i, layer])))
    write_csv(out / f"{prefix}trajectory.csv", ["layer", "input_index", "mz", "trace_defect", "max_bond"], rows, meta)
    readout = cfg.readout_layer if cfg.readout_layer is not None else res.best_layer
    summary = {"best_layer": res.best_layer, "readout_layer": readout, "failures": res.failures}
    layers = {"readout": readout}
    if 0 <= cfg.compare_layer < res.mz.shape[1]:
        layers["compare"] = cfg.compare_layer
    for tag, layer in layers.items():
        counts, centers, labels, bm = classify(res.layer_values(layer))
        hmeta = _meta(cfg, f"{prefix}histogram")
        hmeta["layer"] = layer
        write_csv(
            out / f"{prefix}histogram_{tag}.csv",
            ["bin_center", "count", "class_label"],
            zip(centers, counts.tolist(), labels),
            hmeta,
        )
        summary[f"{tag}_layer"] = layer
        summary[f"{tag}_bimodal"] = bm.is_bimodal
        summary[f"{tag}_score"] = bm.score
    late = res.layer_values(res.mz.shape[1] - 1)
    summary["final_spread"] = float(np.ptp(late)) if late.size else float("nan")
    return summary


def run_sweep(cfg: ExperimentConfig, out_dir=None) -> Dict:
    out = Path(out_dir or cfg.output_dir)
    net = cfg.network()
    mzs = np.linspace(cfg.mz_min, cfg.mz_max, cfg.n_inputs)
    res = sweep(net, mzs, cfg.phi, cfg.threads)
    summary = _write_sweep(cfg, res, out, "")
    summary["config_hash"] = cfg.config_hash()
    write_json(out / "sweep_summary.json", summary)
    return summary


# ---------------------------------------------------------------------------
# training


def _training_inputs(cfg: ExperimentConfig):
    train_in = uniform_inputs(cfg.n_train, cfg.mz_min, cfg.mz_max, cfg.phi)
    # validation inputs are the bin centers of n_val equal bins
    step = (cfg.mz_max - cfg.mz_min) / max(cfg.n_val, 1)
    val_in = [InputSpec(cfg.mz_min + (k + 0.5) * step, cfg.phi) for k in range(cfg.n_val)]
    return train_in, val_in


def run_training(cfg: ExperimentConfig, out_dir=None) -> Dict:
    out = Path(out_dir or cfg.output_dir)
    if not cfg.long_running and cfg.width > 12:
        raise ConfigError("widths above 12 need the long-running flag")
    net = cfg.network()
    teacher = cfg.teacher()
    train_in, val_in = _training_inputs(cfg)
    train_pairs = generate_training_data(teacher, train_in)
    val_pairs = generate_training_data(teacher, val_in) if val_in else []
    mask = jump_sigma_x_mask() if cfg.mask == "jump_sigma_x" else full_mask()
    aborted = None
    try:
        records = train(train_pairs, val_pairs, net, cfg.rounds, cfg.eps, mask)
    except TrainingAborted as exc:
        records = exc.records
        aborted = str(exc)
    header = ["round", "train_loss", "val_loss"]
    header += [f"c_re_{a}{b}" for a, b in ALPHAS] + [f"c_im_{a}{b}" for a, b in ALPHAS]
    header += [f"d_{a}{b}" for a, b in ALPHAS]
    rows = []
    for r in records:
        rows.append(
            [r.round, r.train_loss, r.validation_loss]
            + [r.coeffs.c[a].real for a in ALPHAS]
            + [r.coeffs.c[a].imag for a in ALPHAS]
            + [r.coeffs.d[a] for a in ALPHAS]
        )
    write_csv(out / "training_log.csv", header, rows, _meta(cfg, "training_log"))
    final = records[-1].coeffs if records else net.coeffs
    write_json(out / "final_params.json", final.to_dict())
    mzs = np.linspace(cfg.mz_min, cfg.mz_max, cfg.after_sweep_inputs)
    before = sweep(net, mzs, cfg.phi, cfg.threads)
    after = sweep(net.with_coeffs(final), mzs, cfg.phi, cfg.threads)
    # the comparison is at the output layer
    out_cfg = replace(cfg, readout_layer=cfg.depth)
    sb = _write_sweep(out_cfg, before, out, "before_")
    sa = _write_sweep(out_cfg, after, out, "after_")
    summary = {
        "config_hash": cfg.config_hash(),
        "initial_train_loss": records[0].train_loss if records else None,
        "final_train_loss": records[-1].train_loss if records else None,
        "final_val_loss": records[-1].validation_loss if records else None,
        "rounds_completed": len(records) - 1,
        "aborted": aborted,
        "before_output_bimodal": sb["readout_bimodal"],
        "after_output_bimodal": sa["readout_bimodal"],
        "mask": sorted([k, list(a)] for k, a in mask),
        "eps": cfg.eps,
        "seed": cfg.seed,
        "gradient_assembly": "one column-summed gradient MPO per entry",
    }
    write_json(out / "run_metadata.json", {"config": asdict(cfg), **summary})
    if aborted:
        raise NumericalError(aborted)
    return summary


# ---------------------------------------------------------------------------
# spectrum


def run_spectrum(cfg: ExperimentConfig, out_dir=None) -> Dict:
    out = Path(out_dir or cfg.output_dir)
    lind = build_lindbladian(cfg.table(), cfg.spectrum_width)
    rep = spectral_analysis(lind, cfg.spectrum_threshold)
    rows = [(k + 1, lam.real, lam.imag) for k, lam in enumerate(rep.eigenvalues)]
    write_csv(out / "spectrum.csv", ["k", "re_lambda", "im_lambda"], rows, _meta(cfg, "spectrum"))
    data = {
        "config_hash": cfg.config_hash(),
        "tau": rep.tau,
        "tau_prime": rep.tau_prime,
        "m": rep.separation_index,
        "gap_ratio": rep.gap_ratio,
        "zero_multiplicity": rep.zero_multiplicity,
        "eigenvector_condition": rep.condition,
    }
    write_json(out / "spectrum_report.json", data)
    return data


# ---------------------------------------------------------------------------
# validation


def _check(name, ok, **detail) -> Dict:
    return {"check": name, "passed": bool(ok), **detail}


def validation_checks(cfg: ExperimentConfig, corrupt_gate: float = 0.0) -> List[Dict]:
    """Oracle-equivalence suite on a random table at ``cfg.validate_width``."""
    width = cfg.validate_width
    if width > 4:
        raise ConfigError("validation widths above 4 are not supported")
    rng = np.random.default_rng(cfg.seed)
    t = random_coeffs(rng)
    layers = cfg.validate_depth
    net = NetworkConfig(width, layers, cfg.dt, t, chi_mps=4**width, chi_mpo=16)
    checks = []

    # unitarity of the local gates
    g = build_local_gate(t, cfg.dt, 2, width)
    if corrupt_gate:
        g = g + corrupt_gate * rng.normal(size=g.shape)
    err = max(unitarity_error(g), unitarity_error(build_local_gate(t, cfg.dt, 1, width)))
    checks.append(_check("gate_unitarity", err < 1e-12, max_error=err))

    # CPTP
    checks.append(_check("dense_channel_cptp", is_cptp(dense_superoperator(net))))

    # forward
    s = product_input_mps(InputSpec(float(rng.uniform(-0.5, 0.5)), float(rng.uniform(0, 2 * np.pi))), width)
    _, tr = propagate_forward(s, net, layers, retain_states=True)
    traj = dense_trajectory(doubled_to_matrix(s.to_dense(), width), net, layers)
    ferr = max(float(np.abs(doubled_to_matrix(a.to_dense(), width) - b).max()) for a, b in zip(tr.states, traj))
    checks.append(_check("forward_vs_dense", ferr < 1e-8, max_error=ferr))

    # backward, one step and duality
    e = error_operator_mps(float(rng.uniform(-0.5, 0.5)), width)
    back = propagate_backward(e, net, layers)
    dense_b = dense_adjoint_step(doubled_to_matrix(e.to_dense(), width), net)
    berr = float(np.abs(doubled_to_matrix(back[0].to_dense(), width) - dense_b).max())
    checks.append(_check("backward_vs_dense", berr < 1e-10, max_error=berr))
    ref = flat_overlap(e, tr.states[layers])
    derr = max(abs(flat_overlap(back[layers - 1 - l], tr.states[l]) - ref) for l in range(layers))
    checks.append(_check("duality", derr < 1e-8, max_error=float(derr)))

    # gradient
    gnet = NetworkConfig(width, 2, cfg.dt, t, chi_mps=4**width)
    pairs = [TrainingPair(InputSpec(float(m)), float(tg)) for m, tg in zip(rng.uniform(-0.5, 0.5, 2), rng.uniform(-0.3, 0.3, 2))]
    gerr = gradient_check(pairs, gnet, full_mask())
    checks.append(_check("gradient_vs_finite_difference", gerr < 1e-4, max_relative_error=gerr))

    # first-order limit on the same table
    fo = first_order_limit_check(t, min(width, 3), [0.1, 0.05, 0.025, 0.0125])
    checks.append(_check("first_order_limit", fo.slope >= 1.4, slope=fo.slope, residuals=fo.residuals.tolist()))

    # spectrum
    rep = spectral_analysis(build_lindbladian(t, width))
    ev = rep.eigenvalues
    n = len(ev)
    bio = max(abs(np.trace(rep.left[j] @ rep.right[k]) - (j == k)) for j in range(n) for k in range(n)) if n <= 64 else 0.0
    ok = abs(ev[0]) < 1e-10 and np.all(ev.real <= 1e-10) and bio < 1e-8
    checks.append(_check("spectrum", ok, lambda_1=abs(ev[0]), max_real=float(ev.real.max()), biorthogonality=float(bio)))

    # bond-dimension robustness of a W=4 sweep
    w4 = NetworkConfig(4, min(cfg.depth, 20), cfg.dt, cfg.table(), chi_mps=cfg.chi_mps, chi_mpo=16)
    mzs = np.linspace(-0.5, 0.5, 11)
    a = sweep(w4, mzs).mz
    b = sweep(replace(w4, chi_mps=2 * cfg.chi_mps), mzs).mz
    chi_err = float(np.nanmax(np.abs(a - b)))
    checks.append(_check("bond_dimension_doubling", chi_err < 1e-6, max_delta_mz=chi_err))
    return checks


FD_ATOL = 1e-11


def gradient_check(pairs, net: NetworkConfig, mask, step: float = 1e-5) -> float:
    """Largest relative deviation between analytic components and central differences.

    The finite differences follow the multiplicative update path on dense
    matrices. Components where both values are below ``FD_ATOL`` are
    skipped: that is the round-off floor of a central difference of an O(1)
    loss at this step, and a component that vanishes identically (the
    identity Hamiltonian term only shifts a global phase) would otherwise
    compare noise with noise.
    """
    direction = compute_update_direction(pairs, net, mask)
    dense_pairs = [
        (doubled_to_matrix(product_input_mps(p.input, net.width).to_dense(), net.width), p.target_mz) for p in pairs
    ]
    worst = 0.0
    for kind, alpha in sorted(mask):
        fd = finite_difference_component(dense_pairs, net, kind, alpha, step)
        an = direction.component(kind, alpha)
        scale = max(abs(fd), abs(an))
        if scale > FD_ATOL:
            worst = max(worst, abs(fd - an) / scale)
    return worst


def finite_difference_component(dense_pairs, net: NetworkConfig, kind: str, alpha, step: float = 1e-5) -> float:
    """Minus the central difference of the dense loss along one update entry."""
    c = np.zeros((4, 4), dtype=complex)
    d = np.zeros((4, 4))
    if kind == "hamiltonian":
        d[tuple(alpha)] = 1.0
    elif kind == "jump_plus":
        c[tuple(alpha)] = 1.0
    else:
        c[tuple(alpha)] = 1j
    unit = PauliCoeffTable(c, d)

    def loss_at(eps):
        gg = GlobalGate.from_table(net.coeffs, net.dt, net.width, update=unit, eps=eps)
        return dense_loss_gate(dense_pairs, gg, net.depth)

    return -(loss_at(step) - loss_at(-step)) / (2 * step)


def run_validate(cfg: ExperimentConfig, out_dir=None, corrupt_gate: float = 0.0) -> Dict:
    out = Path(out_dir or cfg.output_dir)
    checks = validation_checks(cfg, corrupt_gate)
    report = {"config_hash": cfg.config_hash(), "all_passed": all(c["passed"] for c in checks), "checks": checks}
    write_json(out / "validation_report.json", report)
    if not report["all_passed"]:
        failed = [c["check"] for c in checks if not c["passed"]]
        raise ValidationFailure(f"failed checks: {', '.join(failed)}", report)
    return report


RUNNERS = {"sweep": run_sweep, "train": run_training, "spectrum": run_spectrum, "validate": run_validate}
