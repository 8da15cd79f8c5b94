"""Monte-Carlo harness: training sets, fresh evaluation data, per-instance records."""

from __future__ import annotations

import dataclasses
import json
import math
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .errors import ConfigError, LinearizationError
from .learn import identity_closed_form, learn_parameter, linearized_parameter, regression_map
from .model import ForwardModel, build_forward_model, load_matrix_csv
from .sampling import (
    EVAL_STREAM,
    NOISE_DISTS,
    OPERATOR_STREAM,
    SIGNAL_DISTS,
    SamplingSpec,
    coordinate_basis,
    derive_seed,
    draw_instances,
    generate_dataset,
    make_rng,
    random_basis,
)
from .subspace import (
    BoundInputs,
    SubspaceEstimate,
    estimate_signal_and_noise,
    fit_subspace,
    population_covariance,
    projection_distance_any,
    smallest_nonzero_eigenvalue,
    theoretical_bound_B,
)
from .svg import histogram_svg, scatter_svg
from .tikhonov import oracle_parameter, reconstruction_error

MATRIX_KINDS = ("identity", "orthogonal", "geometric_decay", "vanishing_spectrum", "csv_path")
METHOD_CHOICES = ("auto", "grid_refine", "linearized", "closed_form")
RANK_SELECTIONS = ("max_ratio", "known")
SUBSPACES = ("coordinate", "random")

CSV_HEADER = ("trial_id", "seed", "t_star", "t_hat", "t_lin", "err_opt", "err_hat",
              "err_xhat", "proj_dist", "h_detected", "bound_b")

_GEOMETRIC = re.compile(r"^geometric_decay\(\s*([^)]+)\s*\)$")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: operator, distributions, sample sizes and solver settings.

    ``matrix_kind`` is ``identity``, ``orthogonal``, ``geometric_decay(q)``
    (singular values ``q**(i-1)``), ``vanishing_spectrum`` (geometric decay
    down to ``sigma_min``) or ``csv_path`` (read from ``matrix_path``).
    ``rank_selection`` is ``max_ratio``, ``known`` (use the true rank) or a
    numeric eigenvalue threshold.
    """

    d: int = 200
    m: int = 60
    h: int = 5
    n: int = 1000
    sigma: float = 0.03
    n_trials: int = 1
    n_eval: int = 50
    matrix_kind: str = "vanishing_spectrum"
    sigma_min: float = 1e-3
    matrix_path: Optional[str] = None
    signal_dist: str = "gaussian_coefficients"
    noise_dist: str = "gaussian_isotropic"
    subspace: str = "coordinate"
    seed: int = 0
    grid_points: int = 512
    refine_tol: float = 1e-10
    tau: float = 1.0
    method: str = "auto"
    rank_selection: str = "max_ratio"

    def __post_init__(self):
        validate_config(self)

    @property
    def decay_ratio(self) -> Optional[float]:
        match = _GEOMETRIC.match(self.matrix_kind)
        return float(match.group(1)) if match else None

    @property
    def matrix_family(self) -> str:
        return "geometric_decay" if self.decay_ratio is not None else self.matrix_kind


def validate_config(cfg: ExperimentConfig) -> None:
    def fail(msg):
        raise ConfigError(f"invalid config: {msg}")

    for name in ("d", "m", "h", "n", "n_trials", "n_eval", "grid_points", "seed"):
        if not isinstance(getattr(cfg, name), (int, np.integer)) or isinstance(getattr(cfg, name), bool):
            fail(f"{name} must be an integer")
    if min(cfg.d, cfg.m, cfg.h, cfg.n_trials, cfg.n_eval) < 1:
        fail("d, m, h, n_trials and n_eval must be positive")
    if cfg.n < 1:
        fail("n must be at least 1")
    if cfg.h > min(cfg.d, cfg.m):
        fail(f"h={cfg.h} exceeds min(d, m)={min(cfg.d, cfg.m)}")
    if not (math.isfinite(cfg.sigma) and cfg.sigma >= 0):
        fail("sigma must be finite and nonnegative")
    if cfg.seed < 0:
        fail("seed must be nonnegative")
    if cfg.grid_points < 16:
        fail("grid_points must be at least 16")
    if not cfg.refine_tol > 0:
        fail("refine_tol must be positive")
    if not cfg.tau >= 0:
        fail("tau must be nonnegative")
    family = "geometric_decay" if _GEOMETRIC.match(cfg.matrix_kind) else cfg.matrix_kind
    if family not in MATRIX_KINDS or cfg.matrix_kind == "geometric_decay":
        fail(f"unknown matrix_kind {cfg.matrix_kind!r}; expected one of "
             "identity, orthogonal, geometric_decay(q), vanishing_spectrum, csv_path")
    if family == "geometric_decay":
        try:
            q = float(_GEOMETRIC.match(cfg.matrix_kind).group(1))
        except ValueError:
            fail(f"cannot parse decay ratio in {cfg.matrix_kind!r}")
        if not 0 < q <= 1:
            fail("decay ratio must lie in (0, 1]")
    if family in ("identity", "orthogonal") and cfg.m != cfg.d:
        fail(f"{family} operator needs m == d")
    if family == "vanishing_spectrum" and not 0 < cfg.sigma_min <= 1:
        fail("sigma_min must lie in (0, 1]")
    if family == "csv_path" and not cfg.matrix_path:
        fail("csv_path needs matrix_path")
    if cfg.signal_dist not in SIGNAL_DISTS:
        fail(f"unknown signal_dist {cfg.signal_dist!r}")
    if cfg.noise_dist not in NOISE_DISTS:
        fail(f"unknown noise_dist {cfg.noise_dist!r}")
    if cfg.subspace not in SUBSPACES:
        fail(f"unknown subspace {cfg.subspace!r}")
    if cfg.method not in METHOD_CHOICES:
        fail(f"unknown method {cfg.method!r}")
    if cfg.rank_selection not in RANK_SELECTIONS:
        try:
            float(cfg.rank_selection)
        except ValueError:
            fail(f"rank_selection must be max_ratio, known or a number, got {cfg.rank_selection!r}")


def _coerce(field_type, raw):
    kind = field_type if isinstance(field_type, str) else getattr(field_type, "__name__", "")
    if raw is None:
        return None
    if "int" in kind:
        if isinstance(raw, float) and raw.is_integer():
            return int(raw)
        return int(raw)
    if "float" in kind:
        return float(raw)
    return str(raw)


def config_from_mapping(mapping: dict) -> ExperimentConfig:
    known = {f.name: f for f in fields(ExperimentConfig)}
    kwargs = {}
    for key, raw in mapping.items():
        if key not in known:
            raise ConfigError(f"invalid config: unknown key {key!r}")
        try:
            kwargs[key] = _coerce(known[key].type, raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: bad value for {key}: {raw!r}") from exc
    return ExperimentConfig(**kwargs)


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse a JSON object or ``key = value`` lines (``#`` starts a comment)."""
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            mapping = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid config: malformed JSON ({exc})") from exc
        if not isinstance(mapping, dict):
            raise ConfigError("invalid config: JSON config must be an object")
        return config_from_mapping(mapping)
    mapping = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"invalid config: line {lineno} is not key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        mapping[key] = value
    return config_from_mapping(mapping)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"invalid config: cannot read {path}: {exc}") from exc
    return parse_config_text(text)


def build_operator(cfg: ExperimentConfig) -> np.ndarray:
    """Raw operator matrix (m x d) for the configured kind.

    Random factors come from the operator stream of ``cfg.seed`` so the
    operator is shared by every trial of the experiment.
    """
    family = cfg.matrix_family
    if family == "identity":
        return np.eye(cfg.d)
    if family == "csv_path":
        try:
            a = load_matrix_csv(cfg.matrix_path)
        except OSError as exc:
            raise ConfigError(f"invalid config: cannot read matrix {cfg.matrix_path}") from exc
        if a.shape != (cfg.m, cfg.d):
            raise ConfigError(f"invalid config: matrix has shape {a.shape}, expected ({cfg.m}, {cfg.d})")
        return a
    rng = make_rng(cfg.seed, OPERATOR_STREAM)
    r = min(cfg.m, cfg.d)
    u = random_basis(cfg.m, r, rng)
    v = random_basis(cfg.d, r, rng)
    if family == "orthogonal":
        s = np.ones(r)
    else:
        if family == "geometric_decay":
            q = cfg.decay_ratio
        else:
            q = cfg.sigma_min ** (1.0 / (r - 1)) if r > 1 else 1.0
        s = q ** np.arange(r)
    return (u * s) @ v.T


def build_sampling(cfg: ExperimentConfig) -> SamplingSpec:
    if cfg.subspace == "coordinate":
        basis = coordinate_basis(cfg.d, cfg.h)
    else:
        basis = random_basis(cfg.d, cfg.h, make_rng(cfg.seed, OPERATOR_STREAM + 1))
    if cfg.signal_dist == "deterministic":
        # the signal is one of the basis vectors, chosen uniformly
        return SamplingSpec(basis, "deterministic", cfg.noise_dist, cfg.sigma, basis.T)
    return SamplingSpec(basis, cfg.signal_dist, cfg.noise_dist, cfg.sigma)


@dataclass(frozen=True)
class TrialRecord:
    trial_id: int
    seed: int
    t_star: float
    t_hat: float
    t_lin: Optional[float]
    err_opt: float
    err_hat: float
    err_xhat: float
    proj_dist: float
    h_detected: int
    bound_b: float

    def csv_row(self) -> str:
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, (int, np.integer)):
                return str(int(v))
            return f"{float(v):.17g}"
        return ",".join(fmt(getattr(self, name)) for name in CSV_HEADER)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: List[TrialRecord]
    summary: dict


@dataclass(frozen=True, eq=False)
class _Setup:
    model: ForwardModel
    spec: SamplingSpec
    pi_basis: np.ndarray
    h_true: int
    bound_b: float


def _prepare(cfg: ExperimentConfig) -> _Setup:
    model = build_forward_model(build_operator(cfg))
    if cfg.method == "closed_form" and not model.is_identity_like:
        raise ConfigError("invalid config: method=closed_form needs an identity-like operator")
    spec = build_sampling(cfg)
    sigma_y, pi_basis = population_covariance(model, spec)
    sigma_ax = sigma_y - cfg.sigma ** 2 * np.eye(model.m)
    lam = smallest_nonzero_eigenvalue(sigma_ax)
    bound = theoretical_bound_B(BoundInputs(cfg.n, cfg.m, cfg.h, cfg.tau, cfg.sigma, lam))
    return _Setup(model, spec, pi_basis, pi_basis.shape[1], bound)


def _fit(cfg: ExperimentConfig, setup: _Setup, seed: int) -> SubspaceEstimate:
    data = generate_dataset(setup.model, setup.spec, cfg.n, seed)
    if cfg.rank_selection == "known":
        return fit_subspace(data, h_override=setup.h_true)
    if cfg.rank_selection == "max_ratio":
        return fit_subspace(data)
    return fit_subspace(data, gap_policy=float(cfg.rank_selection))


def _learn(cfg, model, est, y):
    if cfg.method == "grid_refine":
        return learn_parameter(model, est, y, cfg.grid_points, cfg.refine_tol)
    if cfg.method == "linearized":
        return linearized_parameter(model, est, y)
    if cfg.method == "closed_form":
        return identity_closed_form(model, est, y)
    return regression_map(model, est, y, grid_points=cfg.grid_points, refine_tol=cfg.refine_tol)


def evaluate_instance(cfg: ExperimentConfig, setup: _Setup, est: SubspaceEstimate,
                      x, y, trial_id: int, seed: int, proj_dist: float) -> TrialRecord:
    """All per-instance quantities; errors are measured against ``x`` restricted to ``ker(A)^perp``."""
    model = setup.model
    x_dag = model.restrict(x)
    t_star = oracle_parameter(model, y, x_dag, cfg.grid_points, cfg.refine_tol)
    t_hat = _learn(cfg, model, est, y).t_hat
    try:
        t_lin = linearized_parameter(model, est, y).t_hat
    except LinearizationError:
        t_lin = None
    x_hat, _ = estimate_signal_and_noise(model, est, y)
    return TrialRecord(
        trial_id=trial_id,
        seed=seed,
        t_star=t_star,
        t_hat=t_hat,
        t_lin=t_lin,
        err_opt=reconstruction_error(model, y, x_dag, t_star),
        err_hat=reconstruction_error(model, y, x_dag, t_hat),
        err_xhat=float(np.linalg.norm(x_hat - x_dag)),
        proj_dist=proj_dist,
        h_detected=est.h_detected,
        bound_b=setup.bound_b,
    )


def worker_count() -> int:
    raw = os.environ.get("TIKHOLEARN_THREADS")
    if raw:
        try:
            value = int(raw)
        except ValueError as exc:
            raise ConfigError(f"invalid config: TIKHOLEARN_THREADS={raw!r}") from exc
        if value < 1:
            raise ConfigError("invalid config: TIKHOLEARN_THREADS must be positive")
        return value
    return min(8, os.cpu_count() or 1)


def _run_trial(cfg: ExperimentConfig, setup: _Setup, k: int) -> List[TrialRecord]:
    seed = derive_seed(cfg.seed, k)
    est = _fit(cfg, setup, seed)
    proj_dist = projection_distance_any(est.basis, setup.pi_basis)
    # evaluation data use their own stream, so they do not depend on n
    xs, _, ys = draw_instances(setup.model, setup.spec, cfg.n_eval, make_rng(seed, EVAL_STREAM))
    return [
        evaluate_instance(cfg, setup, est, xs[j], ys[j], k * cfg.n_eval + j, seed, proj_dist)
        for j in range(cfg.n_eval)
    ]


def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> ExperimentResult:
    """Run every trial and return records sorted by ``trial_id`` plus a summary.

    Each record is one evaluation instance; ``trial_id = k * n_eval + j`` for
    training set ``k`` and instance ``j``. Output does not depend on the
    number of workers.
    """
    setup = _prepare(cfg)
    workers = worker_count() if workers is None else workers
    if workers <= 1 or cfg.n_trials == 1:
        chunks = [_run_trial(cfg, setup, k) for k in range(cfg.n_trials)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda k: _run_trial(cfg, setup, k), range(cfg.n_trials)))
    records = sorted((r for chunk in chunks for r in chunk), key=lambda r: r.trial_id)
    return ExperimentResult(cfg, records, summarize(records))


def summarize(records: Sequence[TrialRecord]) -> dict:
    if not records:
        raise ValueError("no records to summarise")
    t_star = np.array([r.t_star for r in records])
    t_hat = np.array([r.t_hat for r in records])
    gap = np.abs(t_hat - t_star)
    t_lin = np.array([np.nan if r.t_lin is None else r.t_lin for r in records])
    err_opt = np.array([r.err_opt for r in records])
    err_hat = np.array([r.err_hat for r in records])
    err_xhat = np.array([r.err_xhat for r in records])
    lin_ok = np.isfinite(t_lin)
    return {
        "n_records": len(records),
        "mean_t_star": float(np.mean(t_star)),
        "mean_t_hat": float(np.mean(t_hat)),
        "median_abs_t_hat_minus_t_star": float(np.median(gap)),
        "frac_abs_t_hat_minus_t_star_le_0.05": float(np.mean(gap <= 0.05)),
        "median_abs_t_lin_minus_t_star": (float(np.median(np.abs(t_lin - t_star)[lin_ok]))
                                          if lin_ok.any() else math.nan),
        "median_abs_t_lin_minus_t_hat": (float(np.median(np.abs(t_lin - t_hat)[lin_ok]))
                                         if lin_ok.any() else math.nan),
        "median_err_opt": float(np.median(err_opt)),
        "median_err_hat": float(np.median(err_hat)),
        "median_err_xhat": float(np.median(err_xhat)),
        "median_proj_dist": float(np.median([r.proj_dist for r in records])),
        "chain_violations": int(np.sum(err_hat - err_opt > 2.0 * err_xhat + 1e-8)),
        "optimality_violations": int(np.sum(err_hat < err_opt - 1e-10)),
        "h_detected_mode": int(np.bincount([r.h_detected for r in records]).argmax()),
        "bound_b": records[0].bound_b,
    }


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    median_proj_dist: float
    median_abs_t_gap: float
    bound_b: float


def convergence_study(cfg: ExperimentConfig, n_list: Sequence[int],
                      workers: Optional[int] = None) -> List[ConvergenceRow]:
    """One summary row per training size; the projection distance median is over trials."""
    n_list = [int(n) for n in n_list]
    if not n_list or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ConfigError("invalid config: n_list must be nonempty and strictly increasing")
    rows = []
    for n in n_list:
        res = run_experiment(dataclasses.replace(cfg, n=n), workers)
        per_trial = [r.proj_dist for r in res.records if r.trial_id % cfg.n_eval == 0]
        gaps = [abs(r.t_hat - r.t_star) for r in res.records]
        rows.append(ConvergenceRow(n, float(np.median(per_trial)), float(np.median(gaps)),
                                   res.records[0].bound_b))
    return rows


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])


def trials_csv(records: Sequence[TrialRecord]) -> str:
    return ",".join(CSV_HEADER) + "\n" + "".join(r.csv_row() + "\n" for r in records)


def emit_outputs(records: Sequence[TrialRecord], out_dir, summary: Optional[dict] = None) -> Path:
    """Write trials.csv, summary.txt, scatter.svg, hist_tstar.svg and hist_that.svg."""
    if not records:
        raise ValueError("no records to write")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = summarize(records) if summary is None else summary
    t_star = [r.t_star for r in records]
    t_hat = [r.t_hat for r in records]
    with open(out / "trials.csv", "w", newline="") as fh:
        fh.write(trials_csv(records))
    with open(out / "summary.txt", "w") as fh:
        for key, value in summary.items():
            fh.write(f"{key} = {value}\n")
    (out / "scatter.svg").write_text(scatter_svg({"t*": t_star, "t_hat": t_hat},
                                                 "optimal vs learned parameter"))
    (out / "hist_tstar.svg").write_text(histogram_svg(t_star, "t* distribution"))
    (out / "hist_that.svg").write_text(histogram_svg(t_hat, "t_hat distribution"))
    return out
