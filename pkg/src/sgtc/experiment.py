"""Gap-versus-error sweeps: targets, Poisson counts, trials, regression, output files."""

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ._validation import check_positive_int, check_random_state, check_tensor
from .graphs import base_graph, second_eigenvalue, switch_chain
from .masks import estimate_lambda2, grid_mask, lift_graph, shuffle_mask
from .solvers import ALGORITHMS, SolverConfig
from .tensor import cp_to_dense

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "algorithm", "n", "t", "r", "r_fit", "d_or_fraction", "swaps_or_shuffle",
    "seed", "lambda2", "rel_error", "mse", "wall_ms", "converged",
)

# spawn-key tags so target draws never collide with per-point streams
_TARGET_KEY = 0
_POINT_KEY = 1


def _parse_normalization(normalization):
    if normalization in (None, "frobenius_sqrt_nt"):
        return ("frobenius_sqrt_nt",)
    if isinstance(normalization, str) and normalization.startswith("range"):
        inner = normalization[normalization.index("(") + 1: normalization.rindex(")")]
        a, b = (float(v) for v in inner.split(","))
        return ("range", a, b)
    if isinstance(normalization, (list, tuple)) and normalization and normalization[0] == "range":
        return ("range", float(normalization[1]), float(normalization[2]))
    raise ValueError(f"unknown normalization {normalization!r}")


def gen_target(n, t, r, normalization="frobenius_sqrt_nt", seed=None):
    """Random CP tensor with ``U[0, 1]`` factors, then normalized.

    ``normalization`` is ``'frobenius_sqrt_nt'`` (scale to Frobenius norm
    ``sqrt(n**t)``) or ``'range(a,b)'`` / ``('range', a, b)`` (affine map of the
    entries onto ``[a, b]``; note the added constant can raise the CP rank by
    one).
    """
    n = check_positive_int(n, "n")
    t = check_positive_int(t, "t", minimum=2)
    r = check_positive_int(r, "r")
    kind = _parse_normalization(normalization)
    rng = check_random_state(seed)
    T = cp_to_dense([rng.uniform(0.0, 1.0, size=(n, r)) for _ in range(t)])
    if kind[0] == "frobenius_sqrt_nt":
        return T * (math.sqrt(n**t) / np.linalg.norm(T))
    _, a, b = kind
    lo, hi = T.min(), T.max()
    if hi - lo <= 1e-12 * max(abs(hi), 1.0):
        raise ValueError("range normalization of a constant tensor is undefined")
    return a + (b - a) * (T - lo) / (hi - lo)


def sample_poisson_counts(T, mask, seed=None):
    """Independent Poisson draws with means ``T_e`` on the mask, zero elsewhere."""
    T = check_tensor(T, "T")
    if T.shape != mask.dims:
        raise ValueError(f"tensor dims {T.shape} do not match mask dims {mask.dims}")
    means = T[mask.index_tuple()]
    if (means < 0).any():
        raise ValueError("Poisson means must be nonnegative on observed entries")
    rng = check_random_state(seed)
    X = np.zeros(T.shape)
    X[mask.index_tuple()] = rng.poisson(means)
    return X


@dataclass
class ExperimentConfig:
    """One gap-versus-error sweep.

    ``mode='graph'`` lifts switch-chain graphs of degree ``d`` after each swap
    count in ``swaps``; ``mode='grid'`` shuffles each fraction in ``shuffles``
    of a ``grid_fraction`` grid mask.
    """

    n: int = 30
    t: int = 3
    r: int = 2
    r_fit: int = None
    algorithm: str = "maxq"
    mode: str = "graph"
    d: int = 10
    swaps: list = field(default_factory=lambda: [0, 50, 100, 200, 300])
    grid_fraction: float = 0.05
    shuffles: list = field(default_factory=lambda: [0.1, 0.25, 0.5, 0.75, 1.0])
    trials: int = 5
    seed: int = 0
    normalization: str = None
    poisson_lower: float = 1.0
    poisson_upper: float = 6.0
    cutoff: float = None
    response: str = None
    max_sweeps: int = 100
    inner_tol: float = 1e-8
    ridge_weight: float = 0.01
    coupling: float = 100.0
    slack_weight: float = 1.0
    residual_radius: float = None
    init_mode: str = "svdrand"
    rebalance: bool = True
    gap_restarts: int = 8
    gap_sweeps: int = 200
    threads: int = 1
    timing: bool = True

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.mode not in ("graph", "grid"):
            raise ValueError("mode must be 'graph' or 'grid'")
        check_positive_int(self.trials, "trials")
        schedule = self.swaps if self.mode == "graph" else self.shuffles
        if not schedule:
            raise ValueError("the sweep schedule is empty")

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown experiment config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self):
        return asdict(self)

    @property
    def schedule(self):
        return list(self.swaps if self.mode == "graph" else self.shuffles)

    @property
    def fit_rank(self):
        if self.r_fit is not None:
            return self.r_fit
        return self.r if self.algorithm == "poisson" else 10 * self.r

    @property
    def response_column(self):
        if self.response:
            return self.response
        return "mse" if self.algorithm == "poisson" else "rel_error"

    @property
    def target_normalization(self):
        if self.normalization is not None:
            return self.normalization
        if self.algorithm == "poisson":
            return ("range", self.poisson_lower, self.poisson_upper)
        return "frobenius_sqrt_nt"

    def solver_config(self, seed):
        return SolverConfig(
            fit_rank=self.fit_rank, ridge_weight=self.ridge_weight,
            residual_radius=self.residual_radius, coupling=self.coupling,
            slack_weight=self.slack_weight, max_sweeps=self.max_sweeps,
            inner_tol=self.inner_tol, init_mode=self.init_mode, rebalance=self.rebalance,
            poisson_lower=self.poisson_lower, poisson_upper=self.poisson_upper, seed=seed,
        )


@dataclass
class TrialRecord:
    algorithm: str
    n: int
    t: int
    r: int
    r_fit: int
    d_or_fraction: float
    swaps_or_shuffle: float
    seed: int
    lambda2: float
    rel_error: float
    mse: float
    wall_ms: float
    converged: bool
    n_observed: int = 0
    point_index: int = 0
    trial_index: int = 0
    error_message: str = ""

    @property
    def ok(self):
        return not self.error_message


def _point_key(value):
    # schedule values key the seed tree, so inserting points leaves others intact
    return int(round(float(value) * 1_000_000))


def _trial_seeds(master, value, trial):
    trial_ss = np.random.SeedSequence(master, spawn_key=(_POINT_KEY, _point_key(value), trial))
    mask_ss, solver_ss, count_ss = trial_ss.spawn(3)
    as_int = lambda ss: int(ss.generate_state(1, dtype=np.uint32)[0])  # noqa: E731
    return as_int(trial_ss), mask_ss, as_int(solver_ss), count_ss


def _run_trial(cfg, base, point_index, value, trial):
    trial_seed, mask_ss, solver_seed, count_ss = _trial_seeds(cfg.seed, value, trial)
    start = time.perf_counter()
    common = dict(
        algorithm=cfg.algorithm, n=cfg.n, t=cfg.t, r=cfg.r, r_fit=cfg.fit_rank,
        d_or_fraction=cfg.d if cfg.mode == "graph" else cfg.grid_fraction,
        swaps_or_shuffle=value, seed=trial_seed, point_index=point_index, trial_index=trial,
    )
    try:
        if cfg.mode == "graph":
            g = switch_chain(base, int(value), seed=np.random.default_rng(mask_ss))
            gap = second_eigenvalue(g)
            mask = lift_graph(g, cfg.t)
        else:
            mask = shuffle_mask(base, float(value), seed=np.random.default_rng(mask_ss))
            gap = estimate_lambda2(mask, restarts=cfg.gap_restarts, sweeps=cfg.gap_sweeps,
                                   seed=trial_seed)
        target_ss = np.random.SeedSequence(cfg.seed, spawn_key=(_TARGET_KEY, trial))
        T = gen_target(cfg.n, cfg.t, cfg.r, cfg.target_normalization, seed=np.random.default_rng(target_ss))
        data = sample_poisson_counts(T, mask, seed=np.random.default_rng(count_ss)) if cfg.algorithm == "poisson" else T
        est = cfg.solver_config(solver_seed).estimator(cfg.algorithm).fit(data, mask)
        diff = est.estimate_ - T
        sq = float(np.sum(diff * diff))
        rec = TrialRecord(
            lambda2=float(gap), rel_error=math.sqrt(sq) / float(np.linalg.norm(T)),
            mse=sq / T.size, wall_ms=0.0, converged=bool(est.converged_),
            n_observed=mask.size, **common,
        )
    except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        logger.warning("trial failed (point=%s, trial=%d): %s", value, trial, exc)
        rec = TrialRecord(lambda2=math.nan, rel_error=math.nan, mse=math.nan, wall_ms=0.0,
                          converged=False, error_message=str(exc) or type(exc).__name__, **common)
    rec.wall_ms = (time.perf_counter() - start) * 1000.0 if cfg.timing else math.nan
    return rec


def build_base(cfg):
    if cfg.mode == "graph":
        return base_graph(cfg.n, cfg.d)
    return grid_mask((cfg.n,) * cfg.t, cfg.grid_fraction)


def run_sweep(cfg):
    """Run every schedule point x trial and return records sorted by (point, trial)."""
    base = build_base(cfg)
    jobs = [(p, v, k) for p, v in enumerate(cfg.schedule) for k in range(cfg.trials)]
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            records = list(pool.map(lambda job: _run_trial(cfg, base, *job), jobs))
    else:
        records = [_run_trial(cfg, base, *job) for job in jobs]
    records.sort(key=lambda rec: (rec.point_index, rec.trial_index))
    sizes = {rec.n_observed for rec in records if rec.ok}
    if len(sizes) > 1:
        raise RuntimeError(f"|E| changed across the sweep: {sorted(sizes)}")
    return records


@dataclass
class LineFit:
    slope: float
    intercept: float
    r2: float
    n_points: int

    def to_dict(self):
        return asdict(self)


def fit_line(records=None, predictor="lambda2", response="rel_error", cutoff=None, x=None, y=None):
    """Ordinary least squares of ``response`` on ``predictor`` (no log scaling).

    Pass either ``records`` (TrialRecords or dicts) or raw ``x``/``y`` arrays.
    Records whose predictor exceeds ``cutoff`` are dropped, as are failed
    trials. ``R^2`` is 0 for a constant response.
    """
    if records is not None:
        get = (lambda rec, k: rec[k]) if records and isinstance(records[0], dict) else getattr
        x = np.array([float(get(rec, predictor)) for rec in records])
        y = np.array([float(get(rec, response)) for rec in records])
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    keep = np.isfinite(x) & np.isfinite(y)
    if cutoff is not None:
        keep &= x <= cutoff
    x, y = x[keep], y[keep]
    if x.size < 3:
        raise ValueError(f"need at least 3 points for a line fit, got {x.size}")
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    if sxx <= 1e-300:
        raise ValueError("predictor has zero variance")
    slope = float(((x - xm) * (y - ym)).sum()) / sxx
    intercept = float(ym - slope * xm)
    ss_tot = float(((y - ym) ** 2).sum())
    ss_res = float(((y - intercept - slope * x) ** 2).sum())
    r2 = 0.0 if ss_tot <= 1e-300 else 1.0 - ss_res / ss_tot
    return LineFit(slope=slope, intercept=intercept, r2=r2, n_points=int(x.size))


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)


def records_to_csv(records):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        writer.writerow([_fmt(getattr(rec, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def read_records_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def regression_summary(records, cfg):
    out = {"predictor": "lambda2", "response": cfg.response_column}
    ok = [rec for rec in records if rec.ok]
    try:
        out["full"] = fit_line(ok, response=cfg.response_column).to_dict()
    except ValueError as exc:
        out["full"] = {"error": str(exc)}
    if cfg.cutoff is not None:
        try:
            out["cutoff"] = dict(fit_line(ok, response=cfg.response_column, cutoff=cfg.cutoff).to_dict(),
                                 threshold=cfg.cutoff)
        except ValueError as exc:
            out["cutoff"] = {"error": str(exc), "threshold": cfg.cutoff}
    out["n_failed"] = len(records) - len(ok)
    return out


def write_scatter_svg(records, cfg, path, regression=None):
    """Scatter of error against gap with the fitted line; linear and log y panels."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    regression = regression or regression_summary(records, cfg)
    resp = cfg.response_column
    ok = [rec for rec in records if rec.ok]
    x = np.array([rec.lambda2 for rec in ok])
    y = np.array([getattr(rec, resp) for rec in ok])
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    full = regression.get("full", {})
    title = f"{cfg.algorithm}, n={cfg.n}, t={cfg.t}, r={cfg.r}"
    if "r2" in full:
        title += f"  (R^2 = {full['r2']:.3f})"
    for ax, scale in zip(axes, ("linear", "log")):
        ax.scatter(x, y, s=14)
        if "slope" in full and x.size:
            xs = np.linspace(x.min(), x.max(), 50)
            ys = full["intercept"] + full["slope"] * xs
            if scale == "log":
                pos = ys > 0
                xs, ys = xs[pos], ys[pos]
            ax.plot(xs, ys, color="C3")
        if scale == "log" and (y > 0).any():
            ax.set_yscale("log")
        ax.set_xlabel("second eigenvalue")
        ax.set_ylabel(resp + (" (log)" if scale == "log" else ""))
    fig.suptitle(title)
    fig.tight_layout()
    # fixed metadata keeps the file reproducible
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def run_experiment(cfg, out_dir):
    """Run a sweep and write ``records.csv``, ``regression.json`` and ``scatter.svg``."""
    import pathlib

    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = run_sweep(cfg)
    (out / "records.csv").write_text(records_to_csv(records))
    regression = regression_summary(records, cfg)
    (out / "regression.json").write_text(json.dumps(regression, indent=2, sort_keys=True) + "\n")
    write_scatter_svg(records, cfg, out / "scatter.svg", regression)
    return records, regression
