"""Closed-form error-bound right-hand sides and runtime discrepancy checks."""

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ._validation import check_random_state, check_tensor
from .atomic import GROTHENDIECK_KG, atom_matrix, atomic_norm
from .graphs import second_eigenvalue
from .masks import discrepancy, estimate_lambda2

BOUND_KINDS = ("thm3", "thm4", "thm4_rank", "poisson_general", "poisson_lifted", "sample_complexity")

_REQUIRED = {
    "thm3": ("n", "t", "lambda2_h", "n_observed", "atomic_norm"),
    "thm4": ("t", "lam", "d", "atomic_norm"),
    "thm4_rank": ("t", "lam", "d", "r", "linf"),
    "poisson_general": ("n", "t", "r", "lambda2_h", "n_observed", "alpha", "beta"),
    "poisson_lifted": ("n", "t", "r", "lam", "d", "alpha", "beta"),
    "sample_complexity": ("n", "t", "r", "eps"),
}


@dataclass
class BoundReport:
    """Value of one bound together with the inputs it was evaluated at."""

    bound_kind: str
    inputs: dict
    value: float
    qualitative_only: bool = False
    notes: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), sort_keys=True, **kwargs)


def _nonneg(name, value):
    value = float(value)
    if not math.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be a finite nonnegative number, got {value}")
    return value


def _positive(name, value):
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value


def evaluate_bound(kind, C=1.0, **inputs):
    """Evaluate the named mean-squared-error bound.

    Parameters
    ----------
    kind : str
        One of ``thm3``, ``thm4``, ``thm4_rank``, ``poisson_general``,
        ``poisson_lifted``, ``sample_complexity``.
    C : float
        Absolute constant of the Poisson bounds. Its true value is unknown, so
        Poisson reports are flagged ``qualitative_only``.
    **inputs
        ``n``, ``t``, ``r``, ``d``, ``lam`` (graph second eigenvalue),
        ``lambda2_h`` (hypergraph second eigenvalue), ``n_observed`` (``|E|``),
        ``atomic_norm``, ``linf``, ``alpha``, ``beta``, ``eps`` as required.

    Returns
    -------
    BoundReport
    """
    if kind not in _REQUIRED:
        raise ValueError(f"unknown bound kind {kind!r}; choose from {BOUND_KINDS}")
    missing = [k for k in _REQUIRED[kind] if inputs.get(k) is None]
    if missing:
        raise ValueError(f"bound {kind} needs inputs {missing}")
    x = {k: v for k, v in inputs.items() if v is not None}
    t = int(x["t"])
    if t < 2:
        raise ValueError("t must be >= 2")
    for k in ("n_observed", "d", "eps"):
        if k in x:
            _positive(k, x[k])
    for k in ("n", "r", "alpha", "beta"):
        if k in x:
            _positive(k, x[k])
    for k in ("lam", "lambda2_h", "atomic_norm", "linf"):
        if k in x:
            _nonneg(k, x[k])
    KG2 = GROTHENDIECK_KG**2
    lifted_core = 2.0**t * (2 * t - 3)
    notes = []

    if kind == "thm3":
        value = 2.0 ** (t + 2) * x["n"] ** (t / 2) * x["lambda2_h"] * x["atomic_norm"] ** 2 / x["n_observed"]
    elif kind == "thm4":
        value = lifted_core * (x["lam"] / x["d"]) * x["atomic_norm"] ** 2
    elif kind == "thm4_rank":
        value = lifted_core * (x["lam"] / x["d"]) * KG2 * x["r"] ** (3 * t - 5) * x["linf"] ** 2
    elif kind == "sample_complexity":
        value = x["n"] * x["r"] ** (2 * (t - 1) * (3 * t - 5)) / x["eps"] ** (2 * (t - 1))
        notes.append("order of growth of |E|; constant factors omitted")
    else:
        _positive("C", C)
        a, b, n, r = x["alpha"], x["beta"], x["n"], x["r"]
        if b > a:
            raise ValueError("beta must not exceed alpha")
        rk = r ** (3 * t - 5)
        log_n = math.log2(n)
        if kind == "poisson_general":
            stat = C * a**3 * t**1.5 * math.sqrt(n * rk) * log_n / (b * math.sqrt(x["n_observed"]))
            bias = 2.0 ** (t + 2) * n ** (t / 2) * x["lambda2_h"] * KG2 * a**2 * rk / x["n_observed"]
        else:
            stat = C * a**3 * t**1.5 * math.sqrt(rk) * log_n / (b * math.sqrt(x["d"] ** (t - 1)))
            bias = a**2 * lifted_core * (x["lam"] / x["d"]) * KG2 * rk
        value = stat + bias
        x["C"] = C
        notes.append("absolute constant C is unknown; value is for comparison only")
    if not math.isfinite(value):
        raise ValueError(f"bound {kind} overflowed for inputs {x}")
    return BoundReport(
        bound_kind=kind, inputs=x, value=float(value),
        qualitative_only=kind.startswith("poisson"), notes=notes,
    )


def lifted_discrepancy_factor(t, lam, d):
    """``2**(t-2) (2t-3) lam / d``: discrepancy per unit atomic norm on lifted masks."""
    return 2.0 ** (t - 2) * (2 * t - 3) * float(lam) / float(d)


def hypergraph_discrepancy_factor(n, t, lambda2_h, n_observed):
    """``2**t n**(t/2) lambda2_h / |E|``: discrepancy per unit atomic norm."""
    return 2.0**t * float(n) ** (t / 2) * float(lambda2_h) / float(n_observed)


@dataclass
class DiscrepancyCheck:
    lhs: float
    atomic_norm: float
    rhs: float
    factor: float
    gap_statistic: float
    mode: str
    passed: bool
    margin: float
    gap_is_lower_bound: bool = False

    def to_dict(self):
        return asdict(self)


def _factor_for(mask, graph, restarts):
    t = mask.order
    if graph is not None:
        lam = second_eigenvalue(graph)
        return lifted_discrepancy_factor(t, lam, graph.d), lam, "lifted", False
    if len(set(mask.dims)) != 1:
        raise ValueError("the hypergraph bound needs a cubic mask")
    lam2 = estimate_lambda2(mask, restarts=restarts, sweeps=500, tol=1e-12)
    return hypergraph_discrepancy_factor(mask.dims[0], t, lam2, mask.size), lam2, "hypergraph", True


def check_discrepancy_bounds(T, mask, graph=None, tol=1e-9, restarts=64):
    """Compare ``discrepancy(T, mask)`` with its atomic-norm bound.

    With ``graph`` (the graph ``mask`` was lifted from) the lifted-mask bound
    ``2**(t-2)(2t-3)(lam/d) ||T||_+-`` is used; otherwise the hypergraph bound
    ``2**t n**(t/2) lambda2(H) ||T||_+- / |E|`` with ``lambda2(H)`` from a
    many-restart rank-1 fit. That estimate can only undershoot, so a reported
    failure in hypergraph mode may be an artifact of the estimate.

    Raises
    ------
    ValueError
        If ``T`` is too large for the exact atomic-norm oracle.
    """
    T = check_tensor(T, "T", min_order=2)
    if T.shape != mask.dims:
        raise ValueError(f"tensor dims {T.shape} do not match mask dims {mask.dims}")
    lhs = discrepancy(T, mask)
    norm = atomic_norm(T).value
    factor, gap, mode, lower = _factor_for(mask, graph, restarts)
    rhs = factor * norm
    return DiscrepancyCheck(
        lhs=lhs, atomic_norm=norm, rhs=rhs, factor=factor, gap_statistic=gap, mode=mode,
        passed=lhs <= rhs + tol * max(1.0, rhs), margin=rhs - lhs, gap_is_lower_bound=lower,
    )


def worst_case_discrepancy_ratio(mask):
    """Exact ``sup_T discrepancy(T) / ||T||_+-`` over tensors of the mask's dims.

    The atomic unit ball is the convex hull of the signed atoms and the
    discrepancy is the absolute value of a linear functional, so the supremum
    is attained at an atom.
    """
    A = atom_matrix(mask.dims)
    w = np.full(mask.n_total, -1.0 / mask.n_total)
    w[mask.linear()] += 1.0 / mask.size
    return float(np.abs(w @ A).max())


@dataclass
class AnnealResult:
    best_ratio: float
    best_tensor: np.ndarray
    factor: float
    proposals: int
    violation: bool

    def to_dict(self):
        d = asdict(self)
        d["best_tensor"] = self.best_tensor.tolist()
        return d


def anneal_discrepancy(mask, factor, proposals=10_000, seed=None, step=0.3, t_start=0.05, t_end=1e-4, tol=1e-9):
    """Simulated annealing search for a tensor whose discrepancy ratio beats ``factor``.

    Maximizes ``discrepancy(T, mask) / ||T||_+-`` over tensors with entries
    in ``[-1, 1]``, proposing single-entry Gaussian moves under a geometric
    temperature schedule. ``violation`` is set when the best ratio found
    exceeds ``factor``.
    """
    rng = check_random_state(seed)
    dims = mask.dims
    idx = mask.index_tuple()

    def ratio(X):
        norm = atomic_norm(X).value
        if norm == 0.0:
            return 0.0
        return abs(X.mean() - X[idx].mean()) / norm

    X = rng.uniform(-1.0, 1.0, size=dims)
    cur = ratio(X)
    best, best_X = cur, X.copy()
    cooling = (t_end / t_start) ** (1.0 / max(proposals - 1, 1))
    temp = t_start
    for _ in range(proposals):
        Y = X.copy()
        pos = tuple(int(rng.integers(n)) for n in dims)
        Y[pos] = np.clip(Y[pos] + step * rng.standard_normal(), -1.0, 1.0)
        val = ratio(Y)
        if val >= cur or rng.random() < math.exp((val - cur) / temp):
            X, cur = Y, val
            if cur > best:
                best, best_X = cur, X.copy()
        temp *= cooling
    return AnnealResult(
        best_ratio=best, best_tensor=best_X, factor=float(factor), proposals=proposals,
        violation=best > factor * (1.0 + tol),
    )
