"""Randomized property suites for the atomic oracle, masks and bounds."""

import time
from dataclasses import dataclass, field

import numpy as np

from .atomic import atomic_norm, atomic_rank_bound
from .bounds import (
    anneal_discrepancy,
    check_discrepancy_bounds,
    evaluate_bound,
    lifted_discrepancy_factor,
    worst_case_discrepancy_ratio,
)
from .graphs import RegularGraph, ring_graph, second_eigenvalue, switch_chain
from .masks import estimate_lambda2, grid_mask, lift_graph, shuffle_mask
from .tensor import cp_to_dense, hadamard, kronecker, subtensor

TOL = 1e-7


@dataclass
class PropertyResult:
    suite: str
    name: str
    instances: int
    violations: int
    seconds: float
    detail: str = ""

    @property
    def passed(self):
        return self.violations == 0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"{status} {self.suite}/{self.name}: {self.violations} of {self.instances} violated{extra}"


@dataclass
class VerificationReport:
    results: list = field(default_factory=list)

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    def lines(self):
        return [r.line() for r in self.results]


def _run(suite, name, count, check, rng, detail=""):
    start = time.perf_counter()
    bad = sum(0 if check(rng) else 1 for _ in range(count))
    return PropertyResult(suite, name, count, bad, time.perf_counter() - start, detail)


def _norm(T):
    return atomic_norm(T).value


def random_sign_atom(rng, dims):
    """Dense rank-1 sign tensor with independent uniform sign vectors."""
    return cp_to_dense([rng.choice([-1.0, 1.0], size=(n, 1)) for n in dims])


def atomic_suite(rng, count):
    out = []

    def sign_is_one(r):
        dims = (2, 2) if r.random() < 0.5 else (2, 2, 2)
        return abs(_norm(random_sign_atom(r, dims)) - 1.0) <= 1e-9

    def lower(r):
        T = r.uniform(-1, 1, size=(2, 2, 2))
        return _norm(T) >= np.abs(T).max() - TOL

    def upper(r):
        rank = int(r.integers(1, 4))
        T = cp_to_dense([r.uniform(-1, 1, size=(2, rank)) for _ in range(3)])
        return _norm(T) <= atomic_rank_bound(rank, 3, np.abs(T).max()) + TOL

    def subtensor_bound(r):
        T = r.standard_normal((3, 3))
        sets = [sorted(r.choice(3, size=int(r.integers(1, 4)), replace=False)) for _ in range(2)]
        return _norm(subtensor(T, sets)) <= _norm(T) + TOL

    def kronecker_mult(r):
        T, S = r.standard_normal((2, 2)), r.standard_normal((2, 2))
        return _norm(kronecker(T, S)) <= _norm(T) * _norm(S) + TOL

    def hadamard_bound(r):
        T, S = r.standard_normal((2, 2)), r.standard_normal((2, 2))
        return _norm(hadamard(T, S)) <= _norm(kronecker(T, S)) + TOL

    def square_bound(r):
        T = r.standard_normal((2, 2))
        return _norm(hadamard(T, T)) <= _norm(T) ** 2 + TOL

    def homogeneity(r):
        T = r.standard_normal((2, 2, 2))
        c = r.uniform(-3, 3)
        return abs(_norm(c * T) - abs(c) * _norm(T)) <= TOL * max(1.0, _norm(T))

    def triangle(r):
        T, S = r.standard_normal((2, 2, 2)), r.standard_normal((2, 2, 2))
        return _norm(T + S) <= _norm(T) + _norm(S) + TOL

    def rank_one(r):
        T = cp_to_dense([r.uniform(-1, 1, size=(2, 1)) for _ in range(3)])
        return _norm(T) <= 1.0 + TOL

    for name, fn in [
        ("sign-tensor-norm-one", sign_is_one), ("linf-lower-bound", lower), ("rank-upper-bound", upper),
        ("subtensor", subtensor_bound), ("kronecker", kronecker_mult), ("hadamard", hadamard_bound),
        ("square", square_bound), ("homogeneity", homogeneity), ("triangle", triangle),
        ("rank-one-unit-factors", rank_one),
    ]:
        out.append(_run("atomic", name, count, fn, rng))
    return out


def _random_small_graph(rng, n=4):
    d = int(rng.choice([2, 3])) if n == 4 else 2
    g = ring_graph(n, 2) if d == 2 else RegularGraph(n, n - 1, [(u, v) for u in range(n) for v in range(u + 1, n)])
    perm = rng.permutation(n)
    return RegularGraph(n, g.d, perm[g.edges])


def mask_suite(rng, count):
    out = []

    def lift_regular(r):
        n = int(r.integers(6, 12))
        d = int(r.choice([2, 4]))
        t = int(r.integers(2, 5))
        g = switch_chain(ring_graph(n, d), int(r.integers(0, 20)), seed=r)
        m = lift_graph(g, t)
        return m.size == n * d ** (t - 1) and all((m.mode_degrees(k) == d ** (t - 1)).all() for k in range(t))

    def shuffle_keeps_size(r):
        base = grid_mask((6, 6, 6), float(r.uniform(0.05, 0.5)))
        return shuffle_mask(base, float(r.uniform(0, 1)), seed=r).size == base.size

    def lambda2_matrix(r):
        m = shuffle_mask(grid_mask((12, 12), 0.3), 0.5, seed=r)
        A = np.zeros(m.dims)
        A[m.index_tuple()] = 1.0
        exact = np.linalg.norm(A - m.fraction, 2)
        return abs(estimate_lambda2(m, restarts=16, sweeps=2000, tol=1e-14, seed=int(r.integers(2**31))) - exact) <= 1e-4

    def lambda2_monotone(r):
        m = shuffle_mask(grid_mask((5, 5, 5), 0.2), 0.5, seed=r)
        s = int(r.integers(2**31))
        vals = [estimate_lambda2(m, restarts=k, sweeps=50, seed=s) for k in (1, 2, 4)]
        return vals[0] <= vals[1] <= vals[2]

    def lifted_discrepancy(r):
        g = _random_small_graph(r)
        res = check_discrepancy_bounds(r.standard_normal((4, 4, 4)), lift_graph(g, 3), g)
        return res.passed

    out.append(_run("masks", "lift-regularity", count, lift_regular, rng))
    out.append(_run("masks", "shuffle-preserves-size", count, shuffle_keeps_size, rng))
    out.append(_run("masks", "lambda2-matches-svd", max(5, count // 10), lambda2_matrix, rng))
    out.append(_run("masks", "lambda2-monotone-in-restarts", max(5, count // 10), lambda2_monotone, rng))
    out.append(_run("masks", "lifted-discrepancy-inequality", max(10, count // 2), lifted_discrepancy, rng))
    return out


def bound_suite(rng, count, anneal_proposals):
    out = []

    def monotone(r):
        n, t, rank = int(r.integers(3, 50)), int(r.integers(2, 5)), int(r.integers(1, 4))
        d = int(r.integers(2, 20))
        lo, hi = sorted(r.uniform(0.01, d, size=2))
        common = dict(n=n, t=t, d=d, n_observed=n * d ** (t - 1), atomic_norm=1.0, linf=1.0, alpha=6.0, beta=1.0)
        ok = True
        for kind, key in [("thm3", "lambda2_h"), ("thm4", "lam"), ("thm4_rank", "lam"),
                          ("poisson_general", "lambda2_h"), ("poisson_lifted", "lam")]:
            a = evaluate_bound(kind, r=rank, **{**common, key: lo}).value
            b = evaluate_bound(kind, r=rank, **{**common, key: hi}).value
            a2 = evaluate_bound(kind, r=rank + 1, **{**common, key: lo}).value
            ok &= a <= b and a <= a2
        return ok

    def hypergraph_discrepancy(r):
        m = shuffle_mask(grid_mask((3, 3, 3), float(r.uniform(0.15, 0.45))), float(r.uniform(0, 1)), seed=r)
        return check_discrepancy_bounds(r.standard_normal((3, 3, 3)), m).passed

    def exact_worst_case(r):
        g = _random_small_graph(r)
        m = lift_graph(g, 3)
        return worst_case_discrepancy_ratio(m) <= lifted_discrepancy_factor(3, second_eigenvalue(g), g.d) + TOL

    out.append(_run("bounds", "monotone-in-gap-and-rank", count, monotone, rng))
    out.append(_run("bounds", "hypergraph-discrepancy-inequality", max(10, count // 4), hypergraph_discrepancy, rng))
    out.append(_run("bounds", "exact-worst-case-ratio", max(10, count // 4), exact_worst_case, rng))

    g = ring_graph(3, 2)
    m = lift_graph(g, 3)
    factor = lifted_discrepancy_factor(3, second_eigenvalue(g), g.d)
    start = time.perf_counter()
    res = anneal_discrepancy(m, factor, proposals=anneal_proposals, seed=rng)
    out.append(PropertyResult(
        "bounds", "annealing-falsifier", anneal_proposals, int(res.violation), time.perf_counter() - start,
        detail=f"best ratio {res.best_ratio:.4f} vs factor {factor:.4f}",
    ))
    return out


def run_verification(seed, quick=False):
    """Run every suite; ``quick`` uses reduced instance counts (under a minute)."""
    root = np.random.SeedSequence(seed)
    r_atomic, r_mask, r_bound = (np.random.default_rng(s) for s in root.spawn(3))
    count = 30 if quick else 200
    report = VerificationReport()
    report.results += atomic_suite(r_atomic, count)
    report.results += mask_suite(r_mask, count if not quick else 20)
    report.results += bound_suite(r_bound, count, 1000 if quick else 10_000)
    return report
