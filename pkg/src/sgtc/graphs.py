"""Regular base graphs, the switch chain, and second-eigenvalue estimation."""

import logging
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_positive_int, check_random_state

logger = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    """Iterative method hit its cap; ``estimate`` holds the last value."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


@dataclass(frozen=True)
class RegularGraph:
    """Simple ``d``-regular graph on vertices ``0..n-1``.

    ``edges`` is an ``(n*d/2, 2)`` integer array with ``u < v`` in every row,
    rows sorted lexicographically.
    """

    n: int
    d: int
    edges: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = check_positive_int(self.n, "n")
        d = check_positive_int(self.d, "d", minimum=0)
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if (n * d) % 2:
            raise ValueError(f"n*d must be even, got n={n}, d={d}")
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            raise ValueError("edge endpoint out of range")
        if (edges[:, 0] == edges[:, 1]).any():
            raise ValueError("self-loops are not allowed")
        edges = np.sort(edges, axis=1)
        edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
        if len(edges) > 1 and (np.diff(edges, axis=0) == 0).all(axis=1).any():
            raise ValueError("duplicate edges are not allowed")
        deg = np.bincount(edges.ravel(), minlength=n)
        if (deg != d).any():
            raise ValueError(f"graph is not {d}-regular (degrees {deg.min()}..{deg.max()})")
        edges.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "edges", edges)

    def adjacency(self):
        A = np.zeros((self.n, self.n))
        A[self.edges[:, 0], self.edges[:, 1]] = 1.0
        A[self.edges[:, 1], self.edges[:, 0]] = 1.0
        return A

    def neighbors(self):
        """Sorted neighbor array of shape ``(n, d)``."""
        nbr = [[] for _ in range(self.n)]
        for u, v in self.edges.tolist():
            nbr[u].append(v)
            nbr[v].append(u)
        return np.array([sorted(x) for x in nbr], dtype=np.int64).reshape(self.n, self.d)

    def degrees(self):
        return np.bincount(self.edges.ravel(), minlength=self.n)

    def __eq__(self, other):
        if not isinstance(other, RegularGraph):
            return NotImplemented
        return self.n == other.n and self.d == other.d and np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash((self.n, self.d, self.edges.tobytes()))


def _ring_edges(n, half):
    return {(min(i, (i + k) % n), max(i, (i + k) % n)) for i in range(n) for k in range(1, half + 1)}


def ring_graph(n, d):
    """``d``-connected ring: vertex ``i`` joined to ``i +- 1, ..., i +- d/2`` (mod n)."""
    n = check_positive_int(n, "n")
    d = check_positive_int(d, "d", minimum=2)
    if d % 2:
        raise ValueError(f"the d-connected ring needs even d, got d={d}")
    if d >= n:
        raise ValueError(f"ring graph needs d < n, got d={d}, n={n}")
    return RegularGraph(n, d, np.array(sorted(_ring_edges(n, d // 2))))


def base_graph(n, d):
    """Deterministic ring-like ``d``-regular starting graph for any degree.

    Even ``d`` gives :func:`ring_graph`. Odd ``d`` gives the ``(d-1)``-connected
    ring plus the antipodal perfect matching ``i <-> i + n/2``, which needs
    ``n`` even.
    """
    n = check_positive_int(n, "n")
    d = check_positive_int(d, "d", minimum=1)
    if d >= n:
        raise ValueError(f"base graph needs d < n, got d={d}, n={n}")
    if d % 2 == 0:
        return ring_graph(n, d)
    if n % 2:
        raise ValueError(f"odd d={d} needs an even n for the antipodal matching, got n={n}")
    edges = _ring_edges(n, (d - 1) // 2)
    matching = {(i, i + n // 2) for i in range(n // 2)}
    if edges & matching:
        raise ValueError(f"antipodal matching collides with the ring for n={n}, d={d}")
    return RegularGraph(n, d, np.array(sorted(edges | matching)).reshape(-1, 2))


def switch_chain(g, swaps, seed=None, return_stats=False, max_proposals=None):
    """Apply ``swaps`` accepted switch moves to ``g``.

    A move picks two distinct edges ``{a, b}``, ``{c, e}`` uniformly, and one
    of the rewirings ``{a, c}, {b, e}`` or ``{a, e}, {b, c}`` with equal
    probability. Moves creating a loop or a repeated edge are rejected and not
    counted.

    Returns the new graph, or ``(graph, stats)`` with ``stats`` holding the
    ``accepted`` and ``proposed`` counts when ``return_stats`` is set.

    Raises
    ------
    RuntimeError
        If ``max_proposals`` (default ``1000 * swaps + 10000``) proposals do not
        yield enough accepted moves, e.g. on complete graphs.
    """
    swaps = check_positive_int(swaps, "swaps", minimum=0)
    rng = check_random_state(seed)
    edges = [tuple(e) for e in g.edges.tolist()]
    present = set(edges)
    m = len(edges)
    if max_proposals is None:
        max_proposals = 1000 * swaps + 10_000
    accepted = proposed = 0
    while accepted < swaps:
        if proposed >= max_proposals or m < 2:
            raise RuntimeError(
                f"switch chain stalled: {accepted} of {swaps} moves accepted in {proposed} proposals"
            )
        proposed += 1
        i, j = rng.choice(m, size=2, replace=False)
        a, b = edges[i]
        c, e = edges[j]
        if rng.random() < 0.5:
            new1, new2 = (a, c), (b, e)
        else:
            new1, new2 = (a, e), (b, c)
        if new1[0] == new1[1] or new2[0] == new2[1]:
            continue
        new1 = (min(new1), max(new1))
        new2 = (min(new2), max(new2))
        if new1 == new2 or new1 in present or new2 in present:
            continue
        present.difference_update((edges[i], edges[j]))
        present.update((new1, new2))
        edges[i], edges[j] = new1, new2
        accepted += 1
    out = RegularGraph(g.n, g.d, np.array(edges, dtype=np.int64).reshape(-1, 2))
    if return_stats:
        return out, {"accepted": accepted, "proposed": proposed}
    return out


def second_eigenvalue(g, tol=1e-8, max_iter=20_000, seed=0):
    """Largest |eigenvalue| of ``A - (d/n) J``, the second eigenvalue of ``g``.

    Power iteration on the deflated adjacency matrix from a random start; the
    estimate ``||B v|| / ||v||`` is monitored until successive values differ by
    less than ``tol``. Since only the magnitude is returned, a tie between the
    top and bottom of the nontrivial spectrum is harmless.
    """
    n, d = g.n, g.d
    nbr = g.neighbors()
    rng = check_random_state(seed)
    v = rng.standard_normal(n)
    v -= v.mean()
    norm = np.linalg.norm(v)
    if norm == 0 or d == 0:
        return 0.0
    v /= norm

    def apply_B(x):
        return x[nbr].sum(axis=1) - (d / n) * x.sum()

    prev = None
    est = 0.0
    for _ in range(max_iter):
        w = apply_B(v)
        est = float(np.linalg.norm(w))
        if est == 0.0:
            return 0.0
        v = w / est
        if prev is not None and abs(est - prev) < tol:
            return est
        prev = est
    raise ConvergenceError(f"power iteration did not converge in {max_iter} steps", estimate=est)
