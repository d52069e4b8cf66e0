"""Sampling masks: graph lifting, grid/shuffle patterns, adjacency tensors,
hypergraph gap estimation, and the sampling discrepancy."""

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_fraction, check_positive_int, check_random_state, check_tensor

DEFAULT_MAX_DENSE = 50_000_000


@dataclass(frozen=True)
class SamplingMask:
    """Set of revealed index tuples of a tensor with shape ``dims``.

    ``indices`` is an ``(|E|, t)`` int64 array, rows unique and sorted
    lexicographically (equivalently, by row-major linear position).
    """

    dims: tuple
    indices: np.ndarray = field(repr=False)

    def __post_init__(self):
        dims = tuple(check_positive_int(int(n), "dimension") for n in self.dims)
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.ndim != 2 or idx.shape[1] != len(dims):
            raise ValueError(f"indices must have shape (|E|, {len(dims)}), got {idx.shape}")
        if idx.shape[0] == 0:
            raise ValueError("a sampling mask needs at least one entry")
        if (idx < 0).any() or (idx >= np.array(dims)).any():
            raise ValueError("mask index out of range")
        lin = np.ravel_multi_index(tuple(idx.T), dims)
        order = np.argsort(lin, kind="stable")
        lin = lin[order]
        if (np.diff(lin) == 0).any():
            raise ValueError("duplicate entries in mask")
        idx = idx[order]
        idx.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "indices", idx)

    @classmethod
    def from_linear(cls, dims, linear):
        dims = tuple(int(n) for n in dims)
        return cls(dims, np.stack(np.unravel_index(np.asarray(linear, dtype=np.int64), dims), axis=1))

    @classmethod
    def from_dense(cls, X):
        X = np.asarray(X)
        return cls(X.shape, np.argwhere(X != 0))

    @property
    def order(self):
        return len(self.dims)

    @property
    def size(self):
        return self.indices.shape[0]

    def __len__(self):
        return self.size

    @property
    def n_total(self):
        return math.prod(self.dims)

    @property
    def fraction(self):
        return self.size / self.n_total

    def linear(self):
        return np.ravel_multi_index(tuple(self.indices.T), self.dims)

    def index_tuple(self):
        """Tuple of index arrays usable for fancy indexing ``T[mask.index_tuple()]``."""
        return tuple(self.indices.T)

    def mode_degrees(self, mode):
        return np.bincount(self.indices[:, mode], minlength=self.dims[mode])

    def __eq__(self, other):
        if not isinstance(other, SamplingMask):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self.indices, other.indices)

    def __hash__(self):
        return hash((self.dims, self.indices.tobytes()))


def lift_graph(g, t):
    """Hypergraph of all walks of length ``t - 1`` in ``g``, as a cubic mask.

    ``(i_1, ..., i_t)`` is revealed iff every consecutive pair is an edge. The
    result has ``n * d**(t-1)`` entries and every index of every mode appears
    in exactly ``d**(t-1)`` of them.
    """
    t = check_positive_int(t, "t", minimum=2)
    nbr = g.neighbors()
    walks = np.arange(g.n, dtype=np.int64)[:, None]
    for _ in range(t - 1):
        nxt = nbr[walks[:, -1]]  # (m, d), sorted, keeps lexicographic order
        walks = np.concatenate(
            [np.repeat(walks, g.d, axis=0), nxt.reshape(-1, 1)], axis=1
        )
    return SamplingMask((g.n,) * t, walks)


def grid_mask(dims, fraction):
    """Evenly spaced entries of the row-major flattened tensor.

    ``m = round(fraction * N)`` entries sit at linear positions
    ``floor(k * N / m)``, ``k = 0..m-1``.
    """
    dims = tuple(check_positive_int(int(n), "dimension") for n in dims)
    fraction = check_fraction(fraction, "fraction", low_inclusive=False)
    N = math.prod(dims)
    m = int(math.floor(fraction * N + 0.5))
    if m == 0:
        raise ValueError(f"fraction {fraction} of {N} entries rounds to an empty mask")
    k = np.arange(m, dtype=np.int64)
    return SamplingMask.from_linear(dims, (k * N) // m)


def shuffle_mask(mask, fraction, seed=None):
    """Move ``ceil(fraction * |E|)`` revealed entries to random unrevealed positions.

    The entries to move are chosen uniformly without replacement; their new
    positions are drawn uniformly without replacement from the positions not
    in ``mask``. ``|E|`` is unchanged.
    """
    fraction = check_fraction(fraction, "fraction")
    rng = check_random_state(seed)
    m = mask.size
    k = int(math.ceil(fraction * m - 1e-9))
    if k == 0:
        return mask
    lin = mask.linear()
    N = mask.n_total
    if N - m < k:
        raise ValueError(f"cannot move {k} entries: only {N - m} unrevealed positions")
    drop = rng.choice(m, size=k, replace=False)
    free = np.setdiff1d(np.arange(N, dtype=np.int64), lin, assume_unique=True)
    new = rng.choice(free, size=k, replace=False)
    keep = np.delete(lin, drop)
    return SamplingMask.from_linear(mask.dims, np.concatenate([keep, new]))


def adjacency_tensor(mask, max_entries=DEFAULT_MAX_DENSE):
    """Dense 0/1 indicator tensor of the revealed entries."""
    if mask.n_total > max_entries:
        raise MemoryError(
            f"dense adjacency tensor of dims {mask.dims} exceeds budget of {max_entries} entries"
        )
    out = np.zeros(mask.dims)
    out[mask.index_tuple()] = 1.0
    return out


def _centered_contract(mask, vecs, mode, density):
    """Contract ``T_H - density * J`` with ``vecs`` on every mode but ``mode``.

    Streams over the revealed entries; the constant shift is handled in
    closed form.
    """
    idx = mask.indices
    w = np.ones(mask.size)
    shift = density
    for k, v in enumerate(vecs):
        if k == mode:
            continue
        w = w * v[idx[:, k]]
        shift *= v.sum()
    return np.bincount(idx[:, mode], weights=w, minlength=mask.dims[mode]) - shift


def estimate_lambda2(mask, restarts=8, sweeps=200, seed=0, tol=1e-9, return_vectors=False):
    """Estimate the second eigenvalue of the mask hypergraph.

    Fits a rank-1 tensor to ``T_H - (|E|/N) J`` by alternating least squares
    from ``restarts`` random unit starts and returns the largest Frobenius
    norm of the fit. That norm is ``|C(u_1, ..., u_t)|`` for unit vectors, so
    the estimate never exceeds the true spectral norm.

    Restart ``k`` always uses the ``k``-th child of ``SeedSequence(seed)``, so
    the estimate is non-decreasing in ``restarts``.
    """
    restarts = check_positive_int(restarts, "restarts")
    sweeps = check_positive_int(sweeps, "sweeps")
    density = mask.size / mask.n_total
    t = mask.order
    children = np.random.SeedSequence(seed).spawn(restarts)
    best, best_vecs = 0.0, None
    for child in children:
        rng = np.random.default_rng(child)
        vecs = []
        for n in mask.dims:
            v = rng.standard_normal(n)
            vecs.append(v / np.linalg.norm(v))
        sigma_prev = None
        sigma = 0.0
        for _ in range(sweeps):
            for j in range(t):
                w = _centered_contract(mask, vecs, j, density)
                sigma = float(np.linalg.norm(w))
                if sigma == 0.0:
                    break
                vecs[j] = w / sigma
            if sigma == 0.0:
                break
            if sigma_prev is not None and abs(sigma - sigma_prev) <= tol * max(1.0, sigma):
                break
            sigma_prev = sigma
        if sigma > best:
            best, best_vecs = sigma, [v.copy() for v in vecs]
    if return_vectors:
        return best, best_vecs
    return best


def discrepancy(T, mask):
    """``|mean of T over all entries - mean of T over revealed entries|``."""
    T = check_tensor(T, "T")
    if T.shape != mask.dims:
        raise ValueError(f"tensor dims {T.shape} do not match mask dims {mask.dims}")
    return float(abs(T.mean() - T[mask.index_tuple()].mean()))
