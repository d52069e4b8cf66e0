"""Dense tensors, CP factorizations and the products and norms built on them.

Tensors are plain ``numpy.ndarray`` objects in C (row-major) order, so the
last index runs fastest when a tensor is flattened. Indices are 0-based here;
only the file and CLI layers speak 1-based.
"""

from dataclasses import dataclass
from functools import reduce

import numpy as np

from ._validation import check_same_dims, check_tensor


@dataclass(frozen=True)
class CpFactors:
    """Rank-``r`` CP factorization ``T = U1 o U2 o ... o Ut``.

    Parameters
    ----------
    factors : tuple of ndarray
        The ``i``-th matrix has shape ``(n_i, r)``.
    """

    factors: tuple

    def __post_init__(self):
        mats = tuple(np.asarray(U, dtype=np.float64) for U in self.factors)
        if not mats:
            raise ValueError("a CP factorization needs at least one factor")
        if any(U.ndim != 2 for U in mats):
            raise ValueError("every CP factor must be a 2-D matrix")
        ranks = {U.shape[1] for U in mats}
        if len(ranks) != 1:
            raise ValueError(f"factor matrices disagree on rank: {sorted(ranks)}")
        if not all(np.isfinite(U).all() for U in mats):
            raise ValueError("CP factors contain non-finite entries")
        object.__setattr__(self, "factors", mats)

    @property
    def rank(self):
        return self.factors[0].shape[1]

    @property
    def order(self):
        return len(self.factors)

    @property
    def dims(self):
        return tuple(U.shape[0] for U in self.factors)

    def to_dense(self):
        return cp_to_dense(self)

    def scaled(self, scales):
        """Return a copy with factor ``i`` multiplied by ``scales[i]``."""
        return CpFactors(tuple(U * s for U, s in zip(self.factors, scales)))


def cp_to_dense(factors):
    """Sum of outer products of the factor columns.

    ``factors`` may be a :class:`CpFactors` or a plain sequence of matrices.
    """
    if not isinstance(factors, CpFactors):
        factors = CpFactors(tuple(factors))
    mats = factors.factors
    r = factors.rank
    out = mats[0]
    for U in mats[1:]:
        # khatri-rao accumulation: (prod n_<i, r) x (n_i, r) -> (prod n_<=i, r)
        out = (out[:, None, :] * U[None, :, :]).reshape(-1, r)
    return out.sum(axis=1).reshape(factors.dims)


def kronecker(T, S):
    """Kronecker product of two tensors of equal order.

    Entry ``(k_1..k_t)`` with ``k_s = i_s * m_s + j_s`` (0-based) equals
    ``T[i] * S[j]``.
    """
    T = check_tensor(T, "T")
    S = check_tensor(S, "S")
    if T.ndim != S.ndim:
        raise ValueError(f"kronecker needs equal orders, got {T.ndim} and {S.ndim}")
    t = T.ndim
    # interleave axes (i_1, j_1, i_2, j_2, ...) then merge each pair
    outer = np.multiply.outer(T, S)
    perm = [ax for s in range(t) for ax in (s, t + s)]
    dims = tuple(n * m for n, m in zip(T.shape, S.shape))
    return outer.transpose(perm).reshape(dims)


def hadamard(T, S):
    T = check_tensor(T, "T")
    S = check_tensor(S, "S")
    check_same_dims(T, S)
    return T * S


def subtensor(T, index_sets):
    """Restrict ``T`` to the product of index subsets ``I_1 x ... x I_t``."""
    T = check_tensor(T, "T")
    if len(index_sets) != T.ndim:
        raise ValueError(f"expected {T.ndim} index sets, got {len(index_sets)}")
    idx = []
    for mode, (I, n) in enumerate(zip(index_sets, T.shape)):
        I = np.asarray(list(I), dtype=np.intp).ravel()
        if I.size == 0:
            raise ValueError(f"index set for mode {mode} is empty")
        if I.min() < 0 or I.max() >= n:
            raise IndexError(f"index set for mode {mode} leaves range [0, {n})")
        idx.append(I)
    return T[np.ix_(*idx)].copy()


def frobenius_norm(T):
    return float(np.sqrt(np.sum(np.square(T))))


def entrywise_max(T):
    return float(np.max(np.abs(T)))


def mse(T, other):
    check_same_dims(T, other)
    return float(np.mean(np.square(T - other)))


def norm_eval(T, kind="frobenius", other=None):
    """Evaluate ``frobenius``, ``entrywise_max`` or ``mse`` (against ``other``)."""
    T = check_tensor(T, "T")
    if kind == "frobenius":
        return frobenius_norm(T)
    if kind == "entrywise_max":
        return entrywise_max(T)
    if kind in ("mse", "mse_vs"):
        if other is None:
            raise ValueError("mse needs a second tensor")
        return mse(T, check_tensor(other, "other"))
    raise ValueError(f"unknown norm kind {kind!r}")


def cp_frobenius_norm(factors):
    """Frobenius norm of a CP tensor computed from the factor Gram matrices."""
    mats = factors.factors if isinstance(factors, CpFactors) else factors
    gram = reduce(np.multiply, [U.T @ U for U in mats])
    return float(np.sqrt(max(gram.sum(), 0.0)))
