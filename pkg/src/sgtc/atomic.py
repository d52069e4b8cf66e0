"""Exact atomic norm of tiny tensors and the closed-form rank bounds.

The atomic norm is the smallest total weight ``sum |alpha_i|`` over
expansions ``T = sum alpha_i S_i`` into rank-1 sign tensors
``S_i = s^(1) o ... o s^(t)`` with ``s^(j)`` in ``{-1, +1}^{n_j}``. For small
dims every atom can be listed, and the norm is an L1-minimization linear
program solved here with :func:`sgtc._simplex.revised_simplex`.
"""

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

from ._simplex import LPError, revised_simplex
from ._validation import check_positive_int, check_tensor
from .tensor import CpFactors

#: Upper bound on Grothendieck's constant over the reals, used as its value.
GROTHENDIECK_KG = 1.783

DEFAULT_ATOM_CAP = 2**16
RECONSTRUCTION_TOL = 1e-8


@dataclass(frozen=True)
class SignAtom:
    """Rank-1 sign tensor, one ``+-1`` vector per mode.

    Canonical form has ``signs[0][0] == +1``, so each pair ``{S, -S}`` is
    stored once.
    """

    signs: tuple

    def __post_init__(self):
        signs = tuple(tuple(int(v) for v in s) for s in self.signs)
        if any(v not in (-1, 1) for s in signs for v in s):
            raise ValueError("sign atoms hold only +1 and -1 entries")
        if not signs or not signs[0] or signs[0][0] != 1:
            raise ValueError("canonical sign atoms start with +1")
        object.__setattr__(self, "signs", signs)

    @property
    def dims(self):
        return tuple(len(s) for s in self.signs)

    def to_dense(self):
        return reduce(np.multiply.outer, [np.asarray(s, dtype=np.float64) for s in self.signs])


@dataclass
class AtomicDecomposition:
    """Optimal expansion found by :func:`atomic_norm`.

    Only atoms with nonzero coefficient are kept. ``value`` equals
    ``sum(abs(coefficients))``.
    """

    atoms: list
    coefficients: np.ndarray
    value: float
    dims: tuple

    def to_dense(self):
        out = np.zeros(self.dims)
        for a, atom in zip(self.coefficients, self.atoms):
            out += a * atom.to_dense()
        return out


def _mode_signs(n, first):
    """All sign vectors of length ``n``; if ``first`` the leading entry is +1."""
    if first:
        rows = [(1,) + rest for rest in itertools.product((1, -1), repeat=n - 1)]
    else:
        rows = list(itertools.product((1, -1), repeat=n))
    return np.array(rows, dtype=np.float64).T  # (n, count)


def _check_dims(dims, cap):
    dims = tuple(check_positive_int(int(n), "dimension") for n in dims)
    if len(dims) < 2:
        raise ValueError("atomic norm tensors must have order >= 2")
    count = 2 ** (sum(dims) - 1)
    if count > cap:
        raise ValueError(
            f"dims {dims} need {count} atoms, above the oracle cap of {cap}; "
            "instance too large for the exact oracle"
        )
    return dims


@lru_cache(maxsize=32)
def _atom_matrix_cached(dims):
    per_mode = [_mode_signs(n, i == 0) for i, n in enumerate(dims)]
    A = reduce(np.kron, per_mode)
    A.setflags(write=False)
    return per_mode, A


def atom_matrix(dims, cap=DEFAULT_ATOM_CAP):
    """Matrix whose columns are the vectorized canonical atoms for ``dims``.

    Column ``k`` corresponds to ``enumerate_atoms(dims)[k]``; rows follow the
    row-major flattening of a tensor.
    """
    return _atom_matrix_cached(_check_dims(dims, cap))[1]


def enumerate_atoms(dims, cap=DEFAULT_ATOM_CAP):
    """List all ``2**(sum(dims) - 1)`` canonical sign atoms for ``dims``."""
    dims = _check_dims(dims, cap)
    per_mode, _ = _atom_matrix_cached(dims)
    cols = [range(S.shape[1]) for S in per_mode]
    return [
        SignAtom(tuple(tuple(per_mode[j][:, k].astype(int)) for j, k in enumerate(combo)))
        for combo in itertools.product(*cols)
    ]


def _starting_basis(dims, A, vec_b):
    """Feasible basis made of atoms, signs chosen so the basic solution is >= 0.

    Per mode the sign vectors ``1`` and ``1 - 2 e_k`` (k >= 1) form a basis of
    R^n; their Kronecker products form a basis of the tensor space.
    """
    # index of the vector with only position k flipped, in product((1, -1)) order;
    # the same formula holds for mode 0 because its leading entry is never flipped
    mode_idx = [[0] + [1 << (n - 1 - k) for k in range(1, n)] for n in dims]
    radix = [2 ** (n - 1) if i == 0 else 2**n for i, n in enumerate(dims)]
    cols = []
    for combo in itertools.product(*mode_idx):
        k = 0
        for c, base in zip(combo, radix):
            k = k * base + c
        cols.append(k)
    cols = np.array(cols, dtype=np.intp)
    coef = np.linalg.solve(A[:, cols], vec_b)
    n_atoms = A.shape[1]
    return np.where(coef >= 0, cols, cols + n_atoms)


def atomic_norm(T, cap=DEFAULT_ATOM_CAP, tol=1e-10):
    """Exact atomic norm of ``T`` with an optimal decomposition.

    Solves ``min 1'(a+ + a-)`` subject to ``A (a+ - a-) = vec(T)``,
    ``a+, a- >= 0`` where the columns of ``A`` are the canonical atoms.

    Raises
    ------
    ValueError
        Non-finite input, order < 2, or dims above the enumeration cap.
    """
    T = check_tensor(T, "T", min_order=2)
    dims = _check_dims(T.shape, cap)
    A = atom_matrix(dims, cap)
    b = T.ravel()
    n_atoms = A.shape[1]
    if not b.any():
        return AtomicDecomposition(atoms=[], coefficients=np.zeros(0), value=0.0, dims=dims)

    A_split = np.hstack([A, -A])
    c = np.ones(2 * n_atoms)
    basis = _starting_basis(dims, A, b)
    try:
        res = revised_simplex(c, A_split, b, basis, tol=tol)
    except LPError as exc:
        raise RuntimeError(f"atomic-norm LP failed: {exc}") from exc

    alpha = res.x[:n_atoms] - res.x[n_atoms:]
    if np.abs(A @ alpha - b).max() > RECONSTRUCTION_TOL * max(1.0, np.abs(b).max()):
        raise RuntimeError("atomic-norm LP returned a decomposition that does not reconstruct T")
    keep = np.flatnonzero(np.abs(alpha) > 0)
    atoms = []
    if keep.size:
        per_mode, _ = _atom_matrix_cached(dims)
        radix = [S.shape[1] for S in per_mode]
        for k in keep:
            digits = np.unravel_index(k, radix)
            atoms.append(SignAtom(tuple(tuple(per_mode[j][:, dj].astype(int)) for j, dj in enumerate(digits))))
    return AtomicDecomposition(
        atoms=atoms,
        coefficients=alpha[keep],
        value=float(np.abs(alpha).sum()),
        dims=dims,
    )


def atomic_rank_bound(r, t, linf):
    """Upper bound ``K_G * sqrt(r**(3t-5)) * linf`` on the atomic norm of a rank-``r`` tensor."""
    r = check_positive_int(r, "r")
    t = check_positive_int(t, "t", minimum=2)
    if linf < 0:
        raise ValueError("linf must be nonnegative")
    return GROTHENDIECK_KG * math.sqrt(float(r) ** (3 * t - 5)) * float(linf)


def maxq_value_of_factors(factors):
    """Product over modes of the largest row 2-norm of each factor.

    This is the max-quasinorm objective for one particular factorization, an
    upper bound on the max-quasinorm of the tensor it represents.
    """
    if not isinstance(factors, CpFactors):
        factors = CpFactors(tuple(factors))
    return float(np.prod([np.sqrt((U * U).sum(axis=1)).max() for U in factors.factors]))
