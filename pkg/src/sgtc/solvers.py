"""Tensor completion estimators with a scikit-learn style interface.

Four estimators share one alternating scheme over CP factor matrices:

* :class:`RidgeCompletion` -- ``||P(T' - T)||^2 + eps * sum ||U_i||_F^2``
* :class:`ProjectedRidgeCompletion` -- ``sum ||U_i||_F^2 + kappa/2 ||P(T' - T - R)||^2
  + beta ||R||^2`` with ``||R||_F <= delta``
* :class:`MaxQnormCompletion` -- same with ``prod ||U_i||_{2,inf}`` replacing the
  Frobenius penalty and ``||P(R)||_F <= delta``
* :class:`PoissonCompletion` -- Poisson maximum likelihood over nonnegative
  CP tensors with entries kept in ``[lower, upper]``

``fit(X, mask)`` takes the data tensor and the revealed entries; ``mask`` may be
a :class:`~sgtc.masks.SamplingMask`, a boolean array, or omitted when ``X`` is
a masked array or marks missing entries with NaN.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ._validation import check_positive_int, check_random_state, check_tensor
from .atomic import maxq_value_of_factors
from .masks import SamplingMask
from .tensor import CpFactors, cp_frobenius_norm, cp_to_dense

logger = logging.getLogger(__name__)

CG_MAX_ITER = 500
# 'svdrand' and 'rebalance' follow this package's own definitions; see README
INIT_MODES = ("svdrand", "random")


def _coerce_observations(X, mask):
    """Return ``(dims, indices, values)`` of the revealed entries."""
    if isinstance(X, np.ma.MaskedArray):
        if mask is None:
            mask = SamplingMask.from_dense(~np.ma.getmaskarray(X))
        X = X.filled(np.nan)
    X = check_tensor(X, "X", min_order=2, allow_nan=True)
    if mask is None:
        observed = ~np.isnan(X)
        if observed.all():
            raise ValueError("no mask given and X has no missing (NaN) entries")
        mask = SamplingMask.from_dense(observed)
    elif not isinstance(mask, SamplingMask):
        mask = SamplingMask.from_dense(np.asarray(mask, dtype=bool))
    if mask.dims != X.shape:
        raise ValueError(f"mask dims {mask.dims} do not match data dims {X.shape}")
    values = X[mask.index_tuple()]
    if not np.isfinite(values).all():
        raise ValueError("observed entries must be finite")
    return mask, values


class _ModeIndex:
    """Per-mode bookkeeping for the revealed entries."""

    def __init__(self, mask):
        self.mask = mask
        self.idx = mask.indices
        m = mask.size
        self.scatter = []
        self.order = []
        self.rowptr = []
        for j, n in enumerate(mask.dims):
            rows = self.idx[:, j]
            self.scatter.append(
                sparse.csr_matrix((np.ones(m), (rows, np.arange(m))), shape=(n, m))
            )
            order = np.argsort(rows, kind="stable")
            self.order.append(order)
            self.rowptr.append(np.searchsorted(rows[order], np.arange(n + 1)))

    def khatri_rows(self, factors, mode):
        """``K[e] = prod_{k != mode} U_k[e_k]`` for every revealed ``e``."""
        K = None
        for k, U in enumerate(factors):
            if k == mode:
                continue
            rows = U[self.idx[:, k]]
            K = rows if K is None else K * rows
        return K

    def model_values(self, factors):
        K = self.khatri_rows(factors, 0)
        return np.einsum("er,er->e", factors[0][self.idx[:, 0]], K)

    def normal_equations(self, factors, mode, target):
        """Per-row Gram matrices ``G_i = sum K_e K_e^T`` and ``b_i = sum y_e K_e``."""
        K = self.khatri_rows(factors, mode)
        n = self.mask.dims[mode]
        r = K.shape[1]
        b = np.asarray(self.scatter[mode] @ (K * target[:, None]))
        G = np.zeros((n, r, r))
        order, ptr = self.order[mode], self.rowptr[mode]
        Ks = K[order]
        for i in range(n):
            lo, hi = ptr[i], ptr[i + 1]
            if hi > lo:
                Ki = Ks[lo:hi]
                G[i] = Ki.T @ Ki
        return G, b


def batched_cg(A, b, x0, tol=1e-8, max_iter=CG_MAX_ITER):
    """Conjugate gradient on a stack of SPD systems ``A[i] x[i] = b[i]``.

    Each system stops once its residual is below ``tol * ||b[i]||``. Returns the
    solutions and the number of iterations used.
    """
    x = x0.copy()
    r = b - np.einsum("nij,nj->ni", A, x)
    p = r.copy()
    rs = np.einsum("ni,ni->n", r, r)
    bnorm = np.linalg.norm(b, axis=1)
    thresh = (tol * bnorm) ** 2
    active = rs > thresh
    it = 0
    while active.any() and it < max_iter:
        Ap = np.einsum("nij,nj->ni", A, p)
        pAp = np.einsum("ni,ni->n", p, Ap)
        step = np.where(active & (pAp > 0), rs / np.where(pAp > 0, pAp, 1.0), 0.0)
        x += step[:, None] * p
        r -= step[:, None] * Ap
        rs_new = np.einsum("ni,ni->n", r, r)
        beta = np.where(active, rs_new / np.where(rs > 0, rs, 1.0), 0.0)
        p = r + beta[:, None] * p
        rs = rs_new
        active = active & (rs > thresh) & (pAp > 0)
        it += 1
    return x, it


def _max_row_norm(U):
    return float(np.sqrt((U * U).sum(axis=1)).max())


def _rebalance_max_rows(factors):
    """Equalize ``||U_i||_{2,inf}`` across modes keeping the CP product fixed."""
    norms = np.array([_max_row_norm(U) for U in factors])
    if (norms <= 0).any():
        return factors
    target = math.exp(np.log(norms).mean())
    return [U * (target / a) for U, a in zip(factors, norms)]


def _rebalance_columns(factors):
    """Equalize each CP component's column norms across modes (minimizes sum ||U_i||_F^2)."""
    norms = np.array([np.linalg.norm(U, axis=0) for U in factors])  # (t, r)
    ok = (norms > 0).all(axis=0)
    if not ok.any():
        return factors
    safe = np.where(norms > 0, norms, 1.0)
    gm = np.exp(np.log(safe).mean(axis=0))
    scale = np.where(ok[None, :], gm[None, :] / safe, 1.0)
    return [U * s for U, s in zip(factors, scale)]


def _project_ball(R, radius):
    norm = np.linalg.norm(R)
    if norm > radius:
        return R * (radius / norm) if norm > 0 else R
    return R


class _CompletionBase(BaseEstimator):
    """Shared fitting loop; subclasses provide the sweep and the objective."""

    def _check_params(self):
        check_positive_int(self.rank, "rank")
        check_positive_int(self.max_sweeps, "max_sweeps")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.init not in INIT_MODES:
            raise ValueError(f"init must be one of {INIT_MODES}, got {self.init!r}")

    def _init_factors(self, mask, values, rng):
        r = self.rank
        factors = [rng.standard_normal((n, r)) for n in mask.dims]
        if self.init == "svdrand":
            # match the RMS of the revealed entries over the whole tensor
            target = math.sqrt(mask.n_total / mask.size) * float(np.linalg.norm(values))
            current = cp_frobenius_norm(factors)
            if current > 0 and target > 0:
                s = (target / current) ** (1.0 / len(factors))
                factors = [U * s for U in factors]
        return factors

    def fit(self, X, mask=None):
        """Fit CP factors to the revealed entries of ``X``.

        Returns
        -------
        self
        """
        self._check_params()
        mask, values = _coerce_observations(X, mask)
        if self.rank > min(mask.dims):
            logger.warning("rank %d exceeds the smallest dimension %d", self.rank, min(mask.dims))
        rng = check_random_state(self.random_state)
        self._setup(mask, values)
        modes = _ModeIndex(mask)
        factors = self._init_factors(mask, values, rng)
        state = self._init_state(modes, factors, values)
        trace = [self._objective(modes, factors, values, state)]
        converged = False
        sweeps = 0
        for sweeps in range(1, self.max_sweeps + 1):
            factors, state = self._sweep(modes, factors, values, state)
            trace.append(self._objective(modes, factors, values, state))
            prev, cur = trace[-2], trace[-1]
            if abs(prev - cur) <= self.tol * max(abs(prev), 1e-300):
                converged = True
                break
        factors, state = self._finalize(modes, factors, values, state)
        self.mask_ = mask
        self.factors_ = CpFactors(tuple(factors))
        self.estimate_ = self._estimate(self.factors_, state)
        self.objective_trace_ = np.array(trace)
        self.n_sweeps_ = sweeps
        self.converged_ = converged
        self._store_state(state)
        return self

    def _setup(self, mask, values):
        pass

    def _init_state(self, modes, factors, values):
        return {}

    def _finalize(self, modes, factors, values, state):
        return factors, state

    def _store_state(self, state):
        pass

    def _estimate(self, factors, state):
        return cp_to_dense(factors)

    def _check_fitted(self):
        if not hasattr(self, "estimate_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet")

    def predict(self, X=None):
        """Completed dense tensor."""
        self._check_fitted()
        return self.estimate_.copy()

    def transform(self, X):
        """Fill the missing (NaN or masked) entries of ``X`` with the estimate."""
        self._check_fitted()
        if isinstance(X, np.ma.MaskedArray):
            X = X.filled(np.nan)
        X = np.array(X, dtype=np.float64)
        if X.shape != self.estimate_.shape:
            raise ValueError(f"X dims {X.shape} do not match the fitted dims {self.estimate_.shape}")
        missing = np.isnan(X)
        X[missing] = self.estimate_[missing]
        return X

    def fit_predict(self, X, mask=None):
        return self.fit(X, mask).predict()

    def score(self, X_true):
        """Negative mean squared error against a fully known tensor."""
        self._check_fitted()
        X_true = check_tensor(X_true, "X_true")
        return -float(np.mean((self.estimate_ - X_true) ** 2))


class RidgeCompletion(_CompletionBase):
    """Ridge-penalized CP completion by alternating conjugate-gradient solves.

    Parameters
    ----------
    rank : int
        Number of CP components fitted.
    ridge_weight : float
        Weight ``eps`` of ``sum ||U_i||_F^2``.
    max_sweeps : int
        Cap on alternating sweeps over all factors.
    tol : float
        Relative CG residual tolerance, also the relative objective change
        that stops the sweeps.
    init : {'svdrand', 'random'}
        'svdrand' draws standard normal factors rescaled so the initial
        tensor has the RMS of the revealed entries; 'random' skips the
        rescaling.
    rebalance : bool
        Equalize column norms across modes after each sweep. This keeps the
        tensor and never increases the objective.
    random_state : int, Generator or None
    """

    def __init__(self, rank=10, ridge_weight=0.01, max_sweeps=100, tol=1e-8,
                 init="svdrand", rebalance=False, random_state=None):
        self.rank = rank
        self.ridge_weight = ridge_weight
        self.max_sweeps = max_sweeps
        self.tol = tol
        self.init = init
        self.rebalance = rebalance
        self.random_state = random_state

    def _check_params(self):
        super()._check_params()
        if self.ridge_weight < 0:
            raise ValueError("ridge_weight must be nonnegative")

    def _objective(self, modes, factors, values, state):
        resid = modes.model_values(factors) - values
        return float(resid @ resid + self.ridge_weight * sum((U * U).sum() for U in factors))

    def _sweep(self, modes, factors, values, state):
        r = self.rank
        eye = np.eye(r)
        for j in range(len(factors)):
            G, b = modes.normal_equations(factors, j, values)
            A = G + self.ridge_weight * eye
            factors[j], _ = batched_cg(A, b, factors[j], tol=self.tol)
        if self.rebalance:
            factors = _rebalance_columns(factors)
        return factors, state


class _SlackMixin:
    """Slack tensor ``R`` on the revealed entries, updated in closed form."""

    def _setup(self, mask, values):
        self.delta_ = 0.05 * math.sqrt(mask.size) if self.delta is None else float(self.delta)
        if self.delta_ < 0:
            raise ValueError("delta must be nonnegative")
        if not self.kappa > 0 or not self.beta > 0:
            raise ValueError("kappa and beta must be positive")

    def _init_state(self, modes, factors, values):
        return {"R": np.zeros_like(values)}

    def _update_slack(self, modes, factors, values):
        M = modes.model_values(factors) - values
        R = (self.kappa / (self.kappa + 2.0 * self.beta)) * M
        return _project_ball(R, self.delta_)

    def _fit_terms(self, modes, factors, values, R):
        resid = modes.model_values(factors) - values - R
        return 0.5 * self.kappa * float(resid @ resid) + self.beta * float(R @ R)

    def _store_state(self, state):
        self.slack_ = state["R"]
        self.slack_norm_ = float(np.linalg.norm(state["R"]))


class ProjectedRidgeCompletion(_SlackMixin, _CompletionBase):
    """Relaxed ridge completion with a residual slack bounded by ``delta``.

    Minimizes ``sum ||U_i||_F^2 + kappa/2 ||P(T' - T - R)||_F^2 + beta ||R||_F^2``
    subject to ``||R||_F <= delta`` by alternating exact factor solves with the
    closed-form slack update (shrink, then rescale onto the ball).

    Parameters
    ----------
    delta : float or None
        Slack radius; ``None`` means ``0.05 * sqrt(|E|)``.
    kappa, beta : float
        Coupling and slack weights.
    rebalance : bool
        Equalize column norms across modes after each sweep.

    Other parameters are as for :class:`RidgeCompletion`.
    """

    def __init__(self, rank=10, delta=None, kappa=100.0, beta=1.0, max_sweeps=100,
                 tol=1e-8, init="svdrand", rebalance=True, random_state=None):
        self.rank = rank
        self.delta = delta
        self.kappa = kappa
        self.beta = beta
        self.max_sweeps = max_sweeps
        self.tol = tol
        self.init = init
        self.rebalance = rebalance
        self.random_state = random_state

    def _objective(self, modes, factors, values, state):
        penalty = sum(float((U * U).sum()) for U in factors)
        return penalty + self._fit_terms(modes, factors, values, state["R"])

    def _sweep(self, modes, factors, values, state):
        target = values + state["R"]
        ridge = (2.0 / self.kappa) * np.eye(self.rank)
        for j in range(len(factors)):
            G, b = modes.normal_equations(factors, j, target)
            factors[j], _ = batched_cg(G + ridge, b, factors[j], tol=self.tol)
        if self.rebalance:
            factors = _rebalance_columns(factors)
        state["R"] = self._update_slack(modes, factors, values)
        return factors, state


def _trust_region_rows(h, beta, rho, newton_iter=60):
    """Multipliers ``mu_i >= 0`` with ``||(H_i + mu_i I)^-1 g_i|| = rho`` or ``mu_i = 0``.

    ``h`` are the eigenvalues and ``beta`` the rotated right-hand sides, both
    ``(n, r)``. Newton iteration on ``1/||u(mu)|| - 1/rho``, which is concave in
    ``mu``, started from the left so it converges monotonically.
    """
    n = h.shape[0]
    mu = np.zeros(n)
    if rho <= 0:
        return np.full(n, np.inf)
    b2 = beta * beta
    with np.errstate(divide="ignore", invalid="ignore"):
        norm0 = np.sqrt(np.where(b2 > 0, b2 / np.where(h > 0, h * h, 1.0), 0.0).sum(axis=1))
    active = norm0 > rho
    if not active.any():
        return mu
    hh, bb = h[active], b2[active]
    m = np.zeros(hh.shape[0])
    for _ in range(newton_iter):
        denom = hh + m[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            q2 = np.where(bb > 0, bb / denom**2, 0.0).sum(axis=1)
            q3 = np.where(bb > 0, bb / denom**3, 0.0).sum(axis=1)
        norm = np.sqrt(q2)
        psi = 1.0 / norm - 1.0 / rho
        dpsi = q3 / norm**3
        step = psi / dpsi
        m_new = m - step
        m_new = np.where(np.isfinite(m_new), np.maximum(m_new, 0.0), m)
        if np.all(np.abs(m_new - m) <= 1e-14 * np.maximum(m_new, 1.0)):
            m = m_new
            break
        m = m_new
    mu[active] = m
    return mu


def _maxnorm_block(H, g, c, tol=1e-12, max_bisect=100):
    """Exact minimizer of ``c * max_i ||u_i|| + sum_i (u_i'H_i u_i / 2 - g_i'u_i)``.

    The problem is convex. For a fixed common radius ``rho`` each row is a
    trust-region subproblem; the optimal ``rho`` zeroes the derivative
    ``c - rho * sum_i mu_i(rho)``, found by bisection.
    """
    h, Q = np.linalg.eigh(H)
    hmax = max(float(h.max()), 0.0)
    h = np.where(h > 1e-12 * max(hmax, 1e-300), h, 0.0)
    beta = np.einsum("nji,nj->ni", Q, g)
    beta = np.where(h > 0, beta, 0.0)

    def rows_for(mu):
        den = h + mu[:, None]
        coef = np.where(den > 0, beta / np.where(den > 0, den, 1.0), 0.0)
        return np.einsum("nij,nj->ni", Q, coef)

    with np.errstate(divide="ignore", invalid="ignore"):
        norm0 = np.sqrt(np.where(h > 0, beta**2 / np.where(h > 0, h * h, 1.0), 0.0).sum(axis=1))
    hi = float(norm0.max())
    if hi == 0.0:
        return np.zeros_like(g)
    if c <= 0:
        return rows_for(np.zeros(h.shape[0]))
    if np.linalg.norm(beta, axis=1).sum() <= c:
        return np.zeros_like(g)
    lo = 0.0
    for _ in range(max_bisect):
        mid = 0.5 * (lo + hi)
        mu = _trust_region_rows(h, beta, mid)
        if c - mid * mu.sum() > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= tol * hi:
            break
    return rows_for(_trust_region_rows(h, beta, hi))


class MaxQnormCompletion(_SlackMixin, _CompletionBase):
    """Max-quasinorm penalized completion with a bounded residual slack.

    Minimizes ``prod_i ||U_i||_{2,inf} + kappa/2 ||P(T' - T - R)||_F^2 + beta ||R||_F^2``
    subject to ``||P(R)||_F <= delta``. Each factor block is solved exactly (the
    block problem is convex), the slack in closed form; optional rebalancing
    equalizes the max row norms across modes without changing the tensor.

    Parameters
    ----------
    delta : float or None
        Slack radius; ``None`` means ``0.05 * sqrt(|E|)``.
    kappa, beta : float
        Coupling and slack weights.
    rebalance : bool
        Rebalance factor scales after each sweep.

    Other parameters are as for :class:`RidgeCompletion`.
    """

    def __init__(self, rank=10, delta=None, kappa=100.0, beta=1.0, max_sweeps=100,
                 tol=1e-8, init="svdrand", rebalance=True, random_state=None):
        self.rank = rank
        self.delta = delta
        self.kappa = kappa
        self.beta = beta
        self.max_sweeps = max_sweeps
        self.tol = tol
        self.init = init
        self.rebalance = rebalance
        self.random_state = random_state

    def _objective(self, modes, factors, values, state):
        return maxq_value_of_factors(factors) + self._fit_terms(modes, factors, values, state["R"])

    def _sweep(self, modes, factors, values, state):
        target = values + state["R"]
        t = len(factors)
        for j in range(t):
            c = float(np.prod([_max_row_norm(factors[k]) for k in range(t) if k != j]))
            G, b = modes.normal_equations(factors, j, target)
            H, g = self.kappa * G, self.kappa * b
            U_new = _maxnorm_block(H, g, c)

            def block_value(U):
                quad = 0.5 * np.einsum("ni,nij,nj->", U, H, U) - float((g * U).sum())
                return c * _max_row_norm(U) + quad

            if block_value(U_new) <= block_value(factors[j]):
                factors[j] = U_new
        if self.rebalance:
            factors = _rebalance_max_rows(factors)
        state["R"] = self._update_slack(modes, factors, values)
        return factors, state


class PoissonCompletion(_CompletionBase):
    """Poisson maximum-likelihood completion over nonnegative CP tensors.

    Maximizes ``sum_E X_e log Z_e - Z_e`` with multiplicative
    majorization-minimization updates of nonnegative factors. After a sweep,
    if the reconstructed tensor leaves ``[lower, upper]`` the first factor is
    rescaled by the smallest correction toward the box; a final MM sweep
    follows such a rescale, and the returned estimate is clipped entrywise.

    Parameters
    ----------
    rank : int
    lower, upper : float
        Box ``0 < lower <= upper`` for the Poisson means.
    max_sweeps : int
    tol : float
        Relative change in log-likelihood that stops the sweeps.
    random_state : int, Generator or None

    Attributes
    ----------
    loglik_pre_, loglik_post_ : ndarray
        Log-likelihood at the start and end of every MM sweep.
    clip_gap_ : float
        Log-likelihood of the clipped estimate minus that of the unclipped
        factor model, on the revealed entries.
    """

    def __init__(self, rank=3, lower=1e-3, upper=1e3, max_sweeps=200, tol=1e-8,
                 init="random", random_state=None):
        self.rank = rank
        self.lower = lower
        self.upper = upper
        self.max_sweeps = max_sweeps
        self.tol = tol
        self.init = init
        self.random_state = random_state

    _EPS = 1e-300

    def _check_params(self):
        super()._check_params()
        if not (0 < self.lower <= self.upper):
            raise ValueError("need 0 < lower <= upper")

    def _setup(self, mask, values):
        if (values < 0).any() or not np.array_equal(values, np.round(values)):
            raise ValueError("Poisson counts must be nonnegative integers")

    def _init_factors(self, mask, values, rng):
        factors = [rng.uniform(0.1, 1.0, size=(n, self.rank)) for n in mask.dims]
        mean = max(float(values.mean()), self.lower)
        model_mean = float(np.prod([U.mean(axis=0) for U in factors], axis=0).sum())
        s = (mean / model_mean) ** (1.0 / len(factors))
        return [U * s for U in factors]

    def _loglik(self, Z, values):
        safe = np.maximum(Z, self._EPS)
        return float(np.where(values > 0, values * np.log(safe), 0.0).sum() - Z.sum())

    def _init_state(self, modes, factors, values):
        return {"pre": [], "post": [], "rescaled": False, "n_rescales": 0}

    def _objective(self, modes, factors, values, state):
        return -self._loglik(modes.model_values(factors), values)

    def _mm_sweep(self, modes, factors, values):
        for j in range(len(factors)):
            K = modes.khatri_rows(factors, j)
            Z = np.einsum("er,er->e", factors[j][modes.idx[:, j]], K)
            ratio = np.where(values > 0, values / np.maximum(Z, self._EPS), 0.0)
            num = np.asarray(modes.scatter[j] @ (K * ratio[:, None]))
            den = np.asarray(modes.scatter[j] @ K)
            upd = np.where(den > 0, num / np.where(den > 0, den, 1.0), 1.0)
            factors[j] = factors[j] * upd
        return factors

    def _box_rescale(self, factors):
        dense = cp_to_dense(factors)
        zmin, zmax = float(dense.min()), float(dense.max())
        if zmin >= self.lower and zmax <= self.upper:
            return factors, False
        lo = self.lower / zmin if zmin > 0 else np.inf
        hi = self.upper / zmax if zmax > 0 else np.inf
        if not np.isfinite(lo) and not np.isfinite(hi):
            return factors, False
        if lo <= hi:
            s = min(max(1.0, lo), hi)
        elif np.isfinite(lo):
            s = math.sqrt(lo * hi)
        else:
            s = hi
        if not np.isfinite(s) or s == 1.0:
            return factors, False
        factors = list(factors)
        factors[0] = factors[0] * s
        return factors, True

    def _sweep(self, modes, factors, values, state):
        state["pre"].append(self._loglik(modes.model_values(factors), values))
        factors = self._mm_sweep(modes, factors, values)
        state["post"].append(self._loglik(modes.model_values(factors), values))
        factors, state["rescaled"] = self._box_rescale(factors)
        state["n_rescales"] += int(state["rescaled"])
        return factors, state

    def _finalize(self, modes, factors, values, state):
        if state["rescaled"]:
            state["pre"].append(self._loglik(modes.model_values(factors), values))
            factors = self._mm_sweep(modes, factors, values)
            state["post"].append(self._loglik(modes.model_values(factors), values))
        state["unclipped_loglik"] = self._loglik(modes.model_values(factors), values)
        state["mask"] = modes.mask
        state["values"] = values
        return factors, state

    def _estimate(self, factors, state):
        raw = cp_to_dense(factors)
        est = np.clip(raw, self.lower, self.upper)
        clipped = est[state["mask"].index_tuple()]
        state["clipped_loglik"] = self._loglik(clipped, state["values"])
        return est

    def _store_state(self, state):
        self.loglik_pre_ = np.array(state["pre"])
        self.loglik_post_ = np.array(state["post"])
        self.n_rescales_ = state["n_rescales"]
        self.clip_gap_ = state["clipped_loglik"] - state["unclipped_loglik"]


ALGORITHMS = {
    "ridge": RidgeCompletion,
    "ridge-proj": ProjectedRidgeCompletion,
    "maxq": MaxQnormCompletion,
    "poisson": PoissonCompletion,
}


@dataclass
class SolverConfig:
    """Hyperparameters shared by the functional solver entry points.

    Defaults for ``ridge_weight``, ``coupling``, ``slack_weight`` and the
    radius rule ``0.05 * sqrt(|E|)`` (``residual_radius=None``) follow the
    published experiment settings.
    """

    fit_rank: int = 10
    ridge_weight: float = 0.01
    residual_radius: float = None
    coupling: float = 100.0
    slack_weight: float = 1.0
    max_sweeps: int = 100
    inner_tol: float = 1e-8
    init_mode: str = "svdrand"
    rebalance: bool = True
    poisson_lower: float = 1e-3
    poisson_upper: float = 1e3
    seed: int = 0

    def estimator(self, algo):
        common = dict(rank=self.fit_rank, max_sweeps=self.max_sweeps, tol=self.inner_tol,
                      random_state=self.seed)
        if algo == "ridge":
            return RidgeCompletion(ridge_weight=self.ridge_weight, init=self.init_mode, **common)
        if algo in ("ridge-proj", "maxq"):
            cls = ALGORITHMS[algo]
            return cls(delta=self.residual_radius, kappa=self.coupling, beta=self.slack_weight,
                       init=self.init_mode, rebalance=self.rebalance, **common)
        if algo == "poisson":
            return PoissonCompletion(lower=self.poisson_lower, upper=self.poisson_upper, **common)
        raise ValueError(f"unknown algorithm {algo!r}; choose from {sorted(ALGORITHMS)}")


@dataclass
class SolverResult:
    factors: CpFactors
    estimate: np.ndarray
    objective_trace: list
    sweeps_used: int
    converged: bool
    info: dict = field(default_factory=dict)


def _solve(algo, observed, mask, cfg):
    cfg = cfg or SolverConfig()
    est = cfg.estimator(algo).fit(observed, mask)
    info = {"init_mode": cfg.init_mode, "rebalance": cfg.rebalance}
    if hasattr(est, "slack_norm_"):
        info.update(delta=est.delta_, slack_norm=est.slack_norm_)
    if algo == "poisson":
        info.update(clip_gap=est.clip_gap_, n_rescales=est.n_rescales_)
    return SolverResult(
        factors=est.factors_,
        estimate=est.estimate_,
        objective_trace=est.objective_trace_.tolist(),
        sweeps_used=est.n_sweeps_,
        converged=est.converged_,
        info=info,
    )


def solve_ridge(observed, mask, cfg=None):
    return _solve("ridge", observed, mask, cfg)


def solve_ridge_projected(observed, mask, cfg=None):
    return _solve("ridge-proj", observed, mask, cfg)


def solve_maxqnorm(observed, mask, cfg=None):
    return _solve("maxq", observed, mask, cfg)


def solve_poisson(counts, mask, cfg=None):
    return _solve("poisson", counts, mask, cfg)
