import numpy as np
import pytest
from scipy.optimize import linprog

from sgtc._simplex import LPError, revised_simplex


def _l1_problem(rng, m, n):
    A = rng.standard_normal((m, n))
    b = rng.standard_normal(m)
    A_split = np.hstack([A, -A, np.eye(m), -np.eye(m)])
    b = b.copy()
    # identity slack columns make a feasible start
    basis = np.where(b >= 0, 2 * n + np.arange(m), 2 * n + m + np.arange(m))
    c = np.concatenate([np.ones(2 * n), np.full(2 * m, 1e3)])
    return c, A_split, b, basis


@pytest.mark.parametrize("seed", range(10))
def test_matches_highs(seed):
    rng = np.random.default_rng(seed)
    c, A, b, basis = _l1_problem(rng, 5, 12)
    res = revised_simplex(c, A, b, basis)
    ref = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    assert res.value == pytest.approx(ref.fun, rel=1e-9, abs=1e-9)
    np.testing.assert_allclose(A @ res.x, b, atol=1e-9)
    assert (res.x >= -1e-12).all()


def test_degenerate_problem_terminates():
    # many ties in the ratio test; Bland's rule must not cycle
    A = np.array([[1.0, 1, 1, 0, 0], [1, -1, 0, 1, 0], [1, 0, 0, 0, 1]])
    b = np.array([0.0, 0.0, 0.0])
    c = np.array([-1.0, 0, 0, 0, 0])
    res = revised_simplex(c, A, b, np.array([2, 3, 4]))
    assert res.value == pytest.approx(0.0)


def test_unbounded_raises():
    A = np.array([[1.0, -1.0]])
    with pytest.raises(LPError):
        revised_simplex(np.array([0.0, -1.0]), A, np.array([1.0]), np.array([0]))
