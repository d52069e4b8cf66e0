import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgtc.graphs import base_graph, ring_graph, second_eigenvalue, switch_chain
from sgtc.masks import (
    SamplingMask,
    adjacency_tensor,
    discrepancy,
    estimate_lambda2,
    grid_mask,
    lift_graph,
    shuffle_mask,
)


def dense_centered(mask):
    return adjacency_tensor(mask) - mask.fraction


def test_lift_three_cycle():
    m = lift_graph(ring_graph(3, 2), 3)
    assert m.size == 12
    assert adjacency_tensor(m).sum() == 12


def test_lift_t2_is_ordered_edges():
    g = ring_graph(7, 4)
    m = lift_graph(g, 2)
    np.testing.assert_array_equal(adjacency_tensor(m), g.adjacency())


@settings(max_examples=25, deadline=None)
@given(st.integers(6, 12), st.sampled_from([2, 3, 4]), st.integers(2, 4), st.integers(0, 2**31))
def test_lift_regularity(n, d, t, seed):
    if d % 2 and n % 2:
        n += 1
    g = switch_chain(base_graph(n, d), 10, seed=seed)
    m = lift_graph(g, t)
    assert m.size == n * d ** (t - 1)
    for k in range(t):
        assert (m.mode_degrees(k) == d ** (t - 1)).all()
    # every consecutive pair is an edge
    A = g.adjacency()
    for k in range(t - 1):
        assert A[m.indices[:, k], m.indices[:, k + 1]].all()


def test_n100_lifted_density():
    m = lift_graph(base_graph(100, 15), 3)
    assert m.fraction == pytest.approx(0.0225)


def test_grid_examples():
    assert grid_mask((3, 4), 1.0).size == 12
    m = grid_mask((2, 2), 0.5)
    np.testing.assert_array_equal(m.linear(), [0, 2])
    np.testing.assert_array_equal(m.indices, [[0, 0], [1, 0]])
    assert grid_mask((100, 100, 100), 0.05).size == 50_000
    with pytest.raises(ValueError):
        grid_mask((3, 3), 0.01)


def test_mask_validation():
    with pytest.raises(ValueError):
        SamplingMask((2, 2), np.zeros((0, 2), dtype=int))
    with pytest.raises(ValueError):
        SamplingMask((2, 2), [[0, 0], [0, 0]])
    with pytest.raises(ValueError):
        SamplingMask((2, 2), [[0, 2]])
    m = SamplingMask((3, 3), [[2, 1], [0, 2]])
    np.testing.assert_array_equal(m.indices, [[0, 2], [2, 1]])


def test_shuffle_fraction_zero_and_one():
    base = grid_mask((10, 10, 10), 0.05)
    assert shuffle_mask(base, 0.0, seed=0) == base
    full = shuffle_mask(base, 1.0, seed=0)
    assert full.size == base.size
    assert full != base


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 1), st.integers(0, 2**31))
def test_shuffle_preserves_size_and_is_deterministic(frac, seed):
    base = grid_mask((6, 7, 5), 0.1)
    a = shuffle_mask(base, frac, seed=seed)
    assert a.size == base.size
    assert a == shuffle_mask(base, frac, seed=seed)
    moved = np.setdiff1d(base.linear(), a.linear()).size
    assert moved <= int(np.ceil(frac * base.size))


def test_adjacency_budget():
    with pytest.raises(MemoryError):
        adjacency_tensor(grid_mask((100, 100, 100), 0.01), max_entries=10_000)


def test_full_mask_gap_is_zero():
    assert estimate_lambda2(grid_mask((4, 4, 4), 1.0)) == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_matrix_case_matches_svd(seed):
    m = shuffle_mask(grid_mask((15, 12), 0.25), 0.6, seed=seed)
    exact = np.linalg.norm(dense_centered(m), 2)
    est = estimate_lambda2(m, restarts=16, sweeps=3000, tol=1e-14, seed=seed)
    assert est == pytest.approx(exact, abs=1e-4)


def test_estimate_is_lower_bound_of_dense_refinement():
    m = shuffle_mask(grid_mask((5, 5, 5), 0.2), 0.5, seed=1)
    est, vecs = estimate_lambda2(m, restarts=8, seed=3, return_vectors=True)
    C = dense_centered(m)
    value = abs(np.einsum("ijk,i,j,k->", C, *vecs))
    assert value == pytest.approx(est, rel=1e-6)


def test_estimate_deterministic_and_monotone_in_restarts():
    m = shuffle_mask(grid_mask((6, 6, 6), 0.1), 0.3, seed=2)
    vals = [estimate_lambda2(m, restarts=k, seed=11, sweeps=60) for k in (1, 2, 4, 8)]
    assert vals == sorted(vals)
    assert vals[-1] == estimate_lambda2(m, restarts=8, seed=11, sweeps=60)


def test_grid_gap_exceeds_shuffled():
    base = grid_mask((20, 20, 20), 0.05)
    grid = estimate_lambda2(base, seed=0)
    shuffled = np.mean([estimate_lambda2(shuffle_mask(base, 1.0, seed=s), seed=s) for s in range(5)])
    assert grid > shuffled


def test_discrepancy_cases():
    rng = np.random.default_rng(0)
    m = grid_mask((4, 4, 4), 0.3)
    assert discrepancy(np.full((4, 4, 4), 2.5), m) == pytest.approx(0.0, abs=1e-15)
    assert discrepancy(rng.standard_normal((4, 4, 4)), grid_mask((4, 4, 4), 1.0)) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        discrepancy(np.ones((3, 3, 3)), m)


def test_discrepancy_on_ten_cycle_lift():
    g = ring_graph(10, 4)
    m = lift_graph(g, 3)
    lam = second_eigenvalue(g)
    rng = np.random.default_rng(4)
    # J is an atom, so the Kronecker inequality bounds ||T|| by the core norm
    from sgtc.atomic import atomic_norm

    core = rng.standard_normal((2, 2, 2))
    T = np.kron(core, np.ones((5, 5, 5)))
    assert discrepancy(T, m) <= 2 * 3 * lam / 4 * atomic_norm(core).value + 1e-12
