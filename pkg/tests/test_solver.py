"""Portfolio solvers: closed forms, grid oracles, KKT diagnostics, edge cases."""

import numpy as np
import pytest

from conftest import random_monthly_cov, random_spd
from portopt import (
    ConstraintSet,
    DegenerateSharpeError,
    InfeasibleError,
    SingularMatrixError,
    ValidationError,
    attainable_return_range,
    check_feasible,
    closed_form_min_variance,
    closed_form_tangency,
    kkt_residual,
    solve_max_sharpe,
    solve_min_variance,
    solve_target_return,
)
from portopt.solver import kkt_residual_weights

C3 = ConstraintSet("c3")
C4 = ConstraintSet("c4")


def simplex_grid(step=0.01):
    k = round(1.0 / step)
    ii, jj = np.meshgrid(np.arange(k + 1), np.arange(k + 1))
    mask = ii + jj <= k
    return np.column_stack([ii[mask], jj[mask], k - ii[mask] - jj[mask]]) / k


def test_closed_form_min_variance_diag():
    w = closed_form_min_variance(np.diag([0.01, 0.04]))
    assert np.allclose(w, [0.8, 0.2], atol=1e-14)


def test_closed_form_min_variance_identity():
    w = closed_form_min_variance(np.eye(4))
    assert np.allclose(w, 0.25, atol=1e-14)


def test_closed_form_tangency_diag():
    w = closed_form_tangency(np.diag([0.01, 0.04]), [0.01, 0.02], 0.0)
    assert np.allclose(w, [2.0 / 3.0, 1.0 / 3.0], atol=1e-14)


def test_closed_form_tangency_collinear_equals_min_variance():
    # constant excess return: tangency direction is the min-variance direction
    rng = np.random.default_rng(0)
    cov = random_spd(rng, 5)
    rf = 0.02
    mean = rf + 0.03 * np.ones(5)
    assert np.allclose(
        closed_form_tangency(cov, mean, rf), closed_form_min_variance(cov),
        atol=1e-12,
    )


def test_closed_form_singular_rejected():
    singular = np.array([[0.04, 0.04], [0.04, 0.04]])
    with pytest.raises(SingularMatrixError):
        closed_form_min_variance(singular)
    with pytest.raises(SingularMatrixError):
        closed_form_tangency(singular, [0.01, 0.02], 0.0)


def test_tangency_zero_normalizer():
    cov = np.diag([0.01, 0.01])
    # excess (a, -a): C^-1 excess sums to zero
    with pytest.raises(DegenerateSharpeError):
        closed_form_tangency(cov, [0.01, -0.01], 0.0)


def test_min_variance_diag_qp():
    sol = solve_min_variance(np.diag([0.01, 0.04]), C3)
    assert np.allclose(sol.weights, [0.8, 0.2], atol=1e-12)
    assert sol.stats.stdev ** 2 == pytest.approx(0.008, abs=1e-15)
    assert sol.converged and sol.kkt_residual <= 1e-10


def test_min_variance_identity_equal_weights():
    sol = solve_min_variance(np.eye(5), C3)
    assert np.allclose(sol.weights, 0.2, atol=1e-12)


def test_min_variance_qp_matches_closed_form_random():
    rng = np.random.default_rng(1)
    cov = random_spd(rng, 5)
    assert np.allclose(
        solve_min_variance(cov, C3).weights, closed_form_min_variance(cov),
        atol=1e-8,
    )


def test_max_sharpe_diag_example():
    sol = solve_max_sharpe(np.diag([0.01, 0.04]), [0.01, 0.02], 0.0, C3)
    assert np.allclose(sol.weights, [2.0 / 3.0, 1.0 / 3.0], atol=1e-10)
    assert sol.stats.sharpe == pytest.approx(0.14142, abs=1e-5)


def test_max_sharpe_duplicate_assets_objective_unique():
    # identical assets: the split is arbitrary but the Sharpe is pinned
    cov = np.array([[0.04, 0.04], [0.04, 0.04]])
    mean = np.array([0.01, 0.01])
    sol = solve_max_sharpe(cov, mean, 0.002, C3)
    single = (0.01 - 0.002) / 0.2
    assert sol.stats.sharpe == pytest.approx(single, rel=1e-6)
    assert sol.regularization > 0.0


def test_max_sharpe_c4_beats_grid():
    rng = np.random.default_rng(2)
    for _ in range(5):
        cov = random_monthly_cov(rng, 3)
        mean = rng.normal(0.008, 0.01, 3)
        mean[rng.integers(3)] = 0.015
        rf = 0.002
        grid = simplex_grid()
        var = np.einsum("ij,jk,ik->i", grid, cov, grid)
        best = (((grid @ mean) - rf) / np.sqrt(var)).max()
        sol = solve_max_sharpe(cov, mean, rf, C4)
        assert sol.stats.sharpe >= best - 1e-6


def test_min_variance_c4_beats_grid():
    rng = np.random.default_rng(3)
    for _ in range(5):
        cov = random_monthly_cov(rng, 3)
        grid = simplex_grid()
        best = np.einsum("ij,jk,ik->i", grid, cov, grid).min()
        sol = solve_min_variance(cov, C4)
        assert sol.stats.stdev ** 2 <= best + 1e-6


def test_target_return_at_min_variance_is_free():
    rng = np.random.default_rng(4)
    cov = random_spd(rng, 4)
    mean = rng.normal(0.5, 0.1, 4)
    mv = solve_min_variance(cov, C3, mean=mean)
    sol = solve_target_return(cov, mean, mv.stats.ret, C3)
    assert np.allclose(sol.weights, mv.weights, atol=1e-8)


def test_target_return_endpoint_unique_solution():
    sol = solve_target_return(np.diag([0.01, 0.04]), [0.01, 0.02], 0.02, C3)
    assert np.allclose(sol.weights, [0.0, 1.0], atol=1e-9)


def test_target_return_infeasible_names_interval():
    with pytest.raises(InfeasibleError, match=r"\[0.01, 0.02\]"):
        solve_target_return(np.diag([0.01, 0.04]), [0.01, 0.02], 0.05, C4)


def test_attainable_range_per_regime():
    mean = np.array([0.01, 0.02, 0.03])
    lo, hi = attainable_return_range(mean, C4)
    assert (lo, hi) == (pytest.approx(0.01), pytest.approx(0.03))
    lo, hi = attainable_return_range(mean, C3)
    assert lo == -np.inf and hi == np.inf
    lo, hi = attainable_return_range(mean, ConstraintSet("c1"))
    # gross cap 2: long 1.5 units of best, short 0.5 of worst
    assert hi == pytest.approx(1.5 * 0.03 - 0.5 * 0.01, abs=1e-9)
    lo, hi = attainable_return_range(mean, ConstraintSet("c2"))
    # +1 best, +1 middle, -1 worst
    assert hi == pytest.approx(0.03 + 0.02 - 0.01, abs=1e-9)


def test_c5_market_weight_exactly_zero():
    rng = np.random.default_rng(5)
    cov = random_monthly_cov(rng, 6)
    mean = rng.normal(0.01, 0.008, 6)
    mean[0] = 0.02
    c5 = ConstraintSet("c5", market_index=5)
    for sol in (
        solve_min_variance(cov, c5, mean=mean),
        solve_max_sharpe(cov, mean, 0.002, c5),
        solve_target_return(cov, mean, float(mean[:5].mean()), c5),
    ):
        assert sol.weights[5] == 0.0
        assert sol.converged


def test_homogenization_consistency_feasible_and_same_sharpe():
    rng = np.random.default_rng(6)
    for regime in ("c1", "c2", "c4"):
        cov = random_monthly_cov(rng, 5)
        mean = rng.normal(0.01, 0.01, 5)
        mean[0] = 0.02
        rf = 0.002
        c = ConstraintSet(regime)
        sol = solve_max_sharpe(cov, mean, rf, c)
        assert check_feasible(sol.weights, c, tol=1e-7).feasible
        direct = (float(mean @ sol.weights) - rf) / np.sqrt(
            float(sol.weights @ cov @ sol.weights))
        assert sol.stats.sharpe == pytest.approx(direct, abs=1e-12)


def test_max_sharpe_dominates_sampled_portfolios():
    rng = np.random.default_rng(7)
    cov = random_monthly_cov(rng, 5)
    mean = rng.normal(0.01, 0.01, 5)
    mean[2] = 0.02
    rf = 0.002
    sol = solve_max_sharpe(cov, mean, rf, C4)
    samples = rng.dirichlet(np.ones(5), size=500)
    sh = ((samples @ mean) - rf) / np.sqrt(
        np.einsum("ij,jk,ik->i", samples, cov, samples))
    assert sol.stats.sharpe >= sh.max() - 1e-8


def test_scale_invariance_of_max_sharpe():
    rng = np.random.default_rng(8)
    cov = random_spd(rng, 4)
    mean = rng.normal(0.5, 0.1, 4)
    rf = 0.1
    if np.linalg.solve(cov, mean - rf).sum() < 0.2:
        pytest.skip("degenerate draw")
    for c in (C3, ConstraintSet("c1"), ConstraintSet("c2"), C4):
        w1 = solve_max_sharpe(cov, mean, rf, c).weights
        w2 = solve_max_sharpe(5.0 * cov, mean, rf, c).weights
        assert np.max(np.abs(w1 - w2)) < 1e-8


def test_degenerate_sharpe_under_long_only():
    cov = np.diag([0.01, 0.04])
    with pytest.raises(DegenerateSharpeError):
        solve_max_sharpe(cov, [0.001, 0.002], 0.01, C4)


def test_non_psd_rejected():
    bad = np.array([[1.0, 2.0], [2.0, 1.0]])   # eigenvalues 3, -1
    with pytest.raises(ValidationError):
        solve_min_variance(bad, C3)


def test_asymmetric_rejected():
    bad = np.array([[1.0, 0.5], [0.1, 1.0]])
    with pytest.raises(ValidationError):
        solve_min_variance(bad, C3)


def test_kkt_residual_exact_solution_tiny():
    cov = np.diag([0.01, 0.04])
    sol = solve_min_variance(cov, C3)
    assert kkt_residual(sol, cov) < 1e-10


def test_kkt_residual_grows_off_optimum():
    cov = np.diag([0.01, 0.04])
    base = kkt_residual_weights(np.array([0.8, 0.2]), cov, C3)
    moved = kkt_residual_weights(np.array([0.8 + 1e-3, 0.2 - 1e-3]), cov, C3)
    assert moved > base
    assert moved > 1e-6 * 0.01  # gradient component is visible


def test_kkt_residual_flags_infeasibility():
    cov = np.diag([0.01, 0.04])
    res = kkt_residual_weights(np.array([1.5, 0.5]), cov, C3)
    assert res >= 1.0 - 1e-12   # full-investment violated by 1.0


def test_kkt_residual_public_max_sharpe_path():
    rng = np.random.default_rng(9)
    cov = random_monthly_cov(rng, 4)
    mean = rng.normal(0.01, 0.01, 4)
    mean[0] = 0.02
    sol = solve_max_sharpe(cov, mean, 0.002, C4)
    assert kkt_residual(sol, cov, mean=mean, rf=0.002) <= 1e-6


def test_variance_convex_in_target():
    rng = np.random.default_rng(10)
    cov = random_monthly_cov(rng, 4)
    mean = rng.normal(0.01, 0.008, 4)
    mean[1] = 0.02
    mv = solve_min_variance(cov, C4, mean=mean)
    t0, t2 = mv.stats.ret, float(mean.max()) - 1e-9
    t1 = 0.5 * (t0 + t2)
    v = [solve_target_return(cov, mean, t, C4).stats.stdev ** 2 for t in (t0, t1, t2)]
    assert v[1] <= 0.5 * (v[0] + v[2]) + 1e-12


# -- property tests -----------------------------------------------------

from hypothesis import given, settings  # noqa: E402
from hypothesis import strategies as st  # noqa: E402


@st.composite
def spd_problems(draw):
    n = draw(st.integers(min_value=2, max_value=6))
    entries = draw(st.lists(
        st.lists(st.floats(-1.0, 1.0, allow_nan=False), min_size=n, max_size=n),
        min_size=n, max_size=n,
    ))
    a = np.array(entries)
    cov = a @ a.T / n + 0.5 * np.eye(n)
    mean = np.array(draw(st.lists(
        st.floats(-0.05, 0.08, allow_nan=False), min_size=n, max_size=n)))
    return cov, mean


@given(spd_problems())
@settings(max_examples=40, deadline=None)
def test_min_variance_never_beaten_by_equal_weights(problem):
    cov, _ = problem
    n = cov.shape[0]
    sol = solve_min_variance(cov, C3)
    assert sol.converged
    assert abs(float(sol.weights.sum()) - 1.0) < 1e-9
    ew = np.full(n, 1.0 / n)
    assert sol.stats.stdev ** 2 <= float(ew @ cov @ ew) + 1e-12


@given(spd_problems())
@settings(max_examples=40, deadline=None)
def test_long_only_solution_feasible_and_dominant(problem):
    cov, mean = problem
    n = cov.shape[0]
    sol = solve_min_variance(cov, C4, mean=mean)
    assert sol.converged
    assert check_feasible(sol.weights, C4, tol=1e-7).feasible
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        assert sol.stats.stdev ** 2 <= cov[i, i] + 1e-12


def test_solution_json_shape():
    cov = np.diag([0.01, 0.04])
    sol = solve_min_variance(cov, C3, mean=[0.01, 0.02], rf=0.001)
    d = sol.to_json_dict(("A", "B"))
    assert set(d) == {
        "weights", "return", "stdev", "sharpe", "model", "objective",
        "constraint", "kkt_residual", "iterations", "converged",
        "regularization_applied",
    }
    assert d["weights"]["A"] == pytest.approx(0.8)
    sol_no_mean = solve_min_variance(cov, C3)
    assert sol_no_mean.to_json_dict()["return"] is None
