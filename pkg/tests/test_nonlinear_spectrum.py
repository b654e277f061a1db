import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tfe_focus.errors import EigenvalueNotFound, IndeterminateResidual, ParameterError
from tfe_focus.nonlinear_spectrum import (Branch, BranchPoint, approximate_eigenvalue,
                                          branch_slope, minimal_growth_residual, nonlinear_start,
                                          solve_branch_point, trace_branch)
from tfe_focus.radial_ode import Trajectory, derive_params


def exact_first(n):
    """f = y^2/2 has zero flux, so alpha f = beta y f' forces alpha = 2 beta = 1/(2 - n)."""
    return 1.0 / (2.0 - n)


def power_trajectory(params, C, p, y):
    f = C * y**p
    df = C * p * y ** (p - 1)
    z = np.zeros_like(y)
    return Trajectory(y=y, f=f, df=df, lap=z, flux=z, log_scale=z, params=params)


# ---- residual -----------------------------------------------------------------------

@settings(max_examples=50, deadline=None)
@given(n=st.floats(0.01, 1.5), alpha=st.floats(0.1, 3), C=st.floats(-10, 10).filter(lambda c: abs(c) > 1e-3))
def test_residual_vanishes_on_minimal_growth(n, alpha, C):
    p = derive_params(n, 1, alpha)
    y = np.array([20.0, 40.0])
    traj = power_trajectory(p, C, p.mu, y)
    assert minimal_growth_residual(p, traj, 40.0) == pytest.approx(0.0, abs=1e-12)
    assert minimal_growth_residual(p, traj, 40.0, "envelope") == pytest.approx(0.0, abs=1e-10 * abs(C))


@settings(max_examples=50, deadline=None)
@given(n=st.floats(0.05, 1.5), alpha=st.floats(0.1, 3))
def test_residual_on_maximal_envelope_is_positive(n, alpha):
    p = derive_params(n, 1, alpha)
    y = np.array([5.0, 10.0])
    traj = power_trajectory(p, 1.0, 4.0 / n, y)
    r = minimal_growth_residual(p, traj, 10.0)
    assert r == pytest.approx(4 * p.beta / n - alpha, rel=1e-10)
    assert r > 0


def test_literal_variant_does_not_vanish():
    p = derive_params(0.2, 1, 0.8)
    traj = power_trajectory(p, 1.0, p.mu, np.array([40.0]))
    lit = minimal_growth_residual(p, traj, 40.0, "literal")
    assert lit == pytest.approx(p.mu**2 - p.alpha, rel=1e-12)


def test_residual_indeterminate_and_bad_variant():
    p = derive_params(0.2, 1, 0.8)
    traj = power_trajectory(p, 0.0, p.mu, np.array([40.0]))
    with pytest.raises(IndeterminateResidual):
        minimal_growth_residual(p, traj, 40.0)
    with pytest.raises(ParameterError):
        minimal_growth_residual(p, power_trajectory(p, 1.0, 1.0, np.array([40.0])), 40.0, "other")


def test_residual_changes_sign_across_eigenvalue():
    from tfe_focus.radial_ode import integrate
    values = []
    alphas = [0.50, 0.51, 0.52, 0.53, 0.54, 0.55]
    for a in alphas:
        p = derive_params(0.1, 1, a)
        traj = integrate(p, nonlinear_start(p, "sh2"), 30.0, samples=[30.0])
        values.append(minimal_growth_residual(p, traj, 30.0, "envelope"))
    s = np.sign(values)
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    assert len(idx) == 1
    assert alphas[idx[0]] < exact_first(0.1) < alphas[idx[0] + 1]


# ---- origin start -----------------------------------------------------------------------

def test_nonlinear_start_free_datum():
    p = derive_params(0.1, 1, 1.0)
    s = nonlinear_start(p, "sh1", nu=0.3)
    assert (s.f0, s.f2) == (1.0, 0.3)
    assert s.series[1] == pytest.approx(0.15)
    with pytest.raises(ParameterError):
        nonlinear_start(p, "sh3")


# ---- single points ----------------------------------------------------------------------

def test_point_continuity_at_small_n():
    pt = solve_branch_point(1e-3, 1, 1)
    assert abs(pt.alpha - 0.5) <= 1e-2
    assert pt.alpha == pytest.approx(exact_first(1e-3), abs=1e-6)


def test_point_near_approximation():
    pt = solve_branch_point(0.2, 1, 1)
    assert pt.alpha == pytest.approx(0.5 / 0.9, rel=0.1)
    assert pt.alpha == pytest.approx(exact_first(0.2), abs=1e-6)
    assert pt.exponent_ok
    assert not pt.delta_sensitive
    assert abs(pt.radius_shift) < 1e-10
    assert abs(pt.residual) <= 1e-6


def test_point_dimension_independent():
    a1 = solve_branch_point(0.2, 1, 1).alpha
    a3 = solve_branch_point(0.2, 3, 1).alpha
    assert abs(a1 - a3) <= 1e-3


def test_even_branch_alpha_only_fails_distinctly():
    # with f''(0) pinned to 0 there is no eigenfunction for n > 0: the solver must say so
    with pytest.raises(EigenvalueNotFound):
        solve_branch_point(0.01, 1, 2)


def test_even_branch_free_datum_small_n():
    pts = [solve_branch_point(n, 1, 2, free_datum=True, y_star=30.0) for n in (1e-3, 1e-2)]
    assert abs(pts[0].alpha - 1.0) <= 1e-2
    assert pts[0].alpha < pts[1].alpha
    for pt in pts:
        assert pt.alpha == pytest.approx(approximate_eigenvalue(2, pt.n), rel=0.1)
        assert pt.nu > 0
        assert abs(pt.radius_shift) <= 1e-3 * pt.alpha


@pytest.mark.parametrize("kwargs", [dict(n=0.0), dict(n=2.0), dict(k=0), dict(delta=-1.0),
                                    dict(alpha_guess=-0.5)])
def test_point_rejects_bad_input(kwargs):
    args = dict(n=0.1, N=1, k=1)
    args.update(kwargs)
    with pytest.raises(ParameterError):
        solve_branch_point(**args)


# ---- branches -----------------------------------------------------------------------------

def test_trace_first_branch_monotone():
    grid = [1e-3, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5]
    br = trace_branch(1, 1, grid)
    assert br.failure is None
    assert np.all(np.diff(br.alpha) > 0)
    assert np.allclose(br.alpha, [exact_first(n) for n in grid], atol=1e-6)


def test_trace_slope_near_alpha_squared():
    br = trace_branch(1, 1, [1e-3, 0.01, 0.02, 0.03, 0.05])
    assert br.slope_estimate == pytest.approx(0.25, abs=1e-2)


@pytest.mark.parametrize("grid", [[], [0.01, 0.1], [1e-3, 0.1, 0.05], [0.0, 0.1], [1e-3, 0.5, 1.5]])
def test_trace_rejects_bad_grid(grid):
    with pytest.raises(ParameterError):
        trace_branch(1, 2, grid)


def test_trace_records_first_failure():
    br = trace_branch(1, 2, [1e-3, 0.01])
    assert br.failure is not None and br.failure.startswith("n=0.001")
    assert len(br.points) == 0


def _synthetic(k, ns, alphas):
    return Branch(k=k, N=1, points=[BranchPoint(n=n, alpha=a, kind="sh2", delta=0.0, y_star=40.0,
                                                residual=0.0) for n, a in zip(ns, alphas)])


def test_slope_exact_linear_data():
    ns = np.array([0.01, 0.02, 0.03, 0.04])
    assert branch_slope(_synthetic(1, ns, 0.5 + 0.25 * ns)) == pytest.approx(0.25, abs=1e-14)


def test_slope_of_approximation_formula():
    ns = np.array([0.01, 0.02, 0.03])
    assert branch_slope(_synthetic(1, ns, 0.5 / (1 - 0.5 * ns))) == pytest.approx(0.25, abs=1e-2)


def test_slope_constant_branch():
    ns = np.array([0.01, 0.02, 0.03])
    assert branch_slope(_synthetic(2, ns, np.ones(3))) == 0.0


def test_slope_needs_three_small_points():
    with pytest.raises(ParameterError):
        branch_slope(_synthetic(1, [0.01, 0.02, 0.1], [0.5, 0.5, 0.5]))


def test_approximation_formula():
    assert approximate_eigenvalue(1, 0.2) == pytest.approx(0.5 / 0.9)
    with pytest.raises(ParameterError):
        approximate_eigenvalue(2, 1.0)
