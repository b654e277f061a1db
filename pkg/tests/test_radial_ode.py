from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tfe_focus.errors import DegenerateOrigin, ParameterError, SingularMobility
from tfe_focus.linear_spectrum import eigenfunction_oracle, polynomial_value
from tfe_focus.radial_ode import (RadialState, derive_params, focusing_trace, integrate,
                                  origin_series, reconstruct_solution, regularized_mobility,
                                  rhs, series_coefficients, shoot)
from tfe_focus.output import write_trajectory


# ---- parameters -------------------------------------------------------------

def test_params_linear_half():
    p = derive_params(0.0, 1, 0.5)
    assert p.beta == 0.25 and p.mu == 2.0


@pytest.mark.parametrize("N", [1, 2, 5])
def test_params_linear_mu_is_4alpha(N):
    assert derive_params(0.0, N, 0.8).mu == pytest.approx(3.2, abs=1e-15)


def test_params_direct_formula():
    p = derive_params(0.5, 3, 0.5)
    assert p.beta == pytest.approx(0.3125, abs=1e-15)
    assert p.mu == pytest.approx(1.6, abs=1e-15)


@pytest.mark.parametrize("args", [(2.0, 1, 0.5), (-0.1, 1, 0.5), (0.1, 1, 0.0), (0.1, 0, 0.5),
                                  (0.1, 1.5, 0.5), (0.1, 1, -1.0)])
def test_params_rejects_invalid(args):
    with pytest.raises(ParameterError):
        derive_params(*args)


@settings(max_examples=200, deadline=None)
@given(n=st.floats(0, 1.999), alpha=st.floats(1e-3, 50), N=st.integers(1, 6))
def test_exponent_identities(n, alpha, N):
    p = derive_params(n, N, alpha)
    assert 4 * p.beta - alpha * n == pytest.approx(1.0, rel=1e-14)
    assert p.mu * p.beta == pytest.approx(alpha, rel=1e-14)
    if n > 0:
        assert p.mu < 4.0 / n


# ---- right-hand side --------------------------------------------------------

@pytest.mark.parametrize("N", [1, 2, 3])
def test_rhs_flux_stationary_on_first_eigenfunction(N):
    p = derive_params(0.0, N, 0.5)
    d = rhs(p, RadialState(y=2.0, f=2.0, df=2.0, lap=float(N), flux=0.0))
    assert d[3] == 0.0
    assert d[1] == pytest.approx(1.0)  # f'' of y^2/2


def test_rhs_full_residual_second_eigenfunction():
    # f = 1 + y^4/64 with N = 2, alpha = 1; flux = y w' where w = Lap f = y^2/4
    p = derive_params(0.0, 2, 1.0)
    y = 1.0
    f, df = 1 + y**4 / 64, y**3 / 16
    lap, flux = y**2 / 4, y * (y / 2)
    d = rhs(p, RadialState(y, f, df, lap, flux))
    assert d[0] == df
    assert d[1] == pytest.approx(3 * y**2 / 16, abs=1e-15)
    assert d[2] == pytest.approx(y / 2, abs=1e-15)
    # (y w')' = y (alpha f - y f' / 4) must equal d/dy (y^2 / 2) = y
    assert d[3] == pytest.approx(y, abs=1e-15)


def test_rhs_zero_state():
    p = derive_params(0.0, 3, 0.7)
    assert np.all(rhs(p, RadialState(1.5, 0.0, 0.0, 0.0, 0.0)) == 0.0)


def test_rhs_singular_mobility():
    p = derive_params(0.5, 1, 0.5)
    with pytest.raises(SingularMobility):
        rhs(p, RadialState(1.0, 0.0, 0.0, 0.0, 1.0), mobility_floor=0.0)


def test_rhs_rejects_origin():
    with pytest.raises(ParameterError):
        rhs(derive_params(0.0, 1, 0.5), RadialState(0.0, 1.0, 0.0, 0.0, 0.0))


@settings(max_examples=100, deadline=None)
@given(y=st.floats(0.1, 10), f=st.floats(-5, 5), df=st.floats(-5, 5), lap=st.floats(-5, 5),
       flux=st.floats(-5, 5), alpha=st.floats(0.1, 3), n=st.floats(0, 1.5), N=st.integers(1, 4))
def test_focusing_defocusing_duality(y, f, df, lap, flux, alpha, n, N):
    s = RadialState(y, f, df, lap, flux)
    a = rhs(derive_params(n, N, alpha, "focusing"), s, 1e-3)
    b = rhs(derive_params(n, N, alpha, "defocusing"), s, 1e-3)
    assert a[3] + b[3] == pytest.approx(0.0, abs=1e-12 * (1 + abs(a[3])))
    assert np.array_equal(a[:3], b[:3])


# ---- mobility -----------------------------------------------------------------

def test_mobility_examples():
    assert regularized_mobility(0.0, 1.0, 1e-8) == pytest.approx(1e-8, rel=1e-15)
    assert regularized_mobility(2.0, 0.0, 0.3) == 1.0
    assert regularized_mobility(3.0, 2.0, 0.0) == pytest.approx(9.0, rel=1e-15)


@given(f=st.floats(-1e3, 1e3), n=st.floats(0.01, 1.99))
def test_mobility_reduces_to_power(f, n):
    assert regularized_mobility(f, n, 0.0) == pytest.approx(abs(f) ** n, rel=1e-12, abs=1e-300)


@given(f=st.floats(-10, 10), n=st.floats(0.01, 1.99), delta=st.floats(1e-10, 1.0))
def test_mobility_bounded_below_by_power(f, n, delta):
    assert regularized_mobility(f, n, delta) >= abs(f) ** n * (1 - 1e-14)


# ---- origin series ------------------------------------------------------------

def test_series_c4_second_eigenfunction():
    c = series_coefficients(Fraction(1), 2, "sh1", 8)
    assert c[4] == Fraction(1, 64)


def test_series_c6_third_eigenfunction():
    c = series_coefficients(Fraction(3, 2), 1, "sh2", 8)
    assert c[6] == Fraction(1, 720)


def test_series_fourth_eigenfunction():
    c = series_coefficients(Fraction(2), 1, "sh1", 12)
    assert c[4] == Fraction(1, 12) and c[8] == Fraction(1, 20160)
    assert c[12] == 0


@pytest.mark.parametrize("k", [1, 2, 3, 4])
@pytest.mark.parametrize("N", [1, 2, 3])
def test_series_reproduces_closed_forms_exactly(k, N):
    kind = "sh2" if k % 2 else "sh1"
    coeffs = series_coefficients(Fraction(k, 2), N, kind, 2 * k + 6)
    oracle = eigenfunction_oracle(k, N)
    padded = oracle + [Fraction(0)] * (len(coeffs) - len(oracle))
    assert coeffs == padded


def test_origin_series_normalisations():
    p = derive_params(0.0, 2, 0.8)
    s1 = origin_series(p, "sh1")
    s2 = origin_series(p, "sh2")
    assert (s1.f0, s1.f2) == (1.0, 0.0)
    assert (s2.f0, s2.f2) == (0.0, 1.0)


def test_origin_series_degenerate_needs_floor():
    p = derive_params(0.3, 1, 0.5)
    with pytest.raises(DegenerateOrigin):
        origin_series(p, "sh2", 0.0)
    assert origin_series(p, "sh2", 1e-8).degenerate


def test_origin_series_frozen_mobility():
    # for f(0) = 1 the mobility is 1, so only beta changes the recurrence
    p = derive_params(0.2, 1, 1.0)
    s = origin_series(p, "sh1")
    assert s.series[2] == pytest.approx(1.0 / 24.0, rel=1e-15)  # (alpha - 0) / (4*2*3*1)


# ---- integration --------------------------------------------------------------

@pytest.mark.parametrize("N", [1, 2, 4])
def test_integrate_first_eigenfunction(N):
    traj = shoot(0.0, N, 0.5, "sh2", 10.0)
    assert traj.unscaled()[-1] == pytest.approx(50.0, rel=1e-12)


def test_integrate_second_eigenfunction_N1():
    traj = shoot(0.0, 1, 1.0, "sh1", 2.0)
    assert traj.unscaled()[-1] == pytest.approx(5.0 / 3.0, rel=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
@pytest.mark.parametrize("N", [1, 2, 3])
def test_integrate_matches_closed_forms(k, N):
    kind = "sh2" if k % 2 else "sh1"
    ys = np.linspace(1e-3, 5.0, 201)
    traj = shoot(0.0, N, 0.5 * k, kind, 5.0, samples=ys)
    exact = polynomial_value(eigenfunction_oracle(k, N), ys)
    assert np.max(np.abs(traj.unscaled() - exact) / np.abs(exact)) <= 1e-8


def _rk4_oracle(alpha, N, y_end, h=1e-4, y0=1e-3):
    """Classical RK4 on (f, f', w, w') with w the radial Laplacian, fixed step."""
    beta = 0.25
    # exact series start with f(0) = 1, f''(0) = 0 (float recurrence, independent of the package)
    c = {0: 1.0, 2: 0.0}
    for m in range(0, 40, 2):
        c[m + 4] = (alpha - m * beta) * c[m] / ((m + 4) * (m + 2) * (m + N + 2) * (m + N))
    f = sum(v * y0**m for m, v in c.items())
    df = sum(m * v * y0 ** (m - 1) for m, v in c.items() if m)
    w = sum(m * (m + N - 2) * v * y0 ** (m - 2) for m, v in c.items() if m >= 2)
    dw = sum(m * (m + N - 2) * (m - 2) * v * y0 ** (m - 3) for m, v in c.items() if m >= 4)

    def F(y, s):
        f, df, w, dw = s
        return np.array([df, w - (N - 1) * df / y, dw,
                         alpha * f - beta * y * df - (N - 1) * dw / y])

    s = np.array([f, df, w, dw])
    steps = int(round((y_end - y0) / h))
    y = y0
    for _ in range(steps):
        k1 = F(y, s)
        k2 = F(y + h / 2, s + h / 2 * k1)
        k3 = F(y + h / 2, s + h / 2 * k2)
        k4 = F(y + h, s + h * k3)
        s = s + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        y += h
    return s[0], y


def test_integrate_against_fixed_step_oracle():
    ref, y_end = _rk4_oracle(0.75, 2, 5.0)
    traj = shoot(0.0, 2, 0.75, "sh1", y_end)
    assert traj.unscaled()[-1] == pytest.approx(ref, rel=1e-9)


def test_rescaling_transparency():
    p = derive_params(0.0, 1, 1.3)
    start = origin_series(p, "sh1")
    ys = np.linspace(1e-3, 60.0, 301)
    on = integrate(p, start, 60.0, samples=ys, rescale_threshold=1e5)
    off = integrate(p, start, 60.0, samples=ys, rescale_threshold=1e300)
    assert on.log_scale[-1] > 0 and off.log_scale[-1] == 0
    # relative to the running envelope; pointwise ratios are meaningless at zeros of f
    envelope = np.maximum.accumulate(np.abs(off.unscaled()))
    assert np.max(np.abs(on.unscaled() - off.unscaled()) / envelope) < 1e-11


def test_rescaled_trajectory_continuous():
    from tfe_focus.linear_spectrum import scaled_profile
    ys = np.linspace(200.0, 300.0, 2001)
    a = shoot(0.0, 1, 0.9, "sh1", 300.0, samples=ys, rescale_threshold=1e50)
    b = shoot(0.0, 1, 0.9, "sh1", 300.0, samples=ys)
    assert a.log_scale[-1] > 200
    # renormalising at different points leaves the reconstructed profile unchanged
    sa, sb = scaled_profile(a)[1], scaled_profile(b)[1]
    assert np.max(np.abs(sa - sb)) < 1e-10 * np.max(np.abs(sb))


def test_integrate_rejects_bad_tolerance():
    p = derive_params(0.0, 1, 0.5)
    with pytest.raises(ParameterError):
        integrate(p, origin_series(p, "sh2"), 5.0, rel_tol=1e-3)


def test_integrate_rejects_short_span():
    p = derive_params(0.0, 1, 0.5)
    with pytest.raises(ParameterError):
        integrate(p, origin_series(p, "sh2"), 1e-4)


def test_linear_flux_identity():
    traj = shoot(0.0, 3, 1.1, "sh1", 4.0, samples=np.linspace(0.5, 4.0, 8))
    # flux = y^2 w' for N = 3: compare with a centred difference of w
    y = 2.0
    h = 1e-4
    t = shoot(0.0, 3, 1.1, "sh1", y + h, samples=[y - h, y, y + h])
    dw = (t.lap[2] - t.lap[0]) / (2 * h)
    assert t.flux[1] == pytest.approx(y**2 * dw, rel=1e-7)


# ---- similarity solution --------------------------------------------------------

def test_reconstruct_at_unit_time():
    p = derive_params(0.0, 1, 0.5)
    r = np.array([0.5, 1.0, 3.0])
    prof = lambda y: 0.5 * y**2
    assert np.allclose(reconstruct_solution(p, prof, r, -1.0), prof(r))


def test_reconstruct_first_eigenfunction_is_time_independent():
    # alpha = 1/2, beta = 1/4: (-t)^(1/2) (r (-t)^(-1/4))^2 / 2 = r^2 / 2
    p = derive_params(0.0, 1, 0.5)
    r = np.linspace(0, 3, 7)
    for t in (-2.0, -0.01):
        assert np.allclose(reconstruct_solution(p, lambda y: 0.5 * y**2, r, t), 0.5 * r**2)
    assert p.mu == 2.0


def test_reconstruct_rejects_focusing_instant_and_wrong_sign():
    p = derive_params(0.0, 1, 0.5)
    with pytest.raises(ParameterError):
        reconstruct_solution(p, lambda y: y, 1.0, 0.0)
    with pytest.raises(ParameterError):
        reconstruct_solution(p, lambda y: y, 1.0, 1.0)


def test_focusing_trace():
    assert focusing_trace(3.0, 2.0, 2.0) == pytest.approx(12.0)


def test_trajectory_export(tmp_path):
    traj = shoot(0.0, 1, 0.5, "sh2", 2.0, samples=np.linspace(1e-3, 2.0, 5))
    path = write_trajectory(tmp_path / "t.csv", traj, {"n": 0.0, "N": 1, "alpha": 0.5})
    lines = path.read_text().splitlines()
    header = [l for l in lines if not l.startswith("#")]
    assert header[0] == "y,f,df,lap,flux,log_scale"
    last = [float(v) for v in header[-1].split(",")]
    assert last[1] == pytest.approx(2.0, rel=1e-12)
    assert any(l.startswith("# alpha = 0.5") for l in lines)
