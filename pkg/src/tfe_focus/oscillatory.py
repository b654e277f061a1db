"""Oscillatory component of maximal solutions.

For ``n > 0`` maximal profiles are written ``f(y) = y**(4/n) phi(s)`` with
``s = ln y``; ``phi`` solves an autonomous fourth-order equation whose
nonlinear part carries ``|phi|**(-n)``. The amplitudes involved are far
outside floating-point range for small ``n`` (``phi ~ mu**(-3/n)``), so orbits
are stored as ``phi = psi * exp(log_amp)`` with ``psi`` of order one.

Zeros of ``phi`` are singular points of the equation (``phi'/phi`` and
``|phi|**(-n)``), but for ``n < 1`` the singular terms are integrable; the
integrator stops just before a zero and steps across it with a short
symmetric Taylor jump that includes the integrable ``|phi|**(-n)`` impulse.
"""

from dataclasses import dataclass, field
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.signal import find_peaks

from .errors import IntegrationError, ParameterError
from .linear_spectrum import FOCUSING

__all__ = [
    "OscParams",
    "OscState",
    "OscOrbit",
    "PeriodicityResult",
    "osc_params",
    "phi_coefficients",
    "phi_rhs",
    "phi_residual",
    "constant_solution_residual",
    "transform_phi",
    "transform_log",
    "rescale_small_n",
    "unscale_small_n",
    "phihat_rhs",
    "phihat_roots",
    "integrate_phi",
    "integrate_phihat",
    "detect_periodicity",
    "envelope_slope",
    "small_n_identification",
    "periodicity_scan",
    "radial_residual_from_orbit",
    "ENVELOPE_EXPONENT",
]

CROSSING_FLOOR = 1e-12
# renormalise when the state grows or shrinks by this factor within a segment
RENORM_FACTOR = 1e4

# decay rate of the dominant n = 0 mode of the rescaled equation
ENVELOPE_EXPONENT = -1.0 + 4.0 / 3.0 * FOCUSING.c0


@dataclass(frozen=True)
class OscParams:
    n: float
    N: int
    alpha: float
    mu: float

    @property
    def beta(self) -> float:
        return 0.25 * (1.0 + self.n * self.alpha)


def osc_params(n: float, N: int, alpha: float) -> OscParams:
    if not 0 < n < 2:
        raise ParameterError(f"oscillatory component needs 0 < n < 2, got n={n}")
    if int(N) != N or N < 1:
        raise ParameterError(f"N must be a positive integer, got {N}")
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    return OscParams(n=float(n), N=int(N), alpha=float(alpha), mu=4.0 / n)


@dataclass(frozen=True)
class OscState:
    s: float
    phi: float
    dphi: float
    d2phi: float
    d3phi: float

    def as_array(self) -> np.ndarray:
        return np.array([self.phi, self.dphi, self.d2phi, self.d3phi])


def phi_coefficients(mu: float, N: int) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
    """Coefficient polynomials of the phi equation.

    Returns ``(lin, blk)``: ``lin`` multiplies ``(phi''', phi'', phi', phi)``
    in the n-free part, ``blk`` multiplies ``(phi'', phi', phi)`` inside the
    bracket of the ``n (phi'/phi + mu)`` term (whose ``phi'''`` coefficient is 1).
    """
    lin = (
        2.0 * (N - 4 + 2 * mu),
        6 * mu**2 + 6 * (N - 4) * mu + 11 + (N - 1) * (N - 9),
        2.0 * (2 * mu + N - 4) * (mu**2 + (N - 4) * mu + 2 - N),
        mu * (mu - 2) * (mu**2 + 2 * (N - 3) * mu + 3 + (N - 1) * (N - 5)),
    )
    blk = (
        N - 4 + 3 * mu,
        3 * mu**2 + 2 * (N - 4) * mu + 4 - 2 * N,
        mu * (mu - 2) * (N - 2 + mu),
    )
    return lin, blk


def _phi_terms(p: OscParams, x, log_amp: float = 0.0):
    """Split the non-phi'''' part of the equation into regular and singular pieces."""
    lin, blk = phi_coefficients(p.mu, p.N)
    q0, q1, q2, q3 = x
    regular = lin[0] * q3 + lin[1] * q2 + lin[2] * q1 + lin[3] * q0
    bracket = q3 + blk[0] * q2 + blk[1] * q1 + blk[2] * q0
    weight = np.exp(-p.n * log_amp) * abs(q0) ** (-p.n)
    singular = (p.n * (q1 / q0 + p.mu) * bracket
                + (p.beta * (q1 + p.mu * q0) - p.alpha * q0) * weight)
    return regular, singular


def phi_rhs(params: OscParams, state, log_amp: float = 0.0, floor: float = 0.0) -> np.ndarray:
    """Derivative of ``(phi, phi', phi'', phi''')`` with respect to ``s = ln y``.

    ``state`` is an :class:`OscState` or a length-4 array holding ``psi`` with
    ``phi = psi * exp(log_amp)``. Raises when ``|psi|`` is at or below ``floor``.
    """
    x = state.as_array() if isinstance(state, OscState) else np.asarray(state, dtype=float)
    if not abs(x[0]) > floor:
        raise IntegrationError("phi vanishes: the oscillatory equation is singular at a zero")
    regular, singular = _phi_terms(params, x, log_amp)
    return np.array([x[1], x[2], x[3], -(regular + singular)])


def phi_residual(params: OscParams, derivs) -> float:
    """Left-hand side of the phi equation for given ``(phi, phi', ..., phi'''')``."""
    d = np.asarray(derivs, dtype=float)
    regular, singular = _phi_terms(params, d[:4])
    return float(d[4] + regular + singular)


def constant_solution_residual(params: OscParams, phi_star: float) -> float:
    """Residual of the phi equation on the constant ``phi = phi_star``."""
    lin, blk = phi_coefficients(params.mu, params.N)
    mu, n = params.mu, params.n
    return float(lin[3] * phi_star + n * mu * blk[2] * phi_star
                 + (params.beta * mu - params.alpha) * abs(phi_star) ** (-n) * phi_star)


def transform_phi(phi):
    """Sign-preserving log compression: identity on [-1, 1], ``+-(ln|phi| + 1)`` outside."""
    phi = np.asarray(phi, dtype=float)
    a = np.abs(phi)
    with np.errstate(divide="ignore"):
        out = np.where(a > 1, np.sign(phi) * (np.log(np.where(a > 1, a, 1.0)) + 1), phi)
    return out if out.ndim else float(out)


def transform_log(sign, log_abs):
    """``transform_phi`` evaluated from ``sign(phi)`` and ``ln|phi|`` without forming ``phi``."""
    sign = np.asarray(sign, dtype=float)
    log_abs = np.asarray(log_abs, dtype=float)
    with np.errstate(over="ignore", under="ignore"):
        inner = sign * np.exp(np.minimum(log_abs, 0.0))
    out = np.where(log_abs > 0, sign * (log_abs + 1), inner)
    return out if out.ndim else float(out)


@dataclass
class OscOrbit:
    """Sampled orbit; column ``j`` of ``psi`` is the j-th derivative in ``s``.

    The actual derivatives are ``psi * exp(log_amp)``.
    """
    s: np.ndarray
    psi: np.ndarray
    log_amp: np.ndarray
    params: Optional[OscParams] = None
    crossings: List[float] = field(default_factory=list)
    variable: str = "s"

    @property
    def sign(self) -> np.ndarray:
        return np.sign(self.psi[:, 0])

    @property
    def log_abs_phi(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.psi[:, 0])) + self.log_amp

    def transformed(self) -> np.ndarray:
        return transform_log(self.sign, self.log_abs_phi)

    def phi(self) -> np.ndarray:
        with np.errstate(over="ignore", under="ignore"):
            return self.psi[:, 0] * np.exp(self.log_amp)


def _crossing_jump(p: OscParams, s, x, log_amp):
    """Step over a simple zero of psi by a symmetric Taylor jump.

    ``x`` is just before the zero; returns ``(s_after, x_after, s_zero)``.
    The ``phi'/phi`` term is odd about the zero and integrates to zero; the
    ``|phi|**(-n)`` term contributes ``2 h**(1-n) / (1-n)`` times its
    coefficient.
    """
    q0, q1, q2, q3 = x
    if q1 == 0 or q0 * q1 >= 0:
        raise IntegrationError(f"psi approaches zero tangentially at s={s:.6g}")
    h = -q0 / q1
    jump = 2.0 * h
    lin, blk = phi_coefficients(p.mu, p.N)
    regular = lin[0] * q3 + lin[1] * q2 + lin[2] * q1
    bracket = q3 + blk[0] * q2 + blk[1] * q1
    impulse = (p.beta * q1 * np.exp(-p.n * log_amp) * abs(q1) ** (-p.n)
               * 2.0 * h ** (1.0 - p.n) / (1.0 - p.n))
    d4 = -(regular + p.n * p.mu * bracket)
    new = np.array([
        q0 + jump * q1 + 0.5 * jump**2 * q2 + jump**3 * q3 / 6.0,
        q1 + jump * q2 + 0.5 * jump**2 * q3,
        q2 + jump * q3 + 0.5 * jump**2 * d4,
        q3 + jump * d4 - impulse,
    ])
    return s + jump, new, s + h


def _run_segments(rhs, jump, x0, s0, s_end, samples, rtol, floor, crossing, log_amp0,
                  max_crossings, renormalise):
    samples = np.asarray(samples, dtype=float)
    out = np.full((len(samples), 4), np.nan)
    amps = np.full(len(samples), np.nan)
    s, x, L = float(s0), np.asarray(x0, dtype=float).copy(), float(log_amp0)
    crossings = []
    k = int(np.searchsorted(samples, s, side="left"))
    if k < len(samples) and samples[k] == s:
        out[k], amps[k] = x, L
        k += 1
    while s < s_end:
        scale = float(np.max(np.abs(x)))
        sigma = np.sign(x[0]) if x[0] != 0 else 1.0

        def ev_zero(t, z, sigma=sigma):
            return sigma * z[0] - floor * np.max(np.abs(z))
        ev_zero.terminal, ev_zero.direction = True, -1

        def ev_big(t, z, top=scale * RENORM_FACTOR):
            return np.max(np.abs(z)) - top
        ev_big.terminal, ev_big.direction = True, 1

        def ev_small(t, z, bottom=scale / RENORM_FACTOR):
            return np.max(np.abs(z)) - bottom
        ev_small.terminal, ev_small.direction = True, -1

        events = [ev_big, ev_small] if renormalise else []
        if crossing:
            events.append(ev_zero)
        t_eval = samples[k:][samples[k:] <= s_end]
        t_eval = t_eval[t_eval > s]
        sol = solve_ivp(lambda t, z: rhs(z, L), (s, s_end), x, method="DOP853",
                        t_eval=t_eval, rtol=rtol, atol=rtol * 1e-8 * scale, events=events or None)
        if sol.status == -1:
            raise IntegrationError(f"phi integration failed at s={sol.t[-1]:.6g}: {sol.message}")
        ys = np.asarray(sol.y, dtype=float).reshape(4, -1)
        m = ys.shape[1]
        out[k:k + m] = ys.T
        amps[k:k + m] = L
        k += m
        if sol.status == 0:
            break
        if sol.status == 1:
            fired = [i for i, e in enumerate(sol.t_events) if len(e)]
            s = float(sol.t_events[fired[0]][0])
            x = sol.y_events[fired[0]][0].copy()
            tag = events[fired[0]]
            if tag is ev_zero:
                s_new, x, s_zero = jump(s, x, L)
                crossings.append(s_zero)
                while k < len(samples) and samples[k] <= s_new:
                    # samples inside the (microscopic) jump get the far-side state
                    out[k], amps[k] = x, L
                    k += 1
                s = s_new
                if len(crossings) > max_crossings:
                    raise IntegrationError(f"more than {max_crossings} zero crossings")
            else:
                shift = float(np.floor(np.log(np.max(np.abs(x)))))
                x = x * np.exp(-shift)
                L += shift
    return out, amps, crossings


def integrate_phi(params: OscParams, initial, s_span: Tuple[float, float],
                  samples: Optional[Sequence[float]] = None, log_amp: Optional[float] = None,
                  rtol: float = 1e-10, floor: float = CROSSING_FLOOR,
                  max_crossings: int = 100_000) -> OscOrbit:
    """Integrate the phi equation over ``s_span``.

    ``initial`` holds ``psi`` and its first three ``s``-derivatives; the
    physical ``phi`` is ``psi * exp(log_amp)``, with ``log_amp`` defaulting to
    the natural scale ``-(3/n) ln mu``. Zeros of ``phi`` are crossed as
    described in the module docstring (``n < 1`` only) and logged in
    ``OscOrbit.crossings``; the amplitude is renormalised whenever the state
    grows or shrinks by a factor 1e4.
    """
    s0, s1 = map(float, s_span)
    if not s1 > s0:
        raise ParameterError("s_span must be increasing")
    if params.n >= 1:
        raise ParameterError("zero crossings are only integrable for n < 1")
    if log_amp is None:
        log_amp = -3.0 / params.n * np.log(params.mu)
    x0 = np.asarray(initial, dtype=float)
    if x0.shape != (4,) or x0[0] == 0:
        raise ParameterError("initial state must be 4 values with psi != 0")
    ss = np.linspace(s0, s1, 2001) if samples is None else np.asarray(samples, dtype=float)

    def f(z, L):
        regular, singular = _phi_terms(params, z, L)
        return np.array([z[1], z[2], z[3], -(regular + singular)])

    out, amps, crossings = _run_segments(f, lambda s, x, L: _crossing_jump(params, s, x, L), x0, s0, s1, ss, rtol, floor, True, log_amp,
                                         max_crossings, True)
    return OscOrbit(s=ss, psi=out, log_amp=amps, params=params, crossings=crossings)


def rescale_small_n(orbit: OscOrbit) -> OscOrbit:
    """Map an orbit in ``s`` to the small-n variables ``s_hat = mu s``, ``phi = mu**(-3/n) phi_hat``.

    Done on the log-amplitude, so no power of ``mu`` is ever formed.
    """
    p = orbit.params
    if p is None:
        raise ParameterError("orbit carries no parameters")
    mu, n = p.mu, p.n
    # d/ds_hat = (1/mu) d/ds
    psi = orbit.psi / mu ** np.arange(4)
    return OscOrbit(s=mu * orbit.s, psi=psi, log_amp=orbit.log_amp + 3.0 / n * np.log(mu),
                    params=p, crossings=[mu * c for c in orbit.crossings], variable="s_hat")


def unscale_small_n(orbit: OscOrbit) -> OscOrbit:
    """Inverse of :func:`rescale_small_n`."""
    p = orbit.params
    mu, n = p.mu, p.n
    psi = orbit.psi * mu ** np.arange(4)
    return OscOrbit(s=orbit.s / mu, psi=psi, log_amp=orbit.log_amp - 3.0 / n * np.log(mu),
                    params=p, crossings=[c / mu for c in orbit.crossings], variable="s")


def phihat_rhs(n: float, state, log_amp: float = 0.0) -> np.ndarray:
    """Derivative for the rescaled small-n equation

    ``phi'''' + 4 phi''' + 6 phi'' + 4 phi' + phi + (phi' + phi) |phi|**(-n) / 4 = 0``.
    """
    x = np.asarray(state, dtype=float)
    q0, q1, q2, q3 = x
    if n > 0 and q0 == 0:
        raise IntegrationError("phi_hat vanishes: the equation is singular at a zero")
    weight = 1.0 if n == 0 else np.exp(-n * log_amp) * abs(q0) ** (-n)
    d4 = -(4 * q3 + 6 * q2 + 4 * q1 + q0 + 0.25 * (q1 + q0) * weight)
    return np.array([q1, q2, q3, d4])


def phihat_roots() -> np.ndarray:
    """Exponents ``m`` of ``exp(m s_hat)`` solving the n = 0 rescaled equation."""
    return np.roots([1, 4, 6, 4.25, 1.25])


def _phihat_jump(n, s, x, L):
    q0, q1, q2, q3 = x
    if q1 == 0 or q0 * q1 >= 0:
        raise IntegrationError(f"phi_hat approaches zero tangentially at s_hat={s:.6g}")
    h = -q0 / q1
    jump = 2.0 * h
    d4 = -(4 * q3 + 6 * q2 + 4 * q1)
    impulse = 0.25 * q1 * np.exp(-n * L) * abs(q1) ** (-n) * 2.0 * h ** (1 - n) / (1 - n)
    new = np.array([
        q0 + jump * q1 + 0.5 * jump**2 * q2 + jump**3 * q3 / 6.0,
        q1 + jump * q2 + 0.5 * jump**2 * q3,
        q2 + jump * q3 + 0.5 * jump**2 * d4,
        q3 + jump * d4 - impulse,
    ])
    return s + jump, new, s + h


def integrate_phihat(n: float, initial, s_span: Tuple[float, float],
                     samples: Optional[Sequence[float]] = None, rtol: float = 1e-11,
                     log_amp: float = 0.0) -> OscOrbit:
    """Integrate the rescaled equation; at ``n = 0`` it is linear and zeros are regular."""
    if not 0 <= n < 1:
        raise ParameterError("rescaled equation is integrated for 0 <= n < 1")
    s0, s1 = map(float, s_span)
    ss = np.linspace(s0, s1, 4001) if samples is None else np.asarray(samples, dtype=float)
    x0 = np.asarray(initial, dtype=float)
    out, amps, crossings = _run_segments(lambda z, L: phihat_rhs(n, z, L),
                                         lambda s, x, L: _phihat_jump(n, s, x, L), x0, s0, s1, ss, rtol, CROSSING_FLOOR, n > 0,
                                         log_amp, 100_000, True)
    return OscOrbit(s=ss, psi=out, log_amp=amps, crossings=crossings, variable="s_hat")


def envelope_slope(orbit: OscOrbit, window: Optional[Tuple[float, float]] = None) -> float:
    """Slope of ``ln|phi|`` at its local maxima against the independent variable.

    Fits a straight line through the log-amplitudes of the local extrema of
    ``|phi|`` inside ``window`` (default: second half of the orbit).
    """
    s = orbit.s
    la = orbit.log_abs_phi
    if window is None:
        window = (s[0] + 0.5 * (s[-1] - s[0]), s[-1])
    sel = (s >= window[0]) & (s <= window[1]) & np.isfinite(la)
    ss, ll = s[sel], la[sel]
    peaks, _ = find_peaks(ll)
    if len(peaks) < 3:
        raise ParameterError(f"only {len(peaks)} local maxima of |phi| in the window")
    # refine each maximum with a parabola through its neighbours
    xs, ys = [], []
    for i in peaks:
        if 0 < i < len(ss) - 1:
            c = np.polyfit(ss[i - 1:i + 2] - ss[i], ll[i - 1:i + 2], 2)
            if c[0] < 0:
                dx = -c[1] / (2 * c[0])
                xs.append(ss[i] + dx)
                ys.append(np.polyval(c, dx))
    slope, _ = np.polyfit(xs, ys, 1)
    return float(slope)


@dataclass(frozen=True)
class PeriodicityResult:
    status: Literal["periodic", "lost", "undetermined"]
    period: Optional[float]
    confidence: float
    n_periods: float

    def as_dict(self) -> dict:
        return {"status": self.status, "period": self.period, "confidence": self.confidence,
                "n_periods": self.n_periods}


def detect_periodicity(s, series, min_periods: float = 5.0, threshold: float = 0.8,
                       lost_threshold: float = 0.5, stability: float = 0.02) -> PeriodicityResult:
    """Autocorrelation period estimate for a uniformly sampled series.

    ``periodic`` requires an autocorrelation peak of at least ``threshold``,
    at least ``min_periods`` periods in the record and agreement to
    ``stability`` between the two halves of the record. ``lost`` means no
    autocorrelation peak reaches ``lost_threshold`` although the record is long
    enough to have shown one; everything else is ``undetermined``.
    """
    s = np.asarray(s, dtype=float)
    x = np.asarray(series, dtype=float)
    ok = np.isfinite(x)
    s, x = s[ok], x[ok]
    if len(x) < 16:
        return PeriodicityResult("undetermined", None, 0.0, 0.0)
    ds = np.diff(s)
    if not np.allclose(ds, ds[0], rtol=1e-6):
        raise ParameterError("series must be uniformly sampled")
    dt = ds[0]
    span = s[-1] - s[0]

    def estimate(v):
        v = v - v.mean()
        denom = np.dot(v, v)
        if denom == 0:
            return None, 0.0
        full = np.correlate(v, v, mode="full")[len(v) - 1:]
        # unbiased normalisation so later lags are not penalised by overlap length
        ac = full / denom * len(v) / (len(v) - np.arange(len(v)))
        ac = ac[: len(v) // 2]
        # a period shows up as a peak after the first decorrelation
        negative = np.nonzero(ac < 0)[0]
        if len(negative) == 0:
            return None, 0.0
        peaks, _ = find_peaks(ac)
        peaks = peaks[peaks > negative[0]]
        if len(peaks) == 0:
            return None, 0.0
        good = ac[peaks] >= threshold
        best = peaks[np.argmax(good)] if np.any(good) else peaks[np.argmax(ac[peaks])]
        lag = float(best)
        if 0 < best < len(ac) - 1:
            y0, y1, y2 = ac[best - 1:best + 2]
            d = y0 - 2 * y1 + y2
            if d != 0:
                lag += 0.5 * (y0 - y2) / d
        return lag * dt, float(min(ac[best], 1.0))

    period, conf = estimate(x)
    if period is None or conf < lost_threshold:
        status = "lost" if len(x) >= 100 else "undetermined"
        return PeriodicityResult(status, None, conf, 0.0)
    n_periods = span / period
    if conf < threshold or n_periods < min_periods:
        return PeriodicityResult("undetermined", period, conf, n_periods)
    half = len(x) // 2
    p1, _ = estimate(x[:half])
    p2, _ = estimate(x[half:])
    if p1 is None or p2 is None or abs(p1 - p2) > stability * period:
        return PeriodicityResult("undetermined", period, conf, n_periods)
    return PeriodicityResult("periodic", period, conf, n_periods)


@dataclass
class PeriodicityScan:
    n: np.ndarray
    results: List[PeriodicityResult]
    bracket: Optional[Tuple[float, Optional[float]]]


def periodicity_scan(N: int, alpha: float, n_grid: Sequence[float], span_hat: float = 400.0,
                     samples: int = 8001, initial=(1.0, 0.0, 0.0, 0.0)) -> PeriodicityScan:
    """Classify orbits across an increasing ``n`` grid and bracket the loss of periodicity.

    Each orbit runs over ``span_hat / mu`` in ``s`` (a fixed length in the
    rescaled variable); the first half is discarded as transient. The bracket
    is ``(last n periodic before the first non-periodic, first non-periodic
    n)``; the upper end is None when every orbit is periodic, and the bracket
    is None when the first orbit already fails.
    """
    grid = np.asarray(n_grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise ParameterError("n_grid must be strictly increasing")
    results = []
    for n in grid:
        p = osc_params(n, N, alpha)
        span = span_hat / p.mu
        ss = np.linspace(0.0, span, samples)
        try:
            orbit = integrate_phi(p, initial, (0.0, span), samples=ss)
            keep = ss >= 0.5 * span
            res = detect_periodicity(ss[keep], orbit.transformed()[keep])
        except IntegrationError:
            res = PeriodicityResult("undetermined", None, 0.0, 0.0)
        results.append(res)
    bracket = None
    for i, res in enumerate(results):
        if res.status != "periodic":
            bracket = (float(grid[i - 1]), float(grid[i])) if i > 0 else None
            break
    else:
        bracket = (float(grid[-1]), None) if len(grid) else None
    return PeriodicityScan(n=grid, results=results, bracket=bracket)


def small_n_identification(n: float, y, C1: float, C2: float, N: int = 1, alpha: float = 0.5,
                           two_cosines: bool = False):
    """Map the linear far-field bundle onto the small-n oscillatory asymptotics.

    Uses ``y_hat = exp(3 n y**(4/3) / 16)`` and ``A_hat = (4/n)**(3/n) C``, so
    that ``s_hat = (4/n) ln y_hat = (3/4) y**(4/3)``. Returns
    ``(log_y_hat, log_A_hat1, log_A_hat2_sign, phi_hat_branch, linear_branch)``
    where the last two are the oscillatory parts of
    ``y_hat**(4/n) (4/n)**(-3/n) phi_hat(s_hat)`` and of the linear bundle
    ``exp(c0 y**(4/3)) (C1 cos + C2 sin)(c1 y**(4/3))`` (without its algebraic
    prefactor), evaluated in log-safe form. With ``two_cosines`` the second
    mode uses cos instead of sin, the literal alternative reading.
    """
    y = np.asarray(y, dtype=float)
    r = FOCUSING
    mu = 4.0 / n
    s_hat = 0.75 * y ** (4.0 / 3.0)
    log_y_hat = 3.0 * n / 16.0 * y ** (4.0 / 3.0)
    log_scale = 3.0 / n * np.log(mu)  # ln (4/n)^(3/n)
    second = np.cos if two_cosines else np.sin
    w = 4.0 / 3.0 * r.c1
    # y_hat^(4/n) (4/n)^(-3/n) A_hat (...) = exp(mu log_y_hat - log_scale + log_scale) ...
    log_env_hat = mu * log_y_hat + ENVELOPE_EXPONENT * s_hat
    phi_branch = np.exp(log_env_hat) * (C1 * np.cos(w * s_hat) + C2 * second(w * s_hat))
    lin = np.exp(r.c0 * y ** (4.0 / 3.0)) * (C1 * np.cos(r.c1 * y ** (4.0 / 3.0))
                                             + C2 * np.sin(r.c1 * y ** (4.0 / 3.0)))
    return {
        "s_hat": s_hat,
        "log_y_hat": log_y_hat,
        "log_A_hat_factor": log_scale,
        "phi_hat_branch": phi_branch,
        "linear_branch": lin,
    }


def radial_residual_from_orbit(orbit: OscOrbit, index: int) -> float:
    """Relative residual of the radial equation for ``f = y**(4/n) phi(ln y)`` at one sample.

    Rebuilds ``f`` and its ``y``-derivatives from the orbit (``phi''''`` from
    the phi equation itself) and evaluates the radial operator; the ratio to
    the size of its largest term is returned. Works in log-amplitude form.
    """
    p = orbit.params
    if p is None:
        raise ParameterError("orbit carries no parameters")
    s = float(orbit.s[index])
    x = orbit.psi[index]
    L = float(orbit.log_amp[index])
    d4 = phi_rhs(p, x, L)[3]
    q = np.array([x[0], x[1], x[2], x[3], d4])
    mu, n, N = p.mu, p.n, p.N
    # derivatives of f = exp(mu s) phi(s) wrt y expressed via s: y^k f^(k) = P_k(d/ds) f
    # falling factorial operators D(D-1)...(D-k+1) applied to exp(mu s) phi
    D = _shifted_derivatives(q, mu)  # (d/ds)^j of e^{-mu s} f at this s, j=0..4, scaled
    yk = [D[0]]
    yk.append(D[1])
    yk.append(D[2] - D[1])
    yk.append(D[3] - 3 * D[2] + 2 * D[1])
    yk.append(D[4] - 6 * D[3] + 11 * D[2] - 6 * D[1])
    # y^k f^(k) / (y^mu e^L) for k = 0..4
    f0, f1, f2, f3, f4 = yk
    # Laplacian and its derivatives, all multiplied by y^{2-mu}, y^{3-mu} etc.
    lap = f2 + (N - 1) * f1                              # y^2 Lap f
    dlap = f3 + (N - 1) * f2 - (N - 1) * f1              # y^3 (Lap f)'
    d2lap = f4 + (N - 1) * f3 - 2 * (N - 1) * f2 + 2 * (N - 1) * f1  # y^4 (Lap f)''
    # |f|^n = y^4 |phi|^n: the flux term y^{-(N-1)} [y^{N-1} |f|^n (Lap f)']'
    logabs = np.log(abs(x[0]))
    m_ratio = n * (x[1] / x[0] + mu)                      # y m'/m with m = |f|^n
    phi_n = np.exp(n * (logabs + L))                     # |phi|^n
    flux = phi_n * (d2lap + (N - 1) * dlap + m_ratio * dlap)  # / y^mu e^L
    beta = p.beta
    lower = -beta * f1 + p.alpha * f0
    total = -flux + lower
    size = max(abs(flux), abs(beta * f1), abs(p.alpha * f0))
    return float(total / size)


def _shifted_derivatives(q, mu):
    """``(d/ds)^j (e^{mu s} phi) e^{-mu s}`` for j = 0..4 from ``phi`` derivatives ``q``."""
    from math import comb
    return [sum(comb(j, i) * mu ** (j - i) * q[i] for i in range(j + 1)) for j in range(5)]
