"""Radial self-similar ODE for focusing/defocusing thin-film profiles.

A focusing profile ``f(y)`` of ``u(r, t) = (-t)**alpha * f(r / (-t)**beta)``
solves the fourth-order radial equation

    -(1/y^(N-1)) [y^(N-1) |f|^n (Lap f)']' - beta y f' + alpha f = 0,

with ``beta = (1 + alpha n)/4``.  It is integrated as a first-order system in
``(f, f', w, g)`` with ``w = f'' + (N-1) f'/y`` the radial Laplacian and
``g = y^(N-1) m(f) w'`` the flux, ``m(f) = (f^2 + delta^2)^(n/2)``.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Literal, Optional, Sequence

import numpy as np
from numba import njit

from . import _integrator
from .errors import (
    DegenerateOrigin,
    IntegrationError,
    ParameterError,
    SingularMobility,
    SolutionOverflow,
    StepSizeCollapse,
)

Sign = Literal["focusing", "defocusing"]
Kind = Literal["sh1", "sh2"]

DEFAULT_Y_START = 1e-3
DEFAULT_TOL = 1e-13
DEFAULT_RESCALE = 1e100
DEFAULT_DELTA = 1e-8


@dataclass(frozen=True)
class SimilarityParams:
    n: float
    N: int
    alpha: float
    beta: float
    mu: float
    sign: Sign = "focusing"

    @property
    def sgn(self) -> float:
        return 1.0 if self.sign == "focusing" else -1.0

    @property
    def max_growth(self) -> float:
        """Envelope exponent 4/n of the maximal bundle (inf at n = 0)."""
        return np.inf if self.n == 0 else 4.0 / self.n


def derive_params(n: float, N: int, alpha: float, sign: Sign = "focusing") -> SimilarityParams:
    """Build the exponent tuple for mobility ``n``, dimension ``N`` and eigenvalue ``alpha``.

    >>> p = derive_params(0.0, 1, 0.5)
    >>> p.beta, p.mu
    (0.25, 2.0)
    """
    if not 0.0 <= n < 2.0:
        raise ParameterError(f"mobility exponent n={n} outside [0, 2)")
    if int(N) != N or N < 1:
        raise ParameterError(f"dimension N={N} must be a positive integer")
    if not alpha > 0.0:
        raise ParameterError(f"alpha={alpha} must be positive")
    if sign not in ("focusing", "defocusing"):
        raise ParameterError(f"unknown sign {sign!r}")
    beta = (1.0 + alpha * n) / 4.0
    mu = 4.0 * alpha / (1.0 + alpha * n)
    return SimilarityParams(n=float(n), N=int(N), alpha=float(alpha), beta=beta, mu=mu, sign=sign)


def regularized_mobility(f, n: float, delta: float = 0.0):
    """Mobility ``(f^2 + delta^2)^(n/2)``; reduces to ``|f|^n`` for ``delta = 0``."""
    if delta < 0:
        raise ParameterError("mobility floor must be non-negative")
    if n == 0:
        return np.ones_like(f, dtype=float) if np.ndim(f) else 1.0
    if delta == 0:
        # |f|^n directly: squaring first would underflow for tiny f
        return np.abs(f) ** n
    return (np.square(f) + delta * delta) ** (0.5 * n)


@dataclass(frozen=True)
class RadialState:
    y: float
    f: float
    df: float
    lap: float
    flux: float

    def as_array(self) -> np.ndarray:
        return np.array([self.f, self.df, self.lap, self.flux])


@njit(cache=True)
def _rhs_kernel(y, s, p):
    n = p[0]
    N = p[1]
    alpha = p[2]
    beta = p[3]
    sgn = p[4]
    delta = p[5]
    f = s[0]
    df = s[1]
    yN1 = y ** (N - 1.0)
    if n == 0.0:
        mob = 1.0
    else:
        mob = (f * f + delta * delta) ** (0.5 * n)
    denom = yN1 * mob
    out = np.empty(4)
    out[0] = df
    out[1] = s[2] - (N - 1.0) * df / y
    if denom < 1e-300:
        out[2] = np.nan
    else:
        out[2] = s[3] / denom
    out[3] = sgn * yN1 * (alpha * f - beta * y * df)
    return out


def _kernel_params(params: SimilarityParams, delta: float) -> np.ndarray:
    return np.array([params.n, float(params.N), params.alpha, params.beta, params.sgn, delta])


def rhs(params: SimilarityParams, state: RadialState, mobility_floor: float = 0.0) -> np.ndarray:
    """Derivative of ``(f, f', w, g)`` with respect to ``y`` at ``state``."""
    if state.y <= 0:
        raise ParameterError("rhs is only defined for y > 0")
    out = _rhs_kernel(state.y, state.as_array(), _kernel_params(params, mobility_floor))
    if not np.isfinite(out[2]):
        raise SingularMobility(f"y^(N-1) m(f) underflows at y={state.y}, f={state.f}")
    return out


@dataclass(frozen=True)
class OriginStart:
    kind: Kind
    f0: float
    f2: float
    series: tuple  # (c0, c2, c4, c6)
    y_start: float = DEFAULT_Y_START
    delta: float = 0.0
    degenerate: bool = False

    def state(self, params: SimilarityParams) -> RadialState:
        """Series values of ``(f, f', w, g)`` at the handoff radius."""
        y = self.y_start
        N = params.N
        f = df = lap = flux = 0.0
        for i, c in enumerate(self.series):
            m = 2 * i
            f += c * y**m
            if m >= 1:
                df += m * c * y ** (m - 1)
            if m >= 2:
                lap += c * m * (m + N - 2) * y ** (m - 2)
            # flux' = sgn y^(N-1) (alpha f - beta y f') integrated term by term
            flux += params.sgn * c * (params.alpha - m * params.beta) * y ** (m + N) / (m + N)
        return RadialState(y=y, f=f, df=df, lap=lap, flux=flux)


def series_coefficients(alpha, N: int, kind: Kind, max_degree: int, beta=Fraction(1, 4),
                        sign: float = 1, mobility=1) -> list:
    """Even-power Taylor coefficients ``c_0..c_max_degree`` (odd entries zero).

    Uses ``c_{m+4} (m+4)(m+2)(m+N+2)(m+N) = sign (alpha - m beta) c_m / mobility``.
    Exact when ``alpha``, ``beta`` and ``mobility`` are Fractions or ints.
    """
    one = Fraction(1) if isinstance(alpha, (int, Fraction)) else 1.0
    coeffs = [0 * one] * (max_degree + 1)
    if kind == "sh1":
        coeffs[0] = one
    elif kind == "sh2":
        if max_degree >= 2:
            coeffs[2] = one / 2
    else:
        raise ParameterError(f"unknown origin kind {kind!r}")
    for m in range(0, max_degree - 3, 2):
        denom = (m + 4) * (m + 2) * (m + N + 2) * (m + N)
        coeffs[m + 4] = sign * (alpha - m * beta) * coeffs[m] / (mobility * denom)
    return coeffs


def origin_series(params: SimilarityParams, kind: Kind, mobility_floor: float = 0.0,
                  y_start: float = DEFAULT_Y_START) -> OriginStart:
    """Regular start at the origin with the sh1/sh2 normalisation."""
    if kind not in ("sh1", "sh2"):
        raise ParameterError(f"unknown origin kind {kind!r}")
    f0 = 1.0 if kind == "sh1" else 0.0
    degenerate = params.n > 0 and kind == "sh2"
    if degenerate and mobility_floor <= 0:
        raise DegenerateOrigin("kind sh2 with n > 0 needs a positive mobility floor")
    mob = float(regularized_mobility(f0, params.n, mobility_floor))
    coeffs = series_coefficients(params.alpha, params.N, kind, 6, beta=params.beta,
                                 sign=params.sgn, mobility=mob)
    series = tuple(float(c) for c in coeffs[0::2])
    return OriginStart(kind=kind, f0=f0, f2=2.0 * series[1], series=series, y_start=y_start,
                       delta=mobility_floor, degenerate=degenerate)


@dataclass
class Trajectory:
    y: np.ndarray
    f: np.ndarray
    df: np.ndarray
    lap: np.ndarray
    flux: np.ndarray
    log_scale: np.ndarray
    params: SimilarityParams
    delta: float = 0.0
    kind: Optional[str] = None
    n_steps: int = 0
    meta: dict = field(default_factory=dict)

    COLUMNS = ("y", "f", "df", "lap", "flux", "log_scale")

    def __len__(self):
        return len(self.y)

    def states(self) -> Iterator[RadialState]:
        for row in zip(self.y, self.f, self.df, self.lap, self.flux):
            yield RadialState(*map(float, row))

    def log_abs_f(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.f)) + self.log_scale

    def unscaled(self, column: str = "f") -> np.ndarray:
        """Column with the renormalisation folded back in (may overflow to inf)."""
        with np.errstate(over="ignore"):
            return getattr(self, column) * np.exp(self.log_scale)

    def at(self, y: float) -> RadialState:
        """Unscaled state at a sampled radius."""
        i = int(np.argmin(np.abs(self.y - y)))
        if not np.isclose(self.y[i], y, rtol=1e-12, atol=0):
            raise ParameterError(f"y={y} is not a sample of this trajectory")
        e = np.exp(self.log_scale[i])
        return RadialState(float(self.y[i]), float(self.f[i] * e), float(self.df[i] * e),
                           float(self.lap[i] * e), float(self.flux[i] * e))

    def table(self) -> np.ndarray:
        return np.column_stack([self.y, self.f, self.df, self.lap, self.flux, self.log_scale])


def integrate(params: SimilarityParams, start: OriginStart, y_end: float,
              rel_tol: float = DEFAULT_TOL, abs_tol: float = DEFAULT_TOL,
              rescale_threshold: float = DEFAULT_RESCALE,
              samples: Optional[Sequence[float]] = None,
              max_steps: int = 10_000_000) -> Trajectory:
    """Shoot from the origin series to ``y_end``.

    ``samples`` are the radii at which the state is recorded (default: 1001
    equispaced points on ``[y_start, y_end]``); they are hit exactly by the
    stepper. For ``n = 0`` the state is renormalised by powers of e whenever a
    component exceeds ``rescale_threshold``; for ``n > 0`` renormalisation is
    off and overflow raises :class:`SolutionOverflow`.
    """
    y0 = start.y_start
    if not y_end > y0:
        raise ParameterError(f"y_end={y_end} must exceed the handoff radius {y0}")
    for tol in (rel_tol, abs_tol):
        if not 0 < tol <= 1e-6:
            raise ParameterError(f"tolerance {tol} outside (0, 1e-6]")
    if samples is None:
        ys = np.linspace(y0, y_end, 1001)
    else:
        ys = np.asarray(samples, dtype=float)
        if ys.ndim != 1 or np.any(np.diff(ys) <= 0):
            raise ParameterError("samples must be strictly increasing")
        if ys[0] < y0 or ys[-1] > y_end:
            raise ParameterError("samples must lie within [y_start, y_end]")
        if ys[-1] < y_end:
            ys = np.append(ys, y_end)
    rescale = params.n == 0
    s0 = start.state(params).as_array()
    Y, LS, status, y_reached, steps = _integrator.integrate(
        _rhs_kernel, _kernel_params(params, start.delta), y0, s0, ys, rel_tol, abs_tol,
        rescale, rescale_threshold, max_steps)
    if status != _integrator.OK:
        raise _classify_failure(status, Y, y_reached, params, start.delta)
    return Trajectory(y=ys, f=Y[:, 0].copy(), df=Y[:, 1].copy(), lap=Y[:, 2].copy(),
                      flux=Y[:, 3].copy(), log_scale=LS, params=params, delta=start.delta,
                      kind=start.kind, n_steps=int(steps))


def _classify_failure(status, Y, y_reached, params, delta) -> IntegrationError:
    where = f"at y={y_reached:.6g}"
    if status == _integrator.STEP_COLLAPSE:
        return StepSizeCollapse(f"step size collapsed {where}", y_reached)
    if status == _integrator.MAX_STEPS:
        return StepSizeCollapse(f"step budget exhausted {where}", y_reached)
    finite = Y[np.all(np.isfinite(Y), axis=1)]
    last = finite[-1] if len(finite) else np.zeros(4)
    if np.max(np.abs(last)) > 1e200 or params.n == 0:
        return SolutionOverflow(f"solution overflowed {where} (rescaling disabled for n>0)",
                                y_reached)
    return SingularMobility(f"singular mobility {where} (delta={delta})", y_reached)


def shoot(n: float, N: int, alpha: float, kind: Kind, y_end: float,
          samples: Optional[Sequence[float]] = None, delta: Optional[float] = None,
          sign: Sign = "focusing", y_start: float = DEFAULT_Y_START, **kwargs) -> Trajectory:
    """Convenience wrapper: derive parameters, build the origin start and integrate."""
    params = derive_params(n, N, alpha, sign)
    if delta is None:
        delta = 0.0 if n == 0 else DEFAULT_DELTA
    start = origin_series(params, kind, delta, y_start=y_start)
    return integrate(params, start, y_end, samples=samples, **kwargs)


def reconstruct_solution(params: SimilarityParams, profile: Callable, r, t: float):
    """Evaluate ``u(r, t) = (-+t)^alpha f(r / (-+t)^beta)`` for a similarity profile."""
    if t == 0:
        raise ParameterError("t = 0 is the focusing instant; use focusing_trace")
    if (params.sign == "focusing") != (t < 0):
        raise ParameterError("focusing profiles live at t < 0, defocusing at t > 0")
    tau = abs(t)
    return tau**params.alpha * profile(np.asarray(r) / tau**params.beta)


def focusing_trace(C: float, mu: float, r):
    """Limit ``C r^mu`` left by a minimal-growth profile as ``t -> 0^-``."""
    return C * np.asarray(r, dtype=float) ** mu
