"""Linear (n = 0) focusing spectrum by shooting.

For the bi-harmonic similarity equation the maximal bundle behaves like

    f ~ y^(-2(N+2 alpha)/3) e^(c0 y^(4/3)) [C1 cos(c1 y^(4/3)) + C2 sin(c1 y^(4/3))],

and eigenvalues are the alpha at which both far-field constants vanish.  The
constants are extracted by a linear least-squares fit of the scaled profile
over a large-y window.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from .errors import EigenvalueNotFound, FitError, IntegrationError, ParameterError
from .radial_ode import (
    DEFAULT_Y_START,
    Kind,
    Sign,
    SimilarityParams,
    Trajectory,
    derive_params,
    integrate,
    origin_series,
    series_coefficients,
    OriginStart,
)

GAMMA = 4.0 / 3.0
DEFAULT_WINDOW = (250.0, 300.0)
DEFAULT_WINDOW_SAMPLES = 512
MIN_WINDOW_SAMPLES = 50


@dataclass(frozen=True)
class CharRoots:
    """Roots of ``a^3 = -+(1/4)(3/4)^3`` for the exponential ansatz ``e^(a y^(4/3))``."""

    a1: complex
    a2: complex
    a3: float
    c0: float
    c1: float
    sign: Sign = "focusing"
    gamma: float = GAMMA

    @property
    def rhs(self) -> float:
        s = -1.0 if self.sign == "focusing" else 1.0
        return s * 0.25 * 0.75**3

    def cubic_residuals(self) -> np.ndarray:
        return np.abs(np.array([self.a1, self.a2, self.a3]) ** 3 - self.rhs)


def char_roots(sign: Sign = "focusing") -> CharRoots:
    r = 0.75 * 4.0 ** (-1.0 / 3.0)
    h = math.sqrt(3.0) / 2.0
    if sign == "focusing":
        a1 = complex(r * 0.5, r * h)
        a3 = -r
    elif sign == "defocusing":
        a1 = complex(-r * 0.5, r * h)
        a3 = r
    else:
        raise ParameterError(f"unknown sign {sign!r}")
    return CharRoots(a1=a1, a2=a1.conjugate(), a3=a3, c0=a1.real, c1=a1.imag, sign=sign)


def cubic_roots_numeric(sign: Sign = "focusing") -> np.ndarray:
    """Companion-matrix roots of the same cubic, ordered like :func:`char_roots`."""
    rhs = char_roots(sign).rhs
    roots = np.roots([1.0, 0.0, 0.0, -rhs])
    real = roots[np.argmin(np.abs(roots.imag))].real
    upper = roots[np.argmax(roots.imag)]
    return np.array([upper, upper.conjugate(), real])


FOCUSING = char_roots("focusing")


def algebraic_exponent(N: int, alpha: float) -> float:
    return (2.0 / 3.0) * (N + 2.0 * alpha)


def scaled_profile(trajectory: Trajectory) -> Tuple[np.ndarray, np.ndarray]:
    """``f(y) y^(2(N+2 alpha)/3) e^(-c0 y^(4/3))`` on the trajectory samples.

    Evaluated in log space so the renormalisation of long shots never overflows.
    """
    p = trajectory.params
    y = trajectory.y
    with np.errstate(divide="ignore"):
        log_mag = (np.log(np.abs(trajectory.f)) + trajectory.log_scale
                   + algebraic_exponent(p.N, p.alpha) * np.log(y) - FOCUSING.c0 * y**GAMMA)
    return y, np.sign(trajectory.f) * np.exp(log_mag)


def far_field_model(y, C1: float, C2: float, N: int, alpha: float, decaying: float = 0.0):
    """Maximal-bundle model plus an optional multiple of the decaying ``a3`` mode."""
    y = np.asarray(y, dtype=float)
    phase = FOCUSING.c1 * y**GAMMA
    grow = y ** (-algebraic_exponent(N, alpha)) * np.exp(FOCUSING.c0 * y**GAMMA)
    return grow * (C1 * np.cos(phase) + C2 * np.sin(phase)) + decaying * np.exp(FOCUSING.a3 * y**GAMMA)


@dataclass(frozen=True)
class FitResult:
    C1: float
    C2: float
    window: Tuple[float, float]
    residual: float
    alpha: float = float("nan")
    log_scale_applied: float = 0.0
    n_samples: int = 0

    @property
    def amplitude(self) -> float:
        return math.hypot(self.C1, self.C2)


def fit_far_field(y, scaled, window: Tuple[float, float] = DEFAULT_WINDOW,
                  alpha: float = float("nan"), log_scale_applied: float = 0.0,
                  max_condition: float = 1e8) -> FitResult:
    """Least-squares fit of a scaled profile to ``C1 cos(c1 y^(4/3)) + C2 sin(c1 y^(4/3))``."""
    y = np.asarray(y, dtype=float)
    scaled = np.asarray(scaled, dtype=float)
    lo, hi = window
    mask = (y >= lo) & (y <= hi)
    count = int(mask.sum())
    if count < MIN_WINDOW_SAMPLES:
        raise FitError(f"only {count} samples in window [{lo}, {hi}]; need {MIN_WINDOW_SAMPLES}")
    yw = y[mask]
    if FOCUSING.c1 * (yw[-1] ** GAMMA - yw[0] ** GAMMA) < 2.0 * math.pi:
        raise FitError("window shorter than one oscillation period")
    phase = FOCUSING.c1 * yw**GAMMA
    X = np.column_stack([np.cos(phase), np.sin(phase)])
    if np.linalg.cond(X) > max_condition:
        raise FitError("ill-conditioned fit basis")
    coef, *_ = np.linalg.lstsq(X, scaled[mask], rcond=None)
    residual = float(np.sqrt(np.mean((X @ coef - scaled[mask]) ** 2)))
    return FitResult(C1=float(coef[0]), C2=float(coef[1]), window=(float(lo), float(hi)),
                     residual=residual, alpha=alpha, log_scale_applied=log_scale_applied,
                     n_samples=count)


def window_samples(window=DEFAULT_WINDOW, n_samples: int = DEFAULT_WINDOW_SAMPLES) -> np.ndarray:
    return np.linspace(window[0], window[1], n_samples)


def far_field_constants(N: int, kind: Kind, alpha: float, window=DEFAULT_WINDOW,
                        n_samples: int = DEFAULT_WINDOW_SAMPLES, f0: Optional[float] = None,
                        f2: Optional[float] = None, **integrate_kwargs) -> FitResult:
    """Shoot at ``alpha`` with the given origin normalisation and fit (C1, C2)."""
    params = derive_params(0.0, N, alpha)
    if f0 is None and f2 is None:
        start = origin_series(params, kind)
    else:
        start = general_start(params, f0 or 0.0, f2 or 0.0)
    ys = window_samples(window, n_samples)
    traj = integrate(params, start, window[1], samples=ys, **integrate_kwargs)
    y, sc = scaled_profile(traj)
    return fit_far_field(y, sc, window, alpha=alpha, log_scale_applied=float(traj.log_scale[-1]))


def general_start(params: SimilarityParams, f0: float, f2: float,
                  y_start: float = DEFAULT_Y_START) -> OriginStart:
    """Linear-case origin start with arbitrary ``f(0)`` and ``f''(0)``."""
    if params.n != 0:
        raise ParameterError("general starts are only superposable for n = 0")
    a = series_coefficients(params.alpha, params.N, "sh1", 6, beta=params.beta, sign=params.sgn)
    b = series_coefficients(params.alpha, params.N, "sh2", 6, beta=params.beta, sign=params.sgn)
    coeffs = [f0 * u + f2 * v for u, v in zip(a, b)]
    kind = "sh1" if f0 != 0 else "sh2"
    return OriginStart(kind=kind, f0=f0, f2=f2, series=tuple(float(c) for c in coeffs[0::2]),
                       y_start=y_start)


@dataclass
class ScanTable:
    N: int
    kind: str
    alpha: np.ndarray
    C1: np.ndarray
    C2: np.ndarray
    residual: np.ndarray
    failures: Dict[float, str] = field(default_factory=dict)

    def rows(self):
        return list(zip(self.alpha, self.C1, self.C2, self.residual))


def scan_alpha(N: int, kind: Kind, alpha_grid: Sequence[float], window=DEFAULT_WINDOW,
               n_samples: int = DEFAULT_WINDOW_SAMPLES) -> ScanTable:
    """One shot and fit per grid value; failed points become NaN gaps."""
    grid = np.asarray(alpha_grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise ParameterError("alpha grid must be a non-empty 1-D sequence")
    if np.any(np.diff(grid) <= 0):
        raise ParameterError("alpha grid must be strictly increasing")
    C1 = np.full(len(grid), np.nan)
    C2 = np.full(len(grid), np.nan)
    res = np.full(len(grid), np.nan)
    failures = {}
    for i, a in enumerate(grid):
        try:
            fit = far_field_constants(N, kind, float(a), window, n_samples)
        except (IntegrationError, FitError) as exc:
            failures[float(a)] = str(exc)
            continue
        C1[i], C2[i], res[i] = fit.C1, fit.C2, fit.residual
    return ScanTable(N=N, kind=kind, alpha=grid, C1=C1, C2=C2, residual=res, failures=failures)


def kind_for_branch(k: int) -> Kind:
    """Odd branches start with f(0)=0, f''(0)=1; even ones with f(0)=1, f''(0)=0."""
    return "sh2" if k % 2 else "sh1"


@dataclass(frozen=True)
class LinearEigenvalue:
    alpha: float
    N: int
    kind: str
    zero_C1: float
    zero_C2: float
    C1: float
    C2: float

    @property
    def coincidence(self) -> float:
        return abs(self.zero_C1 - self.zero_C2)


def _sign_brackets(alpha, *columns) -> List[Tuple[float, float]]:
    out = set()
    for values in columns:
        for i in range(len(alpha) - 1):
            a, b = values[i], values[i + 1]
            if np.isfinite(a) and np.isfinite(b) and (a == 0 or a * b < 0):
                out.add((float(alpha[i]), float(alpha[i + 1])))
    return sorted(out)


def _component_zero(func: Callable[[float], float], centre: float, width: float,
                    xtol: float) -> Optional[float]:
    lo, hi = centre - width, centre + width
    flo, fhi = func(lo), func(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if flo * fhi > 0:
        return None
    return optimize.brentq(func, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)


def find_linear_eigenvalues(N: int, k_max: int, step: float = 0.1, alpha_min: float = 0.05,
                            coincidence_tol: float = 1e-6, xtol: float = 1e-12,
                            window=DEFAULT_WINDOW, n_samples: int = DEFAULT_WINDOW_SAMPLES,
                            kinds: Optional[Dict[int, Kind]] = None) -> List[LinearEigenvalue]:
    """Locate the first ``k_max`` coincident zeros of (C1, C2) in alpha.

    Each origin kind is scanned on a uniform grid.  Every grid interval where
    C1 or C2 changes sign is refined by Brent's method on the projection of
    (C1, C2) onto the chord ``C(hi) - C(lo)``, which changes sign across a
    coincident zero even where one component only touches zero.  A candidate
    is kept when the amplitude has collapsed there and the separately refined
    zeros of C1 and C2 lie within ``coincidence_tol`` of each other.  Branch
    ``k`` is the ``k``-th eigenvalue found with ``kinds[k]`` (odd k from sh2,
    even k from sh1 by default).
    """
    if int(k_max) != k_max or k_max < 1:
        raise ParameterError("k_max must be a positive integer")
    kinds = dict(kinds or {})
    for k in range(1, k_max + 1):
        kinds.setdefault(k, kind_for_branch(k))
    alpha_max = 0.5 * k_max + 2.5 * step
    grid = np.arange(alpha_min, alpha_max + 0.5 * step, step)

    found: Dict[str, List[LinearEigenvalue]] = {}
    for kind in sorted(set(kinds.values())):
        cache: Dict[float, np.ndarray] = {}

        def constants(a, kind=kind, cache=cache):
            if a not in cache:
                fit = far_field_constants(N, kind, a, window, n_samples)
                cache[a] = np.array([fit.C1, fit.C2])
            return cache[a]

        table = np.array([constants(float(a)) for a in grid])
        accepted = []
        for lo, hi in _sign_brackets(grid, table[:, 0], table[:, 1]):
            chord = constants(hi) - constants(lo)

            def projected(a, chord=chord):
                return float(constants(a) @ chord)

            if projected(lo) * projected(hi) > 0:
                continue
            centre = optimize.brentq(projected, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)
            scale = max(np.hypot(*constants(lo)), np.hypot(*constants(hi)))
            if np.hypot(*constants(centre)) > 1e-6 * scale:
                continue
            width = min(1e-5, 0.25 * (hi - lo))
            z1 = _component_zero(lambda a: constants(a)[0], centre, width, xtol)
            z2 = _component_zero(lambda a: constants(a)[1], centre, width, xtol)
            if z1 is None or z2 is None or abs(z1 - z2) > coincidence_tol:
                continue
            C1, C2 = constants(centre)
            accepted.append(LinearEigenvalue(alpha=centre, N=N, kind=kind, zero_C1=z1,
                                             zero_C2=z2, C1=float(C1), C2=float(C2)))
        found[kind] = sorted(accepted, key=lambda e: e.alpha)

    result = []
    for k in range(1, k_max + 1):
        kind = kinds[k]
        # branch k is the rank of k among the branches sharing its kind
        rank = sum(1 for j in range(1, k + 1) if kinds[j] == kind) - 1
        pool = found[kind]
        if rank >= len(pool):
            raise EigenvalueNotFound(
                f"N={N}: only {len(pool)} coincident zeros with kind {kind} below alpha={alpha_max:.3g}")
        result.append(pool[rank])
    return result


def two_parameter_shoot(N: int, k: int, alpha_guess: float, nu_guess: float = 0.0,
                        window=DEFAULT_WINDOW, n_samples: int = DEFAULT_WINDOW_SAMPLES,
                        tol: float = 1e-12) -> Tuple[float, float, FitResult]:
    """Solve ``C1(alpha, nu) = C2(alpha, nu) = 0`` for the linear problem.

    ``nu`` is the free initial datum: ``f''(0)`` on even branches (with
    ``f(0) = 1``) and ``f(0)`` on odd ones (with ``f''(0) = 1``).
    """
    even = kind_for_branch(k) == "sh1"

    def constants(x):
        a, nu = float(x[0]), float(x[1])
        f0, f2 = (1.0, nu) if even else (nu, 1.0)
        fit = far_field_constants(N, kind_for_branch(k), a, window, n_samples, f0=f0, f2=f2)
        return np.array([fit.C1, fit.C2])

    sol = optimize.root(constants, [alpha_guess, nu_guess], method="hybr", tol=tol)
    if not sol.success:
        raise EigenvalueNotFound(f"2-2 shooting did not converge: {sol.message}")
    a, nu = float(sol.x[0]), float(sol.x[1])
    f0, f2 = (1.0, nu) if even else (nu, 1.0)
    fit = far_field_constants(N, kind_for_branch(k), a, window, n_samples, f0=f0, f2=f2)
    return a, nu, fit


def eigenfunction_oracle(k: int, N: int) -> List[Fraction]:
    """Exact polynomial coefficients (index = power of y) of the k-th linear eigenfunction.

    The first four are the closed forms; higher k come from the series
    recurrence, which terminates because ``alpha - m/4`` vanishes at ``m = 2k``.
    """
    if int(k) != k or k < 1:
        raise ParameterError("k must be a positive integer")
    N = Fraction(N)
    closed = {
        1: {2: Fraction(1, 2)},
        2: {0: Fraction(1), 4: 1 / (8 * N * (N + 2))},
        3: {2: Fraction(1, 2), 6: 1 / (48 * (N + 2) * (N + 4))},
        4: {0: Fraction(1), 4: 1 / (4 * N * (N + 2)), 8: 1 / (192 * N * (N + 2) * (N + 4) * (N + 6))},
    }
    if k in closed:
        coeffs = [Fraction(0)] * (max(closed[k]) + 1)
        for power, c in closed[k].items():
            coeffs[power] = c
        return coeffs
    coeffs = series_coefficients(Fraction(k, 2), int(N), kind_for_branch(k), 2 * k + 4)
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return coeffs


def polynomial_value(coeffs: Sequence, y):
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    for power in range(len(coeffs) - 1, -1, -1):
        out = out * y + float(coeffs[power])
    return out
