"""Nonlinear (n > 0) eigenvalues by shooting with a regularised mobility.

A profile is admissible when its far field follows the minimal growth
``f ~ C y**mu`` rather than the oscillatory maximal bundle ``~ y**(4/n)``.
On ``f = C y**mu`` the combination ``beta y f' - alpha f`` vanishes
identically, so that combination evaluated at a matching radius ``y_star``
is the shooting residual.

Branches ``alpha_k(n)`` start from the linear eigenvalues ``k/2`` and are
followed in ``n`` by continuation.
"""

from dataclasses import dataclass, field, replace
from typing import List, Literal, Optional, Sequence

import numpy as np
from scipy import optimize

from .errors import (
    DegenerateOrigin,
    EigenvalueNotFound,
    IndeterminateResidual,
    IntegrationError,
    NoBracketFound,
    OscillatoryLoss,
    ParameterError,
    SolutionOverflow,
    UnverifiedRoot,
)
from .linear_spectrum import kind_for_branch
from .radial_ode import (
    DEFAULT_DELTA,
    DEFAULT_Y_START,
    Kind,
    OriginStart,
    SimilarityParams,
    Trajectory,
    derive_params,
    integrate,
    regularized_mobility,
    series_coefficients,
)

__all__ = [
    "BranchPoint",
    "Branch",
    "regularized_mobility",
    "minimal_growth_residual",
    "nonlinear_start",
    "solve_branch_point",
    "trace_branch",
    "branch_slope",
    "approximate_eigenvalue",
]

Variant = Literal["profile", "envelope", "literal"]

DEFAULT_Y_STAR = 40.0
DEFAULT_RESIDUAL_TOL = 1e-6
DEFAULT_CHECK_TOL = 1e-3
DEFAULT_ALPHA_TOL = 1e-6
# a root must survive moving the matching radius in by this factor
RADIUS_RATIO = 0.75
DEFAULT_RADIUS_TOL = 1e-3
RESIDUAL_FLOOR = 1e-300
MIN_Y_STAR = 10.0
SLOPE_N_MAX = 0.05


def approximate_eigenvalue(k: int, n: float) -> float:
    """Constant-exponent approximation ``alpha_k(0) / (1 - alpha_k(0) n)``."""
    a0 = 0.5 * k
    if a0 * n >= 1:
        raise ParameterError(f"approximation undefined for n={n} >= {1 / a0}")
    return a0 / (1.0 - a0 * n)


def minimal_growth_residual(params: SimilarityParams, trajectory: Trajectory, y_star: float,
                            variant: Variant = "profile", floor: float = RESIDUAL_FLOOR) -> float:
    """Departure from minimal growth at ``y_star``.

    ``profile`` (default) returns ``(beta y f' - alpha f) / max(|f|, floor)``,
    the relative deviation of the local exponent from ``mu``; ``envelope``
    divides by ``y**mu`` instead, which has no poles at zeros of ``f`` and is
    what the root finders use; ``literal`` uses ``mu`` in place of ``beta``,
    a combination that does not vanish on ``C y**mu`` and is kept for
    comparison only.
    """
    s = trajectory.at(y_star)
    y, f, df = s.y, s.f, s.df
    if variant == "envelope":
        return (params.beta * y * df - params.alpha * f) / y ** params.mu
    if variant not in ("profile", "literal"):
        raise ParameterError(f"unknown residual variant {variant!r}")
    if abs(f) < floor and abs(y * df) < floor:
        raise IndeterminateResidual(f"f and f' both negligible at y={y_star}")
    coef = params.beta if variant == "profile" else params.mu
    return (coef * y * df - params.alpha * f) / max(abs(f), floor)


def nonlinear_start(params: SimilarityParams, kind: Kind, nu: float = 0.0,
                    delta: float = DEFAULT_DELTA, y_start: float = DEFAULT_Y_START) -> OriginStart:
    """Origin start with the free datum ``nu`` switched on.

    ``sh1`` fixes ``f(0) = 1`` and sets ``f''(0) = nu``; ``sh2`` fixes
    ``f''(0) = 1`` and sets ``f(0) = nu``. The mobility is frozen at its
    value at the origin, which is accurate to the series order at the handoff.
    """
    if kind == "sh1":
        f0, f2 = 1.0, float(nu)
    elif kind == "sh2":
        f0, f2 = float(nu), 1.0
    else:
        raise ParameterError(f"unknown origin kind {kind!r}")
    degenerate = params.n > 0 and f0 == 0
    if degenerate and delta <= 0:
        raise DegenerateOrigin("vanishing f(0) with n > 0 needs a positive mobility floor")
    mob = float(regularized_mobility(f0, params.n, delta))
    a = series_coefficients(params.alpha, params.N, "sh1", 6, beta=params.beta,
                            sign=params.sgn, mobility=mob)
    b = series_coefficients(params.alpha, params.N, "sh2", 6, beta=params.beta,
                            sign=params.sgn, mobility=mob)
    coeffs = [f0 * float(u) + f2 * float(v) for u, v in zip(a, b)]
    return OriginStart(kind=kind, f0=f0, f2=f2, series=tuple(coeffs[0::2]), y_start=y_start,
                       delta=delta, degenerate=degenerate)


@dataclass(frozen=True)
class BranchPoint:
    n: float
    alpha: float
    kind: str
    delta: float
    y_star: float
    residual: float
    N: int = 1
    k: int = 1
    nu: Optional[float] = None
    check_residual: float = float("nan")
    local_exponent: float = float("nan")
    mu: float = float("nan")
    delta_shift: Optional[float] = None
    delta_sensitive: bool = False
    radius_shift: Optional[float] = None
    evaluations: int = 0

    @property
    def exponent_ok(self) -> bool:
        """Local log-slope at ``y_star`` within 2% of ``mu``."""
        return abs(self.local_exponent - self.mu) <= 0.02 * abs(self.mu)


@dataclass
class Branch:
    k: int
    N: int
    points: List[BranchPoint] = field(default_factory=list)
    slope_estimate: Optional[float] = None
    failure: Optional[str] = None

    @property
    def n(self) -> np.ndarray:
        return np.array([p.n for p in self.points])

    @property
    def alpha(self) -> np.ndarray:
        return np.array([p.alpha for p in self.points])


class _Shooter:
    """Residual evaluations at fixed ``(n, N, kind, delta)`` with call counting."""

    def __init__(self, n, N, kind, delta, y_star, y_check, sign="focusing"):
        self.n, self.N, self.kind, self.delta = n, N, kind, delta
        self.y_star, self.y_check, self.sign = y_star, y_check, sign
        self.calls = 0

    def trajectory(self, alpha, nu=0.0, samples=None):
        params = derive_params(self.n, self.N, alpha, self.sign)
        start = nonlinear_start(params, self.kind, nu, self.delta)
        if samples is None:
            samples = np.unique([self.y_check, 0.75 * self.y_star, self.y_star])
        self.calls += 1
        return params, integrate(params, start, self.y_star, samples=samples)

    def envelope(self, alpha, nu=0.0, radii=None):
        params, traj = self.trajectory(alpha, nu)
        radii = (self.y_star,) if radii is None else radii
        return [minimal_growth_residual(params, traj, y, "envelope") for y in radii]


def _find_bracket(func, guess, lo_bound, hi_bound, rel_step, max_rel_width):
    """Nearest sign change of ``func`` walking outward from ``guess``."""
    step = rel_step * guess
    values = {}

    def value(a):
        if a not in values:
            try:
                values[a] = func(a)
            except IntegrationError:
                values[a] = np.nan
        return values[a]

    n_steps = int(np.ceil(max_rel_width / rel_step))
    prev = {+1: guess, -1: guess}
    for j in range(1, n_steps + 1):
        for side in (+1, -1):
            a = guess + side * j * step
            if not lo_bound < a < hi_bound:
                continue
            fa, fp = value(a), value(prev[side])
            if np.isfinite(fa) and np.isfinite(fp) and fa * fp <= 0:
                return tuple(sorted((a, prev[side])))
            prev[side] = a
    return None


def _lost_oscillation(shooter, alpha, nu):
    """True when the shot grows at the maximal rate without changing sign."""
    ys = np.linspace(0.25 * shooter.y_star, shooter.y_star, 400)
    try:
        _, traj = shooter.trajectory(alpha, nu, samples=ys)
    except IntegrationError:
        return False
    if np.any(np.diff(np.sign(traj.f)) != 0):
        return False
    slope = traj.y[-1] * traj.df[-1] / traj.f[-1]
    return bool(slope >= 0.5 * 4.0 / shooter.n)


def solve_branch_point(n: float, N: int, k: int, alpha_guess: Optional[float] = None,
                       delta: float = DEFAULT_DELTA, y_star: float = DEFAULT_Y_STAR,
                       free_datum: bool = False, nu_guess: float = 0.0,
                       residual_tol: float = DEFAULT_RESIDUAL_TOL,
                       check_tol: float = DEFAULT_CHECK_TOL, alpha_tol: float = DEFAULT_ALPHA_TOL,
                       rel_step: float = 0.02, max_rel_width: float = 0.3,
                       check_delta: bool = True, radius_tol: Optional[float] = DEFAULT_RADIUS_TOL,
                       sign="focusing") -> BranchPoint:
    """Nonlinear eigenvalue of branch ``k`` at mobility exponent ``n``.

    By default only ``alpha`` is adjusted, with the origin normalisation fixed
    by branch parity (``sh2`` for odd ``k``, ``sh1`` for even ``k``): the
    envelope residual at ``y_star`` is bracketed outward from ``alpha_guess``
    and refined with Brent's method. A root is accepted only if the relative
    residual at ``0.75 y_star`` is also below ``check_tol``.

    With ``free_datum`` the second origin datum (``f''(0)`` for ``sh1``,
    ``f(0)`` for ``sh2``) is solved for as well, from the two conditions of
    vanishing residual at ``y_star`` and ``0.75 y_star``; the check radius
    moves to ``0.5 y_star``.

    A genuine eigenvalue does not depend on the matching radius, so unless
    ``radius_tol`` is None the root is re-solved at ``0.75 y_star`` (without
    the check-radius test) and rejected when ``alpha`` moves by more than
    ``radius_tol * alpha``; spurious roots of a residual that the growing
    bundle has not yet amplified fail this test.

    ``y_star`` is reduced by factors of 0.75 (down to 10) when the shot
    overflows or a root fails any test, since the growing bundle amplifies
    round-off at large radii. When
    ``check_delta`` is set the point is re-solved with ``delta / 2`` and
    flagged if ``alpha`` moves by more than ``alpha_tol``.
    """
    if not 0 < n < 2:
        raise ParameterError(f"n={n} outside (0, 2)")
    if k < 1:
        raise ParameterError(f"branch index k={k} must be >= 1")
    if delta < 0:
        raise ParameterError("delta must be non-negative")
    if alpha_guess is None:
        alpha_guess = approximate_eigenvalue(k, n) if 0.5 * k * n < 1 else 0.5 * k
    if not (np.isfinite(alpha_guess) and alpha_guess > 0):
        raise ParameterError(f"alpha_guess={alpha_guess} must be positive")
    kind = kind_for_branch(k)

    ys = float(y_star)
    last_error = None
    while ys >= MIN_Y_STAR:
        try:
            point = _solve_at_radius(n, N, k, kind, alpha_guess, nu_guess, delta, ys, free_datum,
                                     residual_tol, check_tol, alpha_tol, rel_step,
                                     max_rel_width, sign)
        except (NoBracketFound, OscillatoryLoss):
            raise
        except (SolutionOverflow, EigenvalueNotFound) as exc:
            last_error = exc
            ys *= 0.75
            continue
        if radius_tol is None:
            break
        try:
            inner = _solve_at_radius(n, N, k, kind, point.alpha,
                                     point.nu if point.nu is not None else nu_guess, delta,
                                     RADIUS_RATIO * ys, free_datum, residual_tol, np.inf,
                                     alpha_tol, rel_step, max_rel_width, sign)
            shift = inner.alpha - point.alpha
        except (IntegrationError, EigenvalueNotFound) as exc:
            shift, reason = None, f"re-solve at y*={RADIUS_RATIO * ys:g} failed: {exc}"
        else:
            reason = (f"alpha={point.alpha:.8g} at y*={ys:g} moves by {shift:.3g} "
                      f"at y*={RADIUS_RATIO * ys:g}")
        if shift is not None and abs(shift) <= radius_tol * point.alpha:
            point = replace(point, radius_shift=shift,
                            evaluations=point.evaluations + inner.evaluations)
            break
        last_error = UnverifiedRoot(reason)
        ys *= 0.75
    else:
        if last_error is None:
            raise ParameterError(f"y_star={y_star} below the minimum {MIN_Y_STAR:g}")
        raise type(last_error)(f"no verified root for y_star in [{MIN_Y_STAR:g}, {y_star:g}]: "
                               f"{last_error}")

    if check_delta and delta > 0:
        half = solve_branch_point(n, N, k, point.alpha, 0.5 * delta, point.y_star, free_datum,
                                  point.nu if point.nu is not None else nu_guess,
                                  residual_tol, check_tol, alpha_tol, rel_step, max_rel_width,
                                  check_delta=False, radius_tol=None, sign=sign)
        shift = half.alpha - point.alpha
        point = replace(point, delta_shift=shift, delta_sensitive=abs(shift) > alpha_tol,
                        evaluations=point.evaluations + half.evaluations)
    return point


def _solve_at_radius(n, N, k, kind, alpha_guess, nu_guess, delta, y_star, free_datum,
                     residual_tol, check_tol, alpha_tol, rel_step, max_rel_width, sign):
    y_check = (0.5 if free_datum else 0.75) * y_star
    shooter = _Shooter(n, N, kind, delta, y_star, y_check, sign)
    nu = None

    if free_datum:
        y_mid = 0.75 * y_star

        def conditions(x):
            try:
                return shooter.envelope(x[0], x[1], radii=(y_star, y_mid))
            except SolutionOverflow:
                raise
            except (IntegrationError, ParameterError):
                return [1e10, 1e10]

        sol = optimize.root(conditions, [alpha_guess, nu_guess], method="hybr",
                            options={"xtol": 1e-12})
        if not sol.success:
            raise NoBracketFound(f"two-condition solve failed at n={n}: {sol.message}")
        alpha, nu = float(sol.x[0]), float(sol.x[1])
        if abs(alpha - alpha_guess) > max_rel_width * alpha_guess:
            raise UnverifiedRoot(f"solve left the search window: alpha={alpha:.6g} "
                                 f"from guess {alpha_guess:.6g}")
    else:
        def residual(a):
            return shooter.envelope(a)[0]

        bracket = _find_bracket(residual, alpha_guess, 0.0, np.inf, rel_step, max_rel_width)
        if bracket is None:
            if _lost_oscillation(shooter, alpha_guess, 0.0):
                raise OscillatoryLoss(f"no sign change of the residual near alpha={alpha_guess:.6g} "
                                      f"and the far field does not oscillate (n={n})")
            raise NoBracketFound(f"no sign change of the residual within "
                                 f"{max_rel_width:.0%} of alpha={alpha_guess:.6g} (n={n})")
        # the residual is steep near small n: converge to machine precision
        alpha = optimize.brentq(residual, *bracket, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                                maxiter=200)

    params, traj = shooter.trajectory(alpha, 0.0 if nu is None else nu)
    res = minimal_growth_residual(params, traj, y_star, "profile")
    check = minimal_growth_residual(params, traj, y_check, "profile")
    if abs(res) > residual_tol:
        raise EigenvalueNotFound(f"residual {res:.3g} above tolerance {residual_tol:g}")
    if not abs(check) <= check_tol:
        raise UnverifiedRoot(f"root alpha={alpha:.8g} at y*={y_star:g} leaves residual "
                             f"{check:.3g} at y={y_check:g}")
    s = traj.at(y_star)
    return BranchPoint(n=n, alpha=alpha, kind=kind, delta=delta, y_star=y_star, residual=res,
                       N=N, k=k, nu=nu, check_residual=check,
                       local_exponent=s.y * s.df / s.f, mu=params.mu,
                       evaluations=shooter.calls)


def trace_branch(N: int, k: int, n_grid: Sequence[float], delta: float = DEFAULT_DELTA,
                 y_star: float = DEFAULT_Y_STAR, **solve_kwargs) -> Branch:
    """Follow branch ``k`` through an increasing grid of ``n``.

    The first guess is the constant-exponent approximation; later guesses
    extrapolate linearly through the last two converged points. The first
    failure ends the branch and its message is kept in ``Branch.failure``.
    """
    grid = np.asarray(n_grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise ParameterError("n_grid must be a non-empty 1-D sequence")
    if np.any(np.diff(grid) <= 0):
        raise ParameterError("n_grid must be strictly increasing")
    if grid[0] > 1e-3:
        raise ParameterError("n_grid must start at n <= 1e-3 to anchor the linear limit")
    if grid[0] <= 0:
        raise ParameterError("n_grid must be positive; n = 0 is the linear problem")
    limit = 2.0 / k
    if grid[-1] >= limit:
        raise ParameterError(f"n_grid must stay below 1/alpha_k(0) = {limit:g}")

    branch = Branch(k=k, N=N)
    nu = solve_kwargs.pop("nu_guess", 0.0)
    for n in grid:
        pts = branch.points
        if len(pts) >= 2:
            p, q = pts[-2], pts[-1]
            guess = q.alpha + (q.alpha - p.alpha) * (n - q.n) / (q.n - p.n)
        elif len(pts) == 1:
            guess = pts[0].alpha * approximate_eigenvalue(k, n) / approximate_eigenvalue(k, pts[0].n)
        else:
            guess = approximate_eigenvalue(k, n)
        if pts and pts[-1].nu is not None:
            nu = pts[-1].nu
        try:
            point = solve_branch_point(n, N, k, guess, delta, y_star, nu_guess=nu, **solve_kwargs)
        except (EigenvalueNotFound, IntegrationError, ParameterError) as exc:
            branch.failure = f"n={n:g}: {type(exc).__name__}: {exc}"
            break
        branch.points.append(point)
    try:
        branch.slope_estimate = branch_slope(branch)
    except ParameterError:
        branch.slope_estimate = None
    return branch


def branch_slope(branch: Branch, n_max: float = SLOPE_N_MAX) -> float:
    """Least-squares slope of ``alpha - k/2`` against ``n`` over points with ``n <= n_max``."""
    n = branch.n
    a = branch.alpha
    sel = n <= n_max
    if np.count_nonzero(sel) < 3:
        raise ParameterError(f"need at least 3 points with n <= {n_max}, "
                             f"have {int(np.count_nonzero(sel))}")
    n, a = n[sel], a[sel] - 0.5 * branch.k
    return float(np.dot(n, a) / np.dot(n, n))
