"""Matched WKBJ asymptotics of maximal solutions as n -> 0.

Inner region (``1 << y``, ``|f|**n ~ 1``): the linear far field
``f0 ~ y**(-(2/3)(N+2 alpha)) (k1 exp(a1 y**(4/3)) + k2 exp(a2 y**(4/3)))``.
Outer region (``Y = n**(3/4) y`` of order one): ``f ~ exp(b(Y)/n) B(Y)`` with

    b(Y) = a (3/c0) ln(1 + (c0/3) Y**(4/3)),
    ln|B| = (|k| - (2/3)(N+2 alpha) ln Y - (c0/12)(2N + 3 alpha - 4) Y**(4/3))
            / (1 + (c0/3) Y**(4/3)).

Everything here evaluates these closed forms and their residuals; nothing is
solved numerically except the optional quadrature cross-check of ``ln|B|``.
"""

from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ParameterError
from .linear_spectrum import FOCUSING, CharRoots, algebraic_exponent

__all__ = [
    "WkbjInner",
    "WkbjOuter",
    "inner_eval",
    "inner_log",
    "wkbj_amplitude_ode_check",
    "outer_b",
    "outer_b_prime",
    "eikonal_residual",
    "outer_amplitude",
    "transport_residual",
    "outer_amplitude_quadrature",
    "outer_coordinate",
    "match_inner_outer",
]

Convention = Literal["n^(3/4)", "n^(-3/4)"]
Eikonal = Literal["cubic", "printed"]


@dataclass(frozen=True)
class WkbjInner:
    a: complex
    k1: complex
    k2: complex
    N: int = 1
    alpha: float = 0.5

    @classmethod
    def from_far_field(cls, C1: float, C2: float, N: int = 1, alpha: float = 0.5,
                       roots: CharRoots = FOCUSING) -> "WkbjInner":
        """Conjugate pair reproducing ``C1 cos + C2 sin`` of the linear far field."""
        k1 = complex(0.5 * C1, -0.5 * C2)
        return cls(a=roots.a1, k1=k1, k2=k1.conjugate(), N=N, alpha=alpha)


@dataclass(frozen=True)
class WkbjOuter:
    Y: np.ndarray
    b: np.ndarray
    B_log: np.ndarray
    k_const: float


def inner_log(inner: WkbjInner, y, roots: CharRoots = FOCUSING):
    """Complex logarithm of the inner expansion, safe for large ``y``."""
    y = np.asarray(y, dtype=float)
    z = y ** (4.0 / 3.0)
    p = algebraic_exponent(inner.N, inner.alpha)
    terms = []
    for k, a in ((inner.k1, roots.a1), (inner.k2, roots.a2)):
        if k != 0:
            terms.append(np.log(complex(k)) + a * z)
    if not terms:
        return np.full(y.shape, -np.inf + 0j)
    if len(terms) == 1:
        out = terms[0]
    else:
        t1, t2 = terms
        big = np.where(t1.real >= t2.real, t1, t2)
        small = np.where(t1.real >= t2.real, t2, t1)
        out = big + np.log1p(np.exp(small - big))
    return out - p * np.log(y)


def inner_eval(inner: WkbjInner, y, roots: CharRoots = FOCUSING):
    """Inner approximation ``f0(y)``; real when ``k2 = conj(k1)``."""
    y = np.asarray(y, dtype=float)
    if inner.k1 == 0 and inner.k2 == 0:
        return np.zeros_like(y)
    with np.errstate(over="ignore"):
        val = np.exp(inner_log(inner, y, roots))
    if inner.k2 == np.conj(inner.k1):
        return val.real
    return val


def wkbj_amplitude_ode_check(a: complex, N: int, alpha: float, exponent: Optional[float] = None,
                             k: complex = 1.0, eikonal: Eikonal = "cubic",
                             y: Optional[Sequence[float]] = None) -> dict:
    """Residuals of the inner eikonal and transport equations on ``phi = a y**(4/3)``.

    The eikonal is ``(phi')**3 = -y/4`` (the form the characteristic roots
    satisfy) or, with ``eikonal="printed"``, ``(phi')**3 = +y/4``. The
    transport equation ``3 y A' + 2 (N + 2 alpha - 1 - 12 (phi')**2 phi'') A = 0``
    is evaluated for ``A = k y**exponent`` (default exponent
    ``-(2/3)(N + 2 alpha)``). Residuals are relative to the size of the terms.
    """
    ys = np.geomspace(1.0, 100.0, 25) if y is None else np.asarray(y, dtype=float)
    p = -algebraic_exponent(N, alpha) if exponent is None else float(exponent)
    a = complex(a)
    d1 = 4.0 / 3.0 * a * ys ** (1.0 / 3.0)
    d2 = 4.0 / 9.0 * a * ys ** (-2.0 / 3.0)
    target = -0.25 * ys if eikonal == "cubic" else 0.25 * ys
    eik = np.abs(d1**3 - target) / np.abs(target)
    A = k * ys**p
    dA = k * p * ys ** (p - 1)
    coef = 2.0 * (N + 2 * alpha - 1 - 12.0 * d1**2 * d2)
    trans_terms = (3.0 * ys * dA, coef * A)
    trans = np.abs(trans_terms[0] + trans_terms[1])
    scale = np.maximum(np.abs(trans_terms[0]), np.abs(trans_terms[1]))
    scale = np.where(scale > 0, scale, 1.0)
    # exponent the transport equation forces with this eikonal
    consistent = -2.0 / 3.0 * (N + 2 * alpha - 1) + 8.0 * complex(d1[0] ** 2 * d2[0])
    return {
        "eikonal": float(np.max(eik)),
        "transport": float(np.max(trans / scale)),
        "exponent": p,
        "consistent_exponent": consistent,
        "eikonal_form": eikonal,
    }


def outer_b(Y, a: complex = FOCUSING.a1, c0: float = FOCUSING.c0):
    """Outer phase ``a (3/c0) ln(1 + (c0/3) Y**(4/3))``."""
    Y = np.asarray(Y, dtype=float)
    if np.any(Y <= 0):
        raise ParameterError("outer coordinate must be positive")
    return a * (3.0 / c0) * np.log1p(c0 / 3.0 * Y ** (4.0 / 3.0))


def outer_b_prime(Y, a: complex = FOCUSING.a1, c0: float = FOCUSING.c0):
    Y = np.asarray(Y, dtype=float)
    return 4.0 / 3.0 * a * Y ** (1.0 / 3.0) / (1.0 + c0 / 3.0 * Y ** (4.0 / 3.0))


def eikonal_residual(Y, a: complex = FOCUSING.a1, c0: float = FOCUSING.c0):
    """``|exp(b)| (b')**3 + Y/4``, divided by ``Y/4``."""
    Y = np.asarray(Y, dtype=float)
    b = outer_b(Y, a, c0)
    val = np.exp(b.real) * outer_b_prime(Y, a, c0) ** 3 + 0.25 * Y
    return np.abs(val) / (0.25 * Y)


def outer_amplitude(Y, N: int, alpha: float, k_const: float = 0.0, c0: float = FOCUSING.c0):
    """``ln|B(Y)|`` as matched to the inner amplitude."""
    Y = np.asarray(Y, dtype=float)
    if np.any(Y <= 0):
        raise ParameterError("outer coordinate must be positive")
    z = Y ** (4.0 / 3.0)
    num = k_const - 2.0 / 3.0 * (N + 2 * alpha) * np.log(Y) - c0 / 12.0 * (2 * N + 3 * alpha - 4) * z
    return num / (1.0 + c0 / 3.0 * z)


def _transport_real(Y, L, dL, N, alpha, a, c0):
    """Real part of ``3 B'/B + (1 - alpha/4 + ln|B|) b' + 6 b''/b' + 2((N-1) + 2 alpha)/Y``."""
    D = 1.0 + c0 / 3.0 * Y ** (4.0 / 3.0)
    dD = 4.0 * c0 / 9.0 * Y ** (1.0 / 3.0)
    bp = outer_b_prime(Y, a, c0)
    bpp_over_bp = 1.0 / (3.0 * Y) - dD / D
    return 3.0 * dL + (1.0 - alpha / 4.0 + L) * bp.real + 6.0 * bpp_over_bp \
        + 2.0 * ((N - 1) + 2 * alpha) / Y


def transport_residual(Y, N: int, alpha: float, k_const: float = 0.0,
                       a: complex = FOCUSING.a1, c0: float = FOCUSING.c0):
    """Real part of the outer transport equation on the closed-form ``ln|B|``.

    ``d ln|B| / dY`` is taken analytically. Returned relative to the largest
    term.
    """
    Y = np.asarray(Y, dtype=float)
    z = Y ** (4.0 / 3.0)
    D = 1.0 + c0 / 3.0 * z
    dD = 4.0 * c0 / 9.0 * Y ** (1.0 / 3.0)
    num = k_const - 2.0 / 3.0 * (N + 2 * alpha) * np.log(Y) - c0 / 12.0 * (2 * N + 3 * alpha - 4) * z
    dnum = -2.0 / 3.0 * (N + 2 * alpha) / Y - c0 / 9.0 * (2 * N + 3 * alpha - 4) * Y ** (1.0 / 3.0)
    L = num / D
    dL = dnum / D - num * dD / D**2
    res = _transport_real(Y, L, dL, N, alpha, a, c0)
    scale = np.maximum.reduce([np.abs(3 * dL), np.abs((1 - alpha / 4 + L) * outer_b_prime(Y, a, c0).real),
                               np.abs(2.0 * ((N - 1) + 2 * alpha) / Y)])
    return np.abs(res) / scale


def outer_amplitude_quadrature(Y_end: float, N: int, alpha: float, k_const: float = 0.0,
                               Y0: float = 1e-8, c0: float = FOCUSING.c0) -> float:
    """``ln|B(Y_end)|`` by integrating the transport equation from ``Y0``.

    Starts from the small-``Y`` matching behaviour ``k - (2/3)(N+2 alpha) ln Y``;
    an independent check on the closed form.
    """
    a = complex(c0, 0.0)  # only Re(a) = c0 enters the real part

    def rhs(Y, L):
        # 3 L' = -[(1 - alpha/4 + L) Re b' + 6 Re(b''/b') + 2((N-1)+2 alpha)/Y]
        return [-_transport_real(Y, L[0], 0.0, N, alpha, a, c0) / 3.0]

    L0 = k_const - 2.0 / 3.0 * (N + 2 * alpha) * np.log(Y0)
    sol = solve_ivp(rhs, (Y0, Y_end), [L0], method="DOP853", rtol=1e-12, atol=1e-14)
    return float(sol.y[0, -1])


def outer_coordinate(y, n: float, convention: Convention = "n^(3/4)"):
    """``Y`` from ``y``: ``n**(3/4) y`` by default, or the literal ``n**(-3/4) y``."""
    y = np.asarray(y, dtype=float)
    if convention == "n^(3/4)":
        return n ** 0.75 * y
    if convention == "n^(-3/4)":
        return n ** -0.75 * y
    raise ParameterError(f"unknown outer scaling {convention!r}")


def match_inner_outer(n: float, N: int = 1, alpha: float = 0.5, C1: float = 1.0, C2: float = 0.0,
                      root: Literal["a1", "a3"] = "a1", convention: Convention = "n^(3/4)",
                      band=(1.0, 2.0), samples: int = 64, roots: CharRoots = FOCUSING) -> dict:
    """Compare inner and outer representations on an overlap band.

    The band is ``y in n**(-1/4) * band``, inside ``1 << y << n**(-3/4)``.
    The outer constant ``|k|`` is fixed by requiring the two log-amplitudes to
    agree as ``Y -> 0``. Reports the largest log-amplitude mismatch, the
    largest phase mismatch (for the oscillatory root) and monotonicity flags.
    """
    if not 0 < n <= 0.05:
        raise ParameterError("matching is only meaningful for 0 < n <= 0.05")
    y = n ** -0.25 * np.linspace(band[0], band[1], samples)
    Y = outer_coordinate(y, n, convention)
    p = algebraic_exponent(N, alpha)
    if root == "a1":
        inner = WkbjInner.from_far_field(C1, C2, N, alpha, roots)
        a = roots.a1
        amp0 = np.log(2.0 * abs(inner.k1))
        # log-amplitude and phase of the dominant complex mode k1 exp(a1 z) (real part doubled)
        z = y ** (4.0 / 3.0)
        inner_logamp = amp0 + a.real * z - p * np.log(y)
        inner_phase = np.angle(inner.k1) + a.imag * z
    elif root == "a3":
        a = complex(roots.a3)
        amp0 = np.log(abs(C1)) if C1 != 0 else 0.0
        z = y ** (4.0 / 3.0)
        inner_logamp = amp0 + a.real * z - p * np.log(y)
        inner_phase = np.zeros_like(y)
    else:
        raise ParameterError(f"unknown root {root!r}")
    scale = 0.75 * np.log(n) if convention == "n^(3/4)" else -0.75 * np.log(n)
    # ln Y = ln y + scale, so the matching constant absorbs (2/3)(N+2 alpha) * scale
    k_const = amp0 + p * scale
    b = outer_b(Y, a, roots.c0)
    outer_logamp = b.real / n + outer_amplitude(Y, N, alpha, k_const, roots.c0)
    outer_phase = np.angle(complex(inner.k1)) + b.imag / n if root == "a1" else np.zeros_like(y)
    dlog = np.abs(outer_logamp - inner_logamp)
    dphase = np.abs(outer_phase - inner_phase)
    return {
        "n": n,
        "N": N,
        "alpha": alpha,
        "root": root,
        "convention": convention,
        "k_const": float(k_const),
        "y_band": [float(y[0]), float(y[-1])],
        "log_amplitude_mismatch": float(np.max(dlog)),
        "relative_mismatch": float(np.max(dlog / np.maximum(np.abs(inner_logamp), 1.0))),
        "phase_mismatch": float(np.max(dphase)),
        "inner_monotone": bool(np.all(np.diff(inner_logamp) > 0) or np.all(np.diff(inner_logamp) < 0)),
        "outer_monotone": bool(np.all(np.diff(outer_logamp) > 0) or np.all(np.diff(outer_logamp) < 0)),
    }
