"""Regularity bounds implied by focusing eigenvalues.

A focusing profile with eigenvalue ``alpha_k`` leaves the trace
``u(r, 0-) = C r**mu_k`` with ``mu_k = 4 alpha_k / (1 + n alpha_k)``, which caps
the spatial Hoelder exponent of general solutions. When ``mu_k < 1`` the trace
gradient is in ``L^p_loc`` exactly for ``p < N / (1 - mu_k)``. In time,
``u(0, t) - u(0, 0) = (-t)**alpha f(0)`` caps the exponent at ``alpha``.
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate

from .errors import ParameterError

__all__ = [
    "holder_exponent_x",
    "gradient_integrability",
    "holder_exponent_t",
    "integrability_oracle",
    "holder_label",
    "RegularityRow",
    "RegularityReport",
    "regularity_report",
    "linear_branches",
]

LABEL_TOL = 1e-9


def _check(n, alpha):
    if not 0 <= n < 2:
        raise ParameterError(f"n={n} outside [0, 2)")
    if not alpha > 0:
        raise ParameterError(f"alpha={alpha} must be positive")


def holder_exponent_x(n: float, alpha_k: float) -> float:
    """Non-improvable spatial exponent ``mu_k = 4 alpha_k / (1 + n alpha_k)``."""
    _check(n, alpha_k)
    return 4.0 * alpha_k / (1.0 + n * alpha_k)


def gradient_integrability(n: float, N: int, alpha_k: float) -> Optional[float]:
    """Threshold ``p* = N / (1 - mu_k)`` (open: ``p < p*``), or None when ``mu_k >= 1``."""
    if int(N) != N or N < 1:
        raise ParameterError(f"N={N} must be a positive integer")
    mu = holder_exponent_x(n, alpha_k)
    if mu >= 1:
        return None
    return N / (1.0 - mu)


def holder_exponent_t(n: float, branch1_alpha) -> float:
    """Upper bound on the time exponent at the focusing point: ``alpha_1(n)``.

    ``branch1_alpha`` is either a number or an object with ``n`` and
    ``alpha`` arrays (a traced branch), which is then interpolated at ``n``.
    """
    if hasattr(branch1_alpha, "n") and hasattr(branch1_alpha, "alpha"):
        ns = np.asarray(branch1_alpha.n, dtype=float)
        al = np.asarray(branch1_alpha.alpha, dtype=float)
        if len(ns) == 0:
            raise ParameterError("branch has no points")
        if n == 0:
            return 0.5
        if not ns[0] <= n <= ns[-1]:
            raise ParameterError(f"n={n} outside the traced range [{ns[0]}, {ns[-1]}]")
        value = float(np.interp(n, ns, al))
    else:
        value = float(branch1_alpha)
    _check(n, value)
    return value


def integrability_oracle(N: int, mu: float, p: float, levels: int = 8, decade: float = 4.0,
                         tol: float = 0.99) -> dict:
    """Decide by quadrature whether ``int_0^1 r**(N-1) (r**(mu-1))**p dr`` is finite.

    Integrates over shells ``[10**(-decade (j+1)), 10**(-decade j)]`` and
    inspects successive shell contributions: a convergent integral has
    geometrically shrinking shells, a divergent one has shells that stay
    level or grow.
    """
    e = N - 1 + p * (mu - 1)
    shells = []
    for j in range(levels):
        lo, hi = -decade * (j + 1) * math.log(10), -decade * j * math.log(10)
        # r = exp(t): r**e dr = exp((e + 1) t) dt
        val, _ = integrate.quad(lambda t: math.exp((e + 1.0) * t), lo, hi, epsabs=0, epsrel=1e-12,
                                limit=200)
        shells.append(val)
    shells = np.array(shells)
    ratios = shells[1:] / shells[:-1]
    converges = bool(np.all(ratios[-3:] < tol))
    return {"converges": converges, "shells": shells.tolist(), "ratios": ratios.tolist(),
            "partial_sum": float(shells.sum())}


def holder_label(mu: float, k: int) -> Tuple[str, str, float]:
    """``(label, note, eps)`` for exponent ``mu`` on branch ``k``.

    ``label`` is ``C^{l+theta}`` with ``l = floor(mu)``; ``eps = 2k - mu`` is
    the loss against the linear value ``2k``, and ``note`` states whether the
    trace is classical in ``C^{2k}``.
    """
    l = math.floor(mu + LABEL_TOL)
    theta = mu - l
    label = f"C^{l}" if abs(theta) <= LABEL_TOL else f"C^{{{l}+{theta:.6g}}}"
    eps = 2 * k - mu
    if abs(eps) <= LABEL_TOL:
        note = f"C^{2 * k} (no loss)"
    elif eps > 0:
        note = f"C^{{{2 * k}-eps}}, eps={eps:.6g}: not classical in C^{2 * k}"
    else:
        note = f"exceeds C^{2 * k} by {-eps:.6g}"
    return label, note, eps


@dataclass(frozen=True)
class RegularityRow:
    k: int
    alpha_k: float
    mu_k: float
    holder_label: str
    classical_note: str
    eps: float
    p_star: Optional[float]
    t_exponent_bound: float
    trace: str = "C r^mu_k, C arbitrary"


@dataclass
class RegularityReport:
    n: float
    N: int
    rows: List[RegularityRow] = field(default_factory=list)

    COLUMNS = ("k", "alpha_k", "mu_k", "holder_label", "classical_note", "eps", "p_star",
               "t_exponent_bound", "trace")

    def as_dict(self) -> dict:
        return {"n": self.n, "N": self.N, "rows": [asdict(r) for r in self.rows],
                "notes": ["gradient of the trace is in L^p_loc iff 1 <= p < p_star; "
                          "p_star itself is excluded",
                          "p_star is only defined when mu_k < 1"]}

    def to_text(self) -> str:
        head = f"regularity bounds for n={self.n:g}, N={self.N}"
        lines = [head, "-" * len(head),
                 f"{'k':>3} {'alpha_k':>14} {'mu_k':>14} {'label':>18} {'p<p*':>12} "
                 f"{'t-bound':>10}  note"]
        for r in self.rows:
            ps = "n/a" if r.p_star is None else f"{r.p_star:.6g}"
            lines.append(f"{r.k:>3} {r.alpha_k:>14.10g} {r.mu_k:>14.10g} {r.holder_label:>18} "
                         f"{ps:>12} {r.t_exponent_bound:>10.6g}  {r.classical_note}")
        if not self.rows:
            lines.append("(no branches)")
        return "\n".join(lines) + "\n"

    def to_csv_rows(self) -> List[list]:
        out = []
        for r in self.rows:
            d = asdict(r)
            out.append(["" if d[c] is None else d[c] for c in self.COLUMNS])
        return out


BranchLike = Union[Tuple[int, float], object]


def _alpha_at(branch, n) -> Tuple[int, float]:
    if isinstance(branch, tuple):
        k, alpha = branch
        return int(k), float(alpha)
    k = int(branch.k)
    if n == 0:
        return k, 0.5 * k
    ns = np.asarray(branch.n, dtype=float)
    al = np.asarray(branch.alpha, dtype=float)
    hit = np.nonzero(np.isclose(ns, n, rtol=0, atol=1e-14))[0]
    if len(hit):
        return k, float(al[hit[0]])
    if len(ns) == 0 or not ns[0] <= n <= ns[-1]:
        raise ParameterError(f"branch k={k} does not cover n={n}")
    return k, float(np.interp(n, ns, al))


def regularity_report(n: float, N: int, branches: Iterable[BranchLike]) -> RegularityReport:
    """One row per branch; a branch is ``(k, alpha_k)`` or a traced branch object."""
    report = RegularityReport(n=float(n), N=int(N))
    for b in branches:
        k, alpha = _alpha_at(b, n)
        mu = holder_exponent_x(n, alpha)
        label, note, eps = holder_label(mu, k)
        report.rows.append(RegularityRow(
            k=k, alpha_k=alpha, mu_k=mu, holder_label=label, classical_note=note, eps=eps,
            p_star=gradient_integrability(n, N, alpha), t_exponent_bound=alpha))
    return report


def linear_branches(k_max: int) -> List[Tuple[int, float]]:
    """``(k, k/2)`` for ``k = 1..k_max``: the n = 0 eigenvalues."""
    return [(k, 0.5 * k) for k in range(1, k_max + 1)]
