"""Problem parameterization and structural-assumption checks.

Houses the stiffness law M, the relaxation kernel h, the feedback
nonlinearity g and the full problem record, together with sampled validation
of the analytic hypotheses they must satisfy, the admissible window for the
delay-energy weight xi, and the dissipation coefficients theta1/theta2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

#: Default relative tolerance for sampled assumption margins.
DEFAULT_TOL = 1e-10


class EvaluationError(RuntimeError):
    """A user-supplied callable produced a non-finite value."""


def _check_finite(name: str, points: np.ndarray, values: np.ndarray) -> None:
    bad = ~np.isfinite(values)
    if np.any(bad):
        pt = np.asarray(points)[bad][0]
        raise EvaluationError(f"{name} evaluated to a non-finite value at {pt!r}")


@dataclass(frozen=True)
class KirchhoffSpec:
    """Nonlocal stiffness law M with antiderivative Mhat and growth constants.

    Required: M(lam) >= m0 > 0 for all lam >= 0 and M(lam) <= delta*lam**gamma.
    The two bounds are incompatible near lam = 0 unless gamma = 0, so the
    upper bound is checked on lam >= 1 only (see ``validate_assumptions``).
    """

    evaluate: Callable[[np.ndarray], np.ndarray]
    antiderivative: Callable[[np.ndarray], np.ndarray]
    m0: float
    delta: float
    gamma: float
    beta: float = 0.0
    alpha: float = 0.0


@dataclass(frozen=True)
class KernelSpec:
    """Relaxation kernel h with h' and its basic integral quantities.

    ``beta1 = 1 - int_0^inf h`` must be positive and h must fade at least as
    fast as exp(-zeta t).  ``shape`` is "exponential" (h0 * exp(-zeta t)) or
    "tabulated".
    """

    evaluate: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    total_mass: float
    zeta: float
    shape: str = "exponential"
    h0: float = np.nan
    samples: tuple = None

    @property
    def beta1(self) -> float:
        return 1.0 - self.total_mass


@dataclass(frozen=True)
class FeedbackSpec:
    """Odd nondecreasing feedback g, with G(s) = int_0^s g and A4 constants."""

    g: Callable[[np.ndarray], np.ndarray]
    gprime: Callable[[np.ndarray], np.ndarray]
    G: Callable[[np.ndarray], np.ndarray]
    c1: float
    alpha1: float
    alpha2: float

    def g_inverse(self, sigma: float, s_max: float = 1e6) -> float:
        """Invert g by bracketed root finding (g strictly increasing)."""
        if sigma == 0.0:
            return 0.0
        lo, hi = (0.0, s_max) if sigma > 0 else (-s_max, 0.0)
        return brentq(lambda s: self.g(np.asarray(s)) - sigma, lo, hi,
                      xtol=1e-14, rtol=4 * np.finfo(float).eps)

    def conjugate(self, sigma) -> np.ndarray:
        """Legendre transform G*(sigma) = sigma g^{-1}(sigma) - G(g^{-1}(sigma))."""
        sig = np.atleast_1d(np.asarray(sigma, dtype=float))
        inv = np.array([self.g_inverse(s) for s in sig])
        out = sig * inv - self.G(inv)
        return out if np.ndim(sigma) else out[0]


@dataclass(frozen=True)
class ProblemSpec:
    """Full parameterization of the delayed viscoelastic beam problem."""

    rho: float
    mu1: float
    mu2: float
    tau: float
    L: float
    kirchhoff: KirchhoffSpec
    kernel: KernelSpec
    feedback: FeedbackSpec
    u0: Callable[[np.ndarray], np.ndarray]
    u1: Callable[[np.ndarray], np.ndarray]
    f0: Callable[[np.ndarray, float], np.ndarray]
    #: use the as-printed theta2 (identical to theta1) unless overridden
    corrected_theta2: bool = False


@dataclass
class CheckResult:
    name: str
    margin: float
    passed: bool
    detail: str = ""


@dataclass
class ValidationReport:
    """Per-assumption margins; every margin must be >= -tolerance to pass."""

    checks: list = field(default_factory=list)
    tolerance: float = DEFAULT_TOL

    def add(self, name: str, margin: float, scale: float = 1.0, detail: str = ""):
        ok = margin >= -self.tolerance * max(1.0, abs(scale))
        self.checks.append(CheckResult(name, float(margin), bool(ok), detail))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed_names(self) -> list:
        return [c.name for c in self.checks if not c.passed]

    def format_table(self) -> str:
        lines = [f"{'check':40s} {'margin':>14s}  status"]
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            lines.append(f"{c.name:40s} {c.margin:14.6g}  {status}"
                         + (f"  ({c.detail})" if c.detail else ""))
        lines.append(f"overall: {'pass' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def validate_assumptions(spec: ProblemSpec,
                         s_max: float = 4.0,
                         n_samples: int = 401,
                         lam_max: float = 50.0,
                         t_max: float = 20.0,
                         tolerance: float = DEFAULT_TOL,
                         modes=None) -> ValidationReport:
    """Sampled verification of the structural hypotheses on M, h, g.

    Grids: lam in [0, lam_max] for M, t in [0, t_max] for h, s in
    [-s_max, s_max] for g.  The M upper growth bound is only checked for
    lam >= 1 (it cannot hold near 0 together with M >= m0 unless gamma = 0).
    The compatibility check f0(., 0) = u1 is performed when ``modes`` is
    supplied (both functions projected onto the mode set).
    """
    rep = ValidationReport(tolerance=tolerance)
    k, h, fb = spec.kirchhoff, spec.kernel, spec.feedback

    # inertia: positive exponent (1-D reduction)
    rep.add("inertia: rho > 0", spec.rho)

    # tension law: bounds and monotone antiderivative
    lam = np.linspace(0.0, lam_max, n_samples)
    Mv = np.asarray(k.evaluate(lam), dtype=float)
    _check_finite("M", lam, Mv)
    rep.add("tension: M >= m0", float(np.min(Mv - k.m0)), scale=k.m0)
    lam_hi = lam[lam >= 1.0]
    if lam_hi.size:
        Mh = np.asarray(k.evaluate(lam_hi), dtype=float)
        upper = k.delta * lam_hi ** k.gamma
        rep.add("tension: M <= delta*lam^gamma (lam>=1)",
                float(np.min(upper - Mh)), scale=np.max(upper))
    Mhat = np.asarray(k.antiderivative(lam), dtype=float)
    _check_finite("Mhat", lam, Mhat)
    rep.add("tension: Mhat nondecreasing", float(np.min(np.diff(Mhat))),
            scale=np.max(np.abs(Mhat)))
    rep.add("tension: Mhat(0) = 0", -abs(float(np.asarray(k.antiderivative(0.0)))))

    # relaxation kernel: positive, fading, exponentially dominated
    t = np.linspace(0.0, t_max, n_samples)
    hv = np.asarray(h.evaluate(t), dtype=float)
    _check_finite("h", t, hv)
    hp = np.asarray(h.derivative(t), dtype=float)
    _check_finite("h'", t, hp)
    rep.add("kernel: h > 0", float(np.min(hv)), scale=hv[0])
    rep.add("kernel: h nonincreasing", float(np.min(-np.diff(hv))), scale=hv[0])
    rep.add("kernel: beta1 = 1 - int h > 0", h.beta1)
    rep.add("kernel: h' <= -zeta*h", float(np.min(-hp - h.zeta * hv)),
            scale=h.zeta * hv[0])

    # feedback: odd sector-bounded nonlinearity and the gain condition
    s = np.linspace(-s_max, s_max, n_samples)
    gv = np.asarray(fb.g(s), dtype=float)
    _check_finite("g", s, gv)
    gp = np.asarray(fb.gprime(s), dtype=float)
    Gv = np.asarray(fb.G(s), dtype=float)
    gmax = max(1.0, float(np.max(np.abs(gv))))
    rep.add("feedback: g odd", -float(np.max(np.abs(gv + gv[::-1]))), scale=gmax)
    rep.add("feedback: g nondecreasing", float(np.min(gp)), scale=fb.c1)
    rep.add("feedback: |g'| <= c1", float(np.min(fb.c1 - np.abs(gp))), scale=fb.c1)
    sg = s * gv
    Gscale = max(1.0, float(np.max(np.abs(Gv))))
    rep.add("feedback: alpha1*s*g <= G", float(np.min(Gv - fb.alpha1 * sg)),
            scale=Gscale)
    rep.add("feedback: G <= alpha2*s*g", float(np.min(fb.alpha2 * sg - Gv)),
            scale=Gscale)
    rep.add("gain: alpha2*mu2 <= alpha1*mu1",
            fb.alpha1 * spec.mu1 - fb.alpha2 * spec.mu2,
            scale=fb.alpha1 * spec.mu1)

    # compatibility f0(., 0) = u1, sampled in modal coordinates
    if modes is not None:
        c_hist = modes.project(lambda x: np.asarray(spec.f0(x, 0.0), dtype=float)
                               * np.ones_like(x))
        c_u1 = modes.project(lambda x: np.asarray(spec.u1(x), dtype=float)
                             * np.ones_like(x))
        scale = max(1.0, float(np.linalg.norm(c_u1)))
        rep.add("compatibility f0(.,0) = u1",
                -float(np.linalg.norm(c_hist - c_u1)) + 1e-8 * scale,
                scale=scale, detail="modal L2 difference, tol 1e-8 relative")
    return rep


@dataclass(frozen=True)
class XiWindow:
    lo: float
    hi: float

    @property
    def empty(self) -> bool:
        return not self.lo < self.hi

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)


def xi_window(spec: ProblemSpec) -> XiWindow:
    """Admissible open interval for the delay-energy weight xi.

    (tau*mu2*(1-alpha1)/alpha1,  tau*(mu1 - alpha2*mu2)/alpha2).  An empty
    window (lo >= hi) is returned as data, not raised.
    """
    a1, a2 = spec.feedback.alpha1, spec.feedback.alpha2
    lo = spec.tau * spec.mu2 * (1.0 - a1) / a1
    hi = spec.tau * (spec.mu1 - a2 * spec.mu2) / a2
    return XiWindow(lo, hi)


def theta_constants(spec: ProblemSpec, xi: float) -> tuple[float, float]:
    """Dissipation coefficients (theta1, theta2) for the energy inequality.

    Both equal mu1 - xi*alpha2/tau - mu2*alpha2 by default.  With
    ``spec.corrected_theta2`` set, theta2 = xi*alpha1/tau - mu2*(1-alpha1)
    instead (the form the delayed-feedback literature uses for the z-channel).
    """
    a1, a2 = spec.feedback.alpha1, spec.feedback.alpha2
    theta1 = spec.mu1 - xi * a2 / spec.tau - spec.mu2 * a2
    if spec.corrected_theta2:
        theta2 = xi * a1 / spec.tau - spec.mu2 * (1.0 - a1)
    else:
        theta2 = theta1
    return theta1, theta2


def legendre_inequality_check(feedback: FeedbackSpec,
                              s_grid: np.ndarray,
                              t_grid: np.ndarray) -> float:
    """Worst margin of  G*(g(s)) + G(t) - g(s)*t  over the grid (must be >= 0).

    Requires g strictly increasing on the grid so that g is invertible.
    """
    s_grid = np.asarray(s_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    gp = np.asarray(feedback.gprime(s_grid), dtype=float)
    if np.any(gp <= 0.0):
        raise ValueError("g' vanishes on the grid; g not invertible")
    sig = np.asarray(feedback.g(s_grid), dtype=float)
    conj = feedback.conjugate(sig)
    Gt = np.asarray(feedback.G(t_grid), dtype=float)
    margins = conj[:, None] + Gt[None, :] - sig[:, None] * t_grid[None, :]
    return float(np.min(margins))
