"""Refracted scale functions w^(q)(x; a), z^(q)(x; a) and exit identities.

Notation: ``W``/``Z`` are the scale functions of X, ``WW``/``ZZ`` those of
Y = X - alpha t.  For x >= b

    w(x; a) = W(x - a) + alpha int_b^x WW(x - y) W'(y - a) dy
    z(x; a) = Z(x - a) + alpha q int_b^x WW(x - y) W(y - a) dy

and both reduce to W(x - a), Z(x - a) below b.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import NetProfitError, OrderingError, QuadratureError
from .levy_model import LevyModel, RefractedModel, mean_per_unit_time, refract
from .scale_fn import ExponentialSum, Z, scale_function


@dataclass(frozen=True)
class QuadTol:
    epsabs: float = 1e-10
    epsrel: float = 1e-9
    limit: int = 200


DEFAULT_TOL = QuadTol()


def integrate_1d(f, lo: float, hi: float, tol: QuadTol = DEFAULT_TOL, points=None) -> float:
    """Adaptive Gauss-Kronrod integral of ``f`` over [lo, hi] (hi may be inf).

    Raises QuadratureError when the error estimate is far above tolerance.
    """
    if hi == lo:
        return 0.0
    if hi < lo:
        return -integrate_1d(f, hi, lo, tol, points)
    if points is not None and math.isfinite(hi):
        points = [p for p in points if lo < p < hi] or None
    else:
        points = None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(
            f, lo, hi, epsabs=tol.epsabs, epsrel=tol.epsrel, limit=tol.limit, points=points
        )
    if not math.isfinite(val) or err > 1e3 * max(tol.epsabs, tol.epsrel * abs(val)):
        raise QuadratureError(f"quadrature on [{lo}, {hi}] did not converge (est. error {err:.3e})")
    return val


def _fast(es: ExponentialSum):
    """Scalar evaluator for an exponential sum, ~10x cheaper than the numpy path."""
    terms = [(float(c), float(e)) for c, e in zip(es.coefs, es.exponents)]
    const, below = es.constant, es.below

    def f(x):
        if x < 0:
            return below
        return math.fsum(c * math.exp(e * x) for c, e in terms) + const

    return f


def conv_closed_form(outer: ExponentialSum, inner: ExponentialSum, lo: float, x: float, a: float) -> float:
    """int_lo^x outer(x - y) inner(y - a) dy in closed form, for a <= lo <= x."""
    if x <= lo:
        return 0.0
    length = x - lo
    total = []
    for oc, oe in zip(outer.coefs, outer.exponents):
        for ic, ie in zip(inner.coefs, inner.exponents):
            # int_0^L exp(oe (L - s) + ie (s + lo - a)) ds
            d = ie - oe
            hi_rate = max(ie, oe)
            core = math.exp(hi_rate * length) * (-math.expm1(-abs(d) * length) / abs(d) if d != 0 else length)
            total.append(oc * ic * math.exp(ie * (lo - a)) * core)
    return math.fsum(total)


def check_levels(x: float, a: float, c: float, b: float | None = None) -> None:
    if not (a <= x <= c):
        raise OrderingError(f"levels must satisfy a <= x <= c (a={a}, x={x}, c={c})")
    if not a < c:
        raise OrderingError(f"need a < c (a={a}, c={c})")
    if b is not None and not (a <= b <= c):
        raise OrderingError(f"levels must satisfy a <= b <= c (a={a}, b={b}, c={c})")


def require_net_profit(rm: RefractedModel) -> float:
    drift = rm.net_drift
    if not drift > 0:
        raise NetProfitError(f"net profit condition E[X_1] > alpha fails (E[X_1] - alpha = {drift})")
    return drift


@dataclass
class RefractedScaleEval:
    """Evaluator for w^(q)(.; a) and z^(q)(.; a) of a refracted model."""

    rm: RefractedModel
    q: float
    a: float = 0.0
    tol: QuadTol = DEFAULT_TOL
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.a > self.rm.b:
            raise OrderingError(f"reference level a={self.a} must not exceed b={self.rm.b}")
        x_m = self.rm.x_model
        self.W_sum = scale_function(x_m, self.q)
        self.Wp_sum = self.W_sum.derivative()
        self._W = _fast(self.W_sum)
        self._Wp = _fast(self.Wp_sum)
        if self.rm.alpha > 0:
            self.WW_sum = scale_function(refract(self.rm), self.q)
        else:
            self.WW_sum = self.W_sum
        self._WW = _fast(self.WW_sum)

    @property
    def b(self) -> float:
        return self.rm.b

    def W(self, x: float) -> float:
        return self._W(x)

    def Z(self, x: float) -> float:
        if self.q == 0 or x <= 0:
            return 1.0
        return 1.0 + self.q * float(self.W_sum.integral(x))

    def little_w(self, x: float) -> float:
        x = float(x)
        base = self._W(x - self.a)
        if x < self.b or self.rm.alpha == 0:
            return base
        key = ("w", x)
        if key not in self._cache:
            a, WW, Wp = self.a, self._WW, self._Wp
            conv = integrate_1d(lambda y: WW(x - y) * Wp(y - a), self.b, x, self.tol)
            self._cache[key] = base + self.rm.alpha * conv
        return self._cache[key]

    def little_z(self, x: float) -> float:
        x = float(x)
        base = self.Z(x - self.a)
        if x < self.b or self.rm.alpha == 0 or self.q == 0:
            return base
        key = ("z", x)
        if key not in self._cache:
            a, WW, Wf = self.a, self._WW, self._W
            conv = integrate_1d(lambda y: WW(x - y) * Wf(y - a), self.b, x, self.tol)
            self._cache[key] = base + self.rm.alpha * self.q * conv
        return self._cache[key]

    def little_w_closed(self, x: float) -> float:
        """Termwise closed form of little_w (cross-check for the quadrature path)."""
        base = self._W(x - self.a)
        if x < self.b:
            return base
        return base + self.rm.alpha * conv_closed_form(self.WW_sum, self.Wp_sum, self.b, x, self.a)

    def little_z_closed(self, x: float) -> float:
        base = self.Z(x - self.a)
        if x < self.b:
            return base
        return base + self.rm.alpha * self.q * conv_closed_form(self.WW_sum, self.W_sum, self.b, x, self.a)


def little_w(rm: RefractedModel, q: float, x: float, a: float = 0.0) -> float:
    return RefractedScaleEval(rm, q, a).little_w(x)


def little_z(rm: RefractedModel, q: float, x: float, a: float = 0.0) -> float:
    return RefractedScaleEval(rm, q, a).little_z(x)


# --- two-sided exit for X ---------------------------------------------------

ZERO_MEAN_STEP = 1e-7


def _zero_mean_limit(fn, m: LevyModel, q: float):
    """Evaluate fn(q) directly, or its q -> 0 limit when the mean is zero.

    The exponential-sum expansion does not exist at q = 0 with E[X_1] = 0
    (double root at the origin); the exit transforms are smooth in q, so a
    two-point Richardson extrapolation from q = h, 2h is accurate to O(h^2).
    """
    if q == 0 and mean_per_unit_time(m) == 0:
        h = ZERO_MEAN_STEP
        return 2.0 * fn(h) - fn(2.0 * h)
    return fn(q)


def exit_up_X(m: LevyModel, q: float, x: float, a: float, c: float) -> float:
    """E_x[exp(-q tau_c^+); tau_c^+ < tau_a^-] = W(x - a) / W(c - a)."""
    check_levels(x, a, c)

    def value(qq):
        Wq = scale_function(m, qq)
        return Wq(x - a) / Wq(c - a)

    return float(_zero_mean_limit(value, m, q))


def exit_down_X(m: LevyModel, q: float, x: float, a: float, c: float) -> float:
    """E_x[exp(-q tau_a^-); tau_a^- < tau_c^+]."""
    check_levels(x, a, c)

    def value(qq):
        Wq = scale_function(m, qq)
        return Z(m, qq, x - a) - Z(m, qq, c - a) / Wq(c - a) * Wq(x - a)

    return float(_zero_mean_limit(value, m, q))


# --- two-sided exit for U ---------------------------------------------------

def exit_up_U(rm: RefractedModel, q: float, x: float, a: float, c: float, tol: QuadTol = DEFAULT_TOL) -> float:
    check_levels(x, a, c, rm.b)
    ev = RefractedScaleEval(rm, q, a, tol)
    return ev.little_w(x) / ev.little_w(c)


def exit_down_U(rm: RefractedModel, q: float, x: float, a: float, c: float, tol: QuadTol = DEFAULT_TOL) -> float:
    check_levels(x, a, c, rm.b)
    ev = RefractedScaleEval(rm, q, a, tol)
    return ev.little_z(x) - ev.little_z(c) / ev.little_w(c) * ev.little_w(x)


# --- ruin probabilities -----------------------------------------------------

def ruin_prob_X(m: LevyModel, x: float) -> float:
    """P_x(tau_0^- < inf) = 1 - (E[X_1] v 0) W(x)."""
    mean = mean_per_unit_time(m)
    if mean <= 0 or x < 0:
        return 1.0
    return 1.0 - mean * scale_function(m, 0.0)(x)


def ruin_prob_U(rm: RefractedModel, x: float) -> float:
    """P_x(kappa_0^- < inf) for the refracted process under net profit."""
    drift = require_net_profit(rm)
    if x < 0:
        return 1.0
    ev = RefractedScaleEval(rm, 0.0, 0.0)
    return 1.0 - drift / (1.0 - rm.alpha * ev.W(rm.b)) * ev.little_w(x)


# --- identities between scale functions of X and Y ---------------------------

def convolution_identity_residual(rm: RefractedModel, p: float, q: float, x: float, tol: QuadTol = DEFAULT_TOL) -> float:
    """|LHS - RHS| of

    (q - p) int_0^x WW^(p)(x-y) W^(q)(y) dy
        = W^(q)(x) - WW^(p)(x) + alpha (W^(q)(0) WW^(p)(x) + int_0^x WW^(p)(x-y) W^(q)'(y) dy).
    """
    Wq = _fast(scale_function(rm.x_model, q))
    Wqp = _fast(scale_function(rm.x_model, q).derivative())
    WWp = _fast(scale_function(refract(rm), p))
    lhs = (q - p) * integrate_1d(lambda y: WWp(x - y) * Wq(y), 0.0, x, tol)
    conv = integrate_1d(lambda y: WWp(x - y) * Wqp(y), 0.0, x, tol)
    rhs = Wq(x) - WWp(x) + rm.alpha * (Wq(0.0) * WWp(x) + conv)
    return abs(lhs - rhs)


def little_w_alternative(rm: RefractedModel, q: float, x: float, tol: QuadTol = DEFAULT_TOL) -> float:
    """w^(q)(x; 0) for x > b via (1 - alpha W(0)) WW(x) - alpha int_0^b WW(x-y) W'(y) dy."""
    if x <= rm.b:
        raise OrderingError(f"alternative representation holds for x > b (x={x}, b={rm.b})")
    Wq_sum = scale_function(rm.x_model, q)
    Wqp = _fast(Wq_sum.derivative())
    WW = _fast(scale_function(refract(rm), q))
    conv = integrate_1d(lambda y: WW(x - y) * Wqp(y), 0.0, rm.b, tol)
    return (1.0 - rm.alpha * Wq_sum(0.0)) * WW(x) - rm.alpha * conv


def rep_wq_residual(rm: RefractedModel, q: float, x: float, tol: QuadTol = DEFAULT_TOL) -> float:
    return abs(RefractedScaleEval(rm, q, 0.0, tol).little_w(x) - little_w_alternative(rm, q, x, tol))


def exit_probabilities_grid(rm: RefractedModel, q: float, xs, a: float, c: float):
    """exit_up_U on a grid of start levels, sharing one evaluator."""
    ev = RefractedScaleEval(rm, q, a)
    wc = ev.little_w(c)
    return np.array([ev.little_w(x) / wc for x in xs])
