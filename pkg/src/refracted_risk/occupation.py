"""Occupation time of the red zone (-inf, b) by the refracted process.

The two-sided transforms are built from

    G(y) = w^(p+q)(y; a) - q int_b^y WW^(p)(y - u) w^(p+q)(u; a) du
    H(y) = z^(p+q)(y; a) - q int_b^y WW^(p)(y - u) z^(p+q)(u; a) du

so that, for a <= x, b <= c,

    E_x[exp(-p k_c^+ - q occ); k_c^+ < k_a^-] = G(x) / G(c)
    E_x[exp(-p k_a^- - q occ); k_a^- < k_c^+] = H(x) - H(c) / G(c) * G(x).

The minus sign in the second line is forced by the q = 0 reduction to the
plain two-sided exit problem; ``ratio_sign=+1`` evaluates the plus-sign
variant so the two can be compared against simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr

from .errors import ModelError, OrderingError
from .levy_model import RefractedModel, right_inverse_phi, refract
from .refracted import (
    DEFAULT_TOL,
    QuadTol,
    RefractedScaleEval,
    _fast,
    check_levels,
    integrate_1d,
    require_net_profit,
)
from .scale_fn import Z, scale_function

@dataclass(frozen=True)
class OccupationQuery:
    rm: RefractedModel
    x: float
    a: float
    c: float
    p: float = 0.0
    q: float = 0.0

    def __post_init__(self):
        check_levels(self.x, self.a, self.c, self.rm.b)
        if self.p < 0 or self.q < 0:
            raise ValueError(f"rates must be >= 0 (p={self.p}, q={self.q})")


GROWTH_SWITCH = 1e4


class _TransformParts:
    """G and H for fixed (rm, p, q, a).

    Near b the defining integrals are evaluated by quadrature.  Far above b both
    terms of G (and of H) grow like exp(Phi(p + q) (y - b)) and cancel, so
    there the termwise expansion in exp(l (y - b)), psi_Y(l) = p, is used
    instead; it contains no growing-and-cancelling terms.
    """

    def __init__(self, rm: RefractedModel, p: float, q: float, a: float, tol: QuadTol = DEFAULT_TOL):
        self.rm, self.p, self.q, self.a, self.tol = rm, p, q, a, tol
        self.ev = RefractedScaleEval(rm, p + q, a, tol)
        y_model = refract(rm) if rm.alpha > 0 else rm.x_model
        self.WWp_sum = scale_function(y_model, p)
        self._WWp = _fast(self.WWp_sum)
        growth = max(max(self.ev.W_sum.exponents), max(self.ev.WW_sum.exponents), 0.0)
        self.switch = rm.b + (math.log(GROWTH_SWITCH) / growth if growth > 0 else math.inf)
        self._coef = None

    def _correction(self, f, y: float) -> float:
        b = self.rm.b
        if self.q == 0 or y <= b:
            return 0.0
        WWp = self._WWp
        return self.q * integrate_1d(lambda u: WWp(y - u) * f(u), b, y, self.tol)

    def G_quadrature(self, y: float) -> float:
        return self.ev.little_w(y) - self._correction(self.ev.little_w, y)

    def H_quadrature(self, y: float) -> float:
        return self.ev.little_z(y) - self._correction(self.ev.little_z, y)

    def above_b_coefficients(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(l, g, h) with G(b + s) = sum g_l exp(l s), H(b + s) = sum h_l exp(l s), s >= 0.

        Above b, w^(r) and z^(r) (r = p + q) only carry the exponents nu of
        psi_Y(nu) = r: the X-root coefficients vanish because
        sum_j K_j / (theta - nu_j) = 1 / (psi_Y(theta) - r) = -1 / (alpha theta).
        Convolving with WW^(p) then cancels every exp(nu s) term, leaving
        q k_l exp(l s) sum_j A_j / (nu_j - l).  Requires q > 0.
        """
        if self._coef is None:
            rm, r = self.rm, self.p + self.q
            X, Y = self.ev.W_sum, self.ev.WW_sum
            c, th = np.asarray(X.coefs), np.asarray(X.exponents)
            K, nu = np.asarray(Y.coefs), np.asarray(Y.exponents)
            at_b = c * np.exp(th * (rm.b - self.a))
            if rm.alpha == 0:
                A, B = at_b, r * at_b / th
            else:
                D = 1.0 / (th[None, :] - nu[:, None])
                A = -rm.alpha * K * (D @ (at_b * th))
                B = -rm.alpha * r * K * (D @ at_b)
            k, lam = np.asarray(self.WWp_sum.coefs), np.asarray(self.WWp_sum.exponents)
            E = 1.0 / (nu[None, :] - lam[:, None])
            self._coef = (lam, self.q * k * (E @ A), self.q * k * (E @ B))
        return self._coef

    def _expansion(self, which: int, y: float) -> float:
        lam, *coefs = self.above_b_coefficients()
        s = y - self.rm.b
        return math.fsum(float(g) * math.exp(float(l) * s) for g, l in zip(coefs[which], lam))

    def G(self, y: float) -> float:
        if self.q > 0 and y > self.switch:
            return self._expansion(0, y)
        return self.G_quadrature(y)

    def H(self, y: float) -> float:
        if self.q > 0 and y > self.switch:
            return self._expansion(1, y)
        return self.H_quadrature(y)


def occ_lt_exit_up(qr: OccupationQuery, tol: QuadTol = DEFAULT_TOL) -> float:
    """E_x[exp(-p k_c^+ - q int_0^{k_c^+} 1{U_s < b} ds); k_c^+ < k_a^-]."""
    parts = _TransformParts(qr.rm, qr.p, qr.q, qr.a, tol)
    return parts.G(qr.x) / parts.G(qr.c)


def occ_lt_exit_down(qr: OccupationQuery, tol: QuadTol = DEFAULT_TOL, ratio_sign: int = -1) -> float:
    """E_x[exp(-p k_a^- - q int_0^{k_a^-} 1{U_s < b} ds); k_a^- < k_c^+]."""
    parts = _TransformParts(qr.rm, qr.p, qr.q, qr.a, tol)
    ratio = parts.H(qr.c) / parts.G(qr.c)
    return parts.H(qr.x) + ratio_sign * ratio * parts.G(qr.x)


# --- bankruptcy (rate q on [0, b), immediate below 0) ------------------------

def _bankruptcy_denominator(rm: RefractedModel, q: float) -> float:
    """Z^(q)(b) - alpha W^(q)(b)."""
    return Z(rm.x_model, q, rm.b) - rm.alpha * scale_function(rm.x_model, q)(rm.b)


def _ZZ(rm: RefractedModel, q: float):
    y_model = refract(rm) if rm.alpha > 0 else rm.x_model
    if q == 0:
        return lambda x: 1.0
    WW = scale_function(y_model, q)
    return lambda x: 1.0 if x <= 0 else 1.0 + q * float(WW.integral(x))


def bankruptcy_lt_ruin_finite(rm: RefractedModel, x: float, q: float, tol: QuadTol = DEFAULT_TOL, ratio_sign: int = -1) -> float:
    """E_x[exp(-q int_0^{k_0^-} 1{U_s < b} ds); k_0^- < inf]."""
    drift = require_net_profit(rm)
    if x < 0:
        return 1.0
    parts = _TransformParts(rm, 0.0, q, 0.0, tol)
    ZZ = _ZZ(rm, q)
    Wq = _fast(scale_function(rm.x_model, q))
    b = rm.b
    extra = 0.0
    if q > 0:
        extra = q * integrate_1d(lambda y: ZZ(y) - rm.alpha * Wq(y) * ZZ(b - y), 0.0, b, tol)
    ratio = (drift + extra) / _bankruptcy_denominator(rm, q)
    return parts.H(x) + ratio_sign * ratio * parts.G(x)


def survival_lt(rm: RefractedModel, x: float, q: float, tol: QuadTol = DEFAULT_TOL) -> float:
    """E_x[exp(-q int_0^{k_0^-} 1{U_s < b} ds); k_0^- = inf]."""
    drift = require_net_profit(rm)
    if x < 0:
        return 0.0
    parts = _TransformParts(rm, 0.0, q, 0.0, tol)
    return drift * parts.G(x) / _bankruptcy_denominator(rm, q)


def prob_bankruptcy(rm: RefractedModel, x: float, q: float, tol: QuadTol = DEFAULT_TOL) -> float:
    """Probability of bankruptcy with hazard q on [0, b) and immediate ruin below 0."""
    return 1.0 - survival_lt(rm, x, q, tol)


# --- Parisian ruin with exponential implementation clocks --------------------

def _parisian_core(rm: RefractedModel, q: float, phi: float, y: float) -> float:
    """exp(Phi min(s, 0)) * Phi int_0^inf exp(-Phi v) WW(v + max(s, 0)) dv, s = y - b.

    Summed termwise over WW = sum k_j exp(l_j u) as sum Phi k_j exp(l_j s) / (Phi - l_j).
    At s = 0 this is Phi / psi_Y(Phi) = Phi / (q - alpha Phi); unlike that ratio
    it stays well conditioned as q -> 0 and never subtracts growing terms.
    """
    y_model = refract(rm) if rm.alpha > 0 else rm.x_model
    WW = scale_function(y_model, 0.0)
    s = y - rm.b
    pos = max(s, 0.0)
    tail = math.fsum(
        phi * k * math.exp(lam * pos) / (phi - lam) for k, lam in zip(WW.coefs, WW.exponents)
    )
    return tail * math.exp(phi * min(s, 0.0))


def occ_lt_reach_up(rm: RefractedModel, x: float, c: float, q: float) -> float:
    """E_x[exp(-q int_0^{k_c^+} 1{U_s < b} ds); k_c^+ < inf]."""
    require_net_profit(rm)
    if not (x <= c and rm.b <= c):
        raise OrderingError(f"need x <= c and b <= c (x={x}, b={rm.b}, c={c})")
    if q == 0:
        return 1.0
    phi = right_inverse_phi(rm.x_model, q)
    return _parisian_core(rm, q, phi, x) / _parisian_core(rm, q, phi, c)


def total_occupation_lt(rm: RefractedModel, x: float, q: float) -> float:
    """E_x[exp(-q int_0^inf 1{U_s < b} ds)]."""
    drift = require_net_profit(rm)
    if q == 0:
        return 1.0
    phi = right_inverse_phi(rm.x_model, q)
    return drift * _parisian_core(rm, q, phi, x)


def total_occupation_lt_direct(rm: RefractedModel, x: float, q: float) -> float:
    """Same quantity from the unreduced expression

        (E[X_1] - alpha) exp(Phi s) (Phi / (q - alpha Phi) - Phi int_0^s exp(-Phi u) WW(u) du),

    with the integral by quadrature.  Loses accuracy once exp(Phi s) is large;
    kept as an independent cross-check of the termwise form.
    """
    drift = require_net_profit(rm)
    phi = right_inverse_phi(rm.x_model, q)
    y_model = refract(rm) if rm.alpha > 0 else rm.x_model
    WW = _fast(scale_function(y_model, 0.0))
    s = x - rm.b
    integral = integrate_1d(lambda u: math.exp(-phi * u) * WW(u), 0.0, s) if s > 0 else 0.0
    return drift * math.exp(phi * s) * (phi / (q - rm.alpha * phi) - phi * integral)


def prob_parisian(rm: RefractedModel, x: float, q: float) -> float:
    """P_x(Parisian ruin) with Exp(q) implementation clocks."""
    return 1.0 - total_occupation_lt(rm, x, q)


def occupation_atom(rm: RefractedModel, x: float) -> float:
    """P_x(total time below b = 0) = (E[X_1] - alpha) WW(x - b)."""
    drift = require_net_profit(rm)
    y_model = refract(rm) if rm.alpha > 0 else rm.x_model
    return drift * scale_function(y_model, 0.0)(x - rm.b)


def _gauss_kendall_term(coef: float, expo: float, lo: float, mean: float, var: float) -> float:
    """coef * int_lo^inf y exp(expo (y + shift)) N(y; mean, var) dy without the shift factor."""
    sd = math.sqrt(var)
    m2 = mean + expo * var
    log_scale = expo * mean + 0.5 * expo * expo * var
    z = (lo - m2) / sd
    # int_lo^inf y N(y; m2, var) dy = m2 Q(z) + sd phi(z)
    log_q = float(log_ndtr(-z))
    log_pdf = -0.5 * z * z - 0.5 * math.log(2 * math.pi)
    return coef * (m2 * math.exp(log_scale + log_q) + sd * math.exp(log_scale + log_pdf))


def occupation_density(rm: RefractedModel, x: float, r: float, *, n_samples: int = 100_000, seed: int = 0) -> float:
    """Density at r > 0 of the absolutely continuous part of the total time below b."""
    return occupation_density_with_error(rm, x, r, n_samples=n_samples, seed=seed)[0]


def occupation_density_with_error(rm: RefractedModel, x: float, r: float, *, n_samples: int = 100_000, seed: int = 0) -> tuple[float, float]:
    """(density, standard error); the error is 0 for jump-free models.

    Uses (E[X_1] - alpha) E[(X_r / r) WW'(X_r + x - b); X_r > 0].  Jump-free
    models are evaluated in closed form against the Gaussian law of X_r; jump
    models by sampling X_r.
    """
    drift = require_net_profit(rm)
    if not r > 0:
        raise ValueError(f"r must be > 0, got {r}")
    xm = rm.x_model
    if xm.sigma == 0 and xm.jumps.eta == 0:
        raise ModelError("pure-drift model: total occupation is deterministic, no density")
    y_model = refract(rm) if rm.alpha > 0 else xm
    WW = scale_function(y_model, 0.0)
    if xm.bounded_variation and x < rm.b:
        # WW jumps at 0; the jump term needs the first-passage density of X
        raise ModelError("density below b is only supported for sigma > 0 models")
    WWp = WW.derivative()
    shift = x - rm.b
    lo = max(0.0, -shift)
    if xm.jumps.eta == 0:
        mean, var = xm.c * r, xm.sigma**2 * r
        total = math.fsum(
            _gauss_kendall_term(c_j * math.exp(t_j * shift), t_j, lo, mean, var)
            for c_j, t_j in zip(WWp.coefs, WWp.exponents)
        )
        return drift * total / r, 0.0
    samples = sample_levy_marginal(xm, r, n_samples, seed)
    vals = np.where(samples > lo, samples / r * WWp(np.maximum(samples + shift, 0.0)), 0.0)
    vals = drift * vals
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_samples))


def sample_levy_marginal(m, t: float, n: int, seed: int = 0) -> np.ndarray:
    """n independent draws of X_t."""
    rng = np.random.default_rng(seed)
    out = m.c * t + m.sigma * math.sqrt(t) * rng.standard_normal(n)
    if m.jumps.eta > 0:
        counts = rng.poisson(m.jumps.eta * t, size=n)
        total = int(counts.sum())
        comp = rng.choice(len(m.jumps.terms), size=total, p=m.jumps.weights)
        sizes = rng.exponential(1.0, size=total) / m.jumps.rates[comp]
        owner = np.repeat(np.arange(n), counts)
        out -= np.bincount(owner, weights=sizes, minlength=n)
    return out


def occupation_density_table(rm: RefractedModel, x: float, rs, **kw) -> list[tuple[float, float]]:
    return [(float(r), occupation_density(rm, x, float(r), **kw)) for r in rs]


def occupation_mass_check(rm: RefractedModel, x: float, q: float = 0.0, tol: QuadTol = QuadTol(1e-12, 1e-10, 400)) -> float:
    """atom + int_0^inf exp(-q r) density(r) dr for jump-free models (quadrature in r = s^2)."""
    atom = occupation_atom(rm, x)

    def integrand(s):
        if s == 0:
            return 0.0
        r = s * s
        return math.exp(-q * r) * occupation_density(rm, x, r) * 2 * s

    return atom + integrate_1d(integrand, 0.0, math.inf, tol)


# --- limit identities used in the bankruptcy derivation ----------------------

def z_minus_alpha_w_residual(rm: RefractedModel, q: float, x: float, tol: QuadTol = DEFAULT_TOL) -> float:
    """|Z(x) - alpha W(x) - ((1 - alpha W(0)) ZZ(x) - alpha int_0^x W'(y) ZZ(x - y) dy)|."""
    W_sum = scale_function(rm.x_model, q)
    Wp = _fast(W_sum.derivative())
    ZZ = _ZZ(rm, q)
    lhs = Z(rm.x_model, q, x) - rm.alpha * W_sum(x)
    conv = integrate_1d(lambda y: Wp(y) * ZZ(x - y), 0.0, x, tol)
    rhs = (1 - rm.alpha * W_sum(0.0)) * ZZ(x) - rm.alpha * conv
    return abs(lhs - rhs)


def _inner_yq(rm, q, WW, WWq, c, z, tol):
    """WW(c - z) + q int_0^{b - z} WW(c - z - y) WWq(y) dy."""
    upper = rm.b - z
    val = WW(c - z)
    if q > 0 and upper > 0:
        val += q * integrate_1d(lambda y: WW(c - z - y) * WWq(y), 0.0, upper, tol)
    return val


def transform_closed_form_residual(rm: RefractedModel, p: float, q: float, a: float, ys,
                                   tol: QuadTol = DEFAULT_TOL) -> float:
    """Largest relative gap between quadrature and the termwise form of G, H at y >= b (q > 0)."""
    parts = _TransformParts(rm, p, q, a, tol)
    worst = 0.0
    for y in ys:
        for which, quad in ((0, parts.G_quadrature), (1, parts.H_quadrature)):
            ref = quad(y)
            worst = max(worst, abs(parts._expansion(which, y) - ref) / max(1.0, abs(ref)))
    return worst


def large_c_identity_residuals(rm: RefractedModel, q: float, c: float, tol: QuadTol = DEFAULT_TOL) -> tuple[float, float]:
    """Relative residuals of the two c > b expansions of G(c) and H(c) (with p = 0, a = 0)."""
    if not c > rm.b:
        raise OrderingError("identities hold for c > b")
    y_model = refract(rm) if rm.alpha > 0 else rm.x_model
    WW = _fast(scale_function(y_model, 0.0))
    WWq = _fast(scale_function(y_model, q))
    ZZq = _ZZ(rm, q)
    W_sum = scale_function(rm.x_model, q)
    Wq, Wqp = _fast(W_sum), _fast(W_sum.derivative())
    parts = _TransformParts(rm, 0.0, q, 0.0, tol)
    b, alpha = rm.b, rm.alpha

    g_rhs = (1 - alpha * Wq(0.0)) * _inner_yq(rm, q, WW, WWq, c, 0.0, tol) - alpha * integrate_1d(
        lambda z: Wqp(z) * _inner_yq(rm, q, WW, WWq, c, z, tol), 0.0, b, tol
    )
    h_rhs = 1.0
    if q > 0:
        h_rhs += q * integrate_1d(lambda y: WW(c - y) * ZZq(y), 0.0, b, tol)
        h_rhs -= alpha * q * integrate_1d(lambda z: Wq(z) * _inner_yq(rm, q, WW, WWq, c, z, tol), 0.0, b, tol)
    g, h = parts.G(c), parts.H(c)
    return abs(g - g_rhs) / max(1.0, abs(g)), abs(h - h_rhs) / max(1.0, abs(h))
