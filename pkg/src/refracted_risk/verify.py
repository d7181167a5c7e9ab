"""Analytic-vs-oracle identity suite behind ``refracted-risk verify``.

``quick`` runs only deterministic identities (no simulation); ``full`` adds
Monte Carlo cross-checks.  Every report contains a sign-adjudication section
comparing the exit-below occupation transform with the ratio term subtracted
(implemented) and added (rejected variant).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .config import ModelSpec, model_hash
from .errors import DegenerateRootsError, NetProfitError
from .levy_model import (
    LevyModel,
    RefractedModel,
    laplace_exponent,
    mean_per_unit_time,
    refract,
    right_inverse_phi,
)
from .mc_oracle import (
    SimConfig,
    estimate_bankruptcy,
    estimate_exit,
    estimate_occupation_joint,
    estimate_parisian,
    estimate_ruin,
    estimate_total_occupation,
)
from .occupation import (
    OccupationQuery,
    bankruptcy_lt_ruin_finite,
    large_c_identity_residuals,
    occ_lt_exit_down,
    occ_lt_exit_up,
    occ_lt_reach_up,
    occupation_mass_check,
    prob_bankruptcy,
    prob_parisian,
    survival_lt,
    total_occupation_lt,
    transform_closed_form_residual,
    z_minus_alpha_w_residual,
)
from .refracted import (
    QuadTol,
    RefractedScaleEval,
    _fast,
    convolution_identity_residual,
    exit_down_U,
    exit_down_X,
    exit_up_U,
    exit_up_X,
    integrate_1d,
    rep_wq_residual,
    ruin_prob_U,
    ruin_prob_X,
)
from .scale_fn import scale_function

SUITES = ("quick", "full")
MC_SE = 3.0
SIGN_SE = 10.0


@dataclass
class Check:
    name: str
    status: str  # "pass", "fail" or "skip"
    value: float | None = None
    target: float | None = None
    tolerance: float | None = None
    detail: str = ""

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None and v != ""}


def _abs_check(name, value, target, tol, detail="") -> Check:
    ok = math.isfinite(value) and abs(value - target) <= tol
    return Check(name, "pass" if ok else "fail", float(value), float(target), tol, detail)


def _residual_check(name, residual, tol, detail="") -> Check:
    ok = math.isfinite(residual) and residual <= tol
    return Check(name, "pass" if ok else "fail", float(residual), 0.0, tol, detail)


def _mc_check(name, est, analytic, n_se=MC_SE) -> Check:
    z = (est.mean - analytic) / est.std_error if est.std_error > 0 else math.inf * (est.mean != analytic)
    ok = abs(z) <= n_se
    detail = f"mc={est.mean:.6g} se={est.std_error:.3g} z={z:+.2f} censored={est.censored_fraction:.3g}"
    return Check(name, "pass" if ok else "fail", float(est.mean), float(analytic), n_se * est.std_error, detail)


# --- analytic identities -----------------------------------------------------

def laplace_roundtrip_error(m: LevyModel, q: float, lam: float, tol: QuadTol = QuadTol(1e-13, 1e-11, 500)) -> float:
    """Relative error of the numerical Laplace transform of W^(q) at lam vs 1/(psi(lam) - q)."""
    Wq = scale_function(m, q)
    # exp(-lam x) W(x) with the damping folded into each exponent (avoids inf * 0)
    damped = _fast(type(Wq)(Wq.coefs, tuple(t - lam for t in Wq.exponents)))
    numeric = integrate_1d(damped, 0.0, math.inf, tol)
    exact = 1.0 / (float(laplace_exponent(m, lam)) - q)
    return abs(numeric - exact) / abs(exact)


def _roundtrip_checks(m: LevyModel, label: str) -> list[Check]:
    out = []
    for q in (0.0, 0.5, 2.0):
        try:
            phi = right_inverse_phi(m, q)
            errs = [laplace_roundtrip_error(m, q, phi + d) for d in (0.5, 1.0, 2.0)]
        except DegenerateRootsError as exc:
            out.append(Check(f"laplace-roundtrip[{label},q={q}]", "skip", detail=str(exc)))
            continue
        out.append(_residual_check(f"laplace-roundtrip[{label},q={q}]", max(errs), 1e-6))
        out.append(_residual_check(f"inverse-exponent[{label},q={q}]", abs(float(laplace_exponent(m, phi)) - q), 1e-9 * max(1, q)))
    return out


def _identity_checks(rm: RefractedModel) -> list[Check]:
    b = rm.b
    xs = [f * b for f in (0.25, 0.75, 1.5, 2.5, 4.0)]
    pq = [(0.0, 0.5), (0.3, 0.3), (0.5, 1.0), (1.0, 0.2), (2.0, 2.0)]
    conv = max(convolution_identity_residual(rm, p, q, x) for p, q in pq for x in xs)
    out = [_residual_check("convolution-identity[5x5]", conv, 1e-8)]
    xs_hi = [f * b for f in (1.1, 1.5, 2.0, 3.0, 4.0)]
    rep = max(rep_wq_residual(rm, q, x) for q in (0.0, 0.2, 0.5, 1.0, 2.0) for x in xs_hi)
    out.append(_residual_check("w-alternative-representation[5x5]", rep, 1e-8))
    closed = 0.0
    for q in (0.0, 0.5, 2.0):
        ev = RefractedScaleEval(rm, q)
        for x in xs:
            closed = max(
                closed,
                abs(ev.little_w(x) - ev.little_w_closed(x)) / max(1.0, abs(ev.little_w(x))),
                abs(ev.little_z(x) - ev.little_z_closed(x)) / max(1.0, abs(ev.little_z(x))),
            )
    out.append(_residual_check("refracted-scale quadrature-vs-closed", closed, 1e-9))
    zw = max(z_minus_alpha_w_residual(rm, q, x) for q in (0.3, 1.0) for x in xs)
    out.append(_residual_check("Z-minus-alpha-W identity", zw, 1e-8))
    return out


def _profit_checks(rm: RefractedModel) -> list[Check]:
    """Checks that need E[X_1] > alpha."""
    b = rm.b
    x, a, c = 1.2 * b, 0.0, 3.0 * b
    out = []
    total = exit_up_U(rm, 0.0, x, a, c) + exit_down_U(rm, 0.0, x, a, c)
    out.append(_abs_check("exit-probabilities-sum-to-one", total, 1.0, 1e-9))

    lc = max(max(large_c_identity_residuals(rm, q, f * b)) for q in (0.3, 1.0) for f in (1.5, 3.0, 6.0))
    out.append(_residual_check("G/H expansions above b", lc, 1e-8))
    cf = max(transform_closed_form_residual(rm, p, q, a, [f * b for f in (1.0, 1.5, 3.0)])
             for p, q in ((0.0, 0.5), (0.2, 0.5), (0.5, 2.0)))
    out.append(_residual_check("G/H termwise-vs-quadrature above b", cf, 1e-9))

    # bounds and monotonicity
    vals = []
    for q in (0.2, 0.8):
        for f in (0.5, 1.5):
            vals += [survival_lt(rm, f * b, q), prob_bankruptcy(rm, f * b, q), prob_parisian(rm, f * b, q),
                     total_occupation_lt(rm, f * b, q), bankruptcy_lt_ruin_finite(rm, f * b, q)]
    for p, q in ((0.0, 0.5), (0.2, 0.5)):
        qr = OccupationQuery(rm, x, a, c, p, q)
        vals += [occ_lt_exit_up(qr), occ_lt_exit_down(qr)]
    inside = all(-1e-12 <= v <= 1 + 1e-12 for v in vals)
    out.append(Check("transforms-within-unit-interval", "pass" if inside else "fail",
                     float(min(vals)), detail=f"min={min(vals):.6g} max={max(vals):.6g}"))
    qs = np.linspace(0.05, 3.0, 12)
    par = [prob_parisian(rm, x, q) for q in qs]
    mono = all(np.diff(par) > -1e-12)
    out.append(Check("parisian-increasing-in-rate", "pass" if mono else "fail"))
    split = max(abs(survival_lt(rm, f * b, 0.0) + bankruptcy_lt_ruin_finite(rm, f * b, 0.0) - 1.0)
                for f in (0.5, 1.5))
    out.append(_residual_check("survival-plus-ruin-at-zero-rate", split, 1e-9))

    xm = rm.x_model
    if xm.jumps.eta == 0 and xm.sigma > 0:
        mass = abs(occupation_mass_check(rm, 0.5 * b) - 1.0)
        out.append(_residual_check("occupation atom+density mass", mass, 1e-6))
        tr = max(abs(occupation_mass_check(rm, f * b, q) - total_occupation_lt(rm, f * b, q))
                 for q in (0.5, 1.0) for f in (0.5, 1.5))
        out.append(_residual_check("occupation density transform", tr, 1e-4))
    else:
        out.append(Check("occupation atom+density mass", "skip",
                         detail="closed-form density check needs a jump-free model with sigma > 0"))
    return out


def degeneration_residuals(rm: RefractedModel) -> dict[str, float]:
    """Largest |operation - reduction target| for alpha -> 0 and q -> 0."""
    b = rm.b
    xm = rm.x_model
    flat = RefractedModel(xm, 0.0, b)
    tiny_alpha = RefractedModel(xm, 1e-12, b)
    a, c = 0.0, 3.0 * b
    xs = [0.5 * b, 1.2 * b, 2.0 * b]
    qs = (0.0, 0.3, 1.0)
    res: dict[str, float] = {}

    def upd(key, v):
        res[key] = max(res.get(key, 0.0), abs(v))

    for q in qs:
        for x in xs:
            ux, dx = exit_up_X(xm, q, x, a, c), exit_down_X(xm, q, x, a, c)
            for label, m in (("alpha=0", flat), ("alpha->0", tiny_alpha)):
                upd(f"exit-up {label}", exit_up_U(m, q, x, a, c) - ux)
                upd(f"exit-down {label}", exit_down_U(m, q, x, a, c) - dx)
                qr = OccupationQuery(m, x, a, c, q, 0.0)
                upd(f"occupation-up {label}", occ_lt_exit_up(qr) - ux)
                upd(f"occupation-down {label}", occ_lt_exit_down(qr) - dx)
            # q -> 0 in the occupation rate
            up0, dn0 = exit_up_U(rm, q, x, a, c), exit_down_U(rm, q, x, a, c)
            for qq in (0.0, 1e-12):
                qr = OccupationQuery(rm, x, a, c, q, qq)
                upd("occupation-up q->0", occ_lt_exit_up(qr) - up0)
                upd("occupation-down q->0", occ_lt_exit_down(qr) - dn0)
    if rm.net_drift > 0:
        for x in xs:
            ruin = ruin_prob_U(rm, x)
            for qq in (0.0, 1e-12):
                upd("survival q->0", survival_lt(rm, x, qq) - (1 - ruin))
                upd("bankruptcy-ruin-finite q->0", bankruptcy_lt_ruin_finite(rm, x, qq) - ruin)
                upd("parisian q->0", prob_parisian(rm, x, qq))
                upd("total-occupation q->0", total_occupation_lt(rm, x, qq) - 1.0)
                upd("reach-up q->0", occ_lt_reach_up(rm, x, 3.0 * b, qq) - 1.0)
            if mean_per_unit_time(xm) > 0:
                ruin_x = ruin_prob_X(xm, x)
                for label, m in (("alpha=0", flat), ("alpha->0", tiny_alpha)):
                    upd(f"ruin {label}", ruin_prob_U(m, x) - ruin_x)
                    upd(f"survival {label} q=0", survival_lt(m, x, 0.0) - (1 - ruin_x))
                    for q in (0.3, 1.0):
                        phi = right_inverse_phi(xm, q)
                        # without refraction the occupation transform has a one-term closed form below b
                        if x <= b:
                            target = mean_per_unit_time(xm) * phi / q * math.exp(phi * (x - b))
                            upd(f"total-occupation {label}", total_occupation_lt(m, x, q) - target)
    return res


def _degeneration_checks(rm: RefractedModel) -> list[Check]:
    res = degeneration_residuals(rm)
    worst = max(res, key=res.get)
    return [_residual_check("degenerations alpha->0 and q->0", res[worst], 1e-9, f"worst: {worst}")]


# --- sign adjudication -------------------------------------------------------

def sign_configuration(rm: RefractedModel) -> OccupationQuery:
    b = rm.b
    return OccupationQuery(rm, 1.2 * b, 0.0, 3.0 * b, 0.2, 0.5)


def sign_adjudication(rm: RefractedModel, cfg: SimConfig | None = None) -> dict:
    """Compare the two readings of the ratio term in the exit-below transform.

    Without ``cfg`` only the [0, 1] bound is examined.
    """
    qr = sign_configuration(rm)
    minus = occ_lt_exit_down(qr, ratio_sign=-1)
    plus = occ_lt_exit_down(qr, ratio_sign=+1)
    out = {
        "configuration": {"x": qr.x, "a": qr.a, "c": qr.c, "p": qr.p, "q": qr.q},
        "minus": minus,
        "plus": plus,
        "minus_within_bounds": 0.0 <= minus <= 1.0,
        "plus_within_bounds": 0.0 <= plus <= 1.0,
    }
    if cfg is not None:
        est = estimate_occupation_joint(rm, qr.p, qr.q, qr.x, qr.a, qr.c, cfg)["down"]
        z_minus = (minus - est.mean) / est.std_error
        z_plus = (plus - est.mean) / est.std_error
        out["mc"] = est.as_dict()
        out["z_minus"] = z_minus
        out["z_plus"] = z_plus
        minus_ok = abs(z_minus) <= MC_SE
        plus_rejected = (not out["plus_within_bounds"]) or abs(z_plus) > SIGN_SE
    else:
        minus_ok = out["minus_within_bounds"]
        plus_rejected = not out["plus_within_bounds"]
    out["minus_agrees"] = minus_ok
    out["plus_rejected"] = plus_rejected
    out["verdict"] = "minus" if (minus_ok and plus_rejected) else "undecided"
    return out


# --- Monte Carlo -------------------------------------------------------------

def _horizon_check(name, short, long) -> Check:
    """Censoring sensitivity: the coupled estimate at twice the horizon moves by < 1 SE."""
    diff = abs(long.mean - short.mean)
    ok = diff < short.std_error
    return Check(f"{name} horizon-doubling", "pass" if ok else "fail", float(long.mean), float(short.mean),
                 float(short.std_error), f"shift={diff:.3g} se={short.std_error:.3g}")


def _mc_checks(rm: RefractedModel, cfg: SimConfig) -> list[Check]:
    """Simulation checks; every run also reports its horizon-doubling shift."""
    b = rm.b
    xm = rm.x_model
    out = []

    def add(name, pair, analytic):
        out.append(_mc_check(name, pair[0], analytic))
        out.append(_horizon_check(name, *pair))

    x, a, c = 1.2 * b, 0.0, 3.0 * b
    if mean_per_unit_time(xm) > 0:
        add("mc ruin X", estimate_ruin(xm, x, cfg, doubled=True), ruin_prob_X(xm, x))
    add("mc ruin U", estimate_ruin(rm, x, cfg, doubled=True), ruin_prob_U(rm, x))
    for q in (0.0, 0.3):
        short, long = estimate_exit(rm, q, x, a, c, cfg, doubled=True)
        add(f"mc exit-up U q={q}", (short["up_U"], long["up_U"]), exit_up_U(rm, q, x, a, c))
        add(f"mc exit-down U q={q}", (short["down_U"], long["down_U"]), exit_down_U(rm, q, x, a, c))
    qr = OccupationQuery(rm, x, a, c, 0.2, 0.5)
    short, long = estimate_occupation_joint(rm, qr.p, qr.q, x, a, c, cfg, doubled=True)
    add("mc occupation exit-up", (short["up"], long["up"]), occ_lt_exit_up(qr))
    add("mc occupation exit-down", (short["down"], long["down"]), occ_lt_exit_down(qr))
    for q in (0.2, 0.8):
        for f in (0.5, 1.5):
            xx = f * b
            add(f"mc bankruptcy q={q} x={xx:g}", estimate_bankruptcy(rm, xx, q, cfg, doubled=True),
                prob_bankruptcy(rm, xx, q))
            par = estimate_parisian(rm, xx, q, cfg, doubled=True)
            occ = estimate_total_occupation(rm, xx, q, cfg, doubled=True)
            add(f"mc parisian q={q} x={xx:g}", par, prob_parisian(rm, xx, q))
            out.append(_horizon_check(f"mc total-occupation q={q} x={xx:g}", *occ))
            par, occ = par[0], occ[0]
            z = ((par.mean - (1 - occ.mean)) / math.hypot(par.std_error, occ.std_error))
            out.append(Check(f"mc parisian clocks-vs-occupation q={q} x={xx:g}",
                             "pass" if abs(z) <= MC_SE else "fail", par.mean, 1 - occ.mean,
                             MC_SE * math.hypot(par.std_error, occ.std_error), f"z={z:+.2f}"))
    return out


# --- driver ------------------------------------------------------------------

def run_verify(spec: ModelSpec, suite: str = "quick", seed: int | None = None, n_paths: int | None = None,
               workers: int = 1) -> dict:
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {SUITES}")
    rm = spec.rm
    cfg = spec.sim
    cfg = replace(cfg, seed=cfg.seed if seed is None else seed,
                  n_paths=cfg.n_paths if n_paths is None else n_paths, workers=workers)
    t0 = time.perf_counter()
    checks: list[Check] = []
    checks += _roundtrip_checks(rm.x_model, "X")
    if rm.alpha > 0:
        checks += _roundtrip_checks(refract(rm), "Y")
    checks += _identity_checks(rm)
    checks += _degeneration_checks(rm) if rm.net_drift > 0 else [
        Check("degenerations alpha->0 and q->0", "skip", detail="net profit condition fails")]
    try:
        checks += _profit_checks(rm)
        profit = True
    except NetProfitError as exc:
        checks.append(Check("net-profit checks", "skip", detail=str(exc)))
        profit = False
    sign = sign_adjudication(rm, cfg if suite == "full" else None)
    if suite == "full" and profit:
        checks += _mc_checks(rm, cfg)
    checks.append(Check("sign-adjudication", "pass" if sign["verdict"] == "minus" else "fail",
                        sign["minus"], detail=f"plus={sign['plus']:.6g}"))
    passed = all(c.status != "fail" for c in checks)
    return {
        "suite": suite,
        "seed": cfg.seed,
        "n_paths": cfg.n_paths if suite == "full" else None,
        "model_hash": model_hash(spec),
        "version": __version__,
        "passed": passed,
        "checks": [c.as_dict() for c in checks],
        "sign_adjudication": sign,
        "wall_time_s": time.perf_counter() - t0,
    }


def summarize(report: dict) -> str:
    lines = [f"verify suite={report['suite']} model={report['model_hash']} version={report['version']}"]
    for c in report["checks"]:
        extra = f"  {c['detail']}" if c.get("detail") else ""
        val = f" value={c['value']:.3e}" if "value" in c else ""
        lines.append(f"  [{c['status'].upper():4}] {c['name']}{val}{extra}")
    s = report["sign_adjudication"]
    lines.append(f"  sign adjudication: minus={s['minus']:.6g} plus={s['plus']:.6g} verdict={s['verdict']}")
    n_fail = sum(c["status"] == "fail" for c in report["checks"])
    lines.append("PASSED" if report["passed"] else f"FAILED ({n_fail} checks)")
    return "\n".join(lines)
