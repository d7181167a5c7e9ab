"""Monte Carlo simulation of refracted paths, used as an independent oracle.

Bounded-variation models (sigma = 0) are simulated exactly: between claims the
path is linear with slope c below b and c - alpha above b, so level crossings,
occupation increments and clock rings are all solved in closed form.  Models
with sigma > 0 use an Euler scheme with step ``dt``.

Paths are split into fixed blocks of ``BLOCK`` paths.  Block k draws from its
own generator, spawned from ``SeedSequence(seed, spawn_key=(stream,))``, so the
output depends only on (seed, config, model), never on the worker count.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .levy_model import LevyModel, RefractedModel

BLOCK = 1024

# path outcome codes
CENSORED, EXIT_UP, EXIT_DOWN, CLOCK = 0, 1, 2, 3
# trace event codes
EV_JUMP, EV_CROSSING, EV_EXIT, EV_CLOCK, EV_HORIZON = 0, 1, 2, 3, 4
EVENT_NAMES = {
    EV_JUMP: "jump",
    EV_CROSSING: "refraction-crossing",
    EV_EXIT: "exit",
    EV_CLOCK: "clock-ring",
    EV_HORIZON: "horizon",
}

# clock modes
NO_CLOCK, HAZARD_CLOCK, EXCURSION_CLOCK = 0, 1, 2

# stream ids keep estimators of different targets statistically independent
STREAMS = {
    "exit": 1,
    "joint": 2,
    "ruin": 3,
    "bankruptcy": 4,
    "parisian": 5,
    "total-occupation": 6,
    "reach-up": 7,
    "survival": 8,
    "marginal": 9,
}


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 100_000
    horizon: float = 1000.0
    dt: float = 1e-3
    seed: int = 12345
    antithetic: bool = False
    # execution only; results do not depend on it
    workers: int = 1

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if not self.horizon > 0:
            raise ValueError("horizon must be > 0")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.antithetic and self.n_paths % 2:
            raise ValueError("antithetic sampling needs an even number of paths")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class SimEstimate:
    mean: float
    std_error: float
    n_paths: int
    n_censored: int

    @property
    def censored_fraction(self) -> float:
        return self.n_censored / self.n_paths

    def agrees_with(self, value: float, n_se: float = 3.0) -> bool:
        return abs(value - self.mean) <= n_se * self.std_error

    def as_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std_error": self.std_error,
            "n_paths": self.n_paths,
            "n_censored": self.n_censored,
            "censored_fraction": self.censored_fraction,
        }


@dataclass(frozen=True)
class PathEvent:
    path: int
    time: float
    level: float
    kind: str


@dataclass
class PathBatch:
    """Per-path outcomes of one simulation run."""

    kind: np.ndarray
    time: np.ndarray
    occ: np.ndarray
    level: np.ndarray
    pairs: int = 1
    events: list[PathEvent] = field(default_factory=list)
    checkpoint: float = math.inf
    # the same paths as seen at ``checkpoint`` (outcome 0 if unresolved by then)
    chk_kind: np.ndarray | None = None
    chk_occ: np.ndarray | None = None
    chk_level: np.ndarray | None = None

    def at_checkpoint(self) -> PathBatch:
        """The batch a run with horizon ``checkpoint`` would give on these same draws."""
        if self.chk_kind is None:
            raise ValueError("simulated without a checkpoint")
        return PathBatch(self.chk_kind, np.minimum(self.time, self.checkpoint), self.chk_occ,
                         self.chk_level, self.pairs, [])


# --- kernels -----------------------------------------------------------------

@njit(nogil=True, cache=True)
def _record(evp, evt, evl, evk, evc, pid, t, u, k):
    i = evc[0]
    if i < evp.shape[0]:
        evp[i] = pid
        evt[i] = t
        evl[i] = u
        evk[i] = k
        evc[0] = i + 1


@njit(nogil=True, cache=True)
def _draw_size(gen, cumw, rates):
    k = 0
    ncomp = rates.shape[0]
    if ncomp > 1:
        v = gen.random()
        while k < ncomp - 1 and v > cumw[k]:
            k += 1
    return gen.exponential(1.0 / rates[k])


@njit(nogil=True, cache=True)
def _bv_block(gen, out_kind, out_time, out_occ, out_level, chk_kind, chk_occ, chk_level, t_chk,
              x0, b, d_lo, d_hi, eta, cumw, rates, a_lvl, c_lvl, horizon,
              mode, clock_q, first_id, trace_paths, evp, evt, evl, evk, evc):
    n = out_kind.shape[0]
    for i in range(n):
        pid = first_id + i
        tracing = pid < trace_paths
        t = 0.0
        u = x0
        occ = 0.0
        kind = 0
        # state at t_chk, taken from the linear segment straddling it
        snap = False
        snap_u = 0.0
        snap_occ = 0.0
        thresh = np.inf
        clock_end = np.inf
        if mode == 1 and clock_q > 0:
            thresh = gen.exponential(1.0) / clock_q
        if u < a_lvl:
            kind = 2
        elif u >= c_lvl:
            kind = 1
        elif mode == 2 and clock_q > 0 and u < b:
            clock_end = gen.exponential(1.0 / clock_q)
        while kind == 0:
            tau = gen.exponential(1.0 / eta) if eta > 0 else np.inf
            t_end = min(t + tau, horizon)
            if u < b:
                target = min(b, c_lvl)
                t_hit = t + (target - u) / d_lo
                hit = t_hit <= t_end
                seg_end = t_hit if hit else t_end
                t_ring = np.inf
                if mode == 1:
                    t_ring = t + (thresh - occ)
                elif mode == 2:
                    t_ring = clock_end
                if not snap and min(t_ring, seg_end) > t_chk:
                    snap, snap_u, snap_occ = True, u + d_lo * (t_chk - t), occ + (t_chk - t)
                if t_ring <= seg_end:
                    u += d_lo * (t_ring - t)
                    occ += t_ring - t
                    t = t_ring
                    kind = 3
                    if tracing:
                        _record(evp, evt, evl, evk, evc, pid, t, u, 3)
                    break
                du = seg_end - t
                occ += du
                t = seg_end
                if hit:
                    u = target
                    if target >= c_lvl:
                        kind = 1
                        if tracing:
                            _record(evp, evt, evl, evk, evc, pid, t, u, 2)
                        break
                    clock_end = np.inf
                    if tracing:
                        _record(evp, evt, evl, evk, evc, pid, t, u, 1)
                else:
                    u += d_lo * du
            if u >= b and t < t_end:
                t_hit = t + (c_lvl - u) / d_hi
                if not snap and min(t_hit, t_end) > t_chk:
                    snap, snap_u, snap_occ = True, u + d_hi * (t_chk - t), occ
                if t_hit <= t_end:
                    t = t_hit
                    u = c_lvl
                    kind = 1
                    if tracing:
                        _record(evp, evt, evl, evk, evc, pid, t, u, 2)
                    break
                u += d_hi * (t_end - t)
                t = t_end
            if t >= horizon:
                if tracing:
                    _record(evp, evt, evl, evk, evc, pid, t, u, 4)
                break
            was_above = u >= b
            u -= _draw_size(gen, cumw, rates)
            if tracing:
                _record(evp, evt, evl, evk, evc, pid, t, u, 0)
            if u < a_lvl:
                kind = 2
                if tracing:
                    _record(evp, evt, evl, evk, evc, pid, t, u, 2)
                break
            if was_above and u < b:
                if tracing:
                    _record(evp, evt, evl, evk, evc, pid, t, u, 1)
                if mode == 2 and clock_q > 0:
                    clock_end = t + gen.exponential(1.0 / clock_q)
        out_kind[i] = kind
        out_time[i] = t
        out_occ[i] = occ
        out_level[i] = u
        if snap:
            chk_kind[i], chk_occ[i], chk_level[i] = 0, snap_occ, snap_u
        else:
            chk_kind[i], chk_occ[i], chk_level[i] = kind, occ, u


@njit(nogil=True, cache=True)
def _euler_block(gen, out_kind, out_time, out_occ, out_level, chk_kind, chk_occ, chk_level, t_chk,
                 x0, b, d_lo, d_hi, sigma, eta, cumw, rates, a_lvl, c_lvl, horizon,
                 mode, clock_q, dt, lanes, first_id, trace_paths, evp, evt, evl, evk, evc):
    n = out_kind.shape[0]
    u = np.empty(lanes)
    occ = np.empty(lanes)
    kind = np.empty(lanes, dtype=np.int8)
    active = np.empty(lanes, dtype=np.bool_)
    tdone = np.empty(lanes)
    in_exc = np.empty(lanes, dtype=np.bool_)
    clock_end = np.empty(lanes)
    snap = np.empty(lanes, dtype=np.bool_)
    snap_u = np.empty(lanes)
    snap_occ = np.empty(lanes)
    sign = np.ones(lanes)
    if lanes == 2:
        sign[1] = -1.0
    for g in range(n // lanes):
        thresh = np.inf
        if mode == 1 and clock_q > 0:
            thresh = gen.exponential(1.0) / clock_q
        n_active = 0
        for l in range(lanes):
            u[l] = x0
            occ[l] = 0.0
            tdone[l] = 0.0
            kind[l] = 0
            in_exc[l] = False
            clock_end[l] = np.inf
            snap[l] = False
            if x0 < a_lvl:
                kind[l] = 2
            elif x0 >= c_lvl:
                kind[l] = 1
            active[l] = kind[l] == 0
            if active[l]:
                n_active += 1
                if mode == 2 and clock_q > 0 and x0 < b:
                    in_exc[l] = True
                    clock_end[l] = gen.exponential(1.0 / clock_q)
        t = 0.0
        next_jump = gen.exponential(1.0 / eta) if eta > 0 else np.inf
        while n_active > 0 and t < horizon:
            h = min(dt, horizon - t)
            if t < t_chk:
                # the grid always contains t_chk
                h = min(h, t_chk - t)
            t_new = t + h
            if t == t_chk:
                for l in range(lanes):
                    if active[l]:
                        snap[l], snap_u[l], snap_occ[l] = True, u[l], occ[l]
            z = gen.standard_normal() * sigma * math.sqrt(h)
            jump = 0.0
            while next_jump <= t_new:
                jump += _draw_size(gen, cumw, rates)
                next_jump += gen.exponential(1.0 / eta)
            for l in range(lanes):
                if not active[l]:
                    continue
                pid = first_id + g * lanes + l
                tracing = pid < trace_paths
                drift = d_hi if u[l] > b else d_lo
                un = u[l] + drift * h + sign[l] * z - jump
                if tracing and jump > 0:
                    _record(evp, evt, evl, evk, evc, pid, t_new, un, 0)
                below0 = 1.0 if u[l] < b else 0.0
                below1 = 1.0 if un < b else 0.0
                docc = 0.5 * h * (below0 + below1)
                if mode == 1 and docc > 0 and occ[l] + docc >= thresh:
                    t_ring = t + h * (thresh - occ[l]) / docc
                    occ[l] = thresh
                    u[l] = un
                    kind[l] = 3
                    tdone[l] = t_ring
                    active[l] = False
                    n_active -= 1
                    if tracing:
                        _record(evp, evt, evl, evk, evc, pid, t_ring, un, 3)
                    continue
                occ[l] += docc
                if (below0 == 1.0) != (below1 == 1.0) and tracing:
                    _record(evp, evt, evl, evk, evc, pid, t_new, un, 1)
                if mode == 2 and clock_q > 0:
                    if below1 == 1.0 and not in_exc[l]:
                        in_exc[l] = True
                        clock_end[l] = t_new + gen.exponential(1.0 / clock_q)
                    elif below1 == 0.0:
                        in_exc[l] = False
                        clock_end[l] = np.inf
                    if in_exc[l] and clock_end[l] <= t_new:
                        u[l] = un
                        kind[l] = 3
                        tdone[l] = clock_end[l]
                        active[l] = False
                        n_active -= 1
                        if tracing:
                            _record(evp, evt, evl, evk, evc, pid, clock_end[l], un, 3)
                        continue
                u[l] = un
                if un > c_lvl:
                    kind[l] = 1
                elif un < a_lvl:
                    kind[l] = 2
                if kind[l] != 0:
                    tdone[l] = t_new
                    active[l] = False
                    n_active -= 1
                    if tracing:
                        _record(evp, evt, evl, evk, evc, pid, t_new, un, 2)
            t = t_new
        for l in range(lanes):
            if active[l]:
                tdone[l] = t
                pid = first_id + g * lanes + l
                if pid < trace_paths:
                    _record(evp, evt, evl, evk, evc, pid, t, u[l], 4)
            j = g * lanes + l
            out_kind[j] = kind[l]
            out_time[j] = tdone[l]
            out_occ[j] = occ[l]
            out_level[j] = u[l]
            if snap[l]:
                chk_kind[j], chk_occ[j], chk_level[j] = 0, snap_occ[l], snap_u[l]
            else:
                chk_kind[j], chk_occ[j], chk_level[j] = kind[l], occ[l], u[l]


# --- driver ------------------------------------------------------------------

def _as_refracted(model) -> RefractedModel:
    if isinstance(model, RefractedModel):
        return model
    if isinstance(model, LevyModel):
        # alpha = 0: the threshold is irrelevant to the dynamics
        return RefractedModel(model, 0.0, 1.0)
    raise TypeError(f"expected LevyModel or RefractedModel, got {type(model).__name__}")


def simulate_refracted_paths(model, x0: float, cfg: SimConfig, a: float = -math.inf, c: float = math.inf,
                             clock_mode: int = NO_CLOCK, clock_q: float = 0.0, stream: int = 0,
                             trace_paths: int = 0, trace_cap: int = 100_000,
                             checkpoint: float = math.inf) -> PathBatch:
    """Simulate ``cfg.n_paths`` paths of U from ``x0`` until exit of (a, c), a clock ring or the horizon.

    Returns per-path outcome code, stopping time, time spent below b and final level.
    With a finite ``checkpoint`` < horizon the state of every path at that time
    is recorded too, so one run yields coupled estimates at two horizons.
    (For sigma > 0 the Euler grid is then cut at the checkpoint.)
    """
    rm = _as_refracted(model)
    xm = rm.x_model
    n = cfg.n_paths
    cumw = np.cumsum(xm.jumps.weights) if xm.jumps.terms else np.ones(1)
    rates = xm.jumps.rates if xm.jumps.terms else np.ones(1)
    eta = xm.jumps.eta
    d_lo, d_hi = xm.c, xm.c - rm.alpha
    lanes = 2 if (cfg.antithetic and xm.sigma > 0) else 1

    kind = np.zeros(n, dtype=np.int8)
    time = np.zeros(n)
    occ = np.zeros(n)
    level = np.zeros(n)
    has_chk = checkpoint < cfg.horizon
    # without a checkpoint the kernels' checkpoint copies land on the outputs themselves
    chk = [np.zeros(n, dtype=np.int8), np.zeros(n), np.zeros(n)] if has_chk else [kind, occ, level]
    t_chk = float(checkpoint) if has_chk else math.inf
    n_blocks = -(-n // BLOCK)
    seeds = np.random.SeedSequence(cfg.seed, spawn_key=(stream,)).spawn(n_blocks)

    trace_paths = min(trace_paths, n)
    cap = trace_cap if trace_paths > 0 else 0
    evp = np.zeros(cap, dtype=np.int64)
    evt = np.zeros(cap)
    evl = np.zeros(cap)
    evk = np.zeros(cap, dtype=np.int8)
    evc = np.zeros(1, dtype=np.int64)

    def run(k: int):
        lo, hi = k * BLOCK, min(n, (k + 1) * BLOCK)
        gen = np.random.Generator(np.random.PCG64(seeds[k]))
        # only block 0 may trace; trace_paths <= BLOCK keeps that exact
        tp = trace_paths if k == 0 else 0
        ev = (evp, evt, evl, evk, evc) if k == 0 else (evp[:0], evt[:0], evl[:0], evk[:0], np.zeros(1, dtype=np.int64))
        if xm.sigma == 0:
            _bv_block(gen, kind[lo:hi], time[lo:hi], occ[lo:hi], level[lo:hi],
                      *(v[lo:hi] for v in chk), t_chk,
                      float(x0), rm.b, d_lo, d_hi, eta, cumw, rates, float(a), float(c),
                      cfg.horizon, clock_mode, float(clock_q), lo, tp, *ev)
        else:
            _euler_block(gen, kind[lo:hi], time[lo:hi], occ[lo:hi], level[lo:hi],
                         *(v[lo:hi] for v in chk), t_chk,
                         float(x0), rm.b, d_lo, d_hi, xm.sigma, eta, cumw, rates, float(a), float(c),
                         cfg.horizon, clock_mode, float(clock_q), cfg.dt, lanes, lo, tp, *ev)

    if trace_paths > BLOCK:
        raise ValueError(f"can trace at most {BLOCK} paths")
    if cfg.workers == 1 or n_blocks == 1:
        for k in range(n_blocks):
            run(k)
    else:
        with ThreadPoolExecutor(cfg.workers) as pool:
            list(pool.map(run, range(n_blocks)))

    events = [
        PathEvent(int(evp[i]), float(evt[i]), float(evl[i]), EVENT_NAMES[int(evk[i])])
        for i in range(int(evc[0]))
    ]
    if not has_chk:
        return PathBatch(kind, time, occ, level, lanes, events)
    return PathBatch(kind, time, occ, level, lanes, events, t_chk, *chk)


def _estimate(values: np.ndarray, n_censored: int, pairs: int = 1) -> SimEstimate:
    n = values.shape[0]
    mean = math.fsum(values) / n
    if pairs == 2:
        # antithetic pairs are the independent units
        units = 0.5 * (values[0::2] + values[1::2])
    else:
        units = values
    m = units.shape[0]
    se = float(np.std(units, ddof=1) / math.sqrt(m)) if m > 1 else math.inf
    return SimEstimate(mean, se, n, int(n_censored))


def write_trace_csv(events: list[PathEvent], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["path", "time", "level", "kind"])
        for e in events:
            w.writerow([e.path, repr(e.time), repr(e.level), e.kind])


# --- estimators --------------------------------------------------------------

def _open_censored(batch: PathBatch, b: float) -> int:
    """Paths alive at the horizon while still in the red zone."""
    return int(np.count_nonzero((batch.kind == CENSORED) & (batch.level < b)))


def _runs(model, x: float, cfg: SimConfig, doubled: bool, **kw) -> list[PathBatch]:
    """[batch], or with ``doubled`` the coupled [horizon, 2 * horizon] views of one run."""
    if not doubled:
        return [simulate_refracted_paths(model, x, cfg, **kw)]
    long = simulate_refracted_paths(model, x, replace(cfg, horizon=2 * cfg.horizon), checkpoint=cfg.horizon, **kw)
    return [long.at_checkpoint(), long]


def _pack(results: list, doubled: bool):
    return tuple(results) if doubled else results[0]


def estimate_exit(rm: RefractedModel, q: float, x: float, a: float, c: float, cfg: SimConfig,
                  doubled: bool = False) -> dict[str, SimEstimate]:
    """E[exp(-q kappa); exit event] for up/down exits of U and of X.

    X is simulated from the same stream (alpha = 0), so the two share claims.
    Every estimator takes ``doubled``: it then returns the pair of coupled
    estimates at the configured horizon and at twice that horizon.
    """
    outs = [{}, {}] if doubled else [{}]
    for label, model in (("U", rm), ("X", rm.unrefracted())):
        for out, batch in zip(outs, _runs(model, x, cfg, doubled, a=a, c=c, stream=STREAMS["exit"])):
            disc = np.exp(-q * batch.time)
            cens = int(np.count_nonzero(batch.kind == CENSORED))
            out[f"up_{label}"] = _estimate(disc * (batch.kind == EXIT_UP), cens, batch.pairs)
            out[f"down_{label}"] = _estimate(disc * (batch.kind == EXIT_DOWN), cens, batch.pairs)
    return _pack(outs, doubled)


def estimate_occupation_joint(rm: RefractedModel, p: float, q: float, x: float, a: float, c: float,
                              cfg: SimConfig, doubled: bool = False) -> dict[str, SimEstimate]:
    """E[exp(-p kappa - q occupation below b); exit event] for both exits."""
    outs = []
    for batch in _runs(rm, x, cfg, doubled, a=a, c=c, stream=STREAMS["joint"]):
        w = np.exp(-p * batch.time - q * batch.occ)
        cens = int(np.count_nonzero(batch.kind == CENSORED))
        outs.append({
            "up": _estimate(w * (batch.kind == EXIT_UP), cens, batch.pairs),
            "down": _estimate(w * (batch.kind == EXIT_DOWN), cens, batch.pairs),
        })
    return _pack(outs, doubled)


def estimate_ruin(model, x: float, cfg: SimConfig, doubled: bool = False) -> SimEstimate:
    """P_x(ruin before the horizon); works for X (LevyModel) or U."""
    rm = _as_refracted(model)
    return _pack([
        _estimate((batch.kind == EXIT_DOWN).astype(float), _open_censored(batch, rm.b), batch.pairs)
        for batch in _runs(rm, x, cfg, doubled, a=0.0, c=math.inf, stream=STREAMS["ruin"])
    ], doubled)


def estimate_bankruptcy(rm: RefractedModel, x: float, q: float, cfg: SimConfig, doubled: bool = False) -> SimEstimate:
    """Bankruptcy with hazard q on [0, b) and immediate ruin below 0, via an Exp(1) clock per path."""
    outs = []
    for batch in _runs(rm, x, cfg, doubled, a=0.0, c=math.inf, clock_mode=HAZARD_CLOCK, clock_q=q,
                       stream=STREAMS["bankruptcy"]):
        hit = (batch.kind == EXIT_DOWN) | (batch.kind == CLOCK)
        outs.append(_estimate(hit.astype(float), _open_censored(batch, rm.b), batch.pairs))
    return _pack(outs, doubled)


def estimate_survival_split(rm: RefractedModel, x: float, q: float, cfg: SimConfig,
                            doubled: bool = False) -> dict[str, SimEstimate]:
    """E[exp(-q occ); ruin] and E[exp(-q occ); no ruin] with occ counted until ruin."""
    outs = []
    for batch in _runs(rm, x, cfg, doubled, a=0.0, c=math.inf, stream=STREAMS["survival"]):
        w = np.exp(-q * batch.occ)
        cens = _open_censored(batch, rm.b)
        outs.append({
            "ruin": _estimate(w * (batch.kind == EXIT_DOWN), cens, batch.pairs),
            "survival": _estimate(w * (batch.kind != EXIT_DOWN), cens, batch.pairs),
        })
    return _pack(outs, doubled)


def estimate_parisian(rm: RefractedModel, x: float, q: float, cfg: SimConfig, doubled: bool = False) -> SimEstimate:
    """Parisian ruin: an Exp(q) clock starts with each excursion below b."""
    return _pack([
        _estimate((batch.kind == CLOCK).astype(float), _open_censored(batch, rm.b), batch.pairs)
        for batch in _runs(rm, x, cfg, doubled, clock_mode=EXCURSION_CLOCK, clock_q=q, stream=STREAMS["parisian"])
    ], doubled)


def estimate_total_occupation(rm: RefractedModel, x: float, q: float, cfg: SimConfig,
                              doubled: bool = False) -> SimEstimate:
    """E[exp(-q * time below b up to the horizon)]."""
    return _pack([
        _estimate(np.exp(-q * batch.occ), _open_censored(batch, rm.b), batch.pairs)
        for batch in _runs(rm, x, cfg, doubled, stream=STREAMS["total-occupation"])
    ], doubled)


def estimate_reach_up(rm: RefractedModel, x: float, c: float, q: float, cfg: SimConfig,
                      doubled: bool = False) -> SimEstimate:
    """E[exp(-q occ); kappa_c^+ < horizon]."""
    outs = []
    for batch in _runs(rm, x, cfg, doubled, c=c, stream=STREAMS["reach-up"]):
        w = np.exp(-q * batch.occ) * (batch.kind == EXIT_UP)
        outs.append(_estimate(w, int(np.count_nonzero(batch.kind == CENSORED)), batch.pairs))
    return _pack(outs, doubled)


def estimate_mean_increment(m: LevyModel, cfg: SimConfig, t: float = 1.0) -> SimEstimate:
    """Sample mean of X_t - X_0 from the path generator."""
    batch = simulate_refracted_paths(m, 0.0, replace(cfg, horizon=t), stream=STREAMS["marginal"])
    return _estimate(batch.level / t, 0, batch.pairs)
