"""Adaptive Dormand-Prince 5(4) integration and asymptotic-regime detection.

Wage share and employment rate can be advanced in log coordinates so that
they never change sign.  When the debt share (or, with speculation, the flow
share) grows past a threshold the integration continues in the transformed
coordinates of the same family; the switch is an exact change of variables
and is recorded in ``Trajectory.system_segments``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .equilibria import EquilibriumPoint, enumerate_equilibria, family_params
from .errors import ModelDomainError, StallError
from .model import SystemId, convert, log_rates, observables, price_path, to_primal, vector_field
from .params import ModelParams

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B = _A[6]
# fifth-order weights minus embedded fourth-order weights
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# continuous extension: coefficients of theta, theta^2, theta^3, theta^4 per stage
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_BETA1 = 0.7 / 5.0
_BETA2 = 0.4 / 5.0
MIN_STEP = 1e-14
LAMBDA_FLOOR = 1e-12

_RECOVERABLE = (ModelDomainError, ZeroDivisionError, OverflowError, FloatingPointError)


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-11
    t_end: float = 100.0
    max_step: float = 0.5
    log_space: bool = True
    b_switch_threshold: float = 1e6
    f_switch_threshold: float = 1e6
    switch_back_ratio: float = 1e-3  # leave transformed coordinates once |b| < threshold * ratio
    sample_dt: float = 0.05
    max_steps: int = 5_000_000

    def __post_init__(self) -> None:
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not (self.max_step > 0 and self.sample_dt > 0):
            raise ValueError("max_step and sample_dt must be positive")
        if not (self.b_switch_threshold > 1 and self.f_switch_threshold > 1):
            raise ValueError("switch thresholds must exceed 1")
        if not 0 < self.switch_back_ratio < 1:
            raise ValueError("switch_back_ratio must lie in (0, 1)")


# ---------------------------------------------------------------------------
# generic stepper
# ---------------------------------------------------------------------------

def _stages(fun: Callable[[float, np.ndarray], np.ndarray], t: float, y: np.ndarray, h: float,
            k1: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    K = np.empty((7, y.size))
    K[0] = k1
    for s in range(1, 7):
        ys = y + h * (_A[s] @ K[:s])
        K[s] = fun(t + _C[s] * h, ys)
        if s == 5:
            y_new = y + h * (_B[:6] @ K[:6])
            # FSAL: the seventh stage is f at the new point
            K[6] = fun(t + h, y_new)
            break
    err = h * (_E @ K)
    return y_new, err, K


def dp_step(fun: Callable[[float, np.ndarray], np.ndarray], t: float, y: Sequence[float], h: float,
            k1: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """One Dormand-Prince step; returns the fifth-order state and the embedded error vector."""
    y = np.asarray(y, dtype=float)
    if k1 is None:
        k1 = np.asarray(fun(t, y), dtype=float)
    y_new, err, _ = _stages(fun, t, y, h, k1)
    return y_new, err


def step(system: SystemId | str, state: Sequence[float], t: float, h: float,
         params: ModelParams) -> tuple[np.ndarray, float]:
    """One embedded RK step of a model system in its own coordinates.

    Returns the new state and the max-norm of the embedded error estimate.
    """
    if not h > 0:
        raise ValueError("step size must be positive")
    system = SystemId(system)
    p = family_params(system, params)

    def fun(_t: float, y: np.ndarray) -> np.ndarray:
        return np.asarray(vector_field(y, system, p))

    y_new, err = dp_step(fun, t, state, h)
    return y_new, float(np.max(np.abs(err)))


class DormandPrince:
    """Adaptive integrator with PI step control and a quartic dense output."""

    def __init__(self, fun: Callable[[float, np.ndarray], np.ndarray], t0: float, y0: Sequence[float],
                 rel_tol: float, abs_tol: float, max_step: float = math.inf, h0: float | None = None):
        self.fun = fun
        self.t = float(t0)
        self.y = np.asarray(y0, dtype=float).copy()
        self.rtol, self.atol, self.max_step = rel_tol, abs_tol, max_step
        self.f = np.asarray(fun(self.t, self.y), dtype=float)
        if not np.all(np.isfinite(self.f)):
            raise ModelDomainError("vector field is not finite at the initial state")
        self.h = min(h0 if h0 is not None else self._initial_step(), max_step)
        self.err_prev = 1e-4
        self.t_old = self.t
        self.y_old = self.y
        self.K: np.ndarray | None = None
        self.n_accepted = 0
        self.n_rejected = 0

    def _norm(self, err: np.ndarray, y_new: np.ndarray) -> float:
        scale = self.atol + self.rtol * np.maximum(np.abs(self.y), np.abs(y_new))
        return float(np.sqrt(np.mean((err / scale) ** 2)))

    def _initial_step(self) -> float:
        scale = self.atol + self.rtol * np.abs(self.y)
        d0 = np.sqrt(np.mean((self.y / scale) ** 2))
        d1 = np.sqrt(np.mean((self.f / scale) ** 2))
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        try:
            f1 = np.asarray(self.fun(self.t + h0, self.y + h0 * self.f))
            d2 = np.sqrt(np.mean(((f1 - self.f) / scale) ** 2)) / h0
        except _RECOVERABLE:
            return h0
        if max(d1, d2) <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** (1 / 5)
        return min(100 * h0, h1)

    def advance(self, t_bound: float) -> None:
        """Take one accepted step, not past ``t_bound``."""
        h = min(self.h, self.max_step, t_bound - self.t)
        while True:
            if h < MIN_STEP:
                raise StallError(f"step size {h:.3g} below {MIN_STEP:g} at t={self.t:.6g}")
            try:
                y_new, err, K = _stages(self.fun, self.t, self.y, h, self.f)
                ok = bool(np.all(np.isfinite(y_new)) and np.all(np.isfinite(K[6])))
            except _RECOVERABLE:
                ok = False
            if not ok:
                self.n_rejected += 1
                h *= 0.5
                continue
            e = self._norm(err, y_new)
            if e <= 1.0:
                factor = _MAX_FACTOR if e == 0 else \
                    _SAFETY * e ** -_BETA1 * self.err_prev ** _BETA2
                factor = min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
                self.err_prev = max(e, 1e-4)
                self.t_old, self.y_old, self.K = self.t, self.y, K
                self.t = self.t + h if t_bound - (self.t + h) > 1e-12 * max(1.0, abs(t_bound)) else t_bound
                self.y, self.f = y_new, K[6]
                self.h = h * factor
                self.n_accepted += 1
                return
            self.n_rejected += 1
            h *= max(_MIN_FACTOR, _SAFETY * e ** -0.2)

    def dense(self, t: float) -> np.ndarray:
        """State at ``t`` inside the last accepted step."""
        h = self.t - self.t_old
        if h == 0:
            return self.y.copy()
        theta = (t - self.t_old) / h
        powers = np.array([theta, theta ** 2, theta ** 3, theta ** 4])
        return self.y_old + h * (self.K.T @ (_P @ powers))


def solve(fun: Callable[[float, np.ndarray], np.ndarray], t_span: tuple[float, float], y0: Sequence[float],
          sample_times: Sequence[float], rel_tol: float = 1e-9, abs_tol: float = 1e-11,
          max_step: float = math.inf) -> np.ndarray:
    """Integrate a generic system and return its state at ``sample_times``."""
    t0, t1 = t_span
    solver = DormandPrince(fun, t0, y0, rel_tol, abs_tol, max_step)
    samples = np.asarray(sample_times, dtype=float)
    out = np.empty((samples.size, len(y0)))
    k = 0
    while k < samples.size and samples[k] <= t0:
        out[k] = solver.y
        k += 1
    while k < samples.size:
        solver.advance(t1)
        while k < samples.size and samples[k] <= solver.t:
            out[k] = solver.dense(samples[k])
            k += 1
        if solver.t >= t1:
            break
    if k < samples.size:
        raise ValueError("sample times extend beyond the integration interval")
    return out


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    """Sampled solution.

    ``states`` holds each sample in the coordinates of the system active at
    that time (``systems`` gives its index into ``system_list``); ``primal``
    holds the same samples mapped to (omega, lambda, b[, f]), with infinities
    where a transformed coordinate is exactly zero.
    """

    base_system: SystemId
    times: np.ndarray
    states: np.ndarray
    systems: np.ndarray
    system_list: tuple[SystemId, ...]
    primal: np.ndarray
    observables: dict[str, np.ndarray]
    system_segments: list[tuple[float, SystemId]]
    stalled: bool = False
    diagnostic: str = ""
    stats: dict[str, int] = field(default_factory=dict)

    @property
    def t_end(self) -> float:
        return float(self.times[-1]) if self.times.size else 0.0

    def system_at(self, k: int) -> SystemId:
        return self.system_list[int(self.systems[k])]

    def window(self, t_from: float) -> np.ndarray:
        return self.times >= t_from - 1e-9


def _encode(state: Sequence[float], mask: tuple[bool, ...]) -> np.ndarray:
    return np.array([math.log(v) if m else v for v, m in zip(state, mask)])


def _decode(z: np.ndarray, mask: tuple[bool, ...]) -> tuple[float, ...]:
    return tuple(math.exp(v) if m else float(v) for v, m in zip(z, mask))


def _make_rhs(system: SystemId, params: ModelParams, mask: tuple[bool, ...]):
    def fun(_t: float, z: np.ndarray) -> np.ndarray:
        state = _decode(z, mask)
        rates = log_rates(state, system, params)
        out = list(rates)
        for k in (0, 1):
            if not mask[k]:
                out[k] = rates[k] * state[k]
        return np.array(out)
    return fun


def _next_system(system: SystemId, state: Sequence[float], cfg: IntegratorConfig) -> SystemId:
    big_b, big_f = cfg.b_switch_threshold, cfg.f_switch_threshold
    back_b, back_f = big_b * cfg.switch_back_ratio, big_f * cfg.switch_back_ratio
    if system in (SystemId.Basic3, SystemId.Inflation3):
        return SystemId.InflationInverse3 if abs(state[2]) > big_b else system
    if system is SystemId.Speculation4:
        return SystemId.SpeculationQ4 if abs(state[2]) > big_b else system
    if system is SystemId.InflationInverse3:
        return SystemId.Inflation3 if abs(state[2]) * back_b > 1.0 else system
    if system is SystemId.SpeculationQ4:
        if abs(state[3]) > big_f:
            return SystemId.SpeculationVX4
        return SystemId.Speculation4 if abs(state[2]) * back_b > 1.0 else system
    # SpeculationVX4: x = 1/f
    return SystemId.SpeculationQ4 if abs(state[3]) * back_f > 1.0 else system


def simulate(system: SystemId | str, initial: Sequence[float], params: ModelParams,
             config: IntegratorConfig | None = None) -> Trajectory:
    """Integrate from ``initial`` to ``config.t_end`` and sample every ``sample_dt`` years.

    A stalled integration returns the samples collected so far with
    ``stalled=True`` and the reason in ``diagnostic``.
    """
    cfg = config or IntegratorConfig()
    base = SystemId(system)
    if len(initial) != base.dim:
        raise ValueError(f"{base.value} expects {base.dim} coordinates, got {len(initial)}")
    omega0, lam0 = float(initial[0]), float(initial[1])
    if omega0 < 0:
        raise ModelDomainError("wage share must be non-negative")
    if not 0 <= lam0 < 1:
        raise ModelDomainError("employment rate must lie in [0,1)")
    p = family_params(base, params)

    n_samples = int(math.floor(cfg.t_end / cfg.sample_dt + 1e-9)) + 1
    times = np.arange(n_samples) * cfg.sample_dt
    states = np.full((n_samples, base.dim), np.nan)
    sys_idx = np.zeros(n_samples, dtype=np.int8)
    system_list = tuple(SystemId)
    index_of = {s: k for k, s in enumerate(system_list)}

    active = base
    state = tuple(float(v) for v in initial)
    if lam0 < LAMBDA_FLOOR:
        state = (state[0], 0.0) + state[2:]
    active = _next_system(active, state, cfg)
    if active is not base:
        state = convert(state, base, active)
    segments = [(0.0, active)]

    def mask_for(st: Sequence[float]) -> tuple[bool, ...]:
        return tuple([cfg.log_space and st[0] > 0, cfg.log_space and st[1] > 0] + [False] * (base.dim - 2))

    mask = mask_for(state)
    solver = DormandPrince(_make_rhs(active, p, mask), 0.0, _encode(state, mask),
                           cfg.rel_tol, cfg.abs_tol, cfg.max_step)
    states[0] = state
    sys_idx[0] = index_of[active]
    k = 1
    stalled, diagnostic = False, ""
    n_acc = n_rej = 0
    while k < n_samples:
        try:
            solver.advance(cfg.t_end)
        except StallError as exc:
            stalled, diagnostic = True, str(exc)
            break
        while k < n_samples and times[k] <= solver.t + 1e-12:
            states[k] = _decode(solver.dense(times[k]), mask)
            sys_idx[k] = index_of[active]
            k += 1
        if solver.n_accepted + n_acc > cfg.max_steps:
            stalled, diagnostic = True, f"step budget {cfg.max_steps} exhausted at t={solver.t:.6g}"
            break
        state = _decode(solver.y, mask)
        restart = False
        if 0.0 < state[1] < LAMBDA_FLOOR:
            state = (state[0], 0.0) + state[2:]
            restart = True
        nxt = _next_system(active, state, cfg)
        if nxt is not active:
            state = convert(state, active, nxt)
            active = nxt
            segments.append((solver.t, active))
            restart = True
        if restart and solver.t < cfg.t_end:
            n_acc += solver.n_accepted
            n_rej += solver.n_rejected
            mask = mask_for(state)
            try:
                solver = DormandPrince(_make_rhs(active, p, mask), solver.t,
                                       _encode(state, mask), cfg.rel_tol, cfg.abs_tol, cfg.max_step, h0=solver.h)
            except _RECOVERABLE as exc:
                stalled, diagnostic = True, f"restart failed at t={solver.t:.6g}: {exc}"
                break
        if solver.t >= cfg.t_end:
            break
    n_acc += solver.n_accepted
    n_rej += solver.n_rejected

    times, states, sys_idx = times[:k], states[:k], sys_idx[:k]
    return _assemble(base, times, states, sys_idx, system_list, segments, p, stalled, diagnostic,
                     {"accepted_steps": n_acc, "rejected_steps": n_rej})


def _assemble(base, times, states, sys_idx, system_list, segments, params, stalled, diagnostic, stats):
    n = times.size
    primal = np.empty_like(states)
    obs = {name: np.empty(n) for name in ("pi", "i", "g", "g_nominal", "c_share")}
    for k in range(n):
        sys_k = system_list[int(sys_idx[k])]
        primal[k] = to_primal(states[k], sys_k)
        o = observables(states[k], sys_k, params)
        obs["pi"][k], obs["i"][k], obs["g"][k] = o.pi, o.i, o.g
        obs["g_nominal"][k], obs["c_share"][k] = o.g_nominal, o.c_share
    if params.price is not None and base is not SystemId.Basic3 and n:
        obs["p"] = price_path(times, primal[:, 0], 1.0, params.price)
    return Trajectory(base_system=base, times=times, states=states, systems=sys_idx, system_list=system_list,
                      primal=primal, observables=obs, system_segments=segments, stalled=stalled,
                      diagnostic=diagnostic, stats=stats)


def trajectory_from_arrays(times: Sequence[float], states: Sequence[Sequence[float]],
                           system: SystemId | str = SystemId.Basic3) -> Trajectory:
    """Wrap pre-computed samples (all in one coordinate system) as a trajectory."""
    system = SystemId(system)
    t = np.asarray(times, dtype=float)
    s = np.asarray(states, dtype=float)
    system_list = tuple(SystemId)
    return Trajectory(base_system=system, times=t, states=s,
                      systems=np.full(t.size, system_list.index(system), dtype=np.int8),
                      system_list=system_list, primal=s.copy(), observables={},
                      system_segments=[(float(t[0]) if t.size else 0.0, system)])


# ---------------------------------------------------------------------------
# regime detection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LimitCycle:
    period: float
    amplitudes: tuple[float, ...]
    envelopes: tuple[tuple[float, float], ...]
    multiplicity: int  # section returns per period
    returns: int
    spread: float


@dataclass(frozen=True)
class RegimeClassification:
    kind: str  # "ConvergedTo", "LimitCycle", "Diverged" or "Undetermined"
    label: str | None = None
    variant: str = ""
    period: float | None = None
    amplitudes: tuple[float, ...] | None = None
    direction: str | None = None
    evidence: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        if self.kind == "ConvergedTo":
            target = f"{self.label}[{self.variant}]" if self.variant else self.label
            return f"ConvergedTo({target})"
        if self.kind == "LimitCycle":
            return f"LimitCycle(period={self.period:.4g})"
        if self.kind == "Diverged":
            return f"Diverged({self.direction})"
        return "Undetermined"


def _lagrange_cubic(ts: np.ndarray, ys: np.ndarray, t: float) -> np.ndarray:
    out = np.zeros(ys.shape[1])
    for j in range(4):
        w = 1.0
        for m in range(4):
            if m != j:
                w *= (t - ts[m]) / (ts[j] - ts[m])
        out += w * ys[j]
    return out


def section_crossings(times: np.ndarray, states: np.ndarray, level: float,
                      coord: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Upward crossings of ``states[:, coord] = level`` with cubic interpolation."""
    x = states[:, coord]
    idx = np.nonzero((x[:-1] < level) & (x[1:] >= level))[0]
    t_out, s_out = [], []
    for k in idx:
        lo = min(max(k - 1, 0), len(times) - 4)
        if lo < 0:
            continue
        ts, ys = times[lo:lo + 4], states[lo:lo + 4]
        a, b = times[k], times[k + 1]
        fa = x[k] - level
        for _ in range(60):
            mid = 0.5 * (a + b)
            fm = _lagrange_cubic(ts, ys, mid)[coord] - level
            if (fm < 0) == (fa < 0):
                a, fa = mid, fm
            else:
                b = mid
        tc = 0.5 * (a + b)
        t_out.append(tc)
        s_out.append(_lagrange_cubic(ts, ys, tc))
    return np.array(t_out), np.array(s_out).reshape(len(t_out), states.shape[1])


def detect_limit_cycle(traj: Trajectory, transient_skip: float, tol: float = 1e-4,
                       min_returns: int = 5, min_amplitude: float = 1e-3, max_multiplicity: int = 4,
                       persistence: float = 0.1) -> LimitCycle | None:
    """Poincare-section test on upward crossings of omega through its mean.

    A cycle needs ``min_returns`` consecutive section points (every k-th one
    for a cycle crossing the section k times) within ``tol`` of each other in
    the max-norm, an omega oscillation of at least ``min_amplitude``, and an
    omega envelope that changes by less than ``persistence`` (relative)
    between the first and last third of the window.
    """
    if traj.times.size == 0:
        return None
    mask = traj.window(traj.times[0] + transient_skip)
    t, s = traj.times[mask], traj.primal[mask]
    if t.size < 8 or not np.all(np.isfinite(s)):
        return None
    omega = s[:, 0]
    amplitudes = tuple(float(v) for v in s.max(axis=0) - s.min(axis=0))
    if amplitudes[0] < min_amplitude:
        return None
    ct, cs = section_crossings(t, s, float(omega.mean()))
    if ct.size < 2:
        return None
    third = t.size // 3
    env_first = float(omega[:third].max() - omega[:third].min())
    env_last = float(omega[-third:].max() - omega[-third:].min())
    if abs(env_last - env_first) > persistence * max(env_first, env_last):
        return None
    for mult in range(1, max_multiplicity + 1):
        need = (min_returns - 1) * mult + 1
        if ct.size < need:
            break
        pts = cs[-need::mult]
        spread = float(np.max(np.abs(pts[:, None, :] - pts[None, :, :])))
        if spread < tol:
            times_k = ct[-need::mult]
            period = float(np.mean(np.diff(times_k)))
            envelopes = tuple((float(lo), float(hi)) for lo, hi in zip(s.min(axis=0), s.max(axis=0)))
            return LimitCycle(period=period, amplitudes=amplitudes, envelopes=envelopes,
                              multiplicity=mult, returns=len(pts), spread=spread)
    return None


def _distance_series(traj: Trajectory, mask: np.ndarray, point: EquilibriumPoint) -> np.ndarray:
    idx = np.nonzero(mask)[0]
    if point.finite:
        target = np.asarray(point.coords)
        diff = traj.primal[idx] - target
        return np.max(np.abs(diff), axis=1)
    target_sys = point.defining_system
    target = np.asarray(point.defining_coords)
    out = np.empty(idx.size)
    for j, k in enumerate(idx):
        sys_k = traj.system_at(k)
        if sys_k is not target_sys:
            out[j] = math.inf
            continue
        out[j] = float(np.max(np.abs(traj.states[k] - target)))
    return out


def classify_asymptotic(traj: Trajectory, params: ModelParams, equilibria: Sequence[EquilibriumPoint] | None = None,
                        settle_years: float = 50.0, settle_tol: float = 1e-6,
                        cycle_window: float = 500.0) -> RegimeClassification:
    """Classify the long-run behaviour of ``traj``.

    Tests in order: sustained proximity to an equilibrium, a limit cycle over
    the final ``cycle_window`` years, monotone growth of |b| over the final 20%.
    """
    if traj.times.size < 2:
        return RegimeClassification("Undetermined", evidence={"reason": "empty trajectory"})
    t0, t1 = float(traj.times[0]), traj.t_end
    if equilibria is None:
        equilibria = enumerate_equilibria(params, traj.base_system)
    evidence: dict = {"t_end": t1, "stalled": traj.stalled}
    if traj.stalled:
        evidence["diagnostic"] = traj.diagnostic

    tail = traj.window(t1 - settle_years)
    distances = {}
    if t1 - t0 >= settle_years:
        best = None
        for point in equilibria:
            if not point.exists:
                continue
            d = _distance_series(traj, tail, point)
            worst = float(np.max(d)) if d.size else math.inf
            distances[point.name] = worst
            if worst < settle_tol and (best is None or worst < best[1]):
                best = (point, worst)
        evidence["terminal_distances"] = distances
        if best is not None:
            point = best[0]
            variant = point.variant
            if point.label.endswith("InfSpec"):
                # both flow signs share the image x = 0; the side of approach decides
                x_last = traj.states[-1][3]
                variant = "+" if x_last >= 0 else "-"
            return RegimeClassification("ConvergedTo", label=point.label, variant=variant,
                                        evidence=evidence | {"distance": best[1]})

    window = min(cycle_window, t1 - t0)
    if window >= 200.0:
        cycle = detect_limit_cycle(traj, transient_skip=(t1 - t0) - window)
        if cycle is not None:
            evidence |= {"multiplicity": cycle.multiplicity, "spread": cycle.spread,
                         "envelopes": cycle.envelopes}
            return RegimeClassification("LimitCycle", period=cycle.period, amplitudes=cycle.amplitudes,
                                        evidence=evidence)

    final = traj.window(t1 - 0.2 * (t1 - t0))
    b = np.abs(traj.primal[final, 2])
    if b.size >= 2 and np.all(np.diff(b) >= 0) and b[-1] > b[0]:
        sign = np.sign(traj.primal[final, 2][-1])
        return RegimeClassification("Diverged", direction="b->+inf" if sign >= 0 else "b->-inf",
                                    evidence=evidence | {"b_growth": float(b[-1] / max(b[0], 1e-300))})
    return RegimeClassification("Undetermined", evidence=evidence)


def envelope_decay_rate(times: Sequence[float], values: Sequence[float], min_swing: float = 1e-9) -> float:
    """Exponential decay rate of the swing between successive local extrema.

    Fits log|swing| against the midpoint time of each swing; a positive
    result means the oscillation dies out.  Returns ``nan`` with fewer than
    three usable swings.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    d = np.diff(y)
    turn = np.nonzero(np.sign(d[1:]) != np.sign(d[:-1]))[0] + 1
    if turn.size < 4:
        return math.nan
    swings = np.abs(np.diff(y[turn]))
    mids = 0.5 * (t[turn][1:] + t[turn][:-1])
    ok = swings > min_swing
    if ok.sum() < 3:
        return math.nan
    return float(-np.polyfit(mids[ok], np.log(swings[ok]), 1)[0])
