"""Behavioral functions and right-hand sides of the Keen model family.

Six ODE systems are exposed through :class:`SystemId`:

* ``Basic3``            (omega, lambda, b) with constant prices
* ``Inflation3``        (omega, lambda, b) with markup pricing
* ``InflationInverse3`` (omega, lambda, q = 1/b)
* ``Speculation4``      (omega, lambda, b, f)
* ``SpeculationQ4``     (omega, lambda, q = 1/b, f)
* ``SpeculationVX4``    (omega, lambda, v = f/b, x = 1/f)

The transformed systems put the infinite-debt equilibria at finite points.
When the transformed coordinate is (numerically) zero the profit share is
minus infinity; the investment function then sits at its lower asymptote and
every term carrying ``kappa'`` vanishes, which is what the fields return.

All rates are per year.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ModelDomainError, NoPreimageError
from .params import EconParams, InvestmentParams, ModelParams, PhillipsParams, PriceParams, SpeculationParams

State = tuple[float, ...]

# below this the transformed debt / speculation coordinates are treated as exactly zero
LIMIT_EPS = 1e-12
_EXP_MAX = 709.0


class SystemId(str, enum.Enum):
    Basic3 = "Basic3"
    Inflation3 = "Inflation3"
    InflationInverse3 = "InflationInverse3"
    Speculation4 = "Speculation4"
    SpeculationQ4 = "SpeculationQ4"
    SpeculationVX4 = "SpeculationVX4"

    @property
    def dim(self) -> int:
        return 3 if self in _THREE_D else 4

    @property
    def coords(self) -> tuple[str, ...]:
        return _COORDS[self]

    @property
    def family(self) -> SystemId:
        """The primal system whose equilibria this system helps describe."""
        if self in (SystemId.Basic3, SystemId.Inflation3, SystemId.Speculation4):
            return self
        if self is SystemId.InflationInverse3:
            return SystemId.Inflation3
        return SystemId.Speculation4

    @property
    def has_speculation(self) -> bool:
        return self.dim == 4


_THREE_D = {SystemId.Basic3, SystemId.Inflation3, SystemId.InflationInverse3}
_COORDS = {
    SystemId.Basic3: ("omega", "lambda", "b"),
    SystemId.Inflation3: ("omega", "lambda", "b"),
    SystemId.InflationInverse3: ("omega", "lambda", "q"),
    SystemId.Speculation4: ("omega", "lambda", "b", "f"),
    SystemId.SpeculationQ4: ("omega", "lambda", "q", "f"),
    SystemId.SpeculationVX4: ("omega", "lambda", "v", "x"),
}


def _exp(arg: float) -> float:
    if arg > _EXP_MAX:
        raise ModelDomainError(f"exponential overflow (argument {arg:.6g})")
    return math.exp(arg)


# ---------------------------------------------------------------------------
# behavioral functions
# ---------------------------------------------------------------------------

def phillips(lam: float, p: PhillipsParams) -> float:
    if not lam < 1.0:
        raise ModelDomainError(f"employment rate {lam!r} is at or beyond the Phillips asymptote")
    u = 1.0 - lam
    return p.phi1 / (u * u) - p.phi0


def phillips_deriv(lam: float, p: PhillipsParams) -> float:
    if not lam < 1.0:
        raise ModelDomainError(f"employment rate {lam!r} is at or beyond the Phillips asymptote")
    u = 1.0 - lam
    return 2.0 * p.phi1 / (u * u * u)


def phillips_inverse(y: float, p: PhillipsParams) -> float:
    """Employment rate at which the Phillips curve equals ``y``."""
    if not y > -p.phi0:
        raise NoPreimageError(f"{y!r} is outside the range of the Phillips curve (> {-p.phi0!r})")
    return 1.0 - math.sqrt(p.phi1 / (y + p.phi0))


def kappa(pi: float, p: InvestmentParams) -> float:
    if pi == -math.inf:
        return p.kappa0
    return p.kappa0 + _exp(p.kappa1 + p.kappa2 * pi)


def kappa_deriv(pi: float, p: InvestmentParams) -> float:
    if pi == -math.inf:
        return 0.0
    return p.kappa2 * _exp(p.kappa1 + p.kappa2 * pi)


def kappa_inverse(y: float, p: InvestmentParams) -> float:
    if not y > p.kappa0:
        raise NoPreimageError(f"{y!r} is not above the investment floor kappa0={p.kappa0!r}")
    return (math.log(y - p.kappa0) - p.kappa1) / p.kappa2


def psi(g_nom: float, p: SpeculationParams) -> float:
    return p.psi0 * (_exp(p.psi2 * (g_nom - p.psi1)) - 1.0)


def psi_deriv(g_nom: float, p: SpeculationParams) -> float:
    return p.psi0 * p.psi2 * _exp(p.psi2 * (g_nom - p.psi1))


def inflation_rate(omega: float, p: PriceParams | None) -> float:
    """``eta_p * (xi * omega - 1)``; zero when prices are constant."""
    if p is None:
        return 0.0
    return p.eta_p * (p.xi * omega - 1.0)


def growth_rate(pi: float, params: ModelParams | tuple[EconParams, InvestmentParams]) -> float:
    if isinstance(params, ModelParams):
        econ, inv = params.econ, params.invest
    else:
        econ, inv = params
    return kappa(pi, inv) / econ.nu - econ.delta


def growth_floor(params: ModelParams) -> float:
    """Real growth rate as the profit share tends to minus infinity."""
    return params.invest.kappa0 / params.econ.nu - params.econ.delta


def _price_block(system: SystemId, params: ModelParams) -> PriceParams | None:
    if system is SystemId.Basic3:
        return None
    if system is SystemId.Inflation3 and params.price is None:
        raise ModelDomainError("Inflation3 requires price parameters")
    if system.has_speculation and (params.price is None or params.spec is None):
        raise ModelDomainError(f"{system.value} requires price and speculation parameters")
    return params.price


def _debt(state: Sequence[float], system: SystemId) -> float:
    """Debt share b, or +-inf at the transformed-coordinate zeros."""
    if system in (SystemId.InflationInverse3, SystemId.SpeculationQ4):
        q = state[2]
        return math.inf if q == 0 else 1.0 / q
    if system is SystemId.SpeculationVX4:
        vx = state[2] * state[3]
        return math.inf if vx == 0 else 1.0 / vx
    return state[2]


def in_limit(state: Sequence[float], system: SystemId) -> bool:
    """True where the transformed field uses the ``pi -> -inf`` limit."""
    if system in (SystemId.InflationInverse3, SystemId.SpeculationQ4):
        return abs(state[2]) < LIMIT_EPS
    if system is SystemId.SpeculationVX4:
        v, x = state[2], state[3]
        return abs(v) + abs(x) < LIMIT_EPS or v * x == 0.0
    return False


def profit_share(state: Sequence[float], system: SystemId | str, econ: EconParams) -> float:
    system = SystemId(system)
    omega = state[0]
    if system in (SystemId.InflationInverse3, SystemId.SpeculationQ4):
        q = state[2]
        if q == 0:
            raise ZeroDivisionError("q = 0: profit share is the -inf limit, handle at the caller")
        return 1.0 - omega - econ.r / q
    if system is SystemId.SpeculationVX4:
        vx = state[2] * state[3]
        if vx == 0:
            raise ZeroDivisionError("v*x = 0: profit share is the -inf limit, handle at the caller")
        return 1.0 - omega - econ.r / vx
    return 1.0 - omega - econ.r * state[2]


def _pi_or_limit(state: Sequence[float], system: SystemId, econ: EconParams) -> float:
    if in_limit(state, system):
        return -math.inf
    return profit_share(state, system, econ)


# ---------------------------------------------------------------------------
# vector fields
# ---------------------------------------------------------------------------

def vector_field(state: Sequence[float], system: SystemId | str, params: ModelParams) -> State:
    """Time derivative of ``state`` under the selected system."""
    system = SystemId(system)
    if len(state) != system.dim:
        raise ModelDomainError(f"{system.value} expects {system.dim} coordinates, got {len(state)}")
    rates = log_rates(state, system, params)
    omega, lam = state[0], state[1]
    return (omega * rates[0], lam * rates[1]) + rates[2:]


def log_rates(state: Sequence[float], system: SystemId, params: ModelParams) -> State:
    """Like :func:`vector_field` but with the first two entries divided by omega and lambda.

    Those per-capita rates stay finite at omega = 0 or lambda = 0 and are what
    the log-space integrator advances.
    """
    e = params.econ
    price = _price_block(system, params)
    omega, lam = state[0], state[1]
    i = inflation_rate(omega, price)
    wage_gap = phillips(lam, params.phillips) - e.alpha
    if price is not None:
        wage_gap -= (1.0 - price.gamma) * i

    limit = in_limit(state, system)
    if limit:
        kap = params.invest.kappa0
        pi = -math.inf
    else:
        pi = profit_share(state, system, e)
        kap = kappa(pi, params.invest)
    g = kap / e.nu - e.delta
    n = g + i
    emp_rate = g - e.alpha - e.beta

    if system in (SystemId.Basic3, SystemId.Inflation3):
        b = state[2]
        return (wage_gap, emp_rate, kap - pi - b * n)

    if system is SystemId.InflationInverse3:
        q = state[2]
        # q^2 * pi expanded so that r/q never appears
        dq = q * (n - e.r) - q * q * (kap - (1.0 - omega))
        return (wage_gap, emp_rate, dq)

    spec = params.spec
    if system is SystemId.Speculation4:
        b, f = state[2], state[3]
        return (wage_gap, emp_rate, kap - pi - b * n + f, psi(n, spec) - f * n)

    if system is SystemId.SpeculationQ4:
        q, f = state[2], state[3]
        dq = q * (n - e.r) - q * q * (kap - (1.0 - omega) + f)
        return (wage_gap, emp_rate, dq, psi(n, spec) - f * n)

    v, x = state[2], state[3]
    ps = psi(n, spec)
    dv = v * x * ps - v * v * x * (kap - (1.0 - omega)) - e.r * v - v * v
    dx = x * n - x * x * ps
    return (wage_gap, emp_rate, dv, dx)


# ---------------------------------------------------------------------------
# observables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Observables:
    pi: float
    i: float
    g: float
    g_nominal: float
    c_share: float
    real_wage_growth: float


def observables(state: Sequence[float], system: SystemId | str, params: ModelParams) -> Observables:
    system = SystemId(system)
    price = _price_block(system, params)
    pi = _pi_or_limit(state, system, params.econ)
    kap = kappa(pi, params.invest)
    g = kap / params.econ.nu - params.econ.delta
    i = inflation_rate(state[0], price)
    return Observables(pi=pi, i=i, g=g, g_nominal=g + i, c_share=1.0 - kap,
                       real_wage_growth=params.econ.alpha)


def price_path(times: Sequence[float], omega: Sequence[float], p0: float, price: PriceParams) -> np.ndarray:
    """Price level along a sampled wage-share path, by trapezoidal quadrature of inflation."""
    t = np.asarray(times, dtype=float)
    w = np.asarray(omega, dtype=float)
    if t.size == 0 or w.size == 0:
        raise ValueError("price_path needs a non-empty trajectory")
    if t.shape != w.shape:
        raise ValueError("times and omega must have the same length")
    if not p0 > 0:
        raise ValueError("initial price must be positive")
    infl = price.eta_p * (price.xi * w - 1.0)
    log_growth = np.concatenate(([0.0], np.cumsum(0.5 * (infl[1:] + infl[:-1]) * np.diff(t))))
    return p0 * np.exp(log_growth)


# ---------------------------------------------------------------------------
# coordinate changes
# ---------------------------------------------------------------------------

def to_primal(state: Sequence[float], system: SystemId | str) -> State:
    """Map a state to (omega, lambda, b[, f]); zeros of q, v, x become infinities."""
    system = SystemId(system)
    omega, lam = state[0], state[1]
    if system in (SystemId.Basic3, SystemId.Inflation3, SystemId.Speculation4):
        return tuple(state)
    if system is SystemId.InflationInverse3:
        return (omega, lam, _debt(state, system))
    if system is SystemId.SpeculationQ4:
        return (omega, lam, _debt(state, system), state[3])
    x = state[3]
    f = math.copysign(math.inf, x) if x == 0 else 1.0 / x
    return (omega, lam, _debt(state, system), f)


def convert(state: Sequence[float], source: SystemId | str, target: SystemId | str) -> State:
    """Exact state mapping between coordinate systems of the same family."""
    source, target = SystemId(source), SystemId(target)
    if source.family is not target.family and {source, target} != {SystemId.Basic3, SystemId.Inflation3}:
        raise ValueError(f"cannot map {source.value} coordinates to {target.value}")
    primal = to_primal(state, source)
    omega, lam, b = primal[0], primal[1], primal[2]

    def inv(z: float) -> float:
        return 0.0 if math.isinf(z) else 1.0 / z

    if target in (SystemId.Basic3, SystemId.Inflation3):
        return (omega, lam, b)
    if target is SystemId.InflationInverse3:
        return (omega, lam, inv(b))
    f = primal[3]
    if target is SystemId.Speculation4:
        return (omega, lam, b, f)
    if target is SystemId.SpeculationQ4:
        return (omega, lam, inv(b), f)
    if source is SystemId.SpeculationQ4:
        # v = f/b = q*f keeps full precision when b is huge
        return (omega, lam, state[2] * state[3], inv(f))
    # at infinite debt the chart origin v = 0 is used whatever f does
    return (omega, lam, 0.0 if math.isinf(b) else f / b, inv(f))
