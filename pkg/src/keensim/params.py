"""Exogenous constants of the Keen model family.

Every record is a frozen dataclass validated on construction, so an
instance that exists is always usable by the model functions.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Any

from .errors import ParameterError


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ParameterError(message)


def _check_finite(obj: Any) -> None:
    for field in dataclasses.fields(obj):
        value = getattr(obj, field.name)
        if isinstance(value, float) and not math.isfinite(value):
            raise ParameterError(f"{type(obj).__name__}.{field.name} must be finite")


@dataclass(frozen=True)
class EconParams:
    """Productivity/labor growth, depreciation, capital-output ratio, interest (per year)."""

    alpha: float
    beta: float
    delta: float
    nu: float
    r: float

    def __post_init__(self) -> None:
        _check_finite(self)
        _require(self.nu > 0, "nu must be positive")
        _require(self.delta >= 0, "delta must be non-negative")
        _require(self.r >= 0, "r must be non-negative")
        _require(self.alpha + self.beta > 0, "alpha + beta must be positive")


@dataclass(frozen=True)
class PhillipsParams:
    """Phillips curve ``phi1 / (1 - lambda)**2 - phi0``."""

    phi0: float
    phi1: float

    def __post_init__(self) -> None:
        _check_finite(self)
        _require(self.phi1 > 0, "phi1 must be positive")


@dataclass(frozen=True)
class InvestmentParams:
    """Investment share ``kappa0 + exp(kappa1 + kappa2 * pi)``."""

    kappa0: float
    kappa1: float
    kappa2: float

    def __post_init__(self) -> None:
        _check_finite(self)
        _require(self.kappa2 > 0, "kappa2 must be positive")


@dataclass(frozen=True)
class PriceParams:
    """Markup pricing: relaxation speed, markup factor and money illusion."""

    eta_p: float
    xi: float
    gamma: float

    def __post_init__(self) -> None:
        _check_finite(self)
        _require(self.eta_p > 0, "eta_p must be positive")
        _require(self.xi >= 1, "xi must be at least 1")
        _require(0 <= self.gamma <= 1, "gamma must lie in [0, 1]")


@dataclass(frozen=True)
class SpeculationParams:
    """Speculative flow ``psi0 * (exp(psi2 * (g - psi1)) - 1)``."""

    psi0: float
    psi1: float
    psi2: float

    def __post_init__(self) -> None:
        _check_finite(self)
        _require(self.psi0 > 0, "psi0 must be positive")
        _require(self.psi2 > 0, "psi2 must be positive")


@dataclass(frozen=True)
class ModelParams:
    econ: EconParams
    phillips: PhillipsParams
    invest: InvestmentParams
    price: PriceParams | None = None
    spec: SpeculationParams | None = None

    def __post_init__(self) -> None:
        e = self.econ
        phi_at_zero = self.phillips.phi1 - self.phillips.phi0
        _require(phi_at_zero < e.alpha, "Phillips curve must satisfy Phi(0) < alpha")
        _require(
            self.invest.kappa0 < e.nu * (e.alpha + e.beta + e.delta),
            "kappa0 must be below nu * (alpha + beta + delta)",
        )
        _require(self.spec is None or self.price is not None,
                 "speculation parameters require price parameters")

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ModelParams:
        price = data.get("price")
        spec = data.get("spec")
        return cls(
            econ=EconParams(**data["econ"]),
            phillips=PhillipsParams(**data["phillips"]),
            invest=InvestmentParams(**data["invest"]),
            price=PriceParams(**price) if price is not None else None,
            spec=SpeculationParams(**spec) if spec is not None else None,
        )

    def with_value(self, path: str, value: float) -> ModelParams:
        """Return a copy with the dotted ``group.field`` parameter replaced."""
        group, _, name = path.partition(".")
        sub = getattr(self, group, None) if group in _GROUPS else None
        if sub is None or not name or name not in {f.name for f in dataclasses.fields(sub)}:
            raise ParameterError(f"unknown parameter path {path!r}")
        return dataclasses.replace(self, **{group: dataclasses.replace(sub, **{name: float(value)})})

    def get_value(self, path: str) -> float:
        group, _, name = path.partition(".")
        sub = getattr(self, group, None) if group in _GROUPS else None
        if sub is None or not hasattr(sub, name):
            raise ParameterError(f"unknown parameter path {path!r}")
        return getattr(sub, name)


_GROUPS = ("econ", "phillips", "invest", "price", "spec")


def phillips_from_anchor(zero_at: float = 0.96, value_at_zero: float = -0.04) -> PhillipsParams:
    """Phillips parameters with ``Phi(zero_at) = 0`` and ``Phi(0) = value_at_zero``.

    The default reproduces ``(0.04 / (1 - 0.04**2), 0.04**3 / (1 - 0.04**2))``.
    """
    u = 1.0 - zero_at
    # phi1 / u**2 = phi0 and phi1 - phi0 = value_at_zero
    phi0 = -value_at_zero / (1.0 - u * u)
    return PhillipsParams(phi0=phi0, phi1=phi0 * u * u)


def basic_params(r: float = 0.03) -> ModelParams:
    """Baseline economy: (alpha, beta, delta, nu, r) = (0.025, 0.02, 0.01, 3, 0.03)."""
    return ModelParams(
        econ=EconParams(alpha=0.025, beta=0.02, delta=0.01, nu=3.0, r=r),
        phillips=PhillipsParams(phi0=0.04 / (1 - 0.04**2), phi1=0.04**3 / (1 - 0.04**2)),
        invest=InvestmentParams(kappa0=-0.0065, kappa1=-5.0, kappa2=20.0),
    )


def inflation_params(eta_p: float = 4.0, xi: float = 1.2, gamma: float = 0.8, r: float = 0.03) -> ModelParams:
    base = basic_params(r)
    return dataclasses.replace(base, price=PriceParams(eta_p=eta_p, xi=xi, gamma=gamma))


def speculation_params(
    psi0: float = 0.25, psi1: float = 0.02, psi2: float = 1.2, eta_p: float = 4.0, r: float = 0.03
) -> ModelParams:
    base = inflation_params(eta_p=eta_p, r=r)
    return dataclasses.replace(base, spec=SpeculationParams(psi0=psi0, psi1=psi1, psi2=psi2))
