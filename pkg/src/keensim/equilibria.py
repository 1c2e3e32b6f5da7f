"""Equilibrium points of the basic, monetary and speculative Keen models.

Closed forms are used where they exist.  The debt share of the deflationary
points and the nominal growth rate of the speculative good point are found by
a deterministic sign-change scan followed by bisection.  Every point carries
its residual, i.e. the max-norm of the vector field in the coordinates that
define it (a transformed system for the infinite-debt points).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import ModelDomainError, NoEquilibriumError, NoPreimageError
from .model import (
    Observables,
    State,
    SystemId,
    growth_floor,
    inflation_rate,
    kappa,
    kappa_inverse,
    observables,
    phillips,
    phillips_inverse,
    psi,
    vector_field,
)
from .params import ModelParams

RESIDUAL_TOL = 1e-9

LABELS = (
    "Good1",
    "Bad2_InfDebt",
    "Deflat3_FiniteDebt",
    "Deflat3_InfDebt",
    "Good1_Spec",
    "Bad_InfDebt_FiniteSpec",
    "Bad_InfDebt_InfSpec",
    "Deflat3_FiniteDebt_Spec",
    "Deflat3_InfDebt_FiniteSpec",
    "Deflat3_InfDebt_InfSpec",
)


@dataclass(frozen=True)
class EquilibriumPoint:
    """A named fixed point.

    ``coords`` are primal coordinates (omega, lambda, b[, f]) and may hold
    ``inf``.  ``defining_system``/``defining_coords`` give the finite image
    in which the residual and the Jacobian are evaluated.  Points that do not
    exist keep ``exists=False`` and a machine-readable ``reason``.
    """

    system: SystemId
    label: str
    coords: State
    exists: bool = True
    variant: str = ""
    defining_system: SystemId | None = None
    defining_coords: State | None = None
    residual: float | None = None
    aux: Observables | None = None
    reason: str = ""

    @property
    def name(self) -> str:
        return f"{self.label}[{self.variant}]" if self.variant else self.label

    @property
    def finite(self) -> bool:
        return all(math.isfinite(c) for c in self.coords)


@dataclass(frozen=True)
class QuadraticCoeffs:
    a0: float
    a1: float
    a2: float
    discriminant: float
    roots: tuple[float, ...]


@dataclass
class RootScan:
    roots: list[float] = field(default_factory=list)
    diagnostic: str = ""


def family_params(system: SystemId, params: ModelParams) -> ModelParams:
    """Strip the price and speculation blocks for the constant-price model."""
    if SystemId(system) is SystemId.Basic3:
        return dataclasses.replace(params, price=None, spec=None)
    return params


def _finish(point: EquilibriumPoint, params: ModelParams) -> EquilibriumPoint:
    if not point.exists:
        return point
    dsys = point.defining_system or point.system
    dcoords = point.defining_coords if point.defining_coords is not None else point.coords
    p = family_params(point.system, params)
    rhs = vector_field(dcoords, dsys, p)
    residual = max(abs(v) for v in rhs)
    return dataclasses.replace(point, defining_system=dsys, defining_coords=tuple(dcoords),
                               residual=residual, aux=observables(dcoords, dsys, p))


def _absent(system: SystemId, label: str, dim: int, reason: str, variant: str = "") -> EquilibriumPoint:
    return EquilibriumPoint(system=system, label=label, coords=(math.nan,) * dim, exists=False,
                            variant=variant, reason=reason)


# ---------------------------------------------------------------------------
# scalar root scanning
# ---------------------------------------------------------------------------

def bisect(func: Callable[[float], float], lo: float, hi: float, f_lo: float | None = None,
           xtol: float = 0.0, max_iter: int = 200) -> float:
    """Bisection on a sign-changing bracket, down to ``xtol`` or float resolution."""
    f_lo = func(lo) if f_lo is None else f_lo
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= xtol:
            break
        f_mid = func(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def scan_roots(func: Callable[[float], float], lo: float, hi: float, step: float) -> RootScan:
    """All sign changes of ``func`` on a uniform grid over [lo, hi], refined by bisection.

    Grid points where ``func`` cannot be evaluated break the scan; no bracket
    spans them.
    """
    n = int(round((hi - lo) / step))
    scan = RootScan()
    prev_x = prev_f = None
    skipped = 0
    for k in range(n + 1):
        x = lo + k * step
        try:
            fx = func(x)
        except (ModelDomainError, OverflowError, ZeroDivisionError):
            fx = math.nan
        if not math.isfinite(fx):
            skipped += 1
            prev_x = prev_f = None
            continue
        if fx == 0.0:
            if not scan.roots or abs(scan.roots[-1] - x) > step / 2:
                scan.roots.append(x)
        elif prev_f is not None and prev_f != 0.0 and (prev_f < 0) != (fx < 0):
            scan.roots.append(bisect(func, prev_x, x, prev_f))
        prev_x, prev_f = x, fx
    if not scan.roots:
        scan.diagnostic = f"no sign change on [{lo:g}, {hi:g}] at step {step:g}"
    if skipped:
        scan.diagnostic = (scan.diagnostic + "; " if scan.diagnostic else "") + \
            f"{skipped} grid points not evaluable"
    return scan


# ---------------------------------------------------------------------------
# basic model
# ---------------------------------------------------------------------------

def equilibrium_profit_share(params: ModelParams) -> float:
    """Profit share at which real growth equals alpha + beta."""
    e = params.econ
    return kappa_inverse(e.nu * (e.alpha + e.beta + e.delta), params.invest)


def good_eq_basic(params: ModelParams) -> EquilibriumPoint:
    e = params.econ
    system = SystemId.Basic3
    try:
        pi1 = equilibrium_profit_share(params)
        lam = phillips_inverse(e.alpha, params.phillips)
    except NoPreimageError as exc:
        return _absent(system, "Good1", 3, f"no_preimage: {exc}")
    b = (kappa(pi1, params.invest) - pi1) / (e.alpha + e.beta)
    omega = 1.0 - pi1 - e.r * b
    return _finish(EquilibriumPoint(system, "Good1", (omega, lam, b)), params)


def bad_eq_zero_wage(params: ModelParams, system: SystemId = SystemId.Basic3) -> EquilibriumPoint:
    """(0, 0, +inf): the debt-crisis point, seen at q = 0."""
    return _finish(EquilibriumPoint(system, "Bad2_InfDebt", (0.0, 0.0, math.inf),
                                    defining_system=SystemId.InflationInverse3,
                                    defining_coords=(0.0, 0.0, 0.0)), params)


# ---------------------------------------------------------------------------
# monetary model
# ---------------------------------------------------------------------------

def quadratic_coeffs(params: ModelParams) -> QuadraticCoeffs:
    """Coefficients of ``a0 w^2 + a1 w + a2`` whose roots are the good wage shares."""
    e, price = params.econ, params.price
    if price is None:
        raise ValueError("the monetary good equilibrium needs price parameters")
    pi1 = equilibrium_profit_share(params)
    ab = e.alpha + e.beta
    a0 = price.xi * price.eta_p
    a1 = ab - price.eta_p * (1.0 + price.xi * (1.0 - pi1))
    a2 = (price.eta_p - ab) * (1.0 - pi1) + e.r * (kappa(pi1, params.invest) - pi1)
    disc = a1 * a1 - 4.0 * a0 * a2
    if disc < 0:
        roots: tuple[float, ...] = ()
    elif disc == 0:
        roots = (-a1 / (2.0 * a0),)
    else:
        # cancellation-free pair
        qq = -0.5 * (a1 + math.copysign(math.sqrt(disc), a1))
        roots = tuple(sorted((qq / a0, a2 / qq), reverse=True))
    return QuadraticCoeffs(a0=a0, a1=a1, a2=a2, discriminant=disc, roots=roots)


def good_eq_inflation(params: ModelParams) -> tuple[QuadraticCoeffs, list[EquilibriumPoint]]:
    """Good equilibria of the monetary model, one per quadratic root.

    Roots with a negative wage share, no Phillips preimage or a residual above
    tolerance are returned with ``exists=False`` and the reason.
    """
    e, price = params.econ, params.price
    system = SystemId.Inflation3
    coeffs = quadratic_coeffs(params)
    if not coeffs.roots:
        return coeffs, [_absent(system, "Good1", 3, "no good equilibrium: negative discriminant")]
    pi1 = equilibrium_profit_share(params)
    gap = kappa(pi1, params.invest) - pi1
    variants = ("+", "-") if len(coeffs.roots) == 2 else ("",)
    points = []
    for omega, variant in zip(coeffs.roots, variants):
        if omega < 0:
            points.append(_absent(system, "Good1", 3, f"negative_wage_share: {omega:.6g}", variant))
            continue
        i = inflation_rate(omega, price)
        try:
            lam = phillips_inverse(e.alpha + (1.0 - price.gamma) * i, params.phillips)
        except NoPreimageError as exc:
            points.append(_absent(system, "Good1", 3, f"no_preimage: {exc}", variant))
            continue
        denom = e.alpha + e.beta + i
        if denom == 0:
            points.append(_absent(system, "Good1", 3, "pole: alpha + beta + i = 0", variant))
            continue
        point = _finish(EquilibriumPoint(system, "Good1", (omega, lam, gap / denom), variant=variant), params)
        if point.residual > RESIDUAL_TOL:
            point = dataclasses.replace(point, exists=False,
                                        reason=f"residual {point.residual:.3g} above tolerance")
        points.append(point)
    return coeffs, points


def deflation_wage_share(params: ModelParams) -> float:
    """Wage share of the zero-employment deflationary equilibria."""
    e, price = params.econ, params.price
    if price is None:
        raise NoEquilibriumError("deflationary equilibria need price parameters")
    if price.gamma == 1.0:
        raise NoEquilibriumError("no such equilibrium for gamma = 1")
    omega3 = 1.0 / price.xi + (phillips(0.0, params.phillips) - e.alpha) / (
        price.xi * price.eta_p * (1.0 - price.gamma))
    if not omega3 > 0:
        raise NoEquilibriumError(f"deflationary wage share {omega3:.6g} is not positive")
    return omega3


def b3_equation(b: float, params: ModelParams, omega3: float) -> float:
    """``b [i + g(pi) - r] - [kappa(pi) - 1 + omega3]`` with ``pi = 1 - omega3 - r b``."""
    e = params.econ
    pi = 1.0 - omega3 - e.r * b
    kap = kappa(pi, params.invest)
    g = kap / e.nu - e.delta
    return b * (inflation_rate(omega3, params.price) + g - e.r) - (kap - 1.0 + omega3)


def solve_b3_inflation(params: ModelParams, omega3: float, lo: float = -100.0, hi: float = 100.0,
                       step: float = 0.01) -> RootScan:
    scan = scan_roots(lambda b: b3_equation(b, params, omega3), lo, hi, step)
    kept = []
    for b in scan.roots:
        if abs(b3_equation(b, params, omega3)) <= 1e-10:
            kept.append(b)
    if len(kept) < len(scan.roots):
        scan.diagnostic += f"; {len(scan.roots) - len(kept)} bracket(s) failed the residual check"
    scan.roots = kept
    return scan


# ---------------------------------------------------------------------------
# speculative model
# ---------------------------------------------------------------------------

def x_equation(X: float, params: ModelParams) -> float:
    """Cubic-plus-speculation equation in the nominal growth rate of the good point."""
    e, price = params.econ, params.price
    pi1 = equilibrium_profit_share(params)
    ex = price.eta_p * price.xi
    c2 = ex * (pi1 - 1.0) - e.alpha - e.beta + price.eta_p
    c1 = e.r * ex * (kappa(pi1, params.invest) - pi1)
    return X**3 + c2 * X**2 + c1 * X + e.r * ex * psi(X, params.spec)


def good_eq_speculation(params: ModelParams, lo: float = -2.0, hi: float = 2.0,
                        step: float = 1e-4) -> list[EquilibriumPoint]:
    """Good equilibria of the speculative model from the roots of :func:`x_equation`."""
    e, price = params.econ, params.price
    system = SystemId.Speculation4
    scan = scan_roots(lambda X: x_equation(X, params), lo, hi, step)
    if not scan.roots:
        return [_absent(system, "Good1_Spec", 4, f"no good equilibrium: {scan.diagnostic}")]
    pi1 = equilibrium_profit_share(params)
    gap = kappa(pi1, params.invest) - pi1
    points = []
    multi = len(scan.roots) > 1
    for k, X in enumerate(scan.roots):
        variant = str(k + 1) if multi else ""
        if X == 0.0:
            points.append(_absent(system, "Good1_Spec", 4, "pole: nominal growth X = 0", variant))
            continue
        if not X > e.alpha + e.beta - price.eta_p:
            points.append(_absent(system, "Good1_Spec", 4, f"negative_wage_share: X={X:.6g}", variant))
            continue
        i = X - e.alpha - e.beta
        omega = (i / price.eta_p + 1.0) / price.xi
        try:
            lam = phillips_inverse(e.alpha + (1.0 - price.gamma) * i, params.phillips)
        except NoPreimageError as exc:
            points.append(_absent(system, "Good1_Spec", 4, f"no_preimage: {exc}", variant))
            continue
        f = psi(X, params.spec) / X
        b = (gap + f) / X
        point = _finish(EquilibriumPoint(system, "Good1_Spec", (omega, lam, b, f), variant=variant), params)
        if point.residual > RESIDUAL_TOL:
            point = dataclasses.replace(point, exists=False,
                                        reason=f"residual {point.residual:.3g} above tolerance")
        points.append(point)
    if not any(p.exists for p in points):
        points = [dataclasses.replace(p, reason=f"no good equilibrium: {p.reason}") for p in points]
    return points


def speculation_f_values(params: ModelParams, regime: str, b: float | None = None) -> float:
    """Equilibrium speculative flow share for one of the speculative regimes.

    ``regime`` is ``"good"``, ``"zero_wage_inf_debt"``, ``"deflation_inf_debt"``
    or ``"deflation_finite_debt"`` (the last needs the debt share ``b``).
    """
    e, price = params.econ, params.price
    if regime == "good":
        points = [p for p in good_eq_speculation(params) if p.exists]
        if not points:
            raise NoEquilibriumError("no good speculative equilibrium")
        nominal = e.alpha + e.beta + inflation_rate(points[0].coords[0], price)
    elif regime == "zero_wage_inf_debt":
        nominal = growth_floor(params) - price.eta_p
    elif regime == "deflation_inf_debt":
        nominal = growth_floor(params) + inflation_rate(deflation_wage_share(params), price)
    elif regime == "deflation_finite_debt":
        if b is None:
            raise ValueError("the finite-debt regime needs the debt share b")
        omega3 = deflation_wage_share(params)
        pi = 1.0 - omega3 - e.r * b
        nominal = kappa(pi, params.invest) / e.nu - e.delta + inflation_rate(omega3, price)
    else:
        raise ValueError(f"unknown regime {regime!r}")
    if nominal == 0:
        raise NoEquilibriumError(f"pole: nominal growth is zero in regime {regime!r}")
    return psi(nominal, params.spec) / nominal


def b3_speculation_equation(b: float, params: ModelParams, omega3: float) -> float:
    """Debt balance at the deflationary point, multiplied through by nominal growth n.

    ``n (b n - kappa + pi) - Psi(n)`` is continuous in b, unlike the form with
    ``f = Psi(n) / n`` substituted, whose pole at n = 0 fakes a sign change.
    """
    e = params.econ
    pi = 1.0 - omega3 - e.r * b
    kap = kappa(pi, params.invest)
    n = kap / e.nu - e.delta + inflation_rate(omega3, params.price)
    return n * (b * n - kap + pi) - psi(n, params.spec)


def solve_b3_speculation(params: ModelParams, omega3: float, lo: float = -100.0, hi: float = 100.0,
                         step: float = 0.01) -> tuple[list[tuple[float, float]], str]:
    """Finite-debt deflationary points ``(b3, f3)`` of the speculative model."""
    scan = scan_roots(lambda b: b3_speculation_equation(b, params, omega3), lo, hi, step)
    found = []
    diag = scan.diagnostic
    for b in scan.roots:
        try:
            f = speculation_f_values(params, "deflation_finite_debt", b)
        except NoEquilibriumError:
            diag += f"; root b={b:.6g} sits on the n=0 pole"
            continue
        rhs = vector_field((omega3, 0.0, b, f), SystemId.Speculation4, params)
        if max(abs(rhs[2]), abs(rhs[3])) <= 1e-10:
            found.append((b, f))
        else:
            diag += f"; root b={b:.6g} failed the residual check"
    return found, diag.strip("; ")


# ---------------------------------------------------------------------------
# enumeration
# ---------------------------------------------------------------------------

def _deflation_family(params: ModelParams, system: SystemId) -> list[EquilibriumPoint]:
    spec = system is SystemId.Speculation4
    dim = 4 if spec else 3
    labels = (("Deflat3_FiniteDebt_Spec", "Deflat3_InfDebt_FiniteSpec", "Deflat3_InfDebt_InfSpec")
              if spec else ("Deflat3_FiniteDebt", "Deflat3_InfDebt"))
    try:
        omega3 = deflation_wage_share(params)
    except NoEquilibriumError as exc:
        out = [_absent(system, lab, dim, str(exc)) for lab in labels]
        if spec:
            out.append(_absent(system, labels[2], dim, str(exc), "-"))
            out[2] = dataclasses.replace(out[2], variant="+")
        return out

    out: list[EquilibriumPoint] = []
    if spec:
        roots, diag = solve_b3_speculation(params, omega3)
        if not roots:
            out.append(_absent(system, labels[0], dim, f"no finite debt root: {diag}"))
        for k, (b, f) in enumerate(roots):
            variant = str(k + 1) if len(roots) > 1 else ""
            out.append(_finish(EquilibriumPoint(system, labels[0], (omega3, 0.0, b, f), variant=variant), params))
        try:
            f_inf = speculation_f_values(params, "deflation_inf_debt")
            out.append(_finish(EquilibriumPoint(system, labels[1], (omega3, 0.0, math.inf, f_inf),
                                                defining_system=SystemId.SpeculationQ4,
                                                defining_coords=(omega3, 0.0, 0.0, f_inf)), params))
        except NoEquilibriumError as exc:
            out.append(_absent(system, labels[1], dim, str(exc)))
        for sign, variant in ((1.0, "+"), (-1.0, "-")):
            out.append(_finish(EquilibriumPoint(system, labels[2], (omega3, 0.0, math.inf, sign * math.inf),
                                                variant=variant, defining_system=SystemId.SpeculationVX4,
                                                defining_coords=(omega3, 0.0, 0.0, 0.0)), params))
        return out

    scan = solve_b3_inflation(params, omega3)
    if not scan.roots:
        out.append(_absent(system, labels[0], dim, f"no finite debt root: {scan.diagnostic}"))
    for k, b in enumerate(scan.roots):
        variant = str(k + 1) if len(scan.roots) > 1 else ""
        out.append(_finish(EquilibriumPoint(system, labels[0], (omega3, 0.0, b), variant=variant), params))
    out.append(_finish(EquilibriumPoint(system, labels[1], (omega3, 0.0, math.inf),
                                        defining_system=SystemId.InflationInverse3,
                                        defining_coords=(omega3, 0.0, 0.0)), params))
    return out


def enumerate_equilibria(params: ModelParams, system: SystemId | str) -> list[EquilibriumPoint]:
    """Every equilibrium named for the model family of ``system``, existing or not."""
    family = SystemId(system).family
    if family is SystemId.Basic3:
        p = family_params(family, params)
        return [good_eq_basic(p), bad_eq_zero_wage(p, family)]

    if family is SystemId.Inflation3:
        _, good = good_eq_inflation(params)
        return good + [bad_eq_zero_wage(params, family)] + _deflation_family(params, family)

    out = good_eq_speculation(params)
    try:
        f0 = speculation_f_values(params, "zero_wage_inf_debt")
        out.append(_finish(EquilibriumPoint(family, "Bad_InfDebt_FiniteSpec", (0.0, 0.0, math.inf, f0),
                                            defining_system=SystemId.SpeculationQ4,
                                            defining_coords=(0.0, 0.0, 0.0, f0)), params))
    except NoEquilibriumError as exc:
        out.append(_absent(family, "Bad_InfDebt_FiniteSpec", 4, str(exc)))
    for sign, variant in ((1.0, "+"), (-1.0, "-")):
        out.append(_finish(EquilibriumPoint(family, "Bad_InfDebt_InfSpec", (0.0, 0.0, math.inf, sign * math.inf),
                                            variant=variant, defining_system=SystemId.SpeculationVX4,
                                            defining_coords=(0.0, 0.0, 0.0, 0.0)), params))
    return out + _deflation_family(params, family)


def find_point(points: Sequence[EquilibriumPoint], name: str) -> EquilibriumPoint:
    for p in points:
        if p.name == name:
            return p
    raise KeyError(name)
