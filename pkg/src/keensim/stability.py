"""Local stability of equilibria.

The verdict always comes from the eigenvalues of the Jacobian in the
coordinates that define the point.  The closed-form conditions that the
literature prints for each equilibrium are evaluated alongside as advisory
predicates; where they disagree with the spectrum the report says so instead
of overriding it.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .equilibria import EquilibriumPoint, family_params
from .model import (
    State,
    SystemId,
    growth_floor,
    in_limit,
    inflation_rate,
    kappa,
    kappa_deriv,
    phillips,
    phillips_deriv,
    profit_share,
    psi,
    psi_deriv,
    vector_field,
)
from .params import ModelParams

MARGINAL_BAND = 1e-8
FD_REL_STEP = 1e-6


@dataclass(frozen=True)
class JacobianMatrix:
    system: SystemId
    point: State
    entries: np.ndarray
    source: str

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class KCoefficients:
    """Entries of the reduced Jacobian at a good point (K6 only with speculation)."""

    K0: float
    K1: float
    K2: float
    K3: float
    K4: float
    K5: float
    K6: float | None
    nominal_growth: float  # alpha + beta + i at the point
    kappa_slope: float  # kappa'(pi) / nu
    eta_xi: float
    r: float
    b: float


@dataclass(frozen=True)
class PrintedCondition:
    name: str
    formula_id: str
    holds: bool
    kind: str  # "iff", "sufficient" or "necessary"
    note: str = ""


@dataclass
class StabilityReport:
    point: EquilibriumPoint
    jacobian: JacobianMatrix
    charpoly: tuple[float, ...]
    rh_verdict: bool
    eigen_real_parts: tuple[float, ...]
    eigen_verdict: bool
    poly_real_parts: tuple[float, ...]
    final: str
    printed_conditions: list[PrintedCondition] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "label": self.point.name,
            "system": self.jacobian.system.value,
            "charpoly": list(self.charpoly),
            "rh_verdict": self.rh_verdict,
            "eigen_real_parts": list(self.eigen_real_parts),
            "eigen_verdict": self.eigen_verdict,
            "final": self.final,
            "printed_conditions": [
                {"name": c.name, "formula_id": c.formula_id, "holds": c.holds, "kind": c.kind, "note": c.note}
                for c in self.printed_conditions
            ],
        }


# ---------------------------------------------------------------------------
# Jacobians
# ---------------------------------------------------------------------------

def _analytic(state: Sequence[float], system: SystemId, params: ModelParams) -> np.ndarray:
    e = params.econ
    price = None if system is SystemId.Basic3 else params.price
    n_dim = system.dim
    omega, lam = state[0], state[1]
    eta = price.eta_p if price is not None else 0.0
    xi = price.xi if price is not None else 0.0
    illusion = (1.0 - price.gamma) if price is not None else 0.0
    i = inflation_rate(omega, price)
    i_w = eta * xi

    limit = in_limit(state, system)
    grad_pi = np.zeros(n_dim)
    if limit:
        kap, dkap = params.invest.kappa0, 0.0
    else:
        pi = profit_share(state, system, e)
        kap, dkap = kappa(pi, params.invest), kappa_deriv(pi, params.invest)
        grad_pi[0] = -1.0
        if system in (SystemId.Basic3, SystemId.Inflation3, SystemId.Speculation4):
            grad_pi[2] = -e.r
        elif system in (SystemId.InflationInverse3, SystemId.SpeculationQ4):
            grad_pi[2] = e.r / state[2] ** 2
        else:
            v, x = state[2], state[3]
            grad_pi[2] = e.r / (v * v * x)
            grad_pi[3] = e.r / (v * x * x)
    dk = dkap * grad_pi  # gradient of kappa(pi)
    g = kap / e.nu - e.delta
    n = g + i
    grad_n = dk / e.nu
    grad_n[0] += i_w

    J = np.zeros((n_dim, n_dim))
    J[0, 0] = phillips(lam, params.phillips) - e.alpha - illusion * i - omega * illusion * i_w
    J[0, 1] = omega * phillips_deriv(lam, params.phillips)
    J[1, :] = lam * dk / e.nu
    J[1, 1] += g - e.alpha - e.beta

    unit = np.eye(n_dim)
    if system in (SystemId.Basic3, SystemId.Inflation3, SystemId.Speculation4):
        b = state[2]
        J[2, :] = dk - grad_pi - b * grad_n - n * unit[2]
        if system is SystemId.Speculation4:
            f = state[3]
            J[2, 3] += 1.0
            J[3, :] = (psi_deriv(n, params.spec) - f) * grad_n - n * unit[3]
    elif system in (SystemId.InflationInverse3, SystemId.SpeculationQ4):
        q = state[2]
        extra = state[3] if system is SystemId.SpeculationQ4 else 0.0
        bracket = kap - (1.0 - omega) + extra
        J[2, :] = q * grad_n - q * q * (dk + unit[0]) + (n - e.r - 2.0 * q * bracket) * unit[2]
        if system is SystemId.SpeculationQ4:
            f = state[3]
            J[2, 3] -= q * q
            J[3, :] = (psi_deriv(n, params.spec) - f) * grad_n - n * unit[3]
    else:
        v, x = state[2], state[3]
        ps, dps = psi(n, params.spec), psi_deriv(n, params.spec)
        bracket = kap - (1.0 - omega)
        J[2, :] = v * x * dps * grad_n - v * v * x * (dk + unit[0])
        J[2, 2] += x * ps - 2.0 * v * x * bracket - e.r - 2.0 * v
        J[2, 3] += v * ps - v * v * bracket
        J[3, :] = (x - x * x * dps) * grad_n
        J[3, 3] += n - 2.0 * x * ps
    return J


def _finite_difference(state: Sequence[float], system: SystemId, params: ModelParams) -> np.ndarray:
    x0 = np.asarray(state, dtype=float)
    n_dim = x0.size
    J = np.zeros((n_dim, n_dim))
    for k in range(n_dim):
        h = FD_REL_STEP * max(1.0, abs(x0[k]))
        up, down = x0.copy(), x0.copy()
        up[k] += h
        down[k] -= h
        J[:, k] = (np.asarray(vector_field(up, system, params)) -
                   np.asarray(vector_field(down, system, params))) / (2.0 * h)
    return J


def jacobian(system: SystemId | str, point: Sequence[float], params: ModelParams,
             source: str = "analytic") -> JacobianMatrix:
    """Jacobian of ``system`` at ``point``.

    ``source`` is ``"analytic"`` (chain rule, with the investment slope set to
    zero in the transformed-coordinate limit) or ``"finite_difference"``
    (central differences with step ``1e-6 * max(1, |x_k|)``).
    """
    system = SystemId(system)
    if len(point) != system.dim:
        raise ValueError(f"{system.value} expects {system.dim} coordinates, got {len(point)}")
    if source == "analytic":
        entries = _analytic(point, system, params)
    elif source == "finite_difference":
        entries = _finite_difference(point, system, params)
    else:
        raise ValueError(f"unknown Jacobian source {source!r}")
    return JacobianMatrix(system=system, point=tuple(float(c) for c in point), entries=entries, source=source)


# ---------------------------------------------------------------------------
# characteristic polynomials
# ---------------------------------------------------------------------------

def charpoly(matrix: np.ndarray) -> tuple[float, ...]:
    """Coefficients of det(X I - A), leading 1 first (Faddeev-LeVerrier)."""
    A = np.asarray(matrix, dtype=float)
    n = A.shape[0]
    coeffs = [1.0]
    M = np.zeros_like(A)
    eye = np.eye(n)
    for k in range(1, n + 1):
        M = A @ M + coeffs[-1] * eye
        coeffs.append(-float(np.trace(A @ M)) / k)
    return tuple(coeffs)


def k_coefficients(point: EquilibriumPoint, params: ModelParams) -> KCoefficients:
    """The K-terms of a good equilibrium (Good1 or Good1_Spec)."""
    if not point.label.startswith("Good1") or not point.exists:
        raise ValueError("K coefficients are defined at existing good equilibria only")
    p = family_params(point.system, params)
    e, price = p.econ, p.price
    omega, lam, b = point.coords[0], point.coords[1], point.coords[2]
    eta = price.eta_p if price is not None else 0.0
    xi = price.xi if price is not None else 0.0
    gamma = price.gamma if price is not None else 1.0
    i = inflation_rate(omega, price)
    pi = 1.0 - omega - e.r * b
    dk = kappa_deriv(pi, p.invest)
    m = e.alpha + e.beta + i
    K0 = (gamma - 1.0) * eta * xi * omega
    K1 = omega * phillips_deriv(lam, p.phillips)
    K2 = lam * dk / e.nu
    K3 = dk * (b - e.nu) / e.nu + 1.0
    K4 = e.r * K3 - m
    K5 = m - e.r * eta * xi * b
    K6 = None
    if point.system.has_speculation:
        K6 = point.coords[3] - psi_deriv(m, p.spec)
    return KCoefficients(K0, K1, K2, K3, K4, K5, K6, nominal_growth=m, kappa_slope=dk / e.nu,
                         eta_xi=eta * xi, r=e.r, b=b)


def charpoly_3(K: KCoefficients) -> tuple[float, float, float, float]:
    """Monic cubic ``X^3 - (K0+K4) X^2 + (K0 K4 + K1 K2) X + K1 K2 K5``."""
    return (1.0, -(K.K0 + K.K4), K.K0 * K.K4 + K.K1 * K.K2, K.K1 * K.K2 * K.K5)


def charpoly_4(K: KCoefficients) -> tuple[float, float, float, float, float]:
    """Monic quartic of the speculative good point, expanded from det(X I - J)."""
    if K.K6 is None:
        raise ValueError("charpoly_4 needs K6 (a speculative good point)")
    m, c, r, ex, b = K.nominal_growth, K.kappa_slope, K.r, K.eta_xi, K.b
    k12 = K.K1 * K.K2
    a3 = -K.K0 - K.K4 + m
    a2 = K.K0 * K.K4 + k12 - m * (K.K0 + K.K4) - r * c * K.K6
    a1 = m * K.K0 * K.K4 + r * c * K.K6 * K.K0 + k12 * (2.0 * m - r * ex * b)
    a0 = k12 * (m * K.K5 - r * ex * K.K6)
    return (1.0, a3, a2, a1, a0)


def charpoly_4_printed(K: KCoefficients) -> tuple[float, float, float, float, float]:
    """The quartic coefficients in the form found in the literature, kept for comparison.

    They differ from :func:`charpoly_4` in ``a3``, ``a1`` and ``a0``.
    """
    if K.K6 is None:
        raise ValueError("charpoly_4_printed needs K6 (a speculative good point)")
    m, c, r, ex, b = K.nominal_growth, K.kappa_slope, K.r, K.eta_xi, K.b
    k12 = K.K1 * K.K2
    a3 = -K.K0 - r * K.K3
    a2 = K.K0 * K.K4 + k12 - m * (K.K0 + K.K4) - r * K.K6 * c
    a1 = m * K.K0 * K.K4 + r * ex * b * k12 - r * K.K6 * c * K.K0
    a0 = -k12 * (m * K.K5 + r * K.K6 * ex)
    return (1.0, a3, a2, a1, a0)


# ---------------------------------------------------------------------------
# Routh-Hurwitz and polynomial roots
# ---------------------------------------------------------------------------

def _monic(coeffs: Sequence[float]) -> list[float]:
    c = [float(x) for x in coeffs]
    if not c or c[0] == 0:
        raise ValueError("leading coefficient must be non-zero")
    return [x / c[0] for x in c]


def routh_hurwitz(coeffs: Sequence[float]) -> bool:
    """True iff every root of the degree 2-4 polynomial has negative real part."""
    c = _monic(coeffs)
    deg = len(c) - 1
    if deg == 2:
        _, a1, a0 = c
        return a1 > 0 and a0 > 0
    if deg == 3:
        _, a2, a1, a0 = c
        return a2 > 0 and a1 > 0 and a0 > 0 and a2 * a1 > a0
    if deg == 4:
        _, a3, a2, a1, a0 = c
        return (a3 > 0 and a2 > 0 and a1 > 0 and a0 > 0 and a3 * a2 > a1
                and a3 * a2 * a1 > a1 * a1 + a3 * a3 * a0)
    raise ValueError(f"Routh-Hurwitz is implemented for degrees 2 to 4, got {deg}")


def _horner(c: Sequence[complex], z: complex) -> complex:
    acc = 0j
    for a in c:
        acc = acc * z + a
    return acc


def poly_roots(coeffs: Sequence[float], max_iter: int = 500) -> list[complex]:
    """All complex roots: closed form up to degree 2, Aberth iteration above."""
    c = _monic(coeffs)
    deg = len(c) - 1
    if deg == 0:
        return []
    if deg == 1:
        return [complex(-c[1])]
    if deg == 2:
        b, cc = c[1], c[2]
        disc = b * b - 4.0 * cc
        if disc >= 0:
            s = -0.5 * (b + math.copysign(math.sqrt(disc), b))
            return [complex(s), complex(cc / s)] if s != 0 else [0j, 0j]
        re, im = -0.5 * b, 0.5 * math.sqrt(-disc)
        return [complex(re, im), complex(re, -im)]

    dc = [a * (deg - k) for k, a in enumerate(c[:-1])]
    # Cauchy bound for the starting circle
    radius = 1.0 + max(abs(a) for a in c[1:])
    z = [radius * 0.5 * cmath.exp(1j * (2.0 * math.pi * k / deg + 0.4)) for k in range(deg)]
    for _ in range(max_iter):
        biggest = 0.0
        for k in range(deg):
            p = _horner(c, z[k])
            dp = _horner(dc, z[k])
            if p == 0:
                continue
            ratio = p / dp if dp != 0 else p
            repulsion = sum(1.0 / (z[k] - z[j]) for j in range(deg) if j != k and z[k] != z[j])
            denom = 1.0 - ratio * repulsion
            w = ratio / denom if denom != 0 else ratio
            z[k] -= w
            biggest = max(biggest, abs(w) / max(1.0, abs(z[k])))
        if biggest < 1e-15:
            break
    return z


def poly_roots_real_parts(coeffs: Sequence[float]) -> tuple[float, ...]:
    """Sorted real parts of the roots of a polynomial of degree up to 4."""
    if len(coeffs) - 1 > 4:
        raise ValueError("degree above 4 is not supported")
    return tuple(sorted(z.real for z in poly_roots(coeffs)))


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

def _verdict(real_parts: Sequence[float]) -> str:
    top = max(real_parts)
    if top < -MARGINAL_BAND:
        return "stable"
    if top > MARGINAL_BAND:
        return "unstable"
    return "marginal"


def _cond(name: str, fid: str, holds: bool, kind: str, stable: bool) -> PrintedCondition:
    note = ""
    if kind == "iff" and holds != stable:
        note = "erratum: disagrees with the eigenvalue verdict"
    elif kind == "sufficient" and holds and not stable:
        note = "erratum: sufficient condition holds at an unstable point"
    elif kind == "necessary" and not holds and stable:
        note = "erratum: necessary condition fails at a stable point"
    return PrintedCondition(name=name, formula_id=fid, holds=bool(holds), kind=kind, note=note)


def _with_note(cond: PrintedCondition, extra: str) -> PrintedCondition:
    note = f"{cond.note}; {extra}" if cond.note else extra
    return PrintedCondition(cond.name, cond.formula_id, cond.holds, cond.kind, note)


def _sign_slip(cond: PrintedCondition, zero_wage: bool, printed_first: bool, phi0: float,
               p: ModelParams) -> PrintedCondition:
    if not zero_wage:
        return cond
    actual = phi0 - p.econ.alpha + (1.0 - p.price.gamma) * p.price.eta_p < 0
    if actual == printed_first:
        return cond
    return _with_note(cond, "the wage-row entry is Phi(0) - alpha + (1 - gamma) eta_p; "
                            "the printed (gamma - 1) has the wrong sign")


def printed_conditions(point: EquilibriumPoint, params: ModelParams, stable: bool) -> list[PrintedCondition]:
    """Closed-form stability conditions for ``point`` as they appear in the literature."""
    p = family_params(point.system, params)
    e, price = p.econ, p.price
    ab = e.alpha + e.beta
    floor = growth_floor(p)
    phi0 = phillips(0.0, p.phillips)
    out: list[PrintedCondition] = []
    label, system = point.label, point.system

    def slope_term(pi: float, b: float) -> float:
        return e.r * (1.0 + kappa_deriv(pi, p.invest) * (b / e.nu - 1.0))

    if label == "Good1" and system is SystemId.Basic3:
        omega, lam, b = point.coords
        t = slope_term(1.0 - omega - e.r * b, b)
        out.append(_cond(f"0 < r(1 + kappa'(b/nu - 1)) < alpha + beta  [{t:.6g}]",
                         "basic_good_interval", 0.0 < t < ab, "iff", stable))
    elif label == "Bad2_InfDebt" and system is SystemId.Basic3:
        out.append(_cond(f"kappa0/nu - delta < r  [{floor:.6g} < {e.r:g}]",
                         "basic_bad_growth_floor", floor < e.r, "iff", stable))
    elif label == "Good1" and system is SystemId.Inflation3:
        K = k_coefficients(point, p)
        k12 = K.K1 * K.K2
        printed = (K.K0 < -K.K4 and -K.K0 * K.K4 > k12 and K.K5 > 0
                   and (K.K0 + K.K4) * (K.K0 * K.K4 + k12) > k12 * K.K5)
        out.append(_cond("K0 < -K4, -K0 K4 > K1 K2, K5 > 0, (K0+K4)(K0 K4 + K1 K2) > K1 K2 K5",
                         "monetary_good_rh_printed", printed, "iff", stable))
        corrected = (K.K0 + K.K4 < 0 and K.K0 * K.K4 + k12 > 0 and K.K5 > 0
                     and -(K.K0 + K.K4) * (K.K0 * K.K4 + k12) > k12 * K.K5)
        out.append(_cond("K0 + K4 < 0, K0 K4 + K1 K2 > 0, K5 > 0, -(K0+K4)(K0 K4 + K1 K2) > K1 K2 K5",
                         "monetary_good_rh_corrected", corrected, "iff", stable))
        omega, lam, b = point.coords
        t = slope_term(1.0 - omega - e.r * b, b)
        lhs = e.r * K.eta_xi * b
        out.append(_cond(f"r eta_p xi b < r(1 + kappa'(b/nu - 1)) < alpha + beta + i  [{lhs:.6g}, {t:.6g}]",
                         "monetary_good_sufficient", lhs < t < K.nominal_growth, "sufficient", stable))
    elif label == "Bad2_InfDebt" and system is SystemId.Inflation3:
        c1 = phi0 < e.alpha - (price.gamma - 1.0) * price.eta_p
        c1_true = phi0 - e.alpha + (1.0 - price.gamma) * price.eta_p < 0
        c2 = floor - price.eta_p < e.r
        cond = _cond("Phi(0) < alpha - (gamma - 1) eta_p and kappa0/nu - delta - eta_p < r",
                     "monetary_bad_printed", c1 and c2, "iff", stable)
        if c1 != c1_true:
            cond = _with_note(cond, "the wage-row entry is Phi(0) - alpha + (1 - gamma) eta_p; "
                                    "the printed (gamma - 1) has the wrong sign")
        out.append(cond)
        out.append(_cond("Phi(0) - alpha + (1 - gamma) eta_p < 0 and kappa0/nu - delta - eta_p < r",
                         "monetary_bad_corrected", c1_true and c2, "iff", stable))
    elif label == "Deflat3_FiniteDebt":
        omega3, _, b3 = point.coords
        pi3 = 1.0 - omega3 - e.r * b3
        g3 = kappa(pi3, p.invest) / e.nu - e.delta
        i3 = inflation_rate(omega3, price)
        conds = ((price.gamma - 1.0) * price.eta_p * price.xi * omega3 < 0, g3 < ab,
                 slope_term(pi3, b3) < g3 + i3)
        out.append(_cond("(gamma-1) eta_p xi w3 < 0, g(pi3) < alpha + beta, r(1 + kappa'(b3/nu - 1)) < g + i",
                         "monetary_deflation_finite", all(conds), "iff", stable))
    elif label == "Deflat3_InfDebt":
        omega3 = point.coords[0]
        i3 = inflation_rate(omega3, price)
        conds = ((price.gamma - 1.0) * price.eta_p * price.xi * omega3 < 0, floor + i3 < e.r)
        out.append(_cond(f"(gamma-1) eta_p xi w3 < 0 and kappa0/nu - delta + i(w3) < r  [{floor + i3:.6g}]",
                         "monetary_deflation_infinite", all(conds), "iff", stable))
    elif label == "Good1_Spec":
        K = k_coefficients(point, p)
        out.append(_cond("quartic Routh-Hurwitz on the printed coefficients",
                         "speculative_good_rh_printed", routh_hurwitz(charpoly_4_printed(K)), "iff", stable))
        out.append(_cond("quartic Routh-Hurwitz on the expanded coefficients",
                         "speculative_good_rh_expanded", routh_hurwitz(charpoly_4(K)), "iff", stable))
    elif label == "Deflat3_FiniteDebt_Spec":
        omega3, _, b3, f3 = point.coords
        pi3 = 1.0 - omega3 - e.r * b3
        g3 = kappa(pi3, p.invest) / e.nu - e.delta
        n3 = g3 + inflation_rate(omega3, price)
        conds = (slope_term(pi3, b3) > 2.0 * n3, g3 < ab, psi_deriv(n3, p.spec) > f3)
        cond = _cond("r(1 + kappa'(b3/nu - 1)) > 2(g + i), g(pi3) < alpha + beta, Psi'(g + i) > f3",
                     "speculative_deflation_finite", all(conds), "iff", stable)
        out.append(_with_note(cond, "the factor 2 is not derived, advisory only; the printed Jacobian "
                                    "carries +eta_p xi where the general matrix has -eta_p xi"))
    elif label in ("Bad_InfDebt_FiniteSpec", "Deflat3_InfDebt_FiniteSpec"):
        zero_wage = label.startswith("Bad")
        omega = 0.0 if zero_wage else point.coords[0]
        nominal = floor + inflation_rate(omega, price)
        first = (phi0 < e.alpha - (price.gamma - 1.0) * price.eta_p) if zero_wage else \
            (price.gamma - 1.0) * price.eta_p * price.xi * omega < 0
        cond = _cond(f"wage-row condition and 0 < kappa0/nu - delta + i < r  [{nominal:.6g}]",
                     "speculative_infinite_debt_finite_flow", first and 0.0 < nominal < e.r, "iff", stable)
        out.append(_sign_slip(cond, zero_wage, first, phi0, p))
    elif label in ("Bad_InfDebt_InfSpec", "Deflat3_InfDebt_InfSpec"):
        zero_wage = label.startswith("Bad")
        omega = 0.0 if zero_wage else point.coords[0]
        nominal = floor + inflation_rate(omega, price)
        first = (phi0 < e.alpha - (price.gamma - 1.0) * price.eta_p) if zero_wage else \
            (price.gamma - 1.0) * price.eta_p * price.xi * omega < 0
        cond = _cond(f"wage-row condition and kappa0/nu - delta + i < 0  [{nominal:.6g}]",
                     "speculative_infinite_debt_infinite_flow", first and nominal < 0.0, "iff", stable)
        out.append(_sign_slip(cond, zero_wage, first, phi0, p))
    return out


def classify(point: EquilibriumPoint, params: ModelParams) -> StabilityReport:
    """Stability report for an existing equilibrium; eigenvalues decide."""
    if not point.exists:
        raise ValueError(f"{point.name} does not exist: {point.reason}")
    p = family_params(point.system, params)
    system = point.defining_system or point.system
    coords = point.defining_coords if point.defining_coords is not None else point.coords
    jac = jacobian(system, coords, p)
    eig = np.linalg.eigvals(jac.entries)
    real_parts = tuple(sorted(float(z.real) for z in eig))
    final = _verdict(real_parts)
    cp = charpoly(jac.entries)
    report = StabilityReport(
        point=point,
        jacobian=jac,
        charpoly=cp,
        rh_verdict=routh_hurwitz(cp),
        eigen_real_parts=real_parts,
        eigen_verdict=final == "stable",
        poly_real_parts=poly_roots_real_parts(cp),
        final=final,
    )
    report.printed_conditions = printed_conditions(point, params, final == "stable")
    return report
