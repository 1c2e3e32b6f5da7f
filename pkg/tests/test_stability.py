"""Local stability against frozen oracle spectra.

Oracle: each field (including the q and (v, x) charts) written from the model
equations by hand, Jacobians by finite differences (one-sided at chart
boundaries), eigenvalues by numpy.
"""

import numpy as np
import pytest

from keensim.equilibria import enumerate_equilibria, find_point
from keensim.stability import (MARGINAL_BAND, charpoly, charpoly_3, charpoly_4, charpoly_4_printed, classify,
                               jacobian, k_coefficients, poly_roots, poly_roots_real_parts, routh_hurwitz)
from keensim.params import basic_params, inflation_params, speculation_params

# max real part of the spectrum at each equilibrium (oracle, 1e-5 accuracy)
ORACLE_MAX_RE = {
    ("Basic3", "Good1"): -0.03522760715918389,
    ("Inflation3", "Good1[+]"): -0.052408779630481545,
    ("Inflation3", "Good1[-]"): 0.05154197381114524,
    ("Inflation3", "Bad2_InfDebt"): 0.735,
    ("Inflation3", "Deflat3_InfDebt"): -0.05716666666666667,
    ("Speculation4", "Good1_Spec"): 0.007765684400661468,
    ("Speculation4", "Bad_InfDebt_FiniteSpec"): 4.012166666955697,
    ("Speculation4", "Bad_InfDebt_InfSpec[+]"): 0.735,
    ("Speculation4", "Deflat3_FiniteDebt_Spec"): 0.28555479111599297,
    ("Speculation4", "Deflat3_InfDebt_FiniteSpec"): 0.33716666666960826,
    ("Speculation4", "Deflat3_InfDebt_InfSpec[+]"): -0.03,
}
PARAMS = {"Basic3": basic_params(), "Inflation3": inflation_params(), "Speculation4": speculation_params()}


@pytest.mark.parametrize("key", sorted(ORACLE_MAX_RE))
def test_spectrum_matches_oracle(key):
    system, name = key
    params = PARAMS[system]
    report = classify(find_point(enumerate_equilibria(params, system), name), params)
    assert max(report.eigen_real_parts) == pytest.approx(ORACLE_MAX_RE[key], abs=1e-5)
    expected = "stable" if ORACLE_MAX_RE[key] < 0 else "unstable"
    assert report.final == expected


def test_basic_bad_point_is_stable():
    p = basic_params()
    report = classify(find_point(enumerate_equilibria(p, "Basic3"), "Bad2_InfDebt"), p)
    assert report.final == "stable"
    assert max(report.eigen_real_parts) < -0.04


def test_rh_agrees_with_eigenvalues_at_every_point():
    for system, params in PARAMS.items():
        for point in enumerate_equilibria(params, system):
            if point.exists:
                rep = classify(point, params)
                assert rep.rh_verdict == rep.eigen_verdict, point.name
                assert np.allclose(rep.poly_real_parts, sorted(rep.eigen_real_parts), atol=1e-7)


def test_absent_point_cannot_be_classified():
    p = inflation_params()
    with pytest.raises(ValueError):
        classify(find_point(enumerate_equilibria(p, "Inflation3"), "Deflat3_FiniteDebt"), p)


def test_good_point_polynomials_from_k_terms():
    for system, params, fn in (("Inflation3", inflation_params(), charpoly_3),
                               ("Speculation4", speculation_params(), charpoly_4)):
        point = next(p for p in enumerate_equilibria(params, system) if p.label.startswith("Good1"))
        from_matrix = charpoly(jacobian(system, point.coords, params).entries)
        assert np.allclose(fn(k_coefficients(point, params)), from_matrix, rtol=1e-8, atol=1e-10)


def test_printed_quartic_differs_from_the_expansion():
    p = speculation_params()
    point = find_point(enumerate_equilibria(p, "Speculation4"), "Good1_Spec")
    K = k_coefficients(point, p)
    assert not np.allclose(charpoly_4_printed(K), charpoly_4(K))
    with pytest.raises(ValueError):
        k_coefficients(find_point(enumerate_equilibria(p, "Speculation4"), "Bad_InfDebt_FiniteSpec"), p)


def test_printed_condition_notes():
    p = inflation_params()
    pts = enumerate_equilibria(p, "Inflation3")
    bad = classify(find_point(pts, "Bad2_InfDebt"), p)
    cond = next(c for c in bad.printed_conditions if c.formula_id == "monetary_bad_printed")
    assert cond.holds and "wrong sign" in cond.note
    corrected = next(c for c in bad.printed_conditions if c.formula_id == "monetary_bad_corrected")
    assert not corrected.holds and corrected.note == ""
    good = classify(find_point(pts, "Good1[+]"), p)
    ids = {c.formula_id: c for c in good.printed_conditions}
    assert not ids["monetary_good_rh_printed"].holds and ids["monetary_good_rh_printed"].note
    assert ids["monetary_good_rh_corrected"].holds


def test_basic_printed_conditions():
    p = basic_params()
    pts = enumerate_equilibria(p, "Basic3")
    good = classify(find_point(pts, "Good1"), p)
    interval = next(c for c in good.printed_conditions if c.formula_id == "basic_good_interval")
    assert not interval.holds and "erratum" in interval.note
    bad = classify(find_point(pts, "Bad2_InfDebt"), p)
    floor = next(c for c in bad.printed_conditions if c.formula_id == "basic_bad_growth_floor")
    assert floor.holds and floor.note == ""


def test_report_serialises():
    p = speculation_params()
    rep = classify(find_point(enumerate_equilibria(p, "Speculation4"), "Good1_Spec"), p)
    d = rep.to_dict()
    assert d["label"] == "Good1_Spec" and d["final"] == "unstable" and len(d["charpoly"]) == 5


def test_jacobian_sources_agree_at_a_regular_state():
    p = speculation_params()
    s = (0.8, 0.93, 0.4, 0.05)
    a = jacobian("Speculation4", s, p).entries
    fd = jacobian("Speculation4", s, p, source="finite_difference").entries
    assert np.allclose(a, fd, rtol=1e-6, atol=1e-8)
    with pytest.raises(ValueError):
        jacobian("Speculation4", s, p, source="symbolic")
    with pytest.raises(ValueError):
        jacobian("Basic3", s, p)


def test_charpoly_of_companion():
    A = np.array([[0, 1, 0], [0, 0, 1], [-6, -11, -6]], dtype=float)
    assert np.allclose(charpoly(A), (1, 6, 11, 6))


@pytest.mark.parametrize("coeffs,roots", [
    ((1, 3, 2), (-2, -1)),
    ((1, 0, 1), (0, 0)),
    ((1, 6, 11, 6), (-3, -2, -1)),
    ((1, 10, 35, 50, 24), (-4, -3, -2, -1)),
    ((2, 0, 0, 0, -2), (-1, 0, 0, 1)),
])
def test_root_real_parts(coeffs, roots):
    assert np.allclose(poly_roots_real_parts(coeffs), roots, atol=1e-10)


def test_poly_roots_residual():
    c = (1.0, -0.3, 2.2, 0.7, 0.05)
    for z in poly_roots(c):
        assert abs(np.polyval(c, z)) < 1e-12


def test_routh_hurwitz_edges():
    assert routh_hurwitz((1, 2, 1))
    assert not routh_hurwitz((1, 0, 1))
    assert not routh_hurwitz((1, 1, 1, 1))  # roots on the imaginary axis
    assert routh_hurwitz((1, 10, 35, 50, 24))
    with pytest.raises(ValueError):
        routh_hurwitz((1, 1))
    with pytest.raises(ValueError):
        routh_hurwitz((0, 1, 1))
    assert MARGINAL_BAND == 1e-8
