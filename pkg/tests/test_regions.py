import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from secantlab.basin import BasinRaster, GridSpec, IterationPolicy, Label
from secantlab.cycles import two_cycle_data
from secantlab.model_map import DomainError, ModelParams
from secantlab.regions import (
    INEQUALITY_CLAIMS,
    Certificate,
    RegionSpec,
    build_region,
    check_contraction,
    check_forward_invariance,
    check_pointwise_inequality,
    check_raster_bound,
    sigma0,
)

F = Fraction


def test_qb_vertices():
    Q = build_region(RegionSpec("Qb", d=3, b=F(1, 2)))
    assert Q.vertices == ((F(1, 4), 0), (F(1, 4), F(1, 4)), (0, F(1, 4)), (F(-1, 8), 0), (F(-1, 8), F(-1, 8)), (0, F(-1, 8)))
    assert build_region(RegionSpec("Qstar", d=3)).vertices == Q.vertices


def test_triangle_e_vertices():
    assert build_region(RegionSpec("TriangleE")).vertices == ((0, 1), (F(-1, 2), 0), (F(-1, 3), 0))


def test_triangle_d_vertices():
    v = build_region(RegionSpec("TriangleD", d=3)).vertices
    assert v[0] == (0, -1)
    assert float(v[1][0]) == pytest.approx(0.3027, abs=1e-4) and v[1][1] == -v[1][0]
    assert float(v[1][0]) == pytest.approx(1 / (two_cycle_data(3).m_plus + 1), abs=1e-15)
    assert v[2] == (F(2, 9), F(-2, 9))


def test_region_domain_errors():
    for b in (F(0), F(3, 4), F(-1, 4)):
        with pytest.raises(DomainError):
            build_region(RegionSpec("Qb", d=3, b=b))
    with pytest.raises(DomainError):
        build_region(RegionSpec("Qb", d=4, b=F(1, 4)))
    with pytest.raises(DomainError):
        build_region(RegionSpec("TrapT", d=3))
    with pytest.raises(DomainError):
        build_region(RegionSpec("Pentagon"))


def test_box_k_and_trap():
    K = build_region(RegionSpec("BoxK", d=2))
    assert K.contains(0.0, 0.0) and K.contains(-0.6, 0.2) and not K.contains(0.13, 0.1)
    assert float(K.margin(0.05, 0.0)) == 0.0 and not K.contains(-0.63, 0.1)
    T = build_region(RegionSpec("TrapT", d=2))
    assert T.vertices == ((0, 0), (F(1, 8), 0), (F(1, 8), F(1, 8)))


def test_qb_shrinks_to_origin():
    diams = [build_region(RegionSpec("Qb", d=3, b=F(1, 2**k))).diameter() for k in range(1, 8)]
    assert all(b < a for a, b in zip(diams, diams[1:]))
    assert diams[-1] < 1e-5


@settings(max_examples=40)
@given(st.fractions(min_value=F(1, 64), max_value=F(1, 2), max_denominator=64), st.sampled_from([3, 5, 7]))
def test_qb_contains_origin_and_nests(b, d):
    Q = build_region(RegionSpec("Qb", d=d, b=b))
    Qh = build_region(RegionSpec("Qb", d=d, b=b / 2))
    assert Q.contains(0.0, 0.0)
    pts = Qh.boundary_samples(64)
    assert np.all(Q.contains(pts[:, 0], pts[:, 1]))


@pytest.mark.parametrize("b,d", [(F(1, 2), 3), (F(1, 4), 3), (F(1, 2), 5), (F(1, 4), 5)])
def test_qb_forward_invariant(b, d):
    c = check_forward_invariance(ModelParams(1, d), build_region(RegionSpec("Qb", d=d, b=b)))
    assert c.passed and c.samples == 10_000


def test_omega0_plus_forward_invariant():
    c = check_forward_invariance(ModelParams(1, 2), build_region(RegionSpec("Omega0Plus", d=2)), margin=-1e-12)
    assert c.passed


def test_negative_a_breaks_invariance():
    c = check_forward_invariance(ModelParams(-1, 3), build_region(RegionSpec("Qstar", d=3)))
    assert not c.passed
    Q = build_region(RegionSpec("Qstar", d=3))
    assert abs(float(Q.margin(*c.worst_point))) < 1e-12
    from secantlab.model_map import evaluate

    X, Y = evaluate(ModelParams(-1, 3), c.worst_point)
    assert not Q.contains(X, Y)


@pytest.mark.parametrize("d", [3, 5])
def test_monotone_lift(d):
    c = check_pointwise_inequality(d, "MonotoneLiftOnE")
    assert c.passed
    notes = dict(c.notes)
    # the smallest gain sits next to the equality point (0, 1)
    assert float(notes["worst_distance_to_equality_locus"]) < 0.05


def test_sigma_plus_below_antidiagonal():
    assert check_pointwise_inequality(3, "SigmaPlusBelowAntidiagonal", 1000).passed


def test_gamma_curves_monotone():
    c = check_pointwise_inequality(5, "GammaCurvesMonotone", 1000)
    assert c.passed
    assert float(dict(c.notes)["max_sampled_slope"]) <= 1 / 5 - 1 + 1e-9


def test_sigma0_curves_monotone():
    t = np.geomspace(1e-6, 1e3, 2000)
    for sign in (1, -1):
        x, y = sigma0(t, 3, sign)
        assert np.all(np.diff(x) > 0) and np.all(np.diff(y) < 0)


def test_unknown_claim():
    with pytest.raises(DomainError):
        check_pointwise_inequality(3, "Nonsense")
    with pytest.raises(DomainError):
        check_pointwise_inequality(2, INEQUALITY_CLAIMS[0])


@pytest.mark.parametrize("d,a,factor", [(3, 1, 0.36), (5, 1, 25 / 81), (3, -1, 0.5)])
def test_contraction(d, a, factor):
    c = check_contraction(d, a)
    assert c.passed
    assert float(dict(c.notes)["factor"]) == pytest.approx(factor, abs=1e-15)


def test_contraction_domain():
    with pytest.raises(DomainError):
        check_contraction(4, 1)
    with pytest.raises(DomainError):
        check_contraction(3, 2)


def test_raster_bounds(raster_d2):
    assert check_raster_bound(raster_d2, build_region(RegionSpec("BoxK", d=2))).passed
    # antidiagonal pixels land on the diagonal edge of the closed trap
    T = build_region(RegionSpec("TrapT", d=2))
    assert not check_raster_bound(raster_d2, T, ModelParams(1, 2)).passed
    assert check_raster_bound(raster_d2, T, ModelParams(1, 2), margin=-1e-12).passed


def test_raster_bound_negative_control():
    g = GridSpec(-1, 1, -1, 1, 16, 16)
    labels = np.full((16, 16), Label.ESCAPED, dtype=np.int8)
    labels[0, 15] = Label.CONVERGED
    r = BasinRaster(g, labels, np.zeros((16, 16), np.int32), IterationPolicy())
    c = check_raster_bound(r, build_region(RegionSpec("BoxK", d=2)))
    assert not c.passed and c.worst_point == g.center(0, 15)


def test_certificates_are_reproducible():
    Q = build_region(RegionSpec("Qb", d=3, b=F(1, 4)))
    a = check_forward_invariance(ModelParams(1, 3), Q, samples=3000)
    b = check_forward_invariance(ModelParams(1, 3), Q, samples=3000, workers=4)
    assert a == b and a.report() == b.report()
    assert check_contraction(3, -1, workers=1) == check_contraction(3, -1, workers=4)


def test_report_format():
    text = check_contraction(3, 1).report()
    lines = text.splitlines()
    assert lines[-1] == "PASS" and lines[0].startswith("claim: ")
    assert all(": " in line for line in lines[:-1])
    assert "factor: 0.36" in lines
    fail = check_forward_invariance(ModelParams(-1, 3), build_region(RegionSpec("Qstar", d=3))).report()
    assert fail.endswith("FAIL\n")


def test_certificate_invariant():
    with pytest.raises(ValueError):
        Certificate("x", True, 1, -1.0, (0.0, 0.0))
    with pytest.raises(ValueError):
        Certificate("x", False, 1, 0.5, (0.0, 0.0))
    assert not Certificate("x", False, 1, 0.0, (0.0, 0.0)).passed


def test_polygon_margin_is_signed_distance():
    Q = build_region(RegionSpec("Qstar", d=3))
    # nearest edges to the origin are the two slanted ones, at distance 1/(4 sqrt 5)
    assert float(Q.margin(0.0, 0.0)) == pytest.approx(1 / (4 * math.sqrt(5)), abs=1e-15)
    assert float(Q.margin(0.25, 0.1)) == 0.0
    assert float(Q.margin(0.35, 0.1)) == pytest.approx(-0.1)
    assert Q.perimeter() == pytest.approx(2 * 0.25 + 2 * 0.125 + 2 * math.hypot(0.125, 0.25), abs=1e-15)
