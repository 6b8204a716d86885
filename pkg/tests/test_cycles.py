import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from secantlab.cycles import CSV_HEADER, cycle_multiplier, two_cycle_data, verify_periodic
from secantlab.model_map import DomainError, ModelParams

ODD = list(range(3, 42, 2))
R13 = math.sqrt(13)


def test_d3_examples():
    c = two_cycle_data(3)
    assert c.multiplier == ((21, 16), (48, 37))
    assert c.lambda_plus == pytest.approx(29 + 8 * R13, abs=1e-12)
    assert c.lambda_minus == pytest.approx(29 - 8 * R13, abs=1e-12)
    assert c.m_plus == pytest.approx(6 / (R13 - 1), abs=1e-12)
    assert c.m_minus == pytest.approx(-6 / (1 + R13), abs=1e-12)
    assert round(c.m_plus, 4) == 2.3028 and round(c.m_minus, 4) == -1.3028
    assert round(c.lambda_plus, 4) == 57.8444


@pytest.mark.parametrize("d", [2, 4, 1, -3])
def test_domain(d):
    with pytest.raises(DomainError):
        two_cycle_data(d)


@pytest.mark.parametrize("d", ODD)
def test_invariants(d):
    c = two_cycle_data(d)
    (p, q), (r, s) = c.multiplier
    det, tr = p * s - q * r, p + s
    assert c.lambda_plus * c.lambda_minus == pytest.approx(det, rel=1e-10)
    assert c.lambda_plus + c.lambda_minus == pytest.approx(tr, rel=1e-10)
    assert 1 / 9 < c.lambda_minus <= 29 - 8 * R13 + 1e-12
    assert c.lambda_plus >= 29 + 8 * R13 - 1e-12
    assert -6 / (1 + R13) - 1e-12 <= c.m_minus < -1
    assert 2 < c.m_plus <= 6 / (R13 - 1) + 1e-12


@pytest.mark.parametrize("d", ODD)
def test_eigenvectors(d):
    c = two_cycle_data(d)
    M = np.array(c.multiplier, dtype=float)
    for lam, m in ((c.lambda_plus, c.m_plus), (c.lambda_minus, c.m_minus)):
        v = np.array([1.0, m])
        assert np.linalg.norm(M @ v - lam * v) <= 1e-10 * np.linalg.norm(M) * np.linalg.norm(v)
    # numeric solver as an independent check of the closed forms
    ev = sorted(np.linalg.eigvals(M).real)
    assert ev == pytest.approx([c.lambda_minus, c.lambda_plus], rel=1e-9)


@pytest.mark.parametrize("d", ODD)
def test_multiplier_matches_jacobians(d):
    P = ModelParams(1, d)
    c = two_cycle_data(d)
    assert cycle_multiplier(P, [(0, 1), (0, -1)]) == c.multiplier


def test_monotone_scans_and_limits():
    data = [two_cycle_data(d) for d in ODD]
    lm = [c.lambda_minus for c in data]
    lp = [c.lambda_plus for c in data]
    mm = [c.m_minus for c in data]
    mp = [c.m_plus for c in data]
    assert all(a > b for a, b in zip(lm, lm[1:]))
    assert all(a < b for a, b in zip(lp, lp[1:]))
    assert all(a < b for a, b in zip(mm, mm[1:]))
    assert all(a > b for a, b in zip(mp, mp[1:]))
    gaps = [v - 1 / 9 for v in lm]
    assert all(g > 0 for g in gaps) and gaps[-1] < 0.02
    gaps = [v + 1 for v in mm]
    assert all(g < 0 for g in gaps) and abs(gaps[-1]) < 0.02


def test_verify_periodic_examples():
    assert verify_periodic(ModelParams(1, 5), [(0, 1), (0, -1)], 2) == 0
    assert verify_periodic(ModelParams(1, 2), [(0, 0)], 1) == 0
    # T(0.1, 0.1) = (0.1 - 0.008, 0.1 - 0.016) for d = 3
    r = verify_periodic(ModelParams(1, 3), [(0.1, 0.1)], 1)
    assert r == pytest.approx(math.hypot(0.008, 0.016), rel=1e-12)
    with pytest.raises(DomainError):
        verify_periodic(ModelParams(1, 3), [(0, 1)], 2)


def test_csv_row():
    c = two_cycle_data(3)
    row = c.csv_row().split(",")
    assert CSV_HEADER.split(",") == ["d", "lambda_minus", "lambda_plus", "m_minus", "m_plus"]
    assert row[0] == "3" and float(row[2]) == c.lambda_plus


@given(st.sampled_from(ODD))
def test_cycle_is_periodic(d):
    assert verify_periodic(ModelParams(1, d), [(0, 1), (0, -1)], 2) == 0
    assert verify_periodic(ModelParams(1, d), [(0, -1), (0, 1)], 2) == 0
