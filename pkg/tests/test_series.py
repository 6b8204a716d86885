import math
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from secantlab.model_map import DomainError, ModelParams
from secantlab.series import (
    InsufficientData,
    ManifoldKind,
    OutOfRadius,
    PowerSeries,
    RadiusEstimate,
    SeriesOrderError,
    estimate_radius,
    eval_series,
    induced_dynamics,
    lattice_orders,
    solve_invariant,
)

STABLE, CENTER = ManifoldKind.STABLE, ManifoldKind.CENTER
CASES = [(1, 2), (1, 3), (1, 4), (1, 5), (-1, 3), (-1, 5)]


def test_solve_examples():
    s = solve_invariant(ModelParams(1, 2), STABLE, 3)
    assert (s[2], s[3]) == (2, 8)
    c = solve_invariant(ModelParams(1, 3), CENTER, 5)
    assert (c[3], c[5]) == (-8, -288)
    s = solve_invariant(ModelParams(-1, 3), STABLE, 5)
    assert (s[3], s[5]) == (-2, 12)


def test_solve_preconditions():
    with pytest.raises(DomainError):
        solve_invariant(ModelParams(2, 3), STABLE, 10)
    with pytest.raises(DomainError):
        solve_invariant(ModelParams(-1, 2), STABLE, 10)
    with pytest.raises(DomainError):
        solve_invariant(ModelParams(1, 5), STABLE, 4)
    with pytest.raises(ValueError):
        solve_invariant(ModelParams(1, 3), STABLE, 10, method="newton")


def test_access_beyond_order_is_an_error():
    s = solve_invariant(ModelParams(1, 2), STABLE, 10)
    with pytest.raises(SeriesOrderError):
        s[11]


def test_memory_budget_gives_partial_series():
    s = solve_invariant(ModelParams(1, 2), STABLE, 200, max_bits=64)
    assert not s.complete and 2 < s.N < 200


@pytest.mark.parametrize("a,d", CASES)
def test_closed_forms(a, d):
    s = solve_invariant(ModelParams(a, d), STABLE, 60)
    c = solve_invariant(ModelParams(a, d), CENTER, 60)
    assert (s[0], s[1], c[0], c[1]) == (0, 0, 0, 1)
    assert s[d] == 2 * a and s[2 * d - 1] == 4 * d
    assert c[d] == -a * 2**d and c[2 * d - 1] == -3 * d * 2 ** (2 * d - 1)


@pytest.mark.parametrize("a,d", CASES)
@pytest.mark.parametrize("kind", [STABLE, CENTER])
def test_gap_structure(a, d, kind):
    s = solve_invariant(ModelParams(a, d), kind, 60)
    allowed = set(lattice_orders(d, 60))
    for n in range(2, 61):
        if n not in allowed:
            assert s[n] == 0, n
    assert all(isinstance(c, Fraction) for c in s.coefficients)


@pytest.mark.parametrize("d", [2, 4])
def test_positivity_even(d):
    s = solve_invariant(ModelParams(1, d), STABLE, 60)
    assert all(c >= 0 for c in s.coefficients)
    assert all(s[n] > 0 for n in lattice_orders(d, 60))


@pytest.mark.parametrize("a,d", CASES)
@pytest.mark.parametrize("kind", [STABLE, CENTER])
def test_ring_and_recurrence_agree(a, d, kind):
    N = 25
    P = ModelParams(a, d)
    assert solve_invariant(P, kind, N, "ring") == solve_invariant(P, kind, N, "recurrence")


def _sympy_center_dynamics(d, N):
    # independent oracle: undetermined coefficients on the full graph, no lattice assumptions
    x, c = sympy.symbols("x c")
    phi = x
    for n in range(2, N + 1):
        trial = phi + c * x**n
        u = trial - (x + trial) ** d
        v = trial - 2 * (x + trial) ** d
        eq = sympy.expand(trial.subs(x, u) - v)
        phi = phi + sympy.solve(eq.coeff(x, n), c)[0] * x**n
    R = sympy.expand(phi - (x + phi) ** d)
    return [R.coeff(x, n) for n in range(N + 1)]


def test_center_dynamics_against_sympy():
    d = 3
    ref = _sympy_center_dynamics(d, 5)
    c = solve_invariant(ModelParams(1, d), CENTER, 5)
    R = induced_dynamics(ModelParams(1, d), c, CENTER)
    assert [R[n] for n in range(4)] == [Fraction(int(v)) for v in ref[:4]]
    assert R[3] == -(2 ** (d + 1)) == -16


@pytest.mark.parametrize("d", [3, 5, 7])
def test_center_dynamics_constant(d):
    c = solve_invariant(ModelParams(1, d), CENTER, d)
    R = induced_dynamics(ModelParams(1, d), c, CENTER)
    assert R[1] == 1 and R[d] == -(2 ** (d + 1))
    assert all(R[n] == 0 for n in range(2, d))


@pytest.mark.parametrize("a,d", [(1, 2), (-1, 3), (1, 3), (1, 4)])
def test_stable_dynamics_leading_term(a, d):
    s = solve_invariant(ModelParams(a, d), STABLE, 2 * d)
    R = induced_dynamics(ModelParams(a, d), s, STABLE)
    assert [R[n] for n in range(d)] == [0] * d
    assert R[d] == a
    assert all(R[n] == 0 for n in range(d + 1, 2 * d - 1))


def _poly_eval(cs, x):
    r = Fraction(0)
    for c in reversed(cs):
        r = r * x + c
    return r


@pytest.mark.parametrize("a,d,kind", [(1, 2, STABLE), (-1, 3, STABLE), (1, 3, CENTER)])
def test_invariance_residual_slope(a, d, kind):
    N = 16
    P = ModelParams(a, d)
    phi = solve_invariant(P, kind, N)
    R = induced_dynamics(P, phi, kind)
    logs = []
    for k in range(7, 13):
        x = Fraction(1, 2**k)
        f = _poly_eval(phi.coefficients, x)
        s = (x + f) ** d
        X, Y = f - a * s, f - 2 * a * s
        r = _poly_eval(R.coefficients, x)
        defect = max(abs(X - r), abs(Y - _poly_eval(phi.coefficients, r)))
        logs.append((math.log(float(x)), math.log(float(defect))))
    slope = float(np.polyfit(*zip(*logs), 1)[0])
    assert slope >= N + 1 - 0.2


@pytest.mark.parametrize("d", [2, 4])
def test_symmetry_even(d):
    s = solve_invariant(ModelParams(1, d), STABLE, 40)
    x = PowerSeries([0, 1] + [0] * 39)
    inner = -x - 2 * s
    assert s.compose(inner) == s


def test_radius_geometric_calibration():
    r = estimate_radius(PowerSeries([1] * 80))
    assert r.point_estimate == pytest.approx(1, abs=1e-6)
    r = estimate_radius(PowerSeries([Fraction(3, 1) ** n for n in range(80)]))
    assert r.point_estimate == pytest.approx(1 / 3, abs=1e-6)


def test_radius_needs_data():
    with pytest.raises(InsufficientData):
        estimate_radius(solve_invariant(ModelParams(1, 2), STABLE, 40))


def test_radius_bracket_validation():
    with pytest.raises(ValueError):
        RadiusEstimate(0.2, 0.1, 0.3)


def test_radius_d2():
    r = estimate_radius(solve_invariant(ModelParams(1, 2), STABLE, 400))
    assert 0 < r.lower <= r.upper < 1 / 8
    assert r.upper - r.lower < 1e-3


def test_radius_d4():
    r = estimate_radius(solve_invariant(ModelParams(1, 4), STABLE, 200))
    assert 0 < r.lower <= r.upper < 0.375


def test_eval_examples():
    s = solve_invariant(ModelParams(1, 2), STABLE, 50)
    assert eval_series(s, 0.0) == (0.0, 0.0)
    value, tail = eval_series(s, 0.05)
    exact = _poly_eval(s.coefficients, Fraction(1, 20))
    assert abs(value - float(exact)) < 1e-15
    assert 0 <= tail < 1e-12
    assert value == pytest.approx(0.006, abs=5e-4)


def test_eval_out_of_radius():
    for N in (60, 400):
        with pytest.raises(OutOfRadius):
            eval_series(solve_invariant(ModelParams(1, 2), STABLE, N), 0.2)
    s = solve_invariant(ModelParams(1, 2), STABLE, 50).with_radius(RadiusEstimate(0.1, 0.11, 0.12))
    with pytest.raises(OutOfRadius):
        eval_series(s, 0.2)


def test_csv_dump():
    text = solve_invariant(ModelParams(1, 3), STABLE, 10).to_csv()
    rows = text.splitlines()
    assert rows[0] == "n,numerator,denominator,float"
    assert "3,2,1,2.0" in rows and "5,12,1,12.0" in rows


coeffs = st.lists(st.fractions(min_value=-5, max_value=5, max_denominator=9), min_size=2, max_size=8)


@settings(max_examples=60, deadline=None)
@given(coeffs, coeffs, coeffs)
def test_series_ring_laws(a, b, c):
    A, B, C = PowerSeries(a), PowerSeries(b), PowerSeries(c)
    n = min(A.N, B.N, C.N)
    A, B, C = A.truncate(n), B.truncate(n), C.truncate(n)
    assert A * (B + C) == A * B + A * C
    assert (A * B) * C == A * (B * C)
    inner = PowerSeries([0, *b[1:]]).truncate(n)
    assert (A + B).compose(inner) == A.compose(inner) + B.compose(inner)
