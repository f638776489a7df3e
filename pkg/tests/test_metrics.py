import pytest
from hypothesis import given
from hypothesis import strategies as st

from clockplan.measurements import ClockConfig, Totals
from clockplan.metrics import Goal, Objective, compare, edp, waste_score

pos = st.floats(1e-3, 1e3, allow_nan=False, allow_infinity=False)

BASE = Totals(2.0, 400.0)


def test_edp_examples():
    assert edp(Totals(2.0, 300.0)) == 600.0
    assert edp(Totals(1.0, 1.0)) == 1.0
    t, e = 1.7, 230.0
    assert edp(Totals(2 * t, e)) == edp(Totals(t, 2 * e))


@given(pos, pos, pos)
def test_edp_scale_symmetry(t, e, alpha):
    assert edp(Totals(alpha * t, e)) == pytest.approx(edp(Totals(t, alpha * e)), rel=1e-12)


def test_waste_score_examples():
    assert waste_score(BASE, BASE, 0.0).energy_saved == 0.0
    assert waste_score(BASE, BASE, 0.0).feasible

    s = waste_score(Totals(0.999 * BASE.time, 0.85 * BASE.energy), BASE, 0.0)
    assert s.feasible
    assert s.energy_saved == pytest.approx(0.15 * BASE.energy, rel=1e-12)

    slow = Totals(1.05 * BASE.time, 0.70 * BASE.energy)
    assert not waste_score(slow, BASE, 0.0).feasible
    assert waste_score(slow, BASE, 0.0).energy_saved == pytest.approx(0.30 * BASE.energy, rel=1e-12)
    assert waste_score(slow, BASE, 0.05).feasible


@given(pos, pos, st.floats(0, 1), st.floats(0, 1))
def test_feasibility_monotone_in_threshold(t, e, th1, extra):
    totals = Totals(t, e)
    base = Totals(1.0, 1.0)
    if waste_score(totals, base, th1).feasible:
        assert waste_score(totals, base, th1 + extra).feasible


def test_compare_edp():
    assert compare(Totals(1.0, 600.0), Totals(2.0, 290.0), Objective.edp(), BASE) == 1


def test_compare_waste_breaks_edp_tie():
    tb, eb = BASE.time, BASE.energy
    half_energy = Totals(tb, 0.5 * eb)
    slow_quarter = Totals(2 * tb, 0.25 * eb)
    # EDP scores these two equally...
    assert edp(half_energy) == edp(slow_quarter)
    # ...waste does not.
    assert compare(half_energy, slow_quarter, Objective.waste(0.0), BASE) == -1


def test_compare_tie_prefers_lower_time_then_clock_vector():
    a, b = Totals(1.0, 300.0), Totals(1.5, 200.0)
    # Equal EDP (300): lower time wins.
    assert compare(a, b, Objective.edp(), BASE) == -1
    same = Totals(1.0, 100.0)
    assert compare(same, same, Objective.waste(0.0), BASE) == 0
    lo, hi = [ClockConfig("auto", "auto")], [ClockConfig(9501, 1050)]
    assert compare(same, same, Objective.waste(0.0), BASE, lo, hi) == -1


@given(pos, pos, pos, pos, st.floats(0, 0.5))
def test_waste_never_prefers_infeasible(t1, e1, t2, e2, theta):
    base = Totals(10.0, 100.0)
    a, b = Totals(t1, e1), Totals(t2, e2)
    fa = waste_score(a, base, theta).feasible
    fb = waste_score(b, base, theta).feasible
    c = compare(a, b, Objective.waste(theta), base)
    if fa and not fb:
        assert c == -1
    if fb and not fa:
        assert c == 1


@given(pos, pos, pos, pos, st.floats(0.01, 100))
def test_waste_ordering_invariant_to_energy_rescaling(t1, e1, t2, e2, k):
    base = Totals(10.0, 100.0)
    obj = Objective.waste(0.1)
    before = compare(Totals(t1, e1), Totals(t2, e2), obj, base)
    after = compare(Totals(t1, k * e1), Totals(t2, k * e2), obj, Totals(base.time, k * base.energy))
    if e1 != e2 and abs(e1 - e2) > 1e-9 * max(e1, e2):
        assert before == after


def test_objective_validation():
    with pytest.raises(ValueError):
        Objective.waste(-0.1)
    assert Objective("edp").kind is Goal.EDP
    assert Objective.waste(0.05).time_budget(Totals(2.0, 1.0)) == pytest.approx(2.1)
