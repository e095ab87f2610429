import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from rdattract.simplex import maximize


def test_textbook_problem():
    # max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
    res = maximize([3, 5], [[1, 0], [0, 2], [3, 2]], [4, 12, 18])
    assert res.status == "optimal"
    assert np.allclose(res.x, [2, 6]) and res.value == pytest.approx(36)


def test_infeasible_and_unbounded():
    assert maximize([1, 1], [[1, 1]], [1], [[1, 1]], [2]).status == "infeasible"
    assert maximize([1, 0], [[0, 1]], [1]).status == "unbounded"


def test_negative_rhs_and_redundant_equalities():
    # x + y >= 1 written as -x - y <= -1; duplicated equality row
    res = maximize([-1, -2], [[-1, -1]], [-1], [[1, -1], [2, -2]], [0, 0])
    assert res.status == "optimal"
    assert np.allclose(res.x, [0.5, 0.5])


def test_degenerate_cycling_example():
    # Beale's example cycles under the textbook rule; Bland's rule terminates
    c = [0.75, -150, 0.02, -6]
    A = [[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]]
    b = [0, 0, 1]
    res = maximize(c, A, b)
    assert res.status == "optimal"
    assert res.value == pytest.approx(0.05)


@given(seed=st.integers(0, 10**6), m=st.integers(1, 5), n=st.integers(1, 5), eq=st.booleans())
@settings(max_examples=80, deadline=None)
def test_agrees_with_scipy(seed, m, n, eq):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(m, n))
    b = rng.uniform(-1, 2, size=m)
    c = rng.normal(size=n)
    Aeq = np.ones((1, n)) if eq else None
    beq = np.array([1.0]) if eq else None
    ours = maximize(c, A, b, Aeq, beq)
    # presolve can report an unbounded problem as infeasible; the plain solve distinguishes them
    ref = linprog(-c, A_ub=A, b_ub=b, A_eq=Aeq, b_eq=beq, bounds=[(0, None)] * n, method="highs",
                  options={"presolve": False})
    status = {0: "optimal", 2: "infeasible", 3: "unbounded"}[ref.status]
    assert ours.status == status
    if status == "optimal":
        assert ours.value == pytest.approx(-ref.fun, abs=1e-8 * max(1, abs(ref.fun)))
        assert np.all(A @ ours.x <= b + 1e-8) and np.all(ours.x >= -1e-12)


def test_unbounded_case_with_explicit_ray():
    rng = np.random.default_rng(4)
    A, b, c = rng.normal(size=(3, 3)), rng.uniform(-1, 2, size=3), rng.normal(size=3)
    ray = np.array([1.0, 1.0, 0.0])
    assert np.all(A @ ray <= 0) and c @ ray > 0 and np.all(b >= 0)  # x = 0 feasible, ray improves
    assert maximize(c, A, b).status == "unbounded"
