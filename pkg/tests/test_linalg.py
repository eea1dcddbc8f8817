import random

import pytest
from mpmath import mpf

from commdiff.errors import ConvergenceError, RankDeficiencyError
from commdiff.linalg import damped_newton, lstsq, require_full_rank


def test_lstsq_square_exact():
    rows = [[mpf(2), mpf(1)], [mpf(1), mpf(3)]]
    rhs = [mpf(5), mpf(10)]
    x, info = lstsq(rows, rhs)
    assert info["rank"] == 2
    assert abs(x[0] - 1) <= mpf("1e-30")
    assert abs(x[1] - 3) <= mpf("1e-30")
    assert info["resid_inf"] <= mpf("1e-30")


def test_lstsq_overdetermined_consistent():
    rng = random.Random(2)
    xs = [mpf(rng.uniform(-2, 2)) for _ in range(3)]
    rows, rhs = [], []
    for _ in range(12):
        row = [mpf(rng.uniform(-4, 4)) for _ in range(3)]
        rows.append(row)
        rhs.append(sum(r * x for r, x in zip(row, xs)))
    x, info = lstsq(rows, rhs)
    assert max(abs(a - b) for a, b in zip(x, xs)) <= mpf("1e-28")


def test_lstsq_rank_deficiency_detected():
    rows = [[mpf(1), mpf(2)], [mpf(2), mpf(4)], [mpf(3), mpf(6)]]
    x, info = lstsq(rows, [mpf(1), mpf(2), mpf(3)])
    assert info["rank"] == 1
    with pytest.raises(RankDeficiencyError):
        require_full_rank(info)


def test_lstsq_badly_scaled_columns():
    # column scales spanning ~24 digits stay within the 113-bit significand;
    # equilibration keeps the small-column solution accurate
    rows, rhs = [], []
    rng = random.Random(9)
    for _ in range(8):
        a, b = mpf(rng.uniform(-1, 1)), mpf(rng.uniform(-1, 1))
        rows.append([a * mpf("1e12"), b * mpf("1e-12")])
        rhs.append(a * mpf("1e12") * 3 + b * mpf("1e-12") * 5)
    x, info = lstsq(rows, rhs)
    assert abs(x[0] - 3) <= mpf("1e-8")
    assert abs(x[1] - 5) <= mpf("1e-8")


def test_damped_newton_converges():
    # intersection of a circle and a parabola
    def fun(v):
        x, y = v
        return [x * x + y * y - 4, y - x * x]

    x, info = damped_newton(fun, [mpf(1), mpf(1)], target_inf=mpf("1e-25"))
    assert info["resid_inf"] <= mpf("1e-25")
    assert abs(x[0] ** 2 + x[1] ** 2 - 4) <= mpf("1e-24")


def test_damped_newton_domain_guard():
    # None outside the domain forces the line search to shrink, not crash
    from mpmath import sqrt

    def fun(v):
        (x,) = v
        if x <= 0:
            return None
        return [sqrt(x) - 2]

    x, info = damped_newton(fun, [mpf(1)], target_inf=mpf("1e-20"))
    assert abs(x[0] - 4) <= mpf("1e-18")


def test_damped_newton_reports_stall():
    def fun(v):
        (x,) = v
        return [x * x + 1]  # no real solution

    with pytest.raises(ConvergenceError):
        damped_newton(fun, [mpf(1)], max_iter=25, target_inf=mpf("1e-20"))
