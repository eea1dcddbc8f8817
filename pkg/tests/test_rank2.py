from mpmath import mpf

from commdiff.opalg import commutator_scale, op_commutator
from commdiff.rank2 import (
    Rank2Params,
    build_l4,
    build_l6_special,
    expected_curve_poly,
    verify_rank2,
)
from commdiff.spectral import rank2_curve_check

WIN = (-28, 28)


def test_l4_coefficient_values():
    p = Rank2Params(1, 1, 1)
    L4 = build_l4(p, WIN)
    assert L4.coeff(3).at(0) == 1  # a0 at n = 0
    p2 = Rank2Params(2, 0, 0)
    L42 = build_l4(p2, WIN)
    assert L42.coeff(3).at(1) == 2
    assert L42.is_monic() and L42.order == 4


def test_l4_degenerate_parameters():
    L4 = build_l4(Rank2Params(0, 0, 0), WIN)
    # all sub-leading coefficients vanish: pure fourth-power shift
    for j in range(4):
        assert L4.coeff(j).sup_norm() == 0


def test_l6_coefficient_values():
    L6 = build_l6_special(WIN)
    assert L6.coeff(5).at(0) == 8
    assert L6.coeff(0).at(0) == 0
    assert L6.is_monic() and L6.order == 6


def test_expected_curve_specialized():
    # at (2, 0, 0) the curve polynomial collapses to z^2 (z + 9/4)
    r = expected_curve_poly(Rank2Params(2, 0, 0))
    assert abs(r.coeff(3) - 1) <= mpf("1e-30")
    assert abs(r.coeff(2) - mpf(9) / 4) <= mpf("1e-30")
    assert abs(r.coeff(1)) + abs(r.coeff(0)) <= mpf("1e-30")
    # value at z = 1: (1/262144) * 32^2 * (256 + 576)
    assert abs(r.eval(1) - mpf(851968) / 262144) <= mpf("1e-28")


def test_pair_commutes():
    L4 = build_l4(Rank2Params(2, 0, 0), WIN)
    L6 = build_l6_special(WIN)
    rel = op_commutator(L4, L6).sup_norm() / commutator_scale(L4, L6)
    assert rel <= mpf("1e-10")


def test_char_poly_squared_structure():
    L4 = build_l4(Rank2Params(2, 0, 0), WIN)
    L6 = build_l6_special(WIN)
    r = expected_curve_poly(Rank2Params(2, 0, 0))
    report = rank2_curve_check(L4, L6, r, n0=0)
    assert report.mismatch_rel <= mpf("1e-7")
    # constant term of the characteristic polynomial is R(0)^2
    assert abs(report.char_polys[0].coeff(0) - r.eval(0) ** 2) <= mpf("1e-7")


def test_verify_rank2_report():
    report = verify_rank2()
    assert report["commutation_pass"]
    assert report["curve_pass"]
