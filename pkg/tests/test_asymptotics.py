import math

import numpy as np
import pytest

from quenchqns.asymptotics import (AsymptoticLaw, asymptotic_qps, asymptotic_zeta,
                                   coeff_phi, coeff_phi_hahn, coeff_zeta, coeff_zeta_hahn,
                                   coefficient_table, dephasing_law, hahn_qps_exp_cutoff_s52,
                                   ohmic_plateau, qps_law)
from quenchqns.bath import FreeformNoise, SpectralModel
from quenchqns.control import cpmg, hahn, ramsey
from quenchqns.dynamics import dephasing, qps_static


def test_hahn_zeta_limits():
    assert coeff_zeta_hahn(0.0) == pytest.approx(0.5, abs=1e-14)
    assert coeff_zeta_hahn(-1.0) == pytest.approx(0.1103178, rel=1e-6)
    assert coeff_zeta_hahn(-2.0) == pytest.approx(1 / 24, rel=1e-10)


def test_hahn_phi_values():
    assert coeff_phi_hahn(1.0) == pytest.approx(0.5, abs=1e-14)
    closed = (1 - math.sqrt(2)) * (-2 * math.sqrt(math.pi)) * math.cos(math.pi / 4) / math.pi
    assert coeff_phi_hahn(0.5) == pytest.approx(closed, rel=1e-13)
    assert coeff_phi_hahn(0.5) == pytest.approx(0.33047, abs=1e-4)
    assert coeff_phi_hahn(1.5) == pytest.approx(0.7294369, rel=1e-6)
    assert coeff_phi_hahn(1.5) == pytest.approx(0.72945, abs=1e-4)
    assert coeff_phi_hahn(-1.0) == pytest.approx(0.125, rel=1e-12)


@pytest.mark.parametrize("p0", [-2.0, -1.0, 0.0])
def test_continuity_zeta(p0):
    for seq in (hahn(1.0), cpmg(3, 1.0)):
        c = coeff_zeta(p0, seq)
        assert abs(coeff_zeta(p0 + 1e-6, seq) - c) < 1e-4
        assert abs(coeff_zeta(p0 - 1e-6, seq) - c) < 1e-4


@pytest.mark.parametrize("s0", [-1.0, 0.0, 1.0])
def test_continuity_phi(s0):
    c = coeff_phi(s0, cpmg(2, 1.0))
    assert abs(coeff_phi(s0 + 1e-6, cpmg(2, 1.0)) - c) < 1e-4


def test_windows_and_balance():
    with pytest.raises(ValueError, match="cutoff-dependent"):
        coeff_phi(2.5, hahn(1.0))
    with pytest.raises(ValueError, match="cutoff-dependent"):
        coeff_zeta(1.2, hahn(1.0))
    with pytest.raises(ValueError, match="unbalanced"):
        coeff_phi(1.0, ramsey(1.0))
    with pytest.raises(ValueError):
        AsymptoticLaw("qps", 2.5, 1.0, 1.0)
    with pytest.raises(ValueError):
        AsymptoticLaw("noise", 0.5, 1.0, 1.0)


def test_hahn_p_minus_one_by_fit():
    # zeta ~ C t^2 for p = -1: fit against quadrature
    noise = FreeformNoise(-1.0, 1e-3, 1.0, "gaussian")
    t = np.array([200.0, 400.0])
    z = np.array([dephasing(hahn(x), noise) for x in t])
    assert z[1] / z[0] == pytest.approx(4.0, rel=2e-2)
    assert z[1] / (1e-3 * t[1] ** 2) == pytest.approx(coeff_zeta_hahn(-1.0), rel=2e-2)


def test_law_evaluation():
    m = SpectralModel(0.5, 0.1, 1.0)
    law = qps_law(hahn(1.0), m)
    assert asymptotic_qps(law, 4.0) == pytest.approx(2 * asymptotic_qps(law, 1.0))
    flat = qps_law(hahn(1.0), SpectralModel(1.0, 0.1, 1.0))
    assert asymptotic_qps(flat, 10.0) == asymptotic_qps(flat, 1e4)
    with pytest.raises(ValueError):
        asymptotic_zeta(law, 1.0)
    d = dephasing_law(hahn(1.0), 0.0, 0.02)
    assert asymptotic_zeta(d, 100.0) == pytest.approx(1.0)


@pytest.mark.parametrize("s", [0.5, 1.5])
def test_law_matches_quadrature(s):
    m = SpectralModel(s, 0.1, 1.0)
    law = qps_law(hahn(1.0), m)
    assert qps_static(hahn(500.0), m) == pytest.approx(asymptotic_qps(law, 500.0), rel=2e-2)


def test_cpmg_coefficient_against_quadrature():
    m = SpectralModel(0.5, 0.1, 1.0)
    law = qps_law(cpmg(4, 1.0), m)
    assert qps_static(cpmg(4, 400.0), m) == pytest.approx(asymptotic_qps(law, 400.0), rel=1e-2)


def test_ohmic_plateau():
    m = SpectralModel(1.0, 0.1, 1.0)
    assert ohmic_plateau(m, 0.0) == pytest.approx(0.05, rel=1e-12)
    t = 7.0
    assert ohmic_plateau(m, t) == pytest.approx(0.05 + 0.5 * t * (-0.1 / math.sqrt(math.pi)), rel=1e-8)
    assert ohmic_plateau(SpectralModel(1.0, 0.0, 1.0), 0.0) == 0.0
    with pytest.raises(ValueError):
        ohmic_plateau(SpectralModel(0.5, 0.1, 1.0), 0.0)


@pytest.mark.parametrize("x", [1.0, 10.0, 100.0])
def test_s52_closed_form(x):
    m = SpectralModel(2.5, 0.1, 1.0, "exponential")
    assert qps_static(hahn(x), m) == pytest.approx(hahn_qps_exp_cutoff_s52(0.1, 1.0, x), rel=1e-6)


def test_s52_decay_and_zero():
    t = np.geomspace(1e4, 1e6, 10)
    v = [hahn_qps_exp_cutoff_s52(0.1, 1.0, x) for x in t]
    slope = np.polyfit(np.log(t), np.log(np.abs(v)), 1)[0]
    assert slope == pytest.approx(-1.5, abs=0.02)
    assert hahn_qps_exp_cutoff_s52(0.0, 1.0, 5.0) == 0.0


def test_step_cutoff_oscillates():
    step = SpectralModel(2.5, 0.1, 1.0, "step")
    expo = SpectralModel(2.5, 0.1, 1.0, "exponential")
    t = np.linspace(100, 200, 201)
    a = [qps_static(hahn(x), step) for x in t]
    b = [qps_static(hahn(x), expo) for x in t]
    assert np.ptp(a) > 10 * np.ptp(b)


def test_table():
    rows = coefficient_table([0.0, 2.0], [1.0, 3.0], hahn(1.0))
    assert rows == [("zeta", 0.0, pytest.approx(0.5)), ("phi", 1.0, pytest.approx(0.5))]
