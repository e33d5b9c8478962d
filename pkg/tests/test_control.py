import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quenchqns.control import (PeriodicNvPlan, PulseSequence, QuenchSchedule, build_nv_plan,
                               check_balanced, cpmg, filter_freq, filter_freq_closed, filter_time,
                               hahn, nv_filter_closed, nv_quench_closed, plan_from_config,
                               quench_freq, ramsey, sequence_from_config, step_schedule,
                               validate_symmetry)
from quenchqns.quadrature import integrate


def test_filter_time_hahn():
    s = hahn(2.0)
    assert filter_time(s, 0.5) == 1
    assert filter_time(s, 1.5) == -1
    assert filter_time(s, 3.0) == 0
    assert filter_time(ramsey(1.0), -0.1) == 0


def test_filter_freq_zero_limits():
    assert filter_freq(ramsey(3.0), 0.0) == pytest.approx(3.0)
    assert abs(filter_freq(hahn(3.0), 0.0)) < 1e-15


def test_hahn_at_full_period():
    t = 2.0
    w = 2 * math.pi / t
    assert filter_freq(hahn(t), w) == pytest.approx(4j / w, abs=1e-13)
    assert abs(filter_freq(hahn(t), w)) ** 2 == pytest.approx(16 / w ** 2)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 0.99), min_size=0, max_size=6, unique=True),
       st.floats(0.1, 30.0), st.floats(-40.0, 40.0).filter(lambda v: abs(v) > 1e-3))
def test_segment_sum_matches_closed_form(pulses, t_f, w):
    pulses = sorted(pulses)
    if any(b - a < 1e-6 for a, b in zip(pulses, pulses[1:])):
        return
    seq = PulseSequence(tuple(pulses), t_f)
    a = filter_freq(seq, w)
    b = filter_freq_closed(seq, w)
    assert abs(a - b) <= 1e-10 * (abs(b) + (2 * len(pulses) + 2) / abs(w))
    assert filter_freq(seq, -w) == pytest.approx(np.conj(a), abs=1e-12)


def test_invalid_sequences():
    with pytest.raises(ValueError):
        PulseSequence((0.5, 0.3), 1.0)
    with pytest.raises(ValueError):
        PulseSequence((0.5,), -1.0)
    with pytest.raises(ValueError):
        PulseSequence((1.0,), 1.0)


def test_balanced():
    assert check_balanced(hahn(1.0))
    assert not check_balanced(ramsey(1.0))
    assert check_balanced(cpmg(4, 1.0))


@pytest.mark.parametrize("seq", [hahn(3.0), cpmg(4, 3.0)])
def test_parseval(seq):
    # int F(t)^2 dt = t_f for +-1 filters
    r = integrate(lambda w: np.abs(seq.ft(w)) ** 2, 0.0, 4e4, cap=np.pi / (4 * seq.t_f))
    assert r.value / np.pi == pytest.approx(seq.t_f, rel=1e-4)


def test_quench_transforms():
    assert quench_freq(step_schedule(2.5), 0.0) == pytest.approx(2.5)
    assert quench_freq(QuenchSchedule(()), 1.3) == 0
    s = step_schedule(1.0)
    assert s.flipped().beta_V == -0.5 and s.flipped().initial_state == "up"
    with pytest.raises(ValueError):
        QuenchSchedule(((0, 1, 2),))


def test_nv_plan_structure():
    p = build_nv_plan(1, 1.0)
    assert p.sequence.fractions == pytest.approx((0.25, 0.75))
    assert p.schedule.segments == ((0.0, 1.0, -1), (1.0, 2.0, 1))
    assert abs(p.filter_ft(0.0)) < 1e-14
    assert p.omega0 == pytest.approx(math.pi)


def test_nv_closed_forms(rng):
    for M in (1, 2, 5, 16):
        p = build_nv_plan(M, 0.7)
        w = rng.uniform(0.01, 60, 1000)
        for built, closed in ((p.filter_ft(w), nv_filter_closed(p, w)),
                              (p.quench_ft(w), nv_quench_closed(p, w)),
                              (p.sequence.ft(w), nv_filter_closed(p, w)),
                              (p.schedule.ft(w), nv_quench_closed(p, w))):
            scale = np.abs(closed) + 4 / w
            assert np.max(np.abs(built - closed) / scale) < 1e-10


@pytest.mark.parametrize("M", [1, 2])
def test_nv_filter_example(M):
    p = build_nv_plan(M, 1.0)
    w = math.pi / p.t_f
    closed = -(4 / w) * cmath.exp(0.5j * math.pi) * math.sin(math.pi / 2) \
        * math.sin(math.pi / (8 * M)) ** 2 / math.cos(math.pi / (4 * M))
    assert p.filter_ft(w) == pytest.approx(closed, abs=1e-12)


def test_symmetry_validation():
    sF, se = validate_symmetry(build_nv_plan(3, 1.0))
    assert sF == -se
    bad = PeriodicNvPlan(2, 1.0, base_quench=((0.0, 0.3, -1), (0.3, 1.0, 1)))
    with pytest.raises(ValueError, match="reconstruction conditions violated"):
        validate_symmetry(bad)


def test_configs():
    assert sequence_from_config("hahn", 2.0).fractions == (0.5,)
    assert sequence_from_config("cpmg:2", 1.0).fractions == pytest.approx((0.25, 0.75))
    assert sequence_from_config({"pulses": [0.2, 0.6]}).fractions == (0.2, 0.6)
    assert sequence_from_config("Ramsey").L == 0
    with pytest.raises(ValueError):
        sequence_from_config("xy8")
    with pytest.raises(KeyError):
        sequence_from_config({"pulses": [0.5], "phase": 1})
    assert plan_from_config({"M": 4, "T": 2.0}).t_f == 16.0
    with pytest.raises(KeyError):
        plan_from_config({"M": 4, "T": 2.0, "N": 1})
