import random
from fractions import Fraction as F

import pytest

import gen
from bmsgame.geometry import HPolytope, box
from bmsgame.model import Mode, Problem, System
from bmsgame.safety import (Falsifier, FalsifierError, bms_safe, bms_safe_2d,
                            cms_safe, static_schedulable, verify_falsifier,
                            verify_verdict)

h = F(1, 2)
EX2 = System.from_rates([[(-h, 1), (h, 1)], [(-h, -1), (h, -1)]])
EX4 = System.from_rates([[(0, 1), (0, F(3, 2))], [(0, -1), (0, F(-3, 2))]])
FIG4 = HPolytope(((-1, 0), (0, -1), (1, 0), (1, 1)), (2, 2, 1, 0))
SQ = box([0, 0], [1, 1])


def test_cms_opposite_rates():
    v = cms_safe([(0, 1), (0, -1)])
    assert v.safe and v.witness == (h, h)


def test_cms_green_witness():
    v = cms_safe([(2, 2), (2, -2), (-2, 2)])
    assert v.safe and v.witness == (0, h, h)


def test_cms_single_rate():
    v = cms_safe([(1, 0)])
    assert not v.safe and v.push == (1, 0)


def test_cms_zero_rate_is_safe():
    assert cms_safe([(0, 0)]).safe


def test_bms_example2():
    v = bms_safe(EX2)
    assert not v.safe
    assert v.rates == ((h, 1), (h, -1))
    assert v.instance == (1, 1)
    assert v.push == (1, 0)


def test_bms_example4_all_instances():
    v = bms_safe(EX4)
    assert v.safe and len(v.witnesses) == 4
    assert verify_verdict(EX4, v)


def test_hull_containing_zero_does_not_save():
    s = System.from_rates([[(-1, 0), (1, 0)]])
    v = bms_safe(s)
    assert not v.safe and v.rates == ((1, 0),)


def test_parallel_matches_serial():
    rng = random.Random(3)
    for _ in range(4):
        s = gen.random_system(rng, 2, max_modes=4, max_verts=3)
        a, b = bms_safe(s), bms_safe(s, jobs=2)
        assert a == b


def test_planar_fig6_left():
    s = System.from_rates([[(1, -1)], [(2, -2)], [(2, 1)], [(h, 2)]])
    v = bms_safe_2d(s)
    assert not v.safe
    assert v.perpendicular == ((1, -1), (1, 1))
    assert verify_verdict(s, v)


def test_planar_fig6_right():
    s = System.from_rates([[(1, 1)], [(-1, 1)], [(0, -1)]])
    assert bms_safe_2d(s).safe and bms_safe(s).safe


def test_planar_example4_agrees():
    assert bms_safe_2d(EX4).safe == bms_safe(EX4).safe is True


def test_planar_collinear_rates_use_r_perp():
    s = System.from_rates([[(1, 1)], [(2, 2)]])
    v = bms_safe_2d(s)
    assert not v.safe and verify_verdict(s, v)


def test_planar_skips_zero_and_rejects_3d():
    assert bms_safe_2d(System.from_rates([[(0, 0)]])).safe
    with pytest.raises(ValueError):
        bms_safe_2d(System.from_rates([[(1, 0, 0)]]))


def test_planar_oracle_sample():
    for s in gen.systems_2d(150, seed=11):
        a, b = bms_safe(s), bms_safe_2d(s)
        assert a.safe == b.safe
        assert verify_verdict(s, a) and verify_verdict(s, b)


def ex2_falsifier(push=(1, 0)):
    return Falsifier(frozenset(), {}, {"m1": (h, 1), "m2": (h, -1)}, push)


def test_falsifier_example2():
    p = Problem(EX2, FIG4, (-1, -h))
    assert verify_falsifier(p, ex2_falsifier())
    assert not verify_falsifier(p, ex2_falsifier(push=(0, 1)))


def test_falsifier_external_on_left_edge():
    p = Problem(System.from_rates([[(-1, 0)]]), SQ, (0, h))
    f = Falsifier(frozenset({0}), {"m1": (-1, 0)}, {}, (0, 0))
    assert verify_falsifier(p, f)
    # the same rate is not external on the interior
    assert not verify_falsifier(p, Falsifier(frozenset(), {"m1": (-1, 0)}, {}, (0, 0)))


def test_falsifier_face_must_be_below_start():
    p = Problem(System.from_rates([[(-1, 0)]]), SQ, (h, h))
    assert not verify_falsifier(p, Falsifier(frozenset({0}), {"m1": (-1, 0)}, {}, (0, 0)))


def test_falsifier_rejects_unlisted_rates_and_unknown_modes():
    p = Problem(EX2, FIG4, (-1, -h))
    f = Falsifier(frozenset(), {}, {"m1": (1, 1), "m2": (h, -1)}, (1, 0))
    assert not verify_falsifier(p, f)
    inside = Falsifier(frozenset(), {}, {"m1": (0, 1), "m2": (h, -1)}, (1, 0))
    assert not verify_falsifier(p, inside)   # (0,1) is allowed but push.(0,1) = 0
    with pytest.raises(FalsifierError):
        verify_falsifier(p, Falsifier(frozenset(), {}, {"zz": (h, 1)}, (1, 0)))
    assert not verify_falsifier(p, Falsifier(frozenset(), {}, {"m1": (h, 1)}, (1, 0)))


def test_falsifier_round_trip():
    f = ex2_falsifier()
    assert Falsifier.from_dict(f.to_dict()) == f


def test_static_none_without_singletons():
    assert static_schedulable(EX4) is None


def test_static_with_added_singletons():
    s = EX4.with_modes(EX4.modes + (Mode("m3", ((0, 1),)), Mode("m4", ((0, -1),))))
    assert static_schedulable(s) == {"m1": 0, "m2": 0, "m3": h, "m4": h}


def test_static_cms_is_its_witness():
    s = System.from_rates([[(2, 2)], [(2, -2)], [(-2, 2)]])
    assert list(static_schedulable(s).values()) == list(cms_safe([(2, 2), (2, -2), (-2, 2)]).witness)
    assert static_schedulable(System.from_rates([[(1, 0)]])) is None


def test_certificates_and_exclusivity_random():
    rng = random.Random(5)
    for _ in range(60):
        s = gen.random_system(rng, rng.randint(1, 3))
        v = bms_safe(s)
        assert verify_verdict(s, v)
        # exactly one kind of certificate
        assert hasattr(v, "witnesses") != hasattr(v, "push")


def test_monotonicity_random():
    rng = random.Random(8)
    for _ in range(40):
        n = rng.randint(1, 3)
        s = gen.random_system(rng, n)
        extra = gen.random_system(rng, n, max_modes=1).modes[0]
        more_modes = s.with_modes(s.modes + (Mode("extra", extra.rate_vertices),))
        if bms_safe(s).safe:
            assert bms_safe(more_modes).safe
        m0 = s.modes[0]
        grown = s.with_modes((Mode(m0.name, m0.rate_vertices + extra.rate_vertices),) + s.modes[1:])
        if not bms_safe(s).safe:
            assert not bms_safe(grown).safe
