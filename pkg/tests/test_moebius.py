from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blurj.modular_eval import composed_jet
from blurj.moebius import (
    ApproximationError,
    GaussianRational,
    GroupKind,
    GroupSpec,
    Moebius,
    PoleError,
    ZetaDomainError,
    act,
    act_derivative,
    act_exact,
    act_second_derivative,
    act_third_derivative,
    best_convergent,
    canonical_sign,
    convergents,
    rational_approx,
    transporter,
    zeta_D,
)
from blurj.selftest import random_sl2c, sign_distance, zeta_round_trip

finite = st.floats(-3, 3, allow_nan=False)
upper = st.builds(complex, st.floats(-3, 3), st.floats(0.1, 3))


def test_zero_determinant_rejected():
    with pytest.raises(ValueError):
        Moebius(1, 2, 2, 4)


def test_composition_and_inverse():
    g = Moebius(2, 1, 1, 1)
    h = Moebius(1 + 1j, 0.5, -0.2, 2)
    z = 0.3 + 0.7j
    assert abs(act(g @ h, z) - act(g, act(h, z))) < 1e-12
    assert abs(act(g.inverse(), act(g, z)) - z) < 1e-12
    assert (g @ g.inverse()).entries == (1, 0, 0, 1)


def test_scaling_does_not_change_the_action():
    g = Moebius(2, 1, 1, 1)
    assert abs(act(g.scaled(3 - 1j), 0.2 + 1j) - act(g, 0.2 + 1j)) < 1e-12


def test_pole():
    with pytest.raises(PoleError):
        act(Moebius(1, 0, 1, -2), 2)


def test_derivatives_by_finite_differences():
    g = Moebius(1 + 0.5j, 2, 0.7, 1 - 0.2j)
    z, h = 0.4 + 0.8j, 1e-4
    f = lambda t: act(g, t)
    d1 = (f(z + h) - f(z - h)) / (2 * h)
    d2 = (f(z + h) - 2 * f(z) + f(z - h)) / h**2
    d3 = (f(z + 2 * h) - 2 * f(z + h) + 2 * f(z - h) - f(z - 2 * h)) / (2 * h**3)
    assert abs(act_derivative(g, z) - d1) < 1e-7
    assert abs(act_second_derivative(g, z) - d2) < 1e-5
    assert abs(act_third_derivative(g, z) - d3) < 1e-3


def test_exact_action_agrees_with_float_action():
    g = Moebius(Fraction(3, 2), Fraction(-1, 7), 2, 5)
    z = 0.25 + 0.5j
    exact = act_exact(g, z)
    assert isinstance(exact, GaussianRational)
    assert abs(complex(exact) - act(g, z)) < 1e-15


def test_gaussian_rational_arithmetic():
    a = GaussianRational(1, 2)
    b = GaussianRational(3, -1)
    assert a * b == GaussianRational(5, 5)
    assert (a * b) / b == a
    assert a + 1 == GaussianRational(2, 2)
    assert complex(a) == 1 + 2j
    with pytest.raises(ZeroDivisionError):
        a / GaussianRational(0)


@settings(max_examples=50, deadline=None)
@given(upper, upper)
def test_transporter(z1, z2):
    g = transporter(z1, z2)
    assert abs(act(g, z1) - z2) < 1e-9 * max(1, abs(z2))
    assert g.c == 0 and g.a > 0


def test_convergents_of_sqrt2():
    # oracle: sqrt(2) = [1; 2, 2, 2, ...]
    got = [c for _, c in zip(range(7), convergents(math.sqrt(2)))]
    assert got == [Fraction(1), Fraction(3, 2), Fraction(7, 5), Fraction(17, 12), Fraction(41, 29), Fraction(99, 70), Fraction(239, 169)]
    assert best_convergent(math.sqrt(2), 100) == Fraction(99, 70)
    assert best_convergent(-math.sqrt(2), 100) == Fraction(-99, 70)
    assert best_convergent(math.pi, 200) == Fraction(355, 113)


@settings(max_examples=100, deadline=None)
@given(st.floats(-50, 50), st.integers(1, 10**4))
def test_convergent_error_bound(x, bound):
    q = best_convergent(x, bound)
    assert q.denominator <= bound
    assert abs(x - q) <= 1 / q.denominator


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 20), st.floats(-5, 5), st.sampled_from([10, 100, 1000, 10**4]))
def test_affine_approximations_are_members(a, b, bound):
    g = Moebius(a, b, 0.0, 1.0)
    for kind in (GroupKind.G_CAL_Q, GroupKind.GL2Q_PLUS, GroupKind.SL2Q_UPPER):
        spec = GroupSpec(kind, bound)
        h = rational_approx(g, spec)
        assert spec.contains(h)
        assert abs(act(h, 1j) - act(g, 1j)) < 20 * (1 + abs(a)) / bound


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_gaussian_approximation_has_determinant_one(seed):
    g = random_sl2c(np.random.default_rng(seed))
    spec = GroupSpec(GroupKind.SL2_GAUSSIAN, 1000)
    h = rational_approx(g, spec)
    assert h.det == 1
    assert spec.contains(h)
    assert g.max_entry_distance(h) < 1e-2


def test_group_membership_is_exact():
    assert not GroupSpec(GroupKind.G_CAL_Q).contains(Moebius(0.5, 0.25, 0.0, 1.0))
    assert GroupSpec(GroupKind.G_CAL_Q).contains(Moebius(Fraction(1, 2), Fraction(1, 4), 0, 1))
    assert not GroupSpec(GroupKind.G_CAL_Q).contains(Moebius(Fraction(-1, 2), 0, 0, 1))
    # membership is in the subgroup itself; the bound only steers the approximation
    assert GroupSpec(GroupKind.G_CAL_Q, 10).contains(Moebius(Fraction(1, 11), 0, 0, 1))
    assert GroupSpec(GroupKind.TRIVIAL).contains(Moebius.identity())
    assert rational_approx(Moebius(2.0, 1.0, 0.0, 1.0), GroupSpec(GroupKind.TRIVIAL)) == Moebius.identity()


def test_real_groups_reject_complex_matrices():
    with pytest.raises(ApproximationError):
        rational_approx(Moebius(1 + 1j, 0, 0, 1), GroupSpec(GroupKind.G_CAL_Q))
    with pytest.raises(ApproximationError):
        rational_approx(Moebius(1.0, 0.0, 1.0, 2.0), GroupSpec(GroupKind.G_CAL_Q))


def test_canonical_sign():
    g = Moebius(-1, 2, 3, -4)
    assert canonical_sign(g).entries == (1, -2, -3, 4)
    assert canonical_sign(-g) == canonical_sign(g)


def test_zeta_round_trip_and_branches():
    rng = np.random.default_rng(0)
    for _ in range(20):
        g, h = zeta_round_trip(rng)
        assert sign_distance(g, h) < 1e-6
    z = 0.2 + 1.1j
    g = Moebius(1 + 0.3j, 0.4, 0.25j, 1.0 - 0.1j).scaled(1 / np.sqrt(complex((1 + 0.3j) * (1.0 - 0.1j) - 0.4 * 0.25j)))
    jet = composed_jet(g, z)
    plus = zeta_D(z, jet.j, jet.j1, jet.j2, branch=1)
    minus = zeta_D(z, jet.j, jet.j1, jet.j2, branch=-1)
    assert plus.max_entry_distance(-minus) < 1e-12
    assert sign_distance(g, plus) < 1e-6


def test_zeta_with_other_determinant():
    z = 0.1 + 1.0j
    g = Moebius(2.0, 0.5, 0.3, 1.2)
    jet = composed_jet(g, z)
    h = zeta_D(z, jet.j, jet.j1, jet.j2, D=complex(g.det))
    # g z lies outside the fundamental domain, so h may differ from g by SL2(Z); the jet may not
    assert abs(complex(h.det) - complex(g.det)) < 1e-9
    again = composed_jet(h, z)
    for u, v in zip(again.as_tuple()[:3], jet.as_tuple()[:3]):
        assert abs(u - v) < 1e-8 * max(1, abs(v))


def test_zeta_domain_exclusions():
    with pytest.raises(ZetaDomainError) as exc:
        zeta_D(1j, 100, 0, 1)
    assert exc.value.exclusion == "w1_zero"
    with pytest.raises(ZetaDomainError) as exc:
        zeta_D(1j, 1728, 1, 1)
    assert exc.value.exclusion == "ramified_value"
    with pytest.raises(ZetaDomainError) as exc:
        zeta_D(1j, 0, 1, 1)
    assert exc.value.exclusion == "ramified_value"
