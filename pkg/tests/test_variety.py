from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blurj.modular_polys import build_phi
from blurj.variety import (
    Mode,
    MultiPoly,
    NotOnVarietyError,
    Region,
    VarietyParseError,
    check_broad,
    check_free,
    check_projection_index,
    lift_to_J,
    parse_variety,
    projected_dimension,
    sample_points,
    slice_to_dimension,
    tangent_dimension,
)

SECTION_ONE = "n=2; mode=j\nz1 = z2\nw1 = w2 + 1"


def samples(V, count=6, seed=0):
    return sample_points(V, count, Region(), np.random.default_rng(seed))


def test_parse_basic_system():
    V = parse_variety("# comment\nn=2; mode=j\nw1*w2 - z1 - 3*z2 = 5   # trailing\nw1 + z1^2 = 2i; z2 = i*z1")
    assert V.mode is Mode.j and V.n == 2 and len(V.equations) == 3
    x = np.array([1 + 1j, 1j * (1 + 1j), 2.0, 0.0])
    assert abs(V.equations[2](x)) < 1e-15
    assert abs(V.equations[1](np.array([1j, 0, 2j + 1, 0])) - 0) < 1e-15


def test_print_parse_round_trip():
    V = parse_variety("n=2; mode=J\nq1 - z1*p1 + (0.5-2i)*w2^2 = 3")
    again = parse_variety(V.to_text())
    assert again.equations == V.equations


def test_phi_builtin_expands_modular_polynomial():
    V = parse_variety("n=2; mode=j\nPhi2(w1, w2) = 0")
    phi = build_phi(2)
    x = np.array([0, 0, 3.0 + 1j, -2.0])
    assert abs(V.equations[0](x) - phi(3.0 + 1j, -2.0)) < 1e-6 * abs(phi(3.0 + 1j, -2.0))


@pytest.mark.parametrize(
    "text, line, column",
    [
        ("n=1; mode=j\nw1 = x1", 2, 6),
        ("n=1; mode=j\nw1 = = z1", 2, 6),
        ("n=1; mode=j\nw1 = z1 $", 2, 9),
        ("n=1; mode=j\nw1 = z1^z1", 2, 9),
        ("w1 = z1", 1, 1),
    ],
)
def test_parse_errors_carry_positions(text, line, column):
    with pytest.raises(VarietyParseError) as exc:
        parse_variety(text)
    assert (exc.value.line, exc.value.column) == (line, column)


def test_bad_header():
    with pytest.raises(VarietyParseError):
        parse_variety("n=0; mode=j\nw1 = z1")
    with pytest.raises(VarietyParseError):
        parse_variety("n=1; mode=k\nw1 = z1")


@settings(max_examples=30, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False), min_size=2, max_size=2))
def test_gradient_by_finite_differences(pt):
    V = parse_variety("n=1; mode=j\nw1^3*z1 - 2*z1^2 + (1+i)*w1 = 7")
    eq = V.equations[0]
    x = np.array(pt, dtype=complex)
    h = 1e-6
    for v in range(2):
        e = np.zeros(2)
        e[v] = h
        fd = (eq(x + e) - eq(x - e)) / (2 * h)
        assert abs(eq.gradient(x)[v] - fd) <= 1e-5 * max(1, abs(fd))


def test_multipoly_arithmetic():
    names = ("z1", "w1")
    z = MultiPoly.variable(names, "z1")
    w = MultiPoly.variable(names, "w1")
    p = (z + w) ** 2 - z * z - 2 * z * w
    assert p == w * w
    assert p.substitute({"w1": z + 1}) == z * z + 2 * z + 1
    with pytest.raises(ValueError):
        z ** -1


def test_tangent_and_projected_dimensions():
    V = parse_variety(SECTION_ONE)
    x = samples(V, 1)[0]
    assert tangent_dimension(V, x) == 2
    assert projected_dimension(V, x, (1,)) == 2
    assert projected_dimension(V, x, (1, 2)) == 2
    with pytest.raises(NotOnVarietyError):
        tangent_dimension(V, x + np.array([1, 0, 0, 0]))
    with pytest.raises(ValueError):
        check_projection_index((2, 1), 2)
    with pytest.raises(ValueError):
        check_projection_index((3,), 2)


def test_section_one_example_is_broad_free_not_h_free():
    V = parse_variety(SECTION_ONE)
    pts = samples(V)
    broad = check_broad(V, pts)
    free = check_free(V, pts)
    assert broad.broad and free.free and not free.h_free
    assert [(i, k) for i, k, _ in free.h_relations] == [(1, 2)]


def test_generic_system_is_everything():
    V = parse_variety("n=2; mode=j\nw1*w2 - z1 - 3*z2 = 5")
    pts = samples(V)
    assert check_broad(V, pts).broad
    free = check_free(V, pts)
    assert free.free and free.h_free


def test_constant_coordinate_is_not_free():
    V = parse_variety("n=1; mode=j\nw1 = 5")
    free = check_free(V, samples(V))
    assert not free.free and free.reasons == ["constant coordinate w1"]


def test_modular_relation_is_not_free():
    V = parse_variety("n=2; mode=j\nPhi2(w1, w2) = 0")
    free = check_free(V, samples(V))
    assert not free.free
    assert free.modular_relations == [(1, 2, 2)]


def test_point_is_not_broad():
    V = parse_variety("n=1; mode=j\nz1 = 0.2 + 1.1i\nw1 = 3")
    report = check_broad(V, samples(V))
    assert not report.broad
    assert report.violations == [((1,), 0, 1)]


def test_jet_hypersurface_and_lift():
    V = parse_variety("n=1; mode=J\nq1 - z1 - w1*p1 = 0")
    pts = samples(V)
    assert check_broad(V, pts).broad and check_free(V, pts).free
    lifted = lift_to_J(parse_variety(SECTION_ONE))
    assert lifted.mode is Mode.J and lifted.arity == 8
    pts = samples(lifted)
    assert check_broad(lifted, pts).broad
    assert tangent_dimension(lifted, pts[0]) == 6


def test_subset_audit_cap():
    V = parse_variety("n=13; mode=j\nw1 = z1")
    with pytest.raises(ValueError, match="cap"):
        check_broad(V, [np.zeros(26)])


def test_slicing_reaches_target_dimension():
    V = parse_variety("n=2; mode=j\nw1*w2 - z1 - 3*z2 = 5")
    x = samples(V, 1)[0]
    sliced = slice_to_dimension(V, 2, x, np.random.default_rng(1))
    assert tangent_dimension(sliced, x) == 2
    assert len(sliced.equations) == 2
    with pytest.raises(ValueError):
        slice_to_dimension(V, 4, x)


def test_samples_lie_on_variety_in_upper_half_plane():
    V = parse_variety("n=2; mode=j\nw1*w2 - z1 - 3*z2 = 5")
    for x in samples(V, 10):
        assert V.residual(x) < 1e-10
        assert np.all(x[:2].imag >= 0.05)
