from __future__ import annotations

import json

import numpy as np
import pytest

from blurj.modular_eval import eval_j
from blurj.moebius import GroupKind, GroupSpec, ZetaDomainError, act
from blurj.variety import Region, lift_to_J, parse_variety, sample_points
from blurj.witness import (
    WitnessError,
    approximation_candidates,
    density_probe,
    find_witness_J,
    find_witness_j,
    intersection_dimension_audit,
    j_witness_from_J,
    theta_j,
)

FIXED_POINT = parse_variety("n=1; mode=j\nw1 = z1")
SECTION_ONE = parse_variety("n=2; mode=j\nz1 = z2\nw1 = w2 + 1")
JET_SURFACE = parse_variety("n=1; mode=J\nq1 - z1 - w1*p1 = 0")


def seed_of(V, seed=0, region=Region()):
    return sample_points(V, 1, region, np.random.default_rng(seed))[0]


def test_theta_transports_onto_the_graph():
    z, w = 0.3 + 0.8j, 55 - 20j
    g = theta_j(z, w)
    assert g.c == 0 and g.a > 0
    assert abs(eval_j(act(g, z)) - w) < 1e-8 * abs(w)
    with pytest.raises(ValueError):
        theta_j(0.3 - 0.8j, w)


def test_fixed_point_witness_near_two_i():
    seed = np.array([2j, eval_j(2j)])
    # move the seed off the graph but keep it on V: w = z
    seed = np.array([2j + 0.01, 2j + 0.01])
    spec = GroupSpec(GroupKind.G_CAL_Q, 1000)
    rep = find_witness_j(FIXED_POINT, spec, seed, tol=1e-8, rng=np.random.default_rng(0))
    z, w = rep.point
    g = rep.group_elements[0]
    assert spec.contains(g)
    assert abs(w - z) < 1e-8
    assert abs(w - eval_j(act(g, z))) < 1e-8
    assert rep.residual_variety < 1e-8 and rep.residual_graph < 1e-8


@pytest.mark.parametrize("kind", [GroupKind.G_CAL_Q, GroupKind.GL2Q_PLUS, GroupKind.SL2Q_UPPER])
def test_section_one_witness(kind):
    spec = GroupSpec(kind, 1000)
    rep = find_witness_j(SECTION_ONE, spec, seed_of(SECTION_ONE, 3), rng=np.random.default_rng(0))
    z1, z2, w1, w2 = rep.point
    g1, g2 = rep.group_elements
    assert all(spec.contains(g) for g in rep.group_elements)
    assert abs(z1 - z2) < 1e-8 and abs(w1 - w2 - 1) < 1e-8
    assert abs(eval_j(act(g1, z1)) - eval_j(act(g2, z2)) - 1) < 1e-8
    assert g1 != g2


def test_report_json_is_deterministic():
    seed = seed_of(FIXED_POINT, 1)
    spec = GroupSpec(GroupKind.G_CAL_Q, 1000)
    a = find_witness_j(FIXED_POINT, spec, seed, rng=np.random.default_rng(5)).to_dict()
    b = find_witness_j(FIXED_POINT, spec, seed, rng=np.random.default_rng(5)).to_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    assert a["schema"] == 1
    assert all(isinstance(e, str) for e in a["group_elements"][0])


def test_seed_near_real_axis_rejected():
    with pytest.raises(ValueError, match="Im"):
        find_witness_j(FIXED_POINT, GroupSpec(GroupKind.G_CAL_Q), np.array([0.3 + 0.01j, 0.3 + 0.01j]))


def test_redundant_equations_rejected():
    V = parse_variety("n=1; mode=j\nw1 = z1\n2*w1 = 2*z1")
    with pytest.raises(ValueError, match="redundant"):
        find_witness_j(V, GroupSpec(GroupKind.G_CAL_Q), np.array([0.3 + 1.1j, 0.3 + 1.1j]))


def test_mode_mismatch_rejected():
    with pytest.raises(ValueError):
        find_witness_j(JET_SURFACE, GroupSpec(GroupKind.G_CAL_Q), seed_of(JET_SURFACE))
    with pytest.raises(ValueError):
        find_witness_J(FIXED_POINT, None, seed_of(FIXED_POINT))


def test_unreachable_tolerance_raises_with_report():
    with pytest.raises(WitnessError) as exc:
        find_witness_j(FIXED_POINT, GroupSpec(GroupKind.G_CAL_Q), seed_of(FIXED_POINT), tol=1e-30)
    assert exc.value.report is not None
    assert exc.value.report.residual_variety < 1e-8


def test_jet_witness():
    spec = GroupSpec(GroupKind.SL2_GAUSSIAN, 1000)
    rep = find_witness_J(JET_SURFACE, spec, seed_of(JET_SURFACE, 2), rng=np.random.default_rng(0))
    assert spec.contains(rep.group_elements[0])
    assert rep.residual_variety < 1e-6 and rep.residual_graph < 1e-6
    assert rep.psi_residual < 1e-6
    assert rep.branch in (1, -1)
    z, w, p, q = rep.point
    assert abs(q - z - w * p) < 1e-6


def test_jet_seed_with_zero_derivative_hits_zeta_precondition():
    z = 0.2 + 1.1j
    seed = np.array([z, 100 + 5j, 0, z])  # on V since q1 = z1 + w1 * 0
    with pytest.raises(ZetaDomainError) as exc:
        find_witness_J(JET_SURFACE, None, seed)
    assert exc.value.exclusion == "w1_zero"


def test_jet_seed_at_ramified_value():
    z = 0.2 + 1.1j
    seed = np.array([z, 1728, 1.0, z + 1728])
    with pytest.raises(ZetaDomainError) as exc:
        find_witness_J(JET_SURFACE, None, seed)
    assert exc.value.exclusion == "ramified_value"


def test_lifted_search_yields_j_witness():
    lifted = lift_to_J(SECTION_ONE)
    base = seed_of(SECTION_ONE, 4)
    seed = np.concatenate([base, [0.3 - 0.2j, 1.1 + 0.4j, -0.5j, 2.0]])
    rep = find_witness_J(lifted, None, seed, rng=np.random.default_rng(0))
    x = j_witness_from_J(rep, 2)
    assert max(abs(eq(x)) for eq in SECTION_ONE.equations) < 1e-8
    for k, g in enumerate(rep.group_elements):
        assert abs(x[2 + k] - eval_j(act(g, x[k]))) < 1e-8


def test_audit_isolated_and_refuses_perturbed_witness():
    rep = find_witness_j(FIXED_POINT, GroupSpec(GroupKind.G_CAL_Q), seed_of(FIXED_POINT, 6), rng=np.random.default_rng(0))
    audit = intersection_dimension_audit(FIXED_POINT, rep)
    assert audit.isolated and audit.min_singular_value > 1e-6 and audit.predicted_dimension == 0
    rep.point = rep.point + np.array([0, 1e-3])
    with pytest.raises(ValueError, match="not on V"):
        intersection_dimension_audit(FIXED_POINT, rep)


def test_candidates_are_members():
    g = theta_j(0.1 + 1.3j, 17 - 40j)
    for kind in (GroupKind.G_CAL_Q, GroupKind.GL2Q_PLUS, GroupKind.SL2Q_UPPER):
        spec = GroupSpec(kind, 10)
        cands = approximation_candidates(g, spec)
        assert len(cands) >= 2
        assert all(spec.contains(c) for c in cands)


def test_density_probe_shrinks_and_control_stagnates():
    seeds = sample_points(FIXED_POINT, 4, Region(w_box=50), np.random.default_rng(9))
    bounds = [10, 100, 1000, 10000]
    probe, control = density_probe(FIXED_POINT, [GroupKind.G_CAL_Q, GroupKind.TRIVIAL], seeds, bounds)
    assert probe.bounds == bounds
    # best-so-far is non-increasing by construction
    assert np.all(np.diff(probe.distances, axis=1) <= 0)
    assert probe.medians[-1] < probe.medians[0] / 10
    # the identity subgroup cannot move: each finite distance is the same at every bound
    for row in control.raw:
        finite = row[np.isfinite(row)]
        assert len(finite) == 0 or np.ptp(finite) < 1e-9
    assert "median_distance" in probe.to_dict()
    assert probe.table()[0].startswith("bound")


def test_distance_follows_first_order_prediction():
    seeds = sample_points(FIXED_POINT, 5, Region(), np.random.default_rng(11))
    spec = GroupSpec(GroupKind.G_CAL_Q, 10000)
    for seed in seeds:
        rep = find_witness_j(FIXED_POINT, spec, seed, rng=np.random.default_rng(0))
        assert rep.distance_to_seed < 10 * rep.predicted_distance
