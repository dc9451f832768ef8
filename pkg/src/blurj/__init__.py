"""Modular j with derivatives, blurred graphs of j, and explicit points on them."""

from __future__ import annotations

from .modular_eval import (
    FundamentalDomainElement,
    JJet,
    QSeries,
    eval_j,
    eval_j_jet,
    invert_j,
    reduce_to_fundamental_domain,
    schwarzian_residual,
)
from .modular_polys import ModularPolynomial, build_phi, modular_relation
from .moebius import GroupKind, GroupSpec, Moebius, act, rational_approx, transporter, zeta_D
from .variety import VarietySystem, check_broad, check_free, lift_to_J, parse_variety, sample_points
from .witness import (
    WitnessReport,
    density_probe,
    find_witness_J,
    find_witness_j,
    intersection_dimension_audit,
    theta_j,
)

__all__ = [
    "FundamentalDomainElement",
    "GroupKind",
    "GroupSpec",
    "JJet",
    "ModularPolynomial",
    "Moebius",
    "QSeries",
    "VarietySystem",
    "WitnessReport",
    "act",
    "build_phi",
    "check_broad",
    "check_free",
    "density_probe",
    "eval_j",
    "eval_j_jet",
    "find_witness_J",
    "find_witness_j",
    "intersection_dimension_audit",
    "invert_j",
    "lift_to_J",
    "modular_relation",
    "parse_variety",
    "rational_approx",
    "reduce_to_fundamental_domain",
    "sample_points",
    "schwarzian_residual",
    "theta_j",
    "transporter",
    "zeta_D",
]
