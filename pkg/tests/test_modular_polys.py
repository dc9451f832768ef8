from __future__ import annotations

import numpy as np
import pytest

from blurj.modular_eval import eval_j
from blurj.modular_polys import (
    ModularPolynomial,
    build_phi,
    hecke_closure_check,
    hecke_orbit,
    hecke_orbit_matching,
    modular_relation,
)

# classical values
PHI2 = {
    (3, 0): 1, (0, 3): 1, (2, 2): -1, (2, 1): 1488, (1, 2): 1488,
    (2, 0): -162000, (0, 2): -162000, (1, 1): 40773375,
    (1, 0): 8748000000, (0, 1): 8748000000, (0, 0): -157464000000000,
}
PHI3 = {
    (4, 0): 1, (0, 4): 1, (3, 3): -1, (3, 2): 2232, (2, 3): 2232,
    (3, 1): -1069956, (1, 3): -1069956, (3, 0): 36864000, (0, 3): 36864000,
    (2, 2): 2587918086, (2, 1): 8900222976000, (1, 2): 8900222976000,
    (2, 0): 452984832000000, (0, 2): 452984832000000, (1, 1): -770845966336000000,
    (1, 0): 1855425871872000000000, (0, 1): 1855425871872000000000,
}


def psi(n: int) -> int:
    out = n
    for p in (2, 3, 5, 7):
        if n % p == 0:
            out = out * (p + 1) // p
    return out


def test_phi2_and_phi3_are_classical():
    assert build_phi(2).coefficients == PHI2
    assert build_phi(3).coefficients == PHI3


def test_phi1():
    assert build_phi(1).coefficients == {(1, 0): 1, (0, 1): -1}


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_symmetry_and_degree(n):
    phi = build_phi(n)
    assert phi.is_symmetric()
    assert phi.degree == (psi(n), psi(n))
    assert len(hecke_orbit(n)) == psi(n)
    assert phi.coefficient(psi(n), 0) == 1


def test_more_q_terms_give_the_same_polynomial():
    assert build_phi(3, extra=8).coefficients == build_phi(3).coefficients


def test_level_above_cap_rejected():
    with pytest.raises(ValueError):
        build_phi(7, n_max=5)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_vanishes_on_isogenous_pairs(n):
    rng = np.random.default_rng(n)
    phi = build_phi(n)
    for _ in range(10):
        tau = complex(rng.uniform(-0.5, 0.5), rng.uniform(0.7, 1.4))
        assert phi.relative_residual(eval_j(tau), eval_j(n * tau)) < 1e-9
        assert phi.relative_residual(eval_j(tau), eval_j((tau + 1) / n)) < 1e-9
    assert phi.relative_residual(eval_j(0.1 + 1.1j), eval_j(0.1 + 1.1j) + 1) > 1e-6


def test_text_round_trip():
    phi = build_phi(3)
    again = ModularPolynomial.from_text(phi.to_text())
    assert again == phi
    assert phi.to_text().startswith("# Phi_3\n")
    with pytest.raises(ValueError):
        ModularPolynomial.from_text("1 1 0\n-1 0 1\n")


def test_modular_relation():
    tau = 0.13 + 1.07j
    assert modular_relation(eval_j(tau), eval_j(2 * tau)) == 2
    assert modular_relation(eval_j(tau), eval_j(3 * tau)) == 3
    assert modular_relation(eval_j(tau), eval_j(tau)) == 1
    assert modular_relation(eval_j(tau), eval_j(tau) + 1) is None


@pytest.mark.parametrize("n", [2, 3, 5])
def test_hecke_closure(n):
    assert hecke_closure_check(0.21 + 1.13j, n)
    matches = hecke_orbit_matching(0.21 + 1.13j, n)
    assert sorted(m.matrix for m in matches) == sorted(hecke_orbit(n))


def test_hecke_closure_at_ramified_point():
    assert hecke_closure_check(1j, 2, tol=1e-6)
