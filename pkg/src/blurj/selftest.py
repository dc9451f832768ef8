"""Invariant suite run by ``blurj selftest``."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .modular_eval import (
    RHO,
    composed_jet,
    eval_j,
    eval_j_jet,
    invert_j,
    schwarzian_residual,
)
from .modular_polys import build_phi
from .moebius import Moebius, act, zeta_D


def random_fd_point(rng: np.random.Generator, im_range=(0.87, 1.5), margin: float = 0.0) -> complex:
    """Uniform-ish point of the standard fundamental domain, optionally kept off its boundary."""
    while True:
        x = rng.uniform(-0.5 + margin, 0.5 - margin)
        y = rng.uniform(*im_range)
        tau = complex(x, y)
        if abs(tau) > 1 + margin:
            return tau


def random_sl2z(rng: np.random.Generator, max_entry: int = 50) -> Moebius:
    """SL2(Z) element with all entries bounded by max_entry in absolute value."""
    while True:
        c = int(rng.integers(-max_entry, max_entry + 1))
        d = int(rng.integers(-max_entry, max_entry + 1))
        if math.gcd(c, d) != 1:
            continue
        # a d - b c = 1 via the extended Euclidean algorithm
        g, x, y = _egcd(d, -c)
        a, b = x, y
        # shift by multiples of (c, d) to keep a, b small
        k = round(-(a * c + b * d) / (c * c + d * d)) if c or d else 0
        a, b = a + k * c, b + k * d
        if max(abs(a), abs(b)) <= max_entry:
            return Moebius(a, b, c, d)


def _egcd(p: int, q: int) -> tuple[int, int, int]:
    if q == 0:
        return (abs(p), 1 if p >= 0 else -1, 0)
    g, x, y = _egcd(q, p % q)
    return g, y, x - (p // q) * y


def random_sl2c(rng: np.random.Generator, scale: float = 1.0) -> Moebius:
    """Random complex matrix rescaled to determinant 1."""
    while True:
        e = scale * (rng.standard_normal(4) + 1j * rng.standard_normal(4))
        det = e[0] * e[3] - e[1] * e[2]
        if abs(det) > 0.1 * scale**2:
            e = e / np.sqrt(det)
            return Moebius(*(complex(x) for x in e))


def zeta_round_trip(rng: np.random.Generator, series=None, margin: float = 0.05):
    """Draw g in SL2(C) and z with gz in the fundamental domain; return (g, zeta_1 output)."""
    while True:
        target = random_fd_point(rng, margin=margin)
        if abs(target - 1j) < 0.1 or abs(target - RHO) < 0.1 or abs(target + RHO.conjugate()) < 0.1:
            continue
        g = random_sl2c(rng)
        z = act(g.inverse(), target)
        if z.imag > 0.05:
            break
    jet = composed_jet(g, z, series=series)
    return g, zeta_D(z, jet.j, jet.j1, jet.j2, 1.0, 1, series=series)


def sign_distance(g: Moebius, h: Moebius) -> float:
    """Entrywise distance from h to the nearer of g and -g."""
    return min(g.max_entry_distance(h), (-g).max_entry_distance(h))


@dataclass
class CheckResult:
    name: str
    passed: int = 0
    failed: int = 0
    worst: float = 0.0
    errors: list = field(default_factory=list)


def _run(name: str, count: int, trial: Callable[[], float], tol: float) -> CheckResult:
    res = CheckResult(name)
    for _ in range(count):
        try:
            err = trial()
        except (ArithmeticError, ValueError) as exc:
            res.failed += 1
            res.errors.append(f"{type(exc).__name__}: {exc}")
            continue
        res.worst = max(res.worst, err)
        if err < tol:
            res.passed += 1
        else:
            res.failed += 1
    return res


def run_selftest(quick: bool = False, series=None, seed: int = 0, tol: float = 1e-8) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    count = 10 if quick else 100

    def special():
        return max(abs(eval_j(1j, series=series) - 1728), abs(eval_j(RHO, series=series)))

    def invariance():
        tau = random_fd_point(rng)
        gamma = random_sl2z(rng, 50)
        return abs(eval_j(act(gamma, tau), series=series) - eval_j(tau, series=series)) / max(1.0, abs(eval_j(tau, series=series)))

    def psi():
        while True:
            tau = complex(rng.uniform(-1, 1), rng.uniform(0.5, 2.0))
            jet = eval_j_jet(tau, series=series)
            if abs(jet.j1) > 1e-3 and abs(jet.j) > 1e-3 and abs(jet.j - 1728) > 1e-3:
                return abs(schwarzian_residual(jet))

    phis = {}

    def phi_root():
        level = int(rng.integers(2, 4 if quick else 6))
        if level not in phis:
            phis[level] = build_phi(level)
        tau = random_fd_point(rng)
        return phis[level].relative_residual(eval_j(tau, series=series), eval_j(level * tau, series=series))

    def zeta():
        g, h = zeta_round_trip(rng, series=series)
        return sign_distance(g, h)

    def inversion():
        w = complex(rng.uniform(-3000, 3000), rng.uniform(-3000, 3000))
        fd = invert_j(w, series=series)
        return abs(eval_j(fd.tau, series=series) - w) / max(1.0, abs(w))

    return [
        _run("special values j(i), j(rho)", 1, special, tol),
        _run("SL2(Z) invariance", count, invariance, tol),
        _run("Schwarzian relation", count, psi, tol),
        _run("modular polynomial roots", count // 2, phi_root, 1e-6),
        _run("zeta_1 round trip", count, zeta, 1e-6),
        _run("inversion round trip", count, inversion, tol),
    ]


def format_results(results: list[CheckResult], elapsed: float) -> list[str]:
    lines = []
    for r in results:
        status = "PASS" if r.failed == 0 else "FAIL"
        line = f"{status}  {r.name}: {r.passed} passed, {r.failed} failed, worst {r.worst:.2e}"
        if r.errors:
            line += f" ({r.errors[0]})"
        lines.append(line)
    total_p = sum(r.passed for r in results)
    total_f = sum(r.failed for r in results)
    lines.append(f"{total_p} passed, {total_f} failed in {elapsed:.1f} s")
    return lines


def timed_selftest(**kwargs) -> tuple[list[CheckResult], float]:
    start = time.perf_counter()
    results = run_selftest(**kwargs)
    return results, time.perf_counter() - start
