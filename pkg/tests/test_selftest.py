from __future__ import annotations

import time

import numpy as np

from blurj.modular_eval import QSeries, in_fundamental_domain
from blurj.selftest import random_fd_point, random_sl2z, run_selftest


def test_random_generators():
    rng = np.random.default_rng(0)
    for _ in range(200):
        g = random_sl2z(rng, 50)
        assert g.det == 1 and max(abs(e) for e in g.entries) <= 50
        assert in_fundamental_domain(random_fd_point(rng))


def test_full_suite_passes_within_budget():
    start = time.perf_counter()
    results = run_selftest()
    assert time.perf_counter() - start < 60
    assert all(r.failed == 0 for r in results)
    assert sum(r.passed for r in results) > 400


def test_quick_suite_budget():
    start = time.perf_counter()
    results = run_selftest(quick=True)
    assert time.perf_counter() - start < 5
    assert all(r.failed == 0 for r in results)


def test_under_truncated_series_fails():
    results = run_selftest(quick=True, series=QSeries.j_series(4))
    psi = next(r for r in results if r.name == "Schwarzian relation")
    assert psi.failed > 0 and psi.passed == 0
