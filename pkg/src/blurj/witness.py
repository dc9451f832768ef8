"""Explicit points of V on the blurred graph of j (or of its 2-jet).

The search transports a seed point of V to group elements, one per
coordinate, that put the seed exactly on the blurred graph; rounds those
elements into an exact dense subgroup; and then repairs the resulting small
defect with damped Newton in the z-coordinates alone.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .modular_eval import (
    DEFAULT_TOL,
    JJet,
    composed_jet,
    eval_j,
    eval_j_jet,
    invert_j,
    pullback_jet,
    schwarzian_residual,
)
from .moebius import (
    GaussianRational,
    GroupKind,
    GroupSpec,
    Moebius,
    PoleError,
    act,
    rational_approx,
    transporter,
    zeta_D,
)
from .variety import Mode, VarietySystem, slice_to_dimension, tangent_dimension

MIN_SEED_IM = 0.05
MAX_NEWTON_ITER = 50
MAX_HALVINGS = 8


class WitnessError(ArithmeticError):
    """Newton did not reach the tolerance; ``report`` holds the last iterate when available."""

    def __init__(self, message: str, report: "WitnessReport | None" = None):
        super().__init__(message)
        self.report = report


def _exact_to_json(x):
    if isinstance(x, GaussianRational):
        return [str(x.re), str(x.im)]
    if isinstance(x, (int, Fraction)):
        return str(Fraction(x))
    c = complex(x)
    return [c.real, c.imag]


def complex_pair(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


@dataclass
class WitnessReport:
    mode: str
    group: str
    denominator_bound: int
    point: np.ndarray
    seed: np.ndarray
    group_elements: list[Moebius]
    residual_variety: float
    residual_graph: float
    distance_to_seed: float
    newton_iterations: int
    jacobian_min_singular_value: float
    predicted_distance: float
    system: VarietySystem = field(repr=False)
    branch: int | None = None
    psi_residual: float | None = None
    continuation_steps: int = 0

    def succeeded(self, tol: float) -> bool:
        return self.residual_variety < tol and self.residual_graph < tol

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "mode": self.mode,
            "group": self.group,
            "denominator_bound": self.denominator_bound,
            "point": [complex_pair(v) for v in self.point],
            "seed": [complex_pair(v) for v in self.seed],
            "group_elements": [[_exact_to_json(x) for x in g.entries] for g in self.group_elements],
            "residual_variety": self.residual_variety,
            "residual_graph": self.residual_graph,
            "distance_to_seed": self.distance_to_seed,
            "predicted_distance": self.predicted_distance,
            "newton_iterations": self.newton_iterations,
            "jacobian_min_singular_value": self.jacobian_min_singular_value,
            "branch": self.branch,
            "psi_residual": self.psi_residual,
            "continuation_steps": self.continuation_steps,
        }


def theta_j(z: complex, w: complex, tol: float = DEFAULT_TOL, series=None) -> Moebius:
    """The element of the affine group a*tau + b (a > 0) taking z to the preimage of w."""
    z = complex(z)
    if z.imag <= 0:
        raise ValueError(f"{z} is not in the upper half-plane")
    return transporter(z, invert_j(w, tol=tol, series=series).tau)


def _graph_point(V: VarietySystem, gs: Sequence[Moebius], z: np.ndarray, series=None):
    """Full coordinate vector over z on the blurred graph, plus d(coords)/dz per block."""
    n = V.n
    jets = []
    for k in range(n):
        if act(gs[k], z[k]).imag <= 0:
            raise ValueError("g z left the upper half-plane")
        jets.append(composed_jet(gs[k], z[k], tol=np.inf, series=series))
    if V.mode is Mode.j:
        x = np.concatenate([z, [jt.j for jt in jets]])
        dx = [np.array([jt.j1 for jt in jets])]
    else:
        x = np.concatenate([z, [jt.j for jt in jets], [jt.j1 for jt in jets], [jt.j2 for jt in jets]])
        dx = [np.array([getattr(jt, f) for jt in jets]) for f in ("j1", "j2", "j3")]
    return x, dx, jets


def _system(V: VarietySystem, gs, z, series=None):
    x, dx, _ = _graph_point(V, gs, z, series)
    F = V.values(x)
    G = V.jacobian(x)
    n = V.n
    Jz = G[:, :n].copy()
    for b, d in enumerate(dx, start=1):
        Jz += G[:, b * n : (b + 1) * n] * d[None, :]
    return x, F, Jz


def _damped_newton(V, gs, z0, series=None):
    z = np.asarray(z0, dtype=complex).copy()
    x, F, Jz = _system(V, gs, z, series)
    iterations = 0
    for iterations in range(1, MAX_NEWTON_ITER + 1):
        norm_f = np.linalg.norm(F)
        if norm_f == 0:
            break
        try:
            step = np.linalg.solve(Jz, -F)
        except np.linalg.LinAlgError:
            break
        t = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS + 1):
            cand = z + t * step
            try:
                xc, Fc, Jc = _system(V, gs, cand, series)
            except (ValueError, PoleError, ArithmeticError):
                t *= 0.5
                continue
            if np.linalg.norm(Fc) < norm_f:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        z, x, F, Jz = cand, xc, Fc, Jc
        if np.linalg.norm(t * step) <= 1e-15 * (1 + np.linalg.norm(z)):
            break
    return z, x, Jz, iterations


def _predicted_distance(V, gs, seed, series=None) -> float:
    """Length of the first-order displacement: one linearised Newton step from the seed."""
    n = V.n
    z0 = seed[:n]
    x, dx, _ = _graph_point(V, gs, z0, series)
    _, F, Jz = _system(V, gs, z0, series)
    try:
        dz = np.linalg.solve(Jz, -F)
    except np.linalg.LinAlgError:
        return float("inf")
    pred = x.copy()
    pred[:n] += dz
    for b, d in enumerate(dx, start=1):
        pred[b * n : (b + 1) * n] += d * dz
    return float(np.linalg.norm(pred - seed))


def graph_residual(mode: Mode, point: np.ndarray, gs: Sequence[Moebius], n: int, series=None) -> float:
    """Max |coordinate - j(g z)| (and jet analogues), recomputed through modular_eval."""
    worst = 0.0
    for k in range(n):
        g = gs[k]
        z = point[k]
        gz = act(g, z)
        if gz.imag <= 0:
            return float("inf")
        if mode is Mode.j:
            worst = max(worst, abs(point[n + k] - eval_j(gz, tol=np.inf, series=series)))
        else:
            jet = pullback_jet(eval_j_jet(gz, tol=np.inf, series=series), g, z)
            for b, v in enumerate((jet.j, jet.j1, jet.j2), start=1):
                worst = max(worst, abs(point[b * n + k] - v))
    return float(worst)


def _variety_residual(V: VarietySystem, x) -> float:
    return float(max((abs(eq(x)) for eq in V.equations), default=0.0))


def _check_seed(V: VarietySystem, seed) -> np.ndarray:
    seed = np.asarray(seed, dtype=complex)
    if seed.shape != (V.arity,):
        raise ValueError(f"seed must have {V.arity} coordinates")
    if np.any(seed[: V.n].imag < MIN_SEED_IM):
        raise ValueError(f"seed z-coordinates must have Im >= {MIN_SEED_IM}")
    return seed


def prepare_system(V: VarietySystem, seed, rng: np.random.Generator | None = None) -> VarietySystem:
    """Slice V through the seed to dimension n (j mode) or 3n (J mode) and insist on squareness."""
    target = V.n if V.mode is Mode.j else 3 * V.n
    sliced = slice_to_dimension(V, target, seed, rng=rng)
    if len(sliced.equations) != V.n:
        raise ValueError(
            f"system has {len(sliced.equations)} equations after slicing but {V.n} are needed; "
            "remove redundant equations so that V is cut out by exactly codim-many of them"
        )
    return sliced


def _normalized(g: Moebius) -> np.ndarray:
    e = np.array(g.complex_entries(), dtype=complex)
    return e / np.sqrt(complex(g.det))


def _path(starts: Sequence[Moebius], ends: Sequence[Moebius]):
    """g_t = (1 - t) g_exact + t g_bar on det-1 representatives, sign-matched."""
    pairs = []
    for g0, g1 in zip(starts, ends):
        e0, e1 = _normalized(g0), _normalized(g1)
        if np.linalg.norm(e0 + e1) < np.linalg.norm(e0 - e1):
            e0 = -e0
        pairs.append((e0, e1))

    def at(t: float) -> list[Moebius]:
        return [Moebius(*((1 - t) * e0 + t * e1)) for e0, e1 in pairs]

    return at


def _corrector(V, gs, z, series, iterations: int = 8):
    try:
        _, F, Jz = _system(V, gs, z, series)
        for _ in range(iterations):
            step = np.linalg.solve(Jz, -F)
            z = z + step
            _, F, Jz = _system(V, gs, z, series)
            if np.linalg.norm(step) <= 1e-11 * (1 + np.linalg.norm(z)):
                return z
    except (ValueError, ArithmeticError, np.linalg.LinAlgError):
        return None
    return None


def _continuation(V, exact, approx, z0, series, min_step: float = 1e-4):
    """Track the seed's solution from g_exact (t = 0) to g_bar (t = 1); None if the path is lost."""
    at = _path(exact, approx)
    z, t, h, steps = np.asarray(z0, dtype=complex), 0.0, 0.125, 0
    while t < 1.0:
        t_new = min(1.0, t + h)
        zc = _corrector(V, at(t_new), z, series)
        if zc is None:
            h /= 2
            if h < min_step:
                return None, steps
            continue
        z, t, steps = zc, t_new, steps + 1
        h = min(2 * h, 0.25)
    return z, steps


def _finish(V, sliced, spec, exact, gs, seed, tol, series, branch=None) -> WitnessReport:
    n = V.n
    predicted = _predicted_distance(sliced, gs, seed, series)
    report = _report(V, sliced, spec, gs, seed, series, seed[:n], predicted, branch)
    if report.succeeded(tol):
        return report
    # direct Newton missed: follow the solution along a path of group elements instead
    z_mid, steps = _continuation(sliced, exact, gs, seed[:n], series)
    if z_mid is None:
        return report
    tracked = _report(V, sliced, spec, gs, seed, series, z_mid, predicted, branch)
    tracked.continuation_steps = steps
    if tracked.succeeded(tol) or max(tracked.residual_variety, tracked.residual_graph) < max(
        report.residual_variety, report.residual_graph
    ):
        return tracked
    return report


def _report(V, sliced, spec, gs, seed, series, z0, predicted, branch) -> WitnessReport:
    n = V.n
    z, x, Jz, iterations = _damped_newton(sliced, gs, z0, series)
    sv = np.linalg.svd(Jz, compute_uv=False)
    psi = None
    if V.mode is Mode.J:
        vals = []
        for k in range(n):
            jet = composed_jet(gs[k], z[k], tol=np.inf, series=series)
            try:
                vals.append(abs(schwarzian_residual(JJet(x[n + k], x[2 * n + k], x[3 * n + k], jet.j3))))
            except ZeroDivisionError:
                vals.append(float("inf"))
        psi = float(max(vals))
    return WitnessReport(
        mode=V.mode.value,
        group=spec.kind.value,
        denominator_bound=spec.denominator_bound,
        point=x,
        seed=seed,
        group_elements=list(gs),
        residual_variety=_variety_residual(V, x),
        residual_graph=graph_residual(V.mode, x, gs, n, series),
        distance_to_seed=float(np.linalg.norm(x - seed)),
        newton_iterations=iterations,
        jacobian_min_singular_value=float(sv[-1]),
        predicted_distance=predicted,
        system=sliced,
        branch=branch,
        psi_residual=psi,
    )


def _farey_neighbours(x: float, bound: int) -> set[Fraction]:
    """The closest fractions below and above x with denominator <= bound."""
    q = np.arange(1, bound + 1)
    lo = np.floor(x * q)
    hi = np.ceil(x * q)
    i_lo = int(np.argmax(lo / q))
    i_hi = int(np.argmin(hi / q))
    return {Fraction(int(lo[i_lo]), int(q[i_lo])), Fraction(int(hi[i_hi]), int(q[i_hi]))}


def approximation_candidates(g: Moebius, spec: GroupSpec) -> list[Moebius]:
    """Affine subgroup elements near g = (a, b; 0, 1) at the same bound: convergent and Farey neighbours."""
    primary = rational_approx(g, spec)
    if spec.kind not in (GroupKind.G_CAL_Q, GroupKind.GL2Q_PLUS, GroupKind.SL2Q_UPPER) or complex(g.c) != 0:
        return [primary]
    a, b, _, d = (complex(x).real for x in g.entries)
    a, b = a / d, b / d
    if spec.kind is GroupKind.SL2Q_UPPER:
        # (s, t; 0, 1/s) acts as z -> s^2 z + s t
        a = float(np.sqrt(a))
        b = b / a
    bound = spec.denominator_bound
    avals = {x for x in _farey_neighbours(a, bound) if x > 0}
    bvals = _farey_neighbours(b, bound)
    out = [primary]
    for qa in sorted(avals):
        for qb in sorted(bvals):
            if spec.kind is GroupKind.SL2Q_UPPER:
                cand = Moebius(qa, qb, 0, 1 / qa)
            else:
                cand = Moebius(qa, qb, Fraction(0), Fraction(1))
            if cand.entries != primary.entries:
                out.append(cand)
    return out


def find_witness_j(
    V: VarietySystem,
    spec: GroupSpec,
    seed,
    tol: float = DEFAULT_TOL,
    rng: np.random.Generator | None = None,
    series=None,
    max_candidates: int = 1,
) -> WitnessReport:
    """A point (z, j(g z)) of V with every g an exact member of the subgroup in ``spec``.

    With ``max_candidates`` > 1, a failed primary approximation is followed by
    neighbouring subgroup elements of the same bound, tried in order of their
    predicted first-order displacement.
    """
    if V.mode is not Mode.j:
        raise ValueError("find_witness_j needs a j-mode system")
    seed = _check_seed(V, seed)
    sliced = prepare_system(V, seed, rng)
    n = V.n
    exact = [theta_j(seed[k], seed[n + k], series=series) for k in range(n)]
    gs = [rational_approx(g, spec) for g in exact]
    report = _finish(V, sliced, spec, exact, gs, seed, tol, series)
    if not report.succeeded(tol) and max_candidates > 1:
        options = [approximation_candidates(g, spec) for g in exact]
        ranked = []
        for combo in itertools.product(*options):
            combo = list(combo)
            if all(c.entries == p.entries for c, p in zip(combo, gs)):
                continue
            try:
                ranked.append((_predicted_distance(sliced, combo, seed, series), len(ranked), combo))
            except (ValueError, ArithmeticError):
                continue
        ranked.sort(key=lambda r: (r[0], r[1]))
        for _, _, combo in ranked[: max_candidates - 1]:
            try:
                candidate = _finish(V, sliced, spec, exact, combo, seed, tol, series)
            except (ValueError, ArithmeticError):
                continue
            if candidate.succeeded(tol):
                report = candidate
                break
    if not report.succeeded(tol):
        raise WitnessError(
            f"Newton stopped at residuals {report.residual_variety:.3g} / {report.residual_graph:.3g} "
            f"(tol {tol:g}); raise the denominator bound or pick another seed",
            report,
        )
    return report


def find_witness_J(
    V: VarietySystem,
    spec: GroupSpec | None,
    seed,
    tol: float = 1e-6,
    branches: Sequence[int] = (1, -1),
    rng: np.random.Generator | None = None,
    series=None,
) -> WitnessReport:
    """A point (z, j(gz), (j(gz))', (j(gz))'') of V with g exact in the Gaussian-rational SL2."""
    if V.mode is not Mode.J:
        raise ValueError("find_witness_J needs a J-mode system")
    spec = spec or GroupSpec(GroupKind.SL2_GAUSSIAN)
    seed = _check_seed(V, seed)
    sliced = prepare_system(V, seed, rng)
    n = V.n
    best = None
    for branch in branches:
        exact = [zeta_D(seed[k], seed[n + k], seed[2 * n + k], seed[3 * n + k], 1.0, branch, series=series) for k in range(n)]
        gs = [rational_approx(g, spec) for g in exact]
        try:
            report = _finish(V, sliced, spec, exact, gs, seed, tol, series, branch=branch)
        except (ValueError, PoleError, ArithmeticError):
            continue
        if best is None or max(report.residual_variety, report.residual_graph) < max(best.residual_variety, best.residual_graph):
            best = report
    if best is None:
        raise WitnessError("Newton failed on every branch")
    if not best.succeeded(tol):
        raise WitnessError(
            f"Newton stopped at residuals {best.residual_variety:.3g} / {best.residual_graph:.3g} (tol {tol:g})",
            best,
        )
    return best


def j_witness_from_J(report: WitnessReport, n: int) -> np.ndarray:
    """Drop the derivative blocks of a J-mode witness, leaving (z, w)."""
    return np.asarray(report.point[: 2 * n])


@dataclass
class AuditReport:
    isolated: bool
    min_singular_value: float
    numeric_dimension: int
    predicted_dimension: int
    residual_variety: float
    residual_graph: float


def intersection_dimension_audit(
    V: VarietySystem, witness: WitnessReport, tol: float = DEFAULT_TOL, sv_tol: float = 1e-6, series=None
) -> AuditReport:
    """Check that the witness is an isolated point of V meet the graph of j composed with g.

    For a free variety the expected local dimension of that intersection is
    dim V - n (resp. dim V - 3n) = 0 after slicing, so the square Newton
    Jacobian should be nonsingular at the witness.
    """
    mode = Mode(witness.mode)
    n = V.n
    point = np.asarray(witness.point, dtype=complex)
    res_v = _variety_residual(V, point)
    res_g = graph_residual(mode, point, witness.group_elements, n, series)
    if res_v >= tol or res_g >= tol:
        raise ValueError(f"witness is not on V and the blurred graph (residuals {res_v:.3g}, {res_g:.3g})")
    _, _, Jz = _system(witness.system, witness.group_elements, point[:n], series)
    sv = np.linalg.svd(Jz, compute_uv=False)
    numeric_dim = int(np.sum(sv <= sv_tol))
    return AuditReport(
        isolated=numeric_dim == 0,
        min_singular_value=float(sv[-1]),
        numeric_dimension=numeric_dim,
        predicted_dimension=0,
        residual_variety=res_v,
        residual_graph=res_g,
    )


@dataclass
class DensityProbe:
    """Best distance_to_seed per (seed, bound); best-so-far over increasing bounds."""

    group: str
    bounds: list[int]
    distances: np.ndarray  # seeds x bounds, best-so-far, inf where nothing found yet
    raw: np.ndarray  # seeds x bounds, per-cell distance or nan on failure
    failures: list = field(default_factory=list)  # (seed index, bound, message)

    @property
    def medians(self) -> list[float]:
        return [float(np.median(self.distances[:, b])) for b in range(len(self.bounds))]

    def to_dict(self) -> dict:
        def clean(v):
            return None if not np.isfinite(v) else float(v)

        return {
            "schema": 1,
            "group": self.group,
            "bounds": list(self.bounds),
            "median_distance": [clean(v) for v in self.medians],
            "distances": [[clean(v) for v in row] for row in self.distances],
            "raw": [[clean(v) for v in row] for row in self.raw],
            "failures": [{"seed": s, "bound": b, "message": m} for s, b, m in self.failures],
        }

    def table(self) -> list[str]:
        """Tab-separated rows: bound, median best distance, successes."""
        rows = ["bound\tmedian_distance\tsuccesses"]
        for b, bound in enumerate(self.bounds):
            ok = int(np.sum(np.isfinite(self.raw[:, b])))
            rows.append(f"{bound}\t{self.medians[b]:.6e}\t{ok}/{len(self.raw)}")
        return rows


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("BLURJ_THREADS", "1")))
    except ValueError:
        return 1


def density_probe(
    V: VarietySystem,
    kinds: Sequence[GroupKind | str],
    seeds: Sequence,
    bounds: Sequence[int],
    tol: float | None = None,
    rng_seed: int = 0,
    series=None,
    max_candidates: int = 16,
) -> list[DensityProbe]:
    """Witness distance to each seed as the denominator bound grows, one probe per group kind."""
    tol = tol if tol is not None else (DEFAULT_TOL if V.mode is Mode.j else 1e-6)
    bounds = list(bounds)
    seeds = [np.asarray(s, dtype=complex) for s in seeds]
    # one slice per seed, shared by every bound and group so the cells are comparable
    systems = []
    for i, s in enumerate(seeds):
        try:
            systems.append(prepare_system(V, s, np.random.default_rng([rng_seed, i])))
        except (ValueError, ArithmeticError) as exc:
            systems.append(exc)

    def cell(args):
        kind, i, b = args
        sliced = systems[i]
        if isinstance(sliced, Exception):
            return float("nan"), str(sliced)
        spec = GroupSpec(kind, bounds[b])
        try:
            if V.mode is Mode.j:
                rep = find_witness_j(sliced, spec, seeds[i], tol=tol, series=series, max_candidates=max_candidates)
            else:
                rep = find_witness_J(sliced, spec, seeds[i], tol=tol, series=series)
        except (ValueError, ArithmeticError) as exc:
            return float("nan"), str(exc)
        return rep.distance_to_seed, None

    probes = []
    for kind in kinds:
        kind = GroupKind(kind) if isinstance(kind, str) else kind
        cells = [(kind, i, b) for i in range(len(seeds)) for b in range(len(bounds))]
        with ThreadPoolExecutor(max_workers=_threads()) as pool:
            results = list(pool.map(cell, cells))
        raw = np.full((len(seeds), len(bounds)), np.nan)
        failures = []
        for (kd, i, b), (dist, msg) in zip(cells, results):
            raw[i, b] = dist
            if msg is not None:
                failures.append((i, bounds[b], msg))
        best = np.where(np.isnan(raw), np.inf, raw)
        best = np.minimum.accumulate(best, axis=1)
        probes.append(DensityProbe(kind.value, bounds, best, raw, failures))
    return probes
