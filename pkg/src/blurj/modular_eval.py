"""Numerical evaluation of j and its first three derivatives.

Points are reduced into the standard fundamental domain by the usual
translate/invert loop, the truncated q-series is summed there, and the
derivatives are pulled back through the reducing matrix with the exact chain
rule for Moebius maps.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .moebius import (
    GaussianRational,
    Moebius,
    act,
    act_derivative,
    act_second_derivative,
    act_third_derivative,
)
from .qseries import j_coefficients

TWO_PI_I = 2j * math.pi
RHO = complex(-0.5, math.sqrt(3) / 2)
Q_MAX = math.exp(-math.pi * math.sqrt(3))  # |q| on the reduced domain
BOUNDARY_EPS = 1e-13
DEFAULT_TOL = 1e-8


class TruncationError(ArithmeticError):
    """The configured q-series order cannot reach the requested tolerance."""


class ReductionError(ArithmeticError):
    """Fundamental-domain reduction did not terminate (input too close to the real line)."""


class InversionError(ArithmeticError):
    """Newton iteration for j(tau) = w failed from every seed."""


class UpperHalfPoint(complex):
    """A complex number with strictly positive imaginary part."""

    def __new__(cls, value):
        z = complex(value)
        if not z.imag > 0:
            raise ValueError(f"{z} is not in the upper half-plane")
        return super().__new__(cls, z.real, z.imag)


def _upper(tau) -> complex:
    z = complex(tau)
    if not z.imag > 0:
        raise ValueError(f"{z} is not in the upper half-plane")
    return z


@dataclass(frozen=True)
class QSeries:
    """Truncated q-expansion of j: coefficients of q^-1, q^0, q^1, ..."""

    coefficients: tuple[int, ...]

    def __post_init__(self):
        if len(self.coefficients) < 2:
            raise ValueError("need at least the q^-1 and q^0 coefficients")

    @property
    def truncation_order(self) -> int:
        return len(self.coefficients)

    @classmethod
    def j_series(cls, order: int = 32) -> "QSeries":
        return cls(j_coefficients(order))

    def tail_bound(self, abs_q: float, derivative: int = 0) -> float:
        """Bound on the omitted terms, from c_n <= exp(4*pi*sqrt(n))."""
        first = self.truncation_order - 1  # exponent of the first omitted term
        total = 0.0
        for n in range(max(first, 1), first + 400):
            log_term = 4 * math.pi * math.sqrt(n) + n * math.log(abs_q) + derivative * math.log(2 * math.pi * n)
            term = math.exp(log_term) if log_term > -700 else 0.0
            total += term
            if n > first + 5 and term < 1e-30 * max(total, 1e-300):
                break
        return total


@lru_cache(maxsize=8)
def default_series(order: int = 32) -> QSeries:
    return QSeries.j_series(order)


def _series(series) -> QSeries:
    if series is None:
        return default_series()
    if isinstance(series, int):
        return default_series(series)
    return series


@lru_cache(maxsize=8)
def _series_arrays(series: QSeries):
    n = np.arange(-1, series.truncation_order - 1)
    c = np.array([float(x) for x in series.coefficients])
    return n, c


def _sum_series(tau, series: QSeries, derivatives: int):
    """Sum the series and its tau-derivatives; tau may be a scalar or array."""
    n, c = _series_arrays(series)
    tau = np.asarray(tau, dtype=complex)
    q = np.exp(TWO_PI_I * tau)
    powers = q[..., None] ** n
    terms = c * powers
    out = [terms.sum(axis=-1)]
    factor = TWO_PI_I * n
    for _ in range(derivatives):
        terms = terms * factor
        out.append(terms.sum(axis=-1))
    return out


@dataclass(frozen=True)
class FundamentalDomainElement:
    """A point of the fundamental domain.

    The domain is |tau| >= 1, |Re tau| <= 1/2 with Re tau = 1/2 and the
    right half of the unit-circle arc removed, so that j restricted to it is
    a bijection onto C. ``ramification`` is 3 at rho, 2 at i and 1 elsewhere
    (it is only set by :func:`invert_j`).
    """

    tau: complex
    ramification: int = 1

    def __post_init__(self):
        if not in_fundamental_domain(self.tau, eps=1e-9):
            raise ValueError(f"{self.tau} is not in the fundamental domain")


def in_fundamental_domain(tau: complex, eps: float = 0.0) -> bool:
    """Exact membership test; ``eps`` widens the region for rounding slack."""
    tau = complex(tau)
    if tau.imag <= 0:
        return False
    if not (-0.5 - eps <= tau.real < 0.5 + eps):
        return False
    r = abs(tau)
    if r < 1 - eps:
        return False
    if abs(r - 1) <= eps and tau.real > eps:
        return False
    return True


def reduce_to_fundamental_domain(tau, max_iter: int = 10_000) -> tuple[FundamentalDomainElement, Moebius]:
    """Return (reduced point, gamma) with gamma in SL2(Z) and gamma.tau the reduced point.

    A GaussianRational tau is mapped by gamma exactly and rounded once at the end.
    """
    exact = tau if isinstance(tau, GaussianRational) else None
    z0 = _upper(tau)
    a, b, c, d = 1, 0, 0, 1
    z = z0
    for _ in range(max_iter):
        n = math.floor(z.real + 0.5)
        if n:
            z -= n
            a, b = a - n * c, b - n * d
        if abs(z) < 1 - BOUNDARY_EPS:
            z = -1 / z
            a, b, c, d = -c, -d, a, b
        else:
            break
    else:
        raise ReductionError(f"reduction of {z0} did not converge in {max_iter} steps")
    if z.real >= 0.5 - BOUNDARY_EPS:
        z -= 1
        a, b = a - c, b - d
    if abs(abs(z) - 1) <= BOUNDARY_EPS and z.real > BOUNDARY_EPS:
        z = -1 / z
        a, b, c, d = -c, -d, a, b
    gamma = Moebius(a, b, c, d)
    if (a, b, c, d) != (1, 0, 0, 1):
        # one-shot evaluation from the integer matrix avoids accumulated rounding
        z = act(gamma, exact if exact is not None else z0)
    return FundamentalDomainElement(z), gamma


@dataclass(frozen=True)
class JJet:
    """Value and first three tau-derivatives of j (or of j composed with a Moebius map)."""

    j: complex
    j1: complex
    j2: complex
    j3: complex

    def as_tuple(self) -> tuple[complex, complex, complex, complex]:
        return (self.j, self.j1, self.j2, self.j3)


def _check_tail(series: QSeries, tau_reduced: complex, tol: float, derivatives: int):
    abs_q = math.exp(-2 * math.pi * tau_reduced.imag)
    for k in range(derivatives + 1):
        bound = series.tail_bound(abs_q, k)
        if bound > tol:
            raise TruncationError(
                f"series order {series.truncation_order} leaves a tail of {bound:.3g} "
                f"in derivative {k}, above tol = {tol:g}"
            )


def eval_j(tau, tol: float = DEFAULT_TOL, series=None) -> complex:
    """j(tau), summed on the reduced point."""
    series = _series(series)
    fd, _ = reduce_to_fundamental_domain(tau)
    _check_tail(series, fd.tau, tol, 0)
    return complex(_sum_series(fd.tau, series, 0)[0])


def pullback_jet(jet: JJet, g: Moebius, z: complex) -> JJet:
    """Jet of z -> f(g z) at z, given the jet of f at g z."""
    g1 = act_derivative(g, z)
    g2 = act_second_derivative(g, z)
    g3 = act_third_derivative(g, z)
    return JJet(
        jet.j,
        jet.j1 * g1,
        jet.j2 * g1**2 + jet.j1 * g2,
        jet.j3 * g1**3 + 3 * jet.j2 * g1 * g2 + jet.j1 * g3,
    )


def eval_j_jet(tau, tol: float = DEFAULT_TOL, series=None) -> JJet:
    """(j, j', j'', j''') at tau; derivatives are with respect to tau."""
    series = _series(series)
    z = _upper(tau)
    fd, gamma = reduce_to_fundamental_domain(z)
    _check_tail(series, fd.tau, tol, 3)
    values = [complex(v) for v in _sum_series(fd.tau, series, 3)]
    jet = JJet(*values)
    if gamma.entries == (1, 0, 0, 1):
        return jet
    return pullback_jet(jet, gamma, z)


def composed_jet(g: Moebius, z: complex, tol: float = DEFAULT_TOL, series=None) -> JJet:
    """Jet of z -> j(g z) at z."""
    gz = act(g, z)
    return pullback_jet(eval_j_jet(gz, tol=tol, series=series), g, z)


def r_coefficient(w: complex) -> complex:
    """R(w) = (w^2 - 1968 w + 2654208) / (2 w^2 (w - 1728)^2)."""
    return (w * w - 1968 * w + 2654208) / (2 * w * w * (w - 1728) ** 2)


def schwarzian(jet: JJet) -> complex:
    return jet.j3 / jet.j1 - 1.5 * (jet.j2 / jet.j1) ** 2


def schwarzian_residual(jet: JJet, pole_tol: float = 1e-10) -> complex:
    """Residual of the third-order equation satisfied by every j(g z)."""
    if jet.j1 == 0:
        raise ZeroDivisionError("residual undefined: first derivative is zero")
    if abs(jet.j) < pole_tol or abs(jet.j - 1728) < pole_tol:
        raise ZeroDivisionError(f"residual undefined: j = {jet.j} is a pole of R")
    return schwarzian(jet) + r_coefficient(jet.j) * jet.j1**2


@lru_cache(maxsize=4)
def _seed_grid(series: QSeries):
    re = np.linspace(-0.5, 0.5, 41)[:-1]
    im = np.linspace(0.86, 2.0, 30)
    grid = (re[None, :] + 1j * im[:, None]).ravel()
    grid = grid[np.abs(grid) >= 1.0]
    values = _sum_series(grid, series, 0)[0]
    return grid, values


# local expansions at the ramified points: j ~ 1728 + A (tau - i)^2, j ~ B (tau - rho)^3
@lru_cache(maxsize=4)
def _ramified_coefficients(series: QSeries):
    jet_i = [complex(v) for v in _sum_series(1j, series, 3)]
    jet_rho = [complex(v) for v in _sum_series(RHO, series, 3)]
    return jet_i[2] / 2, jet_rho[3] / 6


def _newton_j(tau0: complex, w: complex, series: QSeries, max_iter: int = 80) -> complex:
    tau = tau0
    for _ in range(max_iter):
        fd, gamma = reduce_to_fundamental_domain(tau)
        tau = fd.tau
        vals = _sum_series(tau, series, 1)
        f, fp = complex(vals[0]) - w, complex(vals[1])
        if f == 0 or fp == 0:
            return tau
        step = f / fp
        t = 1.0
        for _ in range(9):
            cand = tau - t * step
            if cand.imag > 0.1:
                f_new = complex(_sum_series(reduce_to_fundamental_domain(cand)[0].tau, series, 0)[0]) - w
                if abs(f_new) <= abs(f):
                    break
            t *= 0.5
        else:
            return tau
        tau = cand
        if abs(t * step) < 1e-15 * (1 + abs(tau)):
            break
    return reduce_to_fundamental_domain(tau)[0].tau


def invert_j(w, tol: float = DEFAULT_TOL, series=None, ramification_tol: float = 1e-6) -> FundamentalDomainElement:
    """The unique tau in the fundamental domain with j(tau) = w.

    Accuracy is judged relative to max(1, |w|), since j grows like exp(2 pi Im tau).
    """
    series = _series(series)
    w = complex(w)
    if w == 0:
        return FundamentalDomainElement(RHO, 3)
    if w == 1728:
        return FundamentalDomainElement(1j, 2)
    ram = 1
    if abs(w) < ramification_tol:
        ram = 3
    elif abs(w - 1728) < ramification_tol * 1728:
        ram = 2

    seeds = []
    a_i, b_rho = _ramified_coefficients(series)
    for k in range(2):
        seeds.append(1j + cmath.sqrt((w - 1728) / a_i) * (-1) ** k)
    root = (w / b_rho) ** (1 / 3) if w != 0 else 0
    for k in range(3):
        seeds.append(RHO + root * cmath.exp(2j * math.pi * k / 3))
    if abs(w) > 3000:
        seeds.append(cmath.log(1 / w) / TWO_PI_I)
    grid, values = _seed_grid(series)
    order = np.argsort(np.abs(values - w))
    seeds.extend(complex(grid[i]) for i in order[:6])

    scale = max(1.0, abs(w))
    seeds = [reduce_to_fundamental_domain(s)[0].tau for s in seeds if s.imag > 0.1 and cmath.isfinite(s)]
    seeds = [s for s in seeds if s.imag < 40]  # beyond this j overflows double precision
    residuals = [abs(complex(_sum_series(s, series, 0)[0]) - w) for s in seeds]
    best = None
    for idx in np.argsort(residuals):
        s = seeds[idx]
        tau = _newton_j(s, w, series)
        err = abs(complex(_sum_series(tau, series, 0)[0]) - w)
        if best is None or err < best[1]:
            best = (tau, err)
        if err <= tol * scale:
            break
    if best is None or best[1] > tol * scale:
        raise InversionError(f"Newton failed to invert j at w = {w} (best residual {best[1] if best else None})")
    tau = best[0]
    if not in_fundamental_domain(tau):
        tau = reduce_to_fundamental_domain(tau)[0].tau
    return FundamentalDomainElement(tau, ram)
