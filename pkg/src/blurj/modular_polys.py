"""Classical modular polynomials Phi_N built from q-expansions.

Phi_N(X, j(tau)) = prod (X - j((a tau + b) / d)) over a d = N, 0 <= b < d,
gcd(a, b, d) = 1. Each factor is a series in t = q^(1/N) whose coefficients
live in Z[zeta_N]; we compute in Z[x] / (cyclotomic_N(x)) with exact integers,
so every symmetric function comes out as an exact integer q-series, which is
then rewritten as a polynomial in j by peeling off leading terms.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from math import gcd

import numpy as np

from .qseries import j_coefficients, j_power_series

N_MAX_DEFAULT = 5


class RoundingError(ArithmeticError):
    """The truncated expansion was too short to pin down integer coefficients."""


# -- arithmetic in Z[x] / (Phi_cyc_N(x)) -------------------------------------------------


def _poly_divmod_monic(num: list[int], den: list[int]) -> tuple[list[int], list[int]]:
    """Quotient and remainder of integer polynomials (lowest degree first), den monic."""
    num = list(num)
    dn = len(den) - 1
    if len(num) - 1 < dn:
        return [0], num
    quot = [0] * (len(num) - dn)
    for k in range(len(num) - 1, dn - 1, -1):
        coef = num[k]
        if coef:
            quot[k - dn] = coef
            for i, di in enumerate(den):
                num[k - dn + i] -= coef * di
    return quot, num[:dn] if dn else [0]


def cyclotomic(n: int) -> list[int]:
    """Coefficients of the n-th cyclotomic polynomial, lowest degree first."""
    poly = [-1] + [0] * (n - 1) + [1]  # x^n - 1
    for d in range(1, n):
        if n % d == 0:
            poly, rem = _poly_divmod_monic(poly, cyclotomic(d))
            assert not any(rem)
    return poly


class _Cyclo:
    """Reduction context for Z[zeta_N] with basis 1, x, ..., x^(phi(N)-1)."""

    def __init__(self, n: int):
        self.n = n
        self.modulus = cyclotomic(n)
        self.dim = len(self.modulus) - 1
        # reductions of x^k for 0 <= k < n
        self.powers = []
        for k in range(n):
            mono = [0] * k + [1]
            _, rem = _poly_divmod_monic(mono, self.modulus)
            rem = (list(rem) + [0] * self.dim)[: self.dim]
            self.powers.append(tuple(rem))
        self.zero = (0,) * self.dim
        self.one = self.powers[0]

    def scale_power(self, c: int, k: int) -> tuple[int, ...]:
        return tuple(c * v for v in self.powers[k % self.n])

    def add(self, u, v):
        return tuple(a + b for a, b in zip(u, v))

    def neg(self, u):
        return tuple(-a for a in u)

    def mul(self, u, v):
        if not any(u) or not any(v):
            return self.zero
        prod = [0] * (2 * self.dim - 1)
        for i, a in enumerate(u):
            if a:
                for j, b in enumerate(v):
                    if b:
                        prod[i + j] += a * b
        _, rem = _poly_divmod_monic(prod, self.modulus)
        return tuple((list(rem) + [0] * self.dim)[: self.dim])


# -- truncated Laurent series in t with Z[zeta_N] coefficients ---------------------------


@dataclass
class _Series:
    """Coefficients indexed by exponent offset: terms[k] multiplies t^(val + k)."""

    val: int
    terms: list


def _series_mul(ring: _Cyclo, u: _Series, v: _Series, max_exp: int) -> _Series:
    val = u.val + v.val
    length = max_exp - val + 1
    out = [ring.zero] * max(length, 0)
    for i, a in enumerate(u.terms):
        if i >= length or not any(a):
            continue
        for k, b in enumerate(v.terms[: length - i]):
            if any(b):
                out[i + k] = ring.add(out[i + k], ring.mul(a, b))
    return _Series(val, out)


def _series_add(ring: _Cyclo, u: _Series, v: _Series) -> _Series:
    val = min(u.val, v.val)
    top = max(u.val + len(u.terms), v.val + len(v.terms))
    out = [ring.zero] * (top - val)
    for s in (u, v):
        for i, a in enumerate(s.terms):
            out[s.val - val + i] = ring.add(out[s.val - val + i], a)
    return _Series(val, out)


def hecke_orbit(n: int) -> list[tuple[int, int, int]]:
    """Triples (a, b, d) with a*d = n, 0 <= b < d and gcd(a, b, d) = 1."""
    out = []
    for a in range(1, n + 1):
        if n % a:
            continue
        d = n // a
        for b in range(d):
            if gcd(gcd(a, b), d) == 1:
                out.append((a, b, d))
    return out


def _factor_series(ring: _Cyclo, n: int, a: int, b: int, max_exp: int, coeffs) -> _Series:
    """j((a tau + b) / d) as a series in t = exp(2 pi i tau / n)."""
    # exp(2 pi i m (a tau + b) / d) = t^(m a^2) * zeta_n^(m a b)
    step = a * a
    val = -step
    length = max_exp - val + 1
    terms = [ring.zero] * max(length, 0)
    for idx, c in enumerate(coeffs):
        m = idx - 1
        e = m * step - val
        if e >= length:
            break
        terms[e] = ring.scale_power(c, m * a * b)
    return _Series(val, terms)


@dataclass(frozen=True)
class ModularPolynomial:
    """Phi_N as a dict {(i, k): c} meaning c * X^i * Y^k, exact integers."""

    level: int
    coefficients: dict = field(hash=False, compare=True)

    @property
    def degree(self) -> tuple[int, int]:
        return (max(i for i, _ in self.coefficients), max(k for _, k in self.coefficients))

    def coefficient(self, i: int, k: int) -> int:
        return self.coefficients.get((i, k), 0)

    def is_symmetric(self) -> bool:
        return all(self.coefficients.get((k, i), 0) == c for (i, k), c in self.coefficients.items())

    def _terms(self, x: complex, y: complex):
        x, y = complex(x), complex(y)
        return [float(c) * x**i * y**k for (i, k), c in self.coefficients.items()]

    def __call__(self, x: complex, y: complex) -> complex:
        return complex(sum(self._terms(x, y)))

    def relative_residual(self, x: complex, y: complex) -> float:
        """|Phi(x, y)| divided by the sum of the absolute values of its monomials."""
        terms = self._terms(x, y)
        scale = sum(abs(t) for t in terms)
        return abs(sum(terms)) / scale if scale else 0.0

    def specialize_x(self, x: complex) -> np.ndarray:
        """Coefficients of Y -> Phi(x, Y), highest degree first (numpy.roots order)."""
        x = complex(x)
        deg_y = self.degree[1]
        out = np.zeros(deg_y + 1, dtype=complex)
        for (i, k), c in self.coefficients.items():
            out[deg_y - k] += float(c) * x**i
        return out

    def to_text(self) -> str:
        """One term per line: ``c a b`` for c * X^a * Y^b."""
        lines = [f"# Phi_{self.level}"]
        for (i, k) in sorted(self.coefficients, reverse=True):
            lines.append(f"{self.coefficients[(i, k)]} {i} {k}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, level: int | None = None) -> "ModularPolynomial":
        coeffs = {}
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if level is None and line[1:].strip().startswith("Phi_"):
                    level = int(line[1:].strip()[4:])
                continue
            c, i, k = line.split()
            coeffs[(int(i), int(k))] = int(c)
        if level is None:
            raise ValueError("level not given and no '# Phi_N' header found")
        return cls(level, coeffs)


def _to_j_polynomial(qs: dict[int, int], top: int) -> dict[int, int]:
    """Write an integer q-series (exponent -> coeff, known up to q^top) as a polynomial in j."""
    qs = {e: c for e, c in qs.items() if c}
    out: dict[int, int] = {}
    while qs:
        lead = min(qs)
        if lead > 0:
            break
        m = -lead
        c = qs[lead]
        out[m] = out.get(m, 0) + c
        for e, v in j_power_series(m, -m, top).items():
            qs[e] = qs.get(e, 0) - c * v
            if qs[e] == 0:
                del qs[e]
    if any(e <= top for e in qs):
        raise RoundingError("q-series is not a polynomial in j to the computed precision")
    return out


def _build(n: int, extra: int) -> ModularPolynomial:
    if n == 1:
        return ModularPolynomial(1, {(1, 0): 1, (0, 1): -1})
    ring = _Cyclo(n)
    orbit = hecke_orbit(n)
    pole = sum(a * a for a, _, _ in orbit)
    top_q = extra
    max_exp = n * top_q + pole
    coeffs = j_coefficients(max_exp + 2)

    # polynomial in X, stored as list of series, lowest X-degree first
    poly = [_Series(0, [ring.one])]
    for a, b, d in orbit:
        f = _factor_series(ring, n, a, b, max_exp, coeffs)
        neg_f = _Series(f.val, [ring.neg(t) for t in f.terms])
        new = [None] * (len(poly) + 1)
        for k, s in enumerate(poly):
            prod = _series_mul(ring, s, neg_f, max_exp)
            new[k] = prod if new[k] is None else _series_add(ring, new[k], prod)
            new[k + 1] = s if new[k + 1] is None else _series_add(ring, new[k + 1], s)
        poly = new

    result: dict[tuple[int, int], int] = {}
    for deg_x, s in enumerate(poly):
        qs: dict[int, int] = {}
        for i, term in enumerate(s.terms):
            e = s.val + i
            if e > n * top_q:
                break
            if any(term[1:]):
                raise RoundingError(f"coefficient of t^{e} is not rational")
            if term[0] == 0:
                continue
            if e % n:
                raise RoundingError(f"t^{e} survives with exponent not divisible by {n}")
            qs[e // n] = term[0]
        for deg_y, c in _to_j_polynomial(qs, top_q).items():
            if c:
                result[(deg_x, deg_y)] = c
    return ModularPolynomial(n, result)


_cache: dict[tuple[int, int], ModularPolynomial] = {}
_cache_lock = threading.Lock()


def build_phi(n: int, n_max: int = N_MAX_DEFAULT, extra: int = 4) -> ModularPolynomial:
    """Phi_n from q-expansions; ``extra`` is how many q-orders past q^0 are checked to vanish."""
    if not 1 <= n <= n_max:
        raise ValueError(f"level {n} outside [1, {n_max}]")
    key = (n, extra)
    phi = _cache.get(key)
    if phi is None:
        with _cache_lock:
            phi = _cache.get(key)
            if phi is None:
                phi = _build(n, extra)
                _cache[key] = phi
    return phi


def modular_relation(w1: complex, w2: complex, n_max: int = N_MAX_DEFAULT, tol: float = 1e-6) -> int | None:
    """Smallest level N <= n_max with Phi_N(w1, w2) ~ 0 (relative residual below tol)."""
    for n in range(1, n_max + 1):
        if build_phi(n, n_max).relative_residual(w1, w2) < tol:
            return n
    return None


@dataclass(frozen=True)
class OrbitMatch:
    root: complex
    matrix: tuple[int, int, int]
    orbit_value: complex
    error: float


def _polish(coeffs: np.ndarray, r: complex, steps: int = 6) -> complex:
    dcoeffs = np.polyder(coeffs)
    for _ in range(steps):
        f = np.polyval(coeffs, r)
        fp = np.polyval(dcoeffs, r)
        if fp == 0:
            break
        cand = r - f / fp
        if abs(np.polyval(coeffs, cand)) >= abs(f):
            break
        r = cand
    return complex(r)


def hecke_orbit_matching(tau: complex, n: int, n_max: int = N_MAX_DEFAULT, series=None) -> list[OrbitMatch]:
    """Match the roots of Phi_N(j(tau), Y) to j(g tau) over the orbit matrices (a, b; 0, d)."""
    from scipy.optimize import linear_sum_assignment

    from .modular_eval import eval_j

    tau = complex(tau)
    orbit = hecke_orbit(n)
    values = [eval_j((a * tau + b) / d, series=series) for a, b, d in orbit]
    if n == 1:
        return [OrbitMatch(values[0], orbit[0], values[0], 0.0)]
    phi = build_phi(n, n_max)
    coeffs = phi.specialize_x(eval_j(tau, series=series))
    roots = [_polish(coeffs, r) for r in np.roots(coeffs)]
    if len(roots) != len(values):
        raise ArithmeticError("root count differs from orbit size")
    cost = np.array([[abs(r - v) / max(1.0, abs(v)) for v in values] for r in roots])
    rows, cols = linear_sum_assignment(cost)
    return [OrbitMatch(roots[r], orbit[c], values[c], float(cost[r, c])) for r, c in zip(rows, cols)]


def hecke_closure_check(tau: complex, n: int, n_max: int = N_MAX_DEFAULT, tol: float = 1e-6, series=None) -> bool:
    """True iff every root of Phi_N(j(tau), Y) is j(g tau) for an explicit orbit matrix g."""
    return all(m.error < tol for m in hecke_orbit_matching(tau, n, n_max, series=series))
