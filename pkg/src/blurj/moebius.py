"""Linear fractional transformations and the subgroups used for blurring.

A :class:`Moebius` holds its four entries in whatever arithmetic they were
created with: Python ints, :class:`fractions.Fraction`, :class:`GaussianRational`
or complex floats. Exact entries stay exact under composition; conversion to
floating point happens only when a matrix acts on a point.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterator, Union

import numpy as np


class PoleError(ZeroDivisionError):
    """Raised when cz + d vanishes at the point of evaluation."""


class ApproximationError(ValueError):
    """The subgroup constraints cannot be met at the requested denominator bound."""


class ZetaDomainError(ValueError):
    """Input lies outside the domain of the jet-matching solver.

    ``exclusion`` names which condition failed: ``"w1_zero"``,
    ``"ramified_value"`` or ``"degenerate"``.
    """

    def __init__(self, message: str, exclusion: str):
        super().__init__(message)
        self.exclusion = exclusion


@dataclass(frozen=True)
class GaussianRational:
    """An element re + im*i of Q(i), stored as two Fractions."""

    re: Fraction
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", Fraction(self.re))
        object.__setattr__(self, "im", Fraction(self.im))

    @staticmethod
    def coerce(x) -> "GaussianRational":
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, (int, Fraction)):
            return GaussianRational(Fraction(x))
        return NotImplemented

    def __add__(self, other):
        o = GaussianRational.coerce(other)
        if o is NotImplemented:
            return complex(self) + other
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = GaussianRational.coerce(other)
        if o is NotImplemented:
            return complex(self) * other
        return GaussianRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = GaussianRational.coerce(other)
        if o is NotImplemented:
            return complex(self) / other
        norm = o.re * o.re + o.im * o.im
        if norm == 0:
            raise ZeroDivisionError("division by zero in Q(i)")
        return self * GaussianRational(o.re / norm, -o.im / norm)

    def __rtruediv__(self, other):
        o = GaussianRational.coerce(other)
        if o is NotImplemented:
            return other / complex(self)
        return o / self

    def __eq__(self, other):
        o = GaussianRational.coerce(other)
        if o is NotImplemented:
            return complex(self) == other
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __abs__(self):
        return abs(complex(self))

    def __str__(self):
        return f"{self.re}+{self.im}i" if self.im >= 0 else f"{self.re}{self.im}i"


Number = Union[int, Fraction, GaussianRational, float, complex]


def _is_exact(x) -> bool:
    return isinstance(x, (int, Fraction, GaussianRational)) and not isinstance(x, bool)


@dataclass(frozen=True)
class Moebius:
    """The matrix ((a, b), (c, d)) acting by z -> (az + b) / (cz + d)."""

    a: Number
    b: Number
    c: Number
    d: Number

    def __post_init__(self):
        if self.det == 0:
            raise ValueError("Moebius matrix must have nonzero determinant")

    @classmethod
    def identity(cls) -> "Moebius":
        return cls(1, 0, 0, 1)

    @classmethod
    def from_array(cls, m) -> "Moebius":
        m = np.asarray(m)
        return cls(complex(m[0, 0]), complex(m[0, 1]), complex(m[1, 0]), complex(m[1, 1]))

    @property
    def entries(self) -> tuple:
        return (self.a, self.b, self.c, self.d)

    @property
    def det(self):
        return self.a * self.d - self.b * self.c

    @property
    def is_exact(self) -> bool:
        return all(_is_exact(x) for x in self.entries)

    def complex_entries(self) -> tuple[complex, complex, complex, complex]:
        return tuple(complex(x) for x in self.entries)

    def to_array(self) -> np.ndarray:
        return np.array(self.complex_entries(), dtype=complex).reshape(2, 2)

    def __matmul__(self, other: "Moebius") -> "Moebius":
        a, b, c, d = self.entries
        e, f, g, h = other.entries
        return Moebius(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)

    def inverse(self) -> "Moebius":
        det = self.det
        return Moebius(self.d / det, -self.b / det, -self.c / det, self.a / det)

    def scaled(self, lam) -> "Moebius":
        return Moebius(*(lam * x for x in self.entries))

    def __neg__(self) -> "Moebius":
        return Moebius(*(-x for x in self.entries))

    def act(self, z: complex) -> complex:
        return act(self, z)

    def max_entry_distance(self, other: "Moebius") -> float:
        return float(np.max(np.abs(self.to_array() - other.to_array())))


def exact_point(z) -> GaussianRational:
    """z as an element of Q(i); floats are converted from their exact binary value."""
    if isinstance(z, GaussianRational):
        return z
    z = complex(z)
    return GaussianRational(Fraction(z.real), Fraction(z.imag))


def _denominator(g: Moebius, z: complex) -> tuple[complex, complex]:
    """(cz + d, az + b) as complex numbers.

    Exact matrices are applied to the binary value of z in exact arithmetic
    before rounding, so large entries from the subgroup approximation do not
    cancel catastrophically.
    """
    if g.is_exact and (isinstance(z, GaussianRational) or cmath.isfinite(complex(z))):
        zq = exact_point(z)
        den = g.c * zq + g.d
        if den == 0:
            raise PoleError(f"cz + d = 0 at z = {z}")
        return complex(den), complex(g.a * zq + g.b)
    a, b, c, d = g.complex_entries()
    den = c * z + d
    if den == 0:
        raise PoleError(f"cz + d = 0 at z = {z}")
    return den, a * z + b


def act(g: Moebius, z: complex) -> complex:
    den, num = _denominator(g, z)
    return num / den


def act_exact(g: Moebius, z) -> GaussianRational:
    """g.z computed in Q(i); g must be exact, a float z is taken at its binary value."""
    if not g.is_exact:
        raise TypeError("act_exact needs exact matrix entries")
    zq = exact_point(z)
    den = g.c * zq + g.d
    if den == 0:
        raise PoleError(f"cz + d = 0 at z = {z}")
    return (g.a * zq + g.b) / den


def act_derivative(g: Moebius, z: complex) -> complex:
    """d/dz of g.z, equal to det(g) / (cz + d)^2."""
    den, _ = _denominator(g, z)
    return complex(g.det) / den**2


def act_second_derivative(g: Moebius, z: complex) -> complex:
    den, _ = _denominator(g, z)
    c = complex(g.c)
    return -2 * c * complex(g.det) / den**3


def act_third_derivative(g: Moebius, z: complex) -> complex:
    den, _ = _denominator(g, z)
    c = complex(g.c)
    return 6 * c * c * complex(g.det) / den**4


def canonical_sign(g: Moebius, eps: float = 0.0) -> Moebius:
    """Pick the representative of {g, -g} whose first nonzero entry has argument in (-pi/2, pi/2]."""
    for x in g.complex_entries():
        if abs(x) > eps:
            phase = cmath.phase(x)
            return g if -math.pi / 2 < phase <= math.pi / 2 else -g
    return g


def transporter(z1: complex, z2: complex) -> Moebius:
    """The unique map tau -> a*tau + b (a > 0, b real) sending z1 to z2."""
    z1, z2 = complex(z1), complex(z2)
    if z1.imag <= 0 or z2.imag <= 0:
        raise ValueError("transporter needs both points in the upper half-plane")
    x, y = z1.real, z1.imag
    u, v = z2.real, z2.imag
    return Moebius(v / y, u - x * v / y, 0.0, 1.0)


def zeta_D(
    z: complex,
    w: complex,
    w1: complex,
    w2: complex,
    D: complex = 1.0,
    branch: int = 1,
    tol: float = 1e-8,
    ramification_tol: float = 1e-6,
    series=None,
) -> Moebius:
    """Matrix g with det g = D whose jet (j(gz), (j(gz))', (j(gz))'') at z is (w, w1, w2).

    ``branch`` is +1 for the principal square root and -1 for the other
    sheet; the two answers differ by an overall sign, so they act identically.
    """
    from .modular_eval import eval_j_jet, invert_j

    z, w, w1, w2, D = complex(z), complex(w), complex(w1), complex(w2), complex(D)
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    if D == 0:
        raise ValueError("D must be nonzero")
    if w1 == 0:
        raise ZetaDomainError("first derivative w1 is zero", "w1_zero")
    if abs(w) < ramification_tol or abs(w - 1728) < ramification_tol * 1728:
        raise ZetaDomainError(f"w = {w} is a ramified value of j (j' vanishes at its preimage)", "ramified_value")

    tau_t = invert_j(w, tol=tol, series=series).tau
    jet = eval_j_jet(tau_t, tol=tol, series=series)
    if jet.j1 == 0:
        raise ZetaDomainError("j' vanishes at the preimage of w", "ramified_value")

    s = branch * cmath.sqrt(D * jet.j1 / w1)  # s = cz + d
    c = s / (2 * w1) * (jet.j2 * (w1 / jet.j1) ** 2 - w2)
    d = s - c * z
    if abs(s) < tol:
        raise ZetaDomainError("cz + d is degenerate", "degenerate")
    a = D / s + c * tau_t
    b = tau_t * s - a * z
    return Moebius(a, b, c, d)


class GroupKind(enum.Enum):
    G_CAL_Q = "G_CAL_Q"  # maps tau -> a*tau + b with a > 0, a, b rational
    GL2Q_PLUS = "GL2Q_PLUS"
    SL2_GAUSSIAN = "SL2_GAUSSIAN"
    SL2Q_UPPER = "SL2Q_UPPER"
    TRIVIAL = "TRIVIAL"  # identity only; negative control


@dataclass(frozen=True)
class GroupSpec:
    kind: GroupKind
    denominator_bound: int = 1000

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", GroupKind(self.kind))
        if self.denominator_bound < 1:
            raise ValueError("denominator_bound must be a positive integer")

    def contains(self, g: Moebius) -> bool:
        """Exact membership test; floating entries are never members."""
        a, b, c, d = g.entries
        if self.kind is GroupKind.TRIVIAL:
            return all(isinstance(x, (int, Fraction)) for x in g.entries) and (a, b, c, d) == (1, 0, 0, 1)
        if self.kind is GroupKind.SL2_GAUSSIAN:
            if not all(isinstance(x, (int, Fraction, GaussianRational)) for x in g.entries):
                return False
            return GaussianRational.coerce(g.det) == GaussianRational(1)
        if not all(isinstance(x, (int, Fraction)) for x in g.entries):
            return False
        if self.kind is GroupKind.G_CAL_Q:
            return c == 0 and d == 1 and a > 0
        if self.kind is GroupKind.SL2Q_UPPER:
            return c == 0 and a > 0 and g.det == 1
        return g.det > 0  # GL2Q_PLUS


def continued_fraction(x: Fraction) -> Iterator[int]:
    while True:
        q = math.floor(x)
        yield q
        rem = x - q
        if rem == 0:
            return
        x = 1 / rem


def convergents(x) -> Iterator[Fraction]:
    """Continued-fraction convergents of x (computed from its exact binary value)."""
    h0, h1 = 0, 1
    k0, k1 = 1, 0
    for a in continued_fraction(Fraction(x)):
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        yield Fraction(h1, k1)


def best_convergent(x: float, bound: int) -> Fraction:
    """Last convergent of |x| with denominator <= bound, carrying the sign of x."""
    if x == 0:
        return Fraction(0)
    best = None
    for conv in convergents(abs(x)):
        if conv.denominator > bound:
            break
        best = conv
    assert best is not None  # the first convergent is an integer
    return best if x > 0 else -best


def _positive_convergent(x: float, bound: int) -> Fraction:
    """best_convergent for x > 0, but never 0: below 1/bound the nearest admissible value is 1/bound."""
    q = best_convergent(x, bound)
    return q if q > 0 else Fraction(1, bound)


def _approx_gaussian(z: complex, bound: int) -> GaussianRational:
    return GaussianRational(best_convergent(z.real, bound), best_convergent(z.imag, bound))


def _real_entries(g: Moebius, what: str) -> tuple[float, float, float, float]:
    vals = g.complex_entries()
    scale = max(abs(v) for v in vals)
    if any(abs(v.imag) > 1e-9 * scale for v in vals):
        raise ApproximationError(f"{what} needs a real matrix")
    return tuple(v.real for v in vals)


def rational_approx(g: Moebius, spec: GroupSpec) -> Moebius:
    """Exact member of the subgroup named by ``spec`` entrywise close to g."""
    bound = spec.denominator_bound
    kind = spec.kind
    if kind is GroupKind.TRIVIAL:
        return Moebius.identity()

    if kind is GroupKind.SL2_GAUSSIAN:
        det = complex(g.det)
        a, b, c, d = (x / cmath.sqrt(det) for x in g.complex_entries())
        ga, gb, gc, gd = (_approx_gaussian(x, bound) for x in (a, b, c, d))
        # fix the entry opposite the largest one so that det = 1 exactly
        pivot = int(np.argmax([abs(a), abs(b), abs(c), abs(d)]))
        one = GaussianRational(1)
        try:
            if pivot == 0:
                gd = (one + gb * gc) / ga
            elif pivot == 3:
                ga = (one + gb * gc) / gd
            elif pivot == 1:
                gc = (ga * gd - one) / gb
            else:
                gb = (ga * gd - one) / gc
        except ZeroDivisionError:
            raise ApproximationError(f"pivot entry rounds to zero at bound {bound}") from None
        return Moebius(ga, gb, gc, gd)

    a, b, c, d = _real_entries(g, kind.value)
    if kind is GroupKind.GL2Q_PLUS:
        if a * d - b * c <= 0:
            raise ApproximationError("GL2Q_PLUS needs positive determinant")
        if c == 0:
            # upper triangular: normalise like the affine group, which sits inside GL2+(Q)
            return Moebius(_positive_convergent(a / d, bound), best_convergent(b / d, bound), Fraction(0), Fraction(1))
        entries = [best_convergent(x, bound) for x in (a, b, c, d)]
        if entries[0] * entries[3] - entries[1] * entries[2] <= 0:
            raise ApproximationError(f"approximation loses positive determinant at bound {bound}")
        return Moebius(*entries)

    scale = max(abs(a), abs(b), abs(d))
    if abs(c) > 1e-12 * scale:
        raise ApproximationError(f"{kind.value} needs an upper-triangular matrix")
    if kind is GroupKind.G_CAL_Q:
        a, b = a / d, b / d
        if a <= 0:
            raise ApproximationError("G_CAL_Q needs a > 0")
        qa = _positive_convergent(a, bound)
        return Moebius(qa, best_convergent(b, bound), 0, 1)

    # SL2Q_UPPER: same action, normalised to determinant 1
    det = a * d
    if det <= 0:
        raise ApproximationError("SL2Q_UPPER needs positive determinant")
    s = math.copysign(math.sqrt(det), a)
    a, b = a / s, b / s
    qa = _positive_convergent(a, bound)
    return Moebius(qa, best_convergent(b, bound), 0, 1 / qa)
