"""Polynomial systems in (z, w) or (z, w, p, q) coordinates and their numeric audits.

Dimensions here are tangent-space dimensions at sample points, computed
from the numeric rank of the Jacobian. They agree with the algebraic
dimension at regular points only, and every verdict should be read as
"numeric, at sampled regular points".
"""

from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

RANK_TOL = 1e-8
N_CAP = 12


class VarietyParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class NotOnVarietyError(ValueError):
    pass


class SamplingError(RuntimeError):
    pass


class Mode(enum.Enum):
    j = "j"
    J = "J"

    @property
    def blocks(self) -> tuple[str, ...]:
        return ("z", "w") if self is Mode.j else ("z", "w", "p", "q")


def variable_names(mode: Mode, n: int) -> tuple[str, ...]:
    return tuple(f"{b}{k}" for b in mode.blocks for k in range(1, n + 1))


@dataclass(frozen=True)
class MultiPoly:
    """Sum of c * prod(x_v ** e_v); ``terms`` maps exponent tuples to complex coefficients."""

    variables: tuple[str, ...]
    terms: dict = field(default_factory=dict, hash=False)

    def __post_init__(self):
        m = len(self.variables)
        clean = {}
        for exps, c in self.terms.items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != m or any(e < 0 for e in exps):
                raise ValueError(f"bad exponent vector {exps} for {m} variables")
            c = complex(c)
            if c != 0:
                clean[exps] = clean.get(exps, 0) + c
        object.__setattr__(self, "terms", {e: c for e, c in sorted(clean.items()) if c != 0})

    @classmethod
    def constant(cls, variables, value) -> "MultiPoly":
        return cls(tuple(variables), {(0,) * len(variables): value})

    @classmethod
    def variable(cls, variables, name: str) -> "MultiPoly":
        exps = tuple(1 if v == name else 0 for v in variables)
        return cls(tuple(variables), {exps: 1})

    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.variables != self.variables:
                raise ValueError("variable lists differ")
            return other
        return MultiPoly.constant(self.variables, other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return MultiPoly(self.variables, out)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.variables, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return MultiPoly(self.variables, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not polynomial")
        out = MultiPoly.constant(self.variables, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        return isinstance(other, MultiPoly) and self.variables == other.variables and self.terms == other.terms

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def substitute(self, values: dict[str, "MultiPoly"]) -> "MultiPoly":
        """Replace variables by polynomials (in the same variable list)."""
        out = MultiPoly(self.variables, {})
        for exps, c in self.terms.items():
            term = MultiPoly.constant(self.variables, c)
            for v, e in zip(self.variables, exps):
                if e:
                    term = term * (values[v] if v in values else MultiPoly.variable(self.variables, v)) ** e
            out = out + term
        return out

    @cached_property
    def _arrays(self):
        if not self.terms:
            m = len(self.variables)
            return np.zeros((0, m), dtype=int), np.zeros(0, dtype=complex)
        exps = np.array(list(self.terms.keys()), dtype=int)
        coeffs = np.array(list(self.terms.values()), dtype=complex)
        return exps, coeffs

    @cached_property
    def _grad_arrays(self):
        exps, coeffs = self._arrays
        out = []
        for v in range(len(self.variables)):
            mask = exps[:, v] > 0 if len(exps) else np.zeros(0, dtype=bool)
            e = exps[mask].copy()
            c = coeffs[mask] * exps[mask, v]
            if len(e):
                e[:, v] -= 1
            out.append((e, c))
        return out

    def term_values(self, x) -> np.ndarray:
        exps, coeffs = self._arrays
        x = np.asarray(x, dtype=complex)
        return coeffs * np.prod(x[None, :] ** exps, axis=1)

    def __call__(self, x) -> complex:
        return complex(self.term_values(x).sum())

    def scale(self, x) -> float:
        """Size of the largest contributions at x, floored at 1, for relative residuals."""
        return max(1.0, float(np.abs(self.term_values(x)).sum()))

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        out = np.zeros(len(self.variables), dtype=complex)
        for v, (e, c) in enumerate(self._grad_arrays):
            if len(c):
                out[v] = (c * np.prod(x[None, :] ** e, axis=1)).sum()
        return out

    def to_text(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for exps, c in self.terms.items():
            factors = [_format_complex(c)]
            for v, e in zip(self.variables, exps):
                if e == 1:
                    factors.append(v)
                elif e > 1:
                    factors.append(f"{v}^{e}")
            parts.append("*".join(factors))
        return " + ".join(parts)


def _format_complex(c: complex) -> str:
    if c.imag == 0:
        return f"({c.real!r})"
    if c.real == 0:
        return f"({c.imag!r}i)"
    sign = "+" if c.imag >= 0 or np.isnan(c.imag) else "-"
    return f"({c.real!r}{sign}{abs(c.imag)!r}i)"


@dataclass(frozen=True)
class VarietySystem:
    """Polynomial equations on C^(2n) (mode j) or C^(4n) (mode J)."""

    mode: Mode
    n: int
    equations: tuple[MultiPoly, ...] = ()

    def __post_init__(self):
        if isinstance(self.mode, str):
            object.__setattr__(self, "mode", Mode(self.mode))
        if self.n < 1:
            raise ValueError("n must be at least 1")
        object.__setattr__(self, "equations", tuple(self.equations))
        for eq in self.equations:
            if eq.variables != self.variables:
                raise ValueError("equation variables do not match the system arity")

    @property
    def variables(self) -> tuple[str, ...]:
        return variable_names(self.mode, self.n)

    @property
    def arity(self) -> int:
        return len(self.mode.blocks) * self.n

    def block_slice(self, name: str) -> slice:
        i = self.mode.blocks.index(name)
        return slice(i * self.n, (i + 1) * self.n)

    def values(self, x) -> np.ndarray:
        return np.array([eq(x) for eq in self.equations], dtype=complex)

    def jacobian(self, x) -> np.ndarray:
        if not self.equations:
            return np.zeros((0, self.arity), dtype=complex)
        return np.array([eq.gradient(x) for eq in self.equations])

    def residual(self, x) -> float:
        """Largest equation value, each relative to the size of its own terms."""
        return max((abs(eq(x)) / eq.scale(x) for eq in self.equations), default=0.0)

    def with_equations(self, extra: Sequence[MultiPoly]) -> "VarietySystem":
        return VarietySystem(self.mode, self.n, self.equations + tuple(extra))

    def to_text(self) -> str:
        lines = [f"n={self.n}; mode={self.mode.value}"]
        lines += [f"{eq.to_text()} = 0" for eq in self.equations]
        return "\n".join(lines) + "\n"


def lift_to_J(V: VarietySystem) -> VarietySystem:
    """V x C^(2n): the same equations, with free derivative blocks appended."""
    if V.mode is not Mode.j:
        raise ValueError("only j-mode systems can be lifted")
    names = variable_names(Mode.J, V.n)
    pad = (0,) * (2 * V.n)
    eqs = [MultiPoly(names, {e + pad: c for e, c in eq.terms.items()}) for eq in V.equations]
    return VarietySystem(Mode.J, V.n, eqs)


# -- parsing -----------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?i?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*^(),=]))"
)


class _Parser:
    def __init__(self, text: str, line: int, col0: int, variables: tuple[str, ...]):
        self.line = line
        self.variables = variables
        self.tokens = []
        pos = 0
        stripped = text.rstrip()
        while pos < len(stripped):
            m = _TOKEN.match(stripped, pos)
            if not m or m.end() == pos:
                bad = len(stripped) - len(stripped[pos:].lstrip())
                raise VarietyParseError(f"unexpected character {stripped[bad]!r}", line, col0 + bad + 1)
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), col0 + m.start(kind) + 1))
            pos = m.end()
        self.pos = 0
        self.end_col = col0 + len(stripped) + 1

    def error(self, message: str):
        col = self.tokens[self.pos][2] if self.pos < len(self.tokens) else self.end_col
        raise VarietyParseError(message, self.line, col)

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None, self.end_col)

    def take(self, value=None):
        tok = self.peek()
        if tok[0] is None or (value is not None and tok[1] != value):
            self.error(f"expected {value!r}" if value else "unexpected end of input")
        self.pos += 1
        return tok

    def equation(self) -> MultiPoly:
        lhs = self.expr()
        self.take("=")
        rhs = self.expr()
        if self.pos != len(self.tokens):
            self.error("trailing input after equation")
        return lhs - rhs

    def expr(self) -> MultiPoly:
        out = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def term(self) -> MultiPoly:
        out = self.unary()
        while self.peek()[1] == "*":
            self.take()
            out = out * self.unary()
        return out

    def unary(self) -> MultiPoly:
        if self.peek()[1] == "-":
            self.take()
            return -self.unary()
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> MultiPoly:
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            kind, text, _ = self.peek()
            if kind != "num" or not text.isdigit():
                self.error("exponent must be a non-negative integer")
            self.take()
            return base ** int(text)
        return base

    def atom(self) -> MultiPoly:
        kind, text, _ = self.peek()
        if kind == "num":
            self.take()
            if text.endswith("i"):
                return MultiPoly.constant(self.variables, 1j * float(text[:-1]))
            return MultiPoly.constant(self.variables, float(text) if any(ch in text for ch in ".eE") else int(text))
        if kind == "name":
            self.take()
            if text == "i":
                return MultiPoly.constant(self.variables, 1j)
            m = re.fullmatch(r"Phi(\d+)", text)
            if m:
                return self.phi_call(int(m.group(1)))
            if text not in self.variables:
                self.pos -= 1
                self.error(f"unknown identifier {text!r}")
            return MultiPoly.variable(self.variables, text)
        if text == "(":
            self.take()
            inner = self.expr()
            self.take(")")
            return inner
        self.error("expected a number, variable or '('")

    def phi_call(self, level: int) -> MultiPoly:
        from .modular_polys import build_phi

        self.take("(")
        x = self.expr()
        self.take(",")
        y = self.expr()
        self.take(")")
        try:
            phi = build_phi(level)
        except ValueError as exc:
            self.pos -= 1
            self.error(str(exc))
        out = MultiPoly(self.variables, {})
        for (i, k), c in phi.coefficients.items():
            out = out + (x**i) * (y**k) * c
        return out


def _split_statements(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        col = 0
        for piece in line.split(";"):
            if piece.strip():
                lead = len(piece) - len(piece.lstrip())
                yield lineno, col + lead, piece.strip()
            col += len(piece) + 1


def parse_variety(text: str) -> VarietySystem:
    """Parse the text format: a ``n=<int>; mode=<j|J>`` header then one equation per statement.

    Statements are separated by newlines or ``;``; ``#`` starts a comment.
    ``PhiN(a, b)`` expands to the level-N modular polynomial.
    """
    n = None
    mode = None
    pending = []
    for lineno, col, stmt in _split_statements(text):
        m = re.fullmatch(r"(n|mode)\s*=\s*(\S+)", stmt)
        if m and not pending:
            key, value = m.groups()
            if key == "n":
                if not value.isdigit() or int(value) < 1:
                    raise VarietyParseError(f"n must be a positive integer, got {value!r}", lineno, col + 1)
                n = int(value)
            else:
                if value not in ("j", "J"):
                    raise VarietyParseError(f"mode must be j or J, got {value!r}", lineno, col + 1)
                mode = Mode(value)
            continue
        pending.append((lineno, col, stmt))
    if n is None or mode is None:
        raise VarietyParseError("missing header 'n=<int>; mode=<j|J>'", 1, 1)
    names = variable_names(mode, n)
    equations = []
    for lineno, col, stmt in pending:
        eq = _Parser(stmt, lineno, col, names).equation()
        if not eq.terms:
            continue
        equations.append(eq)
    return VarietySystem(mode, n, equations)


# -- dimensions --------------------------------------------------------------------------


def _normalized_jacobian(V: VarietySystem, x) -> np.ndarray:
    J = V.jacobian(x)
    if not len(J):
        return J
    norms = np.linalg.norm(J, axis=1)
    norms[norms == 0] = 1.0
    return J / norms[:, None]


def _check_on(V: VarietySystem, x, tol: float):
    r = V.residual(x)
    if r > tol:
        raise NotOnVarietyError(f"point is not on the variety (relative residual {r:.3g})")


def tangent_basis(V: VarietySystem, x, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the kernel of the Jacobian at x."""
    J = _normalized_jacobian(V, x)
    if not len(J):
        return np.eye(V.arity, dtype=complex)
    _, s, vh = np.linalg.svd(J)
    rank = int(np.sum(s > rank_tol * s[0])) if len(s) and s[0] > 0 else 0
    return vh[rank:].conj().T


def tangent_dimension(V: VarietySystem, point, rank_tol: float = RANK_TOL, residual_tol: float = 1e-6) -> int:
    x = np.asarray(point, dtype=complex)
    _check_on(V, x, residual_tol)
    return tangent_basis(V, x, rank_tol).shape[1]


def check_projection_index(k: Sequence[int], n: int) -> tuple[int, ...]:
    """Validate a projection index k = (k1 < ... < kl) within 1..n."""
    k = tuple(int(v) for v in k)
    if not k or any(b <= a for a, b in zip(k, k[1:])) or k[0] < 1 or k[-1] > n:
        raise ValueError(f"{k} is not a strictly increasing index tuple within 1..{n}")
    return k


def block_coordinates(V: VarietySystem, k: Sequence[int]) -> list[int]:
    return [b * V.n + (kk - 1) for b in range(len(V.mode.blocks)) for kk in k]


def _projected_rank(basis: np.ndarray, coords: list[int], rank_tol: float) -> int:
    if basis.shape[1] == 0:
        return 0
    s = np.linalg.svd(basis[coords, :], compute_uv=False)
    return int(np.sum(s > rank_tol))


def projected_dimension(V: VarietySystem, point, k: Sequence[int], rank_tol: float = RANK_TOL) -> int:
    """Dimension of the image of the tangent space under the block projection onto k."""
    x = np.asarray(point, dtype=complex)
    _check_on(V, x, 1e-6)
    k = check_projection_index(k, V.n)
    return _projected_rank(tangent_basis(V, x, rank_tol), block_coordinates(V, k), rank_tol)


@dataclass
class BroadReport:
    broad: bool
    mode: str
    projected_dims: dict  # subset -> max projected dimension over samples
    violations: list  # (subset, dim, required)
    note: str = "numeric, at sampled regular points"


def _subsets(n: int):
    for l in range(1, n + 1):
        yield from itertools.combinations(range(1, n + 1), l)


def check_broad(V: VarietySystem, samples, rank_tol: float = RANK_TOL) -> BroadReport:
    """j-broad: dim pr_k V >= l for every k of length l (J-broad: >= 3l)."""
    if V.n > N_CAP:
        raise ValueError(f"n = {V.n} exceeds the cap of {N_CAP} for the subset audit")
    samples = [np.asarray(s, dtype=complex) for s in samples]
    samples = [s for s in samples if V.residual(s) <= 1e-6]
    if not samples:
        raise ValueError("no valid sample points on the variety")
    factor = 1 if V.mode is Mode.j else 3
    bases = [tangent_basis(V, s, rank_tol) for s in samples]
    dims, violations = {}, []
    for k in _subsets(V.n):
        coords = block_coordinates(V, k)
        d = max(_projected_rank(b, coords, rank_tol) for b in bases)
        dims[k] = d
        if d < factor * len(k):
            violations.append((k, d, factor * len(k)))
    return BroadReport(not violations, V.mode.value, dims, violations)


@dataclass
class FreeReport:
    free: bool
    h_free: bool
    mode: str
    constant_coordinates: list  # names
    modular_relations: list  # (i, k, N) with Phi_N(w_i, w_k) = 0 on all samples
    constant_z: list
    h_relations: list  # (i, k, (a, b, c, d)) with z_i = g z_k on all samples
    note: str = "numeric, at sampled regular points; special subvarieties checked up to level N_max"

    @property
    def reasons(self) -> list[str]:
        out = [f"constant coordinate {c}" for c in self.constant_coordinates]
        out += [f"Phi_{N}(w{i}, w{k}) = 0" for i, k, N in self.modular_relations]
        return out


def _is_constant(values: np.ndarray, tol: float) -> bool:
    mean = values.mean()
    return float(np.max(np.abs(values - mean))) <= tol * (1 + abs(mean))


def _rational_ratio(vec: np.ndarray, bound: int = 1000, tol: float = 1e-8) -> bool:
    from .moebius import best_convergent

    vec = vec / vec[np.argmax(np.abs(vec))]
    return all(abs(float(best_convergent(float(v), bound)) - v) <= tol for v in vec)


def _moebius_fit(zi: np.ndarray, zk: np.ndarray, tol: float):
    """Real (a, b, c, d), up to scale, with zi = (a zk + b) / (c zk + d) on every sample."""
    order = np.argsort(-np.abs(zk - zk[0]))
    s, t = 0, int(order[0])
    if abs(zk[t] - zk[s]) < 1e-8:
        return None
    rows = []
    for idx in (s, t):
        u, v = zk[idx], zi[idx]
        for part in (np.real, np.imag):
            rows.append([part(u), part(1 + 0j), -part(u * v), -part(v)])
    _, sv, vh = np.linalg.svd(np.array(rows, dtype=float))
    g = vh[-1]
    a, b, c, d = g
    resid = np.abs(a * zk + b - zi * (c * zk + d)) / np.maximum(1.0, np.abs(zi) * np.abs(zk))
    if np.max(resid) > tol * np.linalg.norm(g):
        return None
    if a * d - b * c <= 0 or not _rational_ratio(g):
        return None
    g = g / g[np.argmax(np.abs(g))]
    return tuple(float(x) for x in g)


def check_free(V: VarietySystem, samples, n_max: int = 5, tol: float = 1e-6, const_tol: float = 1e-7) -> FreeReport:
    """Constant-coordinate, modular-relation and rational-Moebius-relation audits over samples."""
    from .modular_polys import build_phi

    pts = np.array([np.asarray(s, dtype=complex) for s in samples])
    if len(pts) < 3:
        raise ValueError("check_free needs at least 3 samples (20 recommended)")
    names = V.variables
    n = V.n
    checked_blocks = ("w",) if V.mode is Mode.j else ("w", "p", "q")
    constants = []
    for block in checked_blocks:
        sl = V.block_slice(block)
        for idx in range(sl.start, sl.stop):
            if _is_constant(pts[:, idx], const_tol):
                constants.append(names[idx])

    w = pts[:, V.block_slice("w")]
    relations = []
    for i, k in itertools.combinations(range(n), 2):
        for level in range(1, n_max + 1):
            phi = build_phi(level, n_max)
            if all(phi.relative_residual(a, b) < tol for a, b in zip(w[:, i], w[:, k])):
                relations.append((i + 1, k + 1, level))
                break

    z = pts[:, V.block_slice("z")]
    constant_z = [f"z{k + 1}" for k in range(n) if _is_constant(z[:, k], const_tol)]
    h_relations = []
    for i, k in itertools.combinations(range(n), 2):
        if f"z{i + 1}" in constant_z or f"z{k + 1}" in constant_z:
            continue
        g = _moebius_fit(z[:, i], z[:, k], tol)
        if g is not None:
            h_relations.append((i + 1, k + 1, g))

    return FreeReport(
        free=not constants and not relations,
        h_free=not constant_z and not h_relations,
        mode=V.mode.value,
        constant_coordinates=constants,
        modular_relations=relations,
        constant_z=constant_z,
        h_relations=h_relations,
    )


# -- slicing and sampling ----------------------------------------------------------------


def slice_to_dimension(
    V: VarietySystem, target_dim: int, through, rng: np.random.Generator | None = None, max_retries: int = 10
) -> VarietySystem:
    """Cut V by random affine hyperplanes through ``through`` down to tangent dimension target_dim."""
    rng = rng if rng is not None else np.random.default_rng()
    x = np.asarray(through, dtype=complex)
    current = tangent_dimension(V, x)
    if current == target_dim:
        return V
    if current < target_dim:
        raise ValueError(f"tangent dimension {current} is already below the target {target_dim}")
    names = V.variables
    for _ in range(max_retries):
        extra = []
        for _ in range(current - target_dim):
            coef = rng.standard_normal(V.arity) + 1j * rng.standard_normal(V.arity)
            terms = {tuple(int(i == v) for i in range(V.arity)): coef[v] for v in range(V.arity)}
            terms[(0,) * V.arity] = -complex(coef @ x)
            extra.append(MultiPoly(names, terms))
        sliced = V.with_equations(extra)
        if tangent_dimension(sliced, x) == target_dim:
            return sliced
    raise ArithmeticError("slicing stayed rank deficient after retries")


@dataclass(frozen=True)
class Region:
    """Box for random ambient points: z in re x im, other blocks within the given half-widths."""

    z_re: tuple[float, float] = (-0.5, 0.5)
    z_im: tuple[float, float] = (0.6, 1.6)
    w_box: float = 1000.0
    jet_box: float = 10.0
    min_im: float = 0.05


def _random_ambient(V: VarietySystem, region: Region, rng: np.random.Generator) -> np.ndarray:
    x = np.empty(V.arity, dtype=complex)
    for block in V.mode.blocks:
        sl = V.block_slice(block)
        size = sl.stop - sl.start
        if block == "z":
            x[sl] = rng.uniform(*region.z_re, size) + 1j * rng.uniform(*region.z_im, size)
        else:
            h = region.w_box if block == "w" else region.jet_box
            x[sl] = rng.uniform(-h, h, size) + 1j * rng.uniform(-h, h, size)
    return x


def project_to_variety(V: VarietySystem, x0, max_iter: int = 60, tol: float = 1e-12) -> np.ndarray | None:
    """Gauss-Newton (minimum-norm steps) from x0 onto V; None if it stalls."""
    x = np.asarray(x0, dtype=complex).copy()
    if not V.equations:
        return x
    for _ in range(max_iter):
        scales = np.array([eq.scale(x) for eq in V.equations])
        F = V.values(x) / scales
        if np.max(np.abs(F)) < tol:
            return x
        J = V.jacobian(x) / scales[:, None]
        step, *_ = np.linalg.lstsq(J, F, rcond=None)
        x = x - step
        if not np.all(np.isfinite(x)):
            return None
    return x if V.residual(x) < tol * 100 else None


def sample_points(
    V: VarietySystem,
    count: int,
    region: Region | None = None,
    rng: np.random.Generator | None = None,
    max_tries: int | None = None,
    residual_tol: float = 1e-10,
) -> list[np.ndarray]:
    """Random points of V with z-coordinates in the upper half-plane (Im z >= region.min_im)."""
    region = region or Region()
    rng = rng if rng is not None else np.random.default_rng()
    max_tries = max_tries or 30 * count + 30
    out = []
    zs = V.block_slice("z")
    for _ in range(max_tries):
        if len(out) == count:
            break
        x = project_to_variety(V, _random_ambient(V, region, rng))
        if x is None or V.residual(x) >= residual_tol:
            continue
        if np.any(x[zs].imag < region.min_im):
            continue
        out.append(x)
    if len(out) < count:
        raise SamplingError(f"only {len(out)} of {count} sample points found")
    return out
