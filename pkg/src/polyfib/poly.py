"""Exact sparse multivariate polynomials over the rationals.

A polynomial in ``nvars`` variables is stored as a map from exponent tuples
to :class:`fractions.Fraction` coefficients.  Structure operations
(differentiation, homogeneous decomposition, resultants) are exact; all
numerical sampling elsewhere in the package goes through compiled
double-precision evaluators built by :meth:`Polynomial.compiled`.

Zero coefficients are never stored.  The zero polynomial has an empty term
map and, by convention, degree -1.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

Exponent = tuple[int, ...]


class ParseError(ValueError):
    """Syntax or semantic error in polynomial text, with source position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value).limit_denominator(10**12)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"cannot coerce {value!r} to a rational coefficient")


class Polynomial:
    """Immutable sparse polynomial with exact rational coefficients."""

    __slots__ = ("nvars", "terms", "_compiled", "_hash")

    def __init__(self, nvars: int, terms: Mapping[Exponent, Fraction] | None = None):
        if nvars < 1:
            raise ValueError("nvars must be a positive integer")
        clean: dict[Exponent, Fraction] = {}
        for exp, coef in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != nvars:
                raise ValueError(f"exponent {exp} has wrong length for nvars={nvars}")
            if any(e < 0 for e in exp):
                raise ValueError(f"negative exponent in {exp}")
            c = _as_fraction(coef)
            if c != 0:
                clean[exp] = c
        object.__setattr__(self, "nvars", nvars)
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "_compiled", None)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls(nvars, {})

    @classmethod
    def constant(cls, nvars: int, value) -> "Polynomial":
        return cls(nvars, {(0,) * nvars: _as_fraction(value)})

    @classmethod
    def variable(cls, nvars: int, index: int) -> "Polynomial":
        if not 0 <= index < nvars:
            raise ValueError(f"variable index {index} out of range for nvars={nvars}")
        exp = [0] * nvars
        exp[index] = 1
        return cls(nvars, {tuple(exp): Fraction(1)})

    # -- ring operations ----------------------------------------------

    def _check_compatible(self, other: "Polynomial"):
        if self.nvars != other.nvars:
            raise ValueError("polynomials have different variable counts")

    def __add__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.nvars, other)
        self._check_compatible(other)
        out = dict(self.terms)
        for exp, coef in other.terms.items():
            out[exp] = out.get(exp, Fraction(0)) + coef
        return Polynomial(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.nvars, other)
        return self + (-other)

    def __rsub__(self, other) -> "Polynomial":
        return (-self) + other

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.nvars, other)
        self._check_compatible(other)
        out: dict[Exponent, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exp = tuple(a + b for a, b in zip(e1, e2))
                out[exp] = out.get(exp, Fraction(0)) + c1 * c2
        return Polynomial(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Polynomial":
        if not isinstance(k, int) or k < 0:
            raise ValueError("polynomial powers must be nonnegative integers")
        result = Polynomial.constant(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Polynomial)
            and self.nvars == other.nvars
            and self.terms == other.terms
        )

    def __hash__(self):
        if self._hash is None:
            h = hash((self.nvars, frozenset(self.terms.items())))
            object.__setattr__(self, "_hash", h)
        return self._hash

    # -- structure ----------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def partial(self, index: int) -> "Polynomial":
        """Exact partial derivative with respect to variable ``index``."""
        out: dict[Exponent, Fraction] = {}
        for exp, coef in self.terms.items():
            k = exp[index]
            if k == 0:
                continue
            new = list(exp)
            new[index] = k - 1
            out[tuple(new)] = out.get(tuple(new), Fraction(0)) + coef * k
        return Polynomial(self.nvars, out)

    def homogeneous_component(self, k: int) -> "Polynomial":
        return Polynomial(
            self.nvars, {e: c for e, c in self.terms.items() if sum(e) == k}
        )

    def substitute(self, values: Sequence["Polynomial"]) -> "Polynomial":
        """Compose: substitute a polynomial for each variable (exact)."""
        if len(values) != self.nvars:
            raise ValueError("need one substitution polynomial per variable")
        nv = values[0].nvars
        acc = Polynomial.zero(nv)
        for exp, coef in self.terms.items():
            term = Polynomial.constant(nv, coef)
            for i, e in enumerate(exp):
                if e:
                    term = term * values[i] ** e
            acc = acc + term
        return acc

    # -- evaluation ----------------------------------------------------

    def eval_exact(self, point: Sequence) -> Fraction:
        """Evaluate with exact rational arithmetic."""
        pt = [_as_fraction(v) for v in point]
        total = Fraction(0)
        for exp, coef in self.terms.items():
            term = coef
            for v, e in zip(pt, exp):
                if e:
                    term *= v**e
            total += term
        return total

    def eval_float(self, point: Sequence[float]) -> float:
        return float(self.compiled()(*point))

    def compiled(self) -> Callable:
        """Return a cached fast evaluator ``fn(x0, ..., x{n-1})``.

        Works on scalars and on numpy arrays (broadcasting)."""
        if self._compiled is None:
            object.__setattr__(self, "_compiled", compile_evaluator([self]))
        fn = self._compiled
        return lambda *xs: fn(*xs)[0]

    # -- printing / identity -------------------------------------------

    def sorted_terms(self) -> list[tuple[Exponent, Fraction]]:
        """Terms in descending graded lexicographic order."""
        return sorted(self.terms.items(), key=lambda t: (sum(t[0]), t[0]), reverse=True)

    def to_text(self, var_names: Sequence[str] | None = None) -> str:
        """Canonical text form; parses back to the identical term map."""
        names = list(var_names) if var_names else default_var_names(self.nvars)
        if len(names) != self.nvars:
            raise ValueError("wrong number of variable names")
        if not self.terms:
            return "0"
        chunks: list[str] = []
        for exp, coef in self.sorted_terms():
            mono = "*".join(
                f"{names[i]}^{e}" if e > 1 else names[i]
                for i, e in enumerate(exp)
                if e > 0
            )
            mag = abs(coef)
            if not mono:
                body = _format_fraction(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{_format_fraction(mag)}*{mono}"
            if not chunks:
                chunks.append(body if coef > 0 else f"-{body}")
            else:
                chunks.append(f"+ {body}" if coef > 0 else f"- {body}")
        return " ".join(chunks)

    def __str__(self):
        return self.to_text()

    def __repr__(self):
        return f"Polynomial({self.nvars}, {self.to_text()!r})"


def _format_fraction(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def default_var_names(nvars: int) -> list[str]:
    if nvars <= 3:
        return ["x", "y", "z"][:nvars]
    return [f"x{i}" for i in range(nvars)]


# ---------------------------------------------------------------------------
# Compiled evaluation


def compile_evaluator(polys: Sequence[Polynomial]) -> Callable:
    """Build one fast function returning a tuple of float values.

    The generated source is a plain sum of monomials per polynomial, which
    CPython evaluates in well under a microsecond for desk-scale inputs and
    which broadcasts over numpy arrays unchanged.
    """
    nvars = polys[0].nvars
    args = ", ".join(f"x{i}" for i in range(nvars))
    bodies = []
    for p in polys:
        if not p.terms:
            bodies.append("0.0")
            continue
        monos = []
        for exp, coef in p.sorted_terms():
            parts = [repr(float(coef))]
            for i, e in enumerate(exp):
                if e == 1:
                    parts.append(f"x{i}")
                elif e > 1:
                    parts.append(f"x{i}**{e}")
            monos.append("*".join(parts))
        bodies.append(" + ".join(monos))
    src = f"def _ev({args}):\n    return ({', '.join(bodies)},)\n"
    ns: dict = {}
    exec(src, ns)  # noqa: S102 - source is generated locally from exponents
    return ns["_ev"]


# ---------------------------------------------------------------------------
# Parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+\.\d*|\.\d+|\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    text = text.replace("−", "-").replace("·", "*")
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            at = len(text) - len(stripped)
            raise ParseError(f"unexpected character {stripped[0]!r}", at)
        if m.group("number") is not None:
            tokens.append(("number", m.group("number"), m.start("number")))
        elif m.group("name") is not None:
            tokens.append(("name", m.group("name"), m.start("name")))
        else:
            op = m.group("op")
            tokens.append(("op", "^" if op == "**" else op, m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    """Recursive-descent parser for the documented polynomial grammar.

    expr   := ['+'|'-'] term (('+'|'-') term)*
    term   := factor ('*' factor)*
    factor := base ['^' integer]
    base   := number ['/' integer] | variable | '(' expr ')'

    '/' is only admitted between two integer literals (a rational constant).
    """

    def __init__(self, text: str, var_names: Sequence[str]):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.vars = {name: i for i, name in enumerate(var_names)}
        self.nvars = len(var_names)

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        kind, val, at = self.peek()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}", at)
        return self.advance()

    def parse(self) -> Polynomial:
        p = self.expr()
        kind, val, at = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", at)
        return p

    def expr(self) -> Polynomial:
        sign = 1
        kind, val, _ = self.peek()
        if kind == "op" and val in "+-":
            self.advance()
            sign = -1 if val == "-" else 1
        acc = self.term()
        if sign < 0:
            acc = -acc
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                rhs = self.term()
                acc = acc + rhs if val == "+" else acc - rhs
            else:
                return acc

    def term(self) -> Polynomial:
        acc = self.factor()
        while True:
            kind, val, at = self.peek()
            if kind == "op" and val == "*":
                self.advance()
                acc = acc * self.factor()
            elif kind == "op" and val == "/":
                raise ParseError("'/' is only allowed between integer literals", at)
            else:
                return acc

    def factor(self) -> Polynomial:
        base = self.base()
        kind, val, at = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            kind, val, at = self.peek()
            if kind == "op" and val == "-":
                raise ParseError("exponent must be a nonnegative integer", at)
            if kind != "number":
                raise ParseError("expected an integer exponent", at)
            if "." in val:
                raise ParseError("exponent must be a nonnegative integer", at)
            self.advance()
            return base ** int(val)
        return base

    def base(self) -> Polynomial:
        kind, val, at = self.advance()
        if kind == "number":
            coef = _number_to_fraction(val)
            kind2, val2, at2 = self.peek()
            if kind2 == "op" and val2 == "/":
                self.advance()
                kind3, val3, at3 = self.peek()
                if kind3 != "number" or "." in val3:
                    raise ParseError("'/' is only allowed between integer literals", at3)
                if "." in val:
                    raise ParseError("'/' is only allowed between integer literals", at2)
                self.advance()
                denom = int(val3)
                if denom == 0:
                    raise ParseError("zero denominator", at3)
                coef = coef / denom
            return Polynomial.constant(self.nvars, coef)
        if kind == "name":
            if val not in self.vars:
                raise ParseError(f"unknown variable name {val!r}", at)
            return Polynomial.variable(self.nvars, self.vars[val])
        if kind == "op" and val == "(":
            inner = self.expr()
            self.expect_op(")")
            return inner
        if kind == "op" and val == "/":
            raise ParseError("'/' is only allowed between integer literals", at)
        raise ParseError(f"unexpected token {val!r}" if val else "unexpected end of input", at)


def _number_to_fraction(text: str) -> Fraction:
    # Decimal literals become exact rationals: 0.5 -> 1/2.
    if "." in text:
        whole, frac = text.split(".")
        denom = 10 ** len(frac)
        num = int(whole or "0") * denom + int(frac or "0")
        return Fraction(num, denom)
    return Fraction(int(text))


def parse_polynomial(text: str, var_names: Sequence[str]) -> Polynomial:
    """Parse polynomial text over the named variables, fully expanded.

    Supports +, -, *, ^ (or **), parentheses, integer/decimal literals and
    rational constants written p/q.  Decimal literals are converted to exact
    rationals before any arithmetic.
    """
    names = [n.strip() for n in var_names]
    if len(set(names)) != len(names):
        raise ValueError("duplicate variable names")
    return _Parser(text, names).parse()


# ---------------------------------------------------------------------------
# Calculus operators


def gradient(f: Polynomial) -> list[Polynomial]:
    """Exact gradient as a list of partial derivatives."""
    return [f.partial(i) for i in range(f.nvars)]


def hessian(f: Polynomial) -> list[list[Polynomial]]:
    """Exact symmetric matrix of second partials."""
    grads = gradient(f)
    n = f.nvars
    rows = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            h = grads[i].partial(j)
            rows[i][j] = h
            rows[j][i] = h
    return rows


def homogeneous_components(f: Polynomial) -> list[Polynomial]:
    """Components [f_0, f_1, ..., f_d] with f = sum of components, exact."""
    d = f.degree()
    if d < 0:
        return [Polynomial.zero(f.nvars)]
    return [f.homogeneous_component(k) for k in range(d + 1)]


@dataclass(frozen=True)
class GradientSplit:
    """Orthogonal split of the gradient at a point into radial and
    sphere-tangent parts: grad f = radial * (x/|x|) + spherical."""

    radial: float
    spherical: np.ndarray
    point: np.ndarray


def radial_spherical_split(f: Polynomial, point: Sequence[float]) -> GradientSplit:
    """Split grad f(x) into the radial derivative and the spherical rest.

    Requires x != 0; the radial part is <grad f, x>/|x| and the spherical
    part is orthogonal to x.
    """
    x = np.asarray(point, dtype=float)
    norm = float(np.linalg.norm(x))
    if norm == 0.0:
        raise ValueError("the radial/spherical split is undefined at the origin")
    g = np.array([p.eval_float(x) for p in gradient(f)])
    radial = float(g @ x) / norm
    spherical = g - radial * x / norm
    return GradientSplit(radial=radial, spherical=spherical, point=x)


# ---------------------------------------------------------------------------
# Univariate helpers (exact coefficients, float roots)


def univariate_coefficients(p: Polynomial) -> list[Fraction]:
    """Ascending coefficient list of a polynomial that uses one variable."""
    used = [i for i in range(p.nvars) if any(e[i] for e in p.terms)]
    if len(used) > 1:
        raise ValueError("polynomial is not univariate")
    var = used[0] if used else 0
    deg = p.degree() if p.terms else 0
    out = [Fraction(0)] * (max(deg, 0) + 1)
    for exp, coef in p.terms.items():
        out[exp[var]] = coef
    return out


def univariate_gcd(a: Sequence[Fraction], b: Sequence[Fraction]) -> list[Fraction]:
    """Monic gcd of two univariate rational polynomials (ascending coeffs)."""

    def strip(c):
        c = list(c)
        while c and c[-1] == 0:
            c.pop()
        return c

    def rem(num, den):
        num = list(num)
        dd = len(den) - 1
        lead = den[-1]
        while len(num) - 1 >= dd and strip(num):
            shift = len(num) - 1 - dd
            q = num[-1] / lead
            for i, c in enumerate(den):
                num[shift + i] -= q * c
            num = strip(num)
            if not num:
                break
        return num

    fa, fb = strip(a), strip(b)
    while fb:
        fa, fb = fb, rem(fa, fb)
    if not fa:
        return []
    lead = fa[-1]
    return [c / lead for c in fa]


def real_roots(coeffs_ascending: Sequence, polish_tol: float = 1e-12) -> list[float]:
    """Real roots of a univariate polynomial given ascending coefficients.

    Uses the companion matrix, keeps near-real roots, and polishes each by
    Newton iteration on the exact polynomial.
    """
    cs = [float(c) for c in coeffs_ascending]
    while cs and cs[-1] == 0.0:
        cs.pop()
    if len(cs) <= 1:
        return []
    scale = max(abs(c) for c in cs)
    arr = np.array(cs[::-1]) / scale
    roots = np.roots(arr)
    der = np.polyder(arr)
    out = []
    for z in roots:
        if abs(z.imag) > 1e-6 * (1.0 + abs(z.real)):
            continue
        x = float(z.real)
        for _ in range(50):
            v = float(np.polyval(arr, x))
            dv = float(np.polyval(der, x))
            if dv == 0.0 or not math.isfinite(v):
                break
            step = v / dv
            x -= step
            if abs(step) < polish_tol * (1.0 + abs(x)):
                break
        out.append(x)
    out.sort()
    dedup: list[float] = []
    for x in out:
        if not dedup or abs(x - dedup[-1]) > 1e-9 * (1.0 + abs(x)):
            dedup.append(x)
    return dedup


def resultant_bivariate(p: Polynomial, q: Polynomial, eliminate: int) -> list[Fraction]:
    """Exact resultant of two bivariate polynomials w.r.t. one variable.

    Returns ascending coefficients of Res(p, q) as a univariate polynomial in
    the kept variable.  Computed by evaluation at rational nodes followed by
    Lagrange interpolation, with Sylvester determinants done in exact
    fraction arithmetic (formal degrees, so interpolation is consistent).
    """
    if p.nvars != 2 or q.nvars != 2:
        raise ValueError("resultant_bivariate expects bivariate polynomials")
    keep = 1 - eliminate

    def var_degree(poly: Polynomial, var: int) -> int:
        return max((e[var] for e in poly.terms), default=0)

    dp, dq = var_degree(p, eliminate), var_degree(q, eliminate)
    if dp == 0 and dq == 0:
        raise ValueError("neither polynomial involves the eliminated variable")
    bound = dp * var_degree(q, keep) + dq * var_degree(p, keep)
    nodes = [Fraction(k) for k in range(bound + 1)]

    def coeffs_in_elim(poly: Polynomial, node: Fraction, deg: int) -> list[Fraction]:
        out = [Fraction(0)] * (deg + 1)
        for exp, coef in poly.terms.items():
            out[exp[eliminate]] += coef * node ** exp[keep]
        return out

    values = []
    for node in nodes:
        a = coeffs_in_elim(p, node, dp)
        b = coeffs_in_elim(q, node, dq)
        values.append(_sylvester_det(a, b, dp, dq))

    return _lagrange_interpolate(nodes, values)


def _sylvester_det(a: list[Fraction], b: list[Fraction], da: int, db: int) -> Fraction:
    n = da + db
    if n == 0:
        return Fraction(1)
    m = [[Fraction(0)] * n for _ in range(n)]
    for row in range(db):
        for k in range(da + 1):
            m[row][row + k] = a[da - k]
    for row in range(da):
        for k in range(db + 1):
            m[db + row][row + k] = b[db - k]
    # Exact Gaussian elimination over Q.
    det = Fraction(1)
    for col in range(n):
        pivot = None
        for r in range(col, n):
            if m[r][col] != 0:
                pivot = r
                break
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det *= m[col][col]
        inv = 1 / m[col][col]
        for r in range(col + 1, n):
            if m[r][col] != 0:
                factor = m[r][col] * inv
                for c in range(col, n):
                    m[r][c] -= factor * m[col][c]
    return det


def _lagrange_interpolate(nodes: list[Fraction], values: list[Fraction]) -> list[Fraction]:
    n = len(nodes)
    coeffs = [Fraction(0)] * n
    for i in range(n):
        if values[i] == 0:
            continue
        basis = [Fraction(1)]
        denom = Fraction(1)
        for j in range(n):
            if j == i:
                continue
            new = [Fraction(0)] * (len(basis) + 1)
            for k, c in enumerate(basis):
                new[k] += c * (-nodes[j])
                new[k + 1] += c
            basis = new
            denom *= nodes[i] - nodes[j]
        w = values[i] / denom
        for k, c in enumerate(basis):
            coeffs[k] += w * c
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return coeffs
