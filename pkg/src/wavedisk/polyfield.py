"""Planar traveling-wave vector fields with exact rational coefficients.

Everything upstream of numerical integration (chart changes, time
rescalings, blow-ups, center-manifold series) is done in exact rational
arithmetic, so the only rounding in the pipeline happens inside the
integrator itself.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

__all__ = [
    "PoleError",
    "as_fraction",
    "BivariatePolynomial",
    "RationalFunction",
    "ReactionTerm",
    "PlanarSystem",
    "make_reaction",
    "parse_reaction",
    "make_tw_system",
    "desingularize",
    "eval_field",
    "jacobian",
    "is_odd_symmetric",
]


class PoleError(ZeroDivisionError):
    """Raised when a rational field is evaluated on a denominator zero."""


def as_fraction(value) -> Fraction:
    """Coerce to Fraction. Strings parse exactly ("0.25" -> 1/4); floats keep
    their exact binary value."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, str)):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"cannot convert non-finite value {value!r}")
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


def _normalized(terms: Mapping[tuple[int, int], Fraction]) -> dict[tuple[int, int], Fraction]:
    out = {}
    for (i, j), c in terms.items():
        if i < 0 or j < 0:
            raise ValueError(f"negative exponent in term {(i, j)}")
        if c != 0:
            out[(int(i), int(j))] = c
    return out


@dataclass
class BivariatePolynomial:
    """Dense exponent-map polynomial in two variables over the rationals.

    ``coeffs`` maps (i, j) to the coefficient of x**i * y**j; zero
    coefficients are never stored. Instances are immutable by convention.
    """

    coeffs: dict[tuple[int, int], Fraction] = field(default_factory=dict)

    def __post_init__(self):
        self.coeffs = _normalized({k: as_fraction(v) for k, v in self.coeffs.items()})

    # -- constructors -------------------------------------------------
    @staticmethod
    def zero() -> "BivariatePolynomial":
        return BivariatePolynomial({})

    @staticmethod
    def constant(c) -> "BivariatePolynomial":
        return BivariatePolynomial({(0, 0): as_fraction(c)})

    @staticmethod
    def monomial(i: int, j: int, c=1) -> "BivariatePolynomial":
        return BivariatePolynomial({(i, j): as_fraction(c)})

    @staticmethod
    def x() -> "BivariatePolynomial":
        return BivariatePolynomial.monomial(1, 0)

    @staticmethod
    def y() -> "BivariatePolynomial":
        return BivariatePolynomial.monomial(0, 1)

    # -- structure ----------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def degree(self) -> int | None:
        """Total degree, or None for the zero polynomial."""
        if not self.coeffs:
            return None
        return max(i + j for i, j in self.coeffs)

    def coefficient(self, i: int, j: int) -> Fraction:
        return self.coeffs.get((i, j), Fraction(0))

    # -- arithmetic ---------------------------------------------------
    def __add__(self, other: "BivariatePolynomial") -> "BivariatePolynomial":
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, Fraction(0)) + c
        return BivariatePolynomial(out)

    def __sub__(self, other: "BivariatePolynomial") -> "BivariatePolynomial":
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, Fraction(0)) - c
        return BivariatePolynomial(out)

    def __neg__(self) -> "BivariatePolynomial":
        return BivariatePolynomial({k: -c for k, c in self.coeffs.items()})

    def __mul__(self, other):
        if isinstance(other, BivariatePolynomial):
            out: dict[tuple[int, int], Fraction] = {}
            for (i1, j1), c1 in self.coeffs.items():
                for (i2, j2), c2 in other.coeffs.items():
                    k = (i1 + i2, j1 + j2)
                    out[k] = out.get(k, Fraction(0)) + c1 * c2
            return BivariatePolynomial(out)
        c = as_fraction(other)
        return BivariatePolynomial({k: v * c for k, v in self.coeffs.items()})

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "BivariatePolynomial":
        if n < 0:
            raise ValueError("negative power of a polynomial")
        result = BivariatePolynomial.constant(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, BivariatePolynomial):
            return NotImplemented
        return self.coeffs == other.coeffs

    # -- calculus -----------------------------------------------------
    def diff(self, axis: int) -> "BivariatePolynomial":
        """Partial derivative along axis 0 (x) or 1 (y)."""
        out: dict[tuple[int, int], Fraction] = {}
        for (i, j), c in self.coeffs.items():
            e = (i, j)[axis]
            if e == 0:
                continue
            k = (i - 1, j) if axis == 0 else (i, j - 1)
            out[k] = out.get(k, Fraction(0)) + c * e
        return BivariatePolynomial(out)

    def eval(self, x, y):
        """Evaluate; exact when inputs are exact, float otherwise."""
        total = 0
        for (i, j), c in self.coeffs.items():
            total = total + c * x**i * y**j
        return total

    __call__ = eval

    # -- substitution -------------------------------------------------
    def substitute_affine(self, fx: tuple, fy: tuple) -> "BivariatePolynomial":
        """Substitute x -> fx[0]*x + fx[1]*y + fx[2] and likewise for y."""
        px = BivariatePolynomial(
            {(1, 0): as_fraction(fx[0]), (0, 1): as_fraction(fx[1]), (0, 0): as_fraction(fx[2])}
        )
        py = BivariatePolynomial(
            {(1, 0): as_fraction(fy[0]), (0, 1): as_fraction(fy[1]), (0, 0): as_fraction(fy[2])}
        )
        dmax = self.degree or 0
        x_pows = [BivariatePolynomial.constant(1)]
        y_pows = [BivariatePolynomial.constant(1)]
        for _ in range(dmax):
            x_pows.append(x_pows[-1] * px)
            y_pows.append(y_pows[-1] * py)
        out = BivariatePolynomial.zero()
        for (i, j), c in self.coeffs.items():
            out = out + x_pows[i] * y_pows[j] * c
        return out

    def shift(self, dx, dy) -> "BivariatePolynomial":
        """Re-expand around a new origin: returns p(x + dx, y + dy)."""
        return self.substitute_affine((1, 0, dx), (0, 1, dy))

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for (i, j) in sorted(self.coeffs, key=lambda k: (k[0] + k[1], k)):
            c = self.coeffs[(i, j)]
            mono = "".join(s for s, e in (("x", i), ("y", j)) for s in ([f"{s}^{e}"] if e > 1 else [s] * e))
            parts.append(f"{c}{'*' + mono if mono else ''}")
        return " + ".join(parts)


@dataclass
class RationalFunction:
    """Quotient of two bivariate polynomials; denominator defaults to 1."""

    num: BivariatePolynomial
    den: BivariatePolynomial = field(default_factory=lambda: BivariatePolynomial.constant(1))

    @property
    def is_polynomial(self) -> bool:
        return self.den.degree == 0

    def as_polynomial(self) -> BivariatePolynomial:
        if not self.is_polynomial:
            raise ValueError("component has a non-constant denominator")
        d = self.den.coefficient(0, 0)
        return self.num * (Fraction(1) / d)

    def eval(self, x, y):
        d = self.den.eval(x, y)
        if d == 0:
            raise PoleError("pole at evaluation point")
        return self.num.eval(x, y) / d

    def diff(self, axis: int) -> "RationalFunction":
        # (n/d)' = (n'd - nd') / d^2
        n, d = self.num, self.den
        return RationalFunction(n.diff(axis) * d - n * d.diff(axis), d * d)


# ----------------------------------------------------------------------
# Reaction terms
# ----------------------------------------------------------------------

@dataclass
class ReactionTerm:
    """Rational reaction f(u) = P(u)/Q(u) with bound named parameters.

    Invariants enforced by :func:`make_reaction`: P(0) = 0, Q(0) > 0 and
    Q has no real roots, so multiplying the wave system through by Q is
    an orientation-preserving time rescale.
    """

    numerator: BivariatePolynomial
    denominator: BivariatePolynomial
    params: dict[str, Fraction] = field(default_factory=dict)

    def eval(self, u):
        d = self.denominator.eval(u, 0)
        if d == 0:
            raise PoleError("pole at evaluation point")
        return self.numerator.eval(u, 0) / d


def _univariate_coeffs(p: BivariatePolynomial) -> dict[int, Fraction]:
    if any(j != 0 for (_, j) in p.coeffs):
        raise ValueError("expected a univariate polynomial in u")
    return {i: c for (i, _), c in p.coeffs.items()}


def _has_real_root(q: BivariatePolynomial) -> bool:
    """Best-effort real-root detection for the denominator.

    Exact discriminant up to degree 2; odd degree always has a root;
    otherwise sign sampling on [-1e6, 1e6] plus leading-coefficient sign.
    """
    cs = _univariate_coeffs(q)
    deg = max(cs) if cs else 0
    if deg == 0:
        return cs.get(0, Fraction(0)) == 0
    if deg == 1:
        return True
    if deg == 2:
        a, b, c = cs.get(2, Fraction(0)), cs.get(1, Fraction(0)), cs.get(0, Fraction(0))
        return b * b - 4 * a * c >= 0
    if deg % 2 == 1:
        return True
    lead = cs[deg]
    samples = [0.0]
    for expo in range(-3, 7):
        for sign in (1.0, -1.0):
            samples.append(sign * 10.0**expo)
    ref = None
    for u in samples:
        v = float(q.eval(u, 0.0))
        if v == 0.0:
            return True
        if ref is None:
            ref = v > 0
        elif (v > 0) != ref:
            return True
    return (lead > 0) != ref


def make_reaction(numerator: BivariatePolynomial,
                  denominator: BivariatePolynomial | None = None,
                  params: Mapping[str, Fraction] | None = None) -> ReactionTerm:
    den = denominator if denominator is not None else BivariatePolynomial.constant(1)
    _univariate_coeffs(numerator)
    q0 = den.eval(Fraction(0), Fraction(0))
    if q0 == 0:
        raise ValueError("reaction denominator vanishes at u = 0")
    if q0 < 0:
        # normalize so the desingularizing multiplier is positive
        numerator, den = -numerator, -den
    if _has_real_root(den):
        raise ValueError("reaction denominator has a real root")
    if numerator.eval(Fraction(0), Fraction(0)) != 0:
        raise ValueError("reaction must vanish at the zero state (P(0) = 0)")
    return ReactionTerm(numerator, den, dict(params or {}))


# -- string form -------------------------------------------------------

_TOKEN_CHARS = set("+-*/^() \t")


def _tokenize(text: str) -> list[str]:
    tokens, i = [], 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "+-*/^()":
            tokens.append(ch)
            i += 1
        elif ch.isdigit() or ch == ".":
            j = i
            while j < len(text) and (text[j].isdigit() or text[j] == "."):
                j += 1
            tokens.append(text[i:j])
            i = j
        elif ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(text[i:j])
            i = j
        else:
            raise ValueError(f"unexpected character {ch!r} in reaction string")
    return tokens


class _RatParser:
    """Recursive-descent parser producing (numerator, denominator) pairs."""

    def __init__(self, tokens: list[str], params: Mapping[str, Fraction]):
        self.tokens = tokens
        self.pos = 0
        self.params = params

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ValueError("unexpected end of reaction string")
        self.pos += 1
        return tok

    def parse(self):
        value = self.expr()
        if self.peek() is not None:
            raise ValueError(f"trailing input at {self.peek()!r}")
        return value

    def expr(self):
        value = self.term()
        while self.peek() in ("+", "-"):
            op = self.take()
            rhs = self.term()
            value = self._add(value, rhs) if op == "+" else self._add(value, self._neg(rhs))
        return value

    def term(self):
        value = self.factor()
        while self.peek() in ("*", "/"):
            op = self.take()
            rhs = self.factor()
            value = self._mul(value, rhs) if op == "*" else self._div(value, rhs)
        return value

    def factor(self):
        if self.peek() == "-":
            self.take()
            return self._neg(self.factor())
        if self.peek() == "+":
            self.take()
            return self.factor()
        value = self.base()
        if self.peek() == "^":
            self.take()
            sign = 1
            if self.peek() == "-":
                self.take()
                sign = -1
            etok = self.take()
            if not etok.isdigit():
                raise ValueError(f"exponent must be an integer, got {etok!r}")
            e = int(etok)
            n, d = value
            out = (n**e, d**e)
            if sign < 0:
                out = (out[1], out[0])
            return out
        return value

    def base(self):
        tok = self.take()
        one = BivariatePolynomial.constant(1)
        if tok == "(":
            value = self.expr()
            if self.take() != ")":
                raise ValueError("unbalanced parenthesis in reaction string")
            return value
        if tok[0].isdigit() or tok[0] == ".":
            return (BivariatePolynomial.constant(Fraction(tok)), one)
        if tok == "u":
            return (BivariatePolynomial.x(), one)
        if tok in self.params:
            return (BivariatePolynomial.constant(self.params[tok]), one)
        raise ValueError(f"unbound parameter {tok!r} in reaction string")

    @staticmethod
    def _add(a, b):
        (n1, d1), (n2, d2) = a, b
        return (n1 * d2 + n2 * d1, d1 * d2)

    @staticmethod
    def _neg(a):
        n, d = a
        return (-n, d)

    @staticmethod
    def _mul(a, b):
        (n1, d1), (n2, d2) = a, b
        return (n1 * n2, d1 * d2)

    @staticmethod
    def _div(a, b):
        (n1, d1), (n2, d2) = a, b
        if n2.is_zero:
            raise ValueError("division by zero in reaction string")
        return (n1 * d2, d1 * n2)


def parse_reaction(text: str, params: Mapping[str, Fraction | int | str | float] | None = None) -> ReactionTerm:
    """Parse a reaction string like ``"u^3 / (1 + s*u^2)"``.

    Named parameters are substituted from ``params`` as exact rationals.
    The parsed expression must reduce to a ratio of polynomials in u.
    """
    bound = {k: as_fraction(v) for k, v in (params or {}).items()}
    num, den = _RatParser(_tokenize(text), bound).parse()
    # fold a constant denominator into the numerator
    if den.degree == 0:
        num = num * (Fraction(1) / den.coefficient(0, 0))
        den = BivariatePolynomial.constant(1)
    return make_reaction(num, den, bound)


# ----------------------------------------------------------------------
# Planar systems
# ----------------------------------------------------------------------

TIME_FRAMES = ("xi", "s_tilde", "tau", "eta")


@dataclass
class PlanarSystem:
    """Pair of rational right-hand sides in (phi, psi) plus metadata.

    ``time_frame`` records which independent variable the field is
    written in: "xi" for the original wave coordinate, "s_tilde" after
    clearing the reaction denominator, "tau"/"eta" for rescaled chart
    and blow-up clocks.
    """

    rhs_phi: RationalFunction
    rhs_psi: RationalFunction
    wave_speed: Fraction | None
    time_frame: str
    params: dict[str, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        if self.time_frame not in TIME_FRAMES:
            raise ValueError(f"unknown time frame {self.time_frame!r}")

    @property
    def is_polynomial(self) -> bool:
        return self.rhs_phi.is_polynomial and self.rhs_psi.is_polynomial

    def polynomial_components(self) -> tuple[BivariatePolynomial, BivariatePolynomial]:
        return self.rhs_phi.as_polynomial(), self.rhs_psi.as_polynomial()


def make_tw_system(f: ReactionTerm, c) -> PlanarSystem:
    """First-order system for the wave profile: phi' = psi,
    psi' = -c*psi - f(phi), in the xi frame."""
    c = as_fraction(c)
    if c <= 0:
        raise ValueError("wave speed must be positive")
    q = f.denominator
    # psi' = (-c*psi*Q(phi) - P(phi)) / Q(phi)
    num = BivariatePolynomial.y() * q * (-c) - f.numerator
    return PlanarSystem(
        rhs_phi=RationalFunction(BivariatePolynomial.y()),
        rhs_psi=RationalFunction(num, q),
        wave_speed=c,
        time_frame="xi",
        params=dict(f.params),
    )


def desingularize(sys: PlanarSystem) -> PlanarSystem:
    """Multiply the xi-frame field through by the reaction denominator.

    The multiplier is positive everywhere, so solution curves and their
    orientation are preserved; only the clock changes (to s_tilde).
    """
    if sys.time_frame != "xi":
        raise ValueError("expected a system in the xi frame")
    if not sys.rhs_phi.is_polynomial:
        raise ValueError("phi component must be polynomial in the xi frame")
    q = sys.rhs_psi.den
    return PlanarSystem(
        rhs_phi=RationalFunction(sys.rhs_phi.as_polynomial() * q),
        rhs_psi=RationalFunction(sys.rhs_psi.num),
        wave_speed=sys.wave_speed,
        time_frame="s_tilde",
        params=dict(sys.params),
    )


def eval_field(sys: PlanarSystem, p) -> tuple:
    """Evaluate the right-hand side at p = (phi, psi)."""
    x, y = p
    return (sys.rhs_phi.eval(x, y), sys.rhs_psi.eval(x, y))


def jacobian(sys: PlanarSystem, p) -> tuple[tuple, tuple]:
    """Symbolic partial derivatives of the field, evaluated at p."""
    x, y = p
    return (
        (sys.rhs_phi.diff(0).eval(x, y), sys.rhs_phi.diff(1).eval(x, y)),
        (sys.rhs_psi.diff(0).eval(x, y), sys.rhs_psi.diff(1).eval(x, y)),
    )


def is_odd_symmetric(sys: PlanarSystem) -> bool:
    """True iff F(-phi, -psi) = -F(phi, psi) as a polynomial identity,
    i.e. every stored monomial has odd total degree."""
    if not sys.is_polynomial:
        raise ValueError("odd-symmetry check requires polynomial components")
    for comp in sys.polynomial_components():
        if any((i + j) % 2 == 0 for (i, j) in comp.coeffs):
            return False
    return True
