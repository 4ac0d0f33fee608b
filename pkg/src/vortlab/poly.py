"""Sparse multivariate polynomials over the rationals.

This is the arithmetic core of the exact trajectory-field backend: label maps,
their derivatives and the kinematic identity battery all reduce to polynomial
differentiation and evaluation with ``fractions.Fraction`` coefficients, so
residuals that vanish analytically vanish *exactly* (no rounding floor).

A polynomial in ``nvars`` variables is a dict mapping exponent tuples to
nonzero Fraction coefficients, e.g. with variables (a1, a2, a3, t)::

    {(1, 0, 0, 0): Fraction(1), (0, 2, 0, 1): Fraction(-3, 4)}

represents a1 - (3/4) a2**2 t.  Evaluation preserves exactness: Fraction (or
int) inputs give a Fraction result, float inputs give a float.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Sequence


def _as_coeff(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    raise TypeError(f"polynomial coefficients must be rational, got {type(c).__name__}")


class Poly:
    """Immutable sparse polynomial with exact rational coefficients."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: dict | None = None):
        clean: dict[tuple[int, ...], Fraction] = {}
        for expo, coeff in (terms or {}).items():
            expo = tuple(int(e) for e in expo)
            if len(expo) != nvars or any(e < 0 for e in expo):
                raise ValueError(f"bad exponent tuple {expo} for {nvars} variables")
            coeff = _as_coeff(coeff)
            if coeff != 0:
                clean[expo] = coeff
        object.__setattr__(self, "nvars", nvars)
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):  # pragma: no cover - immutability guard
        raise AttributeError("Poly is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def constant(cls, nvars: int, c) -> "Poly":
        return cls(nvars, {(0,) * nvars: _as_coeff(c)})

    @classmethod
    def variable(cls, nvars: int, i: int) -> "Poly":
        expo = [0] * nvars
        expo[i] = 1
        return cls(nvars, {tuple(expo): Fraction(1)})

    # -- ring operations ---------------------------------------------------

    def _lift(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise ValueError("variable-count mismatch")
            return other
        return Poly.constant(self.nvars, other)

    def __add__(self, other) -> "Poly":
        other = self._lift(other)
        terms = dict(self.terms)
        for expo, coeff in other.terms.items():
            terms[expo] = terms.get(expo, Fraction(0)) + coeff
        return Poly(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "Poly":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "Poly":
        return self._lift(other) + (-self)

    def __mul__(self, other) -> "Poly":
        other = self._lift(other)
        terms: dict[tuple[int, ...], Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                expo = tuple(a + b for a, b in zip(e1, e2))
                terms[expo] = terms.get(expo, Fraction(0)) + c1 * c2
        return Poly(self.nvars, terms)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Poly":
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers")
        out = Poly.constant(self.nvars, 1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.nvars == other.nvars and self.terms == other.terms
        try:
            return (self - other).is_zero
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    # -- calculus ----------------------------------------------------------

    def diff(self, i: int) -> "Poly":
        """Exact partial derivative with respect to variable i."""
        terms: dict[tuple[int, ...], Fraction] = {}
        for expo, coeff in self.terms.items():
            if expo[i] == 0:
                continue
            new = list(expo)
            new[i] -= 1
            terms[tuple(new)] = coeff * expo[i]
        return Poly(self.nvars, terms)

    def __call__(self, point: Sequence):
        if len(point) != self.nvars:
            raise ValueError("point dimension mismatch")
        total = None
        for expo, coeff in self.terms.items():
            val = coeff
            for x, e in zip(point, expo):
                if e:
                    val = val * x ** e
            total = val if total is None else total + val
        if total is None:
            return Fraction(0) if _all_rational(point) else 0.0
        return total

    def compose(self, args: Sequence["Poly"]) -> "Poly":
        """Substitute a polynomial for each variable."""
        if len(args) != self.nvars:
            raise ValueError("need one substitution per variable")
        nv = args[0].nvars
        out = Poly(nv, {})
        for expo, coeff in self.terms.items():
            term = Poly.constant(nv, coeff)
            for arg, e in zip(args, expo):
                if e:
                    term = term * arg ** e
            out = out + term
        return out

    # -- queries -----------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def __repr__(self) -> str:
        if self.is_zero:
            return "Poly(0)"
        bits = []
        for expo, coeff in sorted(self.terms.items()):
            mono = "*".join(f"x{i}^{e}" for i, e in enumerate(expo) if e) or "1"
            bits.append(f"{coeff}*{mono}")
        return "Poly(" + " + ".join(bits) + ")"


def _all_rational(point) -> bool:
    return all(isinstance(x, (int, Fraction)) for x in point)


def random_poly(
    rng: random.Random,
    nvars: int,
    degree: int = 3,
    nterms: int = 4,
    max_num: int = 3,
    max_den: int = 3,
) -> Poly:
    """A sparse random polynomial with small rational coefficients.

    The coefficient pool deliberately excludes zero so the requested term
    count is honoured (up to exponent collisions).
    """
    terms: dict[tuple[int, ...], Fraction] = {}
    for _ in range(nterms):
        d = rng.randint(0, degree)
        expo = [0] * nvars
        for _ in range(d):
            expo[rng.randrange(nvars)] += 1
        num = rng.choice([n for n in range(-max_num, max_num + 1) if n != 0])
        den = rng.randint(1, max_den)
        terms[tuple(expo)] = terms.get(tuple(expo), Fraction(0)) + Fraction(num, den)
    return Poly(nvars, terms)


def random_point(rng: random.Random, n: int, max_den: int = 8) -> tuple[Fraction, ...]:
    """A random rational point with coordinates in [-1, 1]."""
    out = []
    for _ in range(n):
        den = rng.randint(1, max_den)
        num = rng.randint(-den, den)
        out.append(Fraction(num, den))
    return tuple(out)
