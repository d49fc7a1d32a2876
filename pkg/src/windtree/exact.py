"""Exact arithmetic substrate: rationals, planar points, slopes, and the
parity classification of obstacle dimensions.

Everything in this module is an immutable value with decidable equality.
`Rational` is an alias for the standard-library `fractions.Fraction`, which
already guarantees canonical (reduced, positive-denominator) form and exact
arithmetic with arbitrary-precision integers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from .errors import DomainError

Rational = Fraction

# Orientation sign classes for a direction (sign of dx, sign of dy).
ORIENTATIONS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass(frozen=True)
class PointQ:
    """Exact planar point in table units."""

    x: Rational
    y: Rational

    def translated(self, dx, dy) -> "PointQ":
        return PointQ(self.x + dx, self.y + dy)

    def __iter__(self):
        yield self.x
        yield self.y


@dataclass(frozen=True)
class Slope:
    """Unsigned reduced slope u/v plus an optional sign class.

    ``u`` is the rise and ``v`` the run, both non-negative with gcd 1 and
    not both zero; the magnitude of the slope is conserved by reflections
    in the obstacle sides, so it is kept separate from the orientation,
    which is the pair of signs of (dx, dy).  Horizontal is (u, v) = (0, 1),
    vertical is (1, 0).
    """

    u: int
    v: int
    orientation: tuple = (1, 1)

    def __post_init__(self):
        if self.u < 0 or self.v < 0 or (self.u == 0 and self.v == 0):
            raise DomainError(f"invalid slope {self.u}/{self.v}")
        if gcd(self.u, self.v) != 1:
            raise DomainError(f"slope {self.u}/{self.v} is not reduced")
        if self.orientation not in ORIENTATIONS:
            raise DomainError(f"invalid orientation {self.orientation!r}")

    @property
    def is_horizontal(self) -> bool:
        return self.u == 0

    @property
    def is_vertical(self) -> bool:
        return self.v == 0

    @property
    def is_axis(self) -> bool:
        return self.u == 0 or self.v == 0

    def value(self) -> Rational:
        if self.v == 0:
            raise DomainError("vertical slope has no finite value")
        return Fraction(self.u, self.v)

    def unsigned(self) -> "Slope":
        return Slope(self.u, self.v)

    def direction(self, orientation=None) -> tuple:
        """Direction vector (dx, dy) for the given sign class."""
        sx, sy = orientation if orientation is not None else self.orientation
        return (sx * self.v, sy * self.u)

    def __str__(self):
        return f"{self.u}/{self.v}"

    @staticmethod
    def parse(text: str) -> "Slope":
        """Parse 'u/v' (or a bare integer 'u' meaning u/1)."""
        text = text.strip()
        if "/" in text:
            us, vs = text.split("/")
            u, v = int(us), int(vs)
        else:
            u, v = int(text), 1
        if u < 0 or v < 0:
            raise DomainError(f"slope must be non-negative: {text!r}")
        g = gcd(u, v)
        if g == 0:
            raise DomainError("slope 0/0 is meaningless")
        return Slope(u // g, v // g)

    @staticmethod
    def from_fraction(value: Fraction) -> "Slope":
        if value < 0:
            raise DomainError("slopes are unsigned; use an orientation for signs")
        return Slope(value.numerator, value.denominator)


class ParityClass(enum.Enum):
    """Parity pattern of the reduced obstacle dimensions (p/q, r/s)."""

    E = "E"               # p, r odd and q, s even
    E_PRIME = "E_PRIME"   # p, r even and q, s odd
    OTHER = "OTHER"


@dataclass(frozen=True)
class Params:
    """Obstacle dimensions a = p/q, b = r/s with their parity class."""

    p: int
    q: int
    r: int
    s: int
    parity_class: ParityClass

    @property
    def a(self) -> Rational:
        return Fraction(self.p, self.q)

    @property
    def b(self) -> Rational:
        return Fraction(self.r, self.s)

    @property
    def n_cells(self) -> int:
        """Number of unit cells of the scaled quotient surface."""
        return self.q * self.s - self.p * self.r

    def __str__(self):
        return f"{self.p}/{self.q},{self.r}/{self.s}"

    @staticmethod
    def parse(text: str) -> "Params":
        """Parse 'p/q,r/s'."""
        try:
            left, right = text.strip().split(",")
            ps, qs = left.split("/")
            rs, ss = right.split("/")
            return classify_params(int(ps), int(qs), int(rs), int(ss))
        except DomainError:
            raise
        except Exception as exc:
            raise DomainError(f"cannot parse params {text!r}") from exc


def classify_params(p: int, q: int, r: int, s: int) -> Params:
    """Validate reduced obstacle dimensions in (0,1)^2 and classify parity.

    Raises DomainError unless gcd(p,q) = gcd(r,s) = 1, 0 < p < q and
    0 < r < s.
    """
    for num, den, name in ((p, q, "a"), (r, s, "b")):
        if not (0 < num < den):
            raise DomainError(f"dimension {name} = {num}/{den} outside (0,1)")
        if gcd(num, den) != 1:
            raise DomainError(f"dimension {name} = {num}/{den} not reduced")
    if p % 2 == 1 and r % 2 == 1 and q % 2 == 0 and s % 2 == 0:
        cls = ParityClass.E
    elif p % 2 == 0 and r % 2 == 0 and q % 2 == 1 and s % 2 == 1:
        cls = ParityClass.E_PRIME
    else:
        cls = ParityClass.OTHER
    return Params(p, q, r, s, cls)


def mediant_enumerate(limit: int) -> list:
    """All reduced positive slopes u/v with u <= limit and v <= limit,
    in increasing order, each exactly once.

    Walks the Stern-Brocot tree between 0/1 and 1/0; a subtree can be
    pruned as soon as its mediant exceeds the limit in either coordinate,
    because mediants are component-wise minimal over their subtree.
    """
    if limit < 1:
        raise DomainError("limit must be >= 1")
    out = []
    # In-order traversal with an explicit stack: entries are either
    # ('span', left, right) still to expand, or ('emit', node).
    stack = [("span", (0, 1), (1, 0))]
    while stack:
        kind, *rest = stack.pop()
        if kind == "emit":
            out.append(rest[0])
            continue
        (lu, lv), (ru, rv) = rest
        mu, mv = lu + ru, lv + rv
        if mu > limit or mv > limit:
            continue
        stack.append(("span", (mu, mv), (ru, rv)))
        stack.append(("emit", Slope(mu, mv)))
        stack.append(("span", (lu, lv), (mu, mv)))
    return out
