"""Exact billiard flow on the infinite periodic table.

The table is the plane with the open rectangles
[m - a/2, m + a/2] x [n - b/2, n + b/2] removed, one centered at each
integer lattice point (m, n).  The flow moves in straight lines and
reflects off obstacle sides with equal angles; a trajectory that reaches
an obstacle corner is undefined from that moment on.

All stepping is exact.  For a reduced slope u/v and a rational start on
an obstacle side, every collision coordinate lies on the fixed lattice
(1/N) Z with N = 2*q*s*u*v*lcm(den(x0), den(y0)): vertical side lines
live on (1/2q) Z, horizontal ones on (1/2s) Z, and propagating a
coordinate along the ray multiplies differences by u/v or v/u, which the
factors u*v in N absorb.  The stepper below works in integer multiples
of 1/N throughout, so exactness is structural; the divisions it performs
are checked to be exact at runtime.

Geometric lengths are reported as the exact rational number of copies of
the primitive direction vector (v, u) traversed; the Euclidean length is
that coefficient times sqrt(u^2 + v^2).  This keeps every length
comparison in the rationals.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from .errors import CornerHit, DomainError
from .exact import Params, PointQ, Slope

LEFT, RIGHT, BOTTOM, TOP = "left", "right", "bottom", "top"
SIDES = (LEFT, RIGHT, BOTTOM, TOP)
VERTICAL_SIDES = (LEFT, RIGHT)
HORIZONTAL_SIDES = (BOTTOM, TOP)

DEFAULT_MAX_COLLISIONS = 10**6


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


@dataclass(frozen=True)
class BilliardState:
    """Post-bounce flow state anchored at a collision point.

    ``position`` lies exactly on the ``side`` of the obstacle at lattice
    ``cell``; ``orientation`` is the sign class of the outgoing direction,
    which points into the table.
    """

    position: PointQ
    side: str
    cell: tuple
    orientation: tuple
    slope: Slope


@dataclass(frozen=True)
class ReducedState:
    """Collision state modulo the lattice translations of the table."""

    side: str
    offset: Fraction
    orientation: tuple


class Outcome(enum.Enum):
    PERIODIC = "Periodic"
    ESCAPING = "Escaping"
    SINGULAR = "Singular"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class TrajectoryOutcome:
    kind: Outcome
    combinatorial_length: int
    geometric_length: Fraction
    drift: tuple
    pre_period: int
    corner: PointQ | None = None
    repeat_cells: tuple | None = None  # (first cell, repeat cell) of the cycle anchor

    @property
    def is_periodic(self) -> bool:
        return self.kind is Outcome.PERIODIC


@dataclass(frozen=True)
class TracedPath:
    points: tuple
    singular: bool = False
    corner: PointQ | None = None


def side_length(params: Params, side: str) -> Fraction:
    return params.b if side in VERTICAL_SIDES else params.a


def reduced_state(state: BilliardState, params: Params) -> ReducedState:
    """Forget the lattice cell: side, offset along the side, sign class."""
    m, n = state.cell
    if state.side in VERTICAL_SIDES:
        offset = state.position.y - (n - params.b / 2)
    else:
        offset = state.position.x - (m - params.a / 2)
    return ReducedState(state.side, offset, state.orientation)


def make_state(params: Params, cell: tuple, side: str, offset: Fraction,
               slope: Slope, orientation: tuple) -> BilliardState:
    """Build a validated state from an obstacle side and an offset along it.

    The offset is measured from the bottom end (vertical sides) or the left
    end (horizontal sides).  Offsets at the ends are corners and rejected.
    """
    offset = Fraction(offset)
    length = side_length(params, side)
    if not 0 < offset < length:
        raise DomainError(f"offset {offset} not interior to a side of length {length}")
    m, n = cell
    a2, b2 = params.a / 2, params.b / 2
    if side == LEFT:
        pos = PointQ(m - a2, n - b2 + offset)
    elif side == RIGHT:
        pos = PointQ(m + a2, n - b2 + offset)
    elif side == BOTTOM:
        pos = PointQ(m - a2 + offset, n - b2)
    elif side == TOP:
        pos = PointQ(m - a2 + offset, n + b2)
    else:
        raise DomainError(f"unknown side {side!r}")
    state = BilliardState(pos, side, (m, n), tuple(orientation), slope.unsigned())
    validate_state(state, params)
    return state


def validate_state(state: BilliardState, params: Params) -> None:
    """Check the state invariants: on-side position, outgoing direction."""
    sx, sy = state.orientation
    if (sx, sy) not in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
        raise DomainError(f"invalid orientation {state.orientation!r}")
    dx, dy = sx * state.slope.v, sy * state.slope.u
    m, n = state.cell
    x, y = state.position.x, state.position.y
    a2, b2 = params.a / 2, params.b / 2
    if state.side in VERTICAL_SIDES:
        want_x = m - a2 if state.side == LEFT else m + a2
        if x != want_x or not (n - b2 < y < n + b2):
            raise DomainError("position not interior to the named side")
        if dx == 0:
            raise DomainError("direction tangent to a vertical side")
        if (dx > 0) != (state.side == RIGHT):
            raise DomainError("direction points into the obstacle")
    elif state.side in HORIZONTAL_SIDES:
        want_y = n - b2 if state.side == BOTTOM else n + b2
        if y != want_y or not (m - a2 < x < m + a2):
            raise DomainError("position not interior to the named side")
        if dy == 0:
            raise DomainError("direction tangent to a horizontal side")
        if (dy > 0) != (state.side == TOP):
            raise DomainError("direction points into the obstacle")
    else:
        raise DomainError(f"unknown side {state.side!r}")


def midpoint_state(params: Params, cell: tuple, side: str, slope: Slope,
                   orientation: tuple) -> BilliardState:
    """State at the midpoint of an obstacle side (the E/F preimages)."""
    return make_state(params, cell, side, side_length(params, side) / 2,
                      slope, orientation)


class _Engine:
    """Integer-scaled collision stepper for a fixed slope u/v with u, v >= 1.

    Coordinates are integers counting multiples of 1/N.  Vertical side
    lines sit at k*N +- beta, horizontal ones at k*N +- gamma.
    """

    __slots__ = ("N", "beta", "gamma", "u", "v", "halfN", "cap")

    def __init__(self, params: Params, slope: Slope, n0: int):
        if slope.is_axis:
            raise DomainError("engine requires a non-axis slope")
        u, v = slope.u, slope.v
        N = 2 * params.q * params.s * u * v * n0
        self.N = N
        self.halfN = N // 2
        self.beta = params.p * (N // (2 * params.q))
        self.gamma = params.r * (N // (2 * params.s))
        self.u = u
        self.v = v
        # Torus-periodicity guard: a slope-u/v ray meets at most
        # 2*(u + v) + 4 grid lines per primitive period, so if nothing is
        # hit within a couple of periods nothing is ever hit.
        self.cap = 8 * (u + v) + 32

    @staticmethod
    def _next_grid(pos: int, sign: int, N: int, off: int) -> int:
        """Grid value {k*N - off, k*N + off} strictly beyond pos."""
        rem = pos % N
        if sign > 0:
            if rem < off:
                return pos + (off - rem)
            if rem < N - off:
                return pos + (N - off - rem)
            return pos + (N + off - rem)
        if rem > N - off:
            return pos - (rem - (N - off))
        if rem > off:
            return pos - (rem - off)
        return pos - (rem + off)

    def _div(self, num: int, den: int) -> int:
        quot, rem = divmod(num, den)
        if rem:
            raise AssertionError("lattice invariant violated (inexact division)")
        return quot

    def step(self, X: int, Y: int, sx: int, sy: int):
        """March to the next collision.

        Returns (X', Y', side, m, n, sx', sy', |dX|) or None when the ray
        provably never meets an obstacle (free flight).  Raises CornerHit.
        """
        N, beta, gamma, u, v = self.N, self.beta, self.gamma, self.u, self.v
        X0 = X
        for _ in range(self.cap):
            XV = self._next_grid(X, sx, N, beta)
            YH = self._next_grid(Y, sy, N, gamma)
            tx = u * abs(XV - X)
            ty = v * abs(YH - Y)
            if tx <= ty:
                Ynew = Y + sy * self._div(u * abs(XV - X), v)
                remx = XV % N
                if remx == beta:
                    side, m = RIGHT, (XV - beta) // N
                else:
                    side, m = LEFT, (XV + beta) // N
                n = (Ynew + self.halfN) // N
                d = abs(Ynew - n * N)
                if d < gamma:
                    return (XV, Ynew, side, m, n, -sx, sy, abs(XV - X0))
                if d == gamma:
                    raise CornerHit(Fraction(XV, N), Fraction(Ynew, N))
                X, Y = XV, Ynew
            else:
                Xnew = X + sx * self._div(v * abs(YH - Y), u)
                remy = YH % N
                if remy == gamma:
                    side, n = TOP, (YH - gamma) // N
                else:
                    side, n = BOTTOM, (YH + gamma) // N
                m = (Xnew + self.halfN) // N
                d = abs(Xnew - m * N)
                if d < beta:
                    return (Xnew, YH, side, m, n, sx, -sy, abs(Xnew - X0))
                if d == beta:
                    raise CornerHit(Fraction(Xnew, N), Fraction(YH, N))
                X, Y = Xnew, YH
        return None

    def encode(self, point: PointQ) -> tuple:
        X = point.x * self.N
        Y = point.y * self.N
        if X.denominator != 1 or Y.denominator != 1:
            raise AssertionError("point off the collision lattice")
        return int(X), int(Y)

    def reduced_key(self, side: str, X: int, Y: int, m: int, n: int,
                    sx: int, sy: int) -> tuple:
        if side in VERTICAL_SIDES:
            off = Y - (n * self.N - self.gamma)
        else:
            off = X - (m * self.N - self.beta)
        return (side, off, sx, sy)


def _engine_for_state(params: Params, state: BilliardState) -> "_Engine":
    n0 = _lcm(state.position.x.denominator, state.position.y.denominator)
    return _Engine(params, state.slope, n0)


def next_collision(state: BilliardState, params: Params) -> BilliardState:
    """One exact collision step.  Raises CornerHit at corners."""
    if state.slope.is_axis:
        raise DomainError("axis slopes are classified analytically, not stepped")
    eng = _engine_for_state(params, state)
    X, Y = eng.encode(state.position)
    sx, sy = state.orientation
    res = eng.step(X, Y, sx, sy)
    if res is None:
        raise AssertionError("a ray from an obstacle side always returns to one")
    Xn, Yn, side, m, n, sxn, syn, _ = res
    pos = PointQ(Fraction(Xn, eng.N), Fraction(Yn, eng.N))
    return BilliardState(pos, side, (m, n), (sxn, syn), state.slope)


def _classify_axis(state: BilliardState, params: Params) -> TrajectoryOutcome:
    """Axis-aligned flow from a side: trapped between two facing sides.

    A horizontal ray leaving a vertical side stays in the open band of its
    obstacle row, so it must hit the facing side of the neighboring
    obstacle: a 2-collision periodic orbit.  Same for vertical rays.
    """
    if state.slope.is_horizontal:
        lam = 2 * (1 - params.a)
    else:
        lam = 2 * (1 - params.b)
    return TrajectoryOutcome(Outcome.PERIODIC, 2, Fraction(lam), (0, 0), 0)


def classify_trajectory(start: BilliardState, params: Params,
                        max_collisions: int = DEFAULT_MAX_COLLISIONS) -> TrajectoryOutcome:
    """Classify the forward orbit as periodic, escaping or singular.

    Stores each reduced state (collision datum modulo lattice translation)
    together with its lattice cell; the first reduced repeat decides the
    outcome: zero cell difference means the orbit is closed, a non-zero
    difference is the drift of an escaping orbit.  For rational data the
    reduced states form a finite set, so the scan terminates.
    """
    validate_state(start, params)
    if max_collisions < 1:
        raise DomainError("max_collisions must be >= 1")
    if start.slope.is_axis:
        return _classify_axis(start, params)

    eng = _engine_for_state(params, start)
    X, Y = eng.encode(start.position)
    sx, sy = start.orientation
    m, n = start.cell
    side = start.side
    seen = {}
    total_dx = 0
    for i in range(max_collisions + 1):
        key = eng.reduced_key(side, X, Y, m, n, sx, sy)
        if key in seen:
            i0, m0, n0, dx0 = seen[key]
            drift = (m - m0, n - n0)
            lam = Fraction(total_dx - dx0, eng.v * eng.N)
            kind = Outcome.PERIODIC if drift == (0, 0) else Outcome.ESCAPING
            return TrajectoryOutcome(kind, i - i0, lam, drift, i0,
                                     repeat_cells=((m0, n0), (m, n)))
        seen[key] = (i, m, n, total_dx)
        try:
            res = eng.step(X, Y, sx, sy)
        except CornerHit as hit:
            corner = PointQ(hit.x, hit.y)
            lam = Fraction(total_dx, eng.v * eng.N)  # up to the last collision
            return TrajectoryOutcome(Outcome.SINGULAR, i, lam, (0, 0), 0,
                                     corner=corner)
        if res is None:
            raise AssertionError("free flight from an obstacle side is impossible")
        X, Y, side, m, n, sx, sy, adx = res
        total_dx += adx
    lam = Fraction(total_dx, eng.v * eng.N)
    return TrajectoryOutcome(Outcome.UNDETERMINED, max_collisions, lam, (0, 0), 0)


def collision_sequence(start: BilliardState, params: Params,
                       n_collisions: int) -> list:
    """The (side, cell) combinatorics of the first n collisions."""
    out = []
    state = start
    for _ in range(n_collisions):
        state = next_collision(state, params)
        out.append((state.side, state.cell))
    return out


def trace(start: BilliardState, params: Params, n_collisions: int) -> TracedPath:
    """Exact polyline of the first n collision points, start included.

    Truncated at a corner hit and tagged singular in that case.
    """
    validate_state(start, params)
    points = [start.position]
    if start.slope.is_axis:
        # Trapped 2-bounce orbit: alternate between the two facing sides.
        state = start
        for _ in range(n_collisions):
            x, y = state.position.x, state.position.y
            sx, sy = state.orientation
            if state.slope.is_horizontal:
                gap = 1 - params.a
                pos = PointQ(x + sx * gap, y)
                m, nn = state.cell
                state = BilliardState(pos, LEFT if sx > 0 else RIGHT,
                                      (m + sx, nn), (-sx, sy), state.slope)
            else:
                gap = 1 - params.b
                pos = PointQ(x, y + sy * gap)
                m, nn = state.cell
                state = BilliardState(pos, BOTTOM if sy > 0 else TOP,
                                      (m, nn + sy), (sx, -sy), state.slope)
            points.append(state.position)
        return TracedPath(tuple(points))
    eng = _engine_for_state(params, start)
    X, Y = eng.encode(start.position)
    sx, sy = start.orientation
    for _ in range(n_collisions):
        try:
            res = eng.step(X, Y, sx, sy)
        except CornerHit as hit:
            corner = PointQ(hit.x, hit.y)
            points.append(corner)
            return TracedPath(tuple(points), singular=True, corner=corner)
        X, Y, _side, _m, _n, sx, sy, _adx = res
        points.append(PointQ(Fraction(X, eng.N), Fraction(Y, eng.N)))
    return TracedPath(tuple(points))


def path_length(path: TracedPath, slope: Slope) -> Fraction:
    """Exact length of a traced polyline in primitive-vector units."""
    total = Fraction(0)
    for p0, p1 in zip(path.points, path.points[1:]):
        dx, dy = abs(p1.x - p0.x), abs(p1.y - p0.y)
        if slope.v:
            total += Fraction(dx, slope.v)
        else:
            total += Fraction(dy, slope.u)
    return total


def time_reversed(state: BilliardState) -> BilliardState:
    """State flowing backward along the incoming ray of this collision.

    Reversing time at a collision on a horizontal side mirrors the
    outgoing direction through the vertical axis; on a vertical side,
    through the horizontal axis.
    """
    sx, sy = state.orientation
    if state.side in HORIZONTAL_SIDES:
        orient = (-sx, sy)
    else:
        orient = (sx, -sy)
    return BilliardState(state.position, state.side, state.cell, orient,
                         state.slope)


def symmetry_check(start: BilliardState, params: Params, n_collisions: int) -> bool:
    """Mirror symmetry of the forward and backward orbits of a mid-side start.

    The start must sit at the midpoint of its obstacle side.  For a
    horizontal-side midpoint the two orbits must be exact mirror images
    through the vertical line through the start; for a vertical-side
    midpoint, through the horizontal line.  Singular truncations propagate
    as a failed check only if the two sides disagree.
    """
    length = side_length(params, start.side)
    mid = length / 2
    m, n = start.cell
    a2, b2 = params.a / 2, params.b / 2
    if start.side in HORIZONTAL_SIDES:
        if start.position.x != m - a2 + mid:
            raise DomainError("start is not a horizontal-side midpoint")
        axis = start.position.x
        mirror = lambda pt: PointQ(2 * axis - pt.x, pt.y)
    else:
        if start.position.y != n - b2 + mid:
            raise DomainError("start is not a vertical-side midpoint")
        axis = start.position.y
        mirror = lambda pt: PointQ(pt.x, 2 * axis - pt.y)
    fwd = trace(start, params, n_collisions)
    bwd = trace(time_reversed(start), params, n_collisions)
    if fwd.singular != bwd.singular or len(fwd.points) != len(bwd.points):
        return False
    return all(mirror(p) == q for p, q in zip(fwd.points, bwd.points))


def regular_start(params: Params, slope: Slope, orientation: tuple = (1, 1),
                  cell: tuple = (0, 0), attempts: int = 64,
                  max_collisions: int = DEFAULT_MAX_COLLISIONS):
    """A deterministic start whose orbit avoids corners, with its outcome.

    Walks a fixed ladder of side offsets until classify_trajectory comes
    back non-singular.  Returns (state, outcome).  Raises DomainError if
    every attempt is singular (not observed for desk-scale data).
    """
    sides = HORIZONTAL_SIDES if not slope.is_horizontal else VERTICAL_SIDES
    denom = 3
    for _ in range(attempts):
        for side in sides:
            length = side_length(params, side)
            orient = orientation
            if side == TOP:
                orient = (orientation[0], 1)
            elif side == BOTTOM:
                orient = (orientation[0], -1)
            elif side == RIGHT:
                orient = (1, orientation[1])
            elif side == LEFT:
                orient = (-1, orientation[1])
            try:
                state = make_state(params, cell, side,
                                   Fraction(1, denom) * length, slope, orient)
            except DomainError:
                continue
            outcome = classify_trajectory(state, params, max_collisions)
            if outcome.kind is not Outcome.SINGULAR:
                return state, outcome
        denom = denom + 2
    raise DomainError(f"no regular start found for slope {slope} at {params}")


def launch(params: Params, point: PointQ, slope: Slope,
           orientation: tuple) -> BilliardState | None:
    """March a ray from a table-interior point to its first collision.

    Returns the post-bounce state, or None when the ray provably never
    meets an obstacle (a straight corridor).  Raises CornerHit when the
    first contact is a corner, and DomainError for points inside or on an
    obstacle.
    """
    x, y = point.x, point.y
    m = round(x)
    n = round(y)
    a2, b2 = params.a / 2, params.b / 2
    if abs(x - m) <= a2 and abs(y - n) <= b2:
        raise DomainError("launch point is inside or on an obstacle")
    if slope.is_axis:
        if slope.is_horizontal:
            sxd = orientation[0]
            if abs(y - n) == b2:
                # grazing line along the side level: first contact is a corner
                mm = m if (x - m) * sxd < -a2 else m + sxd
                raise CornerHit(Fraction(mm - sxd * a2), y)
            if abs(y - n) > b2:
                return None  # corridor
            side = LEFT if sxd > 0 else RIGHT
            # first obstacle column ahead with the band occupied: adjacent
            mm = m if (x - m) * sxd < -a2 else m + sxd
            hit_x = mm - a2 if sxd > 0 else mm + a2
            pos = PointQ(Fraction(hit_x), y)
            return BilliardState(pos, side, (mm, n), (-sxd, orientation[1]), slope)
        else:
            syd = orientation[1]
            if abs(x - m) == a2:
                nn = n if (y - n) * syd < -b2 else n + syd
                raise CornerHit(x, Fraction(nn - syd * b2))
            if abs(x - m) > a2:
                return None
            side = BOTTOM if syd > 0 else TOP
            nn = n if (y - n) * syd < -b2 else n + syd
            hit_y = nn - b2 if syd > 0 else nn + b2
            pos = PointQ(x, Fraction(hit_y))
            return BilliardState(pos, side, (m, nn), (orientation[0], -syd), slope)
    n0 = _lcm(x.denominator, y.denominator)
    eng = _Engine(params, slope, n0)
    X, Y = eng.encode(point)
    sx, sy = orientation
    res = eng.step(X, Y, sx, sy)
    if res is None:
        return None
    Xn, Yn, side, mm, nn, sxn, syn, _ = res
    pos = PointQ(Fraction(Xn, eng.N), Fraction(Yn, eng.N))
    return BilliardState(pos, side, (mm, nn), (sxn, syn), slope)
