"""Independent brute-force oracles used to check the fast implementations.

These deliberately share no stepping code with the package: the ray oracle
enumerates every obstacle side line in a growing box and intersects it with
the ray; the cylinder oracle follows leaves and separatrices on the flat
polygon directly, with no renormalization.
"""

from fractions import Fraction
from math import floor

from windtree.exact import Params


def _nearest_int(x: Fraction) -> int:
    return floor(x + Fraction(1, 2))


def scan_next_hit(params: Params, x, y, dx, dy):
    """First contact of the ray (x, y) + t*(dx, dy), t > 0, with any obstacle.

    Returns ('hit', point, side, cell) or ('corner', point) or None when no
    obstacle is met within a generous window (free flight).
    """
    a2 = Fraction(params.p, 2 * params.q)
    b2 = Fraction(params.r, 2 * params.s)
    for radius in (2, 4, 8, 16, 64, 256):
        events = []
        if dx != 0:
            for m in range(floor(x) - radius, floor(x) + radius + 1):
                for xs, side in ((m - a2, "left"), (m + a2, "right")):
                    t = Fraction(xs - x, dx)
                    if t <= 0:
                        continue
                    yy = y + t * dy
                    n = _nearest_int(yy)
                    d = abs(yy - n)
                    if d < b2:
                        events.append((t, "hit", (xs, yy), side, (m, n)))
                    elif d == b2:
                        events.append((t, "corner", (xs, yy), None, None))
        if dy != 0:
            for n in range(floor(y) - radius, floor(y) + radius + 1):
                for ys, side in ((n - b2, "bottom"), (n + b2, "top")):
                    t = Fraction(ys - y, dy)
                    if t <= 0:
                        continue
                    xx = x + t * dx
                    m = _nearest_int(xx)
                    d = abs(xx - m)
                    if d < a2:
                        events.append((t, "hit", (xx, ys), side, (m, n)))
                    elif d == a2:
                        events.append((t, "corner", (xx, ys), None, None))
        if not events:
            continue
        events.sort(key=lambda e: e[0])
        t0 = events[0][0]
        # Accept only if every line with parameter <= t0 lies inside the box.
        if abs(t0 * dx) < radius - 1 and abs(t0 * dy) < radius - 1:
            kind = events[0][1]
            if kind == "corner":
                return ("corner", events[0][2])
            _, _, point, side, cell = events[0]
            return ("hit", point, side, cell)
    return None


def separatrix_cylinders(h, v, V, U):
    """Cylinder (circumference, height) multiset in direction (V, U), V,U >= 1.

    Works on the flat polygon directly: traces the saddle connections out
    of every singular-vertex sector, cuts the vertical section (the union
    of the left cell edges) at their crossing points, merges the resulting
    pieces across regular lattice vertices into genuine transversal arcs,
    then flows one closed leaf per arc and groups arcs into cylinders.
    Circumferences count primitive direction vectors, heights come from
    the area the arcs carry.
    """
    n = len(h)
    h_inv = [0] * n
    v_inv = [0] * n
    for i, j in enumerate(h):
        h_inv[j] = i
    for i, j in enumerate(v):
        v_inv[j] = i

    def regular_ne(c):
        # TR-corner vertex of cell c is regular iff the two diagonal paths agree.
        return v[h[c]] == h[v[c]]

    # Vertex classes: orbits of the "rotate around the BL vertex" map.
    rot = [v[h[v_inv[h_inv[j]]]] for j in range(n)]
    seen = [False] * n
    singular_cells = set()
    regular_bl = [False] * n
    for j in range(n):
        if seen[j]:
            continue
        cyc = [j]
        seen[j] = True
        k = rot[j]
        while k != j:
            cyc.append(k)
            seen[k] = True
            k = rot[k]
        if len(cyc) > 1:
            singular_cells.update(cyc)
        else:
            regular_bl[j] = True

    crossings = {c: set() for c in range(n)}  # interior left-edge heights
    pierced = set()  # cells whose BL vertex has a separatrix passing through

    def advance(cell, x, y):
        """One segment of straight flow: (cell', x', y', crossed_left_edge,
        passed_vertex, stopped)."""
        tx = Fraction(1 - x, V)
        ty = Fraction(1 - y, U)
        if tx < ty:
            return (h[cell], Fraction(0), y + tx * U, True, False, False)
        if ty < tx:
            return (v[cell], x + ty * V, Fraction(0), False, False, False)
        # exact corner: pass through if regular, stop at the singularity
        if regular_ne(cell):
            return (v[h[cell]], Fraction(0), Fraction(0), True, True, False)
        return (cell, Fraction(1), Fraction(1), False, False, True)

    # Saddle connections: out of each sector of each singular vertex.
    for j in sorted(singular_cells):
        cell, x, y = j, Fraction(0), Fraction(0)
        for _ in range(64 * n * (V + U) + 64):
            cell, x, y, crossed, vert, stopped = advance(cell, x, y)
            if stopped:
                break
            if vert:
                pierced.add(cell)
            elif crossed:
                crossings[cell].add(y)
        else:
            raise AssertionError("separatrix did not terminate")

    # Pieces per edge, merged into arcs across clean regular vertices.
    pieces = {}
    for c in range(n):
        ys = sorted(crossings[c] | {Fraction(0), Fraction(1)})
        pieces[c] = list(zip(ys, ys[1:]))
    parent = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        parent[find(x)] = find(y)

    for c in range(n):
        for iv in pieces[c]:
            parent[(c, iv)] = (c, iv)
    for c in range(n):
        upper = v[c]  # left edge of c continues into the left edge of v[c]
        if regular_bl[upper] and upper not in pierced:
            union((c, pieces[c][-1]), (upper, pieces[upper][0]))

    arcs = {}
    for key in parent:
        arcs.setdefault(find(key), []).append(key)

    def arc_sample(members):
        # midpoint of the longest piece: interior of the arc for sure
        c, (lo, hi) = max(members, key=lambda m: (m[1][1] - m[1][0], m))
        return c, (lo + hi) / 2

    visited = set()
    cylinders = []
    for root in sorted(arcs):
        if root in visited:
            continue
        c0, mid = arc_sample(arcs[root])
        cell, x, y = c0, Fraction(0), mid
        marked = set()
        vcross = 0
        for _ in range(64 * n * (V + U) + 64):
            cell, x, y, crossed, vert, stopped = advance(cell, x, y)
            assert not stopped, "regular leaf ran into the singularity"
            if vert:
                vcross += 1
                # the vertex is interior to the arc through (cell, y=0)
                marked.add(find((cell, pieces[cell][0])))
            elif crossed:
                vcross += 1
                for jv in pieces[cell]:
                    if jv[0] < y < jv[1]:
                        marked.add(find((cell, jv)))
                        break
                else:
                    raise AssertionError("leaf crossed a split point")
            if (cell, x, y) == (c0, Fraction(0), mid):
                break
        else:
            raise AssertionError("leaf did not close")
        assert vcross % V == 0
        circ = vcross // V
        area = Fraction(0)
        for arc_root in marked:
            area += sum(hi - lo for (_, (lo, hi)) in arcs[arc_root])
        height = area / circ
        assert height.denominator == 1
        visited |= marked
        cylinders.append((circ, int(height)))
    assert sum(c * hgt for c, hgt in cylinders) == n
    return sorted(cylinders)
