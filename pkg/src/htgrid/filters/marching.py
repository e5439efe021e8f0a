"""Case tables for marching squares and marching cubes on dual cells.

Corners are numbered by binary rank (axis 0 fastest), the same way dual
cells list their leaves.  A corner is *above* when its value is strictly
greater than the iso-value.

The cube table is derived rather than typed in: on each face, every run of
above corners (walking the face counter-clockwise as seen from outside) is
cut off by one segment.  Two cubes sharing a face therefore cut it the same
way, which keeps the surface closed across cells.  Chaining the face
segments gives closed loops, one polygon each.
"""
from __future__ import annotations

from functools import lru_cache

# counter-clockwise ring of a square, in binary corner numbering
SQUARE_RING = (0, 1, 3, 2)


def _ring_segments(ring, above):
    """Directed segments (from_edge, to_edge) cutting off each run of above corners.

    Edges are ``(a, b)`` corner pairs with ``a < b``.
    """
    n = len(ring)
    enters = {}
    exits = []
    for m in range(n):
        a, b = ring[m], ring[(m + 1) % n]
        edge = (min(a, b), max(a, b))
        if above[a] and not above[b]:
            exits.append((m, edge))
        elif above[b] and not above[a]:
            enters[m] = edge
    segments = []
    for m, edge in exits:
        # walk back to the crossing where this run of above corners began
        k = m - 1
        while k % n not in enters:
            k -= 1
        segments.append((edge, enters[k % n]))
    return segments


@lru_cache(maxsize=None)
def square_segments(case: int, join_above: bool = False) -> tuple[tuple[tuple[int, int], tuple[int, int]], ...]:
    """Segments of marching-squares ``case`` as pairs of crossed edges.

    For the two saddle cases, ``join_above`` selects the diagonal joining
    the above corners instead of separating them.
    """
    above = [bool(case >> c & 1) for c in range(4)]
    if join_above:
        flipped = [not a for a in above]
        return tuple((b, a) for a, b in _ring_segments(SQUARE_RING, flipped))
    return tuple(_ring_segments(SQUARE_RING, above))


def is_saddle(case: int) -> bool:
    return case in (0b0110, 0b1001)


def _cube_faces():
    faces = []
    for k in range(3):
        a, b = (k + 1) % 3, (k + 2) % 3
        for side in (0, 1):
            ring = []
            for ua, ub in ((0, 0), (1, 0), (1, 1), (0, 1)):
                bits = [0, 0, 0]
                bits[k], bits[a], bits[b] = side, ua, ub
                ring.append(bits[0] + 2 * bits[1] + 4 * bits[2])
            faces.append(tuple(ring) if side == 1 else tuple(reversed(ring)))
    return tuple(faces)


CUBE_FACES = _cube_faces()
CUBE_EDGES = tuple(
    (a, a | (1 << k)) for k in range(3) for a in range(8) if not a >> k & 1
)


@lru_cache(maxsize=None)
def cube_loops(case: int) -> tuple[tuple[tuple[int, int], ...], ...]:
    """Closed loops of crossed cube edges for marching-cubes ``case``."""
    above = [bool(case >> c & 1) for c in range(8)]
    nxt = {}
    for ring in CUBE_FACES:
        for start, end in _ring_segments(ring, above):
            nxt[start] = end
    loops = []
    seen = set()
    for e in sorted(nxt):
        if e in seen:
            continue
        loop = []
        while e not in seen:
            seen.add(e)
            loop.append(e)
            e = nxt[e]
        loops.append(tuple(loop))
    return tuple(loops)


@lru_cache(maxsize=None)
def cube_triangles(case: int) -> tuple[tuple[tuple[int, int], ...], ...]:
    """Fan triangulation of :func:`cube_loops` (triangles of crossed edges)."""
    tris = []
    for loop in cube_loops(case):
        for m in range(1, len(loop) - 1):
            tris.append((loop[0], loop[m], loop[m + 1]))
    return tuple(tris)
