"""Finite subsets of Z^d under the l1 word metric.

Elements are integer tuples.  A subset remembers when it is exactly an l1
ball; balls of large radius stay lazy (membership and size by formula) so
scale schedules can use radii in the millions without materializing points.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

from coverdim.boxes import SizeGuardError

MATERIALIZE_CAP = 200_000


def _as_element(x, dim=None):
    if isinstance(x, int):
        x = (x,)
    t = tuple(int(c) for c in x)
    if dim is not None and len(t) != dim:
        raise ValueError(f"element {t} has dimension {len(t)}, expected {dim}")
    return t


@lru_cache(maxsize=None)
def ball_size(dim, radius):
    """Number of lattice points with l1 norm <= radius."""
    return sum((1 << i) * math.comb(dim, i) * math.comb(radius, i)
               for i in range(0, min(dim, radius) + 1))


def _ball_elems(dim, radius):
    out = []

    def rec(prefix, budget):
        if len(prefix) == dim - 1:
            for c in range(-budget, budget + 1):
                out.append(prefix + (c,))
            return
        for c in range(-budget, budget + 1):
            rec(prefix + (c,), budget - abs(c))

    rec(tuple(), radius)
    return frozenset(out)


@dataclass(frozen=True)
class FiniteSubset:
    """Finite subset of Z^d; carrier for step sets F, bounds S, and balls."""

    dim: int
    elems: frozenset | None = field(default=None)
    ball_radius: int | None = field(default=None)

    def __post_init__(self):
        if self.elems is None and self.ball_radius is None:
            raise ValueError("need explicit elements or a ball radius")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def of(dim, elems):
        els = frozenset(_as_element(e, dim) for e in elems)
        return FiniteSubset(dim, els)

    @staticmethod
    def empty(dim):
        return FiniteSubset(dim, frozenset())

    @staticmethod
    def identity(dim):
        return FiniteSubset(dim, frozenset({tuple(0 for _ in range(dim))}),
                            ball_radius=0)

    # -- size / membership -------------------------------------------------

    def __len__(self):
        if self.elems is not None:
            return len(self.elems)
        return ball_size(self.dim, self.ball_radius)

    def __contains__(self, x):
        x = _as_element(x, self.dim)
        if self.ball_radius is not None:
            return sum(abs(c) for c in x) <= self.ball_radius
        return x in self.elems

    def __iter__(self):
        return iter(self.materialized().elems)

    def is_empty(self):
        return len(self) == 0

    def materialized(self):
        if self.elems is not None:
            return self
        if len(self) > MATERIALIZE_CAP:
            raise SizeGuardError(
                f"ball(dim={self.dim}, r={self.ball_radius}) has {len(self)} "
                f"elements; refusing to materialize")
        return FiniteSubset(self.dim, _ball_elems(self.dim, self.ball_radius),
                            ball_radius=self.ball_radius)

    def sorted_elements(self):
        return sorted(self.materialized().elems)

    # -- structure ---------------------------------------------------------

    @property
    def is_fs(self):
        """Contains the identity and is symmetric (F = -F)."""
        if self.ball_radius is not None:
            return True
        if not self.elems:
            return False
        zero = tuple(0 for _ in range(self.dim))
        return zero in self.elems and all(
            tuple(-c for c in e) in self.elems for e in self.elems)

    def radius(self):
        """Max l1 norm over elements (0 for the empty set)."""
        if self.ball_radius is not None:
            return self.ball_radius
        if not self.elems:
            return 0
        return max(sum(abs(c) for c in e) for e in self.elems)

    def __le__(self, other):
        if self.dim != other.dim:
            return False
        if self.ball_radius is not None and other.ball_radius is not None:
            return self.ball_radius <= other.ball_radius
        return all(e in other for e in self.materialized().elems)

    def __eq__(self, other):
        if not isinstance(other, FiniteSubset) or self.dim != other.dim:
            return NotImplemented
        if self.ball_radius is not None and other.ball_radius is not None:
            return self.ball_radius == other.ball_radius
        if self.elems is not None and other.elems is not None:
            return self.elems == other.elems
        return self <= other and other <= self

    def __hash__(self):
        if self.ball_radius is not None:
            return hash((self.dim, "ball", self.ball_radius))
        return hash((self.dim, self.elems))

    def describe(self):
        if self.ball_radius is not None:
            return f"ball:{self.ball_radius}"
        return "{" + ",".join(str(e) for e in sorted(self.elems)) + "}"


def ball(dim, radius):
    """l1 ball of the given radius in Z^dim; always fs."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if ball_size(dim, radius) <= MATERIALIZE_CAP:
        return FiniteSubset(dim, _ball_elems(dim, radius), ball_radius=radius)
    return FiniteSubset(dim, None, ball_radius=radius)


def product(f, g):
    """Sumset { a + b : a in f, b in g }."""
    if f.dim != g.dim:
        raise ValueError(f"dimension mismatch: {f.dim} vs {g.dim}")
    if f.ball_radius is not None and g.ball_radius is not None:
        return ball(f.dim, f.ball_radius + g.ball_radius)
    fa, ga = f.materialized(), g.materialized()
    if len(fa) * len(ga) > 4 * MATERIALIZE_CAP * 10:
        raise SizeGuardError("sumset too large to materialize")
    return FiniteSubset(f.dim, frozenset(
        tuple(a + b for a, b in zip(x, y)) for x in fa.elems for y in ga.elems))


def power(f, r):
    """r-fold sumset of f with itself; r >= 1."""
    if r < 1:
        raise ValueError("power requires r >= 1; use the identity subset for r = 0")
    if f.ball_radius is not None:
        return ball(f.dim, f.ball_radius * r)
    acc = f
    for _ in range(r - 1):
        acc = product(acc, f)
    return acc


def diam(f):
    """Max pairwise l1 distance; empty sets are rejected."""
    if f.is_empty():
        raise ValueError("diameter of the empty subset is undefined")
    if f.ball_radius is not None:
        return 2 * f.ball_radius
    els = sorted(f.elems)
    best = 0
    # exact via sign-vector spreads, avoiding the quadratic pair scan
    for sigma in itertools.product((1, -1), repeat=f.dim):
        vals = [sum(s * c for s, c in zip(sigma, e)) for e in els]
        best = max(best, max(vals) - min(vals))
    return best


def symmetrize(f):
    """f united with -f and the identity; the canonical fs hull."""
    if f.ball_radius is not None:
        return f
    zero = tuple(0 for _ in range(f.dim))
    els = set(f.elems)
    els.add(zero)
    els.update(tuple(-c for c in e) for e in f.elems)
    return FiniteSubset(f.dim, frozenset(els))


def parse_subset(spec, dim):
    """Parse 'ball:R' or '(a,b);(c,d);...' into a FiniteSubset."""
    spec = spec.strip()
    if spec.startswith("ball:"):
        return ball(dim, int(spec.split(":", 1)[1]))
    elems = []
    for chunk in spec.split(";"):
        chunk = chunk.strip().strip("()")
        if not chunk:
            continue
        elems.append(tuple(int(c) for c in chunk.split(",")))
    return FiniteSubset.of(dim, elems)
