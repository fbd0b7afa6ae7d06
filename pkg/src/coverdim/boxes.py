"""Exact integer box and pattern arithmetic.

Internal support for the symbolic engines: axis-aligned integer boxes
(products of half-open intervals), unions of boxes, and periodic patterns
of boxes clipped to a region.  These let chain computations on lattice
sets run at box granularity, so component analysis never materializes
individual lattice points even when sets have billions of them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

Vec = tuple  # integer vectors as plain tuples


def vadd(a, b):
    return tuple(x + y for x, y in zip(a, b))


def vsub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def vneg(a):
    return tuple(-x for x in a)


def vmod(a, m):
    return tuple(x % m for x in a)


def l1(a):
    return sum(abs(x) for x in a)


@dataclass(frozen=True, order=True)
class Box:
    """Product of half-open integer intervals [lo_i, hi_i)."""

    lo: Vec
    hi: Vec

    @property
    def dim(self):
        return len(self.lo)

    def is_empty(self):
        return any(h <= l for l, h in zip(self.lo, self.hi))

    def size(self):
        n = 1
        for l, h in zip(self.lo, self.hi):
            if h <= l:
                return 0
            n *= h - l
        return n

    def contains(self, p):
        return all(l <= x < h for x, l, h in zip(p, self.lo, self.hi))

    def intersect(self, other):
        lo = tuple(max(a, b) for a, b in zip(self.lo, other.lo))
        hi = tuple(min(a, b) for a, b in zip(self.hi, other.hi))
        return Box(lo, hi)

    def translate(self, v):
        return Box(vadd(self.lo, v), vadd(self.hi, v))

    def subtract(self, other):
        """Disjoint boxes covering self minus other."""
        cut = self.intersect(other)
        if cut.is_empty():
            return [] if self.is_empty() else [self]
        out = []
        lo, hi = list(self.lo), list(self.hi)
        for i in range(self.dim):
            if lo[i] < cut.lo[i]:
                out.append(Box(tuple(lo[:i] + [lo[i]] + lo[i + 1:]),
                               tuple(hi[:i] + [cut.lo[i]] + hi[i + 1:])))
                lo[i] = cut.lo[i]
            if cut.hi[i] < hi[i]:
                out.append(Box(tuple(lo[:i] + [cut.hi[i]] + lo[i + 1:]),
                               tuple(hi[:i] + [hi[i]] + hi[i + 1:])))
                hi[i] = cut.hi[i]
        return [b for b in out if not b.is_empty()]

    def l1_gap(self, other):
        """Minimal l1 distance between a cell of self and a cell of other."""
        d = 0
        for al, ah, bl, bh in zip(self.lo, self.hi, other.lo, other.hi):
            d += max(0, bl - (ah - 1), al - (bh - 1))
        return d

    def corner_spread(self, sigma):
        """(max, min) of sigma . x over cells; sigma is a +-1 vector."""
        hi = sum(s * (h - 1) if s > 0 else s * l
                 for s, l, h in zip(sigma, self.lo, self.hi))
        lo = sum(s * l if s > 0 else s * (h - 1)
                 for s, l, h in zip(sigma, self.lo, self.hi))
        return hi, lo

    def cells(self, cap=1_000_000):
        if self.size() > cap:
            raise SizeGuardError(f"box of {self.size()} cells exceeds cap {cap}")
        return itertools.product(*(range(l, h) for l, h in zip(self.lo, self.hi)))

    def min_cell(self):
        return self.lo

    def closest_cell_to(self, p):
        return tuple(min(max(x, l), h - 1) for x, l, h in zip(p, self.lo, self.hi))


class SizeGuardError(Exception):
    """Raised when an exhaustive computation would exceed its size guard."""


def sigmas(dim):
    return list(itertools.product((1, -1), repeat=dim))


def boxes_l1_diameter(boxes):
    """Exact l1 diameter of a union of boxes (max over sign vectors of spread)."""
    if not boxes:
        return 0
    best = 0
    for sigma in sigmas(boxes[0].dim):
        hi = max(b.corner_spread(sigma)[0] for b in boxes)
        lo = min(b.corner_spread(sigma)[1] for b in boxes)
        best = max(best, hi - lo)
    return best


def boxes_fit_in_ball(boxes, radius):
    """Integer center c with union(boxes) inside the l1 ball of `radius` at c, or None.

    Uses the sign-vector spreads: c must satisfy sigma.c >= M_sigma - radius for
    every sign vector sigma.  Feasibility is checked exactly; the returned center
    is found by a bounded local search around the box hull midpoint.
    """
    if not boxes:
        return tuple()
    dim = boxes[0].dim
    spreads = {}
    for sigma in sigmas(dim):
        spreads[sigma] = max(b.corner_spread(sigma)[0] for b in boxes)
    # quick necessary condition: diameter <= 2*radius
    if boxes_l1_diameter(boxes) > 2 * radius:
        return None
    lo = tuple(min(b.lo[i] for b in boxes) for i in range(dim))
    hi = tuple(max(b.hi[i] for b in boxes) for i in range(dim))
    mid = tuple((l + h - 1) // 2 for l, h in zip(lo, hi))

    def ok(c):
        return all(sum(s * x for s, x in zip(sigma, c)) >= spreads[sigma] - radius
                   for sigma in sigmas(dim))

    # diameter <= radius: any cell of the union works as a center
    if boxes_l1_diameter(boxes) <= radius:
        return boxes[0].lo
    for delta in itertools.product(range(-1, 2), repeat=dim):
        c = vadd(mid, delta)
        if ok(c):
            return c
    # exhaustive fallback over a small window around mid (parity corner cases)
    for delta in itertools.product(range(-3, 4), repeat=dim):
        c = vadd(mid, delta)
        if ok(c):
            return c
    return None


def normalize_boxes(boxes):
    """Disjoint, sorted decomposition of a union of boxes."""
    out = []
    for b in sorted(boxes):
        if b.is_empty():
            continue
        frag = [b]
        for seen in out:
            frag = [p for f in frag for p in f.subtract(seen)]
            if not frag:
                break
        out.extend(frag)
    return tuple(sorted(out))


def subtract_boxes(boxes, minus):
    out = list(boxes)
    for m in minus:
        out = [p for b in out for p in b.subtract(m)]
    return tuple(sorted(out))


def intersect_boxes(boxes_a, boxes_b):
    out = []
    for a in boxes_a:
        for b in boxes_b:
            c = a.intersect(b)
            if not c.is_empty():
                out.append(c)
    return tuple(sorted(out))


def boxes_size(boxes):
    """Total cell count; assumes boxes disjoint (use normalize_boxes first)."""
    return sum(b.size() for b in boxes)


def split_mod(box, modulus):
    """Split an arbitrary box into pieces lying inside [0, modulus)^d.

    The box is interpreted modulo `modulus` per axis; wrapping intervals
    split into at most two pieces per axis.
    """
    per_axis = []
    for l, h in zip(box.lo, box.hi):
        w = h - l
        if w <= 0:
            return []
        if w >= modulus:
            per_axis.append([(0, modulus)])
            continue
        l0 = l % modulus
        h0 = l0 + w
        if h0 <= modulus:
            per_axis.append([(l0, h0)])
        else:
            per_axis.append([(l0, modulus), (0, h0 - modulus)])
    return [Box(tuple(p[0] for p in pieces), tuple(p[1] for p in pieces))
            for pieces in itertools.product(*per_axis)]


@dataclass(frozen=True)
class Pattern:
    """Periodic family of boxes clipped to a region.

    Represents { x in clip : x = base + k*period + c for k in Z^d, c in cell }
    over all local cells.  period None means a single translate (k = 0).
    All coordinates are plain (already reduced) integers; the clip region is
    a plain box, so a pattern never wraps a torus by itself.
    """

    clip: Box
    period: Vec | None
    base: Vec
    cells: tuple  # of Box, each within [0, period) when periodic

    @property
    def dim(self):
        return self.clip.dim

    def _index_range(self, cell, query):
        """Per-axis ranges of period indices whose instance meets `query`."""
        rngs = []
        for i in range(self.dim):
            p = self.period[i]
            lo = query.lo[i] - self.base[i] - (cell.hi[i] - 1)
            hi = query.hi[i] - 1 - self.base[i] - cell.lo[i]
            k0 = -(-lo // p)  # ceil
            k1 = hi // p
            if k1 < k0:
                return None
            rngs.append(range(k0, k1 + 1))
        return rngs

    def instances_in(self, query, cap=200_000):
        """Instance boxes (clipped) meeting the query box."""
        query = query.intersect(self.clip)
        if query.is_empty():
            return
        if self.period is None:
            for cell in self.cells:
                inst = cell.translate(self.base).intersect(query)
                if not inst.is_empty():
                    yield inst
            return
        for cell in self.cells:
            rngs = self._index_range(cell, query)
            if rngs is None:
                continue
            total = 1
            for r in rngs:
                total *= len(r)
            if total > cap:
                raise SizeGuardError(
                    f"pattern instance enumeration of {total} exceeds cap {cap}")
            for k in itertools.product(*rngs):
                shift = vadd(self.base, tuple(ki * pi for ki, pi in zip(k, self.period)))
                inst = cell.translate(shift).intersect(query)
                if not inst.is_empty():
                    yield inst

    def instance_count_estimate(self):
        if self.period is None:
            return len(self.cells)
        n = 1
        for i in range(self.dim):
            span = self.clip.hi[i] - self.clip.lo[i]
            n *= max(1, -(-span // self.period[i]) + 1)
        return n * len(self.cells)

    def is_empty(self):
        return not pattern_nonempty(self)

    def contains(self, p):
        if not self.clip.contains(p):
            return False
        if self.period is None:
            q = vsub(p, self.base)
            return any(c.contains(q) for c in self.cells)
        q = tuple((x - b) % per for x, b, per in zip(p, self.base, self.period))
        return any(c.contains(q) for c in self.cells)

    def complement_cells(self):
        """Local boxes covering the period box minus the pattern cells."""
        if self.period is None:
            raise ValueError("complement_cells needs a periodic pattern")
        period_box = Box(tuple(0 for _ in self.period), self.period)
        return subtract_boxes([period_box], self.cells)


def pattern_nonempty(pat):
    if pat.period is None:
        return any(not c.translate(pat.base).intersect(pat.clip).is_empty()
                   for c in pat.cells)
    for cell in pat.cells:
        if pat._index_range(cell, pat.clip) is not None:
            return True
    return False
