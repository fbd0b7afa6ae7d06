"""Covers of Z^d with uniformly bounded r-components, and their transport
to the translation action of Z^d on itself.

A (d, r, R)-cover is d+1 periodic colors such that every r-component of a
color (points joined by jumps of l1 length <= r) has l1 diameter <= R.
Constructions here are chosen for small realized bounds, and correctness is
defined by the verifier, not the construction:

* d = 1: alternating blocks of length r+1, realized bound r.
* d = 2: a running-bond brick wall, bricks 6a x 2a with a = ceil(r/2) and
  row offset 2a, colored by (column + 2 row) mod 3; nearest same-color
  bricks sit at l1 gap 2a+1 > r, realized bound 8a-2.
* d >= 3: d+1 diagonally shifted grids of period 2(d+1)r keeping the points
  at l1^inf distance >= r from the grid walls; realized bound d(L-2r-1).

The control function returns the realized bound of the construction at each
scale, measured once by the verifier and memoized.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from coverdim import boxes as bx
from coverdim.boxes import Box, Pattern, SizeGuardError
from coverdim.certificates import Certificate, VerificationError
from coverdim.chains import InstanceGraph, instance_bfs
from coverdim.group import FiniteSubset, ball, diam
from coverdim.systems import TranslationSystem


@dataclass(frozen=True)
class GroupCover:
    """Periodic coloring of Z^dim by dim+1 colors with scale/bound metadata."""

    dim: int
    periods: tuple                  # per-axis period
    colors: tuple                   # per color: tuple of Box within the period
    scale: int                      # r
    bound: int                      # R certified by the verifier

    def color_of(self, point):
        q = tuple(c % p for c, p in zip(point, self.periods))
        for j, cells in enumerate(self.colors):
            if any(b.contains(q) for b in cells):
                return j
        raise ValueError(f"point {point} not covered (broken cover)")

    def color_pattern(self, j, clip, base):
        """The color as a periodic pattern anchored at `base`, clipped."""
        return Pattern(clip=clip, period=self.periods, base=base,
                       cells=self.colors[j])

    def to_json(self):
        return {
            "dim": self.dim,
            "periods": list(self.periods),
            "scale": self.scale,
            "bound": self.bound,
            "colors": [[[list(b.lo), list(b.hi)] for b in cells]
                       for cells in self.colors],
        }

    @staticmethod
    def from_json(data):
        colors = tuple(tuple(Box(tuple(lo), tuple(hi)) for lo, hi in cells)
                       for cells in data["colors"])
        return GroupCover(dim=data["dim"], periods=tuple(data["periods"]),
                          colors=colors, scale=data["scale"], bound=data["bound"])


def _cyclic_interval(lo, width, period):
    """[lo, lo+width) mod period as one or two plain intervals."""
    lo %= period
    if lo + width <= period:
        return [(lo, lo + width)]
    return [(lo, period), (0, lo + width - period)]


def _blocks_1d(r):
    length = r + 1
    period = 2 * length
    colors = (
        (Box((0,), (length,)),),
        (Box((length,), (period,)),),
    )
    return (period,), colors


def _brick_wall_2d(r):
    a = -(-r // 2)  # ceil(r/2)
    px, py = 18 * a, 18 * a
    colors = [[], [], []]
    for j0 in range(9):
        y0, y1 = 2 * a * j0, 2 * a * (j0 + 1)
        for i0 in range(3):
            c = (i0 + 2 * j0) % 3
            xs = (6 * a * i0 + 2 * a * j0) % px
            for lo, hi in _cyclic_interval(xs, 6 * a, px):
                colors[c].append(Box((lo, y0), (hi, y1)))
    return (px, py), tuple(tuple(sorted(c)) for c in colors)


def _trimmed_grids(d, r):
    period = 2 * (d + 1) * r
    shift = 2 * r
    width = period - 2 * r
    colors = []
    for j in range(d + 1):
        per_axis = _cyclic_interval(r + j * shift, width, period)
        cells = []
        for combo in itertools.product(per_axis, repeat=d):
            cells.append(Box(tuple(c[0] for c in combo),
                             tuple(c[1] for c in combo)))
        colors.append(tuple(sorted(cells)))
    return tuple(period for _ in range(d)), tuple(colors)


@lru_cache(maxsize=None)
def grid_cover(d, r):
    """A verified (d, r, R)-cover of Z^d with R = control_function(d, r)."""
    if d < 1 or r < 1:
        raise ValueError("need dimension >= 1 and scale r >= 1")
    if d == 1:
        periods, colors = _blocks_1d(r)
    elif d == 2:
        periods, colors = _brick_wall_2d(r)
    else:
        periods, colors = _trimmed_grids(d, r)
    draft = GroupCover(dim=d, periods=periods, colors=colors, scale=r, bound=0)
    measured = _measure_bound(draft, r)
    cover = GroupCover(dim=d, periods=periods, colors=colors, scale=r,
                       bound=measured)
    verify_group_cover(cover, r, measured).require("grid cover self-check")
    return cover


@lru_cache(maxsize=None)
def control_function(d, r):
    """Realized bound of grid_cover(d, r); deterministic, nondecreasing in r."""
    return grid_cover(d, r).bound


def _window_components(cover, r, margin):
    """Components on the sound verification window.

    Yields (color index, component) for every component meeting the core
    box (one full period around the origin).  The window adds `margin`
    around the core, which makes the finite check conclusive: a bounded
    component intersecting the core lies entirely inside the window, and an
    unbounded or oversized one shows a window-internal pair further apart
    than the margin.
    """
    d = cover.dim
    window = Box(tuple(-(p + margin) for p in cover.periods),
                 tuple(p + margin + 1 for p in cover.periods))
    core = Box(tuple(-p for p in cover.periods),
               tuple(p + 1 for p in cover.periods))
    zero = tuple(0 for _ in range(d))
    for j, cells in enumerate(cover.colors):
        item = Pattern(clip=window, period=cover.periods, base=zero, cells=cells)
        graph = InstanceGraph([item], d, None, r)
        seeds = [inst for inst in graph._item_instances_in(0, core)]
        comps, _ = instance_bfs(graph, seeds=seeds)
        for comp in comps:
            yield j, comp, window, core


def _measure_bound(cover, r):
    """Max realized component diameter, using a construction-specific margin."""
    d = cover.dim
    if d == 1:
        a_priori = r + 1
    elif d == 2:
        a_priori = 8 * (-(-r // 2))
    else:
        a_priori = d * (2 * (d + 1) * r - 2 * r)
    best = 0
    for _, comp, _, _ in _window_components(cover, r, a_priori + r + 1):
        got = comp.diameter()
        if got > a_priori:  # pragma: no cover - construction broken
            raise VerificationError(
                f"construction exceeded its a-priori bound: {got} > {a_priori}")
        best = max(best, got)
    return best


def _chain_between(comp, cell_a, cell_b, r):
    """Explicit r-chain between two cells of a component (point list)."""
    boxes = comp.boxes()

    def locate(cell):
        for i, b in enumerate(boxes):
            if b.contains(cell):
                return i
        raise ValueError("cell not in component")

    # BFS over boxes to get a box path
    ia, ib = locate(cell_a), locate(cell_b)
    prev = {ia: None}
    queue = [ia]
    qi = 0
    while qi < len(queue):
        cur = queue[qi]
        qi += 1
        if cur == ib:
            break
        for k, b in enumerate(boxes):
            if k not in prev and boxes[cur].l1_gap(b) <= r:
                prev[k] = cur
                queue.append(k)
    path = []
    k = ib
    while k is not None:
        path.append(k)
        k = prev[k]
    path.reverse()

    def walk_inside(box, src, dst):
        """Unit-step staircase from src to dst inside one box."""
        out = []
        cur = list(src)
        for axis in range(len(src)):
            step = 1 if dst[axis] > cur[axis] else -1
            while cur[axis] != dst[axis]:
                cur[axis] += step
                out.append(tuple(cur))
        return out

    chain = [cell_a]
    cur = cell_a
    for k_prev, k_next in zip(path, path[1:]):
        hop_from = boxes[k_prev].closest_cell_to(
            boxes[k_next].closest_cell_to(cur))
        chain.extend(walk_inside(boxes[k_prev], cur, hop_from))
        hop_to = boxes[k_next].closest_cell_to(hop_from)
        chain.append(hop_to)
        cur = hop_to
    chain.extend(walk_inside(boxes[path[-1]], cur, cell_b))
    return chain


def verify_group_cover(cover, r, big_r):
    """Certificate that the cover's r-components are big_r-bounded.

    Checks a window holding one full period around the origin plus a margin
    of big_r + r per side: (a) the colors cover the core, (b) every
    r-component of a color meeting the core has l1 diameter <= big_r.  By
    periodicity every component is a translate of one meeting the core, so
    success here certifies the statement on all of Z^d.
    """
    params = {"r": r, "R": big_r, "periods": list(cover.periods),
              "colors": len(cover.colors)}
    d = cover.dim
    core = Box(tuple(-p for p in cover.periods),
               tuple(p + 1 for p in cover.periods))
    zero = tuple(0 for _ in range(d))
    uncovered = [core]
    for j, cells in enumerate(cover.colors):
        item = Pattern(clip=core, period=cover.periods, base=zero, cells=cells)
        insts = [b for b in item.instances_in(core)]
        uncovered = bx.subtract_boxes(uncovered, insts)
        if not uncovered:
            break
    if uncovered:
        return Certificate.failed(
            kind="group-cover", parameters=params,
            counterexample={"uncovered_point": list(uncovered[0].lo)})
    witnesses = {}
    count = 0
    for j, comp, window, corebox in _window_components(cover, r, big_r + r + 1):
        got = comp.diameter()
        if got > big_r:
            a, b = comp.witness_pair()
            chain = _chain_between(comp, a, b, r)
            return Certificate.failed(
                kind="group-cover", parameters=params,
                counterexample={"color": j, "diameter": got,
                                "chain": [list(c) for c in chain]},
                detail={"window": [list(window.lo), list(window.hi)]})
        witnesses.setdefault(str(j), []).append(
            {"anchor": list(comp.instances[0].box.lo),
             "boxes": len(comp.instances), "diameter": got})
        count += 1
    return Certificate.passed(
        kind="group-cover", parameters=params,
        detail={"components_checked": count,
                "window_margin": big_r + r + 1,
                "soundness": "periodic cover: every component is a translate "
                             "of one meeting the checked core"},
        witnesses=witnesses)


@dataclass(frozen=True)
class GammaCover:
    """A group cover read as a cover of the translation action of Z^d."""

    group_cover: GroupCover
    f: FiniteSubset
    s: FiniteSubset

    @property
    def system(self):
        return TranslationSystem(self.group_cover.dim)

    @property
    def colors(self):
        return self.group_cover.colors


def gamma_action_cover(d, f):
    """Reinterpret a grid cover as an (asdim, F, S)-cover of Z^d acting on
    itself, with S the ball of the control function at scale diam(F)."""
    if not f.is_fs:
        raise ValueError("the step set must contain the identity and be symmetric")
    if f.radius() == 0:
        gc = grid_cover(d, 1)
        return GammaCover(gc, f, ball(d, 0))
    r = diam(f)
    gc = grid_cover(d, r)
    return GammaCover(gc, f, ball(d, control_function(d, r)))


def verify_translation_cover(gcov, f, s):
    """Certificate that the F-components of each color of Z^d acting on
    itself fit inside single translates of S."""
    from coverdim.chains import component_bounded_by, _steps_mode

    cover = gcov.group_cover if isinstance(gcov, GammaCover) else gcov
    rho, explicit = _steps_mode(f)
    params = {"F": f.describe(), "S": s.describe(),
              "periods": list(cover.periods)}
    if rho == 0:
        ok = tuple(0 for _ in range(cover.dim)) in s
        if ok:
            return Certificate.passed(kind="translation-cover", parameters=params,
                                      detail={"singletons": True})
        return Certificate.failed(kind="translation-cover", parameters=params,
                                  counterexample={"reason": "identity not in S"})
    d = cover.dim
    margin = 2 * s.radius() + rho + 1
    zero = tuple(0 for _ in range(d))
    window = Box(tuple(-(p + margin) for p in cover.periods),
                 tuple(p + margin + 1 for p in cover.periods))
    core = Box(tuple(-p for p in cover.periods),
               tuple(p + 1 for p in cover.periods))
    witnesses = {}
    for j, cells in enumerate(cover.colors):
        item = Pattern(clip=window, period=cover.periods, base=zero, cells=cells)
        graph = InstanceGraph([item], d, None, rho,
                              explicit_steps=explicit)
        seeds = list(graph._item_instances_in(0, core))
        comps, _ = instance_bfs(graph, seeds=seeds)
        for idx, comp in enumerate(comps):
            center = component_bounded_by(comp, s)
            if center is None:
                a, b = comp.witness_pair()
                return Certificate.failed(
                    kind="translation-cover", parameters=params,
                    counterexample={"color": j, "cells": [list(a), list(b)],
                                    "diameter": comp.diameter()})
            witnesses.setdefault(str(j), []).append(
                {"center": list(center), "boxes": len(comp.instances)})
    return Certificate.passed(kind="translation-cover", parameters=params,
                              detail={"window_margin": margin},
                              witnesses=witnesses)
