"""(d, F, S)-covers of symbolic systems: verification, the union combiner,
restriction, orbit transport, and the zero-dimensional tower pipeline.

Verifier-first: constructions are trusted only through re-verification, and
every operation returns a replayable certificate.  Big covers keep their
colors as periodic box patterns; the verifier then checks one
representative per periodic component class, runs an instance search seeded
at every place where distinct patterns can interact, and certifies coverage
by exact per-period complement arithmetic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

from coverdim import boxes as bx
from coverdim.boxes import Box, Pattern, SizeGuardError
from coverdim.asdim import GammaCover, gamma_action_cover, verify_translation_cover
from coverdim.certificates import Certificate, VerificationError
from coverdim.chains import (
    InstanceGraph,
    component_bounded_by,
    component_of_in,
    f_components,
    f_separated,
    instance_bfs,
    is_s_bounded,
    _steps_mode,
)
from coverdim.group import FiniteSubset, ball, diam, power
from coverdim.systems import (
    OdometerClopen,
    OdometerSystem,
    RestrictedSystem,
    SturmianClopen,
    SturmianSystem,
    TranslationSystem,
    base_system,
    restrict,
    translate,
)

SMALL_COVER_CAP = 40_000
SEED_GUARD = 120_000


# ---------------------------------------------------------------------------
# pattern-backed clopen sets (internal representation for huge covers)


@dataclass(frozen=True)
class OdometerPatternSet:
    """Union of periodic box patterns inside [0, p^depth)^dim.

    Internal color representation for covers whose cells would number in
    the millions; set algebra is restricted to what the pipeline needs
    (union, clipping by boxes, materialization under a cap).
    """

    system: OdometerSystem
    depth: int
    items: tuple

    @property
    def modulus(self):
        return self.system.p ** self.depth

    def is_empty(self):
        return all(item.is_empty() for item in self.items)

    def union(self, other):
        other = as_pattern_set(other, self.depth)
        if other.depth != self.depth:
            raise ValueError("pattern sets must share a depth")
        return OdometerPatternSet(self.system, self.depth,
                                  self.items + other.items)

    def clip_by(self, clopen):
        """Intersection with a plain box-union clopen set."""
        y = clopen.refine(self.depth)
        items = []
        for item in self.items:
            for ybox in y.boxes:
                clip = item.clip.intersect(ybox)
                if not clip.is_empty():
                    items.append(replace(item, clip=clip))
        return OdometerPatternSet(self.system, self.depth, tuple(items))

    def contains_cell(self, cell):
        return any(item.contains(cell) for item in self.items)

    def to_clopen(self, cap=SMALL_COVER_CAP):
        boxes = []
        total = 0
        for item in self.items:
            for inst in item.instances_in(item.clip, cap=cap):
                total += inst.size()
                if total > cap:
                    raise SizeGuardError("pattern set too large to materialize")
                boxes.append(inst)
        return OdometerClopen(self.system, self.depth,
                              bx.normalize_boxes(boxes))

    def instance_estimate(self):
        return sum(item.instance_count_estimate() for item in self.items)

    def to_json(self):
        return {
            "model": "odometer-pattern",
            "depth": self.depth,
            "items": [{
                "clip": [list(i.clip.lo), list(i.clip.hi)],
                "period": list(i.period) if i.period else None,
                "base": list(i.base),
                "cells": [[list(b.lo), list(b.hi)] for b in i.cells],
            } for i in self.items],
        }

    def describe(self):
        return (f"odometer-pattern-set(depth={self.depth}, "
                f"items={len(self.items)})")


def as_pattern_set(color, depth):
    if isinstance(color, OdometerPatternSet):
        return color
    refined = color.refine(depth)
    clip = Box(tuple(0 for _ in range(color.system.dim)),
               tuple(refined.modulus for _ in range(color.system.dim)))
    zero = tuple(0 for _ in range(color.system.dim))
    item = Pattern(clip=clip, period=None, base=zero, cells=tuple(refined.boxes))
    return OdometerPatternSet(color.system, depth, (item,))


# ---------------------------------------------------------------------------
# covers


@dataclass
class Cover:
    """An ordered family of clopen colors with claimed scale parameters."""

    system: object
    colors: tuple
    f: FiniteSubset
    s: FiniteSubset
    certificate: Certificate | None = None

    @property
    def dim(self):
        return self.f.dim

    def color_count(self):
        return len(self.colors)

    def parameters(self):
        return {"F": self.f.describe(), "S": self.s.describe(),
                "colors": len(self.colors),
                "system": describe_system(self.system)}


def describe_system(system):
    return system.describe() if hasattr(system, "describe") else str(system)


def space_of(system):
    """The clopen carrier the cover must fill (Y for restricted systems)."""
    if isinstance(system, RestrictedSystem):
        return system.y
    if isinstance(system, OdometerSystem):
        return system.full_set(0)
    if isinstance(system, SturmianSystem):
        return system.full_set()
    raise TypeError(f"no carrier for {type(system).__name__}")


# ---------------------------------------------------------------------------
# verification


def verify_dad_cover(cover, steps=None):
    """Certificate that the colors cover the space and every chain component
    of every color fits inside one translate of the claimed bound set."""
    if isinstance(cover, GammaCover):
        return verify_translation_cover(cover, steps or cover.f, cover.s)
    f = steps if steps is not None else cover.f
    s = cover.s
    params = cover.parameters()
    if steps is not None:
        params["verified_at"] = f.describe()
    if not f.is_fs or not s.is_fs:
        return Certificate.failed(kind="cover", parameters=params,
                                  counterexample={"reason": "F and S must "
                                                  "contain the identity and "
                                                  "be symmetric"})
    if any(isinstance(c, OdometerPatternSet) for c in cover.colors):
        return _verify_pattern_cover(cover, f, s, params)
    cov_cert = _check_coverage(cover, params)
    if not cov_cert.ok:
        return cov_cert
    children = [cov_cert]
    for j, color in enumerate(cover.colors):
        auto = f_components(cover.system, color, f)
        sub = is_s_bounded(auto, s)
        sub.parameters.update({"color": j})
        children.append(sub)
        if not sub.ok:
            return Certificate.failed(
                kind="cover", parameters=params,
                counterexample={"color": j,
                                "cause": sub.counterexample},
                children=children)
    return Certificate.passed(kind="cover", parameters=params,
                              detail={"coverage": "exact",
                                      "colors": len(cover.colors)},
                              children=children)


def _check_coverage(cover, params):
    space = space_of(cover.system)
    if isinstance(space, OdometerClopen):
        union = None
        for color in cover.colors:
            union = color if union is None else union.union(color)
        missing = space.subtract(union)
        if not missing.is_empty():
            return Certificate.failed(
                kind="coverage", parameters=params,
                counterexample={"uncovered_cell": list(missing.min_cell()),
                                "depth": missing.depth})
        return Certificate.passed(kind="coverage", parameters=params)
    union = None
    for color in cover.colors:
        union = color if union is None else union.union(color)
    missing = space.subtract(union)
    if not missing.is_empty():
        return Certificate.failed(
            kind="coverage", parameters=params,
            counterexample={"uncovered_cell": str(missing.min_cell())})
    return Certificate.passed(kind="coverage", parameters=params)


# -- pattern-cover verification ---------------------------------------------


def _verify_pattern_cover(cover, f, s, params):
    depth = max(c.depth for c in cover.colors)
    colors = [as_pattern_set(c, depth) for c in cover.colors]
    system = cover.system
    rho, explicit = _steps_mode(f)
    if explicit is not None:
        raise SizeGuardError("pattern covers are verified for full-ball step "
                             "sets only")
    cov_cert = _pattern_coverage(system, colors, depth, params)
    children = [cov_cert]
    if not cov_cert.ok:
        return cov_cert
    for j, color in enumerate(colors):
        sub = _verify_pattern_color(color, rho, s)
        sub.parameters.update({"color": j})
        children.append(sub)
        if not sub.ok:
            return Certificate.failed(kind="cover", parameters=params,
                                      counterexample={"color": j,
                                                      "cause": sub.counterexample},
                                      children=children)
    return Certificate.passed(kind="cover", parameters=params,
                              detail={"coverage": "per-period complement",
                                      "colors": len(colors)},
                              children=children)


def _pattern_coverage(system, colors, depth, params):
    """Exact coverage for grouped periodic colors.

    Items are grouped by (clip, period, base); within a group the union of
    the colors' local cells must tile the period box, checked by exact
    complement arithmetic, and the group clips together must cover the
    carrier.  Witness points from a failed group are validated against
    every item before being reported.
    """
    space = space_of(system).refine(depth)
    groups = {}
    for j, color in enumerate(colors):
        for item in color.items:
            key = (item.clip, item.period, item.base)
            groups.setdefault(key, []).append((j, item))
    remainder = list(space.boxes)
    for (clip, period, base), members in sorted(
            groups.items(), key=lambda kv: (kv[0][0], str(kv[0][1]))):
        if period is None:
            for _, item in members:
                for inst in item.instances_in(clip):
                    remainder = bx.subtract_boxes(remainder, [inst])
            continue
        period_box = Box(tuple(0 for _ in period), period)
        cells = [c for _, item in members for c in item.cells]
        complement = bx.subtract_boxes([period_box], cells)
        leftover = Pattern(clip=clip, period=period, base=base,
                           cells=tuple(complement))
        if complement and not leftover.is_empty():
            probe = next(iter(leftover.instances_in(clip))).min_cell()
            if not any(col.contains_cell(probe) for col in colors):
                return Certificate.failed(
                    kind="coverage", parameters=params,
                    counterexample={"uncovered_cell": list(probe)})
            raise SizeGuardError("coverage holes of one pattern group are "
                                 "filled by another group; exact coverage "
                                 "needs a finer decomposition")
        remainder = bx.subtract_boxes(remainder, [clip])
    if remainder:
        probe = remainder[0].min_cell()
        if not any(col.contains_cell(probe) for col in colors):
            return Certificate.failed(kind="coverage", parameters=params,
                                      counterexample={"uncovered_cell": list(probe)})
        raise SizeGuardError("carrier cells outside every group clip are "
                             "covered irregularly; exact coverage needs a "
                             "finer decomposition")
    return Certificate.passed(kind="coverage", parameters=params,
                              detail={"groups": len(groups)})


def _verify_pattern_color(color, rho, s):
    """Chain-component check of one pattern-backed color.

    Components are enumerated from seeds: every instance of items with few
    instances, plus boundary-band instances of dense items.  Interior
    instances of dense items are isolated from their own item by a periodic
    separation check, so any component they join contains a seed; unvisited
    interior instances are single-box components verified once per cell
    class.
    """
    dim = color.system.dim
    modulus = color.modulus
    graph = InstanceGraph(color.items, dim, modulus, rho)
    params = {"step_radius": rho, "bound": s.describe()}
    seeds = []
    dense = []
    for idx, item in enumerate(color.items):
        if item.instance_count_estimate() <= SEED_GUARD // max(1, len(color.items)):
            seeds.extend(_item_instances(graph, idx))
        else:
            dense.append(idx)
    for idx in dense:
        verdict = _dense_class_checks(color.items[idx], rho, s, modulus)
        if verdict is not None:
            return Certificate.failed(kind="pattern-color", parameters=params,
                                      counterexample=verdict)
        seeds.extend(_boundary_band_instances(graph, idx, rho))
    for a in range(len(dense)):
        for b in range(a + 1, len(dense)):
            ia, ib = color.items[dense[a]], color.items[dense[b]]
            if ia.clip.l1_gap(ib.clip) > rho:
                continue
            overlap = expandish(ia.clip, rho).intersect(ib.clip)
            got = list(graph._item_instances_in(dense[b], overlap))
            if len(got) > SEED_GUARD:
                raise SizeGuardError("dense pattern overlap exceeds the seed "
                                     "guard")
            seeds.extend(got)
    comps, _ = instance_bfs(graph, seeds=seeds)
    for idx, comp in enumerate(comps):
        if comp.unbounded:
            return Certificate.failed(
                kind="pattern-color", parameters=params,
                counterexample={"component": idx, "pump": comp.pump,
                                "reason": "unbounded component"})
        center = component_bounded_by(comp, s)
        if center is None:
            a, b = comp.witness_pair()
            return Certificate.failed(
                kind="pattern-color", parameters=params,
                counterexample={"component": idx,
                                "cells": [list(a), list(b)],
                                "diameter": comp.diameter(),
                                "reason": "component exceeds every translate "
                                          "of the bound set"})
    return Certificate.passed(
        kind="pattern-color", parameters=params,
        detail={"seeded_components": len(comps),
                "dense_items_class_checked": len(dense)})


def _item_instances(graph, idx):
    item = graph.items[idx]
    return list(graph._item_instances_in(idx, item.clip))


def expandish(box, margin):
    return Box(tuple(l - margin for l in box.lo),
               tuple(h + margin for h in box.hi))


def _boundary_band_instances(graph, idx, rho):
    item = graph.items[idx]
    ext = max(max(c.hi[i] - c.lo[i] for c in item.cells)
              for i in range(item.dim))
    width = rho + ext + 1
    bands = []
    for axis in range(item.dim):
        for side in (0, 1):
            lo = list(item.clip.lo)
            hi = list(item.clip.hi)
            if side == 0:
                hi[axis] = min(hi[axis], lo[axis] + width)
            else:
                lo[axis] = max(lo[axis], hi[axis] - width)
            bands.append(Box(tuple(lo), tuple(hi)))
    out = {}
    for band in bands:
        for inst in graph._item_instances_in(idx, band):
            out[inst.ident] = inst
        if len(out) > SEED_GUARD:
            raise SizeGuardError("boundary band instance count exceeds guard")
    return list(out.values())


def _dense_class_checks(item, rho, s, modulus):
    """Class facts for a dense periodic item: each cell fits the bound set
    and distinct instances are more than one chain step apart."""
    if item.period is None:
        return {"reason": "dense item without a period cannot be class-checked"}
    for cell in item.cells:
        if s.ball_radius is not None:
            if bx.boxes_fit_in_ball([cell], s.ball_radius) is None:
                return {"reason": "pattern cell exceeds the bound set",
                        "cell": [list(cell.lo), list(cell.hi)],
                        "diameter": bx.boxes_l1_diameter([cell])}
        else:
            raise SizeGuardError("dense pattern checks need a ball bound set")
    # periodic separation: any two instances within one period neighborhood
    reach = []
    for i in range(item.dim):
        ext = max(c.hi[i] - c.lo[i] for c in item.cells)
        span = (ext + rho) // item.period[i] + 1
        reach.append(range(-span, span + 1))
    for ka in itertools.product(*reach):
        for ca in item.cells:
            for cb in item.cells:
                if ka == tuple(0 for _ in ka) and ca == cb:
                    continue
                shifted = cb.translate(tuple(k * p for k, p in
                                             zip(ka, item.period)))
                if ca.l1_gap(shifted) <= rho:
                    return {"reason": "dense pattern instances connect; "
                                      "components are not single cells",
                            "gap": ca.l1_gap(shifted)}
    return None


# ---------------------------------------------------------------------------
# the finite-union combiner


def combine_union(cov_a, cov_b, f, r_a, big_r_a, r_b, big_r_b):
    """Combine verified covers of A and B into a cover of their union.

    Preconditions: A's cover is verified at (F^r_a, F^R_a), B's at
    (F^r_b, F^R_b), and 2*R_b + 2*r_b < r_a as integers.  The output claims
    (F^r_b, F^(r_a + R_a)) and is re-verified before it is returned.
    """
    if not f.is_fs:
        raise ValueError("the base step set must contain the identity and be "
                         "symmetric")
    if 2 * big_r_b + 2 * r_b >= r_a:
        raise ValueError(
            f"side condition violated: 2*{big_r_b} + 2*{r_b} >= {r_a}; the "
            "union bound needs 2*R_B + 2*r_B < r_A")
    f_ra = power(f, r_a)
    f_rb = power(f, r_b)
    f_out = power(f, r_a + big_r_a)
    for cov, r, big_r, name in ((cov_a, r_a, big_r_a, "A"),
                                (cov_b, r_b, big_r_b, "B")):
        if cov is None:
            continue
        if cov.certificate is None or not cov.certificate.ok:
            raise ValueError(f"cover of {name} is not verified")
        if not (power(f, r) <= cov.f):
            raise ValueError(f"cover of {name} is not at scale F^{r}")
        if not (cov.s <= power(f, big_r)):
            raise ValueError(f"cover of {name} is not bounded by F^{big_r}")
    if cov_a is None or _carrier_empty(cov_a):
        out = Cover(cov_b.system, cov_b.colors, f_rb, f_out)
        out.certificate = Certificate.passed(
            kind="union-cover", parameters=out.parameters(),
            detail={"empty_side": "A", "weakened_from": cov_b.parameters()},
            children=[cov_b.certificate])
        return out
    if _carrier_empty(cov_b):
        out = Cover(cov_a.system, cov_a.colors, f_rb, f_out)
        out.certificate = verify_dad_cover(out).require("union cover (B empty)")
        return out
    if len(cov_a.colors) != len(cov_b.colors):
        raise ValueError("covers must use the same number of colors")
    base = base_system(cov_a.system)
    a_space = space_of(cov_a.system)
    b_space = space_of(cov_b.system)
    union_space = a_space.union(b_space)
    sys_u = base if space_of(base).equals(union_space) \
        else restrict(base, union_space)
    colors = tuple(_union_colors(ca, cb)
                   for ca, cb in zip(cov_a.colors, cov_b.colors))
    out = Cover(sys_u, colors, f_rb, f_out)
    cert = verify_dad_cover(out)
    cert.children.extend([cov_a.certificate, cov_b.certificate])
    cert.detail["combiner"] = {"r_a": r_a, "R_a": big_r_a,
                               "r_b": r_b, "R_b": big_r_b,
                               "claim": f"(F^{r_b}, F^{r_a + big_r_a})"}
    out.certificate = cert.require("combined cover")
    return out


def _union_colors(ca, cb):
    if isinstance(ca, OdometerPatternSet) or isinstance(cb, OdometerPatternSet):
        depth = max(getattr(ca, "depth", 0), getattr(cb, "depth", 0))
        return as_pattern_set(ca, depth).union(as_pattern_set(cb, depth))
    return ca.union(cb)


def _carrier_empty(cov):
    return space_of(cov.system).is_empty()


# ---------------------------------------------------------------------------
# scale schedules


@dataclass(frozen=True)
class ScaleSchedule:
    """F_0 and the derived ladders F_i = G_{i-1}^4, G_i = D(F_i)^2."""

    f0: FiniteSubset
    fs: tuple       # F_0 .. F_d
    gs: tuple       # G_0 .. G_d
    controls: tuple  # realized control radius at each level

    @property
    def depth(self):
        return len(self.fs) - 1

    def describe(self):
        return {"F": [f.describe() for f in self.fs],
                "G": [g.describe() for g in self.gs],
                "controls": list(self.controls)}


def scale_schedule(d, f0):
    """Ball-realized schedule over the control function of the grid covers.

    The dynamical control of a step set F is the ball of the group control
    at scale diam(F); it always contains F because the control is at least
    the diameter.
    """
    from coverdim.asdim import control_function

    if d < 0:
        raise ValueError("schedule depth must be >= 0")
    if not f0.is_fs:
        raise ValueError("F_0 must contain the identity and be symmetric")
    dim = f0.dim
    fs = [f0]
    controls = []
    c0 = control_function(dim, max(diam(f0), 1))
    gs = [ball(dim, c0)]
    controls.append(c0)
    for i in range(1, d + 1):
        fi = power(gs[i - 1], 4)
        fs.append(fi)
        ci = control_function(dim, diam(fi))
        controls.append(ci)
        gs.append(ball(dim, 2 * ci))
    return ScaleSchedule(f0=f0, fs=tuple(fs), gs=tuple(gs),
                         controls=tuple(controls))


# ---------------------------------------------------------------------------
# towers


@dataclass
class Tower:
    base_cell: tuple | object        # deep cell descriptor
    c_set: object                    # chain closure of the base cell
    d_set: object                    # closure minus earlier closures


@dataclass
class TowerDecomposition:
    system: object
    color: object
    f: FiniteSubset
    s: FiniteSubset
    towers: list
    resolution: dict
    certificate: Certificate | None = None


def tower_decomposition(system, u, f, s):
    """Decompose a color into chain-closure towers with disjoint fibers.

    Base cells are taken in canonical descriptor order and deepened until
    distinct chain labels give disjoint base translates; each closure is
    subtracted from the later ones, so the pieces partition the color and
    are pairwise chain-separated at scale F.
    """
    auto = f_components(system, u, f)
    is_s_bounded(auto, s).require("tower precondition (bounded components)")
    sysb = base_system(system)
    if isinstance(sysb, OdometerSystem):
        return _tower_decomposition_odometer(system, u, f, s, auto)
    return _tower_decomposition_sturmian(system, u, f, s, auto)


def _tower_decomposition_odometer(system, u, f, s, auto):
    sysb = base_system(system)
    if isinstance(system, RestrictedSystem):
        u = u.intersect(system.y)
    extent = 0
    for comp in auto.components:
        extent = max(extent, comp.diameter())
    depth = auto.resolution["depth"]
    p = sysb.p
    while p ** depth <= 2 * extent + 1:
        depth += 1
    work = u.refine(depth)
    towers = []
    remaining = work
    closures = []
    while not remaining.is_empty():
        yc = remaining.min_cell()
        w = OdometerClopen(sysb, depth, (Box(yc, tuple(c + 1 for c in yc)),))
        c_set = component_of_in(system, w, work, f)
        d_set = c_set
        for prev in closures:
            d_set = d_set.subtract(prev)
        towers.append(Tower(base_cell=yc, c_set=c_set, d_set=d_set))
        closures.append(c_set)
        remaining = remaining.subtract(c_set)
        if len(towers) > 10_000:
            raise SizeGuardError("tower count exceeds guard")
    td = TowerDecomposition(system=system, color=u, f=f, s=s, towers=towers,
                            resolution={"depth": depth, "extent": extent})
    td.certificate = _tower_certificate(td)
    return td


def _tower_decomposition_sturmian(system, u, f, s, auto):
    sysb = base_system(system)
    if isinstance(system, RestrictedSystem):
        u = u.intersect(system.y)
    min_radius = 0
    while True:
        if min_radius:
            from coverdim.chains import _sturmian_components
            auto = _sturmian_components(system, u, f, min_radius=min_radius)
        extent = 0
        for labels in auto.cell_labels.values():
            if labels:
                extent = max(extent, max(abs(m) for m in labels))
        start_w, _ = auto.resolution["window"]
        width = auto.resolution["width"]
        work = u.refine_window(start_w, start_w + width)
        # base cells must separate from their own shifts up to the extent
        ok = True
        for w in sorted(work.words):
            for delta in range(1, extent + 1):
                if all(w[i] == w[i + delta] for i in range(len(w) - delta)):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            break
        min_radius = 2 * max(auto.resolution.get("radius", 1), 1)
    towers = []
    closures = []
    remaining = work
    while not remaining.is_empty():
        rem = remaining.refine_window(start_w, start_w + width)
        word = min(rem.words)
        w_cyl = SturmianClopen(sysb, start_w, width, frozenset({word}))
        c_set = component_of_in(system, w_cyl, work, f)
        d_set = c_set
        for prev in closures:
            d_set = d_set.subtract(prev)
        towers.append(Tower(base_cell=(start_w, word), c_set=c_set, d_set=d_set))
        closures.append(c_set)
        remaining = remaining.subtract(c_set)
        if len(towers) > 10_000:
            raise SizeGuardError("tower count exceeds guard")
    td = TowerDecomposition(system=system, color=u, f=f, s=s, towers=towers,
                            resolution={"window": (start_w, start_w + width),
                                        "extent": extent})
    td.certificate = _tower_certificate(td)
    return td


def _tower_certificate(td):
    children = []
    for i in range(len(td.towers)):
        for j in range(i + 1, len(td.towers)):
            cert = f_separated(td.system, td.towers[i].d_set,
                               td.towers[j].d_set, td.f)
            if not cert.ok:
                return Certificate.failed(
                    kind="towers",
                    counterexample={"towers": [i, j],
                                    "cause": cert.counterexample})
            children.append(cert)
    return Certificate.passed(kind="towers",
                              parameters={"count": len(td.towers),
                                          "resolution": td.resolution},
                              detail={"pairwise_separated": True},
                              children=children)


# ---------------------------------------------------------------------------
# tower covers and the reduction pipeline


def _centered_mod(x, m):
    r = x % m
    return r - m if r > m // 2 else r


def cover_tower(tower, gcov, decomposition):
    """Pull the group cover back through the tower's label bijection.

    Every cell of the tower sits at a unique offset from the base cell (the
    deepening in the decomposition guarantees distinct offsets give
    disjoint translates); the cell is colored by the group cover's color of
    its offset.
    """
    system = decomposition.system
    sysb = base_system(system)
    gc = gcov.group_cover if isinstance(gcov, GammaCover) else gcov
    d_set = tower.d_set
    if isinstance(sysb, OdometerSystem):
        depth = decomposition.resolution["depth"]
        m = sysb.p ** depth
        base = tower.base_cell
        if d_set.size() <= SMALL_COVER_CAP:
            colors = [[] for _ in range(len(gc.colors))]
            for cell in d_set.iter_cells():
                label = tuple(_centered_mod(c - b, m) for c, b in zip(cell, base))
                colors[gc.color_of(label)].append(cell)
            color_sets = tuple(
                OdometerClopen.from_residues(sysb, depth, cells)
                for cells in colors)
        else:
            if any(  # the big path needs a wrap-free tower
                    any(h > m for h in b.hi) for b in d_set.boxes):
                raise SizeGuardError("large wrapped towers are not supported")
            items = [[] for _ in range(len(gc.colors))]
            for j in range(len(gc.colors)):
                for dbox in d_set.boxes:
                    items[j].append(Pattern(clip=dbox, period=gc.periods,
                                            base=base, cells=gc.colors[j]))
            color_sets = tuple(
                OdometerPatternSet(sysb, depth, tuple(it)) for it in items)
        sub = restrict(sysb, d_set)
        return Cover(sub, color_sets, gcov.f, gcov.s)
    # sturmian
    from coverdim.chains import (_SturmianMembership, _WindowTooSmall,
                                 _sturmian_components)
    start_w, word = tower.base_cell
    width = len(word)
    w_cyl = SturmianClopen(sysb, start_w, width, frozenset({word}))
    min_radius = 0
    while True:
        auto = _sturmian_components(system, decomposition.color, decomposition.f,
                                    min_radius=min_radius)
        try:
            tester = _SturmianMembership(sysb, auto)
            d_ref = d_set.refine_window(auto.resolution["window"][0],
                                        auto.resolution["window"][0]
                                        + auto.resolution["width"])
            uni = tester.uni
            colors = [[] for _ in range(len(gc.colors))]
            for w in sorted(d_ref.words):
                pos = uni.prefix.find(w)
                cell = ("pos", pos, auto.resolution["width"])
                labels = auto.cell_labels.get(cell)
                if labels is None:
                    raise _WindowTooSmall()
                label = None
                for mm in sorted(labels):
                    if tester.member(pos, mm, w_cyl):
                        label = -mm
                        break
                if label is None:
                    raise VerificationError(
                        "tower cell has no base label; decomposition broken")
                colors[gc.color_of((label,))].append(w)
            color_sets = tuple(
                SturmianClopen.from_words(sysb, cells,
                                          start=auto.resolution["window"][0])
                if cells else sysb.empty_set()
                for cells in colors)
            sub = restrict(sysb, d_set)
            return Cover(sub, color_sets, gcov.f, gcov.s)
        except _WindowTooSmall:
            min_radius = 2 * max(auto.resolution.get("radius", 1), 1)


def reduce_cover(system, cov, f0):
    """Convert a verified (d+1)-color cover at the top of the scale schedule
    into a verified (dim+1)-color cover at (F_0, G_d).

    Per color: decompose into towers at the top scale, pull the group cover
    back onto each tower at that color's scale, merge the towers (they are
    chain-separated, so this costs nothing), then fold the colors together
    with the union combiner down the schedule.  Zero-dimensional carriers
    have no boundary remainder, so no neighborhood cover is needed and the
    final bound is G_d; every intermediate certificate is chained into the
    result.
    """
    sysb = base_system(system)
    dim = sysb.dim
    d = len(cov.colors) - 1
    sched = scale_schedule(d, f0)
    if not (sched.fs[d] <= cov.f and cov.f <= sched.fs[d]):
        raise ValueError(
            f"input cover must be at the top schedule scale "
            f"{sched.fs[d].describe()}, got {cov.f.describe()}")
    if cov.certificate is not None and cov.certificate.ok:
        input_cert = cov.certificate
    else:
        input_cert = verify_dad_cover(cov).require("input cover")
    radii = [sched.fs[i].radius() for i in range(d + 1)]
    color_covers = []
    chain = [input_cert]
    for i, u in enumerate(cov.colors):
        td = tower_decomposition(system, u, cov.f, cov.s)
        td.certificate.require(f"tower decomposition of color {i}")
        gam = gamma_action_cover(dim, sched.fs[i])
        merged = None
        for tower in td.towers:
            tc = cover_tower(tower, gam, td)
            if merged is None:
                merged = tc
            else:
                colors = tuple(_union_colors(a, b)
                               for a, b in zip(merged.colors, tc.colors))
                dm = space_of(merged.system).union(space_of(tc.system))
                merged = Cover(restrict(sysb, dm), colors, tc.f, tc.s)
        scale_i = ball(dim, max(radii[i], 1))
        bound_i = ball(dim, sched.controls[i])
        sub = Cover(merged.system, merged.colors, scale_i, bound_i)
        cert_i = verify_dad_cover(sub).require(f"tower cover of color {i}")
        cert_i.detail["claimed_step_set"] = sched.fs[i].describe()
        cert_i.children.append(td.certificate)
        sub.certificate = cert_i
        chain.append(cert_i)
        color_covers.append(sub)
    unit = ball(dim, 1)
    cur = color_covers[d]
    r_cur, big_r_cur = radii[d], sched.controls[d]
    for i in range(d - 1, -1, -1):
        cur = combine_union(cur, color_covers[i], unit,
                            r_a=r_cur, big_r_a=big_r_cur,
                            r_b=max(radii[i], 1), big_r_b=sched.controls[i])
        chain.append(cur.certificate)
        r_cur, big_r_cur = max(radii[i], 1), r_cur + big_r_cur
    gd = sched.gs[d]
    if gd.ball_radius is not None and big_r_cur > gd.ball_radius:
        raise VerificationError(  # pragma: no cover - schedule arithmetic
            f"fold bound {big_r_cur} exceeds the schedule bound "
            f"{gd.ball_radius}")
    final = Cover(cur.system, cur.colors, f0, gd)
    final_cert = verify_dad_cover(final).require("reduced cover")
    final_cert.children = chain + final_cert.children
    final_cert.detail["schedule"] = sched.describe()
    final_cert.detail["zero_dimensional_case"] = (
        "clopen towers leave no boundary remainder; the neighborhood-cover "
        "combination step is skipped and the final bound is G_d (the general "
        "bound for positive-dimensional carriers is weaker)")
    final_cert.detail["fold_bound_radius"] = big_r_cur
    final.certificate = final_cert
    return final


def restrict_cover(cov, y):
    """Intersect the colors with Y; the claimed parameters survive because
    chains only get shorter under restriction."""
    base = base_system(cov.system)
    sub = restrict(cov.system, y)
    colors = []
    for c in cov.colors:
        if isinstance(c, OdometerPatternSet):
            colors.append(c.clip_by(y))
        else:
            colors.append(c.intersect(y))
    out = Cover(sub, tuple(colors), cov.f, cov.s)
    cert = verify_dad_cover(out)
    if cov.certificate is not None:
        cert.children.append(cov.certificate)
    out.certificate = cert.require("restricted cover")
    return out


# ---------------------------------------------------------------------------
# orbit transport


def orbit_transport(system, cov, window):
    """Color a word-metric ball of the acting group through one orbit.

    gamma is colored by the cover color containing gamma applied to a
    canonical basepoint cell; the induced coloring is checked to be a group
    cover fragment at scale R (the cover's ball scale) with bound diam(S).
    """
    if cov.f.ball_radius is None:
        raise ValueError("orbit transport needs a cover at a ball scale")
    big_r = cov.f.ball_radius
    bound = diam(cov.s)
    if isinstance(cov, GammaCover):
        # the translation action on itself: the basepoint is the identity
        gc = cov.group_cover
        coloring = {g: gc.color_of(g)
                    for g in ball(cov.f.dim, window).sorted_elements()}
        cert = _verify_fragment(coloring, big_r, bound, cov.f.dim, window)
        return coloring, cert
    sysb = base_system(system)
    if isinstance(sysb, OdometerSystem):
        depth = max(getattr(c, "depth", 0) for c in cov.colors)
        basepoint = OdometerClopen.from_residues(
            sysb, depth, [tuple(0 for _ in range(sysb.dim))])
        coloring = {}
        for g in ball(sysb.dim, window).sorted_elements():
            cell = translate(sysb, basepoint, g)
            coloring[g] = _first_color_containing(cov.colors, cell)
    else:
        from coverdim.systems import admissible_words
        sized = [c for c in cov.colors if c.length > 0]
        hull_lo = min(c.start for c in sized) if sized else 0
        hull_hi = max(c.start + c.length for c in sized) if sized else 1
        words = sorted(admissible_words(sysb, hull_hi - hull_lo))
        basepoint = SturmianClopen(sysb, hull_lo, hull_hi - hull_lo,
                                   frozenset({words[0]}))
        coloring = {}
        for g in ball(1, window).sorted_elements():
            cell = translate(sysb, basepoint, g)
            coloring[g] = _first_color_containing(cov.colors, cell)
    cert = _verify_fragment(coloring, big_r, bound, cov.f.dim, window)
    return coloring, cert


def _first_color_containing(colors, cell):
    for j, color in enumerate(colors):
        if isinstance(color, OdometerPatternSet):
            probe = cell.min_cell()
            if color.contains_cell(probe):
                return j
        elif color.covers(cell):
            return j
    raise VerificationError("basepoint cell straddles the cover colors; "
                            "refine the cover before transporting")


# ---------------------------------------------------------------------------
# serialization


def system_to_json(system):
    if isinstance(system, RestrictedSystem):
        return {"model": "restricted",
                "parent": system_to_json(system.parent),
                "y": system.y.to_json()}
    if isinstance(system, OdometerSystem):
        return {"model": "odometer", "p": system.p, "dim": system.dim}
    if isinstance(system, SturmianSystem):
        return {"model": "sturmian",
                "slope_initial": list(system.cf_initial),
                "slope_periodic": list(system.cf_periodic)}
    raise TypeError(f"cannot serialize {type(system).__name__}")


def system_from_json(data):
    if data["model"] == "restricted":
        parent = system_from_json(data["parent"])
        return restrict(parent, clopen_from_json(parent, data["y"]))
    if data["model"] == "odometer":
        return OdometerSystem(data["p"], data["dim"])
    if data["model"] == "sturmian":
        return SturmianSystem(tuple(data["slope_initial"]),
                              tuple(data["slope_periodic"]))
    raise ValueError(f"unknown system model {data['model']!r}")


def clopen_from_json(system, data):
    sysb = base_system(system)
    if data["model"] == "odometer":
        boxes = tuple(Box(tuple(lo), tuple(hi)) for lo, hi in data["boxes"])
        return OdometerClopen(sysb, data["depth"], boxes)
    if data["model"] == "sturmian":
        return SturmianClopen(sysb, data["start"], data["length"],
                              frozenset(data["words"]))
    if data["model"] == "odometer-pattern":
        items = []
        for it in data["items"]:
            items.append(Pattern(
                clip=Box(tuple(it["clip"][0]), tuple(it["clip"][1])),
                period=tuple(it["period"]) if it["period"] else None,
                base=tuple(it["base"]),
                cells=tuple(Box(tuple(lo), tuple(hi))
                            for lo, hi in it["cells"])))
        return OdometerPatternSet(sysb, data["depth"], tuple(items))
    raise ValueError(f"unknown set model {data['model']!r}")


def subset_to_json(f):
    if f.ball_radius is not None:
        return {"ball": f.ball_radius, "dim": f.dim}
    return {"elements": [list(e) for e in sorted(f.elems)], "dim": f.dim}


def subset_from_json(data):
    if "ball" in data:
        return ball(data["dim"], data["ball"])
    return FiniteSubset.of(data["dim"], [tuple(e) for e in data["elements"]])


def cover_to_json(cover):
    return {
        "schema_version": 1,
        "system": system_to_json(cover.system),
        "F": subset_to_json(cover.f),
        "S": subset_to_json(cover.s),
        "colors": [c.to_json() for c in cover.colors],
    }


def cover_from_json(data):
    system = system_from_json(data["system"])
    colors = tuple(clopen_from_json(system, c) for c in data["colors"])
    return Cover(system, colors,
                 subset_from_json(data["F"]), subset_from_json(data["S"]))


def _verify_fragment(coloring, big_r, bound, dim, window):
    """Window check: r-components of each color class within the colored
    ball have diameter <= bound."""
    params = {"R": big_r, "bound": bound, "window": window}
    by_color = {}
    for g, j in coloring.items():
        by_color.setdefault(j, []).append(g)
    witnesses = {}
    for j, pts in sorted(by_color.items()):
        cells = [Box(p, tuple(c + 1 for c in p)) for p in sorted(pts)]
        item = Pattern(clip=Box(tuple(-window for _ in range(dim)),
                                tuple(window + 1 for _ in range(dim))),
                       period=None, base=tuple(0 for _ in range(dim)),
                       cells=tuple(cells))
        graph = InstanceGraph([item], dim, None, big_r)
        comps, _ = instance_bfs(graph)
        for comp in comps:
            got = comp.diameter()
            if got > bound:
                a, b = comp.witness_pair()
                return Certificate.failed(
                    kind="orbit-fragment", parameters=params,
                    counterexample={"color": j, "cells": [list(a), list(b)],
                                    "diameter": got})
        witnesses[str(j)] = {"points": len(pts), "components": len(comps)}
    return Certificate.passed(kind="orbit-fragment", parameters=params,
                              detail={"note": "window fragment only; global "
                                              "claims need the periodic "
                                              "group-cover verifier"},
                              witnesses=witnesses)
