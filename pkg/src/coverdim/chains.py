"""F-chains, F-components, S-boundedness witnesses, and F-separation.

Chain behavior is computed per descriptor cell, never per point.

Odometer: membership of a translated point is exact residue arithmetic, so
the component structure of a set B at depth n lives on a finite graph over
B's cells.  The engine works at box granularity: breadth-first search over
box instances in the universal cover (lifts of the torus), where reaching
the same torus instance under two different lifts certifies an infinite
component (wrap-around pumping).  l1-ball step sets connect the inside of
every box, so box paths and point chains induce the same components; step
sets that are not full balls fall back to unit cells under a size guard.

Sturmian: a cell is an admissible content window around the current
position, wide enough that every chain step is decided inside it; the
window grows until no chain can escape it (labels stabilize).  When no
admissible window of length k avoids B entirely, every chain extends
forever and components are certified infinite (gap dichotomy in a minimal
system).  Cells are canonical factor occurrences inside the characteristic
word, so label computation is integer arithmetic on positions.
"""

from __future__ import annotations

import itertools
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field

from coverdim import boxes as bx
from coverdim.boxes import Box, Pattern, SizeGuardError
from coverdim.group import FiniteSubset, ball
from coverdim.systems import (
    OdometerClopen,
    OdometerSystem,
    RestrictedSystem,
    SturmianClopen,
    SturmianSystem,
    base_system,
    factor_universe,
)

INSTANCE_GUARD = 400_000
CELL_GUARD = 300_000
STURMIAN_WINDOW_GUARD = 1 << 17

UNBOUNDED = "unbounded"


# ---------------------------------------------------------------------------
# instance graph over boxes and patterns (odometer side)


@dataclass(frozen=True)
class Instance:
    """A concrete box in unwrapped coordinates with a torus identity."""

    ident: tuple   # (item_index, cell_index, period_index tuple)
    box: Box       # unwrapped (lifted) coordinates
    lift: tuple    # vector of multiples of the modulus


def expand_box(box, margin):
    return Box(tuple(l - margin for l in box.lo),
               tuple(h + margin for h in box.hi))


class InstanceGraph:
    """Neighbor queries over a union of box/pattern items, optionally on a torus.

    Items are Patterns (period None = plain box union).  An edge joins two
    instances when some cell of one and some cell of the other differ by a
    chain step: l1 distance <= radius for ball step sets, or membership of
    the difference in an explicit step set.
    """

    def __init__(self, items, dim, modulus, radius, explicit_steps=None):
        self.items = list(items)
        self.dim = dim
        self.modulus = modulus
        self.radius = radius
        self.explicit_steps = explicit_steps
        self._index = []
        for item in self.items:
            if item.period is None:
                order = sorted(range(len(item.cells)),
                               key=lambda c: item.cells[c].lo)
                lo0 = [item.cells[c].lo[0] + item.base[0] for c in order]
                width = max((c.hi[0] - c.lo[0] for c in item.cells), default=1)
                self._index.append((order, lo0, width))
            else:
                self._index.append(None)

    def _item_instances_in(self, i, query):
        """Torus-coordinate instances of item i meeting the query box."""
        item = self.items[i]
        q = query.intersect(item.clip)
        if q.is_empty():
            return
        idx = self._index[i]
        zero = tuple(0 for _ in range(self.dim))
        if idx is not None:
            order, lo0, width = idx
            lo = bisect_left(lo0, q.lo[0] - width + 1)
            hi = bisect_right(lo0, q.hi[0] - 1)
            for pos in range(lo, hi):
                c = order[pos]
                placed = item.cells[c].translate(item.base)
                if not placed.intersect(q).is_empty():
                    yield Instance((i, c, ()), placed, zero)
            return
        for cell_idx, cell in enumerate(item.cells):
            rngs = item._index_range(cell, q)
            if rngs is None:
                continue
            total = 1
            for r in rngs:
                total *= len(r)
            if total > INSTANCE_GUARD:
                raise SizeGuardError(
                    f"instance enumeration of {total} exceeds guard")
            for k in itertools.product(*rngs):
                shift = bx.vadd(item.base,
                                tuple(ki * pi for ki, pi in zip(k, item.period)))
                box = cell.translate(shift).intersect(item.clip)
                if not box.is_empty():
                    yield Instance((i, cell_idx, k), box, zero)

    def _lifts_meeting(self, query):
        if self.modulus is None:
            yield tuple(0 for _ in range(self.dim))
            return
        m = self.modulus
        rngs = []
        for lo, hi in zip(query.lo, query.hi):
            k0 = (lo - m + 1) // m
            k1 = (hi - 1) // m
            rngs.append(range(k0, k1 + 1))
        for k in itertools.product(*rngs):
            yield tuple(ki * m for ki in k)

    def instances_near(self, box):
        """Instances (with absolute lifts) having a cell within radius of box."""
        grown = expand_box(box, self.radius)
        out = []
        for delta in self._lifts_meeting(grown):
            q = grown.translate(tuple(-d for d in delta))
            for i in range(len(self.items)):
                for inst in self._item_instances_in(i, q):
                    lifted_box = inst.box.translate(delta)
                    if lifted_box.l1_gap(box) <= self.radius:
                        out.append(Instance(inst.ident, lifted_box, delta))
        return out

    def edge_ok(self, box_a, box_b):
        if self.explicit_steps is None:
            return box_a.l1_gap(box_b) <= self.radius
        diff = Box(tuple(blo - (ahi - 1) for blo, ahi in zip(box_b.lo, box_a.hi)),
                   tuple(bhi - alo for bhi, alo in zip(box_b.hi, box_a.lo)))
        return any(diff.contains(f) for f in self.explicit_steps)

    def all_instances(self, cap=INSTANCE_GUARD):
        out = []
        for i, item in enumerate(self.items):
            for inst in self._item_instances_in(i, item.clip):
                out.append(inst)
                if len(out) > cap:
                    raise SizeGuardError("instance count exceeds guard")
        return out

    def total_instance_estimate(self):
        return sum(item.instance_count_estimate() for item in self.items)


@dataclass
class OdometerComponent:
    instances: list                 # Instances with absolute lifts
    seed_cell: tuple                # unwrapped representative cell
    unbounded: bool = False
    pump: dict | None = None
    parents: dict = field(default_factory=dict)  # ident -> (parent ident or None)

    def boxes(self):
        return [inst.box for inst in self.instances]

    def diameter(self):
        return bx.boxes_l1_diameter(self.boxes())

    def size(self):
        return sum(b.size() for b in self.boxes())

    def witness_pair(self):
        """Two cells realizing the component diameter."""
        best = (0, self.seed_cell, self.seed_cell)
        for sigma in bx.sigmas(self.instances[0].box.dim):
            hi_val, hi_box = max(((inst.box.corner_spread(sigma)[0], inst.box)
                                  for inst in self.instances), key=lambda t: t[0])
            lo_val, lo_box = min(((inst.box.corner_spread(sigma)[1], inst.box)
                                  for inst in self.instances), key=lambda t: t[0])
            if hi_val - lo_val > best[0]:
                hi_cell = max(hi_box.cells(CELL_GUARD),
                              key=lambda c: sum(s * x for s, x in zip(sigma, c))) \
                    if hi_box.size() <= 4 else hi_box.closest_cell_to(
                        tuple(h - 1 if s > 0 else l for s, l, h in
                              zip(sigma, hi_box.lo, hi_box.hi)))
                lo_cell = lo_box.closest_cell_to(
                    tuple(l if s > 0 else h - 1 for s, l, h in
                          zip(sigma, lo_box.lo, lo_box.hi)))
                best = (hi_val - lo_val, lo_cell, hi_cell)
        return best[1], best[2]


def instance_bfs(graph, seeds=None, stop_on_pump=False, guard=INSTANCE_GUARD):
    """Components of the instance graph; pump = same ident, different lift.

    After a pump the component is expanded at torus level only (idents), so
    the search terminates with the full wrapped support of the component.
    """
    worklist = graph.all_instances() if seeds is None else list(seeds)
    comps = []
    assigned = {}
    for start in worklist:
        if start.ident in assigned:
            continue
        comp = OdometerComponent([], start.box.min_cell())
        comp.parents[start.ident] = None
        lift_of = {start.ident: start.lift}
        queue = [start]
        comp.instances.append(start)
        assigned[start.ident] = len(comps)
        qi = 0
        while qi < len(queue):
            cur = queue[qi]
            qi += 1
            for nb in graph.instances_near(cur.box):
                if not graph.edge_ok(cur.box, nb.box):
                    continue
                known = lift_of.get(nb.ident)
                if known is None:
                    lift_of[nb.ident] = nb.lift
                    assigned[nb.ident] = len(comps)
                    comp.instances.append(nb)
                    comp.parents[nb.ident] = cur.ident
                    queue.append(nb)
                    if len(comp.instances) > guard:
                        raise SizeGuardError(
                            "component instance count exceeds guard")
                elif known != nb.lift and not comp.unbounded:
                    comp.unbounded = True
                    comp.pump = {"instance": list(nb.ident),
                                 "lift_a": list(known),
                                 "lift_b": list(nb.lift)}
                    if stop_on_pump:
                        comps.append(comp)
                        return comps, True
        comps.append(comp)
    return comps, any(c.unbounded for c in comps)


# ---------------------------------------------------------------------------
# component automaton


@dataclass
class ComponentAutomaton:
    """Per-cell chain labels for a set B under a step set F."""

    system: object
    base_set: object
    steps: FiniteSubset
    kind: str                       # 'odometer' | 'sturmian' | 'empty' | 'singleton'
    resolution: dict = field(default_factory=dict)
    components: list = field(default_factory=list)   # odometer kind
    cell_labels: dict = field(default_factory=dict)  # sturmian: cell -> labels
    sturmian_cells: dict = field(default_factory=dict)  # cell -> context record
    all_unbounded: bool = False
    notes: dict = field(default_factory=dict)

    def is_empty(self):
        return self.kind == "empty"

    @property
    def dim(self):
        return self.steps.dim

    def labels(self, cell):
        """Exact label set of the cell's component seen from the cell, or UNBOUNDED."""
        if self.kind == "empty":
            raise ValueError("empty automaton has no cells")
        if self.kind == "singleton":
            return frozenset({tuple(0 for _ in range(self.dim))})
        if self.kind == "sturmian":
            if self.all_unbounded:
                return UNBOUNDED
            got = self.cell_labels.get(cell)
            if got is None:
                raise KeyError(f"cell {cell!r} not in the automaton")
            return got if got == UNBOUNDED else frozenset((m,) for m in got)
        if self.all_unbounded:
            return UNBOUNDED
        cell = (cell,) if isinstance(cell, int) else tuple(cell)
        comp, anchor = self._locate(cell)
        if comp.unbounded:
            return UNBOUNDED
        out = set()
        total = sum(inst.box.size() for inst in comp.instances)
        if total > CELL_GUARD:
            raise SizeGuardError("label set too large to materialize")
        for inst in comp.instances:
            for c in inst.box.cells(CELL_GUARD):
                out.add(bx.vsub(c, anchor))
        return frozenset(out)

    def _locate(self, cell):
        m = self.resolution.get("modulus")
        wrapped = tuple(c % m for c in cell) if m else cell
        for comp in self.components:
            for inst in comp.instances:
                if m:
                    probe = tuple(l + ((c - l) % m)
                                  for c, l in zip(wrapped, inst.box.lo))
                else:
                    probe = wrapped
                if inst.box.contains(probe):
                    return comp, probe
        raise KeyError(f"cell {cell!r} not in the automaton")

    def cell_count(self):
        if self.kind == "odometer":
            return sum(c.size() for c in self.components)
        if self.kind == "sturmian":
            return len(self.cell_labels)
        return 0


def _empty_automaton(system, f):
    return ComponentAutomaton(system=system, base_set=None, steps=f,
                              kind="empty", notes={"empty": True})


# ---------------------------------------------------------------------------
# odometer engine


def _resolve_restriction(system, b):
    if isinstance(system, RestrictedSystem):
        inter = b.intersect(system.y)
        return base_system(system), inter, True
    return system, b, False


def _steps_mode(f):
    """(radius, explicit_steps); explicit None when f is a full l1 ball."""
    rho = f.radius()
    if f.ball_radius is not None:
        return rho, None
    mat = f.materialized()
    if mat.elems == ball(f.dim, rho).materialized().elems:
        return rho, None
    return rho, tuple(sorted(mat.elems))


def odometer_instance_graph(b, radius, explicit_steps=None):
    full_clip = Box(tuple(0 for _ in range(b.system.dim)),
                    tuple(b.modulus for _ in range(b.system.dim)))
    zero = tuple(0 for _ in range(b.system.dim))
    item = Pattern(clip=full_clip, period=None, base=zero, cells=tuple(b.boxes))
    return InstanceGraph([item], b.system.dim, b.modulus, max(radius, 0),
                         explicit_steps=explicit_steps)


def _odometer_components(system, b, f):
    sysb, b, restricted = _resolve_restriction(system, b)
    if b.is_empty():
        return _empty_automaton(system, f)
    rho, explicit = _steps_mode(f)
    res = {"depth": b.depth, "modulus": b.modulus}
    if rho == 0:
        return ComponentAutomaton(system=system, base_set=b, steps=f,
                                  kind="singleton", resolution=res)
    m = b.modulus
    if explicit is None and rho >= m:
        seed = b.min_cell()
        inst = Instance((0, 0, ()), Box(seed, tuple(c + 1 for c in seed)),
                        tuple(0 for _ in range(b.system.dim)))
        pump = {"reason": f"step radius {rho} >= modulus {m}: every cell "
                          "translates to itself with nonzero displacement"}
        comp = OdometerComponent([inst], seed, unbounded=True, pump=pump)
        return ComponentAutomaton(system=system, base_set=b, steps=f,
                                  kind="odometer", resolution=res,
                                  components=[comp], all_unbounded=True,
                                  notes={"pump": pump})
    if explicit is not None:
        if b.size() > CELL_GUARD:
            raise SizeGuardError(
                "explicit (non-ball) step sets need cell-level analysis; "
                f"set has {b.size()} cells (> {CELL_GUARD})")
        cells = tuple(Box(c, tuple(x + 1 for x in c)) for c in b.iter_cells())
        work = OdometerClopen(b.system, b.depth, cells)
        graph = odometer_instance_graph(work, rho, explicit_steps=explicit)
    else:
        graph = odometer_instance_graph(b, rho)
    comps, _ = instance_bfs(graph)
    auto = ComponentAutomaton(system=system, base_set=b, steps=f,
                              kind="odometer", resolution=res, components=comps)
    if restricted:
        auto.notes["restricted_to"] = system.y.describe()
        auto.notes["domains"] = "chains inside B respect every domain D_gamma"
    return auto


# ---------------------------------------------------------------------------
# sturmian engine


def _sturmian_keys(uni, clopen):
    """Class keys of the clopen set's words at the universe's resolution."""
    keys = set()
    for w in clopen.words:
        pos = uni.prefix.find(w)
        if pos < 0:
            raise ValueError(f"word {w!r} not found in the characteristic prefix")
        keys.add(uni.class_key(pos, len(w)))
    return keys


def _gap_occurs(system, b_len, b_keys, k, uni):
    """True iff some admissible stretch misses B at k consecutive positions.

    The universe's prefix contains every factor of length k + b_len, so the
    scan is conclusive for the whole subshift.
    """
    n = len(uni.prefix)
    run = 0
    for i in range(0, n - b_len + 1):
        if uni.class_key(i, b_len) in b_keys:
            run = 0
        else:
            run += 1
            if run >= k:
                return True
    return False


def _sturmian_components(system, b, f, min_radius=0):
    sysb, b, restricted = _resolve_restriction(system, b)
    b = b.normalize()
    if b.is_empty():
        return _empty_automaton(system, f)
    rho, explicit = _steps_mode(f)
    if rho == 0:
        return ComponentAutomaton(system=system, base_set=b, steps=f,
                                  kind="singleton",
                                  resolution={"window": b.window()})
    if b.is_full():
        # minimal system: the whole space is a single infinite chain class
        auto = ComponentAutomaton(system=system, base_set=b, steps=f,
                                  kind="sturmian", all_unbounded=True,
                                  resolution={"window": b.window()})
        auto.notes["pump"] = {"reason": "B is the whole minimal system; every "
                                        "orbit is one unbounded chain class"}
        return auto
    s, e = b.window()
    w0 = b.length
    uni_gap = factor_universe(sysb, w0 + rho)
    if not _gap_occurs(sysb, w0, _sturmian_keys(uni_gap, b), rho, uni_gap):
        if explicit is not None:
            raise SizeGuardError(
                "step set is not an interval ball and its ball hull has "
                "unbounded components; exact components are undecided here")
        auto = ComponentAutomaton(system=system, base_set=b, steps=f,
                                  kind="sturmian", all_unbounded=True,
                                  resolution={"window": b.window()})
        auto.notes["pump"] = {
            "reason": f"no admissible stretch of {rho} consecutive positions "
                      f"avoids B, so every chain extends forever"}
        return auto

    steps = sorted(g[0] for g in f.materialized().elems) if explicit is not None \
        else list(range(-rho, rho + 1))
    rho_window = max(rho * 2, 8, min_radius)
    while True:
        width = w0 + 2 * rho_window
        if width > STURMIAN_WINDOW_GUARD:
            raise SizeGuardError(f"sturmian window {width} exceeds guard")
        uni = factor_universe(sysb, width)
        keys = _sturmian_keys(uni, b)
        cell_labels = {}
        contexts = {}
        escaped = False
        for p in uni.positions(width):
            # offset m valid iff the window content at m lies in B
            valid = [m for m in range(-rho_window, rho_window + 1)
                     if uni.class_key(p + rho_window + m, w0) in keys]
            if not valid or 0 not in valid:
                continue
            reach = _offset_reach(valid, steps, explicit is None, rho)
            if max(reach) > rho_window - rho or min(reach) < -rho_window + rho:
                escaped = True
                break
            cell = ("pos", p, width)
            cell_labels[cell] = frozenset(reach)
            contexts[cell] = {"position": p, "width": width,
                              "valid": tuple(valid)}
        if escaped:
            rho_window *= 2
            continue
        auto = ComponentAutomaton(
            system=system, base_set=b, steps=f, kind="sturmian",
            resolution={"window": (s - rho_window, e + rho_window),
                        "width": width, "radius": rho_window},
            cell_labels=cell_labels, sturmian_cells=contexts)
        auto.notes["universe_length"] = width
        if restricted:
            auto.notes["restricted_to"] = system.y.describe()
        return auto


def _offset_reach(valid, steps, is_ball, rho):
    """Offsets reachable from 0 inside `valid` using the given steps."""
    vset = set(valid)
    if is_ball:
        # gap merge over the sorted valid offsets
        arr = sorted(vset)
        i0 = arr.index(0)
        lo = i0
        while lo > 0 and arr[lo] - arr[lo - 1] <= rho:
            lo -= 1
        hi = i0
        while hi + 1 < len(arr) and arr[hi + 1] - arr[hi] <= rho:
            hi += 1
        return arr[lo:hi + 1]
    seen = {0}
    queue = [0]
    while queue:
        cur = queue.pop()
        for g in steps:
            nxt = cur + g
            if nxt in vset and nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return sorted(seen)


# ---------------------------------------------------------------------------
# public operations


def f_components(system, b, f):
    """Exact per-cell chain labels of B under the fs step set F."""
    if not f.is_fs:
        raise ValueError("the step set must contain the identity and be symmetric")
    sysb = base_system(system)
    if isinstance(sysb, OdometerSystem):
        return _odometer_components(system, b, f)
    if isinstance(sysb, SturmianSystem):
        return _sturmian_components(system, b, f)
    raise TypeError(f"unsupported system {type(sysb).__name__}")


def find_translate_witness(labels, s):
    """lambda with labels - lambda inside s, or None.

    Search space: {m0 - t : t in s} for one fixed m0, which is complete
    because m0 - lambda must land in s.
    """
    labels = list(labels)
    if not labels:
        return tuple()
    dim = len(labels[0])
    if s.ball_radius is not None:
        boxes = [Box(m, tuple(c + 1 for c in m)) for m in labels]
        return bx.boxes_fit_in_ball(boxes, s.ball_radius)
    m0 = labels[0]
    for t in s.materialized().sorted_elements():
        lam = bx.vsub(m0, t)
        if all(bx.vsub(m, lam) in s for m in labels):
            return lam
    return None


def component_bounded_by(comp, s):
    """Witness center for an odometer component inside a translate of s."""
    if comp.unbounded:
        return None
    if s.ball_radius is not None:
        return bx.boxes_fit_in_ball(comp.boxes(), s.ball_radius)
    total = sum(b.size() for b in comp.boxes())
    if total > CELL_GUARD:
        raise SizeGuardError("explicit witness search needs a materializable "
                             f"component ({total} cells)")
    cells = [c for b in comp.boxes() for c in b.cells(CELL_GUARD)]
    lam = find_translate_witness([bx.vsub(c, cells[0]) for c in cells], s)
    if lam is None:
        return None
    return bx.vadd(cells[0], lam)


def is_s_bounded(automaton, s):
    """Certificate that every cell's chain class fits in one translate of s."""
    from coverdim.certificates import Certificate

    if automaton.is_empty():
        return Certificate.passed(kind="s-bounded",
                                  detail={"empty": True, "bound": s.describe()})
    if automaton.kind == "singleton":
        zero = tuple(0 for _ in range(automaton.dim))
        ok = zero in s
        cert = Certificate.passed if ok else Certificate.failed
        return cert(kind="s-bounded",
                    detail={"singletons": True, "bound": s.describe()},
                    **({} if ok else {"counterexample":
                                      {"reason": "identity not in the bound set"}}))
    if automaton.all_unbounded:
        return Certificate.failed(
            kind="s-bounded",
            counterexample={"reason": "unbounded component",
                            "pump": automaton.notes.get("pump")},
            detail={"bound": s.describe()})
    if automaton.kind == "sturmian":
        witnesses = {}
        for cell, labels in sorted(automaton.cell_labels.items()):
            if labels == UNBOUNDED:
                return Certificate.failed(
                    kind="s-bounded",
                    counterexample={"cell": list(cell), "reason": "unbounded"},
                    detail={"bound": s.describe()})
            lam = find_translate_witness([(m,) for m in sorted(labels)], s)
            if lam is None:
                return Certificate.failed(
                    kind="s-bounded",
                    counterexample={"cell": list(cell),
                                    "labels": sorted(labels),
                                    "reason": "no translate of the bound set "
                                              "contains the labels"},
                    detail={"bound": s.describe()})
            witnesses[str(cell)] = list(lam)
        return Certificate.passed(kind="s-bounded",
                                  detail={"bound": s.describe(),
                                          "cells": len(witnesses)},
                                  witnesses=witnesses)
    witnesses = {}
    for idx, comp in enumerate(automaton.components):
        if comp.unbounded:
            return Certificate.failed(
                kind="s-bounded",
                counterexample={"component": idx, "pump": comp.pump,
                                "reason": "unbounded component"},
                detail={"bound": s.describe()})
        center = component_bounded_by(comp, s)
        if center is None:
            a, bcell = comp.witness_pair()
            return Certificate.failed(
                kind="s-bounded",
                counterexample={"component": idx,
                                "cells": [list(a), list(bcell)],
                                "diameter": comp.diameter(),
                                "reason": "component exceeds every translate "
                                          "of the bound set"},
                detail={"bound": s.describe()})
        witnesses[str(idx)] = {"center": list(center),
                               "instances": len(comp.instances),
                               "cells": comp.size(),
                               "diameter": comp.diameter()}
    return Certificate.passed(kind="s-bounded",
                              detail={"bound": s.describe(),
                                      "components": len(automaton.components)},
                              witnesses=witnesses)


def f_separated(system, a, b, f):
    """Certificate that no F-chain inside A union B joins A to B."""
    from coverdim.certificates import Certificate

    sysb = base_system(system)
    union = a.union(b)
    if union.is_empty():
        return Certificate.passed(kind="separated", detail={"empty": True})
    if isinstance(sysb, OdometerSystem):
        auto = _odometer_components(system, union, f)
        ad = a if not isinstance(system, RestrictedSystem) else a.intersect(system.y)
        bd = b if not isinstance(system, RestrictedSystem) else b.intersect(system.y)
        if auto.kind == "singleton":
            both = ad.intersect(bd)
            if both.is_empty():
                return Certificate.passed(kind="separated",
                                          detail={"singletons": True})
            return Certificate.failed(
                kind="separated",
                counterexample={"cell": list(both.min_cell()),
                                "reason": "common cell"})
        m = auto.resolution["modulus"]
        depth = auto.resolution["depth"]
        ad = ad.refine(depth)
        bd = bd.refine(depth)
        for idx, comp in enumerate(auto.components):
            hits_a = hits_b = None
            for inst in comp.instances:
                pieces = bx.split_mod(inst.box, m)
                got_a = bx.intersect_boxes(pieces, ad.boxes)
                got_b = bx.intersect_boxes(pieces, bd.boxes)
                if hits_a is None and got_a:
                    hits_a = got_a[0]
                if hits_b is None and got_b:
                    hits_b = got_b[0]
                if hits_a is not None and hits_b is not None:
                    return Certificate.failed(
                        kind="separated",
                        counterexample={"component": idx,
                                        "a_box": [list(hits_a.lo), list(hits_a.hi)],
                                        "b_box": [list(hits_b.lo), list(hits_b.hi)]},
                        detail={"components": len(auto.components)})
        return Certificate.passed(kind="separated",
                                  detail={"components": len(auto.components)})
    # sturmian: per cell, check whether a chain links an A-position to a B-position
    min_radius = 0
    while True:
        auto = _sturmian_components(system, union, f, min_radius=min_radius)
        if auto.kind == "singleton":
            both = a.intersect(b)
            if both.is_empty():
                return Certificate.passed(kind="separated",
                                          detail={"singletons": True})
            return Certificate.failed(kind="separated",
                                      counterexample={"reason": "common cell",
                                                      "cell": str(both.min_cell())})
        if auto.all_unbounded:
            # one unbounded chain class on a minimal system joins everything
            if a.is_empty() or b.is_empty():
                return Certificate.passed(kind="separated", detail={"trivial": True})
            return Certificate.failed(
                kind="separated",
                counterexample={"reason": "single unbounded chain class",
                                "pump": auto.notes.get("pump")})
        try:
            tester = _SturmianMembership(base_system(system), auto)
            for cell, labels in sorted(auto.cell_labels.items()):
                p = auto.sturmian_cells[cell]["position"]
                in_a0 = tester.member(p, 0, a)
                in_b0 = tester.member(p, 0, b)
                for m in sorted(labels):
                    if (in_a0 and tester.member(p, m, b)) or \
                            (in_b0 and tester.member(p, m, a)):
                        return Certificate.failed(
                            kind="separated",
                            counterexample={"cell": list(cell), "offset": m})
            return Certificate.passed(kind="separated",
                                      detail={"cells": len(auto.cell_labels)})
        except _WindowTooSmall:
            min_radius = 2 * max(auto.resolution["radius"], 1)


class _WindowTooSmall(Exception):
    pass


class _SturmianMembership:
    """Tests 'the point at offset m from a cell lies in a clopen set'.

    A test is decidable only when the shifted window of the set sits inside
    the cell's classified content; out-of-range tests raise, and the caller
    retries with a larger automaton radius.
    """

    def __init__(self, system, automaton):
        self.uni = factor_universe(system, automaton.resolution["width"])
        self.start_w = automaton.resolution["window"][0]
        self.width = automaton.resolution["width"]
        self._keys = {}

    def member(self, p, m, clo):
        if clo.is_empty():
            return False
        if clo.length == 0:
            return True
        off = clo.start - self.start_w + m
        if off < 0 or off + clo.length > self.width:
            raise _WindowTooSmall()
        key_id = id(clo)
        if key_id not in self._keys:
            self._keys[key_id] = _sturmian_keys(self.uni, clo)
        return self.uni.class_key(p + off, clo.length) in self._keys[key_id]


def component_of_in(system, b, v, f):
    """Chain closure of B inside V: the least superset of B closed under
    F-steps that stay in V, returned as a clopen set."""
    if not v.covers(b):
        raise ValueError("the seed set must be contained in the ambient set")
    if b.is_empty():
        return b
    sysb = base_system(system)
    if isinstance(sysb, OdometerSystem):
        rho, explicit = _steps_mode(f)
        if rho == 0:
            return b
        sys2, vv, _ = _resolve_restriction(system, v)
        d = max(vv.depth, b.depth)
        vv = vv.refine(d)
        bb = b.refine(d)
        if explicit is not None:
            if vv.size() > CELL_GUARD:
                raise SizeGuardError("explicit step closure needs cell-level sets")
            cells = tuple(Box(c, tuple(x + 1 for x in c)) for c in vv.iter_cells())
            vv = OdometerClopen(vv.system, d, cells)
        graph = odometer_instance_graph(vv, rho, explicit_steps=explicit)
        seeds = []
        for inst in graph.all_instances():
            if bx.intersect_boxes([inst.box], bb.boxes):
                seeds.append(inst)
        comps, _ = instance_bfs(graph, seeds=seeds)
        m = vv.modulus
        out = []
        for comp in comps:
            for inst in comp.instances:
                out.extend(bx.split_mod(inst.box, m))
        return OdometerClopen(vv.system, d, bx.normalize_boxes(out))
    # sturmian
    sysb = base_system(system)
    min_radius = 0
    while True:
        auto = _sturmian_components(system, v, f, min_radius=min_radius)
        if auto.kind == "singleton":
            return b
        if auto.all_unbounded:
            raise SizeGuardError("chain closure inside a set with unbounded "
                                 "components is not a clopen set")
        try:
            tester = _SturmianMembership(sysb, auto)
            start_w = auto.resolution["window"][0]
            width = auto.resolution["width"]
            uni = tester.uni
            cells = []
            for cell, labels in sorted(auto.cell_labels.items()):
                p = auto.sturmian_cells[cell]["position"]
                if any(tester.member(p, m, b) for m in sorted(labels)):
                    cells.append(uni.prefix[p:p + width])
            return SturmianClopen.from_words(sysb, cells, start=start_w)
        except _WindowTooSmall:
            min_radius = 2 * max(auto.resolution["radius"], 1)
