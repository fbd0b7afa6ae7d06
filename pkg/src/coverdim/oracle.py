"""Independent brute-force ground truth at tiny scale.

Point-level chain search over an explicit finite model, exhaustive
S-boundedness witness search, and minimal-color-count search.  This module
deliberately shares no component machinery with the chain engines: it is
the second route for every derived expectation, so agreement between the
two is evidence, not tautology.  Size guards are hard errors; a silently
truncated oracle would poison everything downstream.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from coverdim.boxes import SizeGuardError
from coverdim.certificates import Certificate
from coverdim.group import FiniteSubset, ball
from coverdim.systems import (
    OdometerSystem,
    SturmianSystem,
    admissible_words,
    base_system,
)

POINT_GUARD = 100_000
COLOR_GUARD = 24


@dataclass(frozen=True)
class FiniteQuotientModel:
    """Explicit points with an explicit partial action table.

    Odometer: points are residue vectors mod p^n and the action is exact.
    Sturmian: points are positions inside admissible context words; moves
    that would leave the context are undefined (censored), and components
    touching the censored boundary are flagged.
    """

    kind: str                 # 'odometer' | 'sturmian'
    points: tuple             # hashable point ids
    moves: dict               # (point, step) -> point  (partial)
    meta: dict

    @staticmethod
    def odometer(system, depth, steps):
        m = system.p ** depth
        if m ** system.dim > POINT_GUARD:
            raise SizeGuardError(
                f"odometer model with {m ** system.dim} points exceeds the "
                f"{POINT_GUARD} point guard")
        points = tuple(itertools.product(range(m), repeat=system.dim))
        moves = {}
        for pt in points:
            for g in steps.materialized().sorted_elements():
                moves[(pt, g)] = tuple((c + d) % m for c, d in zip(pt, g))
        return FiniteQuotientModel("odometer", points, moves,
                                   {"p": system.p, "dim": system.dim,
                                    "depth": depth, "modulus": m})

    @staticmethod
    def sturmian(system, context_len, steps):
        words = sorted(admissible_words(system, context_len))
        points = []
        moves = {}
        for w in words:
            for i in range(context_len):
                points.append((w, i))
        if len(points) > POINT_GUARD:
            raise SizeGuardError("sturmian model exceeds the point guard")
        for (w, i) in points:
            for g in steps.materialized().sorted_elements():
                j = i + g[0]
                if 0 <= j < context_len:
                    moves[((w, i), g)] = (w, j)
        return FiniteQuotientModel("sturmian", tuple(points), moves,
                                   {"context_len": context_len})

    def member_test(self, clopen):
        """Point membership predicate for a clopen set descriptor."""
        if self.kind == "odometer":
            m = self.meta["modulus"]

            def test(pt):
                return clopen.contains_residue(pt)
            return test
        length = clopen.length
        start = clopen.start

        def test(pt):
            w, i = pt
            lo = i + start
            hi = lo + length
            if clopen.length == 0:
                return bool(clopen.words)
            if lo < 0 or hi > len(w):
                return None  # censored: undecidable in this context
            return w[lo:hi] in clopen.words
        return test


def naive_components(model, b_points, f):
    """Plain point BFS.  Returns (labels, comps, consistent) where labels
    maps points to displacement vectors from their component's basepoint,
    comps maps points to component ids, and consistent[cid] is False when
    some edge contradicts the labels (a wrap: the component is infinite in
    the real system)."""
    if len(model.points) > POINT_GUARD:
        raise SizeGuardError("model exceeds the point guard")
    steps = f.materialized().sorted_elements()
    b_set = set(b_points)
    labels = {}
    comps = {}
    consistent = {}
    cid = 0
    for start in sorted(b_set):
        if start in comps:
            continue
        comps[start] = cid
        labels[start] = tuple(0 for _ in range(f.dim))
        queue = [start]
        qi = 0
        while qi < len(queue):
            cur = queue[qi]
            qi += 1
            for g in steps:
                nxt = model.moves.get((cur, g))
                if nxt is None or nxt not in b_set:
                    continue
                if nxt not in comps:
                    comps[nxt] = cid
                    labels[nxt] = tuple(a + d for a, d in zip(labels[cur], g))
                    queue.append(nxt)
        consistent[cid] = True
        cid += 1
    # wrap detection: an edge whose displacement disagrees with the labels
    for (pt, g), nxt in model.moves.items():
        if pt in b_set and nxt in b_set and comps.get(pt) == comps.get(nxt):
            want = tuple(a + d for a, d in zip(labels[pt], g))
            if want != labels[nxt]:
                consistent[comps[pt]] = False
    return labels, comps, consistent


def oracle_label_sets(model, b_points, f):
    """Per-point label sets in the same shape the chain engines report:
    point -> frozenset of offsets, or the string 'unbounded'."""
    labels, comps, consistent = naive_components(model, b_points, f)
    by_comp = {}
    for pt, cid in comps.items():
        by_comp.setdefault(cid, []).append(pt)
    out = {}
    for cid, pts in by_comp.items():
        if not consistent[cid]:
            for pt in pts:
                out[pt] = "unbounded"
            continue
        all_labels = [labels[pt] for pt in pts]
        for pt in pts:
            base = labels[pt]
            out[pt] = frozenset(tuple(a - b for a, b in zip(l, base))
                                for l in all_labels)
    return out


def exhaustive_s_witness(label_set, s):
    """Exhaustive search over all centers for labels inside one translate."""
    labels = sorted(label_set)
    if not labels:
        return tuple()
    cands = sorted({tuple(m - t for m, t in zip(m0, t))
                    for m0 in labels for t in s.materialized().sorted_elements()})
    for lam in cands:
        if all(tuple(m - l for m, l in zip(mm, lam)) in s for mm in labels):
            return lam
    return None


def exhaustive_min_colors(model, f, s, max_colors=4):
    """Least number of colors whose chain components are all S-bounded,
    by exhaustive search over colorings; None if none up to the cap."""
    n = len(model.points)
    if n > COLOR_GUARD:
        raise SizeGuardError(
            f"exhaustive coloring over {n} points exceeds the "
            f"{COLOR_GUARD} point guard")
    points = sorted(model.points)
    for c in range(1, max_colors + 1):
        # first point pinned to color 0: colorings differing by a
        # permutation of colors are equivalent
        for assignment in itertools.product(range(c), repeat=n - 1):
            coloring = (0,) + assignment
            if _coloring_ok(model, points, coloring, c, f, s):
                return c
    return None


def _coloring_ok(model, points, coloring, c, f, s):
    for j in range(c):
        cls = [pt for pt, col in zip(points, coloring) if col == j]
        out = oracle_label_sets(model, cls, f)
        for pt in cls:
            got = out[pt]
            if got == "unbounded":
                return False
            if exhaustive_s_witness(got, s) is None:
                return False
    return True


def replay(cert_data, context=None):
    """Re-execute the verification described by a serialized certificate
    and compare verdicts; mismatches are reported, not raised."""
    from coverdim.certificates import Certificate as C
    from coverdim.cli import rebuild_and_verify

    cert = C.from_json(cert_data) if isinstance(cert_data, dict) else cert_data
    fresh = rebuild_and_verify(cert, context or {})
    if fresh is None:
        return {"replayed": False, "reason": "certificate kind not replayable "
                                             "without its input artifact"}
    same_verdict = fresh.verdict == cert.verdict
    same_witnesses = fresh.witnesses == cert.witnesses
    return {"replayed": True,
            "verdict_match": same_verdict,
            "witness_match": same_witnesses,
            "fresh_verdict": fresh.verdict}
