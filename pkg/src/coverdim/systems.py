"""Free symbolic dynamical systems with exact clopen-set calculus.

Two concrete models:

* ``OdometerSystem(p, dim)`` -- Z^dim acting on the product of dim copies of
  the p-adic integers, generator i adding 1 with carry to coordinate i.
  Clopen sets are described by residue vectors mod p^n, stored as unions of
  axis-aligned boxes so very large descriptor sets stay cheap.

* ``SturmianSystem(cf_initial, cf_periodic)`` -- the shift on the Sturmian
  subshift whose slope has the given continued fraction expansion (periodic
  tail nonempty means irrational slope, hence a free action).  Clopen sets
  are unions of cylinders anchored at an explicit window [start, start+L);
  anchors are necessary because translating a cylinder moves its window.

Restricting either model to a clopen subset Y yields a partial system with
domains D_gamma = Y intersect gamma^{-1} Y, computed on demand.

Points are never materialized: every predicate in scope is decided at a
finite descriptor resolution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from coverdim import boxes as bx
from coverdim.boxes import Box, SizeGuardError
from coverdim.group import FiniteSubset, ball


# ---------------------------------------------------------------------------
# systems


@dataclass(frozen=True)
class OdometerSystem:
    p: int
    dim: int

    def __post_init__(self):
        if self.p < 2 or self.dim < 1:
            raise ValueError("odometer needs base p >= 2 and dim >= 1")

    def full_set(self, depth=0):
        m = self.p ** depth
        box = Box(tuple(0 for _ in range(self.dim)),
                  tuple(m for _ in range(self.dim)))
        return OdometerClopen(self, depth, (box,))

    def empty_set(self):
        return OdometerClopen(self, 0, tuple())

    def describe(self):
        return f"odometer(p={self.p}, dim={self.dim})"


@dataclass(frozen=True)
class TranslationSystem:
    """Z^dim acting on itself by translation; used for transported covers."""

    dim: int

    def describe(self):
        return f"translation(dim={self.dim})"


@dataclass(frozen=True)
class SturmianSystem:
    cf_initial: tuple = ()
    cf_periodic: tuple = (1,)

    def __post_init__(self):
        coeffs = tuple(self.cf_initial) + tuple(self.cf_periodic)
        if any(a < 1 for a in coeffs):
            raise ValueError("continued fraction coefficients must be >= 1")

    @property
    def dim(self):
        return 1

    @property
    def aperiodic(self):
        return len(self.cf_periodic) > 0

    def _coeff(self, i):
        if i < len(self.cf_initial):
            return self.cf_initial[i]
        if not self.cf_periodic:
            return None
        j = (i - len(self.cf_initial)) % len(self.cf_periodic)
        return self.cf_periodic[j]

    def characteristic_prefix(self, min_len):
        """Prefix of the characteristic word, at least min_len letters.

        Standard sequence: s0 = "0", s1 = "0"^(a1-1) "1", s_n = s_{n-1}^{a_n} s_{n-2}.
        Rational slopes (empty periodic tail) yield the periodic word s_k^inf.
        """
        return _char_prefix(self, min_len)

    def full_set(self):
        return SturmianClopen(self, 0, 0, frozenset({""}))

    def empty_set(self):
        return SturmianClopen(self, 0, 0, frozenset())

    def describe(self):
        return (f"sturmian(cf_initial={list(self.cf_initial)}, "
                f"cf_periodic={list(self.cf_periodic)})")


@lru_cache(maxsize=32)
def _char_prefix_cached(system_key, min_len):
    initial, periodic = system_key
    sys = SturmianSystem(initial, periodic)
    s_prev = "1"   # s_0
    a1 = sys._coeff(0)
    if a1 is None:
        return s_prev * (min_len // len(s_prev) + 1)
    s_cur = "1" * (a1 - 1) + "0"  # s_1; all-ones coefficients give 01001010...
    i = 1
    while len(s_cur) < min_len:
        a = sys._coeff(i)
        if a is None:
            # rational slope: the limit is the periodic repetition of s_cur
            return (s_cur * (min_len // len(s_cur) + 2))[: max(min_len, len(s_cur))]
        s_cur, s_prev = s_cur * a + s_prev, s_cur
        i += 1
    return s_cur


def _char_prefix(system, min_len):
    key = (tuple(system.cf_initial), tuple(system.cf_periodic))
    return _char_prefix_cached(key, min_len)


# ---------------------------------------------------------------------------
# Sturmian factor universe: exact factor classification via rank doubling


class FactorUniverse:
    """Exact classification of the subshift's factors up to one fixed length.

    Backed by a prefix of the characteristic word with suffix-array style
    rank doubling, so 'which factor of length L starts at position i' is an
    O(1) integer lookup for every L up to the universe length.  Cells of
    big clopen computations are canonical factor occurrences (integers),
    never strings.  The prefix is grown until every factor of the universe
    length occurs in it, which makes scans over the prefix conclusive for
    the whole subshift (factors of shorter lengths then all occur too).
    """

    def __init__(self, system, length):
        self.system = system
        self.length = max(1, length)
        target = self.length + 1 if system.aperiodic else None
        prefix_len = 4 * self.length + 64
        while True:
            self.prefix = system.characteristic_prefix(prefix_len)
            prefix_len = max(prefix_len, len(self.prefix))
            self._build_ranks()
            count = len(self.positions(self.length))
            if target is None or count >= target:
                break
            if prefix_len >= 64 * (self.length + 2) + 4096:
                break  # complexity stalled; slope behaves rationally
            prefix_len *= 2

    def _build_ranks(self):
        s = self.prefix
        n = len(s)
        self.n = n
        self.rank_levels = [[ord(c) - 48 for c in s]]
        k = 1
        while k < self.length:
            prev = self.rank_levels[-1]
            new = [-1] * n  # -1 marks windows running off the prefix
            order = sorted(range(max(0, n - 2 * k + 1)),
                           key=lambda i: (prev[i], prev[i + k]))
            r = -1
            last = None
            for i in order:
                key = (prev[i], prev[i + k])
                if key != last:
                    r += 1
                    last = key
                new[i] = r
            self.rank_levels.append(new)
            k *= 2
        self._positions_cache = {}

    def class_key(self, i, ell):
        """Hashable identity of the factor prefix[i:i+ell]; ell <= length."""
        if ell < 1 or ell > self.length or i < 0 or i + ell > self.n:
            raise ValueError(f"window [{i}, {i + ell}) not classified "
                             f"(prefix {self.n}, max length {self.length})")
        k = 1
        lvl = 0
        while 2 * k <= ell:
            k *= 2
            lvl += 1
        lev = self.rank_levels[lvl]
        return (ell, lev[i], lev[i + ell - k])

    def positions(self, ell):
        """First-occurrence positions of the distinct factors of length ell."""
        if ell not in self._positions_cache:
            seen = {}
            for i in range(self.n - ell + 1):
                key = self.class_key(i, ell)
                if key not in seen:
                    seen[key] = i
            self._positions_cache[ell] = sorted(seen.values())
        return self._positions_cache[ell]

    def word(self, i, ell=None):
        return self.prefix[i:i + (self.length if ell is None else ell)]

    def count(self, ell=None):
        return len(self.positions(self.length if ell is None else ell))


@lru_cache(maxsize=64)
def _universe(system_key, length):
    initial, periodic = system_key
    return FactorUniverse(SturmianSystem(initial, periodic), length)


def factor_universe(system, length):
    return _universe((tuple(system.cf_initial), tuple(system.cf_periodic)), length)


def admissible_words(system, length):
    """The exact factor set of the subshift at the given length."""
    if length < 1:
        raise ValueError("length must be >= 1")
    uni = factor_universe(system, length)
    return frozenset(uni.word(r, length) for r in uni.positions(length))


# ---------------------------------------------------------------------------
# clopen sets


@dataclass(frozen=True)
class OdometerClopen:
    """Residue-vector set at a fixed depth, stored as disjoint boxes in [0, p^n)^d."""

    system: OdometerSystem
    depth: int
    boxes: tuple

    def __post_init__(self):
        m = self.modulus
        for b in self.boxes:
            if any(l < 0 or h > m for l, h in zip(b.lo, b.hi)):
                raise ValueError(f"box {b} outside [0, {m})^{self.system.dim}")

    @property
    def modulus(self):
        return self.system.p ** self.depth

    @staticmethod
    def from_residues(system, depth, residues):
        m = system.p ** depth
        cells = []
        for r in residues:
            if isinstance(r, int):
                r = (r,)
            r = tuple(int(c) % m for c in r)
            if len(r) != system.dim:
                raise ValueError(f"residue {r} has wrong dimension")
            cells.append(Box(r, tuple(c + 1 for c in r)))
        return OdometerClopen(system, depth, bx.normalize_boxes(cells)).normalize()

    @staticmethod
    def from_boxes(system, depth, boks):
        m = system.p ** depth
        flat = []
        for b in boks:
            flat.extend(bx.split_mod(b, m))
        return OdometerClopen(system, depth, bx.normalize_boxes(flat))

    def is_empty(self):
        return not self.boxes

    def size(self):
        return bx.boxes_size(self.boxes)

    def contains_residue(self, r):
        r = tuple(c % self.modulus for c in r)
        return any(b.contains(r) for b in self.boxes)

    def refine(self, depth):
        """Same set re-expressed at a deeper depth."""
        if depth < self.depth:
            raise ValueError("refine cannot reduce depth")
        if depth == self.depth:
            return self
        scale = self.system.p ** (depth - self.depth)
        m = self.modulus
        out = []
        for b in self.boxes:
            out.extend(self._lift_box(b, m, scale))
        return OdometerClopen(self.system, depth, bx.normalize_boxes(out))

    def _lift_box(self, b, m, scale):
        import itertools
        per_axis = []
        for l, h in zip(b.lo, b.hi):
            per_axis.append([(l + k * m, h + k * m) for k in range(scale)])
        for combo in itertools.product(*per_axis):
            yield Box(tuple(c[0] for c in combo), tuple(c[1] for c in combo))

    def normalize(self):
        """Reduce to the minimal depth expressing the same set.

        A set drops one level iff it equals the lift of the coarse cells
        whose full p-block it contains; that candidate is computed exactly
        by box arithmetic (coarse cells not touched by the complement).
        """
        cur = self
        while cur.depth > 0:
            p = cur.system.p
            m_coarse = cur.modulus // p
            full = cur.system.full_set(cur.depth)
            complement = bx.subtract_boxes(full.boxes, cur.boxes)
            # coarse cells whose block meets the complement
            touched = [Box(tuple(l // p for l in b.lo),
                           tuple(-(-h // p) for h in b.hi))
                       for b in complement]
            coarse_full = Box(tuple(0 for _ in range(cur.system.dim)),
                              tuple(m_coarse for _ in range(cur.system.dim)))
            candidate = bx.subtract_boxes([coarse_full], touched)
            cand = OdometerClopen(cur.system, cur.depth - 1,
                                  bx.normalize_boxes(candidate))
            if not cand.refine(cur.depth).equals(cur):
                break
            cur = cand
        return cur

    def translate(self, gamma):
        """Exact image of the set under the action of gamma."""
        gamma = _as_vec(gamma, self.system.dim)
        m = self.modulus
        out = []
        for b in self.boxes:
            out.extend(bx.split_mod(b.translate(gamma), m))
        return OdometerClopen(self.system, self.depth, bx.normalize_boxes(out))

    def union(self, other):
        a, b = self._common(other)
        return OdometerClopen(a.system, a.depth,
                              bx.normalize_boxes(a.boxes + b.boxes))

    def intersect(self, other):
        a, b = self._common(other)
        return OdometerClopen(a.system, a.depth,
                              bx.intersect_boxes(a.boxes, b.boxes))

    def subtract(self, other):
        a, b = self._common(other)
        return OdometerClopen(a.system, a.depth,
                              bx.subtract_boxes(a.boxes, b.boxes))

    def complement(self):
        full = self.system.full_set(self.depth)
        return full.subtract(self)

    def covers(self, other):
        a, b = self._common(other)
        return not bx.subtract_boxes(b.boxes, a.boxes)

    def equals(self, other):
        a, b = self._common(other)
        return (not bx.subtract_boxes(a.boxes, b.boxes) and
                not bx.subtract_boxes(b.boxes, a.boxes))

    def _common(self, other):
        if self.system != other.system:
            raise ValueError("clopen sets belong to different systems")
        d = max(self.depth, other.depth)
        return self.refine(d), other.refine(d)

    def min_cell(self):
        """Lexicographically least residue vector (canonical descriptor order)."""
        if self.is_empty():
            raise ValueError("empty set has no cells")
        return min(b.lo for b in sorted(self.boxes))

    def iter_cells(self, cap=200_000):
        seen = 0
        for b in sorted(self.boxes):
            seen += b.size()
            if seen > cap:
                raise SizeGuardError(f"cell enumeration exceeds cap {cap}")
            yield from b.cells(cap)

    def to_json(self):
        return {
            "model": "odometer",
            "depth": self.depth,
            "boxes": [[list(b.lo), list(b.hi)] for b in sorted(self.boxes)],
        }

    def describe(self):
        n = self.size()
        return f"odometer-set(depth={self.depth}, cells={n})"


def _as_vec(gamma, dim):
    if isinstance(gamma, int):
        gamma = (gamma,)
    g = tuple(int(c) for c in gamma)
    if len(g) != dim:
        raise ValueError(f"group element {g} has dimension {len(g)}, expected {dim}")
    return g


@dataclass(frozen=True)
class SturmianClopen:
    """Union of cylinders on the window [start, start+length).

    The anchor (start) is part of the descriptor: translating a cylinder
    moves its window, and constraints at negative coordinates are not
    expressible from a window anchored at 0.  length 0 with the empty word
    denotes the full space; no words denotes the empty set.
    """

    system: SturmianSystem
    start: int
    length: int
    words: frozenset

    def __post_init__(self):
        for w in self.words:
            if len(w) != self.length:
                raise ValueError(f"word {w!r} does not match window length {self.length}")

    @staticmethod
    def from_words(system, words, start=0):
        words = frozenset(words)
        if not words:
            return SturmianClopen(system, 0, 0, frozenset())
        L = len(next(iter(words)))
        adm = admissible_words(system, L) if L > 0 else {""}
        bad = [w for w in words if w not in adm]
        if bad:
            raise ValueError(f"inadmissible words: {sorted(bad)!r}")
        return SturmianClopen(system, start, L, words).normalize()

    def is_empty(self):
        return not self.words

    def is_full(self):
        if self.length == 0:
            return bool(self.words)
        return len(self.words) == len(admissible_words(self.system, self.length))

    def window(self):
        return (self.start, self.start + self.length)

    def translate(self, gamma):
        g = gamma if isinstance(gamma, int) else gamma[0]
        return SturmianClopen(self.system, self.start - g, self.length, self.words)

    def refine_window(self, start, end):
        """Same set re-expressed on the larger window [start, end)."""
        if self.is_empty():
            return SturmianClopen(self.system, start, end - start, frozenset())
        if self.length == 0:
            words = admissible_words(self.system, end - start) if end > start else {""}
            return SturmianClopen(self.system, start, end - start, frozenset(words))
        if start > self.start or end < self.start + self.length:
            raise ValueError("refine window must contain the current window")
        L = end - start
        off = self.start - start
        adm = admissible_words(self.system, L)
        words = frozenset(w for w in adm if w[off:off + self.length] in self.words)
        return SturmianClopen(self.system, start, L, words)

    def normalize(self):
        """Trim the window to the minimal one expressing the same set."""
        cur = self
        changed = True
        while changed and cur.length > 0:
            changed = False
            if not cur.words:
                return SturmianClopen(cur.system, 0, 0, frozenset())
            if cur.is_full():
                return SturmianClopen(cur.system, 0, 0, frozenset({""}))
            # left trim
            if cur.length > 1:
                right = frozenset(w[1:] for w in cur.words)
                adm = admissible_words(cur.system, cur.length)
                back = frozenset(w for w in adm if w[1:] in right)
                if back == cur.words:
                    cur = SturmianClopen(cur.system, cur.start + 1,
                                         cur.length - 1, right)
                    changed = True
                    continue
                left = frozenset(w[:-1] for w in cur.words)
                back = frozenset(w for w in adm if w[:-1] in left)
                if back == cur.words:
                    cur = SturmianClopen(cur.system, cur.start,
                                         cur.length - 1, left)
                    changed = True
        return cur

    def _common(self, other):
        if self.system != other.system:
            raise ValueError("clopen sets belong to different systems")
        if self.length == 0 and other.length == 0:
            return self, other
        starts = []
        ends = []
        for s in (self, other):
            if s.length > 0:
                starts.append(s.start)
                ends.append(s.start + s.length)
        lo, hi = min(starts), max(ends)
        return self.refine_window(lo, hi), other.refine_window(lo, hi)

    def union(self, other):
        a, b = self._common(other)
        if a.length == 0:
            return a if a.words else b
        return SturmianClopen(a.system, a.start, a.length, a.words | b.words).normalize()

    def intersect(self, other):
        a, b = self._common(other)
        if a.length == 0:
            return b if a.words else a
        return SturmianClopen(a.system, a.start, a.length, a.words & b.words).normalize()

    def subtract(self, other):
        a, b = self._common(other)
        if a.length == 0 and not a.words:
            return a
        if a.length == 0:
            return b.complement()
        return SturmianClopen(a.system, a.start, a.length, a.words - b.words).normalize()

    def complement(self):
        if self.length == 0:
            full = bool(self.words)
            return (SturmianClopen(self.system, 0, 0, frozenset()) if full
                    else SturmianClopen(self.system, 0, 0, frozenset({""})))
        adm = admissible_words(self.system, self.length)
        return SturmianClopen(self.system, self.start, self.length,
                              frozenset(adm) - self.words).normalize()

    def covers(self, other):
        a, b = self._common(other)
        if a.length == 0:
            return bool(a.words) or b.is_empty()
        return b.words <= a.words

    def equals(self, other):
        a, b = self._common(other)
        return a.words == b.words

    def min_cell(self):
        if self.is_empty():
            raise ValueError("empty set has no cells")
        return (self.start, min(self.words))

    def to_json(self):
        return {
            "model": "sturmian",
            "start": self.start,
            "length": self.length,
            "words": sorted(self.words),
        }

    def describe(self):
        return (f"sturmian-set(window=[{self.start},{self.start + self.length}), "
                f"words={len(self.words)})")


# ---------------------------------------------------------------------------
# partial systems


@dataclass(frozen=True)
class RestrictedSystem:
    """Restriction of a full system to a clopen subset Y.

    Domains D_gamma = Y intersect gamma^{-1}.Y are computed on demand; the
    identity domain is Y itself.  Chains that stay inside a subset of Y
    respect every domain automatically, which the chain engines rely on.
    """

    parent: object
    y: object

    def __post_init__(self):
        if isinstance(self.parent, RestrictedSystem):
            raise ValueError("restrict the parent system directly")

    @property
    def dim(self):
        return self.parent.dim

    @property
    def is_empty(self):
        return self.y.is_empty()

    def domain(self, gamma):
        """D_gamma = Y intersect gamma^{-1}.Y."""
        g = _as_vec(gamma, self.parent.dim)
        if all(c == 0 for c in g):
            return self.y
        pulled = translate(self.parent, self.y, tuple(-c for c in g))
        return self.y.intersect(pulled)

    def describe(self):
        return f"restrict({self.parent.describe()}, {self.y.describe()})"


def base_system(system):
    return system.parent if isinstance(system, RestrictedSystem) else system


def restrict(system, y):
    """Partial system on Y with domains Y intersect gamma^{-1}.Y.

    An empty Y yields the distinguished empty system (dimension convention -1).
    """
    if isinstance(system, RestrictedSystem):
        return RestrictedSystem(system.parent, system.y.intersect(y))
    return RestrictedSystem(system, y)


def translate(system, a, gamma):
    """Exact image gamma . a; callers on restricted systems intersect with Y."""
    sysb = base_system(system)
    if isinstance(sysb, OdometerSystem):
        return a.translate(_as_vec(gamma, sysb.dim))
    if isinstance(sysb, SturmianSystem):
        g = gamma if isinstance(gamma, int) else _as_vec(gamma, 1)[0]
        return a.translate(g)
    raise TypeError(f"cannot translate sets of {type(sysb).__name__}")


def refine(a, depth):
    """Re-express a descriptor at a deeper resolution (no-op at equal depth)."""
    if isinstance(a, OdometerClopen):
        return a.refine(depth)
    if isinstance(a, SturmianClopen):
        start, end = depth if isinstance(depth, tuple) else (a.start, a.start + depth)
        if isinstance(depth, int):
            if depth < a.length:
                raise ValueError("refine cannot shrink the window")
            end = a.start + depth
        return a.refine_window(start, end)
    raise TypeError(f"cannot refine {type(a).__name__}")


def open_enlarge(a):
    """Open neighborhood of a closed set with the same chain structure.

    In these zero-dimensional models every clopen set is its own open
    neighborhood, so this is the identity; the returned note records the
    trivial witness explicitly.
    """
    return a, {"operation": "open_enlarge", "enlarged": False,
               "note": "clopen sets are their own open neighborhoods"}


def check_free(system, f, depth):
    """Certificate that no two distinct elements of f act identically.

    Odometer: translation by a nonzero vector changes some residue at a deep
    enough level, so the check is exact arithmetic.  Sturmian: a common
    point for two elements at distance q would be a q-periodic point, which
    forces q-periodic factors of every length; aperiodic slopes with
    coefficients bounded by A admit no q-periodic factor of length
    q*(A+4) (critical exponent below 3+A), so scanning that length is
    conclusive.  A periodic witness indicates a degenerate (rational) slope.
    """
    from coverdim.certificates import Certificate

    sysb = base_system(system)
    f = f.materialized()
    diffs = sorted({tuple(a - b for a, b in zip(x, y))
                    for x in f.elems for y in f.elems} -
                   {tuple(0 for _ in range(f.dim))})
    if isinstance(sysb, OdometerSystem):
        return Certificate.passed(
            kind="free",
            detail={"system": sysb.describe(),
                    "argument": "adding a nonzero integer vector to p-adic "
                                "coordinates has no fixed point",
                    "differences_checked": len(diffs)})
    qs = sorted({abs(d[0]) for d in diffs} - {0})
    coeffs = tuple(sysb.cf_initial) + tuple(sysb.cf_periodic)
    a_max = max(coeffs) if coeffs else 1
    longest = {}
    for q in qs:
        L = max(depth, q * (a_max + 4))
        words = admissible_words(sysb, L)
        run = 0
        for w in sorted(words):
            if all(w[i] == w[i + q] for i in range(len(w) - q)):
                return Certificate.failed(
                    kind="free",
                    counterexample={"period": q, "word": w},
                    detail={"system": sysb.describe(), "scan_length": L,
                            "note": "a periodic factor at the conclusive "
                                    "length; the slope is degenerate"})
            best = 0
            cur = 0
            for i in range(len(w) - q):
                cur = cur + 1 if w[i] == w[i + q] else 0
                best = max(best, cur)
            run = max(run, best + q)
        longest[q] = run
    return Certificate.passed(
        kind="free",
        detail={"system": sysb.describe(),
                "periods_checked": qs,
                "longest_periodic_factor": longest})


# ---------------------------------------------------------------------------
# config parsing (flat key-value with sections; see the cli module)


def system_from_config(cfg):
    """Build a system from a parsed [system] section mapping."""
    model = cfg.get("model", "odometer").strip().lower()
    if model == "odometer":
        p = int(cfg.get("p", 2))
        dim = int(cfg.get("d", cfg.get("dim", 1)))
        system = OdometerSystem(p, dim)
    elif model == "sturmian":
        initial = _parse_int_list(cfg.get("slope_initial", ""))
        periodic = _parse_int_list(cfg.get("slope_periodic", "1"))
        system = SturmianSystem(tuple(initial), tuple(periodic))
    else:
        raise ValueError(f"unknown system model {model!r}")
    if "restrict" in cfg:
        y = clopen_from_text(system, cfg["restrict"])
        return restrict(system, y)
    return system


def clopen_from_text(system, text):
    """Parse 'depth:N residues:r1;r2' (odometer) or 'window:S words:w1;w2'."""
    sysb = base_system(system)
    fields = dict(part.split(":", 1) for part in text.split())
    if isinstance(sysb, OdometerSystem):
        depth = int(fields["depth"])
        residues = []
        for chunk in fields.get("residues", "").split(";"):
            chunk = chunk.strip().strip("()")
            if chunk:
                residues.append(tuple(int(c) for c in chunk.split(",")))
        return OdometerClopen.from_residues(sysb, depth, residues)
    start = int(fields.get("window", 0))
    words = [w for w in fields.get("words", "").split(";") if w]
    return SturmianClopen.from_words(sysb, words, start=start)


def _parse_int_list(text):
    return [int(t) for t in text.replace(",", " ").split()]
