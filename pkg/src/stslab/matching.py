"""Perfect matchings in 3-uniform systems: exact search, enumeration,
resolutions, heuristic matchings, decompositions, and disjoint-PM packing.

The exact engine is a backtracking exact-cover search over vertices.
Branching always targets an uncovered vertex with the fewest available
edges, breaking ties toward the smallest vertex id; candidate edges are
tried in ascending edge-id order unless a caller supplies an rng to
shuffle them. Node budgets count expansions of this search tree and are
shared across the levels of multi-matching searches.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

from .core import (
    BudgetExceeded,
    DomainError,
    Matching,
    Triple,
    TripleSystem,
)

__all__ = [
    "Resolution",
    "ResolveResult",
    "DecompositionReport",
    "find_perfect_matching",
    "enumerate_perfect_matchings",
    "resolve",
    "greedy_maximal_matching",
    "nibble_matching",
    "ps_decompose",
    "trim_decomposition",
    "pack_disjoint_pms",
    "complete_partial_pm",
    "to_res_text",
    "from_res_text",
    "save_res",
    "load_res",
]


class _Budget:
    """Shared node-expansion counter; None limit means unbounded."""

    __slots__ = ("limit", "spent")

    def __init__(self, limit: Optional[int]):
        if limit is not None and limit <= 0:
            raise DomainError("budget must be positive (or None for unbounded)")
        self.limit = limit
        self.spent = 0

    def spend(self) -> None:
        self.spent += 1
        if self.limit is not None and self.spent > self.limit:
            raise BudgetExceeded(f"node budget {self.limit} exhausted")


def _pm_iter(
    edges: Sequence[Triple],
    vertex_edges: dict[int, list[int]],
    uncovered: set[int],
    active: list[bool],
    budget: _Budget,
    rng: Optional[random.Random] = None,
) -> Iterator[tuple[int, ...]]:
    """Yield every perfect matching of the active edges on the uncovered set.

    Mutates uncovered/active transiently; both are restored on exit and
    between yields. Callers must not touch them while iterating.
    """
    chosen: list[int] = []

    def usable(eid: int) -> bool:
        a, b, c = edges[eid]
        return active[eid] and a in uncovered and b in uncovered and c in uncovered

    def recurse() -> Iterator[tuple[int, ...]]:
        budget.spend()
        if not uncovered:
            yield tuple(chosen)
            return
        best_v = -1
        best: Optional[list[int]] = None
        for v in sorted(uncovered):
            cands = [eid for eid in vertex_edges.get(v, ()) if usable(eid)]
            if best is None or len(cands) < len(best):
                best_v, best = v, cands
                if not cands:
                    return
        assert best is not None and best_v >= 0
        if rng is not None and len(best) > 1:
            rng.shuffle(best)
        for eid in best:
            t = edges[eid]
            for v in t:
                uncovered.remove(v)
            chosen.append(eid)
            yield from recurse()
            chosen.pop()
            for v in t:
                uncovered.add(v)

    yield from recurse()


def _vertex_map(system: TripleSystem) -> dict[int, list[int]]:
    return {v: list(system.vertex_edges(v)) for v in range(1, system.n + 1)}


def find_perfect_matching(
    system: TripleSystem,
    vertices: Optional[Iterable[int]] = None,
    budget: Optional[int] = None,
    seed: Optional[int] = None,
) -> Optional[Matching]:
    """First perfect matching of the system (over [n] or a given subset).

    None when the vertex count is not divisible by 3 or the exhaustive
    search closes without a cover. Raises BudgetExceeded if a budget is
    supplied and runs out (the answer is then unknown).
    """
    universe = set(range(1, system.n + 1)) if vertices is None else set(vertices)
    if len(universe) % 3 != 0:
        return None
    rng = random.Random(seed) if seed is not None else None
    b = _Budget(budget)
    active = [True] * len(system.edges)
    vmap = _vertex_map(system)
    for ids in _pm_iter(system.edges, vmap, universe, active, b, rng):
        return Matching.of(system.edges[i] for i in ids)
    return None


def enumerate_perfect_matchings(
    system: TripleSystem,
    limit: Optional[int] = None,
    vertices: Optional[Iterable[int]] = None,
) -> list[Matching]:
    """All perfect matchings (up to limit), in deterministic search order."""
    universe = set(range(1, system.n + 1)) if vertices is None else set(vertices)
    if len(universe) % 3 != 0:
        return []
    b = _Budget(None)
    active = [True] * len(system.edges)
    vmap = _vertex_map(system)
    out: list[Matching] = []
    for ids in _pm_iter(system.edges, vmap, universe, active, b):
        out.append(Matching.of(system.edges[i] for i in ids))
        if limit is not None and len(out) >= limit:
            break
    return out


@dataclass(frozen=True)
class Resolution:
    """Partition of a system's edge set into perfect matching classes."""

    n: int
    classes: tuple[Matching, ...]

    def __post_init__(self):
        seen: set[Triple] = set()
        for cls in self.classes:
            if not cls.is_perfect(self.n):
                raise DomainError("resolution class is not a perfect matching")
            for t in cls:
                if t in seen:
                    raise DomainError(f"edge {t} appears in two classes")
                seen.add(t)

    def __len__(self) -> int:
        return len(self.classes)

    def edge_count(self) -> int:
        return sum(len(c) for c in self.classes)


@dataclass(frozen=True)
class ResolveResult:
    """certified=True means the answer is exact; False means the budget
    ran out first and resolution=None is indeterminate."""

    resolution: Optional[Resolution]
    certified: bool
    nodes: int


def resolve(system: TripleSystem, budget: Optional[int] = None) -> ResolveResult:
    """Partition all edges into perfect matchings, or certify none exists.

    Most-constrained search at the class level: each level extends the
    partition by a perfect matching containing the lowest unassigned edge.
    """
    n = system.n
    if n % 6 != 3:
        raise DomainError(f"resolutions need n = 3 mod 6, got n={n}")
    m = len(system.edges)
    per_class = n // 3
    b = _Budget(budget)
    if m % per_class != 0:
        return ResolveResult(None, True, b.spent)
    k = m // per_class
    if any(system.degree(v) != k for v in range(1, n + 1)):
        # Every vertex lies in exactly one edge per class.
        return ResolveResult(None, True, b.spent)

    active = [True] * m
    vmap = _vertex_map(system)
    classes: list[tuple[int, ...]] = []

    def lowest_active() -> int:
        for eid in range(m):
            if active[eid]:
                return eid
        return -1

    def search() -> bool:
        e0 = lowest_active()
        if e0 < 0:
            return True
        t0 = system.edges[e0]
        uncovered = set(range(1, n + 1)) - set(t0)
        active[e0] = False
        found = False
        for ids in _pm_iter(system.edges, vmap, uncovered, active, b):
            full = (e0,) + ids
            for eid in full:
                active[eid] = False
            active[e0] = False
            classes.append(full)
            if search():
                found = True
                break
            classes.pop()
            for eid in full:
                active[eid] = True
            active[e0] = False
        active[e0] = True
        return found

    try:
        ok = search()
    except BudgetExceeded:
        return ResolveResult(None, False, b.spent)
    if not ok:
        return ResolveResult(None, True, b.spent)
    res = Resolution(
        n, tuple(Matching.of(system.edges[i] for i in ids) for ids in classes)
    )
    return ResolveResult(res, True, b.spent)


def greedy_maximal_matching(system: TripleSystem, seed: int) -> Matching:
    """Random-order greedy; output is maximal (no active edge fits)."""
    rng = random.Random(seed)
    order = list(range(len(system.edges)))
    rng.shuffle(order)
    used: set[int] = set()
    picked: list[Triple] = []
    for eid in order:
        t = system.edges[eid]
        if used.isdisjoint(t):
            used.update(t)
            picked.append(t)
    return Matching.of(picked)


def nibble_matching(system: TripleSystem, bite: float, seed: int) -> Matching:
    """Iterated small random bites, then a greedy finish.

    Each round activates surviving edges independently with probability
    bite / (current mean degree over surviving vertices), keeps the
    activated edges that clash with no other activated edge, and deletes
    the covered vertices.
    """
    if not 0.0 < bite <= 1.0:
        raise DomainError(f"bite must lie in (0, 1], got {bite}")
    rng = random.Random(seed)
    uncovered = set(range(1, system.n + 1))
    picked: list[Triple] = []
    live = list(range(len(system.edges)))
    max_rounds = int(20 / bite) + 10
    for _ in range(max_rounds):
        live = [
            eid
            for eid in live
            if all(v in uncovered for v in system.edges[eid])
        ]
        if not live or not uncovered:
            break
        mean_deg = 3.0 * len(live) / len(uncovered)
        if mean_deg <= 1.0:
            break
        p = min(1.0, bite / mean_deg)
        activated = [eid for eid in live if rng.random() < p]
        usage: dict[int, int] = {}
        for eid in activated:
            for v in system.edges[eid]:
                usage[v] = usage.get(v, 0) + 1
        for eid in activated:
            t = system.edges[eid]
            if all(usage[v] == 1 for v in t):
                picked.append(t)
                for v in t:
                    uncovered.remove(v)
    # Greedy finish on whatever survived.
    live = [eid for eid in live if all(v in uncovered for v in system.edges[eid])]
    rng.shuffle(live)
    for eid in live:
        t = system.edges[eid]
        if all(v in uncovered for v in t):
            picked.append(t)
            for v in t:
                uncovered.remove(v)
    return Matching.of(picked)


@dataclass(frozen=True)
class DecompositionReport:
    """Edge decomposition into matching classes (a proper conflict coloring)."""

    n: int
    matchings: tuple[Matching, ...]
    uncovered_per_class: tuple[frozenset[int], ...]
    colors_used: int

    def __post_init__(self):
        if self.colors_used != len(self.matchings):
            raise DomainError("colors_used must equal the class count")
        if len(self.uncovered_per_class) != len(self.matchings):
            raise DomainError("uncovered sets must align with classes")

    def appearance_counts(self) -> list[int]:
        """counts[v] = number of classes covering vertex v (index 0 unused)."""
        counts = [0] * (self.n + 1)
        for cls in self.matchings:
            for t in cls:
                for v in t:
                    counts[v] += 1
        return counts


def _report_from_classes(n: int, classes: list[list[Triple]]) -> DecompositionReport:
    matchings = tuple(Matching.of(c) for c in classes)
    uncovered = tuple(
        frozenset(range(1, n + 1)) - m.vertices() for m in matchings
    )
    return DecompositionReport(n, matchings, uncovered, len(matchings))


def ps_decompose(system: TripleSystem, improvement_passes: int = 12) -> DecompositionReport:
    """Partition the edge set into matchings by greedy conflict coloring.

    Two edges conflict when they share a vertex, so an edge meets at most
    3(max_degree - 1) others and greedy needs at most 3*max_degree - 2
    classes. Bounded local moves afterwards try to drain the smallest
    classes into the rest.
    """
    n = system.n
    m = len(system.edges)
    if m == 0:
        return _report_from_classes(n, [])
    vertex_used: list[int] = [0] * (n + 1)  # color bitmask per vertex
    color_of: list[int] = [0] * m
    classes: list[list[int]] = []
    for eid, (a, b, c) in enumerate(system.edges):
        used = vertex_used[a] | vertex_used[b] | vertex_used[c]
        free = ~used
        color = (free & -free).bit_length() - 1
        color_of[eid] = color
        while len(classes) <= color:
            classes.append([])
        classes[color].append(eid)
        bit = 1 << color
        vertex_used[a] |= bit
        vertex_used[b] |= bit
        vertex_used[c] |= bit

    max_deg = max((system.degree(v) for v in range(1, n + 1)), default=0)
    assert len(classes) <= max(1, 3 * max_deg - 2)

    # Local improvement: migrate edges out of the smallest classes.
    for _ in range(improvement_passes):
        if len(classes) <= 1:
            break
        order = sorted(range(len(classes)), key=lambda i: len(classes[i]))
        smallest = order[0]
        moved_all = True
        for eid in list(classes[smallest]):
            a, b, c = system.edges[eid]
            dest = -1
            for j in order[::-1]:
                if j == smallest:
                    continue
                bit = 1 << j
                if not (vertex_used[a] & bit or vertex_used[b] & bit or vertex_used[c] & bit):
                    dest = j
                    break
            if dest < 0:
                moved_all = False
                continue
            old_bit = 1 << smallest
            new_bit = 1 << dest
            classes[smallest].remove(eid)
            classes[dest].append(eid)
            color_of[eid] = dest
            for v in (a, b, c):
                vertex_used[v] = (vertex_used[v] & ~old_bit) | new_bit
        if moved_all and not classes[smallest]:
            # Renumber: drop the emptied class.
            del classes[smallest]
            vertex_used = [0] * (n + 1)
            for j, cls in enumerate(classes):
                bit = 1 << j
                for eid in cls:
                    color_of[eid] = j
                    a, b, c = system.edges[eid]
                    vertex_used[a] |= bit
                    vertex_used[b] |= bit
                    vertex_used[c] |= bit
        else:
            break
    triples = [[system.edges[eid] for eid in cls] for cls in classes if cls]
    return _report_from_classes(n, triples)


def trim_decomposition(report: DecompositionReport, min_size: int) -> DecompositionReport:
    """Drop classes smaller than min_size (degree-poor tail of the coloring)."""
    if min_size < 0:
        raise DomainError("min_size must be nonnegative")
    kept = [list(m.edges) for m in report.matchings if len(m) >= min_size]
    return _report_from_classes(report.n, kept)


def _pack_once(
    system: TripleSystem,
    vmap: dict[int, list[int]],
    budget: Optional[int],
    rng_seed: int,
    cap: int,
) -> list[tuple[int, ...]]:
    """One greedy-deepening DFS pass; returns the deepest stack seen.

    Depth-first over levels: each level draws perfect matchings of the
    residual system (randomized candidate order) and commits one; on
    exhaustion the search backtracks a level and resumes that level's
    enumeration.
    """
    n = system.n
    master = random.Random(rng_seed)
    b = _Budget(budget)
    active = [True] * len(system.edges)

    def make_gen() -> Iterator[tuple[int, ...]]:
        rng = random.Random(master.getrandbits(64))
        return _pm_iter(
            system.edges, vmap, set(range(1, n + 1)), active, b, rng
        )

    levels: list[list] = [[make_gen(), None]]
    best: list[tuple[int, ...]] = []

    def committed() -> list[tuple[int, ...]]:
        return [pm for _, pm in levels if pm is not None]

    try:
        while levels:
            gen, pm = levels[-1]
            if pm is not None:
                for eid in pm:
                    active[eid] = True
                levels[-1][1] = None
            try:
                new_pm = next(gen)
            except StopIteration:
                levels.pop()
                continue
            levels[-1][1] = new_pm
            for eid in new_pm:
                active[eid] = False
            stack = committed()
            if len(stack) > len(best):
                best = stack
                if len(best) >= cap:
                    break
            if sum(active) >= n // 3:
                levels.append([make_gen(), None])
    except BudgetExceeded:
        pass
    return best


def pack_disjoint_pms(
    system: TripleSystem,
    budget: Optional[int] = 200_000,
    seed: int = 0,
) -> list[Matching]:
    """Pack of pairwise edge-disjoint perfect matchings, best of restarts.

    The node budget is split across up to 6 independent DFS passes (see
    _pack_once) and the deepest family wins; a single deep pass can sink
    its whole budget under one bad early commitment, and independent
    restarts make the returned count far less sensitive to the seed.
    Stops early at the theoretical cap (n-1)/2.
    """
    n = system.n
    if n == 0 or n % 3 != 0:
        return []
    vmap = _vertex_map(system)
    cap = (n - 1) // 2
    master = random.Random(seed)
    if budget is None:
        restarts = 1
        chunks: list[Optional[int]] = [None]
    else:
        restarts = max(1, min(6, budget // 25_000))
        share = budget // restarts
        chunks = [share] * restarts
        chunks[0] += budget - share * restarts
    best: list[tuple[int, ...]] = []
    for chunk in chunks:
        found = _pack_once(system, vmap, chunk, master.getrandbits(64), cap)
        if len(found) > len(best):
            best = found
            if len(best) >= cap:
                break
    return [Matching.of(system.edges[i] for i in ids) for ids in best]


def complete_partial_pm(
    system: TripleSystem,
    partial: Iterable[Triple],
    allowed_edge_ids: Iterable[int],
    budget: Optional[int] = None,
    seed: Optional[int] = None,
) -> Optional[Matching]:
    """Extend vertex-disjoint triples to a perfect matching of [n].

    Only edges with the given ids may be added. None when no completion
    exists (or the budget runs out, reported as BudgetExceeded).
    """
    base = [tuple(sorted(t)) for t in partial]
    covered: set[int] = set()
    for t in base:
        for v in t:
            if v in covered:
                raise DomainError("partial matching covers a vertex twice")
            covered.add(v)
    uncovered = set(range(1, system.n + 1)) - covered
    if len(uncovered) % 3 != 0:
        return None
    allowed = set(allowed_edge_ids)
    active = [False] * len(system.edges)
    for eid in allowed:
        active[eid] = True
    rng = random.Random(seed) if seed is not None else None
    b = _Budget(budget)
    vmap = _vertex_map(system)
    for ids in _pm_iter(system.edges, vmap, uncovered, active, b, rng):
        return Matching.of(base + [system.edges[i] for i in ids])
    return None


# -- .res file format ----------------------------------------------------
#
# Header "n=<n> classes=<k>", then one blank-line-preceded block per class
# with one "a b c" line per edge. Canonical output sorts edges inside each
# class, so write -> read -> write round-trips byte-identically.


def to_res_text(n: int, matchings: Sequence[Matching]) -> str:
    parts = [f"n={n} classes={len(matchings)}"]
    for m in matchings:
        parts.append("")
        for a, b, c in m.edges:
            parts.append(f"{a} {b} {c}")
    return "\n".join(parts) + "\n"


def from_res_text(text: str) -> tuple[int, tuple[Matching, ...]]:
    lines = text.splitlines()
    if not lines:
        raise DomainError("empty .res input")
    header = lines[0].split()
    try:
        n = int(header[0].removeprefix("n="))
        declared = int(header[1].removeprefix("classes="))
    except (IndexError, ValueError):
        raise DomainError(f"bad .res header {lines[0]!r}") from None
    blocks: list[list[Triple]] = []
    current: Optional[list[Triple]] = None
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            current = []
            blocks.append(current)
            continue
        if line.startswith("#"):
            continue
        if current is None:
            raise DomainError(f"line {lineno}: class block must start after a blank line")
        parts = line.split()
        if len(parts) != 3:
            raise DomainError(f"line {lineno}: expected 'a b c', got {line!r}")
        current.append(tuple(int(p) for p in parts))  # type: ignore[arg-type]
    if len(blocks) != declared:
        raise DomainError(f"header declares {declared} classes, found {len(blocks)}")
    return n, tuple(Matching.of(b) for b in blocks)


def save_res(n: int, matchings: Sequence[Matching], path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(to_res_text(n, matchings))


def load_res(path) -> tuple[int, tuple[Matching, ...]]:
    with open(path, "r", encoding="ascii") as fh:
        return from_res_text(fh.read())
