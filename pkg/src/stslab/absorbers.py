"""Absorbers, resilient templates, and absorbing structures.

A sub-absorber rooted on (x, y, z) is five host edges

    {x,x1,x2}, {y,y1,y2}, {z,z1,z2}, {x1,y1,z1}, {x2,y2,z2}

on 9 distinct vertices (6 externals). A full absorber on roots (x, y, z)
takes three disjoint rooted edges {x,x1,x2}, {y,y1,y2}, {z,z1,z2} and
glues sub-absorbers onto (x1,y1,z1) and (x2,y2,z2): 13 edges, 21 distinct
vertices, 18 externals, no two edges sharing more than one vertex. Its
edge set splits into a covering matching (7 edges, all 21 vertices) and a
non-covering matching (6 edges, exactly the 18 externals), which is what
lets a completed structure absorb either half of a flexible set.

Searches are deterministic first-fit over candidates ordered by ascending
external vertex ids, driven entirely by the host's pair index, and accept
an optional step budget (None = exhaustive, so a None answer is certified;
a full absorber search shares one budget with its nested sub-searches).
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .core import DomainError, Matching, Triple, TripleSystem
from .matching import find_perfect_matching
from . import seeding

__all__ = [
    "SubAbsorber",
    "Absorber",
    "ResilientTemplate",
    "AbsorbingStructure",
    "find_sub_absorber",
    "find_absorber",
    "contracted_absorber_check",
    "resilience_spotcheck",
    "build_template",
    "assemble_absorbing_structure",
    "complete_via_structure",
]


class _Steps:
    __slots__ = ("limit", "used")

    def __init__(self, limit: Optional[int]):
        self.limit = limit
        self.used = 0

    def tick(self) -> bool:
        """True while budget remains."""
        self.used += 1
        return self.limit is None or self.used <= self.limit

    def exhausted(self) -> bool:
        return self.limit is not None and self.used > self.limit


@dataclass(frozen=True)
class SubAbsorber:
    """roots (x, y, z); externals in role order (x1, x2, y1, y2, z1, z2)."""

    roots: tuple[int, int, int]
    externals: tuple[int, int, int, int, int, int]

    def __post_init__(self):
        if len(set(self.roots) | set(self.externals)) != 9:
            raise DomainError("sub-absorber needs 9 distinct vertices")

    def rooted_edges(self) -> tuple[Triple, Triple, Triple]:
        x, y, z = self.roots
        x1, x2, y1, y2, z1, z2 = self.externals
        return (
            tuple(sorted((x, x1, x2))),
            tuple(sorted((y, y1, y2))),
            tuple(sorted((z, z1, z2))),
        )

    def cross_edges(self) -> tuple[Triple, Triple]:
        x1, x2, y1, y2, z1, z2 = self.externals
        return (tuple(sorted((x1, y1, z1))), tuple(sorted((x2, y2, z2))))

    @property
    def edges(self) -> tuple[Triple, ...]:
        return self.rooted_edges() + self.cross_edges()


@dataclass(frozen=True)
class Absorber:
    """roots (x, y, z); level1 in role order (x1, x2, y1, y2, z1, z2)."""

    roots: tuple[int, int, int]
    level1: tuple[int, int, int, int, int, int]
    top: SubAbsorber
    bottom: SubAbsorber

    def __post_init__(self):
        x1, x2, y1, y2, z1, z2 = self.level1
        if self.top.roots != (x1, y1, z1) or self.bottom.roots != (x2, y2, z2):
            raise DomainError("sub-absorbers must be rooted on the level-1 triples")
        if len(self.vertex_set()) != 21:
            raise DomainError("absorber needs 21 distinct vertices")
        seen_pairs: set[tuple[int, int]] = set()
        for a, b, c in self.edges:
            for p in ((a, b), (a, c), (b, c)):
                if p in seen_pairs:
                    raise DomainError(f"edges share the pair {p}")
                seen_pairs.add(p)

    def rooted_edges(self) -> tuple[Triple, Triple, Triple]:
        x, y, z = self.roots
        x1, x2, y1, y2, z1, z2 = self.level1
        return (
            tuple(sorted((x, x1, x2))),
            tuple(sorted((y, y1, y2))),
            tuple(sorted((z, z1, z2))),
        )

    @property
    def edges(self) -> tuple[Triple, ...]:
        return self.rooted_edges() + self.top.edges + self.bottom.edges

    @property
    def externals(self) -> tuple[int, ...]:
        return self.level1 + self.top.externals + self.bottom.externals

    def vertex_set(self) -> frozenset[int]:
        return frozenset(self.roots) | frozenset(self.externals)

    def covering_matching(self) -> Matching:
        """7 edges covering the roots and all 18 externals."""
        return Matching.of(
            self.rooted_edges() + self.top.cross_edges() + self.bottom.cross_edges()
        )

    def noncovering_matching(self) -> Matching:
        """6 edges covering exactly the 18 externals."""
        return Matching.of(self.top.rooted_edges() + self.bottom.rooted_edges())


def _rooted_candidates(
    system: TripleSystem, root: int, blocked: set[int], forbidden: frozenset[int]
) -> list[tuple[int, int]]:
    """(p, q) other-vertex pairs of edges at root, usable and sorted."""
    out = []
    for eid in system.vertex_edges(root):
        a, b, c = system.edges[eid]
        p, q = (b, c) if a == root else (a, c) if b == root else (a, b)
        if p in blocked or q in blocked or p in forbidden or q in forbidden:
            continue
        out.append((p, q) if p < q else (q, p))
    out.sort()
    return out


def _check_roots(system: TripleSystem, roots: tuple[int, int, int]) -> None:
    if len(set(roots)) != 3:
        raise DomainError("roots must be three distinct vertices")
    for v in roots:
        system.degree(v)  # bounds check


def _find_sub(
    system: TripleSystem,
    roots: tuple[int, int, int],
    forb: frozenset[int],
    steps: _Steps,
) -> Optional[SubAbsorber]:
    x, y, z = roots
    blocked = set(roots)
    cand_x = _rooted_candidates(system, x, blocked, forb)
    cand_y = _rooted_candidates(system, y, blocked, forb)
    for px, qx in cand_x:
        for x1, x2 in ((px, qx), (qx, px)):
            for py, qy in cand_y:
                if not steps.tick():
                    return None
                if py == x1 or py == x2 or qy == x1 or qy == x2:
                    continue
                for y1, y2 in ((py, qy), (qy, py)):
                    used = {x, y, z, x1, x2, y1, y2}
                    for cross1_id in system.pair_edges(x1, y1):
                        t = system.edges[cross1_id]
                        z1 = t[0] + t[1] + t[2] - x1 - y1
                        if z1 in used or z1 in forb:
                            continue
                        for ez_id in system.pair_edges(z, z1):
                            t2 = system.edges[ez_id]
                            z2 = t2[0] + t2[1] + t2[2] - z - z1
                            if z2 in used or z2 == z1 or z2 in forb:
                                continue
                            if tuple(sorted((x2, y2, z2))) in system:
                                return SubAbsorber(roots, (x1, x2, y1, y2, z1, z2))
    return None


def find_sub_absorber(
    system: TripleSystem,
    x: int,
    y: int,
    z: int,
    forbidden: Iterable[int] = (),
    budget: Optional[int] = None,
) -> Optional[SubAbsorber]:
    """First-fit sub-absorber rooted on (x, y, z) with externals avoiding
    `forbidden`. None when the (budgeted) indexed search finds nothing.

    The search enumerates rooted edges at x and y with both orientations;
    the pair index then forces everything else: the cross edge through
    (x1, y1) names z1, the rooted edge through (z, z1) names z2, and the
    edge {x2, y2, z2} is a single membership probe.
    """
    roots = (x, y, z)
    _check_roots(system, roots)
    return _find_sub(system, roots, frozenset(forbidden) - set(roots), _Steps(budget))


def find_absorber(
    system: TripleSystem,
    x: int,
    y: int,
    z: int,
    forbidden: Iterable[int] = (),
    budget: Optional[int] = None,
) -> Optional[Absorber]:
    """First-fit full absorber rooted on (x, y, z), externals avoiding
    `forbidden`. None when the (budgeted) search finds nothing; the budget
    is shared with the nested sub-absorber searches."""
    roots = (x, y, z)
    _check_roots(system, roots)
    forb = frozenset(forbidden) - set(roots)
    steps = _Steps(budget)
    blocked = set(roots)
    cand_x = _rooted_candidates(system, x, blocked, forb)
    cand_y = _rooted_candidates(system, y, blocked, forb)
    cand_z = _rooted_candidates(system, z, blocked, forb)
    for px, qx in cand_x:
        for py, qy in cand_y:
            if not steps.tick():
                return None
            if py in (px, qx) or qy in (px, qx):
                continue
            used_xy = {px, qx, py, qy}
            for pz, qz in cand_z:
                if not steps.tick():
                    return None
                if pz in used_xy or qz in used_xy:
                    continue
                occupied = blocked | used_xy | {pz, qz}
                for x1, x2 in ((px, qx), (qx, px)):
                    for y1, y2 in ((py, qy), (qy, py)):
                        for z1, z2 in ((pz, qz), (qz, pz)):
                            if not steps.tick():
                                return None
                            top = _find_sub(
                                system,
                                (x1, y1, z1),
                                (forb | occupied) - {x1, y1, z1},
                                steps,
                            )
                            if top is None:
                                if steps.exhausted():
                                    return None
                                continue
                            bottom = _find_sub(
                                system,
                                (x2, y2, z2),
                                (forb | occupied | set(top.externals)) - {x2, y2, z2},
                                steps,
                            )
                            if bottom is None:
                                if steps.exhausted():
                                    return None
                                continue
                            return Absorber(roots, (x1, x2, y1, y2, z1, z2), top, bottom)
    return None


def contracted_absorber_check(absorber: Absorber) -> dict:
    """Contract each rooted edge to a vertex and audit the 10-edge result.

    Reports the maximum degree, the exact sparseness maximum
    max (e'-1)/(v'-3) over all edge subsets spanning > 3 vertices, and the
    minimum vertex spans of edge pairs and triples. A sound absorber gives
    max degree 2, sparseness < 1, pair spans >= 5, and triple spans >= 7.
    """
    label: dict[int, int] = {}
    for i, e in enumerate(absorber.rooted_edges()):
        for v in e:
            label[v] = i + 1
    nxt = 4
    for v in absorber.top.externals + absorber.bottom.externals:
        label[v] = nxt
        nxt += 1
    edges = [
        tuple(sorted(label[v] for v in e))
        for e in absorber.top.edges + absorber.bottom.edges
    ]
    contracted = TripleSystem(15, edges, kind="linear")
    max_deg = max(contracted.degree(v) for v in range(1, 16))
    worst = 0.0
    for r in range(1, len(edges) + 1):
        for combo in itertools.combinations(edges, r):
            span = len(set(v for e in combo for v in e))
            if span > 3:
                worst = max(worst, (r - 1) / (span - 3))
    pair_span = min(len(set(a) | set(b)) for a, b in itertools.combinations(edges, 2))
    triple_span = min(
        len(set(a) | set(b) | set(c)) for a, b, c in itertools.combinations(edges, 3)
    )
    return {
        "max_degree": max_deg,
        "m3": worst,
        "min_pair_span": pair_span,
        "min_triple_span": triple_span,
        "ok": max_deg <= 2 and worst < 1.0 and pair_span >= 5 and triple_span >= 7,
    }


def resilience_spotcheck(
    system: TripleSystem,
    degree_target: float,
    triple_samples: int,
    subgraph_samples: int,
    seed: int,
    search_budget: Optional[int] = 50_000,
) -> int:
    """Failures of rooted-absorber search over sampled resilient subgraphs.

    Each sampled spanning subgraph keeps every edge with probability tuned
    so the expected residual degree is 1.05 * degree_target, then re-adds
    deleted edges at degree-deficient vertices until the minimum degree
    reaches the target again. For each subgraph, triple_samples random
    root triples are probed with find_absorber; the return value counts
    the probes that found nothing. Vacuously 0 when no spanning subgraph
    can reach the target degree.
    """
    n = system.n
    if n < 3:
        return 0
    degs = [system.degree(v) for v in range(1, n + 1)]
    if min(degs) < degree_target:
        return 0  # no qualifying subgraph exists
    rng = random.Random(seed)
    mean_deg = sum(degs) / n
    keep = 1.0 if mean_deg <= 0 else min(1.0, max(0.0, 1.05 * degree_target / mean_deg))
    failures = 0
    m = len(system.edges)
    for _ in range(subgraph_samples):
        kept = [rng.random() < keep for _ in range(m)]
        deg = [0] * (n + 1)
        for eid, t in enumerate(system.edges):
            if kept[eid]:
                for v in t:
                    deg[v] += 1
        deleted_at: dict[int, list[int]] = {v: [] for v in range(1, n + 1)}
        for eid, t in enumerate(system.edges):
            if not kept[eid]:
                for v in t:
                    deleted_at[v].append(eid)
        deficient = [v for v in range(1, n + 1) if deg[v] < degree_target]
        while deficient:
            v = deficient.pop()
            while deg[v] < degree_target:
                pool = [eid for eid in deleted_at[v] if not kept[eid]]
                if not pool:
                    break  # cannot happen when min degree >= target
                eid = pool[rng.randrange(len(pool))]
                kept[eid] = True
                for u in system.edges[eid]:
                    deg[u] += 1
        sub = system.subsystem([eid for eid in range(m) if kept[eid]])
        for _ in range(triple_samples):
            roots = rng.sample(range(1, n + 1), 3)
            if find_absorber(sub, *roots, budget=search_budget) is None:
                failures += 1
    return failures


@dataclass(frozen=True)
class ResilientTemplate:
    """3-graph on 10q vertices with flexible set Z = {1..2q}, max degree
    <= 40, spot-verified to keep a perfect matching after deleting any
    half of Z.

    Layout: ports i < 3q own the vertex pair (2q+2i+1, 2q+2i+2); tails are
    8q+1..10q. Flex edges {z, a_i, b_i} let surviving flexibles consume a
    port; release edges {a_i, b_i, t} let a tail consume an unmatched
    port. Exactly 2q ports stay unmatched whichever half survives, which
    is why the tail count is 2q.
    """

    q: int
    edges: tuple[Triple, ...]
    flexible: tuple[int, ...]
    verified_removals: int
    exhaustive: bool
    seed: int

    def __post_init__(self):
        if self.flexible != tuple(range(1, 2 * self.q + 1)):
            raise DomainError("flexible set must be 1..2q")
        if self.max_degree() > 40:
            raise DomainError("template degree bound 40 violated")

    @property
    def n_vertices(self) -> int:
        return 10 * self.q

    def max_degree(self) -> int:
        deg = [0] * (self.n_vertices + 1)
        for t in self.edges:
            for v in t:
                deg[v] += 1
        return max(deg) if deg else 0

    def system(self) -> TripleSystem:
        return TripleSystem(self.n_vertices, self.edges, kind="general")

    def has_pm_after_removal(self, removed: Iterable[int]) -> bool:
        gone = set(removed)
        if not gone.issubset(set(self.flexible)):
            raise DomainError("removals must come from the flexible set")
        universe = set(range(1, self.n_vertices + 1)) - gone
        return find_perfect_matching(self.system(), vertices=universe) is not None


def _capped_sample(
    rng: random.Random, load: list[int], cap: int, count: int
) -> Optional[list[int]]:
    avail = [i for i in range(len(load)) if load[i] < cap]
    if len(avail) < count:
        return None
    picked = rng.sample(avail, count)
    for i in picked:
        load[i] += 1
    return picked


def build_template(
    q: int,
    seed: int,
    removal_samples: int = 200,
    max_attempts: int = 20,
) -> ResilientTemplate:
    """Random resilient template on 10q vertices, built and then verified.

    Flexibles get min(3q, 10) random ports each; tails get min(3q, q+6)
    random ports each (a tail needs more than q port-neighbors to survive
    an adversarial half-removal, which is what pins the q <= 34 range
    under the degree-40 cap). Per-port load caps keep every degree small.
    Verification is exhaustive over all half-removals for q <= 3 and
    sampled otherwise; a failed verification regenerates from the next
    derived seed, and exhausting max_attempts raises.
    """
    if q < 1:
        raise DomainError("template parameter q must be at least 1")
    n_ports = 3 * q
    dz = min(n_ports, 10)
    dt = min(n_ports, q + 6)
    if dt > 40:
        raise DomainError(
            f"q={q} needs tail degree {dt} > 40; construction range is q <= 34"
        )
    flex_cap = -(-2 * dz // 3) + 4
    rel_cap = -(-2 * dt // 3) + 3
    flex = list(range(1, 2 * q + 1))
    for attempt in range(max_attempts):
        rng = random.Random(seeding.spawn(seed, attempt))
        flex_load = [0] * n_ports
        rel_load = [0] * n_ports
        edges: list[Triple] = []
        ok = True
        for zv in flex:
            ports = _capped_sample(rng, flex_load, flex_cap, dz)
            if ports is None:
                ok = False
                break
            for i in sorted(ports):
                a, b = 2 * q + 2 * i + 1, 2 * q + 2 * i + 2
                edges.append(tuple(sorted((zv, a, b))))
        if ok:
            for j in range(2 * q):
                t = 8 * q + 1 + j
                ports = _capped_sample(rng, rel_load, rel_cap, dt)
                if ports is None:
                    ok = False
                    break
                for i in sorted(ports):
                    a, b = 2 * q + 2 * i + 1, 2 * q + 2 * i + 2
                    edges.append(tuple(sorted((a, b, t))))
        if not ok:
            continue
        deg = [0] * (10 * q + 1)
        for t3 in edges:
            for v in t3:
                deg[v] += 1
        if max(deg) > 40:
            continue
        exhaustive = q <= 3
        candidate = ResilientTemplate(
            q=q,
            edges=tuple(edges),
            flexible=tuple(flex),
            verified_removals=0,
            exhaustive=exhaustive,
            seed=seed,
        )
        if exhaustive:
            removals = [list(c) for c in itertools.combinations(flex, q)]
        else:
            removals = [rng.sample(flex, q) for _ in range(removal_samples)]
        if all(candidate.has_pm_after_removal(r) for r in removals):
            return ResilientTemplate(
                q=q,
                edges=candidate.edges,
                flexible=candidate.flexible,
                verified_removals=len(removals),
                exhaustive=exhaustive,
                seed=seed,
            )
    raise DomainError(f"template verification failed {max_attempts} times for q={q}")


@dataclass(frozen=True)
class AbsorbingStructure:
    """Externally vertex-disjoint absorbers rooted on the mapped edges of a
    resilient template. Template edges are bookkeeping only; the structure's
    edge set is the union of the absorbers' 13-edge sets."""

    host_n: int
    template: ResilientTemplate
    slot_map: tuple[int, ...]  # slot i (1-based) -> host vertex slot_map[i-1]
    flexible: tuple[int, ...]
    absorbers: tuple[tuple[Triple, Absorber], ...]  # (mapped template edge, absorber)

    def mapped_vertex(self, slot: int) -> int:
        return self.slot_map[slot - 1]

    def template_vertices(self) -> frozenset[int]:
        return frozenset(self.slot_map)

    def all_vertices(self) -> frozenset[int]:
        out = set(self.slot_map)
        for _, ab in self.absorbers:
            out.update(ab.externals)
        return frozenset(out)

    def all_edges(self) -> frozenset[Triple]:
        out: set[Triple] = set()
        for _, ab in self.absorbers:
            out.update(ab.edges)
        return frozenset(out)

    def edge_count(self) -> int:
        return sum(len(ab.edges) for _, ab in self.absorbers)

    def max_degree(self) -> int:
        deg: dict[int, int] = {}
        for _, ab in self.absorbers:
            for t in ab.edges:
                for v in t:
                    deg[v] = deg.get(v, 0) + 1
        return max(deg.values(), default=0)


def assemble_absorbing_structure(
    system: TripleSystem,
    flexible: Sequence[int],
    budget: Optional[int] = 200_000,
    seed: int = 0,
    removal_samples: int = 200,
) -> Optional[AbsorbingStructure]:
    """Greedy absorbing structure over a flexible set Z of the host.

    Builds a resilient template with |Z| = 2q flexibles, maps its slots
    onto host vertices (flexible slots onto Z, helpers onto fresh random
    vertices), then roots an externally disjoint absorber on every mapped
    template edge. None as soon as one greedy absorber search fails or
    runs out of budget.
    """
    z = sorted(set(flexible))
    if len(z) < 2 or len(z) % 2 != 0:
        raise DomainError("flexible set must have even size >= 2")
    for v in z:
        system.degree(v)
    q = len(z) // 2
    if 10 * q > system.n:
        raise DomainError(f"host has {system.n} vertices; template needs {10 * q}")
    template = build_template(q, seeding.spawn(seed, 0), removal_samples=removal_samples)
    rng = random.Random(seeding.spawn(seed, 1))
    others = sorted(set(range(1, system.n + 1)) - set(z))
    helpers = rng.sample(others, 8 * q)
    slot_map = tuple(z) + tuple(helpers)
    template_vertices = set(slot_map)
    used_externals: set[int] = set()
    absorbers: list[tuple[Triple, Absorber]] = []
    for t in template.edges:
        roots = tuple(sorted(slot_map[s - 1] for s in t))
        forb = (template_vertices | used_externals) - set(roots)
        ab = find_absorber(
            system, roots[0], roots[1], roots[2], forbidden=forb, budget=budget
        )
        if ab is None:
            return None
        used_externals.update(ab.externals)
        absorbers.append((roots, ab))
    return AbsorbingStructure(
        host_n=system.n,
        template=template,
        slot_map=slot_map,
        flexible=tuple(z),
        absorbers=tuple(absorbers),
    )


def complete_via_structure(
    structure: AbsorbingStructure,
    matching: Matching,
    universe: Optional[Iterable[int]] = None,
) -> Matching:
    """Extend a matching covering everything outside the structure (plus
    exactly half of the flexible set) to a perfect matching of the universe.

    The uncovered flexible half is carried by the template: a perfect
    matching of the template minus the covered half selects which
    absorbers contribute their covering matching; all others contribute
    their non-covering matching.
    """
    uni = set(range(1, structure.host_n + 1)) if universe is None else set(universe)
    v_struct = structure.all_vertices()
    z = set(structure.flexible)
    covered = matching.vertices()
    if not covered <= uni:
        raise DomainError("matching leaves the stated universe")
    outside = uni - v_struct
    missing = outside - covered
    if missing:
        raise DomainError(
            "matching must cover every vertex outside the structure; "
            f"missing {sorted(missing)[:8]}"
        )
    overlap = covered & (v_struct - z)
    if overlap:
        raise DomainError(
            f"matching touches non-flexible structure vertices {sorted(overlap)[:8]}"
        )
    z_covered = covered & z
    if 2 * len(z_covered) != len(z):
        raise DomainError(
            "matching must cover exactly half of the flexible set "
            f"({len(z_covered)} of {len(z)} covered)"
        )
    struct_edges = structure.all_edges()
    for t in matching:
        if t in struct_edges:
            raise DomainError(f"matching reuses structure edge {t}")
    # Template matching on the uncovered side.
    mapped_edges = [roots for roots, _ in structure.absorbers]
    remaining = set(structure.slot_map) - z_covered
    tmpl_system = TripleSystem(structure.host_n, sorted(set(mapped_edges)), kind="general")
    tmpl_pm = find_perfect_matching(tmpl_system, vertices=remaining)
    if tmpl_pm is None:
        raise DomainError("template lost its matching property for this half-removal")
    chosen = set(tmpl_pm.edges)
    out: list[Triple] = list(matching.edges)
    for roots, ab in structure.absorbers:
        if roots in chosen:
            out.extend(ab.covering_matching().edges)
        else:
            out.extend(ab.noncovering_matching().edges)
    result = Matching.of(out)
    if result.vertices() != uni:
        raise DomainError("completion does not cover the universe exactly")
    return result
