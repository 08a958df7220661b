"""Randomized edge/vertex partition into bundles (G_i, H_i, F_i, Q).

For a linear system S on [n] and a parameter delta, each vertex joins W_i
independently with probability delta for each of ell rounds (U_i is the
complement). Each edge is then routed in one pass: edges inside a unique
W_i become F_i edges (inside several: junk Q); surviving edges draw one
uniform round index i and one coin — with probability p_H/(1-p_F) they
must be bridge-shaped at i (one vertex in U_i, two in W_i) to enter H_i,
otherwise they must lie inside U_i to enter G_i; every misfit lands in Q.
The coin rates make the three routes hit an edge with probabilities
p_F = 1-(1-delta^3)^ell, p_H = 2*sqrt(delta)-p_F, p_G = 1-2*sqrt(delta).

The nominal round count delta^(-5/2) explodes for small delta, so ell is
capped at max(1, n // 30) — below that, |W_i| is too small for the degree
properties to mean anything — and the bundle records when the cap binds.

audit_partition re-checks the construction invariants and scores the six
distributional properties a good partition is supposed to have. Several
of them are asymptotic and fail honestly at small n; the audit reports,
it never repairs.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional

from .core import DomainError, TripleSystem
from . import seeding


@dataclass(frozen=True)
class PartitionBundle:
    """One partition of E(S) into 3*ell + 1 parts, plus its parameters.

    G, H, F hold frozensets of edge ids (indexed by round); Q is the
    junk part. U[i] and W[i] partition [n] for every round i.
    """

    n: int
    m: int
    delta: float
    ell: int
    ell_uncapped: int
    cap_binding: bool
    p_f: float
    p_h: float
    p_g: float
    U: tuple[frozenset[int], ...]
    W: tuple[frozenset[int], ...]
    G: tuple[frozenset[int], ...]
    H: tuple[frozenset[int], ...]
    F: tuple[frozenset[int], ...]
    Q: frozenset[int]
    in_w: frozenset[int]  # edge ids inside >= 1 of the W_i (the p_F event)
    kappa: float
    seed: int

    def covered_fraction(self) -> float:
        """Fraction of edges landing in some G_i."""
        return sum(len(g) for g in self.G) / self.m if self.m else 0.0

    def in_w_count(self) -> int:
        return len(self.in_w)

    def part_sizes(self) -> dict:
        return {
            "G": [len(s) for s in self.G],
            "H": [len(s) for s in self.H],
            "F": [len(s) for s in self.F],
            "Q": len(self.Q),
        }

    def g_system(self, system: TripleSystem, i: int) -> TripleSystem:
        return system.subsystem(sorted(self.G[i]))

    def h_system(self, system: TripleSystem, i: int) -> TripleSystem:
        return system.subsystem(sorted(self.H[i]))

    def f_system(self, system: TripleSystem, i: int) -> TripleSystem:
        return system.subsystem(sorted(self.F[i]))


def _assert_exact_partition(bundle: PartitionBundle) -> None:
    seen: set[int] = set()
    total = 0
    for group in (bundle.G, bundle.H, bundle.F):
        for part in group:
            total += len(part)
            seen |= part
    total += len(bundle.Q)
    seen |= bundle.Q
    if total != bundle.m or seen != set(range(bundle.m)):
        raise AssertionError(
            f"parts do not partition the edge ids: {total} assignments over "
            f"{len(seen)} distinct ids, expected {bundle.m}"
        )


def good_partition(
    system: TripleSystem, delta: float, seed: int, kappa: float = 0.01
) -> PartitionBundle:
    """Sample the randomized partition. Deterministic given (S, delta, seed).

    Requires a linear system and 0 < delta < 0.25 (so that p_G > 0).
    """
    if system.kind == "general":
        raise DomainError("partitioning requires a linear system")
    if not (0.0 < delta and 2.0 * math.sqrt(delta) < 1.0):
        raise DomainError(f"delta={delta} outside (0, 0.25): need 2*sqrt(delta) < 1")
    n, m = system.n, len(system.edges)
    ell_uncapped = math.ceil(delta ** -2.5)
    cap = max(1, n // 30)
    ell = min(ell_uncapped, cap)
    p_f = 1.0 - (1.0 - delta**3) ** ell
    p_g = 1.0 - 2.0 * math.sqrt(delta)
    p_h = 2.0 * math.sqrt(delta) - p_f
    if p_h < 0.0:
        raise DomainError(f"delta={delta}: bridge rate p_H={p_h} negative")
    rng = random.Random(seed)
    wmask = [0] * (n + 1)
    for i in range(ell):
        bit = 1 << i
        for v in range(1, n + 1):
            if rng.random() < delta:
                wmask[v] |= bit
    w_sets = tuple(
        frozenset(v for v in range(1, n + 1) if wmask[v] >> i & 1) for i in range(ell)
    )
    u_sets = tuple(frozenset(range(1, n + 1)) - w for w in w_sets)
    g_parts: list[set[int]] = [set() for _ in range(ell)]
    h_parts: list[set[int]] = [set() for _ in range(ell)]
    f_parts: list[set[int]] = [set() for _ in range(ell)]
    junk: set[int] = set()
    inside_some_w: set[int] = set()
    h_rate = p_h / (1.0 - p_f) if p_f < 1.0 else 0.0
    for eid, (a, b, c) in enumerate(system.edges):
        contained = wmask[a] & wmask[b] & wmask[c]
        if contained:
            inside_some_w.add(eid)
            if contained.bit_count() == 1:
                f_parts[contained.bit_length() - 1].add(eid)
            else:
                junk.add(eid)
            continue
        i = rng.randrange(ell)
        coin = rng.random()
        in_w = (wmask[a] >> i & 1) + (wmask[b] >> i & 1) + (wmask[c] >> i & 1)
        if coin < h_rate:
            if in_w == 2:
                h_parts[i].add(eid)
            else:
                junk.add(eid)
        else:
            if in_w == 0:
                g_parts[i].add(eid)
            else:
                junk.add(eid)
    bundle = PartitionBundle(
        n=n,
        m=m,
        delta=delta,
        ell=ell,
        ell_uncapped=ell_uncapped,
        cap_binding=ell < ell_uncapped,
        p_f=p_f,
        p_h=p_h,
        p_g=p_g,
        U=u_sets,
        W=w_sets,
        G=tuple(frozenset(s) for s in g_parts),
        H=tuple(frozenset(s) for s in h_parts),
        F=tuple(frozenset(s) for s in f_parts),
        Q=frozenset(junk),
        in_w=frozenset(inside_some_w),
        kappa=kappa,
        seed=seed,
    )
    _assert_exact_partition(bundle)
    return bundle


@dataclass(frozen=True)
class PartitionAudit:
    """Six property verdicts plus the numbers behind them.

    partition_exact and shapes_ok re-verify construction invariants (a
    False there means a bug, not bad luck). The six lettered properties
    are distributional: cover fraction, |W_i| concentration, G_i degree
    regularity, F_i density, bridge supply in H_i, and F_i resilience
    spot-checks. Asymptotic slack defaults to 10% of each leading term.
    """

    partition_exact: bool
    shapes_ok: bool
    p1_cover: bool
    p2_sizes: bool
    p3_g_regular: bool
    p4_f_dense: bool
    p5_bridges: bool
    p6_resilient: bool
    alpha_hat: float
    stats: dict

    def property_flags(self) -> tuple[bool, bool, bool, bool, bool, bool]:
        return (
            self.p1_cover,
            self.p2_sizes,
            self.p3_g_regular,
            self.p4_f_dense,
            self.p5_bridges,
            self.p6_resilient,
        )

    def all_pass(self) -> bool:
        return self.partition_exact and self.shapes_ok and all(self.property_flags())


def audit_partition(
    bundle: PartitionBundle,
    system: TripleSystem,
    slack: float = 0.1,
    bridge_factor: float = 0.5,
    resilience_subgraphs: int = 1,
    resilience_triples: int = 1,
    seed: int = 0,
    search_budget: Optional[int] = 20_000,
    spotcheck_resilience: bool = True,
) -> PartitionAudit:
    """Score a bundle against the six good-partition properties.

    alpha is estimated from the system's mean degree rather than passed
    in. Properties 3 and 5 in particular are asymptotic statements; at
    desk scale their thresholds routinely fail and the audit says so.
    Property 6 samples: delete floor(kappa*n) random vertices from each
    W_i, then run absorber spot-checks on what remains of F_i at the
    density target 0.9995 * alpha * delta^2 * n/2.
    """
    from .absorbers import resilience_spotcheck

    if bundle.m != len(system.edges) or bundle.n != system.n:
        raise DomainError("bundle does not describe this system")
    n = bundle.n
    delta = bundle.delta
    alpha_hat = system.estimate_alpha()
    try:
        _assert_exact_partition(bundle)
        partition_exact = True
    except AssertionError:
        partition_exact = False
    shapes_ok = True
    for i in range(bundle.ell):
        w, u = bundle.W[i], bundle.U[i]
        if w | u != set(range(1, n + 1)) or w & u:
            shapes_ok = False
        for eid in bundle.G[i]:
            if not u.issuperset(system.edges[eid]):
                shapes_ok = False
        for eid in bundle.F[i]:
            if not w.issuperset(system.edges[eid]):
                shapes_ok = False
        for eid in bundle.H[i]:
            t = system.edges[eid]
            if sum(1 for v in t if v in w) != 2:
                shapes_ok = False
    # Property 1: cover fraction.
    cover = bundle.covered_fraction()
    cover_need = 1.0 - 3.0 * math.sqrt(delta)
    p1 = cover >= cover_need
    # Property 2: |W_i| near delta*n.
    w_sizes = [len(w) for w in bundle.W]
    w_band = slack * delta * n
    p2 = all(abs(s - delta * n) <= w_band for s in w_sizes)
    # Property 3: G_i degrees near the regular value.
    g_center = alpha_hat * (1 - delta) ** 2 * (1 - 2 * math.sqrt(delta)) / bundle.ell * n / 2
    g_band = slack * g_center
    g_min, g_max = math.inf, -math.inf
    for i in range(bundle.ell):
        deg: dict[int, int] = {v: 0 for v in bundle.U[i]}
        for eid in bundle.G[i]:
            for v in system.edges[eid]:
                deg[v] += 1
        if deg:
            g_min = min(g_min, min(deg.values()))
            g_max = max(g_max, max(deg.values()))
    if g_min is math.inf:
        g_min = g_max = 0
    p3 = g_center - g_band <= g_min and g_max <= g_center + g_band
    # Property 4: F_i minimum degree.
    f_floor = 0.9999 * alpha_hat * delta**2 * n / 2
    f_min = math.inf
    for i in range(bundle.ell):
        deg = {v: 0 for v in bundle.W[i]}
        for eid in bundle.F[i]:
            for v in system.edges[eid]:
                deg[v] += 1
        if deg:
            f_min = min(f_min, min(deg.values()))
    if f_min is math.inf:
        f_min = 0
    p4 = f_min >= f_floor
    # Property 5: bridge supply at every U_i vertex.
    bridge_floor = bridge_factor * alpha_hat * (n / 2) * delta**2 * (1 - delta) * bundle.p_h / bundle.ell
    bridge_min = math.inf
    for i in range(bundle.ell):
        cnt = {v: 0 for v in bundle.U[i]}
        for eid in bundle.H[i]:
            for v in system.edges[eid]:
                if v in cnt:
                    cnt[v] += 1
        if cnt:
            bridge_min = min(bridge_min, min(cnt.values()))
    if bridge_min is math.inf:
        bridge_min = 0
    p5 = bridge_min >= bridge_floor
    # Property 6: resilience spot-checks on each F_i after a kappa*n deletion.
    d_target = 0.9995 * alpha_hat * delta**2 * n / 2
    resilience_failures = 0
    spotchecked = 0
    if spotcheck_resilience:
        drop = math.floor(bundle.kappa * n)
        for i in range(bundle.ell):
            w = sorted(bundle.W[i])
            rng = random.Random(seeding.spawn(seed, i))
            keep = w
            if drop and len(w) - drop >= 3:
                gone = set(rng.sample(w, drop))
                keep = [v for v in w if v not in gone]
            if len(keep) < 3:
                continue
            f_sub = system.subsystem(sorted(bundle.F[i]))
            induced, _ = f_sub.induced(keep)
            spotchecked += 1
            resilience_failures += resilience_spotcheck(
                induced,
                d_target,
                triple_samples=resilience_triples,
                subgraph_samples=resilience_subgraphs,
                seed=seeding.spawn(seed, 1000 + i),
                search_budget=search_budget,
            )
    p6 = resilience_failures == 0
    stats = {
        "cover_fraction": cover,
        "cover_need": cover_need,
        "w_sizes": w_sizes,
        "w_target": delta * n,
        "w_band": w_band,
        "g_degree_min": g_min,
        "g_degree_max": g_max,
        "g_center": g_center,
        "g_band": g_band,
        "f_degree_min": f_min,
        "f_floor": f_floor,
        "bridge_min": bridge_min,
        "bridge_floor": bridge_floor,
        "resilience_failures": resilience_failures,
        "resilience_spotchecked": spotchecked,
        "d_target": d_target,
        "part_sizes": bundle.part_sizes(),
        "in_w_count": bundle.in_w_count(),
        "p_f": bundle.p_f,
        "cap_binding": bundle.cap_binding,
    }
    return PartitionAudit(
        partition_exact=partition_exact,
        shapes_ok=shapes_ok,
        p1_cover=p1,
        p2_sizes=p2,
        p3_g_regular=p3,
        p4_f_dense=p4,
        p5_bridges=p5,
        p6_resilient=p6,
        alpha_hat=alpha_hat,
        stats=stats,
    )
