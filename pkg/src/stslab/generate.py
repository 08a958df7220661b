"""Random generation of (partial) Steiner triple systems.

Four ensembles live here: the iterative triangle removal process on the
leave graph, the binomial random 3-graph, a coupling that thins a binomial
sample down to edges addable to a given partial system, and a hill-climb
completion that produces full systems ("hill-climb ensemble"; not claimed
uniform over STS(n)).
"""

from __future__ import annotations

import bisect
import math
import random
from dataclasses import dataclass
from typing import Optional, Sequence

from .core import (
    DomainError,
    LeaveGraph,
    OrderedPartialSTS,
    Triple,
    TripleSystem,
    pair_key,
    sts_admissible,
)

__all__ = [
    "TrpOutcome",
    "CouplingReport",
    "triangle_removal",
    "triangle_removal_from",
    "sample_binomial_3graph",
    "couple",
    "complete_to_sts",
]


@dataclass(frozen=True)
class TrpOutcome:
    """Result of a triangle removal run.

    aborted means the process hit a triangle-free leave graph before
    completing its m steps; the system still records the progress made.
    """

    system: OrderedPartialSTS
    aborted: bool
    steps_completed: int
    leave: LeaveGraph

    @property
    def result(self) -> Optional[OrderedPartialSTS]:
        return None if self.aborted else self.system


@dataclass(frozen=True)
class CouplingReport:
    n: int
    alpha: float
    q: float
    g_edge_count: int
    y: int
    target: float
    success: bool
    seed: int
    survivors: tuple[Triple, ...]


class _RemovalState:
    """Mutable leave graph driving the removal process.

    Keeps per-vertex adjacency bitmasks plus a flat list of present pairs
    with positions for O(1) swap-pop removal.
    """

    __slots__ = ("n", "adj", "pairs", "pos")

    def __init__(self, leave: LeaveGraph):
        self.n = leave.n
        self.adj = list(leave.masks())
        self.pairs: list[tuple[int, int]] = list(leave.pairs())
        self.pos = {p: i for i, p in enumerate(self.pairs)}

    def remove_pair(self, a: int, b: int) -> None:
        p = pair_key(a, b)
        i = self.pos.pop(p)
        last = self.pairs.pop()
        if last != p:
            self.pairs[i] = last
            self.pos[last] = i
        self.adj[a - 1] &= ~(1 << (b - 1))
        self.adj[b - 1] &= ~(1 << (a - 1))

    def remove_triangle(self, t: Triple) -> None:
        a, b, c = t
        self.remove_pair(a, b)
        self.remove_pair(a, c)
        self.remove_pair(b, c)

    def enumerate_triangles(self) -> list[Triple]:
        out = []
        for a, b in self.pairs:
            # Third vertex restricted to labels above b so each triangle
            # appears exactly once (pairs are stored with a < b).
            m = self.adj[a - 1] & ((self.adj[b - 1] >> b) << b)
            while m:
                low = m & -m
                out.append((a, b, low.bit_length()))
                m ^= low
        return out

    def sample_triangle(self, rng: random.Random, max_tries: int = 200) -> Optional[Triple]:
        """Exactly uniform triangle of the current leave graph, or None.

        Rejection with weight correction: a uniform present pair, accepted
        with probability (common neighbor count)/(n-2), then a uniform
        common neighbor. Every triangle lands with probability
        3/(#pairs * (n-2)). A capped number of rejections falls back to
        exhaustive enumeration (also exactly uniform) to stay finite near
        triangle-free states.
        """
        if not self.pairs or self.n < 3:
            return None
        bound = self.n - 2
        for _ in range(max_tries):
            a, b = self.pairs[rng.randrange(len(self.pairs))]
            common = self.adj[a - 1] & self.adj[b - 1]
            count = common.bit_count()
            if count == 0:
                continue
            if rng.random() * bound >= count:
                continue
            k = rng.randrange(count)
            m = common
            for _ in range(k):
                m &= m - 1
            c = (m & -m).bit_length()
            t = tuple(sorted((a, b, c)))
            return t  # type: ignore[return-value]
        triangles = self.enumerate_triangles()
        if not triangles:
            return None
        return triangles[rng.randrange(len(triangles))]

    def snapshot(self) -> LeaveGraph:
        return LeaveGraph(self.n, self.adj)


def triangle_removal_from(
    start: TripleSystem | OrderedPartialSTS, m: int, seed: int
) -> TrpOutcome:
    """Extend a partial system by m uniformly random triangle removals.

    Each step deletes a uniformly random triangle from the current leave
    graph and records it as an edge. Aborts (with the progress so far) if
    the leave graph becomes triangle-free early.
    """
    base = start.base if isinstance(start, OrderedPartialSTS) else start
    if base.kind == "general":
        raise DomainError("triangle removal needs a linear starting system")
    if m < 0:
        raise DomainError("step count must be nonnegative")
    capacity = base.n * (base.n - 1) // 2 // 3 - len(base.edges)
    if m > capacity:
        raise DomainError(f"m={m} exceeds the {capacity} edges the pair budget allows")
    rng = random.Random(seed)
    state = _RemovalState(base.leave_graph())
    new_edges: list[Triple] = list(base.edges)
    steps = 0
    aborted = False
    for _ in range(m):
        t = state.sample_triangle(rng)
        if t is None:
            aborted = True
            break
        state.remove_triangle(t)
        new_edges.append(t)
        steps += 1
    system = TripleSystem(base.n, new_edges, kind="linear")
    ordered = OrderedPartialSTS(system, tuple(range(len(new_edges))))
    return TrpOutcome(ordered, aborted, steps, state.snapshot())


def triangle_removal(n: int, m: int, seed: int) -> TrpOutcome:
    """Run the removal process from the empty system on [n]."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    return triangle_removal_from(TripleSystem(n, [], kind="linear"), m, seed)


def _comb3_table(n: int) -> list[int]:
    return [math.comb(i, 3) for i in range(n + 1)]


def _unrank_triple(rank: int, comb3: Sequence[int]) -> Triple:
    """Colex unranking of 3-subsets of {0, ..., n-1}, returned 1-indexed."""
    c = bisect.bisect_right(comb3, rank) - 1
    rank -= comb3[c]
    b = 1
    while (b + 1) * b // 2 <= rank:
        b += 1
    rank -= b * (b - 1) // 2
    a = rank
    return (a + 1, b + 1, c + 1)


def _bernoulli_ranks(rng: random.Random, total: int, p: float) -> list[int]:
    """Positions of successes among `total` independent Bernoulli(p) trials.

    Geometric gap skipping; O(p * total) work, exact per-trial law.
    """
    if p <= 0.0 or total == 0:
        return []
    if p >= 1.0:
        return list(range(total))
    log1mp = math.log1p(-p)
    out = []
    i = -1
    while True:
        u = rng.random()
        # u == 0 would mean an infinite gap; the next draw caps it.
        while u <= 0.0:
            u = rng.random()
        i += 1 + int(math.log(u) / log1mp)
        if i >= total:
            return out
        out.append(i)


def sample_binomial_3graph(n: int, p: float, seed: int) -> TripleSystem:
    """Binomial random 3-graph: each triple present independently with prob p."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"edge probability {p} outside [0, 1]")
    rng = random.Random(seed)
    total = math.comb(n, 3)
    comb3 = _comb3_table(n)
    edges = [_unrank_triple(r, comb3) for r in _bernoulli_ranks(rng, total, p)]
    return TripleSystem(n, edges, kind="general")


def couple(system: TripleSystem, alpha: float, seed: int) -> CouplingReport:
    """Thin a binomial sample down to edges addable to the given system.

    Draws G ~ binomial 3-graph with q = alpha(1 + 10 alpha)/n and keeps the
    G-edges sharing no pair with an edge of the system nor with another
    G-edge. The survivor count y is compared against alpha * C(n,2)/3.
    """
    if system.kind == "general":
        raise DomainError("coupling needs a linear host system")
    n = system.n
    if alpha < 0:
        raise DomainError("alpha must be nonnegative")
    if n == 0:
        q = 0.0
    else:
        q = alpha * (1.0 + 10.0 * alpha) / n
    if q >= 1.0:
        raise DomainError(f"alpha={alpha} gives edge probability q={q:.4f} >= 1 at n={n}")
    g = sample_binomial_3graph(n, q, seed)
    pair_load: dict[tuple[int, int], int] = {}
    for a, b, c in g.edges:
        for p in ((a, b), (a, c), (b, c)):
            pair_load[p] = pair_load.get(p, 0) + 1
    survivors = []
    for t in g.edges:
        a, b, c = t
        ok = True
        for p in ((a, b), (a, c), (b, c)):
            if pair_load[p] > 1 or p in system.pair_index:
                ok = False
                break
        if ok:
            survivors.append(t)
    target = alpha * (n * (n - 1) // 2) / 3.0
    y = len(survivors)
    return CouplingReport(
        n=n,
        alpha=alpha,
        q=q,
        g_edge_count=len(g.edges),
        y=y,
        target=target,
        success=y >= target,
        seed=seed,
        survivors=tuple(survivors),
    )


def complete_to_sts(n: int, seed: int, max_iters: Optional[int] = None) -> Optional[TripleSystem]:
    """Hill-climb a full STS(n); None if the move budget runs out.

    Moves pick a uniformly random uncovered pair {x, y} and a partner z with
    {x, z} also uncovered, insert {x, y, z}, and evict the block covering
    {y, z} if one exists. The covered-pair count never decreases. A stall of
    n^2 moves without progress restarts from scratch (same stream).
    """
    if not sts_admissible(n):
        raise DomainError(f"no STS({n}) exists: n must be 1 or 3 mod 6")
    if max_iters is None:
        max_iters = max(10_000, 60 * n * n)
    rng = random.Random(seed)
    if n == 1:
        return TripleSystem(1, [], kind="sts")
    if n == 3:
        return TripleSystem(3, [(1, 2, 3)], kind="sts")

    moves = 0
    while moves < max_iters:
        cov: dict[tuple[int, int], Triple] = {}
        uncovered: list[tuple[int, int]] = [
            (a, b) for a in range(1, n + 1) for b in range(a + 1, n + 1)
        ]
        pos = {p: i for i, p in enumerate(uncovered)}
        live = [0] * (n + 1)  # bitmask of partners with an uncovered pair
        full = (1 << n) - 1
        for v in range(1, n + 1):
            live[v] = full ^ (1 << (v - 1))
        blocks: set[Triple] = set()

        def cover(a: int, b: int, block: Triple) -> None:
            p = pair_key(a, b)
            i = pos.pop(p)
            last = uncovered.pop()
            if last != p:
                uncovered[i] = last
                pos[last] = i
            live[a] &= ~(1 << (b - 1))
            live[b] &= ~(1 << (a - 1))
            cov[p] = block

        def uncover(a: int, b: int) -> None:
            p = pair_key(a, b)
            pos[p] = len(uncovered)
            uncovered.append(p)
            live[a] |= 1 << (b - 1)
            live[b] |= 1 << (a - 1)
            del cov[p]

        stall = 0
        stall_limit = n * n
        while uncovered and moves < max_iters and stall < stall_limit:
            moves += 1
            x, y = uncovered[rng.randrange(len(uncovered))]
            if rng.random() < 0.5:
                x, y = y, x
            options = live[x] & ~(1 << (y - 1))
            count = options.bit_count()
            if count == 0:
                # Cannot happen for odd n (uncovered degree is even), but
                # stay safe: try the other endpoint.
                x, y = y, x
                options = live[x] & ~(1 << (y - 1))
                count = options.bit_count()
                if count == 0:
                    stall += 1
                    continue
            k = rng.randrange(count)
            m = options
            for _ in range(k):
                m &= m - 1
            z = (m & -m).bit_length()
            block = tuple(sorted((x, y, z)))  # type: ignore[assignment]
            before = len(uncovered)
            evicted = cov.get(pair_key(y, z))
            if evicted is not None:
                blocks.discard(evicted)
                ea, eb, ec = evicted
                for u, v in ((ea, eb), (ea, ec), (eb, ec)):
                    uncover(u, v)
            blocks.add(block)  # type: ignore[arg-type]
            cover(x, y, block)  # type: ignore[arg-type]
            cover(x, z, block)  # type: ignore[arg-type]
            cover(y, z, block)  # type: ignore[arg-type]
            if len(uncovered) < before:
                stall = 0
            else:
                stall += 1
        if not uncovered:
            return TripleSystem(n, sorted(blocks), kind="sts")
    return None
