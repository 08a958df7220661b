"""Triple systems on a ground set [n], their leave graphs, and matchings.

Vertices are 1-indexed everywhere in the public API (file formats included);
bitset internals are 0-indexed. A triple system is immutable once built.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

Triple = tuple[int, int, int]
Pair = tuple[int, int]

KINDS = ("general", "linear", "sts")


class DomainError(ValueError):
    """An argument violates an operation's stated precondition."""


class BudgetExceeded(RuntimeError):
    """A bounded search ran out of its node budget."""


def sts_admissible(n: int) -> bool:
    """True iff a full STS(n) can exist (n = 1 or 3 mod 6)."""
    return n % 6 in (1, 3)


def pair_key(a: int, b: int) -> Pair:
    return (a, b) if a < b else (b, a)


def normalize_triple(t: Sequence[int]) -> Triple:
    a, b, c = sorted(t)
    if a == b or b == c:
        raise DomainError(f"triple {tuple(t)} has a repeated vertex")
    return (a, b, c)


class TripleSystem:
    """A 3-uniform hypergraph on [n].

    kind="general" allows a pair of vertices in many edges, kind="linear"
    demands every pair lie in at most one edge, kind="sts" demands exactly
    one. Duplicate triples are rejected for every kind. The mandatory
    pair index maps each covered pair to the ids of the edges covering it.
    """

    __slots__ = ("n", "kind", "edges", "pair_index", "_vertex_edges", "_edge_set")

    def __init__(self, n: int, edges: Iterable[Sequence[int]], kind: str = "linear"):
        if not isinstance(n, int) or n < 0:
            raise DomainError(f"ground set size must be a nonnegative int, got {n!r}")
        if kind not in KINDS:
            raise DomainError(f"kind must be one of {KINDS}, got {kind!r}")
        norm: list[Triple] = []
        seen: set[Triple] = set()
        pair_index: dict[Pair, tuple[int, ...]] = {}
        vertex_edges: list[list[int]] = [[] for _ in range(n + 1)]
        for eid, raw in enumerate(edges):
            t = normalize_triple(raw)
            if t[2] > n or t[0] < 1:
                raise DomainError(f"edge {t} falls outside [1, {n}]")
            if t in seen:
                raise DomainError(f"duplicate edge {t}")
            seen.add(t)
            norm.append(t)
            a, b, c = t
            for p in ((a, b), (a, c), (b, c)):
                prev = pair_index.get(p)
                if prev is not None and kind != "general":
                    raise DomainError(
                        f"pair {p} covered twice (edges {norm[prev[0]]} and {t}); "
                        f"not allowed in a {kind} system"
                    )
                pair_index[p] = (prev + (eid,)) if prev else (eid,)
            for v in t:
                vertex_edges[v].append(eid)
        if kind == "sts":
            if not sts_admissible(n):
                raise DomainError(f"no STS({n}) exists: n must be 1 or 3 mod 6")
            want = n * (n - 1) // 6
            if len(norm) != want or len(pair_index) != n * (n - 1) // 2:
                raise DomainError(
                    f"not an STS({n}): {len(norm)} edges covering "
                    f"{len(pair_index)} pairs (need {want} edges, all pairs)"
                )
        self.n = n
        self.kind = kind
        self.edges: tuple[Triple, ...] = tuple(norm)
        self.pair_index = pair_index
        self._vertex_edges = tuple(tuple(ids) for ids in vertex_edges)
        self._edge_set = seen

    # -- basic accessors -------------------------------------------------

    def __len__(self) -> int:
        return len(self.edges)

    def __contains__(self, t: Sequence[int]) -> bool:
        return tuple(sorted(t)) in self._edge_set

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TripleSystem):
            return NotImplemented
        return self.n == other.n and self.edges == other.edges

    def __hash__(self):
        return hash((self.n, self.edges))

    def __repr__(self) -> str:
        return f"TripleSystem(n={self.n}, m={len(self.edges)}, kind={self.kind!r})"

    def edge_set(self) -> frozenset[Triple]:
        return frozenset(self._edge_set)

    def vertex_edges(self, v: int) -> tuple[int, ...]:
        self._check_vertex(v)
        return self._vertex_edges[v]

    def _check_vertex(self, v: int) -> None:
        if not isinstance(v, int) or not 1 <= v <= self.n:
            raise DomainError(f"vertex {v!r} outside [1, {self.n}]")

    # -- degrees and counts ----------------------------------------------

    def degree(self, v: int) -> int:
        """Number of edges containing v."""
        self._check_vertex(v)
        return len(self._vertex_edges[v])

    def degree_into(self, v: int, subset: Iterable[int]) -> int:
        """Number of edges {v, a, b} with both a and b in the subset."""
        self._check_vertex(v)
        inside = set(subset)
        count = 0
        for eid in self._vertex_edges[v]:
            a, b, c = self.edges[eid]
            if a == v:
                ok = b in inside and c in inside
            elif b == v:
                ok = a in inside and c in inside
            else:
                ok = a in inside and b in inside
            if ok:
                count += 1
        return count

    def pair_edges(self, a: int, b: int) -> tuple[int, ...]:
        """Ids of the edges covering the pair {a, b} (possibly empty)."""
        self._check_vertex(a)
        self._check_vertex(b)
        if a == b:
            raise DomainError(f"pair ({a}, {b}) is degenerate")
        return self.pair_index.get(pair_key(a, b), ())

    def third_vertex(self, a: int, b: int) -> Optional[int]:
        """Third vertex of the unique edge covering {a, b}, for linear systems."""
        if self.kind == "general":
            raise DomainError("third_vertex is only defined for linear systems")
        ids = self.pair_edges(a, b)
        if not ids:
            return None
        t = self.edges[ids[0]]
        return t[0] + t[1] + t[2] - a - b

    def e_triple(self, xs: Iterable[int], ys: Iterable[int], zs: Iterable[int]) -> int:
        """Ordered edge count: tuples (x, y, z) with {x,y,z} an edge, x in X etc."""
        x_set, y_set, z_set = set(xs), set(ys), set(zs)
        for s in (x_set, y_set, z_set):
            for v in s:
                self._check_vertex(v)
        total = 0
        for a, b, c in self.edges:
            for p, q, r in ((a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)):
                if p in x_set and q in y_set and r in z_set:
                    total += 1
        return total

    # -- derived systems -------------------------------------------------

    def induced(self, subset: Iterable[int]) -> tuple["TripleSystem", dict[int, int]]:
        """Subsystem induced on the subset, relabelled to [1, |subset|].

        Returns (system, mapping) where mapping sends old labels to new.
        """
        verts = sorted(set(subset))
        for v in verts:
            self._check_vertex(v)
        relabel = {v: i + 1 for i, v in enumerate(verts)}
        keep = set(verts)
        new_edges = [
            (relabel[a], relabel[b], relabel[c])
            for a, b, c in self.edges
            if a in keep and b in keep and c in keep
        ]
        kind = "linear" if self.kind in ("linear", "sts") else "general"
        return TripleSystem(len(verts), new_edges, kind=kind), relabel

    def restricted(self, subset: Iterable[int]) -> "TripleSystem":
        """Edges inside the subset, labels kept, same ground set size."""
        keep = set(subset)
        for v in keep:
            self._check_vertex(v)
        kind = "linear" if self.kind in ("linear", "sts") else "general"
        new_edges = [t for t in self.edges if keep.issuperset(t)]
        return TripleSystem(self.n, new_edges, kind=kind)

    def subsystem(self, edge_ids: Iterable[int], kind: Optional[str] = None) -> "TripleSystem":
        """System on the same ground set keeping only the given edge ids."""
        ids = sorted(set(edge_ids))
        for eid in ids:
            if not 0 <= eid < len(self.edges):
                raise DomainError(f"edge id {eid} out of range")
        if kind is None:
            kind = "linear" if self.kind in ("linear", "sts") else "general"
        return TripleSystem(self.n, [self.edges[i] for i in ids], kind=kind)

    def leave_graph(self) -> "LeaveGraph":
        return LeaveGraph.from_system(self)

    def is_sts(self) -> bool:
        """Full Steiner check regardless of the kind tag."""
        if self.kind == "general":
            return False
        return (
            sts_admissible(self.n)
            and len(self.edges) == self.n * (self.n - 1) // 6
            and len(self.pair_index) == self.n * (self.n - 1) // 2
        )

    def mean_degree(self) -> float:
        return 3.0 * len(self.edges) / self.n if self.n else 0.0

    def estimate_alpha(self) -> float:
        """Degree-scale estimate: alpha such that mean degree = alpha * n / 2."""
        return 2.0 * self.mean_degree() / self.n if self.n else 0.0


class LeaveGraph:
    """Graph of pairs not covered by a linear triple system, as vertex bitsets.

    Bit v-1 of mask u-1 is set iff the pair {u, v} is present. Instances are
    frozen; process-style algorithms copy the masks out and work on the copy.
    """

    __slots__ = ("n", "_adj", "_pair_count")

    def __init__(self, n: int, adj: Sequence[int]):
        if len(adj) != n:
            raise DomainError("adjacency mask count must equal n")
        self.n = n
        self._adj = tuple(adj)
        self._pair_count = sum(m.bit_count() for m in adj) // 2

    @classmethod
    def complete(cls, n: int) -> "LeaveGraph":
        full = (1 << n) - 1
        return cls(n, [full ^ (1 << i) for i in range(n)])

    @classmethod
    def from_system(cls, system: TripleSystem) -> "LeaveGraph":
        if system.kind == "general":
            raise DomainError("leave graph requires a linear system")
        n = system.n
        adj = [(1 << n) - 1 ^ (1 << i) for i in range(n)]
        for a, b, c in system.edges:
            for u, v in ((a, b), (a, c), (b, c)):
                adj[u - 1] &= ~(1 << (v - 1))
                adj[v - 1] &= ~(1 << (u - 1))
        return cls(n, adj)

    @property
    def pair_count(self) -> int:
        return self._pair_count

    def masks(self) -> tuple[int, ...]:
        return self._adj

    def has_pair(self, a: int, b: int) -> bool:
        self._check_vertex(a)
        self._check_vertex(b)
        if a == b:
            return False
        return bool(self._adj[a - 1] >> (b - 1) & 1)

    def degree(self, v: int) -> int:
        self._check_vertex(v)
        return self._adj[v - 1].bit_count()

    def density(self) -> float:
        total = self.n * (self.n - 1) // 2
        return self._pair_count / total if total else 0.0

    def pairs(self) -> Iterator[Pair]:
        for i in range(self.n):
            m = self._adj[i] >> (i + 1) << (i + 1)
            while m:
                low = m & -m
                yield (i + 1, low.bit_length())
                m ^= low

    def common_neighborhood_mask(self, vertices: Iterable[int]) -> int:
        vs = list(vertices)
        if not vs:
            return (1 << self.n) - 1
        mask = (1 << self.n) - 1
        for v in vs:
            self._check_vertex(v)
            mask &= self._adj[v - 1]
        return mask

    def common_neighborhood_size(self, vertices: Iterable[int]) -> int:
        return self.common_neighborhood_mask(vertices).bit_count()

    def _check_vertex(self, v: int) -> None:
        if not isinstance(v, int) or not 1 <= v <= self.n:
            raise DomainError(f"vertex {v!r} outside [1, {self.n}]")

    def __repr__(self) -> str:
        return f"LeaveGraph(n={self.n}, pairs={self._pair_count})"


@dataclass(frozen=True)
class Matching:
    """A set of pairwise vertex-disjoint triples."""

    edges: tuple[Triple, ...]

    def __post_init__(self):
        norm = tuple(sorted(normalize_triple(t) for t in self.edges))
        object.__setattr__(self, "edges", norm)
        seen: set[int] = set()
        for t in norm:
            for v in t:
                if v in seen:
                    raise DomainError(f"vertex {v} covered twice in matching")
                seen.add(v)

    @classmethod
    def of(cls, triples: Iterable[Sequence[int]]) -> "Matching":
        return cls(tuple(tuple(t) for t in triples))  # type: ignore[arg-type]

    def __len__(self) -> int:
        return len(self.edges)

    def __iter__(self) -> Iterator[Triple]:
        return iter(self.edges)

    def vertices(self) -> frozenset[int]:
        return frozenset(v for t in self.edges for v in t)

    def is_perfect(self, n: int) -> bool:
        return 3 * len(self.edges) == n and all(1 <= v <= n for t in self.edges for v in t)


@dataclass(frozen=True)
class OrderedPartialSTS:
    """A partial STS with a fixed edge ordering (every prefix is again linear)."""

    base: TripleSystem
    order: tuple[int, ...]

    def __post_init__(self):
        if self.base.kind == "general":
            raise DomainError("ordered partial systems must be linear")
        if sorted(self.order) != list(range(len(self.base.edges))):
            raise DomainError("order must be a permutation of the edge ids")

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def m(self) -> int:
        return len(self.order)

    def prefix(self, i: int) -> TripleSystem:
        if not 0 <= i <= self.m:
            raise DomainError(f"prefix length {i} outside [0, {self.m}]")
        return TripleSystem(
            self.base.n, [self.base.edges[j] for j in self.order[:i]], kind="linear"
        )

    def ordered_edges(self) -> tuple[Triple, ...]:
        return tuple(self.base.edges[j] for j in self.order)


# -- .sts file format ----------------------------------------------------
#
# First data line "n=<n>", then one edge per line as "a b c" with
# 1 <= a < b < c <= n. Lines starting with "#" and blank lines are ignored
# on input; the writer never emits them, so write -> read -> write is
# byte-identical.


def to_sts_text(system: TripleSystem) -> str:
    lines = [f"n={system.n}"]
    lines.extend(f"{a} {b} {c}" for a, b, c in system.edges)
    return "\n".join(lines) + "\n"


def from_sts_text(text: str, kind: str = "linear") -> TripleSystem:
    n: Optional[int] = None
    edges: list[Triple] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if n is None:
            if not line.startswith("n="):
                raise DomainError(f"line {lineno}: expected 'n=<n>' header, got {line!r}")
            try:
                n = int(line[2:])
            except ValueError:
                raise DomainError(f"line {lineno}: bad ground set size {line[2:]!r}") from None
            continue
        parts = line.split()
        if len(parts) != 3:
            raise DomainError(f"line {lineno}: expected three vertices, got {line!r}")
        try:
            a, b, c = (int(p) for p in parts)
        except ValueError:
            raise DomainError(f"line {lineno}: non-integer vertex in {line!r}") from None
        if not a < b < c:
            raise DomainError(f"line {lineno}: vertices must be strictly ascending")
        edges.append((a, b, c))
    if n is None:
        raise DomainError("missing 'n=<n>' header line")
    return TripleSystem(n, edges, kind=kind)


def save_sts(system: TripleSystem, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(to_sts_text(system))


def load_sts(path, kind: str = "linear") -> TripleSystem:
    with open(path, "r", encoding="ascii") as fh:
        return from_sts_text(fh.read(), kind=kind)
