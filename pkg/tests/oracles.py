"""Brute-force reference implementations used to freeze expected values.

Everything here is written for clarity over speed and deliberately avoids
the package's own algorithms: recursion instead of the budgeted matching
engine, full tensor enumeration instead of the batched subset scan, and
plain nested loops for counting. Tests compare stslab's answers against
these.
"""

import itertools

import numpy as np


def all_perfect_matchings(n, edges, vertices=None):
    """Every perfect matching, as a sorted tuple of edges (recursion)."""
    universe = sorted(vertices) if vertices is not None else list(range(1, n + 1))
    edges = [tuple(sorted(e)) for e in edges]
    out = []

    def rec(remaining, chosen):
        if not remaining:
            out.append(tuple(sorted(chosen)))
            return
        v = remaining[0]
        rset = set(remaining)
        for e in edges:
            if v in e and all(u in rset for u in e):
                rec([u for u in remaining if u not in e], chosen + [e])

    rec(universe, [])
    return out


def is_sts_brute(n, edges):
    """Every pair covered exactly once."""
    seen = {}
    for e in edges:
        a, b, c = sorted(e)
        if len({a, b, c}) != 3 or not (1 <= a and c <= n):
            return False
        for p in ((a, b), (a, c), (b, c)):
            if p in seen:
                return False
            seen[p] = True
    return len(seen) == n * (n - 1) // 2


def triangle_count_brute(n, pairs):
    pairset = {tuple(sorted(p)) for p in pairs}
    count = 0
    for i, j, k in itertools.combinations(range(1, n + 1), 3):
        if (i, j) in pairset and (i, k) in pairset and (j, k) in pairset:
            count += 1
    return count


def common_neighborhood_brute(n, pairs, vs):
    """|{u : u adjacent to every v in vs}| by direct scan."""
    adj = {v: set() for v in range(1, n + 1)}
    for a, b in pairs:
        adj[a].add(b)
        adj[b].add(a)
    return sum(1 for u in range(1, n + 1) if all(u in adj[v] for v in vs))


def e_triple_brute(edges, X, Y, Z):
    """Ordered (x, y, z) with {x,y,z} an edge, by checking all 6 orders."""
    total = 0
    for e in edges:
        for x, y, z in itertools.permutations(e):
            if x in X and y in Y and z in Z:
                total += 1
    return total


def discrepancy_brute(system):
    """Exact max |e(X,Y,Z) - |X||Y||Z|/n| over ALL subset triples (n <= 9).

    Full enumeration: 2^n indicator vectors contracted against the ordered
    edge tensor, no analytic shortcuts.
    """
    n = system.n
    assert n <= 9, "full triple enumeration is 8^n"
    T = np.zeros((n, n, n), dtype=np.float64)
    for e in system.edges:
        for a, b, c in itertools.permutations(e):
            T[a - 1, b - 1, c - 1] = 1.0
    P = 1 << n
    S = np.zeros((P, n), dtype=np.float64)
    for v in range(n):
        S[:, v] = (np.arange(P) >> v) & 1
    sizes = S.sum(axis=1)
    expected_yz = np.outer(sizes, sizes) / n
    M1 = np.tensordot(S, T, (1, 0))  # (P, n, n)
    best = 0.0
    worst = None
    for i in range(P):
        E = S @ M1[i] @ S.T
        D = np.abs(E - sizes[i] * expected_yz)
        j = int(np.argmax(D))
        if D.flat[j] > best:
            best = float(D.flat[j])
            worst = (i, j // P, j % P)
    return best, worst


def upper_excess_brute(system, p):
    """Exact max over all subset triples of e(X,Y,Z) - p|X||Y||Z| (n <= 9)."""
    n = system.n
    assert n <= 9
    T = np.zeros((n, n, n), dtype=np.float64)
    for e in system.edges:
        for a, b, c in itertools.permutations(e):
            T[a - 1, b - 1, c - 1] = 1.0
    P = 1 << n
    S = np.zeros((P, n), dtype=np.float64)
    for v in range(n):
        S[:, v] = (np.arange(P) >> v) & 1
    sizes = S.sum(axis=1)
    prod_yz = np.outer(sizes, sizes)
    M1 = np.tensordot(S, T, (1, 0))
    best = 0.0
    for i in range(P):
        E = S @ M1[i] @ S.T
        best = max(best, float(np.max(E - p * sizes[i] * prod_yz)))
    return best


def enumerate_labeled_sts(n):
    """All labeled STS(n) by backtracking on the smallest uncovered pair."""
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    out = []

    def rec(uncovered, chosen):
        if not uncovered:
            out.append(tuple(sorted(chosen)))
            return
        a, b = min(uncovered)
        for c in range(1, n + 1):
            if c in (a, b):
                continue
            triple = tuple(sorted((a, b, c)))
            needed = {tuple(sorted(p)) for p in ((a, b), (a, c), (b, c))}
            if needed <= uncovered:
                rec(uncovered - needed, chosen + [triple])

    rec(set(pairs), [])
    return out


def sub_absorbers_brute(system, x, y, z):
    """All 5-edge sub-absorber configurations rooted at (x, y, z).

    Enumerates every choice of rooted edge at x, y and z plus every
    orientation of their external pairs, then checks the two cross edges
    by membership. Returns canonical forms: (externals tuple, edge set).
    """
    edge_set = {tuple(sorted(e)) for e in system.edges}

    def rooted(v):
        for e in edge_set:
            if v in e:
                rest = [u for u in e if u != v]
                yield (rest[0], rest[1])
                yield (rest[1], rest[0])

    found = set()
    for x1, x2 in rooted(x):
        for y1, y2 in rooted(y):
            for z1, z2 in rooted(z):
                vs = (x, y, z, x1, x2, y1, y2, z1, z2)
                if len(set(vs)) != 9:
                    continue
                top = tuple(sorted((x1, y1, z1)))
                bot = tuple(sorted((x2, y2, z2)))
                if top in edge_set and bot in edge_set:
                    edges = frozenset(
                        [
                            tuple(sorted((x, x1, x2))),
                            tuple(sorted((y, y1, y2))),
                            tuple(sorted((z, z1, z2))),
                            top,
                            bot,
                        ]
                    )
                    found.add(((x1, x2, y1, y2, z1, z2), edges))
    return found


def pm_partition_check(n, classes):
    """True iff the classes form a resolution: each a PM, edges disjoint."""
    seen = set()
    for cls in classes:
        covered = set()
        for e in cls:
            t = tuple(sorted(e))
            if t in seen:
                return False
            seen.add(t)
            if covered & set(t):
                return False
            covered |= set(t)
        if covered != set(range(1, n + 1)):
            return False
    return True


def has_hitting_set(edges, k):
    """True iff some <= k vertices touch every edge (branch on an unhit edge)."""
    edges = [tuple(e) for e in edges]

    def rec(remaining, budget):
        if not remaining:
            return True
        if budget == 0:
            return False
        e = remaining[0]
        return any(
            rec([f for f in remaining if v not in f], budget - 1) for v in e
        )

    return rec(edges, k)
