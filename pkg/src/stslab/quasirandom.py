"""Quasirandomness and goodness audits for leave graphs and triple systems.

Three families of checks live here: common-neighborhood quasirandomness of
a leave graph, one-sided upper-quasirandomness / two-sided discrepancy of
a triple system over subset triples (exhaustive for n <= 15 via a batched
scan that optimizes the third subset analytically), and the composite
goodness audit (degree band, upper-quasirandomness, spot-checked absorber
resilience).
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import DomainError, LeaveGraph, TripleSystem
from . import seeding

__all__ = [
    "QuasiReport",
    "UpperQuasiReport",
    "DiscrepancyReport",
    "GoodnessReport",
    "check_quasirandom",
    "count_triangles",
    "upper_quasi_defect",
    "discrepancy",
    "audit_goodness",
]

SubsetTriple = tuple[frozenset[int], frozenset[int], frozenset[int]]


@dataclass(frozen=True)
class QuasiReport:
    epsilon: float
    h: int
    density: float
    worst_set: Optional[frozenset[int]]
    max_deviation: float
    passed: bool
    mode: str
    samples: int
    seed: Optional[int]


def check_quasirandom(
    graph: LeaveGraph,
    epsilon: float,
    h: int,
    mode: str = "exact",
    samples: int = 200,
    seed: int = 0,
) -> QuasiReport:
    """Common-neighborhood quasirandomness at scale d(G)^|A| * n.

    Passes iff every inspected vertex set A with 1 <= |A| <= h has
    |common neighborhood| within (1 +- epsilon) of d^|A| * n. Exact mode
    enumerates all sets (allowed only for h <= 2 or n <= 60); sampled mode
    draws `samples` uniform sets per size.
    """
    if epsilon < 0:
        raise DomainError("epsilon must be nonnegative")
    if h < 1:
        raise DomainError("h must be at least 1")
    n = graph.n
    if mode not in ("exact", "sampled"):
        raise DomainError(f"mode must be 'exact' or 'sampled', got {mode!r}")
    if mode == "exact" and not (h <= 2 or n <= 60):
        raise DomainError("exact mode needs h <= 2 or n <= 60")
    d = graph.density()
    worst: Optional[frozenset[int]] = None
    max_dev = 0.0
    if d > 0.0 and n > 0:
        rng = random.Random(seed) if mode == "sampled" else None

        def consider(vs: tuple[int, ...]) -> None:
            nonlocal worst, max_dev
            target = d ** len(vs) * n
            size = graph.common_neighborhood_size(vs)
            dev = abs(size / target - 1.0)
            if dev > max_dev:
                max_dev = dev
                worst = frozenset(vs)

        if mode == "exact":
            for s in range(1, h + 1):
                for combo in itertools.combinations(range(1, n + 1), s):
                    consider(combo)
        else:
            for s in range(1, min(h, n) + 1):
                for _ in range(samples):
                    consider(tuple(rng.sample(range(1, n + 1), s)))
    return QuasiReport(
        epsilon=epsilon,
        h=h,
        density=d,
        worst_set=worst,
        max_deviation=max_dev,
        passed=max_dev <= epsilon,
        mode=mode,
        samples=samples if mode == "sampled" else 0,
        seed=seed if mode == "sampled" else None,
    )


def count_triangles(graph: LeaveGraph) -> int:
    """Exact triangle count of the leave graph."""
    masks = graph.masks()
    total = 0
    for a, b in graph.pairs():
        common_above = masks[a - 1] & ((masks[b - 1] >> b) << b)
        total += common_above.bit_count()
    return total


# -- subset triple scans -------------------------------------------------


def _third_vertex_matrix(system: TripleSystem) -> np.ndarray:
    """T[y-1, z-1] = third vertex of the edge covering {y, z}, else 0.

    Linear systems only (a pair lies in at most one edge). The 0 sentinel
    row of a membership vector must therefore always be 0.
    """
    n = system.n
    T = np.zeros((n, n), dtype=np.int64)
    for a, b, c in system.edges:
        T[a - 1, b - 1] = T[b - 1, a - 1] = c
        T[a - 1, c - 1] = T[c - 1, a - 1] = b
        T[b - 1, c - 1] = T[c - 1, b - 1] = a
    return T


def _mask_to_set(mask: int) -> frozenset[int]:
    out = []
    v = 1
    while mask:
        if mask & 1:
            out.append(v)
        mask >>= 1
        v += 1
    return frozenset(out)


@dataclass(frozen=True)
class _ScanBest:
    value: float
    x_mask: int
    y_mask: int
    z_set: frozenset[int]


def _exact_pair_scan(
    system: TripleSystem, gamma: float, two_sided: bool, chunk: int = 32
) -> tuple[_ScanBest, Optional[_ScanBest]]:
    """Maximize e(X,Y,Z) - gamma|X||Y||Z| over all subset triples, exactly.

    Enumerates (X, Y) pairs (up to the symmetry X <= Y as masks; e is fully
    symmetric) and optimizes Z pointwise: z enters Z iff its column count
    clears the threshold gamma|X||Y|. Only n <= 15 is allowed. When
    two_sided is set the mirrored maximum of gamma|X||Y||Z| - e is tracked
    as well.
    """
    n = system.n
    if n > 15:
        raise DomainError("exhaustive subset scan is limited to n <= 15")
    if n == 0:
        empty = _ScanBest(0.0, 0, 0, frozenset())
        return empty, (empty if two_sided else None)
    if system.kind == "general":
        raise DomainError("subset scan needs a linear system")
    P = 1 << n
    B = np.zeros((P, n), dtype=np.float32)
    for v in range(n):
        B[:, v] = (np.arange(P) >> v) & 1
    sizes = B.sum(axis=1)
    T = _third_vertex_matrix(system)  # entries 0..n, 0 = no edge

    best_pos = _ScanBest(-1.0, 0, 0, frozenset())
    best_neg = _ScanBest(-1.0, 0, 0, frozenset()) if two_sided else None

    for x0 in range(0, P, chunk):
        xs = np.arange(x0, min(x0 + chunk, P))
        c = len(xs)
        # Membership with a leading zero column for the 0 sentinel.
        xmem = np.zeros((c, n + 1), dtype=np.float32)
        xmem[:, 1:] = B[xs]
        A = xmem[:, T]  # (c, n, n): A[i, y, z] = [third(y,z) in X_i]
        rows = B[x0:]  # symmetry: only Y masks >= x0 matter
        R = rows @ A.transpose(1, 0, 2).reshape(n, c * n)
        R = R.reshape(rows.shape[0], c, n)
        thr = gamma * np.outer(sizes[x0:], sizes[xs])  # (rows, c)
        D = R - thr[:, :, None]
        pos = np.maximum(D, 0.0).sum(axis=2)
        idx = int(np.argmax(pos))
        val = float(pos.flat[idx])
        if val > best_pos.value:
            r, ci = divmod(idx, c)
            best_pos = _reconstruct(system, T, x0 + r, int(xs[ci]), gamma, positive=True)
        if two_sided:
            neg = np.maximum(-D, 0.0).sum(axis=2)
            idx = int(np.argmax(neg))
            val = float(neg.flat[idx])
            if val > best_neg.value:  # type: ignore[union-attr]
                r, ci = divmod(idx, c)
                best_neg = _reconstruct(
                    system, T, x0 + r, int(xs[ci]), gamma, positive=False
                )
    return best_pos, best_neg


def _reconstruct(
    system: TripleSystem,
    T: np.ndarray,
    y_mask: int,
    x_mask: int,
    gamma: float,
    positive: bool,
) -> _ScanBest:
    """Recompute the optimal Z for an (X, Y) pair in exact integer arithmetic."""
    n = system.n
    xind = np.zeros(n + 1, dtype=np.int64)
    for v in range(1, n + 1):
        xind[v] = (x_mask >> (v - 1)) & 1
    A = xind[T]  # (n, n) 0/1
    yvec = np.array([(y_mask >> v) & 1 for v in range(n)], dtype=np.int64)
    col = yvec @ A  # counts per z
    szx = bin(x_mask).count("1")
    szy = bin(y_mask).count("1")
    thr = gamma * szx * szy
    if positive:
        zsel = col > thr
        value = float((col[zsel] - thr).sum())
    else:
        zsel = col < thr
        value = float((thr - col[zsel]).sum())
    z_set = frozenset(int(z) + 1 for z in np.nonzero(zsel)[0])
    return _ScanBest(value, x_mask, y_mask, z_set)


def _e_triple_np(edge_arr: np.ndarray, xb: np.ndarray, yb: np.ndarray, zb: np.ndarray) -> int:
    """Ordered containment count via the 6 slot assignments per edge."""
    a, b, c = edge_arr[:, 0], edge_arr[:, 1], edge_arr[:, 2]
    total = 0
    for p, q, r in ((a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)):
        total += int(np.count_nonzero(xb[p] & yb[q] & zb[r]))
    return total


def _sample_subset(rng: random.Random, n: int) -> frozenset[int]:
    """Sampling policy: one of three fixed sizes, or a fully uniform subset."""
    choice = rng.randrange(4)
    if choice == 3:
        mask = rng.getrandbits(n)
        return _mask_to_set(mask)
    size = (math.ceil(n / 4), math.ceil(n / 2), math.ceil(3 * n / 4))[choice]
    return frozenset(rng.sample(range(1, n + 1), min(size, n)))


def _bool_vec(n: int, subset: frozenset[int]) -> np.ndarray:
    v = np.zeros(n + 1, dtype=bool)
    for x in subset:
        v[x] = True
    return v


@dataclass(frozen=True)
class UpperQuasiReport:
    p: float
    beta_hat: float
    worst_triple: Optional[SubsetTriple]
    exact: bool
    samples: int
    seed: Optional[int]


def upper_quasi_defect(
    system: TripleSystem, p: float, samples: int = 400, seed: int = 0
) -> UpperQuasiReport:
    """Smallest beta certifying e(X,Y,Z) <= p|X||Y||Z| + beta n^3 p over the
    inspected subset triples.

    n <= 15 inspects all triples exhaustively; larger n samples triples by
    the mixed-size policy and additionally closes each sampled (X, Y) pair
    over its pointwise-optimal Z. The returned beta_hat is tight: some
    inspected triple attains it.
    """
    if p <= 0.0:
        raise DomainError("density scale p must be positive")
    n = system.n
    if n == 0:
        return UpperQuasiReport(p, 0.0, None, True, 0, None)
    scale = n**3 * p
    if n <= 15:
        best, _ = _exact_pair_scan(system, p, two_sided=False)
        worst = (
            _mask_to_set(best.x_mask),
            _mask_to_set(best.y_mask),
            best.z_set,
        )
        return UpperQuasiReport(p, max(0.0, best.value) / scale, worst, True, 0, None)
    if system.kind == "general":
        raise DomainError("sampled subset scan needs a linear system")
    rng = random.Random(seed)
    edge_arr = (
        np.array(system.edges, dtype=np.int64)
        if system.edges
        else np.zeros((0, 3), dtype=np.int64)
    )
    T = _third_vertex_matrix(system)
    xind = np.zeros(n + 1, dtype=np.int64)
    beta_hat = 0.0
    worst: Optional[SubsetTriple] = None
    for _ in range(samples):
        X = _sample_subset(rng, n)
        Y = _sample_subset(rng, n)
        Z = _sample_subset(rng, n)
        xb, yb, zb = _bool_vec(n, X), _bool_vec(n, Y), _bool_vec(n, Z)
        e = _e_triple_np(edge_arr, xb, yb, zb)
        excess = e - p * len(X) * len(Y) * len(Z)
        if excess / scale > beta_hat:
            beta_hat = excess / scale
            worst = (X, Y, Z)
        # Close (X, Y) over the best possible Z as well.
        xind[:] = 0
        for v in X:
            xind[v] = 1
        col = yb[1:].astype(np.int64) @ xind[T]
        thr = p * len(X) * len(Y)
        zsel = col > thr
        excess_opt = float((col[zsel] - thr).sum())
        if excess_opt / scale > beta_hat:
            beta_hat = excess_opt / scale
            worst = (X, Y, frozenset(int(z) + 1 for z in np.nonzero(zsel)[0]))
    return UpperQuasiReport(p, beta_hat, worst, False, samples, seed)


@dataclass(frozen=True)
class DiscrepancyReport:
    max_abs_deviation: float
    worst_triple: Optional[SubsetTriple]
    exact: bool
    samples: int
    seed: Optional[int]


def discrepancy(system: TripleSystem, samples: int = 2000, seed: int = 0) -> DiscrepancyReport:
    """max |e(X,Y,Z) - |X||Y||Z|/n| over subset triples of a full STS.

    Exhaustive for n <= 15, sampled (same policy as the upper-quasirandom
    audit, both deviation signs) above.
    """
    if not system.is_sts():
        raise DomainError("discrepancy is defined for full Steiner systems")
    n = system.n
    gamma = 1.0 / n
    if n <= 15:
        pos, neg = _exact_pair_scan(system, gamma, two_sided=True)
        assert neg is not None
        best = pos if pos.value >= neg.value else neg
        worst = (_mask_to_set(best.x_mask), _mask_to_set(best.y_mask), best.z_set)
        return DiscrepancyReport(max(pos.value, neg.value), worst, True, 0, None)
    rng = random.Random(seed)
    edge_arr = np.array(system.edges, dtype=np.int64)
    T = _third_vertex_matrix(system)
    xind = np.zeros(n + 1, dtype=np.int64)
    best_val = 0.0
    worst: Optional[SubsetTriple] = None
    for _ in range(samples):
        X = _sample_subset(rng, n)
        Y = _sample_subset(rng, n)
        Z = _sample_subset(rng, n)
        xb, yb, zb = _bool_vec(n, X), _bool_vec(n, Y), _bool_vec(n, Z)
        e = _e_triple_np(edge_arr, xb, yb, zb)
        dev = abs(e - gamma * len(X) * len(Y) * len(Z))
        if dev > best_val:
            best_val = dev
            worst = (X, Y, Z)
        xind[:] = 0
        for v in X:
            xind[v] = 1
        col = yb[1:].astype(np.int64) @ xind[T]
        thr = gamma * len(X) * len(Y)
        for positive in (True, False):
            zsel = col > thr if positive else col < thr
            val = float(abs((col[zsel] - thr).sum()))
            if val > best_val:
                best_val = val
                worst = (X, Y, frozenset(int(z) + 1 for z in np.nonzero(zsel)[0]))
    return DiscrepancyReport(best_val, worst, False, samples, seed)


@dataclass(frozen=True)
class GoodnessReport:
    alpha: float
    beta: float
    regularity_pass: bool
    upper_quasi_pass: bool
    resilience_samples: int
    resilience_failures: int
    resilience_pass: bool
    degree_min: int = 0
    degree_max: int = 0
    beta_hat: float = 0.0
    per_w: dict = field(default_factory=dict)
    seed: int = 0


def audit_goodness(
    system: TripleSystem,
    alpha: float,
    beta: float,
    resilience_samples: int = 10,
    seed: int = 0,
    upper_samples: int = 200,
) -> GoodnessReport:
    """Three-part goodness audit of a linear system at scale (alpha, beta).

    (1) every degree within alpha*n/2 +- beta*n; (2) upper-quasirandom
    defect at p = alpha/n at most beta; (3) sampled w-subsets W keep an
    absorber-resilient induced system, failures counted against the
    exp(-1e-8 (w/n)^4 alpha^2 n) fraction of a C(n, w) budget. At small n
    that fraction is essentially 1, so part (3) is informational there.
    """
    from .absorbers import resilience_spotcheck

    if system.kind == "general":
        raise DomainError("goodness audit needs a linear system")
    if alpha <= 0 or beta <= 0:
        raise DomainError("alpha and beta must be positive")
    n = system.n
    degs = [system.degree(v) for v in range(1, n + 1)]
    center = alpha * n / 2.0
    band = beta * n
    deg_lo = min(degs) if degs else 0
    deg_hi = max(degs) if degs else 0
    regularity = all(abs(d - center) <= band for d in degs)

    uq = upper_quasi_defect(system, alpha / n, samples=upper_samples, seed=seeding.spawn(seed, 1))
    upper_pass = uq.beta_hat <= beta

    rng = random.Random(seeding.spawn(seed, 2))
    ws = sorted({max(1, math.ceil(beta * n)), max(1, math.ceil(n / 2))})
    failures = 0
    total = 0
    per_w: dict[int, dict[str, float]] = {}
    res_pass = True
    for w in ws:
        if w > n:
            continue
        w_failures = 0
        for _ in range(resilience_samples):
            total += 1
            subset = rng.sample(range(1, n + 1), w)
            sub, _ = system.induced(subset)
            eta = w / n
            target = 0.999 * eta * eta * alpha * (n / 2.0)
            bad = resilience_spotcheck(
                sub,
                target,
                triple_samples=2,
                subgraph_samples=1,
                seed=rng.getrandbits(63),
                search_budget=20_000,
            )
            if bad > 0:
                w_failures += 1
        failures += w_failures
        allowed_fraction = math.exp(-1e-8 * (w / n) ** 4 * alpha * alpha * n)
        per_w[w] = {
            "failures": w_failures,
            "samples": resilience_samples,
            "allowed_fraction": allowed_fraction,
        }
        if w_failures > allowed_fraction * resilience_samples + 1e-9:
            res_pass = False
    return GoodnessReport(
        alpha=alpha,
        beta=beta,
        regularity_pass=regularity,
        upper_quasi_pass=upper_pass,
        resilience_samples=total,
        resilience_failures=failures,
        resilience_pass=res_pass,
        degree_min=deg_lo,
        degree_max=deg_hi,
        beta_hat=uq.beta_hat,
        per_w=per_w,
        seed=seed,
    )
