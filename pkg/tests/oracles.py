"""Definition-based reference implementations used to verify the fast paths.

Everything here is written in plain Python from the textbook definitions and
stays independent of the package internals.
"""
from __future__ import annotations

import itertools
import math


def oracle_ranks(values) -> list[float]:
    """Average rank of each value: (#smaller) + (#equal + 1) / 2."""
    out = []
    for v in values:
        smaller = sum(1 for u in values if u < v)
        ties = sum(1 for u in values if u == v)
        out.append(smaller + (ties + 1) / 2)
    return out


def oracle_pearson(a, b) -> float:
    n = len(a)
    ma = sum(a) / n
    mb = sum(b) / n
    da = [x - ma for x in a]
    db = [y - mb for y in b]
    va = sum(x * x for x in da)
    vb = sum(y * y for y in db)
    r = sum(x * y for x, y in zip(da, db)) / math.sqrt(va * vb)
    return min(1.0, max(-1.0, r))


def oracle_srcc(a, b) -> float:
    return oracle_pearson(oracle_ranks(a), oracle_ranks(b))


def oracle_srcc_closed_form(a, b) -> float:
    """1 - 6*sum(d^2)/(n(n^2-1)) over the rank differences (tie-free use)."""
    ra = oracle_ranks(a)
    rb = oracle_ranks(b)
    sd2 = sum((x - y) ** 2 for x, y in zip(ra, rb))
    n = len(a)
    return 1.0 - 6.0 * sd2 / (n * (n * n - 1))


def oracle_krcc(a, b) -> float:
    """Kendall tau-b by direct pair enumeration."""
    n = len(a)
    concordant = discordant = 0
    ties_a = ties_b = 0
    for i in range(n):
        for j in range(i + 1, n):
            a_tied = a[i] == a[j]
            b_tied = b[i] == b[j]
            if a_tied:
                ties_a += 1
            if b_tied:
                ties_b += 1
            if a_tied or b_tied:
                continue
            if (a[i] < a[j]) == (b[i] < b[j]):
                concordant += 1
            else:
                discordant += 1
    n0 = n * (n - 1) // 2
    tau = (concordant - discordant) / math.sqrt((n0 - ties_a) * (n0 - ties_b))
    return min(1.0, max(-1.0, tau))


def oracle_kmeans_optimum(points, k: int) -> float:
    """Minimum within-cluster sum of squares over every label assignment."""
    n = len(points)
    dim = len(points[0])
    best = math.inf
    for labels in itertools.product(range(k), repeat=n):
        total = 0.0
        for cluster in range(k):
            members = [points[i] for i in range(n) if labels[i] == cluster]
            if not members:
                continue
            center = [sum(p[d] for p in members) / len(members) for d in range(dim)]
            total += sum(
                sum((p[d] - center[d]) ** 2 for d in range(dim)) for p in members
            )
        if total < best:
            best = total
    return best


def partition_objective(points, labels, k: int) -> float:
    """Within-cluster sum of squares of a concrete labeling (means as centers)."""
    n = len(points)
    dim = len(points[0])
    total = 0.0
    for cluster in range(k):
        members = [points[i] for i in range(n) if labels[i] == cluster]
        if not members:
            continue
        center = [sum(p[d] for p in members) / len(members) for d in range(dim)]
        total += sum(
            sum((p[d] - center[d]) ** 2 for d in range(dim)) for p in members
        )
    return total
