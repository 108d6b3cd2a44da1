"""Independent oracles used to derive and check expected values.

Each oracle is deliberately implemented differently from the production
path it checks: series expansion instead of the library special function,
explicit pair counting instead of the statistical routine, dense
loop-built vectors instead of sparse counters, list counting instead of
Counter arithmetic.
"""

from __future__ import annotations

import math
import re
from itertools import combinations

from mpmath import factorial, mp, mpf


def erf_series(x: float) -> float:
    """Maclaurin series for erf at 40+ digits; immune to cancellation."""
    with mp.workdps(60):
        xm = mpf(x)
        total = mpf(0)
        k = 0
        while True:
            term = (-1) ** k * xm ** (2 * k + 1) / (factorial(k) * (2 * k + 1))
            total += term
            if abs(term) < mpf(10) ** -40:
                break
            k += 1
        return float(total * 2 / mp.sqrt(mp.pi))


def kendall_coefficient_brute(order_a: list, order_b: list) -> float:
    """(tau + 1) / 2 by explicit concordant/discordant pair counting.

    ``order_a`` and ``order_b`` are the same items in each side's order;
    items are assumed distinct (duplicates collapsed upstream).
    """
    if len(order_a) <= 1:
        return 1.0
    pos_b = {item: i for i, item in enumerate(order_b)}
    concordant = discordant = 0
    for (i, x), (j, y) in combinations(enumerate(order_a), 2):
        if (pos_b[x] < pos_b[y]) == (i < j):
            concordant += 1
        else:
            discordant += 1
    n_pairs = concordant + discordant
    tau = (concordant - discordant) / n_pairs
    return (tau + 1.0) / 2.0


def multiset_iou_counting(a: list, b: list) -> float:
    """Duplicate-aware IoU via list.count, no Counter arithmetic."""
    if not a and not b:
        return 1.0
    universe = []
    for item in a + b:
        if item not in universe:
            universe.append(item)
    inter = sum(min(a.count(item), b.count(item)) for item in universe)
    union = sum(max(a.count(item), b.count(item)) for item in universe)
    return inter / union


def tfidf_cosine_dense(a: str, b: str) -> float:
    """TF-IDF cosine via dense vocabulary vectors and explicit loops."""
    tokens = lambda s: re.findall(r"\w\w+", s.lower())
    if not a.strip() and not b.strip():
        return 1.0
    if not a.strip() or not b.strip():
        return 0.0
    da, db = tokens(a), tokens(b)
    if not da and not db:
        return 1.0 if a.strip() == b.strip() else 0.0
    if not da or not db:
        return 0.0
    vocab = sorted(set(da) | set(db))
    n_docs = 2

    def vector(doc: list[str]) -> list[float]:
        out = []
        for term in vocab:
            tf = doc.count(term)
            df = (term in da) + (term in db)
            out.append(tf * (math.log((1 + n_docs) / (1 + df)) + 1.0))
        norm = math.sqrt(sum(x * x for x in out))
        return [x / norm for x in out]

    va, vb = vector(da), vector(db)
    return sum(x * y for x, y in zip(va, vb))
