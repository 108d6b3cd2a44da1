"""Query-task scoring: duplicate-aware IoU scaled by an order coefficient.

The magnitude term is the Jaccard index over record multisets. The order
term restricts both sides to their shared records, collapses duplicates,
and rescales the rank correlation between the two orderings into [0, 1].
Only the exact multiset of reference records in the exact reference order
scores 1. Non-tabular output (an error message) scores 0 by default.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from ...core.types import RewardBreakdown
from .records import Record, ResultSet


@dataclass
class SqlRewardBreakdown(RewardBreakdown):
    iou: float
    order_coeff: float
    total: float

    def as_dict(self) -> dict[str, float]:
        return {"iou": self.iou, "order_coeff": self.order_coeff, "total": self.total}


def multiset_iou(a: list[Record], b: list[Record]) -> float:
    """|a ⊓ b| / |a ⊔ b| over multisets; two empty sets are identical."""
    ca, cb = Counter(a), Counter(b)
    union = sum((ca | cb).values())
    if union == 0:
        return 1.0
    inter = sum((ca & cb).values())
    return inter / union


def order_coefficient(a: list[Record], b: list[Record]) -> float:
    """Rank agreement of the shared records, rescaled to [0, 1].

    Both lists are restricted to records present in both (first-occurrence
    order, duplicates collapsed); the tie-aware rank correlation of the
    two orderings is mapped through (tau + 1) / 2. A shared set of zero or
    one records is vacuously in order.
    """
    shared = set(Counter(a) & Counter(b))
    order_a = _first_occurrence_order(a, shared)
    order_b = _first_occurrence_order(b, shared)
    if len(shared) <= 1:
        return 1.0
    pos_b = {record: i for i, record in enumerate(order_b)}
    ys = [pos_b[record] for record in order_a]
    tau = _kendall_tau_of_permutation(ys)
    return (tau + 1.0) / 2.0


def _kendall_tau_of_permutation(ys: list[int]) -> float:
    """Rank correlation of 0..n-1 against the given permutation.

    After duplicate collapse the ranks are distinct, so the tie-aware and
    plain variants coincide; discordant pairs are exactly the inversions
    of ``ys``, counted in O(n log n). Integer arithmetic keeps identical
    orderings at exactly 1.0 and reversals at exactly -1.0.
    """
    n = len(ys)
    total_pairs = n * (n - 1) // 2
    inversions = _count_inversions(list(ys))
    return (total_pairs - 2 * inversions) / total_pairs


def _count_inversions(values: list[int]) -> int:
    if len(values) <= 1:
        return 0
    mid = len(values) // 2
    left, right = values[:mid], values[mid:]
    count = _count_inversions(left) + _count_inversions(right)
    i = j = k = 0
    while i < len(left) and j < len(right):
        if left[i] <= right[j]:
            values[k] = left[i]
            i += 1
        else:
            values[k] = right[j]
            j += 1
            count += len(left) - i
        k += 1
    values[k:] = left[i:] or right[j:]
    return count


def sql_reward(agent_latest: ResultSet, gold_out: ResultSet) -> SqlRewardBreakdown:
    if not agent_latest.is_tabular or not gold_out.is_tabular:
        return SqlRewardBreakdown(iou=0.0, order_coeff=0.0, total=0.0)
    iou = multiset_iou(agent_latest.rows, gold_out.rows)
    coeff = order_coefficient(agent_latest.rows, gold_out.rows)
    return SqlRewardBreakdown(iou=iou, order_coeff=coeff, total=iou * coeff)


def _first_occurrence_order(rows: list[Record], shared: set[Record]) -> list[Record]:
    seen: list[Record] = []
    taken = set()
    for record in rows:
        if record in shared and record not in taken:
            seen.append(record)
            taken.add(record)
    return seen
