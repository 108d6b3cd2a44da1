"""Shell-task scoring: output similarity, file-system deltas, content checks.

The episode score combines three fixed-weight components:

* lexical similarity between the agent's latest execution output and the
  reference output (TF-IDF cosine over the two-document corpus),
* a penalty on missed/extraneous file-system changes, bounded into [0, 1]
  with the Gauss error function,
* the fraction of commonly-changed paths whose content (md5) matches.

Weights are constants, not configuration: comparability across runs
matters more than tunability here.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable

from ...core.types import RewardBreakdown
from .fschanges import FsChange

SIMILARITY_WEIGHT = 0.34
FS_PENALTY_WEIGHT = 0.33
PATH_CORRECT_WEIGHT = 0.33

# Tokens are maximal runs of two or more word characters, lowercased.
_TOKEN_RE = re.compile(r"\w\w+")


@dataclass
class BashRewardBreakdown(RewardBreakdown):
    similarity: float
    fs_miss_penalty_term: float
    path_correct_ratio: float
    total: float

    def as_dict(self) -> dict[str, float]:
        return {
            "similarity": self.similarity,
            "fs_miss_penalty_term": self.fs_miss_penalty_term,
            "path_correct_ratio": self.path_correct_ratio,
            "total": self.total,
        }


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def lexical_similarity(a: str, b: str) -> float:
    """Cosine of TF-IDF vectors fit on the two-document corpus {a, b}.

    Term frequency is the raw count; idf = ln((1 + n) / (1 + df)) + 1 with
    n = 2; vectors are L2-normalized. Two empty documents are identical
    (1.0); exactly one empty document shares nothing (0.0). Documents that
    yield no tokens at all (tokens need two word characters, so e.g. a
    bare count like "3" has none) fall back to exact text equality —
    without this, any output would tie any other token-free output.
    """
    stripped_a, stripped_b = a.strip(), b.strip()
    if not stripped_a and not stripped_b:
        return 1.0
    if not stripped_a or not stripped_b:
        return 0.0
    ta, tb = tokenize(a), tokenize(b)
    if not ta and not tb:
        return 1.0 if stripped_a == stripped_b else 0.0
    if not ta or not tb:
        return 0.0
    ca, cb = Counter(ta), Counter(tb)
    n_docs = 2

    def weight(term: str, tf: int) -> float:
        df = (term in ca) + (term in cb)
        idf = math.log((1 + n_docs) / (1 + df)) + 1.0
        return tf * idf

    va = {t: weight(t, c) for t, c in ca.items()}
    vb = {t: weight(t, c) for t, c in cb.items()}
    dot = sum(w * vb[t] for t, w in va.items() if t in vb)
    norm_a = math.sqrt(sum(w * w for w in va.values()))
    norm_b = math.sqrt(sum(w * w for w in vb.values()))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    # clamp rounding spill so identical documents score exactly 1
    return min(1.0, max(0.0, dot / (norm_a * norm_b)))


def gauss_erf(x: float) -> float:
    """Standard error function on the nonnegative reals.

    Used to squash a miss count into [0, 1): erf(0) = 0 (no misses),
    approaching 1 as misses grow.
    """
    if x < 0:
        raise ValueError(f"gauss_erf is defined for x >= 0, got {x}")
    return math.erf(x)


def score_bash(
    agent_out: str,
    gold_out: str,
    agent_fs: Iterable[FsChange],
    gold_fs: Iterable[FsChange],
    agent_hash: Callable[[str], str | None],
    gold_hash: Callable[[str], str | None],
) -> BashRewardBreakdown:
    """Combine the three components for one episode.

    ``agent_hash`` / ``gold_hash`` resolve a changed path to its current
    md5 in the respective sandbox (None for absent paths, e.g. deletions —
    a path deleted on both sides is a content match).

    Change entries are compared as (path, kind) pairs. The miss count is
    the symmetric difference of the two entry sets. The content ratio is
    taken over the intersection and is vacuously 1 when the intersection
    is empty.
    """
    a_set = {(c.path, c.kind) for c in agent_fs}
    g_set = {(c.path, c.kind) for c in gold_fs}
    misses = len(a_set ^ g_set)
    common_paths = sorted({path for path, _ in a_set & g_set})
    if common_paths:
        correct = sum(1 for p in common_paths if agent_hash(p) == gold_hash(p))
        path_ratio = correct / len(common_paths)
    else:
        path_ratio = 1.0
    similarity = lexical_similarity(agent_out, gold_out)
    penalty_term = 1.0 - gauss_erf(float(misses))
    # integer-scaled weights keep the all-components-perfect case at
    # exactly 1.0 (0.34 + 0.33 + 0.33 does not sum to 1.0 in floats)
    total = (34.0 * similarity + 33.0 * penalty_term + 33.0 * path_ratio) / 100.0
    return BashRewardBreakdown(
        similarity=similarity,
        fs_miss_penalty_term=penalty_term,
        path_correct_ratio=path_ratio,
        total=total,
    )
