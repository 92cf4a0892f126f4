"""User-user similarity, neighbor selection among a target item's raters, prediction.

Similarity is Pearson correlation over co-rated items with deviations taken
from each user's global mean, optionally weight-scaled per item by content
weights, and damped by a significance factor when the co-rated overlap is
small. Neighbors are drawn only from users who rated the target item.

The batch path gathers, once per active user, the flat (item, rater, rating)
triples covering that user's whole row and reduces them with bincount; the
scalar pearson/weighted_pearson functions accumulate over the same sorted
item order, so both paths agree to the last bit.
"""

from __future__ import annotations

import math
import threading
import weakref
from collections import OrderedDict
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .data import ItemId, RatingMatrix, UserId
from .weighting import WeightVector

Denominator = Literal["abs", "signed"]

SIGNIFICANCE_OVERLAP = 50
_DEN_EPS = 1e-9


@dataclass(frozen=True, slots=True)
class SimilarityScore:
    """One candidate's similarity to the active user."""

    user_id: UserId
    raw: float
    cf: float
    value: float
    overlap: int


@dataclass(frozen=True)
class NeighborSet:
    """Top-k raters of the target item, sorted by damped similarity descending."""

    target_item: ItemId
    active_user: UserId
    neighbors: tuple[SimilarityScore, ...]

    def __len__(self) -> int:
        return len(self.neighbors)


@dataclass(frozen=True, slots=True)
class Prediction:
    value: float
    fallback: bool
    n_neighbors: int


def significance_factor(overlap: int) -> float:
    """Damping in (0, 1]: overlap/50 below the 50 co-rating threshold, else 1."""
    if overlap < 0:
        raise ValueError("overlap must be >= 0")
    return 1.0 if overlap > SIGNIFICANCE_OVERLAP else overlap / SIGNIFICANCE_OVERLAP


def pearson(a: UserId, u: UserId, matrix: RatingMatrix) -> tuple[float, int]:
    """(raw correlation, co-rated count) between two users.

    Deviations use each user's mean over all their ratings, and the sums run
    over co-rated items only. Zero overlap or zero variance on the co-rated
    set gives raw 0.
    """
    ra = matrix.ratings_of(a)
    ru = matrix.ratings_of(u)
    common = sorted(ra.keys() & ru.keys())
    if not common:
        return 0.0, 0
    mean_a = matrix.mean_of(a)
    mean_u = matrix.mean_of(u)
    num = den_a = den_u = 0.0
    for i in common:
        x = ra[i] - mean_a
        y = ru[i] - mean_u
        num += x * y
        den_a += x * x
        den_u += y * y
    if den_a == 0.0 or den_u == 0.0:
        return 0.0, len(common)
    raw = num / math.sqrt(den_a * den_u)
    return min(1.0, max(-1.0, raw)), len(common)


def weighted_pearson(
    a: UserId,
    u: UserId,
    target: ItemId,
    matrix: RatingMatrix,
    weights: WeightVector,
) -> tuple[float, int]:
    """Pearson over weight-scaled deviations; weights are relative to the target.

    Each co-rated item's deviations are multiplied by its content weight
    before the usual correlation arithmetic, so relevance to the target item
    amplifies agreement (and disagreement) on that item.
    """
    if weights.target_id != target:
        raise ValueError(
            f"weight vector was built for target {weights.target_id!r}, not {target!r}"
        )
    ra = matrix.ratings_of(a)
    ru = matrix.ratings_of(u)
    common = sorted(ra.keys() & ru.keys())
    if not common:
        return 0.0, 0
    mean_a = matrix.mean_of(a)
    mean_u = matrix.mean_of(u)
    num = den_a = den_u = 0.0
    for i in common:
        w = weights[i]
        x = w * (ra[i] - mean_a)
        y = w * (ru[i] - mean_u)
        num += x * y
        den_a += x * x
        den_u += y * y
    if den_a == 0.0 or den_u == 0.0:
        return 0.0, len(common)
    raw = num / math.sqrt(den_a * den_u)
    return min(1.0, max(-1.0, raw)), len(common)


# -- vectorized sweep over one active user's row ------------------------------


class _Gather:
    """Flat arrays covering every (item of a, rater, rating) triple."""

    __slots__ = ("item_ids", "itempos", "users", "dev_rep", "dev_u", "pc")

    def __init__(self, matrix: RatingMatrix, uix: int):
        items_a, vals_a = matrix._user_row(uix)
        dev_a = vals_a - matrix._umeans[uix]
        starts = matrix._iptr[items_a]
        counts = matrix._iptr[items_a + 1] - starts
        total = int(counts.sum())
        first = np.cumsum(counts) - counts
        pos = (
            np.arange(total, dtype=np.int64)
            - np.repeat(first, counts)
            + np.repeat(starts, counts)
        )
        self.item_ids = tuple(matrix.items[j] for j in items_a)
        self.itempos = np.repeat(np.arange(items_a.size), counts)
        self.users = matrix._iusers[pos]
        self.dev_u = matrix._ivals[pos] - matrix._umeans[self.users]
        self.dev_rep = dev_a[self.itempos]
        self.pc: tuple[np.ndarray, ...] | None = None


_GATHER_LRU = 4
_gather_lock = threading.Lock()
_gather_cache: "weakref.WeakKeyDictionary[RatingMatrix, OrderedDict[int, _Gather]]" = (
    weakref.WeakKeyDictionary()
)


def _gather_for(matrix: RatingMatrix, uix: int) -> _Gather:
    with _gather_lock:
        per = _gather_cache.get(matrix)
        if per is not None and uix in per:
            per.move_to_end(uix)
            return per[uix]
    g = _Gather(matrix, uix)
    with _gather_lock:
        per = _gather_cache.setdefault(matrix, OrderedDict())
        per[uix] = g
        per.move_to_end(uix)
        while len(per) > _GATHER_LRU:
            per.popitem(last=False)
    return g


def _sweep(
    matrix: RatingMatrix, g: _Gather, w: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(raw, cf, value, overlap) arrays over every user index in the matrix."""
    n_users = len(matrix.users)
    if w is None:
        x = g.dev_rep
        y = g.dev_u
    else:
        wr = w[g.itempos]
        x = wr * g.dev_rep
        y = wr * g.dev_u
    num = np.bincount(g.users, weights=x * y, minlength=n_users)
    den_a = np.bincount(g.users, weights=x * x, minlength=n_users)
    den_u = np.bincount(g.users, weights=y * y, minlength=n_users)
    overlap = np.bincount(g.users, minlength=n_users)
    denom = den_a * den_u
    raw = np.zeros(n_users)
    mask = denom > 0
    raw[mask] = num[mask] / np.sqrt(denom[mask])
    np.clip(raw, -1.0, 1.0, out=raw)
    cf = np.minimum(overlap, SIGNIFICANCE_OVERLAP) / SIGNIFICANCE_OVERLAP
    value = raw * cf
    return raw, cf, value, overlap


def rank_candidates(
    a: UserId,
    target: ItemId,
    matrix: RatingMatrix,
    weights: WeightVector | None = None,
    min_sim: float | None = None,
) -> list[SimilarityScore]:
    """All raters of the target (minus the active user, minus zero-overlap
    candidates), sorted by damped similarity descending, ties by user id."""
    aix = matrix._user_index(a)
    if not matrix.has_item(target):
        return []
    tix = matrix._item_index(target)
    cand = matrix._item_col(tix)[0]
    cand = cand[cand != aix]
    if cand.size == 0:
        return []

    g = _gather_for(matrix, aix)
    if weights is None:
        if g.pc is None:
            g.pc = _sweep(matrix, g)
        raw, cf, value, overlap = g.pc
    else:
        if weights.target_id != target:
            raise ValueError(
                f"weight vector was built for target {weights.target_id!r}, not {target!r}"
            )
        w = np.fromiter(
            (weights[iid] for iid in g.item_ids), dtype=np.float64, count=len(g.item_ids)
        )
        raw, cf, value, overlap = _sweep(matrix, g, w)

    keep = overlap[cand] > 0
    if min_sim is not None:
        keep &= value[cand] >= min_sim
    cand = cand[keep]
    if cand.size == 0:
        return []
    order = np.lexsort((cand, -value[cand]))
    cand = cand[order]
    users = matrix.users
    return [
        SimilarityScore(
            user_id=users[c],
            raw=float(raw[c]),
            cf=float(cf[c]),
            value=float(value[c]),
            overlap=int(overlap[c]),
        )
        for c in cand
    ]


def select_neighbors(
    a: UserId,
    target: ItemId,
    matrix: RatingMatrix,
    k: int,
    weights: WeightVector | None = None,
    min_sim: float | None = None,
) -> NeighborSet:
    """Top-k most similar raters of the target item."""
    if k < 1:
        raise ValueError("k must be >= 1")
    ranked = rank_candidates(a, target, matrix, weights=weights, min_sim=min_sim)
    return NeighborSet(target_item=target, active_user=a, neighbors=tuple(ranked[:k]))


def predict(
    a: UserId,
    target: ItemId,
    neighbors: NeighborSet,
    matrix: RatingMatrix,
    denominator: Denominator = "abs",
) -> Prediction:
    """Mean-centered weighted prediction, clamped to the 1-5 scale.

    Falls back to the active user's mean when there are no usable neighbors
    or the similarity mass is (numerically) zero.
    """
    if neighbors.target_item != target or neighbors.active_user != a:
        raise ValueError("neighbor set does not match the requested user/item pair")
    if not matrix.has_user(a):
        raise KeyError(f"active user {a!r} has no training ratings")
    mean_a = matrix.mean_of(a)

    num = 0.0
    den = 0.0
    for s in neighbors.neighbors:
        r_ut = matrix.rating(s.user_id, target)
        if r_ut is None:
            raise ValueError(
                f"neighbor {s.user_id!r} has no training rating for item {target!r}"
            )
        num += (r_ut - matrix.mean_of(s.user_id)) * s.value
        den += abs(s.value) if denominator == "abs" else s.value

    if not neighbors.neighbors or abs(den) < _DEN_EPS:
        return Prediction(value=_clamp(mean_a), fallback=True, n_neighbors=len(neighbors))
    return Prediction(
        value=_clamp(mean_a + num / den), fallback=False, n_neighbors=len(neighbors)
    )


def _clamp(x: float) -> float:
    return min(5.0, max(1.0, x))
