"""Content-based item weights relative to a target movie.

Two movies are compared through 0/1 feature vectors over the union of their
genres and directors plus the intersection of their actors (actor lists vary
wildly in length across metadata sources, so only shared actors count). The
weight of a catalog movie against the target is a smoothed cosine: matching
pairs get (1 + shared features) / (norm product), zero-overlap pairs get a
small positive floor so they never dominate nor vanish.
"""

from __future__ import annotations

import math
import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Iterable, Literal, Mapping

from .data import FeatureVector, ItemId, MovieProfile

K0Branch = Literal["mv", "literal"]

DEFAULT_MAX_TARGETS = 1024


def _norm_label(label: str) -> str:
    return label.strip().casefold()


def _norm_set(labels: Iterable[str]) -> frozenset[str]:
    return frozenset(_norm_label(x) for x in labels)


def _profiles_of(store) -> Mapping[ItemId, MovieProfile]:
    """Accept a ProfileStore or a bare item_id -> MovieProfile mapping."""
    return store.profiles if hasattr(store, "profiles") else store


@dataclass(frozen=True)
class WeightVector:
    """Content weights of catalog items relative to one target item."""

    target_id: ItemId
    weights: dict[ItemId, float]
    max_feature_count: int

    def __getitem__(self, item_id: ItemId) -> float:
        try:
            return self.weights[item_id]
        except KeyError:
            raise KeyError(
                f"no weight for item {item_id!r} relative to target {self.target_id!r}"
            ) from None


def build_vectors(
    profile_m: MovieProfile, profile_t: MovieProfile
) -> tuple[FeatureVector, FeatureVector]:
    """Build the two aligned 0/1 vectors for a movie pair.

    The shared universe is: union of genres, union of directors, and only the
    actors present in both profiles, each block sorted for determinism.
    Directors and actors are distinct namespaces even when names collide.
    """
    g_m, g_t = _norm_set(profile_m.genres), _norm_set(profile_t.genres)
    d_m, d_t = _norm_set(profile_m.directors), _norm_set(profile_t.directors)
    a_common = _norm_set(profile_m.actors) & _norm_set(profile_t.actors)

    universe = (
        [f"genre:{g}" for g in sorted(g_m | g_t)]
        + [f"director:{d}" for d in sorted(d_m | d_t)]
        + [f"actor:{a}" for a in sorted(a_common)]
    )
    m_features = (
        {f"genre:{g}" for g in g_m}
        | {f"director:{d}" for d in d_m}
        | {f"actor:{a}" for a in a_common}
    )
    t_features = (
        {f"genre:{g}" for g in g_t}
        | {f"director:{d}" for d in d_t}
        | {f"actor:{a}" for a in a_common}
    )
    comp_m = tuple(1 if f in m_features else 0 for f in universe)
    comp_t = tuple(1 if f in t_features else 0 for f in universe)
    return (
        FeatureVector(tuple(universe), comp_m),
        FeatureVector(tuple(universe), comp_t),
    )


def cosine(v_m: FeatureVector, v_t: FeatureVector) -> float:
    """Cosine similarity of two aligned 0/1 vectors, in [0, 1]."""
    if v_m.universe != v_t.universe:
        raise ValueError("vectors were built over different feature universes")
    dot = sum(a * b for a, b in zip(v_m.components, v_t.components))
    nm = sum(v_m.components)
    nt = sum(v_t.components)
    if nm == 0 or nt == 0:
        raise ValueError("cannot normalize an all-zero feature vector")
    # sqrt of the integer product is exact for 0/1 vectors, so identical
    # vectors give exactly 1.0.
    value = dot / math.sqrt(nm * nt)
    return min(1.0, max(0.0, value))


def _pair_counts(
    g_m: frozenset[str],
    d_m: frozenset[str],
    a_m: frozenset[str],
    g_t: frozenset[str],
    d_t: frozenset[str],
    a_t: frozenset[str],
) -> tuple[int, int, int]:
    """(shared feature count, |M| norm squared, |T| norm squared) for a pair.

    Equivalent to building the trimmed vectors and taking dot/norms: the
    actor intersection contributes to both vectors and to the dot product.
    """
    a_common = len(a_m & a_t)
    shared = len(g_m & g_t) + len(d_m & d_t) + a_common
    norm_m_sq = len(g_m) + len(d_m) + a_common
    norm_t_sq = len(g_t) + len(d_t) + a_common
    return shared, norm_m_sq, norm_t_sq


def item_weight(
    profile_m: MovieProfile,
    profile_t: MovieProfile,
    max_feature_count: int,
    k0_branch: K0Branch = "mv",
) -> float:
    """Smoothed content weight of movie M relative to target T, always > 0.

    With k shared features: (1 + k) / (|M| * |T|). With none, the default
    "mv" branch returns the constant floor 1/max_feature_count (the feature
    count of the richest catalog movie); "literal" keeps 1 / (|M| * |T|),
    which can reach 1.0 for two single-feature movies that share nothing.
    """
    if max_feature_count < 1:
        raise ValueError("max_feature_count must be >= 1")
    shared, nm_sq, nt_sq = _pair_counts(
        _norm_set(profile_m.genres),
        _norm_set(profile_m.directors),
        _norm_set(profile_m.actors),
        _norm_set(profile_t.genres),
        _norm_set(profile_t.directors),
        _norm_set(profile_t.actors),
    )
    if shared >= 1:
        return (1 + shared) / (math.sqrt(nm_sq) * math.sqrt(nt_sq))
    if k0_branch == "literal":
        if nm_sq == 0 or nt_sq == 0:
            raise ValueError(
                "literal zero-overlap weight is undefined for a movie with no "
                "features in the comparison universe"
            )
        return 1.0 / (math.sqrt(nm_sq) * math.sqrt(nt_sq))
    return 1.0 / max_feature_count


class ProfileCatalog:
    """Normalized feature sets for a profile store, shared by weight lookups."""

    def __init__(self, store):
        profiles = _profiles_of(store)
        self._sets: dict[ItemId, tuple[frozenset[str], frozenset[str], frozenset[str]]] = {}
        max_count = 1
        for item_id, profile in profiles.items():
            g = _norm_set(profile.genres)
            d = _norm_set(profile.directors)
            a = _norm_set(profile.actors)
            self._sets[item_id] = (g, d, a)
            max_count = max(max_count, len(g) + len(d) + len(a))
        self.max_feature_count = max_count

    def __contains__(self, item_id: ItemId) -> bool:
        return item_id in self._sets

    def feature_sets(
        self, item_id: ItemId
    ) -> tuple[frozenset[str], frozenset[str], frozenset[str]]:
        try:
            return self._sets[item_id]
        except KeyError:
            raise KeyError(f"item {item_id!r} has no profile") from None


class WeightCalculator:
    """Per-target content weights with a bounded memo.

    Weights are computed lazily for requested candidates and cached per
    target; the cache holds at most ``max_targets`` targets (LRU). Reads may
    come from many threads; a computation duplicated under contention is
    harmless because results are deterministic.
    """

    def __init__(
        self,
        store,
        k0_branch: K0Branch = "mv",
        max_targets: int = DEFAULT_MAX_TARGETS,
    ):
        if max_targets < 1:
            raise ValueError("max_targets must be >= 1")
        self._catalog = ProfileCatalog(store)
        self._k0_branch: K0Branch = k0_branch
        self._max_targets = max_targets
        self._cache: OrderedDict[ItemId, dict[ItemId, float]] = OrderedDict()
        self._lock = threading.Lock()

    @property
    def max_feature_count(self) -> int:
        return self._catalog.max_feature_count

    def weight(self, item_id: ItemId, target_id: ItemId) -> float:
        """Weight of a single catalog item relative to the target."""
        g_m, d_m, a_m = self._catalog.feature_sets(item_id)
        g_t, d_t, a_t = self._catalog.feature_sets(target_id)
        shared, nm_sq, nt_sq = _pair_counts(g_m, d_m, a_m, g_t, d_t, a_t)
        if shared >= 1:
            return (1 + shared) / (math.sqrt(nm_sq) * math.sqrt(nt_sq))
        if self._k0_branch == "literal":
            if nm_sq == 0 or nt_sq == 0:
                raise ValueError(
                    "literal zero-overlap weight is undefined for a movie with "
                    "no features in the comparison universe"
                )
            return 1.0 / (math.sqrt(nm_sq) * math.sqrt(nt_sq))
        return 1.0 / self._catalog.max_feature_count

    def weights_for(self, target_id: ItemId, candidates: Iterable[ItemId]) -> WeightVector:
        if target_id not in self._catalog:
            raise KeyError(f"target item {target_id!r} has no profile")
        wanted = list(candidates)
        with self._lock:
            memo = self._cache.get(target_id, {})
            known = {c: memo[c] for c in wanted if c in memo}
        computed = {
            c: self.weight(c, target_id) for c in wanted if c not in known
        }
        if computed:
            with self._lock:
                memo = self._cache.setdefault(target_id, {})
                memo.update(computed)
                self._cache.move_to_end(target_id)
                while len(self._cache) > self._max_targets:
                    self._cache.popitem(last=False)
        weights = {c: known[c] if c in known else computed[c] for c in wanted}
        return WeightVector(
            target_id=target_id,
            weights=weights,
            max_feature_count=self._catalog.max_feature_count,
        )


def weights_for_target(
    target_id: ItemId,
    store,
    candidates: Iterable[ItemId],
    k0_branch: K0Branch = "mv",
) -> WeightVector:
    """One-shot weight computation; repeated evaluation should hold a WeightCalculator."""
    return WeightCalculator(store, k0_branch=k0_branch).weights_for(target_id, candidates)
