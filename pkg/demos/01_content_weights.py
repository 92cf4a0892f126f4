"""How a movie's content weight against a target movie is computed.

Walks the feature-vector construction step by step: shared universe, the
common-actor trimming rule, cosine similarity, and the smoothed weight that
keeps zero-overlap movies at a small positive floor.

Run:  python demos/01_content_weights.py
"""

from contentcf import MovieProfile, build_vectors, cosine, item_weight

# Two movies with partially overlapping features. M and T share two genres
# and two actors; their directors differ entirely.
movie_m = MovieProfile(
    item_id="M",
    title="Movie M",
    genres={"G1", "G2"},
    directors={"D1", "D2"},
    actors={"A1", "A2", "A3"},
)
movie_t = MovieProfile(
    item_id="T",
    title="Movie T (the target)",
    genres={"G1", "G2", "G3"},
    directors={"D3"},
    actors={"A2", "A3"},
)

# The comparison universe is the union of genres and directors, but only the
# INTERSECTION of actors: actor lists vary wildly in length between metadata
# sources, so an actor counts only when both movies list it. Here A1 is
# dropped because only M has it.
vec_m, vec_t = build_vectors(movie_m, movie_t)
print("universe:  ", list(vec_m.universe))
print("M vector:  ", list(vec_m.components))
print("T vector:  ", list(vec_t.components))

dot = sum(a * b for a, b in zip(vec_m.components, vec_t.components))
print("\nshared features (dot product):", dot)  # G1, G2, A2, A3 -> 4

# Plain cosine: 4 / (sqrt(6) * sqrt(6)) = 4/6
print("cosine similarity:", round(cosine(vec_m, vec_t), 4))

# The smoothed weight adds 1 to the shared-feature count, so even one shared
# feature lifts a movie well above the zero-overlap floor:
#   (1 + 4) / (sqrt(6) * sqrt(6)) = 5/6
w = item_weight(movie_m, movie_t, max_feature_count=25)
print("smoothed weight of M relative to T:", round(w, 4))

# A movie sharing nothing with the target does not get weight 0 (that would
# erase its ratings from the similarity sums entirely) nor the degenerate
# literal value; it gets a small constant floor 1/max_feature_count, where
# max_feature_count is the feature count of the richest catalog movie.
stranger = MovieProfile(item_id="S", title="Stranger", genres={"G9"}, actors={"A9"})
print("\nzero-overlap weight (floor):", item_weight(stranger, movie_t, max_feature_count=25))
print("zero-overlap weight (literal branch):",
      item_weight(stranger, movie_t, max_feature_count=25, k0_branch="literal"))

# Weights can exceed 1 for near-identical movies; downstream similarity is
# scale-invariant, so only the relative ordering of weights matters.
twin = MovieProfile(item_id="W", title="Twin", genres={"G1", "G2", "G3"},
                    directors={"D3"}, actors={"A2", "A3"})
print("near-identical movie weight:", round(item_weight(twin, movie_t, 25), 4))
