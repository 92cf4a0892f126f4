"""Plain vs content-weighted user similarity, neighbor selection, prediction.

A small worked matrix shows how weighting the co-rated items by relevance to
the target movie reorders the neighborhood, and how the mean-centered
prediction formula uses the chosen neighbors.

Run:  python demos/02_similarity_and_prediction.py
"""

from contentcf import (
    Rating,
    WeightCalculator,
    build_matrix,
    pearson,
    predict,
    select_neighbors,
    weighted_pearson,
)
from contentcf.ingest import ProfileStore, assemble_profiles

# Nine users rate six movies (1..6). We predict user 1's rating for movie 6.
ratings = [
    # user 1 likes sci-fi (1, 2), dislikes romance (4, 5)
    (1, 1, 5), (1, 2, 4), (1, 4, 2), (1, 5, 1),
    # user 2 mirrors user 1 on sci-fi and rated the target
    (2, 1, 5), (2, 2, 5), (2, 4, 4), (2, 6, 5),
    # user 3 agrees on romance only
    (3, 4, 2), (3, 5, 1), (3, 1, 2), (3, 6, 2),
    # user 4 agrees everywhere but weakly
    (4, 1, 4), (4, 2, 4), (4, 4, 3), (4, 5, 2), (4, 6, 4),
    # users 5..9 add co-rating mass
    (5, 1, 3), (5, 2, 3), (5, 6, 3),
    (6, 1, 1), (6, 2, 2), (6, 4, 5), (6, 6, 1),
    (7, 2, 4), (7, 5, 2), (7, 6, 4),
    (8, 1, 5), (8, 4, 1), (8, 6, 5),
    (9, 1, 2), (9, 5, 4), (9, 6, 2),
]
matrix = build_matrix([Rating(u, i, v) for u, i, v in ratings])

# Movie 6 (the target) is a space opera; 1 and 2 share its genres, 4 and 5
# are romances sharing nothing with it.
movies = {
    1: ("Star Freight", ("Sci-Fi", "Adventure")),
    2: ("Moon Harbor", ("Sci-Fi", "Drama")),
    3: ("Quiet Fields", ("Drama",)),
    4: ("Letters Home", ("Romance",)),
    5: ("June Wedding", ("Romance", "Comedy")),
    6: ("Solar Crown", ("Sci-Fi", "Adventure")),
}
store: ProfileStore = assemble_profiles(movies)

active, target = 1, 6
print(f"predicting user {active}'s rating for movie {target} ({movies[target][0]})\n")

# Plain Pearson counts agreement on every co-rated movie equally.
print("plain Pearson similarity to user 1:")
for u in (2, 3, 4):
    raw, overlap = pearson(active, u, matrix)
    print(f"  user {u}: raw={raw:+.3f} over {overlap} co-rated movies")

# The weighted variant scales each co-rated movie's deviations by its content
# weight relative to the target, so agreeing on sci-fi movies matters more
# when predicting a sci-fi rating.
calc = WeightCalculator(store)
weights = calc.weights_for(target, matrix.ratings_of(active).keys())
print("\nweights of user 1's movies relative to the target:")
for item, w in sorted(weights.weights.items()):
    print(f"  movie {item} ({movies[item][0]:<12}): {w:.3f}")

print("\ncontent-weighted Pearson similarity to user 1:")
for u in (2, 3, 4):
    raw, overlap = weighted_pearson(active, u, target, matrix, weights)
    print(f"  user {u}: raw={raw:+.3f} over {overlap} co-rated movies")

# Neighbor selection considers only users who actually rated the target and
# damps similarities built on few co-rated movies (overlap/50).
plain = select_neighbors(active, target, matrix, k=3)
weighted = select_neighbors(active, target, matrix, k=3, weights=weights)
print("\ntop-3 neighbors, plain:   ",
      [(s.user_id, round(s.value, 4)) for s in plain.neighbors])
print("top-3 neighbors, weighted:",
      [(s.user_id, round(s.value, 4)) for s in weighted.neighbors])

# Prediction: active mean + similarity-weighted mean-centered neighbor votes.
for name, ns in (("plain", plain), ("weighted", weighted)):
    p = predict(active, target, ns, matrix)
    print(f"\n{name} prediction: {p.value:.4f}"
          f" ({p.n_neighbors} neighbors, fallback={p.fallback})")
