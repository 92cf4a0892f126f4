"""Rating and matrix construction: validation, means, rater lists, invariants."""

from __future__ import annotations

import pytest
from hypothesis import given, settings

from contentcf.data import MovieProfile, ProfileSource, Rating, build_matrix
from conftest import as_ratings, rating_triples


class TestRating:
    def test_valid_values(self):
        for v in (1, 2, 3, 4, 5):
            assert Rating(1, 2, v).value == v

    @pytest.mark.parametrize("bad", [0, 6, -1, 100])
    def test_out_of_range_rejected(self, bad):
        with pytest.raises(ValueError, match="out of range"):
            Rating(1, 2, bad)

    @pytest.mark.parametrize("bad", [2.5, "4", True])
    def test_non_integer_rejected(self, bad):
        with pytest.raises(ValueError):
            Rating(1, 2, bad)


class TestBuildMatrix:
    def test_user_mean(self):
        m = build_matrix(as_ratings([(1, 1, 4), (1, 2, 2)]))
        assert m.user_means[1] == pytest.approx(3.0, abs=1e-12)

    def test_item_raters(self):
        m = build_matrix(as_ratings([(1, 1, 4), (2, 1, 5)]))
        assert m.item_raters[1] == {1, 2}

    def test_duplicate_pair_rejected(self):
        with pytest.raises(ValueError, match=r"\(1, 1\)"):
            build_matrix(as_ratings([(1, 1, 4), (1, 1, 5)]))

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            build_matrix([])

    def test_lookup(self, toy_ratings):
        m = build_matrix(toy_ratings)
        assert m.rating(1, 10) == 4.0
        assert m.rating(1, 30) is None
        assert m.rating(99, 10) is None
        assert m.ratings_of(3) == {10: 1.0, 20: 5.0, 30: 3.0}
        assert m.raters_of(20) == {1, 3}
        assert m.mean_of(2) == 4.0

    def test_unknown_ids_raise(self, toy_ratings):
        m = build_matrix(toy_ratings)
        with pytest.raises(KeyError, match="99"):
            m.ratings_of(99)
        with pytest.raises(KeyError, match="99"):
            m.raters_of(99)


@settings(max_examples=200)
@given(rating_triples())
def test_matrix_invariants(triples):
    m = build_matrix(as_ratings(triples))
    values_by_user = {}
    for u, i, v in triples:
        values_by_user.setdefault(u, []).append(v)
    for u, vals in values_by_user.items():
        assert min(vals) <= m.user_means[u] <= max(vals)
        assert m.user_means[u] == pytest.approx(sum(vals) / len(vals), abs=1e-12)
    assert sum(len(r) for r in m.item_raters.values()) == len(triples)
    assert m.n_ratings == len(triples)


@settings(max_examples=100)
@given(rating_triples())
def test_matrix_input_order_irrelevant(triples):
    forward = build_matrix(as_ratings(triples))
    backward = build_matrix(as_ratings(triples[::-1]))
    assert forward.user_means == backward.user_means
    assert forward.item_raters == backward.item_raters


class TestMovieProfile:
    def test_genres_required(self):
        with pytest.raises(ValueError, match="no genres"):
            MovieProfile(item_id=1, title="x", genres=frozenset())

    def test_override_may_lack_genres(self):
        p = MovieProfile(
            item_id=1, title="x", genres=frozenset(), source=ProfileSource.OVERRIDE
        )
        assert p.genres == frozenset()

    def test_too_many_genres_rejected(self):
        with pytest.raises(ValueError, match="genres"):
            MovieProfile(item_id=1, title="x", genres={f"g{i}" for i in range(20)})

    def test_feature_count(self):
        p = MovieProfile(
            item_id=1, title="x", genres={"a", "b"}, directors={"d"}, actors={"x", "y"}
        )
        assert p.feature_count == 5
