import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from rlsel.errors import ConfigurationError, ParameterError
from rlsel.scoring import (
    ScoreTable,
    ScoringParams,
    build_score_table,
    global_direction,
    grad_directions,
    learnability,
    min_max_normalize,
    representativeness,
)

from conftest import make_dataset


class TestLearnability:
    def test_peak_at_mu(self):
        assert learnability(0.5, 0.5, 0.25) == 1.0

    def test_half_sigma_band(self):
        assert learnability(0.75, 0.5, 0.25) == pytest.approx(math.exp(-0.5), abs=1e-15)

    def test_symmetry(self):
        assert learnability(0.25, 0.5, 0.25) == learnability(0.75, 0.5, 0.25)

    def test_sigma_validation(self):
        with pytest.raises(ParameterError):
            learnability(0.5, 0.5, 0.0)
        with pytest.raises(ParameterError):
            learnability(0.5, 0.5, -1.0)

    @given(
        mu=st.floats(-2, 2),
        sigma=st.floats(0.01, 5),
        d1=st.floats(0.001, 3),
        d2=st.floats(0.001, 3),
    )
    @settings(max_examples=200, deadline=None)
    def test_decreasing_in_distance_and_reflective(self, mu, sigma, d1, d2):
        lo, hi = sorted([d1, d2])
        assert learnability(mu + hi, mu, sigma) <= learnability(mu + lo, mu, sigma)
        assert abs(learnability(mu + d1, mu, sigma) - learnability(mu - d1, mu, sigma)) < 1e-12


class TestMinMaxNormalize:
    def test_affine_rescale(self):
        np.testing.assert_allclose(min_max_normalize([2, 4, 6]), [0.0, 0.5, 1.0], atol=0)

    def test_degenerate_maps_to_half(self):
        np.testing.assert_array_equal(min_max_normalize([5, 5, 5]), [0.5, 0.5, 0.5])

    def test_endpoints(self):
        np.testing.assert_array_equal(min_max_normalize([0, 1]), [0.0, 1.0])

    def test_empty_rejected(self):
        with pytest.raises(ParameterError):
            min_max_normalize([])

    def test_non_finite_rejected(self):
        with pytest.raises(ParameterError):
            min_max_normalize([1.0, float("nan")])

    def test_idempotent_on_unit_span(self):
        v = np.array([0.0, 0.3, 0.7, 1.0])
        np.testing.assert_array_equal(min_max_normalize(v), v)

    @given(
        st.lists(st.floats(-100, 100), min_size=2, max_size=20),
        st.floats(0.01, 50),
        st.floats(-100, 100),
    )
    @settings(max_examples=200, deadline=None)
    def test_positive_affine_invariance(self, values, a, b):
        v = np.asarray(values)
        # a span below float resolution of the offset degenerates by design
        assume(v.max() - v.min() > 1e-3)
        np.testing.assert_allclose(
            min_max_normalize(a * v + b), min_max_normalize(v), atol=1e-9
        )

    def test_order_statistics_preserved(self):
        rng = np.random.default_rng(3)
        v = rng.normal(size=50)
        out = min_max_normalize(v)
        assert np.array_equal(np.argsort(v), np.argsort(out))


class TestGlobalDirection:
    def test_mean_of_two(self):
        np.testing.assert_array_equal(global_direction([[1, 0], [0, 1]]), [0.5, 0.5])

    def test_single(self):
        np.testing.assert_array_equal(global_direction([[3, 3]]), [3, 3])

    def test_cancellation(self):
        np.testing.assert_array_equal(global_direction([[1, 1], [-1, -1]]), [0, 0])

    def test_copies_of_same_vector_exact(self):
        u = np.array([0.3, -1.7, 2.2])
        np.testing.assert_array_equal(global_direction([u] * 7), u)

    def test_dim_mismatch(self):
        with pytest.raises(ParameterError, match="dimension mismatch"):
            global_direction([np.ones(2), np.ones(3)])


class TestRepresentativeness:
    def test_parallel(self):
        assert representativeness(np.array([1.0, 2.0]), np.array([1.0, 2.0])) == 1.0

    def test_orthogonal(self):
        assert representativeness(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_antiparallel(self):
        assert representativeness(np.array([1.0, 0.0]), np.array([-2.0, 0.0])) == -1.0

    def test_zero_norm_returns_zero(self):
        assert representativeness(np.zeros(3), np.ones(3)) == 0.0
        assert representativeness(np.ones(3), np.full(3, 1e-15)) == 0.0

    @given(st.floats(0.001, 1000), st.integers(0, 10))
    @settings(max_examples=100, deadline=None)
    def test_scale_invariance(self, c, seed):
        rng = np.random.default_rng(seed)
        d_i = rng.normal(size=4)
        d_g = rng.normal(size=4)
        assert abs(
            representativeness(c * d_i, d_g) - representativeness(d_i, d_g)
        ) < 1e-12


class TestScoringParams:
    def test_defaults(self):
        p = ScoringParams()
        assert (p.mu, p.sigma, p.lam) == (0.5, 0.25, 1.0)

    def test_validation(self):
        with pytest.raises(ParameterError):
            ScoringParams(sigma=0.0)
        with pytest.raises(ParameterError):
            ScoringParams(lam=-0.1)


class TestBuildScoreTable:
    def test_single_record_degenerate(self):
        ds = make_dataset([("a", [0.5], [1.0], [1.0])])
        table = build_score_table(ds, directions=grad_directions(ds))
        assert table.l_norm[0] == 0.5
        assert table.r_norm[0] == 0.5

    def test_three_record_closed_form(self):
        ds = make_dataset(
            [("a", [0.5], [1.0]), ("b", [0.9], [1.0]), ("c", [0.1], [1.0])]
        )
        table = build_score_table(ds)
        expected_l = np.array([1.0, math.exp(-1.28), math.exp(-1.28)])
        np.testing.assert_allclose(table.l, expected_l, atol=1e-12)
        np.testing.assert_allclose(table.l_norm, [1.0, 0.0, 0.0], atol=1e-12)

    def test_directions_absent(self):
        ds = make_dataset([("a", [0.5], [1.0]), ("b", [0.2], [2.0])])
        table = build_score_table(ds)
        assert table.r is None and table.r_norm is None and table.d_g is None
        assert not table.has_representativeness

    def test_direction_count_mismatch(self):
        ds = make_dataset([("a", [0.5], [1.0]), ("b", [0.2], [2.0])])
        with pytest.raises(ConfigurationError):
            build_score_table(ds, directions=[np.ones(2)])

    def test_missing_grad_is_hard_error(self):
        ds = make_dataset([("a", [0.5], [1.0], [1.0]), ("b", [0.2], [2.0])])
        with pytest.raises(ConfigurationError, match="no grad"):
            grad_directions(ds)

    def test_argmax_preserved_by_normalization(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            ds = make_dataset(
                [(f"r{i}", list(rng.random(size=3)), [1.0]) for i in range(12)]
            )
            table = build_score_table(ds)
            assert int(np.argmax(table.l)) == int(np.argmax(table.l_norm))

    def test_invariant_ranges(self):
        rng = np.random.default_rng(12)
        ds = make_dataset(
            [
                (f"r{i}", list(rng.random(size=4)), list(rng.normal(size=3)), list(rng.normal(size=2)))
                for i in range(30)
            ]
        )
        table = build_score_table(ds, directions=grad_directions(ds))
        assert np.all((table.l > 0) & (table.l <= 1))
        assert np.all((table.l_norm >= 0) & (table.l_norm <= 1))
        assert np.all((table.r >= -1) & (table.r <= 1))
        assert np.all((table.r_norm >= 0) & (table.r_norm <= 1))

    def test_json_round_trip(self, tmp_path):
        ds = make_dataset([("a", [0.5], [1.0], [1.0, 2.0]), ("b", [0.2], [2.0], [0.5, 0.1])])
        table = build_score_table(ds, ScoringParams(mu=0.4, sigma=0.3, lam=2.0), grad_directions(ds))
        path = tmp_path / "scores.json"
        table.write(path)
        back = ScoreTable.read(path)
        assert back.ids == table.ids
        assert back.params == table.params
        np.testing.assert_array_equal(back.l_norm, table.l_norm)
        np.testing.assert_array_equal(back.r_norm, table.r_norm)
        np.testing.assert_array_equal(back.d_g, table.d_g)
