import numpy as np
import pytest

from rlsel.errors import ConfigurationError, ParameterError
from rlsel.scoring import ScoringParams, build_score_table
from rlsel.selection import (
    SubsetManifest,
    candidate_value,
    cosine_distance,
    diversity,
    greedy_select,
    random_select,
)

from conftest import make_dataset


# --- independent step-wise brute-force selector (the oracle) ---------------
#
# Recomputes every candidate's diversity and value from scratch at every
# step with its own inline math; shares no code with the engine loop.

def _oracle_cos_dist(a, b):
    na = np.sqrt(np.sum(a * a))
    nb = np.sqrt(np.sum(b * b))
    if na < 1e-12 or nb < 1e-12:
        return 1.0
    d = 1.0 - float(np.dot(a, b) / (na * nb))
    return min(2.0, max(0.0, d))


def _oracle_minmax(values):
    lo, hi = min(values), max(values)
    if hi == lo:
        return [0.5] * len(values)
    return [(v - lo) / (hi - lo) for v in values]


def brute_force_select(ids, features, l_norm, r_norm, lam, m):
    selected = []
    remaining = list(range(len(ids)))
    while len(selected) < m:
        d_raw = []
        for i in remaining:
            if not selected:
                d_raw.append(1.0)
            else:
                d_raw.append(min(_oracle_cos_dist(features[i], features[j]) for j in selected))
        d_norm = _oracle_minmax(d_raw)
        values = []
        for pos, i in enumerate(remaining):
            base = l_norm[i] + lam * r_norm[i] if r_norm is not None else l_norm[i]
            values.append(d_norm[pos] * base)
        best = max(values)
        tied = [remaining[pos] for pos, v in enumerate(values) if v == best]
        winner = min(tied, key=lambda i: ids[i])
        selected.append(winner)
        remaining.remove(winner)
    return [ids[i] for i in selected]


# --- primitive ops ----------------------------------------------------------


class TestCosineDistance:
    def test_parallel(self):
        assert cosine_distance(np.array([1.0, 0.0]), np.array([2.0, 0.0])) == 0.0

    def test_orthogonal(self):
        assert cosine_distance(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 1.0

    def test_antiparallel(self):
        assert cosine_distance(np.array([1.0, 0.0]), np.array([-1.0, 0.0])) == 2.0

    def test_zero_vector_neutral(self):
        assert cosine_distance(np.zeros(2), np.array([1.0, 0.0])) == 1.0

    def test_range(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            a, b = rng.normal(size=3), rng.normal(size=3)
            assert 0.0 <= cosine_distance(a, b) <= 2.0

    def test_dim_mismatch(self):
        with pytest.raises(ParameterError):
            cosine_distance(np.ones(2), np.ones(3))


class TestDiversity:
    def test_candidate_already_represented(self):
        d = diversity(np.array([1.0, 0.0]), [np.array([1.0, 0.0]), np.array([0.0, 1.0])])
        assert d == 0.0

    def test_empty_set_convention(self):
        assert diversity(np.array([1.0, 0.0]), []) == 1.0

    def test_single_orthogonal_member(self):
        assert diversity(np.array([1.0, 0.0]), [np.array([0.0, 1.0])]) == 1.0

    def test_anti_monotone_under_growth(self):
        # min over a superset can only shrink (nonempty base sets)
        rng = np.random.default_rng(1)
        for _ in range(100):
            x = rng.normal(size=4)
            pool = [rng.normal(size=4) for _ in range(6)]
            for cut in range(1, 6):
                small, big = pool[:cut], pool[: cut + 1]
                assert diversity(x, big) <= diversity(x, small)


class TestCandidateValue:
    def test_all_max(self):
        assert candidate_value(1.0, 1.0, 1.0, 1.0) == 2.0

    def test_zero_diversity_vetoes(self):
        assert candidate_value(0.8, 0.9, 0.0, 1.0) == 0.0

    def test_arithmetic(self):
        assert candidate_value(0.5, 0.5, 1.0, 1.0) == 1.0

    def test_r_absent(self):
        assert candidate_value(0.6, None, 0.5, 7.0) == 0.3


# --- greedy selection -------------------------------------------------------


def scored_dataset(rng, n, dim, with_r, duplicates=0):
    rows = []
    for i in range(n):
        rewards = list(rng.random(size=int(rng.integers(1, 5))))
        feats = list(rng.normal(size=dim))
        grad = list(rng.normal(size=dim)) if with_r else None
        rows.append((f"x{i:02d}", rewards, feats, grad))
    for d in range(duplicates):
        src = rows[int(rng.integers(0, n))]
        rows.append((f"y{d:02d}", src[1], src[2], src[3]))
    ds = make_dataset(rows)
    directions = [r.grad for r in ds.records] if with_r else None
    table = build_score_table(ds, ScoringParams(), directions)
    return ds, table


class TestGreedySelect:
    def test_one_hot_l_order(self):
        # empty-set step is pure argmax on L; second step degenerates to L too
        ds = make_dataset(
            [
                ("a", [0.5], [1, 0, 0, 0]),
                ("b", [0.45], [0, 1, 0, 0]),
                ("c", [0.40], [0, 0, 1, 0]),
                ("d", [0.35], [0, 0, 0, 1]),
            ]
        )
        table = build_score_table(ds)
        manifest = greedy_select(table, ds, m=2, lam=1.0)
        assert manifest.ids == ("a", "b")

    def test_exhaustion(self):
        rng = np.random.default_rng(2)
        ds, table = scored_dataset(rng, 6, 3, with_r=False)
        manifest = greedy_select(table, ds, m=6)
        assert sorted(manifest.ids) == sorted(ds.ids)
        assert [p.step for p in manifest.picks] == list(range(6))

    def test_tie_breaks_to_smallest_id(self):
        ds = make_dataset(
            [("b", [0.5], [1.0, 0.0]), ("a", [0.5], [1.0, 0.0]), ("c", [0.1], [0.0, 1.0])]
        )
        table = build_score_table(ds)
        manifest = greedy_select(table, ds, m=2)
        assert manifest.ids[0] == "a"

    def test_m_validation(self):
        rng = np.random.default_rng(3)
        ds, table = scored_dataset(rng, 4, 2, with_r=False)
        with pytest.raises(ParameterError):
            greedy_select(table, ds, m=0)
        with pytest.raises(ParameterError):
            greedy_select(table, ds, m=5)

    def test_missing_id_reported(self):
        rng = np.random.default_rng(4)
        ds, table = scored_dataset(rng, 4, 2, with_r=False)
        ds2, _ = scored_dataset(np.random.default_rng(5), 5, 2, with_r=False)
        with pytest.raises(ConfigurationError, match="missing id"):
            greedy_select(table, ds2, m=2)

    def test_representativeness_required_but_absent(self):
        rng = np.random.default_rng(6)
        ds, table = scored_dataset(rng, 4, 2, with_r=False)
        with pytest.raises(ConfigurationError, match="representativeness"):
            greedy_select(table, ds, m=2, with_representativeness=True)

    def test_no_duplicates_and_length(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n = int(rng.integers(3, 12))
            m = int(rng.integers(1, n + 1))
            ds, table = scored_dataset(rng, n, 3, with_r=bool(rng.integers(0, 2)))
            manifest = greedy_select(table, ds, m=m)
            assert len(manifest.ids) == m
            assert len(set(manifest.ids)) == m

    def test_zero_diversity_veto(self):
        # y00 duplicates a strong sample; it must wait until only
        # zero-value candidates remain
        ds = make_dataset(
            [
                ("a", [0.5], [1.0, 0.0]),
                ("b", [0.45], [0.8, 0.6]),
                ("c", [0.4], [0.0, 1.0]),
                ("y00", [0.5], [1.0, 0.0]),
            ]
        )
        table = build_score_table(ds)
        manifest = greedy_select(table, ds, m=4)
        # a wins step 0; its twin y00 has D=0 afterwards and must be last
        assert manifest.ids[0] == "a"
        assert manifest.ids[-1] == "y00"

    def test_argmax_invariant_to_score_scaling(self):
        # V is positively homogeneous in (L_norm + lam R_norm); scaling both
        # by c > 0 cannot change any argmax
        rng = np.random.default_rng(8)
        ds, table = scored_dataset(rng, 10, 3, with_r=True)
        base = greedy_select(table, ds, m=5, lam=1.0).ids
        for c in (0.25, 4.0):
            scaled = type(table)(
                ids=table.ids,
                r_bar=table.r_bar,
                l=table.l,
                l_norm=c * table.l_norm,
                params=table.params,
                r=table.r,
                r_norm=c * table.r_norm,
                d_g=table.d_g,
            )
            assert greedy_select(scaled, ds, m=5, lam=1.0).ids == base

    def test_manifest_round_trip(self, tmp_path):
        rng = np.random.default_rng(9)
        ds, table = scored_dataset(rng, 8, 3, with_r=True)
        manifest = greedy_select(table, ds, m=4, lam=0.5)
        path = tmp_path / "manifest.json"
        manifest.write(path)
        back = SubsetManifest.read(path)
        assert back == manifest


class TestOracleEquivalence:
    def test_engine_matches_brute_force(self):
        rng = np.random.default_rng(42)
        lams = [0.0, 0.5, 1.0, 10.0]
        checked = 0
        for trial in range(150):
            n = int(rng.integers(2, 13))
            dim = int(rng.integers(2, 5))
            with_r = bool(trial % 2)
            duplicates = int(rng.integers(0, 3)) if trial % 5 == 0 else 0
            ds, table = scored_dataset(rng, n, dim, with_r, duplicates)
            m = int(rng.integers(1, min(5, len(ds)) + 1))
            lam = lams[trial % len(lams)]
            engine = greedy_select(table, ds, m=m, lam=lam).ids
            feats = [r.features for r in ds.records]
            r_norm = table.r_norm if with_r else None
            oracle = brute_force_select(list(ds.ids), feats, table.l_norm, r_norm, lam, m)
            assert list(engine) == oracle, f"trial {trial}: {engine} != {oracle}"
            checked += 1
        assert checked == 150


class TestRandomSelect:
    def test_full_permutation(self):
        rng = np.random.default_rng(10)
        ds, _ = scored_dataset(rng, 7, 2, with_r=False)
        manifest = random_select(ds, 7, seed=3)
        assert sorted(manifest.ids) == sorted(ds.ids)
        assert manifest.mode == "random"
        assert all(p.d_norm is None and p.v is None for p in manifest.picks)

    def test_seed_determinism(self):
        rng = np.random.default_rng(11)
        ds, _ = scored_dataset(rng, 9, 2, with_r=False)
        assert random_select(ds, 4, seed=5) == random_select(ds, 4, seed=5)
        assert random_select(ds, 4, seed=5).ids != random_select(ds, 4, seed=6).ids

    def test_uniformity_monte_carlo(self):
        # m=1 over 2 samples: each chosen ~5000/10000 times, 4-sigma band
        ds = make_dataset([("a", [1], [1.0]), ("b", [1], [2.0])])
        hits = sum(random_select(ds, 1, seed=s).ids[0] == "a" for s in range(10000))
        sigma = (10000 * 0.25) ** 0.5
        assert abs(hits - 5000) < 4 * sigma
