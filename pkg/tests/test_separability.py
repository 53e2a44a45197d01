from __future__ import annotations

import numpy as np
import pytest

from deepsep.errors import (CoincidentCentroids, ConstantIndex, DegenerateWithin,
                            KeyMismatch)
from deepsep.separability import (ClusteredSet, DsiTable, IndexTriple,
                                  calinski_harabasz, davies_bouldin, dsi,
                                  dsi_repeat_mean, index_triple,
                                  normalize_indices, pca_fit, pca_sweep,
                                  pca_transform, silhouette)

from conftest import random_clustered_set
from oracles import brute_calinski_harabasz, brute_davies_bouldin, brute_silhouette

TWO_CLUSTERS_1D = ClusteredSet.from_labeled(
    np.array([[0.0], [2.0], [10.0], [12.0]]), ["a", "a", "b", "b"])


class TestFixtureValues:
    # constants below were computed with the brute-force oracles in oracles.py

    def test_calinski_harabasz_two_cluster_fixture(self):
        assert calinski_harabasz(TWO_CLUSTERS_1D) == pytest.approx(50.0, abs=1e-9)

    def test_davies_bouldin_two_cluster_fixture(self):
        assert davies_bouldin(TWO_CLUSTERS_1D) == pytest.approx(0.2, abs=1e-9)

    def test_silhouette_two_cluster_fixture(self):
        assert silhouette(TWO_CLUSTERS_1D) == pytest.approx(79.0 / 99.0, abs=1e-9)

    def test_silhouette_clean_separation(self):
        cs = ClusteredSet.from_labeled(np.array([[0.0], [0.0], [10.0], [10.0]]),
                                       ["a", "a", "b", "b"])
        assert silhouette(cs) == pytest.approx(1.0, abs=1e-12)

    def test_davies_bouldin_zero_dispersion(self):
        cs = ClusteredSet.from_labeled(
            np.array([[0.0, 0.0], [0.0, 0.0], [10.0, 10.0], [10.0, 10.0]]),
            ["a", "a", "b", "b"])
        assert davies_bouldin(cs) == 0.0

    def test_calinski_harabasz_degenerate_within(self):
        cs = ClusteredSet.from_labeled(
            np.array([[0.0, 0.0], [0.0, 0.0], [10.0, 10.0], [10.0, 10.0]]),
            ["a", "a", "b", "b"])
        with pytest.raises(DegenerateWithin):
            calinski_harabasz(cs)

    def test_davies_bouldin_coincident_centroids(self):
        cs = ClusteredSet.from_labeled(
            np.array([[-1.0], [1.0], [-2.0], [2.0]]), ["a", "a", "b", "b"])
        with pytest.raises(CoincidentCentroids):
            davies_bouldin(cs)


class TestBruteForceAgreement:
    def test_indices_match_brute_force_on_random_sets(self):
        rng = np.random.default_rng(1234)
        for _ in range(60):
            cs = random_clustered_set(rng)
            vec = [list(v) for v in cs.vectors]
            lab = list(cs.labels)
            assert calinski_harabasz(cs) == pytest.approx(
                brute_calinski_harabasz(vec, lab), abs=1e-9, rel=1e-9)
            assert davies_bouldin(cs) == pytest.approx(
                brute_davies_bouldin(vec, lab), abs=1e-9, rel=1e-9)
            assert silhouette(cs) == pytest.approx(
                brute_silhouette(vec, lab), abs=1e-9, rel=1e-9)

    def test_singleton_cluster_contributes_zero_width(self):
        vec = np.array([[0.0], [1.0], [2.0], [40.0]])
        cs = ClusteredSet.from_labeled(vec, ["a", "a", "a", "b"])
        assert silhouette(cs) == pytest.approx(brute_silhouette(
            [list(v) for v in vec], ["a", "a", "a", "b"]), abs=1e-12)


def similarity_transform(rng, vectors):
    """Random rotation/reflection + positive scale + translation."""
    d = vectors.shape[1]
    q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    scale = float(rng.uniform(0.3, 3.0))
    shift = rng.normal(scale=10.0, size=d)
    return vectors @ q.T * scale + shift


class TestInvariances:
    def test_similarity_transform_invariance(self):
        rng = np.random.default_rng(77)
        for _ in range(25):
            cs = random_clustered_set(rng)
            moved = ClusteredSet(vectors=similarity_transform(rng, cs.vectors),
                                 labels=cs.labels, label_names=cs.label_names)
            assert calinski_harabasz(moved) == pytest.approx(calinski_harabasz(cs), rel=1e-9)
            assert davies_bouldin(moved) == pytest.approx(davies_bouldin(cs), rel=1e-9)
            assert silhouette(moved) == pytest.approx(silhouette(cs), abs=1e-9)

    def test_translation_invariance_fixture(self):
        shifted = ClusteredSet(vectors=TWO_CLUSTERS_1D.vectors + 5.0,
                               labels=TWO_CLUSTERS_1D.labels,
                               label_names=TWO_CLUSTERS_1D.label_names)
        assert calinski_harabasz(shifted) == pytest.approx(50.0, abs=1e-9)

    def test_uniform_scaling_invariance_fixture(self):
        scaled = ClusteredSet(vectors=TWO_CLUSTERS_1D.vectors * 3.0,
                              labels=TWO_CLUSTERS_1D.labels,
                              label_names=TWO_CLUSTERS_1D.label_names)
        assert davies_bouldin(scaled) == pytest.approx(0.2, abs=1e-9)

    def test_mirror_invariance_fixture(self):
        mirrored = ClusteredSet(vectors=-TWO_CLUSTERS_1D.vectors,
                                labels=TWO_CLUSTERS_1D.labels,
                                label_names=TWO_CLUSTERS_1D.label_names)
        assert silhouette(mirrored) == pytest.approx(79.0 / 99.0, abs=1e-9)

    def test_sample_permutation_invariance(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            cs = random_clustered_set(rng)
            perm = rng.permutation(cs.n)
            shuffled = ClusteredSet(vectors=cs.vectors[perm], labels=cs.labels[perm],
                                    label_names=cs.label_names)
            before = index_triple(cs)
            after = index_triple(shuffled)
            assert after.ch == pytest.approx(before.ch, rel=1e-12)
            assert after.db == pytest.approx(before.db, rel=1e-12)
            assert after.s == pytest.approx(before.s, abs=1e-12)

    def test_cluster_label_permutation_invariance(self):
        rng = np.random.default_rng(6)
        cs = random_clustered_set(rng, max_k=3)
        relabel = dict(zip(range(cs.k), rng.permutation(cs.k)))
        renamed = ClusteredSet.from_labeled(
            cs.vectors, [int(relabel[int(l)]) for l in cs.labels])
        before, after = index_triple(cs), index_triple(renamed)
        assert after.ch == pytest.approx(before.ch, rel=1e-12)
        assert after.db == pytest.approx(before.db, rel=1e-12)
        assert after.s == pytest.approx(before.s, abs=1e-12)

    def test_separation_monotonicity(self):
        # moving the two 1-D clusters apart (dispersion fixed) improves every index
        def fixture(gap):
            pts = np.array([[0.0], [2.0], [gap], [gap + 2.0]])
            return ClusteredSet.from_labeled(pts, ["a", "a", "b", "b"])

        near, far = fixture(10.0), fixture(20.0)
        assert calinski_harabasz(far) > calinski_harabasz(near)
        assert davies_bouldin(far) < davies_bouldin(near)
        assert silhouette(far) > silhouette(near)


class TestNormalizationAndDsi:
    def test_minmax_endpoints(self):
        raw = {
            ("n", "l1"): IndexTriple(1.0, 1.0, -0.5),
            ("n", "l2"): IndexTriple(3.0, 2.0, 0.0),
            ("n", "l3"): IndexTriple(5.0, 3.0, 0.5),
        }
        table = normalize_indices(raw)
        ch_norms = [r.ch_norm for r in table.rows]
        assert ch_norms == pytest.approx([0.0, 0.5, 1.0], abs=1e-12)
        assert [r.db_norm for r in table.rows] == pytest.approx([0.0, 0.5, 1.0], abs=1e-12)
        assert [r.s_norm for r in table.rows] == pytest.approx([0.0, 0.5, 1.0], abs=1e-12)

    def test_constant_index_rejected(self):
        raw = {
            ("n", "l1"): IndexTriple(1.0, 1.0, 0.5),
            ("n", "l2"): IndexTriple(1.0, 1.0, 0.5),
        }
        with pytest.raises(ConstantIndex):
            normalize_indices(raw)

    def test_normalization_set_monotone(self):
        # shrinking the normalization set rescales values but never reorders them
        rng = np.random.default_rng(11)
        raw_big = {
            ("a", f"l{i}"): IndexTriple(*rng.uniform(0.1, 5.0, size=3)) for i in range(6)
        }
        raw_small = {k: raw_big[k] for k in list(raw_big)[:4]}
        big = normalize_indices(raw_big)
        small = normalize_indices(raw_small)
        keys = list(raw_small)
        order_big = sorted(keys, key=lambda k: big.row(*k).ch_norm)
        order_small = sorted(keys, key=lambda k: small.row(*k).ch_norm)
        assert order_big == order_small

    def test_dsi_extremes(self):
        assert dsi(1.0, 0.0, 1.0) == 1.0
        assert dsi(0.5, 0.5, 0.5) == 0.5
        assert dsi(0.0, 1.0, 0.0) == 0.0

    def test_dsi_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            dsi(1.1, 0.0, 0.0)

    def test_dsi_in_unit_interval_for_any_table(self):
        rng = np.random.default_rng(3)
        raw = {("n", f"l{i}"): IndexTriple(*rng.uniform(0.01, 9.0, 3)) for i in range(8)}
        table = normalize_indices(raw)
        assert all(0.0 <= r.dsi <= 1.0 for r in table.rows)


class TestPca:
    def test_full_rank_preserves_pairwise_distances(self):
        rng = np.random.default_rng(42)
        x = rng.normal(size=(20, 2))
        model = pca_fit(x, 2)
        y = pca_transform(model, x)
        dx = np.linalg.norm(x[:, None] - x[None, :], axis=2)
        dy = np.linalg.norm(y[:, None] - y[None, :], axis=2)
        assert np.max(np.abs(dx - dy)) < 1e-8

    def test_line_data_has_zero_trailing_variance(self):
        t = np.linspace(0, 1, 15)
        x = np.stack([t, 2 * t, -t], axis=1)
        model = pca_fit(x, 3)
        assert model.explained_variance[0] > 0
        assert model.explained_variance[1] == pytest.approx(0.0, abs=1e-16)
        assert model.explained_variance[2] == pytest.approx(0.0, abs=1e-16)

    def test_variances_match_covariance_eigenvalues(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(50, 10))
        model = pca_fit(x, 10)
        assert np.all(np.diff(model.explained_variance) <= 1e-12)
        centered = x - x.mean(axis=0)
        eigvals = np.sort(np.linalg.eigvalsh(centered.T @ centered / len(x)))[::-1]
        assert model.explained_variance == pytest.approx(eigvals, abs=1e-9)

    def test_components_orthonormal_and_sign_fixed(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=(30, 6))
        model = pca_fit(x, 6)
        gram = model.components @ model.components.T
        assert np.max(np.abs(gram - np.eye(6))) < 1e-8
        for row in model.components:
            assert row[np.argmax(np.abs(row))] > 0

    def test_m_bounds_enforced(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=(5, 3))
        with pytest.raises(ValueError):
            pca_fit(x, 4)
        with pytest.raises(ValueError):
            pca_fit(x, 0)


class TestPcaSweep:
    def test_full_dim_reproduces_unprojected_triple(self):
        rng = np.random.default_rng(21)
        cs = random_clustered_set(rng, max_k=3, max_dim=5)
        d = cs.vectors.shape[1]
        dims = sorted({2, d} | ({3} if d >= 3 else set()))
        points = pca_sweep(cs, dims)
        full = next(p for p in points if p.dim == d)
        base = index_triple(cs)
        assert full.raw.ch == pytest.approx(base.ch, rel=1e-8)
        assert full.raw.db == pytest.approx(base.db, rel=1e-8)
        assert full.raw.s == pytest.approx(base.s, abs=1e-8)

    def test_one_row_per_requested_dim(self):
        rng = np.random.default_rng(22)
        cs = random_clustered_set(rng, max_k=3, max_dim=6)
        d = cs.vectors.shape[1]
        dims = sorted({2, d} | {max(2, d // 2)})
        points = pca_sweep(cs, dims)
        assert [p.dim for p in points] == dims

    def test_dims_must_include_two_and_full(self):
        rng = np.random.default_rng(23)
        cs = random_clustered_set(rng, max_k=2, max_dim=5)
        d = cs.vectors.shape[1]
        with pytest.raises(ValueError):
            pca_sweep(cs, [d])
        with pytest.raises(ValueError):
            pca_sweep(cs, [2] if d != 2 else [2, 1])


class TestRepeatMean:
    def _table(self, value: float) -> DsiTable:
        raw = {("n", "l1"): IndexTriple(1.0, 1.0, 0.1),
               ("n", "l2"): IndexTriple(2.0, 2.0, 0.2)}
        table = normalize_indices(raw)
        # rewrite dsi cells to a controlled value for the averaging test
        rows = tuple(
            type(r)(network=r.network, layer=r.layer, raw=r.raw, ch_norm=r.ch_norm,
                    db_norm=r.db_norm, s_norm=r.s_norm,
                    dsi=value if r.layer == "l1" else r.dsi)
            for r in table.rows)
        return DsiTable(rows=rows, normalization_set=table.normalization_set)

    def test_single_table_is_identity_with_zero_std(self):
        t = self._table(0.7)
        cells = dsi_repeat_mean([t])
        cell = next(c for c in cells if c.layer == "l1")
        assert cell.dsi_mean == pytest.approx(0.7)
        assert cell.dsi_std == 0.0

    def test_two_point_statistics(self):
        cells = dsi_repeat_mean([self._table(0.4), self._table(0.6)])
        cell = next(c for c in cells if c.layer == "l1")
        assert cell.dsi_mean == pytest.approx(0.5, abs=1e-12)
        assert cell.dsi_std == pytest.approx(0.1, abs=1e-12)  # population convention

    def test_key_mismatch_rejected(self):
        t1 = self._table(0.4)
        raw = {("n", "l1"): IndexTriple(1.0, 1.0, 0.1),
               ("n", "OTHER"): IndexTriple(2.0, 2.0, 0.2)}
        t2 = normalize_indices(raw)
        with pytest.raises(KeyMismatch):
            dsi_repeat_mean([t1, t2])


class TestClusteredSetValidation:
    def test_rejects_empty_cluster(self):
        with pytest.raises(ValueError):
            ClusteredSet(vectors=np.zeros((3, 1)), labels=np.array([0, 0, 0]),
                         label_names=(0, 1))

    def test_rejects_single_cluster(self):
        with pytest.raises(ValueError):
            ClusteredSet.from_labeled(np.zeros((3, 1)), ["a", "a", "a"])

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            ClusteredSet.from_labeled(np.array([[0.0], [np.nan], [1.0]]), ["a", "b", "b"])

    def test_rejects_too_few_samples(self):
        with pytest.raises(ValueError):
            ClusteredSet.from_labeled(np.zeros((2, 1)), ["a", "b"])
