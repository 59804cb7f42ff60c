import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from choldag.metrics import (
    best_shd_over_latent_relabeling,
    confusion_scores,
    max_weight_error,
    shd,
)


def adj(p, edges):
    out = np.zeros((p, p))
    for i, j in edges:
        out[i, j] = 1.0
    return out


def random_support(rng, p, density=0.2):
    mask = np.triu(rng.random((p, p)) < density, k=1)
    perm = rng.permutation(p)
    return mask[np.ix_(perm, perm)].astype(float)


class TestShd:
    def test_identical(self):
        g = adj(4, [(0, 1), (1, 2)])
        assert shd(g, g) == 0

    def test_reversal_counts_once(self):
        assert shd(adj(2, [(1, 0)]), adj(2, [(0, 1)])) == 1

    def test_reversal_as_two_option(self):
        assert shd(adj(2, [(1, 0)]), adj(2, [(0, 1)]), reversal_as_one=False) == 2

    def test_missing_edge(self):
        assert shd(adj(2, []), adj(2, [(0, 1)])) == 1

    def test_mixed_edits(self):
        pred = adj(4, [(0, 1), (2, 1), (0, 3)])
        truth = adj(4, [(0, 1), (1, 2), (2, 3)])
        # (2,1) is a reversal of (1,2): 1; (0,3) spurious: 1; (2,3) missing: 1
        assert shd(pred, truth) == 3

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            shd(np.zeros((2, 2)), np.zeros((3, 3)))

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_symmetric_and_zero_iff_equal(self, seed):
        rng = np.random.default_rng(seed)
        a = random_support(rng, 8)
        b = random_support(rng, 8)
        assert shd(a, b) == shd(b, a)
        assert (shd(a, b) == 0) == np.array_equal(a != 0, b != 0)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_triangle_inequality_without_reversals(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = (random_support(rng, 7) for _ in range(3))
        ab = shd(a, b, reversal_as_one=False)
        bc = shd(b, c, reversal_as_one=False)
        ac = shd(a, c, reversal_as_one=False)
        assert ac <= ab + bc


class TestConfusionScores:
    def test_perfect_prediction(self):
        g = random_support(np.random.default_rng(0), 10, 0.3)
        s = confusion_scores(g, g)
        assert s.tpr == 1.0 and s.fdr == 0.0 and s.f1 == 1.0 and s.shd == 0

    def test_empty_prediction_conventions(self):
        truth = adj(4, [(0, 1), (1, 2)])
        s = confusion_scores(np.zeros((4, 4)), truth)
        assert s.tpr == 0.0
        assert s.fdr == 0.0  # zero denominator convention
        assert s.shd == 2
        assert s.predicted_edges == 0

    def test_reported_confusion_counts(self):
        # 17 true edges, 15 predicted with 7 hits: TPR 7/17, FDR 8/15, N 15
        rng = np.random.default_rng(1)
        p = 20
        pairs = [(i, j) for i in range(p) for j in range(p) if i < j]
        rng.shuffle(pairs)
        truth_edges = pairs[:17]
        pred_edges = truth_edges[:7] + pairs[17:25]
        s = confusion_scores(adj(p, pred_edges), adj(p, truth_edges))
        assert round(s.tpr, 3) == 0.412
        assert round(s.fdr, 3) == 0.533
        assert s.predicted_edges == 15

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_relabeling_invariance(self, seed):
        rng = np.random.default_rng(seed)
        a = random_support(rng, 8)
        b = random_support(rng, 8)
        q = rng.permutation(8)
        before = confusion_scores(a, b)
        after = confusion_scores(a[np.ix_(q, q)], b[np.ix_(q, q)])
        assert before == after


class TestBestShdOverLatentRelabeling:
    def test_no_latents_is_plain_shd(self):
        a = adj(3, [(0, 1)])
        b = adj(3, [(0, 2)])
        assert best_shd_over_latent_relabeling(a, b, [], []) == shd(a, b)

    def test_swapped_latents(self):
        truth = adj(5, [(3, 0), (4, 1)])
        pred = adj(5, [(4, 0), (3, 1)])  # same structure with latents 3,4 swapped
        assert shd(pred, truth) == 4
        assert best_shd_over_latent_relabeling(pred, truth, [3, 4], [3, 4]) == 0

    def test_spurious_latent_pays_its_edges(self):
        truth = adj(4, [(3, 0), (3, 1)])
        pred = adj(5, [(3, 0), (3, 1), (4, 0), (4, 2)])  # extra latent with 2 edges
        base = best_shd_over_latent_relabeling(
            adj(4, [(3, 0), (3, 1)]), truth, [3], [3]
        )
        got = best_shd_over_latent_relabeling(pred, truth, [3, 4], [3])
        assert got == base + 2

    def test_never_worse_than_fixed_labeling(self, rng):
        for _ in range(20):
            a = random_support(rng, 6)
            b = random_support(rng, 6)
            assert best_shd_over_latent_relabeling(a, b, [4, 5], [4, 5]) <= shd(a, b)

    def test_rejects_large_enumeration(self):
        g = np.zeros((12, 12))
        with pytest.raises(ValueError):
            best_shd_over_latent_relabeling(g, g, list(range(5, 12)), list(range(5, 12)))


class TestMaxWeightError:
    def test_exact(self):
        a = adj(3, [(0, 1)]) * 2.0
        assert max_weight_error(a, a) == 0.0

    def test_reports_largest_gap(self):
        a = adj(2, [(0, 1)]) * 2.0
        b = adj(2, [(0, 1)]) * 1.5
        assert np.isclose(max_weight_error(a, b), 0.5)
