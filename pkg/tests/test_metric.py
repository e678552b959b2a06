import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from patchkit.core import make_rng
from patchkit.metric import (DIST_EPS, distance_matrix, generalized_loss,
                             hard_triplet_loss, hardness_scores)
from oracles import brute_generalized_loss, brute_hard_triplet_loss, brute_hardness


def test_distance_matrix_identity_rows():
    eye = np.eye(2)
    d = distance_matrix(eye, eye)
    np.testing.assert_allclose(np.diag(d), np.sqrt(DIST_EPS))
    np.testing.assert_allclose(d[0, 1], np.sqrt(2 + DIST_EPS))
    np.testing.assert_allclose(d, d.T, atol=1e-7)


def test_distance_matrix_self_argmin():
    a = make_rng(0).normal(size=(10, 4))
    d = distance_matrix(a, a)
    np.testing.assert_array_equal(d.argmin(1), np.arange(10))


def test_distance_matrix_equal_vectors_near_zero():
    v = np.array([[0.3, -0.4, 0.5]])
    assert distance_matrix(v, v)[0, 0] <= 1e-3


def test_distance_matrix_dim_mismatch():
    with pytest.raises(ValueError):
        distance_matrix(np.zeros((2, 3)), np.zeros((2, 4)))


def test_hard_triplet_loss_zero_fixture():
    a = np.array([[0.0, 0.0], [1.0, 0.0]])
    report = hard_triplet_loss(a, a.copy(), margin=1.0)
    # d_pos ~ 0, hardest negative 1 away: every term clamps to ~0
    assert report.total == pytest.approx(0.0, abs=1e-3)


def test_hard_triplet_loss_hand_traced():
    a = np.array([[0.0, 0.0], [1.0, 0.0]])
    b = np.array([[0.5, 0.0], [1.0, 0.0]])
    report = hard_triplet_loss(a, b, margin=1.0)
    assert report.per_anchor == pytest.approx([1.0, 0.5], abs=1e-3)
    assert report.total == pytest.approx(0.75, abs=1e-3)


def test_hard_triplet_loss_identical_points_zero_margin():
    pts = np.zeros((2, 3))
    assert hard_triplet_loss(pts, pts, margin=0.0).total == pytest.approx(0.0, abs=1e-4)


def test_hard_triplet_loss_needs_two_pairs():
    with pytest.raises(ValueError, match="negatives"):
        hard_triplet_loss(np.zeros((1, 2)), np.zeros((1, 2)))


def test_hard_triplet_loss_matches_brute_force():
    rng = make_rng(10)
    for _ in range(50):
        n = int(rng.integers(2, 65))
        d = int(rng.integers(1, 33))
        margin = float(rng.uniform(0.0, 2.0))
        a = rng.normal(size=(n, d))
        b = rng.normal(size=(n, d))
        want_total, want_terms = brute_hard_triplet_loss(a, b, margin)
        got = hard_triplet_loss(a, b, margin)
        assert got.total == pytest.approx(want_total, abs=1e-9)
        np.testing.assert_allclose(got.per_anchor, want_terms, atol=1e-9)


def test_generalized_loss_singletons():
    e = np.array([[0.0, 0.0], [2.0, 0.0]])
    report = generalized_loss(e, [0, 1], margin=1.0)
    assert report.per_anchor == pytest.approx([0.0, 0.0], abs=1e-3)
    assert report.total == pytest.approx(0.0, abs=1e-3)


def test_generalized_loss_close_labels():
    e = np.array([[0.0, 0.0], [0.5, 0.0]])
    report = generalized_loss(e, [0, 1], margin=1.0)
    assert report.per_anchor == pytest.approx([0.5, 0.5], abs=1e-3)
    assert report.total == pytest.approx(1.0, abs=1e-3)


def test_generalized_loss_identical_positives():
    e = np.vstack([np.zeros((3, 2)), np.full((2, 2), 10.0)])
    report = generalized_loss(e, [0, 0, 0, 1, 1], margin=1.0)
    assert report.d_pos[0] == pytest.approx(np.sqrt(DIST_EPS))


def test_generalized_loss_single_label_errors():
    with pytest.raises(ValueError):
        generalized_loss(np.zeros((3, 2)), [5, 5, 5])


def test_generalized_loss_matches_brute_force():
    rng = make_rng(11)
    for _ in range(50):
        b = int(rng.integers(4, 33))
        d = int(rng.integers(1, 16))
        labels = rng.integers(0, max(2, b // 3), size=b).tolist()
        if len(set(labels)) < 2:
            labels[0], labels[1] = 0, 1
        e = rng.normal(size=(b, d))
        margin = float(rng.uniform(0.0, 2.0))
        want_total, want_terms = brute_generalized_loss(e, labels, margin)
        got = generalized_loss(e, labels, margin)
        assert got.total == pytest.approx(want_total, abs=1e-9)
        np.testing.assert_allclose(got.per_anchor, want_terms, atol=1e-9)


def test_generalized_dneg_never_exceeds_pairwise():
    # with 2 members per label, the generalized min ranges over a superset
    rng = make_rng(12)
    for _ in range(20):
        n = int(rng.integers(2, 20))
        a = rng.normal(size=(n, 8))
        b = rng.normal(size=(n, 8))
        pair = hard_triplet_loss(a, b)
        e = np.concatenate([a, b])
        labels = list(range(n)) * 2
        gen = generalized_loss(e, labels)
        for i in range(n):
            assert gen.d_neg[i] <= pair.d_neg[i] + 1e-12


def test_hardness_scores_sign_and_identity():
    a = np.array([[0.0, 0.0], [5.0, 0.0]])
    e = hardness_scores(a, a.copy())
    assert (e < 0).all()  # identical pairs far from the negatives
    pts = np.zeros((3, 2))
    np.testing.assert_allclose(hardness_scores(pts, pts), 0.0, atol=1e-4)


def test_hardness_equals_per_anchor_minus_margin():
    a = np.array([[0.0, 0.0], [1.0, 0.0]])
    b = np.array([[0.5, 0.0], [1.0, 0.0]])
    report = hard_triplet_loss(a, b, margin=1.0)
    e = hardness_scores(a, b)
    # identity holds wherever the hinge is active
    np.testing.assert_allclose(np.array(report.per_anchor) - 1.0, e, atol=1e-12)


def test_hardness_matches_brute_force():
    rng = make_rng(13)
    a = rng.normal(size=(12, 5))
    b = rng.normal(size=(12, 5))
    np.testing.assert_allclose(hardness_scores(a, b), brute_hardness(a, b),
                               atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 1000), st.floats(0.0, 2.0), st.floats(0.0, 1.0))
def test_loss_properties(seed, margin, bump):
    rng = make_rng(seed)
    n = int(rng.integers(2, 12))
    a = rng.normal(size=(n, 6))
    b = rng.normal(size=(n, 6))
    base = hard_triplet_loss(a, b, margin)
    assert base.total >= 0.0
    # permutation invariance over pair indices
    perm = rng.permutation(n)
    assert hard_triplet_loss(a[perm], b[perm], margin).total == pytest.approx(
        base.total, abs=1e-9)
    # monotone in the margin
    assert hard_triplet_loss(a, b, margin + bump).total >= base.total - 1e-12


def test_loss_zero_when_separation_exceeds_margin():
    a = np.array([[0.0, 0.0], [100.0, 0.0]])
    b = np.array([[0.0, 0.1], [100.0, 0.1]])
    assert hard_triplet_loss(a, b, margin=1.0).total == 0.0
