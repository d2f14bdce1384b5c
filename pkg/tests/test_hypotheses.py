import numpy as np
import pytest

from cerm.hypotheses import (
    EXACT_MAX_K,
    EXACT_MAX_N,
    LinearHypothesis,
    ScaleGuardError,
    erm_exact_classification,
    erm_regression,
    erm_surrogate_classification,
    ols_init,
)
from cerm.losses import make_loss


def brute_force_1d_risk(u, y):
    """Exhaustive threshold scan: the independent oracle for k = 1."""
    us = np.sort(np.asarray(u, dtype=float).ravel())
    cuts = np.concatenate([[us[0] - 1.0], (us[:-1] + us[1:]) / 2.0, [us[-1] + 1.0]])
    best = 1.0
    for t in cuts:
        for orient in (1.0, -1.0):
            pred = np.where(orient * (u.ravel() - t) >= 0.0, 1.0, -1.0)
            best = min(best, float(np.mean(pred != y)))
    return best


def test_sign_convention_on_the_boundary():
    h = LinearHypothesis(w=np.array([1.0]), t=0.0, mode="sign")
    assert h.predict(np.array([[0.0]]))[0] == 1.0


def test_clip_mode_clamps_to_range():
    h = LinearHypothesis(w=np.array([2.0]), t=0.0, mode="clip", beta=0.5)
    out = h.predict(np.array([[-3.0], [0.1], [3.0]]))
    assert np.array_equal(out, [-0.5, 0.2, 0.5])


def test_hypothesis_validation():
    with pytest.raises(ValueError):
        LinearHypothesis(w=np.array([np.inf]), t=0.0, mode="sign")
    with pytest.raises(ValueError):
        LinearHypothesis(w=np.array([1.0]), t=0.0, mode="argmax")
    with pytest.raises(ValueError):
        LinearHypothesis(w=np.array([[1.0]]), t=0.0, mode="sign")


def test_exact_erm_matches_threshold_scan_k1():
    rng = np.random.default_rng(7)
    for _ in range(60):
        n = int(rng.integers(2, 13))
        u = rng.standard_normal((n, 1))
        y = rng.choice([-1.0, 1.0], size=n)
        report = erm_exact_classification(u, y)
        assert report.empirical_risk == brute_force_1d_risk(u, y)


def test_exact_erm_separable_instances_reach_zero():
    rng = np.random.default_rng(8)
    for k in (1, 2, 3):
        w_true = rng.standard_normal(k)
        U = rng.standard_normal((40, k))
        margin = U @ w_true - 0.3
        keep = np.abs(margin) > 1e-3
        U, margin = U[keep], margin[keep]
        y = np.where(margin >= 0, 1.0, -1.0)
        report = erm_exact_classification(U, y)
        assert report.empirical_risk == 0.0
        assert report.solver == "exact"


def test_exact_erm_xor_square():
    """The 2-d parity square admits no halfplane with fewer than 1 error."""
    U = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
    y = np.array([1.0, 1.0, -1.0, -1.0])
    assert erm_exact_classification(U, y).empirical_risk == 0.25


def test_exact_erm_dominates_random_candidates():
    """No randomly drawn halfplane may beat the reported optimum."""
    rng = np.random.default_rng(9)
    for k in (2, 3):
        U = rng.standard_normal((25, k))
        y = rng.choice([-1.0, 1.0], size=25)
        best = erm_exact_classification(U, y).empirical_risk
        for _ in range(400):
            w = rng.standard_normal(k)
            t = rng.standard_normal()
            risk = float(np.mean(np.where(U @ w - t >= 0, 1.0, -1.0) != y))
            assert risk >= best - 1e-15


def test_exact_erm_report_is_self_consistent():
    rng = np.random.default_rng(10)
    U = rng.standard_normal((30, 2))
    y = rng.choice([-1.0, 1.0], size=30)
    report = erm_exact_classification(U, y)
    recomputed = float(np.mean(report.hypothesis.predict(U) != y))
    assert recomputed == report.empirical_risk


def test_exact_erm_scale_guards():
    rng = np.random.default_rng(11)
    with pytest.raises(ScaleGuardError):
        erm_exact_classification(rng.standard_normal((10, EXACT_MAX_K + 1)), np.ones(10))
    with pytest.raises(ScaleGuardError):
        erm_exact_classification(
            rng.standard_normal((EXACT_MAX_N + 1, 1)), np.ones(EXACT_MAX_N + 1)
        )


def test_exact_erm_rejects_bad_labels():
    with pytest.raises(ValueError):
        erm_exact_classification(np.zeros((3, 1)), np.array([1.0, 0.0, -1.0]))


def test_exact_erm_single_class_is_free():
    u = np.random.default_rng(12).standard_normal((17, 1))
    assert erm_exact_classification(u, np.ones(17)).empirical_risk == 0.0
    assert erm_exact_classification(u, -np.ones(17)).empirical_risk == 0.0


def test_surrogate_reaches_exact_on_easy_instances():
    rng = np.random.default_rng(13)
    gaps = []
    for _ in range(10):
        U = rng.standard_normal((60, 2))
        w_true = rng.standard_normal(2)
        y = np.where(U @ w_true >= 0.2, 1.0, -1.0)
        report = erm_surrogate_classification(U, y)
        assert report.solver == "surrogate"
        assert report.surrogate_gap is not None
        gaps.append(report.surrogate_gap)
    assert np.mean(gaps) <= 0.02
    assert min(gaps) >= 0.0  # never better than the exact optimum


def test_surrogate_gap_absent_when_exact_is_infeasible():
    rng = np.random.default_rng(14)
    U = rng.standard_normal((50, 5))
    y = rng.choice([-1.0, 1.0], size=50)
    report = erm_surrogate_classification(U, y)
    assert report.surrogate_gap is None


def test_surrogate_objective_checkpoints_decrease():
    rng = np.random.default_rng(15)
    U = rng.standard_normal((200, 4))
    y = np.where(U @ np.array([1.0, -1.0, 0.5, 0.0]) >= 0, 1.0, -1.0)
    report = erm_surrogate_classification(U, y)
    cps = report.objective_checkpoints
    assert cps is not None and len(cps) >= 2
    assert all(b <= a + 1e-12 for a, b in zip(cps, cps[1:]))


def test_ols_init_recovers_linear_map():
    rng = np.random.default_rng(16)
    U = rng.standard_normal((50, 3))
    w_true = np.array([0.5, -1.0, 2.0])
    y = U @ w_true - 0.7
    w, t = ols_init(U, y)
    assert np.allclose(w, w_true, atol=1e-10)
    assert t == pytest.approx(0.7, abs=1e-10)


def test_erm_regression_squared_fits_noiseless_linear_data():
    rng = np.random.default_rng(17)
    loss = make_loss("squared", 2.0)
    U = rng.standard_normal((120, 3))
    w_true = np.array([0.4, -0.2, 0.1])
    y = np.clip(U @ w_true + 0.1, -2.0, 2.0)
    report = erm_regression(U, y, loss)
    assert report.empirical_risk <= 1e-6
    assert report.hypothesis.mode == "clip"
    assert np.all(np.abs(report.hypothesis.predict(U)) <= 2.0)


def test_erm_regression_kl_fits_logistic_data():
    rng = np.random.default_rng(18)
    loss = make_loss("kl", 3.0)
    U = rng.standard_normal((400, 2))
    logits = np.clip(U @ np.array([1.2, -0.8]), -3.0, 3.0)
    y = (rng.random(400) < 1.0 / (1.0 + np.exp(-logits))).astype(float)
    report = erm_regression(U, y, loss)
    # the fitted logit direction should correlate strongly with the truth
    fitted = report.hypothesis.raw(U)
    assert np.corrcoef(fitted, logits)[0, 1] > 0.95


def test_erm_regression_validates_label_domain():
    loss = make_loss("squared", 1.0)
    with pytest.raises(ValueError):
        erm_regression(np.zeros((3, 1)), np.array([0.0, 2.0, 0.0]), loss)
    with pytest.raises(ValueError):
        erm_regression(np.zeros((3, 1)), np.array([0.0, 0.5, 1.0]), make_loss("kl", 1.0))


def test_erm_regression_beats_the_zero_predictor():
    """The descent must never end above its own starting point."""
    rng = np.random.default_rng(19)
    loss = make_loss("squared", 1.0)
    U = rng.standard_normal((80, 4))
    y = np.clip(U @ rng.standard_normal(4), -1.0, 1.0)
    report = erm_regression(U, y, loss)
    zero_risk = float(np.mean(y**2))
    assert report.empirical_risk <= zero_risk + 1e-12


def test_erm_is_deterministic():
    rng = np.random.default_rng(20)
    U = rng.standard_normal((64, 3))
    y = rng.choice([-1.0, 1.0], size=64)
    a = erm_surrogate_classification(U, y)
    b = erm_surrogate_classification(U, y)
    assert np.array_equal(a.hypothesis.w, b.hypothesis.w)
    assert a.hypothesis.t == b.hypothesis.t
    assert a.empirical_risk == b.empirical_risk


def _better_pattern_exists(U, y, achieved_errors):
    """LP check: is any sign pattern with fewer errors linearly realizable?

    A pattern p is realizable iff some v has v.(u_i, -1) >= 0 exactly where
    p_i = +1; by cone scaling the strict side can be pinned at <= -1.
    """
    from itertools import combinations as combos

    from scipy.optimize import linprog

    n = U.shape[0]
    Z = np.concatenate([U, -np.ones((n, 1))], axis=1)
    for e in range(achieved_errors):
        for wrong in combos(range(n), e):
            pattern = y.copy()
            pattern[list(wrong)] *= -1.0
            A_ub = np.where(pattern[:, None] > 0, -Z, Z)
            b_ub = np.where(pattern > 0, 0.0, -1.0)
            res = linprog(
                np.zeros(Z.shape[1]),
                A_ub=A_ub,
                b_ub=b_ub,
                bounds=[(None, None)] * Z.shape[1],
                method="highs",
            )
            if res.status == 0:
                return True
    return False


def test_exact_erm_is_unbeatable_on_degenerate_lattices():
    """No realizable labeling beats the enumerator, even off general position.

    Lattice coordinates in {-1, 0, 1} force duplicate points, collinear
    triples, and points exactly on candidate planes — the configurations a
    naive spanning-plane enumeration gets wrong.  An LP feasibility scan over
    every sign pattern with fewer errors certifies global optimality.
    """
    rng = np.random.default_rng(77)
    for k in (1, 2, 3):
        for _ in range(15):
            n = int(rng.integers(4, 9))
            U = rng.integers(-1, 2, size=(n, k)).astype(float)
            y = rng.choice([-1.0, 1.0], size=n)
            report = erm_exact_classification(U, y)
            errors = round(report.empirical_risk * n)
            assert not _better_pattern_exists(U, y, errors)


def test_exact_erm_is_unbeatable_on_random_instances():
    rng = np.random.default_rng(78)
    for k in (2, 3):
        for _ in range(10):
            n = int(rng.integers(5, 10))
            U = rng.standard_normal((n, k))
            y = rng.choice([-1.0, 1.0], size=n)
            report = erm_exact_classification(U, y)
            errors = round(report.empirical_risk * n)
            assert not _better_pattern_exists(U, y, errors)
