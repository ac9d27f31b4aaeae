import numpy as np
import pytest

from infobid.coverage import CoverageState, GradientBank
from infobid.gradest import (
    GradEstConfig,
    binary_entropy,
    cosine_similarity,
    estimate_marginal_utility,
    estimator_accuracy,
    hypothetical_gradients,
    norm_select,
    pctr_weighted,
    random_guess,
    random_unit,
    zo_gradient,
)
from infobid.model import LogisticModel, log_loss, loss_gradient, predict


def make_state(seed=0, beta=0.5):
    bank = GradientBank(np.random.default_rng(seed).normal(size=(8, 3)))
    return CoverageState(bank, kernel_lambda=0.2, beta=beta)


def test_binary_entropy_values():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.6) > binary_entropy(0.7) > binary_entropy(0.9)
    assert binary_entropy(0.3) == pytest.approx(binary_entropy(0.7), rel=1e-12)
    with pytest.raises(ValueError):
        binary_entropy(1.5)


def test_hypothetical_gradients_formula():
    model = LogisticModel(np.array([0.4, -1.2, 0.3]))
    x = np.array([1.0, 2.0, -0.5])
    p = predict(model, x)
    g0, g1 = hypothetical_gradients(model, x)
    np.testing.assert_array_equal(g0, p * x)
    np.testing.assert_array_equal(g1, (p - 1.0) * x)


def test_norm_select_tracks_predicted_label():
    model = LogisticModel(np.array([2.0, 0.0]))
    confident_up = np.array([1.5, 0.0])  # sigma > 0.5 -> label-1 gradient is smaller
    g0, g1 = hypothetical_gradients(model, confident_up)
    picked, label = norm_select(g0, g1)
    assert label == 1
    np.testing.assert_array_equal(picked, g1)
    confident_down = np.array([-1.5, 0.0])
    g0, g1 = hypothetical_gradients(model, confident_down)
    assert norm_select(g0, g1)[1] == 0


def test_norm_select_tie_goes_to_label_zero():
    model = LogisticModel(np.array([1.0, 0.0]))
    x = np.array([0.0, 3.0])  # orthogonal: sigma = 0.5, equal norms
    g0, g1 = hypothetical_gradients(model, x)
    picked, label = norm_select(g0, g1)
    assert label == 0
    np.testing.assert_array_equal(picked, g0)


def test_zo_gradient_reproduces_two_point_formula():
    theta = np.array([0.2, -0.4, 0.9])
    loss = lambda w: float(np.sin(w[0]) + w[1] ** 2 + np.exp(0.3 * w[2]))
    got = zo_gradient(loss, theta, mu=1e-3, n_dirs=4, seed=21)
    dirs = np.random.default_rng(21).standard_normal((4, 3))
    want = np.zeros(3)
    for u in dirs:
        want += (loss(theta + 1e-3 * u) - loss(theta - 1e-3 * u)) / 2e-3 * u
    np.testing.assert_array_equal(got, want / 4)


def test_zo_gradient_validation():
    loss = lambda w: float(w @ w)
    with pytest.raises(ValueError):
        zo_gradient(loss, np.ones(2), mu=0.0, n_dirs=1)
    with pytest.raises(ValueError):
        zo_gradient(loss, np.ones(2), mu=0.1, n_dirs=0)
    with pytest.raises(ValueError):
        zo_gradient(lambda w: float("nan"), np.ones(2), mu=0.1, n_dirs=1)


def test_zo_gradient_approaches_analytical():
    rng = np.random.default_rng(22)
    w = rng.normal(size=10)
    x = rng.normal(size=10)
    model = LogisticModel(w)
    truth = loss_gradient(model, x, 1)
    loss = lambda theta: log_loss(predict(LogisticModel(theta), x), 1)
    est = zo_gradient(loss, w, mu=1e-4, n_dirs=200, seed=0)
    assert cosine_similarity(est, truth) > 0.9


def test_pctr_weighted_formula():
    g0 = np.array([1.0, 2.0])
    g1 = np.array([-3.0, 0.5])
    np.testing.assert_allclose(pctr_weighted(g0, g1, 0.25), 0.25 * g1 + 0.75 * g0, rtol=1e-15)


def test_random_guess_uses_both_arms():
    g0, g1 = np.array([1.0]), np.array([-1.0])
    rng = np.random.default_rng(23)
    draws = [float(random_guess(g0, g1, rng)[0]) for _ in range(400)]
    n_g1 = sum(1 for v in draws if v < 0)
    assert 140 <= n_g1 <= 260


def test_random_unit_is_unit_norm():
    v = random_unit(6, np.random.default_rng(1))
    assert np.linalg.norm(v) == pytest.approx(1.0, rel=1e-12)


def test_cosine_similarity_cases():
    rng = np.random.default_rng(24)
    v = rng.normal(size=9)
    assert cosine_similarity(v, v) == 1.0  # exact, not 1 - ulp
    assert cosine_similarity(-v, v) == -1.0
    assert cosine_similarity(np.zeros(9), v) == 0.0
    a = np.array([1.0, 0.0])
    b = np.array([0.0, 2.0])
    assert cosine_similarity(a, b) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        cosine_similarity(v, np.zeros(9))


def test_estimate_exploration_branch():
    model = LogisticModel(np.array([1.0, 0.0, 0.0]))
    x = np.array([0.0, 1.0, 0.0])  # sigma = 0.5 -> entropy 1 bit
    state = make_state()
    cfg = GradEstConfig(entropy_threshold=0.9, exploration_utility=2.5)
    est = estimate_marginal_utility(model, x, state, cfg)
    assert est.provenance == "exploration"
    assert est.gradient is None
    assert est.utility == 2.5
    assert est.entropy == 1.0


def test_estimate_confident_analytical_branch():
    # sigma = 0.99 exactly via w.x = ln 99; entropy ~ 0.0808 passes zeta = 0.3.
    model = LogisticModel(np.array([np.log(99.0), 0.0, 0.0]))
    x = np.array([1.0, 0.0, 0.0])
    state = make_state(beta=0.5)
    cfg = GradEstConfig(entropy_threshold=0.3)
    est = estimate_marginal_utility(model, x, state, cfg)
    assert est.provenance == "analytical"
    p = predict(model, x)
    g0, g1 = hypothetical_gradients(model, x)
    np.testing.assert_array_equal(est.gradient, g1)  # predicted label 1
    assert est.utility == state.marginal_gain(g1, p)
    assert est.pctr == p


def test_estimate_value_only_utility_is_pctr():
    model = LogisticModel(np.array([3.0, 0.0, 0.0]))
    x = np.array([1.0, 0.2, -0.1])
    state = make_state(beta=1.0)
    est = estimate_marginal_utility(model, x, state, GradEstConfig(entropy_threshold=0.9))
    assert est.utility == est.pctr


def test_estimate_zo_mode_is_seeded_by_index():
    model = LogisticModel(np.array([2.5, 0.3, -0.8]))
    x = np.array([1.0, -0.4, 0.2])
    state = make_state()
    cfg = GradEstConfig(mode="zeroth_order", entropy_threshold=0.99, seed=5)
    a = estimate_marginal_utility(model, x, state, cfg, index=3)
    b = estimate_marginal_utility(model, x, state, cfg, index=3)
    c = estimate_marginal_utility(model, x, state, cfg, index=4)
    np.testing.assert_array_equal(a.gradient, b.gradient)
    assert not np.array_equal(a.gradient, c.gradient)
    assert a.provenance == "zeroth_order"


def test_gradest_config_validation():
    with pytest.raises(ValueError):
        GradEstConfig(mode="exact")
    with pytest.raises(ValueError):
        GradEstConfig(entropy_threshold=1.2)
    with pytest.raises(ValueError):
        GradEstConfig(zo_mu=0.0)
    with pytest.raises(ValueError):
        GradEstConfig(zo_dirs=0)


def test_estimator_accuracy_report():
    rng = np.random.default_rng(25)
    truths = rng.normal(size=(5, 4))
    same = estimator_accuracy(truths.copy(), truths)
    assert same.mean_cosine == 1.0
    assert same.mean_l2 == 0.0
    flipped = estimator_accuracy(-truths, truths)
    assert flipped.mean_cosine == -1.0
    np.testing.assert_allclose(
        flipped.mean_l2, 2.0 * np.mean(np.linalg.norm(truths, axis=1)), rtol=1e-12
    )


def test_estimator_accuracy_excludes_zero_truths():
    truths = np.array([[1.0, 0.0], [0.0, 0.0]])
    ests = np.array([[1.0, 0.0], [1.0, 1.0]])
    rep = estimator_accuracy(ests, truths)
    assert rep.n_zero_truth == 1
    assert rep.mean_cosine == 1.0  # only the nonzero truth counts
