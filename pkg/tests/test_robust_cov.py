import numpy as np
import pytest

from rkcca.kernels import KernelSpec, center, cross_gram, gram
from rkcca.losses import RobustLoss
from rkcca.robust_cov import (
    fit_robust_cov,
    hs_distance_sq,
    operator_matrix,
    residual_vector,
    standard_cco_weights,
)
from rkcca.robust_mean import fit_robust_mean
from rkcca.synth import gen_tcsd


def centered_pair(seed, n=12, d=2, bandwidth=1.0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, d))
    y = rng.normal(size=(n, d))
    kx = center(gram(KernelSpec.gaussian(bandwidth), x)).centered
    ky = center(gram(KernelSpec.gaussian(bandwidth), y)).centered
    return kx, ky


def brute_force_residuals(kx, ky, w):
    # 25-term (n^2) expansion of the tensor HS norm, independent of the
    # Hadamard shortcut under test
    n = len(w)
    e = np.empty(n)
    for i in range(n):
        val = kx[i, i] * ky[i, i]
        val -= 2 * sum(w[j] * kx[i, j] * ky[i, j] for j in range(n))
        val += sum(w[a] * w[b] * kx[a, b] * ky[a, b] for a in range(n) for b in range(n))
        e[i] = np.sqrt(max(val, 0.0))
    return e


def test_standard_cco_weights():
    assert np.allclose(standard_cco_weights(4), 0.25)
    assert standard_cco_weights(1).tolist() == [1.0]
    with pytest.raises(ValueError):
        standard_cco_weights(0)


def test_uniform_hs_norm_expansion():
    # with uniform weights, ||Sigma||^2 = (1/n^2) sum_ij Kx_ij * Ky_ij
    kx, ky = centered_pair(0, n=6)
    w = standard_cco_weights(6)
    v = float(w @ (kx * ky) @ w)
    expected = sum(kx[i, j] * ky[i, j] for i in range(6) for j in range(6)) / 36
    assert v == pytest.approx(expected, abs=1e-12)


def test_residual_vector_brute_force():
    rng = np.random.default_rng(1)
    for seed in range(5):
        kx, ky = centered_pair(seed, n=5)
        w = rng.dirichlet(np.ones(5))
        assert np.allclose(residual_vector(kx, ky, w), brute_force_residuals(kx, ky, w), atol=1e-10)


def test_residual_zero_at_point_mass():
    kx, ky = centered_pair(2, n=5)
    w = np.zeros(5)
    w[3] = 1.0
    e = residual_vector(kx, ky, w)
    assert e[3] == pytest.approx(0.0, abs=1e-8)


def test_residual_single_sample():
    kx = np.array([[0.0]])
    assert residual_vector(kx, kx, np.array([1.0]))[0] == pytest.approx(0.0)


def test_quadratic_loss_recovers_standard_operator():
    kx, ky = centered_pair(3, n=10)
    fit = fit_robust_cov(kx, ky, loss=RobustLoss.quadratic())
    assert fit.converged and fit.iterations == 1
    assert np.array_equal(fit.weights, standard_cco_weights(10))
    assert fit.kind == "cco"


def test_co_is_cco_special_case_bitwise():
    kx, _ = centered_pair(4, n=9)
    fit_co = fit_robust_cov(kx, kx, loss=RobustLoss.huber(0.5))
    fit_cco = fit_robust_cov(kx, kx.copy(), loss=RobustLoss.huber(0.5))
    assert fit_co.kind == "co"
    assert fit_cco.kind == "co"  # equal matrices detected as CO
    assert np.array_equal(fit_co.weights, fit_cco.weights)


def test_outlying_pair_downweighted():
    rng = np.random.default_rng(5)
    n = 20
    x = rng.normal(size=(n, 2))
    y = x + 0.1 * rng.normal(size=(n, 2))
    x[7] += 25.0
    y[7] -= 25.0
    kx = center(gram(KernelSpec.gaussian(1.0), x)).centered
    ky = center(gram(KernelSpec.gaussian(1.0), y)).centered
    fit = fit_robust_cov(kx, ky, loss=RobustLoss.huber(0.05))
    assert fit.weights[7] < 1.0 / n


def test_objective_trace_monotone_on_contaminated_circles():
    for seed in range(3):
        ds = gen_tcsd(50, 50, 50, contaminated=True, seed=seed)
        k = gram(KernelSpec.gaussian(1.0), ds.x)
        mean_fit = fit_robust_mean(k, loss=RobustLoss.huber(0.5))
        kc = center(k, mean_fit.weights).centered
        fit = fit_robust_cov(kc, kc, loss=RobustLoss.huber(0.5))
        diffs = np.diff(fit.objective_trace)
        assert np.all(diffs <= 1e-12 * max(1.0, fit.objective_trace[0]))


def test_huber_objective_beats_uniform_weights():
    # strict convexity: the fitted operator attains a lower objective than
    # the standard uniform-weight operator
    rng = np.random.default_rng(6)
    wins = 0
    for seed in range(50):
        kx, ky = centered_pair(seed + 100, n=12)
        loss = RobustLoss.huber(0.2)
        fit = fit_robust_cov(kx, ky, loss=loss, tol=1e-12, max_iter=500)
        e_unif = residual_vector(kx, ky, standard_cco_weights(12))
        j_unif = loss.zeta(e_unif).sum()
        assert fit.objective_trace[-1] <= j_unif + 1e-12
        wins += fit.objective_trace[-1] < j_unif - 1e-12
    assert wins > 25  # strictly better on most draws


def test_matches_generic_optimizer_objective():
    # independent oracle: minimize the tensor objective over unconstrained
    # coefficient vectors; the KIRWLS fixed point should do at least as well
    from scipy.optimize import minimize

    from rkcca.losses import RobustLoss as RL

    kx, ky = centered_pair(30, n=10)
    m = kx * ky
    loss = RL.huber(0.3)

    def objective(c):
        e2 = np.diag(m) - 2 * m @ c + c @ m @ c
        return loss.zeta(np.sqrt(np.clip(e2, 0, None))).sum()

    fit = fit_robust_cov(kx, ky, loss=loss, tol=1e-12, max_iter=500)
    res = minimize(objective, np.full(10, 0.1), method="L-BFGS-B",
                   options={"maxiter": 2000, "ftol": 1e-14, "gtol": 1e-12})
    assert objective(fit.weights) <= res.fun + 1e-6


def test_stationarity_and_weight_settling():
    kx, ky = centered_pair(7, n=15)
    fit = fit_robust_cov(kx, ky, loss=RobustLoss.huber(0.2), tol=1e-10, max_iter=500)
    assert fit.converged
    phi = fit.loss.phi(fit.residuals)
    assert np.abs(fit.weights - phi / phi.sum()).max() <= 1e-7
    assert fit.weight_sup_change < 1e-6


def test_operator_matrix_realization():
    kx, ky = centered_pair(8, n=6)
    w = np.random.default_rng(8).dirichlet(np.ones(6))
    v = operator_matrix(kx, ky, w)
    expected = sum(w[i] * np.outer(kx[:, i], ky[i, :]) for i in range(6))
    assert np.allclose(v, expected, atol=1e-12)


# -- hs_distance_sq -----------------------------------------------------------

def test_hs_distance_identical_operators():
    kx, ky = centered_pair(9, n=7)
    w = standard_cco_weights(7)
    d = hs_distance_sq(w, w, kx, ky, kx, ky, kx, ky)
    assert d == pytest.approx(0.0, abs=1e-10)


def test_hs_distance_duplicated_superset():
    # sample b = sample a duplicated: same empirical operator, distance 0
    rng = np.random.default_rng(10)
    spec = KernelSpec.gaussian(1.0)
    xa = rng.normal(size=(4, 2))
    xb = np.vstack([xa, xa])
    k_aa = gram(spec, xa)
    k_bb = gram(spec, xb)
    k_ab = cross_gram(spec, xa, xb)
    # blocks are passed per view; for a CO both views use the same kernel
    d = hs_distance_sq(
        standard_cco_weights(4), standard_cco_weights(8),
        k_aa, k_aa, k_ab, k_ab, k_bb, k_bb,
    )
    assert d == pytest.approx(0.0, abs=1e-12)


def test_hs_distance_brute_force_different_sizes():
    rng = np.random.default_rng(11)
    spec = KernelSpec.gaussian(1.2)
    xa, ya = rng.normal(size=(4, 2)), rng.normal(size=(4, 2))
    xb, yb = rng.normal(size=(6, 2)), rng.normal(size=(6, 2))
    w_a = rng.dirichlet(np.ones(4))
    w_b = rng.dirichlet(np.ones(6))
    val = hs_distance_sq(
        w_a, w_b,
        gram(spec, xa), gram(spec, ya),
        cross_gram(spec, xa, xb), cross_gram(spec, ya, yb),
        gram(spec, xb), gram(spec, yb),
    )
    # independent double-sum oracle over all tensor pairs
    def inner(x1, y1, x2, y2):
        return cross_gram(spec, x1, x2) * cross_gram(spec, y1, y2)

    expected = w_a @ inner(xa, ya, xa, ya) @ w_a
    expected -= 2 * w_a @ inner(xa, ya, xb, yb) @ w_b
    expected += w_b @ inner(xb, yb, xb, yb) @ w_b
    brute = 0.0
    for i in range(4):
        for j in range(4):
            brute += w_a[i] * w_a[j] * spec_k(spec, xa[i], xa[j]) * spec_k(spec, ya[i], ya[j])
    for i in range(4):
        for j in range(6):
            brute -= 2 * w_a[i] * w_b[j] * spec_k(spec, xa[i], xb[j]) * spec_k(spec, ya[i], yb[j])
    for i in range(6):
        for j in range(6):
            brute += w_b[i] * w_b[j] * spec_k(spec, xb[i], xb[j]) * spec_k(spec, yb[i], yb[j])
    assert val == pytest.approx(brute, abs=1e-10)
    assert val == pytest.approx(expected, abs=1e-12)
    assert val >= 0


def spec_k(spec, a, b):
    return float(cross_gram(spec, a.reshape(1, -1), b.reshape(1, -1))[0, 0])


def test_hs_distance_shape_mismatch():
    kx, ky = centered_pair(12, n=5)
    with pytest.raises(ValueError):
        hs_distance_sq(np.ones(5) / 5, np.ones(4) / 4, kx, ky, kx, ky, kx, ky)
