"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v`` (add ``-s`` to see the
per-criterion lines inline). Tolerances are pinned here, not configurable.
"""

import json
import os

import numpy as np
import pytest

from rkcca.bench import run_fig4, run_table1, run_table2
from rkcca.cli import main as cli_main
from rkcca.influence import eif_kcca, influence_report
from rkcca.kcca import fit_robust_kcca, fit_standard_kcca, fit_weighted_kcca
from rkcca.kernels import KernelSpec, center, cross_gram, gram, median_bandwidth
from rkcca.losses import RobustLoss
from rkcca.robust_cov import fit_robust_cov, hs_distance_sq, residual_vector, standard_cco_weights
from rkcca.robust_mean import fit_robust_mean
from rkcca.synth import gen_mgsd, gen_smsd, gen_tcsd


def report_line(number, name, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[{status}] criterion {number}: {name}{suffix}", flush=True)
    assert passed, f"criterion {number} failed: {name}{suffix}"


def paired_gaussian_grams(x, y):
    kx = gram(KernelSpec.gaussian(median_bandwidth(x)), x)
    ky = gram(KernelSpec.gaussian(median_bandwidth(y)), y)
    return kx, ky


def test_criterion_01_quadratic_degeneracy():
    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(10, 201))
        x = rng.normal(size=(n, 3))
        y = 0.5 * x + rng.normal(size=(n, 3))
        kx, ky = paired_gaussian_grams(x, y)
        uniform = np.full(n, 1.0 / n)
        mean_fit = fit_robust_mean(kx, loss=RobustLoss.quadratic())
        assert np.array_equal(mean_fit.weights, uniform)
        gx = center(kx).centered
        gy = center(ky).centered
        co = fit_robust_cov(gx, gx, loss=RobustLoss.quadratic())
        cco = fit_robust_cov(gx, gy, loss=RobustLoss.quadratic())
        assert np.array_equal(co.weights, uniform)
        assert np.array_equal(cco.weights, uniform)
        standard = fit_standard_kcca(kx, ky)
        robust = fit_robust_kcca(kx, ky, loss=RobustLoss.quadratic())
        worst = max(worst, float(np.abs(standard.rho - robust.rho).max()))
    report_line(1, "quadratic-loss degeneracy (ME/CO/CCO/KCCA)", worst <= 1e-10,
                f"max |rho diff| = {worst:.2e}")


def test_criterion_02_kirwls_descent():
    ok = True
    worst_sup = 0.0
    for seed in range(20):
        ds = gen_tcsd(50, 50, 50, contaminated=True, seed=seed)
        k = gram(KernelSpec.gaussian(median_bandwidth(ds.x)), ds.x)
        mean_fit = fit_robust_mean(k)  # Huber, median-residual cutoff
        g = center(k, mean_fit.weights).centered
        fit = fit_robust_cov(g, g)
        slack = 1e-12 * max(1.0, fit.objective_trace[0])
        ok &= bool(np.all(np.diff(fit.objective_trace) <= slack))
        ok &= fit.converged and fit.weight_sup_change < 1e-6
        worst_sup = max(worst_sup, fit.weight_sup_change)
    report_line(2, "KIRWLS objective descent and weight settling", ok,
                f"worst sup-change = {worst_sup:.2e}")


def test_criterion_03_surrogate_majorization():
    losses = [RobustLoss.huber(1.0), RobustLoss.hampel(1.0, 2.0, 4.0), RobustLoss.tukey(3.0)]
    t = np.linspace(0.0, 10.0, 100)
    c = np.linspace(0.1, 5.0, 100)
    tt, cc = np.meshgrid(t, c)
    ok = True
    for loss in losses:
        gap = loss.surrogate(tt, cc) - loss.zeta(tt)
        anchors = np.linspace(0.1, 5.0, 100)
        eq = np.abs(loss.surrogate(anchors, anchors) - loss.zeta(anchors)).max()
        ok &= gap.min() >= -1e-12 and eq <= 1e-12
    report_line(3, "surrogate majorization with anchor equality", ok)


def test_criterion_04_hs_norm_oracles():
    rng = np.random.default_rng(0)
    worst = 0.0
    for trial in range(50):
        n = int(rng.integers(2, 11))
        x = rng.normal(size=(n, 2))
        y = rng.normal(size=(n, 2))
        spec = KernelSpec.gaussian(1.0 + rng.random())
        gx = center(gram(spec, x)).centered
        gy = center(gram(spec, y)).centered
        w = rng.dirichlet(np.ones(n))
        e = residual_vector(gx, gy, w)
        for i in range(n):
            brute = gx[i, i] * gy[i, i]
            brute -= 2 * sum(w[j] * gx[i, j] * gy[i, j] for j in range(n))
            brute += sum(w[a] * w[b] * gx[a, b] * gy[a, b]
                         for a in range(n) for b in range(n))
            worst = max(worst, abs(e[i] ** 2 - max(brute, 0.0)))
        # cross-sample distance against the explicit double sum
        nb = int(rng.integers(2, 11))
        xb = rng.normal(size=(nb, 2))
        yb = rng.normal(size=(nb, 2))
        wb = rng.dirichlet(np.ones(nb))
        val = hs_distance_sq(w, wb, gram(spec, x), gram(spec, y),
                             cross_gram(spec, x, xb), cross_gram(spec, y, yb),
                             gram(spec, xb), gram(spec, yb))
        kxf = gram(spec, np.vstack([x, xb]))
        kyf = gram(spec, np.vstack([y, yb]))
        sign = np.concatenate([w, -wb])
        brute = sum(sign[a] * sign[b] * kxf[a, b] * kyf[a, b]
                    for a in range(n + nb) for b in range(n + nb))
        worst = max(worst, abs(val - brute))
    report_line(4, "HS-norm Hadamard identities vs tensor double sums",
                worst <= 1e-10, f"max abs dev = {worst:.2e}")


def test_criterion_05_influence_finite_difference():
    eps = 1e-4
    rels = []
    for seed in range(10):
        ds = gen_mgsd(30, seed=seed)
        kx, ky = paired_gaussian_grams(ds.x, ds.y)
        model = fit_standard_kcca(kx, ky, kappa=1e-5)
        idx = seed % 30
        value = eif_kcca(model, kx, ky, 1, idx).if_rho
        pi = np.full(30, (1 - eps) / 30)
        pi[idx] += eps
        refit = fit_weighted_kcca(kx, ky, kappa=1e-5, center_wx=pi, center_wy=pi,
                                  weights_xx=pi, weights_yy=pi, weights_xy=pi)
        slope = (refit.rho[0] ** 2 - model.rho[0] ** 2) / eps
        rels.append(abs(value - slope) / max(abs(slope), 1e-12))
    worst = max(rels)
    report_line(5, "kernel-CCA rho influence vs contamination-path refit",
                worst <= 1e-2, f"max rel err = {worst:.2e}")


def test_criterion_06_table2_smsd_separation():
    rows = run_table2(scale="desk", seed=0, replicates=25, sizes=(100,), datasets=("smsd",))
    means = {(r["method"]): r["mean"] for r in rows if r["metric"] == "eta-rho"}
    ratio = means["standard"] / means["robust"]
    ok = means["robust"] < means["standard"] and ratio > 3.0
    report_line(6, "SMSD eta-rho separation (robust << standard)", ok,
                f"standard = {means['standard']:.4f}, robust = {means['robust']:.4f}, "
                f"ratio = {ratio:.1f}x")


def test_criterion_07_table1_trends():
    rows = run_table1(scale="desk", seed=0, replicates=25, n=500)
    tcsd_f = {(r["kernel"], r["method"]): r["mean"] for r in rows
              if r["dataset"] == "tcsd" and r["norm"] == "frobenius"}
    ok = tcsd_f[("poly-3", "standard")] > 0.9
    ok &= tcsd_f[("gaussian", "standard")] < 0.3
    for kernel in ("poly-1", "poly-2", "poly-3"):
        ok &= tcsd_f[(kernel, "robust")] <= tcsd_f[(kernel, "standard")] + 1e-12
    report_line(7, "TCSD operator-ratio trends per kernel", ok,
                f"poly-3 std = {tcsd_f[('poly-3', 'standard')]:.4f}, "
                f"gaussian std = {tcsd_f[('gaussian', 'standard')]:.4f}")


def test_criterion_08_linear_cca_oracle():
    rng = np.random.default_rng(42)
    n = 1000
    u = rng.standard_normal(n)
    x = np.column_stack([u, rng.standard_normal(n)])
    y = np.column_stack([0.8 * u + 0.6 * rng.standard_normal(n), rng.standard_normal(n)])
    kx = gram(KernelSpec.linear(), x)
    ky = gram(KernelSpec.linear(), y)
    model = fit_standard_kcca(kx, ky, kappa=1e-8)

    xc = x - x.mean(axis=0)
    yc = y - y.mean(axis=0)
    sxx, syy = xc.T @ xc / n, yc.T @ yc / n
    sxy = xc.T @ yc / n

    def inv_sqrt(s):
        vals, vecs = np.linalg.eigh(s)
        return (vecs / np.sqrt(vals)) @ vecs.T

    oracle = np.linalg.svd(inv_sqrt(sxx) @ sxy @ inv_sqrt(syy), compute_uv=False)[0]
    dev = abs(float(model.rho[0]) - float(oracle))
    report_line(8, "linear-kernel KCCA vs classical linear CCA", dev <= 0.03,
                f"|rho - oracle| = {dev:.4f} (oracle {oracle:.4f})")


def test_criterion_09_population_distance_trends():
    rows = run_fig4(scale="desk", seed=0, replicates=20)
    by = {(r["n"], r["method"]): r["mean"] for r in rows}
    ok = by[(300, "standard")] < by[(15, "standard")]
    ok &= by[(300, "robust")] < by[(15, "robust")]
    ok &= by[(300, "robust")] <= by[(300, "standard")]
    report_line(9, "population-distance curves shrink; robust <= standard at n=300", ok,
                f"std 15->300: {by[(15, 'standard')]:.3g}->{by[(300, 'standard')]:.3g}, "
                f"rob: {by[(15, 'robust')]:.3g}->{by[(300, 'robust')]:.3g}")


def test_criterion_10_outlier_injection_recall():
    recalls = []
    for seed in range(20):
        ds = gen_smsd(100, seed=seed, contaminated=True)
        kx, ky = paired_gaussian_grams(ds.x, ds.y)
        model = fit_standard_kcca(kx, ky)
        report = influence_report(model, kx, ky, 1)
        injected = set(ds.contaminated_indices.tolist())
        flagged = set(np.flatnonzero(report.outlier_flags).tolist())
        recalls.append(len(injected & flagged) / max(len(injected), 1))
    mean_recall = float(np.mean(recalls))
    report_line(10, "MAD flags recover injected SMSD outliers", mean_recall >= 0.6,
                f"mean recall = {mean_recall:.2f}")


def test_criterion_11_cli_determinism(tmp_path):
    cwd = str(tmp_path)
    base = os.path.join(cwd, "mg")
    model = os.path.join(cwd, "model.json")
    infl = os.path.join(cwd, "infl.csv")
    table = os.path.join(cwd, "fig4.csv")
    commands = [
        ["gen", "--dataset", "mgsd", "--n", "40", "--seed", "11", "--out", base],
        ["fit", "--x", base + "_x.csv", "--y", base + "_y.csv",
         "--method", "robust", "--out", model],
        ["influence", "--model", model, "--x", base + "_x.csv",
         "--y", base + "_y.csv", "--out", infl],
        ["bench", "--table", "fig4", "--scale", "desk", "--seed", "3",
         "--replicates", "2", "--out", table],
    ]
    outputs = [base + "_x.csv", base + "_y.csv", base + "_manifest.json",
               model, infl, table]
    for argv in commands:
        assert cli_main(argv) == 0
    before = {path: open(path, "rb").read() for path in outputs}
    # re-run every command from its embedded config header
    for path in (base + "_manifest.json", model, infl, table):
        assert cli_main(["rerun", "--file", path]) == 0
    ok = all(open(path, "rb").read() == before[path] for path in outputs)
    report_line(11, "CLI outputs reproduce bitwise from embedded configs", ok)
