"""Seeded generators for the five synthetic benchmark designs.

Every generator is deterministic in (parameters, seed) down to the bit level.
Randomness comes from the counter-based Philox generator; independent
quantities (base draws, contamination draws, row selection) use separate
child streams spawned from the seed, so adding or removing one source never
perturbs the others.

Contamination comes in two modes. ``mixture`` replaces a random fraction of
rows (default 5%) with draws from the contaminating law and records exactly
those rows; ``shift`` draws every row from the contaminating law. Passing
``contaminated=False`` produces the ideal design with no rows recorded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .validation import DegenerateDataError

MIXTURE = "mixture"
SHIFT = "shift"

# fixed stream ids per generator so child-seed layouts are stable
_STREAM = {"tcsd": 0, "sfsd": 1, "mgsd": 2, "scfsd": 3, "smsd": 4}


@dataclass
class Dataset:
    """A generated dataset with its contamination bookkeeping."""

    x: np.ndarray
    y: np.ndarray | None
    contaminated_indices: np.ndarray
    seed: int
    spec: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def paired(self) -> bool:
        return self.y is not None


def _rngs(name, seed, count):
    root = np.random.SeedSequence(entropy=int(seed), spawn_key=(_STREAM[name],))
    return [np.random.Generator(np.random.Philox(child)) for child in root.spawn(count)]


def _pick_rows(rng, n, rate):
    count = int(round(rate * n))
    return np.sort(rng.choice(n, size=count, replace=False))


def _resolve_mode(contaminated, mode, rate, n, select_rng):
    """Return (indices, mode_label) for the requested contamination."""
    if not contaminated:
        return np.empty(0, dtype=int), "none"
    if mode == SHIFT:
        return np.arange(n), SHIFT
    if mode == MIXTURE:
        return _pick_rows(select_rng, n, rate), MIXTURE
    raise ValueError(f"unknown contamination mode {mode!r}")


def gen_tcsd(n1, n2, n3, contaminated=False, seed=0, mode=MIXTURE, rate=0.05,
             noise_sd=0.1) -> Dataset:
    """Three circles of radii 1, 0.5, 0.25 with additive Gaussian noise.

    Ideal rows sit on the circles with N(0, noise_sd^2 I_2) noise. A
    contaminated row is a gross outlier drawn uniformly from the square
    [-10, 10]^2 (plus noise): points far off every circle, which is what the
    contaminated design's wide uniform range produces.
    """
    counts = [int(n1), int(n2), int(n3)]
    if any(c < 0 for c in counts) or sum(counts) < 2:
        raise ValueError("group counts must be nonnegative with total >= 2")
    n = sum(counts)
    rng_angle, rng_noise, rng_contam, rng_select = _rngs("tcsd", seed, 4)
    radii = np.concatenate([np.full(c, r) for c, r in zip(counts, (1.0, 0.5, 0.25))])
    angles = rng_angle.uniform(-np.pi, np.pi, size=n)
    x = radii[:, None] * np.column_stack([np.cos(angles), np.sin(angles)])
    x = x + noise_sd * rng_noise.standard_normal((n, 2))
    idx, mode_label = _resolve_mode(contaminated, mode, rate, n, rng_select)
    if idx.size:
        bad = rng_contam.uniform(-10.0, 10.0, size=(n, 2))
        noise = noise_sd * rng_contam.standard_normal((n, 2))
        x[idx] = bad[idx] + noise[idx]
    spec = {"generator": "tcsd", "n1": counts[0], "n2": counts[1], "n3": counts[2],
            "noise_sd": noise_sd, "mode": mode_label, "rate": rate}
    return Dataset(x=x, y=None, contaminated_indices=idx, seed=int(seed), spec=spec)


def gen_sfsd(n, contaminated=False, seed=0, mode=MIXTURE, rate=0.05,
             noise_sd=0.1, contaminated_noise_sd=np.sqrt(10.0)) -> Dataset:
    """Sine curve in 10 dimensions: (Z, 2 sin 2Z, ..., 10 sin 10Z) + noise.

    The ideal noise is N(0, 0.01 I_10); contaminated rows use N(0, 10 I_10).
    """
    n = int(n)
    if n < 2:
        raise ValueError("n must be >= 2")
    rng_z, rng_noise, rng_contam, rng_select = _rngs("sfsd", seed, 4)
    z = rng_z.uniform(-2 * np.pi, 0.0, size=n)
    amps = np.arange(2, 11)
    x = np.column_stack([z] + [a * np.sin(a * z) for a in amps])
    x = x + noise_sd * rng_noise.standard_normal((n, 10))
    idx, mode_label = _resolve_mode(contaminated, mode, rate, n, rng_select)
    if idx.size:
        clean = np.column_stack([z] + [a * np.sin(a * z) for a in amps])
        big = contaminated_noise_sd * rng_contam.standard_normal((n, 10))
        x[idx] = clean[idx] + big[idx]
    spec = {"generator": "sfsd", "n": n, "noise_sd": noise_sd,
            "contaminated_noise_sd": float(contaminated_noise_sd),
            "mode": mode_label, "rate": rate}
    return Dataset(x=x, y=None, contaminated_indices=idx, seed=int(seed), spec=spec)


def default_mgsd_sigma() -> np.ndarray:
    """Stand-in 12 x 12 covariance: AR(1) decay 0.9 within each 6-block and
    cross-view correlation 0.5 between matching coordinates.

    The Kronecker form [[1, .5], [.5, 1]] (x) AR1(0.9) is positive definite;
    a flat equicorrelated two-block layout is not, so this documented
    reconstruction replaces the unavailable original.
    """
    ar = 0.9 ** np.abs(np.subtract.outer(np.arange(6), np.arange(6)))
    coupling = np.array([[1.0, 0.5], [0.5, 1.0]])
    return np.kron(coupling, ar)


def gen_mgsd(n, contaminated=False, seed=0, mode=MIXTURE, rate=0.05,
             sigma_spec=None) -> Dataset:
    """Multivariate Gaussian pair: X = Z[:, :6], Y = log|Z[:, 6:]|.

    Z is N(0, Sigma) in R^12 for ideal rows and N(1, Sigma) for contaminated
    rows.
    """
    n = int(n)
    if n < 2:
        raise ValueError("n must be >= 2")
    sigma = default_mgsd_sigma() if sigma_spec is None else np.asarray(sigma_spec, dtype=float)
    if sigma.shape != (12, 12):
        raise ValueError("sigma_spec must be 12 x 12")
    eigs = np.linalg.eigvalsh(0.5 * (sigma + sigma.T))
    if eigs.min() < -1e-10:
        raise ValueError(f"sigma_spec is not PSD (min eigenvalue {eigs.min():.3e})")
    chol = np.linalg.cholesky(sigma + 1e-12 * np.eye(12))
    rng_base, rng_contam, rng_select = _rngs("mgsd", seed, 3)
    z = rng_base.standard_normal((n, 12)) @ chol.T
    idx, mode_label = _resolve_mode(contaminated, mode, rate, n, rng_select)
    if idx.size:
        z_bad = rng_contam.standard_normal((n, 12)) @ chol.T + 1.0
        z[idx] = z_bad[idx]
    x = z[:, :6].copy()
    y = np.log(np.abs(z[:, 6:]) + 1e-300)
    spec = {"generator": "mgsd", "n": n, "mode": mode_label, "rate": rate,
            "sigma": "default" if sigma_spec is None else "custom"}
    return Dataset(x=x, y=y, contaminated_indices=idx, seed=int(seed), spec=spec)


def gen_scfsd(n, contaminated=False, seed=0, mode=MIXTURE, rate=0.05,
              n_freq=100, noise_sd=0.1) -> Dataset:
    """Paired periodic design: X_ij = sin(j Z_i) + eta_i, Y_ij = cos(j Z_i) + eta_i.

    The per-subject noise scalar eta_i is shared across coordinates and both
    views, as the design is written. Ideal eta is N(0, 0.01); contaminated
    rows use N(1, 0.01).
    """
    n = int(n)
    if n < 2:
        raise ValueError("n must be >= 2")
    rng_z, rng_noise, rng_contam, rng_select = _rngs("scfsd", seed, 4)
    z = rng_z.uniform(-np.pi, np.pi, size=n)
    eta = noise_sd * rng_noise.standard_normal(n)
    idx, mode_label = _resolve_mode(contaminated, mode, rate, n, rng_select)
    if idx.size:
        eta_bad = 1.0 + noise_sd * rng_contam.standard_normal(n)
        eta[idx] = eta_bad[idx]
    j = np.arange(1, n_freq + 1)
    phase = np.outer(z, j)
    x = np.sin(phase) + eta[:, None]
    y = np.cos(phase) + eta[:, None]
    spec = {"generator": "scfsd", "n": n, "n_freq": n_freq, "noise_sd": noise_sd,
            "mode": mode_label, "rate": rate}
    return Dataset(x=x, y=y, contaminated_indices=idx, seed=int(seed), spec=spec)


def gen_smsd(n, snp_dim=1000, voxel_dim=1000, signal=0.5, noise=1.0, seed=0,
             contaminated=False, mode=MIXTURE, rate=0.05, contaminated_noise=20.0,
             sparsity=0.1) -> Dataset:
    """Latent-factor SNP/fMRI pair (documented reconstruction).

    A shared latent u_i ~ N(0, 1) loads onto sparse +/-1 vectors (``sparsity``
    fraction of nonzero coordinates) in both views: the pre-observation is
    signal * u_i * beta + noise * eps. The SNP view is then discretized to
    {0, 1, 2} by per-column empirical tertiles; the voxel view stays
    continuous. Contamination raises the noise level of the affected rows to
    ``contaminated_noise``.
    """
    n = int(n)
    if n < 2:
        raise ValueError("n must be >= 2")
    if snp_dim < 1 or voxel_dim < 1:
        raise ValueError("dimensions must be >= 1")
    if signal < 0 or noise <= 0:
        raise ValueError("signal must be >= 0 and noise > 0")
    rng_latent, rng_load, rng_nx, rng_ny, rng_contam, rng_select = _rngs("smsd", seed, 6)
    u = rng_latent.standard_normal(n)

    def loading(dim):
        beta = np.zeros(dim)
        support = rng_load.choice(dim, size=max(1, int(round(sparsity * dim))), replace=False)
        beta[support] = rng_load.choice([-1.0, 1.0], size=support.size)
        return beta

    beta_x = loading(snp_dim)
    beta_y = loading(voxel_dim)
    raw_x = signal * np.outer(u, beta_x) + noise * rng_nx.standard_normal((n, snp_dim))
    y = signal * np.outer(u, beta_y) + noise * rng_ny.standard_normal((n, voxel_dim))
    idx, mode_label = _resolve_mode(contaminated, mode, rate, n, rng_select)
    if idx.size:
        raw_x[idx] = signal * np.outer(u[idx], beta_x) \
            + contaminated_noise * rng_contam.standard_normal((idx.size, snp_dim))
        y[idx] = signal * np.outer(u[idx], beta_y) \
            + contaminated_noise * rng_contam.standard_normal((idx.size, voxel_dim))
    x = _discretize_tertiles(raw_x)
    spec = {"generator": "smsd", "n": n, "snp_dim": snp_dim, "voxel_dim": voxel_dim,
            "signal": signal, "noise": noise, "contaminated_noise": contaminated_noise,
            "sparsity": sparsity, "mode": mode_label, "rate": rate}
    return Dataset(x=x, y=y, contaminated_indices=idx, seed=int(seed), spec=spec)


def _discretize_tertiles(values):
    """Map each column to genotypes {0, 1, 2} by its empirical tertiles."""
    lo = np.quantile(values, 1.0 / 3.0, axis=0)
    hi = np.quantile(values, 2.0 / 3.0, axis=0)
    return (values > lo).astype(float) + (values > hi).astype(float)


_GENERATORS = {
    "tcsd": gen_tcsd,
    "sfsd": gen_sfsd,
    "mgsd": gen_mgsd,
    "scfsd": gen_scfsd,
    "smsd": gen_smsd,
}


def generate(name, **kwargs) -> Dataset:
    """Dispatch by generator name (used by the CLI)."""
    if name not in _GENERATORS:
        raise ValueError(f"unknown dataset {name!r}; choose from {sorted(_GENERATORS)}")
    return _GENERATORS[name](**kwargs)
