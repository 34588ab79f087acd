import numpy as np
import pytest

from rkcca.kernels import KernelSpec, gram, median_bandwidth
from rkcca.synth import (
    default_mgsd_sigma,
    gen_mgsd,
    gen_scfsd,
    gen_sfsd,
    gen_smsd,
    gen_tcsd,
    generate,
)

GENERATORS = {
    "tcsd": lambda seed, contaminated: gen_tcsd(30, 30, 30, contaminated, seed),
    "sfsd": lambda seed, contaminated: gen_sfsd(80, contaminated, seed),
    "mgsd": lambda seed, contaminated: gen_mgsd(60, contaminated, seed),
    "scfsd": lambda seed, contaminated: gen_scfsd(50, contaminated, seed),
    "smsd": lambda seed, contaminated: gen_smsd(40, snp_dim=50, voxel_dim=60,
                                                seed=seed, contaminated=contaminated),
}


@pytest.mark.parametrize("name", sorted(GENERATORS))
@pytest.mark.parametrize("contaminated", [False, True])
def test_seed_repeatability_bitwise(name, contaminated):
    a = GENERATORS[name](7, contaminated)
    b = GENERATORS[name](7, contaminated)
    assert np.array_equal(a.x, b.x)
    if a.paired:
        assert np.array_equal(a.y, b.y)
    assert np.array_equal(a.contaminated_indices, b.contaminated_indices)
    c = GENERATORS[name](8, contaminated)
    assert not np.array_equal(a.x, c.x)


@pytest.mark.parametrize("name", sorted(GENERATORS))
def test_contamination_bookkeeping(name):
    ideal = GENERATORS[name](3, False)
    assert ideal.contaminated_indices.size == 0
    assert ideal.spec["mode"] == "none"
    mixed = GENERATORS[name](3, True)
    n = mixed.n
    assert mixed.spec["mode"] == "mixture"
    assert abs(mixed.contaminated_indices.size / n - 0.05) <= 1.0 / n
    assert np.all(mixed.contaminated_indices >= 0)
    assert np.all(mixed.contaminated_indices < n)


def test_shift_mode_marks_all_rows():
    ds = gen_tcsd(10, 10, 10, contaminated=True, seed=0, mode="shift")
    assert np.array_equal(ds.contaminated_indices, np.arange(30))
    assert ds.spec["mode"] == "shift"


# -- TCSD ---------------------------------------------------------------------

def test_tcsd_radius_band():
    ds = gen_tcsd(4000, 3000, 3000, seed=1)
    radii = np.linalg.norm(ds.x, axis=1)
    targets = np.concatenate([np.full(4000, 1.0), np.full(3000, 0.5), np.full(3000, 0.25)])
    assert np.mean(np.abs(radii - targets) <= 0.5) >= 0.9999


def test_tcsd_empty_group():
    ds = gen_tcsd(5, 0, 5, seed=2)
    radii = np.linalg.norm(ds.x, axis=1)
    assert not np.any(np.abs(radii - 0.5) < 0.1)


def test_tcsd_contaminated_rows_are_gross_outliers():
    ds = gen_tcsd(100, 100, 100, contaminated=True, seed=3)
    radii = np.linalg.norm(ds.x, axis=1)
    bad = ds.contaminated_indices
    clean = np.setdiff1d(np.arange(ds.n), bad)
    assert radii[clean].max() < 2.0
    assert np.median(radii[bad]) > 2.0


def test_tcsd_validation():
    with pytest.raises(ValueError):
        gen_tcsd(1, 0, 0, seed=0)
    with pytest.raises(ValueError):
        gen_tcsd(-1, 5, 5, seed=0)


# -- SFSD ---------------------------------------------------------------------

def test_sfsd_amplitude_bound():
    ds = gen_sfsd(1500, seed=4)
    assert ds.x.shape == (1500, 10)
    for k in range(2, 11):
        assert np.abs(ds.x[:, k - 1]).max() <= k + 5 * 0.1


def test_sfsd_contaminated_variance_ratio():
    # isolate the noise by regenerating the clean curve from the same seed
    # (the z-stream is independent of the noise streams)
    ideal = gen_sfsd(1500, seed=5)
    clean = gen_sfsd(1500, seed=5, noise_sd=0.0)
    shifted = gen_sfsd(1500, contaminated=True, seed=5, mode="shift")
    clean_cd = gen_sfsd(1500, contaminated=True, seed=5, mode="shift",
                        noise_sd=0.0, contaminated_noise_sd=0.0)
    ratio = (shifted.x - clean_cd.x).var() / (ideal.x - clean.x).var()
    assert 500 <= ratio <= 2000  # model ratio is 10 / 0.01 = 1000


# -- MGSD ---------------------------------------------------------------------

def test_default_sigma_is_psd():
    sigma = default_mgsd_sigma()
    assert sigma.shape == (12, 12)
    assert np.linalg.eigvalsh(sigma).min() > 0


def test_mgsd_identity_sigma_uncorrelated():
    ds = gen_mgsd(1000, seed=6, sigma_spec=np.eye(12))
    r = np.corrcoef(ds.x.T, ds.y.T)[:6, 6:]
    assert np.abs(r).max() <= 0.15


def test_mgsd_mean_shift():
    ideal = gen_mgsd(1000, seed=7)
    shifted = gen_mgsd(1000, contaminated=True, seed=7, mode="shift")
    assert np.abs(ideal.x.mean(axis=0)).max() <= 0.15
    assert np.abs(shifted.x.mean(axis=0) - 1.0).max() <= 0.15


def test_mgsd_rejects_non_psd_sigma():
    bad = np.eye(12)
    bad[0, 1] = bad[1, 0] = 2.0
    with pytest.raises(ValueError):
        gen_mgsd(10, sigma_spec=bad)


def test_mgsd_default_sigma_couples_views():
    # log|.| is even in Z, so linear cross-correlation vanishes by symmetry;
    # the dependence shows up between |X| and Y
    ds = gen_mgsd(3000, seed=8)
    r = np.corrcoef(np.abs(ds.x).T, ds.y.T)[:6, 6:]
    assert np.abs(r).max() > 0.1
    ds_id = gen_mgsd(3000, seed=8, sigma_spec=np.eye(12))
    r0 = np.corrcoef(np.abs(ds_id.x).T, ds_id.y.T)[:6, 6:]
    assert np.abs(r).max() > 2 * np.abs(r0).max()


# -- SCFSD --------------------------------------------------------------------

def test_scfsd_entry_range_and_pythagoras():
    ds = gen_scfsd(400, seed=9)
    assert ds.x.shape == (400, 100) and ds.y.shape == (400, 100)
    assert np.abs(ds.x).max() <= 1 + 5 * 0.1
    mean_sq = (ds.x**2 + ds.y**2).mean()
    assert 0.9 <= mean_sq <= 1.15


def test_scfsd_contaminated_mean_shift():
    ds = gen_scfsd(200, contaminated=True, seed=10, mode="shift")
    assert ds.x.mean() > 0.5


# -- SMSD ---------------------------------------------------------------------

def test_smsd_snp_values_discrete():
    ds = gen_smsd(50, snp_dim=40, voxel_dim=30, seed=11)
    assert set(np.unique(ds.x)) <= {0.0, 1.0, 2.0}
    assert ds.y.shape == (50, 30)


def test_smsd_signal_drives_leading_correlation():
    def leading_rho(signal, seed):
        ds = gen_smsd(200, snp_dim=100, voxel_dim=100, signal=signal, noise=1.0, seed=seed)
        from rkcca.kcca import fit_standard_kcca
        kx = gram(KernelSpec.gaussian(median_bandwidth(ds.x)), ds.x)
        ky = gram(KernelSpec.gaussian(median_bandwidth(ds.y)), ds.y)
        return fit_standard_kcca(kx, ky).rho[0]

    rho_null = np.mean([leading_rho(0.0, s) for s in range(3)])
    rho_signal = np.mean([leading_rho(0.5, s) for s in range(3)])
    assert rho_signal > rho_null


def test_smsd_contaminated_rows_outlying_in_voxels():
    ds = gen_smsd(100, snp_dim=50, voxel_dim=50, seed=12, contaminated=True)
    norms = np.linalg.norm(ds.y, axis=1)
    bad = ds.contaminated_indices
    clean = np.setdiff1d(np.arange(100), bad)
    assert norms[bad].min() > 3 * norms[clean].max()


def test_generate_dispatch():
    ds = generate("tcsd", n1=5, n2=5, n3=5, seed=1)
    assert ds.n == 15
    with pytest.raises(ValueError):
        generate("nope")
