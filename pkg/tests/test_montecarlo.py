import numpy as np
import pytest

from spiked_eigvec import montecarlo as mc, numkit, spike_density as sd


def test_make_spike_first_basis():
    v = mc.make_spike(3, 0, "first_basis")
    assert np.array_equal(v.entries, np.array([1.0, 0.0, 0.0], dtype=complex))


def test_make_spike_random_unit_norm():
    v = mc.make_spike(5, 7, "random")
    assert abs(np.linalg.norm(v.entries) - 1.0) < 1e-12
    again = mc.make_spike(5, 7, "random")
    assert np.array_equal(v.entries, again.entries)


def test_make_spike_rejects_unknown_style():
    with pytest.raises(ValueError):
        mc.make_spike(3, 0, "diagonal")


def test_eigh_diagonal():
    es = mc.eigh(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(es.eigenvalues, [1.0, 2.0, 3.0])
    perm = np.abs(es.eigenvectors)
    assert np.allclose(np.sort(perm, axis=0)[-1], 1.0)


def test_eigh_identity_degenerate():
    es = mc.eigh(np.eye(4))
    assert np.allclose(es.eigenvalues, 1.0)
    resid = np.eye(4) @ es.eigenvectors - es.eigenvectors
    assert np.linalg.norm(resid) < 1e-9


def test_eigh_reconstruction():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    w = a @ a.conj().T
    es = mc.eigh(w)
    rebuilt = es.eigenvectors @ np.diag(es.eigenvalues) @ es.eigenvectors.conj().T
    assert np.linalg.norm(rebuilt - w) < 1e-9 * np.linalg.norm(w)
    gram = es.eigenvectors.conj().T @ es.eigenvectors
    assert np.max(np.abs(gram - np.eye(6))) < 1e-10
    assert np.all(np.diff(es.eigenvalues) >= -1e-12)


def test_eigh_rejects_non_hermitian():
    with pytest.raises(ValueError):
        mc.eigh(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_sample_reproducibility_and_workers():
    model = sd.SpikedModel(4, 6, 2.0)
    spike = mc.make_spike(4, 0)
    a = mc.sample_wishart(model, spike, seed=42, count=4000, workers=1)
    b = mc.sample_wishart(model, spike, seed=42, count=4000, workers=4)
    for stat in a:
        assert np.array_equal(a[stat].values, b[stat].values)
    c = mc.sample_wishart(model, spike, seed=43, count=4000)
    assert not np.array_equal(a["z1"].values, c["z1"].values)


def test_sample_values_in_unit_interval():
    model = sd.SpikedModel(3, 5, 3.0)
    batches = mc.sample_wishart(model, mc.make_spike(3, 0), seed=1, count=2000)
    for batch in batches.values():
        assert np.all(batch.values >= 0.0) and np.all(batch.values <= 1.0)


def test_per_draw_projection_sum():
    model = sd.SpikedModel(5, 7, 3.0)
    v = mc.make_spike(5, 0).entries
    proj = mc._chunk_projections(model, v, seed=9, start=0, stop=500)
    assert np.max(np.abs(proj.sum(axis=1) - 1.0)) < 1e-10


def test_singular_rank_and_support():
    model = sd.SpikedModel(5, 3, 1.0, "singular")
    v = mc.make_spike(5, 0).entries
    proj = mc._chunk_projections(model, v, seed=9, start=0, stop=200)
    assert proj.shape == (200, 3)
    # rank-m system: total projection mass on the positive eigenspace < 1
    assert np.all(proj.sum(axis=1) < 1.0)


def test_haar_mean():
    model = sd.SpikedModel(4, 6, 0.0)
    batches = mc.sample_wishart(model, mc.make_spike(4, 0), seed=21, count=20_000)
    for stat in ("z1", "z2", "zn"):
        mean = batches[stat].values.mean()
        # E = 1/4, sd of the mean ~ sqrt(var)/sqrt(N) with var < 0.05
        assert abs(mean - 0.25) < 3.0 * 0.2 / np.sqrt(20_000)


def test_haar_z1_beta_law():
    n = 6
    model = sd.SpikedModel(n, n + 2, 0.0)
    batches = mc.sample_wishart(model, mc.make_spike(n, 0), seed=3, count=20_000,
                                statistics=("z1",))
    cdf = lambda z: 1.0 - (1.0 - np.asarray(z, dtype=float)) ** (n - 1)
    rep = numkit.ks_test(batches["z1"].values, cdf)
    assert rep.passed


def test_spike_invariance_two_sample():
    # Distributions must agree between basis and random spikes (5% two-sample KS).
    model = sd.SpikedModel(4, 6, 2.0)
    count = 50_000
    a = mc.sample_wishart(model, mc.make_spike(4, 0, "first_basis"), seed=5, count=count)
    b = mc.sample_wishart(model, mc.make_spike(4, 17, "random"), seed=6, count=count)
    for stat in ("z1", "zn"):
        x = np.sort(a[stat].values)
        y = np.sort(b[stat].values)
        grid = np.concatenate([x, y])
        fx = np.searchsorted(x, grid, side="right") / count
        fy = np.searchsorted(y, grid, side="right") / count
        d = np.max(np.abs(fx - fy))
        crit = 1.358 * np.sqrt(2.0 / count)
        assert d <= crit


def test_invalid_count():
    model = sd.SpikedModel(3, 5, 1.0)
    with pytest.raises(mc.InvalidCount):
        mc.sample_wishart(model, mc.make_spike(3, 0), seed=1, count=0)


def test_real_variant_needs_real_spike():
    model = sd.SpikedModel(2, 4, 1.0, "real")
    with pytest.raises(ValueError):
        mc.sample_wishart(model, mc.make_spike(2, 0), seed=1, count=10)
    ok = mc.sample_wishart(model, mc.make_spike(2, 0, real=True), seed=1, count=10)
    assert set(ok) == {"w1_real", "w2_real"}
