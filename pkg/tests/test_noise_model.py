import numpy as np
import pytest

from natstego import (
    BinStats,
    NoiseModel,
    NoiseModelError,
    Raster16,
    bin_photosites,
    diff_model,
    estimate_noise_model,
    fit_noise_model,
    load_model,
    save_model,
)
from natstego.stats_eval import gradient_field, synth_flat_stack

from conftest import ISO1, ISO2


def test_model_invariants():
    with pytest.raises(NoiseModelError):
        NoiseModel(0.0, 1e-6)
    with pytest.raises(NoiseModelError):
        NoiseModel(1e-5, -1e-9)
    assert NoiseModel(2.0, 1.0).variance(0.5) == pytest.approx(2.0)


def test_fit_exact_on_collinear_bins():
    bins = [BinStats(i, m, 3e-5 * m + 2e-6, 40) for i, m in enumerate([0.1, 0.3, 0.7, 0.9])]
    m = fit_noise_model(bins)
    assert m.a == pytest.approx(3e-5, rel=1e-12)
    assert m.b == pytest.approx(2e-6, rel=1e-10)


def test_fit_is_population_weighted():
    # a heavy bin pulls the line; the unweighted fit of these points differs
    bins = [BinStats(0, 0.1, 1.0e-5, 10), BinStats(1, 0.5, 3.0e-5, 10), BinStats(2, 0.9, 3.0e-5, 1000)]
    mu = np.array([0.1, 0.5, 0.9])
    v = np.array([1.0e-5, 3.0e-5, 3.0e-5])
    w = np.array([10, 10, 1000.0])
    a_ref, b_ref = np.polyfit(mu, v, 1, w=np.sqrt(w))
    m = fit_noise_model(bins)
    assert m.a == pytest.approx(a_ref, rel=1e-9)
    assert m.b == pytest.approx(b_ref, rel=1e-9)


def test_fit_errors():
    with pytest.raises(NoiseModelError, match="fewer than 2"):
        fit_noise_model([BinStats(0, 0.5, 1e-5, 10)])
    with pytest.raises(NoiseModelError, match="equal"):
        fit_noise_model([BinStats(0, 0.5, 1e-5, 10), BinStats(1, 0.5, 2e-5, 10)])
    with pytest.raises(NoiseModelError, match="positivity"):
        fit_noise_model([BinStats(0, 0.1, 3e-5, 10), BinStats(1, 0.9, 1e-5, 10)])


def test_half_away_rounding():
    from natstego.noise_model import _round_half_away

    x = np.array([0.5, 1.5, 2.5, -0.5, 2.4999, 3.0])
    assert _round_half_away(x).tolist() == [1, 2, 3, -1, 2, 3]


def test_binning_skips_saturated_sites():
    frames = [
        Raster16(np.array([[1000, 0, 40000, 65535]])),
        Raster16(np.array([[1002, 5, 40010, 60000]])),
    ]
    bins = bin_photosites(frames, 0.01)
    assert sum(b.population for b in bins) == 4
    assert [b.bin_index for b in bins] == [2, 61]
    assert bins[0].mean == pytest.approx(1001 / 65535)
    # pooled: squared deviations from the site mean, N - 1 = 1 dof
    assert bins[0].variance == pytest.approx(2 * (1 / 65535) ** 2)


def test_pooled_vs_bin_estimator():
    frames = synth_flat_stack(20000.0, ISO1, 5, seed=3, shape=(64, 64))
    pooled = bin_photosites(frames, 5e-5)
    literal = bin_photosites(frames, 5e-5, variance="bin")
    assert [b.bin_index for b in pooled] == [b.bin_index for b in literal]
    vp = np.average([b.variance for b in pooled], weights=[b.population for b in pooled])
    vl = np.average([b.variance for b in literal], weights=[b.population for b in literal])
    target = ISO1.variance(20000 / 65535)
    assert vp == pytest.approx(target, rel=0.03)
    # the literal estimator loses about 1/N of the variance at small delta
    assert vl < vp


def test_estimator_recovers_generator():
    mu = gradient_field(256, 256)
    frames = synth_flat_stack(mu, ISO2, 20, seed=11)
    m = estimate_noise_model(frames, 5e-5)
    assert abs(m.a - ISO2.a) / ISO2.a < 0.02
    assert abs(m.b - ISO2.b) / ISO2.b < 0.3


def test_stack_validation():
    a = Raster16(np.zeros((2, 2)))
    with pytest.raises(NoiseModelError):
        bin_photosites([a], 1e-3)
    with pytest.raises(NoiseModelError):
        bin_photosites([a, Raster16(np.zeros((2, 3)))], 1e-3)
    with pytest.raises(NoiseModelError):
        bin_photosites([a, a], 0.0)


def test_diff_model_scaling():
    p = diff_model(ISO1, ISO2, bit_depth=16)
    assert p.a_dd == pytest.approx(2.1e-5 * 65535, rel=1e-9)
    assert p.b_dd == pytest.approx(8.4e-7 * 65535**2, rel=1e-9)
    p8 = diff_model(ISO1, ISO2, bit_depth=8)
    assert p8.a_dd == pytest.approx(2.1e-5 * 255, rel=1e-9)
    with pytest.raises(NoiseModelError):
        diff_model(ISO2, ISO1)
    with pytest.raises(NoiseModelError):
        diff_model(NoiseModel(1e-5, 2e-6), NoiseModel(2e-5, 1e-6))


def test_model_file_round_trip(tmp_path):
    m = NoiseModel(8.36e-5 / 3, 1.11e-6 / 7, "ISO 1000")
    save_model(m, tmp_path / "m.model")
    text = (tmp_path / "m.model").read_text()
    assert text.startswith("a=") and "iso=ISO 1000" in text
    assert load_model(tmp_path / "m.model") == m


def test_model_file_errors(tmp_path):
    (tmp_path / "bad").write_text("a=1e-5\n")
    with pytest.raises(ValueError, match="missing"):
        load_model(tmp_path / "bad")
    (tmp_path / "neg").write_text("a=-1\nb=0\n")
    with pytest.raises(NoiseModelError):
        load_model(tmp_path / "neg")
