import json
import warnings

import numpy as np
import pytest

from inhchannel import kernels
from inhchannel.errors import DataFormatError, DegenerateDesignError, DomainError
from inhchannel.fitting import (
    LosObservation,
    MeasurementSample,
    SampleSet,
    SingleFrequencyWarning,
    binned_los_fraction,
    centroid_f0,
    fit_abg,
    fit_ci,
    fit_cif,
    fit_dual,
    los_mse,
    rank_los_models,
    read_los_csv,
    read_samples_csv,
    write_residuals_csv,
)
from inhchannel.los import LosModel, p_los
from inhchannel.pathloss import (
    AbgParams,
    CifParams,
    CiParams,
    DualAbgParams,
    DualCifParams,
    Frequency,
    Scenario,
    path_loss,
)

from .oracles import fspl_ref, grid_argmin_ci, zoom_grid_argmin

GHZ = 1e9


def synth(params, f_ghz_choices, n, rng, d_lo=1.5, d_hi=60.0, sigma=0.0):
    f = rng.choice(np.asarray(f_ghz_choices, dtype=float), n) * GHZ
    d = np.exp(rng.uniform(np.log(d_lo), np.log(d_hi), n))
    pl = np.asarray(path_loss(params, f, d)) + sigma * rng.standard_normal(n)
    return SampleSet(f, d, pl)


# --- centroid ---------------------------------------------------------------


def test_centroid_examples():
    s = SampleSet(np.r_[np.full(100, 28.0), np.full(50, 73.0)] * GHZ, np.full(150, 2.0), np.zeros(150))
    assert centroid_f0(s).ghz == pytest.approx(43.0, abs=1e-12)
    assert centroid_f0(SampleSet([28e9] * 3, [2, 3, 4], [0, 0, 0])).hz == 28e9
    assert centroid_f0(SampleSet([2e9, 4e9, 2e9, 4e9], [2] * 4, [0] * 4)).ghz == pytest.approx(3.0)


def test_centroid_from_measurement_samples():
    samples = [MeasurementSample(Frequency.from_ghz(f), 2.0, 70.0) for f in (28, 28, 73)]
    assert centroid_f0(samples).ghz == pytest.approx(43.0)


def test_centroid_empty():
    with pytest.raises(DomainError):
        centroid_f0([])


def test_centroid_within_span(rng):
    for _ in range(20):
        f = rng.uniform(1, 90, rng.integers(1, 40)) * GHZ
        c = centroid_f0(SampleSet(f, np.full(f.size, 2.0), np.zeros(f.size))).hz
        assert f.min() <= c <= f.max()


def test_sample_invariants():
    with pytest.raises(DomainError):
        MeasurementSample(Frequency.from_ghz(28), 0.5, 70.0)
    with pytest.raises(DomainError):
        MeasurementSample(Frequency.from_ghz(28), 2.0, float("nan"))


# --- CI -----------------------------------------------------------------------


def test_ci_noiseless(rng):
    s = synth(CiParams(2.0), [28, 73], 200, rng)
    r = fit_ci(s)
    assert r.params.n == pytest.approx(2.0, abs=1e-9)
    assert r.sigma_sf < 1e-9
    assert r.sample_count == 200 and r.family == "ci"


def test_ci_noisy(rng):
    s = synth(CiParams(3.19), [28, 73], 5000, rng, d_lo=2, d_hi=50, sigma=8.29)
    r = fit_ci(s)
    assert abs(r.params.n - 3.19) <= 0.05
    assert abs(r.sigma_sf - 8.29) <= 0.2
    assert r.params.sigma_sf == r.sigma_sf


def test_ci_degenerate_at_anchor():
    with pytest.raises(DegenerateDesignError):
        fit_ci(SampleSet([28e9, 28e9], [1.0, 1.0], [61.0, 62.0]))


def test_ci_sigma_is_minimal(rng):
    s = synth(CiParams(2.7), [28, 73], 300, rng, sigma=6.0)
    r = fit_ci(s)
    for dn in (-0.1, -0.01, 0.01, 0.1):
        e = s.pl_db - path_loss(CiParams(r.params.n + dn), s.f_hz, s.d_m)
        assert np.sqrt(np.mean(e**2)) >= r.sigma_sf


def test_ci_matches_grid_oracle(rng):
    for _ in range(20):
        s = synth(CiParams(rng.uniform(1.5, 4.0)), [6, 28, 73], int(rng.integers(5, 51)), rng, sigma=5.0)
        n_grid, step = grid_argmin_ci(s.f_hz, s.d_m, s.pl_db)
        assert abs(fit_ci(s).params.n - n_grid) <= step


def _assert_matches_grid(objective, fitted, best, step):
    # The fitted point sits inside the final search box of the grid oracle
    # (+/- 3 steps on each axis) and is at least as good as the best node.
    assert np.all(np.abs(fitted - best) <= 3 * step)
    at = lambda x: float(objective(*(np.array([v]) for v in x))[0])  # noqa: E731
    assert at(fitted) <= at(best) * (1 + 1e-12)


# --- ABG ----------------------------------------------------------------------


def test_abg_noiseless(rng):
    s = synth(AbgParams(3.83, 17.30, 2.49), [6, 28, 73], 300, rng)
    p = fit_abg(s).params
    assert (p.alpha, p.beta, p.gamma) == pytest.approx((3.83, 17.30, 2.49), abs=1e-6)


def test_abg_noisy(rng):
    s = synth(AbgParams(3.83, 17.30, 2.49), [6, 28, 73], 10_000, rng, sigma=8.0)
    r = fit_abg(s)
    assert abs(r.params.alpha - 3.83) <= 0.1
    assert abs(r.params.gamma - 2.49) <= 0.15
    assert abs(r.params.beta - 17.30) <= 2.0
    assert abs(np.mean(r.residuals)) <= 1e-9


def test_abg_single_frequency(rng):
    s = synth(CiParams(3.0), [28], 100, rng, sigma=3.0)
    with pytest.raises(DegenerateDesignError, match="frequency column"):
        fit_abg(s)
    assert fit_ci(s).params.n > 0


def test_abg_matches_grid_oracle(rng):
    for _ in range(20):
        n = int(rng.integers(10, 51))
        s = synth(AbgParams(3.0, 20.0, 2.0), [6, 28, 73], n, rng, sigma=6.0)
        D, F = 10 * np.log10(s.d_m), 10 * np.log10(s.f_hz / GHZ)

        def sse(a, b, g):
            pred = a[..., None] * D + b[..., None] + g[..., None] * F
            return np.sum((s.pl_db - pred) ** 2, axis=-1)

        best, step = zoom_grid_argmin(sse, [(0, 8), (-40, 80), (-4, 8)], tol=1e-6)
        p = fit_abg(s).params
        _assert_matches_grid(sse, np.array([p.alpha, p.beta, p.gamma]), best, step)


# --- CIF ----------------------------------------------------------------------


def test_cif_noiseless_with_forced_centroid(rng):
    # 3 parts at 20 GHz + 1 part at 36.8 GHz puts the centroid at 24.2 GHz.
    f = np.r_[np.full(300, 20.0), np.full(100, 36.8)] * GHZ
    d = np.exp(rng.uniform(0, np.log(60), f.size))
    truth = CifParams(3.19, 0.06, 24.2 * GHZ)
    r = fit_cif(SampleSet(f, d, path_loss(truth, f, d)))
    assert r.params.f0_hz == pytest.approx(24.2 * GHZ, rel=1e-12)
    assert (r.params.n, r.params.b) == pytest.approx((3.19, 0.06), abs=1e-6)


def test_cif_noisy(rng):
    f = rng.choice([14.0, 28.0], 5000) * GHZ
    d = np.exp(rng.uniform(np.log(2), np.log(50), f.size))
    f0 = float(np.mean(f))
    truth = CifParams(3.19, 0.06, f0)
    r = fit_cif(SampleSet(f, d, path_loss(truth, f, d) + 8.29 * rng.standard_normal(f.size)))
    assert abs(r.params.n - 3.19) <= 0.05
    assert abs(r.params.b - 0.06) <= 0.02


def test_cif_single_frequency_reverts_to_ci(rng):
    s = synth(CiParams(2.5), [28], 100, rng, sigma=2.0)
    with pytest.warns(SingleFrequencyWarning):
        r = fit_cif(s)
    assert r.params.b == 0.0
    assert r.params.n == pytest.approx(fit_ci(s).params.n, abs=1e-12)


def test_cif_matches_grid_oracle(rng):
    for _ in range(20):
        n = int(rng.integers(10, 51))
        s = synth(CiParams(3.0), [14, 28, 40], n, rng, sigma=6.0)
        D = 10 * np.log10(s.d_m)
        A = s.pl_db - fspl_ref(s.f_hz)
        f0 = float(np.mean(s.f_hz))
        u = (s.f_hz - f0) / f0

        def sse(nn, bb):
            pred = nn[..., None] * (1 + bb[..., None] * u) * D
            return np.sum((A - pred) ** 2, axis=-1)

        best, step = zoom_grid_argmin(sse, [(0.5, 6), (-3, 3)], tol=1e-6)
        p = fit_cif(s).params
        _assert_matches_grid(sse, np.array([p.n, p.b]), best, step)


# --- dual slope -------------------------------------------------------------


OFFICE_DUAL_ABG = DualAbgParams(1.7, 33.0, 2.49, 4.17, 6.90)


def test_dual_abg_noiseless(rng, kernel_path):
    s = synth(OFFICE_DUAL_ABG, [6, 28, 73], 2000, rng)
    grid = np.r_[np.geomspace(2, 40, 30), 6.90]
    p = fit_dual(s, "abg", grid).params
    assert p.d_bp == 6.90
    got = (p.alpha1, p.beta1, p.gamma, p.alpha2)
    assert got == pytest.approx((1.7, 33.0, 2.49, 4.17), abs=1e-6)


def test_dual_cif_noiseless(rng, kernel_path):
    f = rng.choice([14.0, 28.0, 38.0], 2000) * GHZ
    d = np.exp(rng.uniform(0, np.log(60), f.size))
    f0 = float(np.mean(f))
    truth = DualCifParams(2.51, 0.12, 4.25, 0.04, f0, 7.8)
    grid = np.r_[np.geomspace(2, 40, 30), 7.8]
    r = fit_dual(SampleSet(f, d, path_loss(truth, f, d)), "cif", grid)
    p = r.params
    assert p.d_bp == 7.8
    assert (p.n1, p.b1, p.n2, p.b2) == pytest.approx((2.51, 0.12, 4.25, 0.04), abs=1e-6)
    assert r.sigma_sf < 1e-6


def test_dual_abg_noisy(rng, kernel_path):
    s = synth(OFFICE_DUAL_ABG, [6, 28, 73], 20_000, rng, sigma=7.78)
    r = fit_dual(s, "abg")
    grid = np.asarray(r.bp_grid)
    target = int(np.argmin(np.abs(grid - 6.90)))
    assert abs(int(np.nonzero(grid == r.params.d_bp)[0][0]) - target) <= 1
    assert abs(r.params.alpha1 - 1.7) <= 0.3
    assert abs(r.params.alpha2 - 4.17) <= 0.3


def test_dual_tie_goes_to_smallest_breakpoint(kernel_path):
    # Data on a single straight line: every breakpoint between the clusters fits exactly.
    d = np.array([2.0, 2.0, 3.0, 3.0, 20.0, 20.0, 30.0, 30.0])
    f = np.tile([10e9, 30e9], 4)
    s = SampleSet(f, d, path_loss(AbgParams(3.0, 20.0, 2.0), f, d))
    r = fit_dual(s, "abg", [5.0, 8.0, 12.0])
    assert r.params.d_bp == 5.0


def test_dual_no_valid_breakpoint(rng):
    s = synth(OFFICE_DUAL_ABG, [6, 28], 100, rng, d_lo=1.5, d_hi=5.0)
    with pytest.raises(DegenerateDesignError):
        fit_dual(s, "abg", [10.0, 20.0])


def test_dual_rejects_unknown_family(rng):
    with pytest.raises(ValueError):
        fit_dual(synth(OFFICE_DUAL_ABG, [6, 28], 50, rng), "ci")


def test_fit_result_json(rng):
    r = fit_dual(synth(OFFICE_DUAL_ABG, [6, 28, 73], 500, rng, sigma=3.0), "abg")
    doc = json.loads(r.dumps())
    assert doc["family"] == "abg" and doc["slope"] == "dual"
    assert doc["sample_count"] == 500
    assert len(doc["bp_grid_m"]) == 50
    assert set(doc["params"]) == {"alpha1", "beta1", "gamma", "d_bp_m", "alpha2", "sigma_sf_db"}
    assert doc["sigma_sf_db"] == pytest.approx(r.sigma_sf)


# --- LOS scoring ------------------------------------------------------------


def test_los_mse_hand_example():
    d = [0.5, 0.5, 1.5, 1.5]
    los = [True, True, True, False]
    curve = lambda x: np.where(np.asarray(x) < 1, 1.0, 0.4)  # noqa: E731
    assert los_mse(curve, (d, los)) == pytest.approx(0.005)


def test_los_mse_perfect_data():
    # every bin center lies on the d <= 1.2 m plateau where the curve is 1
    obs = [LosObservation(d, True) for d in (0.1, 0.5, 0.9, 1.1)]
    assert los_mse(LosModel.NEW_INH, obs, bin_width=0.4) == 0.0
    half = [(2.0, True), (2.1, False), (2.9, True), (2.95, False)]
    d, los = zip(*half)
    assert los_mse(lambda x: np.full(np.shape(x), 0.5), (d, los)) == 0.0


def test_los_mse_prefers_generator():
    rng = np.random.default_rng(5)
    d = rng.uniform(0, 60, 100_000)
    los = rng.random(d.size) < p_los(LosModel.NEW_INH, d)
    ranking = rank_los_models((d, los))
    assert ranking[0][0] is LosModel.NEW_INH
    assert los_mse(LosModel.NEW_INH, (d, los)) < los_mse(LosModel.ITU_ORIGINAL, (d, los))


def test_binning_skips_empty_bins():
    centers, frac, counts = binned_los_fraction([0.2, 5.5, 5.7], [1, 0, 1], 1.0)
    assert centers.tolist() == [0.5, 5.5]
    assert frac.tolist() == [1.0, 0.5]
    assert counts.tolist() == [1, 2]


@pytest.mark.parametrize("width", [0.0, -1.0])
def test_binning_rejects_bad_width(width):
    with pytest.raises(DomainError):
        los_mse(LosModel.NEW_INH, ([1.0], [True]), width)


# --- CSV --------------------------------------------------------------------


def test_read_samples_csv(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("f_ghz,d_m,pl_db,env,state\n28,10,78.69,office,los\n73,4.5,90.1,mall,nlos\n")
    samples = read_samples_csv(path)
    assert len(samples) == 2
    assert samples[0].f.ghz == 28.0 and samples[0].scenario == Scenario.of("office", "los")
    assert samples[1].scenario == Scenario.of("mall", "nlos")


@pytest.mark.parametrize(
    "text,pattern",
    [
        ("", "empty"),
        ("f_ghz,d_m,pl_db,env,state\n", "no data"),
        ("f_ghz,d_m,pl_db\n28,10,70\n", "missing column"),
        ("f_ghz,d_m,pl_db,env,state\n28,10,70,office,los\n28,abc,70,office,los\n", "line 3"),
        ("f_ghz,d_m,pl_db,env,state\n28,0.5,70,office,los\n", "line 2"),
        ("f_ghz,d_m,pl_db,env,state\n28,10,70,garage,los\n", "line 2"),
        ("f_ghz,d_m,pl_db,env,state\n28,10,70,office\n", "line 2"),
    ],
)
def test_read_samples_csv_errors(tmp_path, text, pattern):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(DataFormatError, match=pattern):
        read_samples_csv(path)


def test_read_los_csv(tmp_path):
    path = tmp_path / "los.csv"
    path.write_text("d_m,los\n1.0,1\n20.0,0\n")
    d, los = read_los_csv(path)
    assert d.tolist() == [1.0, 20.0] and los.tolist() == [True, False]
    path.write_text("d_m,los\n1.0,2\n")
    with pytest.raises(DataFormatError, match="line 2"):
        read_los_csv(path)


def test_write_residuals(tmp_path, rng):
    s = synth(CiParams(2.0), [28, 73], 10, rng, sigma=1.0)
    r = fit_ci(s)
    path = tmp_path / "res.csv"
    write_residuals_csv(r, s, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "f_ghz,d_m,pl_db,model_db,residual_db"
    assert len(lines) == 11


def test_fits_agree_across_kernel_paths(rng, monkeypatch):
    s = synth(OFFICE_DUAL_ABG, [6, 28, 73], 3000, rng, sigma=5.0)
    results = []
    for flag in (False, True):
        if flag and not kernels.HAVE_NUMBA:
            continue
        monkeypatch.setattr(kernels, "USE_NUMBA", flag)
        results.append(fit_dual(s, "abg").params)
    for p in results[1:]:
        assert p.d_bp == results[0].d_bp
        assert p.alpha1 == pytest.approx(results[0].alpha1, rel=1e-9)


def test_no_warning_for_multi_frequency(rng):
    s = synth(CiParams(2.5), [28, 73], 100, rng, sigma=2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        fit_cif(s)
