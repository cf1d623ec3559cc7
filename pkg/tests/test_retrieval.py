import math

import numpy as np
import pytest
from scipy.optimize import least_squares

from nlispec.errors import AxisMismatchError, NegativeAbsorptionError
from nlispec.interferometer import MapAxes, simulate_map, with_gaussian_noise
from nlispec.mapio import IntensityMap
from nlispec.retrieval import (
    absorption_from_visibility,
    fit_row_extrema,
    fit_row_model,
    index_offset_from_phase,
    levenberg_marquardt,
    refine_extrema,
    retrieve,
)

from conftest import flat_gas


# ------------------------------------------------------------ solver

def test_lm_solves_linear_problem_exactly():
    rng = np.random.default_rng(0)
    design = rng.normal(size=(40, 3))
    truth = np.array([1.5, -2.0, 0.25])
    y = design @ truth

    fit = levenberg_marquardt(lambda p: design @ p - y, np.zeros(3))
    assert fit.converged
    np.testing.assert_allclose(fit.params, truth, atol=1e-9)
    assert fit.cost < 1e-18


def test_lm_recovers_exponential_decay():
    x = np.linspace(0.0, 5.0, 60)
    truth = (2.5, 1.3, 0.4)
    y = truth[0] * np.exp(-truth[1] * x) + truth[2]

    def resid(p):
        return p[0] * np.exp(-p[1] * x) + p[2] - y

    fit = levenberg_marquardt(resid, np.array([1.0, 0.5, 0.0]))
    assert fit.converged
    np.testing.assert_allclose(fit.params, truth, rtol=1e-7)


def test_lm_agrees_with_scipy_on_noisy_data():
    rng = np.random.default_rng(42)
    x = np.linspace(0.0, 4.0, 80)
    y = 2.0 * np.exp(-0.9 * x) + 0.1 + rng.normal(0.0, 0.01, x.size)

    def resid(p):
        return p[0] * np.exp(-p[1] * x) + p[2] - y

    ours = levenberg_marquardt(resid, np.array([1.0, 1.0, 0.0]))
    ref = least_squares(resid, np.array([1.0, 1.0, 0.0]), method="lm")
    np.testing.assert_allclose(ours.params, ref.x, rtol=1e-6)

    # curvature covariance should also match scipy's J^T J at the optimum
    jac = ref.jac
    dof = x.size - 3
    cov_ref = np.linalg.inv(jac.T @ jac) * (2 * ref.cost / dof)
    np.testing.assert_allclose(ours.covariance, cov_ref, rtol=1e-3)


def test_lm_scale_invariance():
    # same problem expressed in different units converges to scaled params
    x = np.linspace(0.0, 5.0, 50)
    y = 3.0 * np.exp(-1.1 * x)

    def resid_small(p):
        return p[0] * np.exp(-p[1] * x) - y

    def resid_big(p):
        return p[0] * 1e-6 * np.exp(-p[1] * x) - y

    a = levenberg_marquardt(resid_small, np.array([1.0, 1.0]))
    b = levenberg_marquardt(resid_big, np.array([1e6, 1.0]),
                            scales=np.array([1e6, 1.0]))
    assert a.converged and b.converged
    assert b.params[0] * 1e-6 == pytest.approx(a.params[0], rel=1e-7)
    assert b.params[1] == pytest.approx(a.params[1], rel=1e-7)


def test_lm_reports_failure_on_runaway_minimum():
    # cost approaches its infimum only as p -> -inf; with the iteration
    # budget capped the solver must admit it has not converged
    fit = levenberg_marquardt(lambda p: np.array([math.exp(p[0]) + 1.0]),
                              np.array([0.0]), max_iterations=3)
    assert not fit.converged


def test_lm_confidence_interval_uses_student_t():
    rng = np.random.default_rng(1)
    x = np.linspace(0.0, 1.0, 13)  # dof = 13 - 3 = 10
    y = 1.0 + 2.0 * x + 0.5 * x**2 + rng.normal(0.0, 0.05, x.size)

    def resid(p):
        return p[0] + p[1] * x + p[2] * x**2 - y

    fit = levenberg_marquardt(resid, np.zeros(3))
    np.testing.assert_allclose(fit.conf95, 2.2281388519649385 * fit.stderr,
                               rtol=1e-9)


def test_lm_input_validation():
    with pytest.raises(ValueError):
        levenberg_marquardt(lambda p: p, np.zeros((2, 2)))
    with pytest.raises(ValueError):
        levenberg_marquardt(lambda p: p, np.zeros(2), scales=np.array([1.0, 0.0]))


# ------------------------------------------------------------ inversions

def test_absorption_visibility_round_trip():
    alpha = absorption_from_visibility(math.exp(-0.45 * 2.5), 2.5)
    assert alpha == pytest.approx(0.45, rel=1e-12)


def test_absorption_negative_policies():
    with pytest.raises(NegativeAbsorptionError):
        absorption_from_visibility(1.02, 2.5)
    assert absorption_from_visibility(1.02, 2.5, on_negative="clip") == 0.0
    kept = absorption_from_visibility(1.02, 2.5, on_negative="keep")
    assert kept == pytest.approx(-math.log(1.02) / 2.5, rel=1e-12)
    with pytest.raises(ValueError):
        absorption_from_visibility(0.5, 2.5, on_negative="whatever")
    with pytest.raises(ValueError):
        absorption_from_visibility(-0.1, 2.5)


def test_index_offset_from_phase_frozen():
    # inverse of the -2 pi dn L / lambda fringe-shift law
    dn = index_offset_from_phase(-0.36530147134765045, 4300.0, 2.5)
    assert dn == pytest.approx(1e-5, rel=1e-12)
    assert index_offset_from_phase(0.0, 4300.0, 2.5) == 0.0


# ------------------------------------------------------------ row fits

def _synthetic_row(amp, tau, dphi, n=257):
    theta = np.linspace(-1.0, 1.0, n)
    phase = 12.0 * theta**2 + 0.3  # plausible quadratic fringe phase
    envelope = np.sinc(0.3 * theta) ** 2
    row = amp * envelope * (1.0 + tau * np.cos(phase + dphi))
    return row, envelope, phase


def test_fit_row_model_exact_on_model_rows():
    row, envelope, phase = _synthetic_row(3.7, 0.62, 0.21)
    est = fit_row_model(row, envelope, phase)
    assert est.amplitude == pytest.approx(3.7, rel=1e-9)
    assert est.contrast == pytest.approx(0.62, rel=1e-9)
    assert est.phase_rad == pytest.approx(0.21, abs=1e-9)


def test_fit_row_model_linear_stage_alone():
    row, envelope, phase = _synthetic_row(1.0, 0.4, -0.5)
    est = fit_row_model(row, envelope, phase, polish=False)
    assert est.contrast == pytest.approx(0.4, rel=1e-9)
    assert est.phase_rad == pytest.approx(-0.5, abs=1e-9)
    assert math.isnan(est.sigma_contrast)


def test_fit_row_model_rejects_dark_row():
    _, envelope, phase = _synthetic_row(1.0, 0.5, 0.0)
    with pytest.raises(ValueError, match="amplitude"):
        fit_row_model(-np.ones_like(envelope), envelope, phase)


def test_refine_extrema_quadratic_interpolation():
    # samples of a parabola peaking between grid points
    x = np.arange(7, dtype=float)
    y = -((x - 3.3) ** 2)
    pos, height, is_max = refine_extrema(y)
    assert pos.size == 1 and bool(is_max[0])
    assert pos[0] == pytest.approx(3.3, abs=1e-12)
    assert height[0] == pytest.approx(0.0, abs=1e-12)


def test_fit_row_extrema_reads_contrast():
    theta = np.linspace(-1.0, 1.0, 2001)
    row = 2.0 * (1.0 + 0.55 * np.cos(60.0 * theta))  # flat envelope
    est = fit_row_extrema(row)
    # the polynomial envelope leaks ~1e-3 of the fringe term; that is
    # the honest accuracy floor of the model-free route
    assert est.contrast == pytest.approx(0.55, rel=2e-3)


def test_fit_row_extrema_needs_enough_fringes():
    theta = np.linspace(-1.0, 1.0, 401)
    row = 1.0 + 0.5 * np.cos(6.0 * theta)  # ~2 fringes
    with pytest.raises(ValueError, match="fringes"):
        fit_row_extrema(row)


# ------------------------------------------------------------ full retrieval

GAS = flat_gas(dn=1e-5, alpha=0.3)
VAC = flat_gas(dn=0.0, alpha=0.0, p_torr=0.0)


@pytest.fixture(scope="module")
def map_pair():
    import conftest
    import math as _math
    from nlispec.dispersion import SellmeierModel, UniaxialCrystalIndex
    from nlispec.interferometer import InterferometerGeometry

    m = SellmeierModel.constant(2.2, valid_um=(0.3, 30.0))
    crystal = UniaxialCrystalIndex(m, m, cut_angle_rad=_math.pi / 4)
    geom = InterferometerGeometry(crystal, 0.05, 2.5, 532.0)
    axes = MapAxes(np.linspace(604.0, 610.0, 5),
                   np.linspace(-6.656e-3, 6.656e-3, 257))
    sample = IntensityMap(axes, simulate_map(geom, GAS, axes),
                          meta={"which": "sample"})
    reference = IntensityMap(axes, simulate_map(geom, VAC, axes),
                             meta={"which": "reference"})
    return geom, sample, reference


def test_retrieve_round_trip_model_engine(map_pair):
    geom, sample, reference = map_pair
    res = retrieve(sample, reference, geom)
    np.testing.assert_allclose(res.alpha_cm, 0.3, rtol=1e-8)
    np.testing.assert_allclose(res.index_offset, 1e-5, rtol=1e-6)
    np.testing.assert_allclose(res.visibility, math.exp(-0.3 * 2.5), rtol=1e-8)
    assert res.meta["sample_meta"] == {"which": "sample"}


def test_retrieve_polish_removes_off_axis_phase_bias(map_pair):
    geom, sample, reference = map_pair
    polished = retrieve(sample, reference, geom, polish=True)
    raw = retrieve(sample, reference, geom, polish=False)
    err_polished = np.abs(polished.index_offset - 1e-5).max()
    err_raw = np.abs(raw.index_offset - 1e-5).max()
    assert err_polished < err_raw / 50
    assert err_raw < 1e-8  # the bias itself is small, but real


def test_retrieve_extrema_engine_cross_checks_model(map_pair):
    geom, sample, reference = map_pair
    model = retrieve(sample, reference, geom, engine="model")
    extrema = retrieve(sample, reference, geom, engine="extrema")
    np.testing.assert_allclose(extrema.alpha_cm, model.alpha_cm, rtol=2e-2)
    assert np.all(np.isnan(extrema.index_offset))


def test_retrieve_row_subset(map_pair):
    geom, sample, reference = map_pair
    res = retrieve(sample, reference, geom, rows=[0, 3])
    assert res.rows.tolist() == [0, 3]
    assert res.alpha_cm.shape == (2,)
    np.testing.assert_allclose(res.wavelength_nm,
                               sample.axes.wavelength_nm[[0, 3]])
    with pytest.raises(ValueError):
        retrieve(sample, reference, geom, rows=[99])


def test_retrieve_requires_matching_axes(map_pair):
    geom, sample, reference = map_pair
    other_axes = MapAxes(sample.axes.wavelength_nm + 1.0,
                         sample.axes.angle_rad)
    other = IntensityMap(other_axes, reference.intensity)
    with pytest.raises(AxisMismatchError):
        retrieve(sample, other, geom)
    with pytest.raises(ValueError):
        retrieve(sample, reference, geom, engine="fourier")


def test_retrieve_negative_absorption_policies(map_pair):
    geom, sample, reference = map_pair
    # swap roles: "sample" now has higher contrast than the "reference"
    with pytest.raises(NegativeAbsorptionError):
        retrieve(reference, sample, geom, on_negative="raise")
    kept = retrieve(reference, sample, geom, on_negative="keep")
    assert np.all(kept.alpha_cm < 0)


def test_retrieve_noisy_maps_stay_calibrated(map_pair):
    # retrieved sigma should describe the seed-to-seed scatter
    geom, sample, reference = map_pair
    rng = np.random.default_rng(5)
    alphas, sigmas = [], []
    for _ in range(12):
        noisy_s = IntensityMap(sample.axes,
                               with_gaussian_noise(sample.intensity, 1e-3, rng))
        noisy_r = IntensityMap(reference.axes,
                               with_gaussian_noise(reference.intensity, 1e-3,
                                                   rng))
        res = retrieve(noisy_s, noisy_r, geom, rows=[2])
        alphas.append(res.alpha_cm[0])
        sigmas.append(res.alpha_sigma_cm[0])
    alphas = np.array(alphas)
    assert abs(alphas.mean() - 0.3) < 5 * alphas.std(ddof=1) / math.sqrt(12)
    assert np.median(sigmas) == pytest.approx(alphas.std(ddof=1), rel=0.6)


def test_retrieve_with_known_visible_index(map_pair):
    # a gas-filled gap also nudges pump and signal phases; telling the
    # template the visible index keeps the idler offset exact
    from nlispec.dispersion import GasIndexModel, gas_index
    from nlispec.gas import GasState

    geom, _, reference = map_pair
    visible = GasIndexModel(n0=1.000449)
    n_vis = gas_index(visible, 760.0, 300.0)
    gas = GasState(p_torr=760.0, t_k=300.0, visible=visible,
                   idler_nu_cm=np.linspace(1500.0, 3500.0, 5),
                   idler_alpha_cm=np.full(5, 0.3),
                   idler_index=np.full(5, n_vis + 1e-5))
    sample = IntensityMap(reference.axes,
                          simulate_map(geom, gas, reference.axes))
    res = retrieve(sample, reference, geom, sample_visible_index=n_vis)
    np.testing.assert_allclose(res.index_offset, 1e-5, rtol=1e-6)
    np.testing.assert_allclose(res.alpha_cm, 0.3, rtol=1e-8)
    assert res.meta["sample_visible_index"] == n_vis
    assert res.meta["reference_visible_index"] == 1.0
