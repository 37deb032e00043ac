import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.base import clone

from bandedge import reconstruct as R
from bandedge.errors import InsufficientDataError, NearTransparencyError
from bandedge.reservoir import ReservoirSpec, spectral_weight
from bandedge.response import curve, susceptibility
from bandedge.tables import DensityTable

GRID = np.linspace(-2, 6, 801)


def test_invert_examples():
    m = R.MeasurementSet([0.0, 3.0], [-0.942809042 - 0.666666667j,
                                      -0.266666667 - 0.133333333j])
    g = R.invert_gtilde(m)
    assert g[0] == pytest.approx(-0.707107j, abs=1e-6)
    assert g[1] == pytest.approx(1.0, abs=1e-6)


def test_invert_flat_gives_zero():
    m = R.synthesize_measurement(ReservoirSpec.flat(1.0), GRID)
    assert np.max(np.abs(R.invert_gtilde(m))) < 1e-13


def test_inversion_is_identity_on_chi(rng):
    for _ in range(50):
        spec = ReservoirSpec.two_band(rng.uniform(-2, 0), rng.uniform(1, 3),
                                      rng.uniform(0.2, 2), rng.uniform(0.1, 2))
        m = R.synthesize_measurement(spec, np.sort(rng.uniform(-5, 5, 40)))
        g = R.invert_gtilde(m)
        back = -m.scale / (m.deltas - 1j * np.conj(g + 0.5 * m.gamma))
        keep = np.abs(m.chi) > 1e-6
        np.testing.assert_allclose(back[keep], m.chi[keep], rtol=1e-12)


def test_near_transparent_points_are_flagged(one_band):
    m = R.synthesize_measurement(one_band, GRID)
    g = R.invert_gtilde(m)
    assert np.isnan(g[GRID == 2.0]).all()
    assert np.isfinite(g[GRID != 2.0]).all()


def test_all_flagged_raises():
    with pytest.raises(NearTransparencyError):
        R.invert_gtilde(R.MeasurementSet([1.0, 2.0], [0.0, 1e-14]))


def test_measurement_validation():
    with pytest.raises(ValueError):
        R.MeasurementSet([0.0, 1.0], [1.0])
    with pytest.raises(ValueError):
        R.MeasurementSet([1.0, 0.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        R.MeasurementSet([0.0, 1.0], [1.0, 1.0], scale=0.0)


@pytest.mark.parametrize("spec", [
    ReservoirSpec.one_band(2.0, 1.0, 1.0),
    ReservoirSpec.smoothed(2.0, 1.0, 0.05, 1.0),
    ReservoirSpec.two_band(1.0, 2.0, 1.0, 1.0),
])
def test_noiseless_round_trip(spec):
    m = R.synthesize_measurement(spec, GRID)
    ext = R.extract_profile(R.invert_gtilde(m), GRID)
    exact = spectral_weight(spec, ext.profile.omega_grid)
    np.testing.assert_allclose(ext.profile.gamma_values, exact, atol=1e-9, rtol=0)
    # only rounding-level excursions below zero
    assert all(abs(v) < 1e-12 for _, v in ext.negative_excursions)


def test_two_band_gap_is_empty(two_band):
    ext = R.extract_profile(R.invert_gtilde(R.synthesize_measurement(two_band, GRID)), GRID)
    x = ext.profile.omega_grid
    gap = (x > 1) & (x < 2)
    assert np.all(ext.profile.gamma_values[gap] < 1e-12)


def test_edge_fit_noiseless(one_band):
    prof = R.extract_profile(R.invert_gtilde(R.synthesize_measurement(one_band, GRID)),
                             GRID).profile
    fit = R.fit_band_edge(prof, (2.05, 6))
    assert abs(fit.omega_g - 2) <= GRID[1] - GRID[0]
    assert abs(fit.beta - 1) <= 1e-3
    assert fit.n_points >= 5


def test_edge_fit_scaling():
    x = np.linspace(2.01, 5, 200)
    prof = DensityTable(x, 1.0 / (np.pi * np.sqrt(x - 1.5)))
    base = R.fit_band_edge(prof, (2, 5))
    fit = R.fit_band_edge(prof.scaled(3.0), (2, 5))
    assert fit.beta == pytest.approx(base.beta * 3.0 ** (2 / 3), rel=1e-12)
    assert fit.omega_g == pytest.approx(base.omega_g, abs=1e-12)


def test_edge_fit_insufficient_data():
    prof = DensityTable(GRID, np.zeros_like(GRID))
    with pytest.raises(InsufficientDataError):
        R.fit_band_edge(prof, (2.05, 6))


def test_noise_response_is_monotone(one_band):
    step = GRID[1] - GRID[0]
    med = []
    for sigma in (0.0, 1e-4, 1e-3, 1e-2):
        og, be = [], []
        for seed in range(30):
            m = R.synthesize_measurement(one_band, GRID, noise_sigma=sigma, seed=seed)
            fit = R.fit_band_edge(R.extract_profile(R.invert_gtilde(m), GRID).profile,
                                  (2.05, 6))
            og.append(abs(fit.omega_g - 2) / step)
            be.append(abs(fit.beta - 1))
        med.append((np.median(og), np.median(be)))
    og, be = zip(*med)
    assert all(a <= b for a, b in zip(og, og[1:]))
    assert all(a <= b for a, b in zip(be, be[1:]))


def test_self_consistency_examples(one_band):
    rep = R.reconstruct(R.synthesize_measurement(one_band, GRID), (2.05, 6))
    assert rep.self_consistency_residual <= 1e-3
    assert rep.consistent
    flat = R.reconstruct(R.synthesize_measurement(ReservoirSpec.flat(1.0), GRID))
    assert flat.self_consistency_residual <= 1e-10
    m = R.synthesize_measurement(one_band, GRID)
    bad = R.reconstruct(R.MeasurementSet(GRID, np.conj(m.chi)), (2.05, 6))
    assert bad.self_consistency_residual > 0.1
    assert not bad.consistent
    assert any("causal" in n for n in bad.notes)


def test_self_consistency_two_band(two_band):
    rep = R.reconstruct(R.synthesize_measurement(two_band, GRID))
    assert R.candidate_edges(rep) == (1.0, 2.0)
    assert rep.self_consistency_residual <= 1e-3


def test_flat_report_has_no_fit():
    rep = R.reconstruct(R.synthesize_measurement(ReservoirSpec.flat(1.0), GRID), (2.05, 6))
    assert rep.edge_fit is None
    assert any("insufficient" in n or "usable" in n for n in rep.notes)


def test_noisy_residual_is_not_called_acausal(one_band):
    # 1/chi* amplifies noise near transparency, so the plain rms exceeds the
    # flag even for causal data; the note must not claim otherwise
    rep = R.reconstruct(R.synthesize_measurement(one_band, GRID, noise_sigma=1e-3, seed=0),
                        (2.05, 6))
    assert rep.self_consistency_residual > R.CONSISTENCY_FLAG
    assert not any("not explained" in n for n in rep.notes)
    assert any("not a causality test" in n for n in rep.notes)


def test_negative_excursions_recorded(one_band):
    m = R.synthesize_measurement(one_band, GRID, noise_sigma=1e-2, seed=3)
    ext = R.extract_profile(R.invert_gtilde(m), GRID)
    assert len(ext.negative_excursions) > 0
    assert np.all(ext.profile.gamma_values >= 0)


def test_synthesize_determinism(one_band):
    a = R.synthesize_measurement(one_band, GRID, noise_sigma=1e-3, seed=7)
    b = R.synthesize_measurement(one_band, GRID, noise_sigma=1e-3, seed=7)
    c = R.synthesize_measurement(one_band, GRID, noise_sigma=1e-3, seed=8)
    np.testing.assert_array_equal(a.chi, b.chi)
    assert not np.array_equal(a.chi, c.chi)
    clean = curve(one_band, np.linspace(-2, 6, 800)).chi
    assert np.array_equal(R.synthesize_measurement(one_band, np.linspace(-2, 6, 800)).chi,
                          clean)
    na, nc = a.chi - clean_at(one_band), c.chi - clean_at(one_band)
    bound = 3 * 1e-3 * np.sqrt(2) / np.sqrt(GRID.size)
    assert abs(na.mean() - nc.mean()) < 2 * bound


def clean_at(spec):
    return susceptibility(spec, GRID)


def test_report_json(one_band):
    rep = R.reconstruct(R.synthesize_measurement(one_band, GRID), (2.05, 6))
    doc = json.loads(json.dumps(rep.to_dict()))
    assert doc["flagged"] == [2.0]
    assert doc["edge_fit"]["n_points"] == rep.edge_fit.n_points
    assert doc["self_consistent"] is True


def test_estimator_api(one_band):
    m = R.synthesize_measurement(one_band, GRID)
    est = R.BandEdgeReconstructor(fit_window=(2.05, 6))
    assert clone(est).get_params() == est.get_params()
    est.fit(GRID.reshape(-1, 1), m.chi)
    assert est.omega_g_ == pytest.approx(2.0, abs=0.01)
    assert est.beta_ == pytest.approx(1.0, abs=1e-3)
    off = GRID != 2.0
    np.testing.assert_allclose(est.predict(GRID[off]), m.chi[off], rtol=1e-9)
    assert est.score(GRID[off], m.chi[off]) > -1e-9
    np.testing.assert_allclose(est.transform(GRID[off], m.chi[off]),
                               est.gtilde_[off])


def test_estimator_predict_requires_fit():
    from sklearn.exceptions import NotFittedError
    with pytest.raises(NotFittedError):
        R.BandEdgeReconstructor().predict([0.0])


@settings(max_examples=40, deadline=None)
@given(st.floats(-1, 3), st.floats(0.2, 3), st.floats(0, 2))
def test_round_trip_property(dg, beta, gamma):
    spec = ReservoirSpec.one_band(dg, beta, gamma)
    grid = np.linspace(-3, 7, 201)
    m = R.synthesize_measurement(spec, grid)
    ext = R.extract_profile(R.invert_gtilde(m), grid)
    exact = spectral_weight(spec, ext.profile.omega_grid)
    np.testing.assert_allclose(ext.profile.gamma_values, exact, atol=1e-9)
