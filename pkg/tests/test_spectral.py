import numpy as np
import pytest
from scipy.integrate import quad

from bandedge import spectral
from bandedge.errors import RangeError, SingularPointError
from bandedge.reservoir import ReservoirSpec, gtilde_zero, kernel_time, tabulate
from bandedge.tables import DensityTable


def _cauchy_oracle(f, nodes, omega, half=0.25):
    """PV int f(w) / (w - omega) dw over the node range, split at every kink.

    The piece holding the pole (which must not be a node) uses scipy's
    Cauchy weight.
    """
    cuts = np.unique(np.concatenate([nodes, [omega - half, omega + half]]))
    cuts = cuts[(cuts >= nodes[0]) & (cuts <= nodes[-1])]
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        if a < omega < b:
            total += quad(f, a, b, weight="cauchy", wvar=omega, epsabs=1e-14)[0]
        else:
            total += quad(lambda w: f(w) / (w - omega), a, b, epsabs=1e-14)[0]
    return total


def test_pv_exact_for_piecewise_linear_profile():
    x = np.array([-2.0, -0.5, 0.3, 1.0, 2.5])
    v = np.array([0.0, 1.0, 0.4, 2.0, 0.0])
    t = DensityTable(x, v)
    for om in (-1.1, 0.0, 0.45, 2.0):
        expected = _cauchy_oracle(lambda w: np.interp(w, x, v), x, om)
        assert spectral.pv_integral(t, om) == pytest.approx(expected, abs=1e-10)


def test_pv_of_constant_is_log_ratio():
    t = DensityTable([0.0, 1.0, 4.0], [1.0, 1.0, 0.0 + 1.0])
    om = 1.5
    expected = np.log((4.0 - om) / om)
    assert spectral.pv_integral(t, om, tails=False) == pytest.approx(expected, rel=1e-13)


def test_one_band_boundary_value_from_table(one_band):
    table = tabulate(one_band)
    d = np.array([-3.0, 0.0, 1.9, 2.2, 3.0, 5.0])
    got = spectral.gtilde_zero_numeric(table, d)
    np.testing.assert_allclose(got, gtilde_zero(one_band, d), atol=1e-6)


def test_two_band_boundary_value_from_table(two_band):
    table = tabulate(two_band, span=1e3, points=100_001)
    d = np.array([-2.0, 0.5, 1.5, 2.5, 4.0])
    np.testing.assert_allclose(spectral.gtilde_zero_numeric(table, d),
                               gtilde_zero(two_band, d), atol=1e-6)


def test_smoothed_boundary_value_off_edge():
    spec = ReservoirSpec.smoothed(2.0, 1.0, 0.01, 1.0)
    table = tabulate(spec, span=2e3, points=200_001)
    d = np.array([0.0, 1.5, 2.5, 4.0])
    np.testing.assert_allclose(spectral.gtilde_zero_numeric(table, d),
                               gtilde_zero(spec, d), atol=1e-4)


def test_tail_correction_reduces_error(one_band):
    errs = []
    for span in (100.0, 400.0):
        table = tabulate(one_band, span=span, points=20_001)
        errs.append([abs(spectral.gtilde_zero_numeric(table, 0.0, tails=t)
                         - gtilde_zero(one_band, 0.0)) for t in (True, False)])
    with_tail, without = zip(*errs)
    assert max(with_tail) < 1e-6
    assert without[1] < without[0]  # truncation error shrinks with span
    assert without[1] > 1e-3


def test_pv_rejects_points_outside_or_on_edge(one_band):
    table = tabulate(one_band, span=10.0, points=1001)
    with pytest.raises(RangeError):
        spectral.pv_integral(table, table.omega_max)
    with pytest.raises(SingularPointError):
        spectral.pv_integral(table, 2.0)


@pytest.mark.parametrize("tau", [0.3, 1.0, 4.0])
def test_kernel_numeric_matches_closed_form(one_band, two_band, tau):
    for spec in (one_band, two_band):
        table = tabulate(spec, span=200.0, points=20_001)
        got = spectral.kernel_numeric(table, tau, 0.5)
        assert got == pytest.approx(kernel_time(spec, tau, 0.5), abs=1e-9)


def test_kernel_rejects_tau_zero(one_band):
    with pytest.raises(ValueError):
        spectral.kernel_numeric(tabulate(one_band, span=10.0, points=101), 0.0, 0.0)
