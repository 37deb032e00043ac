"""Stationary linear susceptibility of the weakly driven emitter.

``chi(delta) = -S / (delta - i G*(0))`` with ``G(0) = gamma/2 + G~(0)``.
Absorption is ``-Im chi`` and dispersion ``Re chi``. At a band edge ``G~(0)``
diverges and ``chi`` tends to zero; the generic path returns that limit
exactly, which is the transparency point.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import spectral
from ._validation import as_float_array, check_grid, check_scalar, scalar_or_array
from .errors import UnsupportedSpecError
from .reservoir import Kind, ReservoirSpec, _gtilde_zero_array


@dataclass(frozen=True)
class AtomDriveParams:
    """Susceptibility scale ``S = N |mu_01|^2`` and Rabi frequency."""

    scale: float = 1.0
    rabi: float = 0.0

    def __post_init__(self):
        check_scalar(self.scale, "scale", min_val=0, strict=True)
        check_scalar(self.rabi, "rabi", min_val=0)


@dataclass(frozen=True)
class SusceptibilityCurve:
    deltas: np.ndarray
    chi: np.ndarray
    spec: ReservoirSpec
    scale: float = 1.0
    edge_points: tuple = field(default=())

    @property
    def absorption(self):
        return -self.chi.imag

    @property
    def dispersion(self):
        return self.chi.real

    def __len__(self):
        return self.deltas.size


def _total_g_zero_masked(spec, d):
    if spec.kind is Kind.TABULATED:
        g = np.atleast_1d(spectral.gtilde_zero_numeric(spec.table, d))
        return g + spec.gamma / 2, np.zeros(d.shape, dtype=bool)
    g, singular = _gtilde_zero_array(spec, d)
    return g + spec.gamma / 2, singular


def susceptibility(spec, delta, scale=1.0):
    """Complex susceptibility at detuning(s) ``delta``.

    Band-edge detunings (within ``1e-12``) return the exact limit ``0``.
    A lossless reservoir (``gamma = 0``) can make the denominator vanish at
    a bound-state energy; ``chi`` has a real pole there and ``nan`` is
    returned.
    """
    d, scalar = as_float_array(delta)
    g0, singular = _total_g_zero_masked(spec, d)
    denom = d - 1j * np.conj(g0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        chi = -scale / denom
    chi[denom == 0] = np.nan
    chi[singular] = 0.0
    return scalar_or_array(chi, scalar)


def _root(x):
    # principal root of a real number: +i sqrt(|x|) for x < 0
    return np.sqrt(np.asarray(x, dtype=float) + 0j)


def susceptibility_closed_form(spec, delta, scale=1.0):
    """Textbook closed forms for the one-band, smoothed and two-band models.

    These are kept separate from :func:`susceptibility` so the two can be
    checked against each other. In the two-band form,
    ``sqrt((da - d)(db - d))`` has to be read as ``sqrt(da - d) * sqrt(db - d)``.
    The joint root has the wrong sign for ``d > db``.
    """
    d, scalar = as_float_array(delta)
    c = spec.coupling
    lorentz = d - 0.5j * spec.gamma
    if spec.kind is Kind.ONE_BAND:
        r = _root(spec.delta_g - d)
        chi = -r / (lorentz * r + c)
    elif spec.kind is Kind.SMOOTHED:
        r = _root(spec.delta_g - d) + np.sqrt(spec.epsilon)
        chi = -r / (lorentz * r + c)
    elif spec.kind is Kind.TWO_BAND:
        ra = _root(spec.delta_a - d)
        rb = _root(spec.delta_b - d)
        prod = ra * rb
        chi = -prod / (lorentz * prod + 0.5 * c * (-1j * rb + ra))
    else:
        raise UnsupportedSpecError(f"no closed form for {spec.kind.value}")
    return scalar_or_array(scale * chi, scalar)


def curve(spec, delta_grid, scale=1.0):
    """Evaluate the susceptibility over an increasing grid.

    Grid points on a band edge are kept (with their exact value ``chi = 0``)
    and listed in ``edge_points``; a :class:`UserWarning` is issued for them.
    """
    grid = check_grid(delta_grid, "delta_grid")
    chi = np.atleast_1d(susceptibility(spec, grid, scale))
    edge_points = tuple(
        float(x) for x in grid if any(abs(x - e) < 1e-12 for e in spec.edges)
    )
    if edge_points:
        warnings.warn(f"grid touches band edge(s) at {edge_points}; chi set to its limit 0",
                      stacklevel=2)
    return SusceptibilityCurve(grid, chi, spec, float(scale), edge_points)


def transparency_points(spec, delta_range, scale=1.0, *, points=2001, xtol=1e-13):
    """Detunings in ``delta_range`` where the susceptibility vanishes.

    Absorption is non-negative and only touches zero, so candidates are
    bracketed by a sign change in the slope of ``|chi|`` on a scan grid and
    then narrowed by bisection on the slope sign. A candidate counts only if
    ``|chi| < 1e-10 * scale`` there.
    """
    lo, hi = (float(v) for v in delta_range)
    grid = np.linspace(lo, hi, points)
    mag = np.abs(np.atleast_1d(susceptibility(spec, grid, scale)))

    def f(x):
        return abs(susceptibility(spec, x, scale))

    found = []
    idx = [i for i in range(1, points - 1) if mag[i] <= mag[i - 1] and mag[i] <= mag[i + 1]]
    for i in idx:
        a, b = grid[i - 1], grid[i + 1]
        while b - a > xtol:
            m = 0.5 * (a + b)
            eta = 0.25 * (b - a)
            if f(m - eta) < f(m + eta):
                b = m + eta
            else:
                a = m - eta
        x = 0.5 * (a + b)
        if f(x) < 1e-10 * scale and not any(abs(x - y) < 1e-9 for y in found):
            found.append(float(x))
    return sorted(found)
