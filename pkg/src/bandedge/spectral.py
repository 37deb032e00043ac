"""Continuum-limit transforms of a tabulated spectral weight.

In the continuum limit the non-flat Laplace transform at ``s -> 0+`` splits
into an absorptive and a dispersive part::

    G~(0) = pi * Gamma(omega) - i * PV int Gamma(w) / (w - omega) dw

The principal value is evaluated in closed form for the table's piecewise
interpolant (see :mod:`bandedge.tables`). After subtracting ``Gamma(omega)``
the remaining integrand is bounded, and the subtracted piece contributes
exact logarithms at the nodes, so no excision width or smoothing parameter
is involved. Inverse-square-root tails beyond the grid are added
analytically.
"""

import numpy as np
from scipy.special import fresnel

from ._validation import as_float_array, scalar_or_array
from .errors import RangeError, SingularPointError

_CHUNK = 2_000_000


def _check_inside(table, omega):
    lo, hi = table.omega_min, table.omega_max
    bad = (omega <= lo) | (omega >= hi)
    if np.any(bad):
        raise RangeError(
            f"omega={omega[bad][0]!r} not strictly inside table range ({lo}, {hi})"
        )
    for w in omega:
        e = table.near_edge(w)
        if e is not None:
            raise SingularPointError(f"omega={w!r} sits on the band edge {e}", edge=e)


def _tail_factor(d, v):
    """``int_v^inf 2 dr / (r^2 - d)`` for ``d < v^2`` (vectorised over ``d``)."""
    out = np.empty_like(d)
    neg = d < 0
    pos = d > 0
    a = np.sqrt(-d[neg])
    out[neg] = 2.0 / a * np.arctan(a / v)
    b = np.sqrt(d[pos])
    out[pos] = 2.0 / b * np.arctanh(b / v)
    out[~(neg | pos)] = 2.0 / v
    return out


def _tail_pv(table, omega):
    lower, upper = table.tail_origins
    x, gam = table.omega_grid, table.gamma_values
    total = np.zeros_like(omega)
    if upper is not None:
        v = np.sqrt(x[-1] - upper)
        total += gam[-1] * v * _tail_factor(omega - upper, v)
    if lower is not None:
        v = np.sqrt(lower - x[0])
        total -= gam[0] * v * _tail_factor(lower - omega, v)
    return total


def _pv_chunk(table, omega):
    p = table.panels
    w = omega[:, None]
    ext = p.extension(w)
    if p.weighted:
        ra = np.sqrt(p.side * (p.xa - p.edge))
        rb = np.sqrt(p.side * (p.xb - p.edge))
        dist = p.side * (w - p.edge)
        pos = dist > 0
        b = np.sqrt(np.where(pos, dist, 1.0))
        a = np.sqrt(np.where(pos, 1.0, -dist))
        coef = np.where(pos, ext / b, 0.0)
        regular = np.where(
            pos,
            2.0 * coef * (np.log(ra + b) - np.log(rb + b)),
            ext * (2.0 / a) * (np.arctan(rb / a) - np.arctan(ra / a)),
        )
        base = np.sum(2.0 * p.side * p.slope * (rb - ra)) + regular.sum(axis=1)
    else:
        coef = ext
        base = np.full(omega.shape, table.gamma_values[-1] - table.gamma_values[0])
    # Node-wise log coefficients: the two panels meeting at a node interpolate
    # the same value there, so the coefficient vanishes at omega == node.
    n_nodes = len(table)
    node_coef = np.zeros((omega.size, n_nodes))
    node_coef[:, 1:] += coef
    node_coef[:, :-1] -= coef
    diff = w - table.omega_grid[None, :]
    logs = np.log(np.abs(np.where(diff == 0, 1.0, diff)))
    return base + np.sum(node_coef * logs, axis=1)


def pv_integral(table, omega, *, tails=True):
    """Principal value ``PV int Gamma(w) / (w - omega) dw`` over the table.

    Parameters
    ----------
    table : DensityTable
    omega : float or array_like
        Evaluation points, strictly inside the grid and off declared edges.
    tails : bool, default True
        Add the analytic inverse-square-root continuation beyond both grid
        ends (only where the boundary weight is non-zero).
    """
    om, scalar = as_float_array(omega)
    _check_inside(table, om)
    step = max(1, _CHUNK // len(table))
    out = np.concatenate([_pv_chunk(table, om[i:i + step])
                          for i in range(0, om.size, step)])
    if tails:
        out = out + _tail_pv(table, om)
    return scalar_or_array(out, scalar)


def gtilde_zero_numeric(table, delta, *, tails=True):
    """``G~(0) = pi Gamma(delta) - i PV(delta)`` from tabulated data."""
    d, scalar = as_float_array(delta)
    pv = np.atleast_1d(pv_integral(table, d, tails=tails))
    absorptive = np.pi * np.atleast_1d(table.interpolate(d))
    return scalar_or_array(absorptive - 1j * pv, scalar)


def kernel_numeric(table, tau, delta, *, tails=True, order=8):
    """Memory kernel ``K~(tau) = int Gamma(w) exp(-i (w - delta) tau) dw``.

    Each panel is integrated with Gauss-Legendre nodes; panels of an
    edge-weighted table are mapped to ``r = sqrt(|w - e|)`` first, which
    removes the integrable singularity. Tails use Fresnel integrals.
    """
    tau = float(tau)
    if tau <= 0:
        raise ValueError("tau must be positive")
    t, wts = np.polynomial.legendre.leggauss(order)
    p = table.panels
    if p.weighted:
        ra = np.sqrt(p.side * (p.xa - p.edge))
        rb = np.sqrt(p.side * (p.xb - p.edge))
        r = 0.5 * (ra + rb)[:, None] + 0.5 * (rb - ra)[:, None] * t
        x = p.edge[:, None] + p.side[:, None] * r**2
        f = 2.0 * (p.ga[:, None] + p.slope[:, None] * (x - p.xa[:, None]))
        jac = 0.5 * np.abs(rb - ra)[:, None]
    else:
        x = 0.5 * (p.xa + p.xb)[:, None] + 0.5 * (p.xb - p.xa)[:, None] * t
        f = p.ga[:, None] + p.slope[:, None] * (x - p.xa[:, None])
        jac = 0.5 * (p.xb - p.xa)[:, None]
    total = np.sum(wts * jac * f * np.exp(-1j * (x - delta) * tau))
    if tails:
        lower, upper = table.tail_origins
        xg, gam = table.omega_grid, table.gamma_values
        scale = 2.0 * np.sqrt(np.pi / (2.0 * tau))
        if upper is not None:
            v = np.sqrt(xg[-1] - upper)
            s_, c_ = fresnel(v * np.sqrt(2.0 * tau / np.pi))
            amp = gam[-1] * v
            total += amp * np.exp(-1j * (upper - delta) * tau) * scale * (
                (0.5 - c_) - 1j * (0.5 - s_))
        if lower is not None:
            v = np.sqrt(lower - xg[0])
            s_, c_ = fresnel(v * np.sqrt(2.0 * tau / np.pi))
            amp = gam[0] * v
            total += amp * np.exp(-1j * (lower - delta) * tau) * scale * (
                (0.5 - c_) + 1j * (0.5 - s_))
    return complex(total)
