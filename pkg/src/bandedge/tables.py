"""Sampled spectral weights and their piecewise interpolant.

A :class:`DensityTable` holds Gamma(omega) on a detuning grid. Between nodes
the weight is interpolated linearly, except when the table declares
inverse-square-root band edges; then every panel is written as
``g(omega) / sqrt(|omega - e|)`` with ``e`` the nearest edge and ``g`` linear,
which reproduces the effective-mass law exactly. On the two panels that touch
an edge ``g`` is held constant at its far-node value, so the (infinite) value
stored at an edge node never enters.
"""

import csv
import io
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._validation import check_grid
from .errors import RangeError

EDGE_TOL = 1e-12


@dataclass(frozen=True)
class PanelModel:
    """Per-panel coefficients of the interpolant (arrays of length n-1)."""

    xa: np.ndarray
    xb: np.ndarray
    weighted: bool
    edge: np.ndarray  # nearest edge, nan when unweighted
    side: np.ndarray  # +1 panel above its edge, -1 below
    ga: np.ndarray  # interpolated quantity at xa (Gamma or g)
    slope: np.ndarray

    def extension(self, omega):
        """Value of each panel's interpolant extended to ``omega``.

        ``omega`` has shape (m, 1); the result has shape (m, n_panels).
        """
        return self.ga + self.slope * (omega - self.xa)


@dataclass(frozen=True)
class DensityTable:
    """Tabulated non-flat spectral weight ``Gamma(omega) = g^2 rho``.

    Parameters
    ----------
    omega_grid : array_like
        Strictly increasing detunings relative to the transition frequency.
    gamma_values : array_like
        Non-negative spectral weights at the grid nodes.
    edges : tuple of float, optional
        Grid nodes carrying an inverse-square-root singularity.
    metadata : dict, optional
        Free-form provenance, e.g. the support cut-off of a truncated model.
    """

    omega_grid: np.ndarray
    gamma_values: np.ndarray
    edges: tuple = ()
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        grid = check_grid(self.omega_grid, "omega_grid", min_length=2)
        vals = np.asarray(self.gamma_values, dtype=float)
        if vals.shape != grid.shape:
            raise ValueError(
                f"gamma_values has shape {vals.shape}, expected {grid.shape}"
            )
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise ValueError("gamma_values must be finite and non-negative")
        snapped = []
        for e in sorted(float(e) for e in self.edges):
            j = int(np.argmin(np.abs(grid - e)))
            if abs(grid[j] - e) > EDGE_TOL * max(1.0, abs(e)):
                raise ValueError(f"edge {e} is not a grid node")
            snapped.append(float(grid[j]))
        grid = grid.copy()
        vals = vals.copy()
        grid.flags.writeable = False
        vals.flags.writeable = False
        object.__setattr__(self, "omega_grid", grid)
        object.__setattr__(self, "gamma_values", vals)
        object.__setattr__(self, "edges", tuple(snapped))
        object.__setattr__(self, "metadata", dict(self.metadata))

    def __len__(self):
        return self.omega_grid.size

    @property
    def omega_min(self):
        return float(self.omega_grid[0])

    @property
    def omega_max(self):
        return float(self.omega_grid[-1])

    @cached_property
    def panels(self):
        x, gam = self.omega_grid, self.gamma_values
        xa, xb = x[:-1], x[1:]
        if not self.edges:
            nan = np.full(xa.shape, np.nan)
            slope = (gam[1:] - gam[:-1]) / (xb - xa)
            return PanelModel(xa, xb, False, nan, np.ones_like(xa), gam[:-1], slope)
        edges = np.asarray(self.edges)
        mid = 0.5 * (xa + xb)
        e = edges[np.argmin(np.abs(mid[:, None] - edges[None, :]), axis=1)]
        side = np.where(mid > e, 1.0, -1.0)
        ga = gam[:-1] * np.sqrt(np.abs(xa - e))
        gb = gam[1:] * np.sqrt(np.abs(xb - e))
        touch_a = xa == e
        touch_b = xb == e
        ga = np.where(touch_a, gb, ga)
        gb = np.where(touch_b, ga, gb)
        slope = (gb - ga) / (xb - xa)
        return PanelModel(xa, xb, True, e, side, ga, slope)

    @cached_property
    def _zero_mask(self):
        mask = self.gamma_values == 0
        for e in self.edges:
            mask = mask | (self.omega_grid == e)
        return mask

    @cached_property
    def tail_origins(self):
        """Reference points ``(lower, upper)`` for the inverse-root tail models.

        The upper tail decays as ``A / sqrt(omega - upper)`` where ``upper`` is
        the node at which the final run of positive weight starts (the
        grid start if the weight never vanishes); the lower tail mirrors this.
        ``None`` marks an end where the weight is zero and no tail is needed.
        """
        zero = np.flatnonzero(self._zero_mask)
        x = self.omega_grid
        upper = lower = None
        if self.gamma_values[-1] > 0:
            upper = float(x[zero[-1]]) if zero.size else float(x[0])
        if self.gamma_values[0] > 0:
            lower = float(x[zero[0]]) if zero.size else float(x[-1])
        return lower, upper

    def near_edge(self, omega, tol=EDGE_TOL):
        """Return the declared edge within ``tol`` of ``omega`` or ``None``."""
        for e in self.edges:
            if abs(omega - e) < tol:
                return e
        return None

    def interpolate(self, omega):
        """Interpolated Gamma at ``omega`` (scalar or array, inside the grid)."""
        arr = np.asarray(omega, dtype=float)
        flat = np.atleast_1d(arr)
        lo, hi = self.omega_min, self.omega_max
        if np.any(flat < lo) or np.any(flat > hi):
            raise RangeError(f"omega outside table range [{lo}, {hi}]")
        p = self.panels
        k = np.clip(np.searchsorted(self.omega_grid, flat, side="right") - 1,
                    0, len(self) - 2)
        g = p.ga[k] + p.slope[k] * (flat - p.xa[k])
        if p.weighted:
            dist = p.side[k] * (flat - p.edge[k])
            with np.errstate(divide="ignore", invalid="ignore"):
                val = np.where(dist > 0, g / np.sqrt(np.where(dist > 0, dist, 1.0)), 0.0)
            on_node = np.isin(flat, self.edges)
            if np.any(on_node):
                idx = np.searchsorted(self.omega_grid, flat[on_node])
                val[on_node] = self.gamma_values[idx]
        else:
            val = g
        val = np.maximum(val, 0.0)
        return float(val[0]) if arr.ndim == 0 else val

    __call__ = interpolate

    def scaled(self, factor):
        return DensityTable(self.omega_grid, factor * self.gamma_values,
                            self.edges, self.metadata)

    # -- CSV ---------------------------------------------------------------

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["omega", "gamma"])
        for om, g in zip(self.omega_grid, self.gamma_values):
            w.writerow([format(om, ".17g"), format(g, ".17g")])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, edges=(), metadata=None):
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["omega", "gamma"]:
            raise ValueError("density table CSV must start with header 'omega,gamma'")
        body = [r for r in rows[1:] if r]
        try:
            data = np.array([[float(a), float(b)] for a, b in body], dtype=float)
        except ValueError as exc:
            raise ValueError(f"malformed density table row: {exc}") from None
        if data.ndim != 2 or data.shape[0] < 2:
            raise ValueError("density table needs at least two rows")
        return cls(data[:, 0], data[:, 1], tuple(edges), metadata or {})
