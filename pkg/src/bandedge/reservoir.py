"""Structured photonic reservoirs: spectral weights, kernels and transforms.

All frequencies are dimensionless detunings from the atomic transition.
The non-flat part of each model is normalised so that
``pi * spectral_weight == Re gtilde_zero``. Square roots are principal; the
``s -> 0+`` boundary value of ``sqrt(s + i x)`` is ``sqrt(|x|) exp(i pi/4 sgn x)``,
which gives a pure Lamb shift inside a gap and pure decay inside a band.
"""

import contextlib
import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import spectral
from ._validation import as_float_array, check_scalar, scalar_or_array
from .errors import DomainError, RangeError, SingularPointError, UnsupportedSpecError
from .tables import EDGE_TOL, DensityTable

_PHASE = np.exp(-1j * np.pi / 4)

# Test hook: -1 picks the wrong sheet of the s -> 0+ square root.
_branch_sign = 1


@contextlib.contextmanager
def flipped_branch():
    """Temporarily evaluate G~(0) on the wrong branch (mutation testing)."""
    global _branch_sign
    _branch_sign = -1
    try:
        yield
    finally:
        _branch_sign = 1


class Kind(str, enum.Enum):
    FLAT = "FlatOnly"
    ONE_BAND = "OneBand"
    SMOOTHED = "SmoothedOneBand"
    TWO_BAND = "TwoBand"
    TABULATED = "Tabulated"


@dataclass(frozen=True)
class ReservoirSpec:
    """Flat Markovian decay plus an optional structured band.

    Use the classmethod constructors rather than filling fields by hand.
    ``beta`` enters every formula as ``beta ** 1.5``.
    """

    kind: Kind
    gamma: float = 1.0
    beta: float = 0.0
    delta_g: float = 0.0
    epsilon: float = 0.0
    delta_a: float = 0.0
    delta_b: float = 0.0
    table: DensityTable | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        check_scalar(self.gamma, "gamma", min_val=0)
        check_scalar(self.beta, "beta", min_val=0)
        check_scalar(self.epsilon, "epsilon", min_val=0)
        check_scalar(self.delta_g, "delta_g")
        if self.kind is Kind.TWO_BAND and not self.delta_a < self.delta_b:
            raise ValueError("two-band model needs delta_a < delta_b")
        if self.kind is Kind.TABULATED and self.table is None:
            raise ValueError("tabulated reservoir needs a DensityTable")
        if self.kind is Kind.FLAT and self.beta != 0:
            raise ValueError("flat reservoir carries no band coupling")

    @classmethod
    def flat(cls, gamma=1.0):
        return cls(Kind.FLAT, gamma=gamma)

    @classmethod
    def one_band(cls, delta_g, beta, gamma=1.0):
        return cls(Kind.ONE_BAND, gamma=gamma, beta=beta, delta_g=delta_g)

    @classmethod
    def smoothed(cls, delta_g, beta, epsilon, gamma=1.0):
        return cls(Kind.SMOOTHED, gamma=gamma, beta=beta, delta_g=delta_g,
                   epsilon=epsilon)

    @classmethod
    def two_band(cls, delta_a, delta_b, beta, gamma=1.0):
        return cls(Kind.TWO_BAND, gamma=gamma, beta=beta, delta_a=delta_a,
                   delta_b=delta_b)

    @classmethod
    def tabulated(cls, table, gamma=1.0):
        return cls(Kind.TABULATED, gamma=gamma, table=table)

    @property
    def coupling(self):
        """``beta ** 1.5``, the prefactor of every band term."""
        return self.beta ** 1.5

    @property
    def analytic(self):
        return self.kind is not Kind.TABULATED

    @property
    def edges(self):
        """Detunings where the non-flat transform diverges."""
        if self.kind is Kind.TABULATED:
            return self.table.edges
        if self.coupling == 0:
            return ()
        if self.kind is Kind.ONE_BAND:
            return (self.delta_g,)
        if self.kind is Kind.SMOOTHED and self.epsilon == 0:
            return (self.delta_g,)
        if self.kind is Kind.TWO_BAND:
            return (self.delta_a, self.delta_b)
        return ()

    def to_dict(self):
        out = {"kind": self.kind.value, "gamma": self.gamma}
        if self.kind in (Kind.ONE_BAND, Kind.SMOOTHED):
            out.update(beta=self.beta, delta_g=self.delta_g)
        if self.kind is Kind.SMOOTHED:
            out["epsilon"] = self.epsilon
        if self.kind is Kind.TWO_BAND:
            out.update(beta=self.beta, delta_a=self.delta_a, delta_b=self.delta_b)
        if self.kind is Kind.TABULATED:
            out.update(points=len(self.table), edges=list(self.table.edges),
                       **{k: v for k, v in self.table.metadata.items()
                          if isinstance(v, (int, float, str))})
        return out


def _edge_mask(spec, d):
    mask = np.zeros(d.shape, dtype=bool)
    for e in spec.edges:
        mask |= np.abs(d - e) < EDGE_TOL
    return mask


def spectral_weight(spec, delta):
    """Non-flat spectral weight ``Gamma`` at detuning ``delta``.

    Zero inside forbidden bands; tabulated specs interpolate (and raise
    :class:`RangeError` outside their grid).
    """
    d, scalar = as_float_array(delta)
    c = spec.coupling
    out = np.zeros_like(d)
    if spec.kind is Kind.TABULATED:
        return spec.table.interpolate(delta)
    if c == 0:
        return scalar_or_array(out, scalar)
    if spec.kind is Kind.ONE_BAND:
        u = d - spec.delta_g
        pos = u > 0
        out[pos] = c / (np.pi * np.sqrt(u[pos]))
    elif spec.kind is Kind.SMOOTHED:
        u = d - spec.delta_g
        pos = u > 0
        out[pos] = c * np.sqrt(u[pos]) / (np.pi * (u[pos] + spec.epsilon))
    elif spec.kind is Kind.TWO_BAND:
        lo = d < spec.delta_a
        hi = d > spec.delta_b
        out[lo] = c / (2 * np.pi * np.sqrt(spec.delta_a - d[lo]))
        out[hi] = c / (2 * np.pi * np.sqrt(d[hi] - spec.delta_b))
    return scalar_or_array(out, scalar)


def kernel_time(spec, tau, delta):
    """Non-flat memory kernel ``K~(tau)`` in the frame rotating at ``delta``."""
    tau = float(tau)
    if not tau > 0:
        raise DomainError("kernel is singular at tau = 0; need tau > 0")
    c = spec.coupling
    if spec.kind is Kind.FLAT or (spec.analytic and c == 0):
        return 0j
    if spec.kind is Kind.ONE_BAND:
        return complex(c * _PHASE * np.exp(-1j * (spec.delta_g - delta) * tau)
                       / np.sqrt(np.pi * tau))
    if spec.kind is Kind.TWO_BAND:
        lower = np.conj(_PHASE) * np.exp(-1j * (spec.delta_a - delta) * tau)
        upper = _PHASE * np.exp(-1j * (spec.delta_b - delta) * tau)
        return complex(0.5 * c * (lower + upper) / np.sqrt(np.pi * tau))
    if spec.kind is Kind.SMOOTHED:
        table = _smoothed_table(spec.delta_g, spec.beta, spec.epsilon)
        return spectral.kernel_numeric(table, tau, delta)
    return spectral.kernel_numeric(spec.table, tau, delta)


@lru_cache(maxsize=16)
def _smoothed_table(delta_g, beta, epsilon):
    spec = ReservoirSpec.smoothed(delta_g, beta, epsilon, gamma=0.0)
    return tabulate(spec, span=2e3, points=200_001)


def phi_kernel(spec, tau, delta):
    """Smooth factor ``sqrt(tau) * K~(tau)`` of the closed-form kernels.

    Vectorised over ``tau`` and finite at ``tau = 0``; used by the
    product-integration solver.
    """
    tau = np.asarray(tau, dtype=float)
    c = spec.coupling
    if spec.kind is Kind.FLAT or c == 0:
        return np.zeros(tau.shape, dtype=complex)
    if spec.kind is Kind.ONE_BAND:
        return c * _PHASE * np.exp(-1j * (spec.delta_g - delta) * tau) / np.sqrt(np.pi)
    if spec.kind is Kind.TWO_BAND:
        lower = np.conj(_PHASE) * np.exp(-1j * (spec.delta_a - delta) * tau)
        upper = _PHASE * np.exp(-1j * (spec.delta_b - delta) * tau)
        return 0.5 * c * (lower + upper) / np.sqrt(np.pi)
    raise UnsupportedSpecError(
        f"{spec.kind.value} has no closed-form kernel; use the discrete-bath solver"
    )


def gtilde_analytic(spec, s, delta):
    """Laplace transform ``G~(s)`` of the non-flat kernel for ``Re s > 0``."""
    if spec.kind is Kind.TABULATED:
        raise UnsupportedSpecError("tabulated reservoirs: use spectral.gtilde_zero_numeric")
    s = complex(s)
    if not s.real > 0:
        raise DomainError(f"need Re s > 0, got s={s}")
    d, scalar = as_float_array(delta)
    c = spec.coupling
    if spec.kind is Kind.FLAT or c == 0:
        return scalar_or_array(np.zeros(d.shape, dtype=complex), scalar)
    if spec.kind is Kind.ONE_BAND:
        out = c * _PHASE / np.sqrt(s + 1j * (spec.delta_g - d))
    elif spec.kind is Kind.SMOOTHED:
        out = c / (1j * np.sqrt(spec.epsilon)
                   + np.conj(_PHASE) * np.sqrt(s + 1j * (spec.delta_g - d)))
    else:
        out = (0.5 * c * np.conj(_PHASE) / np.sqrt(s + 1j * (spec.delta_a - d))
               + 0.5 * c * _PHASE / np.sqrt(s + 1j * (spec.delta_b - d)))
    return scalar_or_array(out, scalar)


def _inverse_root_limit(x):
    """``lim_{s->0+} 1 / sqrt(s + i x)`` for real ``x != 0``, times e^{i pi/4}.

    Returns the exact values ``-i / sqrt(x)`` for ``x > 0`` and
    ``1 / sqrt(-x)`` for ``x < 0`` without rounding the unit phase.
    """
    r = 1.0 / np.sqrt(np.abs(x))
    if _branch_sign == 1:
        return np.where(x > 0, -1j * r, r + 0j)
    return np.where(x > 0, 1j * r, -r + 0j)


def _gtilde_zero_array(spec, d):
    """Boundary values ``G~(0)`` and the mask of singular detunings."""
    c = spec.coupling
    singular = _edge_mask(spec, d)
    out = np.zeros(d.shape, dtype=complex)
    if spec.kind is Kind.FLAT or c == 0:
        return out, singular
    ok = ~singular
    dd = d[ok]
    if spec.kind is Kind.ONE_BAND:
        out[ok] = c * _inverse_root_limit(spec.delta_g - dd)
    elif spec.kind is Kind.TWO_BAND:
        # e^{+i pi/4}/sqrt(s+iy) is the conjugate-mirror of the upper term.
        lower = np.conj(_inverse_root_limit(dd - spec.delta_a))
        upper = _inverse_root_limit(spec.delta_b - dd)
        out[ok] = 0.5 * c * (lower + upper)
    elif spec.kind is Kind.SMOOTHED:
        x = spec.delta_g - dd
        ax = np.sqrt(np.abs(x))
        se = np.sqrt(spec.epsilon)
        sign = _branch_sign
        with np.errstate(divide="ignore", invalid="ignore"):
            inside = -1j * c / (se + ax)
            above = c / (ax + 1j * se) if sign == 1 else -c / (ax - 1j * se)
        out[ok] = np.where(x >= 0, inside, above)
    return out, singular


def gtilde_zero(spec, delta):
    """Boundary value ``G~(0) = lim_{s->0+} G~(s)``.

    Raises :class:`SingularPointError` within ``1e-12`` of a band edge.
    Tabulated specs are routed through the principal-value quadrature.
    """
    if spec.kind is Kind.TABULATED:
        return spectral.gtilde_zero_numeric(spec.table, delta)
    d, scalar = as_float_array(delta)
    out, singular = _gtilde_zero_array(spec, d)
    if np.any(singular):
        bad = d[singular][0]
        raise SingularPointError(f"G~(0) diverges at the band edge delta={bad!r}",
                                 edge=bad)
    return scalar_or_array(out, scalar)


def total_g_zero(spec, delta):
    """``G(0) = gamma/2 + G~(0)`` including the flat Markovian part."""
    g = gtilde_zero(spec, delta)
    return g + spec.gamma / 2


def tabulate(spec, span=1e3, points=100_001, *, grading=2.0, gap_points=201):
    """Sample an analytic model on a grid clustered at its band edges.

    The grid covers ``[min_edge - span, max_edge + span]`` with at least
    ``points`` nodes. Around each edge
    nodes are placed at ``edge +/- span * t**grading`` with ``t`` uniform,
    so the spacing shrinks quadratically towards the singularity. Edge
    nodes store zero; their inverse-root law is carried by the table's
    panel model.
    """
    if spec.kind is Kind.TABULATED:
        return spec.table
    if spec.kind in (Kind.ONE_BAND, Kind.SMOOTHED, Kind.FLAT):
        anchors = [spec.delta_g]
    else:
        anchors = [spec.delta_a, spec.delta_b]
    lo, hi = min(anchors) - span, max(anchors) + span
    # sides share their edge node; round up so at least ``points`` remain
    n_side = max(2, -(-(points + len(anchors)) // (2 * len(anchors))))
    t = np.linspace(0.0, 1.0, n_side) ** grading
    nodes = [np.linspace(min(anchors), max(anchors), gap_points)]
    for e in anchors:
        nodes += [e - span * t, e + span * t]
    grid = np.unique(np.clip(np.concatenate(nodes), lo, hi))
    keep = np.concatenate([[True], np.diff(grid) > 1e-13 * max(1.0, span)])
    grid = grid[keep]
    for e in anchors:
        grid[np.argmin(np.abs(grid - e))] = e
    values = np.asarray(spectral_weight(spec, grid), dtype=float)
    edges = tuple(e for e in spec.edges)
    for e in edges:
        values[grid == e] = 0.0
    meta = {"source": spec.kind.value, "cutoff_low": float(lo), "cutoff_high": float(hi)}
    return DensityTable(grid, values, edges, meta)
