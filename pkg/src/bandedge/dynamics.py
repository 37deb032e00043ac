"""Time-domain oracles for the driven emitter.

Two independent routes to the stationary amplitude:

* the reduced Volterra equations, with the weakly singular band kernel
  ``K~(tau) = tau**-0.5 * phi(tau)`` handled by product integration (exact
  moments of ``tau**-0.5`` against a piecewise-linear ``phi * a1``) and
  trapezoidal time stepping; the flat part acts as the local term
  ``-(gamma/2) a1``;
* a brute-force discrete bath of ``M`` modes, propagated with a Strang
  splitting whose two factors are both exact unitaries.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, InstabilityError, RevivalError, UnsupportedSpecError
from .reservoir import Kind, ReservoirSpec, phi_kernel, spectral_weight


class Mode(str, enum.Enum):
    LINEARIZED = "LinearizedVolterra"
    FULL = "FullVolterra"
    DISCRETE_BATH = "DiscreteBath"


@dataclass(frozen=True)
class SolverConfig:
    step: float = 0.005
    horizon: float = 200.0
    mode: Mode = Mode.LINEARIZED
    bath_modes: int = 4000
    bath_span: tuple = (-40.0, 40.0)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "bath_span", tuple(float(v) for v in self.bath_span))
        if not 0 < self.step < self.horizon:
            raise ValueError("need 0 < step < horizon")
        if self.bath_modes < 1:
            raise ValueError("bath_modes must be >= 1")
        lo, hi = self.bath_span
        if not lo < hi:
            raise ValueError("bath_span must be an increasing pair")

    @property
    def n_steps(self):
        return int(round(self.horizon / self.step))

    def to_dict(self):
        return {"step": self.step, "horizon": self.horizon, "mode": self.mode.value,
                "bath_modes": self.bath_modes, "bath_span": list(self.bath_span),
                "seed": self.seed}


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    a0: np.ndarray
    a1: np.ndarray
    spec: ReservoirSpec
    config: SolverConfig
    delta: float
    rabi: float
    bath: np.ndarray | None = None  # mode amplitudes at the final time
    mode_frequencies: np.ndarray | None = None
    norm: np.ndarray | None = None
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SteadyState:
    value: complex
    drift: float


def _product_weights(n, h):
    """Combined weights ``c_m`` of ``int_0^{t_n} tau^-1/2 u(tau) dtau``.

    ``u`` is interpolated linearly between ``tau_m = m h``. Entry ``m`` of the
    returned interior array applies to ``1 <= m < n``; ``A[0]`` is the weight
    of ``tau = 0`` and ``B[n-1]`` the weight of the far end ``tau = n h``.
    """
    tau = h * np.arange(n + 1)
    sq = np.sqrt(tau)
    m0 = 2.0 * (sq[1:] - sq[:-1])
    m1 = (2.0 / 3.0) * (tau[1:] * sq[1:] - tau[:-1] * sq[:-1])
    A = (tau[1:] * m0 - m1) / h
    B = (m1 - tau[:-1] * m0) / h
    interior = np.zeros(n + 1)
    interior[1:n] = A[1:n] + B[0:n - 1]
    return A, B, interior


def _check_volterra_spec(spec):
    if spec.kind not in (Kind.FLAT, Kind.ONE_BAND, Kind.TWO_BAND):
        raise UnsupportedSpecError(
            f"{spec.kind.value} has no closed-form kernel; use evolve_discrete_bath"
        )


def _amplitude_bound(spec, rabi):
    rate = spec.gamma if spec.gamma > 0 else 0.0
    return 10.0 * abs(rabi) / rate if rate > 0 else np.inf


def _volterra(spec, delta, rabi, config, full):
    _check_volterra_spec(spec)
    h = config.step
    n = config.n_steps
    times = h * np.arange(n + 1)
    phi = phi_kernel(spec, times, delta)
    A, B, interior = _product_weights(n, h)
    kw = interior * phi  # history weights for lags 1..n-1
    c0 = A[0] * phi[0]
    lam = 1j * delta - 0.5 * spec.gamma
    a0 = np.ones(n + 1, dtype=complex)
    a1 = np.zeros(n + 1, dtype=complex)
    bound = _amplitude_bound(spec, rabi)
    memory = 0j  # I_n for the current n
    diag = 1.0 - 0.5 * h * lam + 0.5 * h * c0
    for k in range(n):
        f_k = -1j * rabi * a0[k] + lam * a1[k] - memory
        # I_{k+1} minus its implicit lag-0 term
        hist = B[k] * phi[k + 1] * a1[0]
        if k >= 1:
            hist += np.dot(kw[1:k + 1], a1[k:0:-1])
        rhs = a1[k] + 0.5 * h * (f_k - hist)
        coupling = 0.5j * h * rabi
        if full:
            r0 = a0[k] - coupling * a1[k]
            a1_new = (rhs - coupling * r0) / (diag - coupling**2)
            a0[k + 1] = r0 - coupling * a1_new
        else:
            a1_new = (rhs - coupling) / diag
        a1[k + 1] = a1_new
        memory = c0 * a1_new + hist
        if not np.isfinite(a1_new) or abs(a1_new) > bound:
            raise InstabilityError(f"|a1| = {abs(a1_new):.3g} exceeds 10|Omega|/gamma at "
                                   f"t = {times[k + 1]:.4g}; reduce the step")
    return times, a0, a1


def _record(spec, delta, rabi, config, times, a0, a1, **extra):
    return TrajectoryRecord(times, a0, a1, spec, config, float(delta), float(rabi), **extra)


def evolve_linearized(spec, delta, rabi, config):
    """Integrate ``a1`` with the ground amplitude frozen at ``a0 = 1``.

    Solves ``a1' = -i rabi + (i delta - gamma/2) a1 - int_0^t K~(t-s) a1(s) ds``
    from ``a1(0) = 0``. The result is exactly linear in ``rabi``.
    """
    times, a0, a1 = _volterra(spec, delta, rabi, config, full=False)
    return _record(spec, delta, rabi, config, times, a0, a1)


def evolve_full(spec, delta, rabi, config):
    """Integrate the coupled ``(a0, a1)`` Volterra system from ``(1, 0)``."""
    times, a0, a1 = _volterra(spec, delta, rabi, config, full=True)
    return _record(spec, delta, rabi, config, times, a0, a1)


def _edge_cell_weight(spec, lo, hi, e, nodes=16):
    """``int_lo^hi Gamma dx`` for a cell near edge ``e`` via ``r = sqrt(|x - e|)``."""
    t, w = np.polynomial.legendre.leggauss(nodes)
    total = 0.0
    for a, b, side in ((lo, min(hi, e), -1.0), (max(lo, e), hi, 1.0)):
        if b <= a:
            continue
        ra, rb = np.sqrt(abs(a - e)), np.sqrt(abs(b - e))
        r0, r1 = min(ra, rb), max(ra, rb)
        r = 0.5 * (r0 + r1) + 0.5 * (r1 - r0) * t
        x = e + side * r**2
        total += 0.5 * (r1 - r0) * np.sum(w * 2.0 * r * spectral_weight(spec, x))
    return total


def bath_modes(spec, config):
    """Midpoint mode frequencies and squared couplings ``g_m^2``.

    ``g_m^2 = Gamma(x_m) dx`` with the flat part entering as
    ``gamma / (2 pi)``; cells within one spacing of a band edge are
    integrated exactly in ``r = sqrt(|x - e|)`` instead.
    """
    lo, hi = config.bath_span
    m = config.bath_modes
    dx = (hi - lo) / m
    x = lo + (np.arange(m) + 0.5) * dx
    if spec.kind is Kind.TABULATED:
        t = spec.table
        if lo < t.omega_min or hi > t.omega_max:
            raise ValueError("bath_span must lie inside the tabulated range")
    g2 = np.asarray(spectral_weight(spec, x), dtype=float) * dx
    for e in spec.edges:
        near = np.flatnonzero(np.abs(x - e) < 1.5 * dx)
        for j in near:
            g2[j] = _edge_cell_weight(spec, x[j] - 0.5 * dx, x[j] + 0.5 * dx, e)
    g2 += spec.gamma / (2 * np.pi) * dx
    return x, g2


def discrete_kernel(spec, delta, config, tau):
    """Kernel ``sum_m g_m^2 exp(-i (x_m - delta) tau)`` of the sampled bath."""
    x, g2 = bath_modes(spec, config)
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    return np.exp(-1j * np.outer(tau, x - delta)) @ g2


def evolve_discrete_bath(spec, delta, rabi, config, initial=(1.0, 0.0)):
    """Propagate the atom plus ``M`` explicit modes.

    In the variables ``b_m = alpha_m exp(-i (x_m - delta) t)`` the
    single-excitation Hamiltonian is time independent. It splits into a
    diagonal part and a star coupling of ``a1`` to ``(a0, b_m)``. Both parts
    are exponentiated exactly, so the norm is conserved to rounding.

    Parameters
    ----------
    initial : (complex, complex)
        ``(a0(0), a1(0))``; the bath starts empty.
    """
    lo, hi = config.bath_span
    dx = (hi - lo) / config.bath_modes
    revival = 2 * np.pi / dx
    if config.horizon > revival:
        raise RevivalError(f"horizon {config.horizon} exceeds the bath revival time "
                           f"{revival:.4g}; add modes or shorten the run")
    x, g2 = bath_modes(spec, config)
    g = np.sqrt(g2)
    h = config.step
    n = config.n_steps
    # state ordering: [a1, a0, b_1 .. b_M]
    energies = np.concatenate([[-delta, 0.0], x - delta])
    half = np.exp(-0.5j * h * energies)
    w = np.concatenate([[rabi], g])
    wnorm = np.linalg.norm(w)
    what = w / wnorm if wnorm > 0 else w
    cos, sin = np.cos(wnorm * h), np.sin(wnorm * h)
    psi = np.zeros(x.size + 2, dtype=complex)
    psi[0], psi[1] = initial[1], initial[0]
    psi /= np.linalg.norm(psi)
    a0 = np.empty(n + 1, dtype=complex)
    a1 = np.empty(n + 1, dtype=complex)
    norm = np.empty(n + 1)
    a1[0], a0[0], norm[0] = psi[0], psi[1], np.vdot(psi, psi).real
    for k in range(n):
        psi *= half
        c1 = psi[0]
        cw = np.dot(what, psi[1:])
        psi[0] = cos * c1 - 1j * sin * cw
        psi[1:] += ((cos - 1.0) * cw - 1j * sin * c1) * what
        psi *= half
        a1[k + 1], a0[k + 1] = psi[0], psi[1]
        norm[k + 1] = np.vdot(psi, psi).real
    times = h * np.arange(n + 1)
    alpha = psi[2:] * np.exp(1j * (x - delta) * times[-1])
    return _record(spec, delta, rabi, config, times, a0, a1, bath=alpha,
                   mode_frequencies=x, norm=norm,
                   meta={"revival_time": revival, "mode_spacing": dx})


def evolve(spec, delta, rabi, config, **kw):
    """Dispatch on ``config.mode``."""
    if config.mode is Mode.LINEARIZED:
        return evolve_linearized(spec, delta, rabi, config)
    if config.mode is Mode.FULL:
        return evolve_full(spec, delta, rabi, config)
    return evolve_discrete_bath(spec, delta, rabi, config, **kw)


def steady_state(traj, *, window=0.2, tol=1e-4):
    """Tail-averaged ``a1`` with a drift diagnostic.

    The drift is the distance between the means of the two halves of the
    tail window, relative to the overall tail mean.

    Raises
    ------
    ConvergenceError
        If the drift exceeds ``tol``.
    """
    a1 = traj.a1
    n_tail = max(2, int(round(window * a1.size)))
    tail = a1[-n_tail:]
    mean = tail.mean()
    half = n_tail // 2
    spread = abs(tail[half:].mean() - tail[:half].mean())
    if abs(mean) == 0:
        drift = 0.0 if spread == 0 else np.inf
    else:
        drift = float(spread / abs(mean))
    if not drift < tol and not (drift == 0.0):
        raise ConvergenceError(f"trajectory has not settled: relative drift {drift:.3g} "
                               f"over the last {window:.0%} exceeds {tol:g}", drift=drift)
    return SteadyState(complex(mean), drift)


def susceptibility_from_dynamics(spec, delta, rabi, scale, config):
    """``chi = -S conj(a1(inf) / rabi)`` from a time-domain run."""
    if rabi == 0:
        raise ValueError("rabi must be non-zero to extract a linear response")
    traj = evolve(spec, delta, rabi, config)
    ss = steady_state(traj)
    return complex(-scale * np.conj(ss.value / rabi))


def polarization_series(traj, scale=1.0, *, frame="rotating"):
    """Induced dipole ``P(t) = 2 S Re(a0 conj(a1))``.

    ``frame="lab"`` restores the probe factor ``exp(-i delta t)`` of the
    excited amplitude, turning a constant stationary value into a harmonic.
    """
    a1 = traj.a1
    if frame == "lab":
        a1 = a1 * np.exp(-1j * traj.delta * traj.times)
    elif frame != "rotating":
        raise ValueError("frame must be 'rotating' or 'lab'")
    return 2.0 * scale * np.real(traj.a0 * np.conj(a1))
