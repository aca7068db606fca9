"""Time integration of the non-local Navier-Stokes-Korteweg system.

Unknowns are the density ``rho``, the velocity ``u`` and the order parameter
``c``, with ``c`` slaved to ``rho`` through ``-kappa c'' + gamma c = gamma rho``.
The momentum equation is integrated in the artificial-pressure form::

    (rho u)_t + (rho u^2)_x + P~(rho)_x - gamma rho c_x = mu u_xx
"""
import logging
import math

import numpy as np
from scipy import linalg

from . import diagnostics, torus
from .eos import check_admissibility
from .utils import (AdmissibilityError, ConfigError, PhasekitError,
                    check_bounds, check_finite, freeze)

logger = logging.getLogger('phasekit')

CAPILLARITY_FORMS = ('artificial', 'order_parameter')

# integral of the quintic smoothstep over the first half of a ramp
RAMP_HALF_MASS = 5.0 / 64.0


class PhysicalParams(object):
    """Viscosity, capillarity and coupling, plus the pressure law.

    The law is stored as a copy carrying ``gamma`` so that ``P~`` is always
    evaluated with the coefficient of this object.
    """

    def __init__(self, mu, kappa, gamma, eos):
        for key, value in (('mu', mu), ('kappa', kappa), ('gamma', gamma)):
            if not float(value) > 0 or not math.isfinite(float(value)):
                raise ConfigError("{} must be > 0 (got {})".format(key, value))
        self.mu = float(mu)
        self.kappa = float(kappa)
        self.gamma = float(gamma)
        self.eos = eos.with_gamma(self.gamma)

    def replace(self, **kwargs):
        d = dict(mu=self.mu, kappa=self.kappa, gamma=self.gamma, eos=self.eos)
        d.update(kwargs)
        return PhysicalParams(**d)

    def to_dict(self):
        return {'mu': self.mu, 'kappa': self.kappa, 'gamma': self.gamma,
                'eos': self.eos.to_dict()}

    def __repr__(self):
        return 'PhysicalParams(mu=%r, kappa=%r, gamma=%r, eos=%r)' % (
            self.mu, self.kappa, self.gamma, self.eos)


class SolverConfig(object):
    """Step size control, horizon, guard rails and snapshot schedule.

    Parameters
    ----------
    dt : float
        Largest time step; the CFL limit may shrink it.
    cfl : float
        Courant number in (0, 1].
    t_end : float
    rho_lower, rho_upper : float
        Density guard rails. Leaving them is an error.
    snapshot_every : int
        Steps between stored snapshots.
    snapshot_interval : float, optional
        When positive, snapshots are taken at multiples of this time instead
        and steps are shortened to land on them.
    upwind : float, optional
        Coefficient of the diffusive flux ``upwind * h * |u|`` added to the
        central mass and momentum fluxes. 0 disables it.
    capillarity_form : {'artificial', 'order_parameter'}
        ``-P~(rho)_x + gamma rho c_x`` or ``-P(rho)_x + gamma rho (c - rho)_x``.
    helmholtz_backend : {'spectral', 'central'}
    """

    def __init__(self, dt, cfl, t_end, rho_lower, rho_upper, snapshot_every=100,
                 snapshot_interval=0.0, upwind=0.5, capillarity_form='artificial',
                 helmholtz_backend='spectral', closure_tol=1e-10):
        self.dt = float(dt)
        self.cfl = float(cfl)
        self.t_end = float(t_end)
        self.rho_lower = float(rho_lower)
        self.rho_upper = float(rho_upper)
        self.snapshot_every = int(snapshot_every)
        self.snapshot_interval = float(snapshot_interval)
        self.upwind = float(upwind)
        self.capillarity_form = capillarity_form
        self.helmholtz_backend = helmholtz_backend
        self.closure_tol = float(closure_tol)
        self._validate()

    def _validate(self):
        if not self.dt > 0:
            raise ConfigError("dt must be > 0 (got {})".format(self.dt))
        if not self.t_end > 0:
            raise ConfigError("t_end must be > 0 (got {})".format(self.t_end))
        if not 0 < self.cfl <= 1:
            raise ConfigError("cfl must lie in (0, 1] (got {})".format(self.cfl))
        if not 0 < self.rho_lower < self.rho_upper:
            raise ConfigError("guard rails must satisfy 0 < lower < upper "
                              "(got {}, {})".format(self.rho_lower, self.rho_upper))
        if self.snapshot_every < 1:
            raise ConfigError("snapshot_every must be >= 1")
        if self.snapshot_interval < 0:
            raise ConfigError("snapshot_interval must be >= 0")
        if self.upwind < 0:
            raise ConfigError("upwind must be >= 0")
        if self.capillarity_form not in CAPILLARITY_FORMS:
            raise ConfigError("capillarity_form must be one of {} (got {!r})"
                              "".format(CAPILLARITY_FORMS, self.capillarity_form))
        if self.helmholtz_backend not in torus.BACKENDS:
            raise ConfigError("helmholtz_backend must be one of {} (got {!r})"
                              "".format(torus.BACKENDS, self.helmholtz_backend))

    @classmethod
    def from_m0(cls, m0, **kwargs):
        """Guard rails [1/(2 M0), 2 M0]."""
        m0 = float(m0)
        if not m0 >= 1:
            raise ConfigError("M0 must be >= 1 (got {})".format(m0))
        return cls(rho_lower=0.5 / m0, rho_upper=2.0 * m0, **kwargs)

    @property
    def bounds(self):
        return self.rho_lower, self.rho_upper

    def replace(self, **kwargs):
        d = self.to_dict()
        d.update(kwargs)
        return SolverConfig(**d)

    def to_dict(self):
        return {
            'dt': self.dt, 'cfl': self.cfl, 't_end': self.t_end,
            'rho_lower': self.rho_lower, 'rho_upper': self.rho_upper,
            'snapshot_every': self.snapshot_every,
            'snapshot_interval': self.snapshot_interval,
            'upwind': self.upwind, 'capillarity_form': self.capillarity_form,
            'helmholtz_backend': self.helmholtz_backend,
            'closure_tol': self.closure_tol,
        }

    def __repr__(self):
        return 'SolverConfig(%s)' % ', '.join(
            '%s=%r' % kv for kv in sorted(self.to_dict().items()))


class FluidState(object):
    """Immutable ``(t, rho, u, c)`` on the periodic grid."""

    def __init__(self, t, rho, u, c):
        rho = check_finite(rho, name='rho')
        u = check_finite(u, name='u')
        c = check_finite(c, name='c')
        if not (len(rho) == len(u) == len(c)):
            raise ConfigError("rho, u and c must have the same length")
        if np.any(rho <= 0):
            raise ConfigError("rho must be strictly positive")
        self.t = float(t)
        self.rho = freeze(rho)
        self.u = freeze(u)
        self.c = freeze(c)

    @classmethod
    def from_density(cls, rho, u, params, t=0.0, backend='spectral'):
        """Build a state, solving for the order parameter."""
        rho = check_finite(rho, name='rho')
        c = torus.helmholtz_solve(rho, params.kappa, params.gamma, backend=backend)
        return cls(t, rho, u, c)

    @property
    def n_points(self):
        return len(self.rho)

    def __repr__(self):
        return 'FluidState(t=%r, n_points=%d)' % (self.t, self.n_points)


class TwoValueProfile(object):
    """One period of the two-value density: ``v_minus`` on a fraction
    ``theta`` of the period, ``v_plus`` on the rest.

    The two jumps, at y = 0 and y = theta, are replaced by quintic
    smoothstep ramps of width ``delta`` (in units of one period), so the
    profile is C^2 and its mean is exactly ``theta v_minus + (1 - theta)
    v_plus``.
    """
    kind = 'two_value'

    def __init__(self, v_minus, v_plus, theta, delta):
        self.v_minus = float(v_minus)
        self.v_plus = float(v_plus)
        self.theta = float(theta)
        self.delta = float(delta)
        if not 0 < self.theta < 1:
            raise ConfigError("theta must lie in (0, 1) (got {})".format(theta))
        if not self.v_minus > 0 or not self.v_plus > 0:
            raise ConfigError("profile values must be > 0")
        if not 0 < self.delta <= min(self.theta, 1 - self.theta):
            raise ConfigError(
                "delta must lie in (0, min(theta, 1 - theta)] so the ramps do "
                "not overlap (got {})".format(delta))

    @staticmethod
    def smoothstep(s):
        s = np.clip(s, 0.0, 1.0)
        return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)

    def weight(self, y):
        """Smoothed indicator of the v_minus plateau."""
        y = np.mod(y, 1.0)
        d, theta, step = self.delta, self.theta, self.smoothstep
        return np.select(
            [y < 0.5 * d, y > 1.0 - 0.5 * d, np.abs(y - theta) < 0.5 * d, y < theta],
            [step(y / d + 0.5), step((y - 1.0) / d + 0.5),
             1.0 - step((y - theta) / d + 0.5), 1.0],
            default=0.0)

    def evaluate(self, y):
        return self.v_plus + (self.v_minus - self.v_plus) * self.weight(y)

    @property
    def values(self):
        return self.v_minus, self.v_plus

    def mean(self):
        return self.theta * self.v_minus + (1.0 - self.theta) * self.v_plus

    def check_resolution(self, n, grid):
        if self.v_minus != self.v_plus and self.delta / n < 4.0 * grid.spacing:
            raise ConfigError(
                "transitions of width delta/n = {:.3g} are unresolved on {}; "
                "need at least 4 h = {:.3g}".format(self.delta / n, grid,
                                                    4.0 * grid.spacing))

    def to_dict(self):
        return {'profile': self.kind, 'v_minus': self.v_minus, 'v_plus': self.v_plus,
                'theta': self.theta, 'delta': self.delta}


class SineProfile(object):
    """``mean + amplitude sin(2 pi mode y)``."""
    kind = 'sine'

    def __init__(self, mean, amplitude, mode=1):
        self.mean_value = float(mean)
        self.amplitude = float(amplitude)
        self.mode = int(mode)
        if self.mode < 1:
            raise ConfigError("mode must be >= 1")
        if not self.mean_value - abs(self.amplitude) > 0:
            raise ConfigError("sine profile must stay positive")

    def evaluate(self, y):
        return self.mean_value + self.amplitude * np.sin(2.0 * np.pi * self.mode * y)

    @property
    def values(self):
        return (self.mean_value - abs(self.amplitude),
                self.mean_value + abs(self.amplitude))

    def mean(self):
        return self.mean_value

    def check_resolution(self, n, grid):
        if 2 * self.mode * n > grid.n_points // 4:
            raise ConfigError("sine profile with {} oscillations is unresolved on {}"
                              "".format(self.mode * n, grid))

    def to_dict(self):
        return {'profile': self.kind, 'rho_mean': self.mean_value,
                'rho_amplitude': self.amplitude, 'rho_mode': self.mode}


class VelocityProfile(object):
    """``mean + amplitude sin(2 pi mode x)``; not compressed with n."""

    def __init__(self, mean=0.0, amplitude=0.0, mode=1):
        self.mean = float(mean)
        self.amplitude = float(amplitude)
        self.mode = int(mode)

    def sample(self, grid):
        return self.mean + self.amplitude * np.sin(2.0 * np.pi * self.mode * grid.nodes)

    def to_dict(self):
        return {'u_mean': self.mean, 'u_amplitude': self.amplitude,
                'u_mode': self.mode}


def make_oscillating_initial(profile, n, grid, bounds=None):
    """Sample ``rho0(n x)`` on the grid.

    Parameters
    ----------
    profile : TwoValueProfile or SineProfile
        One period of the density.
    n : int
        Number of oscillations.
    grid : PeriodicGrid
    bounds : (float, float), optional
        Guard rails the profile values must lie in.

    Returns
    -------
    rho : ndarray
    """
    n = int(n)
    if n < 1:
        raise ConfigError("oscillation count must be >= 1 (got {})".format(n))
    if bounds is not None:
        lo, hi = bounds
        if min(profile.values) < lo or max(profile.values) > hi:
            raise ConfigError("profile values {} leave the guard rails [{}, {}]"
                              "".format(profile.values, lo, hi))
    profile.check_resolution(n, grid)
    return grid.sample(lambda x: profile.evaluate(np.mod(n * x, 1.0)))


class Trajectory(object):
    """Snapshots and per-step diagnostics of one run."""

    def __init__(self, kind, params, config):
        self.kind = kind
        self.params = params
        self.config = config
        self.snapshots = []
        self.records = []
        self.steps = 0

    @property
    def times(self):
        return np.array([s.t for s in self.snapshots])

    @property
    def final(self):
        return self.snapshots[-1]

    def summary(self):
        first, last = self.records[0], self.records[-1]
        return {
            'kind': self.kind,
            'steps': self.steps,
            't_final': last.t,
            'snapshots': len(self.snapshots),
            'mass_drift': abs(last.mass - first.mass),
            'momentum_drift': abs(last.momentum - first.momentum),
            'energy_initial': first.energy,
            'energy_final': last.energy,
            'rho_min': min(r.rho_min for r in self.records),
            'rho_max': max(r.rho_max for r in self.records),
        }

    def __repr__(self):
        return 'Trajectory(kind=%r, steps=%d, snapshots=%d)' % (
            self.kind, self.steps, len(self.snapshots))


def stable_dt(state, params, config, wave_speed=None):
    """``min(dt, cfl h / (max|u| + max sqrt(P~'(rho))))``."""
    h = 1.0 / state.n_points
    if wave_speed is None:
        wave_speed = float(np.max(params.eos.sound_speed(state.rho)))
    speed = float(np.max(np.abs(state.u))) + wave_speed
    if speed <= 0:
        return config.dt
    return min(config.dt, config.cfl * h / speed)


def _face_flux(q, flux, u, upwind):
    # central flux at i+1/2 plus upwind * h * |u_face| diffusion
    face = 0.5 * (flux + np.roll(flux, -1))
    if upwind:
        u_face = 0.5 * (u + np.roll(u, -1))
        face = face - upwind * np.abs(u_face) * (np.roll(q, -1) - q)
    return face


def conservative_update(q, u, dt, upwind):
    """One explicit step of ``q_t + (q u)_x = 0`` in flux form."""
    h = 1.0 / len(q)
    face = _face_flux(q, q * u, u, upwind)
    return q - (dt / h) * (face - np.roll(face, 1))


def momentum_update(rho_old, rho_new, u, force, mu, dt, upwind):
    """Advance the momentum and return the new velocity.

    Convection is explicit, ``force`` (the pressure and capillarity terms,
    already evaluated) is explicit and viscosity is Crank-Nicolson, which
    leaves a cyclic tridiagonal system for ``u``.
    """
    n = len(u)
    h = 1.0 / n
    m = rho_old * u
    face = _face_flux(m, m * u, u, upwind)
    lap_u = (np.roll(u, -1) - 2.0 * u + np.roll(u, 1)) / (h * h)
    rhs = m - (dt / h) * (face - np.roll(face, 1)) + dt * force + 0.5 * dt * mu * lap_u
    off = np.full(n, -0.5 * dt * mu / (h * h))
    diag = rho_new + dt * mu / (h * h)
    return torus.solve_cyclic_tridiagonal(off, diag, off, rhs)


def _capillarity_force(rho, c, params, form):
    eos = params.eos
    if form == 'artificial':
        return (-torus.derivative(eos.artificial_pressure(rho))
                + params.gamma * rho * torus.derivative(c))
    return (-torus.derivative(eos.pressure(rho))
            + params.gamma * rho * torus.derivative(c - rho))


def nsk_step(state, params, config, dt=None):
    """Advance a FluidState by one step.

    Parameters
    ----------
    state : FluidState
    params : PhysicalParams
    config : SolverConfig
    dt : float, optional
        Step to take; defaults to :func:`stable_dt`.

    Returns
    -------
    FluidState
    """
    if dt is None:
        dt = stable_dt(state, params, config)
    rho_new = conservative_update(state.rho, state.u, dt, config.upwind)
    check_finite(rho_new, name='rho')
    check_bounds(rho_new, config.rho_lower, config.rho_upper, name='rho',
                 t=state.t + dt)
    c_new = torus.helmholtz_solve(rho_new, params.kappa, params.gamma,
                                  backend=config.helmholtz_backend)
    force = _capillarity_force(rho_new, c_new, params, config.capillarity_form)
    u_new = momentum_update(state.rho, rho_new, state.u, force, params.mu, dt,
                            config.upwind)
    return FluidState(state.t + dt, rho_new, check_finite(u_new, name='u'), c_new)


def require_admissible(params, config):
    report = check_admissibility(params.eos, config.bounds)
    if not report.admissible:
        raise AdmissibilityError(
            "P~ is not monotone on the guard rails [{}, {}] for {!r}: min P~' = "
            "{:.6g}".format(config.rho_lower, config.rho_upper, params.eos,
                            report.min_artificial_slope), partial=report)
    return report


def integrate(initial, params, config, step, kind, stop_times=()):
    """Generic time loop shared by the NSK and BN drivers.

    `step(state, dt)` advances one step. Diagnostics are recorded after
    every accepted step; snapshots follow the schedule of `config` and are
    also taken at every time in `stop_times` and at ``config.t_end``.
    """
    traj = Trajectory(kind, params, config)
    state = initial
    traj.snapshots.append(state)
    traj.records.append(diagnostics.record(state, params))

    interval = config.snapshot_interval
    marks = set(float(t) for t in stop_times)
    if interval > 0:
        count = int(math.floor(config.t_end / interval + 1e-9))
        marks.update(k * interval for k in range(1, count + 1))
    marks.add(config.t_end)
    marks = sorted(t for t in marks if initial.t < t <= config.t_end + 1e-14)

    logger.info("starting %s run: %r, t_end=%g, N=%d", kind, params,
                config.t_end, initial.n_points)
    try:
        for mark in marks:
            while state.t < mark - 1e-13 * max(1.0, mark):
                dt = min(stable_dt_for(state, params, config), mark - state.t)
                state = step(state, dt)
                traj.steps += 1
                traj.records.append(diagnostics.record(state, params))
                logger.debug("%s step %d: t=%.6g dt=%.3g", kind, traj.steps,
                             state.t, dt)
                if interval <= 0 and traj.steps % config.snapshot_every == 0:
                    traj.snapshots.append(state)
            # every mark is a snapshot time
            if traj.snapshots[-1] is not state:
                traj.snapshots.append(state)
    except PhasekitError as e:
        if traj.snapshots[-1] is not state:
            traj.snapshots.append(state)
        e.partial = traj
        logger.error("%s run aborted at t=%.6g after %d steps: %s", kind,
                     state.t, traj.steps, e)
        raise
    logger.info("finished %s run: %d steps, %d snapshots", kind, traj.steps,
                len(traj.snapshots))
    return traj


def stable_dt_for(state, params, config):
    # BN states carry their own mixture sound speed
    wave_speed = getattr(state, 'wave_speed', None)
    if callable(wave_speed):
        return stable_dt(state, params, config, wave_speed=wave_speed(params))
    return stable_dt(state, params, config)


def nsk_run(initial, params, config, stop_times=()):
    """Integrate the NSK system from `initial` to ``config.t_end``.

    Returns
    -------
    Trajectory
        Snapshots on the configured schedule (initial and final state
        always included) and one DiagnosticsRecord per step.

    Raises
    ------
    AdmissibilityError
        When P~ is not monotone on the guard rails.
    BoundsViolation, NonFiniteFieldError
        With the partial Trajectory on ``.partial``.
    """
    require_admissible(params, config)
    check_bounds(initial.rho, config.rho_lower, config.rho_upper, name='rho',
                 t=initial.t)
    return integrate(initial, params, config,
                     lambda s, dt: nsk_step(s, params, config, dt=dt), 'nsk',
                     stop_times=stop_times)


def linearized_mode_matrix(params, rho_bar, m):
    """2x2 matrix of the NSK system linearized about ``(rho_bar, 0)`` for
    the Fourier mode ``exp(2 pi i m x)``.

    The order parameter is eliminated through ``c_hat = gamma rho_hat /
    (kappa k^2 + gamma)``.
    """
    k = 2.0 * np.pi * m
    slope = float(params.eos.d_artificial_pressure(rho_bar))
    effective = slope - params.gamma ** 2 * rho_bar / (params.kappa * k * k + params.gamma)
    return np.array([
        [0.0, -1j * k * rho_bar],
        [-1j * k * effective / rho_bar, -params.mu * k * k / rho_bar],
    ])


def linearized_rates(params, rho_bar, m):
    """Eigenvalues of :func:`linearized_mode_matrix`, sorted by real part."""
    rates = linalg.eigvals(linearized_mode_matrix(params, rho_bar, m))
    return rates[np.argsort(rates.real)]
