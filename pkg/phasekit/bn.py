"""The one-velocity Baer-Nunziato relaxation system.

Two phases share the velocity ``u``; each carries a volume fraction and a
density. Pressures relax toward each other at rate ``1/mu``::

    alpha+_t + u alpha+_x = alpha+ alpha- (P~(rho+) - P~(rho-)) / mu
    rho+_t + (rho+ u)_x  = rho+ alpha- (P~(rho-) - P~(rho+)) / mu

(and symmetrically for the minus phase), while the mixture momentum is
driven by ``-P_bar_x + gamma rho c_x`` with the mixture pressure
``P_bar = alpha+ P~(rho+) + alpha- P~(rho-)``.

Two integrators are available: operator splitting (``'splitting'``,
semi-Lagrangian volume fractions, flux-form phase masses and a pointwise
relaxation substep) and the fixed-point construction (``'picard'``) that
iterates transport with frozen sources to a fixed point.
"""
import logging

import numpy as np

from . import torus
from .nsk import (conservative_update, integrate, momentum_update,
                  require_admissible, stable_dt)
from .utils import (BoundsViolation, ConfigError, FixedPointError, check_bounds,
                    check_finite, freeze)

logger = logging.getLogger('phasekit')

INTEGRATORS = ('splitting', 'picard')

# below this a phase is absent and does not relax
ALPHA_FLOOR = 1e-12
# tolerated undershoot of a volume fraction before it is an error
ALPHA_CLIP_TOL = 1e-12


class BNState(object):
    """Immutable ``(t, alpha_p, alpha_m, rho_p, rho_m, u, c)``.

    ``closure_drift`` is ``max|alpha_p + alpha_m - 1|`` measured before the
    last renormalization, ``alpha_clip`` the largest negative volume
    fraction clipped to zero in the last step.
    """

    def __init__(self, t, alpha_p, alpha_m, rho_p, rho_m, u, c,
                 closure_drift=0.0, alpha_clip=0.0):
        fields = [check_finite(v, name=k) for k, v in (
            ('alpha_p', alpha_p), ('alpha_m', alpha_m), ('rho_p', rho_p),
            ('rho_m', rho_m), ('u', u), ('c', c))]
        if len(set(len(f) for f in fields)) != 1:
            raise ConfigError("BN fields must have the same length")
        alpha_p, alpha_m, rho_p, rho_m, u, c = fields
        if min(alpha_p.min(), alpha_m.min()) < -ALPHA_CLIP_TOL:
            raise BoundsViolation("negative volume fraction {:.3e}".format(
                min(alpha_p.min(), alpha_m.min())))
        if np.max(np.abs(alpha_p + alpha_m - 1.0)) > 1e-10:
            raise ConfigError("volume fractions must add up to 1")
        if np.any(rho_p <= 0) or np.any(rho_m <= 0):
            raise ConfigError("phase densities must be strictly positive")
        self.t = float(t)
        self.alpha_p = freeze(alpha_p)
        self.alpha_m = freeze(alpha_m)
        self.rho_p = freeze(rho_p)
        self.rho_m = freeze(rho_m)
        self.u = freeze(u)
        self.c = freeze(c)
        self.closure_drift = float(closure_drift)
        self.alpha_clip = float(alpha_clip)

    @classmethod
    def from_fields(cls, alpha_p, rho_p, rho_m, u, params, grid, t=0.0,
                    backend='spectral'):
        """Build a state from scalars or fields; ``alpha_m = 1 - alpha_p``
        and ``c`` solves the Helmholtz problem for the mixture density."""
        n = grid.n_points
        alpha_p, rho_p, rho_m, u = (np.broadcast_to(np.asarray(v, dtype=float), (n,))
                                    for v in (alpha_p, rho_p, rho_m, u))
        rho = alpha_p * rho_p + (1.0 - alpha_p) * rho_m
        c = torus.helmholtz_solve(rho, params.kappa, params.gamma, backend=backend)
        return cls(t, alpha_p, 1.0 - alpha_p, rho_p, rho_m, u, c)

    @property
    def n_points(self):
        return len(self.u)

    def wave_speed(self, params):
        """Largest mixture sound speed, the root of
        ``(alpha+ rho+ P~'(rho+) + alpha- rho- P~'(rho-)) / rho``."""
        eos = params.eos
        rho = self.alpha_p * self.rho_p + self.alpha_m * self.rho_m
        stiff = (self.alpha_p * self.rho_p * eos.d_artificial_pressure(self.rho_p)
                 + self.alpha_m * self.rho_m * eos.d_artificial_pressure(self.rho_m))
        return float(np.sqrt(max(np.max(stiff / rho), 0.0)))

    def __repr__(self):
        return 'BNState(t=%r, n_points=%d)' % (self.t, self.n_points)


def mixture_fields(state, eos):
    """Mixture density and pressure of a BN state.

    Returns
    -------
    rho, p_bar : ndarray
        ``alpha+ rho+ + alpha- rho-`` and ``alpha+ P~(rho+) + alpha- P~(rho-)``.
    """
    rho = state.alpha_p * state.rho_p + state.alpha_m * state.rho_m
    p_bar = (state.alpha_p * eos.artificial_pressure(state.rho_p)
             + state.alpha_m * eos.artificial_pressure(state.rho_m))
    return rho, p_bar


def relaxation_rhs(state, params):
    """Pointwise sources of ``(alpha_p, alpha_m, rho_p, rho_m)`` written with
    the pressure difference ``P~(rho+) - P~(rho-)``."""
    eos, mu = params.eos, params.mu
    jump = eos.artificial_pressure(state.rho_p) - eos.artificial_pressure(state.rho_m)
    src_alpha = state.alpha_p * state.alpha_m * jump / mu
    return (src_alpha, -src_alpha,
            -state.rho_p * state.alpha_m * jump / mu,
            state.rho_m * state.alpha_p * jump / mu)


def relaxation_rhs_mixture(state, params):
    """Same sources written against the mixture pressure ``P_bar``."""
    eos, mu = params.eos, params.mu
    _, p_bar = mixture_fields(state, eos)
    p_plus = eos.artificial_pressure(state.rho_p)
    p_minus = eos.artificial_pressure(state.rho_m)
    return (state.alpha_p * (p_plus - p_bar) / mu,
            state.alpha_m * (p_minus - p_bar) / mu,
            state.rho_p * (p_bar - p_plus) / mu,
            state.rho_m * (p_bar - p_minus) / mu)


def _logistic(alpha, exponent):
    # exact solution of a' = a (1 - a) g over a step with g dt = exponent
    grow = alpha * np.exp(exponent)
    return grow / (grow + 1.0 - alpha)


def relax(alpha_p, rho_p, rho_m, params, dt):
    """One Heun substep of the pressure relaxation at fixed phase masses.

    The phase masses ``alpha+- rho+-`` are invariants of the relaxation, so
    only ``alpha+`` is integrated; the densities follow as mass over volume.
    Nodes where a phase is absent are left untouched.
    """
    eos, mu = params.eos, params.mu
    alpha_m = 1.0 - alpha_p
    mask = (alpha_p > ALPHA_FLOOR) & (alpha_m > ALPHA_FLOOR)
    if not np.any(mask):
        return alpha_p, rho_p, rho_m
    a = alpha_p[mask]
    m_plus = a * rho_p[mask]
    m_minus = (1.0 - a) * rho_m[mask]

    def rate(a):
        return (eos.artificial_pressure(m_plus / a)
                - eos.artificial_pressure(m_minus / (1.0 - a))) / mu

    g0 = rate(a)
    predicted = _logistic(a, dt * g0)
    a_new = _logistic(a, 0.5 * dt * (g0 + rate(predicted)))

    alpha_p, rho_p, rho_m = alpha_p.copy(), rho_p.copy(), rho_m.copy()
    alpha_p[mask] = a_new
    rho_p[mask] = m_plus / a_new
    rho_m[mask] = m_minus / (1.0 - a_new)
    return alpha_p, rho_p, rho_m


def departure_points(nodes, u_old, u_new, dt):
    """Feet of the backward characteristics through the nodes (midpoint
    rule on ``dX/ds = u`` with u averaged over the step), wrapped to [0, 1)."""
    u_mid = 0.5 * (np.asarray(u_old) + np.asarray(u_new))
    if not np.any(u_mid):
        return nodes.copy()
    half = nodes - 0.5 * dt * u_mid
    foot = nodes - dt * torus.periodic_interpolate(u_mid, half)
    return np.mod(foot, 1.0)


def advect(a, foot):
    """Semi-Lagrangian value of `a` at the departure points."""
    if np.ptp(a) == 0:
        return np.array(a, dtype=float)
    return torus.periodic_interpolate(a, foot)


def _clip_fractions(alpha_p, alpha_m, t):
    low = min(alpha_p.min(), alpha_m.min())
    if low < -ALPHA_CLIP_TOL:
        raise BoundsViolation("volume fraction {:.3e} below zero at t={:.6g}"
                              "".format(low, t))
    clip = 0.0
    if low < 0:
        clip = -low
        logger.warning("clipped volume fractions by %.3e at t=%.6g", clip, t)
    return np.maximum(alpha_p, 0.0), np.maximum(alpha_m, 0.0), clip


def _transport_densities(state, alpha_p, alpha_m, dt, upwind):
    """Phase densities after transport, given the advected fractions.

    The phase masses ``m = alpha rho`` move in flux form. Each is split as
    ``alpha (rho - R) + alpha R`` with the mixture density ``R``: the first
    part is updated with the numerical flux, the second is the advected
    fraction times the flux-form update of ``R``. The two parts of the
    minus phase cancel those of the plus phase, so ``m_p + m_m`` is the
    flux-form update of ``R`` and the mixture mass is conserved. Equal
    densities make the first part vanish and stay equal.
    """
    mixture = state.alpha_p * state.rho_p + state.alpha_m * state.rho_m
    moved = conservative_update(mixture, state.u, dt, upwind)
    rho = []
    for alpha_old, rho_old, alpha_new in ((state.alpha_p, state.rho_p, alpha_p),
                                          (state.alpha_m, state.rho_m, alpha_m)):
        mass = (conservative_update(alpha_old * (rho_old - mixture), state.u,
                                    dt, upwind)
                + alpha_new * moved)
        present = alpha_new > ALPHA_FLOOR
        fallback = conservative_update(rho_old, state.u, dt, upwind)
        rho.append(np.where(present, mass / np.where(present, alpha_new, 1.0),
                            fallback))
    return rho[0], rho[1]


def _finish_step(state, alpha_p, alpha_m, rho_p, rho_m, params, config, dt,
                 closure_tol):
    """Shared tail of both integrators: momentum, order parameter, closure."""
    t = state.t + dt
    for name, rho in (('rho_p', rho_p), ('rho_m', rho_m)):
        check_finite(rho, name=name)
        check_bounds(rho, config.rho_lower, config.rho_upper, name=name, t=t)
    alpha_p, alpha_m, clip = _clip_fractions(alpha_p, alpha_m, t)
    drift = float(np.max(np.abs(alpha_p + alpha_m - 1.0)))
    if drift > closure_tol:
        raise BoundsViolation("volume fractions drifted from the closure by "
                              "{:.3e} at t={:.6g}".format(drift, t))
    alpha_m = 1.0 - alpha_p

    eos = params.eos
    rho_old = state.alpha_p * state.rho_p + state.alpha_m * state.rho_m
    rho_new = alpha_p * rho_p + alpha_m * rho_m
    c_new = torus.helmholtz_solve(rho_new, params.kappa, params.gamma,
                                  backend=config.helmholtz_backend)
    p_bar = (alpha_p * eos.artificial_pressure(rho_p)
             + alpha_m * eos.artificial_pressure(rho_m))
    force = -torus.derivative(p_bar) + params.gamma * rho_new * torus.derivative(c_new)
    u_new = momentum_update(rho_old, rho_new, state.u, force, params.mu, dt,
                            config.upwind)
    return BNState(t, alpha_p, alpha_m, rho_p, rho_m, check_finite(u_new, name='u'),
                   c_new, closure_drift=drift, alpha_clip=clip)


def bn_step(state, params, config, dt=None, integrator='splitting',
            picard_tol=1e-10, picard_max_iter=50):
    """Advance a BNState by one step.

    Parameters
    ----------
    state : BNState
    params : PhysicalParams
    config : SolverConfig
    dt : float, optional
        Defaults to the CFL-limited step of the mixture.
    integrator : {'splitting', 'picard'}
    picard_tol, picard_max_iter : optional
        Passed to :func:`picard_pair` by the fixed-point integrator.

    Returns
    -------
    BNState
    """
    if integrator not in INTEGRATORS:
        raise ConfigError("integrator must be one of {} (got {!r})"
                          "".format(INTEGRATORS, integrator))
    if dt is None:
        dt = stable_dt(state, params, config, wave_speed=state.wave_speed(params))
    if integrator == 'picard':
        alpha_p, alpha_m, rho_p, rho_m = picard_pair(
            state, params, dt, tol=picard_tol, max_iter=picard_max_iter)
        # the fixed point holds the closure only to its tolerance; the drift
        # is recorded, not enforced
        return _finish_step(state, alpha_p, alpha_m, rho_p, rho_m, params,
                            config, dt, np.inf)

    nodes = np.arange(state.n_points) / float(state.n_points)
    foot = departure_points(nodes, state.u, state.u, dt)
    alpha_p = advect(state.alpha_p, foot)
    alpha_m = advect(state.alpha_m, foot)
    rho_p, rho_m = _transport_densities(state, alpha_p, alpha_m, dt, config.upwind)
    closure = alpha_p + alpha_m
    relaxed, rho_p, rho_m = relax(alpha_p / closure, rho_p, rho_m, params, dt)
    # relaxation conserves the closure, so the transport drift carries over
    return _finish_step(state, relaxed * closure, (1.0 - relaxed) * closure,
                        rho_p, rho_m, params, config, dt, config.closure_tol)


def bn_run(initial, params, config, integrator='splitting', stop_times=(),
           **picard_options):
    """Integrate the BN system from `initial` to ``config.t_end``.

    Returns a Trajectory of BNState snapshots; failures raise with the
    partial Trajectory on ``.partial``, as in :func:`phasekit.nsk.nsk_run`.
    """
    require_admissible(params, config)
    for name in ('rho_p', 'rho_m'):
        check_bounds(getattr(initial, name), config.rho_lower, config.rho_upper,
                     name=name, t=initial.t)
    return integrate(
        initial, params, config,
        lambda s, dt: bn_step(s, params, config, dt=dt, integrator=integrator,
                              **picard_options),
        'bn', stop_times=stop_times)


class FlowMap(object):
    """Departure points of the discrete characteristics, one array per step.

    ``departures[k][i]`` is the foot at ``times[k]`` of the characteristic
    that reaches node ``i`` at ``times[k + 1]``.
    """

    def __init__(self, times, departures):
        self.times = np.asarray(times, dtype=float)
        self.departures = [freeze(d) for d in departures]

    def __len__(self):
        return len(self.departures)

    def __repr__(self):
        return 'FlowMap(steps=%d)' % len(self)


class TransportResult(object):
    def __init__(self, times, values, flow_map):
        self.times = np.asarray(times, dtype=float)
        self.values = values
        self.flow_map = flow_map

    @property
    def final(self):
        return self.values[-1]


def _check_series(times, series, n, name):
    if len(series) != len(times):
        raise ConfigError("{} has {} entries for {} times".format(
            name, len(series), len(times)))
    out = [check_finite(v, name=name) for v in series]
    if any(len(v) != n for v in out):
        raise ConfigError("{} fields must match the grid".format(name))
    return out


def transport_with_source(a0, times, u_series, f_series, conservative=False):
    """Solve ``a_t + u a_x = a f`` (or ``a_t + (a u)_x = a f`` when
    `conservative`) along discrete characteristics.

    Each step traces the characteristic of every node back to the previous
    time, interpolates ``a`` there with a periodic cubic spline and
    multiplies by the exponential of the trapezoid integral of the source
    along the segment. The conservative form folds ``-u_x`` into the source.

    Parameters
    ----------
    a0 : ndarray
    times : sequence of float
        Increasing time grid, first entry the initial time.
    u_series, f_series : sequence of ndarray
        Velocity and source sampled at every time of `times`.
    conservative : bool, optional

    Returns
    -------
    TransportResult
    """
    a = check_finite(a0, name='a0')
    n = len(a)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) < 1 or np.any(np.diff(times) <= 0):
        raise ConfigError("times must be an increasing sequence")
    u_series = _check_series(times, u_series, n, 'u_series')
    f_series = _check_series(times, f_series, n, 'f_series')
    if conservative:
        f_series = [f - torus.derivative(u, backend='spectral')
                    for f, u in zip(f_series, u_series)]

    nodes = np.arange(n) / float(n)
    values = [freeze(a)]
    departures = []
    for k in range(len(times) - 1):
        dt = times[k + 1] - times[k]
        foot = departure_points(nodes, u_series[k], u_series[k + 1], dt)
        source_foot = (f_series[k] if np.array_equal(foot, nodes)
                       else torus.periodic_interpolate(f_series[k], foot))
        a = advect(a, foot) * np.exp(0.5 * dt * (source_foot + f_series[k + 1]))
        values.append(freeze(a))
        departures.append(foot)
    return TransportResult(times, values, FlowMap(times, departures))


def _sup_l1(first, second):
    # sup over time of the discrete L1 distance
    return max(float(np.sum(np.abs(x - y))) / len(x) for x, y in zip(first, second))


class PicardResult(object):
    """Output of :func:`picard_bn`.

    ``ratios`` holds the largest measured contraction ratio of every
    accepted slab, ``slabs`` the (start, end) times of those slabs.
    """

    def __init__(self, times, alpha, rho, iterations, ratios, slabs):
        self.times = np.asarray(times, dtype=float)
        self.alpha = alpha
        self.rho = rho
        self.iterations = iterations
        self.ratios = ratios
        self.slabs = slabs

    def to_dict(self):
        return {'iterations': self.iterations, 'ratios': list(self.ratios),
                'slabs': [list(s) for s in self.slabs]}


def _picard_slab(alpha0, rho0, times, u_series, pi_series, eos, mu, tol,
                 max_iter):
    # returns (alpha, rho, iterations, max_ratio) or None when not contracting
    alpha = [alpha0] * len(times)
    rho = [rho0] * len(times)
    previous = None
    max_ratio = 0.0
    for it in range(1, max_iter + 1):
        f = [(eos.artificial_pressure(r) - pi) / mu for r, pi in zip(rho, pi_series)]
        g = [-v for v in f]
        alpha_new = transport_with_source(alpha0, times, u_series, f).values
        rho_new = transport_with_source(rho0, times, u_series, g,
                                        conservative=True).values
        diff = _sup_l1(alpha_new, alpha) + _sup_l1(rho_new, rho)
        alpha, rho = alpha_new, rho_new
        if previous is not None and previous > 0:
            ratio = diff / previous
            logger.debug("picard iteration %d on [%.6g, %.6g]: diff=%.3e ratio=%.3f",
                         it, times[0], times[-1], diff, ratio)
            if ratio >= 1.0 and diff >= tol:
                return None
            max_ratio = max(max_ratio, ratio)
        if diff < tol:
            return alpha, rho, it, max_ratio
        previous = diff
    return None


def picard_bn(alpha0, rho0, times, u_series, pi_series, eos, mu=1.0, tol=1e-10,
              max_iter=50, bounds=None):
    """Fixed-point solve of one phase against an external pressure field.

    Iterates ``f = (P~(rho) - pi) / mu``, ``g = -f`` followed by
    ``alpha = L(f)``, ``rho = L(g)`` (see :func:`transport_with_source`)
    until the sup-in-time L1 change drops below `tol`. A slab on which
    the iteration does not contract is halved and solved piecewise.

    Parameters
    ----------
    alpha0, rho0 : ndarray
    times : sequence of float
    u_series, pi_series : sequence of ndarray
        Velocity and external pressure at every time.
    eos : EquationOfState
    mu : float, optional
    tol : float, optional
    max_iter : int, optional
    bounds : (float, float), optional
        Guard rails certified on the output densities.

    Returns
    -------
    PicardResult

    Raises
    ------
    FixedPointError
        When a single time step does not contract.
    """
    alpha0 = check_finite(alpha0, name='alpha0')
    rho0 = check_finite(rho0, name='rho0')
    if np.any(alpha0 < 0):
        raise ConfigError("alpha0 must be nonnegative")
    if bounds is not None:
        check_bounds(rho0, bounds[0], bounds[1], name='rho0')
    times = np.asarray(times, dtype=float)
    u_series = list(u_series)
    pi_series = list(pi_series)

    out_alpha, out_rho = [freeze(alpha0)], [freeze(rho0)]
    ratios, slabs = [], []
    total = 0
    stack = [(0, len(times) - 1)]
    a_start, r_start = alpha0, rho0
    while stack:
        i, j = stack.pop()
        solved = _picard_slab(a_start, r_start, times[i:j + 1], u_series[i:j + 1],
                              pi_series[i:j + 1], eos, mu, tol, max_iter)
        if solved is None:
            if j - i <= 1:
                raise FixedPointError(
                    "no contraction on a single step [{:.6g}, {:.6g}]"
                    "".format(times[i], times[j]),
                    partial=PicardResult(times[:i + 1], out_alpha, out_rho,
                                         total, ratios, slabs))
            mid = (i + j) // 2
            logger.warning("picard iteration does not contract on [%.6g, %.6g], "
                           "halving the slab", times[i], times[j])
            stack.extend([(mid, j), (i, mid)])
            continue
        alpha, rho, iterations, ratio = solved
        total += iterations
        ratios.append(ratio)
        slabs.append((float(times[i]), float(times[j])))
        logger.info("picard slab [%.6g, %.6g] accepted after %d iterations, "
                    "contraction ratio %.3f", times[i], times[j], iterations, ratio)
        out_alpha.extend(alpha[1:])
        out_rho.extend(rho[1:])
        a_start, r_start = alpha[-1], rho[-1]

    if np.any(np.concatenate(out_alpha) < 0):
        raise BoundsViolation("negative volume fraction in the fixed point")
    if bounds is not None:
        for k, r in enumerate(out_rho):
            check_bounds(r, bounds[0], bounds[1], name='rho', t=times[k])
    return PicardResult(times, out_alpha, out_rho, total, ratios, slabs)


def picard_pair(state, params, dt, tol=1e-10, max_iter=50, max_passes=20):
    """One step of the full BN transport and relaxation by fixed point.

    Both phases are solved with :func:`picard_bn` against ``pi = P_bar``;
    the end-of-step mixture pressure is recomputed after every pass until it
    stops changing. The velocity is frozen over the step.

    Returns
    -------
    alpha_p, alpha_m, rho_p, rho_m : ndarray
    """
    eos, mu = params.eos, params.mu
    times = [state.t, state.t + dt]
    u_series = [state.u, state.u]
    _, p_start = mixture_fields(state, eos)
    p_end = p_start
    for _ in range(max_passes):
        pi_series = [p_start, p_end]
        plus = picard_bn(state.alpha_p, state.rho_p, times, u_series, pi_series,
                         eos, mu=mu, tol=tol, max_iter=max_iter)
        minus = picard_bn(state.alpha_m, state.rho_m, times, u_series, pi_series,
                          eos, mu=mu, tol=tol, max_iter=max_iter)
        a_p, r_p = plus.alpha[-1], plus.rho[-1]
        a_m, r_m = minus.alpha[-1], minus.rho[-1]
        p_new = a_p * eos.artificial_pressure(r_p) + a_m * eos.artificial_pressure(r_m)
        change = float(np.max(np.abs(p_new - p_end)))
        p_end = p_new
        if change < tol:
            break
    else:
        logger.warning("mixture pressure still changing by %.3e after %d passes",
                       change, max_passes)
    return a_p, a_m, r_p, r_m
