"""Structure functionals evaluated on solver states.

All functions accept either a ``FluidState`` or a ``BNState``; a BN state
is recognized by its volume fractions and evaluated through its mixture
density ``alpha_p rho_p + alpha_m rho_m`` and mixture pressure.
"""
import logging

import numpy as np

from . import torus
from .utils import check_finite, pkg_data

logger = logging.getLogger('phasekit')

CSV_COLUMNS = ('t', 'mass', 'momentum', 'energy', 'dissipation', 'bd_entropy',
               'rho_min', 'rho_max', 'sigma_grad_l2', 'c_h2', 'inv_sqrt_rho_grad')


def is_two_phase(state):
    return hasattr(state, 'alpha_p')


def mixture_density(state):
    if is_two_phase(state):
        return state.alpha_p * state.rho_p + state.alpha_m * state.rho_m
    return np.asarray(state.rho)


def mixture_pressure(state, eos):
    """P~(rho) for one phase, ``alpha_p P~(rho_p) + alpha_m P~(rho_m)`` for two."""
    if is_two_phase(state):
        return (state.alpha_p * eos.artificial_pressure(state.rho_p)
                + state.alpha_m * eos.artificial_pressure(state.rho_m))
    return eos.artificial_pressure(state.rho)


def _potential_density(state, params, backend):
    # W + gamma/2 |rho - c|^2 + kappa/2 |c_x|^2, with the Young-measure
    # average of the first two terms for two-phase states
    eos, gamma = params.eos, params.gamma
    c = state.c
    grad_c = torus.derivative(c, backend=backend)
    if is_two_phase(state):
        rho = mixture_density(state)
        w = (state.alpha_p * eos.pressure_potential(state.rho_p)
             + state.alpha_m * eos.pressure_potential(state.rho_m))
        second = (state.alpha_p * state.rho_p ** 2 + state.alpha_m * state.rho_m ** 2
                  - 2.0 * rho * c + c * c)
    else:
        w = eos.pressure_potential(state.rho)
        second = (state.rho - c) ** 2
    return w + 0.5 * gamma * second + 0.5 * params.kappa * grad_c ** 2


def energy(state, params, backend='central'):
    """Discrete ``h sum(rho u^2 / 2 + W(rho) + gamma/2 |rho - c|^2 +
    kappa/2 |c_x|^2)``.

    Parameters
    ----------
    state : FluidState or BNState
    params : PhysicalParams
    backend : {'central', 'spectral'}
        Derivative backend for ``c_x``. The solvers use central differences,
        so the balance checks do too.

    Returns
    -------
    float
    """
    rho = mixture_density(state)
    dens = 0.5 * rho * state.u ** 2 + _potential_density(state, params, backend)
    return float(np.sum(check_finite(dens, name='energy density')) / len(rho))


def drift_velocity(rho, mu, backend='central'):
    """``phi(rho)_x = mu rho_x / rho^2`` with ``phi(r) = mu (1 - 1/r)``."""
    return mu * torus.derivative(rho, backend=backend) / (rho * rho)


def bd_entropy(state, params, backend='central'):
    """Energy with the drift velocity added inside the kinetic term."""
    rho = mixture_density(state)
    w = state.u + drift_velocity(rho, params.mu, backend=backend)
    dens = 0.5 * rho * w ** 2 + _potential_density(state, params, backend)
    return float(np.sum(check_finite(dens, name='entropy density')) / len(rho))


def drift_identity_residual(rho, mu):
    """Max nodal gap in ``rho |phi(rho)_x|^2 = 4 mu^2 |(1/sqrt(rho))_x|^2``.

    Both sides use the spectral derivative and are computed independently.
    """
    rho = check_finite(rho, name='rho')
    lhs = rho * drift_velocity(rho, mu, backend='spectral') ** 2
    rhs = 4.0 * mu * mu * torus.derivative(1.0 / np.sqrt(rho), backend='spectral') ** 2
    return float(np.max(np.abs(lhs - rhs)))


def effective_viscous_flux(state, params, backend='spectral'):
    """``Sigma = mu u_x - P~(rho)``, with ``P~`` replaced by the mixture
    pressure for two-phase states."""
    return (params.mu * torus.derivative(state.u, backend=backend)
            - mixture_pressure(state, params.eos))


class DiagnosticsRecord(object):
    """Functionals of one state; ``CSV_COLUMNS`` in order, plus extras."""

    __slots__ = CSV_COLUMNS + ('c_grad_sup', 'closure_drift')

    def __init__(self, **kwargs):
        kwargs.setdefault('closure_drift', 0.0)
        for key in self.__slots__:
            setattr(self, key, float(kwargs.pop(key)))
        if kwargs:
            raise TypeError("unexpected fields {}".format(sorted(kwargs)))

    def as_row(self):
        return [getattr(self, key) for key in CSV_COLUMNS]

    def to_dict(self):
        return {key: getattr(self, key) for key in self.__slots__}

    def __repr__(self):
        return 'DiagnosticsRecord(t=%r, mass=%r, energy=%r)' % (
            self.t, self.mass, self.energy)


def record(state, params):
    """All functionals of `state`."""
    rho = mixture_density(state)
    h = 1.0 / len(rho)
    grad_u = torus.derivative(state.u)
    sigma = effective_viscous_flux(state, params)
    if is_two_phase(state):
        rho_min = min(np.min(state.rho_p), np.min(state.rho_m))
        rho_max = max(np.max(state.rho_p), np.max(state.rho_m))
    else:
        rho_min, rho_max = np.min(rho), np.max(rho)
    e = energy(state, params)
    if logger.isEnabledFor(logging.DEBUG):
        logger.debug("t=%.6g energy central=%.12g spectral=%.12g", state.t, e,
                     energy(state, params, backend='spectral'))
    return DiagnosticsRecord(
        t=state.t,
        mass=np.sum(rho) * h,
        momentum=np.sum(rho * state.u) * h,
        energy=e,
        dissipation=h * np.sum(params.mu * grad_u ** 2),
        bd_entropy=bd_entropy(state, params),
        rho_min=rho_min,
        rho_max=rho_max,
        sigma_grad_l2=torus.l2_norm(torus.derivative(sigma, backend='spectral')),
        c_h2=torus.sobolev_norm(state.c, 2),
        inv_sqrt_rho_grad=torus.l2_norm(
            torus.derivative(1.0 / np.sqrt(rho), backend='spectral')),
        c_grad_sup=np.max(np.abs(torus.derivative(state.c, backend='spectral'))),
        closure_drift=getattr(state, 'closure_drift', 0.0),
    )


class BalanceTolerances(object):
    """Pass/fail thresholds of :func:`balance_check`."""

    def __init__(self, mass=None, momentum=None, energy_rel=None, closure=None):
        defaults = pkg_data['diagnostics']
        self.mass = float(defaults['mass_tol'] if mass is None else mass)
        self.momentum = float(defaults['momentum_tol'] if momentum is None else momentum)
        self.energy_rel = float(
            defaults['energy_rel_tol'] if energy_rel is None else energy_rel)
        self.closure = float(defaults['closure_tol'] if closure is None else closure)

    def to_dict(self):
        return {'mass': self.mass, 'momentum': self.momentum,
                'energy_rel': self.energy_rel, 'closure': self.closure}


def cumulative_dissipation(records):
    """Trapezoid integral of the dissipation rate at every record time."""
    t = np.array([r.t for r in records])
    d = np.array([r.dissipation for r in records])
    out = np.zeros(len(records))
    out[1:] = np.cumsum(0.5 * np.diff(t) * (d[1:] + d[:-1]))
    return out


def entropy_envelope(records, gamma):
    """``(eta(0) + M/2) exp(4 gamma sup|c_x| t)`` at every record time."""
    t = np.array([r.t for r in records])
    rate = 4.0 * gamma * max(r.c_grad_sup for r in records)
    start = records[0].bd_entropy + 0.5 * records[0].mass
    return start * np.exp(rate * (t - t[0])), rate


def balance_check(records, tolerances=None, gamma=None):
    """Conservation and dissipation report of a record series.

    Parameters
    ----------
    records : list of DiagnosticsRecord
        At least two, in time order.
    tolerances : BalanceTolerances, optional
    gamma : float, optional
        Coupling coefficient; when given the BD-entropy series is compared
        with its run-measured Gronwall envelope.

    Returns
    -------
    dict
    """
    if len(records) < 2:
        raise ValueError("balance_check needs at least two records")
    tol = tolerances or BalanceTolerances()
    first = records[0]
    mass = np.array([r.mass for r in records])
    momentum = np.array([r.momentum for r in records])
    e = np.array([r.energy for r in records])
    eta = np.array([r.bd_entropy for r in records])
    t = np.array([r.t for r in records])

    balance = np.abs(e - e[0] + cumulative_dissipation(records))
    scale = max(abs(first.energy), np.finfo(float).tiny)
    sigma_sq = np.array([r.sigma_grad_l2 ** 2 for r in records])
    report = {
        'mass_drift': float(np.max(np.abs(mass - mass[0]))),
        'momentum_drift': float(np.max(np.abs(momentum - momentum[0]))),
        'energy_residual': float(np.max(balance)),
        'energy_residual_rel': float(np.max(balance)) / scale,
        'energy_increase': float(e[-1] - e[0]),
        'max_bd_entropy': float(np.max(eta)),
        'sigma_grad_l2l2': float(np.sum(0.5 * np.diff(t) * (sigma_sq[1:] + sigma_sq[:-1]))),
        'max_closure_drift': max(r.closure_drift for r in records),
        'tolerances': tol.to_dict(),
    }
    passed = (report['mass_drift'] <= tol.mass
              and report['momentum_drift'] <= tol.momentum
              and report['energy_residual'] <= tol.energy_rel * scale + 1e-12
              and report['max_closure_drift'] <= tol.closure)
    if gamma is not None:
        envelope, rate = entropy_envelope(records, gamma)
        report['envelope_rate'] = rate
        report['envelope_ok'] = bool(np.all(eta <= envelope * (1 + 1e-12)))
        passed = passed and report['envelope_ok']
    report['passed'] = bool(passed)
    return report


def observed_order(errors):
    """``log2`` of successive error ratios of a refinement study that
    halves the step each time."""
    errors = np.asarray(errors, dtype=float)
    with np.errstate(divide='ignore', invalid='ignore'):
        return np.log2(errors[:-1] / errors[1:])


def refinement_ratio(errors):
    """Successive ratios ``e_k / e_{k+1}``."""
    errors = np.asarray(errors, dtype=float)
    return errors[:-1] / errors[1:]
