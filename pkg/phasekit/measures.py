"""Parametrized (Young) measures on the torus times the density axis.

A measure is stored atom-wise: at node ``x_i`` it puts weight
``weights[i, j]`` on the density ``atoms[i, j]``. The empirical measure of
a density field has one atom per node with weight ``h``; the measure of a
BN state has two, ``rho+`` and ``rho-``, weighted by ``h alpha+-``.
"""
import logging

import numpy as np
from scipy import stats

from . import diagnostics
from .utils import ConfigError, check_bounds, check_finite

logger = logging.getLogger('phasekit')

KINDS = ('empirical', 'two_dirac')


class ParamMeasure(object):
    """Atoms and weights of a parametrized measure.

    Parameters
    ----------
    kind : {'empirical', 'two_dirac'}
    atoms, weights : ndarray, shape (N, K)
    support_box : (float, float)
        Interval of the density axis that contains every weighted atom.
    """

    def __init__(self, kind, atoms, weights, support_box):
        if kind not in KINDS:
            raise ConfigError("kind must be one of {} (got {!r})".format(KINDS, kind))
        atoms = np.atleast_2d(check_finite(atoms, name='atoms'))
        weights = np.atleast_2d(check_finite(weights, name='weights'))
        if atoms.shape != weights.shape:
            raise ConfigError("atoms and weights must have the same shape")
        lo, hi = float(support_box[0]), float(support_box[1])
        if not lo < hi:
            raise ConfigError("support box must be a nonempty interval")
        total = float(np.sum(weights))
        if abs(total - 1.0) > 1e-12:
            raise ConfigError("measure has total mass {!r}, not 1".format(total))
        charged = atoms[weights > 0]
        if charged.size and (charged.min() < lo or charged.max() > hi):
            raise ConfigError("atoms [{:.6g}, {:.6g}] leave the support box "
                              "[{:.6g}, {:.6g}]".format(charged.min(), charged.max(),
                                                        lo, hi))
        self.kind = kind
        self.atoms = atoms
        self.weights = weights
        self.support_box = (lo, hi)
        self.nodes = np.arange(atoms.shape[0]) / float(atoms.shape[0])

    @property
    def n_points(self):
        return self.atoms.shape[0]

    def __repr__(self):
        return 'ParamMeasure(kind=%r, n_points=%d, support_box=%r)' % (
            self.kind, self.n_points, self.support_box)


def _box(values, support_box, bounds):
    if support_box is not None:
        return support_box
    if bounds is not None:
        return bounds
    return float(np.min(values)), float(np.max(values)) + 1e-12


def empirical_from_state(rho, support_box=None, bounds=None):
    """The measure ``b -> h sum b(x_i, rho_i)`` of a density field.

    Parameters
    ----------
    rho : ndarray
    support_box : (float, float), optional
        Defaults to `bounds`, then to the range of `rho`.
    bounds : (float, float), optional
        Guard rails `rho` must lie in.
    """
    rho = check_finite(rho, name='rho')
    if bounds is not None:
        check_bounds(rho, bounds[0], bounds[1], name='rho')
    n = len(rho)
    return ParamMeasure('empirical', rho[:, None], np.full((n, 1), 1.0 / n),
                        _box(rho, support_box, bounds))


def two_dirac_from_bn(state, support_box=None, bounds=None):
    """The measure ``b -> h sum alpha+ b(x_i, rho+_i) + alpha- b(x_i, rho-_i)``."""
    if bounds is not None:
        check_bounds(state.rho_p, bounds[0], bounds[1], name='rho_p')
        check_bounds(state.rho_m, bounds[0], bounds[1], name='rho_m')
    n = state.n_points
    atoms = np.column_stack([state.rho_p, state.rho_m])
    weights = np.column_stack([state.alpha_p, state.alpha_m]) / n
    return ParamMeasure('two_dirac', atoms, weights,
                        _box(atoms, support_box, bounds))


def pair(measure, b):
    """``<measure, b>`` for a test function ``b(x, xi)`` that broadcasts."""
    x = measure.nodes[:, None]
    values = np.asarray(b(x, measure.atoms), dtype=float)
    values = np.broadcast_to(values, measure.atoms.shape)
    return float(np.sum(measure.weights * values))


class TestFunction(object):
    """``X(x) xi^k / norm`` with ``X`` one of 1, cos(2 pi m x), sin(2 pi m x)."""
    __test__ = False

    def __init__(self, shape, mode, degree, norm=1.0):
        if shape not in ('one', 'cos', 'sin'):
            raise ConfigError("shape must be one, cos or sin (got {!r})".format(shape))
        self.shape = shape
        self.mode = int(mode)
        self.degree = int(degree)
        self.norm = float(norm)

    @property
    def label(self):
        x = 'one' if self.shape == 'one' else '%s%d' % (self.shape, self.mode)
        return '%s*xi^%d' % (x, self.degree)

    def x_factor(self, x):
        if self.shape == 'one':
            return np.ones_like(x)
        arg = 2.0 * np.pi * self.mode * x
        return np.cos(arg) if self.shape == 'cos' else np.sin(arg)

    def dx_factor(self, x):
        k = 2.0 * np.pi * self.mode
        if self.shape == 'one':
            return np.zeros_like(x)
        if self.shape == 'cos':
            return -k * np.sin(k * x)
        return k * np.cos(k * x)

    def __call__(self, x, xi):
        return self.x_factor(x) * xi ** self.degree / self.norm

    def __repr__(self):
        return 'TestFunction(%s)' % self.label


class TestDictionary(object):
    """Products of x-modes up to `modes` and monomials up to `degree`,
    normalized to sup-norm 1 on the torus times `support_box`.

    The ordering is fixed: x-factor major (1, cos1, sin1, cos2, ...),
    degree minor.
    """
    __test__ = False

    def __init__(self, support_box, modes=4, degree=4):
        lo, hi = float(support_box[0]), float(support_box[1])
        self.support_box = (lo, hi)
        self.modes = int(modes)
        self.degree = int(degree)
        shapes = [('one', 0)]
        for m in range(1, self.modes + 1):
            shapes.extend([('cos', m), ('sin', m)])
        self.tests = []
        for shape, m in shapes:
            for k in range(self.degree + 1):
                norm = max(abs(lo) ** k, abs(hi) ** k)
                self.tests.append(TestFunction(shape, m, k, norm=norm))

    @property
    def labels(self):
        return [t.label for t in self.tests]

    def __len__(self):
        return len(self.tests)

    def __iter__(self):
        return iter(self.tests)


def pairings(measure, dictionary):
    return np.array([pair(measure, b) for b in dictionary])


def distance(m1, m2, dictionary):
    """``max_b |<m1, b> - <m2, b>|`` over the dictionary.

    A pseudometric; both measures must share the dictionary's support box.
    """
    if len(dictionary) == 0:
        raise ConfigError("the test dictionary is empty")
    if m1.support_box != m2.support_box:
        raise ConfigError("measures live on different support boxes {} and {}"
                          "".format(m1.support_box, m2.support_box))
    return float(np.max(np.abs(pairings(m1, dictionary) - pairings(m2, dictionary))))


def wasserstein_average(m1, m2):
    """Mean over the nodes of the W1 distance between the per-node measures."""
    if m1.n_points != m2.n_points:
        raise ConfigError("measures live on different grids")
    total = 0.0
    for i in range(m1.n_points):
        total += stats.wasserstein_distance(m1.atoms[i], m2.atoms[i],
                                            m1.weights[i], m2.weights[i])
    return total / m1.n_points


class KineticTest(object):
    """Smooth test function ``chi(t) X(x) xi^k`` for the kinetic equation.

    ``chi(t) = sin^2(pi (t - t0) / (t1 - t0))`` vanishes with its first
    derivative at both ends of the window.
    """

    def __init__(self, t0, t1, shape='cos', mode=1, degree=1):
        if not t1 > t0:
            raise ConfigError("time window must be nonempty")
        self.t0, self.t1 = float(t0), float(t1)
        self.space = TestFunction(shape, mode, degree)

    @property
    def label(self):
        return self.space.label

    def chi(self, t):
        return np.sin(np.pi * (t - self.t0) / (self.t1 - self.t0)) ** 2

    def dchi(self, t):
        w = np.pi / (self.t1 - self.t0)
        return w * np.sin(2.0 * w * (t - self.t0))

    def integrand(self, measure, t, u, sigma, eos, mu):
        """Weak-form integrand at one time, paired with the measure.

        ``dt phi + u dx phi - (xi Sigma + xi P~(xi)) dxi phi / mu
        + (Sigma + P~(xi)) phi / mu``.
        """
        x = measure.nodes[:, None]
        xi = measure.atoms
        k = self.space.degree
        xk = self.space.x_factor(x)
        dxk = self.space.dx_factor(x)
        pressure = eos.artificial_pressure(xi)
        s = np.asarray(sigma)[:, None]
        v = np.asarray(u)[:, None]
        mono = xi ** k
        d_mono = k * xi ** (k - 1) if k else np.zeros_like(xi)
        phi = self.chi(t) * xk * mono
        value = (self.dchi(t) * xk * mono
                 + v * self.chi(t) * dxk * mono
                 - (xi * s + xi * pressure) * self.chi(t) * xk * d_mono / mu
                 + (s + pressure) * phi / mu)
        return float(np.sum(measure.weights * value))


def smoke_tests(t0, t1):
    """The fixed set of kinetic test functions."""
    return [KineticTest(t0, t1, 'one', 0, 1),
            KineticTest(t0, t1, 'cos', 1, 1),
            KineticTest(t0, t1, 'sin', 1, 2),
            KineticTest(t0, t1, 'cos', 2, 2)]


def kinetic_residual(measures, times, u_series, sigma_series, test, eos, mu):
    """Weak residual of the kinetic equation along a measure trajectory.

    Time integral by the trapezoid rule over `times`; the pairing in
    ``(x, xi)`` is exact on the atoms.

    Parameters
    ----------
    measures : sequence of ParamMeasure
    times : sequence of float
    u_series, sigma_series : sequence of ndarray
        Velocity and effective viscous flux at the same times.
    test : KineticTest
    eos : EquationOfState
    mu : float
    """
    times = np.asarray(times, dtype=float)
    if not (len(measures) == len(times) == len(u_series) == len(sigma_series)):
        raise ConfigError("measures, velocities and fluxes must share the time grid")
    if len(times) < 2:
        raise ConfigError("kinetic residual needs at least two times")
    values = np.array([test.integrand(m, t, u, s, eos, mu) for m, t, u, s in
                       zip(measures, times, u_series, sigma_series)])
    return float(np.sum(0.5 * np.diff(times) * (values[1:] + values[:-1])))


def trajectory_series(traj, support_box=None):
    """Measures, times, velocities and fluxes of a completed run."""
    params = traj.params
    box = support_box or traj.config.bounds
    measures, us, sigmas = [], [], []
    for state in traj.snapshots:
        if diagnostics.is_two_phase(state):
            measures.append(two_dirac_from_bn(state, support_box=box))
        else:
            measures.append(empirical_from_state(state.rho, support_box=box))
        us.append(state.u)
        sigmas.append(diagnostics.effective_viscous_flux(state, params))
    return measures, traj.times, us, sigmas
