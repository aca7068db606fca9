"""Discrete calculus on the periodic unit interval.

Fields ("GridFields") are plain 1-D float ndarrays; the grid they live on
is implied by their length N (spacing h = 1/N, nodes x_i = i h). Two
derivative backends are available everywhere and are always selected by an
explicit argument:

- ``'central'``: second-order central differences. The solvers use these for
  their fluxes because they telescope exactly.
- ``'spectral'``: discrete Fourier differentiation, used for diagnostics and
  the Helmholtz solve.
"""
import logging

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from .utils import ConfigError, check_finite

logger = logging.getLogger('phasekit')

BACKENDS = ('central', 'spectral')


class PeriodicGrid(object):
    """Uniform grid on the torus [0, 1).

    Parameters
    ----------
    n_points : int
        Number of nodes N. Must be even and at least 8.
    """

    def __init__(self, n_points):
        n_points = int(n_points)
        if n_points < 8 or n_points % 2:
            raise ConfigError(
                "n_points must be an even integer >= 8 (got {})".format(n_points))
        self.n_points = n_points
        self.spacing = 1.0 / n_points
        self.nodes = np.arange(n_points) * self.spacing
        self.nodes.flags.writeable = False

    @classmethod
    def for_field(cls, f):
        return cls(len(f))

    def sample(self, func):
        """Evaluate ``func(x)`` on the nodes."""
        return check_finite(func(self.nodes), name='sampled field')

    def __eq__(self, other):
        return isinstance(other, PeriodicGrid) and other.n_points == self.n_points

    def __hash__(self):
        return hash(self.n_points)

    def __repr__(self):
        return 'PeriodicGrid(n_points=%d)' % self.n_points


def _spacing(f):
    return 1.0 / len(f)


def _check_backend(backend):
    if backend not in BACKENDS:
        raise ConfigError(
            "backend must be one of {} (got {!r})".format(BACKENDS, backend))


def wavenumbers(n_points):
    """Integer Fourier modes m in numpy's rfft ordering (0..N/2)."""
    return np.fft.rfftfreq(n_points, d=1.0 / n_points)


def dealias(f):
    """Zero every Fourier mode with |m| > N/3 (the 2/3 rule)."""
    f = check_finite(f)
    fhat = np.fft.rfft(f)
    m = wavenumbers(len(f))
    fhat[m > len(f) / 3.0] = 0.0
    return np.fft.irfft(fhat, n=len(f))


def derivative(f, order=1, backend='central', dealiased=False):
    """Discrete first or second derivative of a periodic field.

    Parameters
    ----------
    f : ndarray
        Samples on the N nodes.
    order : {1, 2}
    backend : {'central', 'spectral'}
    dealiased : bool, optional
        Spectral backend only: apply the 2/3 rule before differentiating.

    Returns
    -------
    ndarray
    """
    f = check_finite(f)
    _check_backend(backend)
    if order not in (1, 2):
        raise ConfigError("derivative order must be 1 or 2 (got {})".format(order))
    h = _spacing(f)
    if backend == 'central':
        if order == 1:
            return (np.roll(f, -1) - np.roll(f, 1)) / (2.0 * h)
        return (np.roll(f, -1) - 2.0 * f + np.roll(f, 1)) / (h * h)

    n = len(f)
    fhat = np.fft.rfft(f)
    m = wavenumbers(n)
    symbol = (2j * np.pi * m) ** order
    if order % 2:
        # the Nyquist mode of a real field has no odd derivative
        symbol[-1] = 0.0
    if dealiased:
        symbol[m > n / 3.0] = 0.0
    return np.fft.irfft(symbol * fhat, n=n)


def mean(f):
    """The discrete mean h * sum(f)."""
    f = check_finite(f)
    return float(np.sum(f) * _spacing(f))


def primitive(f, tol=1e-10):
    """Mean-free primitive F of a mean-free field, computed spectrally.

    ``derivative(primitive(f), backend='spectral')`` recovers f on fields
    without a Nyquist component.
    """
    f = check_finite(f)
    fbar = mean(f)
    if abs(fbar) > tol:
        raise ConfigError(
            "primitive needs a mean-free field; subtract the mean first "
            "(mean = {:.3e})".format(fbar))
    n = len(f)
    fhat = np.fft.rfft(f)
    m = wavenumbers(n)
    Fhat = np.zeros_like(fhat)
    Fhat[1:-1] = fhat[1:-1] / (2j * np.pi * m[1:-1])
    return np.fft.irfft(Fhat, n=n)


def sobolev_norm(f, k):
    """Discrete H^k norm with Fourier weights (1 + (2 pi m)^2)^k.

    The coefficients are normalized so that the H^0 norm is the discrete
    L^2 norm sqrt(h * sum f^2).
    """
    f = check_finite(f)
    n = len(f)
    fhat = np.fft.fft(f) / n
    m = np.fft.fftfreq(n, d=1.0 / n)
    weights = (1.0 + (2.0 * np.pi * m) ** 2) ** k
    return float(np.sqrt(np.sum(weights * np.abs(fhat) ** 2)))


def l2_norm(f):
    f = check_finite(f)
    return float(np.sqrt(_spacing(f) * np.sum(f * f)))


def solve_cyclic_tridiagonal(lower, diag, upper, rhs):
    """Solve a periodic tridiagonal system.

    Row i reads ``lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]``
    with indices taken modulo N. The corner couplings are removed with a
    Sherman-Morrison correction and the remaining band is handed to
    :func:`scipy.linalg.solve_banded`.
    """
    lower = np.asarray(lower, dtype=float)
    diag = np.array(diag, dtype=float)
    upper = np.asarray(upper, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    n = len(diag)
    shift = -diag[0]
    diag[0] -= shift
    diag[-1] -= lower[0] * upper[-1] / shift

    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1, :] = diag
    ab[2, :-1] = lower[1:]

    corr = np.zeros(n)
    corr[0] = shift
    corr[-1] = upper[-1]
    sol = solve_banded((1, 1), ab, np.column_stack([rhs, corr]))
    y, z = sol[:, 0], sol[:, 1]
    factor = ((y[0] + lower[0] * y[-1] / shift)
              / (1.0 + z[0] + lower[0] * z[-1] / shift))
    return y - factor * z


def helmholtz_solve(rho, kappa, gamma, backend='spectral'):
    """Solve ``-kappa c'' + gamma c = gamma rho`` on the torus.

    Parameters
    ----------
    rho : ndarray
    kappa, gamma : float
        Strictly positive capillarity and coupling coefficients.
    backend : {'spectral', 'central'}
        ``'spectral'`` is diagonal per Fourier mode; ``'central'`` solves the
        cyclic tridiagonal system of the three-point Laplacian.

    Returns
    -------
    c : ndarray
        Both backends keep the mean, ``mean(c) == mean(rho)``.

    Notes
    -----
    Only the spectral solution satisfies :func:`helmholtz_residual` to
    round-off (below 1e-9). The central solution is exact for the
    three-point operator, so its residual against the spectral operator is
    the ``O(h^2)`` truncation error of that operator.
    """
    rho = check_finite(rho, name='rho')
    _check_backend(backend)
    if not kappa > 0 or not gamma > 0:
        raise ConfigError(
            "helmholtz_solve needs kappa > 0 and gamma > 0 "
            "(got kappa={}, gamma={})".format(kappa, gamma))
    n = len(rho)
    if backend == 'spectral':
        m = wavenumbers(n)
        rhat = np.fft.rfft(rho)
        chat = gamma * rhat / (kappa * (2.0 * np.pi * m) ** 2 + gamma)
        return np.fft.irfft(chat, n=n)

    h = _spacing(rho)
    off = np.full(n, -kappa / (h * h))
    diag = np.full(n, 2.0 * kappa / (h * h) + gamma)
    return solve_cyclic_tridiagonal(off, diag, off, gamma * rho)


def helmholtz_residual(c, rho, kappa, gamma):
    """Max-norm of ``-kappa c'' + gamma c - gamma rho`` (spectral operator)."""
    lap = derivative(c, order=2, backend='spectral')
    return float(np.max(np.abs(-kappa * lap + gamma * c - gamma * rho)))


def elliptic_constant(samples, kappa, gamma, backend='spectral'):
    """Largest observed ratio ||c||_H2 / ||rho||_L2 over `samples`.

    The discrete counterpart of interior elliptic regularity: the ratio stays
    below a constant that depends on kappa and gamma only.
    """
    ratios = []
    for rho in samples:
        c = helmholtz_solve(rho, kappa, gamma, backend=backend)
        ratios.append(sobolev_norm(c, 2) / l2_norm(rho))
    constant = max(ratios)
    logger.info("empirical elliptic constant over %d samples: %.6g",
                len(ratios), constant)
    return constant


def periodic_interpolate(f, points):
    """Periodic cubic spline through the nodes of `f`, evaluated at `points`."""
    f = check_finite(f)
    n = len(f)
    knots = np.arange(n + 1) / float(n)
    spline = CubicSpline(knots, np.append(f, f[0]), bc_type='periodic')
    return spline(np.mod(points, 1.0))
