"""Pressure laws and the quantities derived from them.

Every law carries the coupling coefficient gamma so that it can evaluate the
artificial pressure ``P~(r) = P(r) + gamma/2 r^2``. The pressure potential W
is fixed by ``W''(r) r = P'(r)`` together with the gauge ``W(r_ref) = 0``.
"""
import logging
import math

import numpy as np
from scipy import integrate, optimize

from .utils import ConfigError, DomainError

logger = logging.getLogger('phasekit')

# distance kept from a finite domain end when scanning
DOMAIN_MARGIN = 1e-6


class EquationOfState(object):
    """Base class of the pressure laws.

    Subclasses implement ``_pressure``, ``_d_pressure`` and, when a closed
    form exists, ``_reduced_integral`` (the integral of P(s)/s^2 from r_ref
    to r).
    """
    name = 'abstract'
    domain_max = math.inf

    def __init__(self, gamma):
        gamma = float(gamma)
        if gamma < 0 or not math.isfinite(gamma):
            raise ConfigError("gamma must be >= 0 (got {})".format(gamma))
        self.gamma = gamma

    # -- parameters -------------------------------------------------------
    def coefficients(self):
        """Material coefficients as a dict (gamma excluded)."""
        raise NotImplementedError

    def with_gamma(self, gamma):
        """Copy of this law with another coupling coefficient."""
        return type(self)(gamma=gamma, **self.coefficients())

    @property
    def r_ref(self):
        # W(r_ref) = 0; 1 whenever the domain allows it
        if self.domain_max > 1.0:
            return 1.0
        return 0.5 * self.domain_max

    def _check_domain(self, r, strictly_positive=False):
        r = np.asarray(r, dtype=float)
        low_bad = np.any(r <= 0) if strictly_positive else np.any(r < 0)
        if low_bad or np.any(r >= self.domain_max) or not np.all(np.isfinite(r)):
            raise DomainError(
                "density outside the domain of {} ({}0, {})): min={:.6g}, max={:.6g}"
                "".format(self.name, '(' if strictly_positive else '[',
                          self.domain_max, np.min(r), np.max(r)))
        return r

    # -- public evaluation ------------------------------------------------
    def pressure(self, r):
        return self._pressure(self._check_domain(r))

    def d_pressure(self, r):
        return self._d_pressure(self._check_domain(r))

    def artificial_pressure(self, r):
        r = self._check_domain(r)
        return self._pressure(r) + 0.5 * self.gamma * r * r

    def d_artificial_pressure(self, r):
        r = self._check_domain(r)
        return self._d_pressure(r) + self.gamma * r

    def pressure_potential(self, r):
        """W(r) = r * integral_{r_ref}^{r} P(s)/s^2 ds, for r > 0."""
        r = self._check_domain(r, strictly_positive=True)
        return r * self._reduced_integral(r)

    def chemical_potential(self, r):
        """W'(r); its derivative is P'(r)/r."""
        r = self._check_domain(r, strictly_positive=True)
        return self._reduced_integral(r) + self._pressure(r) / r

    def sound_speed(self, r):
        """sqrt(P~'(r)), clipped at zero."""
        return np.sqrt(np.maximum(self.d_artificial_pressure(r), 0.0))

    # -- law specific -----------------------------------------------------
    def _pressure(self, r):
        raise NotImplementedError

    def _d_pressure(self, r):
        raise NotImplementedError

    def _reduced_integral(self, r):
        # no closed form: adaptive quadrature
        ref = self.r_ref

        def integrand(s):
            return float(self._pressure(np.asarray(s))) / (s * s)

        def one(x):
            value, _ = integrate.quad(integrand, ref, x, epsabs=1e-10, limit=200)
            return value

        return np.vectorize(one, otypes=[float])(r)

    def to_dict(self):
        d = {'type': self.name, 'gamma': self.gamma}
        d.update(self.coefficients())
        return d

    def __eq__(self, other):
        return type(self) is type(other) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(tuple(sorted(self.to_dict().items())))

    def __repr__(self):
        args = ', '.join('{}={!r}'.format(k, v) for k, v in self.coefficients().items())
        return '{}({}, gamma={!r})'.format(type(self).__name__, args, self.gamma)


class VanDerWaals(EquationOfState):
    """``P(r) = R T r / (B - r) - A r^2`` on [0, B)."""
    name = 'van_der_waals'

    def __init__(self, A, B, R, T_star, gamma=0.0):
        super(VanDerWaals, self).__init__(gamma)
        for key, value in (('A', A), ('B', B), ('R', R), ('T_star', T_star)):
            if not float(value) > 0:
                raise ConfigError("van der Waals coefficient {} must be > 0 "
                                  "(got {})".format(key, value))
        self.A, self.B, self.R, self.T_star = float(A), float(B), float(R), float(T_star)

    @property
    def domain_max(self):
        return self.B

    def coefficients(self):
        return {'A': self.A, 'B': self.B, 'R': self.R, 'T_star': self.T_star}

    def _pressure(self, r):
        return self.R * self.T_star * r / (self.B - r) - self.A * r * r

    def _d_pressure(self, r):
        return self.B * self.R * self.T_star / (self.B - r) ** 2 - 2.0 * self.A * r

    def _antiderivative(self, s):
        # of P(s)/s^2 = R T / (s (B - s)) - A
        return (self.R * self.T_star / self.B) * np.log(s / (self.B - s)) - self.A * s

    def _reduced_integral(self, r):
        return self._antiderivative(r) - self._antiderivative(self.r_ref)

    def critical_temperature(self):
        """Temperature below which a spinodal region exists, 8 A B^2 / (27 R)."""
        return 8.0 * self.A * self.B ** 2 / (27.0 * self.R)


class Polytropic(EquationOfState):
    """``P(r) = a r^beta`` with beta >= 2."""
    name = 'polytropic'

    def __init__(self, a, beta, gamma=0.0):
        super(Polytropic, self).__init__(gamma)
        if not float(a) > 0:
            raise ConfigError("polytropic coefficient a must be > 0 (got {})".format(a))
        if not float(beta) >= 2:
            raise ConfigError("polytropic exponent beta must be >= 2 (got {})".format(beta))
        self.a, self.beta = float(a), float(beta)

    def coefficients(self):
        return {'a': self.a, 'beta': self.beta}

    def _pressure(self, r):
        return self.a * r ** self.beta

    def _d_pressure(self, r):
        return self.a * self.beta * r ** (self.beta - 1.0)

    def _reduced_integral(self, r):
        k = self.beta - 1.0
        return self.a * (r ** k - self.r_ref ** k) / k


class CustomLaw(EquationOfState):
    """A pressure law given by callables; W falls back to quadrature."""
    name = 'custom'

    def __init__(self, pressure, d_pressure, gamma=0.0, domain_max=math.inf,
                 label='custom'):
        super(CustomLaw, self).__init__(gamma)
        self._p = pressure
        self._dp = d_pressure
        self._domain_max = float(domain_max)
        self.label = label

    @property
    def domain_max(self):
        return self._domain_max

    def coefficients(self):
        return {'label': self.label}

    def with_gamma(self, gamma):
        return CustomLaw(self._p, self._dp, gamma=gamma,
                         domain_max=self._domain_max, label=self.label)

    def __eq__(self, other):
        return (isinstance(other, CustomLaw) and other._p is self._p
                and other._dp is self._dp and other.gamma == self.gamma
                and other._domain_max == self._domain_max)

    __hash__ = EquationOfState.__hash__

    def _pressure(self, r):
        return np.asarray(self._p(r), dtype=float)

    def _d_pressure(self, r):
        return np.asarray(self._dp(r), dtype=float)


LAWS = {cls.name: cls for cls in (VanDerWaals, Polytropic)}


def eos_from_dict(d):
    """Build a law from ``{'type': ..., 'gamma': ..., <coefficients>}``."""
    d = dict(d)
    kind = d.pop('type', None)
    if kind not in LAWS:
        raise ConfigError("unknown equation of state {!r}; valid options are {}"
                          "".format(kind, sorted(LAWS)))
    return LAWS[kind](**d)


class AdmissibilityReport(object):
    """Result of :func:`check_admissibility`."""

    def __init__(self, admissible, min_artificial_slope, spinodal, scan_interval,
                 artificial_roots=()):
        self.admissible = bool(admissible)
        self.min_artificial_slope = float(min_artificial_slope)
        self.spinodal = spinodal
        self.scan_interval = scan_interval
        self.artificial_roots = tuple(artificial_roots)

    def to_dict(self):
        return {
            'admissible': self.admissible,
            'min_artificial_slope': self.min_artificial_slope,
            'spinodal': None if self.spinodal is None else list(self.spinodal),
            'scan_interval': list(self.scan_interval),
            'artificial_roots': list(self.artificial_roots),
        }

    def __repr__(self):
        return 'AdmissibilityReport(%r)' % self.to_dict()


def _refine_roots(func, r, values, tol):
    roots = []
    flips = np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)
    for i in flips:
        roots.append(optimize.bisect(func, r[i], r[i + 1], xtol=tol))
    return roots


def check_admissibility(eos, interval, n_samples=10000, tol=1e-10):
    """Check monotonicity of the artificial pressure on `interval`.

    Samples P~' on `n_samples` uniform points, refines every sign change by
    bisection to `tol` and, when P' changes sign, reports the first interval
    [B1, B2] where P' < 0.

    Parameters
    ----------
    eos : EquationOfState
    interval : (float, float)
        Densities to scan; the upper end is pulled back from a finite
        domain end by DOMAIN_MARGIN.

    Returns
    -------
    AdmissibilityReport
    """
    r_lo, r_hi = float(interval[0]), float(interval[1])
    if not (0 <= r_lo < r_hi) or r_hi > eos.domain_max:
        raise ConfigError("invalid admissibility interval [{}, {}] for domain "
                          "[0, {})".format(r_lo, r_hi, eos.domain_max))
    if math.isfinite(eos.domain_max):
        r_hi = min(r_hi, eos.domain_max - DOMAIN_MARGIN)
        if r_hi <= r_lo:
            raise ConfigError("admissibility interval collapses at the domain end")

    r = np.linspace(r_lo, r_hi, int(n_samples))
    slope = eos.d_artificial_pressure(r)
    artificial_roots = _refine_roots(
        lambda x: float(eos.d_artificial_pressure(x)), r, slope, tol)

    dp = eos.d_pressure(r)
    spinodal = None
    negative = np.flatnonzero(dp < 0)
    if negative.size:
        start = negative[0]
        # end of the first negative run
        breaks = np.flatnonzero(np.diff(negative) > 1)
        stop = negative[breaks[0]] if breaks.size else negative[-1]

        def dp_scalar(x):
            return float(eos.d_pressure(x))

        b1 = (optimize.bisect(dp_scalar, r[start - 1], r[start], xtol=tol)
              if start > 0 else r[0])
        b2 = (optimize.bisect(dp_scalar, r[stop], r[stop + 1], xtol=tol)
              if stop + 1 < len(r) else r[-1])
        spinodal = (float(b1), float(b2))

    min_slope = float(np.min(slope))
    report = AdmissibilityReport(min_slope >= 0, min_slope, spinodal,
                                 (r_lo, r_hi), artificial_roots)
    logger.debug("admissibility of %r on [%g, %g]: %r", eos, r_lo, r_hi, report)
    return report


def quadratic_growth_constant(eos, r_hi, n_samples=1000):
    """Empirical sup of r^2 / (1 + W(r)) over (0, r_hi].

    Returns inf when 1 + W(r) <= 0 somewhere on the scan.
    """
    r_hi = min(float(r_hi), eos.domain_max - DOMAIN_MARGIN)
    r = np.linspace(r_hi / n_samples, r_hi, n_samples)
    denom = 1.0 + eos.pressure_potential(r)
    if np.any(denom <= 0):
        return math.inf
    return float(np.max(r * r / denom))


def maxwell_states(eos, spinodal=None, tol=1e-12):
    """Coexisting vapor and liquid densities of a law with a spinodal region.

    Solves ``P(r_v) = P(r_l)`` and ``W'(r_v) = W'(r_l)`` with
    ``r_v < B1 < B2 < r_l``: the saturation pressure is bracketed between
    the local minimum and maximum of P and fixed by equal chemical
    potentials.

    Returns
    -------
    (r_vapor, r_liquid, p_saturation) : tuple of float
    """
    if spinodal is None:
        upper = eos.domain_max - DOMAIN_MARGIN if math.isfinite(eos.domain_max) else 1e3
        spinodal = check_admissibility(eos, (0.0, upper)).spinodal
    if spinodal is None:
        raise ConfigError("{!r} has no spinodal region, there is no Maxwell pair"
                          "".format(eos))
    b1, b2 = spinodal

    def p(x):
        return float(eos.pressure(x))

    def liquid_upper(level):
        if math.isfinite(eos.domain_max):
            return eos.domain_max - DOMAIN_MARGIN
        hi = 2.0 * b2
        while p(hi) <= level:
            hi *= 2.0
        return hi

    def mismatch(level):
        r_v = optimize.brentq(lambda x: p(x) - level, 1e-12, b1, xtol=tol)
        r_l = optimize.brentq(lambda x: p(x) - level, b2, liquid_upper(level), xtol=tol)
        return float(eos.chemical_potential(r_l) - eos.chemical_potential(r_v))

    lo = max(p(b2), 0.0)
    hi = p(b1)
    span = hi - lo
    lo, hi = lo + 1e-9 * span, hi - 1e-9 * span
    if not hi > lo or mismatch(lo) * mismatch(hi) > 0:
        raise ConfigError("could not bracket the saturation pressure of {!r}".format(eos))
    level = optimize.brentq(mismatch, lo, hi, xtol=tol)
    r_v = optimize.brentq(lambda x: p(x) - level, 1e-12, b1, xtol=tol)
    r_l = optimize.brentq(lambda x: p(x) - level, b2, liquid_upper(level), xtol=tol)
    return float(r_v), float(r_l), float(level)
