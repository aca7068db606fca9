import logging
import pkgutil

import numpy as np
import yaml

logger = logging.getLogger('phasekit')


class PhasekitError(RuntimeError):
    """Base class for every error phasekit raises on purpose.

    ``exit_code`` is what the command line interface returns when the
    exception escapes a subcommand.
    """
    exit_code = 1

    def __init__(self, msg, partial=None):
        super(PhasekitError, self).__init__(msg)
        # whatever had been computed before the failure (a Trajectory,
        # a ConvergenceReport, ...)
        self.partial = partial


class ConfigError(PhasekitError, ValueError):
    exit_code = 2


class AdmissibilityError(PhasekitError):
    exit_code = 3


class BoundsViolation(PhasekitError):
    exit_code = 4


class NonFiniteFieldError(PhasekitError, FloatingPointError):
    exit_code = 4


class DomainError(PhasekitError, ValueError):
    """A density outside the domain of the pressure law."""
    exit_code = 4


class FixedPointError(PhasekitError):
    exit_code = 5


class FamilyAborted(PhasekitError):
    exit_code = 4


def check_finite(values, name='field'):
    """Raise NonFiniteFieldError unless every entry of `values` is finite.

    Returns the input as a float ndarray so callers can chain it.
    """
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        bad = np.flatnonzero(~np.isfinite(arr))
        raise NonFiniteFieldError(
            "{} has {} non-finite entries (first at index {})"
            "".format(name, bad.size, bad[0]))
    return arr


def check_bounds(values, lower, upper, name='rho', t=None):
    """Guard rails: every entry must lie in [lower, upper]."""
    vmin = float(np.min(values))
    vmax = float(np.max(values))
    if vmin < lower or vmax > upper:
        when = '' if t is None else ' at t={:.6g}'.format(t)
        raise BoundsViolation(
            "{} left the guard rails [{:.6g}, {:.6g}]{}: min={:.6g}, max={:.6g}"
            "".format(name, lower, upper, when, vmin, vmax))
    return vmin, vmax


def freeze(values):
    """Return a read-only float copy of `values`."""
    arr = np.array(values, dtype=float)
    arr.flags.writeable = False
    return arr


try:
    # Try and use the C extensions because they're faster
    yaml_loader = yaml.CSafeLoader
except AttributeError:
    # Fall back to the slower python implementation when pyyaml was built
    # without libyaml
    yaml_loader = yaml.SafeLoader

pkg_data = yaml.load(
    pkgutil.get_data(__name__, 'pkg_data/defaults.yml').decode(),
    Loader=yaml_loader,
)
