"""Run configuration files.

A run file is a sequence of ``[section]`` headers and ``key = value`` lines;
``#`` starts a comment. Values are read as YAML literals and coerced to the
type of the key's entry in ``pkg_data/defaults.yml``, which also supplies
every key the file leaves out::

    [physics]
    gamma = 2.0

    [harness]
    n_list = 4, 8, 16

A ``meta.json`` written by a run can be loaded in place of a run file.
"""
import copy
import io
import json
import logging

import yaml

from . import eos as eos_module
from .bn import INTEGRATORS
from .diagnostics import BalanceTolerances
from .harness import FamilyConfig, limit_initial_data
from .nsk import (CAPILLARITY_FORMS, PhysicalParams, SineProfile, SolverConfig,
                  TwoValueProfile, VelocityProfile)
from .reports import FORMATS
from .torus import BACKENDS, PeriodicGrid
from .utils import ConfigError, pkg_data, yaml_loader

logger = logging.getLogger('phasekit')

DEFAULTS = pkg_data
PROFILES = ('two_value', 'sine')
BN_INITIAL = ('limit', 'constant')


def _positive(v):
    return v > 0


def _nonnegative(v):
    return v >= 0


def _increasing(v):
    return all(b > a for a, b in zip(v, v[1:]))


# (section, key, check, message) applied to every loaded config
RULES = [
    ('physics', 'mu', _positive, 'must be > 0'),
    ('physics', 'kappa', _positive, 'must be > 0'),
    ('physics', 'gamma', _nonnegative, 'must be >= 0'),
    ('eos', 'type', lambda v: v in eos_module.LAWS,
     'must be one of {}'.format(sorted(eos_module.LAWS))),
    ('eos', 'A', _positive, 'must be > 0'),
    ('eos', 'B', _positive, 'must be > 0'),
    ('eos', 'R', _positive, 'must be > 0'),
    ('eos', 'T_star', _positive, 'must be > 0'),
    ('eos', 'a', _positive, 'must be > 0'),
    ('eos', 'beta', lambda v: v >= 2, 'must be >= 2'),
    ('grid', 'n_points', lambda v: v >= 8 and v % 2 == 0, 'must be an even integer >= 8'),
    ('grid', 'backend', lambda v: v in BACKENDS, 'must be one of {}'.format(BACKENDS)),
    ('time', 'dt', _positive, 'must be > 0'),
    ('time', 'cfl', lambda v: 0 < v <= 1, 'must lie in (0, 1]'),
    ('time', 't_end', _positive, 'must be > 0'),
    ('time', 'snapshot_every', lambda v: v >= 1, 'must be >= 1'),
    ('time', 'snapshot_interval', _nonnegative, 'must be >= 0'),
    ('init', 'profile', lambda v: v in PROFILES, 'must be one of {}'.format(PROFILES)),
    ('init', 'v_minus', _positive, 'must be > 0'),
    ('init', 'v_plus', _positive, 'must be > 0'),
    ('init', 'theta', lambda v: 0 < v < 1, 'must lie in (0, 1)'),
    ('init', 'delta', _positive, 'must be > 0'),
    ('init', 'n_osc', lambda v: v >= 1, 'must be >= 1'),
    ('init', 'rho_mean', _positive, 'must be > 0'),
    ('init', 'rho_mode', lambda v: v >= 1, 'must be >= 1'),
    ('init', 'u_mode', lambda v: v >= 1, 'must be >= 1'),
    ('bn', 'initial', lambda v: v in BN_INITIAL, 'must be one of {}'.format(BN_INITIAL)),
    ('bn', 'alpha_plus', lambda v: 0 <= v <= 1, 'must lie in [0, 1]'),
    ('bn', 'rho_plus', _positive, 'must be > 0'),
    ('bn', 'rho_minus', _positive, 'must be > 0'),
    ('bn', 'integrator', lambda v: v in INTEGRATORS, 'must be one of {}'.format(INTEGRATORS)),
    ('bn', 'closure_tol', _positive, 'must be > 0'),
    ('bn', 'picard_tol', _positive, 'must be > 0'),
    ('bn', 'picard_max_iter', lambda v: v >= 1, 'must be >= 1'),
    ('bounds', 'M0', lambda v: v >= 1, 'must be >= 1'),
    ('harness', 'n_list', lambda v: len(v) > 0 and min(v) >= 1, 'must be a nonempty list of counts >= 1'),
    ('harness', 'n_list', _increasing, 'must be strictly increasing'),
    ('harness', 'dict_modes', _nonnegative, 'must be >= 0'),
    ('harness', 'dict_degree', _nonnegative, 'must be >= 0'),
    ('harness', 'resolution_factor', lambda v: v >= 1, 'must be >= 1'),
    ('harness', 'monotone_slack', _nonnegative, 'must be >= 0'),
    ('harness', 'threads', _nonnegative, 'must be >= 0'),
    ('scheme', 'upwind', _nonnegative, 'must be >= 0'),
    ('scheme', 'capillarity_form', lambda v: v in CAPILLARITY_FORMS,
     'must be one of {}'.format(CAPILLARITY_FORMS)),
    ('diagnostics', 'mass_tol', _positive, 'must be > 0'),
    ('diagnostics', 'momentum_tol', _positive, 'must be > 0'),
    ('diagnostics', 'energy_rel_tol', _positive, 'must be > 0'),
    ('diagnostics', 'closure_tol', _positive, 'must be > 0'),
    ('output', 'formats', lambda v: len(v) > 0 and set(v) <= set(FORMATS),
     'must be a nonempty subset of {}'.format(FORMATS)),
]


def _where(lineno, section, key):
    prefix = '' if lineno is None else 'line {}: '.format(lineno)
    return '{}[{}].{}'.format(prefix, section, key)


def _scalar(text):
    try:
        return yaml.load(text, Loader=yaml_loader)
    except yaml.YAMLError as e:
        raise ValueError("not a literal ({})".format(e))


def coerce(value, default):
    """Convert a parsed literal to the type of `default`.

    Strings are parsed as YAML first; list defaults accept comma-separated
    strings and single scalars.
    """
    if isinstance(default, list):
        if isinstance(value, str):
            value = [_scalar(part.strip()) for part in value.split(',') if part.strip()]
        elif not isinstance(value, (list, tuple)):
            value = [value]
        template = default[0] if default else value[0] if value else ''
        return [coerce(v, template) for v in value]
    if isinstance(value, str) and not isinstance(default, str):
        value = _scalar(value)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ValueError("expected true or false, got {!r}".format(value))
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
            raise ValueError("expected an integer, got {!r}".format(value))
        return int(value)
    if isinstance(default, float):
        if isinstance(value, str):
            # yaml reads 1e-3 as a string
            value = float(value)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError("expected a number, got {!r}".format(value))
        return float(value)
    if isinstance(default, str):
        if isinstance(value, str):
            parsed = _scalar(value)
            # unquote, but keep the text of anything that is not a plain string
            value = parsed if isinstance(parsed, str) else value
        return str(value)
    return value


def parse_text(text, source='<string>'):
    """Parse run-file text into ``(values, lines)``.

    ``values`` maps section to key to the raw string, ``lines`` maps
    ``(section, key)`` to its line number.
    """
    values, lines = {}, {}
    section = None
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if line.startswith('[') and line.endswith(']'):
            section = line[1:-1].strip()
            if section not in DEFAULTS:
                raise ConfigError("{}: line {}: unknown section [{}]; valid sections "
                                  "are {}".format(source, lineno, section,
                                                  sorted(DEFAULTS)))
            values.setdefault(section, {})
            continue
        if '=' not in line:
            raise ConfigError("{}: line {}: expected 'key = value', got {!r}"
                              "".format(source, lineno, line))
        if section is None:
            raise ConfigError("{}: line {}: key outside of any [section]"
                              "".format(source, lineno))
        key, value = (part.strip() for part in line.split('=', 1))
        if key not in DEFAULTS[section]:
            raise ConfigError("{}: line {}: unknown key [{}].{}; valid keys are {}"
                              "".format(source, lineno, section, key,
                                        sorted(DEFAULTS[section])))
        if key in values[section]:
            raise ConfigError("{}: line {}: [{}].{} is set twice (first on line {})"
                              "".format(source, lineno, section, key,
                                        lines[section, key]))
        values[section][key] = value
        lines[section, key] = lineno
    return values, lines


class RunConfig(object):
    """A fully validated configuration with every default materialized.

    Use :func:`load_config` or :meth:`from_dict` to build one; the typed
    builders turn it into the objects the solvers take.
    """

    def __init__(self, data, lines=None, source=None):
        self.data = data
        self.lines = lines or {}
        self.source = source

    @classmethod
    def from_dict(cls, given, lines=None, source=None):
        """Merge `given` (section -> key -> value) into the defaults,
        coerce and validate."""
        lines = lines or {}
        data = copy.deepcopy(DEFAULTS)
        for section, entries in (given or {}).items():
            if section not in DEFAULTS:
                raise ConfigError("unknown section [{}]; valid sections are {}"
                                  "".format(section, sorted(DEFAULTS)))
            for key, value in entries.items():
                where = _where(lines.get((section, key)), section, key)
                if key not in DEFAULTS[section]:
                    raise ConfigError("{}: unknown key; valid keys are {}"
                                      "".format(where, sorted(DEFAULTS[section])))
                try:
                    data[section][key] = coerce(value, DEFAULTS[section][key])
                except ValueError as e:
                    raise ConfigError("{}: {}".format(where, e))
        for section, key, check, message in RULES:
            value = data[section][key]
            try:
                ok = check(value)
            except TypeError:
                ok = False
            if not ok:
                raise ConfigError("{} {} (got {!r})".format(
                    _where(lines.get((section, key)), section, key), message, value))
        missing = [(s, k) for s in DEFAULTS for k in DEFAULTS[s]
                   if k not in (given or {}).get(s, {})]
        logger.debug("materialized %d defaults: %s", len(missing),
                     ', '.join('[%s].%s' % sk for sk in missing))
        return cls(data, lines=lines, source=source)

    def __getitem__(self, section):
        return self.data[section]

    def __eq__(self, other):
        return isinstance(other, RunConfig) and other.data == self.data

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return 'RunConfig(source=%r)' % self.source

    def to_dict(self):
        return copy.deepcopy(self.data)

    def _built(self, section, key, build):
        # attach the offending key to errors raised by constructors
        try:
            return build()
        except ConfigError as e:
            raise ConfigError("{}: {}".format(
                _where(self.lines.get((section, key)), section, key), e))

    # -- builders -----------------------------------------------------------
    def eos(self):
        d = self.data['eos']
        law = eos_module.LAWS[d['type']]
        if law is eos_module.VanDerWaals:
            coefficients = {k: d[k] for k in ('A', 'B', 'R', 'T_star')}
        else:
            coefficients = {k: d[k] for k in ('a', 'beta')}
        return self._built('eos', 'type', lambda: law(
            gamma=self.data['physics']['gamma'], **coefficients))

    def physical_params(self):
        p = self.data['physics']
        # gamma = 0 is a valid law for check-eos but not a runnable model
        return self._built('physics', 'gamma', lambda: PhysicalParams(
            p['mu'], p['kappa'], p['gamma'], self.eos()))

    def grid(self):
        return PeriodicGrid(self.data['grid']['n_points'])

    def solver_config(self):
        t = self.data['time']
        return self._built('bounds', 'M0', lambda: SolverConfig.from_m0(
            self.data['bounds']['M0'],
            dt=t['dt'], cfl=t['cfl'], t_end=t['t_end'],
            snapshot_every=t['snapshot_every'],
            snapshot_interval=t['snapshot_interval'],
            upwind=self.data['scheme']['upwind'],
            capillarity_form=self.data['scheme']['capillarity_form'],
            helmholtz_backend=self.data['grid']['backend'],
            closure_tol=self.data['bn']['closure_tol']))

    def profile(self):
        d = self.data['init']
        if d['profile'] == 'sine':
            return self._built('init', 'rho_amplitude', lambda: SineProfile(
                d['rho_mean'], d['rho_amplitude'], d['rho_mode']))
        return self._built('init', 'delta', lambda: TwoValueProfile(
            d['v_minus'], d['v_plus'], d['theta'], d['delta']))

    def velocity_profile(self):
        d = self.data['init']
        return VelocityProfile(d['u_mean'], d['u_amplitude'], d['u_mode'])

    def bn_initial(self):
        """``(alpha_p, rho_p, rho_m)`` of the BN run."""
        d = self.data['bn']
        if d['initial'] == 'limit':
            alpha_p, _, rho_p, rho_m = self._built(
                'init', 'profile', lambda: limit_initial_data(self.profile()))
            return alpha_p, rho_p, rho_m
        return d['alpha_plus'], d['rho_plus'], d['rho_minus']

    def picard_options(self):
        d = self.data['bn']
        return {'picard_tol': d['picard_tol'], 'picard_max_iter': d['picard_max_iter']}

    def family_config(self):
        h = self.data['harness']
        return self._built('harness', 'n_list', lambda: FamilyConfig(
            h['n_list'], self.profile(), self.velocity_profile(),
            self.physical_params(), self.solver_config(), self.grid(),
            dict_modes=h['dict_modes'], dict_degree=h['dict_degree'],
            monotone_slack=h['monotone_slack'],
            resolution_factor=h['resolution_factor'],
            threads=h['threads'] or None,
            integrator=self.data['bn']['integrator'],
            picard_options=self.picard_options()))

    def balance_tolerances(self):
        d = self.data['diagnostics']
        return BalanceTolerances(d['mass_tol'], d['momentum_tol'], d['energy_rel_tol'],
                                 d['closure_tol'])


def load_config(path):
    """Read and validate a run file or a ``meta.json``.

    Raises
    ------
    ConfigError
        Naming the offending ``[section].key`` and line.
    """
    try:
        with io.open(path, encoding='utf-8') as f:
            text = f.read()
    except (IOError, OSError) as e:
        raise ConfigError("cannot read config {}: {}".format(path, e))
    if str(path).endswith('.json'):
        try:
            meta = json.loads(text)
        except ValueError as e:
            raise ConfigError("{} is not valid JSON: {}".format(path, e))
        if 'config' not in meta:
            raise ConfigError("{} has no 'config' object".format(path))
        return RunConfig.from_dict(meta['config'], source=str(path))
    values, lines = parse_text(text, source=str(path))
    try:
        return RunConfig.from_dict(values, lines=lines, source=str(path))
    except ConfigError as e:
        raise ConfigError("{}: {}".format(path, e))
