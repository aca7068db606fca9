"""Run orchestration behind the command line subcommands.

Each function takes a :class:`~phasekit.config.RunConfig`, runs the
corresponding experiment and, when an output directory is given, persists
it. Failures propagate as :class:`~phasekit.utils.PhasekitError`; whatever
was computed before the failure is written first.
"""
from __future__ import print_function, division, absolute_import

import logging
import math
import os

import numpy as np

from . import reports, torus
from .bn import BNState, bn_run
from .config import load_config
from .diagnostics import balance_check
from .eos import check_admissibility, maxwell_states, quadratic_growth_constant
from .harness import run_family
from .measures import TestDictionary
from .nsk import FluidState, make_oscillating_initial, nsk_run
from .utils import ConfigError, PhasekitError

logger = logging.getLogger('phasekit')


def _prepare(out):
    if out is not None and not os.path.isdir(out):
        os.makedirs(out)


def _persist_run(out, config, traj, status):
    if out is None or traj is None or not traj.records:
        return
    reports.write_trajectory(out, traj, config['output']['formats'])
    summary = traj.summary()
    if len(traj.records) > 1:
        summary['balance'] = balance_check(
            traj.records, config.balance_tolerances(), gamma=traj.params.gamma)
    reports.write_meta(out, config, status=status, summary=summary)


def _run_and_persist(config, out, run):
    _prepare(out)
    try:
        traj = run()
    except PhasekitError as e:
        partial = getattr(e, 'partial', None)
        if hasattr(partial, 'records'):
            _persist_run(out, config, partial, status='aborted: {}'.format(e))
        raise
    _persist_run(out, config, traj, status='ok')
    return traj


def initial_fluid_state(config):
    grid = config.grid()
    params = config.physical_params()
    solver = config.solver_config()
    rho0 = make_oscillating_initial(config.profile(), config['init']['n_osc'], grid,
                                    bounds=solver.bounds)
    u0 = config.velocity_profile().sample(grid)
    return FluidState.from_density(rho0, u0, params, backend=solver.helmholtz_backend)


def initial_bn_state(config):
    grid = config.grid()
    solver = config.solver_config()
    alpha_p, rho_p, rho_m = config.bn_initial()
    u0 = config.velocity_profile().sample(grid)
    return BNState.from_fields(alpha_p, rho_p, rho_m, u0, config.physical_params(),
                               grid, backend=solver.helmholtz_backend)


def simulate_nsk(config, out=None):
    """Run the NSK system described by `config`.

    Parameters
    ----------
    config : RunConfig or str
        A config or the path of one.
    out : str, optional
        Directory for snapshots, ``diagnostics.csv`` and ``meta.json``.

    Returns
    -------
    Trajectory
    """
    config = _as_config(config)
    initial = initial_fluid_state(config)
    return _run_and_persist(config, out, lambda: nsk_run(
        initial, config.physical_params(), config.solver_config()))


def simulate_bn(config, out=None):
    """Run the BN system described by `config`; see :func:`simulate_nsk`."""
    config = _as_config(config)
    initial = initial_bn_state(config)
    return _run_and_persist(config, out, lambda: bn_run(
        initial, config.physical_params(), config.solver_config(),
        integrator=config['bn']['integrator'], **config.picard_options()))


def homogenize(config, out=None):
    """Run a homogenization family and write ``convergence.csv``, one
    subdirectory per member and one for the BN run."""
    config = _as_config(config)
    family = config.family_config()
    _prepare(out)
    try:
        report = run_family(family)
    except PhasekitError as e:
        if out is not None and e.partial is not None:
            _write_family(out, config, family, e.partial,
                          status='aborted: {}'.format(e))
        raise
    if out is not None:
        _write_family(out, config, family, report, status='ok')
    return report


def _write_family(out, config, family, report, status):
    formats = config['output']['formats']
    dictionary = TestDictionary(family.solver.bounds, modes=family.dict_modes,
                                degree=family.dict_degree)
    if report.bn is not None:
        reports.write_trajectory(os.path.join(out, 'bn'), report.bn, formats)
    for n in report.n_list:
        if n not in report.members:
            continue
        member_dir = os.path.join(out, 'n_{:04d}'.format(n))
        reports.write_trajectory(member_dir, report.members[n], formats)
        if n in report.distances:
            reports.write_member_tables(member_dir, report, n, dictionary, formats)
    reports.write_convergence(os.path.join(out, 'convergence'), report, formats)
    reports.write_meta(out, config, status=status, summary=report.summary(),
                       dictionary=dictionary.labels)


def check_eos(config):
    """Admissibility of the configured law up to the upper guard rail,
    plus its Maxwell states when it has a spinodal region.

    Returns
    -------
    dict
    """
    config = _as_config(config)
    eos = config.eos()
    solver = config.solver_config()
    upper = min(solver.rho_upper, eos.domain_max)
    report = check_admissibility(eos, (0.0, upper))
    out = {'eos': eos.to_dict(), 'admissibility': report.to_dict()}
    if report.spinodal is not None:
        try:
            r_v, r_l, p_sat = maxwell_states(eos, spinodal=report.spinodal)
            out['maxwell'] = {'vapor': r_v, 'liquid': r_l, 'pressure': p_sat}
        except (ConfigError, ValueError) as e:
            logger.warning("no Maxwell states: %s", e)
            out['maxwell'] = None
    growth = quadratic_growth_constant(eos, upper)
    out['quadratic_growth_constant'] = growth if math.isfinite(growth) else None
    return out


def diagnose(directory):
    """Balance report of a finished (or aborted) run directory.

    Reads ``meta.json``, the diagnostics tables and the snapshots; the
    order parameter of every snapshot is checked against the Helmholtz
    equation of its density.
    """
    meta_path = os.path.join(directory, 'meta.json')
    if not os.path.exists(meta_path):
        raise ConfigError("{} has no meta.json".format(directory))
    config = load_config(meta_path)
    params = config.physical_params()
    records = reports.read_diagnostics(directory)
    out = {}
    if len(records) > 1:
        out['balance'] = balance_check(records, config.balance_tolerances(),
                                       gamma=params.gamma)
    residuals = []
    for t, fields in reports.read_snapshots(directory):
        if 'alpha_p' in fields:
            rho = fields['alpha_p'] * fields['rho_p'] + fields['alpha_m'] * fields['rho_m']
        else:
            rho = fields['rho']
        residuals.append(torus.helmholtz_residual(fields['c'], rho, params.kappa,
                                                  params.gamma))
    out['snapshots'] = len(residuals)
    out['max_helmholtz_residual'] = float(np.max(residuals)) if residuals else None
    out['records'] = len(records)
    if records:
        out['rho_min'] = min(r.rho_min for r in records)
        out['rho_max'] = max(r.rho_max for r in records)
    return out


def _as_config(config):
    if isinstance(config, str):
        return load_config(config)
    return config
