"""The homogenization experiment.

For every oscillation count ``n`` of a family the NSK system is run from
the compressed two-value profile ``rho0(n x)``; the BN system is run once
from the two-phase data the profiles concentrate on. The empirical
measures of the NSK densities are then compared with the two-Dirac measure
of the BN state at shared snapshot times.
"""
import logging
import os
from concurrent.futures import ThreadPoolExecutor, as_completed

import numpy as np

from . import measures, torus
from .bn import BNState, bn_run
from .diagnostics import observed_order
from .nsk import (FluidState, RAMP_HALF_MASS, TwoValueProfile,
                  make_oscillating_initial, nsk_run)
from .utils import ConfigError, FamilyAborted, PhasekitError

logger = logging.getLogger('phasekit')

# snapshots per run when the solver config has no time schedule
DEFAULT_SNAPSHOTS = 10


class FamilyConfig(object):
    """Everything a homogenization family needs.

    Parameters
    ----------
    n_list : sequence of int
        Strictly increasing oscillation counts.
    profile : TwoValueProfile
    velocity : VelocityProfile
        Initial velocity, shared by every member and the BN run.
    params : PhysicalParams
    solver : SolverConfig
    grid : PeriodicGrid
    dict_modes, dict_degree : int, optional
        Size of the test dictionary.
    monotone_slack : float, optional
        Relative increase of the sup distances tolerated between
        successive members before the family is flagged non-monotone.
    resolution_factor : int, optional
        Required cells per oscillation of the largest member.
    threads : int, optional
        Worker cap; defaults to ``PHASEKIT_THREADS`` or one per job.
    integrator : {'splitting', 'picard'}, optional
        BN integrator.
    """

    def __init__(self, n_list, profile, velocity, params, solver, grid,
                 dict_modes=4, dict_degree=4, monotone_slack=0.2,
                 resolution_factor=64, threads=None, integrator='splitting',
                 picard_options=None):
        n_list = [int(n) for n in n_list]
        if not n_list:
            raise ConfigError("n_list must not be empty")
        if any(b <= a for a, b in zip(n_list, n_list[1:])):
            raise ConfigError("n_list must be strictly increasing")
        if n_list[0] < 1:
            raise ConfigError("oscillation counts must be >= 1")
        if not isinstance(profile, TwoValueProfile):
            raise ConfigError("a homogenization family needs a two-value profile")
        if grid.n_points < resolution_factor * n_list[-1]:
            raise ConfigError(
                "N = {} is too coarse for n = {}: need N >= {} * max(n_list) = {}"
                "".format(grid.n_points, n_list[-1], resolution_factor,
                          resolution_factor * n_list[-1]))
        lo, hi = solver.bounds
        if min(profile.values) < lo or max(profile.values) > hi:
            raise ConfigError("profile values {} leave the guard rails [{}, {}]"
                              "".format(profile.values, lo, hi))
        self.n_list = n_list
        self.profile = profile
        self.velocity = velocity
        self.params = params
        self.solver = solver
        self.grid = grid
        self.dict_modes = int(dict_modes)
        self.dict_degree = int(dict_degree)
        self.monotone_slack = float(monotone_slack)
        self.resolution_factor = int(resolution_factor)
        self.threads = threads
        self.integrator = integrator
        self.picard_options = dict(picard_options or {})

    def shared_solver(self):
        """Solver config with a time-based snapshot schedule, so that every
        member is sampled at the same times."""
        if self.solver.snapshot_interval > 0:
            return self.solver
        return self.solver.replace(
            snapshot_interval=self.solver.t_end / DEFAULT_SNAPSHOTS)

    def workers(self, jobs):
        if self.threads:
            return max(1, int(self.threads))
        env = os.environ.get('PHASEKIT_THREADS')
        if env:
            try:
                return max(1, int(env))
            except ValueError:
                raise ConfigError("PHASEKIT_THREADS must be an integer (got {!r})"
                                  "".format(env))
        return jobs


def limit_initial_data(profile):
    """Volume fractions and phase densities the oscillating profiles
    concentrate on.

    The plateau fractions are ``theta`` and ``1 - theta``. Each ramp
    contributes mass of the other phase to either half; it is reassigned so
    that the mixture density equals the mean of the profile.

    Returns
    -------
    alpha_p, alpha_m, rho_p, rho_m : float
    """
    if not isinstance(profile, TwoValueProfile):
        raise ConfigError("limit initial data need a two-value profile")
    theta, jump = profile.theta, profile.v_plus - profile.v_minus
    # two ramps, each lending half of its width to the minus plateau
    shift = 2.0 * RAMP_HALF_MASS * jump * profile.delta
    rho_m = profile.v_minus + shift / theta
    rho_p = profile.v_plus - shift / (1.0 - theta)
    return 1.0 - theta, theta, rho_p, rho_m


class ConvergenceReport(object):
    """Distances between the NSK measures and the BN measure per member.

    ``distances[n]``, ``wasserstein[n]`` and ``u_errors[n]`` are series over
    ``times``; ``sup_distance[n]`` and ``sup_u_error[n]`` their maxima.
    """

    def __init__(self, n_list, times):
        self.n_list = list(n_list)
        self.times = np.asarray(times, dtype=float)
        self.distances = {}
        self.wasserstein = {}
        self.u_errors = {}
        self.members = {}
        self.bn = None
        self.monotone_distance = None
        self.monotone_velocity = None
        self.shadow_constant = None
        self.failed = []

    @property
    def sup_distance(self):
        return {n: float(np.max(v)) for n, v in self.distances.items()}

    @property
    def sup_u_error(self):
        return {n: float(np.max(v)) for n, v in self.u_errors.items()}

    @property
    def completed(self):
        return [n for n in self.n_list if n in self.distances]

    def summary(self):
        return {
            'n_list': self.n_list,
            'completed': self.completed,
            'failed': self.failed,
            'sup_distance': {str(n): v for n, v in self.sup_distance.items()},
            'sup_u_error': {str(n): v for n, v in self.sup_u_error.items()},
            'monotone_distance': self.monotone_distance,
            'monotone_velocity': self.monotone_velocity,
            'shadow_constant': self.shadow_constant,
        }

    def __repr__(self):
        return 'ConvergenceReport(n_list=%r, completed=%r)' % (
            self.n_list, self.completed)


def _is_monotone(values, slack):
    return all(b <= (1.0 + slack) * a + 1e-12 for a, b in zip(values, values[1:]))


def _run_member(config, solver, n, u0):
    rho0 = make_oscillating_initial(config.profile, n, config.grid, bounds=solver.bounds)
    initial = FluidState.from_density(rho0, u0, config.params,
                                      backend=solver.helmholtz_backend)
    return nsk_run(initial, config.params, solver)


def _run_limit(config, solver, u0):
    alpha_p, _, rho_p, rho_m = limit_initial_data(config.profile)
    initial = BNState.from_fields(alpha_p, rho_p, rho_m, u0, config.params,
                                  config.grid, backend=solver.helmholtz_backend)
    return bn_run(initial, config.params, solver, integrator=config.integrator,
                  **config.picard_options)


def compare(report, n, nsk_traj, bn_traj, dictionary):
    """Fill the series of member `n` into `report`."""
    box = dictionary.support_box
    if len(nsk_traj.snapshots) != len(bn_traj.snapshots) or not np.allclose(
            nsk_traj.times, bn_traj.times, rtol=0, atol=1e-12):
        raise ConfigError("member n={} and the BN run have different snapshot "
                          "times".format(n))
    dist, wass, uerr = [], [], []
    for fluid, mixture in zip(nsk_traj.snapshots, bn_traj.snapshots):
        theta_n = measures.empirical_from_state(fluid.rho, support_box=box)
        theta_bar = measures.two_dirac_from_bn(mixture, support_box=box)
        dist.append(measures.distance(theta_n, theta_bar, dictionary))
        wass.append(measures.wasserstein_average(theta_n, theta_bar))
        uerr.append(float(np.max(np.abs(fluid.u - mixture.u))))
    report.distances[n] = np.array(dist)
    report.wasserstein[n] = np.array(wass)
    report.u_errors[n] = np.array(uerr)


def run_family(config):
    """Run one BN job and one NSK job per oscillation count, in parallel.

    Returns
    -------
    ConvergenceReport

    Raises
    ------
    FamilyAborted
        When any member fails; the report of the completed members is on
        ``.partial``.
    """
    solver = config.shared_solver()
    u0 = config.velocity.sample(config.grid)
    jobs = [None] + list(config.n_list)
    results = {}
    errors = {}
    futures = {}
    logger.info("homogenization family n_list=%s on N=%d with %d workers",
                config.n_list, config.grid.n_points, config.workers(len(jobs)))
    with ThreadPoolExecutor(max_workers=config.workers(len(jobs))) as pool:
        for n in jobs:
            if n is None:
                future = pool.submit(_run_limit, config, solver, u0)
            else:
                future = pool.submit(_run_member, config, solver, n, u0)
            futures[future] = n
        for future in as_completed(futures):
            n = futures[future]
            try:
                results[n] = future.result()
            except PhasekitError as e:
                errors[n] = e
                continue
            logger.info("family member %s finished",
                        'bn' if n is None else 'n=%d' % n)

    bn_traj = results.get(None)
    times = bn_traj.times if bn_traj is not None else []
    report = ConvergenceReport(config.n_list, times)
    report.bn = bn_traj
    dictionary = measures.TestDictionary(solver.bounds, modes=config.dict_modes,
                                         degree=config.dict_degree)
    # assemble in n order whatever the completion order was
    for n in config.n_list:
        if n in results:
            report.members[n] = results[n]
            if bn_traj is not None:
                compare(report, n, results[n], bn_traj, dictionary)
    if errors:
        report.failed = ['bn' if n is None else n for n in errors]
        first = errors[sorted(errors, key=lambda k: -1 if k is None else k)[0]]
        raise FamilyAborted(
            "family aborted: {} member(s) failed; first failure: {}"
            "".format(len(errors), first), partial=report)

    sup_d = [report.sup_distance[n] for n in config.n_list]
    sup_u = [report.sup_u_error[n] for n in config.n_list]
    report.monotone_distance = _is_monotone(sup_d, config.monotone_slack)
    report.monotone_velocity = _is_monotone(sup_u, config.monotone_slack)
    if not (report.monotone_distance and report.monotone_velocity):
        logger.warning("family is not monotone in n within %.0f%% slack: "
                       "distances %s, velocity errors %s",
                       100 * config.monotone_slack, sup_d, sup_u)

    floor = config.grid.spacing
    report.shadow_constant = max(
        report.sup_distance[n] / (report.distances[n][0] + floor) for n in config.n_list)
    logger.info("sup_t distance <= C (initial distance + h) holds with C = %.4g",
                report.shadow_constant)
    return report


def refinement_runs(build_initial, params, solver, n_points, levels=3,
                    **run_options):
    """One problem at `levels` resolutions, halving ``h`` and ``dt`` each time.

    Parameters
    ----------
    build_initial : callable
        ``build_initial(grid)`` returns the initial FluidState or BNState
        on a :class:`phasekit.torus.PeriodicGrid`.
    params : PhysicalParams
    solver : SolverConfig
        Settings of the coarsest run.
    n_points : int
        Grid size of the coarsest run.
    levels : int, optional
    **run_options
        Passed to :func:`phasekit.bn.bn_run` for two-phase problems.

    Returns
    -------
    list of Trajectory
        Every step is stored, so the time quadrature of
        :func:`kinetic_consistency` refines together with the runs.
    """
    if levels < 2:
        raise ConfigError("a refinement study needs at least two levels")
    runs = []
    for level in range(levels):
        grid = torus.PeriodicGrid(n_points * 2 ** level)
        config = solver.replace(dt=solver.dt / 2 ** level, snapshot_every=1,
                                snapshot_interval=0.0)
        initial = build_initial(grid)
        logger.info("refinement level %d: N=%d dt=%.3g", level, grid.n_points,
                    config.dt)
        if isinstance(initial, BNState):
            runs.append(bn_run(initial, params, config, **run_options))
        else:
            runs.append(nsk_run(initial, params, config))
    return runs


def kinetic_consistency(trajectories, test_functions=None):
    """Kinetic-equation residuals of runs at successive refinements.

    Parameters
    ----------
    trajectories : sequence of Trajectory
        Same problem, each run with half the grid spacing and time step of
        the previous one (see :func:`refinement_runs`). NSK runs are
        paired through their empirical measures, BN runs through their
        two-Dirac measures. Runs that do not store every step give a time
        quadrature error that does not shrink with the step.
    test_functions : sequence of KineticTest, optional
        Defaults to :func:`phasekit.measures.smoke_tests` over the run's
        time window.

    Returns
    -------
    dict
        ``labels``, ``residuals`` (one row per trajectory) and ``orders``
        (observed orders per test function).
    """
    if not trajectories:
        raise ConfigError("kinetic_consistency needs at least one trajectory")
    rows = []
    labels = None
    for traj in trajectories:
        if len(traj.snapshots) < 3:
            raise ConfigError("{!r} stores fewer than three snapshots; the "
                              "velocity and flux series are missing".format(traj))
        if len(traj.snapshots) < traj.steps + 1:
            logger.warning("%r stores %d of %d steps; the kinetic residual "
                           "will not refine with the step", traj,
                           len(traj.snapshots), traj.steps + 1)
        series = measures.trajectory_series(traj)
        times = series[1]
        tests = test_functions or measures.smoke_tests(times[0], times[-1])
        labels = [t.label for t in tests]
        rows.append([abs(measures.kinetic_residual(*series, test=t,
                                                   eos=traj.params.eos,
                                                   mu=traj.params.mu))
                     for t in tests])
    residuals = np.array(rows)
    orders = (observed_order(residuals[:, j]) for j in range(residuals.shape[1]))
    return {
        'labels': labels,
        'residuals': residuals.tolist(),
        'orders': [o.tolist() for o in orders],
    }
