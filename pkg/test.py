from __future__ import print_function, division, absolute_import

import io
import json
import os
import types

import numpy as np
import pytest
from scipy.linalg import expm

import phasekit
from phasekit import bn, cli, config, diagnostics, eos, harness, main, measures, nsk, reports, torus, utils
from phasekit.bn import BNState
from phasekit.eos import CustomLaw, Polytropic, VanDerWaals
from phasekit.nsk import FluidState, PhysicalParams, SineProfile, SolverConfig, TwoValueProfile


def vdw(gamma=2.0):
    # reference law: A = 1, B = 3, R = 1, T* = 2
    return VanDerWaals(1.0, 3.0, 1.0, 2.0, gamma=gamma)


def make_params(law=None, mu=0.1, kappa=1e-3, gamma=2.0):
    return PhysicalParams(mu, kappa, gamma, law or vdw())


def make_solver(m0=1.0, dt=1e-4, t_end=0.01, **kwargs):
    kwargs.setdefault('cfl', 0.5)
    return SolverConfig.from_m0(m0, dt=dt, t_end=t_end, **kwargs)


def sine_state(params, n_points=128, mean=1.2, amplitude=0.2, u=0.0):
    grid = torus.PeriodicGrid(n_points)
    rho = grid.sample(lambda x: mean + amplitude * np.sin(2 * np.pi * x))
    return FluidState.from_density(rho, np.full(n_points, u), params)


### torus ###

def test_helmholtz_analytic_mode():
    grid = torus.PeriodicGrid(256)
    x = grid.nodes
    rho = 1.0 + np.sin(2 * np.pi * x)
    c = torus.helmholtz_solve(rho, 1.0, 1.0)
    exact = 1.0 + np.sin(2 * np.pi * x) / (1.0 + 4 * np.pi ** 2)
    assert np.max(np.abs(c - exact)) / np.max(np.abs(exact)) <= 1e-10
    assert torus.helmholtz_residual(c, rho, 1.0, 1.0) < 1e-10


def test_helmholtz_central_second_order():
    errors = []
    for n in (64, 128, 256):
        x = torus.PeriodicGrid(n).nodes
        rho = 1.0 + np.sin(2 * np.pi * x)
        c = torus.helmholtz_solve(rho, 1.0, 1.0, backend='central')
        exact = 1.0 + np.sin(2 * np.pi * x) / (1.0 + 4 * np.pi ** 2)
        errors.append(np.max(np.abs(c - exact)))
    orders = diagnostics.observed_order(errors)
    assert np.all(np.abs(orders - 2.0) < 0.2), orders


def test_central_helmholtz_residual_is_truncation_error():
    residuals = []
    for n in (64, 128):
        x = torus.PeriodicGrid(n).nodes
        rho = 1.0 + np.sin(2 * np.pi * x)
        c = torus.helmholtz_solve(rho, 1.0, 1.0, backend='central')
        residuals.append(torus.helmholtz_residual(c, rho, 1.0, 1.0))
    assert residuals[0] > 1e-6
    assert 3.5 < residuals[0] / residuals[1] < 4.5


@pytest.mark.parametrize('backend', torus.BACKENDS)
def test_helmholtz_keeps_the_mean(backend):
    x = torus.PeriodicGrid(128).nodes
    rho = 1.2 + 0.4 * np.cos(2 * np.pi * 3 * x) + 0.1 * np.sin(2 * np.pi * 17 * x)
    c = torus.helmholtz_solve(rho, 1e-3, 2.0, backend=backend)
    assert abs(torus.mean(c) - torus.mean(rho)) <= 1e-12


def test_helmholtz_rejects_nonpositive_coefficients():
    with pytest.raises(utils.ConfigError):
        torus.helmholtz_solve(np.ones(16), 0.0, 1.0)


def test_cyclic_tridiagonal_matches_dense():
    rng = np.random.RandomState(0)
    n = 12
    lower, upper = rng.uniform(-1, 0, n), rng.uniform(-1, 0, n)
    diag = 3.0 + rng.uniform(0, 1, n)
    rhs = rng.normal(size=n)
    dense = np.diag(diag)
    for i in range(n):
        dense[i, (i - 1) % n] += lower[i]
        dense[i, (i + 1) % n] += upper[i]
    x = torus.solve_cyclic_tridiagonal(lower, diag, upper, rhs)
    assert np.allclose(x, np.linalg.solve(dense, rhs), atol=1e-12)


@pytest.mark.parametrize('backend, tol', [('spectral', 1e-10), ('central', 1e-2)])
def test_derivative_of_sine(backend, tol):
    x = torus.PeriodicGrid(128).nodes
    f = np.sin(2 * np.pi * x)
    d1 = torus.derivative(f, backend=backend)
    d2 = torus.derivative(f, order=2, backend=backend)
    assert np.max(np.abs(d1 - 2 * np.pi * np.cos(2 * np.pi * x))) < tol * 2 * np.pi
    assert np.max(np.abs(d2 + 4 * np.pi ** 2 * f)) < tol * 4 * np.pi ** 2


def test_derivative_rejects_unknown_backend():
    with pytest.raises(utils.ConfigError):
        torus.derivative(np.ones(8), backend='chebyshev')


def test_primitive_inverts_derivative():
    x = torus.PeriodicGrid(64).nodes
    f = np.cos(2 * np.pi * x) + np.sin(4 * np.pi * x)
    F = torus.primitive(f)
    assert abs(torus.mean(F)) < 1e-14
    assert np.allclose(torus.derivative(F, backend='spectral'), f, atol=1e-12)
    with pytest.raises(utils.ConfigError):
        torus.primitive(f + 1.0)


@pytest.mark.parametrize('k', [0, 1, 2])
def test_sobolev_norm_of_a_mode(k):
    x = torus.PeriodicGrid(64).nodes
    f = np.sin(2 * np.pi * 3 * x)
    expected = np.sqrt(0.5 * (1 + (6 * np.pi) ** 2) ** k)
    assert abs(torus.sobolev_norm(f, k) - expected) < 1e-10 * expected
    if k == 0:
        assert abs(torus.l2_norm(f) - expected) < 1e-12


def test_dealias_two_thirds_rule():
    x = torus.PeriodicGrid(256).nodes
    low = np.sin(2 * np.pi * 10 * x)
    high = np.sin(2 * np.pi * 100 * x)
    assert np.allclose(torus.dealias(low + high), low, atol=1e-12)


def test_elliptic_constant_bounded():
    x = torus.PeriodicGrid(128).nodes
    samples = [1.0 + 0.1 * np.sin(2 * np.pi * m * x) for m in (1, 2, 3)]
    constant = torus.elliptic_constant(samples, 1e-2, 1.0)
    assert 0 < constant <= max(1.0, 1.0 / 1e-2) + 1e-12


def test_periodic_interpolate_at_nodes():
    grid = torus.PeriodicGrid(32)
    f = np.cos(2 * np.pi * grid.nodes)
    assert np.allclose(torus.periodic_interpolate(f, grid.nodes + 1.0), f, atol=1e-14)


@pytest.mark.parametrize('n', [4, 7, 9])
def test_grid_rejects_bad_sizes(n):
    with pytest.raises(utils.ConfigError):
        torus.PeriodicGrid(n)


### eos ###

@pytest.mark.parametrize('law', [vdw(), Polytropic(1.0, 2.0, gamma=1.0),
                                 Polytropic(0.5, 3.0)])
def test_potential_relations(law):
    r = np.linspace(0.5, 2.0, 7)
    e = 1e-5
    assert abs(float(law.pressure_potential(law.r_ref))) < 1e-14
    dw = (law.pressure_potential(r + e) - law.pressure_potential(r - e)) / (2 * e)
    assert np.allclose(dw, law.chemical_potential(r), atol=1e-6)
    d2w = (law.chemical_potential(r + e) - law.chemical_potential(r - e)) / (2 * e)
    assert np.allclose(d2w * r, law.d_pressure(r), atol=1e-6)


def test_custom_law_quadrature_matches_closed_form():
    custom = CustomLaw(lambda r: r ** 2, lambda r: 2 * r)
    closed = Polytropic(1.0, 2.0)
    r = np.array([0.3, 1.0, 1.7, 2.5])
    assert np.allclose(custom.pressure_potential(r), closed.pressure_potential(r), atol=1e-8)
    assert custom.with_gamma(2.0).gamma == 2.0


def test_van_der_waals_pressure_value():
    assert float(VanDerWaals(1.0, 1.0, 1.0, 0.2).pressure(0.5)) == pytest.approx(-0.05, abs=1e-15)


def test_artificial_pressure():
    law = Polytropic(1.0, 2.0, gamma=2.0)
    assert float(law.artificial_pressure(2.0)) == 4.0 + 4.0
    assert float(law.d_artificial_pressure(2.0)) == 4.0 + 4.0


@pytest.mark.parametrize('law, r', [(vdw(), 3.0), (vdw(), -0.1), (Polytropic(1, 2), np.nan)])
def test_domain_errors(law, r):
    with pytest.raises(utils.DomainError):
        law.pressure(r)


def test_chemical_potential_needs_positive_density():
    with pytest.raises(utils.DomainError):
        Polytropic(1, 2).chemical_potential(0.0)


def test_admissibility_gate():
    law = VanDerWaals(1.0, 1.0, 1.0, 0.2, gamma=2.0)
    assert law.critical_temperature() > 0.2
    accepted = eos.check_admissibility(law, (0.0, 0.999))
    assert accepted.admissible
    assert accepted.spinodal is not None

    rejected = eos.check_admissibility(law.with_gamma(0.0), (0.0, 0.999))
    assert not rejected.admissible
    b1, b2 = rejected.spinodal
    assert b1 < 0.3 < b2
    assert len(rejected.artificial_roots) == 2
    assert json.loads(json.dumps(rejected.to_dict()))['spinodal'] == [b1, b2]


def test_admissibility_rejects_bad_interval():
    with pytest.raises(utils.ConfigError):
        eos.check_admissibility(vdw(), (1.0, 4.0))


def test_maxwell_states():
    law = VanDerWaals(1.0, 1.0, 1.0, 0.2)
    r_v, r_l, p_sat = eos.maxwell_states(law)
    b1, b2 = eos.check_admissibility(law, (0.0, 0.999)).spinodal
    assert r_v < b1 < b2 < r_l
    assert p_sat > 0
    assert abs(float(law.pressure(r_v)) - p_sat) < 1e-8
    assert abs(float(law.pressure(r_l)) - p_sat) < 1e-8
    assert abs(float(law.chemical_potential(r_l) - law.chemical_potential(r_v))) < 1e-7


def test_maxwell_states_need_a_spinodal():
    with pytest.raises(utils.ConfigError):
        eos.maxwell_states(Polytropic(1.0, 2.0))


def test_quadratic_growth_constant():
    # W = r^2 - r, sup r^2 / (1 + W) on (0, 2] is 4/3 at r = 2
    assert abs(eos.quadratic_growth_constant(Polytropic(1.0, 2.0), 2.0) - 4.0 / 3.0) < 1e-12


def test_eos_from_dict_roundtrip():
    law = vdw(gamma=1.5)
    assert eos.eos_from_dict(law.to_dict()) == law
    with pytest.raises(utils.ConfigError):
        eos.eos_from_dict({'type': 'ideal_gas'})


### nsk ###

def test_physical_params_carry_gamma():
    params = make_params(law=vdw(gamma=0.0), gamma=2.0)
    assert params.eos.gamma == 2.0
    with pytest.raises(utils.ConfigError):
        make_params(gamma=0.0)


def test_solver_config_guard_rails():
    solver = make_solver(m0=2.0)
    assert solver.bounds == (0.25, 4.0)
    with pytest.raises(utils.ConfigError):
        make_solver(m0=0.5)
    with pytest.raises(utils.ConfigError):
        make_solver(capillarity_form='local')


@pytest.mark.parametrize('n', [1, 2, 4])
def test_two_value_profile_mean(n):
    profile = TwoValueProfile(0.8, 1.6, 0.5, 0.25)
    grid = torus.PeriodicGrid(256)
    rho = nsk.make_oscillating_initial(profile, n, grid, bounds=(0.5, 2.0))
    assert abs(torus.mean(rho) - profile.mean()) < 1e-12
    assert rho.min() >= 0.8 - 1e-15 and rho.max() <= 1.6 + 1e-15


def test_compressed_profile_matches_single_period():
    profile = TwoValueProfile(0.8, 1.6, 0.5, 0.25)
    grid = torus.PeriodicGrid(256)
    one = nsk.make_oscillating_initial(profile, 1, grid)
    four = nsk.make_oscillating_initial(profile, 4, grid)
    nodes = np.arange(256)
    assert np.allclose(four, one[(4 * nodes) % 256], rtol=0, atol=1e-15)


def test_two_value_profile_resolution():
    profile = TwoValueProfile(0.8, 1.6, 0.5, 0.25)
    grid = torus.PeriodicGrid(256)
    profile.check_resolution(16, grid)
    with pytest.raises(utils.ConfigError):
        nsk.make_oscillating_initial(profile, 32, grid)
    with pytest.raises(utils.ConfigError):
        nsk.make_oscillating_initial(profile, 1, grid, bounds=(1.0, 2.0))
    with pytest.raises(utils.ConfigError):
        TwoValueProfile(0.8, 1.6, 0.2, 0.25)


def test_constant_state_is_steady():
    params = make_params()
    solver = make_solver()
    state = sine_state(params, n_points=64, amplitude=0.0, u=0.3)
    for _ in range(50):
        state = nsk.nsk_step(state, params, solver, dt=1e-4)
    assert np.max(np.abs(state.rho - 1.2)) < 1e-13
    assert np.max(np.abs(state.u - 0.3)) < 1e-13


@pytest.mark.parametrize('form', nsk.CAPILLARITY_FORMS)
def test_conservation_over_a_thousand_steps(form):
    params = make_params()
    solver = make_solver(capillarity_form=form)
    state = sine_state(params, n_points=64)
    h = 1.0 / 64
    mass0, momentum0 = np.sum(state.rho) * h, np.sum(state.rho * state.u) * h
    for _ in range(1000):
        state = nsk.nsk_step(state, params, solver, dt=1e-4)
    assert abs(np.sum(state.rho) * h - mass0) <= 1e-12
    assert abs(np.sum(state.rho * state.u) * h - momentum0) <= 1e-10


def test_capillarity_forms_agree():
    params = make_params()
    state = sine_state(params, n_points=256)
    a = nsk.nsk_step(state, params, make_solver(), dt=1e-4)
    b = nsk.nsk_step(state, params, make_solver(capillarity_form='order_parameter'), dt=1e-4)
    assert np.max(np.abs(a.u - b.u)) < 1e-6


def test_stable_dt_respects_cfl():
    params = make_params()
    state = sine_state(params, n_points=64, u=1.0)
    solver = make_solver(dt=1.0)
    speed = 1.0 + float(np.max(params.eos.sound_speed(state.rho)))
    assert abs(nsk.stable_dt(state, params, solver) - 0.5 / 64 / speed) < 1e-15


def test_dispersion_matches_linearization():
    """A single seeded mode follows the 2x2 linearization with the
    non-local correction. Polytropic(1, 2), gamma = 1, kappa = 0.01."""
    law = Polytropic(1.0, 2.0)
    params = PhysicalParams(0.1, 0.01, 1.0, law)
    solver = make_solver(upwind=0.0)
    eps, dt, steps = 1e-4, 2e-5, 1000
    grid = torus.PeriodicGrid(256)
    rho = 1.0 + eps * np.sin(2 * np.pi * grid.nodes)
    state = FluidState.from_density(rho, np.zeros(256), params)
    for _ in range(steps):
        state = nsk.nsk_step(state, params, solver, dt=dt)
    coefficient = 2.0 / 256 * np.sum((state.rho - 1.0) * np.sin(2 * np.pi * grid.nodes))
    matrix = nsk.linearized_mode_matrix(params, 1.0, 1)
    expected = eps * np.real(expm(matrix * dt * steps)[0, 0])
    assert abs(coefficient - expected) <= 1e-3 * abs(expected)


def test_linearized_rates():
    params = make_params(law=Polytropic(1.0, 2.0), gamma=1.0)
    rates = nsk.linearized_rates(params, 1.0, 2)
    k = 4 * np.pi
    assert np.isclose(np.sum(rates).real, -params.mu * k * k)
    assert np.all(rates.real <= 0)


@pytest.fixture(scope='module')
def smooth_runs():
    """The reference smooth run: Polytropic(1, 2), gamma = 2, mean density 2,
    at two resolutions."""
    params = make_params(law=Polytropic(1.0, 2.0))
    runs = []
    for n_points, dt in ((128, 1e-4), (256, 5e-5)):
        solver = make_solver(m0=2.0, dt=dt, t_end=0.02, upwind=0.0)
        state = sine_state(params, n_points=n_points, mean=2.0)
        runs.append(nsk.nsk_run(state, params, solver))
    return runs


def test_energy_balance(smooth_runs):
    coarse, fine = smooth_runs
    report = diagnostics.balance_check(coarse.records, gamma=coarse.params.gamma)
    assert report['passed'], report
    assert report['energy_residual_rel'] <= 0.01
    assert coarse.records[-1].energy <= coarse.records[0].energy * (1 + 1e-6)
    refined = diagnostics.balance_check(fine.records)
    assert refined['energy_residual'] < report['energy_residual']


@pytest.fixture(scope='module')
def refined_runs():
    """The reference smooth run at (N, dt) = (64, 2e-4), (128, 1e-4), (256, 5e-5),
    every step stored."""
    params = make_params(law=Polytropic(1.0, 2.0))
    solver = make_solver(m0=2.0, dt=2e-4, t_end=0.02, upwind=0.0)

    def initial(grid):
        rho = grid.sample(lambda x: 2.0 + 0.2 * np.sin(2 * np.pi * x))
        return FluidState.from_density(rho, np.zeros(grid.n_points), params)

    return harness.refinement_runs(initial, params, solver, 64)


def test_refinement_runs_halve_the_step(refined_runs):
    assert [r.final.n_points for r in refined_runs] == [64, 128, 256]
    assert [r.steps for r in refined_runs] == [100, 200, 400]
    assert all(len(r.snapshots) == r.steps + 1 for r in refined_runs)
    with pytest.raises(utils.ConfigError):
        harness.refinement_runs(None, None, None, 64, levels=1)


def test_energy_residual_is_first_order(refined_runs):
    # explicit convection makes the balance residual O(dt) once h^2 is small
    residuals = [diagnostics.balance_check(r.records)['energy_residual']
                 for r in refined_runs]
    assert np.all(diagnostics.observed_order(residuals) >= 0.9), residuals
    assert residuals[-1] <= 0.01 * refined_runs[-1].records[0].energy


def test_bd_entropy_envelope(smooth_runs):
    report = diagnostics.balance_check(smooth_runs[0].records, gamma=2.0)
    assert report['envelope_ok']
    assert report['envelope_rate'] > 0


def test_trajectory_summary(smooth_runs):
    traj = smooth_runs[0]
    summary = traj.summary()
    assert summary['kind'] == 'nsk'
    assert summary['snapshots'] == len(traj.snapshots) == 3
    assert traj.final.t == pytest.approx(0.02, abs=1e-14)
    assert len(traj.records) == traj.steps + 1


def test_snapshot_interval_schedule():
    params = make_params()
    solver = make_solver(t_end=0.005, snapshot_interval=0.001)
    traj = nsk.nsk_run(sine_state(params, n_points=32), params, solver,
                       stop_times=[0.0025])
    expected = [0.0, 0.001, 0.002, 0.0025, 0.003, 0.004, 0.005]
    assert np.allclose(traj.times, expected, atol=1e-12)


def test_inadmissible_run_is_refused():
    params = make_params(law=VanDerWaals(1.0, 3.0, 1.0, 0.5), gamma=0.1)
    with pytest.raises(utils.AdmissibilityError) as excinfo:
        nsk.nsk_run(sine_state(params, n_points=32), params, make_solver())
    assert excinfo.value.exit_code == 3


def test_failed_run_keeps_partial_trajectory():
    params = make_params()
    solver = make_solver(t_end=0.01)
    calls = []

    def step(state, dt):
        calls.append(dt)
        if len(calls) == 3:
            raise utils.BoundsViolation("rho left the guard rails")
        return nsk.nsk_step(state, params, solver, dt=dt)

    with pytest.raises(utils.BoundsViolation) as excinfo:
        nsk.integrate(sine_state(params, n_points=32), params, solver, step, 'nsk')
    partial = excinfo.value.partial
    assert len(partial.records) == 3
    assert partial.snapshots[-1].t == partial.records[-1].t


### diagnostics ###

def test_energy_of_constant_state():
    params = make_params()
    state = sine_state(params, n_points=32, amplitude=0.0, u=0.5)
    expected = float(params.eos.pressure_potential(1.2)) + 0.5 * 1.2 * 0.25
    assert abs(diagnostics.energy(state, params) - expected) < 1e-12


def test_drift_identity():
    rho = 1.0 + 0.3 * np.sin(2 * np.pi * torus.PeriodicGrid(256).nodes)
    assert diagnostics.drift_identity_residual(rho, 0.1) <= 1e-10


def test_effective_viscous_flux():
    x = torus.PeriodicGrid(64).nodes
    params = types.SimpleNamespace(mu=0.1, eos=Polytropic(1.0, 2.0, gamma=0.0))
    state = types.SimpleNamespace(rho=np.ones(64), u=np.sin(2 * np.pi * x))
    sigma = diagnostics.effective_viscous_flux(state, params)
    assert np.allclose(sigma, 0.1 * 2 * np.pi * np.cos(2 * np.pi * x) - 1.0, atol=1e-12)


def test_balance_check_needs_two_records():
    params = make_params()
    record = diagnostics.record(sine_state(params, n_points=32), params)
    with pytest.raises(ValueError):
        diagnostics.balance_check([record])


def test_balance_check_honors_closure_tolerance(smooth_runs):
    records = list(smooth_runs[0].records)
    fields = dict((k, getattr(records[-1], k)) for k in records[-1].__slots__)
    fields['closure_drift'] = 1e-6
    records[-1] = diagnostics.DiagnosticsRecord(**fields)
    report = diagnostics.balance_check(records)
    assert report['max_closure_drift'] == 1e-6
    assert report['tolerances']['closure'] == 1e-10
    assert not report['passed']
    loose = diagnostics.BalanceTolerances(closure=1e-4)
    assert diagnostics.balance_check(records, loose)['passed']


def test_observed_order():
    assert np.allclose(diagnostics.observed_order([4.0, 1.0, 0.25]), [2.0, 2.0])
    assert np.allclose(diagnostics.refinement_ratio([4.0, 1.0, 0.25]), [4.0, 4.0])


### bn ###

def bn_state(n_points=16, seed=1):
    rng = np.random.RandomState(seed)
    alpha = rng.uniform(0.1, 0.9, n_points)
    return BNState(0.0, alpha, 1.0 - alpha, rng.uniform(1.2, 1.6, n_points),
                   rng.uniform(0.8, 1.0, n_points), np.zeros(n_points), np.ones(n_points))


def test_relaxation_forms_agree():
    params = make_params()
    state = bn_state()
    for a, b in zip(bn.relaxation_rhs(state, params),
                    bn.relaxation_rhs_mixture(state, params)):
        assert np.max(np.abs(a - b)) <= 1e-12


def test_relaxation_conserves_phase_masses():
    params = make_params()
    state = bn_state()
    alpha, rho_p, rho_m = bn.relax(state.alpha_p, state.rho_p, state.rho_m, params, 1e-3)
    assert np.allclose(alpha * rho_p, state.alpha_p * state.rho_p, rtol=1e-14)
    assert np.allclose((1 - alpha) * rho_m, state.alpha_m * state.rho_m, rtol=1e-14)


def _relaxation_oracle(alpha, rho_p, rho_m, law, mu, t_end, dt):
    def rhs(y):
        a, rp, rm = y
        jump = float(law.artificial_pressure(rp) - law.artificial_pressure(rm)) / mu
        return np.array([a * (1 - a) * jump, -rp * (1 - a) * jump, rm * a * jump])

    y = np.array([alpha, rho_p, rho_m])
    for _ in range(int(round(t_end / dt))):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * dt * k1)
        k3 = rhs(y + 0.5 * dt * k2)
        k4 = rhs(y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def test_homogeneous_relaxation_matches_ode():
    """mu = 1, Polytropic(1, 2), gamma = 1, alpha = 0.5, rho+ = 2, rho- = 1."""
    law = Polytropic(1.0, 2.0)
    params = PhysicalParams(1.0, 1e-3, 1.0, law)
    solver = make_solver(dt=1e-4, t_end=0.2, cfl=1.0)
    grid = torus.PeriodicGrid(8)
    state = BNState.from_fields(0.5, 2.0, 1.0, 0.0, params, grid)
    for _ in range(2000):
        state = bn.bn_step(state, params, solver, dt=1e-4)
    oracle = _relaxation_oracle(0.5, 2.0, 1.0, params.eos, 1.0, 0.2, 1e-6)
    assert abs(state.alpha_p[0] - oracle[0]) <= 1e-6
    assert abs(state.rho_p[0] - oracle[1]) <= 1e-6
    assert abs(state.rho_m[0] - oracle[2]) <= 1e-6


def test_relaxation_equilibrates_monotonically():
    law = Polytropic(1.0, 2.0, gamma=1.0)
    params = PhysicalParams(1.0, 1e-3, 1.0, law)
    alpha, rho_p, rho_m = np.array([0.5]), np.array([2.0]), np.array([1.0])
    jumps = []
    for _ in range(3500):
        alpha, rho_p, rho_m = bn.relax(alpha, rho_p, rho_m, params, 1e-3)
        jumps.append(abs(float(law.artificial_pressure(rho_p) - law.artificial_pressure(rho_m))))
    assert all(b <= a for a, b in zip(jumps, jumps[1:]))
    assert jumps[-1] < 1e-6
    assert abs(rho_p[0] - 1.5) < 1e-6


def test_pure_phase_matches_nsk():
    """alpha+ = 1 turns BN into NSK (reduced: N = 128, t in [0, 0.01])."""
    params = make_params()
    solver = make_solver(t_end=0.01, snapshot_interval=0.005)
    fluid = sine_state(params, n_points=128)
    mixture = BNState.from_fields(1.0, fluid.rho, 1.0, fluid.u, params,
                                  torus.PeriodicGrid(128))
    a = nsk.nsk_run(fluid, params, solver)
    b = bn.bn_run(mixture, params, solver)
    assert np.allclose(a.times, b.times)
    for s, m in zip(a.snapshots, b.snapshots):
        assert np.max(np.abs(s.rho - m.rho_p)) <= 1e-8
        assert np.max(np.abs(s.u - m.u)) <= 1e-8


def _mixture_mass(state):
    return np.mean(state.alpha_p * state.rho_p + state.alpha_m * state.rho_m)


def test_mixture_mass_over_a_thousand_steps():
    params = make_params()
    grid = torus.PeriodicGrid(64)
    x = grid.nodes
    state = BNState.from_fields(0.5 + 0.3 * np.cos(2 * np.pi * x), 1.6, 0.8,
                                0.2 * np.sin(2 * np.pi * x), params, grid)
    solver = make_solver()
    mass0 = _mixture_mass(state)
    for _ in range(1000):
        state = bn.bn_step(state, params, solver, dt=1e-4)
    assert abs(_mixture_mass(state) - mass0) <= 1e-10 * mass0
    assert state.closure_drift < 1e-10
    # the phases exchanged volume, so the check is not vacuous
    assert np.max(np.abs(state.rho_p - 1.6)) > 1e-3


def test_equal_densities_stay_equal():
    params = make_params()
    grid = torus.PeriodicGrid(64)
    x = grid.nodes
    fluid = sine_state(params, n_points=64, u=0.0)
    fluid = FluidState.from_density(fluid.rho, 0.1 * np.sin(2 * np.pi * x), params)
    mixture = BNState.from_fields(0.5 + 0.3 * np.cos(2 * np.pi * x), fluid.rho,
                                  fluid.rho, fluid.u, params, grid)
    solver = make_solver()
    for _ in range(200):
        fluid = nsk.nsk_step(fluid, params, solver, dt=1e-4)
        mixture = bn.bn_step(mixture, params, solver, dt=1e-4)
        assert np.max(np.abs(mixture.rho_p - mixture.rho_m)) <= 1e-9
    assert np.max(np.abs(mixture.rho_p - fluid.rho)) <= 1e-8
    assert np.max(np.abs(mixture.u - fluid.u)) <= 1e-8
    # the volume fraction moved with the flow
    assert np.max(np.abs(mixture.alpha_p - (0.5 + 0.3 * np.cos(2 * np.pi * x)))) > 1e-5


def test_negative_volume_fractions():
    alpha_p = np.array([0.5, -1e-13, 1.0])
    clipped_p, clipped_m, clip = bn._clip_fractions(alpha_p, 1.0 - alpha_p, 0.0)
    assert clip == pytest.approx(1e-13)
    assert clipped_p.min() == 0.0
    with pytest.raises(utils.BoundsViolation):
        bn._clip_fractions(np.array([0.5, -1e-9]), np.array([0.5, 1.0]), 0.0)


def test_transport_translates():
    grid = torus.PeriodicGrid(128)
    a0 = 1.0 + 0.5 * np.sin(2 * np.pi * grid.nodes)
    times = np.linspace(0.0, 0.1, 11)
    u = [np.full(128, 0.3)] * len(times)
    f = [np.zeros(128)] * len(times)
    result = bn.transport_with_source(a0, times, u, f)
    exact = 1.0 + 0.5 * np.sin(2 * np.pi * (grid.nodes - 0.03))
    assert np.max(np.abs(result.final - exact)) < 1e-6
    assert len(result.flow_map) == 10


def test_transport_source_growth():
    a0 = np.full(16, 2.0)
    times = np.linspace(0.0, 0.5, 6)
    result = bn.transport_with_source(a0, times, [np.zeros(16)] * 6, [np.full(16, -0.4)] * 6)
    assert np.allclose(result.final, 2.0 * np.exp(-0.2), rtol=1e-12)
    with pytest.raises(utils.ConfigError):
        bn.transport_with_source(a0, times[::-1], [np.zeros(16)] * 6, [np.zeros(16)] * 6)


def test_picard_at_equilibrium_converges_at_once():
    law = Polytropic(1.0, 2.0, gamma=1.0)
    rho0, alpha0 = np.full(8, 1.3), np.full(8, 0.4)
    pi = law.artificial_pressure(rho0)
    times = np.linspace(0, 0.1, 5)
    result = bn.picard_bn(alpha0, rho0, times, [np.zeros(8)] * 5, [pi] * 5, law)
    assert result.iterations == 1
    assert np.allclose(result.rho[-1], rho0)


def test_picard_matches_ode():
    law = Polytropic(1.0, 2.0, gamma=1.0)
    rho0, alpha0, pi = 1.5, 0.5, 2.0
    times = np.linspace(0.0, 0.1, 101)
    result = bn.picard_bn(np.full(8, alpha0), np.full(8, rho0), times,
                          [np.zeros(8)] * 101, [np.full(8, pi)] * 101, law, mu=1.0)
    assert all(r < 1 for r in result.ratios)

    rho, dt = rho0, 1e-5
    for _ in range(10000):
        def g(r):
            return r * (pi - float(law.artificial_pressure(r)))
        k1 = g(rho)
        k2 = g(rho + 0.5 * dt * k1)
        k3 = g(rho + 0.5 * dt * k2)
        k4 = g(rho + dt * k3)
        rho += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    assert abs(result.rho[-1][0] - rho) < 1e-5
    # alpha rho is invariant along the ODE
    assert abs(result.alpha[-1][0] - alpha0 * rho0 / rho) < 1e-5


def test_picard_without_contraction_fails():
    law = Polytropic(1.0, 2.0, gamma=1.0)
    with pytest.raises(utils.FixedPointError) as excinfo:
        bn.picard_bn(np.full(8, 0.5), np.full(8, 1.5), [0.0, 0.1], [np.zeros(8)] * 2,
                     [np.full(8, 1.0)] * 2, law, max_iter=1)
    assert excinfo.value.exit_code == 5


def test_picard_step_close_to_splitting():
    params = make_params()
    grid = torus.PeriodicGrid(64)
    x = grid.nodes
    state = BNState.from_fields(0.5 + 0.1 * np.cos(2 * np.pi * x), 1.6, 0.8,
                                0.1 * np.sin(2 * np.pi * x), params, grid)
    solver = make_solver()
    dt = 1e-4
    split = bn.bn_step(state, params, solver, dt=dt)
    fixed = bn.bn_step(state, params, solver, dt=dt, integrator='picard')
    assert np.max(np.abs(split.alpha_p - fixed.alpha_p)) <= 10 * dt
    assert np.max(np.abs(split.rho_p - fixed.rho_p)) <= 10 * dt
    assert np.max(np.abs(split.rho_m - fixed.rho_m)) <= 10 * dt
    assert fixed.closure_drift < 1e-6


def test_bn_rejects_unknown_integrator():
    params = make_params()
    with pytest.raises(utils.ConfigError):
        bn.bn_step(bn_state(), params, make_solver(), integrator='rk4')


### measures ###

def test_measures_have_unit_mass():
    rho = 1.0 + 0.2 * np.sin(2 * np.pi * torus.PeriodicGrid(32).nodes)
    theta = measures.empirical_from_state(rho, bounds=(0.5, 2.0))
    assert theta.support_box == (0.5, 2.0)
    assert abs(np.sum(theta.weights) - 1.0) < 1e-14
    dirac = measures.two_dirac_from_bn(bn_state(n_points=32), support_box=(0.5, 2.0))
    assert dirac.atoms.shape == (32, 2)
    with pytest.raises(utils.ConfigError):
        measures.empirical_from_state(rho, support_box=(1.0, 2.0))


def test_dictionary_layout():
    dictionary = measures.TestDictionary((0.5, 2.0), modes=4, degree=4)
    assert len(dictionary) == 45
    assert dictionary.labels[:6] == ['one*xi^0', 'one*xi^1', 'one*xi^2', 'one*xi^3',
                                     'one*xi^4', 'cos1*xi^0']


def test_pure_phase_measures_coincide():
    rho = np.full(16, 1.3)
    state = BNState(0.0, np.ones(16), np.zeros(16), rho, np.full(16, 0.9),
                    np.zeros(16), rho)
    box = (0.5, 2.0)
    dictionary = measures.TestDictionary(box)
    a = measures.empirical_from_state(rho, support_box=box)
    b = measures.two_dirac_from_bn(state, support_box=box)
    assert measures.distance(a, b, dictionary) < 1e-12
    assert measures.wasserstein_average(a, b) < 1e-12
    with pytest.raises(utils.ConfigError):
        measures.distance(a, measures.empirical_from_state(rho), dictionary)


def test_wasserstein_average():
    state = BNState(0.0, np.full(4, 0.5), np.full(4, 0.5), np.full(4, 2.0),
                    np.full(4, 0.5), np.zeros(4), np.ones(4))
    a = measures.empirical_from_state(np.ones(4), support_box=(0.1, 3.0))
    b = measures.two_dirac_from_bn(state, support_box=(0.1, 3.0))
    assert measures.wasserstein_average(a, b) == pytest.approx(0.75)


def test_kinetic_residual_of_constant_state_vanishes():
    params = make_params()
    solver = make_solver(t_end=0.005, snapshot_interval=0.001)
    traj = nsk.nsk_run(sine_state(params, n_points=32, amplitude=0.0), params, solver)
    out = harness.kinetic_consistency([traj])
    assert out['labels'] == [t.label for t in measures.smoke_tests(0, 1)]
    assert max(abs(r) for r in out['residuals'][0]) < 1e-9


def test_kinetic_consistency_needs_snapshots(smooth_runs):
    with pytest.raises(utils.ConfigError):
        harness.kinetic_consistency([smooth_runs[0]] * 0)
    short = nsk.Trajectory('nsk', smooth_runs[0].params, smooth_runs[0].config)
    short.snapshots = smooth_runs[0].snapshots[:2]
    with pytest.raises(utils.ConfigError):
        harness.kinetic_consistency([short])


def test_kinetic_residual_refines(refined_runs):
    out = harness.kinetic_consistency(refined_runs)
    assert len(out['residuals']) == 3
    for label, orders in zip(out['labels'], out['orders']):
        assert min(orders) >= 1.0, (label, out['residuals'])


### harness ###

def family(profile, n_list, n_points, t_end=0.002, **kwargs):
    params = make_params()
    solver = make_solver(dt=2e-4, t_end=t_end)
    kwargs.setdefault('dict_modes', 4)
    return harness.FamilyConfig(n_list, profile, nsk.VelocityProfile(), params, solver,
                                torus.PeriodicGrid(n_points), **kwargs)


def test_limit_initial_data_keeps_the_mean():
    profile = TwoValueProfile(0.8, 1.6, 0.5, 0.25)
    alpha_p, alpha_m, rho_p, rho_m = harness.limit_initial_data(profile)
    assert alpha_p + alpha_m == 1.0
    assert abs(alpha_p * rho_p + alpha_m * rho_m - profile.mean()) < 1e-14
    assert 0.8 < rho_m < rho_p < 1.6


def test_family_config_validation():
    profile = TwoValueProfile(0.8, 1.6, 0.5, 0.25)
    with pytest.raises(utils.ConfigError, match='strictly increasing'):
        family(profile, [4, 2], 256)
    with pytest.raises(utils.ConfigError, match='too coarse'):
        family(profile, [1, 8], 256)


def test_family_workers(monkeypatch):
    config = family(TwoValueProfile(0.8, 1.6, 0.5, 0.25), [1, 2], 128)
    monkeypatch.setenv('PHASEKIT_THREADS', '2')
    assert config.workers(3) == 2
    monkeypatch.setenv('PHASEKIT_THREADS', 'many')
    with pytest.raises(utils.ConfigError):
        config.workers(3)


def test_degenerate_family():
    profile = TwoValueProfile(1.2, 1.2, 0.5, 0.25)
    report = harness.run_family(family(profile, [2, 4, 8], 64, resolution_factor=8))
    assert report.completed == [2, 4, 8]
    assert max(report.sup_distance.values()) <= 1e-9
    assert max(report.sup_u_error.values()) <= 1e-9


@pytest.fixture(scope='module')
def two_value_report():
    """Reference profile (0.8, 1.6), theta = 0.5, n in (4, 8, 16) at N = 1024
    over the default horizon t_end = 0.1."""
    return harness.run_family(family(TwoValueProfile(0.8, 1.6, 0.5, 0.25), [4, 8, 16],
                                     1024, t_end=0.1))


def test_family_report(two_value_report):
    report = two_value_report
    assert report.completed == [4, 8, 16]
    assert len(report.times) == harness.DEFAULT_SNAPSHOTS + 1
    assert all(report.u_errors[n][0] == 0.0 for n in report.n_list)
    sup = [report.sup_distance[n] for n in report.n_list]
    # oscillations above the dictionary modes average out
    assert sup[0] > sup[1] > sup[2]
    assert sup[2] < 0.25 * sup[0]
    assert report.monotone_distance
    # velocity errors stay small but need not decrease along the sequence
    assert max(report.sup_u_error.values()) < 0.1
    assert json.loads(json.dumps(report.summary()))['completed'] == [4, 8, 16]


def test_initial_agreement_propagates(two_value_report):
    report = two_value_report
    floor = 1.0 / 1024
    assert report.shadow_constant < 10
    for n in report.n_list:
        assert report.sup_distance[n] <= report.shadow_constant * (
            report.distances[n][0] + floor) * (1 + 1e-12)
        assert report.distances[n][0] <= report.sup_distance[n]


### config ###

def write_config(tmpdir, text, name='run.cfg'):
    path = os.path.join(str(tmpdir), name)
    with io.open(path, 'w', encoding='utf-8') as f:
        f.write(text)
    return path


def test_minimal_config_fills_defaults(tmpdir):
    loaded = config.load_config(write_config(tmpdir, "# nothing to change\n"))
    assert loaded.to_dict() == config.DEFAULTS
    assert loaded.physical_params().gamma == 2.0


def test_config_values_are_coerced(tmpdir):
    loaded = config.load_config(write_config(tmpdir, """
[physics]
kappa = 1e-3
[harness]
n_list = 2, 4, 8
[eos]
type = polytropic
"""))
    assert loaded['physics']['kappa'] == 1e-3
    assert loaded['harness']['n_list'] == [2, 4, 8]
    assert isinstance(loaded.eos(), Polytropic)


@pytest.mark.parametrize('text, where', [
    ("[physics]\ngamma = -1\n", 'line 2: [physics].gamma'),
    ("[physics]\nmu = 0.1\nviscosity = 1\n", 'line 3'),
    ("[harness]\nn_list = 8, 4\n", '[harness].n_list'),
    ("[grid]\nn_points = 100.5\n", '[grid].n_points'),
    ("[mesh]\n", 'line 1'),
    ("[output]\nformats = csv, xml\n", '[output].formats'),
])
def test_config_errors_name_the_key(tmpdir, text, where):
    with pytest.raises(utils.ConfigError) as excinfo:
        config.load_config(write_config(tmpdir, text))
    assert where in str(excinfo.value)
    assert excinfo.value.exit_code == 2


def test_diagnostics_tolerances_from_config(tmpdir):
    loaded = config.load_config(write_config(
        tmpdir, "[diagnostics]\nclosure_tol = 1.0e-4\nmass_tol = 1.0e-8\n"))
    tol = loaded.balance_tolerances()
    assert tol.closure == 1e-4
    assert tol.mass == 1e-8
    assert tol.energy_rel == config.DEFAULTS['diagnostics']['energy_rel_tol']


def test_zero_gamma_is_not_runnable(tmpdir):
    loaded = config.load_config(write_config(tmpdir, "[physics]\ngamma = 0\n"))
    assert loaded.eos().gamma == 0.0
    with pytest.raises(utils.ConfigError, match=r'\[physics\].gamma'):
        loaded.physical_params()


def test_meta_roundtrip(tmpdir):
    loaded = config.load_config(write_config(tmpdir, "[time]\nt_end = 0.5\n"))
    reports.write_meta(str(tmpdir), loaded, status='ok')
    again = config.load_config(os.path.join(str(tmpdir), 'meta.json'))
    assert again == loaded


### reports ###

def test_trajectory_files_roundtrip(tmpdir, smooth_runs):
    traj = smooth_runs[0]
    reports.write_trajectory(str(tmpdir), traj)
    records = reports.read_diagnostics(str(tmpdir))
    assert [r.as_row() for r in records] == [r.as_row() for r in traj.records]
    snapshots = reports.read_snapshots(str(tmpdir))
    assert [t for t, _ in snapshots] == list(traj.times)
    assert np.array_equal(snapshots[-1][1]['rho'], traj.final.rho)


### command line ###

SMALL_RUN = """
[grid]
n_points = 64
[time]
dt = 1e-3
t_end = 0.004
"""

SMALL_FAMILY = """
[grid]
n_points = 128
[time]
dt = 5e-4
t_end = 0.002
[harness]
n_list = 1, 2
dict_modes = 2
dict_degree = 2
"""


def _run_cli(*argv):
    """Run the console script in-process and return its exit code."""
    return cli.cli(list(argv))


def test_cli_version(capsys):
    assert _run_cli('-V') == 0
    out, _ = capsys.readouterr()
    assert out.strip() == phasekit.__version__


def test_cli_rejects_quiet_and_verbose():
    with pytest.raises(cli.InvalidSelection):
        _run_cli('check-eos', '-q', '-v')


def test_cli_needs_a_command():
    assert _run_cli('-q') == 2


def test_cli_config_error(tmpdir):
    path = write_config(tmpdir, "[physics]\ngamma = -1\n")
    assert _run_cli('simulate-nsk', '-q', '--config', path) == 2


@pytest.mark.parametrize('gamma, code', [(2.0, 0), (0.0, 3)])
def test_cli_check_eos(tmpdir, capsys, gamma, code):
    path = write_config(tmpdir, """
[physics]
gamma = {}
[eos]
type = van_der_waals
A = 1
B = 1
R = 1
T_star = 0.2
""".format(gamma))
    assert _run_cli('check-eos', '-q', '--config', path) == code
    out, _ = capsys.readouterr()
    report = json.loads(out)
    assert report['admissibility']['admissible'] == (code == 0)
    b1, b2 = report['admissibility']['spinodal']
    assert b1 < 0.3 < b2
    assert report['maxwell']['vapor'] < b1


def test_cli_inadmissible_run(tmpdir):
    path = write_config(tmpdir, "[physics]\ngamma = 0.1\n[eos]\nT_star = 0.5\n" + SMALL_RUN)
    assert _run_cli('simulate-nsk', '-q', '--config', path,
                    '--out', os.path.join(str(tmpdir), 'out')) == 3


def test_cli_simulate_nsk_and_diagnose(tmpdir, capsys):
    path = write_config(tmpdir, SMALL_RUN)
    out = os.path.join(str(tmpdir), 'nsk')
    assert _run_cli('simulate-nsk', '-q', '--config', path, '--out', out) == 0
    for name in ('meta.json', 'diagnostics.csv', 'diagnostics_extra.csv',
                 'snapshots.csv', 'snapshot_00000.csv', 'snapshot_00001.csv'):
        assert os.path.exists(os.path.join(out, name)), name
    with io.open(os.path.join(out, 'diagnostics.csv')) as f:
        assert f.readline().strip() == ','.join(diagnostics.CSV_COLUMNS)
    meta = json.load(io.open(os.path.join(out, 'meta.json')))
    assert meta['status'] == 'ok'
    assert meta['provenance'].startswith('phasekit ')
    capsys.readouterr()

    code = _run_cli('diagnose', '-q', '--out', out)
    report = json.loads(capsys.readouterr()[0])
    assert code == (0 if report['balance']['passed'] else 4)
    assert report['max_helmholtz_residual'] < 1e-8
    assert report['snapshots'] == 2


def test_cli_diagnose_reports_a_failed_balance(tmpdir, capsys):
    path = write_config(tmpdir, SMALL_RUN + "[diagnostics]\nenergy_rel_tol = 1.0e-300\n")
    out = os.path.join(str(tmpdir), 'tight')
    assert _run_cli('simulate-nsk', '-q', '--config', path, '--out', out) == 0
    capsys.readouterr()
    assert _run_cli('diagnose', '-q', '--out', out) == 4
    report = json.loads(capsys.readouterr()[0])
    assert not report['balance']['passed']


def test_cli_json_tables(tmpdir, capsys):
    path = write_config(tmpdir, SMALL_RUN + "[output]\nformats = json\n")
    out = os.path.join(str(tmpdir), 'json')
    assert _run_cli('simulate-nsk', '-q', '--config', path, '--out', out) == 0
    assert not os.path.exists(os.path.join(out, 'diagnostics.csv'))
    table = json.load(io.open(os.path.join(out, 'diagnostics.json')))
    assert table['columns'] == list(diagnostics.CSV_COLUMNS)
    assert len(reports.read_diagnostics(out)) == len(table['rows'])
    snapshots = reports.read_snapshots(out)
    assert len(snapshots) == 2
    assert set(snapshots[0][1]) == set(reports.NSK_SNAPSHOT_COLUMNS)
    capsys.readouterr()
    assert _run_cli('diagnose', '-q', '--out', out) in (0, 4)
    assert json.loads(capsys.readouterr()[0])['snapshots'] == 2


def test_cli_simulate_bn(tmpdir):
    path = write_config(tmpdir, SMALL_RUN)
    out = os.path.join(str(tmpdir), 'bn')
    assert _run_cli('simulate-bn', '-q', '--config', path, '--out', out) == 0
    with io.open(os.path.join(out, 'snapshot_00000.csv')) as f:
        assert f.readline().strip() == ','.join(reports.BN_SNAPSHOT_COLUMNS)


def test_cli_diagnose_without_run(tmpdir):
    assert _run_cli('diagnose', '-q', '--out', str(tmpdir)) == 2


def test_failed_run_is_persisted(tmpdir, monkeypatch):
    real_run = main.nsk_run

    def failing_run(initial, params, solver):
        traj = real_run(initial, params, solver.replace(t_end=2e-3))
        raise utils.BoundsViolation("rho left the guard rails", partial=traj)

    monkeypatch.setattr(main, 'nsk_run', failing_run)
    out = os.path.join(str(tmpdir), 'aborted')
    path = write_config(tmpdir, SMALL_RUN)
    assert _run_cli('simulate-nsk', '-q', '--config', path, '--out', out) == 4
    meta = json.load(io.open(os.path.join(out, 'meta.json')))
    assert meta['status'].startswith('aborted')
    assert len(reports.read_diagnostics(out)) == 3


def test_cli_homogenize_is_deterministic(tmpdir):
    path = write_config(tmpdir, SMALL_FAMILY)
    outputs = []
    for name in ('first', 'second'):
        out = os.path.join(str(tmpdir), name)
        assert _run_cli('homogenize', '-q', '--config', path, '--out', out) == 0
        for member in ('n_0001', 'n_0002', 'bn'):
            assert os.path.exists(os.path.join(out, member, 'diagnostics.csv'))
        with io.open(os.path.join(out, 'n_0002', 'distances.csv')) as f:
            assert f.readline().strip() == 't,dict_distance,wasserstein_avg'
        with io.open(os.path.join(out, 'n_0002', 'u_errors.csv')) as f:
            assert f.readline().strip() == 't,u_err'
        with io.open(os.path.join(out, 'convergence.csv'), 'rb') as f:
            outputs.append(f.read())
    assert outputs[0] == outputs[1]
    header = outputs[0].decode().splitlines()[0].split(',')
    assert header[:3] == ['n', 'sup_t_measure_dist', 'sup_t_u_err']
