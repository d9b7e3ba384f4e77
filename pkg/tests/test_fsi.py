import logging
from fractions import Fraction

import numpy as np
import pytest

import lubelastic as lb
from lubelastic.errors import ParameterError, RegimeError
from lubelastic.fsi import _solver_for


def make_params(eps=0.125, kappa=2, n=16, m=16, dt=1e-3, dim=1, theta=1.0,
                forcing=None, **model_kw):
    grid = lb.PeriodicGrid(dim=dim, n=n)
    vnodes = lb.VerticalNodes(m)
    model = lb.ModelParams(eps=eps, kappa=Fraction(kappa), theta=theta, dim=dim,
                           **model_kw)
    if forcing is None:
        forcing = lb.harmonic_ramp_forcing(grid, vnodes, wavevector=(1,) * dim,
                                           ramp_time=0.05)
    return lb.FsiParams(model=model, grid=grid, vnodes=vnodes, dt=dt, forcing=forcing)


class TestParams:
    def test_coupled_regime_enforced(self):
        grid = lb.PeriodicGrid(dim=1, n=16)
        vn = lb.VerticalNodes(12)
        model = lb.ModelParams(eps=0.25, kappa=2, tau=Fraction(0), dim=1)
        with pytest.raises(RegimeError):
            lb.FsiParams(model=model, grid=grid, vnodes=vn, dt=1e-3,
                         forcing=lb.zero_forcing(grid, vn))

    def test_forcing_shape_checked(self):
        grid = lb.PeriodicGrid(dim=1, n=16)
        vn = lb.VerticalNodes(12)
        model = lb.ModelParams(eps=0.25, kappa=2, dim=1)
        bad = lambda t: (np.zeros((16, 12)),)  # too few components
        with pytest.raises(ParameterError):
            lb.FsiParams(model=model, grid=grid, vnodes=vn, dt=1e-3, forcing=bad)


class TestModeOperator:
    def test_symmetric_positive_definite(self):
        params = make_params(m=12)
        op = lb.assemble_mode_system(params, 2)
        A = op.matrix
        assert np.max(np.abs(A - A.T)) < 1e-10 * np.max(np.abs(A))
        assert np.min(np.linalg.eigvalsh(A)) > 0

    def test_viscous_block_positive_semidefinite(self):
        # dense eigensolve on a small vertical resolution
        params = make_params(m=12)
        for k in (0, 1, 3, 8):
            op = lb.assemble_mode_system(params, k)
            eig = np.linalg.eigvalsh(op.viscous_block)
            assert eig.min() > -1e-12 * max(1.0, eig.max())

    def test_small_dt_limit_is_mass_structure(self):
        params = make_params(m=12)
        solver = _solver_for(params)
        limit = None
        gaps = []
        for dt in (1e-4, 1e-5, 1e-6):
            op = lb.assemble_mode_system(params, 2, dt)
            limit = (solver.coef["fluid_mass"] * op.mass_block
                     + solver.coef["rho_s_mass"] * np.outer(op.trace_vector, op.trace_vector))
            gaps.append(np.linalg.norm(dt * op.matrix - limit) / np.linalg.norm(limit))
        assert gaps[0] / gaps[1] == pytest.approx(10.0, rel=0.1)
        assert gaps[1] / gaps[2] == pytest.approx(10.0, rel=0.1)

    def test_factorization_cached(self):
        params = make_params(m=12)
        op1 = lb.assemble_mode_system(params, 1)
        op2 = lb.assemble_mode_system(params, 1)
        assert op1 is op2

    def test_wavenumber_outside_lattice(self):
        params = make_params(n=16)
        with pytest.raises(ParameterError):
            lb.assemble_mode_system(params, 9)

    def test_zero_mode_plate_harmonic_stays_zero(self):
        # zero-horizontal-mean forcing never moves the mean plate harmonic
        params = make_params(dt=1e-3)
        traj = lb.run_fsi(params, 0.02, snapshot_stride=5)
        for state in traj.states:
            assert abs(state.eta.hat[0]) < 1e-20


class TestStep:
    def test_zero_forcing_stays_zero(self):
        grid = lb.PeriodicGrid(dim=1, n=16)
        vn = lb.VerticalNodes(12)
        model = lb.ModelParams(eps=0.25, kappa=2, dim=1)
        params = lb.FsiParams(model=model, grid=grid, vnodes=vn, dt=1e-3,
                              forcing=lb.zero_forcing(grid, vn))
        traj = lb.run_fsi(params, 0.01, snapshot_stride=1)
        for state in traj.states:
            assert all(np.max(np.abs(c.values)) == 0.0 for c in state.v)
            assert np.max(np.abs(state.eta.values)) == 0.0
        assert np.all(traj.ledger.lhs() == 0.0)

    def test_mode_locality(self):
        params = make_params(dt=1e-3)
        traj = lb.run_fsi(params, 0.05, snapshot_stride=50)
        state = traj.states[-1]
        eh = np.abs(state.eta.hat)
        active = eh[1]
        others = np.delete(eh, 1)
        assert active > 0
        assert np.max(others) < 1e-12 * active
        vh = np.abs(state.v[0].hat)
        assert np.max(np.delete(vh, 1, axis=0)) < 1e-12 * np.max(vh)

    def test_linearity_in_forcing(self):
        grid = lb.PeriodicGrid(dim=1, n=16)
        vn = lb.VerticalNodes(12)
        scale = 3.0
        states = []
        for amp in (1.0, scale):
            model = lb.ModelParams(eps=0.125, kappa=2, theta=1.0, dim=1)
            forcing = lb.harmonic_ramp_forcing(grid, vn, amplitude=amp, ramp_time=0.05)
            params = lb.FsiParams(model=model, grid=grid, vnodes=vn, dt=1e-3,
                                  forcing=forcing)
            states.append(lb.run_fsi(params, 0.02, snapshot_stride=20).states[-1])
        a, b = states
        for ca, cb in zip(a.v, b.v):
            ref = np.max(np.abs(cb.values))
            assert np.max(np.abs(scale * ca.values - cb.values)) <= 1e-12 * max(ref, 1e-300)
        assert np.max(np.abs(scale * a.eta.values - b.eta.values)) <= 1e-12 * np.max(np.abs(b.eta.values))
        assert np.max(np.abs(scale * a.p.values - b.p.values)) <= 1e-11 * np.max(np.abs(b.p.values))

    def test_depth_varying_vertical_force_gives_hydrostatic_pressure(self):
        # a horizontally uniform vertical force drives no flow; the recovered
        # zero-mode pressure is its running integral, pinned to zero at the top
        grid = lb.PeriodicGrid(dim=1, n=16)
        vn = lb.VerticalNodes(16)
        model = lb.ModelParams(eps=0.25, kappa=2, dim=1)
        zero = np.zeros(grid.shape + (vn.m,))
        profile = np.broadcast_to(vn.nodes**2, grid.shape + (vn.m,)).copy()

        def forcing(t):
            return (zero, profile)

        params = lb.FsiParams(model=model, grid=grid, vnodes=vn, dt=1e-3,
                              forcing=forcing)
        traj = lb.run_fsi(params, 0.01, snapshot_stride=10)
        state = traj.states[-1]
        assert all(np.max(np.abs(c.values)) < 1e-18 for c in state.v)
        # d/dy p = eps * y^2 with p(0) = 0 gives p = eps * (y^3 + 1)/3 - eps/3
        ref = model.eps * (vn.nodes**3) / 3.0
        got = state.p.values[0]
        assert np.max(np.abs(got - ref)) < 1e-12

    def test_step_fsi_round_trip(self):
        params = make_params(dt=1e-3)
        traj = lb.run_fsi(params, 0.005, snapshot_stride=1)
        state = lb.step_fsi(params, traj.states[-2])
        ref = traj.states[-1]
        assert np.max(np.abs(state.eta.values - ref.eta.values)) < 1e-14
        assert state.t == pytest.approx(ref.t)

    def test_energy_identity_each_step(self):
        params = make_params(dt=5e-4, theta=0.5)
        traj = lb.run_fsi(params, 0.05, snapshot_stride=100)
        led = traj.ledger
        scale = np.maximum(np.abs(led.lhs(include_numerical=True)), np.abs(led.work))
        resid = led.identity_residual()
        assert np.max(np.abs(resid) / np.maximum(scale, 1e-300)) < 1e-12
        # dropping the nonnegative numerical dissipation leaves slack >= 0
        assert np.min(led.slack()) >= -1e-15 * np.max(scale)


class TestCollocationCrossCheck:
    def test_matches_independent_discretization(self):
        # drive one wavenumber with the same force through the production
        # solver and a primal velocity/pressure collocation oracle; the two
        # vertical discretizations must agree to spectral accuracy
        from oracles import CollocationModeOracle
        from lubelastic.fsi import smooth_ramp

        grid = lb.PeriodicGrid(dim=1, n=16)
        vn = lb.VerticalNodes(20)
        model = lb.ModelParams(eps=0.125, kappa=Fraction(2), theta=1.0, dim=1)
        dt, nsteps = 1e-3, 100
        forcing = lb.harmonic_ramp_forcing(grid, vn, amplitude=1.0, ramp_time=0.05)
        params = lb.FsiParams(model=model, grid=grid, vnodes=vn, dt=dt, forcing=forcing)
        traj = lb.run_fsi(params, nsteps * dt, snapshot_stride=10)

        oracle = CollocationModeOracle(vn, model, k=1, dt=dt)
        mode_coeff = -0.5j  # coefficient of e^{2 pi i x} in sin(2 pi x)
        eta_oracle = {}
        for i in range(nsteps):
            t_new = (i + 1) * dt
            oracle.step(mode_coeff * smooth_ramp(t_new, 0.05) * np.ones(vn.m))
            eta_oracle[round(t_new, 9)] = oracle.eta

        for state in traj.states[1:]:
            ref = eta_oracle[round(state.t, 9)]
            got = state.eta.hat[1]
            assert abs(got - ref) <= 1e-8 * abs(ref)
        v1_final = traj.states[-1].v[0].hat[1]
        rel = np.max(np.abs(v1_final - oracle.v1)) / np.max(np.abs(oracle.v1))
        assert rel <= 1e-8


class TestInvariantsAndRuns:
    def test_state_invariants(self):
        params = make_params(dt=1e-3, theta=1.0)
        traj = lb.run_fsi(params, 0.05, snapshot_stride=10)
        info = traj.states[-1].check_invariants(params)
        assert info["horizontal_top_trace"] == 0.0

    def test_dt_self_convergence_first_order(self):
        results = []
        for dt in (2e-3, 1e-3, 5e-4):
            params = make_params(dt=dt, theta=1.0)
            traj = lb.run_fsi(params, 0.1, snapshot_stride=10**9, with_pressure=False)
            results.append(traj.states[-1].eta.values)
        d1 = np.max(np.abs(results[0] - results[1]))
        d2 = np.max(np.abs(results[1] - results[2]))
        assert 1.7 <= d1 / d2 <= 2.3

    def test_energy_scales_like_thickness_cubed(self, caplog):
        # at kappa = 3 the rescaled horizon keeps t_phys = t, and the total
        # energy at fixed horizon contracts by ~8 per thickness halving
        caplog.set_level(logging.ERROR, logger="lubelastic.fsi")

        def terminal(eps):
            params = make_params(eps=eps, kappa=3, n=8, m=12, dt=5e-4)
            traj = lb.run_fsi(params, 0.1, snapshot_stride=10**9, with_pressure=False)
            return traj.ledger.lhs()[-1]

        ratio = terminal(1 / 32) / terminal(1 / 64)
        assert 6.0 <= ratio <= 10.0

    def test_three_dimensional_step(self):
        params = make_params(dim=2, n=8, m=10, dt=1e-3)
        traj = lb.run_fsi(params, 0.01, snapshot_stride=5)
        traj.states[-1].check_invariants(params)
        assert len(traj.ledger) == 10

    def test_run_requires_integer_steps(self):
        params = make_params(dt=3e-3)
        with pytest.raises(ParameterError):
            lb.run_fsi(params, 0.01)

    def test_ledger_csv(self, tmp_path):
        params = make_params(dt=1e-3)
        traj = lb.run_fsi(params, 0.01, snapshot_stride=5)
        path = tmp_path / "ledger.csv"
        traj.ledger.to_csv(path)
        header = open(path).readline().strip().split(",")
        assert header[:4] == ["step", "t", "fluid_kinetic", "plate_kinetic"]
