import numpy as np
import pytest

from lubelastic import thinfilm as tf
from lubelastic.errors import ParameterError, PositivityError
from lubelastic.spectral import PeriodicField, PeriodicGrid, dealiased_product, spectral_derivative

from oracles import reynolds_fixed_point


@pytest.fixture
def grid():
    return PeriodicGrid(dim=1, n=64)


def one_plus_sin(grid, amp=0.3, k=1):
    x = grid.nodes[0]
    return PeriodicField(grid, 1.0 + amp * np.sin(2 * np.pi * k * x))


class TestModelValidation:
    def test_alpha_restricted(self):
        with pytest.raises(ParameterError):
            tf.ThinFilmModel(alpha=2)

    def test_linearized_forbids_potential(self):
        with pytest.raises(ParameterError):
            tf.ThinFilmModel(alpha=5, linearized=True, potential_dPhi=lambda e: e)


class TestRhs:
    def test_constant_profile_is_stationary(self, grid):
        model = tf.ThinFilmModel(alpha=3, v_D=2.0)
        eta = PeriodicField(grid, np.full(grid.shape, 1.5))
        assert np.max(np.abs(tf.rhs(model, eta).values)) < 1e-12

    def test_linearized_symbol(self):
        grid = PeriodicGrid(dim=1, n=16)
        model = tf.ThinFilmModel(alpha=5, c=2.0, linearized=True)
        eta = PeriodicField.from_function(grid, lambda x: np.cos(2 * np.pi * x))
        r = tf.rhs(model, eta)
        ref = -2.0 * (2 * np.pi) ** 6 * np.cos(2 * np.pi * grid.nodes[0])
        assert np.max(np.abs(r.values - ref)) < 1e-9 * np.max(np.abs(ref))

    def test_porous_medium_form(self, grid):
        # with mobility scale 4 the alpha=1 member is exactly d2/dx2(eta^4)
        model = tf.ThinFilmModel(alpha=1, mobility_scale=4.0)
        eta = one_plus_sin(grid, amp=0.1)
        r = tf.rhs(model, eta)
        eta4 = dealiased_product(eta, eta, eta, eta)
        oracle = spectral_derivative(eta4, 2)
        assert np.max(np.abs(r.values - oracle.values)) < 1e-10

    def test_rhs_zero_mean(self, grid):
        model = tf.ThinFilmModel(alpha=5, v_D=1.0,
                                 potential_dPhi=lambda eta: 0.3 * eta**2)
        r = tf.rhs(model, one_plus_sin(grid))
        assert abs(r.mean()) < 1e-13

    def test_positivity_guard(self, grid):
        model = tf.ThinFilmModel(alpha=3)
        eta = PeriodicField.from_function(grid, lambda x: np.sin(2 * np.pi * x))
        with pytest.raises(PositivityError):
            tf.rhs(model, eta)


class TestStep:
    @pytest.mark.parametrize("dt", [1e-3, 5e-4])
    def test_one_step_close_to_exact_factor(self, dt):
        grid = PeriodicGrid(dim=1, n=32)
        c = 1e-5
        model = tf.ThinFilmModel(alpha=5, c=c, linearized=True)
        eta0 = PeriodicField.from_function(grid, lambda x: np.cos(2 * np.pi * x))
        new = tf.step(model, tf.FilmState(eta0, 0.0), dt)
        factor = np.exp(-c * (2 * np.pi) ** 6 * dt)
        err = np.max(np.abs(new.eta.values - factor * eta0.values))
        assert err <= 10 * dt**2

    def test_zero_state_stays_zero(self, grid):
        model = tf.ThinFilmModel(alpha=5, c=1.0, linearized=True)
        state = tf.FilmState(PeriodicField.zeros(grid), 0.0)
        for _ in range(5):
            state = tf.step(model, state, 1e-3)
        assert np.max(np.abs(state.eta.values)) == 0.0

    def test_mass_conserved_per_step(self, grid):
        model = tf.ThinFilmModel(alpha=5, v_D=1.0)
        state = tf.FilmState(one_plus_sin(grid), 0.0)
        m0 = state.eta.mean()
        state = tf.step(model, state, 1e-7)
        assert abs(state.eta.mean() - m0) <= 1e-12 * (1 + abs(m0))

    def test_breakdown_reports_last_state(self, grid):
        model = tf.ThinFilmModel(alpha=5)
        state = tf.FilmState(one_plus_sin(grid), 0.0)
        # a floor above the profile minimum can never be honored
        with pytest.raises(PositivityError) as ei:
            tf.step(model, state, 1e-6, floor=0.9)
        assert ei.value.last_state is not None
        assert ei.value.last_state.eta.values.min() >= 0.5

    def test_dt_must_be_positive(self, grid):
        model = tf.ThinFilmModel(alpha=1)
        with pytest.raises(ParameterError):
            tf.step(model, tf.FilmState(one_plus_sin(grid), 0.0), 0.0)


MASS_CONFIGS = [
    dict(alpha=1, v_D=0.0, potential=None, dt=1e-5),
    dict(alpha=3, v_D=1.0, potential=None, dt=1e-6),
    dict(alpha=5, v_D=1.0, potential=lambda eta: 0.2 * eta, dt=1e-7),
]


class TestInvariants:
    @pytest.mark.parametrize("cfg", MASS_CONFIGS)
    def test_mass_conservation_along_run(self, grid, cfg):
        model = tf.ThinFilmModel(alpha=cfg["alpha"], v_D=cfg["v_D"],
                                 potential_dPhi=cfg["potential"])
        state = tf.FilmState(one_plus_sin(grid), 0.0)
        m0 = state.eta.mean()
        for _ in range(300):
            state = tf.step(model, state, cfg["dt"])
        assert abs(state.eta.mean() - m0) <= 1e-10 * (1 + abs(m0))

    def test_dissipation_bending_regime(self, grid):
        model = tf.ThinFilmModel(alpha=5)
        state = tf.FilmState(one_plus_sin(grid), 0.0)
        energy = tf.film_energy(model, state.eta)
        for _ in range(200):
            state = tf.step(model, state, 1e-7)
            new_energy = tf.film_energy(model, state.eta)
            assert new_energy <= energy + 1e-10 * (1 + abs(energy))
            assert state.eta.values.min() >= 0.1
            energy = new_energy

    def test_linearized_decay_rate_matches_symbol(self):
        # window chosen so the mode stays far above the transform noise floor
        grid = PeriodicGrid(dim=1, n=32)
        c = 1e-6
        k = 2
        eta0 = PeriodicField.from_function(grid, lambda x: np.cos(2 * np.pi * k * x))
        traj = tf.solve_linear_sixth(c, None, eta0, 0.5, 1e-3, snapshot_stride=100)
        amps = [abs(s.eta.hat[k]) for s in traj.states]
        times = traj.times
        rate = -np.log(amps[-1] / amps[0]) / (times[-1] - times[0])
        assert rate == pytest.approx(c * (2 * np.pi * k) ** 6, rel=1e-8)


class TestSolveLinearSixth:
    def test_single_mode_decay(self):
        grid = PeriodicGrid(dim=1, n=32)
        c = 1.0 / 3600.0
        lam = c * (2 * np.pi) ** 6
        eta0 = PeriodicField.from_function(grid, lambda x: np.cos(2 * np.pi * x))
        traj = tf.solve_linear_sixth(c, None, eta0, 0.5, 1e-3, snapshot_stride=500)
        ref = np.exp(-lam * 0.5) * eta0.values
        got = traj.states[-1].eta.values
        assert np.max(np.abs(got - ref)) < 1e-8 * np.max(np.abs(ref))

    def test_steady_limit_under_constant_source(self):
        grid = PeriodicGrid(dim=1, n=32)
        c = 1.0 / 3600.0
        lam = c * (2 * np.pi) ** 6
        source = PeriodicField.from_function(grid, lambda x: np.cos(2 * np.pi * x))
        traj = tf.solve_linear_sixth(c, source, PeriodicField.zeros(grid), 1.0,
                                     1e-3, snapshot_stride=100)
        for state in traj.states[1:]:
            # scalar benchmark: y' = -lam y + 1, y(t) = (1 - exp(-lam t))/lam
            ref = (1.0 - np.exp(-lam * state.t)) / lam
            got = state.eta.hat[1] * 2.0  # cosine amplitude
            assert got.real == pytest.approx(ref, rel=1e-10)

    def test_zero_data_zero_source(self):
        grid = PeriodicGrid(dim=1, n=32)
        traj = tf.solve_linear_sixth(0.5, None, PeriodicField.zeros(grid), 0.1, 1e-3)
        assert all(np.max(np.abs(s.eta.values)) == 0.0 for s in traj.states)

    def test_zero_mean_preserved(self):
        grid = PeriodicGrid(dim=1, n=32)
        source = PeriodicField.from_function(grid, lambda x: np.sin(4 * np.pi * x))
        traj = tf.solve_linear_sixth(1e-4, source, PeriodicField.zeros(grid), 0.2,
                                     1e-3, snapshot_stride=20)
        for s in traj.states:
            assert abs(s.eta.mean()) < 1e-15

    def test_time_grid_validation(self):
        grid = PeriodicGrid(dim=1, n=32)
        with pytest.raises(ParameterError):
            tf.solve_linear_sixth(1.0, None, PeriodicField.zeros(grid), 1.0, 0.3)


class TestStationaryPressure:
    def test_flat_profile_no_pressure(self, grid):
        eta = PeriodicField(grid, np.full(grid.shape, 2.0))
        p = tf.solve_reynolds_stationary(eta, 1.0)
        assert np.max(np.abs(p.values)) < 1e-12

    def test_linear_in_drift_speed(self, grid):
        eta = one_plus_sin(grid, amp=0.5)
        p1 = tf.solve_reynolds_stationary(eta, 1.0)
        p2 = tf.solve_reynolds_stationary(eta, 2.0)
        assert np.max(np.abs(p2.values - 2.0 * p1.values)) <= 1e-12 * np.max(np.abs(p2.values))

    def test_residual_small(self, grid):
        eta = one_plus_sin(grid, amp=0.5)
        p = tf.solve_reynolds_stationary(eta, 1.0)
        assert tf.reynolds_residual(eta, p, 1.0) < 1e-8
        assert abs(p.mean()) < 1e-13

    def test_against_fixed_point_oracle(self):
        grid = PeriodicGrid(dim=1, n=128)
        eta = one_plus_sin(grid, amp=0.5)
        p = tf.solve_reynolds_stationary(eta, 1.0)
        fine = 1024
        x = np.arange(fine) / fine
        oracle = reynolds_fixed_point(1.0 + 0.5 * np.sin(2 * np.pi * x), 1.0)
        sub = oracle[:: fine // grid.n]
        rel = np.sqrt(np.mean((p.values - sub) ** 2) / np.mean(sub**2))
        assert rel < 1e-8

    def test_rejects_nonpositive_profile(self, grid):
        eta = PeriodicField.from_function(grid, lambda x: np.sin(2 * np.pi * x))
        with pytest.raises(ParameterError):
            tf.solve_reynolds_stationary(eta, 1.0)


class TestFilmEnergy:
    def test_zero_field(self, grid):
        assert tf.film_energy(tf.ThinFilmModel(alpha=5), PeriodicField.zeros(grid)) == 0.0

    def test_bending_energy_of_cosine(self, grid):
        model = tf.ThinFilmModel(alpha=5)
        eta = PeriodicField.from_function(grid, lambda x: np.cos(2 * np.pi * x))
        assert tf.film_energy(model, eta) == pytest.approx((2 * np.pi) ** 4 / 4, rel=1e-12)

    def test_translation_invariance(self, grid):
        model = tf.ThinFilmModel(alpha=3)
        x = grid.nodes[0]
        e1 = tf.film_energy(model, PeriodicField(grid, np.sin(2 * np.pi * x)))
        e2 = tf.film_energy(model, PeriodicField(grid, np.sin(2 * np.pi * (x - 0.3))))
        assert e1 == pytest.approx(e2, rel=1e-12)
