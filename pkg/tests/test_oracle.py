import numpy as np
import pytest

from pulse_jcm import (
    DimensionError,
    ResolutionError,
    decaying_exponential_pulse,
    dominant_orthogonal_mode,
    gaussian_pulse,
    joint_pair_population,
    output_mode_decomposition,
    project_reduced_state,
    rising_exponential_pulse,
    single_excitation_solve,
    timebin_solve,
)

GAMMA = 1.0
TAU_OPT = 0.2686  # subtraction optimum under the intensity-std width convention


class TestSingleExcitation:
    def test_matched_decaying_pulse_closed_form(self):
        # u = sqrt(g) e^{-g t/2}: e(t) = -g t e^{-g t/2}, peak P_e = 4/e^2
        p = decaying_exponential_pulse(GAMMA, t_end=30.0)
        t = np.linspace(0.0, 30.0, 601)
        sol = single_excitation_solve(p, GAMMA, times=t)
        closed = -GAMMA * t * np.exp(-0.5 * GAMMA * t)
        assert np.abs(sol.excited - closed).max() < 1e-7
        assert sol.P_e.max() == pytest.approx(4.0 * np.exp(-2.0), abs=1e-6)

    def test_rising_pulse_inverts_emitter(self):
        # time-reversed emission: P_e -> 1 at the pulse end
        p = rising_exponential_pulse(GAMMA, t_end=0.0)
        t = np.linspace(-25.0, 0.0, 401)
        sol = single_excitation_solve(p, GAMMA, times=t)
        assert sol.P_e[-1] == pytest.approx(1.0, abs=1e-6)
        closed = np.exp(GAMMA * t)
        assert np.abs(sol.P_e - closed).max() < 1e-6

    def test_no_coupling_leaves_emitter_dark(self):
        p = gaussian_pulse(1.0)
        sol = single_excitation_solve(p, 0.0)
        assert np.abs(sol.excited).max() == 0.0

    def test_norm_bookkeeping(self):
        for gamma_refl in (0.0, 0.3):
            p = gaussian_pulse(1.0)
            sol = single_excitation_solve(p, GAMMA, gamma_refl)
            assert sol.norm_residual < 1e-8

    def test_output_norm_for_matched_pulse(self):
        # forward norm is exactly 1 for the matched pulse without reflection
        p = decaying_exponential_pulse(GAMMA, t_end=30.0)
        sol = single_excitation_solve(p, GAMMA)
        assert sol.output_norm == pytest.approx(1.0, abs=1e-7)


class TestTimeBin:
    def test_resolution_floor(self):
        p = gaussian_pulse(1.0)
        with pytest.raises(ResolutionError):
            timebin_solve(p, GAMMA, n_photons=1, M=100)

    def test_single_photon_matches_amplitude_equation(self):
        p = gaussian_pulse(1.0)
        errs = []
        for M in (500, 1000):
            state = timebin_solve(p, GAMMA, n_photons=1, M=M)
            sol = single_excitation_solve(p, GAMMA, times=state.pe_times)
            errs.append(np.abs(state.pe_series - sol.P_e).max())
        assert errs[0] < 0.05
        # first order in dt: doubling M roughly halves the error
        assert errs[1] < 0.65 * errs[0]

    def test_norm_conserved_without_reflection(self):
        p = gaussian_pulse(0.5)
        for n in (1, 2):
            state = timebin_solve(p, GAMMA, n_photons=n, M=600)
            assert abs(state.norm() - 1.0) < 1e-8

    def test_norm_conserved_with_reflection(self):
        p = gaussian_pulse(0.5)
        state = timebin_solve(p, GAMMA, gamma_refl=0.4, n_photons=2, M=600)
        assert abs(state.norm() - 1.0) < 1e-8
        assert state.vacuum_weight > 0.0

    def test_two_photon_amplitudes_symmetric(self):
        p = gaussian_pulse(0.5)
        state = timebin_solve(p, GAMMA, n_photons=2, M=600)
        assert np.abs(state.pair - state.pair.T).max() < 1e-12

    def test_reflection_suppresses_excitation(self):
        p = gaussian_pulse(1.0)
        clean = timebin_solve(p, GAMMA, n_photons=1, M=500)
        lossy = timebin_solve(p, GAMMA, gamma_refl=1.0, n_photons=1, M=500)
        assert lossy.pe_series.max() < clean.pe_series.max()

    def test_vacuum_is_fixed_point(self):
        p = gaussian_pulse(1.0)
        state = timebin_solve(p, GAMMA, n_photons=0, M=500)
        assert state.pe_series.max() == 0.0
        assert abs(state.norm() - 1.0) < 1e-14
        rho = project_reduced_state(state, state.input_mode)
        assert rho[0, 0].real == pytest.approx(1.0)


class TestModeDecomposition:
    def test_free_propagation_keeps_input_mode(self):
        p = gaussian_pulse(1.0)
        state = timebin_solve(p, 0.0, n_photons=1, M=500)
        decomp = output_mode_decomposition(state)
        assert decomp.occupations[0] == pytest.approx(1.0, abs=1e-10)
        assert np.abs(decomp.occupations[1:]).max() < 1e-10
        overlap = np.vdot(state.input_mode, decomp.modes[0]) * state.dt
        assert abs(overlap) ** 2 > 1.0 - 1e-6

    def test_occupations_sum_to_photon_count(self):
        p = gaussian_pulse(TAU_OPT)
        state = timebin_solve(p, GAMMA, n_photons=2, M=700)
        total = np.sum(output_mode_decomposition(state).occupations)
        # photons in the field = 2 - residual emitter excitation
        assert total == pytest.approx(2.0 - state.pe_series[-1], abs=1e-9)

    def test_modes_orthonormal(self):
        p = gaussian_pulse(TAU_OPT)
        state = timebin_solve(p, GAMMA, n_photons=2, M=700)
        decomp = output_mode_decomposition(state, max_modes=4)
        gram = decomp.modes.conj() @ decomp.modes.T * state.dt
        assert np.abs(gram - np.eye(4)).max() < 1e-8

    def test_incomplete_state_rejected(self):
        p = gaussian_pulse(1.0)
        state = timebin_solve(p, GAMMA, n_photons=1, M=500)
        state.bins_scattered -= 1
        with pytest.raises(DimensionError):
            output_mode_decomposition(state)


class TestSubtractionScenario:
    @pytest.fixture(scope="class")
    def subtraction_state(self):
        p = gaussian_pulse(TAU_OPT)
        return timebin_solve(p, GAMMA, n_photons=2, M=1200)

    def test_emitted_mode_orthogonal_to_input(self, subtraction_state):
        state = subtraction_state
        v2, occ = dominant_orthogonal_mode(state, state.input_mode)
        overlap = abs(np.vdot(state.input_mode, v2)) * state.dt
        assert overlap < 1e-3
        assert occ > 0.95

    def test_joint_single_photon_populations(self, subtraction_state):
        state = subtraction_state
        v2, _ = dominant_orthogonal_mode(state, state.input_mode)
        joint = joint_pair_population(state, state.input_mode, v2)
        assert joint >= 0.98

    def test_joint_population_needs_orthogonal_modes(self, subtraction_state):
        state = subtraction_state
        with pytest.raises(DimensionError):
            joint_pair_population(state, state.input_mode, state.input_mode)


class TestProjectReducedState:
    def test_free_single_photon_projects_to_one(self):
        p = gaussian_pulse(1.0)
        state = timebin_solve(p, 0.0, n_photons=1, M=500)
        rho = project_reduced_state(state, state.input_mode)
        assert abs(rho[1, 1] - 1.0) < 1e-8
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)

    def test_trace_one_in_interacting_case(self):
        p = gaussian_pulse(TAU_OPT)
        state = timebin_solve(p, GAMMA, n_photons=2, M=700)
        rho = project_reduced_state(state, state.input_mode)
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.diag(rho).real >= 0.0)

    def test_unnormalized_mode_rejected(self):
        p = gaussian_pulse(1.0)
        state = timebin_solve(p, GAMMA, n_photons=1, M=500)
        with pytest.raises(DimensionError):
            project_reduced_state(state, 0.5 * state.input_mode)
