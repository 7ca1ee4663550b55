import numpy as np
import pytest

from pulse_jcm import (
    DimensionError,
    FieldStateSpec,
    IntegratorConfig,
    ModelSpec,
    NumericalFailureError,
    StateCorruptionError,
    StiffnessError,
    SystemState,
    build_classical_drive,
    build_jcm2,
    evolve,
    gaussian_pulse,
    initial_state,
    lindblad_rhs,
    lowering_op,
    single_excitation_solve,
    build_jcm1,
)

GAMMA = 1.0


@pytest.fixture(scope="module")
def pulse():
    return gaussian_pulse(1.0)


def jcm2_run(pulse, n=2, rtol=1e-8, max_step=0.02, points=201):
    model = build_jcm2(pulse, pulse, GAMMA, n, n)
    state0 = initial_state(
        model, "ground", [FieldStateSpec.fock(n), FieldStateSpec.vacuum()]
    )
    grid = np.linspace(0.0, pulse.t_end, points)
    cfg = IntegratorConfig(rtol=rtol, record_grid=grid, max_step=max_step)
    return evolve(model, state0, cfg)


class TestRhs:
    def test_trace_free(self, pulse):
        rng = np.random.default_rng(2)
        model = build_jcm2(pulse, pulse, GAMMA, 2, 2)
        m = rng.standard_normal((18, 18)) + 1j * rng.standard_normal((18, 18))
        rho = m @ m.conj().T
        rho /= np.trace(rho)
        out = lindblad_rhs(model, 5.0, rho)
        assert abs(np.trace(out)) < 1e-12

    def test_hermitian_output(self, pulse):
        rng = np.random.default_rng(4)
        model = build_jcm2(pulse, pulse, GAMMA, 2, 2)
        m = rng.standard_normal((18, 18)) + 1j * rng.standard_normal((18, 18))
        rho = m @ m.conj().T
        rho /= np.trace(rho)
        out = lindblad_rhs(model, 6.0, rho)
        assert np.abs(out - out.conj().T).max() < 1e-12

    def test_pure_decay_rate(self, pulse):
        model = build_classical_drive(pulse, 0.0, GAMMA)
        rho = np.diag([0.0, 1.0]).astype(complex)
        out = lindblad_rhs(model, 1.0, rho)
        assert out[1, 1].real == pytest.approx(-GAMMA)
        assert out[0, 0].real == pytest.approx(GAMMA)

    def test_non_hermitian_input_rejected(self, pulse):
        model = build_classical_drive(pulse, 0.0, GAMMA)
        rho = np.array([[0.5, 0.4], [0.0, 0.5]], dtype=complex)
        with pytest.raises(DimensionError):
            lindblad_rhs(model, 1.0, rho)

    def test_non_finite_output_detected(self, pulse):
        base = build_classical_drive(pulse, 0.0, GAMMA)
        sm = lowering_op()
        from pulse_jcm import embed

        bad = ModelSpec(
            subsystem_dims=(2,),
            hamiltonian_terms=base.hamiltonian_terms,
            channels=(((embed(sm, 0, (2,)), lambda t: np.nan),),),
            gamma=GAMMA,
        )
        rho = np.diag([0.0, 1.0]).astype(complex)
        with pytest.raises(NumericalFailureError):
            lindblad_rhs(bad, 1.0, rho)


class TestEvolve:
    def test_analytic_decay(self, pulse):
        model = build_classical_drive(pulse, 0.0, GAMMA)
        state0 = initial_state(model, "excited", [])
        grid = np.linspace(0.0, 10.0, 201)
        traj = evolve(model, state0, IntegratorConfig(record_grid=grid, max_step=0.1))
        assert np.abs(traj["P_e"] - np.exp(-GAMMA * grid)).max() < 1e-8

    def test_identity_without_generators(self):
        model = ModelSpec(subsystem_dims=(2,), hamiltonian_terms=(), channels=(),
                          gamma=0.0)
        rho0 = np.diag([0.4, 0.6]).astype(complex)
        state0 = SystemState(rho0, (2,))
        grid = np.linspace(0.0, 4.0, 17)
        traj = evolve(model, state0, IntegratorConfig(record_grid=grid))
        assert np.array_equal(traj.final_state.rho, rho0)

    def test_rtol_halving_convergence(self, pulse):
        a = jcm2_run(pulse, rtol=1e-8)
        b = jcm2_run(pulse, rtol=5e-9)
        assert abs(a["n_v"][-1] - b["n_v"][-1]) < 1e-6

    def test_max_step_halving_invariance(self, pulse):
        a = jcm2_run(pulse, max_step=0.02)
        b = jcm2_run(pulse, max_step=0.01)
        assert abs(a["n_v"][-1] - b["n_v"][-1]) < 1e-6
        assert np.abs(a["P_e"] - b["P_e"]).max() < 1e-6

    def test_record_grid_shift_invariance(self, pulse):
        a = jcm2_run(pulse, points=201)
        b = jcm2_run(pulse, points=307)
        assert abs(a["n_v"][-1] - b["n_v"][-1]) < 1e-6
        assert abs(a["P_e"][-1] - b["P_e"][-1]) < 1e-6

    def test_excitation_monotone(self, pulse):
        traj = jcm2_run(pulse)
        n_tot = traj["n_total"]
        assert np.all(np.diff(n_tot) <= 1e-9)

    def test_state_health_along_trajectory(self, pulse):
        traj = jcm2_run(pulse)
        assert np.abs(traj.trace - 1.0).max() < 1e-8
        assert traj.min_eig.min() >= -1e-8
        assert traj.herm_defect.max() < 1e-9

    def test_snapshots(self, pulse):
        model = build_classical_drive(pulse, 0.0, GAMMA)
        state0 = initial_state(model, "excited", [])
        grid = np.linspace(0.0, 5.0, 11)
        cfg = IntegratorConfig(record_grid=grid, snapshot_times=(2.5,), max_step=0.1)
        traj = evolve(model, state0, cfg)
        assert len(traj.snapshots) == 1
        snap = traj.snapshots[0]
        assert snap.time == pytest.approx(2.5)
        assert snap.rho[1, 1].real == pytest.approx(np.exp(-2.5), abs=1e-8)

    def test_oracle_agreement_single_photon(self, pulse):
        model = build_jcm1(pulse, GAMMA, 1)
        state0 = initial_state(model, "ground", [FieldStateSpec.fock(1)])
        grid = np.linspace(0.0, pulse.t_end, 301)
        traj = evolve(model, state0, IntegratorConfig(record_grid=grid, max_step=0.02))
        sol = single_excitation_solve(pulse, GAMMA, times=grid)
        assert np.abs(traj["P_e"] - sol.P_e).max() < 1e-6


class TestFailureModes:
    def test_stiffness_error_reports_time(self, pulse):
        sm_embedded = None
        from pulse_jcm import embed

        sm_embedded = embed(lowering_op(), 0, (2,))
        # decay rate jumps to 1e16 at t = 1.55 (not a step boundary): an
        # explicit stepper must underflow there
        blow_up = ModelSpec(
            subsystem_dims=(2,),
            hamiltonian_terms=(),
            channels=(((sm_embedded, lambda t: 0.0 if t < 1.55 else 1e8),),),
            gamma=GAMMA,
        )
        rho0 = np.diag([0.0, 1.0]).astype(complex)
        state0 = SystemState(rho0, (2,))
        grid = np.linspace(0.0, 3.0, 31)
        with pytest.raises(StiffnessError) as err:
            evolve(blow_up, state0, IntegratorConfig(record_grid=grid))
        assert 1.4 < err.value.t < 1.7

    def test_corrupted_initial_state(self, pulse):
        model = build_classical_drive(pulse, 0.0, GAMMA)
        rho = 0.9 * np.diag([0.0, 1.0]).astype(complex)
        state0 = SystemState(rho, (2,))
        grid = np.linspace(0.0, 1.0, 5)
        with pytest.raises(StateCorruptionError):
            evolve(model, state0, IntegratorConfig(record_grid=grid))

    def test_config_validation(self):
        with pytest.raises(DimensionError):
            IntegratorConfig(rtol=1e-3, record_grid=np.array([0.0, 1.0]))
        with pytest.raises(DimensionError):
            IntegratorConfig(atol=0.0, record_grid=np.array([0.0, 1.0]))
        with pytest.raises(DimensionError):
            IntegratorConfig(record_grid=np.array([1.0, 0.5]))
