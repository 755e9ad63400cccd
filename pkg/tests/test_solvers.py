import numpy as np
import pytest

from kdvlab.errors import (
    BlowupDetected,
    MaxIterExceeded,
    NoContraction,
    SmallnessViolated,
    StepTooLarge,
)
from kdvlab.fields import (
    SpectralField,
    mode_numbers,
    random_field,
    st_inverse,
    zero_field,
)
from kdvlab.multipliers import ChiSpec
from kdvlab.phase import compute_phi
from kdvlab.solvers import (
    equicontinuity_report,
    picard_solve,
    reference_solve,
    tail_smoothing_report,
    trajectory_to_spacetime,
)

S, T_W = 0.55, 2.0


class TestReferenceSolve:
    def test_zero_data(self):
        traj = reference_solve(zero_field(8), S, T_W, 8, 0.01)
        assert np.all(traj.states == 0.0)

    def test_airy_linearization(self):
        # tiny single cosine follows the linear flow to O(a^2)
        a = 1e-6
        N = 4
        c = np.zeros(2 * N, complex)
        c[N] = a / 2
        c[N - 1] = a / 2
        f = SpectralField(N, c)
        traj = reference_solve(f, S, T_W, N, 1e-3, t_span=1.0)
        n = mode_numbers(N).astype(float)
        linear = f.coeffs[None, :] * np.exp(
            1j * np.outer(traj.times, n**3)
        )
        assert np.max(np.abs(traj.states - linear)) < 1e-9

    def test_self_convergence_order(self, rng):
        f = random_field(16, rng, decay=4.0, amplitude=0.3)
        sols = {}
        for dt in (4e-3, 2e-3, 1e-3):
            traj = reference_solve(f, S, T_W, 16, dt, t_span=0.5)
            sols[dt] = traj.states[-1]
        d1 = np.linalg.norm(sols[4e-3] - sols[2e-3])
        d2 = np.linalg.norm(sols[2e-3] - sols[1e-3])
        assert d1 / d2 >= 14.0

    def test_norm_bounded_small_data(self, rng):
        f = random_field(16, rng, decay=4.0, amplitude=1e-2)
        traj = reference_solve(f, S, T_W, 16, 2e-3)
        norms = np.linalg.norm(traj.states, axis=1)
        assert np.max(norms) <= 2.0 * norms[traj.i_zero]

    def test_blowup_detected(self):
        gen = np.random.default_rng(2)
        f = random_field(8, gen, decay=0.0, amplitude=2.0)
        with pytest.raises(BlowupDetected):
            reference_solve(f, S, T_W, 8, 0.02)

    def test_step_too_large(self):
        gen = np.random.default_rng(2)
        f = random_field(16, gen, decay=0.0, amplitude=3.0)
        with pytest.raises(StepTooLarge):
            reference_solve(f, S, T_W, 16, 0.01)

    def test_grid_alignment_for_lattice(self, rng):
        f = random_field(8, rng, decay=6.0, amplitude=1e-3)
        traj = reference_solve(f, S, T_W, 8, 2 * T_W / (64 * 2))
        v = trajectory_to_spacetime(traj, 64)
        assert (v.N, v.M) == (8, 64)


class TestPicard:
    def test_zero_data_converges_immediately(self):
        f0 = zero_field(8)
        phase = compute_phi(f0, S)
        spec = ChiSpec(phase=phase)
        res = picard_solve(f0, S, spec, tol=1e-12, max_iter=4, M=64)
        assert res.converged and len(res.history) == 1
        assert np.max(np.abs(res.u.coeffs)) == 0.0

    def test_small_data_matches_oracle(self, rng):
        N, M = 16, 256
        f = random_field(N, rng, decay=8.0, amplitude=1e-3)
        phase = compute_phi(f, S)
        spec = ChiSpec(phase=phase)
        res = picard_solve(f, S, spec, tol=1e-12, max_iter=20, M=M)
        rhos = [h["rho"] for h in res.history if "rho" in h]
        assert max(rhos) <= 0.5
        traj = reference_solve(f, S, T_W, N, 2 * T_W / (M * 4))
        u_true = trajectory_to_spacetime(traj, M)
        diff = st_inverse(res.u - u_true)
        plateau = np.abs(u_true.times()) <= 0.4
        err = np.max(np.linalg.norm(diff[plateau], axis=1))
        assert err <= 1e-6

    def test_contraction_improves_with_smaller_data(self, rng):
        N, M = 8, 128
        rho_by_amp = {}
        for amp in (2e-3, 2e-4):
            f = random_field(N, np.random.default_rng(3), decay=8.0,
                             amplitude=amp)
            phase = compute_phi(f, S)
            spec = ChiSpec(phase=phase)
            res = picard_solve(f, S, spec, tol=1e-14, max_iter=20, M=M)
            rho_by_amp[amp] = max(h["rho"] for h in res.history if "rho" in h)
        assert rho_by_amp[2e-4] < rho_by_amp[2e-3]

    def test_large_data_fails_loudly(self):
        N, M = 8, 64
        f = random_field(N, np.random.default_rng(5), decay=2.0, amplitude=2.0)
        phase = compute_phi(f, S)
        spec = ChiSpec(phase=phase)
        with pytest.warns(SmallnessViolated):
            with pytest.raises((NoContraction, MaxIterExceeded)):
                picard_solve(f, S, spec, tol=1e-12, max_iter=8, M=M)

    def test_trace_is_serializable(self):
        import json

        f0 = zero_field(4)
        phase = compute_phi(f0, S)
        res = picard_solve(f0, S, ChiSpec(phase=phase), M=32)
        text = json.dumps(res.trace())
        assert "iterations" in json.loads(text)


class TestDiagnostics:
    def test_tail_report_shape(self, rng):
        N, M = 16, 128
        f = random_field(N, rng, decay=2.0, amplitude=1e-3)
        phase = compute_phi(f, S)
        spec = ChiSpec(phase=phase)
        res = picard_solve(f, S, spec, tol=1e-10, max_iter=10, M=M)
        rep = tail_smoothing_report(res.u, res.v, S, spec, m_list=(2, 4, 8))
        assert set(rep) >= {"u", "v", "h", "h_rate", "m"}
        assert all(len(rep[k]) == 3 for k in ("u", "v", "h"))

    def test_equicontinuity_report(self, rng):
        N, M = 8, 128
        f = random_field(N, rng, decay=2.0, amplitude=1e-3)
        phase = compute_phi(f, S)
        spec = ChiSpec(phase=phase)
        res = picard_solve(f, S, spec, tol=1e-10, max_iter=10, M=M)
        rep = equicontinuity_report(res.u, res.v, nu=0.1, m_list=(2, 4, 8))
        assert np.isfinite(rep["u"]).all() and np.isfinite(rep["v"]).all()
        assert "u_growth" in rep and "v_growth" in rep
