import numpy as np
import pytest

from kdvlab.errors import GridMismatch
from kdvlab.fields import (
    SpaceTimeField,
    SpectralField,
    bessel_weight,
    hermitian_defect,
    mode_numbers,
    random_field,
    st_inverse,
    st_transform,
    zero_field,
)
from kdvlab.multipliers import ChiSpec
from kdvlab.phase import compute_phi, dispersion_vector
from kdvlab.system import (
    NRBundle,
    assemble_NR,
    decompose,
    duhamel,
    duhamel_residual,
    gamma_map,
    k_integral,
    vn_rhs,
    windowed_free_evolution,
)
from kdvlab.window import bump_window

from conftest import make_session, random_st

S = 0.55


def _session(N=8, M=64, seed=0, amp=1e-2, force=None):
    f, phase, spec = make_session(N=N, M=M, seed=seed, amp=amp, decay=4.0,
                                  force=force)
    return f, phase, spec


class TestDecompose:
    def test_free_evolution_with_cutoff_off(self):
        f, phase, spec0 = _session(force=0.0)
        u = windowed_free_evolution(f, phase, 2.0, 64)
        dec = decompose(u, f, phase, spec0)
        assert np.max(np.abs(dec.w.coeffs)) < 1e-12
        np.testing.assert_allclose(dec.v.coeffs, dec.r.coeffs, atol=1e-12)

    def test_zero_data(self):
        N, M = 8, 64
        f0 = zero_field(N)
        phase = compute_phi(f0, S)
        spec = ChiSpec(phase=phase)
        u = random_st(N, M, 2.0, seed=3)
        dec = decompose(u, f0, phase, spec)
        assert np.max(np.abs(dec.r.coeffs)) == 0.0
        np.testing.assert_allclose(
            dec.v.coeffs, (u - dec.h).coeffs, atol=1e-13
        )

    def test_reassembly_closure(self):
        f, phase, spec = _session()
        u = random_st(8, 64, 2.0, seed=9)
        dec = decompose(u, f, phase, spec)
        back = dec.r + dec.h + dec.w
        assert np.max(np.abs((back - u).coeffs)) < 1e-12
        # v = u - h by definition
        np.testing.assert_allclose(
            (dec.u - dec.h).coeffs, dec.v.coeffs, atol=1e-13
        )

    def test_realness_preserved(self):
        f, phase, spec = _session()
        u = random_st(8, 64, 2.0, seed=10)
        dec = decompose(u, f, phase, spec)
        for fld in (dec.r, dec.h, dec.w, dec.v):
            assert hermitian_defect(fld) < 1e-11


class TestAssembleNR:
    def test_smooth_part_vanishes_without_h(self):
        f, phase, spec0 = _session(force=0.0)
        u = windowed_free_evolution(f, phase, 2.0, 64)
        dec = decompose(u, f, phase, spec0)
        nr = assemble_NR(dec)
        assert np.max(np.abs(nr.nr_smooth.coeffs)) == 0.0

    def test_rh_vanishes_at_chi_one(self):
        f, phase, spec1 = _session(force=1.0)
        u = random_st(8, 64, 2.0, seed=4)
        dec = decompose(u, f, phase, spec1)
        nr = assemble_NR(dec)
        scale = np.max(np.abs(nr.nr_M.coeffs)) + 1e-30
        assert np.max(np.abs(nr.nr_rh.coeffs)) / scale < 1e-10
        assert np.max(np.abs(nr.nr_Nh.coeffs)) / scale < 1e-10

    def test_component_support_single_mode(self):
        N, M = 4, 32
        f, phase, spec = _session(N=N, M=M)
        gen = np.random.default_rng(0)
        samples = np.zeros((M, 2 * N), complex)
        prof = gen.standard_normal(M) + 1j * gen.standard_normal(M)
        samples[:, 4] = prof
        samples[:, 3] = np.conj(prof)
        u = st_transform(samples, N, 2.0)
        dec = decompose(u, f, phase, spec)
        nr = assemble_NR(dec)
        # trilinear pieces built from mode-1 content live within |n| <= 3N
        for fld in (nr.nr_M, nr.nr_rh):
            assert fld.N == N  # truncated representation by construction


class TestKIntegral:
    def test_zero_integrand(self):
        v = random_st(4, 64, 2.0, seed=1)
        K = v * 0.0
        k = k_integral(v, K)
        assert np.all(k == 0.0)

    def test_constant_integrand_gives_time(self):
        N, M, T_w = 2, 64, 2.0
        ones = np.ones((M, 2 * N), complex)
        v = st_transform(ones, N, T_w, window=None)
        k = k_integral(v, v)
        t = v.times()
        np.testing.assert_allclose(k, np.tile(t[:, None], (1, 2 * N)), atol=1e-12)

    def test_quadrature_order(self):
        # against the analytic antiderivative of Re(conj(e^{-iat}) e^{ibt})
        N, T_w = 1, 2.0
        a, b = 3.0, 7.0
        errs = {}
        for M in (64, 128):
            t = -T_w + (2 * T_w / M) * np.arange(M)
            va = np.zeros((M, 2), complex)
            vb = np.zeros((M, 2), complex)
            va[:, 1] = np.exp(-1j * a * t)
            vb[:, 1] = np.exp(1j * b * t)
            v = st_transform(va, N, T_w, window=None)
            K = st_transform(vb, N, T_w, window=None)
            k = k_integral(v, K)
            exact = np.sin((a + b) * t) / (a + b)
            errs[M] = np.max(np.abs(k[:, 1] - exact))
        assert errs[64] / errs[128] >= 8.0

    def test_grid_mismatch(self):
        v = random_st(4, 64, 2.0)
        K = random_st(4, 32, 2.0)
        with pytest.raises(GridMismatch):
            k_integral(v, K)


class TestVnRhs:
    def test_zero_everything(self):
        f0 = zero_field(8)
        phase = compute_phi(f0, S)
        spec = ChiSpec(phase=phase, force=0.0)
        u = random_st(8, 64, 2.0, seed=2) * 0.0
        dec = decompose(u, f0, phase, spec)
        nr = assemble_NR(dec)
        out = vn_rhs(dec, nr)
        assert np.max(np.abs(out.coeffs)) == 0.0

    def test_constant_term_path(self):
        # with NR forced to zero and interior-supported data the right side
        # reduces to i (4/3) rho v [Re(conj f w0) + |w0|^2/2] exactly
        N, M = 12, 64
        f, phase, spec = _session(N=N, M=M, amp=5e-2)
        # interior support so the lattice boundary correction vanishes
        c = f.coeffs.copy()
        c[np.abs(mode_numbers(N)) > N // 3] = 0.0
        f = SpectralField(N, c)
        phase = compute_phi(f, S)
        spec = ChiSpec(phase=phase)
        u = windowed_free_evolution(f, phase, 2.0, M)
        dec = decompose(u, f, phase, spec)
        zero = dec.u * 0.0
        nr0 = NRBundle(nr_smooth=zero, nr_rh=zero, nr_Nh=zero, nr_Nl=zero,
                       nr_M=zero)
        out = vn_rhs(dec, nr0)
        vt = st_inverse(dec.v)
        ht = st_inverse(dec.h)
        w0 = -ht[M // 2]
        n = mode_numbers(N)
        rho = bessel_weight(n, 2 * S) / n
        P0 = np.real(np.conj(f.coeffs) * w0) + 0.5 * np.abs(w0) ** 2
        inner = np.abs(np.abs(n) <= N // 3)
        expected = 1j * (4.0 / 3.0) * rho[None, :] * P0[None, :] * vt
        got = st_inverse(out)
        keep = np.abs(n) <= N // 3  # interior columns have no boundary term
        np.testing.assert_allclose(got[:, keep], expected[:, keep], atol=1e-14)

    def test_k_path_single_mode(self):
        # the cumulative-integral path reproduces a hand-built k_n profile
        N, M = 8, 64
        f, phase, spec = _session(N=N, M=M)
        u = windowed_free_evolution(f, phase, 2.0, M)
        dec = decompose(u, f, phase, spec)
        nr = assemble_NR(dec)
        out = vn_rhs(dec, nr)
        # subtracting the no-integral variant isolates i (4/3) rho v k
        zero = dec.u * 0.0
        KT = nr.combined()
        k = k_integral(dec.v, KT)
        vt = st_inverse(dec.v)
        n = mode_numbers(N)
        rho = bessel_weight(n, 2 * S) / n
        manual = 1j * (4.0 / 3.0) * rho[None, :] * k * vt
        nr0 = NRBundle(nr_smooth=zero, nr_rh=zero, nr_Nh=zero, nr_Nl=zero,
                       nr_M=zero)
        base = vn_rhs(dec, nr0)
        diff = st_inverse(out) - st_inverse(base) - st_inverse(KT)
        np.testing.assert_allclose(diff, manual, atol=1e-13)


class TestDuhamel:
    def test_free_term_only(self):
        f, phase, _ = _session()
        F = windowed_free_evolution(f, phase, 2.0, 64) * 0.0
        v = duhamel(F, f, phase)
        t = v.times()
        L = dispersion_vector(phase)
        expected = bump_window(t)[:, None] * f.coeffs[None, :] * np.exp(
            1j * np.outer(t, L)
        )
        np.testing.assert_allclose(st_inverse(v), expected, atol=1e-12)
        # v(0) = f
        np.testing.assert_allclose(st_inverse(v)[32], f.coeffs, atol=1e-13)

    def test_initial_correction(self):
        f, phase, _ = _session()
        F = windowed_free_evolution(f, phase, 2.0, 64) * 0.0
        h0 = f * 0.25
        v = duhamel(F, f, phase, initial_correction=h0)
        np.testing.assert_allclose(st_inverse(v)[32], 0.75 * f.coeffs, atol=1e-13)

    def test_constant_forcing_analytic(self):
        # single-mode constant forcing: v_n(t) = c (e^{iLt} - 1)/(iL) on the
        # window plateau
        N, M, T_w = 2, 512, 2.0
        f0 = zero_field(N)
        phase = compute_phi(f0, S)
        cval = 0.7 - 0.2j
        samples = np.zeros((M, 2 * N), complex)
        samples[:, 2] = cval
        samples[:, 1] = np.conj(cval)
        F = st_transform(samples, N, T_w, window=None)
        v = duhamel(F, f0, phase)
        t = v.times()
        L = dispersion_vector(phase)[2]
        plateau = np.abs(t) <= 0.49
        expected = cval * (np.exp(1j * L * t[plateau]) - 1.0) / (1j * L)
        got = st_inverse(v)[plateau, 2]
        np.testing.assert_allclose(got, expected, atol=1e-8)

    def test_linearity(self):
        f, phase, _ = _session()
        F1 = random_st(8, 64, 2.0, seed=1)
        F2 = random_st(8, 64, 2.0, seed=2)
        lhs = duhamel(F1 + 2.0 * F2, zero_field(8), phase)
        rhs = (duhamel(F1, zero_field(8), phase)
               + 2.0 * duhamel(F2, zero_field(8), phase))
        np.testing.assert_allclose(lhs.coeffs, rhs.coeffs, atol=1e-12)

    def test_residual_quadrature_order(self):
        # (d/dt - iL) v - F on the plateau shrinks at the quadrature order;
        # the forcing has fixed frequency content across resolutions
        N, T_w, omega = 2, 2.0, 5.0
        f0 = zero_field(N)
        phase = compute_phi(f0, S)
        res = {}
        for M in (128, 256):
            t = -T_w + (2 * T_w / M) * np.arange(M)
            samples = np.zeros((M, 2 * N), complex)
            samples[:, 2] = np.exp(1j * omega * t)
            samples[:, 1] = np.exp(-1j * omega * t)
            F = st_transform(samples, N, T_w)
            v = duhamel(F, f0, phase)
            res[M] = duhamel_residual(v, F, phase, t_max=0.4)
        assert res[128] / res[256] >= 3.0


class TestGammaMap:
    def test_zero_data_fixed_point(self):
        N, M = 8, 64
        f0 = zero_field(N)
        phase = compute_phi(f0, S)
        spec = ChiSpec(phase=phase)
        z = windowed_free_evolution(f0, phase, 2.0, M)
        g1, g2 = gamma_map(z, z, f0, S, spec)
        assert np.max(np.abs(g1.coeffs)) == 0.0
        assert np.max(np.abs(g2.coeffs)) == 0.0

    def test_smoke_and_determinism(self):
        N, M = 8, 64
        f, phase, spec = _session(N=N, M=M, amp=1e-3)
        u0 = windowed_free_evolution(f, phase, 2.0, M)
        a1, a2 = gamma_map(u0, u0, f, S, spec)
        b1, b2 = gamma_map(u0, u0, f, S, spec)
        assert np.array_equal(a1.coeffs, b1.coeffs)
        assert np.array_equal(a2.coeffs, b2.coeffs)
        assert np.isfinite(a1.coeffs).all() and np.isfinite(a2.coeffs).all()

    def test_fixed_point_residual_at_truth(self):
        # one application of the map fixes the windowed exact trajectory on
        # the plateau to quadrature accuracy
        from kdvlab.solvers import reference_solve, trajectory_to_spacetime

        N, M = 12, 128
        gen = np.random.default_rng(6)
        f = random_field(N, gen, decay=8.0, amplitude=1e-3)
        phase = compute_phi(f, S)
        spec = ChiSpec(phase=phase)
        traj = reference_solve(f, S, 2.0, N, 2 * 2.0 / (M * 4))
        u_true = trajectory_to_spacetime(traj, M)
        g1, _ = gamma_map(u_true, u_true, f, S, spec)
        du = st_inverse(g1 - u_true)
        plateau = np.abs(u_true.times()) <= 0.4
        assert np.max(np.abs(du[plateau])) < 1e-9
