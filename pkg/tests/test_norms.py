import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kdvlab.errors import DivisionByZeroNorm, EmptyBlock, UnsupportedExponent
from kdvlab.fields import (
    SpectralField,
    make_field,
    mode_numbers,
    random_field,
    zero_field,
)
from kdvlab.norms import (
    WeightSpec,
    embedding_ratio,
    modulation_levels,
    norm_X,
    norm_Xsb,
    norm_Xtilde,
    norm_Y,
    norm_Z,
    norm_Zstar,
    strichartz_ratio,
    weight,
)
from kdvlab.phase import compute_phi, dispersion_vector
from kdvlab.system import windowed_free_evolution
from kdvlab.window import bump_window

from conftest import make_session, random_st

S, EPS = 0.55, 0.01


class TestWeights:
    def test_y_weight_is_one_at_unit_level_low_branch(self):
        spec = WeightSpec("Y", eps=0.02)
        # low branch requires |n| > ll_threshold * L
        for n in (9, 100, 1000):
            assert weight(spec, n, 1.0) == 1.0

    def test_y_weight_low_branch_value(self):
        spec = WeightSpec("Y", eps=0.0)
        assert weight(spec, 100, 4.0) == pytest.approx(2.0, rel=1e-14)

    def test_z_weight_high_branch_value(self):
        spec = WeightSpec("Z", eps=0.0)
        assert weight(spec, 2, 64.0) == pytest.approx(16.0, rel=1e-14)

    @given(st.integers(1, 200), st.integers(0, 20))
    @settings(max_examples=50)
    def test_monotone_in_level_within_branch(self, n, j):
        spec = WeightSpec("Y", eps=0.01)
        L = float(2**j)
        low_now = L < n / spec.ll_threshold
        low_next = 2 * L < n / spec.ll_threshold
        if low_now == low_next:
            assert weight(spec, n, 2 * L) >= weight(spec, n, L)

    def test_y_dominated_by_z_on_lattice(self):
        y = WeightSpec("Y", eps=EPS)
        z = WeightSpec("Z", eps=EPS)
        n = np.arange(1, 257, dtype=float)
        ratios = []
        for j in range(0, 25):
            L = float(2**j)
            ratios.append(np.max(weight(y, n, L) / weight(z, n, L)))
        assert max(ratios) < 4.0

    def test_y_lower_bound(self):
        y = WeightSpec("Y", eps=EPS)
        n = np.arange(1, 257, dtype=float)
        for j in range(0, 25):
            L = float(2**j)
            lower = L ** (1.0 / 3.0 + EPS) * np.minimum(
                1.0, (1 + n * n) ** ((1.0 / 3.0 - EPS) / 2.0)
            )
            assert np.all(weight(y, n, L) >= lower * (1 - 1e-12))


class TestNorms:
    def test_zero_field(self):
        _, phase, _ = make_session(N=4, M=32)
        v = random_st(4, 32, 2.0) * 0.0
        for val in (
            norm_Y(v, phase, EPS),
            norm_Z(v, phase, EPS),
            norm_Zstar(v, phase, EPS),
            norm_Xsb(v, S, 0.5, phase),
            norm_Xtilde(v, S, EPS, phase),
            norm_X(v, S, EPS, phase),
        ):
            assert val == 0.0

    def test_homogeneity(self):
        _, phase, _ = make_session(N=6, M=64)
        v = random_st(6, 64, 2.0, seed=2)
        for fn in (
            lambda w: norm_Y(w, phase, EPS),
            lambda w: norm_Z(w, phase, EPS),
            lambda w: norm_Xtilde(w, S, EPS, phase),
        ):
            assert fn(3.5 * v) == pytest.approx(3.5 * fn(v), rel=1e-12)

    def test_dyadic_completeness(self):
        # the annuli partition the lattice: shell-wise mass recovers the total
        _, phase, _ = make_session(N=6, M=64)
        v = random_st(6, 64, 2.0, seed=5)
        lev = modulation_levels(v, phase)
        meas = v.dtau / (2 * np.pi)
        total = 0.0
        for j in range(lev.min(), lev.max() + 1):
            total += np.sum(np.abs(v.coeffs[lev == j]) ** 2) * meas
        plain = norm_Xsb(v, 0.0, 0.0, phase) ** 2
        assert total == pytest.approx(plain, rel=1e-12)

    def test_free_evolution_xsb_oracle(self):
        # windowed free evolution: per-mode tau profile is the window
        # transform centered at the shifted dispersion
        N, M, T_w = 4, 256, 2.0
        gen = np.random.default_rng(8)
        f = random_field(N, gen, decay=2.0, amplitude=1.0)
        phase = compute_phi(f, S)
        v = windowed_free_evolution(f, phase, T_w, M)
        b = 1.0 / 3.0 + EPS
        taus = v.taus()
        L = dispersion_vector(phase)
        meas = v.dtau / (2 * np.pi)
        tt = np.linspace(-1.0, 1.0, 20001)
        w = bump_window(tt)
        total = 0.0
        for i in range(2 * N):
            offs = taus - L[i]
            prof = np.array(
                [np.trapezoid(w * np.exp(-1j * o * tt), tt) for o in offs]
            )
            total += (
                np.abs(f.coeffs[i]) ** 2
                * np.sum((1.0 + offs**2) ** b * np.abs(prof) ** 2)
                * meas
            )
        oracle = np.sqrt(total)
        assert norm_Xsb(v, 0.0, b, phase) == pytest.approx(oracle, rel=1e-6)

    def test_y_z_norm_ratio_bounded_by_weight_scan(self):
        # Cauchy-Schwarz in tau per shell turns the L1 piece into an L2 one
        # with a sqrt(shell measure) factor; the scan constant then bounds
        # the norm-level ratio
        _, phase, _ = make_session(N=8, M=64)
        meas_bound = lambda L: np.sqrt((4.0 * L + np.pi / 2.0) / (2 * np.pi))
        y = WeightSpec("Y", eps=EPS)
        z = WeightSpec("Z", eps=EPS)
        n = np.arange(1, 9, dtype=float)
        scan = 0.0
        for j in range(0, 22):
            L = float(2**j)
            scan = max(
                scan,
                np.max((weight(y, n, L) + meas_bound(L)) / weight(z, n, L)),
            )
        for seed in range(5):
            v = random_st(8, 64, 2.0, seed=seed)
            ratio = norm_Y(v, phase, EPS) / norm_Z(v, phase, EPS)
            assert ratio <= scan * (1 + 1e-9)


class TestStrichartz:
    def test_single_mode_is_one(self):
        # one complex exponential has modulus one everywhere, so every
        # normalized-measure ratio equals 1 (diagnostic object, one-sided)
        _, phase, _ = make_session(N=4, M=32)
        c = np.zeros(8, complex)
        c[4] = 1.0
        g = SpectralField(4, c)
        assert strichartz_ratio(g, phase, 4) == pytest.approx(1.0, rel=1e-12)
        assert strichartz_ratio(g, phase, 6) == pytest.approx(1.0, rel=1e-12)

    def test_p4_block_regression(self):
        # frozen diagnostic value for the default deterministic block
        N = 16
        gen = np.random.default_rng(123)
        f = zero_field(N)
        phase = compute_phi(f, S)
        n = mode_numbers(N)
        sel = (np.abs(n) > 4) & (np.abs(n) <= 8)
        half = gen.standard_normal(sel.sum() // 2) + 1j * gen.standard_normal(sel.sum() // 2)
        c = np.zeros(2 * N, complex)
        c[sel & (n > 0)] = half
        c[sel & (n < 0)] = np.conj(half[::-1])
        g = SpectralField(N, c)
        val = strichartz_ratio(g, phase, 4)
        assert val == pytest.approx(1.252323706105717, rel=1e-10)

    def test_p6_exponent_fit(self):
        N = 64
        gen = np.random.default_rng(7)
        phase = compute_phi(zero_field(N), S)
        n = mode_numbers(N)
        ratios = []
        blocks = [8, 16, 32, 64]
        for nd in blocks:
            sel = (np.abs(n) > nd // 2) & (np.abs(n) <= nd)
            half = gen.standard_normal(sel.sum() // 2) + 1j * gen.standard_normal(sel.sum() // 2)
            c = np.zeros(2 * N, complex)
            c[sel & (n > 0)] = half
            c[sel & (n < 0)] = np.conj(half[::-1])
            ratios.append(strichartz_ratio(SpectralField(N, c), phase, 6))
        slope = np.polyfit(np.log(blocks), np.log(ratios), 1)[0]
        assert slope <= 0.2

    def test_empty_block(self):
        _, phase, _ = make_session(N=4, M=32)
        with pytest.raises(EmptyBlock):
            strichartz_ratio(zero_field(4), phase, 4)

    def test_unsupported_exponent(self):
        _, phase, _ = make_session(N=4, M=32)
        c = np.zeros(8, complex)
        c[4] = 1.0
        with pytest.raises(UnsupportedExponent):
            strichartz_ratio(SpectralField(4, c), phase, 5)


class TestEmbedding:
    def test_zero_source_rejected(self):
        _, phase, _ = make_session(N=4, M=32)
        v = random_st(4, 32, 2.0) * 0.0
        with pytest.raises(DivisionByZeroNorm):
            embedding_ratio(v, WeightSpec("Y", eps=EPS), "L4", phase)

    def test_l4_against_xsb_two_resolutions(self):
        # empirical embedding constants stable within 2x under N doubling
        sup = {}
        for N in (16, 32):
            _, phase, _ = make_session(N=N, M=128)
            spec = WeightSpec("Xsb", eps=EPS, s=0.0, b=1.0 / 3.0 + EPS)
            vals = []
            for seed in range(20):
                v = random_st(N, 128, 2.0, seed=seed)
                vals.append(embedding_ratio(v, spec, "L4", phase))
            sup[N] = max(vals)
        assert sup[32] <= 2.0 * sup[16]
        assert sup[16] <= 2.0 * sup[32]

    def test_y_to_z_ratio_consistency(self):
        _, phase, _ = make_session(N=8, M=64)
        v = random_st(8, 64, 2.0, seed=3)
        r1 = embedding_ratio(v, WeightSpec("Z", eps=EPS), "Xsb", phase)
        assert np.isfinite(r1) and r1 > 0
