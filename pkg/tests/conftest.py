import numpy as np
import pytest

from kdvlab.fields import SpectralField, random_field, st_transform
from kdvlab.multipliers import ChiSpec
from kdvlab.phase import compute_phi


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_session(N=8, M=64, T_w=2.0, s=0.55, seed=0, amp=1e-2, decay=2.0,
                 force=None):
    """Small consistent (f, phase, spec) triple for operator tests."""
    gen = np.random.default_rng(seed)
    f = random_field(N, gen, decay=decay, amplitude=amp)
    phase = compute_phi(f, s)
    spec = ChiSpec(phase=phase, force=force)
    return f, phase, spec


def random_st(N, M, T_w, seed=0, decay=1.0, band=4):
    """Random real windowed space-time field with band-limited time content.

    Time profiles are built from tau content confined to |k| <= M/band, so
    the windowed field decays super-polynomially toward the Nyquist row (as
    trajectories do).
    """
    from kdvlab.fields import SpaceTimeField, st_inverse

    gen = np.random.default_rng(seed)
    n = np.concatenate([np.arange(-N, 0), np.arange(1, N + 1)])
    k = np.arange(M) - M // 2
    base = gen.standard_normal((M, 2 * N)) + 1j * gen.standard_normal((M, 2 * N))
    base *= (1.0 + n.astype(float) ** 2) ** (-decay / 2.0)
    base[np.abs(k) > M // band, :] = 0.0
    # Hermitian pairing on the (tau, n) lattice; the Nyquist row is zero
    flipped = np.zeros_like(base)
    flipped[1:] = base[1:][::-1]
    base = 0.5 * (base + np.conj(flipped[:, ::-1]))
    samples = st_inverse(SpaceTimeField(N, T_w, M, base))
    return st_transform(samples, N, T_w)
