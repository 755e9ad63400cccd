"""Bilinear and multilinear Fourier multiplier operators on the lattice.

This module houses the derivative-bearing bilinear form, the normal form
operator, the smooth modulation cutoff and the low/high decompositions it
induces, the dispersion mismatch polynomials, the resonant trilinear
operators (closed diagonal form and exact lattice restriction), and the
composed modulation-restricted trilinear operator.

All space-time operators convolve exactly on the (tau, n) lattice: products
are formed in the time domain (the lattice's circular tau-convolution) and
spatial sums are alias-free with outputs restricted to 1 <= |n| <= N.  Any
mass landing on n = 0 is dropped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PhaseMismatch, TruncationMismatch, ZeroFrequency
from .fields import (
    SpaceTimeField,
    SpectralField,
    _alternating,
    apply_bessel,
    bessel_weight,
    convolve,
    mode_index,
    mode_numbers,
)
from .phase import PhaseData, dispersion_vector
from .window import smooth_step

__all__ = [
    "ChiSpec",
    "chi",
    "H2",
    "H3",
    "H4",
    "bilinear_N",
    "normal_form_T",
    "N_ell",
    "N_h",
    "T_ell",
    "T_h",
    "decompose_h",
    "resonant_R",
    "resonant_R_oracle",
    "resonant_restricted",
    "resonant_restricted_st",
    "TrilinearParts",
    "trilinear_M",
]


# ---------------------------------------------------------------------------
# modulation cutoff


@dataclass(frozen=True)
class ChiSpec:
    """Parameters of the smooth modulation cutoff.

    The weight equals 1 where <tau - n^3 - phi_n> <= threshold_const*|(n+k) n k|
    (floored at 1 so degenerate products stay well-defined), equals 0 beyond
    ramp_ratio times that threshold, and ramps monotonically in between.
    ``force`` pins the weight to a constant everywhere (used for the
    chi == 1 / chi == 0 limits).
    """

    phase: PhaseData
    threshold_const: float = 3.0
    ramp_ratio: float = 4.0
    force: float | None = None

    def cache_key(self, N: int, M: int, T_w: float):
        return (
            N,
            M,
            round(T_w, 12),
            self.threshold_const,
            self.ramp_ratio,
            self.force,
            self.phase.f_hash,
            self.phase.s,
            self.phase.constant,
            self.phase.N,
        )


def chi(n, tau, k, spec: ChiSpec):
    """Cutoff weight chi(n, tau; k) in [0, 1]; smooth and monotone in tau."""
    n_arr = np.asarray(n)
    if np.any(n_arr == 0):
        raise ZeroFrequency("chi is undefined at n = 0")
    if spec.force is not None:
        out = np.full(np.broadcast(n_arr, np.asarray(tau), np.asarray(k)).shape,
                      float(spec.force))
        return out if out.ndim else float(out)
    tau = np.asarray(tau, dtype=float)
    k_arr = np.asarray(k)
    phase = spec.phase
    idx = np.where(n_arr < 0, n_arr + phase.N, n_arr + phase.N - 1)
    in_range = np.abs(n_arr) <= phase.N
    phi = np.where(in_range, phase.phi[np.clip(idx, 0, 2 * phase.N - 1)], 0.0)
    mod = np.hypot(1.0, tau - n_arr.astype(float) ** 3 - phi)
    prod = np.abs((n_arr + k_arr) * n_arr * k_arr).astype(float)
    lo = np.maximum(spec.threshold_const * prod, 1.0)
    hi = spec.ramp_ratio * lo
    ramp = (mod - lo) / (hi - lo)
    out = np.asarray(1.0 - smooth_step(ramp))
    return out if out.ndim else float(out)


_CHI_CACHE: dict = {}
_CHI_CACHE_CAP = 4


def _chi_tensor(spec: ChiSpec, N: int, M: int, T_w: float) -> np.ndarray:
    """CHI[i_n, i_k, k_tau] on the session lattice, cached by value.

    The Nyquist row k_tau = 0 represents tau = -M pi / (2 T_w) and its alias
    +M pi / (2 T_w) at once, so its weight is the even symmetrization of the
    two; this keeps every cutoff-weighted operator exactly Hermitian.
    """
    key = spec.cache_key(N, M, T_w)
    hit = _CHI_CACHE.get(key)
    if hit is not None:
        return hit
    modes = mode_numbers(N)
    taus = (np.arange(M) - M // 2) * (np.pi / T_w)
    tensor = chi(modes[:, None, None], taus[None, None, :], modes[None, :, None], spec)
    tensor = np.ascontiguousarray(tensor)
    tensor[:, :, 0] = 0.5 * (
        tensor[:, :, 0]
        + chi(modes[:, None], -taus[0], modes[None, :], spec)
    )
    if len(_CHI_CACHE) >= _CHI_CACHE_CAP:
        _CHI_CACHE.pop(next(iter(_CHI_CACHE)))
    _CHI_CACHE[key] = tensor
    return tensor


def _require_phase(spec: ChiSpec, N: int):
    if spec.phase.N != N:
        raise PhaseMismatch(f"phase N={spec.phase.N} does not match lattice N={N}")


# ---------------------------------------------------------------------------
# dispersion mismatch polynomials


def H2(n1, n2):
    """Cubic dispersion identity (n1+n2)^3 - n1^3 - n2^3 = 3 (n1+n2) n1 n2."""
    n1 = np.asarray(n1, dtype=np.int64)
    n2 = np.asarray(n2, dtype=np.int64)
    out = 3 * (n1 + n2) * n1 * n2
    return out if out.ndim else int(out)


def H3(n1, n2, n3):
    n1 = np.asarray(n1, dtype=np.int64)
    n2 = np.asarray(n2, dtype=np.int64)
    n3 = np.asarray(n3, dtype=np.int64)
    out = (n1 + n2) * (n2 + n3) * (n3 + n1)
    return out if out.ndim else int(out)


def H4(n1, n2, n3, n4):
    n1 = np.asarray(n1, dtype=np.int64)
    n2 = np.asarray(n2, dtype=np.int64)
    n3 = np.asarray(n3, dtype=np.int64)
    n4 = np.asarray(n4, dtype=np.int64)
    out = (n1 + n2 + n3 + n4) ** 3 - n1**3 - n2**3 - n3**3 - n4**3
    return out if out.ndim else int(out)


# ---------------------------------------------------------------------------
# symbols


def _sigma_N(n1, n2, s: float):
    n = n1 + n2
    return (
        1j
        * n.astype(float)
        * bessel_weight(n1, s)
        * bessel_weight(n2, s)
        / bessel_weight(n, s)
    )


def _sigma_T(n1, n2, s: float):
    n = n1 + n2
    return (
        bessel_weight(n1, s)
        * bessel_weight(n2, s)
        / (3.0 * bessel_weight(n, s) * n1.astype(float) * n2.astype(float))
    )


# ---------------------------------------------------------------------------
# lattice transform helpers (row-wise variants of st_transform / st_inverse)


def _rows_to_time(rows: np.ndarray, M: int, dt: float) -> np.ndarray:
    """Ascending-tau spectra in each row -> time samples in each row."""
    y = rows * _alternating(M)[None, :]
    y = np.fft.ifftshift(y, axes=1)
    return np.fft.ifft(y, axis=1) / dt


def _rows_to_tau(rows: np.ndarray, M: int, dt: float) -> np.ndarray:
    spec = np.fft.fft(rows, axis=1)
    spec = np.fft.fftshift(spec, axes=1)
    return spec * (dt * _alternating(M)[None, :])


def _profiles(v: SpaceTimeField) -> np.ndarray:
    """Plain per-mode time profiles, shape (2N, M)."""
    return _rows_to_time(v.coeffs.T.copy(), v.M, v.dt)


# ---------------------------------------------------------------------------
# the bilinear engine

_W_ID = "id"
_W_CHI = "chi"
_W_COCHI = "one_minus_chi"


def _weight_rows(sel: str, rows: np.ndarray) -> np.ndarray:
    return rows if sel == _W_CHI else 1.0 - rows


def _bilinear_st(u: SpaceTimeField, v: SpaceTimeField, s: float, kind: str,
                 wu: str = _W_ID, wv: str = _W_ID,
                 spec: ChiSpec | None = None) -> SpaceTimeField:
    """Exact multiplier convolution on the (tau, n) lattice.

    ``kind`` selects the symbol ("N" or "T").  ``wu``/``wv`` attach the
    modulation cutoff (or its complement) to the first/second argument; each
    factor's cutoff depends on the partner's spatial frequency.
    """
    if (u.N, u.M) != (v.N, v.M) or abs(u.T_w - v.T_w) > 1e-14:
        raise TruncationMismatch("operands live on different lattices")
    N, M, dt = u.N, u.M, u.dt
    modes = mode_numbers(N)
    sigma = _sigma_N if kind == "N" else _sigma_T

    need_chi = (wu != _W_ID) or (wv != _W_ID)
    tensor = None
    if need_chi:
        if spec is None:
            raise PhaseMismatch("cutoff-weighted operator needs a ChiSpec")
        _require_phase(spec, N)
        tensor = _chi_tensor(spec, N, M, u.T_w)

    pu = _profiles(u) if wu == _W_ID else None
    pv = _profiles(v) if wv == _W_ID else None

    out_time = np.zeros((2 * N, M), dtype=complex)  # rows per output mode
    ut_cols = u.coeffs.T  # (2N, M), ascending tau in each row
    vt_cols = v.coeffs.T

    for i2 in range(2 * N):
        n2 = modes[i2]
        n_out = modes + n2
        valid = (n_out != 0) & (np.abs(n_out) <= N)
        if not np.any(valid):
            continue
        if wu == _W_ID:
            A = pu[valid]
        else:
            W = _weight_rows(wu, tensor[valid, i2, :])
            A = _rows_to_time(W * ut_cols[valid], M, dt)
        if wv == _W_ID:
            B = pv[i2][None, :]
        else:
            W = _weight_rows(wv, tensor[i2, valid, :])
            B = _rows_to_time(W * vt_cols[i2][None, :], M, dt)
        sig = sigma(modes[valid], np.int64(n2), s)
        iout = mode_index(n_out[valid], N)
        out_time[iout] += sig[:, None] * (A * B)

    return SpaceTimeField(N, u.T_w, M, _rows_to_tau(out_time, M, dt).T)


def _bilinear_static(a: SpectralField, b: SpectralField, s: float,
                     kind: str) -> SpectralField:
    """Time-local bilinear forms via exact truncated convolution."""
    if kind == "N":
        prod = convolve(apply_bessel(a, s), apply_bessel(b, s))
        n = mode_numbers(a.N)
        return prod.with_coeffs(1j * n * prod.coeffs / bessel_weight(n, s))
    n = mode_numbers(a.N).astype(float)
    wa = a.with_coeffs(bessel_weight(n, s) * a.coeffs / n)
    wb = b.with_coeffs(bessel_weight(n, s) * b.coeffs / n)
    prod = convolve(wa, wb)
    return prod.with_coeffs(prod.coeffs / (3.0 * bessel_weight(mode_numbers(a.N), s)))


def bilinear_N(u, v, s: float):
    """Derivative-bearing bilinear form with symbol i n <n1>^s <n2>^s / <n>^s."""
    if isinstance(u, SpectralField):
        return _bilinear_static(u, v, s, "N")
    return _bilinear_st(u, v, s, "N")


def normal_form_T(u, v, s: float):
    """Normal form operator with symbol <n1>^s <n2>^s / (3 <n>^s n1 n2)."""
    if isinstance(u, SpectralField):
        return _bilinear_static(u, v, s, "T")
    return _bilinear_st(u, v, s, "T")


def T_ell(u: SpaceTimeField, v: SpaceTimeField, s: float, spec: ChiSpec) -> SpaceTimeField:
    return _bilinear_st(u, v, s, "T", _W_CHI, _W_CHI, spec)


def T_h(u: SpaceTimeField, v: SpaceTimeField, s: float, spec: ChiSpec) -> SpaceTimeField:
    return _bilinear_st(u, v, s, "T") - T_ell(u, v, s, spec)


def N_ell(u: SpaceTimeField, v: SpaceTimeField, s: float, spec: ChiSpec) -> SpaceTimeField:
    return _bilinear_st(u, v, s, "N", _W_CHI, _W_CHI, spec)


def N_h(u: SpaceTimeField, v: SpaceTimeField, s: float, spec: ChiSpec) -> SpaceTimeField:
    return _bilinear_st(u, v, s, "N") - N_ell(u, v, s, spec)


def decompose_h(u: SpaceTimeField, v: SpaceTimeField, s: float, spec: ChiSpec):
    """The three pieces of T - T^l: (high, low), (low, high), (high, high)."""
    hl = _bilinear_st(u, v, s, "T", _W_COCHI, _W_CHI, spec)
    lh = _bilinear_st(u, v, s, "T", _W_CHI, _W_COCHI, spec)
    hh = _bilinear_st(u, v, s, "T", _W_COCHI, _W_COCHI, spec)
    return hl, lh, hh


# ---------------------------------------------------------------------------
# resonant operators


def _mirror(coeffs: np.ndarray, axis: int = -1) -> np.ndarray:
    """Coefficients of n -> coefficients of -n (reverse the mode axis)."""
    return np.flip(coeffs, axis=axis)


def resonant_R(a: SpectralField, b: SpectralField, c: SpectralField,
               s: float) -> SpectralField:
    """Closed diagonal form R_n(a,b,c) = i <n>^{2s} a_n b_n c_{-n} / n."""
    _check_three(a, b, c)
    n = mode_numbers(a.N)
    rho = bessel_weight(n, 2.0 * s) / n
    return a.with_coeffs(1j * rho * a.coeffs * b.coeffs * _mirror(c.coeffs))


def _restriction_mask(N: int) -> np.ndarray:
    """K[i_n, i_k] = 1 where the resonant triple (n, k, -k) is on the lattice.

    Requires k != -n (the inner pair may not sum to zero) and |n + k| <= N
    (the inner convolution output must be representable).
    """
    modes = mode_numbers(N)
    n = modes[:, None]
    k = modes[None, :]
    return ((k != -n) & (np.abs(n + k) <= N)).astype(float)


def resonant_restricted(a: SpectralField, b: SpectralField, c: SpectralField,
                        s: float) -> SpectralField:
    """Exact lattice restriction of the composed trilinear to its resonant set.

    Sums the ordered triples (n, k, -k) and (k, n, -k) that survive the
    truncation, counting the doubly-resonant triple (n, n, -n) once.
    """
    _check_three(a, b, c)
    N = a.N
    modes = mode_numbers(N)
    g = bessel_weight(modes, 2.0 * s) / modes
    K = _restriction_mask(N)
    crev = _mirror(c.coeffs)
    s1 = K @ (g * b.coeffs * crev)
    s2 = K @ (g * a.coeffs * crev)
    diag = np.diag(K) * g * a.coeffs * b.coeffs * crev
    out = -1j * (a.coeffs * s1 + b.coeffs * s2 - diag)
    return a.with_coeffs(out)


def resonant_R_oracle(a: SpectralField, b: SpectralField, c: SpectralField,
                      s: float) -> SpectralField:
    """Restriction-form oracle: the composed trilinear on the resonant set."""
    return resonant_restricted(a, b, c, s)


def resonant_restricted_st(a: SpaceTimeField, b: SpaceTimeField,
                           c: SpaceTimeField, s: float) -> SpaceTimeField:
    """Time-local lattice resonant operator applied along a space-time field."""
    N, M, dt = a.N, a.M, a.dt
    modes = mode_numbers(N)
    g = bessel_weight(modes, 2.0 * s) / modes
    K = _restriction_mask(N)
    pa, pb, pc = _profiles(a), _profiles(b), _profiles(c)
    pcrev = _mirror(pc, axis=0)
    s1 = K @ (g[:, None] * pb * pcrev)
    s2 = K @ (g[:, None] * pa * pcrev)
    diag = np.diag(K)[:, None] * g[:, None] * pa * pb * pcrev
    out_time = -1j * (pa * s1 + pb * s2 - diag)
    return SpaceTimeField(N, a.T_w, M, _rows_to_tau(out_time, M, dt).T)


def _check_three(a, b, c):
    if not (a.N == b.N == c.N):
        raise TruncationMismatch("resonant operands need a common truncation")


# ---------------------------------------------------------------------------
# composed trilinear operator and its resonance split


@dataclass(frozen=True)
class TrilinearParts:
    """Pieces of the composed cubic interaction 3 T^l(N(u1,u2), u3)."""

    full: SpaceTimeField   # the composition itself
    r_ell: SpaceTimeField  # its resonant (H3 = 0) part
    m: SpaceTimeField      # the nonresonant remainder: full - r_ell
    r: SpaceTimeField      # cutoff-free lattice resonant operator
    r_h: SpaceTimeField    # r - r_ell


def trilinear_M(u1: SpaceTimeField, u2: SpaceTimeField, u3: SpaceTimeField,
                s: float, spec: ChiSpec) -> TrilinearParts:
    """Compose the restricted trilinear operator and split off its resonance."""
    _require_phase(spec, u1.N)
    inner = bilinear_N(u1, u2, s)
    full = 3.0 * T_ell(inner, u3, s, spec)
    r_ell = _resonant_ell(u1, u2, u3, s, spec)
    r = resonant_restricted_st(u1, u2, u3, s)
    return TrilinearParts(
        full=full,
        r_ell=r_ell,
        m=full - r_ell,
        r=r,
        r_h=r - r_ell,
    )


def _resonant_ell(u1: SpaceTimeField, u2: SpaceTimeField, u3: SpaceTimeField,
                  s: float, spec: ChiSpec) -> SpaceTimeField:
    """Cutoff-weighted lattice resonant part of the composed trilinear.

    For the triple families (n, k, -k) and (k, n, -k) the intermediate pair
    carries the cutoff chi(n+k, tau; -k) on its total frequency and the third
    factor carries chi(-k, tau; n+k).
    """
    N, M, dt = u1.N, u1.M, u1.dt
    modes = mode_numbers(N)
    g = bessel_weight(modes, 2.0 * s) / modes
    K = _restriction_mask(N)
    tensor = _chi_tensor(spec, N, M, u1.T_w)
    p1, p2 = _profiles(u1), _profiles(u2)

    out_time = np.zeros((2 * N, M), dtype=complex)
    idx_minus = mode_index(-modes, N)  # index of -k for each k index

    for ik in range(2 * N):
        k = modes[ik]
        mask = K[:, ik] > 0.0
        if not np.any(mask):
            continue
        rows = np.nonzero(mask)[0]
        n_sel = modes[rows]
        im = mode_index(n_sel + k, N)
        imk = idx_minus[ik]
        # inner pair products, weighted on the intermediate frequency n + k
        qa = p1[rows] * p2[ik][None, :]
        qb = p1[ik][None, :] * p2[rows]
        w_mid = tensor[im, imk, :]  # chi(n+k, tau; -k)
        qa = _rows_to_time(w_mid * _rows_to_tau(qa, M, dt), M, dt)
        qb = _rows_to_time(w_mid * _rows_to_tau(qb, M, dt), M, dt)
        # third factor at -k, weighted against the intermediate frequency
        w3 = tensor[imk, im, :]  # chi(-k, tau; n+k)
        b3 = _rows_to_time(w3 * u3.coeffs.T[imk][None, :], M, dt)
        contrib = (-1j * g[ik]) * (qa + qb) * b3
        # the doubly resonant triple (n, n, -n) appears in both families
        overlap = rows == mode_index(k, N)
        if np.any(overlap):
            contrib[overlap] -= (-1j * g[ik]) * qa[overlap] * b3[overlap]
        out_time[rows] += contrib

    return SpaceTimeField(N, u1.T_w, M, _rows_to_tau(out_time, M, dt).T)
