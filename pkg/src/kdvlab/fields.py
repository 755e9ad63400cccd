"""Truncated periodic spectral fields and their space-time transforms.

Conventions used throughout the package:

* A spatial field is real, mean-zero, and represented by Fourier coefficients
  on the modes n in {-N, ..., -1, 1, ..., N}; the n = 0 slot does not exist.
  Physical values are u(x) = sum_n c_n exp(i n x) on the 2*pi-periodic torus
  with measure normalized to total mass 1, so Parseval reads
  mean(|u|^2) = sum_n |c_n|^2.
* A space-time field lives on the lattice (tau_k, n) with tau_k = k*pi/T_w,
  k in {-M/2, ..., M/2 - 1}, obtained from M uniform time samples on
  [-T_w, T_w) multiplied by the smooth window.  The transform pair is
  F[x](tau_k) = dt * sum_j x(t_j) exp(-i tau_k t_j) and its exact discrete
  inverse, so a pure oscillation exp(i a t) concentrates at tau = a.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    GridMismatch,
    SymmetryViolation,
    TruncationMismatch,
    UnsupportedExponent,
    ZeroModePresent,
)
from .window import bump_window

__all__ = [
    "SpectralField",
    "SpaceTimeField",
    "mode_numbers",
    "mode_index",
    "make_field",
    "zero_field",
    "random_field",
    "bessel_weight",
    "apply_bessel",
    "convolve",
    "st_transform",
    "st_inverse",
    "sobolev_norm",
    "lebesgue_norm",
    "hermitian_defect",
    "field_to_json",
    "field_from_json",
    "stfield_to_json",
    "stfield_from_json",
]


def mode_numbers(N: int) -> np.ndarray:
    """The represented modes [-N, ..., -1, 1, ..., N] in storage order."""
    return np.concatenate([np.arange(-N, 0), np.arange(1, N + 1)])


def mode_index(n, N: int):
    """Storage index of mode n (vectorized); caller guarantees 1 <= |n| <= N."""
    n = np.asarray(n)
    return np.where(n < 0, n + N, n + N - 1)


@dataclass(frozen=True)
class SpectralField:
    """Truncated Fourier coefficients of a real, mean-zero periodic function."""

    N: int
    coeffs: np.ndarray  # complex, length 2N, storage order of mode_numbers(N)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (2 * self.N,):
            raise TruncationMismatch(
                f"expected {2 * self.N} coefficients, got shape {c.shape}"
            )
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    def mode(self, n: int) -> complex:
        if n == 0 or abs(n) > self.N:
            raise ZeroModePresent(f"mode {n} not represented (N={self.N})")
        return complex(self.coeffs[mode_index(n, self.N)])

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.N, coeffs)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same_truncation(self, other)
        return SpectralField(self.N, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same_truncation(self, other)
        return SpectralField(self.N, self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "SpectralField":
        return SpectralField(self.N, self.coeffs * scalar)

    __rmul__ = __mul__

    def l2(self) -> float:
        return float(np.linalg.norm(self.coeffs))


@dataclass(frozen=True)
class SpaceTimeField:
    """Coefficients on the truncated (tau, n) lattice of a windowed trajectory."""

    N: int
    T_w: float
    M: int
    coeffs: np.ndarray  # complex, shape (M, 2N); rows = ascending tau_k

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if self.M % 2 != 0:
            raise GridMismatch("M must be even")
        if c.shape != (self.M, 2 * self.N):
            raise GridMismatch(
                f"expected shape {(self.M, 2 * self.N)}, got {c.shape}"
            )
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    def taus(self) -> np.ndarray:
        return (np.arange(self.M) - self.M // 2) * (np.pi / self.T_w)

    def times(self) -> np.ndarray:
        dt = 2.0 * self.T_w / self.M
        return -self.T_w + dt * np.arange(self.M)

    @property
    def dt(self) -> float:
        return 2.0 * self.T_w / self.M

    @property
    def dtau(self) -> float:
        return np.pi / self.T_w

    def with_coeffs(self, coeffs: np.ndarray) -> "SpaceTimeField":
        return SpaceTimeField(self.N, self.T_w, self.M, coeffs)

    def __add__(self, other: "SpaceTimeField") -> "SpaceTimeField":
        _check_same_grid(self, other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpaceTimeField") -> "SpaceTimeField":
        _check_same_grid(self, other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "SpaceTimeField":
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__


def _check_same_truncation(a: SpectralField, b: SpectralField):
    if a.N != b.N:
        raise TruncationMismatch(f"N mismatch: {a.N} vs {b.N}")


def _check_same_grid(a: SpaceTimeField, b: SpaceTimeField):
    if (a.N, a.M) != (b.N, b.M) or abs(a.T_w - b.T_w) > 1e-14:
        raise GridMismatch(
            f"lattice mismatch: {(a.N, a.T_w, a.M)} vs {(b.N, b.T_w, b.M)}"
        )


def make_field(coeffs, N: int, tol_sym: float = 1e-12) -> SpectralField:
    """Validate and symmetrize a coefficient array into a SpectralField.

    The array must have length 2N (a length 2N+1 array is rejected as carrying
    an n = 0 slot).  Conjugate pairs are checked to relative tolerance
    ``tol_sym`` and then enforced exactly by averaging c_n with conj(c_{-n}).
    """
    c = np.asarray(coeffs, dtype=complex)
    if c.ndim != 1:
        raise TruncationMismatch("coefficient array must be one-dimensional")
    if c.shape[0] == 2 * N + 1:
        raise ZeroModePresent(
            "coefficient array has 2N+1 slots; the n = 0 mode is structurally absent"
        )
    if c.shape[0] != 2 * N:
        raise TruncationMismatch(f"expected 2N={2 * N} coefficients, got {c.shape[0]}")
    mirrored = np.conj(c[::-1])
    scale = np.abs(c) + np.abs(mirrored)
    defect = np.abs(c - mirrored)
    bad = defect > tol_sym * np.maximum(scale, 1.0)
    if np.any(bad):
        n_bad = mode_numbers(N)[bad][0]
        raise SymmetryViolation(
            f"coeff[{n_bad}] != conj(coeff[{-n_bad}]) beyond tol_sym={tol_sym}"
        )
    return SpectralField(N, 0.5 * (c + mirrored))


def zero_field(N: int) -> SpectralField:
    return SpectralField(N, np.zeros(2 * N, dtype=complex))


def random_field(N: int, rng: np.random.Generator, decay: float = 0.0,
                 amplitude: float = 1.0) -> SpectralField:
    """Random real field with |c_n| ~ amplitude * <n>^(-decay)."""
    n = mode_numbers(N)
    half = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    half = half * amplitude / np.sqrt(2.0)
    c = np.empty(2 * N, dtype=complex)
    c[N:] = half
    c[:N] = np.conj(half[::-1])
    c = c * (1.0 + n.astype(float) ** 2) ** (-decay / 2.0)
    return SpectralField(N, c)


def hermitian_defect(field) -> float:
    """Max deviation from the real-field symmetry, for property tests."""
    c = field.coeffs
    if isinstance(field, SpectralField):
        return float(np.max(np.abs(c - np.conj(c[::-1]))))
    # space-time: coeffs[-tau, -n] = conj(coeffs[tau, n]); the tau row
    # k = -M/2 is self-paired because +M/2 aliases onto it.
    M = field.M
    flipped = np.empty_like(c)
    flipped[1:] = c[1:][::-1]
    flipped[0] = c[0]
    return float(np.max(np.abs(c - np.conj(flipped[:, ::-1]))))


def bessel_weight(n, s: float):
    """The inhomogeneous symbol <n>^s = (1 + n^2)^(s/2)."""
    n = np.asarray(n, dtype=float)
    out = (1.0 + n * n) ** (s / 2.0)
    return out if out.ndim else float(out)


def apply_bessel(u: SpectralField, s: float) -> SpectralField:
    return u.with_coeffs(u.coeffs * bessel_weight(mode_numbers(u.N), s))


def _dense_embed(u: SpectralField) -> np.ndarray:
    """Coefficients on the dense index n in [-N, N] with a zero at n = 0."""
    d = np.zeros(2 * u.N + 1, dtype=complex)
    d[: u.N] = u.coeffs[: u.N]
    d[u.N + 1:] = u.coeffs[u.N:]
    return d


def _dense_extract(dense: np.ndarray, N_out: int, N_dense: int):
    """Restrict a dense array over [-N_dense, N_dense] to the 2*N_out layout."""
    center = N_dense
    out = np.empty(2 * N_out, dtype=complex)
    out[:N_out] = dense[center - N_out: center]
    out[N_out:] = dense[center + 1: center + N_out + 1]
    zero_mass = dense[center]
    return out, zero_mass


def convolve(a: SpectralField, b: SpectralField, method: str = "fft",
             return_zero_mode: bool = False):
    """Exact truncated convolution c_n = sum_{n1+n2=n} a_{n1} b_{n2}.

    Output is restricted to 1 <= |n| <= N; the mass landing on n = 0 is
    dropped (returned separately when ``return_zero_mode`` is set).  The
    "fft" path uses zero-padded transforms of size >= 2*(2N+1); the
    "direct" path sums the products outright.  Both agree to 1e-12.
    """
    _check_same_truncation(a, b)
    N = a.N
    da, db = _dense_embed(a), _dense_embed(b)
    if method == "direct":
        dense = np.convolve(da, db)
    elif method == "fft":
        size = 2 * (2 * N + 1)
        size = 1 << int(np.ceil(np.log2(size)))
        fa = np.fft.fft(da, size)
        fb = np.fft.fft(db, size)
        dense = np.fft.ifft(fa * fb)[: 4 * N + 1]
    else:
        raise ValueError(f"unknown method {method!r}")
    # dense covers sums n in [-2N, 2N]
    out, zero_mass = _dense_extract(dense, N, 2 * N)
    field = SpectralField(N, out)
    if return_zero_mode:
        return field, complex(zero_mass)
    return field


# ---------------------------------------------------------------------------
# space-time transforms


def _alternating(M: int) -> np.ndarray:
    """(-1)^k for the tau index k = row - M/2 (parity of the row works too)."""
    return np.where(np.arange(M) % 2 == 0, 1.0, -1.0)


def st_transform(samples, N: int, T_w: float, window=bump_window) -> SpaceTimeField:
    """Windowed discrete space-time transform of uniform time samples.

    ``samples`` is an (M, 2N) complex array (or a sequence of SpectralField)
    of coefficients at times t_j = -T_w + j * 2*T_w/M.  Each time slice is
    multiplied by ``window(t_j)`` (pass ``window=None`` for samples that are
    already windowed), then transformed to the tau lattice.
    """
    if not isinstance(samples, np.ndarray):
        rows = []
        for s in samples:
            if s.N != N:
                raise GridMismatch("sample truncation differs from N")
            rows.append(s.coeffs)
        samples = np.asarray(rows)
    M = samples.shape[0]
    if M % 2 != 0 or samples.shape[1] != 2 * N:
        raise GridMismatch(f"bad sample array shape {samples.shape}")
    dt = 2.0 * T_w / M
    x = samples.astype(complex)
    if window is not None:
        t = -T_w + dt * np.arange(M)
        x = x * window(t)[:, None]
    spec = np.fft.fft(x, axis=0)  # fft order in k
    spec = np.fft.fftshift(spec, axes=0)  # ascending k = -M/2 .. M/2-1
    spec *= dt * _alternating(M)[:, None]
    return SpaceTimeField(N, T_w, M, spec)


def st_inverse(v: SpaceTimeField) -> np.ndarray:
    """Exact inverse of st_transform; returns the (windowed) time samples."""
    y = v.coeffs * _alternating(v.M)[:, None]
    y = np.fft.ifftshift(y, axes=0)
    x = np.fft.ifft(y, axis=0) / v.dt
    return x


# ---------------------------------------------------------------------------
# norms


def sobolev_norm(u: SpectralField, s: float) -> float:
    """H^s norm (sum <n>^{2s} |c_n|^2)^(1/2)."""
    w = bessel_weight(mode_numbers(u.N), s)
    return float(np.linalg.norm(w * u.coeffs))


def _physical_values(v: SpaceTimeField, os_t: int, os_x: int) -> np.ndarray:
    """Field values on an oversampled (t, x) grid; shape (os_t*M, Gx)."""
    x_t = st_inverse(v)  # (M, 2N) time samples
    Gt = os_t * v.M
    # zero-pad in tau: the tau content of x_t is the v lattice, so padding the
    # spectrum and inverting on the finer grid reproduces the trig interpolant.
    spec = np.fft.fft(x_t, axis=0)
    padded = np.zeros((Gt, x_t.shape[1]), dtype=complex)
    half = v.M // 2
    padded[:half] = spec[:half]
    padded[Gt - half: Gt] = spec[half:]
    fine_t = np.fft.ifft(padded, axis=0) * (Gt / v.M)
    # now expand in x on a grid of Gx points
    Gx = os_x * (2 * v.N + 1)
    spec_x = np.zeros((Gt, Gx), dtype=complex)
    n = mode_numbers(v.N)
    spec_x[:, n % Gx] = fine_t
    return np.fft.ifft(spec_x, axis=1) * Gx


def lebesgue_norm(v: SpaceTimeField, p: int, oversample: int | None = None) -> float:
    """L^p norm on the (t, x) torus with measure normalized to 1.

    Exact for the represented trigonometric degree when the oversampling
    factor is at least p/2 + 1 (the default).
    """
    if p not in (2, 4, 6):
        raise UnsupportedExponent(f"p must be one of 2, 4, 6; got {p}")
    os = oversample if oversample is not None else p // 2 + 1
    vals = _physical_values(v, os, os)
    return float(np.mean(np.abs(vals) ** p) ** (1.0 / p))


# ---------------------------------------------------------------------------
# serialization (binary-free JSON schema)


def _pairs(c: np.ndarray):
    flat = np.asarray(c).ravel()
    return [[float(z.real), float(z.imag)] for z in flat]


def field_to_json(u: SpectralField) -> str:
    return json.dumps({"N": u.N, "coeffs": _pairs(u.coeffs)}, sort_keys=True)


def field_from_json(text: str) -> SpectralField:
    doc = json.loads(text)
    c = np.array([complex(re, im) for re, im in doc["coeffs"]])
    return SpectralField(int(doc["N"]), c)


def stfield_to_json(v: SpaceTimeField) -> str:
    doc = {
        "N": v.N,
        "T_w": v.T_w,
        "M": v.M,
        "coeffs": _pairs(v.coeffs),  # row-major (tau, n)
    }
    return json.dumps(doc, sort_keys=True)


def stfield_from_json(text: str) -> SpaceTimeField:
    doc = json.loads(text)
    N, M = int(doc["N"]), int(doc["M"])
    c = np.array([complex(re, im) for re, im in doc["coeffs"]]).reshape(M, 2 * N)
    return SpaceTimeField(N, float(doc["T_w"]), M, c)
