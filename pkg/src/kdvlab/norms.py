"""Discrete modulation-weighted norms and empirical embedding diagnostics.

Modulation annuli are the dyadic shells <tau - n^3 - phi_n> in [2^j, 2^(j+1)),
which partition the tau lattice for every mode.  The L2-type pieces use the
lattice measure dtau/(2 pi) per point; per-annulus L1-in-tau pieces use the
same quadrature and enter through the square-sum over shells.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivisionByZeroNorm, EmptyBlock, PhaseMismatch, UnsupportedExponent
from .fields import (
    SpaceTimeField,
    SpectralField,
    bessel_weight,
    lebesgue_norm,
    mode_numbers,
)
from .phase import PhaseData, dispersion_vector

__all__ = [
    "WeightSpec",
    "weight",
    "modulation_levels",
    "norm_Y",
    "norm_Z",
    "norm_Zstar",
    "norm_Xsb",
    "norm_Xtilde",
    "norm_X",
    "strichartz_ratio",
    "embedding_ratio",
    "norm_report_rows",
]


@dataclass(frozen=True)
class WeightSpec:
    """A named modulation/frequency weight with its epsilon and branch knobs."""

    kind: str                   # one of Y, Z, Xtilde, Xsb, Zstar
    eps: float = 0.01
    s: float = 0.55
    b: float = 0.0              # used by Xsb only
    ll_threshold: float = 8.0   # "L << |n|" means L < |n| / ll_threshold

    def __post_init__(self):
        if self.kind not in ("Y", "Z", "Xtilde", "Xsb", "Zstar"):
            raise ValueError(f"unknown weight kind {self.kind!r}")


def _low_branch(n, L, ll_threshold: float):
    return np.asarray(L) < np.abs(np.asarray(n)) / ll_threshold


def weight(spec: WeightSpec, n, L):
    """Evaluate the weight at mode n and dyadic modulation level L."""
    n = np.asarray(n, dtype=float)
    L = np.asarray(L, dtype=float)
    low = _low_branch(n, L, spec.ll_threshold)
    e = spec.eps
    if spec.kind == "Y":
        out = np.where(low, L ** (0.5 + e),
                       L ** (1.0 / 3.0 + e) * bessel_weight(n, 1.0 / 3.0 - e))
    elif spec.kind == "Z":
        out = np.where(low, L ** (0.5 + e), L ** (2.0 / 3.0 + e))
    elif spec.kind == "Zstar":
        out = np.where(low, L ** (-0.5 + e), L ** (-1.0 / 3.0 + e))
    elif spec.kind == "Xtilde":
        out = np.where(
            low,
            L ** (-0.5 + e) * bessel_weight(n, 2.0 * spec.s - 1.0 + e),
            L ** (-1.0 / 3.0 + e),
        )
    else:  # Xsb
        out = bessel_weight(n, spec.s) * L**spec.b
    return out if out.ndim else float(out)


def _modulation(v: SpaceTimeField, phase: PhaseData) -> np.ndarray:
    """<tau - n^3 - phi_n> on the lattice, shape (M, 2N)."""
    if phase.N != v.N:
        raise PhaseMismatch(f"phase N={phase.N} vs lattice N={v.N}")
    L_n = dispersion_vector(phase)
    taus = v.taus()
    return np.hypot(1.0, taus[:, None] - L_n[None, :])


def modulation_levels(v: SpaceTimeField, phase: PhaseData) -> np.ndarray:
    """Dyadic level index j with <tau - n^3 - phi_n> in [2^j, 2^(j+1))."""
    return np.floor(np.log2(_modulation(v, phase))).astype(int)


def _l2_measure(v: SpaceTimeField) -> float:
    return v.dtau / (2.0 * np.pi)


def _shell_l2_l1(v: SpaceTimeField, phase: PhaseData):
    """Per-shell squared-L2 data and L1-in-tau partial sums.

    Returns (levels present, modulation array, level index array).
    """
    mod = _modulation(v, phase)
    lev = np.floor(np.log2(mod)).astype(int)
    return mod, lev


def _square_sum_norm(v: SpaceTimeField, phase: PhaseData, w_fn,
                     l1_weight_fn=None) -> float:
    """sum over shells of (||w vhat_L||_L2 + ||l1w vhat_L||_(l2 L1))^2, rooted."""
    mod, lev = _shell_l2_l1(v, phase)
    n = mode_numbers(v.N)
    meas = _l2_measure(v)
    a = np.abs(v.coeffs)
    total = 0.0
    for j in range(int(lev.min()), int(lev.max()) + 1):
        mask = lev == j
        if not mask.any():
            continue
        L = float(2**j)
        w = w_fn(n[None, :], L)
        l2_part = np.sqrt(np.sum((w * a) ** 2 * mask * meas))
        piece = l2_part
        if l1_weight_fn is not None:
            lw = l1_weight_fn(n, L)
            per_mode = np.sum(a * mask, axis=0) * meas
            piece = piece + np.sqrt(np.sum((lw * per_mode) ** 2))
        total += piece * piece
    return float(np.sqrt(total))


def norm_Y(v: SpaceTimeField, phase: PhaseData, eps: float = 0.01) -> float:
    spec = WeightSpec("Y", eps=eps)
    return _square_sum_norm(
        v, phase,
        w_fn=lambda n, L: weight(spec, n, L),
        l1_weight_fn=lambda n, L: np.ones_like(np.asarray(n, dtype=float)),
    )


def norm_Z(v: SpaceTimeField, phase: PhaseData, eps: float = 0.01) -> float:
    spec = WeightSpec("Z", eps=eps)
    return _square_sum_norm(v, phase, w_fn=lambda n, L: weight(spec, n, L))


def norm_Zstar(v: SpaceTimeField, phase: PhaseData, eps: float = 0.01) -> float:
    spec = WeightSpec("Zstar", eps=eps)
    return _square_sum_norm(v, phase, w_fn=lambda n, L: weight(spec, n, L))


def norm_Xsb(v: SpaceTimeField, s: float, b: float, phase: PhaseData) -> float:
    """Sharp-weight norm ||<n>^s <tau - n^3 - phi_n>^b vhat||_(l2 L2)."""
    mod = _modulation(v, phase)
    n = mode_numbers(v.N)
    w = bessel_weight(n[None, :], s) * mod**b
    return float(np.sqrt(np.sum((w * np.abs(v.coeffs)) ** 2) * _l2_measure(v)))


def norm_Xtilde(v: SpaceTimeField, s: float, eps: float, phase: PhaseData,
                ll_threshold: float = 8.0) -> float:
    spec = WeightSpec("Xtilde", eps=eps, s=s, ll_threshold=ll_threshold)

    def l1w(n, L):
        high = ~_low_branch(n, L, ll_threshold)
        return np.where(high, bessel_weight(n, 2.0 * s - 1.0 + eps) / L, 0.0)

    return _square_sum_norm(
        v, phase, w_fn=lambda n, L: weight(spec, n, L), l1_weight_fn=l1w
    )


def norm_X(v: SpaceTimeField, s: float, eps: float, phase: PhaseData) -> float:
    """min of the two functionals used to measure the nonlinearity."""
    return min(
        norm_Xtilde(v, s, eps, phase),
        norm_Xsb(v, 2.0 * s - 1.0 + eps, -0.5 + eps, phase),
    )


# ---------------------------------------------------------------------------
# Strichartz and embedding diagnostics


def _is_prime(k: int) -> bool:
    if k < 2:
        return False
    i = 2
    while i * i <= k:
        if k % i == 0:
            return False
        i += 1
    return True


def _next_prime(k: int) -> int:
    while not _is_prime(k):
        k += 1
    return k


def strichartz_ratio(g: SpectralField, phase: PhaseData, p: int,
                     t_points: int | None = None, x_oversample: int = 4) -> float:
    """Space-time L^p mass of a frequency-block free evolution, per unit l2.

    Evaluates sum over the block of g_n exp(i t (n^3 + phi_n) + i n x) on an
    oversampled grid over one time period surrogate [0, 2*pi] with measure
    normalized to 1, and divides by ||g||_{l2}.  A prime number of time
    samples keeps integer-frequency aliasing off the quadrature.
    """
    if p not in (2, 4, 6):
        raise UnsupportedExponent(f"p must be one of 2, 4, 6; got {p}")
    active = np.abs(g.coeffs) > 0
    if not active.any():
        raise EmptyBlock("block field has no active modes")
    n_act = mode_numbers(g.N)[active]
    c_act = g.coeffs[active]
    L = dispersion_vector(phase)[active] if phase.N == g.N else None
    if L is None:
        raise PhaseMismatch("phase truncation differs from block field")
    nd = int(np.max(np.abs(n_act)))
    Gt = t_points or _next_prime(max(512, 16 * nd))
    Gx = x_oversample * (2 * nd + 1)
    t = 2.0 * np.pi * np.arange(Gt) / Gt
    # time factor (Gt, modes), then expand in x by FFT
    phases = np.exp(1j * np.outer(t, L))
    spec_x = np.zeros((Gt, Gx), dtype=complex)
    spec_x[:, n_act % Gx] = phases * c_act[None, :]
    vals = np.fft.ifft(spec_x, axis=1) * Gx
    lp = float(np.mean(np.abs(vals) ** p) ** (1.0 / p))
    return lp / float(np.linalg.norm(c_act))


def embedding_ratio(v: SpaceTimeField, from_spec: WeightSpec, to: str,
                    phase: PhaseData) -> float:
    """target-norm / source-norm for one sample field."""
    kind = from_spec.kind
    if kind == "Y":
        src = norm_Y(v, phase, from_spec.eps)
    elif kind == "Z":
        src = norm_Z(v, phase, from_spec.eps)
    elif kind == "Zstar":
        src = norm_Zstar(v, phase, from_spec.eps)
    elif kind == "Xtilde":
        src = norm_Xtilde(v, from_spec.s, from_spec.eps, phase)
    else:
        src = norm_Xsb(v, from_spec.s, from_spec.b, phase)
    if src == 0.0:
        raise DivisionByZeroNorm("source norm vanishes")
    if to == "L4":
        tgt = lebesgue_norm(v, 4)
    elif to == "L6":
        tgt = lebesgue_norm(v, 6)
    elif to == "Xsb":
        tgt = norm_Xsb(v, 0.0, 1.0 / 3.0 + from_spec.eps, phase)
    else:
        raise ValueError(f"unknown embedding target {to!r}")
    return tgt / src


def norm_report_rows(v: SpaceTimeField, phase: PhaseData, s: float,
                     eps: float) -> list:
    """CSV rows {norm_kind, N, T_w, eps, value} for the standard norms."""
    rows = []
    for kind, val in (
        ("Y", norm_Y(v, phase, eps)),
        ("Z", norm_Z(v, phase, eps)),
        ("Zstar", norm_Zstar(v, phase, eps)),
        ("Xtilde", norm_Xtilde(v, s, eps, phase)),
        ("X", norm_X(v, s, eps, phase)),
        ("Xsb_0_1/3+", norm_Xsb(v, 0.0, 1.0 / 3.0 + eps, phase)),
    ):
        rows.append([kind, v.N, v.T_w, eps, val])
    return rows
