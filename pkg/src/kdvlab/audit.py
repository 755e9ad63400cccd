"""Brute-force numerical verification of the identities and symbol bounds.

Frequency scans evaluate the weighted symbol ratios over their defining
regions exactly (pure integer/float arithmetic, no fields).  Where a ratio
involves modulation levels, the levels enter the denominator with positive
exponents, so the supremum sits at the smallest feasible dyadic corner; the
scans enumerate those corners from the exact signed support arithmetic
(m = m_1 + m_2 - K with K the integer dispersion mismatch) instead of
tiling the full modulation cube.  Corners are rounded toward smaller
levels, which can only enlarge the reported ratio.

Region constants: "a ~ b" means max/min <= 2, "a >> b" means a >= 4 b, and
an escaped modulation means a value >= 2x the cutoff threshold (where the
ramp complement is bounded below).  All scans are deterministic and reduce
over chunks in sorted order, so results are identical across worker counts.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyRegion
from .fields import (
    SpectralField,
    bessel_weight,
    mode_numbers,
    st_inverse,
    st_transform,
    zero_field,
)
from .multipliers import ChiSpec, H4, bilinear_N, chi, normal_form_T, resonant_restricted
from .norms import norm_X, norm_Z, norm_Zstar
from .phase import PhaseData, dispersion_vector
from .solvers import Trajectory
from .system import duhamel, k_integral
from .window import bump_window

__all__ = [
    "SymbolReport",
    "SYMBOL_CASES",
    "audit_symbol",
    "audit_quad_cancellation",
    "verify_cancellation",
    "verify_nf_identity",
    "verify_duhamel_bound",
    "verify_vkn",
    "verify_h_smoothing",
    "random_spacetime",
]

SIM = 2.0    # "comparable" frequencies: max/min <= SIM
GG = 4.0     # "much larger": at least GG times
ESC = 2.0    # escaped modulation: value >= ESC * threshold


@dataclass
class SymbolReport:
    case_id: str
    s: float
    eps: float
    Nmax: int
    sup_ratio: float
    argmax: tuple
    fit_exponent: float | None = None
    extra: dict = field(default_factory=dict)

    def row(self) -> list:
        fit = "" if self.fit_exponent is None else self.fit_exponent
        return [self.case_id, self.s, self.eps, self.Nmax, self.sup_ratio,
                " ".join(str(x) for x in self.argmax), fit]


def _ang(x) -> np.ndarray:
    return np.hypot(1.0, np.asarray(x, dtype=float))


def _signed_range(N: int) -> np.ndarray:
    return np.concatenate([np.arange(-N, 0), np.arange(1, N + 1)])


def _reduce_chunks(results):
    """Deterministic max-reduction with lexicographic argmax tie-break."""
    best = -np.inf
    best_arg: tuple = ()
    for sup, arg in results:
        if sup > best or (sup == best and tuple(arg) < best_arg):
            best, best_arg = sup, tuple(arg)
    return best, best_arg


# ---------------------------------------------------------------------------
# trilinear scans (pure frequency)


def _tri_chunk(args):
    case_id, s, eps, Nmax, n1_block = args
    rng_all = _signed_range(Nmax)
    n2, n3 = np.meshgrid(rng_all, rng_all, indexing="ij")
    best = -np.inf
    best_arg = ()
    for n1 in n1_block:
        n = n1 + n2 + n3
        h3 = (n1 + n2) * (n2 + n3) * (n3 + n1)
        base = (n != 0) & (n1 + n2 != 0) & (h3 != 0)
        a1, a2, a3 = abs(n1), np.abs(n2), np.abs(n3)
        if case_id.endswith("1A") or case_id == "sym2-1B":
            region = base & (a1 >= GG * np.maximum(a2, a3))
        elif case_id.endswith("2A") or case_id == "sym2-2B":
            mx = np.maximum(a1, np.maximum(a2, a3))
            mn = np.minimum(a1, np.minimum(a2, a3))
            region = base & (mx <= SIM * mn)
        else:  # sym2-3B-v on the wide-pair region
            region = base & (np.maximum(a1, a2) <= SIM * np.minimum(a1, a2))
            region &= np.minimum(a1, a2) >= GG * a3
        if not region.any():
            continue
        nn = n[region].astype(float)
        m2 = n2[region].astype(float)
        m3 = n3[region].astype(float)
        hh = _ang(h3[region])
        w1, w2, w3 = _ang(n1), _ang(m2), _ang(m3)
        wn = _ang(nn)
        if case_id.startswith("sym12"):
            pair = np.minimum(
                _ang(n1 + m2), np.minimum(_ang(m2 + m3), _ang(m3 + n1))
            )
            q = (
                wn ** (2.0 * s - 1.0 + eps)
                * w1**s
                * w2**s
                * pair ** (1.0 + eps)
                / (wn**s * w3 ** (1.0 - s) * hh)
            )
        elif case_id.startswith("sym1"):
            q = w1**s * w2**s / (wn**s * w3 ** (1.0 - s) * hh ** (1.0 / 3.0 - eps))
        elif case_id == "sym2-3B-v":
            sig = w1**s * w2**s * w3**s / (np.abs(m3) * wn**s)
            q = wn ** (1.0 / 3.0) * sig / hh ** (2.0 / 3.0 - eps)
        else:  # sym2-1B / sym2-2B; one good j suffices, so take the best gain
            sig = w1**s * w2**s * w3**s / (np.abs(m3) * wn**s)
            gain = np.maximum(
                w1 ** (1.0 / 3.0 - eps),
                np.maximum(w2 ** (1.0 / 3.0 - eps), w3 ** (1.0 / 3.0 - eps)),
            )
            q = wn ** (1.0 / 3.0) * sig / (gain * hh ** (1.0 / 3.0 - eps))
        i = int(np.argmax(q))
        if q[i] > best:
            best = float(q[i])
            best_arg = (int(n1), int(m2[i]), int(m3[i]))
    return best, best_arg


# ---------------------------------------------------------------------------
# quadrilinear scans


def _sigma_m1(n1, n2, n3, n4, s):
    n = n1 + n2 + n3 + n4
    return (
        _ang(n1) ** s * _ang(n2) ** s * _ang(n3) ** s * _ang(n4) ** s
        / (np.abs(n1 * n2 * n4).astype(float) * _ang(n) ** s)
    )


def _quad_3bi_chunk(args):
    case_id, s, eps, Nmax, big_block = args
    small = _signed_range(Nmax)
    n2, n4 = np.meshgrid(small, small, indexing="ij")
    best, best_arg = -np.inf, ()
    for NN in big_block:
        region = (NN >= GG * np.maximum(np.abs(n2), np.abs(n4))) & (n2 + n4 != 0)
        if not region.any():
            continue
        m2 = n2[region].astype(float)
        m4 = n4[region].astype(float)
        n = m2 + m4
        sig = _sigma_m1(float(NN), m2, -float(NN), m4, s)
        nmin = _ang(np.minimum(np.abs(m2), np.abs(m4)))
        if case_id == "quad-3Bi":
            gain = (float(NN) ** 2 * np.abs(m2)) ** (1.0 / 3.0 + eps)
        else:  # case3-unrestricted: only the tiny quadratic mismatch helps
            h4 = H4(np.int64(NN), n2[region], -np.int64(NN), n4[region])
            gain = _ang(h4) ** (1.0 / 3.0 + eps)
        q = _ang(n) ** (1.0 / 3.0) * sig * nmin ** (0.5 + eps) / gain
        i = int(np.argmax(q))
        if q[i] > best:
            best = float(q[i])
            best_arg = (int(NN), int(m2[i]), -int(NN), int(m4[i]))
    return best, best_arg


def _quad_3bii_chunk(args):
    _case_id, s, eps, Nmax, n1_block = args
    best, best_arg = -np.inf, ()
    for n1 in n1_block:
        a1 = abs(n1)
        lo3 = int(np.ceil(a1 / SIM))
        hi3 = min(Nmax, int(SIM * a1))
        if lo3 > hi3:
            continue
        n3_vals = np.concatenate([np.arange(-hi3, -lo3 + 1), np.arange(lo3, hi3 + 1)])
        n3_vals = n3_vals[n1 + n3_vals != 0]
        cap = int(min(a1, abs(n3_vals).min() if n3_vals.size else a1) // GG)
        if cap < 1 or n3_vals.size == 0:
            continue
        small = _signed_range(cap)
        for n3 in n3_vals:
            a3 = abs(n3)
            n2, n4 = np.meshgrid(small, small, indexing="ij")
            region = np.abs(n1 + n2).astype(float) >= a3 / SIM
            region &= np.abs(n1 + n2).astype(float) <= SIM * a3
            n = n1 + n2 + n3 + n4
            region &= n != 0
            region &= np.minimum(a1, a3) >= GG * np.maximum(np.abs(n2), np.abs(n4))
            if not region.any():
                continue
            m2 = n2[region]
            m4 = n4[region]
            h4 = H4(np.int64(n1), m2, np.int64(n3), m4)
            sig = _sigma_m1(float(n1), m2.astype(float), float(n3), m4.astype(float), s)
            nmin = _ang(np.minimum(np.abs(m2), np.abs(m4)))
            q = (
                _ang(n[region]) ** (1.0 / 3.0)
                * sig
                * nmin ** (0.5 + eps)
                / _ang(h4) ** (1.0 / 3.0 + eps)
            )
            i = int(np.argmax(q))
            if q[i] > best:
                best = float(q[i])
                best_arg = (int(n1), int(m2[i]), int(n3), int(m4[i]))
    return best, best_arg


def _quad_3biii_chunk(args):
    _case_id, s, eps, Nmax, n1_block = args
    best, best_arg = -np.inf, ()
    for n1 in n1_block:
        a1 = abs(n1)
        lo = int(np.ceil(a1 / SIM))
        hi = min(Nmax, int(SIM * a1))
        if lo > hi:
            continue
        band = np.concatenate([np.arange(-hi, -lo + 1), np.arange(lo, hi + 1)])
        band = band[band != 0]
        n2, n3 = np.meshgrid(band, band, indexing="ij")
        pair_ok = (n1 + n2 != 0) & (np.abs(n1 + n2) >= np.abs(n3) / SIM)
        pair_ok &= np.abs(n1 + n2) <= SIM * np.abs(n3)
        cap = int(min(a1, abs(band).min()) // GG)
        if cap < 1:
            continue
        for n4 in _signed_range(cap):
            region = pair_ok & (np.minimum(np.abs(n2), np.abs(n3)) >= GG * abs(n4))
            n = n1 + n2 + n3 + n4
            region &= n != 0
            if not region.any():
                continue
            m2 = n2[region].astype(float)
            m3 = n3[region].astype(float)
            sig = _sigma_m1(float(n1), m2, m3, float(n4), s)
            nmin = _ang(min(abs(n4), a1))
            q = _ang(n[region]) ** (1.0 / 3.0) * sig * nmin ** (0.5 + eps)
            i = int(np.argmax(q))
            if q[i] > best:
                best = float(q[i])
                best_arg = (int(n1), int(m2[i]), int(m3[i]), int(n4))
    return best, best_arg


# ---------------------------------------------------------------------------
# modulation-corner scans (bilinear high part and resonant high part)


def _dyadic_floor(x):
    x = np.maximum(np.asarray(x, dtype=float), 1.0)
    return 2.0 ** np.floor(np.log2(x))


def _escape_level(B):
    """Smallest dyadic block containing values >= ESC * B."""
    return 2.0 ** (np.floor(np.log2(np.maximum(ESC * np.asarray(B, float), 1.0))) + 1.0) / 2.0


def _companion_gap(B, K, L_esc):
    """Distance from zero of the escaped variable's reach m_esc - K.

    The escaped value lies in +-[max(ESC*B, L_esc), 2*L_esc); subtracting K
    gives two intervals whose distance from the origin bounds |m| + |m_other|
    from below.
    """
    lo = np.maximum(ESC * np.asarray(B, float), L_esc)
    hi = 2.0 * L_esc
    d_plus = np.where((K >= lo) & (K <= hi), 0.0, np.minimum(np.abs(lo - K), np.abs(hi - K)))
    d_minus = np.where((-K >= lo) & (-K <= hi), 0.0, np.minimum(np.abs(lo + K), np.abs(hi + K)))
    return np.minimum(d_plus, d_minus)


_SPLITS = (0.0, 0.125, 0.25, 0.5, 0.75, 0.875, 1.0)


def _nh_chunk(args):
    _case_id, s, eps, Nmax, n1_block = args
    n2_all = _signed_range(Nmax)
    best, best_arg = -np.inf, ()
    for n1 in n1_block:
        n2 = n2_all[(n1 + n2_all) != 0]
        n = n1 + n2
        K = 3.0 * n.astype(float) * n1 * n2  # dispersion mismatch of the pair
        B = np.maximum(np.abs(K), 1.0)
        w1 = _ang(n1) ** (1.0 / 3.0 - eps)
        w2 = _ang(n2) ** (1.0 / 3.0 - eps)
        num = (
            _ang(n) ** (2.0 * s - 1.0)
            * np.abs(n)
            * _ang(n1) ** s
            * _ang(n2) ** s
            / _ang(n) ** s
            * _ang(np.minimum(abs(n1), np.abs(n2))) ** (0.5 + eps)
        )
        L_esc = _escape_level(B)
        gap = _companion_gap(B, K, L_esc)
        for pattern in range(3):  # which of (L, L1, L2) escaped
            for frac in _SPLITS:
                La = _dyadic_floor(gap * frac)
                Lb = _dyadic_floor(gap * (1.0 - frac))
                if pattern == 0:
                    L, L1, L2 = L_esc, La, Lb
                elif pattern == 1:
                    L, L1, L2 = La, L_esc, Lb
                else:
                    L, L1, L2 = La, Lb, L_esc
                den = (L1 * L2) ** (1.0 / 3.0 + eps) * w1 * w2
                den = den + L ** (0.5 - eps) * np.maximum(
                    L1 ** (1.0 / 3.0 + eps) * w1, L2 ** (1.0 / 3.0 + eps) * w2
                )
                q = num / den
                i = int(np.argmax(q))
                if q[i] > best:
                    best = float(q[i])
                    best_arg = (int(n1), int(n2[i]), float(L[i]),
                                float(L1[i]), float(L2[i]))
    return best, best_arg


def _rh_chunk(args):
    _case_id, s, eps, Nmax, n_block = args
    k_all = _signed_range(Nmax)
    best, best_arg = -np.inf, ()
    for n in n_block:
        k = k_all[(n + k_all != 0) & (np.abs(n + k_all) <= Nmax)]
        if k.size == 0:
            continue
        K = 3.0 * n * k.astype(float) * (n + k)  # signed mismatch of the family
        B = np.maximum(np.abs(K), 1.0)
        num = _ang(n) ** (1.0 / 3.0) * _ang(k) ** (2.0 * s) / np.abs(k)
        # pattern: intermediate modulation escaped; outer pair from feasibility
        L_esc = _escape_level(B)
        gap = _companion_gap(B, K, L_esc)
        q1 = num / _dyadic_floor(0.5 * gap) ** (1.0 / 3.0 - eps)
        # pattern: the third (or outer) modulation escaped directly
        q2 = num / _dyadic_floor(ESC * B) ** (1.0 / 3.0 - eps)
        q = np.maximum(q1, q2)
        i = int(np.argmax(q))
        if q[i] > best:
            best = float(q[i])
            best_arg = (int(n), int(k[i]))
    return best, best_arg


# ---------------------------------------------------------------------------
# dispatch


_CHUNKER = {
    "sym1-1A": (_tri_chunk, "signed"),
    "sym12-1A": (_tri_chunk, "signed"),
    "sym2-1B": (_tri_chunk, "signed"),
    "sym1-2A": (_tri_chunk, "signed"),
    "sym12-2A": (_tri_chunk, "signed"),
    "sym2-2B": (_tri_chunk, "signed"),
    "sym2-3B-v": (_tri_chunk, "signed"),
    "quad-3Bi": (_quad_3bi_chunk, "positive"),
    "quad-3Bii": (_quad_3bii_chunk, "signed"),
    "quad-3Biii": (_quad_3biii_chunk, "signed"),
    "Nh": (_nh_chunk, "signed"),
    "Rh": (_rh_chunk, "signed"),
    "case3-unrestricted": (_quad_3bi_chunk, "positive"),
}

SYMBOL_CASES = tuple(_CHUNKER)


def _outer_blocks(case_kind: str, Nmax: int, block: int = 16):
    if case_kind == "positive":
        outer = np.arange(max(1, int(GG)), Nmax + 1)
    else:
        outer = _signed_range(Nmax)
    return [outer[i: i + block] for i in range(0, len(outer), block)]


def _run_scan(case_id: str, s: float, eps: float, Nmax: int, workers: int = 1):
    fn, kind = _CHUNKER[case_id]
    blocks = _outer_blocks(kind, Nmax)
    args = [(case_id, s, eps, Nmax, b) for b in blocks]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(fn, args))
    else:
        results = [fn(a) for a in args]
    return _reduce_chunks(results)


def audit_symbol(case_id: str, s: float, eps: float, Nmax: int,
                 workers: int | None = None) -> SymbolReport:
    """Scan one case's weighted symbol ratio and report its supremum.

    For the unrestricted scan, the supremum is re-run over nested ranges and
    the growth exponent is fitted against the range size.
    """
    if case_id not in _CHUNKER:
        raise EmptyRegion(f"unknown case id {case_id!r}")
    if Nmax < 16:
        raise EmptyRegion("Nmax must be at least 16")
    if not 0.5 <= s < 2.0 / 3.0:
        raise EmptyRegion(f"s={s} outside [1/2, 2/3)")
    workers = workers or int(os.environ.get("KDVLAB_WORKERS", "1"))
    sup, arg = _run_scan(case_id, s, eps, Nmax, workers)
    if sup == -np.inf:
        raise EmptyRegion(f"case {case_id} empty at Nmax={Nmax}")
    report = SymbolReport(case_id, s, eps, Nmax, sup, arg)
    if case_id == "case3-unrestricted":
        sizes = []
        sups = []
        m = 16
        while m <= Nmax:
            sm, _ = _run_scan(case_id, s, eps, m, workers)
            sizes.append(m)
            sups.append(sm)
            m *= 2
        fit = np.polyfit(np.log(sizes), np.log(sups), 1)[0]
        report.fit_exponent = float(fit)
        report.extra["scale_sups"] = dict(zip(sizes, sups))
    return report


def evaluate_tri_ratio(case_id: str, s: float, eps: float, tup) -> float:
    """Single-point evaluation of a trilinear ratio (corner diagnostics)."""
    n1, n2, n3 = tup
    n = n1 + n2 + n3
    h3 = (n1 + n2) * (n2 + n3) * (n3 + n1)
    w1, w2, w3, wn = _ang(n1), _ang(n2), _ang(n3), _ang(n)
    if case_id.startswith("sym1"):
        return float(w1**s * w2**s / (wn**s * w3 ** (1 - s) * _ang(h3) ** (1 / 3 - eps)))
    raise EmptyRegion("pointwise evaluation implemented for sym1 ratios")


# ---------------------------------------------------------------------------
# quadrilinear cancellation audit


def audit_quad_cancellation(s: float, eps: float, Nmax: int,
                            spec: ChiSpec) -> SymbolReport:
    """Verify the modulation floor forced by the symmetrized cutoff difference.

    Wherever chi(n2, tau; NN) differs from chi(n2, tau; -NN), the modulation
    must exceed the smaller of the two thresholds; the measured constant is
    the infimum of that floor against NN^2 |n2| over the scan region, and a
    lattice sweep confirms there are no violations below it.
    """
    tc = spec.threshold_const
    pairs = []
    for NN in range(int(GG), Nmax + 1):
        cap = int(NN // GG)
        if cap >= 1:
            pairs.append((NN, cap))
    if not pairs:
        raise EmptyRegion("cancellation scan region empty")
    c_min = np.inf
    arg = ()
    violations = 0
    checked = 0
    for NN, cap in pairs:
        n2 = _signed_range(cap).astype(float)
        prod_plus = np.abs((n2 + NN) * n2 * NN)
        prod_minus = np.abs((n2 - NN) * n2 * NN)
        lo_min = np.maximum(tc * np.minimum(prod_plus, prod_minus), 1.0)
        c_here = lo_min / (NN**2 * np.abs(n2))
        i = int(np.argmin(c_here))
        if c_here[i] < c_min:
            c_min = float(c_here[i])
            arg = (NN, int(n2[i]))
        # lattice sweep: sample the ramp neighbourhood and check the floor
        for j in range(0, len(n2), max(1, len(n2) // 4)):
            k2 = int(n2[j])
            phi_k = spec.phase.phi_at(k2) if abs(k2) <= spec.phase.N else 0.0
            mu_grid = lo_min[j] * np.array([0.25, 0.5, 0.9, 1.1, 2.0, 4.0, 16.0])
            tau = k2**3 + phi_k + np.sqrt(np.maximum(mu_grid**2 - 1.0, 0.0))
            d = 0.5 * (chi(k2, tau, NN, spec) - chi(k2, tau, -NN, spec))
            mod = np.hypot(1.0, tau - k2**3 - phi_k)
            active = np.abs(d) > 1e-12
            checked += int(active.sum())
            violations += int(np.sum(active & (mod < c_min * NN**2 * abs(k2))))
    report = SymbolReport("quad-cancellation", s, eps, Nmax, c_min, arg)
    report.extra = {"c_measured": c_min, "violations": violations,
                    "lattice_points_checked": checked,
                    "ramp_ratio": spec.ramp_ratio}
    return report


# ---------------------------------------------------------------------------
# trajectory-based verifications (cutoff-free operators are time-local)


def _traj_T(states: np.ndarray, N: int, s: float) -> np.ndarray:
    out = np.empty_like(states)
    for i in range(states.shape[0]):
        f = SpectralField(N, states[i])
        out[i] = normal_form_T(f, f, s).coeffs
    return out


def _traj_N(states: np.ndarray, N: int, s: float) -> np.ndarray:
    out = np.empty_like(states)
    for i in range(states.shape[0]):
        f = SpectralField(N, states[i])
        out[i] = bilinear_N(f, f, s).coeffs
    return out


def verify_nf_identity(traj: Trajectory, s: float, strides=(8, 4, 2)) -> dict:
    """Residual of the cutoff-free bilinear identity along a trajectory.

    Checks (d/dt + dxxx) T(u,u) - 2 T(N(u,u), u) + N(u,u) with the time
    derivative taken by five-point stencils at several spacings, and fits
    the convergence order.
    """
    N = traj.N
    n3 = mode_numbers(N).astype(float) ** 3
    states = traj.states
    Tvals = _traj_T(states, N, s)
    rhs = np.empty_like(states)
    for i in range(states.shape[0]):
        u = SpectralField(N, states[i])
        Nu = bilinear_N(u, u, s)
        rhs[i] = 2.0 * normal_form_T(Nu, u, s).coeffs - Nu.coeffs
    residuals = []
    for stride in strides:
        idx = np.arange(2 * stride, states.shape[0] - 2 * stride)
        D = stride * traj.dt
        dT = (
            -Tvals[idx + 2 * stride]
            + 8 * Tvals[idx + stride]
            - 8 * Tvals[idx - stride]
            + Tvals[idx - 2 * stride]
        ) / (12 * D)
        res = dT - 1j * n3[None, :] * Tvals[idx] - rhs[idx]
        residuals.append(float(np.max(np.abs(res))))
    orders = [
        float(np.log2(residuals[i] / residuals[i + 1])
              / np.log2(strides[i] / strides[i + 1]))
        for i in range(len(strides) - 1)
    ]
    return {
        "strides": list(strides),
        "dt": traj.dt,
        "residuals": residuals,
        "orders": orders,
    }


def verify_cancellation(traj: Trajectory, f: SpectralField, s: float,
                        phase: PhaseData, t_max: float = 0.5,
                        nr_override: np.ndarray | None = None) -> dict:
    """Check the conserved-combination identity on an exact trajectory.

    With cutoff-free (time-local) operators, P_n(t) - P_n(0) must equal the
    cumulative integral of Re[conj(v_n) NR_n]; the reported residual is pure
    quadrature and shrinks at fourth order under step refinement.
    """
    N = traj.N
    keep = np.abs(traj.times) <= t_max
    t = traj.times[keep]
    states = traj.states[keep]
    j0 = int(np.argmin(np.abs(t)))
    L = dispersion_vector(phase)
    r = f.coeffs[None, :] * np.exp(1j * np.outer(t, L))
    h = _traj_T(states, N, s)
    w = states - r - h
    v = states - h
    P = np.real(np.conj(r) * w) + 0.5 * np.abs(w) ** 2

    if nr_override is not None:
        NR = nr_override
    else:
        NR = np.empty_like(states)
        for i in range(states.shape[0]):
            u_i = SpectralField(N, states[i])
            v_i = SpectralField(N, v[i])
            Nu = bilinear_N(u_i, u_i, s)
            comp = 3.0 * normal_form_T(Nu, u_i, s).coeffs
            r_u = resonant_restricted(u_i, u_i, u_i, s).coeffs
            r_v = resonant_restricted(v_i, v_i, v_i, s).coeffs
            m_part = comp - r_u
            smooth = r_u - r_v
            NR[i] = 2.0 * Nu.coeffs + (2.0 / 3.0) * (-smooth - m_part)

    g = np.real(np.conj(v) * NR)
    dt = traj.dt
    inc = 0.5 * dt * (g[1:] + g[:-1])
    cum = np.concatenate([np.zeros((1, 2 * N)), np.cumsum(inc, axis=0)])
    trap = cum - cum[j0]
    # endpoint-derivative correction lifts the cumulative rule to 4th order
    from .system import _fd_derivative

    gp = _fd_derivative(g, dt)
    integral = trap - (dt * dt / 12.0) * (gp - gp[j0])
    resid = np.abs(P - P[j0] - integral)
    per_mode = np.max(resid, axis=0)
    return {
        "dt": dt,
        "t_max": t_max,
        "max_residual": float(np.max(resid)),
        "per_mode_sup": per_mode,
        "P_scale": float(np.max(np.abs(P))),
    }


# ---------------------------------------------------------------------------
# ensemble verifications


def random_spacetime(N: int, M: int, T_w: float, rng: np.random.Generator,
                     n_decay: float = 1.0, band: int = 4) -> SpaceTimeField:
    """Random real windowed field with band-limited time content.

    The tau content before windowing is confined to |k| <= M/band so the
    field decays toward the Nyquist row the way windowed trajectories do.
    """
    from .fields import SpaceTimeField

    n = mode_numbers(N)
    k = np.arange(M) - M // 2
    base = rng.standard_normal((M, 2 * N)) + 1j * rng.standard_normal((M, 2 * N))
    base *= (1.0 + n.astype(float) ** 2) ** (-n_decay / 2.0)
    base[np.abs(k) > M // band, :] = 0.0
    flipped = np.zeros_like(base)
    flipped[1:] = base[1:][::-1]
    base = 0.5 * (base + np.conj(flipped[:, ::-1]))
    samples = st_inverse(SpaceTimeField(N, T_w, M, base))
    return st_transform(samples, N, T_w, window=bump_window)


def verify_duhamel_bound(phase: PhaseData, eps: float, N: int, M: int,
                         T_w: float, n_samples: int = 100,
                         seed: int = 0) -> dict:
    """Empirical sup of ||duhamel(F)||_Z / ||F||_{Z*} over a random ensemble."""
    rng = np.random.default_rng(seed)
    f0 = zero_field(N)
    ratios = []
    for _ in range(n_samples):
        F = random_spacetime(N, M, T_w, rng)
        zstar = norm_Zstar(F, phase, eps)
        if zstar == 0.0:
            continue
        out = duhamel(F, f0, phase)
        ratios.append(norm_Z(out, phase, eps) / zstar)
    ratios = np.asarray(ratios)
    return {
        "n": len(ratios),
        "sup": float(ratios.max()),
        "mean": float(ratios.mean()),
        "ratios": ratios,
    }


def verify_vkn(phase: PhaseData, s: float, eps: float, N: int, M: int,
               T_w: float, n_samples: int = 50, seed: int = 0) -> dict:
    """Empirical ratio for the double-integral term against ||v||_Z^2 ||K||_X."""
    rng = np.random.default_rng(seed)
    ratios = []
    weight = bessel_weight(mode_numbers(N), 2.0 * s - 1.0 + eps)
    for _ in range(n_samples):
        v = random_spacetime(N, M, T_w, rng)
        K = random_spacetime(N, M, T_w, rng)
        k = k_integral(v, K)
        army = weight[None, :] * st_inverse(v) * k
        G = st_transform(army, N, T_w, window=None)
        den = norm_Z(v, phase, eps) ** 2 * norm_X(K, s, eps, phase)
        if den == 0.0:
            continue
        ratios.append(norm_Zstar(G, phase, eps) / den)
    ratios = np.asarray(ratios)
    return {
        "n": len(ratios),
        "sup": float(ratios.max()),
        "mean": float(ratios.mean()),
        "ratios": ratios,
    }


def verify_h_smoothing(s: float, spec: ChiSpec, N: int, M: int, T_w: float,
                       seed: int = 0, t_max: float = 0.5,
                       fit_from: int = 8) -> dict:
    """Decay rate of the quadratic correction for rough, flat-spectrum data.

    Builds the windowed free evolution of white coefficients (unit moduli,
    random phases), applies the restricted normal form, and fits the decay
    of sup_t |h_n(t)| over dyadic shells.  The fit starts at shell
    ``fit_from`` where the asymptotic rate has set in; the low shells are
    reported but carry head effects.
    """
    from .multipliers import T_ell
    from .system import windowed_free_evolution

    rng = np.random.default_rng(seed)
    phases = np.exp(2j * np.pi * rng.random(N))
    c = np.empty(2 * N, dtype=complex)
    c[N:] = phases
    c[:N] = np.conj(phases[::-1])
    g = SpectralField(N, c)
    u = windowed_free_evolution(g, spec.phase, T_w, M)
    h = T_ell(u, u, s, spec)
    ht = st_inverse(h)
    keep = np.abs(h.times()) <= t_max
    sup_n = np.max(np.abs(ht[keep]), axis=0)
    n_abs = np.abs(mode_numbers(N))
    shells = []
    vals = []
    m = 2
    while m <= N:
        sel = (n_abs > m // 2) & (n_abs <= m)
        if sel.any():
            shells.append(m)
            vals.append(float(np.max(sup_n[sel])))
        m *= 2
    fit_sel = [i for i, m in enumerate(shells) if m >= fit_from]
    if len(fit_sel) < 2:
        fit_sel = list(range(len(shells)))
    xs = np.log([shells[i] for i in fit_sel])
    ys = np.log([vals[i] for i in fit_sel])
    slope = float(np.polyfit(xs, ys, 1)[0])
    return {"shells": shells, "sup_values": vals, "slope": slope, "s": s,
            "fit_from": fit_from}
