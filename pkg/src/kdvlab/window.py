"""Smooth time cutoff used to window trajectories before space-time transforms.

The window is the standard exp(-1/x) bump construction: identically 1 on
[-1/2, 1/2], identically 0 outside (-1, 1), and C-infinity in between, so
windowed samples have super-polynomial decay in the time frequency.
"""

import numpy as np

__all__ = ["smooth_step", "bump_window"]


def _psi(x: np.ndarray) -> np.ndarray:
    """exp(-1/x) for x > 0, zero otherwise (the C-infinity mollifier seed)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(x):
    """C-infinity monotone step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    a = _psi(x)
    b = _psi(1.0 - x)
    out = a / (a + b + np.finfo(float).tiny)
    return out if out.ndim else float(out)


def bump_window(t, plateau: float = 0.5, support: float = 1.0):
    """Evaluate the time window at ``t``.

    Returns 1 for |t| <= plateau, 0 for |t| >= support, with a smooth
    monotone ramp in between.
    """
    if not support > plateau > 0:
        raise ValueError("need 0 < plateau < support")
    t = np.asarray(t, dtype=float)
    ramp = (support - np.abs(t)) / (support - plateau)
    out = smooth_step(ramp)
    return out if np.ndim(t) else float(out)
