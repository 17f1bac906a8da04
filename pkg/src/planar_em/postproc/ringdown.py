"""Natural resonances from the late-time ringing of a port record.

A matrix-pencil fit models ``x[n] = sum_k A_k z_k^n`` over the samples after
the source has died away.  Each pole ``z_k = exp(s_k dt)`` gives a resonant
frequency Im(s)/2pi and a quality factor Im(s) / (2 |Re(s)|).  A short
record resolves a lightly damped mode far better than the DFT peak of the
same record, so high-Q structures need not be run to full decay.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Mode", "natural_modes", "dominant_mode", "fundamental_mode"]


@dataclass(frozen=True)
class Mode:
    freq: float          # Hz
    damping: float       # 1/s, positive for a decaying mode
    amplitude: float     # |A| at the first fitted sample

    @property
    def q(self) -> float:
        return np.pi * self.freq / self.damping if self.damping > 0 else np.inf


def natural_modes(x, dt: float, order: int = 8, start: int = 0, decimate: int = 1,
                  pencil: float = 0.4, band=None) -> list:
    """Modes of ``x[start::decimate]`` sorted by decreasing amplitude.

    ``order`` is the number of complex poles kept (a real damped sinusoid
    takes two).  ``band`` limits the result to (f_lo, f_hi) in Hz.
    """
    y = np.asarray(x, dtype=float)[start::decimate]
    h = dt * decimate
    n = y.size
    if n < 4 * order:
        raise ValueError(f"record of {n} samples too short for order {order}")
    L = max(order, int(pencil * n))
    Y = np.lib.stride_tricks.sliding_window_view(y, L + 1)       # (n - L, L + 1)
    _, _, vt = np.linalg.svd(Y, full_matrices=False)
    v = vt[:order].T                                              # (L + 1, order)
    z = np.linalg.eigvals(np.linalg.pinv(v[:-1]) @ v[1:])
    # amplitudes by least squares on the Vandermonde system
    vander = z[None, :] ** np.arange(n)[:, None]
    amp, *_ = np.linalg.lstsq(vander, y.astype(complex), rcond=None)
    s = np.log(z) / h
    modes = []
    for sk, ak in zip(s, amp):
        f = sk.imag / (2 * np.pi)
        if f <= 0:
            continue
        if band is not None and not (band[0] <= f <= band[1]):
            continue
        modes.append(Mode(float(f), float(-sk.real), float(2 * abs(ak))))
    modes.sort(key=lambda m: -m.amplitude)
    return modes


def dominant_mode(x, dt: float, band=None, **kw) -> Mode:
    """Strongest decaying mode of the record inside ``band``."""
    modes = [m for m in natural_modes(x, dt, band=band, **kw) if m.damping > 0]
    if not modes:
        raise ValueError("no decaying mode found in the record")
    return modes[0]


def fundamental_mode(x, dt: float, band=None, rel_amplitude: float = 0.01, **kw) -> Mode:
    """Lowest-frequency decaying mode in ``band`` whose amplitude is at least
    ``rel_amplitude`` of the strongest one; weak fit poles are ignored."""
    modes = [m for m in natural_modes(x, dt, band=band, **kw) if m.damping > 0]
    if not modes:
        raise ValueError("no decaying mode found in the record")
    floor = rel_amplitude * max(m.amplitude for m in modes)
    return min((m for m in modes if m.amplitude >= floor), key=lambda m: m.freq)
