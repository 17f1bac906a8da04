"""Direct DFT of port records at arbitrary frequencies.

Normalization: ``X(f) = sum_n x_n exp(-j 2 pi f t_n) dt`` with
``t_n = t0 + n dt``.  A cosine of amplitude A lasting N samples therefore
gives ``|X(f0)| ~= A/2 * N dt``.  With a window the samples are weighted by
``w_n / mean(w)`` so a tone keeps the same peak height.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import get_window

__all__ = ["OutOfBandError", "dft", "port_spectra", "check_band"]


class OutOfBandError(ValueError):
    pass


def dft(x, freqs, dt: float, t0: float = 0.0, window: str | None = None):
    x = np.asarray(x, dtype=float)
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    if x.size == 0:
        return np.zeros(freqs.shape, dtype=complex)
    if window is not None:
        w = get_window(window, x.size, fftbins=False)
        x = x * (w / w.mean())
    out = np.empty(freqs.shape, dtype=complex)
    n = np.arange(x.size)
    # chunk over frequencies to bound the temporary matrix
    chunk = max(1, 2_000_000 // max(1, x.size))
    for s in range(0, freqs.size, chunk):
        f = freqs[s:s + chunk]
        ph = np.exp(-2j * np.pi * np.outer(f, t0 + n * dt))
        out[s:s + chunk] = ph @ x * dt
    return out


def check_band(freqs, band):
    if band is None:
        return
    freqs = np.atleast_1d(freqs)
    lo, hi = band
    bad = freqs[(freqs < lo * (1 - 1e-12)) | (freqs > hi * (1 + 1e-12))]
    if bad.size:
        raise OutOfBandError(
            f"{bad.size} frequencies outside the excitation band "
            f"{lo / 1e9:.3f}-{hi / 1e9:.3f} GHz (first: {bad[0] / 1e9:.4f} GHz)")


def port_spectra(record, freqs, window: str | None = None, check: bool = True):
    """Complex V(f), I(f) of one port record."""
    if check:
        check_band(freqs, record.band)
    v = dft(record.v, freqs, record.dt, record.v_t0, window)
    i = dft(record.i, freqs, record.dt, record.i_t0, window)
    return v, i
