"""Envelope correlation coefficient of a two-port from its S-matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["EccCurve", "SingularEccError", "ecc", "ecc_values"]

_DENOM_FLOOR = 1e-9


class SingularEccError(ValueError):
    def __init__(self, freq):
        super().__init__(f"ECC denominator below {_DENOM_FLOOR:g} at {freq / 1e9:.4f} GHz")
        self.freq = freq


@dataclass(frozen=True)
class EccCurve:
    freqs: np.ndarray
    rho_e: np.ndarray

    def max_over(self, lo, hi):
        m = (self.freqs >= lo) & (self.freqs <= hi)
        if not m.any():
            raise ValueError("no samples in the requested band")
        return float(self.rho_e[m].max())


def ecc_values(s11, s21, s12, s22):
    """Raw ratio, vectorized; returns (rho, |denominator|)."""
    s11, s21, s12, s22 = (np.asarray(x, dtype=complex) for x in (s11, s21, s12, s22))
    num = np.abs(np.conj(s11) * s21 + np.conj(s22) * s12) ** 2
    den = np.abs((1 - np.abs(s11) ** 2 - np.abs(s21) ** 2) * (1 - np.abs(s22) ** 2 - np.abs(s12) ** 2))
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = num / den
    return rho, den


def ecc(s) -> EccCurve:
    """ECC of an :class:`SParamMatrix` (or anything with ``freqs`` and an
    ``s`` array of shape (nf, 2, 2))."""
    m = np.asarray(s.s)
    if m.shape[1:] != (2, 2):
        raise ValueError("ECC needs a 2-port matrix")
    rho, den = ecc_values(m[:, 0, 0], m[:, 1, 0], m[:, 0, 1], m[:, 1, 1])
    bad = np.nonzero(den < _DENOM_FLOOR)[0]
    if bad.size:
        raise SingularEccError(float(s.freqs[bad[0]]))
    return EccCurve(np.asarray(s.freqs, dtype=float), rho)
