"""Band metrics: matched (-10 dB) intervals, isolation, ECC, resonance dips."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ecc import ecc
from .sparams import SParamMatrix, db

__all__ = ["BandReport", "band_report", "matched_intervals", "dip_frequency", "isolation_at"]


@dataclass
class BandReport:
    band: tuple
    matched: list                     # [(f_lo, f_hi)] Hz where S11 < threshold
    matched_s22: list
    min_isolation_db: float
    max_ecc: float
    max_ecc_matched: float | None
    threshold_db: float = -10.0
    extras: dict = field(default_factory=dict)

    def summary(self) -> str:
        fmt = lambda iv: ", ".join(f"{a / 1e9:.3f}-{b / 1e9:.3f}" for a, b in iv) or "none"
        lines = [
            f"band              {self.band[0] / 1e9:.3f}-{self.band[1] / 1e9:.3f} GHz",
            f"S11 < {self.threshold_db:g} dB     {fmt(self.matched)} GHz",
            f"S22 < {self.threshold_db:g} dB     {fmt(self.matched_s22)} GHz",
            f"min isolation     {self.min_isolation_db:.2f} dB",
            f"max ECC           {self.max_ecc:.5f}",
        ]
        if self.max_ecc_matched is not None:
            lines.append(f"max ECC (matched) {self.max_ecc_matched:.5f}")
        for k, v in self.extras.items():
            lines.append(f"{k:<17} {v}")
        return "\n".join(lines)

    def as_row(self) -> dict:
        return {
            "band_lo_ghz": self.band[0] / 1e9,
            "band_hi_ghz": self.band[1] / 1e9,
            "matched_ghz": ";".join(f"{a / 1e9:.4f}-{b / 1e9:.4f}" for a, b in self.matched),
            "n_matched": len(self.matched),
            "min_isolation_db": self.min_isolation_db,
            "max_ecc": self.max_ecc,
            "max_ecc_matched": "" if self.max_ecc_matched is None else self.max_ecc_matched,
            **self.extras,
        }


def matched_intervals(freqs, level_db, threshold=-10.0):
    """Intervals where ``level_db < threshold``; crossings by linear
    interpolation of the dB values between neighbouring samples."""
    f = np.asarray(freqs, dtype=float)
    y = np.asarray(level_db, dtype=float) - threshold
    below = y < 0
    out = []
    start = f[0] if below[0] else None
    for k in range(1, f.size):
        if below[k] == below[k - 1]:
            continue
        x = f[k - 1] + (f[k] - f[k - 1]) * y[k - 1] / (y[k - 1] - y[k])
        if below[k]:
            start = x
        else:
            out.append((float(start), float(x)))
            start = None
    if start is not None:
        out.append((float(start), float(f[-1])))
    return out


def _clip(intervals, lo, hi):
    return [(max(a, lo), min(b, hi)) for a, b in intervals if b > lo and a < hi]


def band_report(s: SParamMatrix, band=None, threshold_db=-10.0) -> BandReport:
    f = s.freqs
    lo, hi = band if band is not None else (f[0], f[-1])
    m = (f >= lo - 1e-6) & (f <= hi + 1e-6)
    if lo >= hi or m.sum() < 2:
        raise ValueError(f"band {lo / 1e9:.3f}-{hi / 1e9:.3f} GHz holds fewer than two samples")
    sub = SParamMatrix(f[m], s.s[m], s.z_ref)
    matched = matched_intervals(sub.freqs, sub.db(1, 1), threshold_db)
    matched22 = matched_intervals(sub.freqs, sub.db(2, 2), threshold_db) if s.n_ports > 1 else []
    if s.n_ports < 2:
        return BandReport((lo, hi), matched, [], float("nan"), float("nan"), None, threshold_db)
    iso = -np.maximum(sub.db(2, 1), sub.db(1, 2))
    rho = ecc(sub).rho_e
    in_match = np.zeros(sub.freqs.size, dtype=bool)
    for a, b in matched:
        in_match |= (sub.freqs >= a) & (sub.freqs <= b)
    return BandReport(
        (lo, hi), matched, matched22, float(iso.min()), float(rho.max()),
        float(rho[in_match].max()) if in_match.any() else None, threshold_db)


def isolation_at(s: SParamMatrix, f0: float) -> float:
    """-20 log10 |S21| at ``f0`` (linear interpolation of dB)."""
    return float(-np.interp(f0, s.freqs, s.db(2, 1)))


def dip_frequency(s: SParamMatrix, lo: float, hi: float, port: int = 1) -> float:
    """Frequency of the deepest |Sii| minimum inside [lo, hi], refined by a
    parabola through the neighbouring samples."""
    f = s.freqs
    m = np.nonzero((f >= lo) & (f <= hi))[0]
    if m.size == 0:
        raise ValueError("no samples in the requested sub-band")
    y = s.db(port, port)
    k = m[np.argmin(y[m])]
    if 0 < k < f.size - 1 and m[0] < k < m[-1]:
        y0, y1, y2 = y[k - 1], y[k], y[k + 1]
        den = y0 - 2 * y1 + y2
        if den > 0:
            off = 0.5 * (y0 - y2) / den
            return float(f[k] + off * (f[k + 1] - f[k]))
    return float(f[k])
