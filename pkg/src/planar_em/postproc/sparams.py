"""S-parameter extraction from lumped-port records.

Power waves with a real reference impedance Z0::

    a = (V + Z0 I) / (2 sqrt(Z0)),  b = (V - Z0 I) / (2 sqrt(Z0))

where I flows into the structure.  With one run per excited port the
incident/reflected waves form matrices A and B (column = run) and
``S = B A^-1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectra import port_spectra

__all__ = ["SParamMatrix", "ContractError", "extract_sparams", "mirror_run", "power_waves", "db"]


class ContractError(ValueError):
    pass


def db(x):
    return 20 * np.log10(np.maximum(np.abs(x), 1e-300))


@dataclass
class SParamMatrix:
    freqs: np.ndarray
    s: np.ndarray          # (nf, n, n) complex
    z_ref: float = 50.0

    def __post_init__(self):
        self.freqs = np.asarray(self.freqs, dtype=float)
        self.s = np.asarray(self.s, dtype=complex)
        if self.s.ndim != 3 or self.s.shape[0] != self.freqs.size or self.s.shape[1] != self.s.shape[2]:
            raise ValueError("s must have shape (nf, n, n)")
        if self.freqs.size > 1 and not np.all(np.diff(self.freqs) > 0):
            raise ValueError("frequencies must be strictly increasing")

    @property
    def n_ports(self):
        return self.s.shape[1]

    def __getitem__(self, ij):
        """``m[1, 2]`` is S12 (1-based port numbers)."""
        i, j = ij
        return self.s[:, i - 1, j - 1]

    def db(self, i, j):
        return db(self[i, j])

    def at(self, f):
        """Matrix at the sample nearest to ``f``."""
        return self.s[int(np.argmin(np.abs(self.freqs - f)))]

    def swapped(self):
        """Relabel ports 1 <-> 2."""
        p = [1, 0]
        return SParamMatrix(self.freqs, self.s[:, p][:, :, p], self.z_ref)


def power_waves(v, i, z0):
    k = 1 / (2 * np.sqrt(z0))
    return (v + z0 * i) * k, (v - z0 * i) * k


def _check_runs(runs):
    ref = None
    for run in runs:
        for rec in run.values():
            key = (rec.dt, rec.band, rec.v_t0, rec.i_t0)
            if ref is None:
                ref = key
            elif not np.isclose(key[0], ref[0], rtol=1e-12, atol=0.0) or key[1] != ref[1]:
                raise ContractError("runs use different time steps or excitations")
    ids = [tuple(sorted(r)) for r in runs]
    if len(set(ids)) != 1:
        raise ContractError(f"runs record different port sets: {ids}")
    excited = [[pid for pid, rec in run.items() if rec.excited] for run in runs]
    if any(len(e) != 1 for e in excited):
        raise ContractError("each run must excite exactly one port")
    order = [e[0] for e in excited]
    if sorted(order) != list(ids[0]):
        raise ContractError(f"need one run per port {ids[0]}, got excitations {order}")
    return list(ids[0]), order


def extract_sparams(*runs, freqs, z_ref: float = 50.0, window=None) -> SParamMatrix:
    """S-matrix from one run per port; each run maps port id -> PortRecord."""
    if not runs:
        raise ContractError("no runs given")
    if len(runs) == 1 and isinstance(runs[0], (list, tuple)):
        runs = tuple(runs[0])
    ports, order = _check_runs(runs)
    n = len(ports)
    freqs = np.asarray(freqs, dtype=float)
    a = np.zeros((freqs.size, n, n), dtype=complex)
    b = np.zeros_like(a)
    for run in runs:
        col = ports.index(next(pid for pid, r in run.items() if r.excited))
        for pid, rec in run.items():
            row = ports.index(pid)
            v, i = port_spectra(rec, freqs, window)
            a[:, row, col], b[:, row, col] = power_waves(v, i, z_ref)
    s = b @ np.linalg.inv(a)
    return SParamMatrix(freqs, s, z_ref)


def mirror_run(run, mapping=None):
    """Port records of the mirror-image excitation of a symmetric layout.

    Relabels the ports of ``run`` (default swap 1 <-> 2).  Only valid when
    the discretized structure is itself mirror-symmetric.
    """
    mapping = mapping or {1: 2, 2: 1}
    out = {}
    for pid, rec in run.items():
        new = mapping.get(pid, pid)
        r = rec.scaled(1.0)
        r.port_id = new
        out[new] = r
    return out
