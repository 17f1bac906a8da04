"""Touchstone v1 two-port files, real/imaginary format, frequencies in GHz."""

from __future__ import annotations

import numpy as np

from .sparams import SParamMatrix

__all__ = ["write_s2p", "format_s2p", "read_s2p", "TouchstoneError"]


class TouchstoneError(ValueError):
    pass


def _num(x: float) -> str:
    return f"{x: .16e}"


def format_s2p(m: SParamMatrix, comments=()) -> str:
    if m.n_ports != 2:
        raise TouchstoneError("only 2-port matrices are supported")
    lines = [f"! {c}" for c in comments]
    lines.append(f"# GHz S RI R {m.z_ref:g}")
    # v1 column order for 2-ports: S11 S21 S12 S22
    for f, s in zip(m.freqs, m.s):
        vals = [s[0, 0], s[1, 0], s[0, 1], s[1, 1]]
        cols = [f"{f / 1e9:.12f}"] + [_num(p) for v in vals for p in (v.real, v.imag)]
        lines.append(" ".join(cols))
    return "\n".join(lines) + "\n"


def write_s2p(path, m: SParamMatrix, comments=()):
    with open(path, "w", newline="\n") as fh:
        fh.write(format_s2p(m, comments))


def read_s2p(path) -> SParamMatrix:
    freqs, rows, z0, unit, fmt = [], [], 50.0, 1e9, "RI"
    scale = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}
    with open(path) as fh:
        for line in fh:
            line = line.split("!", 1)[0].strip()
            if not line:
                continue
            if line.startswith("#"):
                tok = line[1:].upper().split()
                for t in tok:
                    if t in scale:
                        unit = scale[t]
                    elif t in ("RI", "MA", "DB"):
                        fmt = t
                if "R" in tok:
                    z0 = float(tok[tok.index("R") + 1])
                continue
            vals = [float(x) for x in line.split()]
            if len(vals) != 9:
                raise TouchstoneError(f"expected 9 columns, got {len(vals)}")
            freqs.append(vals[0] * unit)
            p = np.array(vals[1:]).reshape(4, 2)
            if fmt == "RI":
                c = p[:, 0] + 1j * p[:, 1]
            elif fmt == "MA":
                c = p[:, 0] * np.exp(1j * np.deg2rad(p[:, 1]))
            else:
                c = 10 ** (p[:, 0] / 20) * np.exp(1j * np.deg2rad(p[:, 1]))
            rows.append([[c[0], c[2]], [c[1], c[3]]])
    if not freqs:
        raise TouchstoneError("no data lines")
    return SParamMatrix(np.array(freqs), np.array(rows), z0)
