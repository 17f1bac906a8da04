"""Named grid/solver presets."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .fdtd.solver import SimConfig
from .grid import GridSpec

__all__ = ["Preset", "PRESETS", "get_preset", "default_freqs"]


def default_freqs(lo=2.0e9, hi=7.0e9, step=25e6):
    """2.0-7.0 GHz in 25 MHz steps."""
    n = int(round((hi - lo) / step)) + 1
    return lo + step * np.arange(n)


@dataclass(frozen=True)
class Preset:
    name: str
    grid: GridSpec
    sim: SimConfig

    def with_sim(self, **kw) -> "Preset":
        return replace(self, sim=replace(self.sim, **kw))


PRESETS = {
    # smoke tests and trend sweeps: 2 substrate cells, 0.4 mm in-plane
    "coarse": Preset("coarse", GridSpec(0.4, 0.4, 0.254, 12, 16, 12, 10), SimConfig(decay_db=40.0)),
    "default": Preset("default", GridSpec(), SimConfig()),
    "fine": Preset("fine", GridSpec().refined(2), SimConfig()),
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
