"""Run configuration and its JSON file format."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

from ..errors import ConfigError
from ..mesh import ElectrodeLayout
from ..objective import RegularizationParams
from ..optimizer import MMConfig


@dataclass(frozen=True)
class RunConfig:
    # geometry
    extents: tuple = (-1.0, 1.0, -1.0, 1.0)
    n0: int = 8
    L: int = 16
    electrode_length: float = 0.25
    electrode_offset: float = 0.0
    impedance: float = 1.0
    # adaptive loop
    mode: str = "adaptive"          # adaptive | uniform
    K: int = 15
    theta: float = 0.7
    q: float = 2.0
    uniform_sweeps: int = 2         # bisection sweeps per uniform loop
    max_dofs: int | None = None
    # model
    eps: float = 1e-2
    alpha: float = 2e-2
    c0: float = 1.0
    c1: float = 2.0
    # data
    phantom: str = "two_disks"
    n_patterns: int = 10
    noise: float = 1e-3
    seed: int = 0
    fine_factor: int = 4
    # optimizer
    max_outer: int = 50
    step_tol: float = 1e-4
    inner_tol: float = 1e-8
    inner_maxiter: int = 500
    # output
    write_fields: bool = True
    vtk: bool = False

    def __post_init__(self):
        object.__setattr__(self, "extents", tuple(float(v) for v in self.extents))
        if self.mode not in ("adaptive", "uniform"):
            raise ConfigError(f"mode must be 'adaptive' or 'uniform', got {self.mode!r}")
        if not 0 < self.theta <= 1:
            raise ConfigError("theta must lie in (0, 1]")
        for name in ("n0", "L", "n_patterns", "fine_factor", "max_outer", "uniform_sweeps"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.K < 0:
            raise ConfigError("K must be nonnegative")
        if self.q <= 0 or self.impedance <= 0 or self.electrode_length <= 0:
            raise ConfigError("q, impedance and electrode_length must be positive")
        self.params  # validates eps, alpha, c0, c1

    @property
    def params(self):
        return RegularizationParams(self.eps, self.alpha, self.c0, self.c1)

    @property
    def mm(self):
        return MMConfig(self.max_outer, self.step_tol, self.inner_tol, self.inner_maxiter)

    @property
    def perimeter(self):
        x0, x1, y0, y1 = self.extents
        return 2.0 * ((x1 - x0) + (y1 - y0))

    def layout(self):
        return ElectrodeLayout.evenly_spaced(
            self.L, self.electrode_length, self.perimeter, self.electrode_offset, self.impedance
        )

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["extents"] = list(self.extents)
        return d

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)


# Default constants with fewer loops, for runs that finish in minutes.
DESK = RunConfig(K=8)
