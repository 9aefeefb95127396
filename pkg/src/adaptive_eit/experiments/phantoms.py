"""Test conductivities: disks and Gaussian bumps on a constant background."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError


@dataclass(frozen=True)
class Disk:
    center: tuple
    radius: float
    amplitude: float

    def __call__(self, x, y):
        cx, cy = self.center
        inside = (x - cx) ** 2 + (y - cy) ** 2 < self.radius ** 2
        return np.where(inside, self.amplitude, 0.0)


@dataclass(frozen=True)
class GaussianBump:
    """``amplitude * exp(-|x - center|^2 / (2 width^2))``."""

    center: tuple
    width: float
    amplitude: float

    def __call__(self, x, y):
        cx, cy = self.center
        r2 = (x - cx) ** 2 + (y - cy) ** 2
        return self.amplitude * np.exp(-r2 / (2.0 * self.width ** 2))


@dataclass(frozen=True)
class PhantomSpec:
    background: float
    inclusions: tuple = field(default_factory=tuple)
    # conductivity bounds suggested for reconstruction
    bounds: tuple | None = None

    def __post_init__(self):
        if not self.background > 0:
            raise ConfigError("background conductivity must be positive")
        if any(inc.amplitude < 0 for inc in self.inclusions):
            raise ConfigError("inclusion amplitudes must be nonnegative")

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.full(np.broadcast(x, y).shape, float(self.background))
        for inc in self.inclusions:
            out = out + inc(x, y)
        return out

    def nodal(self, mesh):
        """Nodal evaluation on a mesh (interface vertices count as outside)."""
        return self(mesh.vertices[:, 0], mesh.vertices[:, 1])

    def to_dict(self):
        incs = []
        for inc in self.inclusions:
            d = {"type": type(inc).__name__, "center": list(inc.center), "amplitude": inc.amplitude}
            d["radius" if isinstance(inc, Disk) else "width"] = inc.radius if isinstance(inc, Disk) else inc.width
            incs.append(d)
        return {"background": self.background, "inclusions": incs,
                "bounds": list(self.bounds) if self.bounds else None}

    @classmethod
    def from_dict(cls, d):
        incs = []
        for inc in d.get("inclusions", []):
            if inc["type"] == "Disk":
                incs.append(Disk(tuple(inc["center"]), inc["radius"], inc["amplitude"]))
            elif inc["type"] == "GaussianBump":
                incs.append(GaussianBump(tuple(inc["center"]), inc["width"], inc["amplitude"]))
            else:
                raise ConfigError(f"unknown inclusion type {inc['type']!r}")
        b = d.get("bounds")
        return cls(d["background"], tuple(incs), tuple(b) if b else None)


def two_disks(amplitude=1.0):
    """Background 1 with two disks of radius 0.3 at (0, +-0.5)."""
    disks = (Disk((0.0, 0.5), 0.3, amplitude), Disk((0.0, -0.5), 0.3, amplitude))
    return PhantomSpec(1.0, disks, (1.0, 1.0 + amplitude))


def two_bumps():
    """Background 2 with two Gaussian bumps of height 1.2 at (0, +-0.5).

    ``exp(-25 r^2 / 2)`` corresponds to a width of 1/5.
    """
    bumps = (GaussianBump((0.0, 0.5), 0.2, 1.2), GaussianBump((0.0, -0.5), 0.2, 1.2))
    return PhantomSpec(2.0, bumps, (2.0, 3.2))


def four_disks():
    disks = tuple(Disk((sx * 0.6, sy * 0.6), 0.2, 1.0) for sx in (1, -1) for sy in (1, -1))
    return PhantomSpec(1.0, disks, (1.0, 2.0))


PHANTOMS = {
    "two_disks": two_disks,
    "two_bumps": two_bumps,
    "two_disks_high_contrast": lambda: two_disks(5.0),
    "four_disks": four_disks,
}


def get_phantom(name):
    try:
        return PHANTOMS[name]()
    except KeyError:
        raise ConfigError(f"unknown phantom {name!r}; choose from {sorted(PHANTOMS)}") from None
