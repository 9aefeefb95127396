"""Current patterns and synthetic noisy electrode voltages."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..cem import assemble, forward_states
from ..errors import ConfigError
from ..mesh import build_initial_mesh


def generate_currents(L, count):
    """Trigonometric patterns: cosines of frequency 1..ceil(count/2), then sines.

    Each pattern is projected to sum zero and scaled to unit Euclidean norm.
    Returns an array of shape (count, L).
    """
    if count >= L:
        raise ConfigError(f"need fewer patterns than electrodes (count={count}, L={L})")
    if count < 1:
        raise ConfigError("count must be positive")
    n_cos = math.ceil(count / 2)
    angle = 2.0 * np.pi * np.arange(L) / L
    rows = []
    for j in range(1, count + 1):
        if j <= n_cos:
            v = np.cos(j * angle)
        else:
            v = np.sin((j - n_cos) * angle)
        v = v - v.mean()
        nrm = np.linalg.norm(v)
        if nrm < 1e-12:
            raise ConfigError(f"pattern {j} vanishes for L={L}")
        rows.append(v / nrm)
    return np.array(rows)


@dataclass(frozen=True)
class NoiseModel:
    level: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.level < 0:
            raise ConfigError("noise level must be nonnegative")


@dataclass
class SyntheticData:
    currents: np.ndarray   # (P, L)
    exact: np.ndarray      # (P, L)
    noisy: np.ndarray      # (P, L)
    xi: np.ndarray         # (P, L) standard normal draws
    noise: NoiseModel

    def to_dict(self):
        return {
            "currents": self.currents.tolist(),
            "exact": self.exact.tolist(),
            "noisy": self.noisy.tolist(),
            "xi": self.xi.tolist(),
            "noise_level": self.noise.level,
            "seed": self.noise.seed,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["currents"]), np.array(d["exact"]), np.array(d["noisy"]),
                   np.array(d["xi"]), NoiseModel(d["noise_level"], d["seed"]))


def add_noise(exact, noise):
    """``U_l + level * max_l |U_l| * xi_l`` per pattern, re-projected to sum zero."""
    exact = np.atleast_2d(exact)
    rng = np.random.default_rng(noise.seed)
    xi = rng.standard_normal(exact.shape)
    scale = noise.level * np.max(np.abs(exact), axis=1, keepdims=True)
    noisy = exact + scale * xi
    return noisy - noisy.mean(axis=1, keepdims=True), xi


def simulate(mesh, phantom, currents):
    """Exact voltages for the phantom's nodal interpolant on ``mesh``."""
    system = assemble(mesh, phantom.nodal(mesh))
    return np.array([s.U for s in forward_states(system, currents)])


def synth_data(phantom, currents, noise, layout, n0=8, fine_factor=4,
               extents=(-1.0, 1.0, -1.0, 1.0)):
    """Noisy data computed on a uniform mesh ``2**fine_factor`` times finer than ``n0``."""
    if fine_factor < 2:
        raise ConfigError("the data mesh must be at least two uniform levels finer")
    fine = build_initial_mesh(extents, layout, n0 * 2 ** fine_factor)
    exact = simulate(fine, phantom, currents)
    noisy, xi = add_noise(exact, noise)
    return SyntheticData(np.asarray(currents), exact, noisy, xi, noise)
