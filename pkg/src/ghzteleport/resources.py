"""Quantum resources in both engines: input pair, EPR pair, GHZ triplet."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .gaussian import GaussianState, epr_pair, ghz_triplet
from .grid import Grid, GridError, WaveFunction

EXTENT_FACTOR = 8.0
PROFILES = ("gaussian-packet", "random-smooth")


class ResourceError(ValueError):
    pass


@dataclass(frozen=True)
class InputSpec:
    """Two-particle input ``int dx A(x) |x>|x - q>``.

    ``width`` is the position standard deviation of ``|A|^2`` for the Gaussian
    packet and the bump scale for the random-smooth profile.
    """

    profile: str = "gaussian-packet"
    center: float = 0.0
    width: float = 1.0
    q: float = 0.0
    seed: int = 0


@dataclass(frozen=True)
class ResourceQuality:
    mode: str = "ideal"
    r: float = 0.0

    def __post_init__(self):
        if self.mode not in ("ideal", "finite"):
            raise ResourceError(f"resource mode must be ideal or finite, got {self.mode!r}")
        if not math.isfinite(self.r):
            raise ResourceError("squeezing must be finite")

    @property
    def ideal(self) -> bool:
        return self.mode == "ideal"

    @classmethod
    def finite(cls, r: float) -> "ResourceQuality":
        return cls("finite", float(r))


IDEAL = ResourceQuality()


def profile_amplitudes(spec: InputSpec, grid: Grid) -> np.ndarray:
    """Unit-norm one-dimensional profile ``A(x_j)``."""
    if spec.profile not in PROFILES:
        raise ResourceError(f"unknown profile {spec.profile!r}")
    if spec.width < 2 * grid.spacing:
        raise ResourceError(f"profile width {spec.width} below two lattice spacings ({2 * grid.spacing:g})")
    x = grid.positions
    if spec.profile == "gaussian-packet":
        a = np.exp(-((x - spec.center) ** 2) / (4 * spec.width**2)).astype(complex)
    else:
        rng = np.random.default_rng(spec.seed)
        a = np.zeros_like(x, dtype=complex)
        for _ in range(5):
            c = spec.center + spec.width * rng.normal()
            s = spec.width * rng.uniform(0.7, 1.3)
            w = rng.normal() + 1j * rng.normal()
            a += w * np.exp(-((x - c) ** 2) / (4 * s**2) + 1j * rng.normal() * (x - c) / s)
    a /= math.sqrt(np.sum(np.abs(a) ** 2) * grid.spacing)
    dens = np.abs(a) ** 2 * grid.spacing
    mean = float(dens @ x)
    std = math.sqrt(float(dens @ (x - mean) ** 2))
    if EXTENT_FACTOR * std > grid.extent or abs(mean) + 4 * std > grid.extent / 2:
        raise ResourceError(f"grid extent {grid.extent:g} too small for profile of std {std:g}")
    return a


def make_input_state(spec: InputSpec, grid: Grid, labels: Sequence[Hashable] = (1, 2)) -> WaveFunction:
    """Ideal-diagonal pair: all amplitude on ``j2 = j1 - round(q/spacing)``."""
    if abs(spec.q) >= grid.extent / 2:
        raise ResourceError(f"|q|={abs(spec.q)} outside the grid")
    a = profile_amplitudes(spec, grid)
    sq, _ = grid.shift_sites(spec.q)
    n = grid.n_points
    amps = np.zeros((n, n), dtype=complex)
    j = np.arange(n)
    amps[j, (j - sq) % n] = a / math.sqrt(grid.spacing)
    return WaveFunction(grid, amps, tuple(labels))


def input_profile_state(spec: InputSpec, grid: Grid, label: Hashable = 1) -> WaveFunction:
    """Single-particle state ``A(x)`` used by the one-particle protocol."""
    return WaveFunction(grid, profile_amplitudes(spec, grid), (label,))


def _ideal_diagonal(grid: Grid, arity: int, labels) -> WaveFunction:
    n = grid.n_points
    amps = np.zeros((n,) * arity, dtype=complex)
    j = np.arange(n)
    amps[(j,) * arity] = 1 / math.sqrt(n * grid.spacing**arity)
    return WaveFunction(grid, amps, tuple(labels))


def check_extent(state: GaussianState, grid: Grid) -> None:
    n = state.n_modes
    sig = np.sqrt(np.diag(state.cov)[:n])
    worst = float(np.max(np.abs(state.mean[:n]) + 4 * sig))
    if EXTENT_FACTOR * float(sig.max()) > grid.extent or worst > grid.extent / 2:
        raise ResourceError(
            f"grid extent {grid.extent:g} below {EXTENT_FACTOR:g} x largest position std {sig.max():g}"
        )


def covariance_to_wavefunction(state: GaussianState, grid: Grid, labels: Sequence[Hashable] | None = None) -> WaveFunction:
    """Sample the pure Gaussian wavefunction with the given moments on the lattice.

    ``psi(x) ~ exp(-(x-m)^T (A - iC) (x-m) + 2i m_p . x)`` with
    ``A = Vxx^-1 / 4`` and ``C = Vxx^-1 Vxp``.
    """
    n = state.n_modes
    if n > 3:
        raise ResourceError("bridge supports at most three modes")
    if not state.is_pure():
        raise ResourceError("bridge needs a pure state (all symplectic eigenvalues 1/4)")
    check_extent(state, grid)
    vxx = state.cov[:n, :n]
    vxp = state.cov[:n, n:]
    inv = np.linalg.inv(vxx)
    C = inv @ vxp
    M = inv / 4 - 1j * (C + C.T) / 2
    mx, mp = state.mean[:n], state.mean[n:]
    axes = []
    for i in range(n):
        shape = [1] * n
        shape[i] = grid.n_points
        axes.append((grid.positions - mx[i]).reshape(shape))
    expo = np.zeros((grid.n_points,) * n, dtype=complex)
    for i in range(n):
        expo = expo - M[i, i] * axes[i] ** 2 + 2j * mp[i] * (axes[i] + mx[i])
        for k in range(i + 1, n):
            expo = expo - 2 * M[i, k] * (axes[i] * axes[k])
    expo -= expo.real.max()
    labs = tuple(labels) if labels is not None else state.labels
    return WaveFunction.from_amplitudes(grid, np.exp(expo), labs)


def make_epr_wavefunction(quality: ResourceQuality, grid: Grid, labels: Sequence[Hashable] = (2, 3)) -> WaveFunction:
    if quality.ideal:
        return _ideal_diagonal(grid, 2, labels)
    return covariance_to_wavefunction(epr_pair(quality.r, labels=tuple(labels)), grid)


def make_ghz_wavefunction(quality: ResourceQuality, grid: Grid, labels: Sequence[Hashable] = (3, 4, 5)) -> WaveFunction:
    if quality.ideal:
        return _ideal_diagonal(grid, 3, labels)
    return covariance_to_wavefunction(ghz_triplet(quality.r, labels=tuple(labels)), grid)


def relative_shift(w: WaveFunction) -> int | None:
    """Lattice offset ``s`` if a two-particle state lives on ``j2 = j1 - s``, else None."""
    if w.arity != 2:
        return None
    amps = w.amplitudes
    n = w.grid.n_points
    rows, cols = np.nonzero(amps)
    if rows.size == 0:
        return None
    offsets = np.unique((rows - cols) % n)
    if offsets.size != 1:
        return None
    s = int(offsets[0])
    return s - n if s >= n // 2 else s


def diagonal_profile(w: WaveFunction) -> tuple[np.ndarray, int]:
    """Profile ``a_j`` (unit norm with cell ``spacing``) and offset of a pair supported on one relative-position diagonal."""
    s = relative_shift(w)
    if s is None:
        raise GridError("state is not supported on a single relative-position diagonal")
    n = w.grid.n_points
    j = np.arange(n)
    a = w.amplitudes[j, (j - s) % n] * math.sqrt(w.grid.spacing)
    return a, s
