"""Position-lattice representation of few-particle wavefunctions.

Conventions used throughout the package:

* quadratures ``x = (a + a^dag)/2`` and ``p = (a - a^dag)/(2i)``, so ``[x, p] = i/2``
  and the vacuum variance of either quadrature is 1/4;
* momentum eigenfunctions ``<x|p> = exp(2ipx)/sqrt(pi)``;
* lattice sites ``x_j = (j - origin_index) * spacing`` with periodic wrap;
* momentum lattice ``p_k = (k - origin_index) * pi / (n_points * spacing)``,
  which makes the discrete kernel an exact (centered) DFT.

Amplitudes are stored with continuum normalization: the squared norm of a
state is ``sum |psi|^2 * prod(cell)`` where the cell of a particle is the
position spacing, or the momentum spacing for particles held in the
momentum representation.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

MAX_ARITY = 5
NORM_TOL = 1e-12
LATTICE_TOL = 1e-9


class GridError(ValueError):
    """Raised for grid/label/arity mismatches and off-lattice parameters."""


@dataclass(frozen=True)
class Grid:
    n_points: int
    spacing: float
    origin_index: int

    @property
    def extent(self) -> float:
        return self.n_points * self.spacing

    @property
    def momentum_spacing(self) -> float:
        return math.pi / (self.n_points * self.spacing)

    @property
    def momentum_extent(self) -> float:
        return self.n_points * self.momentum_spacing

    @property
    def positions(self) -> np.ndarray:
        return (np.arange(self.n_points) - self.origin_index) * self.spacing

    @property
    def momenta(self) -> np.ndarray:
        return (np.arange(self.n_points) - self.origin_index) * self.momentum_spacing

    def cell(self, domain: str) -> float:
        return self.spacing if domain == "x" else self.momentum_spacing

    def shift_sites(self, Q: float) -> tuple[int, float]:
        """Integer lattice shift for a displacement ``Q`` and the rounding residual."""
        sites = int(round(Q / self.spacing))
        return sites, Q - sites * self.spacing

    def position_index(self, x: float) -> int:
        sites, residual = self.shift_sites(x)
        if abs(residual) > LATTICE_TOL * max(1.0, self.spacing):
            raise GridError(f"x={x} is not a lattice position (residual {residual:g})")
        return (sites + self.origin_index) % self.n_points

    def momentum_index(self, p: float, spacing: float | None = None) -> int:
        """Centered index of ``p`` on a momentum lattice, wrapped modulo the period."""
        dp = self.momentum_spacing if spacing is None else spacing
        k = p / dp
        if abs(k - round(k)) > LATTICE_TOL * max(1.0, abs(k)):
            raise GridError(f"p={p} is not on the momentum lattice (spacing {dp:g})")
        return (int(round(k)) + self.origin_index) % self.n_points

    def on_position_lattice(self, x: float) -> bool:
        k = x / self.spacing
        return abs(k - round(k)) <= LATTICE_TOL * max(1.0, abs(k))

    def on_momentum_lattice(self, p: float, spacing: float | None = None) -> bool:
        k = p / (self.momentum_spacing if spacing is None else spacing)
        return abs(k - round(k)) <= LATTICE_TOL * max(1.0, abs(k))

    def wrap_position(self, values):
        """Map values into the fundamental interval ``[-extent/2, extent/2)``."""
        L = self.extent
        return np.mod(np.asarray(values) + L / 2, L) - L / 2

    def wrap_momentum(self, values):
        L = self.momentum_extent
        return np.mod(np.asarray(values) + L / 2, L) - L / 2


def make_grid(n_points: int, extent: float) -> Grid:
    if isinstance(n_points, bool) or int(n_points) != n_points:
        raise GridError(f"n_points must be an integer, got {n_points!r}")
    n_points = int(n_points)
    if n_points < 8 or n_points & (n_points - 1):
        raise GridError(f"n_points must be a power of two >= 8, got {n_points}")
    if not extent > 0 or not math.isfinite(extent):
        raise GridError(f"extent must be positive, got {extent}")
    return Grid(n_points=n_points, spacing=float(extent) / n_points, origin_index=n_points // 2)


def centered_dft(arr: np.ndarray, axis: int) -> np.ndarray:
    """``out[k] = sum_j arr[j] exp(-2 i p_k x_j)`` along ``axis`` on centered lattices."""
    shifted = np.fft.ifftshift(arr, axes=axis)
    return np.fft.fftshift(np.fft.fft(shifted, axis=axis), axes=axis)


def centered_idft(arr: np.ndarray, axis: int) -> np.ndarray:
    """Inverse of :func:`centered_dft` (includes the 1/N factor)."""
    shifted = np.fft.ifftshift(arr, axes=axis)
    return np.fft.fftshift(np.fft.ifft(shifted, axis=axis), axes=axis)


@dataclass(frozen=True, eq=False)
class WaveFunction:
    """Immutable amplitude tensor of shape ``(n_points,) * arity``.

    ``labels`` name the particles (one per axis); ``domains`` records whether
    each axis is held in the position (``"x"``) or momentum (``"p"``) basis.
    """

    grid: Grid
    amplitudes: np.ndarray
    labels: tuple
    domains: tuple = field(default=())

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        labels = tuple(self.labels)
        arity = amps.ndim
        if not 1 <= arity <= MAX_ARITY:
            raise GridError(f"arity must be in 1..{MAX_ARITY}, got {arity}")
        if any(d != self.grid.n_points for d in amps.shape):
            raise GridError(f"all axes must have {self.grid.n_points} points, got {amps.shape}")
        if len(labels) != arity or len(set(labels)) != arity:
            raise GridError(f"need {arity} distinct labels, got {labels}")
        domains = tuple(self.domains) or ("x",) * arity
        if len(domains) != arity or any(d not in ("x", "p") for d in domains):
            raise GridError(f"bad domains {domains}")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "domains", domains)

    @classmethod
    def from_amplitudes(cls, grid: Grid, amplitudes, labels: Sequence[Hashable], domains=()) -> "WaveFunction":
        """Construct and normalize."""
        return cls(grid, amplitudes, tuple(labels), tuple(domains)).normalized()

    @property
    def arity(self) -> int:
        return self.amplitudes.ndim

    @property
    def cell_volume(self) -> float:
        return float(np.prod([self.grid.cell(d) for d in self.domains]))

    def axis(self, label: Hashable) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise GridError(f"unknown particle label {label!r}; have {self.labels}") from None

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.cell_volume)

    def normalized(self) -> "WaveFunction":
        n2 = self.norm_squared()
        if n2 <= 0:
            raise GridError("cannot normalize the zero state")
        return self.with_amplitudes(self.amplitudes / math.sqrt(n2))

    def with_amplitudes(self, amplitudes, domains=None) -> "WaveFunction":
        return WaveFunction(self.grid, amplitudes, self.labels, self.domains if domains is None else domains)

    def relabel(self, labels: Iterable[Hashable]) -> "WaveFunction":
        return WaveFunction(self.grid, self.amplitudes, tuple(labels), self.domains)

    def permute(self, labels: Sequence[Hashable]) -> "WaveFunction":
        """Reorder axes so that they follow ``labels``."""
        order = [self.axis(lab) for lab in labels]
        return WaveFunction(
            self.grid,
            np.transpose(self.amplitudes, order),
            tuple(labels),
            tuple(self.domains[i] for i in order),
        )

    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2 * self.cell_volume

    def __mul__(self, scalar) -> "WaveFunction":
        return self.with_amplitudes(self.amplitudes * scalar)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"WaveFunction(labels={self.labels}, domains={self.domains}, n_points={self.grid.n_points})"


def tensor(*states: WaveFunction) -> WaveFunction:
    """Tensor product; labels are concatenated and must stay distinct."""
    grid = states[0].grid
    amps = states[0].amplitudes
    labels = list(states[0].labels)
    domains = list(states[0].domains)
    for s in states[1:]:
        if s.grid != grid:
            raise GridError("tensor product of states on different grids")
        amps = np.multiply.outer(amps, s.amplitudes)
        labels += s.labels
        domains += s.domains
    return WaveFunction(grid, amps, tuple(labels), tuple(domains))


def delta_state(grid: Grid, x: float, label: Hashable = 0) -> WaveFunction:
    """Unit-norm Kronecker state at the lattice site of ``x``."""
    amps = np.zeros(grid.n_points, dtype=complex)
    amps[grid.position_index(x)] = 1 / math.sqrt(grid.spacing)
    return WaveFunction(grid, amps, (label,))


def gaussian_packet(grid: Grid, center: float = 0.0, width: float = 0.5, momentum: float = 0.0, label: Hashable = 0) -> WaveFunction:
    """Gaussian with position standard deviation ``width``; ``width=1/2`` is the vacuum."""
    x = grid.positions
    amps = np.exp(-((x - center) ** 2) / (4 * width**2) + 2j * momentum * x)
    return WaveFunction.from_amplitudes(grid, amps, (label,))


def _check_compatible(a: WaveFunction, b: WaveFunction) -> None:
    if a.grid != b.grid:
        raise GridError("states live on different grids")
    if a.arity != b.arity:
        raise GridError(f"arity mismatch: {a.arity} vs {b.arity}")
    if a.domains != b.domains:
        raise GridError(f"basis mismatch: {a.domains} vs {b.domains}")


def inner_product(a: WaveFunction, b: WaveFunction) -> complex:
    """``<a|b>``, conjugate-linear in ``a``. Axes are matched by position, not label."""
    _check_compatible(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes) * a.cell_volume)


def to_momentum(w: WaveFunction, particle: Hashable, inverse: bool = False) -> WaveFunction:
    """Change one particle between position and momentum representation.

    Forward: ``phi(p) = int dx psi(x) exp(-2ipx)/sqrt(pi)``. With ``inverse=True``
    the conjugate kernel brings a momentum-held particle back to position.
    """
    ax = w.axis(particle)
    want = "p" if inverse else "x"
    if w.domains[ax] != want:
        raise GridError(f"particle {particle!r} is in the {w.domains[ax]} basis")
    g = w.grid
    if inverse:
        amps = centered_idft(w.amplitudes, ax) * (g.n_points * g.momentum_spacing / math.sqrt(math.pi))
    else:
        amps = centered_dft(w.amplitudes, ax) * (g.spacing / math.sqrt(math.pi))
    domains = list(w.domains)
    domains[ax] = "x" if inverse else "p"
    return w.with_amplitudes(amps, tuple(domains))


def to_position(w: WaveFunction, particle: Hashable) -> WaveFunction:
    return to_momentum(w, particle, inverse=True)


def all_position(w: WaveFunction) -> WaveFunction:
    for lab, dom in zip(w.labels, w.domains):
        if dom == "p":
            w = to_position(w, lab)
    return w


@dataclass(frozen=True)
class GridOperator:
    """Elementary lattice operator acting on one particle.

    kinds:
      ``position-shift``  ``value`` = Q, maps site j to j + round(Q/spacing) (periodic);
      ``momentum-phase``  ``value`` = P, multiplies by ``exp(2iP x_j)``;
      ``permutation``     exchanges the axes of ``target`` and ``partner``;
      ``composed``        applies ``parts`` right to left (matrix-product order).
    """

    kind: str
    target: Hashable = None
    value: float = 0.0
    partner: Hashable = None
    parts: tuple = ()

    def adjoint(self) -> "GridOperator":
        if self.kind in ("position-shift", "momentum-phase"):
            return GridOperator(self.kind, self.target, -self.value)
        if self.kind == "permutation":
            return self
        if self.kind == "composed":
            return GridOperator("composed", parts=tuple(p.adjoint() for p in reversed(self.parts)))
        raise GridError(f"unknown operator kind {self.kind!r}")


def shift(target, Q: float) -> GridOperator:
    return GridOperator("position-shift", target, Q)


def phase(target, P: float) -> GridOperator:
    return GridOperator("momentum-phase", target, P)


def compose(*ops: GridOperator) -> GridOperator:
    """``compose(A, B)`` acts as ``A @ B``: B first."""
    return GridOperator("composed", parts=tuple(ops))


def apply_operator(w: WaveFunction, op: GridOperator) -> WaveFunction:
    if op.kind == "composed":
        for part in reversed(op.parts):
            w = apply_operator(w, part)
        return w
    ax = w.axis(op.target)
    if op.kind == "permutation":
        other = w.axis(op.partner)
        order = list(range(w.arity))
        order[ax], order[other] = order[other], order[ax]
        return w.with_amplitudes(np.transpose(w.amplitudes, order), tuple(w.domains[i] for i in order))
    if w.domains[ax] != "x":
        raise GridError(f"{op.kind} requires particle {op.target!r} in the position basis")
    g = w.grid
    if op.kind == "position-shift":
        sites, residual = g.shift_sites(op.value)
        if abs(residual) > LATTICE_TOL * g.spacing:
            logger.debug("shift %g rounded to %d sites (residual %g)", op.value, sites, residual)
        return w.with_amplitudes(np.roll(w.amplitudes, sites, axis=ax))
    if op.kind == "momentum-phase":
        shape = [1] * w.arity
        shape[ax] = g.n_points
        factor = np.exp(2j * op.value * g.positions).reshape(shape)
        return w.with_amplitudes(w.amplitudes * factor)
    raise GridError(f"unknown operator kind {op.kind!r}")
