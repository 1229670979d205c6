"""Fidelity, quadrature statistics and entanglement diagnostics on the lattice."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .gaussian import LinearForm
from .grid import GridError, WaveFunction, inner_product, to_momentum, to_position


@dataclass(frozen=True)
class FidelityResult:
    value: float
    phase: float
    method: str = "overlap"


def fidelity(a: WaveFunction, b: WaveFunction) -> FidelityResult:
    """Squared overlap of two pure states; ``phase`` is ``arg <a|b>``."""
    ov = inner_product(a, b)
    return FidelityResult(value=min(1.0, abs(ov) ** 2), phase=cmath.phase(ov) if ov != 0 else 0.0)


def _axes_for(w: WaveFunction, form: LinearForm, modes: Sequence[Hashable] | None):
    modes = tuple(w.labels) if modes is None else tuple(modes)
    if len(modes) != form.n_modes:
        raise GridError(f"form has {form.n_modes} modes but {len(modes)} labels were given")
    xs, ps = [], []
    for i, lab in enumerate(modes):
        a, b = form.x_part[i], form.p_part[i]
        if a == 0 and b == 0:
            continue
        ax = w.axis(lab)
        if a:
            xs.append((ax, lab, a))
        if b:
            ps.append((ax, lab, b))
    return xs, ps


def _coordinate_sum(w: WaveFunction, terms, coords: np.ndarray) -> np.ndarray:
    total = np.zeros((1,) * w.arity)
    for ax, _, c in terms:
        shape = [1] * w.arity
        shape[ax] = w.grid.n_points
        total = total + c * coords.reshape(shape)
    return total


def _integer_coeffs(terms) -> bool:
    return all(float(c).is_integer() for _, _, c in terms)


def _moments(w: WaveFunction, form: LinearForm, modes, periodic: bool) -> tuple[float, float]:
    xs, ps = _axes_for(w, form, modes)
    if not xs and not ps:
        return form.constant, 0.0
    if xs and ps:
        return _operator_moments(w, xs, ps, form.constant)
    terms = xs or ps
    want = "x" if xs else "p"
    for ax, lab, _ in terms:
        if w.domains[ax] != want:
            w = to_momentum(w, lab) if want == "p" else to_position(w, lab)
    coords = w.grid.positions if want == "x" else w.grid.momenta
    values = _coordinate_sum(w, terms, coords)
    if periodic:
        if not _integer_coeffs(terms):
            raise GridError("periodic evaluation needs integer coefficients")
        values = w.grid.wrap_position(values) if want == "x" else w.grid.wrap_momentum(values)
    dens = w.density()
    norm = dens.sum()
    values = np.broadcast_to(values, dens.shape)
    mean = float(np.sum(dens * values) / norm)
    var = float(np.sum(dens * (values - mean) ** 2) / norm)
    return mean + form.constant, var


def _operator_moments(w: WaveFunction, xs, ps, constant: float) -> tuple[float, float]:
    for lab, dom in zip(w.labels, w.domains):
        if dom == "p":
            w = to_position(w, lab)
    g = w.grid
    fpsi = _coordinate_sum(w, xs, g.positions) * w.amplitudes
    for ax, lab, c in ps:
        shape = [1] * w.arity
        shape[ax] = g.n_points
        mom = to_momentum(w, lab)
        mom = mom.with_amplitudes(mom.amplitudes * g.momenta.reshape(shape))
        fpsi = fpsi + c * to_position(mom, lab).amplitudes
    cell = w.cell_volume
    norm = w.norm_squared()
    mean = float(np.real(np.vdot(w.amplitudes, fpsi)) * cell / norm)
    second = float(np.sum(np.abs(fpsi) ** 2) * cell / norm)
    return mean + constant, max(second - mean**2, 0.0)


def quadrature_mean(w: WaveFunction, form: LinearForm, modes=None, periodic: bool = False) -> float:
    return _moments(w, form, modes, periodic)[0]


def quadrature_variance(w: WaveFunction, form: LinearForm, modes=None, periodic: bool = False) -> float:
    """``<(F - <F>)^2>`` for a linear form ``F`` over the state's particles.

    ``modes`` maps the form's mode indices to particle labels (default: the
    state's labels). Pure position or pure momentum forms are evaluated from
    the lattice density; with ``periodic=True`` integer-coefficient forms are
    reduced modulo the lattice period (minimum image). Mixed forms go
    through the operator route.
    """
    return _moments(w, form, modes, periodic)[1]


def schmidt_weights(w: WaveFunction, cut: Sequence[Hashable] | None = None) -> np.ndarray:
    cut = (w.labels[0],) if cut is None else tuple(cut)
    left = [w.axis(lab) for lab in cut]
    right = [i for i in range(w.arity) if i not in left]
    if not left or not right:
        raise GridError("cut must split the particles into two non-empty groups")
    m = np.transpose(w.amplitudes, left + right).reshape(w.grid.n_points ** len(left), -1)
    s = np.linalg.svd(m * math.sqrt(w.cell_volume), compute_uv=False)
    weights = s**2
    return weights / weights.sum()


def schmidt_entropy(w: WaveFunction, cut: Sequence[Hashable] | None = None) -> float:
    """Entanglement entropy (natural log) across ``cut | rest``."""
    p = schmidt_weights(w, cut)
    p = p[p > 1e-300]
    return float(max(-np.sum(p * np.log(p)), 0.0))


@dataclass
class SweepSummary:
    parameter: str
    values: list = field(default_factory=list)
    means: list = field(default_factory=list)
    std_errors: list = field(default_factory=list)
    n_samples: int = 0

    def add(self, value, samples: Sequence[float]) -> None:
        samples = np.asarray(samples, dtype=float)
        self.values.append(value)
        self.means.append(float(samples.mean()))
        self.std_errors.append(float(samples.std(ddof=1) / math.sqrt(samples.size)) if samples.size > 1 else 0.0)
        self.n_samples = int(samples.size)
