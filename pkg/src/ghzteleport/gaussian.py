"""Heisenberg-picture engine: quadrature means and covariances.

Phase-space vectors are ordered ``(x_1, ..., x_n, p_1, ..., p_n)``. The vacuum
covariance is ``I/4``. Linear optics act on the annihilation operators by a
real matrix ``M``, which acts identically on the x- and p-blocks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

VACUUM_VARIANCE = 0.25


class GaussianError(ValueError):
    pass


def symplectic_form(n: int) -> np.ndarray:
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


@dataclass(frozen=True, eq=False)
class GaussianState:
    """Means and covariance; ``factor=(S, V0)`` records ``cov = S V0 S^T`` when known.

    The factored form keeps variances of strongly squeezed combinations free
    of cancellation between huge covariance entries.
    """

    mean: np.ndarray
    cov: np.ndarray
    labels: tuple = field(default=())
    factor: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float)
        cov = np.array(self.cov, dtype=float)
        if mean.ndim != 1 or mean.size % 2 or cov.shape != (mean.size, mean.size):
            raise GaussianError(f"inconsistent shapes {mean.shape}, {cov.shape}")
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise GaussianError("covariance must be symmetric")
        labels = tuple(self.labels) or tuple(range(mean.size // 2))
        if len(labels) != mean.size // 2:
            raise GaussianError("one label per mode required")
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "labels", labels)

    @property
    def n_modes(self) -> int:
        return self.mean.size // 2

    def mode(self, label: Hashable) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise GaussianError(f"unknown mode {label!r}; have {self.labels}") from None

    def symplectic_eigenvalues(self) -> np.ndarray:
        ev = np.linalg.eigvals(1j * symplectic_form(self.n_modes) @ self.cov)
        return np.sort(np.abs(ev))[::2]

    def is_physical(self, tol: float = 1e-10) -> bool:
        """Uncertainty relation ``cov + (i/4) Omega >= 0``."""
        m = self.cov + 0.25j * symplectic_form(self.n_modes)
        return bool(np.linalg.eigvalsh(m).min() >= -tol)

    def is_pure(self, tol: float = 1e-9) -> bool:
        return bool(np.allclose(self.symplectic_eigenvalues(), VACUUM_VARIANCE, atol=tol))

    def forms(self) -> "Quadratures":
        return Quadratures(self.labels)


def vacuum(n_modes: int, labels: Sequence[Hashable] = ()) -> GaussianState:
    cov = VACUUM_VARIANCE * np.eye(2 * n_modes)
    return GaussianState(np.zeros(2 * n_modes), cov, tuple(labels), factor=(np.eye(2 * n_modes), cov))


@dataclass(frozen=True)
class SqueezeParam:
    """``r > 0`` squeezes momentum: ``Var(p) = exp(-2r)/4`` from vacuum."""

    r: float
    mode: Hashable


@dataclass(frozen=True)
class BeamsplitterSpec:
    """Lossless two-port with matrix ``[[cos, sin], [sin, -cos]]`` on ``modes``."""

    theta: float
    modes: tuple

    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        if self.theta == HALF_THETA:
            c = s = math.sqrt(0.5)  # balanced splitter: equal entries, exact cancellations
        return np.array([[c, s], [s, -c]])


@dataclass(frozen=True, eq=False)
class LinearForm:
    """Observable ``coefficients . (x, p) + constant``."""

    coefficients: np.ndarray
    constant: float = 0.0

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        if c.ndim != 1 or c.size % 2 or not np.all(np.isfinite(c)):
            raise GaussianError("coefficients must be a finite vector of even length")
        c.flags.writeable = False
        object.__setattr__(self, "coefficients", c)

    def _coerce(self, other) -> "LinearForm":
        if isinstance(other, LinearForm):
            if other.coefficients.size != self.coefficients.size:
                raise GaussianError("forms over different mode sets")
            return other
        return LinearForm(np.zeros_like(self.coefficients), float(other))

    def __add__(self, other):
        o = self._coerce(other)
        return LinearForm(self.coefficients + o.coefficients, self.constant + o.constant)

    __radd__ = __add__

    def __neg__(self):
        return LinearForm(-self.coefficients, -self.constant)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, scalar: float):
        return LinearForm(self.coefficients * scalar, self.constant * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float):
        return self * (1.0 / scalar)

    @property
    def n_modes(self) -> int:
        return self.coefficients.size // 2

    @property
    def x_part(self) -> np.ndarray:
        return self.coefficients[: self.n_modes]

    @property
    def p_part(self) -> np.ndarray:
        return self.coefficients[self.n_modes :]

    def evaluate(self, vector) -> float:
        return float(self.coefficients @ np.asarray(vector, dtype=float) + self.constant)

    def allclose(self, other: "LinearForm", tol: float = 1e-12) -> bool:
        return bool(
            np.max(np.abs(self.coefficients - other.coefficients), initial=0.0) <= tol
            and abs(self.constant - other.constant) <= tol
        )


class Quadratures:
    """Factory for single-quadrature forms over a labelled mode set."""

    def __init__(self, labels: Sequence[Hashable]):
        self.labels = tuple(labels)
        self.n = len(self.labels)

    def _unit(self, index: int) -> LinearForm:
        c = np.zeros(2 * self.n)
        c[index] = 1.0
        return LinearForm(c)

    def x(self, label: Hashable) -> LinearForm:
        return self._unit(self.labels.index(label))

    def p(self, label: Hashable) -> LinearForm:
        return self._unit(self.n + self.labels.index(label))

    def zero(self) -> LinearForm:
        return LinearForm(np.zeros(2 * self.n))


def _passive(state: GaussianState, modes: Sequence[int], m: np.ndarray) -> GaussianState:
    n = state.n_modes
    S = np.eye(2 * n)
    idx = list(modes)
    S[np.ix_(idx, idx)] = m
    pidx = [i + n for i in idx]
    S[np.ix_(pidx, pidx)] = m
    return apply_symplectic(state, S)


def apply_symplectic(state: GaussianState, S: np.ndarray) -> GaussianState:
    cov = S @ state.cov @ S.T
    factor = None if state.factor is None else (S @ state.factor[0], state.factor[1])
    return GaussianState(S @ state.mean, (cov + cov.T) / 2, state.labels, factor)


def squeeze(state: GaussianState, param: SqueezeParam) -> GaussianState:
    """Single-mode squeezer ``a -> a cosh r + a^dag sinh r``: ``x -> e^r x``, ``p -> e^-r p``."""
    i = state.mode(param.mode)
    n = state.n_modes
    S = np.eye(2 * n)
    S[i, i] = math.exp(param.r)
    S[i + n, i + n] = math.exp(-param.r)
    return apply_symplectic(state, S)


def beamsplit(state: GaussianState, bs: BeamsplitterSpec) -> GaussianState:
    a, b = (state.mode(m) for m in bs.modes)
    if a == b:
        raise GaussianError("beamsplitter needs two distinct modes")
    return _passive(state, (a, b), bs.matrix())


def displace(state: GaussianState, mode: Hashable, dx: float = 0.0, dp: float = 0.0) -> GaussianState:
    i = state.mode(mode)
    mean = state.mean.copy()
    mean[i] += dx
    mean[i + state.n_modes] += dp
    return GaussianState(mean, state.cov, state.labels, state.factor)


# first port of the 3->1 splitter carries 1/sqrt(3) of b3; cos(theta) = 1/sqrt(3)
GHZ_FIRST_THETA = math.acos(1 / math.sqrt(3))
HALF_THETA = math.pi / 4


def ghz_mode_matrix() -> np.ndarray:
    """Output-from-input matrix of the two-splitter network (rows a3, a4, a5)."""
    s3, s6, s2 = 1 / math.sqrt(3), 1 / math.sqrt(6), 1 / math.sqrt(2)
    return np.array(
        [
            [s3, math.sqrt(2 / 3), 0.0],
            [s3, -s6, s2],
            [s3, -s6, -s2],
        ]
    )


def ghz_network(state: GaussianState, modes: Sequence[Hashable]) -> GaussianState:
    """Splitter with ``cos(theta)=1/sqrt(3)`` on ``(m0, m1)``, then a 50% splitter on ``(m1, m2)``."""
    m0, m1, m2 = modes
    if len({m0, m1, m2}) != 3:
        raise GaussianError("ghz_network needs three distinct modes")
    state = beamsplit(state, BeamsplitterSpec(GHZ_FIRST_THETA, (m0, m1)))
    return beamsplit(state, BeamsplitterSpec(HALF_THETA, (m1, m2)))


def ghz_triplet(r: float, labels: Sequence[Hashable] = (3, 4, 5)) -> GaussianState:
    """Momentum-squeezed first input, position-squeezed second and third, mixed by the network."""
    r = abs(r)
    s = vacuum(3, labels)
    s = squeeze(s, SqueezeParam(r, labels[0]))
    s = squeeze(s, SqueezeParam(-r, labels[1]))
    s = squeeze(s, SqueezeParam(-r, labels[2]))
    return ghz_network(s, labels)


def epr_pair(r2: float, r3: float | None = None, labels: Sequence[Hashable] = (2, 3)) -> GaussianState:
    """Momentum-squeezed (|r2|) and position-squeezed (|r3|) beams on a 50% splitter.

    Only the magnitudes are used; the signs are fixed so that ``x2 - x3`` and
    ``p2 + p3`` are the squeezed combinations.
    """
    r3 = r2 if r3 is None else r3
    s = vacuum(2, labels)
    s = squeeze(s, SqueezeParam(abs(r2), labels[0]))
    s = squeeze(s, SqueezeParam(-abs(r3), labels[1]))
    return beamsplit(s, BeamsplitterSpec(HALF_THETA, tuple(labels)))


def _check_form(state: GaussianState, f: LinearForm) -> None:
    if f.coefficients.size != 2 * state.n_modes:
        raise GaussianError(f"form over {f.n_modes} modes, state has {state.n_modes}")


def variance(state: GaussianState, f: LinearForm) -> float:
    _check_form(state, f)
    if state.factor is not None:
        w = state.factor[0].T @ f.coefficients
        return float(w @ state.factor[1] @ w)
    return float(f.coefficients @ state.cov @ f.coefficients)


def expectation(state: GaussianState, f: LinearForm) -> float:
    _check_form(state, f)
    return f.evaluate(state.mean)


def condition_on_value(state: GaussianState, f: LinearForm, value: float, tol: float = 1e-300) -> GaussianState:
    """Gaussian update after an ideal measurement of ``f`` returned ``value``.

    Rank-one Schur complement; identical to rotating ``f`` into a single
    quadrature and conditioning on it. Only the moments of the unmeasured
    complement are physically meaningful afterwards.
    """
    _check_form(state, f)
    v = variance(state, f)
    if v <= tol:
        return state
    k = state.cov @ f.coefficients / v
    mean = state.mean + k * (value - expectation(state, f))
    cov = state.cov - np.outer(k, k) * v
    return GaussianState(mean, (cov + cov.T) / 2, state.labels)


def condition_on_quadrature(state: GaussianState, f: LinearForm, seed: int, zero_tol: float = 1e-300) -> tuple[float, GaussianState]:
    """Sample an outcome of ``f`` from its Gaussian marginal and condition on it.

    A zero-variance form returns its deterministic value and leaves the state alone.
    """
    mu, v = expectation(state, f), variance(state, f)
    if v <= zero_tol:
        return mu, state
    outcome = float(np.random.default_rng(seed).normal(mu, math.sqrt(v)))
    return outcome, condition_on_value(state, f, outcome)


def verify_identity(lhs: LinearForm, rhs_terms: Sequence[LinearForm], tol: float = 1e-12) -> bool:
    """Coefficient-level operator identity ``lhs == sum(rhs_terms)``."""
    total = sum(rhs_terms[1:], rhs_terms[0]) if rhs_terms else lhs * 0.0
    if total.coefficients.size != lhs.coefficients.size:
        raise GaussianError("forms over different mode sets")
    return lhs.allclose(total, tol)
