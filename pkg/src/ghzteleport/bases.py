"""Measurement bases on the lattice and joint-measurement sampling.

Three families:

* Bell states ``|Psi(P,Q)> ~ sum_j exp(2iP x_j) |x_j>|x_j - Q>`` (N^2 labels);
* the three-particle maximally entangled family
  ``|Psi(P,Q,R)> ~ sum_j exp(3iP x_j) |x_j>|x_j - Q>|x_j - R>`` (N^3 labels),
  whose P lattice has spacing ``2/3`` of the momentum spacing;
* the product family ``|p>_1 |Psi(P,Q)>_23`` (N^3 labels).

All vectors are unit-norm lattice states; continuum prefactors never appear.
"""
from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .grid import Grid, GridError, WaveFunction, centered_dft, centered_idft, tensor
from .resources import diagonal_profile

TRIPLE_P_FACTOR = 2.0 / 3.0
BASES = ("pi123", "triple")
DENSE_MAX_POINTS = 32


@dataclass(frozen=True)
class BellLabel:
    P: float
    Q: float


@dataclass(frozen=True)
class TripleLabel:
    """Outcome of the ``|p>_1 |Psi(P,Q)>_23`` measurement."""

    p: float
    P: float
    Q: float


@dataclass(frozen=True)
class GHZLabel:
    """Label ``(P, Q, R)`` of the three-particle maximally entangled family."""

    P: float
    Q: float
    R: float


@dataclass(frozen=True)
class MeasurementOutcome:
    label: object
    density: float
    seed: int | None = None

    def as_dict(self) -> dict:
        d = {k: float(v) for k, v in vars(self.label).items()}
        d["density"] = float(self.density)
        return d


def triple_momentum_spacing(grid: Grid) -> float:
    return TRIPLE_P_FACTOR * grid.momentum_spacing


def _require(ok: bool, what: str) -> None:
    if not ok:
        raise GridError(f"off-lattice label: {what}")


def momentum_state(grid: Grid, p: float, label: Hashable = 1) -> WaveFunction:
    _require(grid.on_momentum_lattice(p), f"p={p}")
    amps = np.exp(2j * p * grid.positions) / math.sqrt(grid.n_points * grid.spacing)
    return WaveFunction(grid, amps, (label,))


def bell_state(label: BellLabel, grid: Grid, labels: Sequence[Hashable] = (1, 2)) -> WaveFunction:
    _require(grid.on_momentum_lattice(label.P), f"P={label.P}")
    _require(grid.on_position_lattice(label.Q), f"Q={label.Q}")
    n = grid.n_points
    s, _ = grid.shift_sites(label.Q)
    j = np.arange(n)
    amps = np.zeros((n, n), dtype=complex)
    amps[j, (j - s) % n] = np.exp(2j * label.P * grid.positions) / (grid.spacing * math.sqrt(n))
    return WaveFunction(grid, amps, tuple(labels))


def triple_basis_state(label: GHZLabel, grid: Grid, labels: Sequence[Hashable] = (1, 2, 3)) -> WaveFunction:
    _require(grid.on_momentum_lattice(label.P, triple_momentum_spacing(grid)), f"P={label.P}")
    _require(grid.on_position_lattice(label.Q) and grid.on_position_lattice(label.R), f"Q={label.Q}, R={label.R}")
    n = grid.n_points
    sq, _ = grid.shift_sites(label.Q)
    sr, _ = grid.shift_sites(label.R)
    j = np.arange(n)
    amps = np.zeros((n, n, n), dtype=complex)
    amps[j, (j - sq) % n, (j - sr) % n] = np.exp(3j * label.P * grid.positions) / math.sqrt(n * grid.spacing**3)
    return WaveFunction(grid, amps, tuple(labels))


def pi123_state(label: TripleLabel, grid: Grid, labels: Sequence[Hashable] = (1, 2, 3)) -> WaveFunction:
    first = momentum_state(grid, label.p, labels[0])
    return tensor(first, bell_state(BellLabel(label.P, label.Q), grid, labels[1:]))


def lattice_values(grid: Grid, kind: str) -> np.ndarray:
    """Outcome values indexed like the coefficient arrays below."""
    if kind == "x":
        return grid.positions
    if kind == "p":
        return grid.momenta
    if kind == "p3":
        return grid.momenta * TRIPLE_P_FACTOR
    raise ValueError(kind)


# --- fast analysis / synthesis -------------------------------------------------
# Coefficient arrays carry the outcome axes first, then the untouched axes of
# the state in their original order. All amplitudes must be in the position basis.


def _front(amps: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    rest = [i for i in range(amps.ndim) if i not in axes]
    return np.transpose(amps, list(axes) + rest)


def _gather_diagonals(arr: np.ndarray, n_offsets: int) -> np.ndarray:
    """``out[s_idx, j, ...] = arr[j, (j - s) % N, ...]`` with ``s = s_idx - N/2``."""
    n = arr.shape[0]
    j = np.arange(n)
    s = np.arange(n_offsets) - n // 2
    return arr[j[None, :], (j[None, :] - s[:, None]) % n]


def bell_coefficients(w: WaveFunction, particles: Sequence[Hashable]) -> np.ndarray:
    """``c[kP, iQ, ...] = <Psi(P,Q)|_ab psi>``."""
    axes = [w.axis(p) for p in particles]
    _check_position(w, axes)
    g = w.grid
    n = g.n_points
    d = _gather_diagonals(_front(w.amplitudes, axes), n)
    c = centered_dft(d, axis=1) * (g.spacing / math.sqrt(n))
    return np.swapaxes(c, 0, 1)


def bell_synthesis(coef: np.ndarray, grid: Grid) -> np.ndarray:
    """Inverse of :func:`bell_coefficients`; returns amplitudes with the pair axes first."""
    n = grid.n_points
    d = centered_idft(np.swapaxes(coef, 0, 1), axis=1) * (n / (grid.spacing * math.sqrt(n)))
    out = np.zeros((n, n) + coef.shape[2:], dtype=complex)
    j = np.arange(n)
    s = np.arange(n) - n // 2
    out[j[None, :], (j[None, :] - s[:, None]) % n] = d
    return out


def triple_coefficients(w: WaveFunction, particles: Sequence[Hashable]) -> np.ndarray:
    """``c[mP, iQ, iR, ...] = <Psi(P,Q,R)|_abc psi>``."""
    axes = [w.axis(p) for p in particles]
    _check_position(w, axes)
    g = w.grid
    n = g.n_points
    arr = _front(w.amplitudes, axes)
    j = np.arange(n)
    s = np.arange(n) - n // 2
    d = arr[j[None, None, :], (j[None, None, :] - s[:, None, None]) % n, (j[None, None, :] - s[None, :, None]) % n]
    c = centered_dft(d, axis=2) * (g.spacing**1.5 / math.sqrt(n))
    return np.moveaxis(c, 2, 0)


def triple_synthesis(coef: np.ndarray, grid: Grid) -> np.ndarray:
    n = grid.n_points
    d = centered_idft(np.moveaxis(coef, 0, 2), axis=2) * (n / math.sqrt(n * grid.spacing**3))
    out = np.zeros((n, n, n) + coef.shape[3:], dtype=complex)
    j = np.arange(n)
    s = np.arange(n) - n // 2
    out[j[None, None, :], (j[None, None, :] - s[:, None, None]) % n, (j[None, None, :] - s[None, :, None]) % n] = d
    return out


def pi123_coefficients(w: WaveFunction, particles: Sequence[Hashable]) -> np.ndarray:
    """``c[kp, kP, iQ, ...] = (<p|_a <Psi(P,Q)|_bc) psi``."""
    a, b, c = (w.axis(p) for p in particles)
    _check_position(w, (a, b, c))
    g = w.grid
    n = g.n_points
    mom = centered_dft(_front(w.amplitudes, (a, b, c)), axis=0) * math.sqrt(g.spacing / n)
    d = _gather_diagonals(np.moveaxis(mom, 0, 2), n)  # (iQ, j, kp, ...)
    coef = centered_dft(d, axis=1) * (g.spacing / math.sqrt(n))  # (iQ, kP, kp, ...)
    return np.moveaxis(coef, 2, 0).swapaxes(1, 2)


def pi123_synthesis(coef: np.ndarray, grid: Grid) -> np.ndarray:
    n = grid.n_points
    pair = bell_synthesis(np.moveaxis(coef, 0, 2), grid)  # (j2, j3, kp, ...)
    first = centered_idft(np.moveaxis(pair, 2, 0), axis=0) * (n / math.sqrt(n * grid.spacing))
    return first


def _check_position(w: WaveFunction, axes) -> None:
    if any(w.domains[i] != "x" for i in axes):
        raise GridError("measured particles must be in the position basis")


# --- joint measurement ----------------------------------------------------------


def _decode(basis: str, grid: Grid, idx: tuple) -> object:
    if basis == "pi123":
        kp, kP, iQ = idx
        return TripleLabel(grid.momenta[kp], grid.momenta[kP], grid.positions[iQ])
    if basis == "triple":
        mP, iQ, iR = idx
        return GHZLabel(grid.momenta[mP] * TRIPLE_P_FACTOR, grid.positions[iQ], grid.positions[iR])
    if basis == "bell":
        kP, iQ = idx
        return BellLabel(grid.momenta[kP], grid.positions[iQ])
    raise GridError(f"unknown basis {basis!r}")


def joint_measure(state: WaveFunction, basis: str, particles: Sequence[Hashable], seed: int):
    """Sample a three-particle joint measurement on a dense state (general path).

    Returns the outcome and the normalized conditional state of the remaining
    particles. Memory grows as ``N^arity``, so arity-5 input is limited to
    ``n_points <= 32``.
    """
    if basis not in BASES:
        raise GridError(f"basis must be one of {BASES}")
    if len(particles) != 3 or state.arity != 5:
        raise GridError("joint_measure expects a 5-particle state and three measured labels")
    if state.grid.n_points > DENSE_MAX_POINTS:
        raise GridError(f"dense arity-5 path limited to n_points <= {DENSE_MAX_POINTS}")
    coef = (pi123_coefficients if basis == "pi123" else triple_coefficients)(state, particles)
    rest = [lab for lab in state.labels if lab not in particles]
    cell = state.grid.spacing ** len(rest)
    mass = np.sum(np.abs(coef) ** 2, axis=(3, 4)) * cell
    rng = np.random.default_rng(seed)
    flat = rng.choice(mass.size, p=(mass / mass.sum()).ravel())
    idx = np.unravel_index(flat, mass.shape)
    cond = WaveFunction(state.grid, coef[idx], tuple(rest)).normalized()
    return MeasurementOutcome(_decode(basis, state.grid, idx), float(mass[idx]), seed), cond


def born_distribution(state: WaveFunction, basis: str, particles: Sequence[Hashable]) -> np.ndarray:
    coef = (pi123_coefficients if basis == "pi123" else triple_coefficients)(state, particles)
    extra = tuple(range(3, coef.ndim))
    return np.sum(np.abs(coef) ** 2, axis=extra) * state.grid.spacing ** len(extra)


@dataclass
class ProductMeasurement:
    """Joint measurement on ``input (x) resource`` without forming the product.

    ``input_state`` is a one-particle state (``basis="bell"``: measure the input
    with the first resource particle) or a pair supported on one relative-
    position diagonal (``"pi123"``/``"triple"``: measure both input particles and
    the first resource particle). The conditional state of the remaining
    resource particles is a centered DFT over a single lattice index, so each
    shift outcome costs one FFT of the resource tensor.
    """

    input_state: WaveFunction
    resource: WaveFunction
    basis: str = "pi123"
    cache_size: int = 4
    _cache: OrderedDict = field(default_factory=OrderedDict, init=False, repr=False)

    def __post_init__(self):
        g = self.resource.grid
        if self.input_state.grid != g:
            raise GridError("input and resource on different grids")
        if any(d != "x" for d in self.input_state.domains + self.resource.domains):
            raise GridError("product measurement needs position-basis states")
        n = g.n_points
        if self.basis == "bell":
            if self.input_state.arity != 1:
                raise GridError("bell measurement expects a one-particle input")
            self.profile = np.asarray(self.input_state.amplitudes)
            self.base_shift = 0
            self.prefactor = g.spacing / math.sqrt(n)
            self.degeneracy = 1
        elif self.basis in BASES:
            self.profile, self.q_sites = diagonal_profile(self.input_state)
            self.base_shift = self.q_sites if self.basis == "pi123" else 0
            self.prefactor = g.spacing / (n if self.basis == "pi123" else math.sqrt(n))
            self.degeneracy = n if self.basis == "pi123" else 1
        else:
            raise GridError(f"unknown basis {self.basis!r}")
        self.grid = g
        self.rest_labels = self.resource.labels[1:]
        self.rest_cell = g.spacing ** len(self.rest_labels)
        weight = np.sum(np.abs(self.resource.amplitudes) ** 2, axis=tuple(range(1, self.resource.arity)))
        j = np.arange(n)
        shifts = np.arange(n) - n // 2
        idx = (j[None, :] - self.base_shift - shifts[:, None]) % n
        self._shift_mass = (
            self.degeneracy * self.prefactor**2 * n * self.rest_cell
            * np.sum(np.abs(self.profile[None, :]) ** 2 * weight[idx], axis=1)
        )

    @property
    def shift_marginal(self) -> np.ndarray:
        """Probability of each relative-position outcome (Q, or R for ``triple``)."""
        return self._shift_mass

    def block(self, shift_index: int) -> np.ndarray:
        """Unnormalized conditional amplitudes ``[k, rest...]`` for one shift outcome."""
        if shift_index in self._cache:
            self._cache.move_to_end(shift_index)
            return self._cache[shift_index]
        n = self.grid.n_points
        off = self.base_shift + shift_index - n // 2
        shape = (n,) + (1,) * (self.resource.arity - 1)
        tmp = np.roll(self.resource.amplitudes, off, axis=0) * self.profile.reshape(shape)
        out = centered_dft(tmp, axis=0) * self.prefactor
        self._cache[shift_index] = out
        while len(self._cache) > self.cache_size:
            self._cache.popitem(last=False)
        return out

    def fourier_masses(self, shift_index: int) -> np.ndarray:
        b = self.block(shift_index)
        return self.degeneracy * np.sum(np.abs(b) ** 2, axis=tuple(range(1, b.ndim))) * self.rest_cell

    def _label(self, shift_index: int, k: int, p_index: int | None):
        g = self.grid
        n = g.n_points
        if self.basis == "bell":
            return BellLabel(g.momenta[k], g.positions[shift_index])
        if self.basis == "triple":
            return GHZLabel(g.momenta[k] * TRIPLE_P_FACTOR, self.q_sites * g.spacing, g.positions[shift_index])
        big_p = (k - p_index + n // 2) % n
        return TripleLabel(g.momenta[p_index], g.momenta[big_p], g.positions[shift_index])

    def _indices(self, label) -> tuple[int, int] | None:
        """(shift_index, fourier_index) for a label; None if the label has zero weight by support."""
        g = self.grid
        n = g.n_points
        if isinstance(label, BellLabel):
            return g.position_index(label.Q), g.momentum_index(label.P)
        if isinstance(label, GHZLabel):
            if g.position_index(label.Q) != (self.q_sites + n // 2) % n:
                return None
            return g.position_index(label.R), g.momentum_index(label.P, triple_momentum_spacing(g))
        kp = g.momentum_index(label.p)
        kP = g.momentum_index(label.P)
        return g.position_index(label.Q), (kp + kP - n // 2) % n

    def conditional(self, label) -> tuple[np.ndarray, float]:
        """Unnormalized conditional amplitudes and Born mass of one outcome."""
        idx = self._indices(label)
        shape = (self.grid.n_points,) * len(self.rest_labels)
        if idx is None:
            return np.zeros(shape, dtype=complex), 0.0
        amps = self.block(idx[0])[idx[1]]
        if self.basis == "pi123":
            big_p = label.P
            amps = amps * np.exp(2j * big_p * self.q_sites * self.grid.spacing)
        return amps, float(np.sum(np.abs(amps) ** 2) * self.rest_cell)

    def sample(self, seed: int) -> tuple[MeasurementOutcome, WaveFunction]:
        rng = np.random.default_rng(seed)
        marg = self.shift_marginal
        i = int(rng.choice(marg.size, p=marg / marg.sum()))
        masses = self.fourier_masses(i)
        k = int(rng.choice(masses.size, p=masses / masses.sum()))
        p_index = int(rng.integers(self.grid.n_points)) if self.basis == "pi123" else None
        label = self._label(i, k, p_index)
        amps, mass = self.conditional(label)
        cond = WaveFunction(self.grid, amps, self.rest_labels).normalized()
        return MeasurementOutcome(label, mass, seed), cond


# --- basis checks -----------------------------------------------------------------


@dataclass
class BasisCheck:
    family: str
    gram_deviation: float
    completeness_deviation: float
    n_labels_checked: int

    @property
    def max_deviation(self) -> float:
        return max(self.gram_deviation, self.completeness_deviation)


def _random_state(grid: Grid, arity: int, rng) -> WaveFunction:
    shape = (grid.n_points,) * arity
    amps = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return WaveFunction.from_amplitudes(grid, amps, tuple(range(1, arity + 1)))


def _random_labels(family: str, grid: Grid, count: int, rng) -> list:
    n = grid.n_points
    seen = set()
    labels = []
    while len(labels) < min(count, n ** (2 if family == "bell" else 3)):
        idx = tuple(int(v) for v in rng.integers(n, size=2 if family == "bell" else 3))
        if idx in seen:
            continue
        seen.add(idx)
        labels.append(_decode(family, grid, idx))
    return labels


def _state_for(family: str, label, grid: Grid) -> WaveFunction:
    if family == "bell":
        return bell_state(label, grid)
    if family == "triple":
        return triple_basis_state(label, grid)
    return pi123_state(label, grid)


def check_basis(family: str, grid: Grid, n_labels: int = 16, n_states: int = 2, seed: int = 0) -> BasisCheck:
    """Gram deviation over random labels and completeness deviation on random states.

    Gram entries come from explicitly built basis vectors; completeness uses the
    fast analysis/synthesis pair (``sum_b |b><b|psi> == psi``).
    """
    from .grid import inner_product

    rng = np.random.default_rng(seed)
    labels = _random_labels(family, grid, n_labels, rng)
    states = [_state_for(family, lab, grid) for lab in labels]
    gram = np.array([[inner_product(a, b) for b in states] for a in states])
    gram_dev = float(np.max(np.abs(gram - np.eye(len(states)))))
    analysis = {"bell": bell_coefficients, "triple": triple_coefficients, "pi123": pi123_coefficients}[family]
    synthesis = {"bell": bell_synthesis, "triple": triple_synthesis, "pi123": pi123_synthesis}[family]
    arity = 2 if family == "bell" else 3
    comp_dev = 0.0
    for _ in range(n_states):
        psi = _random_state(grid, arity, rng)
        coef = analysis(psi, psi.labels)
        back = synthesis(coef, grid)
        scale = np.max(np.abs(psi.amplitudes))
        comp_dev = max(comp_dev, float(np.max(np.abs(back - psi.amplitudes)) / scale))
        comp_dev = max(comp_dev, abs(float(np.sum(np.abs(coef) ** 2)) - 1.0))
    return BasisCheck(family, gram_dev, comp_dev, len(labels))


# --- the maximally entangled triple basis does not give a teleportation map ------------


@dataclass
class OutcomeDefect:
    basis: str
    label: object
    density: float
    test_norms: list
    isometry_defect: float


@dataclass
class FailureReport:
    """Norms of the induced receiver maps on a shared test set.

    The induced map for an outcome ``o`` sends a test pair ``A'`` (same
    diagonal form as the input) to ``<o|_123 (A' (x) GHZ)``, scaled so that the
    reference input maps to a unit vector. A teleportation map must preserve
    the norm of every test pair.
    """

    q: float
    test_offsets: list
    outcomes: list
    operator_defects: dict

    @property
    def max_defect_triple(self) -> float:
        return max((o.isometry_defect for o in self.outcomes if o.basis == "triple"), default=0.0)

    @property
    def max_defect_pi123(self) -> float:
        return max((o.isometry_defect for o in self.outcomes if o.basis == "pi123"), default=0.0)

    def as_dict(self) -> dict:
        return {
            "q": self.q,
            "test_offsets": list(self.test_offsets),
            "max_defect_triple": self.max_defect_triple,
            "max_defect_pi123": self.max_defect_pi123,
            "operator_defects": dict(self.operator_defects),
            "outcomes": [
                {"basis": o.basis, **{k: float(v) for k, v in vars(o.label).items()},
                 "density": o.density, "isometry_defect": o.isometry_defect}
                for o in self.outcomes
            ],
        }


def _diagonal_pair(grid: Grid, profile: np.ndarray, sites: int, labels=(1, 2)) -> WaveFunction:
    n = grid.n_points
    j = np.arange(n)
    amps = np.zeros((n, n), dtype=complex)
    amps[j, (j - sites) % n] = profile / math.sqrt(grid.spacing)
    return WaveFunction.from_amplitudes(grid, amps, labels)


def _operator_isometry_defects(grid: Grid, q_sites: int, rng, n_states: int = 8) -> dict:
    """Lattice versions of the two would-be corrections of the triple basis.

    ``exp(3iPx)`` followed by a shift is unitary; the shift weighted by the
    Kronecker factor ``delta(Q - q)`` annihilates every state once ``Q != q``.
    """
    n = grid.n_points
    states = rng.normal(size=(n_states, n)) + 1j * rng.normal(size=(n_states, n))
    states /= np.linalg.norm(states, axis=1, keepdims=True)
    P = grid.momenta[n // 2 + 1] * TRIPLE_P_FACTOR
    phase = np.exp(3j * P * grid.positions)
    u_b = np.roll(states * phase, 1, axis=1)
    u_c_match = np.roll(states, 1, axis=1)
    u_c_mismatch = np.zeros_like(states)  # delta(Q - q) = 0 for Q = q + spacing
    defect = lambda out: float(np.max(np.abs(np.linalg.norm(out, axis=1) - 1)))
    return {"U_B_phase_shift": defect(u_b), "U_C_Q_equals_q": defect(u_c_match),
            "U_C_Q_not_q": defect(u_c_mismatch)}


def demonstrate_triple_basis_failure(input_state: WaveFunction, ghz_state: WaveFunction, n_outcomes: int = 4,
                                     n_tests: int = 8, seed: int = 0) -> FailureReport:
    """Compare induced receiver maps of the triple basis and the pi123 basis.

    ``input_state`` is the diagonal pair being teleported and ``ghz_state`` the
    shared triplet; the product state is never formed. Test pairs carry random
    profiles and relative offsets drawn around the input's offset, so the set
    always contains pairs with ``Q != q``.
    """
    grid = input_state.grid
    _, q_sites = diagonal_profile(input_state)
    rng = np.random.default_rng(seed)
    n = grid.n_points
    offsets = [q_sites] + [int(q_sites + rng.integers(1, 4) * rng.choice((-1, 1))) for _ in range(n_tests - 1)]
    tests = []
    for s in offsets:
        prof = rng.normal(size=n) + 1j * rng.normal(size=n)
        prof /= math.sqrt(np.sum(np.abs(prof) ** 2) * grid.spacing)
        tests.append(_diagonal_pair(grid, prof, s, input_state.labels))
    outcomes = []
    for basis in ("triple", "pi123"):
        ref = ProductMeasurement(input_state, ghz_state, basis=basis)
        probes = [ProductMeasurement(t, ghz_state, basis=basis) for t in tests]
        for k in range(n_outcomes):
            out, _ = ref.sample(seed + k)
            norms = [math.sqrt(pm.conditional(out.label)[1] / out.density) for pm in probes]
            outcomes.append(OutcomeDefect(basis, out.label, out.density, norms,
                                          float(max(abs(v - 1) for v in norms))))
    return FailureReport(
        q=q_sites * grid.spacing,
        test_offsets=[s * grid.spacing for s in offsets],
        outcomes=outcomes,
        operator_defects=_operator_isometry_defects(grid, q_sites, rng),
    )
