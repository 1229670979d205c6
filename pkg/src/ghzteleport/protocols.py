"""One-particle teleportation and teleportation of the entangled pair through a GHZ triplet.

Sign bookkeeping. Projecting onto ``|Psi(P,Q)>`` as written (phase
``exp(2iPx)``, second particle at ``x - Q``) leaves the receiver in
``U_B(-P,-Q)|A>``. The protocols therefore undo ``U_B(-P,-Q)``, and
likewise ``U_C(-p,.,-Q,q)`` for the second receiver of the entangled
protocol.

Receiver roles. An ideal GHZ forces ``x4 = x5`` before correction. By default
receiver 4 carries the role of input particle 2 (corrections ``U_B``) and
receiver 5 carries particle 1 (corrections ``U_C`` followed by a shift by
``q``). The q-shift restores the relative position that the GHZ erased.
``swap_receivers=True`` exchanges the roles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable

import numpy as np

from . import gaussian as gc
from .bases import BellLabel, MeasurementOutcome, ProductMeasurement, TripleLabel
from .grid import Grid, GridError, WaveFunction, apply_operator, compose, phase, shift
from .metrics import fidelity, quadrature_mean, quadrature_variance, schmidt_entropy
from .resources import (
    InputSpec,
    ResourceQuality,
    input_profile_state,
    make_epr_wavefunction,
    make_ghz_wavefunction,
    make_input_state,
)

CORRECTION_KINDS = ("U_B", "U_C", "shift", "displacement")


class ProtocolError(ValueError):
    pass


def _require_lattice(grid: Grid, P: float | None = None, Q: float | None = None) -> None:
    if P is not None and not grid.on_momentum_lattice(P):
        raise GridError(f"P={P} is not on the momentum lattice")
    if Q is not None and not grid.on_position_lattice(Q):
        raise GridError(f"Q={Q} is not on the position lattice")


def apply_U_B(w: WaveFunction, P: float, Q: float, particle: Hashable, adjoint: bool = False) -> WaveFunction:
    """``U_B(P,Q) = int dx exp(2iPx) |x><x-Q|``: shift by Q, then phase ``exp(2iPx)``."""
    _require_lattice(w.grid, P, Q)
    op = compose(phase(particle, P), shift(particle, Q))
    return apply_operator(w, op.adjoint() if adjoint else op)


def apply_U_C(w: WaveFunction, p: float, P: float, Q: float, q: float, particle: Hashable, adjoint: bool = False) -> WaveFunction:
    """``U_C = sqrt(pi) int dx <x+q|p> |x><x-Q|`` with ``|p>`` a momentum eigenstate.

    Equals ``exp(2ipq) exp(2ipx) S_Q``; ``q`` only enters as a global phase.
    ``P`` is accepted for signature symmetry with the outcome triple.
    """
    _require_lattice(w.grid, p, Q)
    op = compose(phase(particle, p), shift(particle, Q))
    glob = np.exp(2j * p * q)
    if adjoint:
        return apply_operator(w, op.adjoint()) * np.conj(glob)
    return apply_operator(w, op) * glob


@dataclass(frozen=True)
class CorrectionOp:
    kind: str
    particle: Hashable
    params: dict
    adjoint: bool = False

    def apply(self, w: WaveFunction) -> WaveFunction:
        k = self.params
        if self.kind == "U_B":
            return apply_U_B(w, k["P"], k["Q"], self.particle, self.adjoint)
        if self.kind == "U_C":
            return apply_U_C(w, k["p"], k["P"], k["Q"], k["q"], self.particle, self.adjoint)
        if self.kind == "shift":
            return apply_operator(w, shift(self.particle, -k["Q"] if self.adjoint else k["Q"]))
        raise ProtocolError(f"cannot apply correction of kind {self.kind!r} on the grid")

    def as_dict(self) -> dict:
        return {"kind": self.kind, "particle": self.particle, "adjoint": self.adjoint,
                "params": {k: float(v) for k, v in self.params.items()}}


@dataclass
class TeleportRecord:
    protocol: str
    resource_quality: ResourceQuality
    outcome: MeasurementOutcome
    classical_message: tuple
    corrections: list
    fidelity: float
    seed: int
    basis: str = "bell"
    variances: dict = field(default_factory=dict)
    output: WaveFunction | None = field(default=None, repr=False)
    reference: WaveFunction | None = field(default=None, repr=False)

    def as_dict(self) -> dict:
        p, P, Q = self.classical_message
        return {
            "protocol": self.protocol,
            "seed": int(self.seed),
            "basis": self.basis,
            "resource": {"mode": self.resource_quality.mode, "r": float(self.resource_quality.r)},
            "outcome": {"p": None if p is None else float(p), "P": float(P), "Q": float(Q),
                        "density": float(self.outcome.density)},
            "corrections": [c.as_dict() for c in self.corrections],
            "fidelity": float(self.fidelity),
            "variances": {k: float(v) for k, v in self.variances.items()},
        }


# --- one-particle protocol ----------------------------------------------------------


class SingleTeleporter:
    """Input (particle 1) and EPR pair (2, 3); Bell measurement on (1, 2)."""

    def __init__(self, input_state: WaveFunction, quality: ResourceQuality, grid: Grid):
        if input_state.arity != 1:
            raise ProtocolError("single-particle protocol needs an arity-1 input")
        if input_state.grid != grid:
            raise ProtocolError("input lives on a different grid")
        self.grid = grid
        self.quality = quality
        self.input = input_state.relabel((1,)).normalized()
        self.epr = make_epr_wavefunction(quality, grid, (2, 3))
        self.measurement = ProductMeasurement(self.input, self.epr, basis="bell")

    def corrections(self, label: BellLabel) -> list:
        return [CorrectionOp("U_B", 3, {"P": -label.P, "Q": -label.Q}, adjoint=True)]

    def average_fidelity(self) -> float:
        """Born-weighted mean fidelity over every lattice outcome (no sampling)."""
        g = self.grid
        n = g.n_points
        a = self.input.amplitudes / math.sqrt(self.input.norm_squared())
        phases = np.exp(2j * np.outer(g.momenta, g.positions))
        total = 0.0
        for i in range(n):
            s = int(round(g.positions[i] / g.spacing))
            block = self.measurement.block(i)
            # <A| S_Q M_P c> = <S_{-Q} A| M_P c>
            ov = (block * phases) @ np.conj(np.roll(a, -s)) * g.spacing
            total += float(np.sum(np.abs(ov) ** 2))
        return total

    def run(self, seed: int) -> TeleportRecord:
        outcome, state = self.measurement.sample(seed)
        corr = self.corrections(outcome.label)
        for c in corr:
            state = c.apply(state)
        ref = self.input.relabel((3,))
        return TeleportRecord(
            protocol="single",
            resource_quality=self.quality,
            outcome=outcome,
            classical_message=(None, outcome.label.P, outcome.label.Q),
            corrections=corr,
            fidelity=fidelity(ref, state).value,
            seed=seed,
            basis="bell",
            output=state,
            reference=ref,
        )


def teleport_single(input_state: WaveFunction, quality: ResourceQuality, grid: Grid, seed: int) -> TeleportRecord:
    return SingleTeleporter(input_state, quality, grid).run(seed)


# --- entangled-pair protocol --------------------------------------------------------


class EntangledTeleporter:
    """Input pair (1, 2), GHZ triplet (3, 4, 5); joint measurement on (1, 2, 3)."""

    def __init__(self, spec: InputSpec, quality: ResourceQuality, grid: Grid, basis: str = "pi123",
                 swap_receivers: bool = False):
        if basis != "pi123":
            raise ProtocolError("corrections are defined for the pi123 basis only; "
                                "use demonstrate_triple_basis_failure for the triple basis")
        self.grid = grid
        self.spec = spec
        self.quality = quality
        self.basis = basis
        self.swap_receivers = swap_receivers
        self.input = make_input_state(spec, grid, (1, 2))
        self.ghz = make_ghz_wavefunction(quality, grid, (3, 4, 5))
        self.q = grid.shift_sites(spec.q)[0] * grid.spacing
        self.measurement = ProductMeasurement(self.input, self.ghz, basis=basis)
        # receiver carrying input particle 1 / particle 2
        self.carrier1, self.carrier2 = (4, 5) if swap_receivers else (5, 4)
        self.reference = self.input.relabel((self.carrier1, self.carrier2)).permute((4, 5))

    def corrections(self, label) -> list:
        c1, c2 = self.carrier1, self.carrier2
        if isinstance(label, TripleLabel):
            return [
                CorrectionOp("U_B", c2, {"P": -label.P, "Q": -label.Q}, adjoint=True),
                CorrectionOp("U_C", c1, {"p": -label.p, "P": -label.P, "Q": -label.Q, "q": self.q}, adjoint=True),
                CorrectionOp("shift", c1, {"Q": self.q}),
            ]
        raise ProtocolError(f"unexpected outcome label {label!r}")

    def run(self, seed: int) -> TeleportRecord:
        outcome, state = self.measurement.sample(seed)
        corr = self.corrections(outcome.label)
        for c in corr:
            state = c.apply(state)
        lab = outcome.label
        message = (lab.p, lab.P, lab.Q)
        rec = TeleportRecord(
            protocol="entangled",
            resource_quality=self.quality,
            outcome=outcome,
            classical_message=message,
            corrections=corr,
            fidelity=fidelity(self.reference, state).value,
            seed=seed,
            basis=self.basis,
            output=state,
            reference=self.reference,
        )
        rec.variances = output_statistics(rec)
        return rec


def teleport_entangled(spec: InputSpec, quality: ResourceQuality, grid: Grid, seed: int, basis: str = "pi123",
                       swap_receivers: bool = False) -> TeleportRecord:
    if not quality.ideal and grid.n_points > 256:
        raise ProtocolError("finite-quality GHZ limited to n_points <= 256 (N^3 tensor)")
    return EntangledTeleporter(spec, quality, grid, basis, swap_receivers).run(seed)


def _pair_forms():
    q = gc.Quadratures((4, 5))
    return q.x(4) - q.x(5), q.p(4) + q.p(5)


def output_statistics(record: TeleportRecord) -> dict:
    """Relative-position and total-momentum moments of output and reference."""
    if record.protocol != "entangled" or record.output is None:
        raise ProtocolError("output statistics need an entangled-protocol record with its output state")
    rel, tot = _pair_forms()
    out, ref = record.output, record.reference
    return {
        "var_x4_minus_x5": quadrature_variance(out, rel, periodic=True),
        "mean_x4_minus_x5": quadrature_mean(out, rel, periodic=True),
        "var_p4_plus_p5": quadrature_variance(out, tot, periodic=True),
        "mean_p4_plus_p5": quadrature_mean(out, tot, periodic=True),
        "input_var_x1_minus_x2": quadrature_variance(ref, rel, periodic=True),
        "input_var_p1_plus_p2": quadrature_variance(ref, tot, periodic=True),
        "input_mean_p1_plus_p2": quadrature_mean(ref, tot, periodic=True),
    }


@dataclass
class CorrelationReport:
    var_x4_minus_x5: float
    mean_x4_minus_x5: float
    predicted_var_x4_minus_x5: float
    total_momentum_mismatch: float
    output_entropy: float
    input_entropy: float
    identity_x4: bool
    identity_x5: bool
    identity_total_momentum: bool


def verify_output_correlations(record: TeleportRecord) -> CorrelationReport:
    """Compare the corrected output's pair correlations with the input and with the Heisenberg picture."""
    stats = output_statistics(record)
    heis = heisenberg_entangled(record.resource_quality.r if not record.resource_quality.ideal else math.inf)
    mismatch = max(abs(stats["var_p4_plus_p5"] - stats["input_var_p1_plus_p2"]),
                   abs(stats["mean_p4_plus_p5"] - stats["input_mean_p1_plus_p2"]))
    return CorrelationReport(
        var_x4_minus_x5=stats["var_x4_minus_x5"],
        mean_x4_minus_x5=stats["mean_x4_minus_x5"],
        predicted_var_x4_minus_x5=heis.var_relative_position,
        total_momentum_mismatch=mismatch,
        output_entropy=schmidt_entropy(record.output),
        input_entropy=schmidt_entropy(record.reference),
        identity_x4=heis.identity_x4,
        identity_x5=heis.identity_x5,
        identity_total_momentum=heis.identity_total_momentum,
    )


# --- Heisenberg picture of the entangled protocol --------------------------------------


@dataclass
class HeisenbergPrediction:
    r: float
    corrected: dict
    var_relative_position: float
    var_total_momentum_noise: float
    identity_x4: bool
    identity_x5: bool
    identity_total_momentum: bool


def heisenberg_entangled(r: float, q: float = 0.0) -> HeisenbergPrediction:
    """Corrected receiver operators as linear forms over modes 1..5.

    The corrections add the measured values, which are themselves the forms
    ``x2 - x3`` (relative position), ``p2 + p3`` and ``p1``. Receiver 4 carries
    particle 2, receiver 5 carries particle 1 (plus the known offset q).
    """
    m = gc.Quadratures((1, 2, 3, 4, 5))
    x, p = m.x, m.p
    rel23 = x(2) - x(3)
    x4c = x(4) + rel23
    x5c = x(5) + rel23 + q
    p4c = p(4) + (p(2) + p(3))
    p5c = p(5) + p(1)
    input_rel = x(1) - x(2) - q  # zero on the input state
    checks = (
        gc.verify_identity(x4c, [x(2), x(4) - x(3)]),
        gc.verify_identity(x5c, [x(1), -input_rel, x(5) - x(3)]),
        gc.verify_identity(p4c + p5c, [p(1) + p(2), p(3) + p(4) + p(5)]),
    )
    if math.isinf(r):
        var_rel = var_p = 0.0
    else:
        ghz = gc.ghz_triplet(r, (3, 4, 5))
        q3 = ghz.forms()
        var_rel = gc.variance(ghz, q3.x(4) - q3.x(5))
        var_p = gc.variance(ghz, q3.p(3) + q3.p(4) + q3.p(5))
    return HeisenbergPrediction(
        r=r,
        corrected={"x4": x4c, "x5": x5c, "p4": p4c, "p5": p5c},
        var_relative_position=var_rel,
        var_total_momentum_noise=var_p,
        identity_x4=checks[0],
        identity_x5=checks[1],
        identity_total_momentum=checks[2],
    )


@dataclass
class GaussianProtocolResult:
    outcomes: dict
    state: gc.GaussianState
    var_x4_minus_x5: float
    var_total_momentum_excess: float
    mean_x4_minus_x5: float


def gaussian_entangled_protocol(r: float, r_input: float = 12.0, q: float = 0.0, seed: int = 0) -> GaussianProtocolResult:
    """Covariance-level run of the entangled protocol.

    The input pair (1, 2) is a strongly squeezed EPR state displaced to
    ``x1 - x2 = q``; the triplet (3, 4, 5) has squeezing ``r``. The commuting
    observables ``p1``, ``p2 + p3`` and ``x2 - x3`` are measured one after the
    other, and the receivers displace by the outcomes (receiver 4 carries
    particle 2, receiver 5 carries particle 1 and the known offset q).
    """
    labels = (1, 2, 3, 4, 5)
    pair = gc.displace(gc.epr_pair(r_input, labels=(1, 2)), 1, dx=q)
    ghz = gc.ghz_triplet(r, (3, 4, 5))
    n = 5
    mean = np.concatenate([pair.mean[:2], ghz.mean[:3], pair.mean[2:], ghz.mean[3:]])
    cov = np.zeros((2 * n, 2 * n))
    pi = [0, 1, 5, 6]
    gi = [2, 3, 4, 7, 8, 9]
    cov[np.ix_(pi, pi)] = pair.cov
    cov[np.ix_(gi, gi)] = ghz.cov
    state = gc.GaussianState(mean, cov, labels)
    m = state.forms()
    measured = {"p1": m.p(1), "p2+p3": m.p(2) + m.p(3), "x2-x3": m.x(2) - m.x(3)}
    outcomes = {}
    for k, (name, form) in enumerate(measured.items()):
        outcomes[name], state = gc.condition_on_quadrature(state, form, seed + k)
    state = gc.displace(state, 4, dx=outcomes["x2-x3"], dp=outcomes["p2+p3"])
    state = gc.displace(state, 5, dx=outcomes["x2-x3"] + q, dp=outcomes["p1"])
    rel = m.x(4) - m.x(5)
    # excess of corrected p4 + p5 over the input's p1 + p2, taken before conditioning
    prior = gc.GaussianState(mean, cov, labels)
    excess = (m.p(4) + m.p(5) + m.p(2) + m.p(3) + m.p(1)) - (m.p(1) + m.p(2))
    return GaussianProtocolResult(
        outcomes=outcomes,
        state=state,
        var_x4_minus_x5=gc.variance(state, rel),
        var_total_momentum_excess=gc.variance(prior, excess),
        mean_x4_minus_x5=gc.expectation(state, rel),
    )


def receiver_identity_report() -> dict:
    """Coefficient checks of the receivers' position and momentum identities.

    The momentum lines as commonly printed pair ``p5`` with a right-hand side
    that reduces to ``p4`` (and the reverse); both the printed and the
    relabelled lines are evaluated, together with their sum.
    """
    m = gc.Quadratures((1, 2, 3, 4, 5))
    x, p = m.x, m.p
    s2 = math.sqrt(2)
    Y = (x(2) - x(3)) / s2
    Pi = (p(2) + p(3)) / s2
    total = p(3) + p(4) + p(5)
    rhs_a = [p(2), total, p(1) - p(5), -(p(1) + s2 * Pi)]
    rhs_b = [p(1), total, p(2) - p(4), -(p(1) + s2 * Pi)]
    rhs_sum = rhs_a + rhs_b
    return {
        "x4": gc.verify_identity(x(4), [x(2), x(4) - x(3), -s2 * Y]),
        "x5": gc.verify_identity(x(5), [x(1), x(2) - x(1), x(5) - x(3), -s2 * Y]),
        "printed_p5_line": gc.verify_identity(p(5), rhs_a),
        "printed_p4_line": gc.verify_identity(p(4), rhs_b),
        "relabelled_p4_line": gc.verify_identity(p(4), rhs_a),
        "relabelled_p5_line": gc.verify_identity(p(5), rhs_b),
        "sum_p4_plus_p5": gc.verify_identity(p(4) + p(5), rhs_sum),
    }
