import math

import numpy as np
import pytest

from ghzteleport.bases import (
    BellLabel,
    GHZLabel,
    ProductMeasurement,
    TripleLabel,
    bell_state,
    born_distribution,
    check_basis,
    demonstrate_triple_basis_failure,
    joint_measure,
    lattice_values,
    pi123_state,
    triple_basis_state,
)
from ghzteleport.grid import GridError, WaveFunction, inner_product, make_grid, tensor, to_momentum
from ghzteleport.metrics import schmidt_entropy
from ghzteleport.resources import IDEAL, InputSpec, ResourceQuality, make_ghz_wavefunction, make_input_state


def _random(grid, arity, seed):
    rng = np.random.default_rng(seed)
    shape = (grid.n_points,) * arity
    return WaveFunction.from_amplitudes(grid, rng.normal(size=shape) + 1j * rng.normal(size=shape),
                                        tuple(range(1, arity + 1)))


def test_bell_origin_is_uniform_diagonal(grid16):
    b = bell_state(BellLabel(0.0, 0.0), grid16)
    expected = np.eye(16) / (grid16.spacing * 4)
    np.testing.assert_allclose(b.amplitudes, expected, atol=1e-15)


def test_bell_eigenvalues(grid16):
    dx, dp = grid16.spacing, grid16.momentum_spacing
    b = bell_state(BellLabel(3 * dp, 2 * dx), grid16)
    rows, cols = np.nonzero(b.amplitudes)
    assert set((rows - cols) % 16) == {2}
    # total momentum: both particles to momentum space, support on p1 + p2 = P (mod period)
    m = to_momentum(to_momentum(b, 1), 2)
    k1, k2 = np.nonzero(np.abs(m.amplitudes) > 1e-9)
    tot = grid16.wrap_momentum(grid16.momenta[k1] + grid16.momenta[k2])
    np.testing.assert_allclose(tot, 3 * dp, atol=1e-12)


@pytest.mark.parametrize("family", ["bell", "triple", "pi123"])
def test_gram_and_completeness(family):
    chk = check_basis(family, make_grid(32, 8.0), n_labels=16)
    assert chk.gram_deviation < 1e-10
    assert chk.completeness_deviation < 1e-9


@pytest.mark.parametrize("family", ["bell", "triple", "pi123"])
def test_explicit_projector_sum(family):
    # independent of the fast transforms: build every basis vector on an 8-point lattice
    g = make_grid(8, 4.0)
    arity = 2 if family == "bell" else 3
    if family == "bell":
        labels = [BellLabel(P, Q) for P in lattice_values(g, "p") for Q in lattice_values(g, "x")]
        build = bell_state
    elif family == "triple":
        labels = [GHZLabel(P, Q, R) for P in lattice_values(g, "p3") for Q in g.positions for R in g.positions]
        build = triple_basis_state
    else:
        labels = [TripleLabel(p, P, Q) for p in g.momenta for P in g.momenta for Q in g.positions]
        build = pi123_state
    vecs = np.array([build(lab, g).amplitudes.ravel() for lab in labels]) * math.sqrt(g.spacing**arity)
    assert vecs.shape[0] == 8**arity
    np.testing.assert_allclose(vecs.conj() @ vecs.T, np.eye(8**arity), atol=1e-12)
    psi = _random(g, arity, 3).amplitudes.ravel()
    np.testing.assert_allclose(vecs.T @ (vecs.conj() @ psi), psi, atol=1e-12)


def test_off_lattice_labels(grid16):
    with pytest.raises(GridError):
        bell_state(BellLabel(0.1234, 0.0), grid16)
    with pytest.raises(GridError):
        triple_basis_state(GHZLabel(0.0, 0.1, 0.0), grid16)


def test_triple_origin_is_ghz(grid16):
    t = triple_basis_state(GHZLabel(0.0, 0.0, 0.0), grid16)
    ghz = make_ghz_wavefunction(IDEAL, grid16, (1, 2, 3))
    np.testing.assert_allclose(t.amplitudes, ghz.amplitudes, atol=1e-15)


def test_triple_overlap_with_products(grid16):
    dx = grid16.spacing
    from ghzteleport.grid import delta_state

    a, b = 1.0, -0.5
    prod = tensor(delta_state(grid16, a, 1), delta_state(grid16, a, 2), delta_state(grid16, b, 3))
    hit = triple_basis_state(GHZLabel(0.0, 0.0, a - b), grid16)
    miss = triple_basis_state(GHZLabel(0.0, 0.0, a - b + dx), grid16)
    assert abs(inner_product(hit, prod)) > 0.1
    assert inner_product(miss, prod) == 0


def test_pi123_structure(grid16):
    dp, dx = grid16.momentum_spacing, grid16.spacing
    s = pi123_state(TripleLabel(2 * dp, -dp, 3 * dx), grid16)
    m = to_momentum(s, 1)
    marg = np.sum(np.abs(m.amplitudes) ** 2, axis=(1, 2))
    assert np.count_nonzero(marg > 1e-12) == 1
    assert np.argmax(marg) == grid16.momentum_index(2 * dp)
    assert schmidt_entropy(s, cut=(1,)) == pytest.approx(0.0, abs=1e-10)
    assert schmidt_entropy(s, cut=(1, 2)) == pytest.approx(math.log(16), abs=1e-10)


def test_joint_measure_born_weights(grid16):
    g = make_grid(16, 8.0)
    state = tensor(make_input_state(InputSpec(width=1.0), g), make_ghz_wavefunction(IDEAL, g))
    born = born_distribution(state, "pi123", (1, 2, 3))
    assert born.sum() == pytest.approx(1.0, abs=1e-9)
    out1, cond1 = joint_measure(state, "pi123", (1, 2, 3), seed=7)
    out2, cond2 = joint_measure(state, "pi123", (1, 2, 3), seed=7)
    assert out1 == out2
    assert cond1.norm_squared() == pytest.approx(1.0, abs=1e-12)
    assert cond1.labels == (4, 5)


def test_joint_measure_limits():
    g = make_grid(64, 16.0)
    with pytest.raises(GridError):
        joint_measure(_random(make_grid(8, 4.0), 3, 0), "pi123", (1, 2, 3), 0)
    with pytest.raises(GridError):
        joint_measure(_random(make_grid(8, 4.0), 3, 0), "bell", (1, 2, 3), 0)


@pytest.mark.parametrize("basis", ["pi123", "triple"])
def test_fast_measurement_matches_dense(basis):
    g = make_grid(16, 8.0)
    inp = make_input_state(InputSpec(width=1.0, q=g.spacing), g)
    ghz = make_ghz_wavefunction(ResourceQuality.finite(0.5), g)
    dense = tensor(inp, ghz)
    born = born_distribution(dense, basis, (1, 2, 3))
    pm = ProductMeasurement(inp, ghz, basis=basis)
    rng = np.random.default_rng(0)
    for _ in range(6):
        idx = tuple(int(v) for v in rng.integers(16, size=3))
        if basis == "pi123":
            lab = TripleLabel(g.momenta[idx[0]], g.momenta[idx[1]], g.positions[idx[2]])
        else:
            lab = GHZLabel(g.momenta[idx[0]] * 2 / 3, g.positions[idx[1]], g.positions[idx[2]])
        amps, mass = pm.conditional(lab)
        assert mass == pytest.approx(born[idx], abs=1e-12)
    assert pm.shift_marginal.sum() == pytest.approx(1.0, abs=1e-12)
    # sampled conditional equals the dense conditional for the same label
    out, cond = pm.sample(5)
    from ghzteleport.bases import pi123_coefficients, triple_coefficients

    coef = (pi123_coefficients if basis == "pi123" else triple_coefficients)(dense, (1, 2, 3))
    if basis == "pi123":
        key = (g.momentum_index(out.label.p), g.momentum_index(out.label.P), g.position_index(out.label.Q))
    else:
        key = (g.momentum_index(out.label.P, g.momentum_spacing * 2 / 3), g.position_index(out.label.Q),
               g.position_index(out.label.R))
    ref = WaveFunction(g, coef[key], (4, 5)).normalized()
    assert abs(inner_product(ref, cond)) ** 2 == pytest.approx(1.0, abs=1e-10)


def test_born_frequencies_match_densities():
    g = make_grid(16, 8.0)
    inp = make_input_state(InputSpec(width=1.0), g)
    pm = ProductMeasurement(inp, make_ghz_wavefunction(ResourceQuality.finite(0.5), g), basis="pi123")
    n = 10_000
    counts = np.zeros(16)
    for s in range(n):
        out, _ = pm.sample(s)
        counts[g.position_index(out.label.Q)] += 1
    p = pm.shift_marginal
    se = np.sqrt(p * (1 - p) / n)
    freq = counts / n
    mask = p > 1e-3
    assert np.all(np.abs(freq[mask] - p[mask]) < 3 * se[mask])


def test_triple_failure_demonstration():
    g = make_grid(64, 16.0)
    rep = demonstrate_triple_basis_failure(make_input_state(InputSpec(width=1.0), g), make_ghz_wavefunction(IDEAL, g))
    assert rep.max_defect_triple > 0.1
    assert rep.max_defect_pi123 < 1e-9
    assert any(abs(q - rep.q) > 0 for q in rep.test_offsets)
    assert rep.operator_defects["U_B_phase_shift"] < 1e-12
    assert rep.operator_defects["U_C_Q_not_q"] == pytest.approx(1.0)


def test_triple_outcome_with_wrong_q_has_no_weight():
    g = make_grid(64, 16.0)
    pm = ProductMeasurement(make_input_state(InputSpec(width=1.0), g), make_ghz_wavefunction(IDEAL, g), "triple")
    amps, mass = pm.conditional(GHZLabel(0.0, 2 * g.spacing, 0.0))
    assert mass == 0.0 and np.all(amps == 0)
