"""Tests for the switch channel, joint coherent information, and the
assisted-vs-probabilistic relay comparison."""

import math

import numpy as np
import pytest

from helpers_quantum import random_density_matrix
from qrelay.codeword_sets import DualPolarization, build_partition
from qrelay.density_ops import (BinaryCqChannel, DensityMatrix, apply_kraus,
                                bit_flip_channel, compose_channels,
                                dephasing_channel, identity_channel,
                                trace_out)
from qrelay.superactivation import (build_switch_channel, compare_assisted,
                                    joint_coherent_info, make_rho_ac,
                                    superactivated_bound, sweep_rows,
                                    assisted_single_use_capacity,
                                    JointInputState)

CQ_CAPACITY_ZERO_PLUS = 0.6008760366928562  # eigendecomposition oracle value

PLUS = np.array([1.0, 1.0]) / math.sqrt(2.0)


def make_partition(n, good_amp, good_phase):
    return build_partition(DualPolarization(
        n=n, good_amp=frozenset(good_amp), good_phase=frozenset(good_phase)))


def coherent_info_oracle(kraus_ops, rho):
    """Independent dilation-based computation: stack the Kraus operators
    into an isometry by hand and take entropies of the two marginals."""
    out_dim = kraus_ops[0].shape[0]
    env = len(kraus_ops)
    u = np.zeros((out_dim * env, kraus_ops[0].shape[1]), dtype=complex)
    for e, op in enumerate(kraus_ops):
        for b in range(out_dim):
            u[b * env + e, :] = op[b, :]
    joint = u @ rho @ u.conj().T
    t = joint.reshape(out_dim, env, out_dim, env)
    s_out = np.linalg.eigvalsh(np.trace(t, axis1=1, axis2=3))
    s_env = np.linalg.eigvalsh(np.trace(t, axis1=0, axis2=2))

    def ent(e):
        e = e[e > 1e-15]
        return float(-np.sum(e * np.log2(e)))

    return ent(s_out) - ent(s_env)


# ---------------------------------------------------------------------------
# Switch channel
# ---------------------------------------------------------------------------

def test_switch_channel_pure_main_branch():
    main = dephasing_channel(0.3)
    sc = build_switch_channel(1.0, main)
    rng = np.random.default_rng(103)
    rho = random_density_matrix(2, rng)
    out = apply_kraus(sc.channel, rho)
    # expected: embedded main output tensored with flag |0>
    main_out = apply_kraus(main, rho).entries
    want = np.zeros((6, 6), dtype=complex)
    embedded = np.zeros((3, 3), dtype=complex)
    embedded[:2, :2] = main_out
    want[0::2, 0::2] = embedded
    assert np.max(np.abs(out.entries - want)) < 1e-12


def test_switch_channel_pure_erasure_branch():
    sc = build_switch_channel(0.0, identity_channel(2))
    out = apply_kraus(sc.channel, DensityMatrix.basis_state(0, 2))
    # erasure branch output on flag |1>: half kept, half flagged erased
    want = np.zeros((6, 6), dtype=complex)
    want[1, 1] = 0.5   # branch symbol 0, flag 1
    want[5, 5] = 0.5   # erasure symbol, flag 1
    assert np.max(np.abs(out.entries - want)) < 1e-12


def test_switch_channel_flag_marginal():
    sc = build_switch_channel(0.5, dephasing_channel(0.2))
    rng = np.random.default_rng(107)
    out = apply_kraus(sc.channel, random_density_matrix(2, rng))
    assert abs(np.trace(out.entries) - 1.0) < 1e-9
    flag = trace_out(out, [3, 2], keep={1})
    assert np.allclose(flag.entries, np.eye(2) / 2, atol=1e-9)


def test_switch_channel_probability_validation():
    with pytest.raises(ValueError, match="probability"):
        build_switch_channel(1.5, identity_channel(2))
    with pytest.raises(ValueError, match="probability"):
        build_switch_channel(-0.1, identity_channel(2))


# ---------------------------------------------------------------------------
# Joint input states
# ---------------------------------------------------------------------------

def test_bell_input_marginals():
    state = make_rho_ac("bell")
    for side in (0, 1):
        marg = trace_out(state.rho_ac, [2, 2], keep={side})
        assert np.allclose(marg.entries, np.eye(2) / 2, atol=1e-12)


@pytest.mark.parametrize("variant", ["literal", "alternating"])
def test_entangled_flagged_state(variant):
    state = make_rho_ac("entangled_flagged", variant=variant)
    rho = state.rho_ac
    assert rho.dim == 16 and state.side_dim == 4
    # the entangled factor reduces to I/2 on either side
    for bell_factor in (1, 3):
        marg = trace_out(rho, [2, 2, 2, 2], keep={bell_factor})
        assert np.allclose(marg.entries, np.eye(2) / 2, atol=1e-12)
    # swap symmetry via explicit permutation-matrix conjugation
    swap = np.zeros((16, 16))
    for a in range(4):
        for c in range(4):
            swap[c * 4 + a, a * 4 + c] = 1.0
    conjugated = swap @ rho.entries @ swap.T
    assert np.max(np.abs(conjugated - rho.entries)) < 1e-12


def test_entangled_flagged_variants_differ():
    lit = make_rho_ac("entangled_flagged", variant="literal").rho_ac
    alt = make_rho_ac("entangled_flagged", variant="alternating").rho_ac
    assert np.max(np.abs(lit.entries - alt.entries)) > 0.2


def test_phase_set_state_mode():
    rng = np.random.default_rng(109)
    base = random_density_matrix(2, rng)
    state = make_rho_ac("phase_set_state", base_state=base)
    assert state.side_dim == 2
    left = trace_out(state.rho_ac, [2, 2], keep={0})
    assert np.allclose(left.entries, base.entries, atol=1e-12)


def test_make_rho_ac_validation():
    with pytest.raises(ValueError, match="mode"):
        make_rho_ac("unknown")
    with pytest.raises(ValueError, match="base state"):
        make_rho_ac("phase_set_state")
    with pytest.raises(ValueError, match="variant"):
        make_rho_ac("entangled_flagged", variant="bogus")


def test_joint_input_state_rejects_asymmetric():
    asym = np.zeros((4, 4), dtype=complex)
    asym[0, 0] = 0.7  # |0>_A |0>_C weighted differently than |1>_A... no pair
    asym[1, 1] = 0.3  # |0>_A |1>_C without the mirrored |1>_A |0>_C weight
    with pytest.raises(ValueError, match="symmetric"):
        JointInputState(rho_ac=DensityMatrix(asym), side_dim=2, mode="custom")


# ---------------------------------------------------------------------------
# Joint coherent information
# ---------------------------------------------------------------------------

def test_joint_coherent_info_identity_main_matches_oracle():
    main = identity_channel(2)
    sc = build_switch_channel(0.5, main)
    state = make_rho_ac("bell")
    report = joint_coherent_info(sc, state)
    # independent full-density-matrix oracle on the assembled joint channel
    joint_ops = [np.kron(a, b) for a in sc.channel.kraus_ops
                 for b in sc.channel.kraus_ops]
    want = coherent_info_oracle(joint_ops, state.rho_ac.entries)
    assert abs(report.i_coh_joint - want) < 1e-9
    assert abs(report.i_coh_joint - report.decomposition_sum) < 1e-9


def test_joint_coherent_info_degenerate_probabilities():
    state = make_rho_ac("bell")
    main = dephasing_channel(0.2)
    at_zero = joint_coherent_info(build_switch_channel(0.0, main), state)
    weight, value = at_zero.branch_terms["erasure_erasure"]
    assert weight == 1.0
    assert abs(at_zero.i_coh_joint - value) < 1e-9
    assert abs(value) < 1e-9  # both erasure branches are self-complementary
    at_one = joint_coherent_info(build_switch_channel(1.0, main), state)
    weight, value = at_one.branch_terms["main_main"]
    assert weight == 1.0
    assert abs(at_one.i_coh_joint - value) < 1e-9


@pytest.mark.parametrize("p", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_flag_decomposition_identity(p):
    state = make_rho_ac("bell")
    mains = [identity_channel(2), dephasing_channel(0.2),
             compose_channels(bit_flip_channel(0.1), dephasing_channel(0.2))]
    for main in mains:
        report = joint_coherent_info(build_switch_channel(p, main), state)
        assert abs(report.i_coh_joint - report.decomposition_sum) < 1e-9
        weights = [w for w, _ in report.branch_terms.values()]
        assert abs(sum(weights) - 1.0) < 1e-12
        assert report.branch_terms["main_erasure"][0] == pytest.approx(
            p * (1 - p), abs=1e-15)
        assert report.branch_terms["erasure_main"][0] == pytest.approx(
            p * (1 - p), abs=1e-15)


def test_flag_decomposition_with_flagged_register_input():
    # two-qubit-input main channel driven by the flagged register state
    state = make_rho_ac("entangled_flagged", variant="alternating")
    sc = build_switch_channel(0.5, identity_channel(4))
    report = joint_coherent_info(sc, state)
    assert abs(report.i_coh_joint - report.decomposition_sum) < 1e-9


def test_coefficient_extraction_from_p_sweep():
    state = make_rho_ac("bell")
    main = dephasing_channel(0.2)
    grid = [0.1, 0.25, 0.5, 0.75, 0.9]
    reports = [joint_coherent_info(build_switch_channel(p, main), state)
               for p in grid]
    # fit joint values against the branch-weight basis
    basis = np.array([[p * p, 2 * p * (1 - p), (1 - p) ** 2] for p in grid])
    joints = np.array([r.i_coh_joint for r in reports])
    coeffs, residuals, _, _ = np.linalg.lstsq(basis, joints, rcond=None)
    fitted = basis @ coeffs
    assert np.max(np.abs(fitted - joints)) < 1e-9
    ref = reports[0].branch_terms
    assert abs(coeffs[0] - ref["main_main"][1]) < 1e-8
    cross_mean = 0.5 * (ref["main_erasure"][1] + ref["erasure_main"][1])
    assert abs(coeffs[1] - cross_mean) < 1e-8
    assert abs(coeffs[2] - ref["erasure_erasure"][1]) < 1e-8


def test_joint_coherent_info_dimension_mismatch():
    sc = build_switch_channel(0.5, identity_channel(2))
    with pytest.raises(ValueError, match="input dim"):
        joint_coherent_info(sc, make_rho_ac("entangled_flagged"))


def test_joint_coherent_info_dimension_cap():
    from helpers_quantum import random_kraus_channel
    rng = np.random.default_rng(211)
    big_main = random_kraus_channel(4, 4, 4, rng)
    sc = build_switch_channel(0.5, big_main)  # 9 Kraus ops, output dim 10
    state = make_rho_ac("entangled_flagged")
    with pytest.raises(ValueError, match="exceeds"):
        joint_coherent_info(sc, state)


# ---------------------------------------------------------------------------
# Bounds and comparison
# ---------------------------------------------------------------------------

def test_superactivated_bound_midpoint():
    bound, p_star = superactivated_bound(0.5, 1.0)
    assert bound == 0.5 and p_star == 0.5


def test_superactivated_bound_vanishes_at_edges():
    for p in (0.001, 0.999):
        bound, _ = superactivated_bound(p, 1.0)
        assert bound < 0.01


def test_superactivated_bound_grid_argmax():
    for i_coh in (0.2, 0.7, 1.0):
        _, p_star = superactivated_bound(0.3, i_coh)
        assert p_star == 0.5


def test_superactivated_bound_concave_unique_maximum():
    values = [superactivated_bound(p, 1.0)[0]
              for p in (i / 100 for i in range(1, 100))]
    peak = int(np.argmax(values))
    assert values[:peak] == sorted(values[:peak])
    assert values[peak:] == sorted(values[peak:], reverse=True)
    assert abs(values[peak] - 0.5) < 1e-12


def test_superactivated_bound_validation():
    with pytest.raises(ValueError):
        superactivated_bound(0.0, 1.0)
    with pytest.raises(ValueError):
        superactivated_bound(1.0, 1.0)


def test_assisted_single_use_capacity_cases():
    mixed = DensityMatrix.maximally_mixed(2)
    useless = BinaryCqChannel(mixed, mixed)
    orthogonal = BinaryCqChannel(DensityMatrix.basis_state(0, 2),
                                 DensityMatrix.basis_state(1, 2))
    overlap_half = BinaryCqChannel(DensityMatrix.basis_state(0, 2),
                                   DensityMatrix.from_pure(PLUS))
    assert abs(assisted_single_use_capacity(orthogonal, orthogonal)) < 1e-10
    assert abs(assisted_single_use_capacity(orthogonal, useless) - 0.5) < 1e-10
    want = 0.5 * CQ_CAPACITY_ZERO_PLUS
    assert abs(assisted_single_use_capacity(overlap_half, useless) - want) < 1e-10


def test_compare_assisted_cases():
    part = make_partition(128, range(100), range(100))
    assert len(part.s_in) == 100
    low = compare_assisted(0.3, part)
    assert low.b_star == 50.0 and low.b == pytest.approx(30.0)
    assert low.advantage
    mid = compare_assisted(0.5, part)
    assert mid.b_star == mid.b and not mid.advantage
    high = compare_assisted(0.7, part)
    assert not high.advantage


def test_compare_assisted_threshold_grid():
    part = make_partition(64, range(40), range(20, 60))
    for i in range(1, 100):
        p = i / 100.0
        cmp_ = compare_assisted(p, part)
        assert cmp_.advantage == (p < 0.5)
        # half-block form never undercuts half the private fraction
        assert cmp_.b_star >= 0.5 * len(part.s_in)


def test_compare_assisted_validation():
    part = make_partition(4, {0}, {0})
    with pytest.raises(ValueError):
        compare_assisted(0.0, part)
    with pytest.raises(ValueError):
        compare_assisted(1.0, part)


def test_sweep_rows_schema():
    state = make_rho_ac("bell")
    part = make_partition(16, range(10), range(4, 12))
    ps = [0.25, 0.5]
    reports = [joint_coherent_info(build_switch_channel(p, identity_channel(2)),
                                   state) for p in ps]
    comparisons = [compare_assisted(p, part) for p in ps]
    rows = sweep_rows(reports, comparisons)
    assert len(rows) == 2
    assert rows[0][0] == 0.25 and rows[1][0] == 0.5
    assert rows[0][9] is True and rows[1][9] is False
