"""Switch-channel construction that trades rate for a deterministic relay.

A switch channel applies the main (relayed) channel with probability p and
a 50% erasure channel otherwise, appending an orthogonal flag qubit that
records which branch fired. Feeding two switch copies an entangled,
side-symmetric input yields a joint coherent information that decomposes
exactly over the four branch pairs with weights (p^2, p(1-p), p(1-p),
(1-p)^2); the cross terms carry the rate, giving the 2p(1-p) lower bound
maximized at p = 1/2. Comparing the resulting half-block throughput with
the probabilistic encoder's p_e2-scaled throughput shows the assisted
construction wins exactly when p_e2 < 1/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .codeword_sets import IndexSetPartition
from .density_ops import (DensityMatrix, KrausChannel, bell_pair,
                          coherent_information, cq_joint_state,
                          erasure_channel, mutual_information,
                          permute_systems, symmetric_cq_capacity,
                          tensor_channels, trace_out, BinaryCqChannel)

JOINT_DIM_CAP = 4096

BRANCH_KEYS = ("main_main", "main_erasure", "erasure_main", "erasure_erasure")


@dataclass
class SwitchChannel:
    """Probabilistic mixture of a main channel and a 50% erasure channel
    with the branch recorded on a trailing flag qubit (main -> |0>,
    erasure -> |1>). ``channel`` is the assembled Kraus map; both branch
    outputs are isometrically embedded into a common space of dimension
    ``branch_dim`` before the flag is attached."""
    p: float
    branch_main: KrausChannel
    branch_erasure: KrausChannel
    channel: KrausChannel
    branch_dim: int


@dataclass
class JointInputState:
    """Two-sided channel input, symmetric under swapping the sides."""
    rho_ac: DensityMatrix
    side_dim: int
    mode: str
    variant: Optional[str] = None

    def __post_init__(self):
        d = self.side_dim
        if d * d != self.rho_ac.dim:
            raise ValueError(
                f"state dim {self.rho_ac.dim} is not side_dim^2 = {d * d}")
        swapped = permute_systems(self.rho_ac.entries, [d, d], (1, 0))
        dev = float(np.max(np.abs(swapped - self.rho_ac.entries)))
        if dev > 1e-12:
            raise ValueError(f"input not symmetric under side swap ({dev:.3e})")


@dataclass
class SuperactivationReport:
    """Joint coherent information with its per-branch decomposition.

    ``branch_terms`` maps each branch pair to (weight, coherent
    information). ``bound_2p1p`` is 2p(1-p) times the single-copy main
    coherent information at the reduced input; ``p_sym_star_lower`` is the
    p-optimized form, half that coherent information.
    """
    p: float
    i_coh_joint: float
    branch_terms: Dict[str, Tuple[float, float]]
    bound_2p1p: float
    p_sym_star_lower: float

    def __post_init__(self):
        weights = sum(w for w, _ in self.branch_terms.values())
        if abs(weights - 1.0) > 1e-12:
            raise ValueError(f"branch weights sum to {weights}, expected 1")

    @property
    def decomposition_sum(self) -> float:
        return sum(w * v for w, v in self.branch_terms.values())


@dataclass(frozen=True)
class AssistedComparison:
    """Throughput of the assisted construction vs the probabilistic relay."""
    p_e2: float
    s_in_size: int
    b: float
    b_star: float
    advantage: bool


def _embed(out_dim: int, target_dim: int) -> np.ndarray:
    e = np.zeros((target_dim, out_dim), dtype=complex)
    e[:out_dim, :] = np.eye(out_dim)
    return e


def build_switch_channel(p: float, main: KrausChannel) -> SwitchChannel:
    """Assemble the flagged mixture of ``main`` and the 50% erasure channel.

    Kraus set: sqrt(p) N_j (x) |0>_flag together with sqrt(1-p) A_k (x)
    |1>_flag, each branch embedded into a common output space first.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"branch probability must lie in [0, 1], got {p}")
    erasure = erasure_channel(0.5, in_dim=main.in_dim)
    branch_dim = max(main.out_dim, erasure.out_dim)
    flag0 = np.array([[1.0], [0.0]], dtype=complex)
    flag1 = np.array([[0.0], [1.0]], dtype=complex)
    embed_main = _embed(main.out_dim, branch_dim)
    embed_er = _embed(erasure.out_dim, branch_dim)
    ops = [np.kron(math.sqrt(p) * (embed_main @ k), flag0)
           for k in main.kraus_ops]
    ops += [np.kron(math.sqrt(1.0 - p) * (embed_er @ k), flag1)
            for k in erasure.kraus_ops]
    return SwitchChannel(p=p, branch_main=main, branch_erasure=erasure,
                         channel=KrausChannel(ops), branch_dim=branch_dim)


def make_rho_ac(mode: str, base_state: Optional[DensityMatrix] = None,
                variant: str = "alternating") -> JointInputState:
    """Construct a side-symmetric joint input state.

    Modes
    -----
    ``bell``
        Maximally entangled pair across the two (qubit) channel inputs.
    ``entangled_flagged``
        A classical flag register pair tensored with a maximally entangled
        pair, for channels with two-qubit inputs. ``variant`` selects the
        flag register content: ``literal`` pins both flags to |0>;
        ``alternating`` mixes |00> and |11> evenly.
    ``phase_set_state``
        Symmetric product extension base (x) base of a caller-supplied
        single-side state.
    """
    if mode == "bell":
        return JointInputState(rho_ac=bell_pair(2), side_dim=2, mode=mode)
    if mode == "entangled_flagged":
        if variant not in ("literal", "alternating"):
            raise ValueError(f"unknown variant {variant!r}")
        bell = bell_pair(2).entries
        if variant == "literal":
            flags = np.zeros((4, 4), dtype=complex)
            flags[0, 0] = 1.0                      # |00><00| on the flag pair
        else:
            flags = np.zeros((4, 4), dtype=complex)
            flags[0, 0] = 0.5                      # |00><00|
            flags[3, 3] = 0.5                      # |11><11|
        # order (flag_A, flag_C, bell_A, bell_C) -> (flag_A, bell_A, flag_C, bell_C)
        rho = permute_systems(np.kron(flags, bell), [2, 2, 2, 2], (0, 2, 1, 3))
        return JointInputState(rho_ac=DensityMatrix(rho), side_dim=4,
                               mode=mode, variant=variant)
    if mode == "phase_set_state":
        if base_state is None:
            raise ValueError("phase_set_state mode needs a base state")
        rho = np.kron(base_state.entries, base_state.entries)
        return JointInputState(rho_ac=DensityMatrix(rho),
                               side_dim=base_state.dim, mode=mode)
    raise ValueError(f"unknown mode {mode!r}")


def joint_coherent_info(sc: SwitchChannel,
                        input_state: JointInputState) -> SuperactivationReport:
    """Coherent information of two switch copies, with its exact
    four-branch decomposition.

    Because the branch flag is copied to both the output and the
    environment, the joint value equals the weighted sum of the branch
    coherent informations; both sides are computed independently and
    reported so they can be checked against each other.
    """
    rho = input_state.rho_ac
    main = sc.branch_main
    erasure = sc.branch_erasure
    if rho.dim != sc.channel.in_dim ** 2:
        raise ValueError(
            f"input dim {rho.dim} does not match joint channel input "
            f"{sc.channel.in_dim ** 2}")
    joint = tensor_channels(sc.channel, sc.channel)
    if joint.out_dim * len(joint.kraus_ops) > JOINT_DIM_CAP:
        raise ValueError(
            f"joint output x environment dimension exceeds {JOINT_DIM_CAP}")
    i_joint = coherent_information(joint, rho)

    p = sc.p
    branches = {
        "main_main": (p * p, tensor_channels(main, main)),
        "main_erasure": (p * (1.0 - p), tensor_channels(main, erasure)),
        "erasure_main": ((1.0 - p) * p, tensor_channels(erasure, main)),
        "erasure_erasure": ((1.0 - p) ** 2, tensor_channels(erasure, erasure)),
    }
    terms = {key: (w, coherent_information(ch, rho))
             for key, (w, ch) in branches.items()}

    side = input_state.side_dim
    reduced = trace_out(rho, [side, side], keep={0})
    i_main = coherent_information(main, reduced)
    return SuperactivationReport(
        p=p,
        i_coh_joint=i_joint,
        branch_terms=terms,
        bound_2p1p=2.0 * p * (1.0 - p) * i_main,
        p_sym_star_lower=0.5 * i_main,
    )


def superactivated_bound(p: float, i_coh_main: float) -> Tuple[float, float]:
    """Lower bound 2p(1-p) * i_coh_main and the grid argmax of the
    coefficient.

    Returns (bound at p, p_star), where p_star maximizes the bound over
    the grid {0.01, ..., 0.99}; for positive coherent information the
    maximum sits at 0.5 with value i_coh_main / 2.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie strictly inside (0, 1), got {p}")
    bound = 2.0 * p * (1.0 - p) * i_coh_main
    grid = [i / 100.0 for i in range(1, 100)]
    values = [2.0 * q * (1.0 - q) * i_coh_main for q in grid]
    p_star = grid[int(np.argmax(values))]
    return bound, p_star


def assisted_single_use_capacity(bob_phase: BinaryCqChannel,
                                 eve: BinaryCqChannel) -> float:
    """Single-use private rate of the assisted scheme: half the phase-side
    advantage over the eavesdropper."""
    i_ab = symmetric_cq_capacity(bob_phase)
    i_ae = mutual_information(cq_joint_state(eve), (2, eve.dim))
    return 0.5 * (i_ab - i_ae)


def compare_assisted(p_e2: float, part: IndexSetPartition) -> AssistedComparison:
    """Assisted half-block throughput vs the probabilistic relay throughput.

    b_star = |s_in| / 2 versus b = p_e2 * |s_in|; for a nonempty private
    set the strict advantage holds exactly when p_e2 < 0.5.
    """
    if not 0.0 < p_e2 < 1.0:
        raise ValueError(f"p_e2 must lie strictly inside (0, 1), got {p_e2}")
    size = len(part.s_in)
    b_star = 0.5 * size
    b = p_e2 * size
    return AssistedComparison(p_e2=p_e2, s_in_size=size, b=b, b_star=b_star,
                              advantage=b_star > b)


def sweep_rows(reports, comparisons):
    """Rows (p, i_coh_joint, four branch terms, bound, b, b_star, advantage)
    for CSV export; inputs are parallel lists over the p grid."""
    rows = []
    for rep, cmp_ in zip(reports, comparisons):
        terms = rep.branch_terms
        rows.append((
            rep.p, rep.i_coh_joint,
            terms["main_main"][1], terms["main_erasure"][1],
            terms["erasure_main"][1], terms["erasure_erasure"][1],
            rep.bound_2p1p, cmp_.b, cmp_.b_star, cmp_.advantage,
        ))
    return rows
