"""Index-set algebra for dual (amplitude/phase) polarization.

A block of n synthesized channels is polarized twice, once for the
amplitude channel and once for the phase channel. Intersecting the two
good/bad splits partitions the indices into four disjoint classes:

* s_in - good for both; carries private information,
* p1   - good for amplitude only,
* p2   - good for phase only,
* b    - good for neither (completely useless).

All rate quantities are reported as finite-n fractions of the block
length; asymptotic statements are treated as trends, not identities.
Negative fractions are reported as-is with a warning.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .polar_core import BDMC, PolarizationResult, select_sets


@dataclass(frozen=True)
class DualPolarization:
    """Good index sets of the amplitude and phase polarizations."""
    n: int
    good_amp: frozenset
    good_phase: frozenset

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        full = frozenset(range(self.n))
        if not (self.good_amp <= full and self.good_phase <= full):
            raise ValueError("good sets must be subsets of range(n)")

    @property
    def bad_amp(self) -> frozenset:
        return frozenset(range(self.n)) - self.good_amp

    @property
    def bad_phase(self) -> frozenset:
        return frozenset(range(self.n)) - self.good_phase


@dataclass(frozen=True)
class IndexSetPartition:
    """The four disjoint codeword classes covering range(n)."""
    n: int
    s_in: frozenset
    p1: frozenset
    p2: frozenset
    b: frozenset

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        sets = [self.s_in, self.p1, self.p2, self.b]
        total = 0
        union = frozenset()
        for s in sets:
            total += len(s)
            union |= s
        if total != len(union) or union != frozenset(range(self.n)):
            raise ValueError("classes must be disjoint and cover range(n)")

    @property
    def good_amp(self) -> frozenset:
        return self.s_in | self.p1

    @property
    def good_phase(self) -> frozenset:
        return self.s_in | self.p2

    @property
    def bad_amp(self) -> frozenset:
        return self.p2 | self.b

    @property
    def bad_phase(self) -> frozenset:
        return self.p1 | self.b


@dataclass(frozen=True)
class RateReport:
    """Finite-n rate fractions in bits per channel use."""
    p_sym_degraded: float
    p_sym_nondegraded: float
    r_sym: float
    c_bob: float
    c_eve: float

    def __post_init__(self):
        for name, val in self.__dict__.items():
            if not -1.0 <= val <= 1.0:
                raise ValueError(f"{name} = {val} outside [-1, 1]")


@dataclass(frozen=True)
class EveCapacityReport:
    """Eavesdropper-side fractions.

    ``c_bob`` is the complement form 1 - |p1|/n; ``c_bob_sp2`` is the
    direct form |s_in u p2|/n. The two agree exactly when b is empty,
    recorded in ``forms_agree``. Section fractions give the share of
    indices whose codewords transit each relay hop.
    """
    c_eve_total: float
    c_eve_p1: float
    c_bob: float
    c_bob_sp2: float
    forms_agree: bool
    eve_section_e1e2: float
    eve_section_e2d: float


def build_partition(dp: DualPolarization) -> IndexSetPartition:
    """Intersect the amplitude and phase good/bad splits."""
    return IndexSetPartition(
        n=dp.n,
        s_in=dp.good_amp & dp.good_phase,
        p1=dp.good_amp - dp.good_phase,
        p2=dp.good_phase - dp.good_amp,
        b=frozenset(range(dp.n)) - (dp.good_amp | dp.good_phase),
    )


def from_polarizations(pr_amp: PolarizationResult, pr_phase: PolarizationResult,
                       beta: float) -> DualPolarization:
    """Dual polarization from two Bhattacharyya vectors at one threshold."""
    if pr_amp.n != pr_phase.n:
        raise ValueError("amplitude and phase polarizations disagree on n")
    good_amp = select_sets(pr_amp, beta).good
    good_phase = select_sets(pr_phase, beta).good
    return DualPolarization(n=pr_amp.n, good_amp=good_amp, good_phase=good_phase)


def pauli_induced_channels(p_x: float, p_y: float, p_z: float):
    """Classical channels a qubit Pauli channel induces in the two bases.

    Z-basis (amplitude) transmission is flipped by X or Y errors; X-basis
    (phase) transmission by Z or Y. Returns (amplitude BDMC, phase BDMC).
    """
    if min(p_x, p_y, p_z) < 0.0 or p_x + p_y + p_z > 1.0:
        raise ValueError("Pauli probabilities must be nonnegative, sum <= 1")
    return BDMC.bsc(p_x + p_y), BDMC.bsc(p_z + p_y)


def _warn_if_negative(name: str, value: float) -> float:
    if value < 0.0:
        warnings.warn(f"{name} is negative ({value}); reporting as-is",
                      stacklevel=3)
    return value


def p_sym_degraded(part: IndexSetPartition) -> float:
    """Private rate against a degraded eavesdropper: |s_in|/n."""
    return len(part.s_in) / part.n


def p_sym_nondegraded(part: IndexSetPartition) -> float:
    """Private rate against a non-degraded eavesdropper: (|s_in| - |b|)/n.

    Cross-checked against the equivalent inclusion-exclusion form
    (|good_amp| + |good_phase| - n)/n, which must agree exactly.
    """
    direct = len(part.s_in) - len(part.b)
    expanded = len(part.good_amp) + len(part.good_phase) - part.n
    if direct != expanded:
        raise AssertionError("set-cardinality identity violated")
    return _warn_if_negative("p_sym_nondegraded", direct / part.n)


def r_sym_nondegraded(part: IndexSetPartition) -> float:
    """Achievable rate (|s_in| + |b| - |bad_amp| + |p2|)/n.

    Since bad_amp is the disjoint union of p2 and b, this always reduces
    to |s_in|/n; the expression is evaluated literally.
    """
    val = (len(part.s_in) + len(part.b) - len(part.bad_amp) + len(part.p2))
    return val / part.n


def nondegraded_phase_margin(part: IndexSetPartition) -> float:
    """(|s_in| - |bad_phase|)/n, the usable margin once the phase-frozen
    positions are discounted. May be negative."""
    return _warn_if_negative(
        "nondegraded_phase_margin",
        (len(part.s_in) - len(part.bad_phase)) / part.n)


def eve_capacity(part: IndexSetPartition) -> EveCapacityReport:
    """Eavesdropper fractions and the two Bob-side complement forms."""
    n = part.n
    c_bob = 1.0 - len(part.p1) / n
    c_bob_sp2 = len(part.s_in | part.p2) / n
    return EveCapacityReport(
        c_eve_total=(len(part.p1) + len(part.p2)) / n,
        c_eve_p1=len(part.p1) / n,
        c_bob=c_bob,
        c_bob_sp2=c_bob_sp2,
        forms_agree=len(part.b) == 0,
        eve_section_e1e2=len(part.p2 | part.s_in) / n,
        eve_section_e2d=len(part.s_in) / n,
    )


def rate_report(part: IndexSetPartition) -> RateReport:
    """All scalar rate fractions for one partition."""
    eve = eve_capacity(part)
    return RateReport(
        p_sym_degraded=p_sym_degraded(part),
        p_sym_nondegraded=p_sym_nondegraded(part),
        r_sym=r_sym_nondegraded(part),
        c_bob=eve.c_bob,
        c_eve=eve.c_eve_total,
    )


def codeword_threshold_sets(z_bob, z_eve, beta: float):
    """Threshold index sets for a wiretap pair of polarized channels.

    Bob keeps indices with z below (1/n) 2^(-n^beta); Eve's set collects
    indices she sees almost uselessly, z >= 1 - threshold. Returns
    (s_bob, s_eve) as frozensets.
    """
    zb = np.asarray(z_bob, dtype=float)
    ze = np.asarray(z_eve, dtype=float)
    if zb.shape != ze.shape or zb.ndim != 1:
        raise ValueError("Bhattacharyya vectors must be equal-length 1-D")
    if not 0.0 < beta < 0.5:
        raise ValueError(f"beta must lie strictly inside (0, 0.5), got {beta}")
    n = len(zb)
    threshold = (1.0 / n) * 2.0 ** (-(n ** beta))
    s_bob = frozenset(int(i) for i in np.flatnonzero(zb < threshold))
    s_eve = frozenset(int(i) for i in np.flatnonzero(ze >= 1.0 - threshold))
    return s_bob, s_eve


def partition_rows(part: IndexSetPartition):
    """Rows (index, class-label) for CSV export."""
    labels = {}
    for name, members in (("S_in", part.s_in), ("P1", part.p1),
                          ("P2", part.p2), ("B", part.b)):
        for i in members:
            labels[i] = name
    return [(i, labels[i]) for i in range(part.n)]
