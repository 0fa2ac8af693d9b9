"""Finite-dimensional quantum states, channels, and information quantities.

States are dense complex density matrices, channels are explicit Kraus
operator lists, and every entropic quantity is computed from exact
eigendecompositions. All logarithms are base 2, so capacities and entropies
are in bits.

Numerical conventions: structural validation (Hermiticity, unit trace,
positivity, Kraus completeness, isometry) uses an absolute tolerance of
1e-9; eigenvalues in [-1e-9, 0) are clipped to zero before entropies and
anything more negative is rejected as an invalid state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

VALIDATION_TOL = 1e-9


class DensityMatrix:
    """A dim x dim complex matrix that is Hermitian, PSD, and unit trace.

    Parameters
    ----------
    entries : array-like
        Square complex matrix. Validated on construction; eigenvalues may
        dip to -1e-9 below zero to absorb diagonalization jitter.
    """

    def __init__(self, entries):
        m = np.array(entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        herm_dev = float(np.max(np.abs(m - m.conj().T)))
        if herm_dev > VALIDATION_TOL:
            raise ValueError(f"not Hermitian: max deviation {herm_dev:.3e}")
        trace_dev = abs(complex(np.trace(m)) - 1.0)
        if trace_dev > VALIDATION_TOL:
            raise ValueError(f"trace must be 1, got {complex(np.trace(m)):.12g}")
        min_eig = float(np.linalg.eigvalsh(m)[0])
        if min_eig < -VALIDATION_TOL:
            raise ValueError(f"not PSD: eigenvalue {min_eig:.3e}")
        self.entries = m
        self.dim = int(m.shape[0])

    @classmethod
    def from_pure(cls, amplitudes) -> "DensityMatrix":
        """Rank-one state |psi><psi| from a (normalized on entry) vector."""
        v = np.asarray(amplitudes, dtype=complex).ravel()
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ValueError("zero vector has no associated state")
        v = v / norm
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim) / dim)

    @classmethod
    def basis_state(cls, index: int, dim: int) -> "DensityMatrix":
        m = np.zeros((dim, dim), dtype=complex)
        m[index, index] = 1.0
        return cls(m)

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim})"


class KrausChannel:
    """A CPTP map given by Kraus operators {N_i}, each out_dim x in_dim.

    Completeness (sum_i N_i^dag N_i = I on the input space) is enforced to
    1e-9 at construction.
    """

    def __init__(self, kraus_ops: Sequence):
        ops = [np.array(k, dtype=complex) for k in kraus_ops]
        if not ops:
            raise ValueError("need at least one Kraus operator")
        out_dim, in_dim = ops[0].shape
        for k in ops:
            if k.shape != (out_dim, in_dim):
                raise ValueError("Kraus operators must share one shape")
        total = sum(k.conj().T @ k for k in ops)
        dev = float(np.max(np.abs(total - np.eye(in_dim))))
        if dev > VALIDATION_TOL:
            raise ValueError(f"Kraus completeness violated: deviation {dev:.3e}")
        self.kraus_ops = ops
        self.in_dim = int(in_dim)
        self.out_dim = int(out_dim)

    def __repr__(self):
        return (f"KrausChannel(in={self.in_dim}, out={self.out_dim}, "
                f"n_ops={len(self.kraus_ops)})")


class Isometry:
    """An isometric dilation U : in -> out (x) env with U^dag U = I.

    The row index is ordered (output, environment): row b*env_dim + e holds
    the amplitude for channel output b and environment state |e>.
    """

    def __init__(self, matrix, env_dim: int):
        u = np.array(matrix, dtype=complex)
        rows, in_dim = u.shape
        if env_dim < 1 or rows % env_dim != 0:
            raise ValueError(f"row count {rows} not divisible by env_dim {env_dim}")
        dev = float(np.max(np.abs(u.conj().T @ u - np.eye(in_dim))))
        if dev > VALIDATION_TOL:
            raise ValueError(f"U^dag U != I: deviation {dev:.3e}")
        # U U^dag idempotence follows from the check above with deviation
        # bounded by (1 + dev) * dev; verify explicitly while it is cheap.
        if rows <= 512:
            proj = u @ u.conj().T
            proj_dev = float(np.max(np.abs(proj @ proj - proj)))
            if proj_dev > VALIDATION_TOL:
                raise ValueError(
                    f"U U^dag is not a projector: deviation {proj_dev:.3e}")
        self.matrix = u
        self.env_dim = int(env_dim)
        self.in_dim = int(in_dim)
        self.out_dim = rows // int(env_dim)


class BinaryCqChannel:
    """Classical-quantum channel with binary input: 0 -> sigma0, 1 -> sigma1."""

    def __init__(self, sigma0: DensityMatrix, sigma1: DensityMatrix):
        if sigma0.dim != sigma1.dim:
            raise ValueError(
                f"output dimensions differ: {sigma0.dim} vs {sigma1.dim}")
        self.sigma0 = sigma0
        self.sigma1 = sigma1
        self.dim = sigma0.dim


@dataclass
class CapacityReport:
    """Capacities in bits. Fields left as None were not computed.

    ``p_sym_single_use`` is the single-use symmetric private information
    I(A:B) - I(A:E); when both mutual informations are populated the report
    checks the difference to 1e-12.
    """

    c_sym: Optional[float] = None
    p_sym_single_use: Optional[float] = None
    i_ab: Optional[float] = None
    i_ae: Optional[float] = None
    i_coh: Optional[float] = None

    def __post_init__(self):
        if (self.p_sym_single_use is not None and self.i_ab is not None
                and self.i_ae is not None):
            if abs(self.p_sym_single_use - (self.i_ab - self.i_ae)) > 1e-12:
                raise ValueError(
                    "p_sym_single_use must equal i_ab - i_ae when populated")


# ---------------------------------------------------------------------------
# Channel constructors
# ---------------------------------------------------------------------------

def identity_channel(dim: int = 2) -> KrausChannel:
    return KrausChannel([np.eye(dim)])


def dephasing_channel(q: float) -> KrausChannel:
    """Qubit dephasing: rho -> (1-q) rho + q Z rho Z."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must be in [0, 1], got {q}")
    z = np.diag([1.0, -1.0])
    ops = [math.sqrt(1.0 - q) * np.eye(2)]
    if q > 0.0:
        ops.append(math.sqrt(q) * z)
    return KrausChannel(ops)


def bit_flip_channel(q: float) -> KrausChannel:
    """Qubit bit flip: rho -> (1-q) rho + q X rho X."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must be in [0, 1], got {q}")
    x = np.array([[0.0, 1.0], [1.0, 0.0]])
    ops = [math.sqrt(1.0 - q) * np.eye(2)]
    if q > 0.0:
        ops.append(math.sqrt(q) * x)
    return KrausChannel(ops)


def depolarizing_channel(q: float) -> KrausChannel:
    """Qubit depolarizing: rho -> (1-q) rho + q I/2."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must be in [0, 1], got {q}")
    x = np.array([[0.0, 1.0], [1.0, 0.0]])
    y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
    z = np.diag([1.0, -1.0])
    ops = [math.sqrt(1.0 - 0.75 * q) * np.eye(2)]
    if q > 0.0:
        ops += [math.sqrt(q / 4.0) * p for p in (x, y, z)]
    return KrausChannel(ops)


def erasure_channel(epsilon: float, in_dim: int = 2) -> KrausChannel:
    """Erasure channel: keep the input with probability 1-epsilon, otherwise
    replace it with an orthogonal erasure flag.

    Output dimension is in_dim + 1 with the flag on the last basis vector.
    Kraus set: sqrt(1-eps) * embed plus sqrt(eps) |e><k| for each input
    basis vector k.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    out_dim = in_dim + 1
    embed = np.zeros((out_dim, in_dim), dtype=complex)
    embed[:in_dim, :] = np.eye(in_dim)
    ops = [math.sqrt(1.0 - epsilon) * embed]
    for k in range(in_dim):
        flag = np.zeros((out_dim, in_dim), dtype=complex)
        flag[in_dim, k] = math.sqrt(epsilon)
        ops.append(flag)
    return KrausChannel(ops)


def compose_channels(first: KrausChannel, second: KrausChannel) -> KrausChannel:
    """Serial composition: apply ``first``, then ``second``."""
    if second.in_dim != first.out_dim:
        raise ValueError(
            f"cannot compose: first yields dim {first.out_dim}, "
            f"second expects dim {second.in_dim}")
    ops = [b @ a for b in second.kraus_ops for a in first.kraus_ops]
    return KrausChannel(ops)


def tensor_channels(a: KrausChannel, b: KrausChannel) -> KrausChannel:
    """Parallel composition a (x) b acting on in_a (x) in_b."""
    ops = [np.kron(ka, kb) for ka in a.kraus_ops for kb in b.kraus_ops]
    return KrausChannel(ops)


def bell_pair(dim: int = 2) -> DensityMatrix:
    """Maximally entangled state (1/sqrt(d)) sum_i |ii> on dim (x) dim."""
    v = np.zeros(dim * dim, dtype=complex)
    for i in range(dim):
        v[i * dim + i] = 1.0
    return DensityMatrix.from_pure(v)


# ---------------------------------------------------------------------------
# Channel and state arithmetic
# ---------------------------------------------------------------------------

def apply_kraus(channel: KrausChannel, rho: DensityMatrix) -> DensityMatrix:
    """Apply a channel: sum_i N_i rho N_i^dag.

    Raises ValueError on input/channel dimension mismatch; the output is
    validated as a density matrix.
    """
    if rho.dim != channel.in_dim:
        raise ValueError(
            f"state dim {rho.dim} does not match channel input {channel.in_dim}")
    out = np.zeros((channel.out_dim, channel.out_dim), dtype=complex)
    for k in channel.kraus_ops:
        out += k @ rho.entries @ k.conj().T
    return DensityMatrix(out)


def isometric_extension(channel: KrausChannel) -> Isometry:
    """Dilation U = sum_i N_i (x) |i>_E with env_dim = number of Kraus ops.

    Tracing the environment out of U rho U^dag recovers the channel action.
    """
    env = len(channel.kraus_ops)
    # stack axis layout (out, env, in) so rows follow the (output, env) order
    u = np.stack(channel.kraus_ops, axis=1).reshape(
        channel.out_dim * env, channel.in_dim)
    return Isometry(u, env_dim=env)


def trace_out(rho: DensityMatrix, subsystem_dims: Sequence[int],
              keep) -> DensityMatrix:
    """Partial trace keeping the listed subsystem indices.

    Parameters
    ----------
    rho : DensityMatrix
        State on the tensor product of ``subsystem_dims``.
    subsystem_dims : sequence of int
        Dimension of each tensor factor; the product must equal rho.dim.
    keep : iterable of int
        Indices of factors to keep, in their original order.
    """
    dims = [int(d) for d in subsystem_dims]
    if math.prod(dims) != rho.dim:
        raise ValueError(
            f"subsystem dims {dims} do not factor dimension {rho.dim}")
    keep_set = set(int(i) for i in keep)
    if not keep_set or not keep_set.issubset(range(len(dims))):
        raise ValueError(f"keep indices {sorted(keep_set)} invalid for {len(dims)} factors")
    t = rho.entries.reshape(dims + dims)
    n_sys = len(dims)
    for idx in sorted(set(range(len(dims))) - keep_set, reverse=True):
        t = np.trace(t, axis1=idx, axis2=idx + n_sys)
        n_sys -= 1
    kept = math.prod(dims[i] for i in sorted(keep_set))
    return DensityMatrix(t.reshape(kept, kept))


def permute_systems(matrix: np.ndarray, dims: Sequence[int],
                    perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors of a square matrix: new factor i is old factor perm[i]."""
    dims = [int(d) for d in dims]
    k = len(dims)
    t = matrix.reshape(dims + dims)
    axes = list(perm) + [p + k for p in perm]
    d = math.prod(dims)
    return t.transpose(axes).reshape(d, d)


def _entropy_bits(matrix: np.ndarray) -> float:
    """Von Neumann entropy of a raw Hermitian matrix, in bits."""
    eigs = np.linalg.eigvalsh(matrix)
    low = float(eigs.min()) if eigs.size else 0.0
    if low < -VALIDATION_TOL:
        raise ValueError(f"eigenvalue {low:.3e} below clipping tolerance")
    eigs = np.clip(eigs.real, 0.0, None)
    pos = eigs[eigs > 0.0]
    s = float(-np.sum(pos * np.log2(pos)))
    return 0.0 if -1e-12 < s < 0.0 else s


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """S(rho) = -sum_i lambda_i log2 lambda_i, with 0 log 0 = 0."""
    return _entropy_bits(rho.entries)


def symmetric_cq_capacity(ch: BinaryCqChannel) -> float:
    """Capacity of a binary cq channel at the uniform input distribution.

    S((sigma0 + sigma1)/2) - S(sigma0)/2 - S(sigma1)/2, in [0, 1] bits.
    """
    mix = (ch.sigma0.entries + ch.sigma1.entries) / 2.0
    val = (_entropy_bits(mix)
           - 0.5 * _entropy_bits(ch.sigma0.entries)
           - 0.5 * _entropy_bits(ch.sigma1.entries))
    if not -VALIDATION_TOL <= val <= 1.0 + VALIDATION_TOL:
        raise ValueError(f"cq capacity {val} escaped [0, 1]")
    return min(max(val, 0.0), 1.0)


def cq_joint_state(ch: BinaryCqChannel) -> DensityMatrix:
    """Joint input-output state at uniform inputs:
    (1/2)|0><0| (x) sigma0 + (1/2)|1><1| (x) sigma1."""
    d = ch.dim
    joint = np.zeros((2 * d, 2 * d), dtype=complex)
    joint[:d, :d] = ch.sigma0.entries / 2.0
    joint[d:, d:] = ch.sigma1.entries / 2.0
    return DensityMatrix(joint)


def mutual_information(rho_ab: DensityMatrix, dims) -> float:
    """I(A:B) = S(A) + S(B) - S(AB) for a bipartite state."""
    d_a, d_b = int(dims[0]), int(dims[1])
    if d_a * d_b != rho_ab.dim:
        raise ValueError(f"dims {dims} do not factor dimension {rho_ab.dim}")
    s_a = von_neumann_entropy(trace_out(rho_ab, [d_a, d_b], keep={0}))
    s_b = von_neumann_entropy(trace_out(rho_ab, [d_a, d_b], keep={1}))
    s_ab = von_neumann_entropy(rho_ab)
    return s_a + s_b - s_ab


def private_information(bob: BinaryCqChannel, eve: BinaryCqChannel) -> CapacityReport:
    """Single-use symmetric private information I(A:B) - I(A:E).

    Both mutual informations are evaluated on the uniform-input joint
    states. The difference may be negative and is reported as-is.
    """
    i_ab = mutual_information(cq_joint_state(bob), (2, bob.dim))
    i_ae = mutual_information(cq_joint_state(eve), (2, eve.dim))
    return CapacityReport(c_sym=i_ab, p_sym_single_use=i_ab - i_ae,
                          i_ab=i_ab, i_ae=i_ae)


def coherent_information(channel: KrausChannel, rho: DensityMatrix) -> float:
    """I_coh = S(B) - S(E) through the isometric extension of the channel."""
    if rho.dim != channel.in_dim:
        raise ValueError(
            f"state dim {rho.dim} does not match channel input {channel.in_dim}")
    u = isometric_extension(channel)
    joint = u.matrix @ rho.entries @ u.matrix.conj().T
    dims = [u.out_dim, u.env_dim]
    t = joint.reshape(dims + dims)
    out_state = np.trace(t, axis1=1, axis2=3)
    env_state = np.trace(t, axis1=0, axis2=2)
    return _entropy_bits(out_state) - _entropy_bits(env_state)


def cq_from_kraus(channel: KrausChannel) -> BinaryCqChannel:
    """Binary cq channel induced by classical basis use of a qubit-input
    channel: sigma_a = N(|a><a|)."""
    if channel.in_dim != 2:
        raise ValueError("classical basis use needs a qubit-input channel")
    s0 = apply_kraus(channel, DensityMatrix.basis_state(0, 2))
    s1 = apply_kraus(channel, DensityMatrix.basis_state(1, 2))
    return BinaryCqChannel(s0, s1)


# ---------------------------------------------------------------------------
# JSON matrix serialization (row-major, [re, im] pairs)
# ---------------------------------------------------------------------------

def matrix_to_json(matrix: np.ndarray) -> list:
    """Row-major nested list of [re, im] pairs."""
    m = np.asarray(matrix, dtype=complex)
    return [[[float(v.real), float(v.imag)] for v in row] for row in m]


def matrix_from_json(data) -> np.ndarray:
    a = np.asarray(data, dtype=float)
    if a.ndim != 3 or a.shape[2] != 2:
        raise ValueError("expected nested rows of [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]
