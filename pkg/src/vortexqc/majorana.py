"""State-vector engine for Majorana modes.

Basis convention: occupation-number basis with Dirac mode 1 as the least
significant bit. Majoranas ``2m-1`` and ``2m`` build mode ``m`` via
``c_m = (gamma_{2m-1} + i gamma_{2m}) / 2`` with a Jordan-Wigner parity
string over the modes below ``m``. Extra distinguishable two-level registers
(``n_qubits``) sit above all Dirac modes and are untouched by Majoranas.

Braid chirality: ``braid_unitary(i, j, +1) = exp(+pi/4 gamma_j gamma_i)`` is
the counterclockwise exchange; sign ``-1`` is its inverse.

Pair occupancy: ``-i gamma_a gamma_b = +1`` on an empty pair (a, b), so
``occupancy = (1 - <-i gamma_a gamma_b>) / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import sparse

MAX_BITS = 12
DENSE_CUTOFF = 256
ZERO_PROBABILITY = 1e-14
NORM_TOLERANCE = 1e-12


class SizeError(ValueError):
    """Requested register does not fit the desk-scale bound."""


class MajoranaIndexError(IndexError):
    pass


class InvalidExchange(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class ZeroProbabilityBranch(RuntimeError):
    """A forced measurement branch has Born probability below the cutoff."""


@dataclass(frozen=True)
class FockSpace:
    n_modes: int
    n_qubits: int = 0

    def __post_init__(self):
        if self.n_modes < 1 or self.n_qubits < 0 or self.n_modes + self.n_qubits > MAX_BITS:
            raise SizeError(
                f"n_modes={self.n_modes}, n_qubits={self.n_qubits}: need 1 <= n_modes "
                f"and n_modes + n_qubits <= {MAX_BITS}"
            )

    @property
    def n_majoranas(self) -> int:
        return 2 * self.n_modes

    @property
    def n_bits(self) -> int:
        return self.n_modes + self.n_qubits

    @property
    def dim(self) -> int:
        return 1 << self.n_bits

    def mode_of(self, k: int) -> int:
        """Dirac mode (1-based) carrying Majorana ``k``."""
        self.check_index(k)
        return (k + 1) // 2

    def check_index(self, k: int) -> None:
        if not 1 <= k <= self.n_majoranas:
            raise MajoranaIndexError(f"Majorana index {k} outside 1..{self.n_majoranas}")

    def qubit_bit(self, q: int) -> int:
        """Bit position of the extra two-level register ``q`` (0-based)."""
        if not 0 <= q < self.n_qubits:
            raise MajoranaIndexError(f"register {q} outside 0..{self.n_qubits - 1}")
        return self.n_modes + q


def build_space(n_modes: int, n_qubits: int = 0) -> FockSpace:
    return FockSpace(n_modes, n_qubits)


def _popcount(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.int64)
    count = np.zeros_like(x)
    while np.any(x):
        count += x & 1
        x >>= 1
    return count


@dataclass(frozen=True, eq=False)
class MajoranaOperator:
    """A product of Majoranas (times a scalar), stored with one nonzero per row.

    Acting on a basis state: ``op |b> = phase[b] |b ^ flip>``.
    """

    space: FockSpace
    indices: tuple[int, ...]
    flip: int
    phase: np.ndarray

    def __matmul__(self, other: MajoranaOperator) -> MajoranaOperator:
        if other.space != self.space:
            raise DimensionMismatch("operators live on different spaces")
        idx = np.arange(self.space.dim)
        phase = self.phase[idx ^ other.flip] * other.phase
        return _frozen_op(self.space, self.indices + other.indices, self.flip ^ other.flip, phase)

    def scaled(self, c: complex) -> MajoranaOperator:
        return _frozen_op(self.space, self.indices, self.flip, c * self.phase)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        out = np.empty_like(vec, dtype=complex)
        out[np.arange(self.space.dim) ^ self.flip] = self.phase * vec
        return out

    def matrix(self):
        """Dense array up to ``DENSE_CUTOFF``, CSR sparse above."""
        dim = self.space.dim
        cols = np.arange(dim)
        rows = cols ^ self.flip
        if dim <= DENSE_CUTOFF:
            m = np.zeros((dim, dim), dtype=complex)
            m[rows, cols] = self.phase
            return m
        return sparse.csr_array((self.phase, (rows, cols)), shape=(dim, dim))

    def dense(self) -> np.ndarray:
        m = self.matrix()
        return m if isinstance(m, np.ndarray) else m.toarray()


def _frozen_op(space, indices, flip, phase) -> MajoranaOperator:
    phase = np.asarray(phase, dtype=complex)
    phase.setflags(write=False)
    return MajoranaOperator(space, tuple(indices), int(flip), phase)


def gamma(space: FockSpace, k: int) -> MajoranaOperator:
    """Jordan-Wigner Majorana ``gamma_k``: Z-string on lower modes, then X or Y."""
    m = space.mode_of(k)
    bit = m - 1
    basis = np.arange(space.dim)
    string = np.where(_popcount(basis & ((1 << bit) - 1)) % 2 == 1, -1.0, 1.0)
    if k % 2 == 1:
        local = np.ones(space.dim, dtype=complex)
    else:
        occupied = (basis >> bit) & 1
        local = np.where(occupied == 1, -1j, 1j)
    return _frozen_op(space, (k,), 1 << bit, string * local)


def majorana_product(space: FockSpace, indices) -> MajoranaOperator:
    indices = tuple(indices)
    if not indices:
        return _frozen_op(space, (), 0, np.ones(space.dim))
    op = gamma(space, indices[0])
    for k in indices[1:]:
        op = op @ gamma(space, k)
    return op


def identity_operator(space: FockSpace) -> MajoranaOperator:
    return majorana_product(space, ())


def total_parity(space: FockSpace) -> MajoranaOperator:
    """``prod_k (-i gamma_{2k-1} gamma_{2k})``, i.e. (-1)^N on the Dirac modes."""
    op = identity_operator(space)
    for m in range(1, space.n_modes + 1):
        op = op @ majorana_product(space, (2 * m - 1, 2 * m)).scaled(-1j)
    return op


def clifford_residuals(space: FockSpace) -> dict[str, float]:
    """Max Frobenius residuals of {g_i, g_j} = 2 delta_ij, g^dagger = g, g^2 = I."""
    n = space.n_majoranas
    mats = [gamma(space, k).dense() for k in range(1, n + 1)]
    eye = np.eye(space.dim)
    out = {"anticommutation": 0.0, "hermiticity": 0.0, "square": 0.0}
    for a in range(n):
        g = mats[a]
        out["hermiticity"] = max(out["hermiticity"], float(np.linalg.norm(g - g.conj().T)))
        out["square"] = max(out["square"], float(np.linalg.norm(g @ g - eye)))
        for b in range(a + 1, n):
            h = mats[b]
            out["anticommutation"] = max(out["anticommutation"], float(np.linalg.norm(g @ h + h @ g)))
    return out


class ParityObservable:
    """``-i g_a g_b`` for two indices, ``g_a g_b g_c g_d`` for four."""

    def __init__(self, space: FockSpace, indices):
        indices = tuple(int(k) for k in indices)
        if len(indices) not in (2, 4):
            raise ValueError("parity observables take 2 or 4 Majorana indices")
        if len(set(indices)) != len(indices):
            raise ValueError(f"repeated Majorana index in {indices}")
        for k in indices:
            space.check_index(k)
        op = majorana_product(space, indices)
        if len(indices) == 2:
            op = op.scaled(-1j)
        # Hermitian with unit-modulus phases: <b^f|O|b> = conj(<b|O|b^f>).
        partner = op.phase[np.arange(space.dim) ^ op.flip]
        if not np.allclose(partner, op.phase.conj(), atol=1e-12) or not np.allclose(
            np.abs(op.phase), 1.0, atol=1e-12
        ):
            raise ValueError(f"{indices} does not give a Hermitian +-1 observable")
        self.space = space
        self.indices = indices
        self.operator = op

    def __repr__(self):
        return f"ParityObservable({self.indices})"

    def project(self, vec: np.ndarray, outcome: int) -> np.ndarray:
        """Unnormalized ``(1 + outcome * O) / 2`` applied to ``vec``."""
        return 0.5 * (vec + outcome * self.operator.apply(vec))

    def expectation(self, state: StateVector) -> float:
        v = state.amplitudes
        return float(np.vdot(v, self.operator.apply(v)).real)


@dataclass(frozen=True, eq=False)
class StateVector:
    space: FockSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.space.dim,):
            raise DimensionMismatch(f"expected {self.space.dim} amplitudes, got {amps.shape}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise ValueError(f"state norm {norm!r} differs from 1")
        amps = amps.copy()
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, space: FockSpace, index: int = 0) -> StateVector:
        v = np.zeros(space.dim, dtype=complex)
        v[index] = 1.0
        return cls(space, v)

    @classmethod
    def normalized(cls, space: FockSpace, vec) -> StateVector:
        vec = np.asarray(vec, dtype=complex)
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(space, vec / norm)

    def overlap(self, other: StateVector) -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: StateVector) -> float:
        return abs(self.overlap(other)) ** 2


@dataclass(frozen=True, eq=False)
class Unitary:
    space: FockSpace
    matrix: object
    tag: str = "compiled"

    def dense(self) -> np.ndarray:
        m = self.matrix
        return m if isinstance(m, np.ndarray) else m.toarray()

    def __matmul__(self, other: Unitary) -> Unitary:
        """Operator product: ``(self @ other)`` applies ``other`` first."""
        if other.space != self.space:
            raise DimensionMismatch("unitaries live on different spaces")
        return Unitary(self.space, self.matrix @ other.matrix, "compiled")

    def dagger(self) -> Unitary:
        return Unitary(self.space, self.matrix.conj().T, self.tag)

    def unitarity_residual(self) -> float:
        m = self.dense()
        return float(np.linalg.norm(m.conj().T @ m - np.eye(self.space.dim)))


def identity_unitary(space: FockSpace) -> Unitary:
    if space.dim <= DENSE_CUTOFF:
        return Unitary(space, np.eye(space.dim, dtype=complex), "compiled")
    return Unitary(space, sparse.identity(space.dim, dtype=complex, format="csr"), "compiled")


def _pair_exponential(space: FockSpace, pair_op: MajoranaOperator, angle: float, tag: str) -> Unitary:
    # (g_a g_b)^2 = -1, so exp(angle g_a g_b) = cos(angle) + sin(angle) g_a g_b.
    ident = identity_unitary(space).matrix
    return Unitary(space, math.cos(angle) * ident + math.sin(angle) * pair_op.matrix(), tag)


def braid_unitary(space: FockSpace, i: int, j: int, sign: int = 1) -> Unitary:
    """Exchange of Majoranas ``i`` and ``j``: ``exp(sign * pi/4 * gamma_j gamma_i)``."""
    space.check_index(i)
    space.check_index(j)
    if i == j:
        raise InvalidExchange(f"cannot exchange Majorana {i} with itself")
    if sign not in (1, -1):
        raise InvalidExchange(f"sign must be +1 or -1, got {sign}")
    return _pair_exponential(space, gamma(space, j) @ gamma(space, i), sign * math.pi / 4, "braid")


def apply(u: Unitary, s: StateVector) -> StateVector:
    if u.space != s.space:
        raise DimensionMismatch("unitary and state live on different spaces")
    out = u.matrix @ s.amplitudes
    norm = np.linalg.norm(out)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"operator is not norm preserving (|U s| = {norm})")
    return StateVector(s.space, out / norm)


def apply_operator(op: MajoranaOperator, s: StateVector) -> StateVector:
    """Apply a unitary Majorana string (e.g. a single gamma) to a state."""
    return StateVector.normalized(s.space, op.apply(s.amplitudes))


class Measurement(NamedTuple):
    outcome: int
    post: StateVector
    prob: float


class Fusion(NamedTuple):
    occupancy: int
    post: StateVector
    prob: float


def outcome_probabilities(s: StateVector, o: ParityObservable) -> dict[int, float]:
    if o.space != s.space:
        raise DimensionMismatch("observable and state live on different spaces")
    plus = float(np.linalg.norm(o.project(s.amplitudes, +1)) ** 2)
    minus = float(np.linalg.norm(o.project(s.amplitudes, -1)) ** 2)
    return {+1: plus, -1: minus}


def measure(
    s: StateVector,
    o: ParityObservable,
    rng: np.random.Generator | None = None,
    force: int | None = None,
) -> Measurement:
    """Projective measurement with Born sampling, or a forced branch.

    ``force`` selects an outcome instead of sampling; its probability is still
    reported and must exceed ``ZERO_PROBABILITY``.
    """
    probs = outcome_probabilities(s, o)
    if force is None:
        if rng is None:
            raise ValueError("need an rng or a forced outcome")
        outcome = +1 if rng.random() < probs[+1] / (probs[+1] + probs[-1]) else -1
    else:
        if force not in (1, -1):
            raise ValueError("forced outcome must be +1 or -1")
        outcome = force
        if probs[outcome] < ZERO_PROBABILITY:
            raise ZeroProbabilityBranch(
                f"outcome {outcome:+d} of {o} has probability {probs[outcome]:.3e}"
            )
    post = StateVector.normalized(s.space, o.project(s.amplitudes, outcome))
    return Measurement(outcome, post, min(1.0, probs[outcome]))


def fuse_pair(
    s: StateVector,
    pair: tuple[int, int],
    rng: np.random.Generator | None = None,
    force: int | None = None,
) -> Fusion:
    """Fusion readout of a vortex pair: occupancy 0 <-> ``-i g_i g_j = +1``."""
    o = ParityObservable(s.space, pair)
    forced = None if force is None else (1 if force == 0 else -1)
    m = measure(s, o, rng, forced)
    return Fusion(0 if m.outcome == 1 else 1, m.post, m.prob)


def pair_number(space: FockSpace, pair: tuple[int, int]) -> np.ndarray:
    """Diagonal of the occupancy operator ``(1 + i g_a g_b) / 2``."""
    op = ParityObservable(space, pair).operator
    if op.flip != 0:
        raise ValueError(f"pair {pair} is not diagonal in the occupation basis")
    return (1.0 - op.phase.real) / 2.0


def annihilator(space: FockSpace, mode: int) -> np.ndarray:
    """Dense ``c_m = (gamma_{2m-1} + i gamma_{2m}) / 2``."""
    return 0.5 * (gamma(space, 2 * mode - 1).dense() + 1j * gamma(space, 2 * mode).dense())
