"""Logical qubits on top of the Majorana engine.

A vortex qubit owns four Majoranas forming two Dirac pairs; ``|0>_V`` has
both pairs empty and ``|1>_V`` both occupied. Flying qubits are plain
two-level registers. Multi-qubit logical vectors list the first named qubit
as the most significant factor, i.e. ``|q1 q2 ...>`` in Kronecker order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .majorana import FockSpace, StateVector, Unitary

LEAKAGE_TOLERANCE = 1e-12


class LayoutError(ValueError):
    pass


class LeakageError(RuntimeError):
    def __init__(self, norm: float, what: str = "operator"):
        super().__init__(f"{what} leaves the logical sector (off-block norm {norm:.3e})")
        self.norm = norm


@dataclass(frozen=True)
class VortexQubit:
    name: str
    majoranas: tuple[int, int, int, int]

    @property
    def pairs(self) -> tuple[tuple[int, int], tuple[int, int]]:
        v = self.majoranas
        return (v[0], v[1]), (v[2], v[3])

    @property
    def modes(self) -> tuple[int, int]:
        return tuple((p[0] + 1) // 2 for p in self.pairs)


@dataclass(frozen=True)
class FlyingQubit:
    name: str
    register: int


@dataclass(frozen=True)
class AncillaPair:
    name: str
    majoranas: tuple[int, int]

    @property
    def mode(self) -> int:
        return (self.majoranas[0] + 1) // 2


@dataclass(frozen=True)
class RegisterLayout:
    vortex: tuple[VortexQubit, ...]
    flying: tuple[FlyingQubit, ...]
    ancilla: tuple[AncillaPair, ...]
    space: FockSpace

    def __getitem__(self, name: str):
        for item in self.vortex + self.flying + self.ancilla:
            if item.name == name:
                return item
        raise KeyError(name)

    def without_flying(self) -> RegisterLayout:
        return RegisterLayout(self.vortex, (), self.ancilla, FockSpace(self.space.n_modes))

    def vacuum(self) -> StateVector:
        return StateVector.basis(self.space, 0)

    def logical_bits(self, name: str) -> int:
        """Bit mask flipped between logical ``|0>`` and ``|1>`` of a qubit."""
        item = self[name]
        if isinstance(item, VortexQubit):
            m1, m2 = item.modes
            return (1 << (m1 - 1)) | (1 << (m2 - 1))
        if isinstance(item, FlyingQubit):
            return 1 << self.space.qubit_bit(item.register)
        raise LayoutError(f"{name} is an ancilla pair, not a qubit")


def _check_mode_pair(pair, owner):
    a, b = pair
    if a % 2 != 1 or b != a + 1:
        raise LayoutError(f"{owner}: pair {pair} is not a pairing-convention pair (2k-1, 2k)")


def allocate_register(
    vortex=(),
    flying=(),
    ancilla=(),
    indices: dict[str, tuple[int, ...]] | None = None,
) -> RegisterLayout:
    """Assign Majorana indices to named vortex qubits and ancilla pairs.

    Without ``indices`` the assignment is consecutive: vortex qubits in the
    given order, then ancilla pairs. ``indices`` overrides it per name; every
    Majorana of the resulting space must be used exactly once.
    """
    names = list(vortex) + list(flying) + list(ancilla)
    if len(set(names)) != len(names):
        raise LayoutError(f"duplicate register name in {names}")
    indices = dict(indices or {})
    unknown = set(indices) - set(vortex) - set(ancilla)
    if unknown:
        raise LayoutError(f"index assignment for unknown register(s) {sorted(unknown)}")

    n_majoranas = 4 * len(vortex) + 2 * len(ancilla)
    if n_majoranas == 0:
        raise LayoutError("layout needs at least one vortex qubit or ancilla pair")
    auto = iter(range(1, n_majoranas + 1))
    assigned: dict[str, tuple[int, ...]] = {}
    for name, width in [(v, 4) for v in vortex] + [(a, 2) for a in ancilla]:
        if name in indices:
            idx = tuple(int(k) for k in indices[name])
            if len(idx) != width:
                raise LayoutError(f"{name} needs {width} Majorana indices, got {idx}")
        else:
            idx = tuple(next(auto) for _ in range(width))
        assigned[name] = idx
    if indices:
        flat = [k for idx in assigned.values() for k in idx]
        seen = set()
        for k in flat:
            if k in seen:
                raise LayoutError(f"Majorana index {k} assigned twice")
            seen.add(k)
        if seen != set(range(1, n_majoranas + 1)):
            raise LayoutError(f"indices must cover 1..{n_majoranas} exactly once")

    vq = []
    for name in vortex:
        q = VortexQubit(name, assigned[name])
        for pair in q.pairs:
            _check_mode_pair(pair, name)
        vq.append(q)
    anc = []
    for name in ancilla:
        a = AncillaPair(name, assigned[name])
        _check_mode_pair(a.majoranas, name)
        anc.append(a)
    fq = tuple(FlyingQubit(name, r) for r, name in enumerate(flying))
    space = FockSpace(n_majoranas // 2, len(fq))
    return RegisterLayout(tuple(vq), fq, tuple(anc), space)


def logical_basis(layout: RegisterLayout, qubits) -> np.ndarray:
    """Columns are the physical embeddings of the logical basis (rest in vacuum)."""
    masks = [layout.logical_bits(q) for q in qubits]
    n = len(masks)
    basis = np.zeros((layout.space.dim, 1 << n), dtype=complex)
    for col in range(1 << n):
        idx = 0
        for pos, mask in enumerate(masks):
            if (col >> (n - 1 - pos)) & 1:
                idx |= mask
        basis[idx, col] = 1.0
    return basis


def embed_logical(layout: RegisterLayout, qubits, amplitudes) -> StateVector:
    """Physical state for a (possibly entangled) logical vector over ``qubits``."""
    amps = np.asarray(amplitudes, dtype=complex)
    if amps.shape != (1 << len(qubits),):
        raise ValueError(f"need {1 << len(qubits)} amplitudes for {len(qubits)} qubit(s)")
    if abs(np.linalg.norm(amps) - 1.0) > 1e-12:
        raise ValueError("logical amplitudes are not normalized")
    return StateVector(layout.space, logical_basis(layout, qubits) @ amps)


def encode_logical(layout: RegisterLayout, qubit: str, amplitudes) -> StateVector:
    return embed_logical(layout, [qubit], amplitudes)


def encode_product(layout: RegisterLayout, states: dict[str, object]) -> StateVector:
    qubits = list(states)
    vec = np.ones(1, dtype=complex)
    for q in qubits:
        vec = np.kron(vec, np.asarray(states[q], dtype=complex))
    return embed_logical(layout, qubits, vec)


class LogicalExtract(NamedTuple):
    amplitudes: np.ndarray
    leakage: float


def extract_logical(state: StateVector, layout: RegisterLayout, qubits) -> LogicalExtract:
    amps = logical_basis(layout, qubits).conj().T @ state.amplitudes
    leakage = max(0.0, 1.0 - float(np.vdot(amps, amps).real))
    return LogicalExtract(amps, leakage)


class LogicalBlock(NamedTuple):
    matrix: np.ndarray
    off_block_norm: float


def logical_gate_of(u: Unitary, layout: RegisterLayout, qubits, tolerance: float = LEAKAGE_TOLERANCE) -> LogicalBlock:
    basis = logical_basis(layout, qubits)
    image = u.matrix @ basis
    block = basis.conj().T @ image
    off = float(np.linalg.norm(image - basis @ block))
    if off >= tolerance:
        raise LeakageError(off)
    return LogicalBlock(block, off)


def phase_aligned_residual(achieved: np.ndarray, target: np.ndarray) -> tuple[float, complex]:
    """``min_phase |achieved - phase * target|`` and the minimizing phase."""
    inner = np.vdot(target, achieved)
    phase = inner / abs(inner) if abs(inner) > 1e-15 else 1.0
    return float(np.linalg.norm(achieved - phase * target)), complex(phase)


def schmidt_coefficients(two_qubit: np.ndarray) -> np.ndarray:
    return np.linalg.svd(np.asarray(two_qubit).reshape(2, 2), compute_uv=False)


def qubit_leakage(state: StateVector, layout: RegisterLayout, qubit: str) -> float:
    """Population of a vortex qubit's odd sectors (one pair occupied, the other empty)."""
    m1, m2 = layout[qubit].modes
    idx = np.arange(layout.space.dim)
    odd = ((idx >> (m1 - 1)) ^ (idx >> (m2 - 1))) & 1
    return float(np.sum(np.abs(state.amplitudes[odd == 1]) ** 2))


def register_gate(layout: RegisterLayout, flying: str, gate) -> Unitary:
    """Single-register gate (2x2) on a flying qubit, identity elsewhere."""
    gate = np.asarray(gate, dtype=complex)
    bit = layout.space.qubit_bit(layout[flying].register)
    dim = layout.space.dim
    idx = np.arange(dim)
    b = (idx >> bit) & 1
    m = np.zeros((dim, dim), dtype=complex)
    m[idx, idx] = gate[b, b]
    m[idx ^ (1 << bit), idx] = gate[1 - b, b]
    return Unitary(layout.space, m, "compiled")
