"""Flying-qubit entanglement generation (EG) and the CHSH test on vortex qubits.

Merge model: merging the two flying traps erases which-trap information, so
a one-atom count projects the flying pair onto the symmetric or antisymmetric
single-atom state. With ``erasure=False`` the count instead reveals the trap
(bare dephasing), which leaves the vortex qubits classically correlated.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .collision import cp_unitary
from .encoding import (
    LeakageError,
    RegisterLayout,
    allocate_register,
    embed_logical,
    extract_logical,
    qubit_leakage,
    register_gate,
)
from .gates import LOGICAL, apply_gate
from .majorana import StateVector, apply, fuse_pair, pair_number
from .streams import ProtocolTrace, stream

SQRT2 = math.sqrt(2)
TSIRELSON = 2 * SQRT2

BELL_STATE = np.array([1, 0, 0, 1]) / SQRT2


def eg_layout() -> RegisterLayout:
    return allocate_register(vortex=("V1", "V2"), flying=("F1", "F2"))


def _check_qubit(state, layout, qubit, what):
    leak = qubit_leakage(state, layout, qubit)
    if leak > 1e-12:
        raise LeakageError(leak, f"{what} on {qubit}")


def split_trap(state: StateVector, layout: RegisterLayout, flying: str) -> StateVector:
    """Split the composite trap: |0>_F -> (|0>_F + |1>_F)/sqrt(2)."""
    return apply(register_gate(layout, flying, LOGICAL["H"]), state)


def entangle_flying_vortex(
    state: StateVector,
    layout: RegisterLayout,
    flying: str,
    vortex: str,
    theta: float = math.pi,
    trace: ProtocolTrace | None = None,
) -> StateVector:
    """Hadamard on the vortex qubit, collision gate CP(theta), Hadamard again."""
    state = apply_gate(state, layout, vortex, "H")
    state = apply(cp_unitary(layout, flying, vortex, theta), state)
    state = apply_gate(state, layout, vortex, "H")
    _check_qubit(state, layout, vortex, "flying-vortex entangler")
    if trace is not None:
        trace.gate(f"H {vortex}")
        trace.gate(f"CP({theta:.6g}) {flying} {vortex}")
        trace.gate(f"H {vortex}")
    return state


@lru_cache(maxsize=None)
def eg_resource(layout: RegisterLayout, theta: float = math.pi) -> StateVector:
    """|Phi>_{F1 V1} |Phi>_{F2 V2} prepared from the vacuum."""
    state = layout.vacuum()
    for f, v in (("F1", "V1"), ("F2", "V2")):
        state = split_trap(state, layout, f)
        state = entangle_flying_vortex(state, layout, f, v, theta)
    return state


# Flying-pair states in |F1 F2> order: 00, 01, 10, 11.
_FLYING_STATES = {
    (0, None): np.array([1, 0, 0, 0]),
    (2, None): np.array([0, 0, 0, 1]),
    (1, "symmetric"): np.array([0, 1, 1, 0]) / SQRT2,
    (1, "antisymmetric"): np.array([0, 1, -1, 0]) / SQRT2,
    (1, "trap-01"): np.array([0, 1, 0, 0]),
    (1, "trap-10"): np.array([0, 0, 1, 0]),
}


def merge_branches(erasure: bool = True) -> list[tuple[int, str | None]]:
    ones = ["symmetric", "antisymmetric"] if erasure else ["trap-01", "trap-10"]
    return [(0, None)] + [(1, b) for b in ones] + [(2, None)]


def _flying_axes(state: StateVector, layout: RegisterLayout, f1: str, f2: str) -> np.ndarray:
    """Amplitudes as (rest..., F1 F2 combined index) with flying order |F1 F2>."""
    nq = layout.space.n_qubits
    nm = layout.space.n_modes
    tensor = state.amplitudes.reshape([2] * nq + [1 << nm])
    ax1 = nq - 1 - layout[f1].register
    ax2 = nq - 1 - layout[f2].register
    tensor = np.moveaxis(tensor, (ax1, ax2), (-2, -1))
    return tensor.reshape(tensor.shape[:-2] + (4,))


class EgOutcome(NamedTuple):
    atom_count: int
    parity_branch: str | None
    state: StateVector
    prob: float
    success: bool


def merge_probabilities(
    state: StateVector, layout: RegisterLayout, f1: str = "F1", f2: str = "F2", erasure: bool = True
) -> dict[tuple[int, str | None], float]:
    amps = _flying_axes(state, layout, f1, f2)
    out = {}
    for key in merge_branches(erasure):
        proj = amps @ _FLYING_STATES[key].conj()
        out[key] = float(np.vdot(proj, proj).real)
    return out


def merge_and_count(
    state: StateVector,
    layout: RegisterLayout,
    f1: str = "F1",
    f2: str = "F2",
    rng: np.random.Generator | None = None,
    erasure: bool = True,
    force: tuple[int, str | None] | None = None,
) -> EgOutcome:
    """Merge the two flying traps, count atoms, and discard the flying registers.

    The returned state lives on the layout with all flying registers removed;
    other flying registers, if any, must be in |0>.
    """
    probs = merge_probabilities(state, layout, f1, f2, erasure)
    keys = list(probs)
    if force is None:
        if rng is None:
            raise ValueError("need an rng or a forced branch")
        u = rng.random()
        cumulative = np.cumsum([probs[k] for k in keys])
        key = keys[min(int(np.searchsorted(cumulative, u * cumulative[-1], side="right")), len(keys) - 1)]
    else:
        key = force
    p = probs[key]
    if p < 1e-14:
        raise ValueError(f"merge branch {key} has probability {p:.3e}")
    reduced = _flying_axes(state, layout, f1, f2) @ _FLYING_STATES[key].conj()
    reduced = reduced.reshape(-1)
    other_flying = layout.space.n_qubits - 2
    if other_flying:
        # Remaining registers must be empty; keep the all-zero slice.
        rest = reduced.reshape(1 << other_flying, -1)
        if np.linalg.norm(rest[1:]) > 1e-12:
            raise ValueError("other flying registers are populated")
        reduced = rest[0]
    small = layout.without_flying()
    post = StateVector.normalized(small.space, reduced)
    return EgOutcome(key[0], key[1], post, p, key[0] == 1)


def correct_eg(outcome: EgOutcome, layout: RegisterLayout, trace: ProtocolTrace | None = None) -> StateVector:
    """Qubit-flip R on V1; the antisymmetric branch also needs Z = Lambda(pi) on V1."""
    state = apply_gate(outcome.state, layout, "V1", "R")
    if trace is not None:
        trace.correct("R V1")
    if outcome.parity_branch == "antisymmetric":
        state = apply_gate(state, layout, "V1", "Z")
        if trace is not None:
            trace.correct("Z V1")
    return state


def entanglement_generation(
    layout: RegisterLayout,
    rng: np.random.Generator | None = None,
    erasure: bool = True,
    force: tuple[int, str | None] | None = None,
    theta: float = math.pi,
) -> tuple[bool, StateVector, ProtocolTrace]:
    """One EG attempt. On success the V1 V2 state is (|00> + |11>)/sqrt(2) up to phase.

    The returned state lives on ``layout.without_flying()``; on failure it is
    the uncorrected post-measurement vortex state.
    """
    trace = ProtocolTrace()
    for f, v in (("F1", "V1"), ("F2", "V2")):
        trace.gate(f"split trap {f}")
        trace.gate(f"H {v}")
        trace.gate(f"CP({theta:.6g}) {f} {v}")
        trace.gate(f"H {v}")
    outcome = merge_and_count(eg_resource(layout, theta), layout, "F1", "F2", rng, erasure, force)
    trace.measure(f"atoms={outcome.atom_count} branch={outcome.parity_branch or '-'}", outcome.prob)
    small = layout.without_flying()
    state = correct_eg(outcome, small, trace) if outcome.success else outcome.state
    trace.success = outcome.success
    trace.final = state
    return outcome.success, state, trace


class EgBranch(NamedTuple):
    atom_count: int
    parity_branch: str | None
    prob: float
    state: StateVector
    bell_fidelity: float


def eg_branch_tree(layout: RegisterLayout | None = None, erasure: bool = True, theta: float = math.pi) -> list[EgBranch]:
    """Every merge outcome with its exact probability and (corrected) final state."""
    layout = layout or eg_layout()
    small = layout.without_flying()
    out = []
    for key in merge_branches(erasure):
        success, state, trace = entanglement_generation(layout, force=key, erasure=erasure, theta=theta)
        vec = extract_logical(state, small, ["V1", "V2"]).amplitudes
        out.append(EgBranch(key[0], key[1], trace.path_probability, state, abs(np.vdot(BELL_STATE, vec)) ** 2))
    return out


def sample_eg(layout: RegisterLayout, trials: int, seed: int, erasure: bool = True) -> np.ndarray:
    """Success flags of ``trials`` independent EG attempts, trial k on stream (seed, 'eg', k)."""
    resource = eg_resource(layout)
    flags = np.empty(trials, dtype=bool)
    for k in range(trials):
        outcome = merge_and_count(resource, layout, rng=stream(seed, "eg", k), erasure=erasure)
        flags[k] = outcome.success
    return flags


# --- CHSH --------------------------------------------------------------------

PAULI_Z = np.diag([1.0, -1.0]).astype(complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)

SINGLE_QUBIT_SETTINGS = {
    "A1": PAULI_Z,
    "A2": PAULI_X,
    "B1": -(PAULI_Z + PAULI_X) / SQRT2,
    "B2": (PAULI_Z - PAULI_X) / SQRT2,
}
CORRELATORS = (("A1", "B1"), ("A2", "B2"), ("A2", "B1"), ("A1", "B2"))
SIGNS = {("A1", "B1"): 1, ("A2", "B2"): 1, ("A2", "B1"): 1, ("A1", "B2"): -1}


def chsh_operator(a: str, b: str) -> np.ndarray:
    return np.kron(SINGLE_QUBIT_SETTINGS[a], SINGLE_QUBIT_SETTINGS[b])


def chsh_from_logical(psi_or_rho) -> dict[str, float]:
    """Exact correlators and L from a two-qubit vector or density matrix."""
    x = np.asarray(psi_or_rho, dtype=complex)
    rho = np.outer(x, x.conj()) if x.ndim == 1 else x
    out = {}
    for a, b in CORRELATORS:
        out[a + b] = float(np.trace(rho @ chsh_operator(a, b)).real)
    out["L"] = sum(SIGNS[ab] * out[ab[0] + ab[1]] for ab in CORRELATORS)
    if abs(out["L"]) > TSIRELSON + 1e-10:
        raise AssertionError(f"|L| = {abs(out['L'])} exceeds the Tsirelson bound")
    return out


def chsh_expectations(state: StateVector, layout: RegisterLayout, qubits=("V1", "V2")) -> dict[str, float]:
    ext = extract_logical(state, layout, list(qubits))
    if ext.leakage > 1e-12:
        raise LeakageError(ext.leakage, "CHSH input state")
    return chsh_from_logical(ext.amplitudes)


# Measurement pre-rotations as printed, in operator-product notation.
WRITTEN_SEQUENCES = {"A1": (), "A2": ("H",), "B1": ("H", "T", "H", "S"), "B2": ("H", "T", "H", "Sdg")}
ORDERINGS = ("right-to-left", "left-to-right")


class ConventionError(RuntimeError):
    pass


class CompiledSetting(NamedTuple):
    setting: str
    gates: tuple[str, ...]
    unitary: np.ndarray
    sign: int
    ordering: str


def _compile(setting: str, ordering: str) -> CompiledSetting | None:
    written = WRITTEN_SEQUENCES[setting]
    applied = tuple(reversed(written)) if ordering == "right-to-left" else written
    u = np.eye(2, dtype=complex)
    for g in applied:
        u = LOGICAL[g] @ u
    conj = u @ SINGLE_QUBIT_SETTINGS[setting] @ u.conj().T
    for sign in (1, -1):
        if np.allclose(conj, sign * PAULI_Z, atol=1e-12):
            return CompiledSetting(setting, applied, u, sign, ordering)
    return None


@lru_cache(maxsize=None)
def measurement_ordering() -> str:
    """The one product-ordering convention under which every printed sequence works."""
    for ordering in ORDERINGS:
        if all(_compile(s, ordering) is not None for s in WRITTEN_SEQUENCES):
            return ordering
    raise ConventionError("no ordering maps every setting's eigenbasis to the fusion basis")


def compile_chsh_setting(setting: str) -> CompiledSetting:
    """Pre-rotation (gates in time order) plus the sign relating fusion to the setting.

    Outcome value = ``sign * (+1 if fusion finds the pair empty else -1)``.
    """
    if setting not in WRITTEN_SEQUENCES:
        raise KeyError(f"unknown CHSH setting {setting!r}")
    compiled = _compile(setting, measurement_ordering())
    if compiled is None:
        raise ConventionError(f"setting {setting} fails the eigenbasis contract")
    return compiled


def _rotate(state, layout, qubit, compiled: CompiledSetting):
    for g in compiled.gates:
        state = apply_gate(state, layout, qubit, g)
    return state


def compiled_joint_distribution(state: StateVector, layout: RegisterLayout, a: str, b: str) -> np.ndarray:
    """p[i, j] of outcome values (+1, -1)[i] for A and (+1, -1)[j] for B via rotate-and-fuse."""
    ca, cb = compile_chsh_setting(a), compile_chsh_setting(b)
    rotated = _rotate(_rotate(state, layout, "V1", ca), layout, "V2", cb)
    n1 = pair_number(layout.space, layout["V1"].pairs[0])
    n2 = pair_number(layout.space, layout["V2"].pairs[0])
    weight = np.abs(rotated.amplitudes) ** 2
    p = np.zeros((2, 2))
    for o1 in (0, 1):
        for o2 in (0, 1):
            va = ca.sign * (1 - 2 * o1)
            vb = cb.sign * (1 - 2 * o2)
            p[(1 - va) // 2, (1 - vb) // 2] += weight[(n1 == o1) & (n2 == o2)].sum()
    return p


def direct_joint_distribution(logical, a: str, b: str) -> np.ndarray:
    """Born probabilities of measuring A (x) B directly on a logical two-qubit state."""
    x = np.asarray(logical, dtype=complex)
    rho = np.outer(x, x.conj()) if x.ndim == 1 else x
    p = np.zeros((2, 2))
    for i, va in enumerate((1, -1)):
        pa = (np.eye(2) + va * SINGLE_QUBIT_SETTINGS[a]) / 2
        for j, vb in enumerate((1, -1)):
            pb = (np.eye(2) + vb * SINGLE_QUBIT_SETTINGS[b]) / 2
            p[i, j] = np.trace(rho @ np.kron(pa, pb)).real
    return p


def measure_setting(state, layout, qubit, setting, rng) -> tuple[int, StateVector]:
    compiled = compile_chsh_setting(setting)
    state = _rotate(state, layout, qubit, compiled)
    fusion = fuse_pair(state, layout[qubit].pairs[0], rng)
    return compiled.sign * (1 - 2 * fusion.occupancy), fusion.post


def chsh_trial(layout: RegisterLayout, a: str, b: str, rng: np.random.Generator, erasure: bool = True, max_attempts: int = 1000):
    """Full pipeline for one trial: EG until success, then rotate-and-fuse both qubits."""
    small = layout.without_flying()
    for attempt in range(1, max_attempts + 1):
        success, state, _ = entanglement_generation(layout, rng, erasure)
        if success:
            break
    else:
        raise RuntimeError(f"EG failed {max_attempts} times in a row")
    va, state = measure_setting(state, small, "V1", a, rng)
    vb, _ = measure_setting(state, small, "V2", b, rng)
    return va, vb, attempt


class ChshSample(NamedTuple):
    estimates: dict[str, float]
    stderr: dict[str, float]
    L_hat: float
    sigma: float
    mean_attempts: float


def source_distributions(layout: RegisterLayout, erasure: bool = True, state: StateVector | None = None):
    """(weight, post-EG V1 V2 state) pairs describing what a trial measures, and the EG success probability."""
    if state is not None:
        return [(1.0, state)], 1.0
    branches = [b for b in eg_branch_tree(layout, erasure) if b.atom_count == 1]
    total = sum(b.prob for b in branches)
    return [(b.prob / total, b.state) for b in branches], total


def chsh_sample(
    trials: int,
    seed: int,
    layout: RegisterLayout | None = None,
    erasure: bool = True,
    state: StateVector | None = None,
) -> ChshSample:
    """Sampled correlators with ``trials`` runs per setting pair.

    Each run's outcome pair is drawn from the exact joint distribution of the
    simulated pipeline (EG branch, pre-rotations, two fusions); the branch
    mixture is built once, so the sampler is vectorized over trials. Trial
    streams derive from ``(seed, 'chsh', a+b)``.
    """
    if trials < 100:
        raise ValueError("need at least 100 trials per setting")
    layout = layout or eg_layout()
    small = layout.without_flying()
    sources, p_success = source_distributions(layout, erasure, state)
    estimates, stderr = {}, {}
    attempts = []
    for a, b in CORRELATORS:
        p = sum(w * compiled_joint_distribution(s, small, a, b) for w, s in sources).ravel()
        rng = stream(seed, "chsh", a + b)
        draws = rng.choice(4, size=trials, p=p / p.sum())
        if state is None:
            attempts.append(rng.geometric(p_success, size=trials).mean())
        products = np.array([1, -1, -1, 1])[draws]
        mean = float(products.mean())
        estimates[a + b] = mean
        stderr[a + b] = float(products.std(ddof=1) / math.sqrt(trials))
    l_hat = sum(SIGNS[ab] * estimates[ab[0] + ab[1]] for ab in CORRELATORS)
    sigma = math.sqrt(sum(s**2 for s in stderr.values()))
    return ChshSample(estimates, stderr, l_hat, sigma, float(np.mean(attempts)) if attempts else 0.0)


def product_logical_state(rng: np.random.Generator) -> np.ndarray:
    def one():
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        return v / np.linalg.norm(v)

    return np.kron(one(), one())


def embed_pair(layout: RegisterLayout, logical) -> StateVector:
    return embed_logical(layout, ["V1", "V2"], np.asarray(logical, dtype=complex))
