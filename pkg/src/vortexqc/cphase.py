"""Deterministic controlled-phase gate between vortex qubits G and Q.

The four-Majorana rotation exp(i pi/4 gG1 gG2 gQ1 gQ2) is realized with one
extra vortex pair W in |0>_W: measure the four-Majorana parity gG1 gG2 gQ2 gW1
(nu), then the two-Majorana parity -i gQ1 gW1 (mu), then apply a braid
recovery U[mu, nu]. Every branch then carries the same logical map, so the gate
is deterministic. Single-qubit phase words turn the rotation into diag(1, 1, 1, -1).
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .encoding import (
    LeakageError,
    RegisterLayout,
    allocate_register,
    embed_logical,
    extract_logical,
    logical_basis,
    logical_gate_of,
    phase_aligned_residual,
    qubit_leakage,
)
from .gates import LOGICAL, apply_gate, gate_unitary
from .majorana import (
    ParityObservable,
    StateVector,
    Unitary,
    annihilator,
    apply,
    braid_unitary,
    fuse_pair,
    majorana_product,
    measure,
    pair_number,
)
from .streams import ProtocolTrace, stream

BRANCHES = ((1, 1), (1, -1), (-1, 1), (-1, -1))
CZ = np.diag([1, 1, 1, -1]).astype(complex)
W_TOLERANCE = 1e-12


class PreconditionError(ValueError):
    pass


class Roles(NamedTuple):
    G1: int
    G2: int
    Q1: int
    Q2: int
    W1: int
    W2: int


def cphase_layout() -> RegisterLayout:
    return allocate_register(vortex=("G", "Q"), ancilla=("W",))


def roles(layout: RegisterLayout) -> Roles:
    g, q, w = layout["G"].majoranas, layout["Q"].majoranas, layout["W"].majoranas
    return Roles(g[0], g[1], q[0], q[1], w[0], w[1])


def w_population(state: StateVector, layout: RegisterLayout) -> float:
    """Probability that the W pair is occupied."""
    n = pair_number(layout.space, layout["W"].majoranas)
    return float(np.sum(np.abs(state.amplitudes[n == 1]) ** 2))


def _require_w_vacant(state: StateVector, layout: RegisterLayout) -> None:
    pop = w_population(state, layout)
    if pop > W_TOLERANCE:
        raise PreconditionError(f"W pair must start in |0>_W (occupied with probability {pop:.3e})")


def four_majorana_target(layout: RegisterLayout) -> np.ndarray:
    """exp(i pi/4 gG1 gG2 gQ1 gQ2) = cos(pi/4) I + i sin(pi/4) gG1 gG2 gQ1 gQ2 (the product squares to I)."""
    r = roles(layout)
    prod = majorana_product(layout.space, (r.G1, r.G2, r.Q1, r.Q2)).dense()
    return (np.eye(layout.space.dim) + 1j * prod) / math.sqrt(2)


def p2_observable(layout: RegisterLayout) -> ParityObservable:
    r = roles(layout)
    return ParityObservable(layout.space, (r.Q1, r.W1))


def p4_observable(layout: RegisterLayout) -> ParityObservable:
    r = roles(layout)
    return ParityObservable(layout.space, (r.G1, r.G2, r.Q2, r.W1))


def projector(observable: ParityObservable, outcome: int) -> np.ndarray:
    return (np.eye(observable.space.dim) + outcome * observable.operator.dense()) / 2


@lru_cache(maxsize=None)
def recovery_unitaries(layout: RegisterLayout, form: str = "corrected") -> dict[tuple[int, int], Unitary]:
    """Recoveries keyed by (mu, nu).

    Both forms share U[+,+] = E and U[-,-] = E^dagger with E = exp(pi/4 gQ1 gW2).
    The mixed branches are Z_G Z_Q E^{+-1} ("corrected") or the literal
    i Lambda_G(i) Lambda_Q(i) E^{+-1} with Lambda(i) = diag(1, i) ("literal"),
    which fails the identity and serves as a documented negative result.
    """
    r = roles(layout)
    e = braid_unitary(layout.space, r.W2, r.Q1, +1)
    if form == "corrected":
        flip = gate_unitary(layout, "G", "Z") @ gate_unitary(layout, "Q", "Z")
        mixed = flip
    elif form == "literal":
        s = gate_unitary(layout, "G", "S") @ gate_unitary(layout, "Q", "S")
        mixed = Unitary(layout.space, 1j * s.dense(), "compiled")
    elif form == "identity":
        one = Unitary(layout.space, np.eye(layout.space.dim, dtype=complex), "compiled")
        return {b: one for b in BRANCHES}
    else:
        raise ValueError(f"unknown recovery form {form!r}")
    return {(1, 1): e, (-1, -1): e.dagger(), (1, -1): mixed @ e, (-1, 1): mixed @ e.dagger()}


def branch_operator(layout: RegisterLayout, mu: int, nu: int, form: str = "corrected") -> np.ndarray:
    """2 U[mu, nu] P2[mu] P4[nu] as a dense matrix; P4 acts first."""
    u = recovery_unitaries(layout, form)[(mu, nu)].dense()
    return 2 * u @ projector(p2_observable(layout), mu) @ projector(p4_observable(layout), nu)


class Eq9Branch(NamedTuple):
    mu: int
    nu: int
    residual: float
    leakage: float
    phase: complex


def eq9_branch_maps(layout: RegisterLayout, form: str = "corrected") -> list[Eq9Branch]:
    """Per-branch logical map on W-vacant inputs, compared with the four-Majorana rotation."""
    basis = logical_basis(layout, ["G", "Q"])
    target = basis.conj().T @ four_majorana_target(layout) @ basis
    out = []
    for mu, nu in BRANCHES:
        image = branch_operator(layout, mu, nu, form) @ basis
        block = basis.conj().T @ image
        leak = float(np.linalg.norm(image - basis @ block))
        residual, phase = phase_aligned_residual(block, target)
        out.append(Eq9Branch(mu, nu, residual, leak, phase))
    return out


def random_logical_states(layout: RegisterLayout, count: int, seed: int) -> list[StateVector]:
    """Haar-like random two-qubit logical inputs on G, Q with W in |0>_W."""
    rng = stream(seed, "logical-inputs")
    states = []
    for _ in range(count):
        v = rng.normal(size=4) + 1j * rng.normal(size=4)
        states.append(embed_logical(layout, ["G", "Q"], v / np.linalg.norm(v)))
    return states


class Eq9Report(NamedTuple):
    residual: float
    branches: list[Eq9Branch]
    probabilities: np.ndarray


def verify_eq9_identity(
    layout: RegisterLayout | None = None,
    states: list[StateVector] | None = None,
    form: str = "corrected",
    count: int = 100,
    seed: int = 0,
) -> Eq9Report:
    """Check 2 U P2 P4 against the four-Majorana rotation, per branch, on W-vacant inputs.

    The residual is the max over branches and inputs of the distance between
    the branch output and the rotated input, with one global phase per branch
    (fixed from the full logical map, so it cannot vary between inputs).
    ``probabilities[k, b]`` is the Born weight of branch b for input k.
    """
    layout = layout or cphase_layout()
    if states is None:
        states = random_logical_states(layout, count, seed)
    branches = eq9_branch_maps(layout, form)
    target = four_majorana_target(layout)
    worst = max(max(b.residual, b.leakage) for b in branches)
    probs = np.zeros((len(states), len(BRANCHES)))
    for k, s in enumerate(states):
        _require_w_vacant(s, layout)
        want = target @ s.amplitudes
        for col, b in enumerate(branches):
            m = branch_operator(layout, b.mu, b.nu, form)
            got = m @ s.amplitudes
            probs[k, col] = float(np.vdot(got, got).real) / 4
            worst = max(worst, float(np.linalg.norm(got - b.phase * want)))
    return Eq9Report(worst, branches, probs)


# --- P2 realizations --------------------------------------------------------


class P2Result(NamedTuple):
    outcome: int
    post: StateVector
    prob: float
    w_recreated_population: float


def projective_p2(state: StateVector, layout: RegisterLayout, rng=None, force: int | None = None) -> P2Result:
    """Born-rule measurement of -i gQ1 gW1; mu = +1 selects (1 - i gQ1 gW1)/2."""
    m = measure(state, p2_observable(layout), rng, force)
    return P2Result(m.outcome, m.post, m.prob, w_population(m.post, layout))


def projective_p4(state: StateVector, layout: RegisterLayout, rng=None, force: int | None = None):
    return measure(state, p4_observable(layout), rng, force)


@lru_cache(maxsize=None)
def p2_basis_exchange(layout: RegisterLayout) -> Unitary:
    """The exchange of Q1 and W2 that carries -i gQ1 gW1 onto the W pair parity -i gW1 gW2.

    Exchanging Q1 with W1 itself would commute with the measured operator, so
    the braid pairs Q1 with the other W Majorana. The sign is chosen so the
    image is +(-i gW1 gW2), making "W empty" the mu = +1 outcome.
    """
    r = roles(layout)
    o = p2_observable(layout).operator.dense()
    pw = ParityObservable(layout.space, (r.W1, r.W2)).operator.dense()
    for sign in (1, -1):
        v = braid_unitary(layout.space, r.Q1, r.W2, sign)
        vd = v.dense()
        if np.allclose(vd @ o @ vd.conj().T, pw, atol=1e-12):
            return v
    raise AssertionError("no exchange maps the P2 operator onto the W parity")


def p2_via_basis_transform(
    state: StateVector, layout: RegisterLayout, rng=None, force: int | None = None, trace: ProtocolTrace | None = None
) -> P2Result:
    """P2 from braids and a fusion: exchange, fuse W, re-create W empty, restore, exchange back.

    In the occupied branch the pair is emptied with c_W (W re-created in
    |0>_W), then its occupation is restored with c_W^dagger, which is the
    flip that makes the measurement non-destructive. ``force`` is mu.
    """
    v = p2_basis_exchange(layout)
    w = layout["W"]
    rotated = apply(v, state)
    fusion = fuse_pair(rotated, w.majoranas, rng, None if force is None else (1 - force) // 2)
    mu = 1 - 2 * fusion.occupancy
    post = fusion.post
    recreated = 0.0
    if trace is not None:
        trace.gate("exchange Q1 W2")
        trace.measure(f"fuse W occupancy={fusion.occupancy}", fusion.prob)
    if fusion.occupancy == 1:
        c = annihilator(layout.space, w.mode)
        emptied = StateVector.normalized(layout.space, c @ post.amplitudes)
        recreated = w_population(emptied, layout)
        post = StateVector.normalized(layout.space, c.conj().T @ emptied.amplitudes)
        if trace is not None:
            trace.correct("re-create W in |0>_W")
            trace.correct("restore W occupation")
    post = apply(v.dagger(), post)
    if trace is not None:
        trace.gate("exchange Q1 W2 inverse")
    return P2Result(mu, post, fusion.prob, recreated)


P2_MODES = ("projective", "basis-transform")


# --- full gate --------------------------------------------------------------


def resource_check(rng=None) -> float:
    """Produce an EG Bell pair (the resource for the four-Majorana measurement); returns its fidelity."""
    from .protocols import BELL_STATE, eg_layout, entanglement_generation

    layout = eg_layout()
    for _ in range(1000):
        force = None if rng is not None else (1, "symmetric")
        success, state, _ = entanglement_generation(layout, rng, force=force)
        if success:
            v = extract_logical(state, layout.without_flying(), ["V1", "V2"]).amplitudes
            return abs(np.vdot(BELL_STATE, v)) ** 2
    raise RuntimeError("EG resource not produced in 1000 attempts")


def controlled_phase_sigma_z(
    state: StateVector,
    layout: RegisterLayout,
    rng=None,
    p2: str = "projective",
    force: tuple[int, int] | None = None,
    form: str = "corrected",
    resource: bool = False,
) -> tuple[StateVector, ProtocolTrace]:
    """Apply Lambda(sigma_z) to G, Q. ``force`` = (mu, nu) pins the measurement branches."""
    if p2 not in P2_MODES:
        raise ValueError(f"p2 must be one of {P2_MODES}")
    _require_w_vacant(state, layout)
    for q in ("G", "Q"):
        leak = qubit_leakage(state, layout, q)
        if leak > 1e-12:
            raise LeakageError(leak, f"input on {q}")
    trace = ProtocolTrace()
    if resource:
        fid = resource_check(rng)
        if fid < 1 - 1e-12:
            raise RuntimeError(f"EG resource fidelity {fid}")
        trace.gate("EG resource ready")
    mu_f, nu_f = force if force is not None else (None, None)
    m4 = projective_p4(state, layout, rng, nu_f)
    trace.measure(f"P4 nu={m4.outcome:+d}", m4.prob)
    if p2 == "projective":
        m2 = projective_p2(m4.post, layout, rng, mu_f)
        trace.measure(f"P2 mu={m2.outcome:+d}", m2.prob)
    else:
        m2 = p2_via_basis_transform(m4.post, layout, rng, mu_f, trace)
    key = (m2.outcome, m4.outcome)
    out = apply(recovery_unitaries(layout, form)[key], m2.post)
    trace.correct(f"U[{key[0]:+d},{key[1]:+d}]")
    for q in ("G", "Q"):
        out = apply_gate(out, layout, q, "Sdg")
        trace.gate(f"Lambda(-pi/2) {q}")
    pop = w_population(out, layout)
    leak = max(qubit_leakage(out, layout, q) for q in ("G", "Q"))
    if pop > W_TOLERANCE or leak > 1e-12:
        raise LeakageError(max(pop, leak), "controlled-phase exit check")
    trace.final = out
    return out, trace


def cz_branch_maps(layout: RegisterLayout, form: str = "corrected") -> list[Eq9Branch]:
    """Per-branch logical map of the whole gate vs diag(1, 1, 1, -1)."""
    basis = logical_basis(layout, ["G", "Q"])
    s = (gate_unitary(layout, "G", "Sdg") @ gate_unitary(layout, "Q", "Sdg")).dense()
    out = []
    for mu, nu in BRANCHES:
        image = s @ branch_operator(layout, mu, nu, form) @ basis
        block = basis.conj().T @ image
        leak = float(np.linalg.norm(image - basis @ block))
        residual, phase = phase_aligned_residual(block, CZ)
        out.append(Eq9Branch(mu, nu, residual, leak, phase))
    return out


def gaussian_splitting(width: float = 1e-6, total_phase: float = math.pi / 2):
    """Gaussian splitting profile Delta E(t) (J) whose integral over all t is hbar * total_phase."""
    from scipy.constants import hbar

    amp = hbar * total_phase / (math.sqrt(math.pi) * width)
    return lambda t: amp * math.exp(-((t / width) ** 2))


def universal_set_report(layout: RegisterLayout | None = None) -> dict[str, float]:
    """Max residuals of H (braid word), Lambda(e^{i pi/4}) (tunneling), and Lambda(sigma_z) (protocol)."""
    from .collision import calibrate_t_p, tunneling_phase_gate, tunneling_unitary

    layout = layout or cphase_layout()
    h = logical_gate_of(gate_unitary(layout, "G", "H"), layout, ["G"]).matrix
    h_res, _ = phase_aligned_residual(h, LOGICAL["H"])

    profile = gaussian_splitting(width=1e-6)
    t_p = calibrate_t_p(profile, math.pi / 4, bracket=(1e-9, 1e-5))
    gate = tunneling_phase_gate(profile, t_p)
    physical = logical_gate_of(tunneling_unitary(layout, "G", gate.phi), layout, ["G"]).matrix
    t_res = max(phase_aligned_residual(gate.matrix, LOGICAL["T"])[0], phase_aligned_residual(physical, LOGICAL["T"])[0])
    t8 = np.linalg.matrix_power(gate.matrix, 8)
    t8_res, _ = phase_aligned_residual(t8, np.eye(2))

    branches = cz_branch_maps(layout)
    cz_res = max(max(b.residual, b.leakage) for b in branches)
    z1 = np.kron(np.diag([1, -1]), np.eye(2))
    z2 = np.kron(np.eye(2), np.diag([1, -1]))
    commute = 0.0
    for b in branches:
        basis = logical_basis(layout, ["G", "Q"])
        s = (gate_unitary(layout, "G", "Sdg") @ gate_unitary(layout, "Q", "Sdg")).dense()
        block = basis.conj().T @ s @ branch_operator(layout, b.mu, b.nu) @ basis
        commute = max(commute, np.linalg.norm(block @ z1 - z1 @ block), np.linalg.norm(block @ z2 - z2 @ block))
    return {
        "H": h_res,
        "T": t_res,
        "T^8": t8_res,
        "CZ": cz_res,
        "CZ_commutes_Z": float(commute),
        "t_p": t_p,
    }
