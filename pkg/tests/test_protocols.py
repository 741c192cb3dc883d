from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vortexqc.encoding import LeakageError, extract_logical, phase_aligned_residual, schmidt_coefficients
from vortexqc.majorana import StateVector
from vortexqc.protocols import (
    BELL_STATE,
    SINGLE_QUBIT_SETTINGS,
    TSIRELSON,
    WRITTEN_SEQUENCES,
    _compile,
    chsh_expectations,
    chsh_from_logical,
    chsh_sample,
    chsh_trial,
    compile_chsh_setting,
    compiled_joint_distribution,
    direct_joint_distribution,
    eg_branch_tree,
    eg_layout,
    eg_resource,
    embed_pair,
    entangle_flying_vortex,
    entanglement_generation,
    measurement_ordering,
    merge_and_count,
    merge_probabilities,
    product_logical_state,
    split_trap,
)
from vortexqc.streams import stream

LAYOUT = eg_layout()
SMALL = LAYOUT.without_flying()
S2 = 1 / math.sqrt(2)


def prepared(v_one: bool = False) -> StateVector:
    s = StateVector.basis(LAYOUT.space, LAYOUT.logical_bits("V1") if v_one else 0)
    return split_trap(s, LAYOUT, "F1")


def test_flying_vortex_entangler_nominal():
    out = entangle_flying_vortex(prepared(), LAYOUT, "F1", "V1")
    amps = extract_logical(out, LAYOUT, ["F1", "V1"]).amplitudes
    assert abs(np.vdot(BELL_STATE, amps)) ** 2 >= 1 - 1e-12


def test_flying_vortex_entangler_from_one_full_vector():
    out = entangle_flying_vortex(prepared(v_one=True), LAYOUT, "F1", "V1")
    want = np.zeros(LAYOUT.space.dim, dtype=complex)
    want[0b11] = S2  # |0>_F |1>_V
    want[1 << 4] = S2  # |1>_F |0>_V
    assert phase_aligned_residual(out.amplitudes, want)[0] < 1e-12


def test_flying_vortex_entangler_without_collision_is_product():
    out = entangle_flying_vortex(prepared(), LAYOUT, "F1", "V1", theta=0.0)
    amps = extract_logical(out, LAYOUT, ["F1", "V1"]).amplitudes
    assert schmidt_coefficients(amps)[1] < 1e-12


def test_entangler_rejects_leaky_input():
    leaky = StateVector.basis(LAYOUT.space, 0b01)
    with pytest.raises(LeakageError):
        entangle_flying_vortex(leaky, LAYOUT, "F1", "V1")


def test_merge_probabilities_exact():
    tree = eg_branch_tree(LAYOUT)
    probs = {}
    for b in tree:
        probs[b.atom_count] = probs.get(b.atom_count, 0) + b.prob
    assert abs(probs[0] - 0.25) < 1e-12
    assert abs(probs[1] - 0.5) < 1e-12
    assert abs(probs[2] - 0.25) < 1e-12


def test_failed_branches_are_product_states():
    tree = {b.atom_count: b for b in eg_branch_tree(LAYOUT)}
    zero = extract_logical(tree[0].state, SMALL, ["V1", "V2"]).amplitudes
    two = extract_logical(tree[2].state, SMALL, ["V1", "V2"]).amplitudes
    assert np.isclose(abs(zero[0]), 1.0)
    assert np.isclose(abs(two[3]), 1.0)


def test_empty_traps_give_zero_atoms():
    probs = merge_probabilities(LAYOUT.vacuum(), LAYOUT)
    assert probs[(0, None)] == 1.0
    out = merge_and_count(LAYOUT.vacuum(), LAYOUT, rng=np.random.default_rng(0))
    assert out.atom_count == 0 and not out.success


def test_eg_success_branches_reach_bell_state():
    for b in eg_branch_tree(LAYOUT):
        if b.atom_count == 1:
            assert b.bell_fidelity >= 1 - 1e-12
    success, state, trace = entanglement_generation(LAYOUT, force=(1, "antisymmetric"))
    assert success
    assert [s.detail for s in trace.steps if s.kind == "correct"] == ["R V1", "Z V1"]
    assert math.isclose(trace.path_probability, 0.25)


def test_symmetric_branch_before_correction_is_anticorrelated():
    out = merge_and_count(eg_resource(LAYOUT), LAYOUT, force=(1, "symmetric"))
    amps = extract_logical(out.state, SMALL, ["V1", "V2"]).amplitudes
    assert phase_aligned_residual(amps, np.array([0, S2, S2, 0]))[0] < 1e-12


def test_dephasing_merge_gives_no_entanglement():
    for b in eg_branch_tree(LAYOUT, erasure=False):
        amps = extract_logical(b.state, SMALL, ["V1", "V2"]).amplitudes
        assert schmidt_coefficients(amps)[1] < 1e-12


def test_eg_trial_is_seed_reproducible():
    a = entanglement_generation(LAYOUT, stream(42, "x"))[2].export()
    b = entanglement_generation(LAYOUT, stream(42, "x"))[2].export()
    assert a == b


def test_settings_are_hermitian_involutions():
    for m in SINGLE_QUBIT_SETTINGS.values():
        assert np.allclose(m, m.conj().T)
        assert np.allclose(m @ m, np.eye(2))


def test_bell_state_chsh_value_and_sign():
    out = chsh_from_logical(BELL_STATE)
    assert abs(abs(out["L"]) - TSIRELSON) < 1e-12
    # With B1 carrying the minus sign, every correlator flips: L = -2 sqrt(2).
    assert out["L"] < 0
    assert np.isclose(out["A1B1"], -S2) and np.isclose(out["A1B2"], S2)


def test_product_and_mixed_inputs():
    assert abs(chsh_from_logical(np.array([1, 0, 0, 0]))["L"]) <= 2
    assert abs(chsh_from_logical(np.eye(4) / 4)["L"]) < 1e-15


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_product_states_obey_local_bound(seed):
    assert abs(chsh_from_logical(product_logical_state(np.random.default_rng(seed)))["L"]) <= 2 + 1e-10


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=8, max_size=8).filter(lambda v: np.linalg.norm(v) > 0.1))
def test_tsirelson_bound(v):
    psi = np.array(v[:4]) + 1j * np.array(v[4:])
    assert abs(chsh_from_logical(psi / np.linalg.norm(psi))["L"]) <= TSIRELSON + 1e-10


def test_chsh_expectations_reject_leakage():
    with pytest.raises(LeakageError):
        chsh_expectations(StateVector.basis(SMALL.space, 0b01), SMALL)


def test_measurement_ordering_and_contract():
    assert measurement_ordering() == "right-to-left"
    assert any(_compile(s, "left-to-right") is None for s in WRITTEN_SEQUENCES)
    z = np.diag([1, -1])
    for name in WRITTEN_SEQUENCES:
        c = compile_chsh_setting(name)
        assert np.allclose(c.unitary @ SINGLE_QUBIT_SETTINGS[name] @ c.unitary.conj().T, c.sign * z)
    assert compile_chsh_setting("A1").gates == ()
    assert compile_chsh_setting("A2").gates == ("H",)


def test_b_bases():
    a, b = math.cos(math.pi / 8), math.sin(math.pi / 8)
    bases = {"B1": ([a, b], [b, -a]), "B2": ([a, -b], [b, a])}
    for name, basis in bases.items():
        _, vecs = np.linalg.eigh(SINGLE_QUBIT_SETTINGS[name])
        for v in vecs.T:
            assert np.isclose(max(abs(np.vdot(v, w)) for w in basis), 1.0)


def test_compiled_distribution_matches_born():
    branch = next(b for b in eg_branch_tree(LAYOUT) if b.parity_branch == "symmetric")
    for a in ("A1", "A2"):
        for b in ("B1", "B2"):
            p = compiled_joint_distribution(branch.state, SMALL, a, b)
            assert np.allclose(p, direct_joint_distribution(BELL_STATE, a, b), atol=1e-12)


def test_chsh_sample_small_n_consistent():
    s = chsh_sample(1000, 3, LAYOUT)
    assert abs(s.L_hat - chsh_from_logical(BELL_STATE)["L"]) <= 5 * s.sigma
    with pytest.raises(ValueError):
        chsh_sample(99, 3, LAYOUT)


def test_chsh_sample_product_state_respects_local_bound():
    state = embed_pair(SMALL, product_logical_state(np.random.default_rng(8)))
    s = chsh_sample(20000, 4, LAYOUT, state=state)
    assert abs(s.L_hat) <= 2 + 5 * s.sigma


def test_chsh_sample_reproducible():
    assert chsh_sample(500, 11, LAYOUT) == chsh_sample(500, 11, LAYOUT)


def test_full_pipeline_trial():
    rng = stream(1, "trial")
    va, vb, attempts = chsh_trial(LAYOUT, "A1", "B1", rng)
    assert va in (1, -1) and vb in (1, -1) and attempts >= 1
