from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vortexqc.cphase import (
    BRANCHES,
    CZ,
    P2_MODES,
    PreconditionError,
    controlled_phase_sigma_z,
    cphase_layout,
    cz_branch_maps,
    p2_basis_exchange,
    p2_observable,
    p2_via_basis_transform,
    p4_observable,
    projective_p2,
    projective_p4,
    random_logical_states,
    roles,
    universal_set_report,
    verify_eq9_identity,
    w_population,
)
from vortexqc.encoding import embed_logical, extract_logical, phase_aligned_residual
from vortexqc.majorana import StateVector, ZeroProbabilityBranch, apply, braid_unitary

LAYOUT = cphase_layout()


def logical(v):
    v = np.asarray(v, dtype=complex)
    return embed_logical(LAYOUT, ["G", "Q"], v / np.linalg.norm(v))


def test_eq9_identity_on_random_inputs():
    report = verify_eq9_identity(LAYOUT, count=100, seed=1)
    assert report.residual < 1e-10
    assert np.allclose(report.probabilities.sum(axis=1), 1.0, atol=1e-12)


def test_eq9_branch_probabilities_for_zero_input():
    report = verify_eq9_identity(LAYOUT, [logical([1, 0, 0, 0])])
    assert np.allclose(report.probabilities, 0.25, atol=1e-12)


def test_eq9_needs_vacant_w():
    occupied = StateVector.basis(LAYOUT.space, 1 << (LAYOUT["W"].mode - 1))
    with pytest.raises(PreconditionError):
        verify_eq9_identity(LAYOUT, [occupied])


def test_eq9_without_recovery_fails_mixed_branches():
    report = verify_eq9_identity(LAYOUT, count=3, form="identity")
    for b in report.branches:
        if b.mu != b.nu:
            assert b.residual > 0.5


def test_literal_mixed_recoveries_fail():
    report = verify_eq9_identity(LAYOUT, count=3, form="literal")
    by = {(b.mu, b.nu): b.residual for b in report.branches}
    assert by[1, 1] < 1e-12 and by[-1, -1] < 1e-12
    assert by[1, -1] > 1 and by[-1, 1] > 1


def test_p2_probabilities_on_w_vacant_product():
    m = projective_p2(logical([1, 0, 0, 0]), LAYOUT, force=1)
    assert np.isclose(m.prob, 0.5)


def test_p2_eigenstate_is_deterministic_and_idempotent():
    s = projective_p2(logical([1, 1, 1, 1]), LAYOUT, force=-1).post
    again = projective_p2(s, LAYOUT, force=-1)
    assert np.isclose(again.prob, 1.0)
    assert abs(s.overlap(again.post)) > 1 - 1e-12
    with pytest.raises(ZeroProbabilityBranch):
        projective_p2(s, LAYOUT, force=1)


def test_p4_half_half_and_idempotent():
    s = logical([1, 2, 3, 4j])
    m = projective_p4(s, LAYOUT, force=1)
    assert np.isclose(m.prob, 0.5)
    assert np.isclose(projective_p4(m.post, LAYOUT, force=1).prob, 1.0)


def test_exchange_with_w1_cannot_rotate_the_basis():
    r = roles(LAYOUT)
    o = p2_observable(LAYOUT).operator.dense()
    v = braid_unitary(LAYOUT.space, r.Q1, r.W1).dense()
    assert np.allclose(v @ o @ v.conj().T, o)
    # The chosen exchange maps the observable onto the W pair parity.
    vd = p2_basis_exchange(LAYOUT).dense()
    from vortexqc.majorana import ParityObservable

    pw = ParityObservable(LAYOUT.space, (r.W1, r.W2)).operator.dense()
    assert np.allclose(vd @ o @ vd.conj().T, pw)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_p2_realizations_are_channel_equivalent(seed):
    rng = np.random.default_rng(seed)
    s = StateVector.normalized(LAYOUT.space, rng.normal(size=32) + 1j * rng.normal(size=32))
    for mu in (1, -1):
        a = projective_p2(s, LAYOUT, force=mu)
        b = p2_via_basis_transform(s, LAYOUT, force=mu)
        assert abs(a.prob - b.prob) < 1e-12
        assert abs(a.post.overlap(b.post)) ** 2 > 1 - 1e-10
        assert b.w_recreated_population < 1e-12


def test_p2_basis_transform_on_eigenstate():
    s = projective_p2(logical([1, 0, 0, 1]), LAYOUT, force=1).post
    out = p2_via_basis_transform(s, LAYOUT, rng=np.random.default_rng(0))
    assert out.outcome == 1 and np.isclose(out.prob, 1.0)
    assert abs(out.post.overlap(s)) > 1 - 1e-12


@pytest.mark.parametrize("mode", P2_MODES)
@pytest.mark.parametrize("branch", BRANCHES)
def test_cz_on_basis_inputs(mode, branch):
    for k, sign in ((0, 1), (3, -1)):
        v = np.zeros(4)
        v[k] = 1
        out, _ = controlled_phase_sigma_z(logical(v), LAYOUT, p2=mode, force=branch)
        got = extract_logical(out, LAYOUT, ["G", "Q"]).amplitudes
        assert phase_aligned_residual(got, sign * v)[0] < 1e-12


def test_cz_branch_independence_and_w_restored():
    maps = cz_branch_maps(LAYOUT)
    assert max(max(b.residual, b.leakage) for b in maps) < 1e-12
    for s in random_logical_states(LAYOUT, 10, seed=2):
        vin = extract_logical(s, LAYOUT, ["G", "Q"]).amplitudes
        for branch in BRANCHES:
            out, trace = controlled_phase_sigma_z(s, LAYOUT, force=branch)
            got = extract_logical(out, LAYOUT, ["G", "Q"]).amplitudes
            assert phase_aligned_residual(got, CZ @ vin)[0] < 1e-10
            assert w_population(out, LAYOUT) < 1e-12
            assert np.isclose(trace.path_probability, 0.25)


def test_cz_is_maximally_entangling_on_plus_plus():
    out, _ = controlled_phase_sigma_z(logical([1, 1, 1, 1]), LAYOUT, rng=np.random.default_rng(4))
    got = extract_logical(out, LAYOUT, ["G", "Q"]).amplitudes
    from vortexqc.encoding import schmidt_coefficients

    assert np.allclose(schmidt_coefficients(got), [2**-0.5, 2**-0.5])


def test_cz_rejects_occupied_w_and_leakage():
    with pytest.raises(PreconditionError):
        controlled_phase_sigma_z(StateVector.basis(LAYOUT.space, 1 << 4), LAYOUT, force=(1, 1))
    from vortexqc.encoding import LeakageError

    with pytest.raises(LeakageError):
        controlled_phase_sigma_z(StateVector.basis(LAYOUT.space, 1), LAYOUT, force=(1, 1))


def test_cz_seeded_run_with_resource():
    s = random_logical_states(LAYOUT, 1, seed=3)[0]
    a = controlled_phase_sigma_z(s, LAYOUT, rng=np.random.default_rng(9), p2="basis-transform", resource=True)[1]
    b = controlled_phase_sigma_z(s, LAYOUT, rng=np.random.default_rng(9), p2="basis-transform", resource=True)[1]
    assert a.export() == b.export()
    assert a.steps[0].detail == "EG resource ready"


def test_p4_observable_anticommutes_with_p2():
    a = p2_observable(LAYOUT).operator.dense()
    b = p4_observable(LAYOUT).operator.dense()
    assert np.allclose(a @ b, -b @ a)


def test_universal_set_report():
    report = universal_set_report(LAYOUT)
    for key in ("H", "T", "T^8", "CZ", "CZ_commutes_Z"):
        assert report[key] < 1e-9
