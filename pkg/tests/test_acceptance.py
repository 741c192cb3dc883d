"""Acceptance gate: one test per criterion, each printing a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they
are also written through to the terminal under plain ``pytest -v``.
"""

from __future__ import annotations

import math
import subprocess
import sys
import time
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import chisquare

from vortexqc.braids import (
    PI8_GATE,
    STANDARD_TARGETS,
    SynthesisNotFound,
    braiding_entanglement_control,
    standard_gates,
    synthesize_braid_word,
    validate_word,
    verify_braid_relations,
)
from vortexqc.collision import CollisionModel, calibrate, collision_phase
from vortexqc.cphase import (
    BRANCHES,
    CZ,
    controlled_phase_sigma_z,
    cphase_layout,
    p2_via_basis_transform,
    projective_p2,
    random_logical_states,
    verify_eq9_identity,
    w_population,
)
from vortexqc.encoding import allocate_register, extract_logical, phase_aligned_residual
from vortexqc.harness import strip_duration
from vortexqc.majorana import StateVector, build_space, clifford_residuals
from vortexqc.protocols import (
    BELL_STATE,
    CORRELATORS,
    TSIRELSON,
    chsh_from_logical,
    chsh_sample,
    compiled_joint_distribution,
    direct_joint_distribution,
    eg_branch_tree,
    eg_layout,
    product_logical_state,
    sample_eg,
)
from vortexqc.streams import stream

ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture
def verdict(capsys):
    def emit(number: int, name: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\nACCEPTANCE criterion {number} {name}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, detail

    return emit


def test_criterion_1_algebra(verdict):
    t0 = time.perf_counter()
    worst = 0.0
    for n in range(1, 7):
        space = build_space(n)
        worst = max(worst, *clifford_residuals(space).values())
        if n >= 3:
            worst = max(worst, *verify_braid_relations(space).values())
    dt = time.perf_counter() - t0
    verdict(1, "algebra", worst < 1e-12 and dt < 10, f"max residual {worst:.2e}, {dt:.2f} s")


def test_criterion_2_braid_gates(verdict):
    t0 = time.perf_counter()
    layout = allocate_register(vortex=("V",))
    words = standard_gates(layout["V"])
    residuals = {name: validate_word(words[name], layout, "V", t) for name, t in STANDARD_TARGETS.items()}
    try:
        synthesize_braid_word(PI8_GATE, max_len=12)
        t_absent = False
    except SynthesisNotFound:
        t_absent = True
    dt = time.perf_counter() - t0
    worst = max(residuals.values())
    verdict(
        2,
        "braid gates",
        worst < 1e-10 and t_absent and dt < 60,
        f"R/phase/H max residual {worst:.2e}, T absent to length 12: {t_absent}, {dt:.2f} s",
    )


def test_criterion_3_eg_statistics(verdict):
    t0 = time.perf_counter()
    layout = eg_layout()
    probs = {0: 0.0, 1: 0.0, 2: 0.0}
    fidelity = 1.0
    for b in eg_branch_tree(layout):
        probs[b.atom_count] += b.prob
        if b.atom_count == 1:
            fidelity = min(fidelity, b.bell_fidelity)
    exact_ok = max(abs(probs[0] - 0.25), abs(probs[1] - 0.5), abs(probs[2] - 0.25)) < 1e-12
    flags = sample_eg(layout, 100_000, 42)
    frac = float(flags.mean())
    dt = time.perf_counter() - t0
    ok = exact_ok and fidelity >= 1 - 1e-12 and abs(frac - 0.5) <= 0.0047 and dt < 60
    verdict(3, "EG statistics", ok, f"p(0,1,2)={probs[0]:.12f}/{probs[1]:.12f}/{probs[2]:.12f}, F={fidelity:.15f}, sampled {frac:.5f}, {dt:.2f} s")


def test_criterion_4_chsh(verdict):
    t0 = time.perf_counter()
    layout = eg_layout()
    small = layout.without_flying()
    branch = next(b for b in eg_branch_tree(layout) if b.parity_branch == "symmetric")
    logical = extract_logical(branch.state, small, ["V1", "V2"]).amplitudes
    exact = chsh_from_logical(logical)["L"]
    exact_ok = abs(abs(exact) - TSIRELSON) < 1e-12

    rng = stream(0, "acceptance-products")
    product_worst = max(abs(chsh_from_logical(product_logical_state(rng))["L"]) for _ in range(1000))

    sample = chsh_sample(1_000_000, 7, layout)
    sampled_ok = abs(sample.L_hat - exact) <= 5 * sample.sigma

    n = 100_000
    min_p = 1.0
    for a, b in CORRELATORS:
        compiled = compiled_joint_distribution(branch.state, small, a, b).ravel()
        counts = np.bincount(stream(0, "acceptance-chi2", a + b).choice(4, size=n, p=compiled / compiled.sum()), minlength=4)
        min_p = min(min_p, float(chisquare(counts, direct_joint_distribution(BELL_STATE, a, b).ravel() * n).pvalue))
    dt = time.perf_counter() - t0
    ok = exact_ok and product_worst <= 2 + 1e-10 and sampled_ok and min_p >= 1e-3 and dt < 300
    verdict(
        4,
        "CHSH",
        ok,
        f"exact L={exact:.15f}, product max |L|={product_worst:.4f}, sampled {sample.L_hat:.5f}+-{sample.sigma:.2e}, "
        f"min chi2 p={min_p:.3f}, {dt:.2f} s",
    )


def test_criterion_5_collision(verdict):
    t0 = time.perf_counter()
    li6 = CollisionModel.lithium6()
    exact_groups = Fraction("4e-6") ** 2 / (2 * Fraction("0.4e-6") ** 2) == 50 and li6.eta == math.exp(-1.0)
    tau_ok = abs(li6.tau * 1e3 - 0.86) / 0.86 < 0.01
    gk = collision_phase(li6, tol=1e-12, method="gauss-kronrod").theta
    si = collision_phase(li6, tol=1e-12, method="simpson").theta
    agree = abs(gk - si) < 1e-10
    deviates = abs(gk - math.pi) / math.pi > 0.02
    baseline_ok = abs(gk - 1.7053073996028) < 1e-9
    tuned = calibrate(li6, "tau_r", math.pi)
    cal_err = abs(collision_phase(tuned, tol=1e-12).theta - math.pi)
    lin = max(abs(collision_phase(replace(li6, omega=k * li6.omega), tol=1e-12).theta - k * gk) for k in (0.5, 2.0, 3.0))
    dt = time.perf_counter() - t0
    ok = exact_groups and tau_ok and agree and (not deviates or (baseline_ok and cal_err <= 1e-9)) and lin < 1e-10 and dt < 10
    verdict(
        5,
        "collision numerics",
        ok,
        f"theta={gk:.13f} ({'deviates' if deviates else 'matches'} pi), GK-Simpson {abs(gk - si):.1e}, "
        f"calibrated |theta-pi|={cal_err:.1e} at Omega*tau_r={tuned.omega_tau_r:.4f}, linearity {lin:.1e}, {dt:.2f} s",
    )


def test_criterion_6_controlled_phase(verdict):
    t0 = time.perf_counter()
    layout = cphase_layout()
    eq9 = verify_eq9_identity(layout, count=100, seed=6).residual

    p2_fid, p2_prob = 1.0, 0.0
    rng = stream(6, "acceptance-p2")
    for _ in range(100):
        s = StateVector.normalized(layout.space, rng.normal(size=layout.space.dim) + 1j * rng.normal(size=layout.space.dim))
        for mu in (1, -1):
            a = projective_p2(s, layout, force=mu)
            b = p2_via_basis_transform(s, layout, force=mu)
            p2_prob = max(p2_prob, abs(a.prob - b.prob))
            p2_fid = min(p2_fid, abs(a.post.overlap(b.post)) ** 2)

    cz_worst, w_worst = 0.0, 0.0
    for s in random_logical_states(layout, 100, seed=6):
        vin = extract_logical(s, layout, ["G", "Q"]).amplitudes
        for branch in BRANCHES:
            out, _ = controlled_phase_sigma_z(s, layout, force=branch)
            got = extract_logical(out, layout, ["G", "Q"]).amplitudes
            cz_worst = max(cz_worst, phase_aligned_residual(got, CZ @ vin)[0])
            w_worst = max(w_worst, w_population(out, layout))
    dt = time.perf_counter() - t0
    ok = eq9 < 1e-10 and p2_fid >= 1 - 1e-10 and p2_prob <= 1e-12 and cz_worst < 1e-10 and w_worst < 1e-12 and dt < 120
    verdict(
        6,
        "controlled phase",
        ok,
        f"identity residual {eq9:.1e}, P2 fidelity {p2_fid:.15f} prob diff {p2_prob:.1e}, "
        f"CZ residual {cz_worst:.1e}, W population {w_worst:.1e}, {dt:.2f} s",
    )


def test_criterion_7_negative_controls(verdict):
    control = braiding_entanglement_control(7, words=2000)
    dephased = chsh_sample(1_000_000, 7, eg_layout(), erasure=False)
    ok = control.code_preserving > 0 and control.max_second_schmidt < 1e-10 and abs(dephased.L_hat) <= 2
    verdict(
        7,
        "negative controls",
        ok,
        f"{control.code_preserving}/{control.words} code-preserving words, max second Schmidt {control.max_second_schmidt:.1e}, "
        f"dephasing L={dephased.L_hat:.5f}",
    )


def test_criterion_8_reproducibility(verdict, tmp_path):
    runs = {
        "run-eg": ["--trials", "20000"],
        "run-chsh": [],
        "run-cphase": [],
        "collision-phase": [],
    }
    mismatched = []
    for name, extra in runs.items():
        texts = []
        for k in range(2):
            out = tmp_path / f"{name}-{k}.txt"
            cmd = [sys.executable, "-m", "vortexqc.cli", name, "--config", str(ROOT / "configs" / f"{name}.cfg"), "--out", str(out), *extra]
            subprocess.run(cmd, check=True, capture_output=True, cwd=ROOT)
            texts.append(strip_duration(out.read_text()))
        if texts[0] != texts[1]:
            mismatched.append(name)
    verdict(8, "reproducibility", not mismatched, f"{len(runs)} experiments run twice, mismatches: {mismatched or 'none'}")
