"""Braid words on a vortex qubit and exhaustive synthesis of single-qubit gates.

Words are applied left to right in time: the first exchange acts first.
Text schedules carry one exchange per line as ``B <i> <j> <+|->``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .encoding import (
    LeakageError,
    RegisterLayout,
    VortexQubit,
    allocate_register,
    logical_gate_of,
    phase_aligned_residual,
    schmidt_coefficients,
)
from .majorana import (
    FockSpace,
    InvalidExchange,
    Unitary,
    braid_unitary,
    build_space,
    identity_unitary,
    total_parity,
)

MAX_WORD_LENGTH = 12
SYNTHESIS_TOLERANCE = 1e-10

R_GATE = np.array([[0, -1j], [-1j, 0]])
PHASE_GATE = np.diag([1, 1j])
HADAMARD = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
PI8_GATE = np.diag([1, np.exp(1j * math.pi / 4)])


class SynthesisNotFound(LookupError):
    pass


class Exchange(NamedTuple):
    i: int
    j: int
    sign: int

    def inverse(self) -> Exchange:
        return Exchange(self.i, self.j, -self.sign)


@dataclass(frozen=True)
class BraidWord:
    exchanges: tuple[Exchange, ...] = ()

    def __post_init__(self):
        ex = tuple(Exchange(*e) for e in self.exchanges)
        for e in ex:
            if e.i == e.j:
                raise InvalidExchange(f"cannot exchange Majorana {e.i} with itself")
            if e.sign not in (1, -1):
                raise InvalidExchange(f"bad exchange sign {e.sign}")
        if len(ex) > MAX_WORD_LENGTH:
            raise ValueError(f"word longer than {MAX_WORD_LENGTH}")
        object.__setattr__(self, "exchanges", ex)

    def __len__(self):
        return len(self.exchanges)

    def __iter__(self):
        return iter(self.exchanges)

    def __add__(self, other: BraidWord) -> BraidWord:
        return BraidWord(self.exchanges + other.exchanges)

    def inverse(self) -> BraidWord:
        return BraidWord(tuple(e.inverse() for e in reversed(self.exchanges)))

    def relabel(self, mapping) -> BraidWord:
        return BraidWord(tuple(Exchange(mapping[e.i], mapping[e.j], e.sign) for e in self.exchanges))

    def unitary(self, space: FockSpace) -> Unitary:
        u = identity_unitary(space)
        for e in self.exchanges:
            u = braid_unitary(space, e.i, e.j, e.sign) @ u
        return Unitary(space, u.matrix, "braid")

    def to_schedule(self) -> str:
        return "".join(f"B {e.i} {e.j} {'+' if e.sign > 0 else '-'}\n" for e in self.exchanges)


def parse_schedule(text: str) -> BraidWord:
    exchanges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4 or parts[0] != "B" or parts[3] not in "+-" or len(parts[3]) != 1:
            raise ValueError(f"line {lineno}: expected 'B <i> <j> <+|->', got {raw!r}")
        try:
            i, j = int(parts[1]), int(parts[2])
        except ValueError:
            raise ValueError(f"line {lineno}: non-integer Majorana index in {raw!r}") from None
        exchanges.append(Exchange(i, j, 1 if parts[3] == "+" else -1))
    return BraidWord(tuple(exchanges))


class SynthesisResult(NamedTuple):
    word: BraidWord
    achieved: np.ndarray
    global_phase: complex
    residual: float


# Local frame: one qubit on a 2-mode space, Majoranas 1..4, logical basis |00>, |11>.
_LOCAL_SPACE = build_space(2)
_LOCAL_LOGICAL = (0, 3)


def _local_logical(u: np.ndarray) -> np.ndarray:
    return u[np.ix_(_LOCAL_LOGICAL, _LOCAL_LOGICAL)]


@lru_cache(maxsize=None)
def _generators() -> tuple[tuple[Exchange, np.ndarray], ...]:
    # Lexicographic on (i, j, symbol) with '+' before '-', as in schedule text.
    gens = []
    for i, j in itertools.combinations(range(1, 5), 2):
        for sign in (1, -1):
            u = braid_unitary(_LOCAL_SPACE, i, j, sign).dense()
            gens.append((Exchange(i, j, sign), _local_logical(u)))
    return tuple(gens)


def canonical_key(m: np.ndarray, decimals: int = 9) -> tuple:
    """Hashable form of ``m`` with the first nonzero entry rotated to positive real."""
    flat = m.ravel()
    lead = flat[np.flatnonzero(np.abs(flat) > 1e-9)[0]]
    c = flat * (abs(lead) / lead)
    c = np.round(c.real, decimals) + 0.0, np.round(c.imag, decimals) + 0.0
    return tuple(c[0]) + tuple(c[1])


def _bfs(max_len: int):
    """Yield ``(word, logical matrix)`` for each new group element, shortest-lex first."""
    start = np.eye(2, dtype=complex)
    seen = {canonical_key(start)}
    frontier = [((), start)]
    yield (), start
    for _ in range(max_len):
        nxt = []
        for word, m in frontier:
            for ex, g in _generators():
                child = g @ m
                key = canonical_key(child)
                if key in seen:
                    continue
                seen.add(key)
                nxt.append((word + (ex,), child))
                yield word + (ex,), child
        if not nxt:
            return
        frontier = nxt


def synthesize_braid_word(target, qubit: VortexQubit | None = None, max_len: int = MAX_WORD_LENGTH) -> SynthesisResult:
    """Shortest (then lexicographically smallest) braid word realizing ``target``.

    Equality is up to a global phase. The search is exhaustive: it stops once
    the braid image closes, so a miss is definitive for every length up to
    ``max_len``.
    """
    target = np.asarray(target, dtype=complex)
    if target.shape != (2, 2) or not np.allclose(target.conj().T @ target, np.eye(2), atol=1e-12):
        raise ValueError("target must be a 2x2 unitary")
    if max_len > MAX_WORD_LENGTH:
        raise ValueError(f"max_len capped at {MAX_WORD_LENGTH}")
    for word, m in _bfs(max_len):
        residual, phase = phase_aligned_residual(m, target)
        if residual < SYNTHESIS_TOLERANCE:
            w = BraidWord(word)
            if qubit is not None:
                w = w.relabel(dict(zip(range(1, 5), qubit.majoranas)))
            return SynthesisResult(w, m, phase, residual)
    raise SynthesisNotFound(f"no braid word of length <= {max_len} realizes the target")


def _exact_key(m: np.ndarray) -> tuple:
    flat = m.ravel()
    return tuple(np.round(flat.real, 9) + 0.0) + tuple(np.round(flat.imag, 9) + 0.0)


def braid_image(max_len: int = 8) -> list[np.ndarray]:
    """Distinct logical matrices (global phase included) of all words up to ``max_len``."""
    start = np.eye(2, dtype=complex)
    found = {_exact_key(start): start}
    frontier = [start]
    for _ in range(max_len):
        nxt = []
        for m in frontier:
            for _, g in _generators():
                child = g @ m
                key = _exact_key(child)
                if key not in found:
                    found[key] = child
                    nxt.append(child)
        if not nxt:
            break
        frontier = nxt
    return list(found.values())


STANDARD_TARGETS = {"R": R_GATE, "phase": PHASE_GATE, "H": HADAMARD}


@lru_cache(maxsize=None)
def _standard_local() -> dict[str, SynthesisResult]:
    return {name: synthesize_braid_word(t) for name, t in STANDARD_TARGETS.items()}


def standard_gates(qubit: VortexQubit) -> dict[str, BraidWord]:
    """Braid words for R = -i sigma_x, phase diag(1, i) and Hadamard on ``qubit``."""
    mapping = dict(zip(range(1, 5), qubit.majoranas))
    return {name: res.word.relabel(mapping) for name, res in _standard_local().items()}


def standard_gate_result(name: str) -> SynthesisResult:
    return _standard_local()[name]


def validate_word(word: BraidWord, layout: RegisterLayout, qubit: str, target) -> float:
    """Residual of the word's logical action against ``target`` on the real layout."""
    block = logical_gate_of(word.unitary(layout.space), layout, [qubit])
    return phase_aligned_residual(block.matrix, np.asarray(target, dtype=complex))[0]


def verify_braid_relations(space: FockSpace) -> dict[str, float]:
    """Max residuals of the braid-group identities over all relevant index choices."""
    if space.n_majoranas < 6:
        raise ValueError("braid relations need at least 6 Majoranas")
    n = space.n_majoranas
    eye = np.eye(space.dim)
    parity = total_parity(space).dense()
    b = {}
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i != j:
                b[i, j] = braid_unitary(space, i, j, 1).dense()
    report = dict.fromkeys(
        ["unitarity", "yang_baxter", "far_commutation", "fourth_power", "eighth_power", "inverse", "parity"], 0.0
    )
    for (i, j), u in b.items():
        inv = braid_unitary(space, i, j, -1).dense()
        u2 = u @ u
        u4 = u2 @ u2
        report["unitarity"] = max(report["unitarity"], np.linalg.norm(u.conj().T @ u - eye))
        report["inverse"] = max(report["inverse"], np.linalg.norm(u @ inv - eye))
        report["fourth_power"] = max(report["fourth_power"], np.linalg.norm(u4 + eye))
        report["eighth_power"] = max(report["eighth_power"], np.linalg.norm(u4 @ u4 - eye))
        report["parity"] = max(report["parity"], np.linalg.norm(u @ parity - parity @ u))
    for a, c in itertools.combinations(range(1, n + 1), 2):
        for mid in range(1, n + 1):
            if mid in (a, c):
                continue
            x, y = b[a, mid], b[mid, c]
            report["yang_baxter"] = max(report["yang_baxter"], np.linalg.norm(x @ y @ x - y @ x @ y))
    for p, q in itertools.combinations(itertools.combinations(range(1, n + 1), 2), 2):
        if set(p) & set(q):
            continue
        x, y = b[p], b[q]
        report["far_commutation"] = max(report["far_commutation"], np.linalg.norm(x @ y - y @ x))
    return {k: float(v) for k, v in report.items()}


def random_braid_word(rng: np.random.Generator, n_majoranas: int, max_len: int = 8) -> BraidWord:
    length = int(rng.integers(1, max_len + 1))
    exchanges = []
    for _ in range(length):
        i, j = rng.choice(n_majoranas, 2, replace=False) + 1
        exchanges.append(Exchange(int(i), int(j), int(rng.choice((1, -1)))))
    return BraidWord(tuple(exchanges))


class EntanglementControl(NamedTuple):
    words: int
    code_preserving: int
    max_second_schmidt: float


def braiding_entanglement_control(seed: int, words: int = 2000, inputs_per_word: int = 5) -> EntanglementControl:
    """Random braid words on two vortex qubits never entangle product logical inputs.

    Words that leak out of the code space have no logical action and are
    skipped; every code-preserving word is applied to random product inputs
    and the output's second Schmidt coefficient is recorded.
    """
    from .streams import stream

    layout = allocate_register(vortex=("A", "B"))
    rng = stream(seed, "braid-control")
    kept = 0
    worst = 0.0
    for _ in range(words):
        word = random_braid_word(rng, layout.space.n_majoranas)
        try:
            block = logical_gate_of(word.unitary(layout.space), layout, ["A", "B"], 1e-10).matrix
        except LeakageError:
            continue
        kept += 1
        for _ in range(inputs_per_word):
            a = rng.normal(size=2) + 1j * rng.normal(size=2)
            b = rng.normal(size=2) + 1j * rng.normal(size=2)
            v = np.kron(a / np.linalg.norm(a), b / np.linalg.norm(b))
            worst = max(worst, float(schmidt_coefficients(block @ v)[1]))
    return EntanglementControl(words, kept, worst)
