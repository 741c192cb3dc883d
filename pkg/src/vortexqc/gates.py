"""Named single-qubit gates realized physically on a vortex qubit."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .braids import standard_gates
from .collision import tunneling_unitary
from .encoding import RegisterLayout
from .majorana import StateVector, Unitary, apply

LOGICAL = {
    "H": np.array([[1, 1], [1, -1]]) / math.sqrt(2),
    "R": np.array([[0, -1j], [-1j, 0]]),
    "S": np.diag([1, 1j]),
    "Sdg": np.diag([1, -1j]),
    "Z": np.diag([1.0, -1.0]).astype(complex),
    "T": np.diag([1, np.exp(1j * math.pi / 4)]),
}


@lru_cache(maxsize=None)
def gate_unitary(layout: RegisterLayout, qubit: str, name: str) -> Unitary:
    """Physical unitary whose logical action is ``LOGICAL[name]`` up to global phase.

    H, R, S are synthesized braid words; Sdg is the inverse phase word and Z
    the phase word applied twice. T is not a braid: it is the tunneling gate
    with accumulated phase pi/4.
    """
    q = layout[qubit]
    if name == "T":
        return tunneling_unitary(layout, q, math.pi / 4)
    words = standard_gates(q)
    if name in ("H", "R"):
        word = words[name]
    elif name == "S":
        word = words["phase"]
    elif name == "Sdg":
        word = words["phase"].inverse()
    elif name == "Z":
        word = words["phase"] + words["phase"]
    else:
        raise KeyError(f"unknown gate {name!r}")
    return word.unitary(layout.space)


def apply_gate(state: StateVector, layout: RegisterLayout, qubit: str, name: str) -> StateVector:
    return apply(gate_unitary(layout, qubit, name), state)
