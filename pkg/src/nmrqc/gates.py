"""Declarative gate catalog and its compilation into 2D pulse programs.

Two-qubit gates act on inputs I1 I2 of a three-spin system whose spin I0 is
the observer; three-qubit gates act on I1 I2 I3 of a four-spin system.
Transition labels are full basis labels (observer bit first), so
``111-101`` is the I1 transition with the observer in state 1 and I2 in
state 1.  Recipes are applied in the order listed: the pulses of a cascade
on connected transitions do not commute.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .program import (
    Acquire,
    EvolveT1,
    Gradient,
    PulseEvent,
    PulseProgram,
    SelectivePulse,
    TransitionPulse,
    format_event,
)
from .spins import SpinSystem, TransitionRef

PI = math.pi
INPUT_ORDER_2 = ("11", "10", "01", "00")


class GateError(ValueError):
    pass


@dataclass(frozen=True)
class GateSpec:
    name: str
    arity: int
    truth_table: tuple[tuple[str, str], ...]
    recipe: tuple[PulseEvent, ...]
    description: str = ""

    def __post_init__(self):
        ins = [a for a, _ in self.truth_table]
        outs = [b for _, b in self.truth_table]
        every = {"".join(b) for b in itertools.product("01", repeat=self.arity)}
        if set(ins) != every or set(outs) != every or len(ins) != len(every):
            raise GateError(f"{self.name}: truth table is not a bijection on {self.arity}-bit labels")

    @property
    def mapping(self) -> dict[str, str]:
        return dict(self.truth_table)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "arity": self.arity,
            "truth_table": [list(p) for p in self.truth_table],
            "recipe": [format_event(e) for e in self.recipe],
        }


def truth_table_of(spec: GateSpec) -> dict[str, str]:
    return spec.mapping


def _flip_all(spin: int) -> tuple[PulseEvent, ...]:
    return (SelectivePulse(spin, PI, 0.0),)


def _tp(*pairs: str) -> tuple[PulseEvent, ...]:
    return tuple(TransitionPulse(TransitionRef.between(*p.split("-")), PI, 0.0) for p in pairs)


# Inverted transitions, applied in the order listed.
_ZQ = _tp("110-111", "010-011", "101-111", "001-011", "110-111", "010-011")
_DQ = _tp("110-111", "010-011", "100-110", "000-010", "110-111", "010-011")
_XOR1 = _tp("111-101", "011-001")
_XOR2 = _tp("111-110", "011-010")
_XNOR1 = _tp("100-110", "000-010")
_XNOR2 = _tp("101-100", "001-000")

# name, outputs for inputs 11 10 01 00, recipe
_TWO_QUBIT_GATES = [
    ("NOP", "11 10 01 00", ()),
    ("NOT(I1)", "01 00 11 10", _flip_all(1)),
    ("NOT(I2)", "10 11 00 01", _flip_all(2)),
    ("NOT(I1,I2)", "00 01 10 11", _flip_all(1) + _flip_all(2)),
    ("XOR1", "01 10 11 00", _XOR1),
    ("XOR2", "10 11 01 00", _XOR2),
    ("XNOR1", "11 00 01 10", _XNOR1),
    ("XNOR2", "11 10 00 01", _XNOR2),
    ("SWAP", "11 01 10 00", _ZQ),
    ("SWAP+NOT", "00 10 01 11", _DQ),
    ("SWAP+XOR1", "01 11 10 00", _tp("101-111", "001-011", "110-111", "010-011")),
    ("SWAP+XOR2", "10 01 11 00", _tp("110-111", "010-011", "101-111", "001-011")),
    ("SWAP+XNOR1", "11 01 00 10", _tp("100-110", "000-010", "100-101", "000-001")),
    ("SWAP+XNOR2", "11 00 10 01", _tp("100-101", "000-001", "100-110", "000-010")),
    ("SWAP+NOT+XOR1", "00 10 11 01", _tp("101-111", "001-011", "100-101", "000-001")),
    ("SWAP+NOT+XOR2", "00 11 01 10", _tp("110-111", "010-011", "100-110", "000-010")),
    ("SWAP+NOT+XNOR1", "10 00 01 11", _tp("100-110", "000-010", "110-111", "010-011")),
    ("SWAP+NOT+XNOR2", "01 10 00 11", _tp("100-101", "000-001", "101-111", "001-011")),
    ("NOT(I1)+XOR2", "01 00 10 11", _flip_all(1) + _XOR2),
    ("NOT(I2)+XOR1", "10 01 00 11", _flip_all(2) + _XOR1),
    ("NOT(I1)+XNOR2", "00 01 11 10", _flip_all(1) + _XNOR2),
    ("NOT(I2)+XNOR1", "00 11 10 01", _flip_all(2) + _XNOR1),
    ("SWAP+NOT(I1)", "01 11 00 10", _ZQ + _flip_all(1)),
    ("SWAP+NOT(I2)", "10 00 11 01", _ZQ + _flip_all(2)),
]


def _control_transitions(labels) -> tuple[PulseEvent, ...]:
    """Pulses on I1 transitions of a 4-spin system, labelled by (I0, I2, I3)."""
    return _tp(*(f"{o}0{tu}-{o}1{tu}" for o, tu in ((lab[0], lab[1:]) for lab in labels)))


def _three_bit_table(rule) -> tuple[tuple[str, str], ...]:
    rows = []
    for s, t, u in itertools.product((1, 0), repeat=3):
        rows.append((f"{s}{t}{u}", f"{rule(s, t, u)}{t}{u}"))
    return tuple(rows)


def _build_library() -> tuple[GateSpec, ...]:
    gates = [
        GateSpec(name, 2, tuple(zip(INPUT_ORDER_2, outs.split())), recipe)
        for name, outs, recipe in _TWO_QUBIT_GATES
    ]
    gates += [
        GateSpec("NOP3", 3, _three_bit_table(lambda s, t, u: s), ()),
        GateSpec("NOT(I1)", 3, _three_bit_table(lambda s, t, u: 1 - s), _flip_all(1)),
        GateSpec("TOFFOLI", 3, _three_bit_table(lambda s, t, u: s ^ (t & u)),
                 _control_transitions(["011", "111"])),
        GateSpec("ORNOR", 3, _three_bit_table(lambda s, t, u: s ^ (t | u)),
                 _control_transitions(["111", "110", "101", "011", "010", "001"])),
    ]
    return tuple(gates)


_LIBRARY = _build_library()


def gate_library() -> list[GateSpec]:
    return list(_LIBRARY)


def get_gate(name: str, arity: int | None = None) -> GateSpec:
    matches = [g for g in _LIBRARY if g.name.upper() == name.upper()]
    if not matches:
        raise GateError(f"unknown gate {name!r}")
    if arity is not None:
        fitting = [g for g in matches if g.arity == arity]
        if not fitting:
            have = ", ".join(str(g.arity) for g in matches)
            raise GateError(f"gate {name} acts on {have} qubits, system provides {arity} input spins")
        matches = fitting
    if len(matches) > 1:
        raise GateError(f"gate name {name!r} is ambiguous; give the arity")
    return matches[0]


def catalog(arity: int | None = None) -> list[dict]:
    return [g.to_dict() for g in _LIBRARY if arity is None or g.arity == arity]


def store_and_read(observer: int = 0) -> tuple[PulseEvent, PulseEvent, PulseEvent]:
    """Observer excitation, flip-back (storage) and read pulses."""
    return (
        SelectivePulse(observer, PI / 2, PI / 2),
        SelectivePulse(observer, PI / 2, 3 * PI / 2),
        SelectivePulse(observer, PI / 2, PI / 2),
    )


def compile_gate(spec: GateSpec, system: SpinSystem) -> PulseProgram:
    """Full 2D experiment for ``spec`` on ``system``.

    Layout: observer (pi/2)_y, t1 (States), observer (pi/2)_-y storing the
    frequency label as populations, gradient, the gate recipe, observer
    (pi/2)_y read pulse, acquisition on the observer.
    """
    if system.n_spins != spec.arity + 1 or len(system.input_spins) != spec.arity:
        raise GateError(
            f"gate {spec.name} needs an observer plus {spec.arity} input spins, "
            f"system has {system.n_spins} spins"
        )
    excite, store, read = store_and_read(0)
    events = (excite, EvolveT1(states=True), store, Gradient(), *spec.recipe, read, Acquire((0,)))
    program = PulseProgram(events, name=spec.name)
    program.validate(system)
    return program


def mixing_events(program: PulseProgram) -> tuple[PulseEvent, ...]:
    """Recipe pulses of a compiled gate program (between gradient and read pulse)."""
    ev = program.events
    g = next(i for i, e in enumerate(ev) if isinstance(e, Gradient))
    return ev[g + 1:-2]
