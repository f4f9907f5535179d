"""Pulse programs and their line-oriented text form.

Grammar, one statement per line, ``#`` starts a comment::

    pulse  <all|I0|I1|...|I0,I2>  <angle_deg>  <x|y|-x|-y>
    tpulse <bits>-<bits>          <angle_deg>  <x|y|-x|-y>
    delay  <seconds>
    grad
    t1 [states]
    acquire <all|I0|...>

``t1 states`` asks the 2D driver for hypercomplex (States) acquisition in
the indirect dimension, needed whenever the t1 label is stored as
populations rather than carried through as coherence.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

from .spins import SpinSystem, TransitionRef

PHASES = {"x": 0.0, "y": math.pi / 2, "-x": math.pi, "-y": 3 * math.pi / 2}
_PHASE_NAMES = {v: k for k, v in PHASES.items()}
_SPIN_RE = re.compile(r"^I(\d+)$")
_TRANSITION_RE = re.compile(r"^([01]+)-([01]+)$")


class DSLError(ValueError):
    """Parse or validation failure, carrying a source position when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line, self.column = line, column
        if line is not None:
            message = f"line {line}: {message}"
            if column is not None:
                message += f" (column {column})"
        super().__init__(message)


@dataclass(frozen=True)
class HardPulse:
    spins: tuple[int, ...] | None  # None: every spin
    angle: float
    phase: float = 0.0


@dataclass(frozen=True)
class SelectivePulse:
    spin: int
    angle: float
    phase: float = 0.0


@dataclass(frozen=True)
class TransitionPulse:
    transition: TransitionRef
    angle: float
    phase: float = 0.0


@dataclass(frozen=True)
class Delay:
    seconds: float


@dataclass(frozen=True)
class Gradient:
    pass


@dataclass(frozen=True)
class EvolveT1:
    states: bool = False


@dataclass(frozen=True)
class Acquire:
    spins: tuple[int, ...] | None  # None: every spin


PulseEvent = Union[HardPulse, SelectivePulse, TransitionPulse, Delay, Gradient, EvolveT1, Acquire]


def _check_events(events, name=""):
    t1 = [i for i, e in enumerate(events) if isinstance(e, EvolveT1)]
    if len(t1) > 1:
        raise DSLError("duplicate t1 marker")
    acq = [i for i, e in enumerate(events) if isinstance(e, Acquire)]
    if not acq:
        raise DSLError("missing acquire")
    if len(acq) > 1 or acq[0] != len(events) - 1:
        raise DSLError("acquire must appear exactly once, as the last statement")


@dataclass(frozen=True)
class PulseProgram:
    events: tuple[PulseEvent, ...]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        _check_events(self.events, self.name)

    @property
    def acquire(self) -> Acquire:
        return self.events[-1]

    @property
    def t1_index(self) -> int | None:
        for i, e in enumerate(self.events):
            if isinstance(e, EvolveT1):
                return i
        return None

    def validate(self, system: SpinSystem) -> None:
        """Check every spin index and transition label against ``system``."""
        n = system.n_spins
        for e in self.events:
            spins: tuple[int, ...] = ()
            if isinstance(e, (HardPulse, Acquire)) and e.spins is not None:
                spins = e.spins
            elif isinstance(e, SelectivePulse):
                spins = (e.spin,)
            elif isinstance(e, TransitionPulse) and e.transition.n_spins != n:
                raise DSLError(f"transition {e.transition} not resolvable in a {n}-spin system")
            bad = [s for s in spins if not 0 <= s < n]
            if bad:
                raise DSLError(f"spin I{bad[0]} not present in a {n}-spin system")


def _format_angle(radians: float) -> str:
    deg = math.degrees(radians)
    r = round(deg)
    return str(r) if abs(deg - r) < 1e-9 else repr(deg)


def _format_phase(radians: float) -> str:
    for value, name in _PHASE_NAMES.items():
        if abs(math.remainder(radians - value, 2 * math.pi)) < 1e-12:
            return name
    raise ValueError(f"phase {radians} rad has no DSL spelling")


def _format_spins(spins) -> str:
    return "all" if spins is None else ",".join(f"I{s}" for s in spins)


def format_event(e: PulseEvent) -> str:
    if isinstance(e, HardPulse):
        return f"pulse {_format_spins(e.spins)} {_format_angle(e.angle)} {_format_phase(e.phase)}"
    if isinstance(e, SelectivePulse):
        return f"pulse I{e.spin} {_format_angle(e.angle)} {_format_phase(e.phase)}"
    if isinstance(e, TransitionPulse):
        return f"tpulse {e.transition} {_format_angle(e.angle)} {_format_phase(e.phase)}"
    if isinstance(e, Delay):
        return f"delay {e.seconds!r}"
    if isinstance(e, Gradient):
        return "grad"
    if isinstance(e, EvolveT1):
        return "t1 states" if e.states else "t1"
    if isinstance(e, Acquire):
        return f"acquire {_format_spins(e.spins)}"
    raise TypeError(f"not a pulse event: {e!r}")


def serialize_program(p: PulseProgram) -> str:
    lines = [f"# {p.name}"] if p.name else []
    lines += [format_event(e) for e in p.events]
    return "\n".join(lines) + "\n"


class _Line:
    def __init__(self, lineno: int, text: str):
        self.lineno = lineno
        self.tokens = [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", text)]

    def error(self, msg, tok=None):
        col = self.tokens[tok][1] if tok is not None and tok < len(self.tokens) else None
        return DSLError(msg, self.lineno, col)

    def expect(self, count, usage):
        if len(self.tokens) != count:
            raise self.error(f"expected '{usage}'")

    def spins(self, tok) -> tuple[int, ...] | None:
        word = self.tokens[tok][0]
        if word == "all":
            return None
        out = []
        for part in word.split(","):
            m = _SPIN_RE.match(part)
            if not m:
                raise self.error(f"bad spin reference {part!r}", tok)
            out.append(int(m.group(1)))
        if len(set(out)) != len(out):
            raise self.error("repeated spin in list", tok)
        return tuple(out)

    def number(self, tok, what) -> float:
        try:
            value = float(self.tokens[tok][0])
        except ValueError:
            raise self.error(f"bad {what} {self.tokens[tok][0]!r}", tok) from None
        if not math.isfinite(value):
            raise self.error(f"bad {what} {self.tokens[tok][0]!r}", tok)
        return value

    def phase(self, tok) -> float:
        word = self.tokens[tok][0]
        if word not in PHASES:
            raise self.error(f"bad phase {word!r} (use x, y, -x or -y)", tok)
        return PHASES[word]


def parse_program(text: str, name: str = "") -> PulseProgram:
    events: list[PulseEvent] = []
    acquire_line = t1_line = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        line = _Line(lineno, body)
        if not line.tokens:
            if not name and raw.strip().startswith("#") and not events:
                name = raw.strip().lstrip("#").strip()
            continue
        if acquire_line is not None:
            raise line.error(f"statement after acquire (line {acquire_line})", 0)
        op = line.tokens[0][0]
        if op == "pulse":
            line.expect(4, "pulse <spins> <angle_deg> <phase>")
            spins = line.spins(1)
            angle = math.radians(line.number(2, "angle"))
            phase = line.phase(3)
            if spins is not None and len(spins) == 1:
                events.append(SelectivePulse(spins[0], angle, phase))
            else:
                events.append(HardPulse(spins, angle, phase))
        elif op == "tpulse":
            line.expect(4, "tpulse <bits>-<bits> <angle_deg> <phase>")
            m = _TRANSITION_RE.match(line.tokens[1][0])
            if not m:
                raise line.error(f"malformed transition label {line.tokens[1][0]!r}", 1)
            try:
                tr = TransitionRef.between(m.group(1), m.group(2))
            except ValueError as exc:
                raise line.error(f"malformed transition label: {exc}", 1) from None
            events.append(TransitionPulse(tr, math.radians(line.number(2, "angle")), line.phase(3)))
        elif op == "delay":
            line.expect(2, "delay <seconds>")
            seconds = line.number(1, "delay")
            if seconds < 0:
                raise line.error("delay must be non-negative", 1)
            events.append(Delay(seconds))
        elif op == "grad":
            line.expect(1, "grad")
            events.append(Gradient())
        elif op == "t1":
            if t1_line is not None:
                raise line.error(f"duplicate t1 marker (first on line {t1_line})", 0)
            if len(line.tokens) == 2 and line.tokens[1][0] == "states":
                events.append(EvolveT1(states=True))
            else:
                line.expect(1, "t1 [states]")
                events.append(EvolveT1())
            t1_line = lineno
        elif op == "acquire":
            line.expect(2, "acquire <spins>")
            events.append(Acquire(line.spins(1)))
            acquire_line = lineno
        else:
            raise line.error(f"unknown mnemonic {op!r}", 0)
    if acquire_line is None:
        raise DSLError("missing acquire")
    return PulseProgram(tuple(events), name)
