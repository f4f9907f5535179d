"""Deutsch-Jozsa on a work qubit (spin 0) plus one or two input qubits.

The oracle ``|r>|x> -> |r XOR f(x)>|x>`` flips the work qubit on every
work transition whose input label x has f(x) = 1.  After a non-selective
(pi/2)_y pulse, t1 and the oracle, an input qubit keeps its multiplet only
if flipping that qubit never changes f; otherwise its coherences become
zero- or double-quantum and vanish from the spectrum.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .experiment import Acquisition, Spectrum2D, run_program
from .program import (
    Acquire,
    EvolveT1,
    HardPulse,
    PulseEvent,
    PulseProgram,
    SelectivePulse,
    TransitionPulse,
)
from .spins import BasisLabel, SpinSystem, TransitionRef, coherence_order_class, enumerate_single_quantum

PRESENCE_THRESHOLD = 0.1

# outputs f(x) for inputs x in ascending binary order
_TABLES = {
    1: {"f1": "00", "f2": "11", "f3": "01", "f4": "10"},
    2: {
        "f1": "0000", "f2": "1111", "f3": "0011", "f4": "1100",
        "f5": "1010", "f6": "0101", "f7": "1001", "f8": "0110",
    },
}


class DJError(ValueError):
    pass


@dataclass(frozen=True)
class FunctionSpec:
    bits: int
    name: str
    table: tuple[tuple[str, int], ...]

    @property
    def mapping(self) -> dict[str, int]:
        return dict(self.table)

    @property
    def kind(self) -> str:
        ones = sum(v for _, v in self.table)
        if ones in (0, len(self.table)):
            return "constant"
        if 2 * ones == len(self.table):
            return "balanced"
        return "neither"

    def __call__(self, x: str) -> int:
        return self.mapping[x]


def function_catalog(bits: int) -> list[FunctionSpec]:
    if bits not in _TABLES:
        raise DJError(f"unsupported bits: {bits} (only 1 or 2)")
    inputs = ["".join(p) for p in itertools.product("01", repeat=bits)]
    return [
        FunctionSpec(bits, name, tuple(zip(inputs, (int(c) for c in outs))))
        for name, outs in _TABLES[bits].items()
    ]


def get_function(bits: int, name: str) -> FunctionSpec:
    for f in function_catalog(bits):
        if f.name == name.lower():
            return f
    raise DJError(f"unknown function {name!r} for {bits}-bit Deutsch-Jozsa")


def _check_arity(f: FunctionSpec, system: SpinSystem) -> None:
    if system.n_spins != f.bits + 1 or len(system.input_spins) != f.bits:
        raise DJError(f"{f.bits}-bit function needs a work qubit plus {f.bits} input spins, "
                      f"system has {system.n_spins} spins")


def compile_uf(f: FunctionSpec, system: SpinSystem) -> list[PulseEvent]:
    """Oracle pulses: identity, a work-spin pi_x, or transition pi_x pulses."""
    _check_arity(f, system)
    if f.kind == "constant":
        return [] if f(next(iter(f.mapping))) == 0 else [SelectivePulse(0, math.pi, 0.0)]
    return [
        TransitionPulse(TransitionRef.between("0" + x, "1" + x), math.pi, 0.0)
        for x, v in f.table if v
    ]


def oracle_map(f: FunctionSpec, label: str) -> str:
    r, x = label[0], label[1:]
    return str(int(r) ^ f(x)) + x


def dj_program(f: FunctionSpec, system: SpinSystem) -> PulseProgram:
    events = [HardPulse(None, math.pi / 2, math.pi / 2), EvolveT1(), *compile_uf(f, system), Acquire(None)]
    return PulseProgram(tuple(events), name=f"DJ{f.bits}-{f.name}")


@dataclass(frozen=True)
class IOCorrelationRow:
    qubit: int
    input_pair: tuple[str, str]
    output_pair: tuple[str, str]
    classification: str

    @property
    def observable(self) -> bool:
        return self.classification == "SQ"

    def to_json(self) -> dict:
        return {
            "qubit": f"I{self.qubit}",
            "input": "-".join(self.input_pair),
            "output": "-".join(self.output_pair),
            "class": self.classification,
        }


def symbolic_io(f: FunctionSpec) -> list[IOCorrelationRow]:
    """Where each input-qubit transition ends up under the oracle.

    Rows are ordered by qubit, then by ascending input pair.
    """
    n = f.bits + 1
    rows = []
    for q in range(1, n):
        pairs = []
        for k in range(2 ** (n - 1)):
            rest = format(k, f"0{n - 1}b")
            pairs.append((rest[:q] + "0" + rest[q:], rest[:q] + "1" + rest[q:]))
        for lo, up in sorted(pairs):
            out = (oracle_map(f, lo), oracle_map(f, up))
            rows.append(IOCorrelationRow(q, (lo, up), out, coherence_order_class(*out)))
    return rows


def predicted_presence(f: FunctionSpec) -> dict[int, bool]:
    present: dict[int, bool] = {}
    for row in symbolic_io(f):
        present[row.qubit] = present.get(row.qubit, False) or row.observable
    return present


@dataclass
class DJOutcome:
    function: str
    bits: int
    work_energy: float
    input_energies: dict[int, float]
    verdict: str
    threshold: float = PRESENCE_THRESHOLD
    bands: dict[int, tuple[float, float]] = field(default_factory=dict)

    @property
    def ratios(self) -> dict[int, float]:
        return {q: e / self.work_energy for q, e in self.input_energies.items()}

    def to_json(self, rows: list[IOCorrelationRow] | None = None) -> dict:
        out = {
            "function": self.function,
            "bits": self.bits,
            "bands": {
                f"I{q}": {
                    "low_hz": round(lo, 6),
                    "high_hz": round(hi, 6),
                    "energy": _round_sig(self.work_energy if q == 0 else self.input_energies[q]),
                    **({} if q == 0 else {"ratio": round(self.ratios[q], 6)}),
                }
                for q, (lo, hi) in sorted(self.bands.items())
            },
            "verdict": self.verdict,
        }
        if rows is not None:
            out["symbolic_rows"] = [r.to_json() for r in rows]
        return out


def _round_sig(x: float, digits: int = 9) -> float:
    return float(f"{x:.{digits}g}")


def multiplet_bands(system: SpinSystem, bin_hz: float) -> dict[int, tuple[float, float]]:
    """F2 band per spin: shift +- (sum of |J| to partners + 2 bins)."""
    bands = {}
    for k in range(system.n_spins):
        half = float(np.sum(np.abs(system.couplings[k]))) + 2 * bin_hz
        bands[k] = (system.shifts[k] - half, system.shifts[k] + half)
    spins = sorted(bands, key=lambda k: bands[k][0])
    for a, b in zip(spins, spins[1:]):
        if bands[a][1] >= bands[b][0]:
            raise DJError(f"multiplet bands of I{a} and I{b} overlap")
    return bands


def default_dj_acquisition(system: SpinSystem, n: int = 128, zerofill: int = 2) -> Acquisition:
    """Window covering every multiplet, centred between the outermost shifts."""
    lo, hi = float(system.shifts.min()), float(system.shifts.max())
    jmax = float(np.abs(system.couplings).sum(axis=1).max())
    sw = 1.5 * (hi - lo) + 4 * jmax
    if sw <= 0:
        sw = float(n)
    centre = 0.5 * (lo + hi)
    return Acquisition(n_t1=n, n_t2=n, dwell1=1 / sw, dwell2=1 / sw,
                       carrier1=centre, carrier2=centre, zerofill=zerofill)


def band_energies(spectrum: Spectrum2D, bands: dict[int, tuple[float, float]]) -> dict[int, float]:
    """Magnitude integrated over each F2 band and the whole F1 axis."""
    M = spectrum.magnitudes
    out = {}
    for k, (lo, hi) in bands.items():
        if lo < spectrum.axis2[0] or hi > spectrum.axis2[-1]:
            raise DJError(f"band of I{k} ({lo:.1f}..{hi:.1f} Hz) lies outside the F2 window")
        cols = (spectrum.axis2 >= lo) & (spectrum.axis2 <= hi)
        out[k] = float(M[:, cols].sum())
    return out


def run_dj(system: SpinSystem, f: FunctionSpec, acq: Acquisition | None = None,
           threshold: float = PRESENCE_THRESHOLD):
    """Simulate the 2D DJ experiment and classify ``f``.

    Returns ``(outcome, spectrum)``.  The verdict is constant iff every
    input qubit's band energy is at least ``threshold`` times the work
    qubit's band energy.
    """
    _check_arity(f, system)
    acq = acq or default_dj_acquisition(system)
    program = dj_program(f, system)
    _, spectrum, _ = run_program(system, program, acq)
    bands = multiplet_bands(system, spectrum.bin2)
    energies = band_energies(spectrum, bands)
    work = energies.pop(0)
    if work <= 0:
        raise DJError("no work-qubit signal; cannot normalise band energies")
    constant = all(e >= threshold * work for e in energies.values())
    outcome = DJOutcome(f.name, f.bits, work, energies, "constant" if constant else "balanced",
                        threshold, bands)
    return outcome, spectrum


def oracle_permutation(f: FunctionSpec) -> np.ndarray:
    """Permutation matrix of the oracle on the computational basis."""
    n = f.bits + 1
    P = np.zeros((2 ** n, 2 ** n))
    for k in range(2 ** n):
        lab = BasisLabel.from_index(k, n).bits
        P[int(oracle_map(f, lab), 2), k] = 1
    return P


def work_transitions(system: SpinSystem) -> list[TransitionRef]:
    return enumerate_single_quantum(system, 0)
