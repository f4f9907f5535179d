"""Two-dimensional experiment driver, spectral processing and readout.

The t1 loop runs the program once per increment: events before the ``t1``
marker prepare the state, the marker is free evolution for ``k * dwell1``,
and the remaining events (gradient, mixing, read pulses) precede the
acquisition of an FID.  The readout is the set of (F1, F2) cross peaks on
the observer lines, translated into input -> output basis labels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import engine
from .gates import GateSpec, compile_gate
from .program import (
    Acquire,
    Delay,
    EvolveT1,
    Gradient,
    HardPulse,
    PulseProgram,
    SelectivePulse,
    TransitionPulse,
)
from .spins import SpinSystem


class ReadoutError(ValueError):
    """Peaks could not be assigned to observer lines."""


@dataclass(frozen=True, eq=False)
class RawData2D:
    grid: np.ndarray
    dwell1: float
    dwell2: float
    carrier1: float = 0.0
    carrier2: float = 0.0

    def __post_init__(self):
        if np.ndim(self.grid) != 2:
            raise ValueError("raw data must be a rectangular 2D grid")
        if self.dwell1 <= 0 or self.dwell2 <= 0:
            raise ValueError("dwell times must be positive")


@dataclass(frozen=True, eq=False)
class Spectrum2D:
    magnitudes: np.ndarray
    axis1: np.ndarray
    axis2: np.ndarray

    @property
    def bin1(self) -> float:
        return float(self.axis1[1] - self.axis1[0])

    @property
    def bin2(self) -> float:
        return float(self.axis2[1] - self.axis2[0])

    @property
    def width1(self) -> float:
        return self.bin1 * len(self.axis1)

    @property
    def width2(self) -> float:
        return self.bin2 * len(self.axis2)


@dataclass(frozen=True)
class Peak:
    f1: float
    f2: float
    magnitude: float


@dataclass(frozen=True)
class CorrelationMap:
    pairs: frozenset[tuple[str, str]]

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "CorrelationMap":
        return cls(frozenset(mapping.items()))

    def sorted_pairs(self) -> list[tuple[str, str]]:
        return sorted(self.pairs, reverse=True)

    def as_dict(self) -> dict[str, str]:
        return dict(self.pairs)

    def to_json(self) -> dict:
        return {"pairs": [list(p) for p in self.sorted_pairs()]}


@dataclass
class GateReport:
    gate: str
    passed: bool
    mismatches: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"gate": self.gate, "passed": self.passed, "mismatches": self.mismatches}


@dataclass(frozen=True)
class Acquisition:
    """Sampling and processing parameters for one 2D run."""

    n_t1: int = 128
    n_t2: int = 128
    dwell1: float = 1e-3
    dwell2: float = 1e-3
    carrier1: float = 0.0
    carrier2: float = 0.0
    zerofill: int = 2
    line_broaden: float | None = None
    rel_threshold: float = 0.2

    def replace(self, **changes) -> "Acquisition":
        values = {k: getattr(self, k) for k in self.__dataclass_fields__}
        values.update({k: v for k, v in changes.items() if v is not None})
        return Acquisition(**values)


def _propagator(system: SpinSystem, event, phase_shift: float = 0.0) -> engine.Propagator | None:
    if isinstance(event, HardPulse):
        return engine.hard_pulse(system, event.spins, event.angle, event.phase + phase_shift)
    if isinstance(event, SelectivePulse):
        return engine.hard_pulse(system, [event.spin], event.angle, event.phase + phase_shift)
    if isinstance(event, TransitionPulse):
        return engine.transition_pulse(system, event.transition, event.angle, event.phase + phase_shift)
    if isinstance(event, Delay):
        return engine.free_evolution(system, event.seconds)
    return None


def _compile_segment(system, events, phase_shift=0.0):
    steps = []
    for e in events:
        if isinstance(e, Gradient):
            steps.append("grad")
        elif isinstance(e, (EvolveT1, Acquire)):
            raise ValueError(f"unexpected {type(e).__name__} inside a segment")
        else:
            steps.append(_propagator(system, e, phase_shift))
    return steps


def _run_segment(state, steps):
    for step in steps:
        state = engine.gradient_crush(state) if step == "grad" else engine.apply(state, step)
    return state


def run_2d(system: SpinSystem, program: PulseProgram, n_t1: int, dwell1: float,
           n_t2: int, dwell2: float, carrier1: float = 0.0, carrier2: float = 0.0) -> RawData2D:
    """Simulate the t1 series of ``program`` and return the complex grid.

    The preparation pulses (those before the t1 marker) are cycled through
    0 and 180 degrees with alternating receiver sign, which cancels axial
    peaks: signal that never evolved during t1.  With ``t1 states`` the
    experiment is also repeated with every preparation phase retarded by 90
    degrees and the datasets are combined as ``s0 + i s90``, restoring sign
    discrimination in F1 when the t1 label is stored as populations.
    Signals are demodulated at the carrier frequencies so the spectral
    window may sit anywhere.

    Everything after the preparation is linear in the density matrix, so
    the cycled scans are summed into one effective (non-Hermitian) state
    before the t1 loop instead of being simulated separately.
    """
    if n_t1 < 8 or n_t2 < 8:
        raise ValueError("need at least 8 points in each dimension")
    k1 = program.t1_index
    if k1 is None:
        raise ValueError(f"program {program.name!r} has no t1 marker")
    program.validate(system)
    marker: EvolveT1 = program.events[k1]
    pre, post = program.events[:k1], program.events[k1 + 1:-1]
    detect_spins = program.acquire.spins

    E = system.energies()
    dE = E[:, None] - E[None, :]
    t1 = np.arange(n_t1) * dwell1
    t2 = np.arange(n_t2) * dwell2
    post_steps = _compile_segment(system, post)
    rho0 = engine.equilibrium_state(system)

    def prepared(phase_shift):
        scans = (_run_segment(rho0, _compile_segment(system, pre, phase_shift + cycle)).matrix
                 for cycle in (0.0, math.pi))
        return 0.5 * (next(scans) - next(scans))

    rho_pre = prepared(0.0)
    if marker.states:
        rho_pre = rho_pre + 1j * prepared(-math.pi / 2)
    grid = np.empty((n_t1, n_t2), dtype=complex)
    for k, t in enumerate(t1):
        rho = engine.DensityState(rho_pre * np.exp(-2j * np.pi * dE * t))
        rho = _run_segment(rho, post_steps)
        grid[k] = engine.run_fid(system, rho, detect_spins, n_t2, dwell2)
    grid *= np.exp(-2j * np.pi * carrier1 * t1)[:, None]
    grid *= np.exp(-2j * np.pi * carrier2 * t2)[None, :]
    return RawData2D(grid, dwell1, dwell2, carrier1, carrier2)


def process(raw: RawData2D, zerofill_factor: int = 2, line_broaden: float | None = None) -> Spectrum2D:
    """Exponential apodisation, zero filling, 2D DFT and magnitude.

    ``line_broaden`` (Hz) defaults to ``2 / (n * dwell)`` along each axis.
    The transform is unitary, so spectral power equals the power of the
    apodised time-domain data.
    """
    if zerofill_factor < 1:
        raise ValueError("zerofill_factor must be >= 1")
    n1, n2 = raw.grid.shape
    lb1 = 2.0 / (n1 * raw.dwell1) if line_broaden is None else line_broaden
    lb2 = 2.0 / (n2 * raw.dwell2) if line_broaden is None else line_broaden
    w1 = np.exp(-np.pi * lb1 * np.arange(n1) * raw.dwell1)
    w2 = np.exp(-np.pi * lb2 * np.arange(n2) * raw.dwell2)
    data = raw.grid * np.outer(w1, w2)
    N1, N2 = n1 * zerofill_factor, n2 * zerofill_factor
    spec = np.fft.fftshift(np.fft.fft2(data, s=(N1, N2), norm="ortho"))
    axis1 = raw.carrier1 + np.fft.fftshift(np.fft.fftfreq(N1, raw.dwell1))
    axis2 = raw.carrier2 + np.fft.fftshift(np.fft.fftfreq(N2, raw.dwell2))
    return Spectrum2D(np.abs(spec), axis1, axis2)


def _parabolic(left: float, mid: float, right: float) -> float:
    denom = left - 2 * mid + right
    return 0.0 if denom == 0 else 0.5 * (left - right) / denom


def pick_peaks(spec: Spectrum2D, rel_threshold: float = 0.2) -> list[Peak]:
    """Strict local maxima (8-neighbourhood, periodic edges) above threshold."""
    if not 0 < rel_threshold < 1:
        raise ValueError("rel_threshold must lie in (0, 1)")
    M = spec.magnitudes
    if M.size == 0:
        raise ValueError("empty spectrum")
    top = M.max()
    if top <= 0:
        return []
    is_max = M >= rel_threshold * top
    for d1 in (-1, 0, 1):
        for d2 in (-1, 0, 1):
            if d1 or d2:
                is_max &= M > np.roll(M, (d1, d2), axis=(0, 1))
    N1, N2 = M.shape
    peaks = []
    for i, j in zip(*np.nonzero(is_max)):
        di = _parabolic(M[(i - 1) % N1, j], M[i, j], M[(i + 1) % N1, j])
        dj = _parabolic(M[i, (j - 1) % N2], M[i, j], M[i, (j + 1) % N2])
        peaks.append(Peak(float(spec.axis1[i] + di * spec.bin1),
                          float(spec.axis2[j] + dj * spec.bin2),
                          float(M[i, j])))
    peaks.sort(key=lambda p: (-p.magnitude, p.f1, p.f2))
    return peaks


def _circular(d: float, width: float | None) -> float:
    if width is None:
        return abs(d)
    return abs(math.remainder(d, width))


def correlation_map(peaks: list[Peak], system: SpinSystem, spectrum: Spectrum2D | None = None,
                    observer: int = 0) -> CorrelationMap:
    """Assign each peak's F1 and F2 to the nearest observer line.

    Labels are the states of the remaining spins.  When ``spectrum`` is
    given, distances are measured modulo its spectral widths, so lines
    folded into the window are still recognised.
    """
    lines = system.observer_lines(observer)
    freqs = sorted(lines.values())
    spacing = min((b - a for a, b in zip(freqs, freqs[1:])), default=math.inf)
    if spacing <= 1e-9:
        raise ReadoutError("observer lines are not pairwise distinct")
    tol = spacing / 2
    w1 = spectrum.width1 if spectrum is not None else None
    w2 = spectrum.width2 if spectrum is not None else None

    def nearest(f, width):
        label, dist = min(((lab, _circular(f - nu, width)) for lab, nu in lines.items()),
                          key=lambda x: x[1])
        return (label, dist) if dist <= tol else (None, dist)

    pairs, bad = set(), []
    for p in peaks:
        a, da = nearest(p.f1, w1)
        b, db = nearest(p.f2, w2)
        if a is None or b is None:
            bad.append(f"({p.f1:.2f}, {p.f2:.2f}) Hz off by ({da:.2f}, {db:.2f}) Hz")
        else:
            pairs.add((a, b))
    if bad:
        raise ReadoutError("cannot assign peaks to observer lines: " + "; ".join(bad))
    return CorrelationMap(frozenset(pairs))


def verify_gate(cmap: CorrelationMap, spec: GateSpec) -> GateReport:
    expected = spec.mapping
    observed: dict[str, list[str]] = {}
    for a, b in cmap.pairs:
        observed.setdefault(a, []).append(b)
    mismatches = []
    for inp in sorted(set(expected) | set(observed), reverse=True):
        got = sorted(observed.get(inp, []))
        want = expected.get(inp)
        if got != ([want] if want is not None else []):
            mismatches.append({"input": inp, "expected": want, "observed": got})
    return GateReport(spec.name, not mismatches, mismatches)


def default_gate_acquisition(system: SpinSystem, n: int = 128, bins_per_spacing: float = 16.0,
                             observer: int = 0) -> Acquisition:
    """Window centred on the observer multiplet with fixed digital resolution.

    The spectral width is ``n * spacing / bins_per_spacing`` for the closest
    pair of observer lines, but never less than 1.25 times the multiplet
    span.  Magnitude-mode tails fall off only as 1/distance, so two lines
    must sit more than about 10 raw bins apart for the ridge between them to
    stay under a 0.2 relative threshold.
    """
    freqs = sorted(system.observer_lines(observer).values())
    spacing = min((b - a for a, b in zip(freqs, freqs[1:])), default=0.0)
    span = freqs[-1] - freqs[0]
    if spacing > 1e-9:
        sw = n * spacing / bins_per_spacing
        sw = max(sw, 1.25 * span)
    else:
        sw = float(n)
    centre = 0.5 * (freqs[0] + freqs[-1])
    return Acquisition(n_t1=n, n_t2=n, dwell1=1.0 / sw, dwell2=1.0 / sw,
                       carrier1=centre, carrier2=centre)


@dataclass
class GateRun:
    gate: GateSpec
    program: PulseProgram
    raw: RawData2D
    spectrum: Spectrum2D
    peaks: list[Peak]
    cmap: CorrelationMap
    report: GateReport


def run_program(system: SpinSystem, program: PulseProgram, acq: Acquisition):
    raw = run_2d(system, program, acq.n_t1, acq.dwell1, acq.n_t2, acq.dwell2, acq.carrier1, acq.carrier2)
    spectrum = process(raw, acq.zerofill, acq.line_broaden)
    return raw, spectrum, pick_peaks(spectrum, acq.rel_threshold)


def run_gate(system: SpinSystem, spec: GateSpec, acq: Acquisition | None = None,
             expect: GateSpec | None = None) -> GateRun:
    """Compile, simulate, process and read out one gate."""
    acq = acq or default_gate_acquisition(system)
    program = compile_gate(spec, system)
    raw, spectrum, peaks = run_program(system, program, acq)
    cmap = correlation_map(peaks, system, spectrum)
    report = verify_gate(cmap, expect or spec)
    return GateRun(spec, program, raw, spectrum, peaks, cmap, report)
