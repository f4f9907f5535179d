import math

import numpy as np
import pytest

from nmrqc.experiment import (
    Acquisition,
    CorrelationMap,
    Peak,
    RawData2D,
    ReadoutError,
    Spectrum2D,
    correlation_map,
    default_gate_acquisition,
    pick_peaks,
    process,
    run_2d,
    run_gate,
    run_program,
    verify_gate,
)
from nmrqc.gates import compile_gate, get_gate
from nmrqc.program import PulseProgram, SelectivePulse, parse_program
from nmrqc.spins import SpinSystem


def _tone(n1, n2, dwell, f1, f2, amp=1.0):
    t1 = np.arange(n1)[:, None] * dwell
    t2 = np.arange(n2)[None, :] * dwell
    return amp * np.exp(2j * np.pi * (f1 * t1 + f2 * t2))


def _grid_index(axis, f):
    return int(np.argmin(np.abs(axis - f)))


def test_process_zero_grid():
    spec = process(RawData2D(np.zeros((16, 32), dtype=complex), 1e-3, 1e-3))
    assert spec.magnitudes.shape == (32, 64)
    assert not spec.magnitudes.any()
    assert len(spec.axis1) == 32 and len(spec.axis2) == 64


def test_process_single_tone_maximum():
    dwell = 1 / 500
    spec = process(RawData2D(_tone(64, 64, dwell, 123.4, -56.7), dwell, dwell))
    i, j = np.unravel_index(np.argmax(spec.magnitudes), spec.magnitudes.shape)
    assert abs(spec.axis1[i] - 123.4) <= spec.bin1
    assert abs(spec.axis2[j] + 56.7) <= spec.bin2
    assert spec.magnitudes.min() >= 0


def test_process_parseval():
    rng = np.random.default_rng(0)
    raw = RawData2D(rng.normal(size=(32, 48)) + 1j * rng.normal(size=(32, 48)), 2e-3, 1e-3)
    lb = 7.0
    spec = process(raw, zerofill_factor=2, line_broaden=lb)
    w1 = np.exp(-np.pi * lb * np.arange(32) * 2e-3)
    w2 = np.exp(-np.pi * lb * np.arange(48) * 1e-3)
    time_power = np.sum(np.abs(raw.grid * np.outer(w1, w2)) ** 2)
    assert np.sum(spec.magnitudes ** 2) == pytest.approx(time_power, rel=1e-6)


def test_process_carrier_axes():
    raw = RawData2D(np.zeros((8, 8), dtype=complex), 0.01, 0.01, carrier1=1000.0, carrier2=-50.0)
    spec = process(raw, zerofill_factor=1)
    assert spec.axis1[4] == pytest.approx(1000.0)
    assert spec.axis2[4] == pytest.approx(-50.0)


def test_process_and_raw_validation():
    with pytest.raises(ValueError):
        process(RawData2D(np.zeros((8, 8)), 1e-3, 1e-3), zerofill_factor=0)
    with pytest.raises(ValueError):
        RawData2D(np.zeros(8), 1e-3, 1e-3)
    with pytest.raises(ValueError):
        RawData2D(np.zeros((8, 8)), 0.0, 1e-3)


def test_pick_single_peak_within_half_bin():
    dwell = 1 / 500
    spec = process(RawData2D(_tone(64, 64, dwell, 101.3, 37.9), dwell, dwell))
    peaks = pick_peaks(spec)
    assert len(peaks) == 1
    assert abs(peaks[0].f1 - 101.3) <= spec.bin1 / 2
    assert abs(peaks[0].f2 - 37.9) <= spec.bin2 / 2


def test_pick_two_equal_peaks():
    dwell = 1 / 500
    grid = _tone(64, 64, dwell, 100.0, 100.0) + _tone(64, 64, dwell, -120.0, -60.0)
    peaks = pick_peaks(process(RawData2D(grid, dwell, dwell)))
    assert len(peaks) == 2
    # each line sits on the other's magnitude tail, so heights agree only roughly
    assert peaks[0].magnitude == pytest.approx(peaks[1].magnitude, rel=0.05)
    assert sorted(round(p.f1) for p in peaks) == [-120, 100]


def test_pick_uniform_spectrum_reports_nothing():
    spec = Spectrum2D(np.ones((16, 16)), np.arange(16.0), np.arange(16.0))
    assert pick_peaks(spec) == []


def test_pick_threshold_validated():
    spec = Spectrum2D(np.ones((4, 4)), np.arange(4.0), np.arange(4.0))
    for bad in (0.0, 1.0):
        with pytest.raises(ValueError):
            pick_peaks(spec, bad)


def test_nop_peaks_lie_on_diagonal(three_spin):
    run = run_gate(three_spin, get_gate("NOP", 2))
    assert len(run.peaks) == 4
    for p in run.peaks:
        assert abs(p.f1 - p.f2) < run.spectrum.bin2


def test_observer_pi_mixing_sign_modulates(three_spin):
    acq = default_gate_acquisition(three_spin)
    nop = compile_gate(get_gate("NOP", 2), three_spin)
    events = list(nop.events)
    events.insert(4, SelectivePulse(0, math.pi, 0.0))
    flipped = PulseProgram(tuple(events), name="observer-pi")
    raw_nop, _, peaks_nop = run_program(three_spin, nop, acq)
    raw_pi, _, peaks_pi = run_program(three_spin, flipped, acq)
    assert np.allclose(raw_pi.grid, -raw_nop.grid, atol=1e-12)
    assert [(p.f1, p.f2) for p in peaks_pi] == [(p.f1, p.f2) for p in peaks_nop]


def test_uncoupled_eight_point_single_peak():
    system = SpinSystem([16.0, 5.0, -5.0], np.zeros((3, 3)), ("observer", "input", "input"))
    program = compile_gate(get_gate("NOP", 2), system)
    raw = run_2d(system, program, 8, 1 / 64, 8, 1 / 64)
    peaks = pick_peaks(process(raw))
    assert len(peaks) == 1
    assert peaks[0].f1 == pytest.approx(16.0, abs=4.0)
    assert peaks[0].f2 == pytest.approx(16.0, abs=4.0)


def test_run_2d_preconditions(three_spin):
    program = compile_gate(get_gate("NOP", 2), three_spin)
    with pytest.raises(ValueError, match="at least 8"):
        run_2d(three_spin, program, 4, 1e-3, 64, 1e-3)
    no_t1 = parse_program("pulse I0 90 y\nacquire I0")
    with pytest.raises(ValueError, match="no t1"):
        run_2d(three_spin, no_t1, 16, 1e-3, 16, 1e-3)


@pytest.mark.parametrize("name, expected", [
    ("NOP", {"11": "11", "10": "10", "01": "01", "00": "00"}),
    ("XOR1", {"11": "01", "10": "10", "01": "11", "00": "00"}),
    ("SWAP", {"11": "11", "10": "01", "01": "10", "00": "00"}),
])
def test_correlation_maps(three_spin, name, expected):
    run = run_gate(three_spin, get_gate(name, 2))
    assert run.cmap == CorrelationMap.from_mapping(expected)
    assert run.report.passed


def test_verify_xor1_against_xnor1(three_spin):
    run = run_gate(three_spin, get_gate("XOR1", 2))
    report = verify_gate(run.cmap, get_gate("XNOR1", 2))
    assert not report.passed
    # XOR1 and XNOR1 disagree on every input row
    assert [m["input"] for m in report.mismatches] == ["11", "10", "01", "00"]
    assert report.mismatches[0] == {"input": "11", "expected": "11", "observed": ["01"]}


def test_verify_identity_map_against_nop():
    cmap = CorrelationMap.from_mapping({k: k for k in ("11", "10", "01", "00")})
    assert verify_gate(cmap, get_gate("NOP", 2)).passed
    assert cmap.to_json() == {"pairs": [["11", "11"], ["10", "10"], ["01", "01"], ["00", "00"]]}


def test_verify_reports_missing_and_extra_rows():
    cmap = CorrelationMap(frozenset({("11", "11"), ("11", "10"), ("01", "01"), ("00", "00")}))
    report = verify_gate(cmap, get_gate("NOP", 2))
    assert [m["input"] for m in report.mismatches] == ["11", "10"]


def test_correlation_map_rejects_far_peaks(three_spin):
    with pytest.raises(ReadoutError, match="cannot assign"):
        correlation_map([Peak(2010.0, 1900.0, 1.0)], three_spin)


def test_correlation_map_needs_distinct_lines():
    system = SpinSystem([100.0, 20.0, -20.0], np.zeros((3, 3)), ("observer", "input", "input"))
    with pytest.raises(ReadoutError, match="not pairwise distinct"):
        correlation_map([], system)


def test_readout_invariant_under_doubling(three_spin):
    acq = default_gate_acquisition(three_spin)
    doubled = acq.replace(n_t1=2 * acq.n_t1, n_t2=2 * acq.n_t2)
    for name in ("XOR1", "SWAP+NOT", "NOT(I2)+XNOR1"):
        spec = get_gate(name, 2)
        assert run_gate(three_spin, spec, acq).cmap == run_gate(three_spin, spec, doubled).cmap


def test_acquisition_replace_ignores_none():
    acq = Acquisition(n_t1=64)
    assert acq.replace(n_t1=None, zerofill=4) == Acquisition(n_t1=64, zerofill=4)


def test_axial_signal_cancelled(three_spin):
    # reordering the SWAP cascade leaves input-spin polarisation on the
    # observer lines; without cycling it shows up at 0 Hz, aliased into F1
    acq = default_gate_acquisition(three_spin)
    program = compile_gate(get_gate("SWAP", 2), three_spin)
    events = list(program.events)
    events[4], events[6] = events[6], events[4]
    _, spectrum, peaks = run_program(three_spin, PulseProgram(tuple(events)), acq)
    lines = sorted(three_spin.observer_lines(0).values())
    for p in peaks:
        assert min(abs(p.f1 - nu) for nu in lines) < spectrum.bin1


def test_signal_without_preparation_is_axial(three_spin):
    program = parse_program("t1\npulse I0 90 y\nacquire I0")
    raw = run_2d(three_spin, program, 8, 1e-3, 8, 1e-3)
    assert np.allclose(raw.grid, 0)
