import itertools
import math

import numpy as np
import pytest

from nmrqc.engine import DensityState, apply, hard_pulse, transition_pulse
from nmrqc.gates import (
    GateError,
    GateSpec,
    catalog,
    compile_gate,
    gate_library,
    get_gate,
    mixing_events,
    truth_table_of,
)
from nmrqc.program import Acquire, EvolveT1, Gradient, SelectivePulse, TransitionPulse
from nmrqc.spins import TransitionRef

TWO_QUBIT = [g for g in gate_library() if g.arity == 2]
THREE_QUBIT = [g for g in gate_library() if g.arity == 3]


def _label_permutation(events, n):
    """Brute-force map label -> label for a sequence of pi pulses."""
    labels = ["".join(p) for p in itertools.product("01", repeat=n)]
    where = {lab: lab for lab in labels}
    for e in events:
        if isinstance(e, SelectivePulse):
            assert math.isclose(e.angle, math.pi)
            step = {lab: lab[:e.spin] + str(1 - int(lab[e.spin])) + lab[e.spin + 1:] for lab in labels}
        else:
            assert isinstance(e, TransitionPulse) and math.isclose(e.angle, math.pi)
            lo, up = str(e.transition.lower), str(e.transition.upper)
            step = {lab: lab for lab in labels}
            step[lo], step[up] = up, lo
        where = {start: step[now] for start, now in where.items()}
    return where


def _simulate_diagonal(system, events, pops):
    rho = DensityState(np.diag(pops))
    for e in events:
        if isinstance(e, SelectivePulse):
            U = hard_pulse(system, [e.spin], e.angle, e.phase)
        else:
            U = transition_pulse(system, e.transition, e.angle, e.phase)
        rho = apply(rho, U)
    return rho


def test_library_sizes():
    assert len(TWO_QUBIT) == 24
    assert [g.name for g in THREE_QUBIT] == ["NOP3", "NOT(I1)", "TOFFOLI", "ORNOR"]


def test_two_qubit_tables_are_complete():
    tables = {tuple(sorted(g.mapping.items())) for g in TWO_QUBIT}
    assert len(tables) == 24
    inputs = ["00", "01", "10", "11"]
    every = {tuple(sorted(zip(inputs, p))) for p in itertools.permutations(inputs)}
    assert tables == every


@pytest.mark.parametrize("name, table", [
    ("NOP", {"11": "11", "10": "10", "01": "01", "00": "00"}),
    ("XOR1", {"11": "01", "10": "10", "01": "11", "00": "00"}),
    ("SWAP+NOT", {"11": "00", "10": "10", "01": "01", "00": "11"}),
    ("SWAP", {"11": "11", "10": "01", "01": "10", "00": "00"}),
])
def test_two_qubit_truth_tables(name, table):
    assert truth_table_of(get_gate(name, 2)) == table


def test_toffoli_truth_table_and_recipe():
    spec = get_gate("TOFFOLI")
    flipped = {k: v for k, v in spec.mapping.items() if k != v}
    assert flipped == {"011": "111", "111": "011"}
    labels = [e.transition.spectator_label for e in spec.recipe]
    assert labels == ["011", "111"]
    assert all(e.transition.flipped_spin == 1 for e in spec.recipe)


def test_ornor_truth_table():
    spec = get_gate("ORNOR")
    for s, t, u in itertools.product((0, 1), repeat=3):
        assert spec.mapping[f"{s}{t}{u}"] == f"{s ^ (t | u)}{t}{u}"


def test_compile_layout(three_spin):
    program = compile_gate(get_gate("NOP", 2), three_spin)
    assert mixing_events(program) == ()
    assert isinstance(program.events[1], EvolveT1) and program.events[1].states
    assert isinstance(program.events[3], Gradient)
    assert program.acquire == Acquire((0,))


def test_swap_cascade_order(three_spin):
    pulses = mixing_events(compile_gate(get_gate("SWAP", 2), three_spin))
    assert [str(e.transition) for e in pulses] == [
        "110-111", "010-011", "101-111", "001-011", "110-111", "010-011"]


def test_not_i1_i2_uses_selective_pulses(three_spin):
    pulses = mixing_events(compile_gate(get_gate("NOT(I1,I2)", 2), three_spin))
    assert pulses == (SelectivePulse(1, math.pi, 0.0), SelectivePulse(2, math.pi, 0.0))


def test_arity_mismatch(three_spin, four_spin):
    with pytest.raises(GateError, match="system has 3 spins"):
        compile_gate(get_gate("TOFFOLI"), three_spin)
    with pytest.raises(GateError):
        compile_gate(get_gate("XOR1"), four_spin)
    with pytest.raises(GateError, match="acts on 3 qubits"):
        get_gate("TOFFOLI", 2)


def test_name_lookup():
    assert get_gate("xor1").name == "XOR1"
    with pytest.raises(GateError, match="ambiguous"):
        get_gate("NOT(I1)")
    assert get_gate("NOT(I1)", 3).arity == 3
    with pytest.raises(GateError, match="unknown"):
        get_gate("CNOTT")


def test_non_bijective_table_rejected():
    with pytest.raises(GateError, match="bijection"):
        GateSpec("BAD", 2, (("11", "00"), ("10", "00"), ("01", "01"), ("00", "11")), ())


def test_catalog_filter():
    assert len(catalog()) == 28
    assert [g["name"] for g in catalog(3)] == ["NOP3", "NOT(I1)", "TOFFOLI", "ORNOR"]
    assert catalog(2)[4]["recipe"] == ["tpulse 101-111 180 x", "tpulse 001-011 180 x"]


@pytest.mark.parametrize("spec", gate_library(), ids=lambda g: f"{g.name}/{g.arity}")
def test_recipe_permutes_populations_as_truth_table(spec, three_spin, four_spin):
    system = three_spin if spec.arity == 2 else four_spin
    n = system.n_spins
    perm = _label_permutation(spec.recipe, n)
    # oracle agrees with the declared table in both observer manifolds
    for obs in "01":
        for inp, out in spec.mapping.items():
            assert perm[obs + inp] == obs + out
    rng = np.random.default_rng(11)
    pops = rng.normal(size=system.dim)
    rho = _simulate_diagonal(system, mixing_events(compile_gate(spec, system)), pops)
    expected = np.zeros(system.dim)
    for start, end in perm.items():
        expected[int(end, 2)] = pops[int(start, 2)]
    assert np.allclose(np.diag(rho.matrix).real, expected, atol=1e-12)
    assert np.max(np.abs(rho.matrix - np.diag(np.diag(rho.matrix)))) < 1e-12


def test_swap_order_matters(three_spin):
    pulses = list(get_gate("SWAP", 2).recipe)
    pulses[0], pulses[2] = pulses[2], pulses[0]
    rng = np.random.default_rng(2)
    pops = rng.normal(size=8)
    good = _simulate_diagonal(three_spin, get_gate("SWAP", 2).recipe, pops)
    bad = _simulate_diagonal(three_spin, pulses, pops)
    assert not np.allclose(np.diag(good.matrix), np.diag(bad.matrix))
    assert _label_permutation(pulses, 3) != _label_permutation(get_gate("SWAP", 2).recipe, 3)


def test_zq_cascade_interchange(three_spin):
    # regressive pair 110-111 / 101-111 with three pi pulses swaps 110 and 101
    t_a = TransitionRef.between("110", "111")
    t_b = TransitionRef.between("101", "111")
    events = [TransitionPulse(t, math.pi, 0.0) for t in (t_a, t_b, t_a)]
    perm = _label_permutation(events, 3)
    assert {k: v for k, v in perm.items() if k != v} == {"110": "101", "101": "110"}
    pops = np.arange(8.0)
    rho = _simulate_diagonal(three_spin, events, pops)
    assert np.allclose(np.diag(rho.matrix).real, [0, 1, 2, 3, 4, 6, 5, 7])
