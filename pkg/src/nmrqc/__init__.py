"""Simulated two-dimensional NMR quantum computing with selective pulses."""

from .dj import function_catalog, run_dj, symbolic_io
from .engine import (
    DensityState,
    Propagator,
    apply,
    detect,
    equilibrium_state,
    free_evolution,
    gradient_crush,
    hard_pulse,
    run_fid,
    transition_pulse,
)
from .experiment import correlation_map, pick_peaks, process, run_2d, run_gate, verify_gate
from .gates import compile_gate, gate_library, get_gate, truth_table_of
from .program import parse_program, serialize_program
from .spins import (
    BasisLabel,
    SpinSystem,
    TransitionRef,
    build_system,
    coherence_order_class,
    connectivity,
    enumerate_single_quantum,
    level_energy,
    load_system,
    transition_frequency,
)

__version__ = "0.1.0"
