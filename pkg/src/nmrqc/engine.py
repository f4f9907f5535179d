"""Deviation density matrices, ideal pulse propagators and detection.

Pulses are instantaneous ideal rotations ``exp(-i angle (cos(phase) I_x +
sin(phase) I_y))``.  Free evolution follows the secular Hamiltonian of
:class:`~nmrqc.spins.SpinSystem`, which is diagonal in the product basis, so
no matrix exponentials are ever needed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np

from .spins import SpinSystem, TransitionRef, all_single_quantum, transition_frequency

_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DensityState:
    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] & (m.shape[0] - 1):
            raise ValueError(f"density matrix must be 2^n x 2^n, got shape {m.shape}")
        object.__setattr__(self, "matrix", m)

    @property
    def n_spins(self) -> int:
        return self.matrix.shape[0].bit_length() - 1

    @property
    def populations(self) -> np.ndarray:
        return np.diag(self.matrix).real


@dataclass(frozen=True, eq=False)
class Propagator:
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _frozen(self.matrix))

    def __matmul__(self, other: "Propagator") -> "Propagator":
        return Propagator(self.matrix @ other.matrix)

    def unitarity_error(self) -> float:
        m = self.matrix
        return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))


@lru_cache(maxsize=None)
def spin_operator(n_spins: int, spin: int, axis: str) -> np.ndarray:
    """Single-spin operator I_x, I_y, I_z or I_+ of ``spin`` on the full space."""
    single = {"x": _SX / 2, "y": _SY / 2, "z": _SZ / 2, "+": (_SX + 1j * _SY) / 2}[axis]
    op = np.ones((1, 1), dtype=complex)
    for k in range(n_spins):
        op = np.kron(op, single if k == spin else np.eye(2))
    op.setflags(write=False)
    return op


def _rotation2(angle: float, phase: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    off = -1j * s * np.exp(-1j * phase)
    return np.array([[c, off], [-1j * s * np.exp(1j * phase), c]], dtype=complex)


def equilibrium_state(system: SpinSystem) -> DensityState:
    """High-temperature deviation state: sum of I_z with equal weights."""
    n = system.n_spins
    return DensityState(sum(spin_operator(n, k, "z") for k in range(n)))


def hard_pulse(system: SpinSystem, spins: Iterable[int] | None, angle: float, phase: float = 0.0) -> Propagator:
    """Spin-selective (or non-selective, ``spins=None``) rotation."""
    n = system.n_spins
    targets = set(range(n)) if spins is None else set(spins)
    if not targets:
        raise ValueError("hard pulse needs at least one spin")
    if not targets <= set(range(n)):
        raise IndexError(f"spin indices {sorted(targets)} out of range for {n} spins")
    rot = _rotation2(angle, phase)
    U = np.ones((1, 1), dtype=complex)
    for k in range(n):
        U = np.kron(U, rot if k in targets else np.eye(2))
    return Propagator(U)


def _degenerate_lines(system: SpinSystem) -> frozenset[str]:
    freqs = [(str(t), transition_frequency(system, t)) for t in all_single_quantum(system)]
    clash = set()
    for i, (a, fa) in enumerate(freqs):
        for b, fb in freqs[i + 1:]:
            if abs(fa - fb) < 1e-9:
                clash.update((a, b))
    return frozenset(clash)


def transition_pulse(system: SpinSystem, t: TransitionRef, angle: float, phase: float = 0.0) -> Propagator:
    """Rotation restricted to the two-level subspace of one transition."""
    if t.n_spins != system.n_spins:
        raise ValueError(f"transition {t} is not resolvable in a {system.n_spins}-spin system")
    if str(t) in _degenerate_lines(system):
        warnings.warn(f"transition {t} shares its frequency with another line; ideal selectivity assumed", stacklevel=2)
    U = np.eye(system.dim, dtype=complex)
    idx = [t.lower.index, t.upper.index]
    U[np.ix_(idx, idx)] = _rotation2(angle, phase)
    return Propagator(U)


def free_evolution(system: SpinSystem, duration: float) -> Propagator:
    if duration < 0:
        raise ValueError("duration must be non-negative")
    return Propagator(np.diag(np.exp(-2j * np.pi * system.energies() * duration)))


def gradient_crush(state: DensityState) -> DensityState:
    """Idealised z-gradient: every off-diagonal element is destroyed."""
    return DensityState(np.diag(np.diag(state.matrix)))


def apply(state: DensityState, U: Propagator) -> DensityState:
    if U.matrix.shape != state.matrix.shape:
        raise ValueError(f"propagator shape {U.matrix.shape} does not match state shape {state.matrix.shape}")
    return DensityState(U.matrix @ state.matrix @ U.matrix.conj().T)


def detection_operator(n_spins: int, spins: Iterable[int] | None) -> np.ndarray:
    targets = range(n_spins) if spins is None else list(spins)
    if not targets:
        raise ValueError("detect set must not be empty")
    return sum(spin_operator(n_spins, k, "+") for k in targets)


def detect(state: DensityState, spins: Iterable[int] | None) -> complex:
    """Quadrature signal Tr(rho sum_k I_k+)."""
    op = detection_operator(state.n_spins, spins)
    return complex(np.trace(state.matrix @ op))


def run_fid(system: SpinSystem, state: DensityState, spins: Iterable[int] | None,
            n_points: int, dwell: float) -> np.ndarray:
    """Free induction decay sampled at ``k * dwell``, ``k = 0 .. n_points-1``.

    Uses the diagonal propagator directly: element (a, b) of the state
    rotates as ``exp(-2 pi i (E_a - E_b) t)``, and only elements where the
    detection operator is nonzero contribute.
    """
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    op = detection_operator(system.n_spins, spins)
    rows, cols = np.nonzero(op.T)
    weights = state.matrix[rows, cols] * op.T[rows, cols]
    E = system.energies()
    freqs = E[rows] - E[cols]
    t = np.arange(n_points) * dwell
    return np.exp(-2j * np.pi * np.outer(t, freqs)) @ weights
