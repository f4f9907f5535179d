"""Weakly coupled spin-1/2 systems: levels, transitions and their labels.

Basis labels are bit strings ``b0 b1 ... b(n-1)`` in spin order, with the
observer (or work) spin first.  Bit ``0`` is the alpha state (m = +1/2) and
bit ``1`` the beta state (m = -1/2).  The label read as a binary number is
also the row index of that state in every matrix built by
:mod:`nmrqc.engine`.

Energies are first-order (secular) weak-coupling energies in Hz::

    E = sum_i nu_i m_i + sum_{i<j} J_ij m_i m_j
"""

from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

DISTINGUISHED_ROLES = ("observer", "work")
ROLES = DISTINGUISHED_ROLES + ("input",)


class SpinSystemError(ValueError):
    """Raised for an invalid system description."""


class DegenerateSpectrumWarning(UserWarning):
    """Lines that must be told apart coincide in frequency."""


class WeakCouplingWarning(UserWarning):
    """A coupling is not small compared with the shift difference."""


def _as_label(bits: str | Sequence[int]) -> str:
    if isinstance(bits, str):
        label = bits
    else:
        label = "".join(str(int(b)) for b in bits)
    if not label or set(label) - {"0", "1"}:
        raise ValueError(f"malformed basis label {bits!r}")
    return label


@dataclass(frozen=True)
class BasisLabel:
    bits: str

    def __post_init__(self):
        object.__setattr__(self, "bits", _as_label(self.bits))

    def __len__(self) -> int:
        return len(self.bits)

    def __str__(self) -> str:
        return self.bits

    @property
    def index(self) -> int:
        return int(self.bits, 2)

    def flip(self, spin: int) -> "BasisLabel":
        b = list(self.bits)
        b[spin] = "1" if b[spin] == "0" else "0"
        return BasisLabel("".join(b))

    def without(self, spin: int) -> str:
        """Bits of every spin except ``spin`` (the label a transition carries)."""
        return self.bits[:spin] + self.bits[spin + 1:]

    @classmethod
    def from_index(cls, index: int, n_spins: int) -> "BasisLabel":
        return cls(format(index, f"0{n_spins}b"))


@dataclass(frozen=True)
class TransitionRef:
    """A single-quantum transition between two basis states.

    ``lower`` carries bit 0 on the flipped spin and ``upper`` carries bit 1;
    this is a labelling convention and says nothing about which level has
    the higher energy.
    """

    lower: BasisLabel
    upper: BasisLabel
    flipped_spin: int

    def __post_init__(self):
        a, b = self.lower.bits, self.upper.bits
        diff = [i for i, (x, y) in enumerate(zip(a, b)) if x != y]
        if len(a) != len(b) or diff != [self.flipped_spin]:
            raise ValueError(f"{a}-{b} is not a single-quantum transition of spin {self.flipped_spin}")
        if a[self.flipped_spin] != "0":
            raise ValueError(f"lower level {a} must carry bit 0 on spin {self.flipped_spin}")

    @classmethod
    def between(cls, a: str | BasisLabel, b: str | BasisLabel) -> "TransitionRef":
        """Build from two labels in either order."""
        a = a if isinstance(a, BasisLabel) else BasisLabel(a)
        b = b if isinstance(b, BasisLabel) else BasisLabel(b)
        if len(a) != len(b):
            raise ValueError(f"labels {a} and {b} differ in length")
        diff = [i for i, (x, y) in enumerate(zip(a.bits, b.bits)) if x != y]
        if len(diff) != 1:
            raise ValueError(f"{a}-{b} is not a single-quantum transition")
        spin = diff[0]
        if a.bits[spin] == "1":
            a, b = b, a
        return cls(a, b, spin)

    @property
    def spectator_label(self) -> str:
        return self.lower.without(self.flipped_spin)

    @property
    def n_spins(self) -> int:
        return len(self.lower)

    def __str__(self) -> str:
        return f"{self.lower}-{self.upper}"


@dataclass(frozen=True, eq=False)
class SpinSystem:
    """Shifts and couplings of ``n_spins`` weakly coupled spins (all in Hz)."""

    shifts: np.ndarray
    couplings: np.ndarray
    roles: tuple[str, ...]
    name: str = ""
    weak_coupling_ok: bool = field(init=False, default=True)

    def __post_init__(self):
        shifts = np.array(self.shifts, dtype=float).reshape(-1)
        n = shifts.size
        J = np.array(self.couplings, dtype=float)
        if J.shape != (n, n):
            raise SpinSystemError(f"couplings must be a {n}x{n} matrix, got shape {J.shape}")
        if not np.array_equal(J, J.T):
            raise SpinSystemError("asymmetric couplings")
        if np.any(np.diag(J) != 0):
            raise SpinSystemError("coupling matrix diagonal must be zero")
        roles = tuple(self.roles)
        if len(roles) != n:
            raise SpinSystemError(f"expected {n} roles, got {len(roles)}")
        for r in roles:
            if r not in ROLES:
                raise SpinSystemError(f"unknown role {r!r}")
        n_dist = sum(r in DISTINGUISHED_ROLES for r in roles)
        if n_dist > 1:
            raise SpinSystemError("duplicate observer/work role")
        if n_dist == 1 and roles[0] not in DISTINGUISHED_ROLES:
            raise SpinSystemError("the observer/work spin must be spin 0")
        shifts.setflags(write=False)
        J.setflags(write=False)
        object.__setattr__(self, "shifts", shifts)
        object.__setattr__(self, "couplings", J)
        object.__setattr__(self, "roles", roles)
        ok = all(
            abs(J[i, j]) < abs(shifts[i] - shifts[j])
            for i, j in itertools.combinations(range(n), 2)
        )
        object.__setattr__(self, "weak_coupling_ok", ok)

    @property
    def n_spins(self) -> int:
        return self.shifts.size

    @property
    def dim(self) -> int:
        return 2 ** self.n_spins

    @property
    def input_spins(self) -> list[int]:
        return [i for i, r in enumerate(self.roles) if r == "input"]

    @property
    def labels(self) -> list[BasisLabel]:
        return [BasisLabel.from_index(k, self.n_spins) for k in range(self.dim)]

    def energies(self) -> np.ndarray:
        """Level energies (Hz) indexed by basis index."""
        m = 0.5 - np.array([[int(c) for c in lab.bits] for lab in self.labels], dtype=float)
        return m @ self.shifts + 0.5 * np.einsum("ki,ij,kj->k", m, self.couplings, m)

    def observer_lines(self, spin: int = 0) -> dict[str, float]:
        """Map spectator label -> line frequency for every transition of ``spin``."""
        return {
            t.spectator_label: transition_frequency(self, t)
            for t in enumerate_single_quantum(self, spin)
        }

    def to_dict(self) -> dict:
        return {
            "spins": self.n_spins,
            "shifts_hz": self.shifts.tolist(),
            "j_hz": self.couplings.tolist(),
            "roles": list(self.roles),
        }


def build_system(config: dict) -> SpinSystem:
    """Validate a system description and return a :class:`SpinSystem`.

    ``config`` follows the JSON layout
    ``{"spins": N, "shifts_hz": [...], "j_hz": [[...]], "roles": [...]}``.
    ``j_hz`` may also be a mapping ``{"0-1": J01, ...}``.
    """
    try:
        n = int(config["spins"])
        shifts = config["shifts_hz"]
        J = config["j_hz"]
        roles = config["roles"]
    except KeyError as exc:
        raise SpinSystemError(f"system description lacks {exc.args[0]!r}") from None
    if not 2 <= n <= 4:
        raise SpinSystemError(f"n_spins must be between 2 and 4, got {n}")
    if len(shifts) != n:
        raise SpinSystemError(f"expected {n} shifts, got {len(shifts)}")
    if isinstance(J, dict):
        mat = np.zeros((n, n))
        for key, value in J.items():
            i, j = (int(x) for x in key.split("-"))
            mat[i, j] = mat[j, i] = value
        J = mat
    system = SpinSystem(shifts, J, tuple(roles), name=config.get("name", ""))
    if sum(r in DISTINGUISHED_ROLES for r in system.roles) != 1:
        raise SpinSystemError("exactly one spin must have role observer or work")

    if not system.weak_coupling_ok:
        warnings.warn("weak-coupling condition |J_ij| < |nu_i - nu_j| violated", WeakCouplingWarning, stacklevel=2)
    lines = sorted(system.observer_lines(0).values())
    if np.any(np.diff(lines) < 1e-9):
        warnings.warn("observer lines are degenerate; input states cannot be resolved", DegenerateSpectrumWarning, stacklevel=2)
    return system


def load_system(path: str | Path) -> SpinSystem:
    with open(path, encoding="utf-8") as fh:
        config = json.load(fh)
    config.setdefault("name", Path(path).stem)
    return build_system(config)


def _check_label(system: SpinSystem, label: BasisLabel | str) -> BasisLabel:
    label = label if isinstance(label, BasisLabel) else BasisLabel(label)
    if len(label) != system.n_spins:
        raise ValueError(f"label {label} has {len(label)} bits, system has {system.n_spins} spins")
    return label


def level_energy(system: SpinSystem, label: BasisLabel | str) -> float:
    label = _check_label(system, label)
    m = np.array([0.5 - int(c) for c in label.bits])
    return float(m @ system.shifts + 0.5 * m @ system.couplings @ m)


def transition_frequency(system: SpinSystem, t: TransitionRef) -> float:
    """Signed line frequency of ``t`` (Hz) as seen by quadrature detection.

    Equals ``E(lower) - E(upper)``; for spin k this is
    ``nu_k + sum_j J_kj (1/2 - b_j)`` over the spectator bits.
    """
    if t.n_spins != system.n_spins:
        raise ValueError(f"transition {t} does not belong to a {system.n_spins}-spin system")
    return level_energy(system, t.lower) - level_energy(system, t.upper)


def enumerate_single_quantum(system: SpinSystem, spin: int) -> list[TransitionRef]:
    """All transitions of ``spin``, spectator labels in descending binary order."""
    n = system.n_spins
    if not 0 <= spin < n:
        raise IndexError(f"spin index {spin} out of range for {n} spins")
    out = []
    for k in reversed(range(2 ** (n - 1))):
        spect = format(k, f"0{n - 1}b") if n > 1 else ""
        lower = spect[:spin] + "0" + spect[spin:]
        upper = spect[:spin] + "1" + spect[spin:]
        out.append(TransitionRef(BasisLabel(lower), BasisLabel(upper), spin))
    return out


def all_single_quantum(system: SpinSystem) -> list[TransitionRef]:
    return [t for k in range(system.n_spins) for t in enumerate_single_quantum(system, k)]


def coherence_order_class(a: BasisLabel | str, b: BasisLabel | str) -> str:
    """Classify the coherence |a><b| as population, SQ, ZQ, DQ or higher."""
    a = a.bits if isinstance(a, BasisLabel) else _as_label(a)
    b = b.bits if isinstance(b, BasisLabel) else _as_label(b)
    if len(a) != len(b):
        raise ValueError(f"labels {a} and {b} differ in length")
    diff = [(x, y) for x, y in zip(a, b) if x != y]
    if not diff:
        return "population"
    if len(diff) == 1:
        return "SQ"
    if len(diff) == 2:
        return "DQ" if diff[0] == diff[1] else "ZQ"
    return "higher"


def connectivity(t1: TransitionRef, t2: TransitionRef) -> str:
    """Progressive, regressive or unconnected, from the level the two share."""
    levels1 = {t1.lower: "lower", t1.upper: "upper"}
    levels2 = {t2.lower: "lower", t2.upper: "upper"}
    shared = set(levels1) & set(levels2)
    if len(shared) != 1:
        return "unconnected"
    (level,) = shared
    return "regressive" if levels1[level] == levels2[level] else "progressive"


def transitions_from(labels: Iterable[str]) -> list[TransitionRef]:
    return [TransitionRef.between(*s.split("-")) for s in labels]
