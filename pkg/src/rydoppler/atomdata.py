"""Species-level atomic data: effective wavevectors, van der Waals shifts,
and thermal velocity distributions.

Level energies are stored as literature term values in cm^-1 (see
``data/levels.ini``), so wavevector ratios reduce to plain arithmetic on
energy differences: the effective two-photon wavevector of the
ground-Rydberg drive is k = 2*pi*|1/lambda_up - 1/lambda_lower| for
counterpropagating legs, and the Rydberg-Rydberg drive through a low-lying
intermediate state has k_w = 4*pi/lambda_w because both legs share the same
wavelength (the two Rydberg levels are nearly degenerate).
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .constants import KB, TWO_PI

# cm^-1 -> m^-1
_PER_CM_TO_PER_M = 100.0


class UnknownLevelError(KeyError):
    """A level label is not present in the species data."""


class UnknownSpeciesError(KeyError):
    """A species name is not present in the data file."""


class DomainError(ValueError):
    """An argument is outside the physical domain of an operation."""


class InfeasibleSchemeError(ValueError):
    """The requested scheme cannot satisfy the dephasing-cancellation condition."""


@dataclass(frozen=True)
class SpeciesLevels:
    """Term energies (cm^-1) of one species, ground through the Rydberg manifold."""

    species_name: str
    level_energies: dict  # label -> energy in cm^-1, includes "ground"
    rydberg_energy: float  # cm^-1
    atomic_mass: float  # kg

    def __post_init__(self):
        if self.atomic_mass <= 0:
            raise DomainError(f"atomic mass must be positive, got {self.atomic_mass}")
        energies = sorted(self.level_energies.values())
        if any(e2 <= e1 for e1, e2 in zip(energies, energies[1:])):
            raise DomainError(f"{self.species_name}: level energies must be strictly increasing")
        if self.rydberg_energy <= energies[-1]:
            raise DomainError(f"{self.species_name}: rydberg energy must lie above all stored levels")

    def energy(self, label: str) -> float:
        try:
            return self.level_energies[label]
        except KeyError:
            raise UnknownLevelError(
                f"unknown level {label!r} for {self.species_name}; "
                f"known: {sorted(self.level_energies)}"
            ) from None

    def intermediate_labels(self) -> list[str]:
        """All excited (non-ground) levels, ordered by energy."""
        pairs = sorted((e, lbl) for lbl, e in self.level_energies.items() if lbl != "ground")
        return [lbl for _, lbl in pairs]


@dataclass(frozen=True)
class SchemeSelection:
    """Intermediate states of the two two-photon drives: e1 for ground<->r1, e2 for r2<->r1."""

    e1: str
    e2: str

    def validate(self, levels: SpeciesLevels) -> None:
        levels.energy(self.e1)
        levels.energy(self.e2)


@dataclass(frozen=True)
class WavevectorPair:
    """Effective wavevectors (rad/m) of the two drives."""

    k: float
    kw: float

    def __post_init__(self):
        if self.k <= 0 or self.kw <= 0:
            raise DomainError("wavevectors must be positive")

    @property
    def ratio(self) -> float:
        return self.kw / self.k

    @property
    def feasible(self) -> bool:
        # Cancellation requires kw/k = 2 + Omega2/(N*Omega1) with positive magnitudes.
        return self.ratio > 2.0


@dataclass(frozen=True)
class InteractionSet:
    """van der Waals shifts of the double-Rydberg pair states, rad/s."""

    v11: float
    v12: float
    v22: float
    c6_11: float  # rad * um^6 / s
    c6_12: float
    c6_22: float
    spacing_l: float  # um

    def scaled(self, factor: float) -> "InteractionSet":
        """Same geometry with all shifts multiplied by `factor` (for limit studies)."""
        return InteractionSet(
            v11=self.v11 * factor,
            v12=self.v12 * factor,
            v22=self.v22 * factor,
            c6_11=self.c6_11 * factor,
            c6_12=self.c6_12 * factor,
            c6_22=self.c6_22 * factor,
            spacing_l=self.spacing_l,
        )


ZERO_INTERACTIONS = InteractionSet(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0)


@dataclass(frozen=True)
class ThermalEnsemble:
    """1-D Maxwell velocity distribution plus the averaging grid specification."""

    temperature: float  # K
    atomic_mass: float  # kg
    grid_points: int = 100
    v_max: float = 0.5  # m/s

    def __post_init__(self):
        if self.temperature <= 0:
            raise DomainError(f"temperature must be positive, got {self.temperature}")
        if self.atomic_mass <= 0:
            raise DomainError("atomic mass must be positive")
        if self.grid_points < 1:
            raise DomainError("grid must hold at least one point")
        if self.v_max < 0:
            raise DomainError("v_max must be non-negative")

    @property
    def v_rms(self) -> float:
        return math.sqrt(KB * self.temperature / self.atomic_mass)

    def weight(self, v) -> float:
        """Maxwell weight sqrt(m/(2 pi kB T)) * exp(-m v^2 / (2 kB T)), unit s/m."""
        a = self.atomic_mass / (2.0 * KB * self.temperature)
        return np.sqrt(a / math.pi) * np.exp(-a * np.asarray(v, dtype=float) ** 2)

    def velocity_grid(self) -> np.ndarray:
        """Endpoint-inclusive uniform grid on [-v_max, v_max], exactly antisymmetric.

        The symmetrization below equals linspace to within rounding but makes
        grid[n-1-j] == -grid[j] bit-exact, which the sweep layer relies on.
        """
        g = np.linspace(-self.v_max, self.v_max, self.grid_points)
        return (g - g[::-1]) / 2.0


def maxwell_weight(ensemble: ThermalEnsemble, v: float) -> float:
    """Maxwell weight function of the ensemble evaluated at velocity v (m/s)."""
    return float(ensemble.weight(v))


def load_species(name: str, path=None) -> SpeciesLevels:
    """Load one species from the atomic data file (default: packaged levels.ini)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.optionxform = str  # level labels are case sensitive
    if path is None:
        text = resources.files("rydoppler").joinpath("data/levels.ini").read_text()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    parser.read_string(text)
    if name not in parser:
        raise UnknownSpeciesError(f"unknown species {name!r}; known: {parser.sections()}")
    section = parser[name]
    energies = {}
    rydberg = None
    mass = None
    for key, raw in section.items():
        value = float(raw)
        if key == "mass":
            mass = value
        elif key == "rydberg":
            rydberg = value
        else:
            energies[key] = value
    if rydberg is None or mass is None:
        raise DomainError(f"species {name!r} must define 'rydberg' and 'mass'")
    return SpeciesLevels(name, energies, rydberg, mass)


def available_species(path=None) -> list[str]:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.optionxform = str
    if path is None:
        text = resources.files("rydoppler").joinpath("data/levels.ini").read_text()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    parser.read_string(text)
    return parser.sections()


def compute_k(levels: SpeciesLevels, scheme: SchemeSelection) -> float:
    """Effective wavevector (rad/m) of the two-photon ground-Rydberg drive.

    Counterpropagating legs: k = 2*pi*|1/lambda_up - 1/lambda_lower| with
    lambda_lower the ground->e1 leg and lambda_up the e1->rydberg leg.
    In wavenumbers this is 2*pi*|(E_r - E_e1) - (E_e1 - E_g)|.
    """
    e1 = levels.energy(scheme.e1)
    if levels.rydberg_energy <= e1:
        raise DomainError(f"rydberg energy must lie above {scheme.e1}")
    ground = levels.energy("ground")
    upper = levels.rydberg_energy - e1
    lower = e1 - ground
    return TWO_PI * _PER_CM_TO_PER_M * abs(upper - lower)


def compute_kw(levels: SpeciesLevels, scheme: SchemeSelection) -> float:
    """Effective wavevector (rad/m) of the two-photon r2<->r1 drive.

    Both counterpropagating legs run e2<->rydberg at wavelength lambda_w
    (the two Rydberg levels are nearly degenerate), so k_w = 4*pi/lambda_w.
    """
    e2 = levels.energy(scheme.e2)
    if levels.rydberg_energy <= e2:
        raise DomainError(f"rydberg energy must lie above {scheme.e2}")
    return 2.0 * TWO_PI * _PER_CM_TO_PER_M * (levels.rydberg_energy - e2)


def wavevector_pair(levels: SpeciesLevels, scheme: SchemeSelection) -> WavevectorPair:
    return WavevectorPair(k=compute_k(levels, scheme), kw=compute_kw(levels, scheme))


def scheme_table(levels: SpeciesLevels) -> list[tuple[str, str, float, bool]]:
    """Enumerate (e1, e2, kw/k, feasible) over the stored intermediate states.

    e1 runs over the lowest fine-structure doublet (the standard low-lying
    pump states); e2 runs over every stored excited level. Rows are flagged
    infeasible when kw/k <= 2.
    """
    labels = levels.intermediate_labels()
    e1_candidates = labels[: min(2, len(labels))]
    rows = []
    for e1 in e1_candidates:
        for e2 in labels:
            pair = wavevector_pair(levels, SchemeSelection(e1, e2))
            rows.append((e1, e2, pair.ratio, pair.feasible))
    return rows


def vdw_interactions(c6_set: tuple[float, float, float], spacing: float) -> InteractionSet:
    """Build the van der Waals shifts V_ab = C6_ab / L^6.

    `c6_set` holds (C6(r1r1), C6(r1r2), C6(r2r2)) in rad * um^6 / s and
    `spacing` is the qubit separation L in um.
    """
    if spacing <= 0:
        raise DomainError(f"spacing must be positive, got {spacing}")
    c6_11, c6_12, c6_22 = (float(c) for c in c6_set)
    l6 = spacing**6
    values = (c6_11 / l6, c6_12 / l6, c6_22 / l6)
    if not all(math.isfinite(v) for v in values):
        raise DomainError("van der Waals shifts must be finite")
    return InteractionSet(
        v11=values[0],
        v12=values[1],
        v22=values[2],
        c6_11=c6_11,
        c6_12=c6_12,
        c6_22=c6_22,
        spacing_l=spacing,
    )
