"""Closed-form physics of the Bragg gravimeter.

Everything here is analytic: species constants, the Mach-Zehnder phase
response, the sweep-rate/gravity pair, and the multi-path quantities
(coherence length, path-length increment, revival period, per-trajectory
phases) that govern contrast revivals.

Conventions: k = 2*pi/lambda is the single-photon wavevector and enters
the multi-path formulas; the interferometer phase uses the two-photon
k_eff = 2k. Phases in rad, angular frequencies in rad/s, the sweep rate
alpha in Hz/s (cyclic, so it appears as 2*pi*alpha in the phase model).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import BOLTZMANN, HBAR, RB87_D2_WAVELENGTH, RB87_MASS


@dataclass(frozen=True)
class AtomSpecies:
    """Atom driving the interferometer: mass (kg) and Bragg wavelength (m).

    The wavevector and recoil frequency are always derived, never stored,
    so there is a single source of truth for k.
    """

    mass: float
    wavelength: float

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        if self.wavelength <= 0:
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")

    @property
    def wavevector(self) -> float:
        """Single-photon wavevector k = 2*pi/lambda (1/m)."""
        return 2.0 * math.pi / self.wavelength

    @property
    def recoil_frequency(self) -> float:
        """Recoil angular frequency hbar k^2 / 2m (rad/s)."""
        k = self.wavevector
        return HBAR * k * k / (2.0 * self.mass)

    @property
    def recoil_velocity(self) -> float:
        """Single-photon recoil velocity hbar k / m (m/s)."""
        return HBAR * self.wavevector / self.mass

    @classmethod
    def rubidium87(cls, wavelength: float = RB87_D2_WAVELENGTH) -> "AtomSpecies":
        return cls(mass=RB87_MASS, wavelength=wavelength)


@dataclass(frozen=True)
class BeamGeometry:
    """Two-photon beam geometry: k_eff = 4*pi/lambda and tilt from vertical."""

    k_eff: float
    tilt_angle: float = 0.0

    def __post_init__(self):
        if self.k_eff <= 0:
            raise ValueError(f"k_eff must be positive, got {self.k_eff}")
        if not 0.0 <= self.tilt_angle < math.pi / 2:
            raise ValueError(
                f"tilt_angle must lie in [0, pi/2), got {self.tilt_angle}"
            )

    @property
    def projection(self) -> float:
        """cos(tilt): projection of gravity on the beam axis."""
        return math.cos(self.tilt_angle)

    @classmethod
    def vertical(cls, species: AtomSpecies, tilt_angle: float = 0.0) -> "BeamGeometry":
        """Retro-reflected geometry: k_eff = 2k exactly."""
        return cls(k_eff=2.0 * species.wavevector, tilt_angle=tilt_angle)


@dataclass(frozen=True)
class InterferometerParams:
    """Mach-Zehnder parameters: Bragg order n, interrogation time T (s),
    sweep rate alpha (Hz/s), the three pulse phases (rad) and gravity (m/s^2).
    """

    order: int
    interrogation_time: float
    sweep_rate: float
    pulse_phases: tuple[float, float, float] = (0.0, 0.0, 0.0)
    gravity: float = 0.0

    def __post_init__(self):
        if self.order < 1:
            raise ValueError(f"order must be >= 1, got {self.order}")
        if self.interrogation_time <= 0:
            raise ValueError(
                f"interrogation_time must be positive, got {self.interrogation_time}"
            )

    @property
    def laser_phase(self) -> float:
        """phi_L = phi1 - 2*phi2 + phi3 (rad)."""
        p1, p2, p3 = self.pulse_phases
        return p1 - 2.0 * p2 + p3


def recoil_frequency(species: AtomSpecies) -> float:
    """Recoil angular frequency hbar k^2 / 2m (rad/s)."""
    return species.recoil_frequency


def mzi_phase(params: InterferometerParams, geometry: BeamGeometry) -> float:
    """Mach-Zehnder phase Phi = n (k_eff g cos(tilt) - 2 pi alpha + phi_L) T^2.

    This is the closed-form phase response; the bracket vanishes when the
    sweep rate cancels the Doppler ramp and no pulse phase is applied.
    """
    bracket = (
        geometry.k_eff * params.gravity * geometry.projection
        - 2.0 * math.pi * params.sweep_rate
        + params.laser_phase
    )
    return params.order * bracket * params.interrogation_time**2


def resonant_sweep_rate(gravity: float, geometry: BeamGeometry) -> float:
    """Sweep rate alpha_0 = k_eff g cos(tilt) / 2 pi (Hz/s) cancelling gravity."""
    if gravity < 0:
        raise ValueError(f"gravity must be >= 0, got {gravity}")
    return geometry.k_eff * gravity * geometry.projection / (2.0 * math.pi)


def gravity_from_sweep(sweep_rate: float, geometry: BeamGeometry) -> float:
    """Invert the resonance condition: g = 2 pi alpha_0 / (k_eff cos(tilt))."""
    if sweep_rate < 0:
        raise ValueError(f"sweep_rate must be >= 0, got {sweep_rate}")
    proj = geometry.projection
    if proj == 0.0:
        raise ValueError("tilt of pi/2 makes the gravity projection degenerate")
    return 2.0 * math.pi * sweep_rate / (geometry.k_eff * proj)


def bragg_resonance(order: int, species: AtomSpecies) -> float:
    """Beam frequency difference 4 n omega_r (rad/s) coupling |0> and |2n hbar k>.

    Follows from kinetic-energy conservation for an n-th order (2n-photon)
    transition starting at rest.
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    return 4.0 * order * species.recoil_frequency


def coherence_length(species: AtomSpecies, temperature: float) -> float:
    """Thermal coherence length hbar sqrt(2 pi) / sqrt(m k_B T) (m)."""
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    return HBAR * math.sqrt(2.0 * math.pi) / math.sqrt(
        species.mass * BOLTZMANN * temperature
    )


def path_length_increment(species: AtomSpecies, interrogation_time: float) -> float:
    """Quantum of path-length difference l = 2 hbar k T / m (m).

    Momentum kicks come in units of 2 hbar k, so path-length differences
    between interferometer arms are multiples of this.
    """
    if interrogation_time < 0:
        raise ValueError(f"interrogation_time must be >= 0, got {interrogation_time}")
    return 2.0 * HBAR * species.wavevector * interrogation_time / species.mass


def revival_period(species: AtomSpecies) -> float:
    """Contrast revival period delta_T = pi m / (2 hbar k^2) (s).

    At integer multiples of delta_T all trajectories within a multi-path
    interferometer class acquire the same phase modulo 2 pi.
    """
    k = species.wavevector
    return math.pi * species.mass / (2.0 * HBAR * k * k)


def path_phase(
    class_index: int, first_half_steps: int, interrogation_time: float,
    species: AtomSpecies,
) -> float:
    """Phase of one trajectory in class j: (4 hbar k^2 T / m)(j^2/2 + a^2 - a j).

    ``first_half_steps`` is the integer a with arm momenta 2a*hbar*k then
    2(j-a)*hbar*k over the two halves. Symmetric under a <-> j - a.
    """
    if interrogation_time < 0:
        raise ValueError(f"interrogation_time must be >= 0, got {interrogation_time}")
    j, a = class_index, first_half_steps
    k = species.wavevector
    scale = 4.0 * HBAR * k * k * interrogation_time / species.mass
    return scale * (j * j / 2.0 + a * a - a * j)


def propagation_phase(
    k1: float, z1: float, k2: float, z2: float, interrogation_time: float,
    species: AtomSpecies,
) -> float:
    """Propagation phase along one arm: k1 z1 + k2 z2 - (omega_1 + omega_2) T,
    with omega_i = hbar k_i^2 / 2m.

    With k_i quantized in units of 2k and z_i the free-flight distances this
    reduces to :func:`path_phase`.
    """
    w1 = HBAR * k1 * k1 / (2.0 * species.mass)
    w2 = HBAR * k2 * k2 / (2.0 * species.mass)
    return k1 * z1 + k2 * z2 - (w1 + w2) * interrogation_time
