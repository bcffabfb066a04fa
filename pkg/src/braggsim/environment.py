"""Lab environment synthesis: mirror vibration, detection noise, alignment
drift and tidal gravity variation.

Vibration of the retro-reflection mirror enters as independent Gaussian
phase draws on the three interferometer pulses; the interferometer responds
to their combination phi1 - 2*phi2 + phi3. Detection is additive Gaussian
per port signal at sigma = 1/SNR (photon-shot-noise-like). Tides are a
configurable sum of gravity harmonics, a stand-in for a published
solid-Earth-tide model.

All randomness is reproducible from (master seed, shot index, stream id);
there is no hidden global state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# stream ids: one independent RNG stream per physical noise source
STREAM_QUASIMOMENTUM = 0
STREAM_MIRROR = 1
STREAM_DETECTION = 2
STREAM_DETECTION_UPPER = 3


def shot_rng(master_seed: int, shot_index: int = 0, stream: int = 0) -> np.random.Generator:
    """Independent deterministic generator for one (shot, stream) pair."""
    return np.random.default_rng(
        np.random.SeedSequence((int(master_seed), int(shot_index), int(stream)))
    )


@dataclass(frozen=True)
class NoiseModel:
    """Mirror-vibration phase jitter, detection SNR and alignment drift."""

    mirror_phase_rms: float = 0.0      # rad per pulse
    detection_snr: float = 50.0        # dimensionless; math.inf disables
    tilt_drift: float = 0.0            # rad per hour

    def __post_init__(self):
        if self.mirror_phase_rms < 0:
            raise ValueError(
                f"mirror_phase_rms must be >= 0, got {self.mirror_phase_rms}"
            )
        if not self.detection_snr > 0:
            raise ValueError(f"detection_snr must be > 0, got {self.detection_snr}")


def sample_mirror_phases(
    model: NoiseModel, rng: np.random.Generator
) -> tuple[float, float, float]:
    """Three independent Gaussian pulse-phase draws (rad).

    The combination phi1 - 2*phi2 + phi3 has variance 6*rms^2. Zero rms is a
    bit-identical pass-through that consumes no randomness.
    """
    if model.mirror_phase_rms == 0.0:
        return (0.0, 0.0, 0.0)
    draws = rng.normal(0.0, model.mirror_phase_rms, size=3)
    return (float(draws[0]), float(draws[1]), float(draws[2]))


def apply_detection_noise(populations, model: NoiseModel, rng: np.random.Generator):
    """Additive Gaussian port noise with sigma = 1/SNR, clamped to [0, 1].

    Accepts a site -> population dict or an array; returns the same shape.
    Infinite SNR passes the input through bit-identically.
    """
    if math.isinf(model.detection_snr):
        return populations
    sigma = 1.0 / model.detection_snr
    if isinstance(populations, dict):
        keys = sorted(populations)
        vals = np.array([populations[k] for k in keys], dtype=float)
        noisy = np.clip(vals + rng.normal(0.0, sigma, size=len(vals)), 0.0, 1.0)
        return {k: float(v) for k, v in zip(keys, noisy)}
    arr = np.asarray(populations, dtype=float)
    return np.clip(arr + rng.normal(0.0, sigma, size=arr.shape), 0.0, 1.0)


@dataclass(frozen=True)
class TideComponent:
    """One gravity harmonic: amplitude (m/s^2), angular frequency (rad/s),
    phase (rad)."""

    amplitude: float
    angular_frequency: float
    phase: float = 0.0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError(f"amplitude must be >= 0, got {self.amplitude}")


@dataclass(frozen=True)
class TideModel:
    """Mean gravity plus a configurable sum of harmonic components."""

    mean_gravity: float = 9.81
    components: tuple[TideComponent, ...] = field(default_factory=tuple)

    @classmethod
    def demo_m2(cls, mean_gravity: float = 9.81,
                amplitude: float = 1.0e-6) -> "TideModel":
        """Single M2-like component: 12.42 h period, ~1 umps^2 swing."""
        omega = 2.0 * math.pi / (12.42 * 3600.0)
        return cls(mean_gravity=mean_gravity,
                   components=(TideComponent(amplitude, omega),))


def synthesize_tide(model: TideModel, t):
    """g(t) = g_mean + sum_i A_i cos(w_i t + phi_i); broadcasts over t."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be >= 0")
    g = np.full(t.shape, model.mean_gravity)
    for comp in model.components:
        g = g + comp.amplitude * np.cos(comp.angular_frequency * t + comp.phase)
    return float(g) if g.ndim == 0 else g


def tilt_projection_drift(model: NoiseModel, t, base_tilt: float = 0.0):
    """Effective cos(tilt) under a deterministic linear tilt drift."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be >= 0")
    c = np.cos(base_tilt + model.tilt_drift * t / 3600.0)
    return float(c) if c.ndim == 0 else c
