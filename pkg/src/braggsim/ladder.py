"""Schroedinger dynamics on the 2*hbar*k momentum ladder.

The atom is expanded over plane waves |p = 2n*hbar*k + q> with integer site
index n and continuous quasimomentum q (|q| <= hbar*k). In the frame falling
with the cloud and co-chirped with the lattice, a two-frequency pulse of
envelope Omega(t), beam frequency difference delta(t) and laser phase phi
drives

    i db_n/dt = [4 w_r (n + q/2hk)^2 - n delta(t)] b_n
                + (Omega(t)/2) (e^{-i phi} b_{n-1} + e^{+i phi} b_{n+1}),

i.e. a tridiagonal Hamiltonian with kinetic diagonal and nearest-neighbour
coupling Omega/2; each up-step along the ladder imprints e^{-i phi}. The
physical (lattice-phase-free) amplitudes c_n follow from b_n by the diagonal
gauge c_n = b_n e^{-i n theta(t)} with theta = integral of delta.

Numerically everything is integrated in the interaction picture
A_n = e^{+i kin_n t} c_n, which removes the fast kinetic phases exactly and
leaves only the slowly rotating coupling terms; an adaptive high-order
Runge-Kutta (DOP853) then resolves the pulse with a handful of hundred
steps. Propagator matrices over the ladder window are produced the same way
and are exactly consistent with the state path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .constants import HBAR
from .physics import AtomSpecies, bragg_resonance


class TruncationLeakError(RuntimeError):
    """Norm leaked into the outermost ladder sites beyond the allowed bound."""

    def __init__(self, leakage: float, bound: float):
        self.leakage = leakage
        self.bound = bound
        super().__init__(
            f"truncation leakage {leakage:.3e} exceeds bound {bound:.1e}; "
            "enlarge the ladder window"
        )


class CalibrationError(RuntimeError):
    """Pulse-amplitude calibration failed to bracket the requested transfer."""

    def __init__(self, message: str, sweep: list[tuple[float, float]]):
        self.sweep = sweep
        lines = ", ".join(f"({o:.4g}, {p:.4g})" for o, p in sweep[:12])
        super().__init__(f"{message}; diagnostic sweep (Omega0, transfer): {lines}")


LEAK_BOUND = 1e-4


@dataclass(frozen=True)
class EvolutionConfig:
    """Integrator knobs: step cap (s), error tolerance and guard sites."""

    max_step: float | None = None
    error_tolerance: float = 1e-10
    ladder_guard_sites: int = 6

    def __post_init__(self):
        if not 0.0 < self.error_tolerance <= 1e-3:
            raise ValueError(
                f"error_tolerance must lie in (0, 1e-3], got {self.error_tolerance}"
            )
        if self.ladder_guard_sites < 4:
            raise ValueError(
                f"ladder_guard_sites must be >= 4, got {self.ladder_guard_sites}"
            )

    @property
    def rtol(self) -> float:
        return 0.1 * self.error_tolerance

    @property
    def atol(self) -> float:
        return 0.01 * self.error_tolerance


DEFAULT_CONFIG = EvolutionConfig()


@dataclass(frozen=True)
class PulseSpec:
    """Gaussian two-frequency Bragg pulse.

    rabi_peak is the peak two-photon Rabi frequency Omega_0 (rad/s); the
    envelope is Omega_0 exp(-(t-t_c)^2 / 2 sigma^2) truncated to ``duration``
    (default 6 sigma, tails clipped at +-3 sigma). The beam frequency
    difference is either given directly (rad/s, value at the pulse centre) or
    marked resonant for a Bragg order; ``chirp`` (Hz/s) sweeps it linearly
    across the pulse.
    """

    rabi_peak: float
    sigma: float
    duration: float | None = None
    detuning: float | None = None
    resonant_order: int | None = None
    laser_phase: float = 0.0
    chirp: float = 0.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.rabi_peak < 0:
            raise ValueError(f"rabi_peak must be >= 0, got {self.rabi_peak}")
        if self.duration is not None and self.duration < 6 * self.sigma:
            raise ValueError(
                f"duration {self.duration} is below the 6 sigma minimum "
                f"{6 * self.sigma}"
            )
        if (self.detuning is None) == (self.resonant_order is None):
            raise ValueError("set exactly one of detuning and resonant_order")
        if self.resonant_order is not None and self.resonant_order < 1:
            raise ValueError(f"resonant_order must be >= 1, got {self.resonant_order}")

    @property
    def total_duration(self) -> float:
        return 6 * self.sigma if self.duration is None else self.duration

    def resolve_detuning(self, species: AtomSpecies) -> float:
        """Beam frequency difference at the pulse centre (rad/s)."""
        if self.detuning is not None:
            return self.detuning
        return bragg_resonance(self.resonant_order, species)

    def coupling_order(self, species: AtomSpecies) -> int:
        """Nearest Bragg order targeted by this pulse (window sizing)."""
        if self.resonant_order is not None:
            return self.resonant_order
        return max(1, round(self.detuning / (4.0 * species.recoil_frequency)))


@dataclass(frozen=True)
class MomentumLadderState:
    """Amplitudes over ladder sites n_min..n_min+len-1 at a reference time.

    Site n is the plane wave with momentum p = 2n*hbar*k + q in the freely
    falling frame.
    """

    species: AtomSpecies
    amplitudes: np.ndarray
    n_min: int
    quasimomentum: float = 0.0
    time: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        hk = HBAR * self.species.wavevector
        if abs(self.quasimomentum) > hk * (1 + 1e-12):
            raise ValueError(
                f"|quasimomentum| {abs(self.quasimomentum):.3e} exceeds hbar*k {hk:.3e}"
            )

    @property
    def n_max(self) -> int:
        return self.n_min + len(self.amplitudes) - 1

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)

    @property
    def q_tilde(self) -> float:
        """Quasimomentum in units of hbar*k."""
        return self.quasimomentum / (HBAR * self.species.wavevector)

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def population(self, site: int) -> float:
        if site < self.n_min or site > self.n_max:
            return 0.0
        return float(np.abs(self.amplitudes[site - self.n_min]) ** 2)

    def populations(self) -> dict[int, float]:
        return {int(n): float(p)
                for n, p in zip(self.sites, np.abs(self.amplitudes) ** 2)}

    def mean_momentum(self) -> float:
        """Ensemble mean momentum (kg m/s) in the current frame."""
        hk = HBAR * self.species.wavevector
        p = 2.0 * hk * self.sites + self.quasimomentum
        return float(np.sum(np.abs(self.amplitudes) ** 2 * p))

    def expanded(self, n_min: int, n_max: int) -> "MomentumLadderState":
        """Zero-pad the window to cover [n_min, n_max] (never shrinks)."""
        lo = min(n_min, self.n_min)
        hi = max(n_max, self.n_max)
        if lo == self.n_min and hi == self.n_max:
            return self
        amps = np.zeros(hi - lo + 1, dtype=complex)
        amps[self.n_min - lo:self.n_min - lo + len(self.amplitudes)] = self.amplitudes
        return replace(self, amplitudes=amps, n_min=lo)

    def reindexed(self, shift: int) -> "MomentumLadderState":
        """Relabel sites so that old site ``shift`` becomes site 0.

        This is a Galilean boost to the frame moving at 2*shift*hbar*k/m;
        populations are preserved, overall phases are not meaningful across
        the boost.
        """
        return replace(self, n_min=self.n_min - shift)


def plane_wave_state(
    species: AtomSpecies,
    site: int = 0,
    quasimomentum: float = 0.0,
    n_min: int | None = None,
    n_max: int | None = None,
    guard: int = 6,
    time: float = 0.0,
) -> MomentumLadderState:
    """Single ladder-site state with a window of ``guard`` sites each side."""
    lo = site - guard if n_min is None else n_min
    hi = site + guard if n_max is None else n_max
    amps = np.zeros(hi - lo + 1, dtype=complex)
    amps[site - lo] = 1.0
    return MomentumLadderState(species=species, amplitudes=amps, n_min=lo,
                               quasimomentum=quasimomentum, time=time)


def kinetic_frequencies(species: AtomSpecies, sites: np.ndarray,
                        q_tilde: float) -> np.ndarray:
    """E_n / hbar = 4 w_r (n + q/2hk)^2 (rad/s)."""
    return 4.0 * species.recoil_frequency * (sites + q_tilde / 2.0) ** 2


# ---------------------------------------------------------------------------
# interaction-picture integration
# ---------------------------------------------------------------------------

def _integrate_ip(kin, theta_fn, coupling_fn, phi, duration, y0, cfg, max_step):
    """Integrate i dA/dt = coupling terms in the kinetic interaction picture.

    ``kin``: kinetic frequencies, shape (..., W) broadcastable against ``y0``.
    ``theta_fn(t)``: accumulated lattice phase integral of delta(t) from 0.
    ``coupling_fn(t)``: scalar coupling Omega(t)/2.
    ``y0``: (W,) state, or (..., W, W) propagator stack (rows = out index).
    Returns A(duration) with the same shape.
    """
    kin = np.asarray(kin, dtype=float)
    dkin = kin[..., 1:] - kin[..., :-1]
    eiphi = np.exp(-1j * phi)
    is_state = y0.ndim == 1

    if is_state:
        def rhs(t, y):
            A = y.view(complex)
            g = coupling_fn(t)
            f = np.exp(1j * (dkin * t - theta_fn(t)))
            out = np.zeros_like(A)
            out[1:] += g * eiphi * f * A[:-1]
            out[:-1] += g * np.conj(eiphi * f) * A[1:]
            return (-1j * out).ravel().view(float)
    else:
        def rhs(t, y):
            A = y.view(complex).reshape(y0.shape)
            g = coupling_fn(t)
            f = np.exp(1j * (dkin * t - theta_fn(t)))
            out = np.zeros_like(A)
            out[..., 1:, :] += (g * eiphi * f)[..., :, None] * A[..., :-1, :]
            out[..., :-1, :] += np.conj(g * eiphi * f)[..., :, None] * A[..., 1:, :]
            return (-1j * out).ravel().view(float)

    sol = solve_ivp(
        rhs, (0.0, duration), y0.ravel().view(float), method="DOP853",
        rtol=cfg.rtol, atol=cfg.atol, max_step=max_step, dense_output=False,
    )
    if not sol.success:
        raise RuntimeError(f"pulse integration failed: {sol.message}")
    return sol.y[:, -1].view(complex).reshape(y0.shape)


def _pulse_functions(pulse: PulseSpec, species: AtomSpecies):
    """Envelope Omega(t)/2, lattice phase integral theta(t) and duration."""
    dur = pulse.total_duration
    tc = dur / 2.0
    delta_c = pulse.resolve_detuning(species)
    ramp = 2.0 * math.pi * pulse.chirp  # rad/s^2
    half_omega = 0.5 * pulse.rabi_peak
    inv2s2 = 1.0 / (2.0 * pulse.sigma**2)

    def coupling(t):
        return half_omega * math.exp(-((t - tc) ** 2) * inv2s2)

    def theta(t):
        # integral of delta_c + ramp*(t' - tc) from 0 to t
        return delta_c * t + 0.5 * ramp * ((t - tc) ** 2 - tc**2)

    return coupling, theta, dur


def _required_window(state: MomentumLadderState, pulse: PulseSpec,
                     cfg: EvolutionConfig) -> tuple[int, int]:
    reach = pulse.coupling_order(state.species) + cfg.ladder_guard_sites
    pops = np.abs(state.amplitudes) ** 2
    occupied = state.sites[pops > 1e-12]
    if occupied.size == 0:
        occupied = np.array([0])
    return int(occupied.min() - reach), int(occupied.max() + reach)


def _check_leakage(amplitudes: np.ndarray) -> None:
    leak = float(abs(amplitudes[0]) ** 2 + abs(amplitudes[-1]) ** 2)
    if leak > LEAK_BOUND:
        raise TruncationLeakError(leak, LEAK_BOUND)


def apply_pulse(
    state: MomentumLadderState,
    pulse: PulseSpec,
    cfg: EvolutionConfig = DEFAULT_CONFIG,
) -> MomentumLadderState:
    """Evolve the state through one full pulse; unitary up to tolerance.

    The window is grown to cover the targeted order plus guard sites; norm
    reaching the outermost sites above 1e-4 raises TruncationLeakError.
    """
    if abs(state.norm - 1.0) > 1e-6:
        raise ValueError(f"state norm {state.norm} is not 1 within 1e-6")
    lo, hi = _required_window(state, pulse, cfg)
    state = state.expanded(lo, hi)

    coupling, theta, dur = _pulse_functions(pulse, state.species)
    kin = kinetic_frequencies(state.species, state.sites, state.q_tilde)
    max_step = pulse.sigma / 2.0
    if cfg.max_step is not None:
        max_step = min(max_step, cfg.max_step)

    if pulse.rabi_peak == 0.0:
        final = state.amplitudes * np.exp(-1j * kin * dur)
    else:
        A = _integrate_ip(kin, theta, coupling, pulse.laser_phase, dur,
                          state.amplitudes.copy(), cfg, max_step)
        final = A * np.exp(-1j * kin * dur)
    _check_leakage(final)
    return replace(state, amplitudes=final, time=state.time + dur)


def free_propagate(state: MomentumLadderState, duration: float) -> MomentumLadderState:
    """Diagonal kinetic evolution e^{-i E_n t / hbar} in the falling frame."""
    if duration < 0:
        raise ValueError(f"duration must be >= 0, got {duration}")
    if duration == 0.0:
        return state
    kin = kinetic_frequencies(state.species, state.sites, state.q_tilde)
    amps = state.amplitudes * np.exp(-1j * kin * duration)
    return replace(state, amplitudes=amps, time=state.time + duration)


def pulse_propagator(
    species: AtomSpecies,
    pulse: PulseSpec,
    window: tuple[int, int],
    quasimomentum: float | np.ndarray = 0.0,
    cfg: EvolutionConfig = DEFAULT_CONFIG,
) -> np.ndarray:
    """Full-pulse propagator over the ladder window, at laser phase zero.

    ``quasimomentum`` may be an array of q values (kg m/s), in which case a
    stack of propagators with shape (len(q), W, W) is returned; all members
    integrate in one adaptive solve. A commanded laser phase phi is applied
    afterwards by conjugation: U(phi) = D U D* with D = diag(e^{-i n phi}),
    which is exact because the phase enters only the coupling.
    """
    lo, hi = window
    sites = np.arange(lo, hi + 1)
    W = len(sites)
    q = np.atleast_1d(np.asarray(quasimomentum, dtype=float))
    qt = q / (HBAR * species.wavevector)
    kin = 4.0 * species.recoil_frequency * (sites[None, :] + qt[:, None] / 2.0) ** 2

    coupling, theta, dur = _pulse_functions(pulse, species)
    max_step = pulse.sigma / 2.0
    if cfg.max_step is not None:
        max_step = min(max_step, cfg.max_step)

    eye = np.broadcast_to(np.eye(W, dtype=complex), (len(q), W, W)).copy()
    if pulse.rabi_peak == 0.0:
        A = eye
    else:
        A = _integrate_ip(kin, theta, coupling, 0.0, dur, eye, cfg, max_step)
    U = np.exp(-1j * kin * dur)[:, :, None] * A
    if np.isscalar(quasimomentum) or np.asarray(quasimomentum).ndim == 0:
        return U[0]
    return U


def phase_conjugated(U: np.ndarray, sites: np.ndarray, phi: float) -> np.ndarray:
    """Apply a laser phase to a phase-zero propagator: D(phi) U D(phi)^dag."""
    d = np.exp(-1j * sites * phi)
    return d[..., :, None] * U * np.conj(d)[..., None, :]


# ---------------------------------------------------------------------------
# amplitude calibration
# ---------------------------------------------------------------------------

def _transfer(species, order, sigma, quasimomentum, cfg, omega0) -> float:
    pulse = PulseSpec(rabi_peak=omega0, sigma=sigma, resonant_order=order)
    psi = plane_wave_state(species, site=0, quasimomentum=quasimomentum,
                           guard=order + cfg.ladder_guard_sites)
    out = apply_pulse(psi, pulse, cfg)
    return out.population(order)


def calibrate_pulse_amplitude(
    species: AtomSpecies,
    target: float,
    order: int,
    sigma: float,
    quasimomentum: float = 0.0,
    cfg: EvolutionConfig = DEFAULT_CONFIG,
    ceiling_factor: float = 400.0,
) -> float:
    """Peak Rabi frequency transferring ``target`` of |0> into |2n hbar k>.

    Searches the first Rabi lobe; returns the smallest Omega_0 whose
    simulated transfer equals the target within 1e-4. A target at or above
    the lobe maximum (notably target = 1 in the quasi-Bragg regime, where
    perfect transfer does not exist) returns the lobe-peak amplitude.
    """
    if not 0.0 < target <= 1.0:
        raise ValueError(f"target transfer must lie in (0, 1], got {target}")

    transfer = lambda om: _transfer(species, order, sigma, quasimomentum, cfg, om)
    # two-level pulse-area guess for the first-order pi pulse
    omega_pi = math.pi / (sigma * math.sqrt(2.0 * math.pi))
    ceiling = ceiling_factor * omega_pi

    sweep: list[tuple[float, float]] = []
    om = omega_pi / 8.0
    best_om, best_p = om, -1.0
    while om <= ceiling:
        p = transfer(om)
        sweep.append((om, p))
        if p > best_p:
            best_om, best_p = om, p
        elif best_p > 0.05 and p < 0.8 * best_p:
            break  # past the first lobe peak
        om *= 1.25
    else:
        if best_p < target and best_p < 0.05:
            raise CalibrationError(
                f"no Rabi lobe reaching transfer {target} below the search ceiling",
                sweep,
            )

    # refine the lobe peak (golden-section on the bracketing grid points)
    i = next(j for j, (o, _) in enumerate(sweep) if o == best_om)
    lo = sweep[i - 1][0] if i > 0 else best_om / 1.25
    hi = sweep[i + 1][0] if i + 1 < len(sweep) else best_om * 1.25
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - gr * (b - a), a + gr * (b - a)
    fc, fd = transfer(c), transfer(d)
    while b - a > 1e-4 * best_om:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - gr * (b - a)
            fc = transfer(c)
        else:
            a, c, fc = c, d, fd
            d = a + gr * (b - a)
            fd = transfer(d)
    peak_om = 0.5 * (a + b)
    peak_p = transfer(peak_om)

    if target >= peak_p - 1e-9:
        return peak_om

    # smallest crossing on the rising flank
    rising = [(o, p) for o, p in sweep if o <= peak_om]
    lo_om = None
    for o, p in rising:
        if p < target:
            lo_om = o
        elif lo_om is not None:
            break
    if lo_om is None:
        lo_om = rising[0][0] / 4.0 if rising else peak_om / 100.0
    root = brentq(lambda om_: transfer(om_) - target, lo_om, peak_om,
                  xtol=1e-8 * peak_om, rtol=1e-12)
    achieved = transfer(root)
    if abs(achieved - target) > 1e-4:
        raise CalibrationError(
            f"calibration converged to transfer {achieved:.6f}, not {target}",
            sweep,
        )
    return float(root)
