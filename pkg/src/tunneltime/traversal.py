"""Traversal-time amplitude eta(p, tau): how much of the transmitted amplitude
spent exactly tau inside the barrier.

eta is the Fourier transform over barrier strength W of the transmission
amplitude, shifted back to the physical height V:

    eta(p, tau) = (1/2pi) exp(-i V tau) int exp(i W tau) T(p, W) dW

The 1/2pi (rather than a symmetric (2pi)^-1/2) makes the durations sum
coherently to the transmission amplitude, int eta dtau = T(p, V).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.fft import next_fast_len

from tunneltime.barrier import BarrierSpec, ParticleSpec, transmission_exact
from tunneltime.errors import NonFiniteError, PhysicsError
from tunneltime.numerics import (
    SQRT_2PI,
    ComplexSamples,
    UniformGrid,
    integrate_samples,
    windowed_fourier,
)

SUM_RULE_TOLERANCE = 1e-3


@dataclass(frozen=True)
class WWindow:
    """Finite, tapered range of barrier strengths replacing the infinite W-integral."""

    center: float
    half_width: float
    step: float
    taper: float | None = 0.1

    def __post_init__(self):
        if self.half_width <= 0 or self.step <= 0:
            raise PhysicsError("W window needs positive half-width and step")
        if self.step >= self.half_width:
            raise PhysicsError("W step must be smaller than the window half-width")

    @classmethod
    def default(
        cls,
        particle: ParticleSpec,
        barrier: BarrierSpec,
        tau_max: float = 128.0,
        width_scale: float = 40.0,
        taper: float | None = 0.1,
    ) -> "WWindow":
        # scale = max(eps_p - eps_0, hbar / tau_c)
        scale = max(particle.energy - particle.rest_energy, 1.0 / barrier.tau_c)
        return cls(barrier.height, width_scale * scale, math.pi / tau_max, taper)

    @property
    def grid(self) -> UniformGrid:
        half_points = int(round(self.half_width / self.step))
        return UniformGrid.centered(self.center, half_points, self.step)

    @property
    def tau_max(self) -> float:
        return math.pi / self.step

    def period_grid(self) -> UniformGrid:
        """One full period [-tau_max, tau_max] of the discrete transform, FFT-aligned.

        Trapezoidal integration over this grid is the discrete orthogonality
        sum, so it returns the W-sample at the window centre exactly.
        """
        bins = next_fast_len(self.grid.count + 1)
        return UniformGrid(-self.tau_max, 2.0 * self.tau_max / bins, bins + 1)

    def widened(self) -> "WWindow":
        return replace(self, half_width=2.0 * self.half_width, step=0.5 * self.step)

    def describe(self) -> dict:
        return {
            "W_min": self.grid.start,
            "W_max": self.grid.stop,
            "W_step": self.step,
            "taper": "none" if not self.taper else f"cosine:{self.taper}",
        }


@dataclass(frozen=True)
class TraversalAmplitude:
    """eta sampled along tau = origin + direction * s for s on ``tau_grid``.

    The default (origin 0, direction 1) is the real tau axis; a rotated
    direction holds samples on a straight contour in the complex tau plane.
    """

    tau_grid: UniformGrid
    values: np.ndarray
    particle: ParticleSpec
    barrier: BarrierSpec
    window: WWindow | None = None
    origin: complex = 0j
    direction: complex = 1 + 0j
    source: str = "numeric"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.tau_grid.count,):
            raise PhysicsError("eta values do not match the tau grid")
        if not np.all(np.isfinite(values)):
            raise NonFiniteError("eta contains non-finite values")
        object.__setattr__(self, "values", values)

    @property
    def on_real_axis(self) -> bool:
        return self.origin == 0 and self.direction == 1

    @property
    def taus(self) -> np.ndarray:
        s = self.tau_grid.points
        if self.on_real_axis:
            return s
        return self.origin + self.direction * s

    def samples(self) -> ComplexSamples:
        return ComplexSamples(self.tau_grid, self.values)

    def integral(self) -> complex:
        """int eta dtau along the sampled contour."""
        return self.direction * integrate_samples(self.samples())


def _transmission_on_window(particle: ParticleSpec, barrier: BarrierSpec, window: WWindow) -> ComplexSamples:
    grid = window.grid
    T = transmission_exact(particle, grid.points, barrier)
    bad = np.flatnonzero(~np.isfinite(T))
    if bad.size:
        W = grid.point(int(bad[0]))
        raise NonFiniteError(f"transmission amplitude not finite at W = {W!r}", abscissa=W)
    return ComplexSamples(grid, T)


def eta_numeric(
    particle: ParticleSpec,
    barrier: BarrierSpec,
    window: WWindow | None = None,
    tau_grid: UniformGrid | None = None,
    max_widenings: int = 3,
) -> TraversalAmplitude:
    """eta(p, tau) from the exact transmission amplitude on a finite W window.

    Without an explicit ``tau_grid`` the full-period grid of the window is
    used and the sum rule is enforced, widening the window if it fails.
    """
    if window is None:
        window = WWindow.default(particle, barrier)
    if abs(window.center - barrier.height) > 1e-12 * max(1.0, abs(barrier.height)):
        raise PhysicsError(
            f"W window must be centred on the barrier height {barrier.height}, got {window.center}"
        )
    adaptive = tau_grid is None
    for _ in range(max_widenings + 1):
        grid = window.period_grid() if adaptive else tau_grid
        T = _transmission_on_window(particle, barrier, window)
        transform = windowed_fourier(T, grid, taper=window.taper, center=barrier.height)
        eta = TraversalAmplitude(
            grid, transform.values / SQRT_2PI, particle, barrier, window=window
        )
        if not adaptive or sum_rule_residual(eta) < SUM_RULE_TOLERANCE:
            return eta
        window = window.widened()
    raise PhysicsError(
        f"sum rule not met at {SUM_RULE_TOLERANCE} after {max_widenings} window widenings"
    )


def sum_rule_residual(eta: TraversalAmplitude) -> float:
    """|int eta dtau - T(p, V)| / |T(p, V)|."""
    target = complex(transmission_exact(eta.particle, eta.barrier.height, eta.barrier))
    return abs(eta.integral() - target) / abs(target)


def _eta_closed_form(particle: ParticleSpec, barrier: BarrierSpec, tau):
    p, e0 = particle.momentum, particle.rest_energy
    b, tc = barrier.width, barrier.tau_c
    tau = np.asarray(tau, dtype=complex)
    # analytic on C minus [-tau_c, tau_c], principal branch for real tau > tau_c
    root = np.sqrt(tau - tc) * np.sqrt(tau + tc)
    prefactor = 4 * p * b * e0**1.5 * tc**3 / (SQRT_2PI * np.sqrt(root) * (p * b * root + e0 * tc**2) ** 2)
    phase = (particle.energy - barrier.height) * tau - e0 * root
    return prefactor * np.exp(1j * phase - 0.25j * math.pi)


def eta_semiclassical(particle: ParticleSpec, barrier: BarrierSpec, tau, free_phase: bool = False):
    """Saddle-point eta(p, tau) for real tau > tau_c.

    The closed form carries no exp(-i p b); ``free_phase=True`` restores it so
    the result shares the phase convention of :func:`eta_numeric` (T(p, 0) = 1).
    """
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(tau_arr <= barrier.tau_c):
        raise PhysicsError(
            f"semiclassical eta is defined only for tau > tau_c = {barrier.tau_c}"
        )
    out = _eta_closed_form(particle, barrier, tau_arr)
    if free_phase:
        out = out * np.exp(-1j * particle.momentum * barrier.width)
    return out[()] if out.ndim == 0 else out


def saddle_time(particle: ParticleSpec, barrier: BarrierSpec) -> complex:
    """Imaginary saddle tau_V = -i tau_c (eps_p - V) / [eps_0^2 - (eps_p - V)^2]^(1/2)."""
    d = particle.energy - barrier.height
    e0 = particle.rest_energy
    if abs(d) >= e0:
        raise PhysicsError(
            f"no imaginary saddle: |eps_p - V| = {abs(d):g} is not below eps_0 = {e0:g}"
        )
    return -1j * barrier.tau_c * d / math.sqrt((e0 - d) * (e0 + d))


def steepest_descent_eta(
    particle: ParticleSpec,
    barrier: BarrierSpec,
    half_width_sigmas: float = 12.0,
    count: int = 2401,
    free_phase: bool = False,
) -> TraversalAmplitude:
    """Semiclassical eta on the imaginary tau axis through the saddle tau_V.

    The phase of eta is constant along this line, so moment integrals that
    cancel to ~exp(-kappa b) on the real axis are evaluated without loss.
    """
    y_saddle = abs(saddle_time(particle, barrier))
    tc = barrier.tau_c
    curvature = particle.rest_energy * tc**2 / (y_saddle**2 + tc**2) ** 1.5
    sigma = 1.0 / math.sqrt(curvature)
    lo = max(y_saddle - half_width_sigmas * sigma, 1e-2 * tc)
    hi = y_saddle + half_width_sigmas * sigma
    grid = UniformGrid.from_span(lo, hi, count)
    values = _eta_closed_form(particle, barrier, -1j * grid.points)
    if free_phase:
        values = values * np.exp(-1j * particle.momentum * barrier.width)
    return TraversalAmplitude(
        grid, values, particle, barrier, origin=0j, direction=-1j, source="semiclassical"
    )


def complex_mean_time(eta: TraversalAmplitude, damping: float | None = None) -> complex:
    """tau_bar = int tau eta dtau / int eta dtau along the sampled contour.

    ``damping`` multiplies eta by exp(-tau^2 / (2 damping^2)) on the real
    axis; it suppresses the edge of a finite tau grid in the first moment.
    """
    taus = eta.taus
    values = eta.values
    if damping is not None:
        if not eta.on_real_axis:
            raise PhysicsError("damping applies to real-axis amplitudes only")
        values = values * np.exp(-0.5 * (taus / damping) ** 2)
    zeroth = eta.direction * integrate_samples(ComplexSamples(eta.tau_grid, values))
    if abs(zeroth) < 1e-300:
        raise PhysicsError("int eta dtau vanishes: postselection amplitude is ~0")
    first = eta.direction * integrate_samples(ComplexSamples(eta.tau_grid, taus * values))
    return first / zeroth


def phase_rate(eta: TraversalAmplitude) -> np.ndarray:
    """Local frequency d arg(eta) / d tau on a real-axis amplitude."""
    if not eta.on_real_axis:
        raise PhysicsError("phase rate needs a real-axis amplitude")
    d_eta = np.gradient(eta.values, eta.tau_grid.step)
    power = np.abs(eta.values) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(power > 0, np.imag(np.conj(eta.values) * d_eta) / power, np.nan)


def stationary_time(eta: TraversalAmplitude, after: float | None = None) -> float:
    """First tau above ``after`` (default 1.02 tau_c) where the phase of eta is stationary.

    For free motion the phase rate runs from -inf just above tau_c up to
    eps_p - eps_0 > 0, so its first upward zero crossing is the stationary point.
    """
    if after is None:
        after = 1.02 * eta.barrier.tau_c
    rate = phase_rate(eta)
    taus = eta.taus
    idx = np.flatnonzero((taus[:-1] > after) & (rate[:-1] < 0) & (rate[1:] >= 0))
    if idx.size == 0:
        raise PhysicsError(f"no stationary point of the eta phase above tau = {after:g}")
    i = int(idx[0])
    r0, r1 = rate[i], rate[i + 1]
    return float(taus[i] + (taus[i + 1] - taus[i]) * r0 / (r0 - r1))


def oscillation_frequency(eta: TraversalAmplitude, lo: float, hi: float) -> float:
    """Angular frequency pi / <zero-crossing spacing> of Re eta on [lo, hi]."""
    taus = eta.taus
    mask = (taus >= lo) & (taus <= hi)
    t, re = taus[mask], eta.values.real[mask]
    sign_change = np.flatnonzero(np.signbit(re[:-1]) != np.signbit(re[1:]))
    if sign_change.size < 2:
        raise PhysicsError(f"fewer than two zero crossings of Re eta on [{lo:g}, {hi:g}]")
    crossings = t[sign_change] - re[sign_change] * (t[sign_change + 1] - t[sign_change]) / (
        re[sign_change + 1] - re[sign_change]
    )
    return math.pi / float(np.mean(np.diff(crossings)))
