"""Gaussian wavepackets: construction, free and transmitted propagation, and
the reassembly of the transmitted pulse from copies delayed by each duration
tau spent in the barrier.

Every pulse here is a superposition int A(p) exp(i p z - i eps_p t) (...) dp of
positive-energy plane waves, evaluated by trapezoidal sums on a momentum grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from tunneltime.barrier import BarrierSpec, ParticleSpec, transmission_amplitude, transmission_exact
from tunneltime.errors import AliasingError, PhysicsError
from tunneltime.numerics import ComplexSamples, UniformGrid, locate_peak
from tunneltime.traversal import (
    TraversalAmplitude,
    WWindow,
    eta_numeric,
    eta_semiclassical,
    saddle_time,
    steepest_descent_eta,
)

LEAKAGE_TOLERANCE = 1e-6
# momentum grid defaults: points per spectral width 1/dz, and half-span in widths
POINTS_PER_WIDTH = 12
HALF_SPAN_WIDTHS = 12


@dataclass(frozen=True)
class WavepacketSpec:
    """Psi(z, 0) = exp(i p0 z) G(z + z0) with G(y) = exp(-y^2 / dz^2).

    ``truncate_at`` (z') zeroes the front of the envelope, G -> 0 for y > z',
    with an erfc edge of width ``smoothing`` (default dz / 20).
    """

    particle: ParticleSpec
    width: float
    offset: float
    truncate_at: float | None = None
    smoothing: float | None = None

    def __post_init__(self):
        if not self.width > 0:
            raise PhysicsError(f"envelope width must be positive, got {self.width}")
        if self.offset < 2.0:
            raise PhysicsError(f"launch offset z0 = {self.offset} must be at least 2b")
        if self.truncate_at is not None:
            if self.truncate_at < 3.0 * self.width:
                raise PhysicsError("front truncation point z' must be at least 3 dz")
            if self.smoothing is None:
                object.__setattr__(self, "smoothing", self.width / 20.0)
            elif not self.smoothing > 0:
                raise PhysicsError("truncation smoothing width must be positive")

    @property
    def carrier(self) -> float:
        return self.particle.momentum

    @property
    def spectral_width(self) -> float:
        return 1.0 / self.width

    @property
    def truncated(self) -> bool:
        return self.truncate_at is not None

    def envelope(self, y):
        """G(y); accepts complex arguments."""
        y = np.asarray(y)
        g = np.exp(-(y**2) / self.width**2)
        if self.truncated:
            g = g * 0.5 * erfc((y - self.truncate_at) / self.smoothing)
        return g

    def initial(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return np.exp(1j * self.carrier * z) * self.envelope(z + self.offset)

    def default_momentum_grid(self, shift: float = 0.0) -> UniformGrid:
        sigma = self.spectral_width
        half = HALF_SPAN_WIDTHS * sigma
        if self.truncated:
            # the erfc edge has spectral extent ~ 1/smoothing
            half = max(half, 10.0 / self.smoothing)
        step = sigma / POINTS_PER_WIDTH
        lo = max(self.carrier + shift - half, step)
        return UniformGrid.with_step(lo, self.carrier + shift + half, step)


@dataclass(frozen=True)
class ComplexField:
    z_grid: UniformGrid
    values: np.ndarray
    time: float
    label: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.z_grid.count,):
            raise PhysicsError("field values do not match the z grid")
        if not np.all(np.isfinite(values)):
            raise PhysicsError(f"non-finite values in {self.label} field")
        object.__setattr__(self, "values", values)

    @property
    def points(self) -> np.ndarray:
        return self.z_grid.points

    def samples(self) -> ComplexSamples:
        return ComplexSamples(self.z_grid, self.values)


def _check_scenario(spec: WavepacketSpec, barrier: BarrierSpec) -> None:
    if spec.offset < 2.0 * barrier.width:
        raise PhysicsError(f"launch offset z0 = {spec.offset} must be at least 2b = {2 * barrier.width}")


def _is_tunnelling(particle: ParticleSpec, barrier: BarrierSpec) -> bool:
    return particle.energy - particle.rest_energy < barrier.height


def momentum_spectrum(
    spec: WavepacketSpec,
    p_grid: UniformGrid | None = None,
    barrier: BarrierSpec | None = None,
) -> ComplexSamples:
    """A(p) = (1/2pi) int exp(-i p z) Psi(z, 0) dz.

    Closed form for the plain Gaussian; the truncated envelope is transformed
    by quadrature. With a tunnelling ``barrier`` the spectral weight at
    eps_p - eps_0 >= V must stay below ``LEAKAGE_TOLERANCE``.
    """
    if p_grid is None:
        p_grid = spec.default_momentum_grid()
    p = p_grid.points
    q = p - spec.carrier
    if not spec.truncated:
        A = spec.width * math.sqrt(math.pi) / (2 * math.pi) * np.exp(1j * q * spec.offset - (q * spec.width) ** 2 / 4)
    else:
        lo = -10.0 * spec.width
        hi = spec.truncate_at + 10.0 * spec.smoothing
        y = UniformGrid.with_step(lo, hi, min(spec.width / 200.0, spec.smoothing / 8.0))
        g = spec.envelope(y.points) * y.trapezoid_weights()
        A = np.empty(p.size, dtype=complex)
        block = max(1, 2_000_000 // y.count)
        for i in range(0, p.size, block):
            A[i:i + block] = np.exp(-1j * np.outer(q[i:i + block], y.points)) @ g
        A *= np.exp(1j * q * spec.offset) / (2 * math.pi)
    spectrum = ComplexSamples(p_grid, A)
    if barrier is not None and _is_tunnelling(spec.particle, barrier):
        leaked = above_barrier_weight(spectrum, spec.particle.rest_energy, barrier)
        if leaked > LEAKAGE_TOLERANCE:
            raise PhysicsError(
                f"{leaked:.3g} of the spectral weight lies above the barrier top; "
                "not all momenta tunnel"
            )
    return spectrum


def above_barrier_weight(spectrum: ComplexSamples, rest_energy: float, barrier: BarrierSpec) -> float:
    p = spectrum.points
    weight = np.abs(spectrum.values) ** 2 * spectrum.grid.trapezoid_weights()
    above = np.sqrt(p * p + rest_energy**2) - rest_energy >= barrier.height
    return float(weight[above].sum() / weight.sum())


def _spread_width(spec: WavepacketSpec, t: float) -> float:
    e0 = spec.particle.rest_energy
    curvature = e0**2 / spec.particle.energy**3
    return spec.width * math.hypot(1.0, 2.0 * curvature * t / spec.width**2)


def _check_aliasing(spec: WavepacketSpec, p_grid: UniformGrid, z_grid: UniformGrid, t: float, advance: float) -> None:
    period = 2 * math.pi / p_grid.step
    center = spec.particle.group_velocity * t - spec.offset
    reach = max(abs(z_grid.start - center), abs(z_grid.stop - center))
    needed = reach + 6.0 * _spread_width(spec, t) + abs(advance)
    if needed > period:
        raise AliasingError(
            f"momentum step {p_grid.step:g} repeats the pulse every {period:g}; "
            f"the z grid needs at least {needed:g}",
            max_resolvable=period,
        )


def _propagate(spec: WavepacketSpec, weights: np.ndarray, p_grid: UniformGrid, z_grid: UniformGrid, t: float) -> np.ndarray:
    p = p_grid.points
    eps = np.sqrt(p * p + spec.particle.rest_energy**2)
    w = weights * np.exp(-1j * eps * t) * p_grid.trapezoid_weights()
    z = z_grid.points
    out = np.empty(z.size, dtype=complex)
    block = max(1, 2_000_000 // p.size)
    for i in range(0, z.size, block):
        out[i:i + block] = np.exp(1j * np.outer(z[i:i + block], p)) @ w
    return out


def free_pulse(spec: WavepacketSpec, z_grid: UniformGrid, t: float, p_grid: UniformGrid | None = None) -> ComplexField:
    if p_grid is None:
        p_grid = spec.default_momentum_grid()
    _check_aliasing(spec, p_grid, z_grid, t, advance=0.0)
    A = momentum_spectrum(spec, p_grid)
    return ComplexField(z_grid, _propagate(spec, A.values, p_grid, z_grid, t), t, "free")


def transmitted_pulse_spectral(
    spec: WavepacketSpec,
    barrier: BarrierSpec,
    z_grid: UniformGrid,
    t: float,
    p_grid: UniformGrid | None = None,
) -> ComplexField:
    """Psi^T(z, t) = int T(p, V) A(p) exp(i p z - i eps_p t) dp."""
    _check_scenario(spec, barrier)
    if p_grid is None:
        p_grid = spec.default_momentum_grid(shift=_transmitted_shift(spec, barrier))
    _check_aliasing(spec, p_grid, z_grid, t, advance=barrier.width)
    A = momentum_spectrum(spec, p_grid, barrier=barrier)
    T = transmission_amplitude(p_grid.points, spec.particle.rest_energy, barrier.height, barrier.width)
    return ComplexField(z_grid, _propagate(spec, A.values * T, p_grid, z_grid, t), t, "transmitted")


def _transmitted_shift(spec: WavepacketSpec, barrier: BarrierSpec) -> float:
    """Centre offset of |T A| relative to p0 under the barrier (zero otherwise)."""
    try:
        tau_v = abs(saddle_time(spec.particle, barrier))
    except PhysicsError:
        return 0.0
    return 2.0 * spec.particle.group_velocity * tau_v / spec.width**2


def _eta_table(
    spec: WavepacketSpec,
    barrier: BarrierSpec,
    p_grid: UniformGrid,
    window: WWindow,
    tau_grid: UniformGrid,
) -> np.ndarray:
    """eta(p, tau) for every p on ``p_grid``; shape (p, tau)."""
    rows = []
    for p in p_grid.points:
        particle = spec.particle.with_momentum(float(p))
        rows.append(eta_numeric(particle, barrier, window=window, tau_grid=tau_grid).values)
    return np.array(rows)


def traversal_resolved_pulse(
    spec: WavepacketSpec,
    barrier: BarrierSpec,
    tau,
    z_grid: UniformGrid,
    t: float,
    window: WWindow | None = None,
    p_grid: UniformGrid | None = None,
):
    """Phi(z, t | tau) = int A(p) exp(i p z - i eps_p t) eta(p, tau) dp.

    ``tau`` may be a number, giving one :class:`ComplexField`, or a
    :class:`UniformGrid`, giving ``(tau_grid, values)`` with values of shape
    (tau, z).
    """
    _check_scenario(spec, barrier)
    if p_grid is None:
        p_grid = spec.default_momentum_grid(shift=_transmitted_shift(spec, barrier))
    _check_aliasing(spec, p_grid, z_grid, t, advance=barrier.width)
    if window is None:
        window = WWindow.default(spec.particle, barrier)
    A = momentum_spectrum(spec, p_grid, barrier=barrier)
    if isinstance(tau, UniformGrid):
        tau_grid = tau
        scalar = False
    else:
        tau_grid = UniformGrid(float(tau), 1.0, 2)
        scalar = True
    table = _eta_table(spec, barrier, p_grid, window, tau_grid)

    p = p_grid.points
    eps = np.sqrt(p * p + spec.particle.rest_energy**2)
    carrier = np.exp(1j * (np.outer(z_grid.points, p) - eps * t)) * (A.values * p_grid.trapezoid_weights())
    values = (carrier @ table).T
    if scalar:
        return ComplexField(z_grid, values[0], t, f"traversal-resolved(tau={float(tau):g})")
    return tau_grid, values


def _convolve(spec: WavepacketSpec, barrier: BarrierSpec, z: np.ndarray, t: float, taus, weights) -> np.ndarray:
    """sum_tau G(z + z0 - b - v0 (t - tau)) w(tau) for every z."""
    v0 = spec.particle.group_velocity
    shift = z + spec.offset - barrier.width - v0 * t
    out = np.empty(z.size, dtype=complex)
    block = max(1, 2_000_000 // len(taus))
    for i in range(0, z.size, block):
        out[i:i + block] = spec.envelope(shift[i:i + block, None] + v0 * taus[None, :]) @ weights
    return out


def convolution_pulse(
    spec: WavepacketSpec,
    barrier: BarrierSpec,
    z_grid: UniformGrid,
    t: float,
    eta_source: str | TraversalAmplitude = "numeric",
    window: WWindow | None = None,
) -> ComplexField:
    """exp(i p0 z - i eps_p0 t) int G(z + z0 - b - v0 (t - tau)) eta(p0, tau) dtau.

    ``numeric`` uses eta from the exact T over its full tau period.
    ``semiclassical`` uses the closed-form eta: under the barrier on the
    steepest-descent line through tau_V (the real-axis integral cancels to
    ~exp(-kappa b)), otherwise on the real axis above tau_c.
    A :class:`TraversalAmplitude` is used as given.
    """
    _check_scenario(spec, barrier)
    particle = spec.particle
    if particle.momentum * barrier.width < 30:
        raise PhysicsError("convolution form needs the semiclassical regime p0 b >= 30")
    v0 = particle.group_velocity
    z = z_grid.points
    shift = z + spec.offset - barrier.width - v0 * t
    reach = 8.0 * spec.width / v0
    tau_lo, tau_hi = float((-shift).min() / v0 - reach), float((-shift).max() / v0 + reach)

    if isinstance(eta_source, TraversalAmplitude):
        taus = eta_source.taus
        weights = eta_source.direction * eta_source.values * eta_source.tau_grid.trapezoid_weights()
    elif eta_source == "numeric":
        eta = eta_numeric(particle, barrier, window=window)
        needed_hi = max(tau_hi, 1.5 * barrier.width / v0)
        if eta.tau_grid.start > tau_lo or eta.tau_grid.stop < needed_hi:
            raise PhysicsError(
                f"eta covers tau in [{eta.tau_grid.start:g}, {eta.tau_grid.stop:g}] "
                f"but the convolution needs [{tau_lo:g}, {needed_hi:g}]"
            )
        taus = eta.taus
        weights = eta.values * eta.tau_grid.trapezoid_weights()
    elif eta_source == "semiclassical":
        if abs(particle.energy - barrier.height) < particle.rest_energy:
            eta = steepest_descent_eta(particle, barrier, free_phase=True)
            taus = eta.taus
            weights = eta.direction * eta.values * eta.tau_grid.trapezoid_weights()
        else:
            tc = barrier.tau_c
            if tau_hi <= tc:
                raise PhysicsError("convolution window lies entirely inside |tau| < tau_c")
            grid = UniformGrid.with_step(tc * (1 + 1e-6), tau_hi, tc / 400.0)
            taus = grid.points
            weights = eta_semiclassical(particle, barrier, taus, free_phase=True) * grid.trapezoid_weights()
    else:
        raise PhysicsError(f"unknown eta source {eta_source!r}")

    values = _convolve(spec, barrier, z, t, taus, weights)
    values *= np.exp(1j * (particle.momentum * z - particle.energy * t))
    return ComplexField(z_grid, values, t, f"convolution({eta_source})")


def semiclassical_pulse(spec: WavepacketSpec, barrier: BarrierSpec, z_grid: UniformGrid, t: float) -> ComplexField:
    """G(z + z0 - b - v0 (t + i|tau_V|)) T(p0, V) exp[i (p0 z - eps_p0 t)]."""
    _check_scenario(spec, barrier)
    particle = spec.particle
    tau_v = abs(saddle_time(particle, barrier))
    z = z_grid.points
    v0 = particle.group_velocity
    arg = z + spec.offset - barrier.width - v0 * (t + 1j * tau_v)
    T0 = complex(transmission_exact(particle, barrier.height, barrier))
    values = spec.envelope(arg) * T0 * np.exp(1j * (particle.momentum * z - particle.energy * t))
    return ComplexField(z_grid, values, t, "semiclassical")


def pulse_advancement(pulse_a: ComplexField, pulse_b: ComplexField) -> float:
    """Peak position of ``pulse_a`` minus that of ``pulse_b``."""
    if pulse_a.z_grid != pulse_b.z_grid:
        raise PhysicsError("pulses are sampled on different z grids")
    if pulse_a.time != pulse_b.time:
        raise PhysicsError("pulses are taken at different times")
    return locate_peak(pulse_a.samples()) - locate_peak(pulse_b.samples())


def classical_crossing_time(particle: ParticleSpec, barrier: BarrierSpec) -> float:
    """b / v0: time spent in the region at constant velocity."""
    return barrier.width / particle.group_velocity


def causality_experiment(
    spec: WavepacketSpec,
    barrier: BarrierSpec,
    z_grid: UniformGrid,
    t: float,
    margin: float | None = None,
) -> dict:
    """Transmitted amplitude beyond the light cone of the packet's front.

    The initial support ends at z = -z0 + z' (plus the erfc edge), so nothing
    may arrive beyond z = c t - z0 + margin, margin defaulting to
    z' + 6 * smoothing. Untruncated packets use margin 0 and are reported
    for reference only.
    """
    if margin is None:
        margin = spec.truncate_at + 6.0 * spec.smoothing if spec.truncated else 0.0
    boundary = t - spec.offset + margin
    if z_grid.stop <= boundary:
        raise PhysicsError(f"z grid ends at {z_grid.stop:g}, before the light cone at {boundary:g}")
    pulse = transmitted_pulse_spectral(spec, barrier, z_grid, t)
    mag = np.abs(pulse.values)
    outside = pulse.points > boundary
    peak = float(mag.max())
    return {
        "truncated": spec.truncated,
        "truncate_at": spec.truncate_at,
        "smoothing": spec.smoothing,
        "light_cone_z": t - spec.offset,
        "margin": margin,
        "peak": peak,
        "peak_z": float(pulse.points[int(np.argmax(mag))]),
        "max_outside": float(mag[outside].max()),
        "leakage_ratio": float(mag[outside].max() / peak),
        "pulse": pulse,
    }
