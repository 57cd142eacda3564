"""Klein-Gordon plane-wave transmission through the rectangular barrier W on [-b/2, b/2].

All amplitudes follow the free-phase convention: the barrier is centred at the
origin and T(p, 0) = 1, R(p, 0) = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from tunneltime.errors import PhysicsError

# Sign of the real interior wavevector in the antiparticle sector
# (eps_p - W <= -eps_0). Flip here and nowhere else.
ANTIPARTICLE_BRANCH = +1.0

# Below this |k| b the closed forms switch to the cos/sinc representation,
# which stays finite through the branch point k = 0.
_SMALL_KB = 0.5


@dataclass(frozen=True)
class ParticleSpec:
    """Incident particle: rest energy eps_0 = m c^2 and momentum p (hbar = c = 1)."""

    rest_energy: float
    momentum: float

    def __post_init__(self):
        if not (self.rest_energy > 0 and math.isfinite(self.rest_energy)):
            raise PhysicsError(f"rest energy must be positive, got {self.rest_energy}")
        if not (self.momentum > 0 and math.isfinite(self.momentum)):
            raise PhysicsError(
                f"momentum must be positive (no incident flux otherwise), got {self.momentum}"
            )

    @classmethod
    def from_energy(cls, rest_energy: float, energy: float) -> "ParticleSpec":
        if energy <= rest_energy:
            raise PhysicsError(f"total energy {energy} must exceed rest energy {rest_energy}")
        return cls(rest_energy, math.sqrt((energy - rest_energy) * (energy + rest_energy)))

    @property
    def energy(self) -> float:
        return math.hypot(self.momentum, self.rest_energy)

    @property
    def group_velocity(self) -> float:
        return self.momentum / self.energy

    def with_momentum(self, momentum: float) -> "ParticleSpec":
        return ParticleSpec(self.rest_energy, momentum)


@dataclass(frozen=True)
class BarrierSpec:
    """Height V on [-b/2, b/2]; V = 0 is free motion."""

    height: float
    width: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.height):
            raise PhysicsError("barrier height must be finite")
        if not (self.width > 0 and math.isfinite(self.width)):
            raise PhysicsError(f"barrier width must be positive, got {self.width}")

    @property
    def tau_c(self) -> float:
        """Light-crossing time b/c."""
        return self.width

    @property
    def region(self) -> tuple[float, float]:
        return (-0.5 * self.width, 0.5 * self.width)

    def with_height(self, height: float) -> "BarrierSpec":
        return BarrierSpec(height, self.width)

    @classmethod
    def for_decay(cls, particle: ParticleSpec, kappa_b: float, width: float = 1.0) -> "BarrierSpec":
        """Barrier under which ``particle`` has evanescent decay kappa * b = ``kappa_b``."""
        kappa = kappa_b / width
        if not 0 < kappa < particle.rest_energy:
            raise PhysicsError(
                f"kappa = {kappa} unreachable: needs 0 < kappa < eps_0 = {particle.rest_energy}"
            )
        return cls(particle.energy - math.sqrt(particle.rest_energy**2 - kappa**2), width)


def wavevector_inside(energy, W, rest_energy):
    """k(W) = [(eps_p - W)^2 - eps_0^2]^(1/2) on the tunnelling-continuous branch.

    Real and non-negative in the particle sector, +i|k| under the barrier, and
    ``ANTIPARTICLE_BRANCH * |k|`` once eps_p - W <= -eps_0.
    """
    d = np.asarray(energy, dtype=float) - np.asarray(W, dtype=float)
    s = d * d - rest_energy * rest_energy
    root = np.sqrt(np.abs(s))
    k = np.where(s >= 0, np.where(d >= 0, root, ANTIPARTICLE_BRANCH * root), 1j * root)
    k = k.astype(complex)
    return k[()] if k.ndim == 0 else k


def _amplitudes(p, k, b):
    """Exact (T, R) for plane-wave matching of psi and psi' at z = -b/2, b/2."""
    p = np.asarray(p, dtype=complex)
    k = np.asarray(k, dtype=complex)
    p, k = np.broadcast_arrays(p, k)
    T = np.empty(p.shape, dtype=complex)
    R = np.empty(p.shape, dtype=complex)
    free = np.exp(-1j * p * b)

    big = np.abs(k) * b >= _SMALL_KB
    if np.any(big):
        pb, kb_ = p[big], k[big]
        e2 = np.exp(2j * kb_ * b)
        denom = (pb + kb_) ** 2 - (pb - kb_) ** 2 * e2
        T[big] = 4 * pb * kb_ * np.exp(1j * kb_ * b) * free[big] / denom
        R[big] = (kb_**2 - pb**2) * (e2 - 1) * free[big] / denom
    small = ~big
    if np.any(small):
        ps, ks = p[small], k[small]
        sinc_b = b * np.sinc(ks * b / np.pi)  # sin(kb)/k
        denom = np.cos(ks * b) - 0.5j * (ps**2 + ks**2) / ps * sinc_b
        T[small] = free[small] / denom
        R[small] = 0.5j * (ks**2 - ps**2) / ps * sinc_b * free[small] / denom
    if T.ndim == 0:
        return T[()], R[()]
    return T, R


def _anchor(values, W, free_value):
    """At W = 0 return the free value exactly instead of a rounded one."""
    out = np.where(W == 0, free_value, values)
    return out[()] if out.ndim == 0 else out


def _check_W(W):
    W = np.asarray(W, dtype=float)
    if not np.all(np.isfinite(W)):
        raise PhysicsError("barrier strength W must be finite")
    return W


def transmission_amplitude(momentum, rest_energy: float, W, width: float = 1.0):
    """Vectorised exact T over arrays of momenta and/or barrier heights."""
    p = np.asarray(momentum, dtype=float)
    if np.any(p <= 0):
        raise PhysicsError("transmission needs p > 0 (no incident flux at p = 0)")
    W = _check_W(W)
    k = wavevector_inside(np.sqrt(p * p + rest_energy**2), W, rest_energy)
    return _anchor(_amplitudes(p, k, width)[0], W, 1.0 + 0j)


def transmission_exact(particle: ParticleSpec, W, barrier: BarrierSpec):
    """Exact T(p, W) for height ``W`` over ``barrier``'s region; ``barrier.height`` is not used."""
    W = _check_W(W)
    k = wavevector_inside(particle.energy, W, particle.rest_energy)
    return _anchor(_amplitudes(particle.momentum, k, barrier.width)[0], W, 1.0 + 0j)


def reflection_exact(particle: ParticleSpec, W, barrier: BarrierSpec):
    W = _check_W(W)
    k = wavevector_inside(particle.energy, W, particle.rest_energy)
    return _anchor(_amplitudes(particle.momentum, k, barrier.width)[1], W, 0j)


def transmission_semiclassical(particle: ParticleSpec, W, barrier: BarrierSpec):
    """Single-pass term of the multiple-scattering series, 4pk/(p+k)^2 exp[i(k-p)b]."""
    W = _check_W(W)
    p, b = particle.momentum, barrier.width
    k = wavevector_inside(particle.energy, W, particle.rest_energy)
    return _anchor(4 * p * k / (p + k) ** 2 * np.exp(1j * (k - p) * b), W, 1.0 + 0j)


def log_transmission(particle: ParticleSpec, W: float, barrier: BarrierSpec) -> tuple[float, float]:
    """(log|T|, arg T) without forming T; usable far below float underflow."""
    p, b = particle.momentum, barrier.width
    k = complex(wavevector_inside(particle.energy, float(W), particle.rest_energy))
    if abs(k) * b < _SMALL_KB:
        T = complex(_amplitudes(p, k, b)[0])
        return math.log(abs(T)), math.atan2(T.imag, T.real)
    e2 = np.exp(2j * k * b)
    log_t = np.log(4 * p * k) + 1j * (k - p) * b - np.log((p + k) ** 2 - (p - k) ** 2 * e2)
    return float(log_t.real), float(math.remainder(log_t.imag, 2 * math.pi))
