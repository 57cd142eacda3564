"""Uniform grids, trapezoidal quadrature, windowed Fourier sums and peak finding."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal.windows import tukey

from tunneltime.errors import AliasingError, BoundaryPeakError, NonFiniteError, PhysicsError

SQRT_2PI = math.sqrt(2.0 * math.pi)

# Largest outer-product block evaluated at once by the direct Fourier sum.
_BLOCK_ELEMENTS = 2_000_000


@dataclass(frozen=True)
class UniformGrid:
    """``count`` points ``start + i * step``."""

    start: float
    step: float
    count: int

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.step)):
            raise PhysicsError("grid start and step must be finite")
        if self.step <= 0:
            raise PhysicsError(f"grid step must be positive, got {self.step}")
        if int(self.count) != self.count or self.count < 2:
            raise PhysicsError(f"grid needs an integer count >= 2, got {self.count}")
        object.__setattr__(self, "count", int(self.count))

    @classmethod
    def from_span(cls, start: float, stop: float, count: int) -> "UniformGrid":
        return cls(start, (stop - start) / (count - 1), count)

    @classmethod
    def centered(cls, center: float, half_points: int, step: float) -> "UniformGrid":
        """``2 * half_points + 1`` points with the middle one exactly at ``center``."""
        return cls(center - half_points * step, step, 2 * half_points + 1)

    @classmethod
    def with_step(cls, start: float, stop: float, step: float) -> "UniformGrid":
        """Smallest grid of spacing ``step`` starting at ``start`` and reaching ``stop``."""
        count = max(2, int(math.ceil((stop - start) / step - 1e-9)) + 1)
        return cls(start, step, count)

    def point(self, i: int) -> float:
        return self.start + i * self.step

    @property
    def stop(self) -> float:
        return self.point(self.count - 1)

    @property
    def points(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count)

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.count, self.step)
        w[0] = w[-1] = 0.5 * self.step
        return w


@dataclass(frozen=True)
class ComplexSamples:
    grid: UniformGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.grid.count,):
            raise PhysicsError(
                f"expected {self.grid.count} samples, got shape {values.shape}"
            )
        object.__setattr__(self, "values", values)

    @property
    def points(self) -> np.ndarray:
        return self.grid.points

    def check_finite(self) -> None:
        bad = np.flatnonzero(~np.isfinite(self.values))
        if bad.size:
            i = int(bad[0])
            raise NonFiniteError(
                f"non-finite sample at index {i} (abscissa {self.grid.point(i)!r})",
                index=i,
                abscissa=self.grid.point(i),
            )


def integrate_samples(samples: ComplexSamples) -> complex:
    """Composite trapezoidal rule over the whole grid span."""
    samples.check_finite()
    return complex(np.dot(samples.grid.trapezoid_weights(), samples.values))


def apodization(count: int, taper: float | None) -> np.ndarray:
    """Cosine edge taper over a fraction ``taper`` of the window on each side."""
    if taper is None or taper == 0:
        return np.ones(count)
    if not 0 < taper <= 0.5:
        raise PhysicsError(f"taper fraction must lie in (0, 0.5], got {taper}")
    return tukey(count, alpha=2.0 * taper)


def max_resolvable_time(w_grid: UniformGrid) -> float:
    """Half-period of a Fourier sum over ``w_grid``; larger |tau| alias."""
    return math.pi / w_grid.step


def _fft_bins(w_grid: UniformGrid, tau_grid: UniformGrid) -> int | None:
    n = 2.0 * math.pi / (w_grid.step * tau_grid.step)
    n_int = int(round(n))
    if n_int >= 2 and abs(n - n_int) <= 1e-9 * n:
        return n_int
    return None


def windowed_fourier(
    samples_over_W: ComplexSamples,
    tau_grid: UniformGrid,
    taper: float | None = None,
    center: float | None = None,
) -> ComplexSamples:
    """Trapezoidal Fourier sum ``(2pi)^-1/2 sum_W exp(i (W - center) tau) f(W) dW``.

    The phase is referenced to ``center`` (default: the middle of the W grid),
    which keeps the exponent small when the window sits far from W = 0.
    Callers wanting the transform about W = 0 multiply by ``exp(i center tau)``.

    When ``tau_step * W_step * N == 2 pi`` for an integer N the sum is
    evaluated with an FFT, otherwise by direct blocked summation; both compute
    the same discrete sum.
    """
    samples_over_W.check_finite()
    w_grid = samples_over_W.grid
    if center is None:
        center = 0.5 * (w_grid.start + w_grid.stop)
    if abs((w_grid.start + w_grid.stop) - 2.0 * center) > 1e-9 * max(1.0, abs(w_grid.stop - w_grid.start)):
        raise PhysicsError(
            f"W grid [{w_grid.start}, {w_grid.stop}] is not symmetric about center {center}"
        )
    tau_max = max_resolvable_time(w_grid)
    worst = max(abs(tau_grid.start), abs(tau_grid.stop))
    if worst > tau_max * (1.0 + 1e-12):
        raise AliasingError(
            f"|tau| up to {worst:g} requested but a W step of {w_grid.step:g} "
            f"resolves only |tau| <= {tau_max:g}",
            max_resolvable=tau_max,
        )

    g = samples_over_W.values * apodization(w_grid.count, taper) * w_grid.trapezoid_weights()
    taus = tau_grid.points

    n_bins = _fft_bins(w_grid, tau_grid)
    if n_bins is not None and w_grid.count % 2 == 1:
        # W - center = m dW with integer m, and tau_n = (n0 + n) dtau + rho with
        # |rho| <= dtau / 2, so every phase is 2 pi m (n0 + n) / N plus a small
        # m dW rho: no large argument is ever rounded.
        m = np.arange(w_grid.count) - (w_grid.count - 1) // 2
        n0 = int(round(tau_grid.start / tau_grid.step))
        rho = tau_grid.start - n0 * tau_grid.step
        folded = np.zeros(n_bins, dtype=complex)
        np.add.at(folded, m % n_bins, g * np.exp(1j * m * w_grid.step * rho))
        spectrum = np.fft.ifft(folded) * n_bins
        values = spectrum[(n0 + np.arange(tau_grid.count)) % n_bins]
    else:
        u = w_grid.points - center
        values = np.empty(tau_grid.count, dtype=complex)
        block = max(1, _BLOCK_ELEMENTS // w_grid.count)
        for lo in range(0, tau_grid.count, block):
            t = taus[lo:lo + block]
            values[lo:lo + block] = np.exp(1j * np.outer(t, u)) @ g
    return ComplexSamples(tau_grid, values / SQRT_2PI)


def locate_peak(samples: ComplexSamples) -> float:
    """Abscissa of max |values|, refined by a parabola through the three top samples."""
    if samples.grid.count < 3:
        raise PhysicsError("peak location needs at least 3 samples")
    mag = np.abs(samples.values)
    i = int(np.argmax(mag))
    if i == 0 or i == samples.grid.count - 1:
        raise BoundaryPeakError(
            f"maximum of |values| lies on the grid boundary (index {i})", index=i
        )
    y0, y1, y2 = mag[i - 1], mag[i], mag[i + 1]
    curvature = y0 - 2.0 * y1 + y2
    offset = 0.0 if curvature == 0 else 0.5 * (y0 - y2) / curvature
    return samples.grid.point(i) + offset * samples.grid.step


def relative_l2(values: np.ndarray, reference: np.ndarray) -> float:
    return float(np.linalg.norm(values - reference) / np.linalg.norm(reference))


def relative_linf(values: np.ndarray, reference: np.ndarray) -> float:
    return float(np.max(np.abs(values - reference)) / np.max(np.abs(reference)))
