"""Von Neumann meter with pre- and postselection, the weak-measurement analogue
of the tunnelling-time reshaping.

The pointer starts in G(tau) = exp(-tau^2 / sigma^2). After coupling to an
observable with eigenvalues A_i and postselection, it is left in

    <tau|M> = sum_i G(tau - A_i) eta_i,    eta_i = conj(b_i) a_i,

which for a broad pointer looks like <F|I> G(tau - alpha), alpha being the
weak value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from tunneltime.errors import PhysicsError
from tunneltime.numerics import ComplexSamples, UniformGrid

COVERAGE_SIGMAS = 4.0


@dataclass(frozen=True)
class WeakMeterSpec:
    eigenvalues: np.ndarray
    pre: np.ndarray
    post: np.ndarray
    pointer_width: float

    def __post_init__(self):
        A = np.asarray(self.eigenvalues, dtype=float)
        a = np.asarray(self.pre, dtype=complex)
        b = np.asarray(self.post, dtype=complex)
        if A.ndim != 1 or A.size < 1 or a.shape != A.shape or b.shape != A.shape:
            raise PhysicsError("eigenvalues, pre- and postselection amplitudes must be equal-length vectors")
        if np.any(A < 0) or np.any(A > 1):
            raise PhysicsError("eigenvalues must lie in [0, 1]")
        if not self.pointer_width > 0:
            raise PhysicsError("pointer width must be positive")
        for name, v in (("preselection", a), ("postselection", b)):
            if not math.isclose(float(np.vdot(v, v).real), 1.0, rel_tol=1e-9):
                raise PhysicsError(f"{name} amplitudes are not normalised")
        object.__setattr__(self, "eigenvalues", A)
        object.__setattr__(self, "pre", a)
        object.__setattr__(self, "post", b)

    @classmethod
    def normalised(cls, eigenvalues, pre, post, pointer_width: float) -> "WeakMeterSpec":
        a = np.asarray(pre, dtype=complex)
        b = np.asarray(post, dtype=complex)
        return cls(eigenvalues, a / np.linalg.norm(a), b / np.linalg.norm(b), pointer_width)

    @classmethod
    def two_level(cls, target: float, pointer_width: float) -> "WeakMeterSpec":
        """N = 2, A = {0, 1}, a = (1, 1)/sqrt2, with b chosen so the weak value is ``target``.

        With real b, alpha = b_1 / (b_0 + b_1), hence b proportional to (1 - alpha, alpha)
        up to scale; alpha = 100 gives b proportional to (-0.99, 1).
        """
        if target == 0:
            post = (1.0, 0.0)
        else:
            post = ((1.0 - target) / target, 1.0)
        return cls.normalised([0.0, 1.0], [1.0, 1.0], post, pointer_width)

    @property
    def weights(self) -> np.ndarray:
        """eta_i = conj(b_i) a_i."""
        return np.conj(self.post) * self.pre

    @property
    def overlap(self) -> complex:
        """<F|I>."""
        return complex(self.weights.sum())

    def pointer(self, tau) -> np.ndarray:
        return np.exp(-(np.asarray(tau) ** 2) / self.pointer_width**2)


def weak_value(meter: WeakMeterSpec) -> complex:
    """alpha = sum A_i eta_i / sum eta_i."""
    total = meter.overlap
    if abs(total) < 1e-15 * np.abs(meter.weights).sum():
        raise PhysicsError("postselected state is orthogonal to the preselected one")
    return complex(np.dot(meter.eigenvalues, meter.weights) / total)


def pointer_final_state(meter: WeakMeterSpec, tau_grid: UniformGrid, check_coverage: bool = True) -> ComplexSamples:
    """Unnormalised pointer wavefunction sum_i G(tau - A_i) eta_i."""
    if check_coverage:
        lo = min(meter.eigenvalues.min(), 0.0)
        hi = meter.eigenvalues.max()
        try:
            alpha = weak_value(meter).real
            lo, hi = min(lo, alpha), max(hi, alpha)
        except PhysicsError:
            pass
        margin = COVERAGE_SIGMAS * meter.pointer_width
        if tau_grid.start > lo - margin or tau_grid.stop < hi + margin:
            raise PhysicsError(
                f"pointer grid [{tau_grid.start:g}, {tau_grid.stop:g}] must cover "
                f"[{lo - margin:g}, {hi + margin:g}]"
            )
    tau = tau_grid.points
    state = meter.pointer(tau[:, None] - meter.eigenvalues[None, :]) @ meter.weights
    return ComplexSamples(tau_grid, state)


def _shifted_gaussian(tau: np.ndarray, shift: complex, width: float) -> np.ndarray:
    return np.exp(-((tau - shift) ** 2) / width**2)


def gaussian_shift_fit(state: ComplexSamples, pointer_width: float) -> tuple[complex, float]:
    """Least-squares fit of c G(tau - alpha) with complex c and alpha.

    Returns alpha and the relative L2 residual |state - fit| / |state|.
    """
    tau = state.points
    psi = state.values
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise PhysicsError("cannot fit a vanishing pointer state")

    def best_amplitude(g):
        return np.vdot(g, psi) / np.vdot(g, g)

    def residual(x):
        g = _shifted_gaussian(tau, x[0] + 1j * x[1], pointer_width)
        r = psi - best_amplitude(g) * g
        return np.concatenate([r.real, r.imag]) / norm

    # For c G(tau - alpha), d/dtau log psi = -2 (tau - alpha) / sigma^2.
    d_psi = np.gradient(psi, state.grid.step)
    weight = np.abs(psi) ** 2
    if weight.sum() == 0 or np.ptp(np.abs(psi)) == 0:
        raise PhysicsError("degenerate pointer state: nothing to fit")
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        local = np.where(weight > 0, tau + 0.5 * pointer_width**2 * d_psi / psi, 0)
    guess = complex(np.sum(weight * local) / weight.sum())
    if not np.isfinite(guess):
        guess = complex(tau[int(np.argmax(weight))])

    fit = least_squares(residual, [guess.real, guess.imag], x_scale=pointer_width, xtol=1e-14, ftol=1e-14, gtol=1e-14)
    alpha = complex(fit.x[0], fit.x[1])
    return alpha, float(np.linalg.norm(residual(fit.x)))
