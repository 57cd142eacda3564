import cmath

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tunneltime.errors import PhysicsError
from tunneltime.numerics import ComplexSamples, UniformGrid, relative_l2
from tunneltime.weakmeas import WeakMeterSpec, gaussian_shift_fit, pointer_final_state, weak_value


def pointer_grid(meter, count=4001, sigmas=5.0):
    alpha = weak_value(meter).real
    margin = sigmas * meter.pointer_width
    lo = min(0.0, alpha, meter.eigenvalues.min()) - margin
    hi = max(alpha, meter.eigenvalues.max()) + margin
    return UniformGrid.from_span(lo, hi, count)


def test_single_level_is_a_shifted_pointer():
    meter = WeakMeterSpec([0.3], [1.0], [1j], 2.0)
    grid = UniformGrid.from_span(-10.0, 10.0, 401)
    state = pointer_final_state(meter, grid)
    expected = np.exp(-((grid.points - 0.3) ** 2) / 4.0) * (-1j)
    assert np.array_equal(state.values, expected)


def test_spec_validation():
    with pytest.raises(PhysicsError):
        WeakMeterSpec([0.0, 1.5], [1.0, 0.0], [1.0, 0.0], 1.0)
    with pytest.raises(PhysicsError):
        WeakMeterSpec([0.0, 1.0], [1.0, 1.0], [1.0, 0.0], 1.0)
    with pytest.raises(PhysicsError):
        WeakMeterSpec.normalised([0.0, 1.0], [1.0, 1.0], [1.0, 0.0], 0.0)


def test_no_postselection_bias_gives_expectation_value():
    a = np.array([0.6, 0.8j])
    meter = WeakMeterSpec([0.0, 1.0], a, a, 0.3)
    alpha = weak_value(meter)
    assert alpha == pytest.approx(0.64)
    state = pointer_final_state(meter, UniformGrid.from_span(-2.0, 3.0, 5001))
    peak = state.points[np.argmax(np.abs(state.values))]
    assert 0.0 <= peak <= 1.0


def test_anomalous_weak_value_of_one_hundred():
    meter = WeakMeterSpec.two_level(100.0, 2000.0)
    ratio = meter.post[0] / meter.post[1]
    assert ratio == pytest.approx(-0.99)
    # independent: eta_1 / (eta_0 + eta_1) with eta_i = conj(b_i) a_i
    b0, b1 = -0.99, 1.0
    assert b1 / (b0 + b1) == pytest.approx(100.0)
    assert weak_value(meter) == pytest.approx(100.0, rel=1e-12)


def test_orthogonal_postselection_rejected():
    meter = WeakMeterSpec.normalised([0.0, 1.0], [1.0, 1.0], [1.0, -1.0], 1.0)
    with pytest.raises(PhysicsError):
        weak_value(meter)


def test_coverage_enforced():
    meter = WeakMeterSpec.two_level(5.0, 20.0)
    with pytest.raises(PhysicsError):
        pointer_final_state(meter, UniformGrid.from_span(-20.0, 20.0, 101))


@settings(max_examples=50, deadline=None)
@given(
    n=st.integers(2, 5),
    seed=st.integers(0, 2**31 - 1),
    phase=st.floats(0.0, 6.28),
)
def test_permutation_and_global_phase_invariance(n, seed, phase):
    rng = np.random.default_rng(seed)
    A = rng.uniform(0.0, 1.0, n)
    a = rng.normal(size=n) + 1j * rng.normal(size=n)
    b = rng.normal(size=n) + 1j * rng.normal(size=n)
    meter = WeakMeterSpec.normalised(A, a, b, 1.0)
    if abs(meter.overlap) < 1e-3:
        return
    alpha = weak_value(meter)
    order = rng.permutation(n)
    permuted = WeakMeterSpec.normalised(A[order], a[order], b[order], 1.0)
    assert weak_value(permuted) == pytest.approx(alpha, rel=1e-9, abs=1e-12)

    u = cmath.exp(1j * phase)
    rotated = WeakMeterSpec.normalised(A, u * a, b / u, 1.0)
    assert weak_value(rotated) == pytest.approx(alpha, rel=1e-9, abs=1e-12)
    grid = UniformGrid.from_span(-8.0, 9.0, 341)
    s1 = pointer_final_state(meter, grid, check_coverage=False).values
    s2 = pointer_final_state(rotated, grid, check_coverage=False).values
    assert np.allclose(np.abs(s1), np.abs(s2), rtol=1e-10, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(c1=st.floats(-2, 2), c2=st.floats(-2, 2), seed=st.integers(0, 1000))
def test_pointer_state_linear_in_preselection(c1, c2, seed):
    rng = np.random.default_rng(seed)
    A = rng.uniform(0, 1, 3)
    b = rng.normal(size=3) + 1j * rng.normal(size=3)
    b /= np.linalg.norm(b)
    grid = UniformGrid.from_span(-5.0, 6.0, 221)

    def state(a):
        # linearity of the unnormalised sum, bypassing spec normalisation
        meter = WeakMeterSpec(A, np.array([1, 0, 0], complex), b, 1.0)
        weights = np.conj(b) * a
        return meter.pointer(grid.points[:, None] - A[None, :]) @ weights

    a1 = rng.normal(size=3) + 0j
    a2 = rng.normal(size=3) + 0j
    combined = state(c1 * a1 + c2 * a2)
    assert np.allclose(combined, c1 * state(a1) + c2 * state(a2), atol=1e-12)
    meter = WeakMeterSpec(A, a1 / np.linalg.norm(a1), b, 1.0)
    assert np.allclose(
        pointer_final_state(meter, grid, check_coverage=False).values,
        state(a1 / np.linalg.norm(a1)),
        atol=1e-14,
    )


def test_fit_recovers_exact_gaussian():
    grid = UniformGrid.from_span(-10.0, 16.0, 1301)
    state = ComplexSamples(grid, (0.7 - 0.2j) * np.exp(-((grid.points - 3.0) ** 2) / 4.0))
    alpha, residual = gaussian_shift_fit(state, 2.0)
    assert alpha == pytest.approx(3.0, abs=1e-8)
    assert residual < 1e-10


def test_fit_recovers_complex_shift():
    grid = UniformGrid.from_span(-15.0, 20.0, 1401)
    shift = 2.0 - 0.8j
    state = ComplexSamples(grid, np.exp(-((grid.points - shift) ** 2) / 9.0))
    alpha, residual = gaussian_shift_fit(state, 3.0)
    assert alpha == pytest.approx(shift, abs=1e-8)
    assert residual < 1e-10


def test_fit_rejects_flat_state():
    grid = UniformGrid.from_span(0.0, 1.0, 11)
    with pytest.raises(PhysicsError):
        gaussian_shift_fit(ComplexSamples(grid, np.ones(11)), 1.0)
    with pytest.raises(PhysicsError):
        gaussian_shift_fit(ComplexSamples(grid, np.zeros(11)), 1.0)


def dense_oracle(meter, grid):
    """Pointer state summed term by term, without the vectorised path."""
    out = np.zeros(grid.count, dtype=complex)
    for A, a, b in zip(meter.eigenvalues, meter.pre, meter.post):
        out += np.exp(-((grid.points - A) ** 2) / meter.pointer_width**2) * np.conj(b) * a
    return out


@pytest.mark.parametrize("target, width", [(5.0, 50.0), (100.0, 2000.0)])
def test_weak_regime_pointer_is_shifted_by_weak_value(target, width):
    meter = WeakMeterSpec.two_level(target, width)
    grid = pointer_grid(meter)
    state = pointer_final_state(meter, grid)
    assert relative_l2(state.values, dense_oracle(meter, grid)) < 1e-12
    alpha_fit, residual = gaussian_shift_fit(state, width)
    assert abs(alpha_fit - target) < 0.1 * target
    assert residual < 0.05


def test_strong_regime_fit_breaks_down():
    for target in (5.0, 100.0):
        meter = WeakMeterSpec.two_level(target, 0.1)
        grid = UniformGrid.from_span(-1.0, target + 1.0, 20001)
        _, residual = gaussian_shift_fit(pointer_final_state(meter, grid), 0.1)
        assert residual > 0.5


@pytest.mark.parametrize("target, width", [(5.0, 20.0), (100.0, 2000.0)])
def test_destructive_interference_inside_eigenvalue_range(target, width):
    meter = WeakMeterSpec.two_level(target, width)
    hull = pointer_final_state(meter, UniformGrid.from_span(0.0, 1.0, 101), check_coverage=False)
    incoherent_bound = np.abs(meter.weights).sum()
    assert np.abs(hull.values).max() < 0.2 * incoherent_bound
