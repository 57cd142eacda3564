"""Traversal-time analysis of relativistic tunnelling through a rectangular barrier.

Internal units throughout: hbar = c = 1 and lengths in units of the barrier
width b, so the light-crossing time tau_c = b/c equals 1 unless a different
width is requested explicitly.
"""

from tunneltime.errors import (
    AliasingError,
    BoundaryPeakError,
    NonFiniteError,
    PhysicsError,
)
from tunneltime.numerics import (
    ComplexSamples,
    UniformGrid,
    integrate_samples,
    locate_peak,
    windowed_fourier,
)
from tunneltime.barrier import (
    BarrierSpec,
    ParticleSpec,
    reflection_exact,
    transmission_exact,
    transmission_semiclassical,
    wavevector_inside,
)
from tunneltime.traversal import (
    TraversalAmplitude,
    WWindow,
    complex_mean_time,
    eta_numeric,
    eta_semiclassical,
    saddle_time,
)
from tunneltime.wavepacket import (
    ComplexField,
    WavepacketSpec,
    classical_crossing_time,
    free_pulse,
    momentum_spectrum,
    pulse_advancement,
    semiclassical_pulse,
    transmitted_pulse_spectral,
)
from tunneltime.weakmeas import (
    WeakMeterSpec,
    gaussian_shift_fit,
    pointer_final_state,
    weak_value,
)

__version__ = "0.1.0"
