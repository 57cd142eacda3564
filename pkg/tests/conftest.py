import pytest

from tunneltime.barrier import BarrierSpec, ParticleSpec

# Desk-scale relativistic particle: eps0 tau_c = 50, p b = 30.
DESK_REST_ENERGY = 50.0
DESK_MOMENTUM = 30.0

# Large-scale reference set: eps0 tau_c = 6000, eps_p tau_c = 6007.5, V tau_c = 15.
FIG1_REST_ENERGY = 6000.0
FIG1_ENERGY = 6007.5
FIG1_HEIGHT = 15.0


@pytest.fixture
def desk_particle():
    return ParticleSpec(DESK_REST_ENERGY, DESK_MOMENTUM)


@pytest.fixture
def fig1_particle():
    return ParticleSpec.from_energy(FIG1_REST_ENERGY, FIG1_ENERGY)


@pytest.fixture
def fig1_barrier():
    return BarrierSpec(FIG1_HEIGHT)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
    return request.config.stash.setdefault(_ACCEPTANCE_KEY, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
