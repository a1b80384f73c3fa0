import pytest

from rydoppler import atomdata, schedule
from rydoppler.constants import TWO_PI, mhz_to_rad

PAPER_C6_RAD = (TWO_PI * 50e12, TWO_PI * 68e12, TWO_PI * 56e12)
PAPER_SPACING_UM = 8.0


@pytest.fixture(scope="session")
def rb_levels():
    return atomdata.load_species("rb87")


@pytest.fixture(scope="session")
def rb_pair(rb_levels):
    return atomdata.wavevector_pair(rb_levels, atomdata.SchemeSelection("5P3/2", "6P1/2"))


@pytest.fixture(scope="session")
def paper_protocol(rb_pair):
    return schedule.solve_condition(mhz_to_rad(1.35), 2, rb_pair.k, rb_pair.kw)


@pytest.fixture(scope="session")
def paper_schedule(paper_protocol):
    return schedule.build_gate_schedule(paper_protocol)


@pytest.fixture(scope="session")
def paper_interactions():
    return atomdata.vdw_interactions(PAPER_C6_RAD, PAPER_SPACING_UM)


@pytest.fixture(scope="session")
def traditional_schedule(paper_protocol, paper_schedule, rb_pair):
    return schedule.build_traditional_schedule(
        paper_protocol.omega1, paper_schedule.t_wait, rb_pair.k
    )


@pytest.fixture(scope="session")
def traditional_interactions(paper_interactions):
    # comparator gate uses one Rydberg level with the r2r2 blockade strength
    return atomdata.InteractionSet(
        v11=paper_interactions.v22, v12=0.0, v22=0.0,
        c6_11=paper_interactions.c6_22, c6_12=0.0, c6_22=0.0,
        spacing_l=PAPER_SPACING_UM,
    )
