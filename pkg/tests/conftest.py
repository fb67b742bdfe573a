import pytest

from elastprec.bench import prepare_case


@pytest.fixture(scope="session")
def case_p2p0_l2():
    return prepare_case(2, "p2p0")


@pytest.fixture(scope="session")
def case_p2p0_l3():
    return prepare_case(3, "p2p0")


@pytest.fixture(scope="session")
def case_p2p1_l2():
    return prepare_case(2, "p2p1")


@pytest.fixture(scope="session")
def case_p2p1_l3():
    return prepare_case(3, "p2p1")


@pytest.fixture(scope="session")
def cases_l23(case_p2p0_l2, case_p2p0_l3, case_p2p1_l2, case_p2p1_l3):
    return [case_p2p0_l2, case_p2p0_l3, case_p2p1_l2, case_p2p1_l3]
