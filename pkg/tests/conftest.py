import numpy as np
import pytest

from slqvi import SlqModel, benchmark, solve_sare_oracle

# reference values for the two-state benchmark
P_BAR = np.array([[0.2722091, -0.0427624], [-0.0427624, 0.2505643]])
K_BAR = np.array([[-0.0134984, 0.0298522]])
R1_BAR = np.array([[0.0008297, -0.0004970], [-0.0004970, 0.0012700]])
R2_BAR = np.array([[-0.0008292, -0.0005174], [-0.0005174, 0.0021906]])


def scalar_model(A=-1.0, B=0.0, C=0.0, D=0.0, Q=1.0, R=1.0, x0=1.0):
    return SlqModel(A=[[A]], B=[[B]], C=[[C]], D=[[D]], Q=[[Q]], R=[[R]], x0=[x0])


@pytest.fixture(scope="session")
def bench():
    return benchmark()


@pytest.fixture(scope="session")
def p_star(bench):
    return solve_sare_oracle(bench, np.eye(2))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_psd(rng, n, scale=1.0):
    G = rng.standard_normal((n, n))
    return scale * G @ G.T / n


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
