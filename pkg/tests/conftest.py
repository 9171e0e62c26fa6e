import numpy as np
import pytest

from handguide.kinematics import load_chain

from pathlib import Path

FIXTURES = Path(__file__).parent / "fixtures"

# planar fixture dimensions (see fixtures/planar_two/chain.json)
PLANAR_L1 = 1.0
PLANAR_L2 = 0.7


@pytest.fixture(scope="session")
def single_joint_chain():
    return load_chain(FIXTURES / "single_joint" / "chain.json")


@pytest.fixture(scope="session")
def planar_two_chain():
    return load_chain(FIXTURES / "planar_two" / "chain.json")


@pytest.fixture(scope="session")
def kr5_chain():
    return load_chain(FIXTURES / "kr5_like" / "chain.json")


def planar_tip(theta1: float, theta2: float) -> np.ndarray:
    """Closed-form planar tip position oracle for the two-link fixture."""
    return np.array([
        PLANAR_L1 * np.cos(theta1) + PLANAR_L2 * np.cos(theta1 + theta2),
        PLANAR_L1 * np.sin(theta1) + PLANAR_L2 * np.sin(theta1 + theta2),
        0.0,
    ])


def planar_elbow_solutions(target_xy) -> list[np.ndarray]:
    """Both closed-form elbow solutions for the two-link fixture (may be empty)."""
    x, y = float(target_xy[0]), float(target_xy[1])
    c2 = (x * x + y * y - PLANAR_L1 ** 2 - PLANAR_L2 ** 2) / (2 * PLANAR_L1 * PLANAR_L2)
    if abs(c2) > 1.0:
        return []
    sols = []
    for sign in (1.0, -1.0):
        t2 = sign * np.arccos(np.clip(c2, -1.0, 1.0))
        t1 = np.arctan2(y, x) - np.arctan2(PLANAR_L2 * np.sin(t2),
                                           PLANAR_L1 + PLANAR_L2 * np.cos(t2))
        t1 = (t1 + np.pi) % (2 * np.pi) - np.pi
        sols.append(np.array([t1, t2]))
    return sols


# ---------------------------------------------------------------------------
# acceptance reporting: every acceptance test registers one line here and the
# terminal summary prints PASS/FAIL per criterion
# ---------------------------------------------------------------------------

ACCEPTANCE_RESULTS: dict[str, bool] = {}


def note_acceptance(label: str, passed: bool = True) -> None:
    ACCEPTANCE_RESULTS[label] = passed


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for label in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if ACCEPTANCE_RESULTS[label] else "FAIL"
        terminalreporter.write_line(f"{status}  {label}")
