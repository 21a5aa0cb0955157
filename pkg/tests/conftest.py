import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import reference as ref  # noqa: E402

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict = {}


def small_suite(count: int = 10, machines: int = 3, jobs: int = 6, ratio: float = 0.9):
    """First ``count`` seeds whose random GAP has a feasible assignment (checked by brute force)."""
    out, seed = [], 0
    while len(out) < count:
        c, w, cap = ref.random_gap_arrays(seed, machines, jobs, ratio)
        if ref.gap_optimum(c, w, cap) is not None:
            out.append((seed, ref.gap_model(c, w, cap, f"small-{seed}")))
        seed += 1
    return out


@pytest.fixture(scope="session")
def t1_problem():
    return ref.t1()


@pytest.fixture(scope="session")
def small_problems():
    return small_suite()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
