import pytest

from qsep.datagen import GenConfig, generate_ppt_ent
from qsep.qcore import BipartiteDims

D33 = BipartiteDims(3, 3)


@pytest.fixture(scope="session")
def small_ppt_ent():
    """A handful of witnessed PPT entangled 3x3 states (smaller bank for speed)."""
    stats = {}
    samples = generate_ppt_ent(D33, 12, seed=2024, config=GenConfig(n_validation=2000), diagnostics=stats)
    return samples, stats


# criterion number -> (passed, detail), filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
