import re

import pytest

from epibranch.lattice_kernel import WalkSpec, build_kernel_table


@pytest.fixture(scope="session")
def table_d2():
    return build_kernel_table(WalkSpec(2), 64)


@pytest.fixture(scope="session")
def table_d3():
    return build_kernel_table(WalkSpec(3), 40)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion at the end of a run."""
    rows = {}
    for outcome, label in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for rep in terminalreporter.stats.get(outcome, ()):
            m = re.search(
                r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", getattr(rep, "nodeid", "")
            )
            if m:
                rows[int(m.group(1))] = (m.group(2).replace("_", " "), label)
    if rows:
        terminalreporter.write_sep("=", "acceptance criteria")
        for num in sorted(rows):
            name, label = rows[num]
            terminalreporter.write_line(f"criterion {num:02d} {name}: {label}")
