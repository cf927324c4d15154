from __future__ import annotations

import numpy as np
import pytest

from phaseless.geometry import CompactBox, CountableSet, Lattice
from phaseless.grid import Grid, GridField
from phaseless.windows import WindowSpec


@pytest.fixture
def unit_box():
    return CompactBox.symmetric(1.0)


@pytest.fixture
def fine_grid(unit_box):
    return Grid.covering(unit_box, 2.0**-6)


@pytest.fixture
def gauss():
    return WindowSpec.standard_gaussian()


@pytest.fixture
def quarter_lattice():
    return CountableSet.from_lattice(Lattice.scaled_integer(0.25))


@pytest.fixture
def bump(fine_grid):
    t = fine_grid.nodes()[:, 0]
    return GridField(fine_grid, (1 + 0.3j) * np.exp(-np.pi * 1.5 * (t - 0.1) ** 2))


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def acceptance_log(request):
    """Record one PASS/FAIL line for the acceptance summary."""
    lines = request.config._acceptance_lines

    def log(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)

    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
