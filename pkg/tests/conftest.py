import numpy as np
import pytest

from fsll.model import ModelConfig, ParameterStore

# one "PASS/FAIL criterion" line per acceptance test, printed after the
# normal pytest output so they are visible without -s
acceptance_lines: list[str] = []


def record_criterion(number: int, name: str, ok: bool, detail: str = "") -> str:
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {name}"
    if detail:
        line += f"  [{detail}]"
    acceptance_lines.append(line)
    return line


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not acceptance_lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(acceptance_lines):
        terminalreporter.write_line(line)


@pytest.fixture
def tiny_store():
    """4 -> 5 -> 3 extractor with a 3-way classifier, seed 0."""
    cfg = ModelConfig(input_dim=4, hidden_dims=(5,), feature_dim=3, base_classes=3)
    return ParameterStore.initialize(cfg, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
