from __future__ import annotations

import json
import re
from pathlib import Path

import pytest

from ilmlab.codes import Code, StackedCode, Variant, canonicalize, expand_stacked, uniform_large, uniform_small

DATA = Path(__file__).parent / "data"


def table_code(token: str, N: int) -> Code:
    """Canonical code for a table token: A_A, A_a, A+[n,m], A-[n,m] or an explicit code."""
    if token == "A_A":
        return canonicalize(uniform_large(N))
    if token == "A_a":
        return canonicalize(uniform_small(N))
    m = re.fullmatch(r"A([+-])\[(\d+),(\d+)\]", token)
    if m:
        n, k = int(m.group(2)), int(m.group(3))
        assert n + k == N, (token, N)
        return canonicalize(expand_stacked(StackedCode(n, k, Variant(m.group(1)))))
    c = Code.parse(token)
    assert len(c) == N, (token, N)
    return canonicalize(c)


@pytest.fixture(scope="session")
def stable_tables():
    return json.loads((DATA / "stable_tables.json").read_text())


ACCEPTANCE: list[str] = []


def record(number, ok: bool, detail: str) -> bool:
    """Log one acceptance line (shown in the terminal summary) and return ``ok``."""
    label = f"criterion {number}" if isinstance(number, int) else str(number)
    line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
