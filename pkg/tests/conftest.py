"""Shared pytest configuration: one pass/fail line per acceptance criterion in the summary."""

import re

import pytest

_AC = re.compile(r"test_ac(\d+)_")


def pytest_collection_modifyitems(items):
    for item in items:
        if _AC.search(item.name):
            item.add_marker(pytest.mark.acceptance)


def pytest_terminal_summary(terminalreporter):
    lines = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            m = _AC.search(getattr(rep, "nodeid", ""))
            if not m or rep.when not in ("call", "setup"):
                continue
            k = int(m.group(1))
            ok = outcome == "passed"
            if k in lines and not ok:
                lines[k] = (False, rep.nodeid)
            elif k not in lines:
                lines[k] = (ok, rep.nodeid)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(lines):
        ok, nodeid = lines[k]
        terminalreporter.write_line(f"AC{k:<3d} {'PASS' if ok else 'FAIL'}  {nodeid.split('::')[-1].split('[')[0]}")
