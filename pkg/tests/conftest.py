"""Shared test plumbing: acceptance-criterion result collection.

Acceptance tests call record_criterion() before asserting; the terminal
summary then shows one PASS/FAIL line per criterion regardless of output
capture.
"""

_results = {}


def record_criterion(num: int, ok: bool, detail: str) -> None:
    entry = _results.setdefault(num, {"ok": True, "details": []})
    entry["ok"] = entry["ok"] and ok
    entry["details"].append(f"{'ok' if ok else 'FAIL'}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_results):
        entry = _results[num]
        status = "PASS" if entry["ok"] else "FAIL"
        terminalreporter.write_line(
            f"CRITERION {num}: {status} [" + " | ".join(entry["details"]) + "]"
        )
