"""Every acceptance criterion, each run at its stated tolerance and time budget.

Each test prints a ``PASS``/``FAIL`` line; the lines are also collected into
the terminal summary. Run directly (``python tests/test_acceptance.py``) to
get just the lines.
"""
import pytest

from flemingviot.montecarlo import DEFAULT_SEED
from flemingviot.verification import N_CRITERIA, check_registry, registry, run_check

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script from elsewhere
    ACCEPTANCE_LINES = []

CHECKS = sorted(registry(), key=lambda c: (c.criterion is None, c.criterion or 0))


def _line(entry):
    label = "--" if entry["criterion"] is None else f"{entry['criterion']:02d}"
    verdict = "PASS" if entry["passed"] else "FAIL"
    text = (f"{verdict} {label} {entry['id']}: measured={entry['measured']:.6g} "
            f"tol={entry['tolerance']:.3g} time={entry['runtime_s']:.2f}s/{entry['budget_s']:g}s")
    if "error" in entry:
        text += f" error={entry['error']}"
    return text


@pytest.mark.parametrize("check", CHECKS, ids=[c.id for c in CHECKS])
def test_criterion(check):
    entry = run_check(check, DEFAULT_SEED)
    line = _line(entry)
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert entry["passed"], line


def test_registry_covers_every_criterion_once():
    check_registry()
    numbered = sorted(c.criterion for c in registry() if c.criterion is not None)
    assert numbered == list(range(1, N_CRITERIA + 1))


def test_registry_rejects_gaps():
    with pytest.raises(RuntimeError):
        check_registry(registry()[1:])
    with pytest.raises(RuntimeError):
        check_registry(registry() + registry()[:1])


if __name__ == "__main__":
    failed = 0
    for check in CHECKS:
        entry = run_check(check, DEFAULT_SEED)
        print(_line(entry), flush=True)
        failed += not entry["passed"]
    raise SystemExit(1 if failed else 0)
