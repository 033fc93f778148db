"""Shared fixtures.

Every proof the prover emits during the run is replayed through the trace
checker as it is produced; failures are collected and fail the session.
"""

from __future__ import annotations

import pytest

import claimguard.logic as logic_pkg
import claimguard.logic.prover as prover_mod
import claimguard.logic.verify as verify_mod
from claimguard.extraction import ClaimGrammar
from claimguard.kgraph import parse_kb, parse_rules
from claimguard.logic.checker import TraceError, check_trace

_original_prove = prover_mod.theorem_prove


class TraceAudit:
    def __init__(self) -> None:
        self.checked = 0
        self.failures: list[str] = []

    def __call__(self, premises, goal=None, *args, **kwargs):
        premises = list(premises)
        result = _original_prove(premises, goal, *args, **kwargs)
        if result.proof is not None:
            try:
                check_trace(result.proof, premises, goal)
            except TraceError as exc:
                self.failures.append(f"goal {goal}: {exc}")
            self.checked += 1
        return result


AUDIT = TraceAudit()
# patched before any test module (or claimguard.cli) binds the name
for _mod in (prover_mod, verify_mod, logic_pkg):
    _mod.theorem_prove = AUDIT

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session", autouse=True)
def trace_audit():
    yield AUDIT
    if AUDIT.failures:
        pytest.fail(f"{len(AUDIT.failures)} proof traces failed replay: {AUDIT.failures[:5]}")


def pytest_collection_modifyitems(items):
    # acceptance checks run last so the trace audit covers the whole session
    items.sort(key=lambda item: item.module.__name__ == "test_acceptance")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
    terminalreporter.write_line(f"proof traces replayed by the checker: {AUDIT.checked}, failures: {len(AUDIT.failures)}")


FIXTURE_KB = """\
#!functional born_in
#!functional born_year
#!range born_year number
einstein\tborn_in\tulm
ulm\tlocated_in\tgermany
"""

FIXTURE_YEAR = "einstein\tborn_year\t1879\n"

COMPOSITION_RULE = "born_in(?x,?y) & located_in(?y,?z) -> born_in_country(?x,?z)"

FIXTURE_LEXICON = [
    ("was born in", "born_in"),
    ("was born in the year", "born_year"),
    ("is located in", "located_in"),
    ("is a native of", "born_in_country"),
    ("likes", "likes"),
]


@pytest.fixture
def fixture_kb():
    return parse_kb(FIXTURE_KB)


@pytest.fixture
def year_kb():
    return parse_kb(FIXTURE_KB + FIXTURE_YEAR)


@pytest.fixture
def composition_rules():
    return parse_rules(COMPOSITION_RULE)


@pytest.fixture
def grammar():
    return ClaimGrammar.from_pairs(FIXTURE_LEXICON)


@pytest.fixture
def fixture_files(tmp_path):
    kb = tmp_path / "kb.tsv"
    kb.write_text(FIXTURE_KB + FIXTURE_YEAR, encoding="utf-8")
    rules = tmp_path / "rules.txt"
    rules.write_text(COMPOSITION_RULE + "\n", encoding="utf-8")
    lex = tmp_path / "lexicon.tsv"
    lex.write_text("".join(f"{p}\t{q}\n" for p, q in FIXTURE_LEXICON), encoding="utf-8")
    return {"kb": str(kb), "rules": str(rules), "lexicon": str(lex), "dir": tmp_path}


@pytest.fixture(scope="session")
def bundled_verifier():
    from claimguard.config import PipelineConfig

    return PipelineConfig().build_verifier()
