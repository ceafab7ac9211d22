from __future__ import annotations

import pytest
from hypothesis import settings

from epibias import data_path

settings.register_profile("suite", max_examples=50, deadline=None)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def dictionary_path():
    return str(data_path("dictionaries", "core.json"))


@pytest.fixture(scope="session")
def counts_path():
    return str(data_path("counts", "pile_gold15.csv"))


@pytest.fixture(scope="session")
def prevalence_path():
    return str(data_path("prevalence", "nhis_gold15.csv"))


@pytest.fixture(scope="session")
def logits_path():
    return str(data_path("logits", "llama3_arthritis_en.jsonl"))


@pytest.fixture(scope="session")
def templates_en_path():
    return str(data_path("templates", "en.json"))


@pytest.fixture(scope="session")
def core_bundle(dictionary_path):
    from epibias.dictionary import load_dictionary

    return load_dictionary(dictionary_path)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome, status in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" in nodeid and "::" in nodeid:
                lines.append(f"{status}  {nodeid.split('::')[-1]}")
    if lines:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria:")
        for line in sorted(set(lines)):
            terminalreporter.write_line(f"  {line}")
