import os
from pathlib import Path

import pytest

from fairkit.cli import FIXTURE_DIR
from fairkit.dag import load_dag
from fairkit.data import load_csv
from fairkit.fairness import load_spec

# criterion number -> (passed, detail); filled in by test_acceptance.py
ACCEPTANCE = {}


def fixture_path(name) -> Path:
    return FIXTURE_DIR / name


def load_fixture(stem):
    """(dataset, dag, spec) for a bundled fixture, domains pinned by the DAG."""
    dag = load_dag(fixture_path(f"{stem}.dag"))
    d = load_csv(fixture_path(f"{stem}.csv"), schema=[(v, dag.domain(v)) for v in dag.names])
    spec_file = fixture_path(f"{stem}.spec")
    spec = load_spec(spec_file).resolve(d.columns) if spec_file.exists() else None
    return d, dag, spec


@pytest.fixture
def college1():
    return load_fixture("college1")


@pytest.fixture
def college2():
    return load_fixture("college2")


@pytest.fixture
def stratum3131():
    return load_fixture("stratum3131")


@pytest.fixture
def adult_path():
    path = os.environ.get("FAIRKIT_ADULT")
    if not path or not Path(path).exists():
        pytest.skip("set FAIRKIT_ADULT to the UCI adult.data file")
    return Path(path)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in range(1, 9):
        ok, detail = ACCEPTANCE.get(k, ("SKIP", "not run (criterion 7 needs FAIRKIT_ADULT)"))
        terminalreporter.write_line(f"criterion {k}: {ok} :: {detail}")
