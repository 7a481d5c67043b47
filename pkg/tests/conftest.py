import pytest

from etvlab.experiment import ExperimentConfig, run_experiment

DESK_SEED = 20240
DESK = dict(instance="rand42", max_generations=500, population_size=100, runs=20, seed=DESK_SEED)

# criterion number -> (passed, detail), filled by tests/test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def _desk(tmp_path_factory, name, **kw):
    cfg = ExperimentConfig(**(DESK | kw))
    return run_experiment(cfg, out=tmp_path_factory.mktemp(name)).results


@pytest.fixture(scope="session")
def desk_no_elitism(tmp_path_factory):
    return _desk(tmp_path_factory, "no_elitism")


@pytest.fixture(scope="session")
def desk_elitism(tmp_path_factory):
    return _desk(tmp_path_factory, "elitism", elitism=True)


@pytest.fixture(scope="session")
def desk_elitism_aging(tmp_path_factory):
    return _desk(tmp_path_factory, "elitism_m2", elitism=True, max_age=2)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: [int(p) if p.isdigit() else p for p in k.split(".")]):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")
