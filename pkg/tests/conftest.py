"""Shared fixtures: bundled-scenario runs (computed once) and a CLI runner."""

import os
import subprocess
import sys

import pytest

from encirclesim.harness import run
from encirclesim.scenario import paper_sim, parse_scenario


@pytest.fixture(scope="session")
def paper_doc():
    return paper_sim()


@pytest.fixture(scope="session")
def paper_scenario():
    return parse_scenario(paper_sim())


@pytest.fixture(scope="session")
def paper_run(paper_scenario):
    """The bundled 400-step closed-loop run, with per-step debug records.

    Session-scoped and treated as read-only by every consumer.
    """
    result = run(paper_scenario, collect_debug=True)
    assert not result.aborted, result.abort
    return result


@pytest.fixture(scope="session")
def known_run():
    """Same geometry with the true center displacement fed to the estimator."""
    doc = paper_sim()
    doc["run"]["mode"] = "known-displacement"
    result = run(parse_scenario(doc))
    assert not result.aborted, result.abort
    return result


@pytest.fixture()
def cli():
    """Invoke the command line in a subprocess; returns CompletedProcess."""

    def invoke(*args, env=None, cwd=None):
        full_env = os.environ.copy()
        full_env.pop("ENCIRCLE_OUT_DIR", None)
        if env:
            full_env.update(env)
        return subprocess.run(
            [sys.executable, "-m", "encirclesim.cli", *[str(a) for a in args]],
            capture_output=True,
            text=True,
            env=full_env,
            cwd=cwd,
        )

    return invoke
