"""Shared pytest fixtures and methods"""
from pathlib import Path

import numpy as np
import pytest
from _pytest.fixtures import fixture
from click.testing import CliRunner

from paritylang.cli import base
from paritylang.cli.base import ParityLangContext
from paritylang.formats import parse_automaton, parse_tree
from paritylang.persistence import ParityLangSettings
from paritylang.prob import accprob, nodiv

RESOURCE_PATH = Path(__file__).parent / "fixtures"
GOLDEN_PATH = Path(__file__).parent / "golden"


def fixture_path(name) -> str:
    return str(RESOURCE_PATH / name)


def load_automaton(name):
    with open(RESOURCE_PATH / name) as f:
        return parse_automaton(f.read())


def load_tree(name):
    with open(RESOURCE_PATH / name) as f:
        return parse_tree(f.read())


def read_golden(name) -> str:
    with open(GOLDEN_PATH / name) as f:
        return f.read()


def assert_acceptance_below_nodiv(automaton, slack=1e-9):
    """Accepting runs never diverge, so AccProb <= NoDiv in every state

    Both are truncated Kleene chains. Where chains contract slowly, pass a larger
    slack to absorb the truncation error
    """
    acceptance = accprob(automaton).values
    assert np.all(acceptance >= 0.0)
    assert np.all(acceptance <= nodiv(automaton).values + slack)


@fixture
def coin():
    """Fair coin over hd/tl, priority 2"""
    return load_automaton("coin.aut")


@fixture
def coin_odd():
    """Fair coin over hd/tl, priority 1"""
    return load_automaton("coin_odd.aut")


@fixture
def halfloop():
    """Single a-loop with probability 1/2, priority 2"""
    return load_automaton("halfloop.aut")


@fixture
def m1():
    return load_automaton("m1.aut")


@fixture
def word3():
    """s0 goes to accepting s1 or rejecting s2 with probability 1/2 each"""
    return load_automaton("word3.aut")


@fixture
def a1():
    return load_automaton("a1.aut")


@fixture
def t1():
    return load_automaton("t1.aut")


@fixture
def aomega():
    return load_tree("aomega.tree")


@fixture
def abomega():
    return load_tree("abomega.tree")


class MockContextCliRunner(CliRunner):
    """a click.testing.CliRunner that always passes a mocked context to any call"""

    def __init__(self, *args, mock_context: ParityLangContext, **kwargs):

        super().__init__(*args, **kwargs)
        self.mock_context = mock_context

    def invoke(
        self,
        cli,
        args=None,
        input=None,
        env=None,
        catch_exceptions=True,
        color=False,
        **extra,
    ):
        return super().invoke(
            cli,
            args,
            input,
            env,
            catch_exceptions,
            color,
            obj=self.mock_context,
        )


@fixture
def a_runner(tmpdir):
    """A click runner that makes sure tmpdir is current dir"""
    return MockContextCliRunner(
        mock_context=ParityLangContext(current_dir=Path(tmpdir))
    )


@pytest.fixture
def in_tmpdir(tmpdir, monkeypatch):
    """Run from an empty dir so no settings file is picked up"""
    monkeypatch.chdir(tmpdir)
    return Path(tmpdir)


@fixture
def mock_settings(monkeypatch):
    """Settings loaded by CLI will be default settings.

    You can change settings by settings mock_settings.settings

    Returns
    -------
    MockSettings

    """

    class MockSettings:
        def __init__(self, settings):
            self.settings = settings
            monkeypatch.setattr(base, "load_settings", self.patch_settings())

        def patch_settings(self):
            def load_settings(folder):
                return self.settings

            return load_settings

    return MockSettings(ParityLangSettings())
