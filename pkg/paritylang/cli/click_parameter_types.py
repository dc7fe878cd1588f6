"""Custom click parameter types"""
from pathlib import Path

from click import ParamType

from paritylang.formats import parse_automaton, parse_term, parse_tree
from paritylang.model import PartialRun, PartialTree, to_partial_run, to_partial_tree


def read_text(value) -> str:
    """Contents of file value

    Raises
    ------
    OSError
    """
    with open(Path(value)) as f:
        return f.read()


class AutomatonFileParameterType(ParamType):
    """Path to an automaton file. Parse errors are not usage errors and pass"""

    name = "automaton_file"

    def convert(self, value, param, ctx):
        if not value:
            return None  # is default value if parameter not given
        try:
            text = read_text(value)
        except OSError as e:
            self.fail(f"Cannot read automaton file '{value}': {e}")
        return parse_automaton(text)

    def __repr__(self):
        return "AUTOMATON_FILE"


class TreeFileParameterType(ParamType):
    """Path to a tree or run file, read as a regular tree or run graph"""

    name = "tree_file"

    def convert(self, value, param, ctx):
        if not value:
            return None
        try:
            text = read_text(value)
        except OSError as e:
            self.fail(f"Cannot read tree file '{value}': {e}")
        return parse_tree(text)

    def __repr__(self):
        return "TREE_FILE"


class PartialParameterType(ParamType):
    """A partial tree or run, either as a term like 'hd(*)' or as a path to an
    acyclic tree or run file
    """

    name = "partial"

    def __init__(self, expected=PartialTree):
        self.expected = expected

    def convert(self, value, param, ctx):
        if not value:
            return None
        if Path(value).is_file():
            graph = parse_tree(read_text(value))
            if self.expected is PartialRun:
                partial = to_partial_run(graph)
            else:
                partial = to_partial_tree(graph)
        else:
            partial = parse_term(value)
        if not isinstance(partial, self.expected):
            self.fail(
                f"Expected a partial {self.noun()}, got '{value}'. Write run nodes "
                f"as 'symbol@state' and tree nodes as 'symbol'"
            )
        return partial

    def noun(self) -> str:
        return "run" if self.expected is PartialRun else "tree"

    def __repr__(self):
        return f"PARTIAL_{self.noun().upper()}"
