"""Reading and writing automaton files, tree/run files and partial tree terms

Automaton file (line based, '#' starts a comment)::

    automaton coin
    kind prob
    symbol hd 1
    symbol tl 1
    state x 2
    init x 1.0
    trans x hd ( x ) 0.5
    trans x tl ( x ) 0.5

Tree or run file::

    run r1
    node n1 a@x1 ( n2 )
    node n2 b@x2 ( n1 )
    root n1

'*' may be used as symbol on leaves to describe partial trees and runs.
"""
import math
import re
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple, Union

from paritylang.exceptions import ParseError
from paritylang.logs import get_module_logger
from paritylang.model import (
    STAR,
    Automaton,
    AutomatonKind,
    GraphNode,
    InitialWeight,
    NodeGraph,
    PartialRun,
    PartialTree,
    RankedAlphabet,
    RegularTree,
    RunGraph,
    State,
    Symbol,
    Transition,
)

logger = get_module_logger("formats")

_TRANS = re.compile(
    r"^(?P<source>\S+)\s+(?P<symbol>[^\s(]+)\s*"
    r"(?:\((?P<targets>[^)]*)\))?\s*(?P<probability>\S+)?$"
)
_NODE = re.compile(
    r"^(?P<id>\S+)\s+(?P<label>[^\s(]+)\s*(?:\((?P<children>[^)]*)\))?$"
)
_TERM_TOKEN = re.compile(r"\s*([(),]|[^\s(),]+)")


@dataclass(frozen=True)
class _Line:
    number: int
    keyword: str
    rest: str


def _lines(text: str) -> Iterator[_Line]:
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if not content:
            continue
        keyword, _, rest = content.partition(" ")
        yield _Line(number=number, keyword=keyword, rest=rest.strip())


def _number(token: str, line: int) -> float:
    try:
        value = float(token)
    except ValueError as e:
        raise ParseError(f"'{token}' is not a number", line=line) from e
    if not math.isfinite(value):
        raise ParseError(f"'{token}' is not a finite number", line=line)
    return value


def _integer(token: str, line: int) -> int:
    try:
        return int(token)
    except ValueError as e:
        raise ParseError(f"'{token}' is not an integer", line=line) from e


def _id_list(text: Optional[str]) -> Tuple[str, ...]:
    if not text:
        return ()
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _format_number(value: float) -> str:
    return f"{value:.12g}"


class _AutomatonReader:
    """Collects declarations first, then checks references between them"""

    def __init__(self):
        self.name: Optional[str] = None
        self.kind: Optional[AutomatonKind] = None
        self.symbols: Dict[str, Symbol] = {}
        self.states: Dict[str, State] = {}
        self.inits: List[Tuple[_Line, List[str]]] = []
        self.transitions: List[Tuple[_Line, re.Match]] = []

    def read(self, line: _Line):
        tokens = line.rest.split()
        if line.keyword == "automaton":
            self.read_header(line, tokens)
        elif line.keyword in ("symbol", "state"):
            self.read_declaration(line, tokens)
        elif line.keyword == "init":
            self.inits.append((line, tokens))
        elif line.keyword == "trans":
            match = _TRANS.match(line.rest)
            if not match:
                raise ParseError(f"cannot read transition '{line.rest}'", line.number)
            self.transitions.append((line, match))
        elif line.keyword == "kind":
            if self.kind is not None:
                raise ParseError("kind declared twice", line.number)
            try:
                self.kind = AutomatonKind(line.rest)
            except ValueError as e:
                raise ParseError(
                    f"kind must be nondet or prob, got '{line.rest}'", line.number
                ) from e
        else:
            raise ParseError(f"unknown keyword '{line.keyword}'", line.number)

    def read_header(self, line: _Line, tokens: List[str]):
        if self.name is not None:
            raise ParseError("automaton declared twice", line.number)
        if len(tokens) != 1:
            raise ParseError("expected 'automaton <name>'", line.number)
        self.name = tokens[0]

    def read_declaration(self, line: _Line, tokens: List[str]):
        if len(tokens) != 2:
            raise ParseError(f"expected '{line.keyword} <name> <int>'", line.number)
        name, value = tokens[0], _integer(tokens[1], line.number)
        table = self.symbols if line.keyword == "symbol" else self.states
        if name in table:
            raise ParseError(f"{line.keyword} '{name}' declared twice", line.number)
        if line.keyword == "symbol":
            if value < 0:
                raise ParseError(f"negative arity for '{name}'", line.number)
            self.symbols[name] = Symbol(name=name, arity=value)
        else:
            self.states[name] = State(name=name, priority=value)

    def probability(self, token: Optional[str], line: _Line) -> Optional[float]:
        if self.kind == AutomatonKind.prob:
            if token is None:
                raise ParseError("probability missing", line.number)
            return _number(token, line.number)
        if token is not None:
            raise ParseError(
                f"unexpected '{token}': nondet automata have no probabilities",
                line.number,
            )
        return None

    def check_state(self, name: str, line: _Line):
        if name not in self.states:
            raise ParseError(f"unknown state '{name}'", line.number)

    def build_initial(self) -> List[InitialWeight]:
        initial = []
        seen = set()
        for line, tokens in self.inits:
            if len(tokens) not in (1, 2):
                raise ParseError("expected 'init <state> [<probability>]'", line.number)
            self.check_state(tokens[0], line)
            if tokens[0] in seen:
                raise ParseError(f"init '{tokens[0]}' declared twice", line.number)
            seen.add(tokens[0])
            probability = self.probability(
                tokens[1] if len(tokens) == 2 else None, line
            )
            weight = 1.0 if probability is None else probability
            initial.append(InitialWeight(state=tokens[0], weight=weight))
        return initial

    def build_transitions(self) -> List[Transition]:
        transitions = []
        seen = set()
        for line, match in self.transitions:
            source, symbol = match["source"], match["symbol"]
            targets = _id_list(match["targets"])
            self.check_state(source, line)
            for target in targets:
                self.check_state(target, line)
            if symbol not in self.symbols:
                raise ParseError(f"unknown symbol '{symbol}'", line.number)
            arity = self.symbols[symbol].arity
            if arity != len(targets):
                raise ParseError(
                    f"arity mismatch: {symbol} has arity {arity}, got "
                    f"{len(targets)} targets",
                    line.number,
                )
            key = (source, symbol, targets)
            if key in seen:
                raise ParseError(f"transition declared twice: {line.rest}", line.number)
            seen.add(key)
            transitions.append(
                Transition(
                    source=source,
                    symbol=symbol,
                    targets=targets,
                    probability=self.probability(match["probability"], line),
                )
            )
        return transitions

    def build(self) -> Automaton:
        if self.name is None:
            raise ParseError("missing 'automaton <name>' line")
        if self.kind is None:
            raise ParseError("missing 'kind nondet|prob' line")
        return Automaton(
            name=self.name,
            kind=self.kind,
            alphabet=RankedAlphabet(symbols=tuple(self.symbols.values())),
            states=tuple(self.states.values()),
            transitions=tuple(self.build_transitions()),
            initial=tuple(self.build_initial()),
        )


def parse_automaton(text: str) -> Automaton:
    """Read an automaton file

    Raises
    ------
    ParseError
        On syntax errors, unknown symbols or states, arity mismatches and duplicate
        declarations. The message names the line.
    """
    reader = _AutomatonReader()
    for line in _lines(text):
        reader.read(line)
    automaton = reader.build()
    logger.debug(
        f"Read {automaton.kind.value} automaton '{automaton.name}' with "
        f"{len(automaton.states)} states and {len(automaton.transitions)} transitions"
    )
    return automaton


def print_automaton(automaton: Automaton) -> str:
    """Automaton in file format. parse_automaton() reads it back unchanged"""
    is_prob = automaton.kind == AutomatonKind.prob
    lines = [f"automaton {automaton.name}", f"kind {automaton.kind.value}"]
    lines += [f"symbol {x.name} {x.arity}" for x in automaton.alphabet.symbols]
    lines += [f"state {x.name} {x.priority}" for x in automaton.states]
    for entry in automaton.initial:
        weight = f" {_format_number(entry.weight)}" if is_prob else ""
        lines.append(f"init {entry.state}{weight}")
    for transition in automaton.transitions:
        targets = " , ".join(transition.targets)
        line = f"trans {transition.source} {transition.symbol} ( {targets} )"
        if is_prob:
            line += f" {_format_number(transition.probability or 0.0)}"
        lines.append(line)
    return "\n".join(lines) + "\n"


def parse_tree(text: str) -> NodeGraph:
    """Read a tree or run file

    Returns
    -------
    RegularTree or RunGraph
        Depending on the header line

    Raises
    ------
    ParseError
    """
    header: Optional[_Line] = None
    nodes: Dict[str, GraphNode] = {}
    root: Optional[str] = None
    for line in _lines(text):
        if line.keyword in ("tree", "run"):
            if header is not None:
                raise ParseError("header declared twice", line.number)
            header = line
        elif line.keyword == "root":
            if root is not None:
                raise ParseError("root declared twice", line.number)
            root = line.rest
        elif line.keyword == "node":
            if header is None:
                raise ParseError("'tree' or 'run' header must come first", line.number)
            node_id, node = _read_node(line, is_run=header.keyword == "run")
            if node_id in nodes:
                raise ParseError(f"node '{node_id}' declared twice", line.number)
            nodes[node_id] = node
        else:
            raise ParseError(f"unknown keyword '{line.keyword}'", line.number)

    if header is None:
        raise ParseError("missing 'tree <name>' or 'run <name>' line")
    if root is None:
        raise ParseError("missing 'root <id>' line")
    graph_type = RunGraph if header.keyword == "run" else RegularTree
    graph = graph_type(nodes=nodes, root=root, name=header.rest)
    problems = graph.problems()
    if problems:
        raise ParseError("; ".join(problems))
    return graph


def _read_node(line: _Line, is_run: bool) -> Tuple[str, GraphNode]:
    match = _NODE.match(line.rest)
    if not match:
        raise ParseError(f"cannot read node '{line.rest}'", line.number)
    symbol, _, state = match["label"].partition("@")
    if is_run and not state:
        raise ParseError("run node needs '<symbol>@<state>'", line.number)
    if not is_run and state:
        raise ParseError("tree nodes carry no state", line.number)
    node = GraphNode(
        symbol=symbol, children=_id_list(match["children"]), state=state or None
    )
    return match["id"], node


def print_tree(graph: NodeGraph) -> str:
    """Tree or run graph in file format"""
    header = "run" if isinstance(graph, RunGraph) else "tree"
    lines = [f"{header} {graph.name}".rstrip()]
    for node_id, node in graph.nodes.items():
        label = node.symbol if node.state is None else f"{node.symbol}@{node.state}"
        lines.append(f"node {node_id} {label} ( {' , '.join(node.children)} )")
    lines.append(f"root {graph.root}")
    return "\n".join(lines) + "\n"


class _TermReader:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _TERM_TOKEN.findall(text)
        self.position = 0

    def peek(self) -> Optional[str]:
        return self.tokens[self.position] if self.position < len(self.tokens) else None

    def take(self) -> str:
        token = self.peek()
        if token is None:
            raise ParseError(f"unexpected end of term '{self.text}'")
        self.position += 1
        return token

    def term(self):
        label = self.take()
        if label in ("(", ")", ","):
            raise ParseError(f"unexpected '{label}' in term '{self.text}'")
        children = []
        if self.peek() == "(":
            self.take()
            if self.peek() != ")":
                children.append(self.term())
                while self.peek() == ",":
                    self.take()
                    children.append(self.term())
            if self.take() != ")":
                raise ParseError(f"expected ')' in term '{self.text}'")
        symbol, at, state = label.partition("@")
        if symbol == STAR and children:
            raise ParseError(f"'*' cannot have children in term '{self.text}'")
        if at:
            return PartialRun(symbol, state, tuple(children))
        return PartialTree(symbol, tuple(children))


def parse_term(text: str) -> Union[PartialTree, PartialRun]:
    """Read a term like 'hd(tl(*))' or 'hd@x(*@x)'

    Nullary symbols may be written 'c' or 'c()'.
    """
    reader = _TermReader(text)
    result = reader.term()
    if reader.peek() is not None:
        raise ParseError(f"trailing input in term '{text}'")
    if not _uniform(result, type(result)):
        raise ParseError(f"term '{text}' mixes tree and run nodes")
    return result


def _uniform(term, expected) -> bool:
    return isinstance(term, expected) and all(
        _uniform(x, expected) for x in term.children
    )
