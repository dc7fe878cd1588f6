"""Ranked alphabets, trees, runs and the two kinds of parity tree automata.

Trees are ordered: child order is significant. A RegularTree is a finite node graph,
possibly cyclic, standing for its infinite unfolding. Lasso words are the case where
every symbol is unary. Partial trees and runs are finite and may end in the
continuation symbol ``*``. They are the keys of cylinder sets: all trees (runs) that
extend them.
"""
import itertools
from dataclasses import dataclass, replace
from enum import Enum
from functools import singledispatch
from typing import Dict, Iterator, List, Mapping, Optional, Tuple, Union

import networkx as nx
from pydantic import BaseModel, ConfigDict

from paritylang.exceptions import (
    AutomatonValidationError,
    KindMismatchError,
    ModelError,
    TreeShapeError,
)
from paritylang.logs import get_module_logger

logger = get_module_logger("model")

STAR = "*"

# probability mass sums are checked with this much room for decimal input
MASS_TOLERANCE = 1e-9


class AutomatonKind(str, Enum):
    nondet = "nondet"
    prob = "prob"


class Symbol(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    arity: int


class RankedAlphabet(BaseModel):
    model_config = ConfigDict(frozen=True)

    symbols: Tuple[Symbol, ...]

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(x.name for x in self.symbols)

    def __contains__(self, name) -> bool:
        return name in self.names

    def arity(self, name: str) -> int:
        """Arity of symbol name

        Raises
        ------
        KeyError
            If there is no such symbol
        """
        for symbol in self.symbols:
            if symbol.name == name:
                return symbol.arity
        raise KeyError(name)


class State(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    priority: int


class Transition(BaseModel):
    """One element of delta(source). probability is only used by prob automata"""

    model_config = ConfigDict(frozen=True)

    source: str
    symbol: str
    targets: Tuple[str, ...] = ()
    probability: Optional[float] = None

    def __str__(self):
        return f"{self.source} -> {self.symbol}({', '.join(self.targets)})"


class InitialWeight(BaseModel):
    model_config = ConfigDict(frozen=True)

    state: str
    weight: float = 1.0


class Automaton(BaseModel):
    """A nondeterministic or (generative) probabilistic parity tree automaton

    For nondet automata delta(x) is the set of transitions with source x and the
    initial weights are ignored, only the initial states matter. For prob automata
    delta(x) is a subdistribution: mass missing from 1 is the probability of
    divergence. The same holds for the initial distribution.
    """

    model_config = ConfigDict(frozen=True)

    name: str = "automaton"
    kind: AutomatonKind
    alphabet: RankedAlphabet
    states: Tuple[State, ...]
    transitions: Tuple[Transition, ...] = ()
    initial: Tuple[InitialWeight, ...] = ()

    @property
    def state_names(self) -> Tuple[str, ...]:
        return tuple(x.name for x in self.states)

    @property
    def priorities(self) -> Dict[str, int]:
        return {x.name: x.priority for x in self.states}

    @property
    def initial_states(self) -> frozenset:
        return frozenset(x.state for x in self.initial)

    def initial_weights(self) -> Dict[str, float]:
        weights = {x: 0.0 for x in self.state_names}
        for entry in self.initial:
            weights[entry.state] = weights.get(entry.state, 0.0) + entry.weight
        return weights

    def transition_map(self) -> Dict[str, List[Transition]]:
        """delta as a dict. Every state is present, possibly with no transitions"""
        delta: Dict[str, List[Transition]] = {x: [] for x in self.state_names}
        for transition in self.transitions:
            delta.setdefault(transition.source, []).append(transition)
        return delta

    def transitions_from(self, state: str) -> List[Transition]:
        return [x for x in self.transitions if x.source == state]

    def probability(self, source: str, symbol: str, targets: Tuple[str, ...]) -> float:
        """delta(source)(symbol, targets). Zero for transitions that are not there"""
        return sum(
            x.probability or 0.0
            for x in self.transitions
            if x.source == source and x.symbol == symbol and x.targets == targets
        )

    def priority_classes(self) -> List[Tuple[str, ...]]:
        """States grouped by compressed priority. Entry i holds priority i+1"""
        compressed = compress_priorities(self.priorities)
        count = max(compressed.values(), default=0)
        return [
            tuple(x for x in self.state_names if compressed[x] == priority)
            for priority in range(1, count + 1)
        ]


class Violation(BaseModel):
    """A broken automaton invariant"""

    model_config = ConfigDict(frozen=True)

    code: str
    location: str
    message: str

    def __str__(self):
        return f"{self.code} at {self.location}: {self.message}"


def compress_priorities(priorities: Mapping[str, int]) -> Dict[str, int]:
    """Map priorities onto a contiguous range preserving parity and order

    Runs of neighbouring priorities with the same parity merge into one. The result
    starts at 1 if the lowest priority is odd, at 2 if it is even.
    """
    mapping: Dict[int, int] = {}
    current = 0
    for priority in sorted(set(priorities.values())):
        if current == 0:
            current = 1 if priority % 2 else 2
        elif (current - priority) % 2:
            current += 1
        mapping[priority] = current
    return {state: mapping[p] for state, p in priorities.items()}


def _validate_alphabet(automaton: Automaton) -> Iterator[Violation]:
    if not automaton.alphabet.symbols:
        yield Violation(
            code="empty-alphabet", location="alphabet", message="no symbols declared"
        )
    seen = set()
    for symbol in automaton.alphabet.symbols:
        if symbol.name in seen:
            yield Violation(
                code="duplicate-symbol",
                location=f"symbol {symbol.name}",
                message="declared more than once",
            )
        seen.add(symbol.name)
        if symbol.arity < 0:
            yield Violation(
                code="negative-arity",
                location=f"symbol {symbol.name}",
                message=f"arity {symbol.arity}",
            )


def _validate_states(automaton: Automaton) -> Iterator[Violation]:
    seen = set()
    for state in automaton.states:
        if state.name in seen:
            yield Violation(
                code="duplicate-state",
                location=f"state {state.name}",
                message="declared more than once",
            )
        seen.add(state.name)
        if state.priority < 1:
            yield Violation(
                code="priority-below-one",
                location=f"state {state.name}",
                message=f"priority {state.priority}",
            )


def _validate_transition(
    automaton: Automaton, transition: Transition
) -> Iterator[Violation]:
    location = f"transition {transition}"
    states = set(automaton.state_names)
    if transition.source not in states:
        yield Violation(
            code="unknown-state", location=location, message=transition.source
        )
    for target in transition.targets:
        if target not in states:
            yield Violation(code="unknown-state", location=location, message=target)
    try:
        arity = automaton.alphabet.arity(transition.symbol)
        if arity != len(transition.targets):
            yield Violation(
                code="arity-mismatch",
                location=location,
                message=f"{transition.symbol} has arity {arity}, "
                f"got {len(transition.targets)} targets",
            )
    except KeyError:
        yield Violation(
            code="unknown-symbol", location=location, message=transition.symbol
        )
    if automaton.kind == AutomatonKind.prob:
        if transition.probability is None:
            yield Violation(
                code="missing-probability", location=location, message="no probability"
            )
        elif transition.probability < 0:
            yield Violation(
                code="negative-probability",
                location=location,
                message=str(transition.probability),
            )


def _validate_masses(automaton: Automaton) -> Iterator[Violation]:
    masses: Dict[str, float] = {}
    for transition in automaton.transitions:
        masses[transition.source] = masses.get(transition.source, 0.0) + (
            transition.probability or 0.0
        )
    for state, mass in masses.items():
        if mass > 1 + MASS_TOLERANCE:
            yield Violation(
                code="mass-exceeds-one",
                location=f"state {state}",
                message=f"transition mass {mass:.12g}",
            )
    total = sum(x.weight for x in automaton.initial)
    if total > 1 + MASS_TOLERANCE:
        yield Violation(
            code="initial-mass-exceeds-one",
            location="initial",
            message=f"initial mass {total:.12g}",
        )
    for entry in automaton.initial:
        if entry.weight < 0:
            yield Violation(
                code="negative-probability",
                location=f"initial {entry.state}",
                message=str(entry.weight),
            )


def validate(automaton: Automaton) -> List[Violation]:
    """Check all automaton invariants

    Returns
    -------
    List[Violation]
        Empty if the automaton is well-formed
    """
    violations = list(_validate_alphabet(automaton))
    violations.extend(_validate_states(automaton))

    seen = set()
    for transition in automaton.transitions:
        violations.extend(_validate_transition(automaton, transition))
        key = (transition.source, transition.symbol, transition.targets)
        if key in seen:
            violations.append(
                Violation(
                    code="duplicate-transition",
                    location=f"transition {transition}",
                    message="declared more than once",
                )
            )
        seen.add(key)

    states = set(automaton.state_names)
    for entry in automaton.initial:
        if entry.state not in states:
            violations.append(
                Violation(
                    code="unknown-state",
                    location=f"initial {entry.state}",
                    message=entry.state,
                )
            )
    if automaton.kind == AutomatonKind.prob:
        violations.extend(_validate_masses(automaton))
    return violations


@dataclass(frozen=True)
class GraphNode:
    symbol: str
    children: Tuple[str, ...] = ()
    state: Optional[str] = None


@dataclass(frozen=True)
class NodeGraph:
    """Finite graph of labelled nodes, read as the tree it unfolds into"""

    nodes: Mapping[str, GraphNode]
    root: str
    name: str = ""

    def reachable(self) -> List[str]:
        """Node ids reachable from root, in breadth-first order"""
        order = [self.root]
        seen = {self.root}
        for node_id in order:
            for child in self.nodes[node_id].children:
                if child not in seen:
                    seen.add(child)
                    order.append(child)
        return order

    @property
    def is_partial(self) -> bool:
        return any(x.symbol == STAR for x in self.nodes.values())

    def problems(self, alphabet: Optional[RankedAlphabet] = None) -> List[str]:
        """Structural problems: dangling ids, arity mismatches, bad star nodes"""
        found = []
        if self.root not in self.nodes:
            found.append(f"root '{self.root}' is not a node")
        for node_id, node in self.nodes.items():
            for child in node.children:
                if child not in self.nodes:
                    found.append(f"node '{node_id}' has unknown child '{child}'")
            if node.symbol == STAR:
                if node.children:
                    found.append(f"node '{node_id}': '*' cannot have children")
            elif alphabet is not None:
                if node.symbol not in alphabet:
                    found.append(f"node '{node_id}': unknown symbol '{node.symbol}'")
                elif alphabet.arity(node.symbol) != len(node.children):
                    found.append(
                        f"node '{node_id}': {node.symbol} has arity "
                        f"{alphabet.arity(node.symbol)}, got {len(node.children)}"
                        f" children"
                    )
        return found


class RegularTree(NodeGraph):
    pass


class RunGraph(NodeGraph):
    """Like RegularTree, but every node also carries a state"""


@dataclass(frozen=True)
class PartialTree:
    """Finite tree whose leaves may be the continuation symbol '*'"""

    symbol: str
    children: Tuple["PartialTree", ...] = ()

    @property
    def is_star(self) -> bool:
        return self.symbol == STAR

    def depth(self) -> int:
        return 1 + max((x.depth() for x in self.children), default=-1)

    def is_prefix_of(self, other: "PartialTree") -> bool:
        """True if other is obtained by replacing some '*' leaves of self"""
        if self.is_star:
            return True
        return (
            self.symbol == other.symbol
            and len(self.children) == len(other.children)
            and all(a.is_prefix_of(b) for a, b in zip(self.children, other.children))
        )

    def __str__(self):
        if self.is_star:
            return STAR
        return f"{self.symbol}({','.join(str(x) for x in self.children)})"


@dataclass(frozen=True)
class PartialRun:
    """Finite run whose leaves may be '*' (still carrying a state)"""

    symbol: str
    state: str
    children: Tuple["PartialRun", ...] = ()

    @property
    def is_star(self) -> bool:
        return self.symbol == STAR

    def star_leaves(self) -> List["PartialRun"]:
        """All '*' leaves, left to right"""
        if self.is_star:
            return [self]
        return [leaf for x in self.children for leaf in x.star_leaves()]

    def __str__(self):
        if self.is_star:
            return f"{STAR}@{self.state}"
        children = ",".join(str(x) for x in self.children)
        return f"{self.symbol}@{self.state}({children})"


def unfold(tree: NodeGraph, depth: int) -> PartialTree:
    """The first depth levels of the unfolding of tree, cut off with '*'"""

    def build(node_id: str, remaining: int) -> PartialTree:
        if remaining == 0:
            return PartialTree(STAR)
        node = tree.nodes[node_id]
        return PartialTree(
            node.symbol, tuple(build(x, remaining - 1) for x in node.children)
        )

    return build(tree.root, depth)


@singledispatch
def delst(run) -> Union[RegularTree, PartialTree]:
    """Remove all state labels from a run"""
    raise TypeError(f"Cannot remove states from {type(run)}")


@delst.register
def _(run: RunGraph) -> RegularTree:
    nodes = {key: replace(node, state=None) for key, node in run.nodes.items()}
    return RegularTree(nodes=nodes, root=run.root, name=run.name)


@delst.register
def _(run: PartialRun) -> PartialTree:
    return PartialTree(run.symbol, tuple(delst(x) for x in run.children))


def all_cycles_even(graph: nx.DiGraph, priority: Mapping[str, int]) -> bool:
    """Every cycle in graph has an even maximum priority

    Per SCC: an odd top priority means a losing cycle through that node. An even top
    priority wins every cycle through it, so those nodes are removed and the rest of
    the SCC is checked again.
    """
    for component in nx.strongly_connected_components(graph):
        subgraph = graph.subgraph(component)
        if len(component) == 1:
            node = next(iter(component))
            if not subgraph.has_edge(node, node):
                continue
        top = max(priority[x] for x in component)
        if top % 2:
            return False
        rest = [x for x in component if priority[x] != top]
        if rest and not all_cycles_even(subgraph.subgraph(rest), priority):
            return False
    return True


def run_graph_priorities(run: RunGraph, priorities: Mapping[str, int]) -> nx.DiGraph:
    """Reachable part of run as a networkx graph, each node with its priority"""
    graph = nx.DiGraph()
    for node_id in run.reachable():
        node = run.nodes[node_id]
        if node.symbol == STAR:
            raise TreeShapeError(f"Run node '{node_id}' is '*'; need a total run")
        try:
            graph.add_node(node_id, priority=priorities[node.state])
        except KeyError as e:
            raise ModelError(f"Run node '{node_id}' has unknown state {e}") from e
        for child in node.children:
            graph.add_edge(node_id, child)
    return graph


def universal_parity_check(run: RunGraph, priorities: Mapping[str, int]) -> bool:
    """True if every branch of the unfolding of run meets the parity condition

    Finite branches end in nullary symbols and are always accepted. Infinite
    branches end up in cycles of the graph, so this holds iff every cycle reachable
    from the root has an even maximal priority.
    """
    graph = run_graph_priorities(run, priorities)
    return all_cycles_even(graph, nx.get_node_attributes(graph, "priority"))


def validate_run(run: RunGraph, automaton: Automaton) -> List[Violation]:
    """Check that every run node is labelled by a transition of the automaton

    For prob automata any transition is allowed (impossible ones just have
    probability zero), only states and arities are checked.
    """
    violations = [
        Violation(code="malformed-run", location=f"run {run.name}", message=x)
        for x in run.problems(automaton.alphabet)
    ]
    if violations:
        return violations
    delta = automaton.transition_map()
    for node_id in run.reachable():
        node = run.nodes[node_id]
        if node.symbol == STAR:
            continue
        if node.state not in delta:
            violations.append(
                Violation(
                    code="unknown-state", location=f"node {node_id}", message=node.state
                )
            )
            continue
        targets = tuple(run.nodes[x].state for x in node.children)
        if automaton.kind == AutomatonKind.nondet and not any(
            x.symbol == node.symbol and x.targets == targets for x in delta[node.state]
        ):
            violations.append(
                Violation(
                    code="not-a-transition",
                    location=f"node {node_id}",
                    message=f"{node.symbol}({', '.join(map(str, targets))}) is not in "
                    f"delta({node.state})",
                )
            )
    return violations


def complete_partition(alphabet: RankedAlphabet, depth: int) -> List[PartialTree]:
    """All partial trees with every '*' leaf at exactly depth

    Other leaves are nullary symbols. The cylinders of these trees partition the set
    of all trees over alphabet.
    """
    if depth == 0:
        return [PartialTree(STAR)]
    smaller = complete_partition(alphabet, depth - 1)
    cells = []
    for symbol in alphabet.symbols:
        for children in itertools.product(smaller, repeat=symbol.arity):
            cells.append(PartialTree(symbol.name, tuple(children)))
    return cells


def refine(run: PartialRun, automaton: Automaton, leaf_index: int) -> List[PartialRun]:
    """Every way to extend '*' leaf number leaf_index of run by one step

    Each symbol with each tuple of target states, the targets becoming new '*'
    leaves. The cylinders of the results partition the cylinder of run.
    """
    leaves = run.star_leaves()
    if not 0 <= leaf_index < len(leaves):
        raise IndexError(f"run has {len(leaves)} '*' leaves, no leaf {leaf_index}")

    def rebuild(node: PartialRun, replacement: PartialRun) -> PartialRun:
        if node.is_star:
            return replacement if next(counter) == leaf_index else node
        return PartialRun(
            node.symbol,
            node.state,
            tuple(rebuild(x, replacement) for x in node.children),
        )

    state = leaves[leaf_index].state
    refinements = []
    for symbol in automaton.alphabet.symbols:
        for targets in itertools.product(automaton.state_names, repeat=symbol.arity):
            step = PartialRun(
                symbol.name, state, tuple(PartialRun(STAR, x) for x in targets)
            )
            counter = itertools.count()
            refinements.append(rebuild(run, step))
    return refinements


def _walk_acyclic(graph: NodeGraph, build):
    """Apply build bottom-up from root, refusing cycles"""

    def visit(node_id: str, path: frozenset):
        if node_id in path:
            raise TreeShapeError(
                f"'{graph.name}' is cyclic at node '{node_id}'; a finite partial "
                f"tree or run is needed"
            )
        node = graph.nodes[node_id]
        children = tuple(visit(x, path | {node_id}) for x in node.children)
        return build(node_id, node, children)

    return visit(graph.root, frozenset())


def to_partial_tree(graph: NodeGraph) -> PartialTree:
    """Read an acyclic tree graph as a PartialTree

    Raises
    ------
    TreeShapeError
        If graph has a cycle
    """
    return _walk_acyclic(
        graph, lambda node_id, node, children: PartialTree(node.symbol, children)
    )


def to_partial_run(graph: NodeGraph) -> PartialRun:
    """Read an acyclic run graph as a PartialRun. Every node needs a state"""

    def build(node_id, node, children):
        if node.state is None:
            raise TreeShapeError(f"Run node '{node_id}' has no state")
        return PartialRun(node.symbol, node.state, children)

    return _walk_acyclic(graph, build)


def require_valid(automaton: Automaton, kind: Optional[AutomatonKind] = None):
    """Raise if automaton is of the wrong kind or breaks an invariant

    Raises
    ------
    KindMismatchError
    AutomatonValidationError
    """
    if kind is not None and automaton.kind != kind:
        raise KindMismatchError(
            f"'{automaton.name}' is a {automaton.kind.value} automaton, "
            f"expected {kind.value}"
        )
    violations = validate(automaton)
    if violations:
        raise AutomatonValidationError(
            f"'{automaton.name}' is not a valid automaton: "
            + "; ".join(str(x) for x in violations),
            violations=violations,
        )
