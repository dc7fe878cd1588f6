"""Independent checks for nondet and prob, by classical or brute-force means

None of these share code with the fixpoint solver. They are slow, limited to small
or word-shaped instances, and refuse instances outside their budget instead of
approximating.
"""
import bisect
import math
from dataclasses import dataclass
from typing import Callable, Dict, Hashable, List, Mapping, Optional, Tuple

import networkx as nx
import numpy as np

from paritylang.exceptions import (
    AlphabetMismatchError,
    InstanceTooLargeError,
    ModelError,
    UnconvergedError,
)
from paritylang.logs import get_module_logger
from paritylang.model import (
    MASS_TOLERANCE,
    Automaton,
    AutomatonKind,
    GraphNode,
    NodeGraph,
    PartialTree,
    RunGraph,
    all_cycles_even,
    require_valid,
    run_graph_priorities,
    universal_parity_check,
)
from paritylang.nondet import check_tree
from paritylang.prob import ProbVector

logger = get_module_logger("oracles")

# extra chain states for the word oracle
DIVERGED = "<diverged>"
FINISHED = "<finished>"

REACHABILITY_TOLERANCE = 1e-12
REACHABILITY_MAX_ITERATIONS = 100_000
DIRECT_SOLVE_MAX_STATES = 50

# budget for the positional search
MAX_PRODUCT_NODES = 20
MAX_CHOICES = 4

# largest generation frontier monte_carlo_cylinder will carry below a '*' leaf
MAX_FRONTIER = 1_000_000


@dataclass(frozen=True)
class BsccReport:
    """Bottom SCCs of the Markov chain of a word automaton, and who reaches them

    The chain has the automaton states plus, where reached, DIVERGED (missing mass,
    rejecting) and FINISHED (nullary symbols, accepting).
    """

    components: Tuple[Tuple[str, ...], ...]
    accepting: Tuple[bool, ...]
    acceptance: ProbVector
    rejection: ProbVector
    method: str

    def accepting_components(self) -> List[Tuple[str, ...]]:
        return [x for x, ok in zip(self.components, self.accepting) if ok]


def _markov_chain(automaton: Automaton) -> nx.DiGraph:
    """Positive-probability edges with summed probabilities in attribute 'p'"""
    for symbol in automaton.alphabet.symbols:
        if symbol.arity > 1:
            raise AlphabetMismatchError(
                f"'{symbol.name}' has arity {symbol.arity}; the chain oracle only "
                f"handles word automata"
            )
    chain = nx.DiGraph()
    chain.add_nodes_from(automaton.state_names)

    def add(source, target, probability):
        if probability <= 0.0:
            return
        if target in (DIVERGED, FINISHED) and target not in chain:
            chain.add_edge(target, target, p=1.0)
        if chain.has_edge(source, target):
            chain[source][target]["p"] += probability
        else:
            chain.add_edge(source, target, p=probability)

    for state, transitions in automaton.transition_map().items():
        mass = 0.0
        for t in transitions:
            probability = t.probability or 0.0
            mass += probability
            add(state, t.targets[0] if t.targets else FINISHED, probability)
        # rounding noise in stochastic rows is not divergence
        if 1.0 - mass > MASS_TOLERANCE:
            add(state, DIVERGED, 1.0 - mass)
    return chain


def _bottom_components(chain: nx.DiGraph) -> List[Tuple[str, ...]]:
    condensed = nx.condensation(chain)
    bottoms = [x for x in condensed.nodes if condensed.out_degree(x) == 0]
    members = nx.get_node_attributes(condensed, "members")
    return sorted(tuple(sorted(members[x], key=str)) for x in bottoms)


def _is_accepting(component: Tuple[str, ...], priorities: Mapping[str, int]) -> bool:
    if component == (FINISHED,):
        return True
    if component == (DIVERGED,):
        return False
    return max(priorities[x] for x in component) % 2 == 0


def _reach(
    chain: nx.DiGraph, transient: List[str], targets: frozenset
) -> Tuple[Dict[str, float], str]:
    """Probability of reaching targets from each transient state

    Value iteration first. If that does not settle and the chain is small, a direct
    linear solve is used instead.
    """
    if not transient:
        return {}, "none"
    index = {x: i for i, x in enumerate(transient)}
    step = np.zeros((len(transient), len(transient)))
    into = np.zeros(len(transient))
    for state in transient:
        for target, data in chain[state].items():
            if target in index:
                step[index[state], index[target]] += data["p"]
            elif target in targets:
                into[index[state]] += data["p"]

    values = np.zeros(len(transient))
    for iteration in range(1, REACHABILITY_MAX_ITERATIONS + 1):
        following = step @ values + into
        residual = float(np.max(np.abs(following - values)))
        values = following
        if residual < REACHABILITY_TOLERANCE:
            logger.debug(f"Value iteration settled after {iteration} steps")
            return dict(zip(transient, np.clip(values, 0.0, 1.0))), "iteration"

    if len(transient) > DIRECT_SOLVE_MAX_STATES:
        raise UnconvergedError(
            f"Reachability did not settle within {REACHABILITY_MAX_ITERATIONS} steps "
            f"and {len(transient)} states is too many for a direct solve",
            last_iterate=dict(zip(transient, values)),
        )
    logger.debug("Value iteration did not settle, solving directly")
    values = np.linalg.solve(np.eye(len(transient)) - step, into)
    return dict(zip(transient, np.clip(values, 0.0, 1.0))), "direct"


def bscc_report(automaton: Automaton) -> BsccReport:
    """Classify bottom SCCs and compute reachability of the accepting ones

    Raises
    ------
    AlphabetMismatchError
        If some symbol has arity above 1
    """
    require_valid(automaton, AutomatonKind.prob)
    chain = _markov_chain(automaton)
    components = _bottom_components(chain)
    priorities = automaton.priorities
    accepting = tuple(_is_accepting(x, priorities) for x in components)
    in_bottom = {x for component in components for x in component}
    transient = [x for x in automaton.state_names if x not in in_bottom]

    good = frozenset(x for c, ok in zip(components, accepting) if ok for x in c)
    bad = frozenset(x for c, ok in zip(components, accepting) if not ok for x in c)
    reach_good, method = _reach(chain, transient, good)
    reach_bad, _ = _reach(chain, transient, bad)

    def vector(reached: Dict[str, float], targets: frozenset) -> ProbVector:
        return ProbVector(
            automaton.state_names,
            [
                reached[x] if x in reached else float(x in targets)
                for x in automaton.state_names
            ],
        )

    report = BsccReport(
        components=tuple(components),
        accepting=accepting,
        acceptance=vector(reach_good, good),
        rejection=vector(reach_bad, bad),
        method=method,
    )
    logger.debug(
        f"{len(components)} bottom SCCs, {sum(accepting)} accepting, "
        f"{len(transient)} transient states"
    )
    return report


def bscc_accprob(automaton: Automaton) -> ProbVector:
    """Acceptance probability of a word automaton via its Markov chain"""
    return bscc_report(automaton).acceptance


Pair = Hashable
Choice = Tuple[str, Tuple[Pair, ...]]


def _positional_search(
    roots: List[Pair],
    options: Callable[[Pair], List[Choice]],
    priority: Callable[[Pair], int],
    node_id: Callable[[Pair], str],
    state_of: Callable[[Pair], str],
    name: str,
) -> Optional[RunGraph]:
    """Find one choice per reachable pair such that every cycle has an even maximum

    Returns the run graph of the first such choice from any root, or None. Choices
    closing a cycle with an odd maximum are pruned straight away, since edges are
    never removed from a partial choice.
    """
    reachable = list(roots)
    seen = set(roots)
    for pair in reachable:
        choices = options(pair)
        if len(choices) > MAX_CHOICES:
            raise InstanceTooLargeError(
                f"{len(choices)} transitions to choose from at {pair}; the positional "
                f"oracle allows at most {MAX_CHOICES}"
            )
        for _, children in choices:
            for child in children:
                if child not in seen:
                    seen.add(child)
                    reachable.append(child)
    if len(reachable) > MAX_PRODUCT_NODES:
        raise InstanceTooLargeError(
            f"{len(reachable)} reachable product nodes; the positional oracle allows "
            f"at most {MAX_PRODUCT_NODES}"
        )

    graph = nx.DiGraph()
    priorities: Dict[Pair, int] = {}
    chosen: Dict[Pair, Choice] = {}

    def extend(pending: List[Pair]) -> bool:
        open_pairs = [x for x in pending if x not in chosen]
        if not open_pairs:
            return True
        pair, rest = open_pairs[0], open_pairs[1:]
        for choice in options(pair):
            chosen[pair] = choice
            graph.add_node(pair)
            priorities[pair] = priority(pair)
            for child in choice[1]:
                graph.add_edge(pair, child)
            closed = graph.subgraph([x for x in graph.nodes if x in chosen])
            if all_cycles_even(closed, priorities) and extend(rest + list(choice[1])):
                return True
            graph.remove_edges_from([(pair, child) for child in choice[1]])
            del chosen[pair]
        return False

    for root in roots:
        graph.clear()
        chosen.clear()
        if extend([root]):
            nodes = {
                node_id(pair): GraphNode(
                    symbol=symbol,
                    children=tuple(node_id(x) for x in children),
                    state=state_of(pair),
                )
                for pair, (symbol, children) in chosen.items()
            }
            return RunGraph(nodes=nodes, root=node_id(root), name=name)
    return None


def positional_run(automaton: Automaton, tree: NodeGraph) -> Optional[RunGraph]:
    """An accepting positional run of automaton on tree, or None

    Positional means one transition per (tree node, state) pair, so the run is itself
    a finite graph.

    Raises
    ------
    InstanceTooLargeError
        If the product is over budget
    """
    require_valid(automaton, AutomatonKind.nondet)
    check_tree(automaton, tree)
    delta = automaton.transition_map()
    priorities = automaton.priorities

    def options(pair) -> List[Choice]:
        node = tree.nodes[pair[0]]
        return [
            (t.symbol, tuple(zip(node.children, t.targets)))
            for t in delta[pair[1]]
            if t.symbol == node.symbol and len(t.targets) == len(node.children)
        ]

    return _positional_search(
        roots=[
            (tree.root, x)
            for x in automaton.state_names
            if x in automaton.initial_states
        ],
        options=options,
        priority=lambda pair: priorities[pair[1]],
        node_id=lambda pair: f"{pair[0]}@{pair[1]}",
        state_of=lambda pair: pair[1],
        name=f"run of {automaton.name} on {tree.name}",
    )


def positional_member(automaton: Automaton, tree: NodeGraph) -> bool:
    """Membership by exhaustive search over positional runs"""
    run = positional_run(automaton, tree)
    if run is None:
        return False
    return universal_parity_check(run, automaton.priorities)


def positional_nonempty(automaton: Automaton) -> bool:
    """Emptiness by exhaustive search over positional runs on the states alone

    A positional choice of one transition per state is a regular tree together with
    its run, so the language is nonempty iff one of them is accepting.
    """
    require_valid(automaton, AutomatonKind.nondet)
    delta = automaton.transition_map()
    priorities = automaton.priorities
    run = _positional_search(
        roots=[x for x in automaton.state_names if x in automaton.initial_states],
        options=lambda state: [(t.symbol, t.targets) for t in delta[state]],
        priority=lambda state: priorities[state],
        node_id=str,
        state_of=str,
        name=f"witness for {automaton.name}",
    )
    return run is not None and universal_parity_check(run, priorities)


def cycle_parity_check(run: RunGraph, priorities: Mapping[str, int]) -> bool:
    """universal_parity_check by listing every simple cycle"""
    graph = run_graph_priorities(run, priorities)
    priority = nx.get_node_attributes(graph, "priority")
    return all(
        max(priority[x] for x in cycle) % 2 == 0 for cycle in nx.simple_cycles(graph)
    )


@dataclass(frozen=True)
class MonteCarloEstimate:
    """Fraction of sampled runs generating a prefix, with its binomial standard error

    The estimand is prefix generation without divergence down to depth_cap.
    Acceptance is not sampled.
    """

    estimate: float
    standard_error: float
    samples: int
    hits: int
    seed: int
    depth_cap: int

    def within(self, value: float, sigmas: float = 3.0) -> bool:
        return abs(self.estimate - value) <= sigmas * self.standard_error


class _Uniforms:
    """Uniform draws from a seeded generator, fetched in blocks"""

    def __init__(self, seed: int, block: int = 4096):
        self._rng = np.random.default_rng(seed)
        self._block = block
        self._buffer: List[float] = []
        self._position = 0

    def next(self) -> float:
        if self._position == len(self._buffer):
            self._buffer = self._rng.random(self._block).tolist()
            self._position = 0
        self._position += 1
        return self._buffer[self._position - 1]


@dataclass(frozen=True)
class _Table:
    """Cumulative distribution over a list of outcomes. Draws past the end fail"""

    outcomes: Tuple
    cumulative: Tuple[float, ...]

    @classmethod
    def of(cls, weighted: List[Tuple[object, float]]) -> "_Table":
        positive = [(x, w) for x, w in weighted if w > 0.0]
        running, cumulative = 0.0, []
        for _, weight in positive:
            running += weight
            cumulative.append(running)
        return cls(tuple(x for x, _ in positive), tuple(cumulative))

    def draw(self, uniforms: _Uniforms):
        index = bisect.bisect_right(self.cumulative, uniforms.next())
        return self.outcomes[index] if index < len(self.outcomes) else None


def monte_carlo_cylinder(
    automaton: Automaton,
    tree: PartialTree,
    samples: int,
    seed: int,
    depth_cap: int,
    start: Optional[str] = None,
) -> MonteCarloEstimate:
    """Estimate the probability of generating tree without diverging

    Each sample draws a root state and then transitions top-down. It is a hit if the
    symbols agree with tree wherever tree is not '*', and nothing diverges above
    depth_cap. Below a '*' leaf all branches are generated down to depth_cap, so
    branching alphabets need small caps.
    """
    require_valid(automaton, AutomatonKind.prob)
    if samples < 1:
        raise ModelError(f"Need at least one sample, got {samples}")
    if start is not None and start not in automaton.state_names:
        raise ModelError(f"Unknown start state '{start}'")

    uniforms = _Uniforms(seed)
    if start is None:
        roots = _Table.of(list(automaton.initial_weights().items()))
    else:
        roots = _Table.of([(start, 1.0)])
    steps = {
        state: _Table.of([(t, t.probability or 0.0) for t in transitions])
        for state, transitions in automaton.transition_map().items()
    }

    def survives(state: str, depth: int) -> bool:
        frontier = [state]
        while frontier and depth < depth_cap:
            following = []
            for x in frontier:
                transition = steps[x].draw(uniforms)
                if transition is None:
                    return False
                following.extend(transition.targets)
            if len(following) > MAX_FRONTIER:
                raise InstanceTooLargeError(
                    f"More than {MAX_FRONTIER} open branches at depth {depth + 1}; "
                    f"use a smaller depth cap"
                )
            frontier = following
            depth += 1
        return True

    def generates(node: PartialTree, state: str, depth: int) -> bool:
        if node.is_star:
            return survives(state, depth)
        transition = steps[state].draw(uniforms)
        if transition is None or transition.symbol != node.symbol:
            return False
        return all(
            generates(child, x, depth + 1)
            for child, x in zip(node.children, transition.targets)
        )

    hits = 0
    for _ in range(samples):
        root = roots.draw(uniforms)
        if root is not None and generates(tree, root, 0):
            hits += 1
    estimate = hits / samples
    standard_error = math.sqrt(estimate * (1.0 - estimate) / samples)
    logger.info(f"{hits} of {samples} samples generated {tree}")
    return MonteCarloEstimate(
        estimate=estimate,
        standard_error=standard_error,
        samples=samples,
        hits=hits,
        seed=seed,
        depth_cap=depth_cap,
    )
