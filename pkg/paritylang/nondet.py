"""Emptiness and membership for nondeterministic parity tree automata

Both queries solve a boolean instance of the equational system an automaton
induces: one equation per priority class, a least fixed point for odd priorities and
a greatest one for even priorities, highest priority outermost. Each equation applies
the one-step existential operator restricted to its class: a state (or a tree
node/state pair) belongs to the next iterate if some transition lands all of its
children in the current variable sets. Nullary transitions end a branch, and finite
branches are accepting, so they satisfy the operator unconditionally.
"""
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Hashable, List, Tuple

from paritylang.exceptions import AlphabetMismatchError, TreeShapeError
from paritylang.fixpoint import (
    EXACT_POLICY,
    Equation,
    EquationalSystem,
    Polarity,
    PowersetLattice,
    SolverPolicy,
    solve,
)
from paritylang.logs import get_module_logger
from paritylang.model import (
    Automaton,
    AutomatonKind,
    NodeGraph,
    Transition,
    require_valid,
)

logger = get_module_logger("nondet")


@dataclass(frozen=True)
class AcceptingStateSet:
    """States from which some accepting run exists, per priority class and in total"""

    by_priority: Tuple[FrozenSet[str], ...]

    @property
    def states(self) -> FrozenSet[str]:
        return frozenset().union(*self.by_priority)

    def __contains__(self, state) -> bool:
        return state in self.states


@dataclass(frozen=True)
class ProductSystem:
    """Boolean system over (tree node, state) pairs, one equation per priority class"""

    system: EquationalSystem
    carriers: Tuple[Tuple[Tuple[str, str], ...], ...]


def _require_nondet(automaton: Automaton):
    require_valid(automaton, AutomatonKind.nondet)


def _class_equations(
    automaton: Automaton,
    carrier_for: Callable[[Tuple[str, ...]], Tuple[Hashable, ...]],
    step: Callable[[Hashable, FrozenSet], bool],
) -> EquationalSystem:
    """One equation per compressed priority class, lowest priority first"""
    equations = []
    for index, members in enumerate(automaton.priority_classes()):
        carrier = carrier_for(members)

        def function(assignment, carrier=carrier):
            good = frozenset().union(*assignment)
            return frozenset(x for x in carrier if step(x, good))

        equations.append(
            Equation(
                variable=f"u{index + 1}",
                polarity=Polarity.for_priority(index + 1),
                lattice=PowersetLattice(carrier, name=f"class {index + 1}"),
                function=function,
            )
        )
    return EquationalSystem(tuple(equations))


def state_system(automaton: Automaton) -> EquationalSystem:
    """The system over sets of states whose solution is 'has an accepting run'"""
    delta = automaton.transition_map()

    def step(state: str, good: FrozenSet[str]) -> bool:
        return any(all(x in good for x in t.targets) for t in delta[state])

    return _class_equations(automaton, lambda members: members, step)


def accepting_states_by_priority(
    automaton: Automaton, policy: SolverPolicy = EXACT_POLICY
) -> Tuple[FrozenSet[str], ...]:
    """Solution of the state system, one set per compressed priority class"""
    _require_nondet(automaton)
    solution = solve(state_system(automaton), policy)
    return tuple(solution.values)


def accepting_states(
    automaton: Automaton, policy: SolverPolicy = EXACT_POLICY
) -> AcceptingStateSet:
    """All states from which the automaton has an accepting run

    Raises
    ------
    KindMismatchError
        If automaton is not nondet
    """
    result = AcceptingStateSet(accepting_states_by_priority(automaton, policy))
    logger.debug(f"{len(result.states)} of {len(automaton.states)} states accept")
    return result


def nonempty(automaton: Automaton, policy: SolverPolicy = EXACT_POLICY) -> bool:
    """True if the automaton accepts at least one tree"""
    return bool(automaton.initial_states & accepting_states(automaton, policy).states)


def check_tree(automaton: Automaton, tree: NodeGraph):
    """Raise if tree is partial or does not fit the alphabet of automaton"""
    if tree.is_partial:
        raise TreeShapeError(
            f"'{tree.name}' has '*' nodes; membership needs a total tree"
        )
    problems = tree.problems(automaton.alphabet)
    if problems:
        raise AlphabetMismatchError(
            f"'{tree.name}' does not fit the alphabet of '{automaton.name}': "
            + "; ".join(problems)
        )


def product_system(automaton: Automaton, tree: NodeGraph) -> ProductSystem:
    """The system over (node, state) pairs for membership of one regular tree

    All tree nodes are included, reachable or not.
    """
    delta: Dict[str, List[Transition]] = automaton.transition_map()

    def carrier_for(members: Tuple[str, ...]) -> Tuple[Tuple[str, str], ...]:
        return tuple((node, state) for node in tree.nodes for state in members)

    def step(pair: Tuple[str, str], good: FrozenSet) -> bool:
        node_id, state = pair
        node = tree.nodes[node_id]
        return any(
            t.symbol == node.symbol
            and len(t.targets) == len(node.children)
            and all((c, x) in good for c, x in zip(node.children, t.targets))
            for t in delta[state]
        )

    system = _class_equations(automaton, carrier_for, step)
    carriers = tuple(x.lattice.carrier for x in system.equations)
    return ProductSystem(system=system, carriers=carriers)


def member(
    automaton: Automaton, tree: NodeGraph, policy: SolverPolicy = EXACT_POLICY
) -> bool:
    """True if the automaton has an accepting run over the unfolding of tree

    Raises
    ------
    KindMismatchError
        If automaton is not nondet
    AlphabetMismatchError
        If tree uses unknown symbols or wrong arities
    TreeShapeError
        If tree is partial
    """
    _require_nondet(automaton)
    check_tree(automaton, tree)
    product = product_system(automaton, tree)
    solution = solve(product.system, policy)
    winning = frozenset().union(*solution.values)
    logger.debug(
        f"{len(winning)} of {sum(len(x) for x in product.carriers)} node/state pairs "
        f"accept"
    )
    return any((tree.root, x) in winning for x in automaton.initial_states)
