"""Probabilistic semantics of generative probabilistic parity tree automata

Everything here is driven by the one-step operator Psi on [0,1]^states::

    Psi(p)(x) = sum over transitions (sigma, x_1..x_k) of delta(x) of
                delta(x)(sigma, x_1..x_k) * p(x_1) * .. * p(x_k)

* NoDiv, the probability of never diverging, is the greatest fixed point of Psi.
  Its descending Kleene chain is exactly NoDiv_k, no divergence within k steps.
* AccProb, the probability of generating an accepting run, solves the system with
  one equation per priority class: ``u_i =_eta Psi(u_1..u_n) restricted to class i``,
  mu for odd and nu for even priorities.
* Cylinder sets of runs and trees are evaluated from these two vectors. The parity
  condition on a branch only depends on its infinite tail, so the measure of
  accepting runs below a finite prefix factors over the prefix leaves.
"""
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterator, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from paritylang.exceptions import AlphabetMismatchError, ModelError, UnconvergedError
from paritylang.fixpoint import (
    DEFAULT_POLICY,
    Equation,
    EquationalSystem,
    IntervalVectorLattice,
    Polarity,
    SolverPolicy,
    gfp,
    lfp,
    solve,
)
from paritylang.logs import get_module_logger
from paritylang.model import (
    Automaton,
    AutomatonKind,
    PartialRun,
    PartialTree,
    require_valid,
)

logger = get_module_logger("prob")


@dataclass(frozen=True, eq=False)
class ProbVector:
    """A value in [0,1] for every state of an automaton"""

    states: Tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (len(self.states),):
            raise ValueError(
                f"{len(self.states)} states but {values.shape} values given"
            )
        values.setflags(write=False)
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "values", values)

    def __getitem__(self, state: str) -> float:
        return float(self.values[self.states.index(state)])

    def __len__(self):
        return len(self.states)

    def items(self) -> Iterator[Tuple[str, float]]:
        return zip(self.states, (float(x) for x in self.values))

    def as_dict(self) -> Dict[str, float]:
        return dict(self.items())

    def distance(self, other: "ProbVector") -> float:
        """Sup-norm distance, matching states by name"""
        return max(
            (abs(value - other[state]) for state, value in self.items()), default=0.0
        )


class PsiOperator:
    """Psi as a vectorised function on numpy arrays indexed like automaton.states

    Transitions are kept in file order and summed in that order. Results are
    clipped to [0,1]; mass sums may exceed 1 by the input tolerance.
    """

    def __init__(self, automaton: Automaton):
        self.states = automaton.state_names
        index = {x: i for i, x in enumerate(self.states)}
        padding = len(self.states)
        width = max((len(x.targets) for x in automaton.transitions), default=0) or 1
        self._sources = np.array(
            [index[x.source] for x in automaton.transitions], dtype=np.intp
        )
        self._weights = np.array(
            [x.probability or 0.0 for x in automaton.transitions], dtype=float
        )
        self._children = np.array(
            [
                [index[t] for t in x.targets] + [padding] * (width - len(x.targets))
                for x in automaton.transitions
            ],
            dtype=np.intp,
        ).reshape(len(automaton.transitions), width)

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def lattice(self) -> IntervalVectorLattice:
        return IntervalVectorLattice(self.states, name="states")

    def __call__(self, values: np.ndarray) -> np.ndarray:
        extended = np.append(values, 1.0)
        products = extended[self._children].prod(axis=1)
        mass = np.bincount(
            self._sources, weights=self._weights * products, minlength=self.size
        )
        return np.minimum(mass, 1.0)


@dataclass(frozen=True)
class MeasureQuery:
    """A cylinder to measure, optionally started from a single state"""

    target: Union[PartialTree, PartialRun]
    start: Optional[str] = None


def _require_prob(automaton: Automaton):
    require_valid(automaton, AutomatonKind.prob)


def _to_vector(automaton: Automaton, values) -> ProbVector:
    return ProbVector(automaton.state_names, np.clip(values, 0.0, 1.0))


@lru_cache(maxsize=128)
def _nodiv(automaton: Automaton, policy: SolverPolicy) -> ProbVector:
    psi = PsiOperator(automaton)
    try:
        values = gfp(psi, psi.lattice, policy)
    except UnconvergedError as e:
        raise UnconvergedError(
            f"NoDiv of '{automaton.name}': {e}",
            last_iterate=_to_vector(automaton, e.last_iterate),
        ) from e
    return _to_vector(automaton, values)


def nodiv(automaton: Automaton, policy: SolverPolicy = DEFAULT_POLICY) -> ProbVector:
    """Probability of never diverging, from each state

    Raises
    ------
    UnconvergedError
        With the last iterate as a ProbVector
    """
    _require_prob(automaton)
    return _nodiv(automaton, policy)


def nodiv_k(automaton: Automaton, k: int) -> ProbVector:
    """Probability of not diverging within k steps, by direct recursion

    NoDiv_0 is 1 everywhere and NoDiv_{k+1}(x) sums, over the transitions of x,
    the transition probability times NoDiv_k of every target.
    """
    _require_prob(automaton)
    delta = automaton.transition_map()
    current = {x: 1.0 for x in automaton.state_names}
    for _ in range(k):
        following = {}
        for state in automaton.state_names:
            total = 0.0
            for transition in delta[state]:
                total += (transition.probability or 0.0) * math.prod(
                    current[x] for x in transition.targets
                )
            following[state] = min(total, 1.0)
        current = following
    return ProbVector(
        automaton.state_names, [current[x] for x in automaton.state_names]
    )


def divergence(
    automaton: Automaton, policy: SolverPolicy = DEFAULT_POLICY
) -> ProbVector:
    """Probability of diverging at some point, 1 - NoDiv"""
    no_div = nodiv(automaton, policy)
    return ProbVector(no_div.states, 1.0 - no_div.values)


def termination_prob(
    automaton: Automaton, policy: SolverPolicy = DEFAULT_POLICY
) -> ProbVector:
    """Least fixed point of Psi: probability of generating a finite tree"""
    _require_prob(automaton)
    psi = PsiOperator(automaton)
    try:
        values = lfp(psi, psi.lattice, policy)
    except UnconvergedError as e:
        raise UnconvergedError(
            f"Termination probability of '{automaton.name}': {e}",
            last_iterate=_to_vector(automaton, e.last_iterate),
        ) from e
    return _to_vector(automaton, values)


def psi_system(automaton: Automaton) -> EquationalSystem:
    """One equation per compressed priority class, lowest priority first"""
    psi = PsiOperator(automaton)
    position = {x: i for i, x in enumerate(automaton.state_names)}
    classes = [
        np.array([position[x] for x in members], dtype=np.intp)
        for members in automaton.priority_classes()
    ]

    def assemble(assignment: Sequence[np.ndarray]) -> np.ndarray:
        full = np.empty(psi.size)
        for indices, values in zip(classes, assignment):
            full[indices] = values
        return full

    equations = []
    for number, (members, indices) in enumerate(
        zip(automaton.priority_classes(), classes), start=1
    ):

        def function(assignment, indices=indices):
            return psi(assemble(assignment))[indices]

        equations.append(
            Equation(
                variable=f"u{number}",
                polarity=Polarity.for_priority(number),
                lattice=IntervalVectorLattice(members, name=f"class {number}"),
                function=function,
            )
        )
    return EquationalSystem(tuple(equations))


def _class_values_to_vector(
    automaton: Automaton, values: Sequence[np.ndarray]
) -> ProbVector:
    by_state: Dict[str, float] = {}
    for members, class_values in zip(automaton.priority_classes(), values):
        by_state.update(zip(members, (float(x) for x in class_values)))
    return _to_vector(automaton, [by_state[x] for x in automaton.state_names])


@lru_cache(maxsize=128)
def _accprob(automaton: Automaton, policy: SolverPolicy) -> ProbVector:
    system = psi_system(automaton)
    try:
        solution = solve(system, policy)
    except UnconvergedError as e:
        raise UnconvergedError(
            f"AccProb of '{automaton.name}': {e}",
            last_iterate=_class_values_to_vector(automaton, e.last_iterate.values),
            equation=e.equation,
        ) from e
    for diagnostics in solution.diagnostics:
        logger.debug(
            f"{diagnostics.variable} ({diagnostics.polarity.value}): "
            f"{diagnostics.fixpoints} fixpoints, {diagnostics.iterations} steps, "
            f"last step at most {diagnostics.max_residual:.3g}"
        )
    return _class_values_to_vector(automaton, solution.values)


def accprob(automaton: Automaton, policy: SolverPolicy = DEFAULT_POLICY) -> ProbVector:
    """Probability of generating an accepting run, from each state

    Results are cached per automaton and policy.

    Raises
    ------
    UnconvergedError
        With the last iterates assembled into a ProbVector
    """
    _require_prob(automaton)
    return _accprob(automaton, policy)


def _initial(automaton: Automaton, start: Optional[str]) -> Dict[str, float]:
    if start is None:
        return automaton.initial_weights()
    if start not in automaton.state_names:
        raise ModelError(f"Unknown start state '{start}'")
    return {start: 1.0}


def _check_symbols(automaton: Automaton, node: Union[PartialTree, PartialRun]):
    if node.is_star:
        return
    try:
        arity = automaton.alphabet.arity(node.symbol)
    except KeyError as e:
        raise AlphabetMismatchError(f"Unknown symbol '{node.symbol}'") from e
    if arity != len(node.children):
        raise AlphabetMismatchError(
            f"'{node.symbol}' has arity {arity}, got {len(node.children)} children"
        )
    for child in node.children:
        _check_symbols(automaton, child)


def run_cylinder_prob(
    automaton: Automaton, query: MeasureQuery, policy: SolverPolicy = DEFAULT_POLICY
) -> float:
    """Probability of the set of runs extending a partial run

    The root state is weighted by the initial distribution (or 1 for the start
    state), every inner node by its transition probability and every '*' leaf by
    NoDiv of its state.
    """
    _require_prob(automaton)
    run = query.target
    if not isinstance(run, PartialRun):
        raise ModelError(f"Expected a partial run, got {type(run).__name__}")
    _check_symbols(automaton, run)
    no_div = nodiv(automaton, policy)
    probabilities: Dict[Tuple[str, str, Tuple[str, ...]], float] = {}
    for t in automaton.transitions:
        key = (t.source, t.symbol, t.targets)
        probabilities[key] = probabilities.get(key, 0.0) + (t.probability or 0.0)

    def weight(node: PartialRun) -> float:
        if node.state not in automaton.state_names:
            raise ModelError(f"Unknown state '{node.state}'")
        if node.is_star:
            return no_div[node.state]
        key = (node.state, node.symbol, tuple(x.state for x in node.children))
        return probabilities.get(key, 0.0) * math.prod(weight(x) for x in node.children)

    initial = _initial(automaton, query.start)
    return initial.get(run.state, 0.0) * weight(run)


def _tree_cylinder(
    automaton: Automaton,
    tree: PartialTree,
    leaf_values: ProbVector,
    start: Optional[str],
) -> float:
    """Sum over all state labelings of tree along positive-probability transitions"""
    if not isinstance(tree, PartialTree):
        raise ModelError(f"Expected a partial tree, got {type(tree).__name__}")
    _check_symbols(automaton, tree)
    delta = automaton.transition_map()
    memo: Dict[Tuple[PartialTree, str], float] = {}

    def weight(node: PartialTree, state: str) -> float:
        if node.is_star:
            return leaf_values[state]
        if (node, state) not in memo:
            total = 0.0
            for t in delta[state]:
                if t.symbol == node.symbol and (t.probability or 0.0) > 0.0:
                    total += t.probability * math.prod(
                        weight(c, x) for c, x in zip(node.children, t.targets)
                    )
            memo[(node, state)] = total
        return memo[(node, state)]

    initial = _initial(automaton, start)
    return sum(w * weight(tree, x) for x, w in initial.items() if w > 0.0)


def tree_cylinder_prob(
    automaton: Automaton, query: MeasureQuery, policy: SolverPolicy = DEFAULT_POLICY
) -> float:
    """Probability of generating an accepting run whose tree extends query.target

    Raises
    ------
    UnconvergedError
        If AccProb does not converge
    """
    _require_prob(automaton)
    return _tree_cylinder(
        automaton, query.target, accprob(automaton, policy), query.start
    )


def prefix_cylinder_prob(
    automaton: Automaton, query: MeasureQuery, policy: SolverPolicy = DEFAULT_POLICY
) -> float:
    """Like tree_cylinder_prob, with NoDiv instead of AccProb at the '*' leaves

    This is the probability of generating the prefix without diverging, ignoring
    acceptance.
    """
    _require_prob(automaton)
    return _tree_cylinder(
        automaton, query.target, nodiv(automaton, policy), query.start
    )


def total_mass(automaton: Automaton, policy: SolverPolicy = DEFAULT_POLICY) -> float:
    """Probability that the automaton generates an accepted tree at all"""
    _require_prob(automaton)
    weights: Mapping[str, float] = automaton.initial_weights()
    acceptance = accprob(automaton, policy)
    return sum(w * acceptance[x] for x, w in weights.items())
