import itertools

import numpy as np
import pytest

from paritylang.exceptions import (
    AlphabetMismatchError,
    KindMismatchError,
    TreeShapeError,
)
from paritylang.fixpoint import DEFAULT_POLICY, EXACT_POLICY, is_fixed_point, solve
from paritylang.model import (
    GraphNode,
    InitialWeight,
    RegularTree,
    State,
    Transition,
)
from paritylang.nondet import (
    accepting_states,
    accepting_states_by_priority,
    member,
    nonempty,
    product_system,
    state_system,
)
from paritylang.oracles import positional_member, positional_nonempty
from tests.conftest import load_tree
from tests.factories import (
    AutomatonFactory,
    make_alphabet,
    random_nondet_automaton,
    random_regular_tree,
)

ALPHABET = make_alphabet([("a", 1), ("b", 2), ("c", 0)])


def shifted(automaton, by: int):
    states = tuple(
        State(name=x.name, priority=x.priority + by) for x in automaton.states
    )
    return automaton.model_copy(update={"states": states})


def test_accepting_states_t1(t1):
    assert accepting_states(t1).states == frozenset({"x"})
    assert nonempty(t1)


def test_accepting_states_odd_loop():
    automaton = AutomatonFactory(states=(State(name="x", priority=1),))
    assert accepting_states(automaton).states == frozenset()
    assert not nonempty(automaton)


def test_accepting_states_a1(a1):
    result = accepting_states(a1)
    assert result.states == frozenset({"x1", "x2"})
    assert "x1" in result
    assert accepting_states_by_priority(a1) == (
        frozenset({"x1"}),
        frozenset({"x2"}),
    )
    assert nonempty(a1)


def test_no_initial_states_means_empty(a1):
    assert not nonempty(a1.model_copy(update={"initial": ()}))


def test_tolerant_policy_gives_the_same_answer(a1, t1):
    assert accepting_states(a1, DEFAULT_POLICY) == accepting_states(a1)
    assert accepting_states(t1, DEFAULT_POLICY) == accepting_states(t1)


def test_member(a1, t1, aomega, abomega):
    assert member(a1, abomega)
    assert not member(a1, aomega)
    assert member(t1, load_tree("ok.tree"))
    a_loop = RegularTree(
        nodes={"n1": GraphNode(symbol="a", children=("n1",))}, root="n1"
    )
    assert not member(t1, a_loop)


def test_member_rejects_bad_input(a1, coin, abomega):
    with pytest.raises(KindMismatchError):
        member(coin, abomega)
    with pytest.raises(TreeShapeError):
        member(a1, load_tree("hd_prefix.tree"))
    with pytest.raises(AlphabetMismatchError):
        member(a1, load_tree("ok.tree"))


def test_member_depends_on_the_initial_state(a1, aomega):
    """a^omega from x2 still only loops through x1 after one step"""
    from_x2 = a1.model_copy(update={"initial": (InitialWeight(state="x2"),)})
    assert not member(from_x2, aomega)

    even = AutomatonFactory(
        alphabet=make_alphabet([("a", 1)]),
        states=(State(name="x", priority=1), State(name="y", priority=2)),
        transitions=(
            Transition(source="x", symbol="a", targets=("x",)),
            Transition(source="y", symbol="a", targets=("y",)),
        ),
        initial=(InitialWeight(state="x"), InitialWeight(state="y")),
    )
    assert member(even, aomega)


def test_product_system(a1, abomega):
    product = product_system(a1, abomega)
    assert product.system.variables == ("u1", "u2")
    assert product.carriers == (
        (("n1", "x1"), ("n2", "x1")),
        (("n1", "x2"), ("n2", "x2")),
    )


def test_member_matches_positional_search():
    rng = np.random.default_rng(31)
    for _ in range(250):
        automaton = random_nondet_automaton(rng, ALPHABET)
        tree = random_regular_tree(rng, ALPHABET)
        assert member(automaton, tree) == positional_member(automaton, tree)


def two_state_automata():
    """Every automaton over a/1, c/0 with states x, y, priorities 1-2 and init x"""
    options = {
        state: [
            Transition(source=state, symbol="a", targets=("x",)),
            Transition(source=state, symbol="a", targets=("y",)),
            Transition(source=state, symbol="c"),
        ]
        for state in ("x", "y")
    }

    def subsets(items):
        return itertools.chain.from_iterable(
            itertools.combinations(items, n) for n in range(len(items) + 1)
        )

    for px, py in itertools.product((1, 2), repeat=2):
        for from_x, from_y in itertools.product(
            subsets(options["x"]), subsets(options["y"])
        ):
            yield AutomatonFactory(
                alphabet=make_alphabet([("a", 1), ("c", 0)]),
                states=(State(name="x", priority=px), State(name="y", priority=py)),
                transitions=from_x + from_y,
                initial=(InitialWeight(state="x"),),
            )


def two_node_trees():
    labels = [("c", ()), ("a", ("n0",)), ("a", ("n1",))]
    for first, second in itertools.product(labels, repeat=2):
        yield RegularTree(
            nodes={
                "n0": GraphNode(symbol=first[0], children=first[1]),
                "n1": GraphNode(symbol=second[0], children=second[1]),
            },
            root="n0",
        )


def test_member_matches_positional_search_exhaustively():
    trees = list(two_node_trees())
    for automaton in two_state_automata():
        assert nonempty(automaton) == positional_nonempty(automaton)
        for tree in trees:
            assert member(automaton, tree) == positional_member(automaton, tree)


def test_nonempty_matches_positional_search():
    rng = np.random.default_rng(32)
    for _ in range(200):
        # one transition per symbol stays within the choice budget of the oracle
        automaton = random_nondet_automaton(rng, ALPHABET, max_per_symbol=1)
        assert nonempty(automaton) == positional_nonempty(automaton)


def test_member_implies_nonempty():
    rng = np.random.default_rng(33)
    for _ in range(100):
        automaton = random_nondet_automaton(rng, ALPHABET)
        tree = random_regular_tree(rng, ALPHABET)
        if member(automaton, tree):
            assert nonempty(automaton)


def test_shifting_priorities_by_two_changes_nothing():
    rng = np.random.default_rng(34)
    for _ in range(50):
        automaton = random_nondet_automaton(rng, ALPHABET)
        tree = random_regular_tree(rng, ALPHABET)
        moved = shifted(automaton, 2)
        assert accepting_states(moved) == accepting_states(automaton)
        assert member(moved, tree) == member(automaton, tree)


def test_more_transitions_never_lose_states():
    rng = np.random.default_rng(35)
    for _ in range(50):
        automaton = random_nondet_automaton(rng, ALPHABET)
        extra = random_nondet_automaton(rng, ALPHABET)
        names = set(automaton.state_names)
        added = tuple(
            x
            for x in extra.transitions
            if x.source in names
            and set(x.targets) <= names
            and x not in automaton.transitions
        )
        larger = automaton.model_copy(
            update={"transitions": automaton.transitions + added}
        )
        assert accepting_states(automaton).states <= accepting_states(larger).states


def test_solved_systems_are_fixed_points():
    rng = np.random.default_rng(36)
    for _ in range(50):
        automaton = random_nondet_automaton(rng, ALPHABET)
        system = state_system(automaton)
        assert is_fixed_point(system, solve(system, EXACT_POLICY))

        tree = random_regular_tree(rng, ALPHABET)
        system = product_system(automaton, tree).system
        assert is_fixed_point(system, solve(system, EXACT_POLICY))
