from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from paritylang.exceptions import (
    AlphabetMismatchError,
    KindMismatchError,
    ModelError,
    UnconvergedError,
)
from paritylang.fixpoint import (
    Polarity,
    SolverPolicy,
    is_fixed_point,
    kleene_chain,
    solve,
)
from paritylang.formats import parse_automaton, parse_term
from paritylang.model import STAR, PartialRun, State, complete_partition, refine
from paritylang.prob import (
    MeasureQuery,
    ProbVector,
    PsiOperator,
    accprob,
    divergence,
    nodiv,
    nodiv_k,
    prefix_cylinder_prob,
    psi_system,
    run_cylinder_prob,
    termination_prob,
    total_mass,
    tree_cylinder_prob,
)
from tests.conftest import assert_acceptance_below_nodiv
from tests.factories import make_alphabet, random_prob_automaton

WORDS = make_alphabet([("a", 1), ("b", 1)])
BRANCHING = make_alphabet([("c", 0), ("a", 1), ("b", 2)])

STOPPING = """
automaton stopping
kind prob
symbol ok 0
symbol a 1
state x 1
init x 1.0
trans x ok 0.5
trans x a ( x ) 0.5
"""


def with_priorities(automaton, priority):
    states = tuple(
        State(name=x.name, priority=priority(i)) for i, x in enumerate(automaton.states)
    )
    return automaton.model_copy(update={"states": states})


def test_prob_vector():
    vector = ProbVector(("x", "y"), [0.25, 1.0])
    assert vector["y"] == 1.0
    assert len(vector) == 2
    assert vector.as_dict() == {"x": 0.25, "y": 1.0}
    assert vector.distance(ProbVector(("y", "x"), [0.5, 0.25])) == 0.5
    with pytest.raises(ValueError):
        vector.values[0] = 0.5


def test_psi_operator(coin, halfloop):
    psi = PsiOperator(coin)
    assert psi.size == 1
    assert psi(np.array([0.5]))[0] == 0.5
    assert PsiOperator(halfloop)(np.array([1.0]))[0] == 0.5

    stopping = PsiOperator(parse_automaton(STOPPING))
    assert stopping(np.array([0.0]))[0] == 0.5
    assert stopping(np.array([1.0]))[0] == 1.0


def test_nodiv(coin, halfloop, m1):
    assert nodiv(coin).as_dict() == {"x": 1.0}
    assert nodiv(halfloop)["x"] <= 1e-8
    assert nodiv(m1).as_dict() == {"x1": 1.0, "x2": 1.0}
    assert divergence(halfloop)["x"] == pytest.approx(1.0, abs=1e-8)
    assert divergence(coin)["x"] == 0.0


def test_nodiv_k(halfloop):
    assert nodiv_k(halfloop, 0)["x"] == 1.0
    assert nodiv_k(halfloop, 3)["x"] == 0.125


def test_nodiv_k_matches_greatest_fixpoint_iterates():
    rng = np.random.default_rng(8)
    for _ in range(20):
        automaton = random_prob_automaton(rng, BRANCHING, masses=(1.0, 0.9, 0.5))
        psi = PsiOperator(automaton)
        chain = kleene_chain(psi, psi.lattice, Polarity.nu)
        for k in range(51):
            iterate = next(chain)
            assert np.array_equal(nodiv_k(automaton, k).values, iterate)


def test_accprob(coin, coin_odd, m1, word3):
    assert accprob(coin).as_dict() == {"x": 1.0}
    assert accprob(coin_odd).as_dict() == {"x": 0.0}
    assert accprob(word3).as_dict() == {"s0": 0.5, "s1": 1.0, "s2": 0.0}
    result = accprob(m1)
    assert result["x1"] == pytest.approx(1.0, abs=1e-6)
    assert result["x2"] == pytest.approx(1.0, abs=1e-6)


def test_accprob_is_cached(coin):
    assert accprob(coin) is accprob(coin)
    assert accprob(coin) is not accprob(coin, SolverPolicy(tolerance=1e-6))


def test_accprob_from_threads(word3):
    with ThreadPoolExecutor(max_workers=4) as pool:
        results = list(pool.map(lambda _: accprob(word3).as_dict(), range(8)))
    assert all(x == {"s0": 0.5, "s1": 1.0, "s2": 0.0} for x in results)


def test_accprob_unconverged(halfloop):
    with pytest.raises(UnconvergedError) as e:
        accprob(halfloop, SolverPolicy(max_iterations=3))
    assert isinstance(e.value.last_iterate, ProbVector)
    assert e.value.last_iterate["x"] == 0.125
    assert e.value.equation == 1

    with pytest.raises(UnconvergedError) as e:
        nodiv(halfloop, SolverPolicy(max_iterations=2))
    assert e.value.last_iterate["x"] == 0.25


def test_accprob_needs_prob_automaton(a1):
    with pytest.raises(KindMismatchError):
        accprob(a1)


def test_psi_system(m1, coin):
    system = psi_system(m1)
    assert system.variables == ("u1", "u2")
    assert [x.polarity for x in system.equations] == [Polarity.mu, Polarity.nu]
    assert system.equations[0].lattice.carrier == ("x1",)

    # priority 2 only: the mu class is empty
    system = psi_system(coin)
    assert system.equations[0].lattice.carrier == ()
    assert system.equations[1].lattice.carrier == ("x",)


def test_termination_prob(coin):
    assert termination_prob(parse_automaton(STOPPING))["x"] == pytest.approx(
        1.0, abs=1e-8
    )
    assert termination_prob(coin)["x"] == 0.0


def test_run_cylinder_prob(coin, word3):
    assert run_cylinder_prob(coin, MeasureQuery(PartialRun(STAR, "x"), "x")) == 1.0
    assert run_cylinder_prob(coin, MeasureQuery(parse_term("hd@x(*@x)"), "x")) == 0.5
    assert run_cylinder_prob(word3, MeasureQuery(parse_term("a@s1(*@s2)"), "s1")) == 0.0
    assert run_cylinder_prob(word3, MeasureQuery(parse_term("a@s0(*@s1)"))) == 0.5
    with pytest.raises(ModelError):
        run_cylinder_prob(coin, MeasureQuery(parse_term("hd(*)")))
    with pytest.raises(ModelError):
        run_cylinder_prob(coin, MeasureQuery(PartialRun(STAR, "x"), "nowhere"))


def test_tree_cylinder_prob(coin, m1, halfloop):
    assert tree_cylinder_prob(coin, MeasureQuery(parse_term("hd(*)"))) == 0.5
    assert tree_cylinder_prob(coin, MeasureQuery(parse_term("*"))) == 1.0
    assert tree_cylinder_prob(
        m1, MeasureQuery(parse_term("a(*)"), start="x1")
    ) == pytest.approx(0.5, abs=1e-6)
    assert prefix_cylinder_prob(halfloop, MeasureQuery(parse_term("a(*)"))) == (
        pytest.approx(0.0, abs=1e-8)
    )
    with pytest.raises(AlphabetMismatchError):
        tree_cylinder_prob(coin, MeasureQuery(parse_term("zz(*)")))
    with pytest.raises(AlphabetMismatchError):
        tree_cylinder_prob(coin, MeasureQuery(parse_term("hd")))


def test_total_mass(coin, coin_odd, word3):
    assert total_mass(coin) == 1.0
    assert total_mass(coin_odd) == 0.0
    assert total_mass(word3) == 0.5


def test_acceptance_below_non_divergence():
    rng = np.random.default_rng(21)
    for _ in range(15):
        automaton = random_prob_automaton(rng, WORDS, max_priority=3, masses=(0.6, 0.5))
        acceptance = accprob(automaton)
        no_div = nodiv(automaton)
        assert np.all(acceptance.values >= 0.0)
        assert np.all(acceptance.values <= no_div.values + 1e-9)
        assert np.all(no_div.values <= 1.0)


def test_all_even_priorities_accept_whatever_does_not_diverge():
    rng = np.random.default_rng(22)
    for _ in range(30):
        automaton = random_prob_automaton(rng, BRANCHING, masses=(0.8, 0.4))
        automaton = with_priorities(automaton, lambda i: 2 * (i % 2 + 1))
        reference = nodiv(automaton)
        assert accprob(automaton).distance(reference) == pytest.approx(0.0, abs=1e-8)
        assert_acceptance_below_nodiv(automaton, slack=1e-8)


def test_all_odd_priorities_accept_finite_trees_only():
    rng = np.random.default_rng(23)
    for _ in range(30):
        automaton = random_prob_automaton(rng, BRANCHING, masses=(0.8, 0.4))
        automaton = with_priorities(automaton, lambda i: 2 * i + 1)
        reference = termination_prob(automaton)
        assert accprob(automaton).distance(reference) == pytest.approx(0.0, abs=1e-8)
        assert_acceptance_below_nodiv(automaton)


def test_partitions_add_up_to_total_mass():
    """Cylinders of all depth d prefixes partition the trees, at every depth"""
    rng = np.random.default_rng(24)
    for _ in range(50):
        automaton = random_prob_automaton(
            rng, BRANCHING, max_states=3, max_priority=2, masses=(0.4,)
        )
        total = total_mass(automaton)
        for depth in range(4):
            cells = complete_partition(automaton.alphabet, depth)
            summed = sum(tree_cylinder_prob(automaton, MeasureQuery(x)) for x in cells)
            assert summed == pytest.approx(total, abs=1e-6)
        assert_acceptance_below_nodiv(automaton)


def test_partitions_add_up_for_stochastic_automata():
    """Depth 3 partitions of larger, nearly stochastic automata with four priorities"""
    rng = np.random.default_rng(27)
    cells = complete_partition(BRANCHING, 3)
    for _ in range(10):
        automaton = random_prob_automaton(
            rng, BRANCHING, max_states=6, max_priority=4, masses=(1.0, 0.9)
        )
        total = total_mass(automaton)
        summed = sum(tree_cylinder_prob(automaton, MeasureQuery(x)) for x in cells)
        assert summed == pytest.approx(total, abs=1e-6 * len(cells))
        assert_acceptance_below_nodiv(automaton, slack=1e-7)


def test_refining_a_run_keeps_its_probability():
    rng = np.random.default_rng(25)
    for _ in range(20):
        automaton = random_prob_automaton(
            rng, BRANCHING, max_states=3, masses=(1.0, 0.8, 0.4)
        )
        run = PartialRun(STAR, automaton.state_names[0])
        for _ in range(3):
            leaves = run.star_leaves()
            if not leaves:
                break
            leaf = int(rng.integers(len(leaves)))
            cells = refine(run, automaton, leaf)
            before = run_cylinder_prob(automaton, MeasureQuery(run))
            after = sum(run_cylinder_prob(automaton, MeasureQuery(x)) for x in cells)
            assert after == pytest.approx(before, abs=1e-6)
            run = cells[int(rng.integers(len(cells)))]


def test_acceptance_solves_its_system(m1):
    system = psi_system(m1)
    solution = solve(system)
    assert is_fixed_point(system, solution, 1e-6)
    assert not is_fixed_point(system, (np.array([0.5]), np.array([1.0])), 1e-6)
    assert accprob(m1).as_dict() == pytest.approx({"x1": 1.0, "x2": 1.0}, abs=1e-6)


def test_solved_systems_are_fixed_points():
    rng = np.random.default_rng(28)
    for _ in range(20):
        automaton = random_prob_automaton(rng, BRANCHING, max_priority=4)
        system = psi_system(automaton)
        assert is_fixed_point(system, solve(system), 1e-6)
