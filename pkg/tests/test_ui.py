from paritylang.fixpoint import Solution
from paritylang.model import Violation
from paritylang.oracles import MonteCarloEstimate
from paritylang.persistence import ParityLangSettings
from paritylang.prob import ProbVector
from paritylang.ui import (
    estimate_lines,
    format_element,
    format_probability,
    settings_table,
    unconverged_lines,
    vector_lines,
    violation_table,
)


def test_format_element():
    assert format_element(True) == "true"
    assert format_element(frozenset({"y", "x"})) == "{x,y}"
    assert format_element((False, frozenset())) == "(false,{})"
    assert format_element([0.5, 1]) == "[0.500000000000,1.000000000000]"
    assert format_element(3) == "3"


def test_vector_lines():
    vector = ProbVector(("x", "y"), [0.25, 1.0])
    assert vector_lines(vector) == ["x 0.250000000000", "y 1.000000000000"]


def test_unconverged_lines():
    vector = ProbVector(("x",), [0.125])
    assert unconverged_lines(vector) == ["UNCONVERGED x 0.125000000000"]
    solution = Solution(variables=("u1", "u2"), values=(True, frozenset({"a"})))
    assert unconverged_lines(solution) == [
        "UNCONVERGED u1 true",
        "UNCONVERGED u2 {a}",
    ]
    assert unconverged_lines({"s0": 0.5}) == ["UNCONVERGED s0 0.500000000000"]
    assert unconverged_lines(False) == ["UNCONVERGED value false"]


def test_estimate_lines():
    lines = estimate_lines(
        MonteCarloEstimate(
            estimate=0.5,
            standard_error=0.05,
            samples=100,
            hits=50,
            seed=1,
            depth_cap=30,
        )
    )
    assert lines[0] == "estimand prefix-generation-without-divergence"
    assert "hits 50" in lines
    assert "depth_cap 30" in lines


def test_tables():
    table = violation_table(
        [Violation(code="mass-exceeds-one", location="state x", message="1.5 > 1")]
    )
    assert "mass-exceeds-one" in table
    assert "state x" in table
    assert "solver.max_iterations" in settings_table(ParityLangSettings())


def test_format_probability():
    assert format_probability(1.0) == "1.000000000000"
    assert format_probability(0.0) == "0.000000000000"
    assert format_probability(0.125) == "0.125000000000"
    assert format_probability(1e-15) == "1.00000000000e-15"
    assert format_probability(2.5e-13) == "2.50000000000e-13"
    assert format_probability(1e-12) == "0.000000000001"
