"""Functions to render query results as text. One 'key value' pair per line"""
from typing import Any, Iterable, List

from tabulate import tabulate

from paritylang.fixpoint import Solution
from paritylang.model import Violation
from paritylang.oracles import MonteCarloEstimate
from paritylang.persistence import ParityLangSettings
from paritylang.prob import ProbVector

UNCONVERGED_PREFIX = "UNCONVERGED "

# below this, twelve decimals lose most or all digits of a nonzero value
SMALLEST_FIXED = 1e-12


def format_bool(value: bool) -> str:
    return "true" if value else "false"


def format_probability(value: float) -> str:
    """Twelve decimals, so values line up. Nonzero values too small to show that way
    are written with 12 significant digits instead
    """
    if value != 0.0 and abs(value) < SMALLEST_FIXED:
        return f"{value:.11e}"
    return f"{value:.12f}"


def format_element(value: Any) -> str:
    """Lattice elements: booleans, sets, vectors and tuples of those"""
    if isinstance(value, bool):
        return format_bool(value)
    if isinstance(value, (frozenset, set)):
        return "{" + ",".join(sorted(str(x) for x in value)) + "}"
    if isinstance(value, tuple):
        return "(" + ",".join(format_element(x) for x in value) + ")"
    try:
        return "[" + ",".join(format_probability(float(x)) for x in value) + "]"
    except TypeError:
        return str(value)


def vector_lines(vector: ProbVector, prefix: str = "") -> List[str]:
    return [f"{prefix}{state} {format_probability(v)}" for state, v in vector.items()]


def solution_lines(solution: Solution, prefix: str = "") -> List[str]:
    return [
        f"{prefix}{variable} {format_element(value)}"
        for variable, value in zip(solution.variables, solution.values)
    ]


def unconverged_lines(last_iterate: Any) -> List[str]:
    """What is known after a fixpoint ran out of iterations, every line prefixed"""
    if isinstance(last_iterate, ProbVector):
        return vector_lines(last_iterate, prefix=UNCONVERGED_PREFIX)
    if isinstance(last_iterate, Solution):
        return solution_lines(last_iterate, prefix=UNCONVERGED_PREFIX)
    if isinstance(last_iterate, dict):
        return [
            f"{UNCONVERGED_PREFIX}{key} {format_probability(float(value))}"
            for key, value in last_iterate.items()
        ]
    return [f"{UNCONVERGED_PREFIX}value {format_element(last_iterate)}"]


def estimate_lines(estimate: MonteCarloEstimate) -> List[str]:
    return [
        "estimand prefix-generation-without-divergence",
        f"estimate {format_probability(estimate.estimate)}",
        f"stderr {format_probability(estimate.standard_error)}",
        f"hits {estimate.hits}",
        f"samples {estimate.samples}",
        f"seed {estimate.seed}",
        f"depth_cap {estimate.depth_cap}",
    ]


def violation_table(violations: Iterable[Violation]) -> str:
    table = [
        {"code": x.code, "location": x.location, "message": x.message}
        for x in violations
    ]
    return tabulate(table, headers="keys")


def settings_table(settings: ParityLangSettings) -> str:
    table = []
    for section, values in settings.model_dump(mode="json", exclude={"path"}).items():
        for key, value in values.items():
            table.append({"setting": f"{section}.{key}", "value": value})
    return tabulate(table, headers="keys")
