"""Equational systems of alternating least and greatest fixed points over lattices.

An equational system is an ordered list of equations ``u_i =_eta f_i(u_1, .., u_n)``
where eta is mu (least) or nu (greatest). The order of the equations matters. They
are eliminated left to right: the first equation is solved innermost, as a function
of all the other variables, and the last equation outermost. Closed values are then
propagated back from right to left.

Two solving regimes are supported

* exact-finite: finite lattices (two-point, powersets and products of those). Kleene
  iteration stops when two successive iterates are equal, which always happens.
* tolerant-omega: also allows unit-interval vectors. Iteration stops when the
  sup-norm of the step drops below a tolerance. The result is an approximation of the
  omega-limit, and the residual is reported in the diagnostics.
"""
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import (
    Any,
    Callable,
    Hashable,
    Iterator,
    List,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from paritylang.exceptions import (
    ContractViolationError,
    PolicyError,
    SystemDefinitionError,
    UnconvergedError,
)
from paritylang.logs import get_module_logger

logger = get_module_logger("fixpoint")

Element = Any


class Polarity(str, Enum):
    mu = "mu"
    nu = "nu"

    @classmethod
    def for_priority(cls, priority: int) -> "Polarity":
        """Odd priorities are least fixed points, even priorities greatest"""
        return cls.mu if priority % 2 else cls.nu


class LatticeKind(str, Enum):
    two_point = "two-point"
    powerset = "powerset"
    interval_vector = "interval-vector"
    product = "product"


class Lattice(ABC):
    """A complete lattice with the handful of operations the solver needs"""

    kind: LatticeKind

    @property
    @abstractmethod
    def finite(self) -> bool:
        pass

    @abstractmethod
    def bottom(self) -> Element:
        pass

    @abstractmethod
    def top(self) -> Element:
        pass

    @abstractmethod
    def leq(self, a: Element, b: Element, slack: float = 0.0) -> bool:
        """Partial order. Slack is only meaningful for interval vectors"""

    @abstractmethod
    def join(self, a: Element, b: Element) -> Element:
        pass

    @abstractmethod
    def meet(self, a: Element, b: Element) -> Element:
        pass

    @abstractmethod
    def contains(self, a: Element) -> bool:
        pass

    @abstractmethod
    def random_element(self, rng: np.random.Generator) -> Element:
        pass

    def height(self) -> Optional[int]:
        """Number of strict steps in a longest chain. None for infinite lattices"""
        return None

    def equal(self, a: Element, b: Element) -> bool:
        return self.leq(a, b) and self.leq(b, a)

    def distance(self, a: Element, b: Element) -> float:
        """Zero for equal elements. Finite lattices have no metric beyond that"""
        return 0.0 if self.equal(a, b) else math.inf


@dataclass(frozen=True)
class TwoPointLattice(Lattice):
    """Booleans, False below True"""

    name: str = "2"
    kind = LatticeKind.two_point

    @property
    def finite(self) -> bool:
        return True

    def bottom(self) -> bool:
        return False

    def top(self) -> bool:
        return True

    def leq(self, a, b, slack=0.0) -> bool:
        return (not a) or bool(b)

    def join(self, a, b) -> bool:
        return bool(a or b)

    def meet(self, a, b) -> bool:
        return bool(a and b)

    def contains(self, a) -> bool:
        return isinstance(a, (bool, np.bool_))

    def random_element(self, rng) -> bool:
        return bool(rng.integers(2))

    def height(self) -> int:
        return 1

    def equal(self, a, b) -> bool:
        return bool(a) == bool(b)


@dataclass(frozen=True)
class PowersetLattice(Lattice):
    """All subsets of a finite carrier, ordered by inclusion. Elements are frozensets"""

    carrier: Tuple[Hashable, ...]
    name: str = ""
    kind = LatticeKind.powerset
    _members: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "carrier", tuple(self.carrier))
        object.__setattr__(self, "_members", frozenset(self.carrier))

    @property
    def finite(self) -> bool:
        return True

    def bottom(self) -> frozenset:
        return frozenset()

    def top(self) -> frozenset:
        return self._members

    def leq(self, a, b, slack=0.0) -> bool:
        return a <= b

    def join(self, a, b) -> frozenset:
        return a | b

    def meet(self, a, b) -> frozenset:
        return a & b

    def contains(self, a) -> bool:
        return isinstance(a, frozenset) and a <= self._members

    def random_element(self, rng) -> frozenset:
        return frozenset(x for x in self.carrier if rng.random() < 0.5)

    def height(self) -> int:
        return len(self.carrier)

    def equal(self, a, b) -> bool:
        return a == b


@dataclass(frozen=True)
class IntervalVectorLattice(Lattice):
    """Vectors in [0,1]^carrier with the pointwise order. Elements are numpy arrays"""

    carrier: Tuple[str, ...]
    name: str = ""
    kind = LatticeKind.interval_vector

    def __post_init__(self):
        object.__setattr__(self, "carrier", tuple(self.carrier))

    @property
    def finite(self) -> bool:
        return False

    def bottom(self) -> np.ndarray:
        return np.zeros(len(self.carrier))

    def top(self) -> np.ndarray:
        return np.ones(len(self.carrier))

    def leq(self, a, b, slack=0.0) -> bool:
        return bool(np.all(np.asarray(a) <= np.asarray(b) + slack))

    def join(self, a, b) -> np.ndarray:
        return np.maximum(a, b)

    def meet(self, a, b) -> np.ndarray:
        return np.minimum(a, b)

    def contains(self, a) -> bool:
        a = np.asarray(a, dtype=float)
        return (
            a.shape == (len(self.carrier),)
            and bool(np.all(a >= 0.0))
            and bool(np.all(a <= 1.0))
        )

    def random_element(self, rng) -> np.ndarray:
        return rng.random(len(self.carrier))

    def equal(self, a, b) -> bool:
        return bool(np.array_equal(a, b))

    def distance(self, a, b) -> float:
        """Sup-norm of the difference"""
        if not len(self.carrier):
            return 0.0
        return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


@dataclass(frozen=True)
class ProductLattice(Lattice):
    """Finite product, ordered componentwise. Elements are tuples"""

    components: Tuple[Lattice, ...]
    name: str = ""
    kind = LatticeKind.product

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))

    @property
    def finite(self) -> bool:
        return all(x.finite for x in self.components)

    def bottom(self) -> tuple:
        return tuple(x.bottom() for x in self.components)

    def top(self) -> tuple:
        return tuple(x.top() for x in self.components)

    def leq(self, a, b, slack=0.0) -> bool:
        return all(
            lat.leq(x, y, slack) for lat, x, y in zip(self.components, a, b)
        )

    def join(self, a, b) -> tuple:
        return tuple(lat.join(x, y) for lat, x, y in zip(self.components, a, b))

    def meet(self, a, b) -> tuple:
        return tuple(lat.meet(x, y) for lat, x, y in zip(self.components, a, b))

    def contains(self, a) -> bool:
        return (
            isinstance(a, tuple)
            and len(a) == len(self.components)
            and all(lat.contains(x) for lat, x in zip(self.components, a))
        )

    def random_element(self, rng) -> tuple:
        return tuple(x.random_element(rng) for x in self.components)

    def height(self) -> Optional[int]:
        heights = [x.height() for x in self.components]
        if any(h is None for h in heights):
            return None
        return sum(heights)

    def equal(self, a, b) -> bool:
        return all(lat.equal(x, y) for lat, x, y in zip(self.components, a, b))

    def distance(self, a, b) -> float:
        return max(
            (lat.distance(x, y) for lat, x, y in zip(self.components, a, b)),
            default=0.0,
        )


@dataclass(frozen=True)
class Equation:
    """``variable =_polarity function(assignment)``

    function takes the full assignment (one element per equation, in system order)
    and returns an element of lattice. It must be monotone in every argument.
    """

    variable: str
    polarity: Polarity
    lattice: Lattice
    function: Callable[[Tuple[Element, ...]], Element]


@dataclass(frozen=True)
class EquationalSystem:
    equations: Tuple[Equation, ...]

    def __post_init__(self):
        object.__setattr__(self, "equations", tuple(self.equations))
        seen = set()
        for equation in self.equations:
            if equation.variable in seen:
                raise SystemDefinitionError(
                    f"Variable '{equation.variable}' is defined twice"
                )
            seen.add(equation.variable)

    def __len__(self):
        return len(self.equations)

    @property
    def variables(self) -> Tuple[str, ...]:
        return tuple(x.variable for x in self.equations)


class SolverMode(str, Enum):
    exact_finite = "exact-finite"
    tolerant_omega = "tolerant-omega"


class SolverPolicy(BaseModel):
    """How far to iterate.

    tolerance is the sup-norm step below which an interval-vector chain counts as
    stable. slack is the decrease per step an interval-vector chain may show before
    it is reported as a monotonicity violation; nested fixpoints are truncated at
    tolerance, so outer chains are only monotone up to that truncation error.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    tolerance: float = Field(default=1e-9, ge=0.0)
    max_iterations: int = Field(default=1_000_000, gt=0)
    mode: SolverMode = SolverMode.tolerant_omega
    slack: float = Field(default=1e-6, ge=0.0)

    @model_validator(mode="after")
    def check_tolerance(self) -> "SolverPolicy":
        if not math.isfinite(self.tolerance):
            raise ValueError("tolerance must be finite")
        if self.mode == SolverMode.tolerant_omega and self.tolerance == 0.0:
            raise ValueError("tolerance 0 is only allowed in exact-finite mode")
        return self

    @classmethod
    def exact(cls, max_iterations: int = 1_000_000) -> "SolverPolicy":
        return cls(
            mode=SolverMode.exact_finite, tolerance=0.0, max_iterations=max_iterations
        )


DEFAULT_POLICY = SolverPolicy()
EXACT_POLICY = SolverPolicy.exact()


def check_policy(lattice: Lattice, policy: SolverPolicy):
    """Raises PolicyError if policy cannot be used on lattice"""
    if policy.mode == SolverMode.exact_finite and not lattice.finite:
        raise PolicyError(
            f"exact-finite mode needs a finite lattice, got {lattice.kind.value}"
        )


@dataclass(frozen=True)
class Iteration:
    """Outcome of a single Kleene iteration"""

    value: Element
    iterations: int
    converged: bool
    residual: float


@dataclass(frozen=True)
class FixpointDiagnostics:
    """What it took to solve one equation, summed over all its interim solutions"""

    equation: int
    variable: str
    polarity: Polarity
    fixpoints: int
    iterations: int
    converged: bool
    max_residual: float


@dataclass
class _Tally:
    fixpoints: int = 0
    iterations: int = 0
    converged: bool = True
    max_residual: float = 0.0

    def record(self, iteration: Iteration):
        self.fixpoints += 1
        self.iterations += iteration.iterations
        self.converged = self.converged and iteration.converged
        self.max_residual = max(self.max_residual, iteration.residual)


@dataclass(frozen=True)
class Solution:
    variables: Tuple[str, ...]
    values: Tuple[Element, ...]
    diagnostics: Tuple[FixpointDiagnostics, ...] = ()

    def __getitem__(self, key: Union[int, str]) -> Element:
        if isinstance(key, str):
            return self.values[self.variables.index(key)]
        return self.values[key]

    def __len__(self):
        return len(self.values)

    @property
    def converged(self) -> bool:
        return all(x.converged for x in self.diagnostics)


def kleene_chain(
    function: Callable[[Element], Element], lattice: Lattice, polarity: Polarity
) -> Iterator[Element]:
    """Bottom, f(bottom), f(f(bottom)).. for mu; the same from top for nu"""
    current = lattice.bottom() if polarity == Polarity.mu else lattice.top()
    while True:
        yield current
        current = function(current)


def _describe(equation: Optional[int]) -> str:
    return "" if equation is None else f" in equation {equation}"


def _iterate(
    function: Callable[[Element], Element],
    lattice: Lattice,
    polarity: Polarity,
    policy: SolverPolicy,
    equation: Optional[int] = None,
) -> Iteration:
    """Run a Kleene chain until it stabilises or the budget runs out

    Raises
    ------
    ContractViolationError
        If the chain moves against its direction
    """
    slack = 0.0 if lattice.finite else policy.slack
    chain = kleene_chain(function, lattice, polarity)
    current = next(chain)
    for step, following in enumerate(chain, start=1):
        if polarity == Polarity.mu:
            in_order = lattice.leq(current, following, slack)
        else:
            in_order = lattice.leq(following, current, slack)
        if not in_order:
            raise ContractViolationError(
                f"{polarity.value}-chain moved against its direction at step "
                f"{step}{_describe(equation)}: function is not monotone",
                equation=equation,
            )
        residual = lattice.distance(current, following)
        if lattice.finite:
            stable = residual == 0.0
        else:
            stable = residual < policy.tolerance
        if stable:
            return Iteration(following, step, True, residual)
        if step >= policy.max_iterations:
            return Iteration(following, step, False, residual)
        current = following

    raise AssertionError("kleene_chain is infinite")  # pragma: no cover


def _fixpoint(function, lattice, polarity, policy) -> Element:
    check_policy(lattice, policy)
    iteration = _iterate(function, lattice, polarity, policy)
    if not iteration.converged:
        raise UnconvergedError(
            f"{polarity.value}-iteration did not converge in {iteration.iterations} "
            f"steps (last step {iteration.residual:.3g})",
            last_iterate=iteration.value,
        )
    logger.debug(f"{polarity.value}-fixpoint after {iteration.iterations} steps")
    return iteration.value


def lfp(
    function: Callable[[Element], Element],
    lattice: Lattice,
    policy: SolverPolicy = DEFAULT_POLICY,
) -> Element:
    """Least fixed point by Kleene iteration from bottom

    Raises
    ------
    UnconvergedError
        If max_iterations is reached. The last iterate is attached.
    ContractViolationError
        If an iterate decreases
    PolicyError
        If policy does not fit lattice
    """
    return _fixpoint(function, lattice, Polarity.mu, policy)


def gfp(
    function: Callable[[Element], Element],
    lattice: Lattice,
    policy: SolverPolicy = DEFAULT_POLICY,
) -> Element:
    """Greatest fixed point by Kleene iteration from top. See lfp()"""
    return _fixpoint(function, lattice, Polarity.nu, policy)


def _solve_prefix(
    system: EquationalSystem,
    count: int,
    suffix: Tuple[Element, ...],
    policy: SolverPolicy,
    tallies: List[_Tally],
) -> Tuple[Element, ...]:
    """Interim solutions of the first count equations, given values for the others"""
    if count == 0:
        return ()
    index = count - 1
    equation = system.equations[index]

    def reduced(value):
        inner = _solve_prefix(system, index, (value,) + suffix, policy, tallies)
        return equation.function(inner + (value,) + suffix)

    iteration = _iterate(
        reduced, equation.lattice, equation.polarity, policy, equation=index
    )
    tallies[index].record(iteration)
    inner = _solve_prefix(system, index, (iteration.value,) + suffix, policy, tallies)
    return inner + (iteration.value,)


def solve(
    system: EquationalSystem, policy: SolverPolicy = DEFAULT_POLICY
) -> Solution:
    """Solve system by left-to-right elimination with interim solutions

    Interim solutions are recomputed every time they are needed.

    Raises
    ------
    UnconvergedError
        If any fixpoint hit max_iterations. last_iterate holds the full Solution
        computed from the truncated iterates, equation the first offending index.
    ContractViolationError
        If a chain moved against its direction, labelled with the equation index
    PolicyError
        If policy does not fit one of the lattices
    """
    for equation in system.equations:
        check_policy(equation.lattice, policy)

    tallies = [_Tally() for _ in system.equations]
    values = _solve_prefix(system, len(system), (), policy, tallies)
    diagnostics = tuple(
        FixpointDiagnostics(
            equation=index,
            variable=equation.variable,
            polarity=equation.polarity,
            fixpoints=tally.fixpoints,
            iterations=tally.iterations,
            converged=tally.converged,
            max_residual=tally.max_residual,
        )
        for index, (equation, tally) in enumerate(zip(system.equations, tallies))
    )
    solution = Solution(
        variables=system.variables, values=values, diagnostics=diagnostics
    )
    logger.debug(
        f"Solved {len(system)} equations with "
        f"{sum(x.iterations for x in diagnostics)} iteration steps"
    )

    unconverged = [x.equation for x in diagnostics if not x.converged]
    if unconverged:
        raise UnconvergedError(
            f"Equation {unconverged[0]} did not converge within "
            f"{policy.max_iterations} iterations",
            last_iterate=solution,
            equation=unconverged[0],
        )
    return solution


def is_fixed_point(
    system: EquationalSystem,
    candidate: Union[Solution, Sequence[Element]],
    tolerance: float = 0.0,
) -> bool:
    """True if every equation maps the candidate assignment to its own value

    Exact on finite lattices, within tolerance (sup-norm) on interval vectors. This
    is a necessary condition for being the solution, not a sufficient one.

    Raises
    ------
    SystemDefinitionError
        If candidate does not have one value per equation
    """
    values = tuple(candidate.values if isinstance(candidate, Solution) else candidate)
    if len(values) != len(system):
        raise SystemDefinitionError(
            f"Candidate has {len(values)} values for {len(system)} equations"
        )
    for equation, value in zip(system.equations, values):
        image = equation.function(values)
        if equation.lattice.finite:
            if not equation.lattice.equal(image, value):
                return False
        elif equation.lattice.distance(image, value) > tolerance:
            return False
    return True


def audit_monotonicity(
    system: EquationalSystem, samples: int = 100, seed: int = 0
) -> List[int]:
    """Spot-check the monotonicity contract on random ordered pairs of assignments

    Returns
    -------
    List[int]
        Indices of equations for which some a <= b gave f(a) not <= f(b)
    """
    rng = np.random.default_rng(seed)
    lattices = [x.lattice for x in system.equations]
    violating = set()
    for _ in range(samples):
        low = tuple(x.random_element(rng) for x in lattices)
        high = tuple(
            lat.join(x, lat.random_element(rng)) for lat, x in zip(lattices, low)
        )
        for index, equation in enumerate(system.equations):
            images = equation.function(low), equation.function(high)
            if not equation.lattice.leq(*images):
                violating.add(index)
    if violating:
        logger.warning(f"Monotonicity audit failed for equations {sorted(violating)}")
    return sorted(violating)
