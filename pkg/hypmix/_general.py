"""private module defining the _Dispatcher class, the input checks, the
process-pool map and the exception hierarchy of the package.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from typing import (
    Any,
    Callable,
    Dict,
    Generic,
    List,
    Optional,
    Sequence,
    Tuple,
    TypeVar,
)

__all__: List[str] = [
    "HypmixError",
    "DomainError",
    "BoundaryError",
    "SingularityError",
    "MismatchError",
    "UnsuitablePointError",
    "ConfigError",
    "RejectionBudgetError",
    "InsufficientSignalError",
]

T = TypeVar("T")


class HypmixError(Exception):
    """base class for all errors raised by hypmix."""


class DomainError(HypmixError, ValueError):
    """an argument lies outside the domain of the evaluated map."""


class BoundaryError(DomainError):
    """a point coincides with a partition endpoint (measure zero set)."""


class SingularityError(HypmixError, ArithmeticError):
    """an orbit hits, or comes within the margin of, the singular line
    x = 1, or a value is not representable."""


class MismatchError(HypmixError, ArithmeticError):
    """two independent computations of the same quantity disagree."""


class UnsuitablePointError(HypmixError, ValueError):
    """an orbit needed for the cohomology series hits a boundary."""


class ConfigError(HypmixError, ValueError):
    """invalid configuration value or file."""


class RejectionBudgetError(HypmixError, RuntimeError):
    """a rejection sampler exceeded its budget."""


class InsufficientSignalError(HypmixError, ValueError):
    """too few points above the noise floor to fit a decay rate."""


class _Dispatcher(Generic[T]):
    """class for dispatching functionality of generic class "T"."""

    __slots__ = ("_methods",)
    _methods: Dict[str, T]

    def __init__(self, default: T) -> None:
        """The constructor initializes the default value.

        parameters
        ----------
        default : "T"
            the base class, the default return value when dispatching

        returns
        -------
        None
        """

        self._methods = {"default": default}

    def set_method(self, signature: str, method: T) -> None:
        """Add a method to the list.

        parameters
        ----------
        signature : str
            the reference for dispatching
        method : "T"
            the class to return for a given signature

        returns
        -------
        None
        """

        self._methods[signature] = method

    def signatures(self) -> List[str]:
        """the registered signatures, without "default"."""

        return [key for key in self._methods if key != "default"]

    def dispatch(self, signature: str = "default") -> T:
        """Choose a method from the list

        parameters
        ----------
        signature : str
            the reference for dispatching

        returns
        -------
        "T"
            the requested class
        """

        if signature not in self._methods:
            _check_inputs("signature", self.signatures(), signature)
        return self._methods[signature]


def _check_inputs(parameter: str, options: List[str], value: str) -> None:
    """helper method to check inputs

    if the value is not in the list of options, a ConfigError (a
    ValueError) is thrown.

    parameters
    ----------
    parameter : str
        name of the parameter that is checked
    options : list of str
        a list of allowed options
    value : str
        the value passed as input

    returns
    -------
    None
    """

    if value not in options:
        if len(options) == 1:
            str_options = options[0]
        else:
            str_options = ", ".join(options[:-1]) + " or " + options[-1]
        raise ConfigError(
            f"Input Error: {parameter} should be {str_options}, got {value}."
        )


def _check_range(
    parameter: str,
    value: float,
    lower: Optional[float] = None,
    upper: Optional[float] = None,
    closed: bool = False,
) -> None:
    """helper method to check that a number lies in an interval

    parameters
    ----------
    parameter : str
        name of the parameter that is checked
    value : float
        the value passed as input
    lower, upper : float, optional
        interval bounds, None for unbounded
    closed : bool
        whether the bounds themselves are allowed (default: open)

    returns
    -------
    None
    """

    bad = isinstance(value, bool) or not math.isfinite(value)
    if not bad and lower is not None:
        bad = value < lower if closed else value <= lower
    if not bad and upper is not None:
        bad = value > upper if closed else value >= upper
    if bad:
        left = "[" if closed else "("
        right = "]" if closed else ")"
        low = "-inf" if lower is None else f"{lower}"
        high = "inf" if upper is None else f"{upper}"
        raise ConfigError(
            f"Input Error: {parameter} should be in "
            f"{left}{low}, {high}{right}, got {value}."
        )


def _map_chunks(
    func: Callable[..., Any], args: Sequence[Tuple[Any, ...]], threads: int
) -> List[Any]:
    """func over args, in worker processes when threads > 1; the results
    keep the order of args."""

    if threads <= 1 or len(args) <= 1:
        return [func(*arg) for arg in args]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, *zip(*args)))
