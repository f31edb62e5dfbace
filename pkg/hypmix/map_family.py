"""definition of the map family and of the assumption checker

This module defines the class MapFamily, the modular-surface instance
f0(x) = x / (1 - x), the tail sequences omega and the function
check_assumptions grading (A1)-(A6) and (B) at sample points.
"""

import logging
import math
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.special import zeta  # type: ignore [import]

from hypmix._general import (
    ConfigError,
    DomainError,
    SingularityError,
    _Dispatcher,
)
from hypmix._mobius import _is_exact, _Mobius
from hypmix.parameters_settings import FamilySettings, OmegaSpec, hm_params

__all__: List[str] = [
    "AssumptionReport",
    "MapFamily",
    "OmegaSequence",
    "Verdict",
    "check_assumptions",
    "default_grid",
    "f0_eval",
    "family_from_settings",
    "g0_eval",
    "modular_family",
]

logger = logging.getLogger(__name__)

Number = Union[int, float, Fraction]


class _OmegaFormula:  # pragma: no cover
    """class for named omega sequences m -> omega_m

    Abstract Base Class. The index m is the base index, the slots of a
    family shift it (see OmegaSequence).
    """

    @staticmethod
    def value(m: Any) -> Any:
        """the value at base index m (scalar or array)."""

        raise NotImplementedError

    @staticmethod
    def value_exact(m: int) -> Fraction:
        """the exact value at base index m."""

        raise NotImplementedError

    @staticmethod
    def tail(m0: int, power: float) -> float:
        """the sum of omega_m ** power over m >= m0."""

        raise NotImplementedError


class _OmegaInverseSquare(_OmegaFormula):
    """class for the sequence 1 / m^2."""

    @staticmethod
    def value(m: Any) -> Any:
        m = np.asarray(m, dtype=float)
        result = 1.0 / (m * m)
        return float(result) if result.ndim == 0 else result

    @staticmethod
    def value_exact(m: int) -> Fraction:
        return Fraction(1, m * m)

    @staticmethod
    def tail(m0: int, power: float) -> float:
        if 2.0 * power <= 1.0:
            return math.inf
        return float(zeta(2.0 * power, m0))


_dp_omega: _Dispatcher[_OmegaFormula] = _Dispatcher(_OmegaFormula())
"""dispatcher to choose a named omega sequence.

_dp_omega.dispatch("inverse_square") returns the class
_OmegaInverseSquare.
"""
_dp_omega.set_method("inverse_square", _OmegaInverseSquare())


class OmegaSequence:
    """class for the tail sequences omega^(1), omega^(2)

    slot 1 is indexed from n = 2 with omega^(1)_n = omega_{n-1}, slot 2
    from n = 1 with omega^(2)_n = omega_{n+1}, omega being the named base
    sequence. An explicit table lists the values from the first index on.

    Attributes
    ----------
    name : str
        the base sequence name, or "table"
    first : int
        the first index of the slot
    shift : int
        base index minus slot index
    table : tuple of float
        the explicit values (empty for named sequences)
    """

    __slots__ = ("name", "first", "shift", "table", "_formula")
    name: str
    first: int
    shift: int
    table: Tuple[float, ...]
    _formula: _OmegaFormula

    def __init__(self, spec: OmegaSpec, slot: int) -> None:
        """constructor for the OmegaSequence class.

        parameters
        ----------
        spec : str or tuple of float
            name of the base sequence or explicit table
        slot : int
            1 or 2

        returns
        -------
        None

        examples
        --------
        >>> OmegaSequence("inverse_square", 1).value(3)
        0.25
        """

        self.first = 2 if slot == 1 else 1
        self.shift = -1 if slot == 1 else 1
        if isinstance(spec, str):
            self.name = spec
            self.table = ()
            self._formula = _dp_omega.dispatch(spec)
        else:
            self.name = "table"
            self.table = tuple(float(value) for value in spec)
            self._formula = _dp_omega.dispatch()

    def _check_index(self, n_hi: int) -> None:
        if self.table and n_hi - self.first >= len(self.table):
            raise ConfigError(
                f"Input Error: omega table should have at least "
                f"{n_hi - self.first + 1} values, got {len(self.table)}."
            )

    def value(self, n: Any) -> Any:
        """omega_n for a scalar or an array of indices."""

        if not self.table:
            return self._formula.value(np.asarray(n) + self.shift)
        n_arr = np.asarray(n, dtype=int)
        self._check_index(int(np.max(n_arr)))
        result = np.asarray(self.table)[n_arr - self.first]
        return float(result) if result.ndim == 0 else result

    def value_exact(self, n: int) -> Fraction:
        if not self.table:
            return self._formula.value_exact(n + self.shift)
        return Fraction(self.value(n))

    def partial_sum(self, n_hi: int, power: float = 1.0) -> float:
        """sum of omega_n ** power for first <= n <= n_hi."""

        if n_hi < self.first:
            return 0.0
        values = self.value(np.arange(self.first, n_hi + 1))
        return math.fsum(np.power(values, power))

    def tail(self, n0: int, power: float = 1.0) -> float:
        """sum of omega_n ** power for n >= n0."""

        if self.table:
            raise ConfigError(
                "Input Error: omega should be a named sequence for "
                "infinite sums, got an explicit table."
            )
        return self._formula.tail(max(n0, self.first) + self.shift, power)

    def total(self, power: float = 1.0) -> float:
        return self.tail(self.first, power)


class MapFamily:
    """class for one instance of the model

    f0 is a Moebius map (a x + b) / (c x + d) with b = 0, c = -d, i.e.
    an increasing bijection (0,1) -> R+; g0 is its inverse.

    Attributes
    ----------
    name : str
        label of the family
    f0_map, g0_map : _Mobius
        the maps f0 and g0
    rho0 : float
        roof-function scale
    omega1, omega2 : OmegaSequence
        the tail sequences of assumption (B)
    ci1, ci2 : float
        the constants of assumption (B)
    sigma1, sigma2 : float
        the tail exponents of assumption (B)
    exact_rational : bool
        whether f0 has integer coefficients (exact Fraction path)
    """

    # pylint: disable=too-many-instance-attributes

    __slots__ = (
        "name",
        "f0_map",
        "g0_map",
        "f0_float",
        "g0_float",
        "rho0",
        "omega1",
        "omega2",
        "ci1",
        "ci2",
        "sigma1",
        "sigma2",
        "exact_rational",
        "_powers",
        "_tables",
    )
    name: str
    f0_map: _Mobius
    g0_map: _Mobius
    f0_float: _Mobius
    g0_float: _Mobius
    rho0: float
    omega1: OmegaSequence
    omega2: OmegaSequence
    ci1: float
    ci2: float
    sigma1: float
    sigma2: float
    exact_rational: bool
    _powers: Dict[Tuple[str, int], _Mobius]
    _tables: Dict[str, np.ndarray]

    def __init__(
        self,
        f0_coeffs: Tuple[Number, Number, Number, Number] = (1, 0, -1, 1),
        rho0: float = 0.5,
        omega1: OmegaSpec = "inverse_square",
        omega2: OmegaSpec = "inverse_square",
        ci1: float = 1.0,
        ci2: float = 4.0,
        sigma1: float = 0.49,
        sigma2: float = 0.49,
        name: str = "modular",
    ) -> None:
        """constructor for the MapFamily class.

        the arguments are validated through FamilySettings.

        returns
        -------
        None

        examples
        --------
        >>> family = MapFamily()
        >>> family.f0(Fraction(1, 2))
        (Fraction(1, 1), Fraction(4, 1), Fraction(16, 1))
        """

        # pylint: disable=too-many-arguments

        settings = FamilySettings(
            name="modular" if tuple(f0_coeffs) == (1, 0, -1, 1) else "mobius",
            f0_coeffs=tuple(f0_coeffs),
            rho0=rho0,
            omega1=omega1,
            omega2=omega2,
            ci1=ci1,
            ci2=ci2,
            sigma1=sigma1,
            sigma2=sigma2,
        )
        self.name = name
        self.f0_map = _Mobius(*settings.f0_coeffs)
        self.exact_rational = self.f0_map.is_integral()
        if self.exact_rational:
            self.f0_map = self.f0_map.exact()
        self.g0_map = self.f0_map.inverse()
        self.f0_float = _Mobius(
            *(float(coef) for coef in self.f0_map.coefficients())
        )
        self.g0_float = self.f0_float.inverse()
        self.rho0 = rho0
        self.omega1 = OmegaSequence(settings.omega1, 1)
        self.omega2 = OmegaSequence(settings.omega2, 2)
        self.ci1 = ci1
        self.ci2 = ci2
        self.sigma1 = sigma1
        self.sigma2 = sigma2
        self._powers = {}
        self._tables = {}

    def __repr__(self) -> str:
        return f"MapFamily({self.name}, f0={self.f0_map!r}, rho0={self.rho0})"

    def __getstate__(self) -> Dict[str, Any]:
        state = {key: getattr(self, key) for key in self.__slots__}
        state["_powers"] = {}
        state["_tables"] = {}
        return state

    def __setstate__(self, state: Dict[str, Any]) -> None:
        for key, value in state.items():
            setattr(self, key, value)

    def is_modular(self) -> bool:
        """whether f0 is x / (1 - x)."""

        a, b, c, d = self.f0_map.coefficients()
        return b == 0 and a == d and c == -d

    def _coerce(self, x: Any) -> Any:
        if isinstance(x, Fraction) and not self.exact_rational:
            return float(x)
        if isinstance(x, int) and not isinstance(x, bool):
            return Fraction(x) if self.exact_rational else float(x)
        return x

    def mobius(self, which: str, z: Any = None) -> _Mobius:
        """f0 or g0, with Fraction coefficients only for exact arguments."""

        exact = _is_exact(z) and self.exact_rational
        if which == "f0":
            return self.f0_map if exact else self.f0_float
        return self.g0_map if exact else self.g0_float

    def f0(self, x: Any) -> Tuple[Any, Any, Any]:
        """value, first and second derivative of f0 at x in (0,1)."""

        x = self._coerce(x)
        if np.any(np.asarray(x <= 0)) or np.any(np.asarray(x >= 1)):
            raise DomainError(f"Input Error: x should be in (0, 1), got {x}.")
        value, d1, d2 = self.mobius("f0", x).evaluate(x)
        if isinstance(x, float) and not math.isfinite(d2):
            raise SingularityError(f"f0 is not representable at x = {x}.")
        return value, d1, d2

    def g0(self, y: Any) -> Tuple[Any, Any, Any]:
        """value, first and second derivative of g0 at y > 0."""

        y = self._coerce(y)
        if np.any(np.asarray(y <= 0)):
            raise DomainError(f"Input Error: y should be > 0, got {y}.")
        return self.mobius("g0", y).evaluate(y)

    def f0_power(self, n: int, exact: Optional[bool] = None) -> _Mobius:
        """the Moebius map f0^n (cached)."""

        return self._power("f0", n, exact)

    def g0_power(self, n: int, exact: Optional[bool] = None) -> _Mobius:
        """the Moebius map g0^n (cached)."""

        return self._power("g0", n, exact)

    def _power(self, which: str, n: int, exact: Optional[bool]) -> _Mobius:
        exact = self.exact_rational if exact is None else exact
        exact = exact and self.exact_rational
        key = (which + ("" if exact else "_float"), n)
        if key not in self._powers:
            if exact:
                base = self.f0_map if which == "f0" else self.g0_map
            else:
                base = self.f0_float if which == "f0" else self.g0_float
            if len(self._powers) > 4096:
                self._powers.clear()
            self._powers[key] = base.power(n)
        return self._powers[key]

    def power_table(self, which: str) -> np.ndarray:
        """float coefficients of f0^n or g0^n, n <= orbit_table_size."""

        if which not in self._tables:
            base = self.f0_map if which == "f0" else self.g0_map
            self._tables[which] = base.power_table(hm_params.orbit_table_size)
        return self._tables[which]

    def g0_orbit(self) -> np.ndarray:
        """the decreasing floats g0^j(1), j = 0, ..., orbit_table_size."""

        if "orbit" not in self._tables:
            table = self.power_table("g0")
            self._tables["orbit"] = (table[:, 0] + table[:, 1]) / (
                table[:, 2] + table[:, 3]
            )
        return self._tables["orbit"]

    def adler_ratio(self, x: Any) -> Any:
        """f0'' / f0'^2 at x, which is affine in x for a Moebius f0."""

        mobius = self.mobius("f0", x)
        _, _, c, d = mobius.coefficients()
        det = mobius.det
        return -2 * c * (c * x + d) / det

    def adler_constant(self) -> float:
        """C_A, the sup over (0,1) of f0'' / f0'^2 (attained at an end)."""

        return float(max(self.adler_ratio(0), self.adler_ratio(1)))

    def delta_lo(self) -> Any:
        """g0(1), the left end of the inducing interval."""

        return self.g0_map(Fraction(1) if self.exact_rational else 1.0)


def family_from_settings(settings: FamilySettings) -> MapFamily:
    """build a MapFamily from validated [family] settings."""

    return MapFamily(
        f0_coeffs=settings.f0_coeffs,  # type: ignore[arg-type]
        rho0=settings.rho0,
        omega1=settings.omega1,
        omega2=settings.omega2,
        ci1=settings.ci1,
        ci2=settings.ci2,
        sigma1=settings.sigma1,
        sigma2=settings.sigma2,
        name=settings.name,
    )


def modular_family() -> MapFamily:
    """the geodesic-flow instance: f0(x) = x / (1 - x), rho0 = 1/2,
    omega^(1)_n = 1/(n-1)^2, omega^(2)_n = 1/(n+1)^2, C_I = (1, 4).

    examples
    --------
    >>> modular_family().adler_constant()
    2.0
    """

    return MapFamily()


def f0_eval(family: MapFamily, x: Any) -> Tuple[Any, Any, Any]:
    """f0(x), f0'(x), f0''(x)

    parameters
    ----------
    family : MapFamily
        the family
    x : float or Fraction
        a point of (0, 1)

    returns
    -------
    (value, d1, d2)

    examples
    --------
    >>> f0_eval(modular_family(), 0.5)
    (1.0, 4.0, 16.0)
    """

    return family.f0(x)


def g0_eval(family: MapFamily, y: Any) -> Tuple[Any, Any, Any]:
    """g0(y), g0'(y), g0''(y) for y > 0.

    examples
    --------
    >>> g0_eval(modular_family(), 1.0)
    (0.5, 0.25, -0.25)
    """

    return family.g0(y)


def default_grid(eps: float = 1e-8, n: int = 10_000) -> np.ndarray:
    """n points of (eps, 1 - eps), geometric towards both ends."""

    half = n // 2
    left = np.geomspace(eps, 0.5, half, endpoint=False)
    right = 1.0 - np.geomspace(eps, 0.5, n - half)[::-1]
    return np.concatenate([left, right])


class Verdict:
    """class for the verdict on one assumption

    Attributes
    ----------
    status : str
        pass, fail or ungraded-trend
    witness : float or int, optional
        a point violating the assumption (always set on fail)
    value : float, optional
        an estimated constant or sum
    """

    # pylint: disable=too-few-public-methods

    __slots__ = ("status", "witness", "value")
    status: str
    witness: Optional[Number]
    value: Optional[float]

    def __init__(
        self,
        status: str,
        witness: Optional[Number] = None,
        value: Optional[float] = None,
    ) -> None:
        if status == "fail" and witness is None:
            raise ValueError("Input Error: a fail verdict needs a witness.")
        self.status = status
        self.witness = witness
        self.value = value

    def __repr__(self) -> str:
        return f"Verdict({self.status}, witness={self.witness})"


class AssumptionReport:
    """class for the outcome of check_assumptions

    Attributes
    ----------
    verdicts : dict
        assumption name (A1, ..., B(iii)) -> Verdict
    adler_estimate : float
        grid sup of f0'' / f0'^2
    omega_sums : (float, float)
        partial sums of omega^(i) ** (1 - sigma_i) up to n_max
    """

    # pylint: disable=too-few-public-methods

    __slots__ = ("verdicts", "adler_estimate", "omega_sums")
    verdicts: Dict[str, Verdict]
    adler_estimate: float
    omega_sums: Tuple[float, float]

    def __init__(
        self,
        verdicts: Dict[str, Verdict],
        adler_estimate: float,
        omega_sums: Tuple[float, float],
    ) -> None:
        self.verdicts = verdicts
        self.adler_estimate = adler_estimate
        self.omega_sums = omega_sums

    @property
    def passed(self) -> bool:
        """no assumption failed (ungraded trends do not count)."""

        return all(v.status != "fail" for v in self.verdicts.values())

    def records(self) -> List[Dict[str, object]]:
        return [
            {
                "assumption": name,
                "verdict": verdict.status,
                "witness": "" if verdict.witness is None else verdict.witness,
                "value": "" if verdict.value is None else verdict.value,
            }
            for name, verdict in self.verdicts.items()
        ]


def _first_violation(mask: np.ndarray, points: np.ndarray) -> Verdict:
    bad = np.flatnonzero(~mask)
    if bad.size:
        return Verdict("fail", witness=float(points[bad[0]]))
    return Verdict("pass")


def _trend(values: np.ndarray, points: np.ndarray, target_ok: bool) -> Verdict:
    """one-sided trend: values must move monotonically towards the limit."""

    steps = np.diff(values)
    if not (np.all(steps > 0) or np.all(steps < 0)) or not target_ok:
        return Verdict("fail", witness=float(points[-1]))
    return Verdict("ungraded-trend", value=float(values[-1]))


def _check_omega_sum(
    omega: OmegaSequence, sigma: float, n_max: int
) -> Tuple[Verdict, float]:
    power = 1.0 - sigma
    partial = omega.partial_sum(n_max, power)
    if omega.table:
        half = omega.partial_sum(n_max // 2, power)
        quarter = omega.partial_sum(n_max // 4, power)
        if partial - half < half - quarter:
            return Verdict("ungraded-trend", value=partial), partial
        return Verdict("fail", witness=n_max, value=partial), partial
    total = omega.total(power)
    if math.isfinite(total):
        return Verdict("pass", value=total), partial
    return Verdict("fail", witness=n_max, value=partial), partial


def _check_b_ii(family: MapFamily, n_max: int) -> Verdict:
    """g0'(n-1) <= C_I1 omega^(1)_n for 2 <= n <= n_max."""

    exact = family.exact_rational and not family.omega1.table
    ci1 = Fraction(family.ci1)
    tol = hm_params.closed_form_tol
    for n in range(2, n_max + 1):
        if exact:
            lhs = family.g0_map.derivative(Fraction(n - 1))
            ok = lhs <= ci1 * family.omega1.value_exact(n)
        else:
            lhs = float(family.g0_map.derivative(float(n - 1)))
            ok = lhs <= family.ci1 * family.omega1.value(n) * (1 + tol)
        if not ok:
            return Verdict("fail", witness=n)
    return Verdict("pass")


def _check_b_iii(family: MapFamily, n_max: int) -> Verdict:
    """prod_{j=1}^{n-1} g0'(g0^j(1)) <= C_I2 omega^(2)_n, 1 <= n <= n_max."""

    exact = family.exact_rational and not family.omega2.table
    ci2 = Fraction(family.ci2)
    tol = hm_params.closed_form_tol
    point: Any = Fraction(1) if exact else 1.0
    product: Any = Fraction(1) if exact else 1.0
    for n in range(1, n_max + 1):
        if n >= 2:
            point = family.g0_map(point)
            product = product * family.g0_map.derivative(point)
        if exact:
            ok = product <= ci2 * family.omega2.value_exact(n)
        else:
            ok = product <= family.ci2 * family.omega2.value(n) * (1 + tol)
        if not ok:
            return Verdict("fail", witness=n)
    return Verdict("pass")


def check_assumptions(
    family: MapFamily, grid: Optional[np.ndarray] = None, n_max: int = 1000
) -> AssumptionReport:
    """grade assumptions (A1)-(A6) and (B) at sample points

    failures are verdicts, never errors. (A1) and (A3) are limits and
    can only be reported as ungraded trends.

    parameters
    ----------
    family : MapFamily
        the family to check
    grid : numpy.ndarray, optional
        sorted points of (0, 1) (default: default_grid())
    n_max : int
        range of the (B) checks, >= 2

    returns
    -------
    AssumptionReport

    examples
    --------
    >>> report = check_assumptions(modular_family(), n_max=100)
    >>> report.passed
    True
    """

    if grid is None:
        grid = default_grid()
    grid = np.sort(np.asarray(grid, dtype=float))
    if n_max < 2:
        raise ConfigError(f"Input Error: n_max should be >= 2, got {n_max}.")
    value, d1, d2 = family.f0(grid)
    value = np.asarray(value, dtype=float)
    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    ratio = d2 / (d1 * d1)
    verdicts: Dict[str, Verdict] = {}

    head = slice(0, min(20, grid.size))
    tail = slice(max(grid.size - 20, 0), grid.size)
    at_zero = _trend(value[head][::-1], grid[head][::-1], value[0] < 1e-6)
    at_one = _trend(value[tail], grid[tail], value[-1] > 1e6)
    verdicts["A1"] = at_zero if at_zero.status == "fail" else at_one
    verdicts["A2"] = _first_violation(d1 > 1.0, grid)
    deviation = np.abs(d1[head] - 1.0)
    verdicts["A3"] = _trend(
        deviation[::-1], grid[head][::-1], deviation[0] < 1e-6
    )
    verdicts["A4"] = _first_violation(d2 > 0.0, grid)
    decreasing = np.append(
        ratio[1:] <= ratio[:-1] * (1 + hm_params.inverse_tol), True
    )
    verdicts["A5"] = _first_violation(decreasing, grid)
    adler = float(np.max(ratio))
    if math.isfinite(adler):
        verdicts["A6"] = Verdict("pass", value=adler)
    else:
        verdicts["A6"] = Verdict(
            "fail", witness=float(grid[np.argmax(ratio)]), value=adler
        )

    b_i1, sum1 = _check_omega_sum(family.omega1, family.sigma1, n_max)
    b_i2, sum2 = _check_omega_sum(family.omega2, family.sigma2, n_max)
    verdicts["B(i) omega1"] = b_i1
    verdicts["B(i) omega2"] = b_i2
    verdicts["B(ii)"] = _check_b_ii(family, n_max)
    verdicts["B(iii)"] = _check_b_iii(family, n_max)
    logger.info(
        "assumptions for %s: %s",
        family.name,
        ", ".join(f"{k}={v.status}" for k, v in verdicts.items()),
    )
    return AssumptionReport(verdicts, adler, (sum1, sum2))
