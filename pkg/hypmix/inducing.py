"""partitions, return times and induced maps

This module defines the partitions {I_s}, {J_s^q} and {J_{s0 s1}^{q0 q1}},
the induced maps F = f^tau, Fhat = F^kappa and Ftilde = Fhat o Fhat with
their derivatives, the inverse branches phi_s^q and the distortion
constants. Scalar paths are exact on Fraction input for families with
integer coefficients; the *_array functions are float only and serve the
samplers.
"""

import logging
import math
from fractions import Fraction
from typing import Any, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from hypmix._general import BoundaryError, DomainError, SingularityError
from hypmix._mobius import _is_exact, _Mobius
from hypmix.map_family import MapFamily
from hypmix.parameters_settings import hm_params

__all__: List[str] = [
    "BranchIndex",
    "Interval",
    "QuadIndex",
    "ReturnTimes",
    "F_eval",
    "Fhat_eval",
    "Ftilde_eval",
    "branch_array",
    "branch_map",
    "chat_adler",
    "chat_distortion",
    "ctilde_adler",
    "ctilde_distortion",
    "fhat_array",
    "fhat_log",
    "ftilde_array",
    "interval_I",
    "interval_J",
    "inverse_branch",
    "inverse_branch_array",
    "locate",
    "locate_array",
    "locate_quad",
    "locate_s",
    "orbit_error",
    "orbit_point",
]

logger = logging.getLogger(__name__)


class Interval:
    """class for an open interval (lo, hi)

    Attributes
    ----------
    lo, hi : float or Fraction
        the endpoints, lo < hi
    """

    __slots__ = ("lo", "hi")
    lo: Any
    hi: Any

    def __init__(self, lo: Any, hi: Any) -> None:
        if not lo < hi:
            raise ValueError(
                f"Input Error: lo should be < hi, got ({lo}, {hi})."
            )
        self.lo = lo
        self.hi = hi

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.lo}, {self.hi})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Interval):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi

    def __iter__(self) -> Iterator[Any]:
        return iter((self.lo, self.hi))

    @property
    def length(self) -> Any:
        return self.hi - self.lo

    def contains(self, x: Any) -> bool:
        return bool(self.lo < x < self.hi)


class ReturnTimes:
    """class for the return times tau = s, kappa = q, theta = s + q - 1."""

    # pylint: disable=too-few-public-methods

    __slots__ = ("tau", "kappa", "theta")
    tau: int
    kappa: int
    theta: int

    def __init__(self, tau: int, kappa: int) -> None:
        self.tau = tau
        self.kappa = kappa
        self.theta = tau + kappa - 1

    def __repr__(self) -> str:
        return (
            f"ReturnTimes(tau={self.tau}, kappa={self.kappa}, "
            f"theta={self.theta})"
        )

    def __eq__(self, other: object) -> bool:
        if isinstance(other, tuple):
            return (self.tau, self.kappa, self.theta) == other
        if not isinstance(other, ReturnTimes):
            return NotImplemented
        return (self.tau, self.kappa) == (other.tau, other.kappa)


class BranchIndex:
    """class for the index (s, q) of J_s^q

    Attributes
    ----------
    s : int
        the F-level index, >= 2 on Delta (s = 1 only at the F level)
    q : int
        the number of F steps before returning to Delta, >= 1
    """

    __slots__ = ("s", "q")
    s: int
    q: int

    def __init__(self, s: int, q: int) -> None:
        if s < 1 or q < 1:
            raise DomainError(
                f"Input Error: (s, q) should be >= (1, 1), got ({s}, {q})."
            )
        self.s = int(s)
        self.q = int(q)

    def __repr__(self) -> str:
        return f"BranchIndex({self.s}, {self.q})"

    def __eq__(self, other: object) -> bool:
        if isinstance(other, tuple):
            return (self.s, self.q) == other
        if not isinstance(other, BranchIndex):
            return NotImplemented
        return (self.s, self.q) == (other.s, other.q)

    def __hash__(self) -> int:
        return hash((self.s, self.q))

    def return_times(self) -> ReturnTimes:
        return ReturnTimes(self.s, self.q)


class QuadIndex:
    """class for the index (s0, q0, s1, q1) of J_{s0 s1}^{q0 q1}."""

    __slots__ = ("first", "second")
    first: BranchIndex
    second: BranchIndex

    def __init__(self, s0: int, q0: int, s1: int, q1: int) -> None:
        self.first = BranchIndex(s0, q0)
        self.second = BranchIndex(s1, q1)

    def __repr__(self) -> str:
        return f"QuadIndex{self.as_tuple()}"

    def __eq__(self, other: object) -> bool:
        if isinstance(other, tuple):
            return self.as_tuple() == other
        if not isinstance(other, QuadIndex):
            return NotImplemented
        return self.as_tuple() == other.as_tuple()

    def __hash__(self) -> int:
        return hash(self.as_tuple())

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return (self.first.s, self.first.q, self.second.s, self.second.q)

    @property
    def theta(self) -> int:
        """theta_tilde = theta(x) + theta(Fhat x)."""

        return (
            self.first.return_times().theta + self.second.return_times().theta
        )


def _one(family: MapFamily, exact: bool) -> Any:
    return Fraction(1) if exact and family.exact_rational else 1.0


def _near(u: Any, v: Any, scale: Any, slack: float = 0.0) -> bool:
    """u and v agree up to boundary_ulps units of scale plus slack, the
    error carried by u."""

    if _is_exact(u) and _is_exact(v):
        return u == v
    tol = hm_params.boundary_ulps * np.spacing(abs(float(scale))) + slack
    return abs(float(u) - float(v)) <= tol


def orbit_error(x: Any, value: Any, log_d1: Any, err: Any = 0.0) -> Any:
    """a running bound of the absolute error of value = Fhat(x) (or any
    map with log-derivative log_d1 at x) when x carries the error err

    the bound grows by the derivative and by boundary_ulps rounding units
    at both ends; numpy arrays are accepted.
    """

    ulps = hm_params.boundary_ulps
    spread = np.exp(log_d1) * (err + ulps * np.spacing(np.abs(x)))
    return spread + ulps * np.spacing(np.abs(value))


def orbit_point(family: MapFamily, j: int, exact: bool = False) -> Any:
    """g0^j(1), the right end of the q = j level of Delta's preimages."""

    if exact and family.exact_rational:
        return family.g0_power(j)(Fraction(1))
    if j <= hm_params.orbit_table_size:
        return float(family.g0_orbit()[j])
    return float(family.g0_power(j, exact=False)(1.0))


def interval_I(family: MapFamily, s: int) -> Interval:
    """the interval I_s = (g0(s-1), g0(s)) on which tau = s

    examples
    --------
    >>> from hypmix.map_family import modular_family
    >>> interval_I(modular_family(), 2)
    Interval(1/2, 2/3)
    """

    if s < 1:
        raise DomainError(f"Input Error: s should be >= 1, got {s}.")
    g0 = family.mobius("g0", 0)
    zero = _one(family, True) - 1 if family.exact_rational else 0.0
    return Interval(g0(zero + (s - 1)), g0(zero + s))


def branch_map(
    family: MapFamily, s: int, q: int, exact: bool = True
) -> _Mobius:
    """phi_s^q = g0 o g1^{s-1} o g0^{q-1}, a Moebius map."""

    g0 = family.mobius("g0", 0 if exact else 0.0)
    return g0.compose(_Mobius.translation(s - 1)).compose(
        family.g0_power(q - 1, exact=exact)
    )


def interval_J(family: MapFamily, s: int, q: int) -> Interval:
    """the interval J_s^q = (c_s^q, d_s^q) = phi_s^q(Delta)

    parameters
    ----------
    family : MapFamily
        the family
    s : int
        >= 2
    q : int
        >= 1

    returns
    -------
    Interval
        exact rationals on the rational path

    examples
    --------
    >>> from hypmix.map_family import modular_family
    >>> interval_J(modular_family(), 2, 1)
    Interval(3/5, 2/3)
    """

    if s < 2 or q < 1:
        raise DomainError(
            f"Input Error: (s, q) should be >= (2, 1), got ({s}, {q})."
        )
    phi = branch_map(family, s, q)
    one = _one(family, True)
    return Interval(phi(family.delta_lo()), phi(one))


def _f0_checked(family: MapFamily, x: Any) -> Tuple[Any, Any, Any]:
    value, d1, d2 = family.f0(x)
    if not _is_exact(x) and float(x) > 1.0 - hm_params.singularity_margin:
        raise SingularityError(f"x = {x} is within the margin of x = 1.")
    return value, d1, d2


def _value_slack(family: MapFamily, x: Any, err: float) -> float:
    """the error of f0(x) inherited from an error err of x, capped at
    boundary_slack_cap."""

    if not err:
        return 0.0
    slack = float(family.f0_float.derivative(float(x))) * err
    return min(slack, hm_params.boundary_slack_cap)


def locate_s(family: MapFamily, x: Any, err: float = 0.0) -> int:
    """the index s >= 1 with x in I_s, i.e. s - 1 < f0(x) < s

    err bounds the absolute error of a float x, e.g. an orbit point.
    """

    value = _f0_checked(family, x)[0]
    slack = _value_slack(family, x, err)
    s = math.floor(value) + 1
    for end in (s - 1, s):
        if end >= 1 and _near(value, end, max(value, 1.0), slack):
            raise BoundaryError(
                f"x = {x} is an endpoint of the partition {{I_s}}."
            )
    return s


def _locate_q(
    family: MapFamily, z: Any, scale: Any, slack: float = 0.0
) -> int:
    """q >= 1 with g0^q(1) < z < g0^(q-1)(1); gallop then bisect."""

    exact = _is_exact(z)
    lo, hi = 0, 1
    while orbit_point(family, hi, exact) >= z:
        lo, hi = hi, 2 * hi
    # invariant: e_lo >= z > e_hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if orbit_point(family, mid, exact) >= z:
            lo = mid
        else:
            hi = mid
    for j in (hi - 1, hi):
        if j >= 1 and _near(z, orbit_point(family, j, exact), scale, slack):
            raise BoundaryError(f"z = {z} is an endpoint of {{J_s^q}}.")
    return hi


def locate(
    family: MapFamily, x: Any, err: float = 0.0
) -> Tuple[BranchIndex, ReturnTimes]:
    """the branch (s, q) of Delta = (g0(1), 1) containing x

    parameters
    ----------
    family : MapFamily
        the family
    x : float or Fraction
        a point of Delta
    err : float
        a bound of the absolute error of a float x [default 0]; points
        within the error of an endpoint raise a BoundaryError

    returns
    -------
    (BranchIndex, ReturnTimes)

    examples
    --------
    >>> from hypmix.map_family import modular_family
    >>> idx, times = locate(modular_family(), Fraction(11, 20))
    >>> idx, times
    (BranchIndex(2, 4), ReturnTimes(tau=2, kappa=4, theta=5))
    """

    s = locate_s(family, x, err)
    if s < 2:
        raise DomainError(
            f"Input Error: x should be in (g0(1), 1), got {x}."
        )
    value = family.f0(x)[0]
    z = value - (s - 1)
    q = _locate_q(
        family, z, max(value, 1.0), _value_slack(family, x, err)
    )
    idx = BranchIndex(s, q)
    return idx, idx.return_times()


def F_eval(family: MapFamily, x: Any) -> Tuple[Any, Any]:
    """F(x) = f0(x) - (s-1) on I_s, with F'(x) = f0'(x).

    examples
    --------
    >>> from hypmix.map_family import modular_family
    >>> F_eval(modular_family(), Fraction(3, 5))
    (Fraction(1, 2), Fraction(25, 4))
    """

    # pylint: disable=invalid-name

    s = locate_s(family, x)
    value, d1, _ = family.f0(x)
    return value - (s - 1), d1


def _orbit(family: MapFamily, z: float, n: int) -> np.ndarray:
    """the floats f0^l(z), l = 0, ..., n - 1."""

    if n <= hm_params.orbit_table_size:
        table = family.power_table("f0")[:n]
        num = table[:, 0] * z + table[:, 1]
        return num / (table[:, 2] * z + table[:, 3])
    logger.debug("orbit of length %d beyond the table, scalar loop", n)
    points = np.empty(n)
    f0 = family.f0_float
    for l in range(n):
        points[l] = z
        z = f0(z)
    return points


def _chain(family: MapFamily, points: np.ndarray) -> Tuple[float, float]:
    """log of the derivative of f0 applied along points, and the
    accumulated ratio D2 / D1^2 (translations in between are allowed)."""

    logs = np.log(np.asarray(family.f0_float.derivative(points)))
    adler = np.asarray(family.adler_ratio(points), dtype=float)
    # suffix[l] = sum of logs after position l
    suffix = np.concatenate([np.cumsum(logs[::-1])[::-1][1:], [0.0]])
    ratio = float(np.sum(adler * np.exp(-suffix)))
    if logs.size > hm_params.extended_precision_q:
        return math.fsum(logs), ratio
    return float(np.sum(logs)), ratio


def fhat_log(
    family: MapFamily,
    x: Any,
    idx: Optional[BranchIndex] = None,
    err: float = 0.0,
) -> Tuple[float, float, BranchIndex]:
    """Fhat(x), ln Fhat'(x) and the branch, in floats; err bounds the
    error of x when the branch is located here."""

    if idx is None:
        idx = locate(family, x, err)[0]
    x = float(x)
    z = family.f0_float(x) - (idx.s - 1)
    points = np.concatenate([[x], _orbit(family, z, idx.q - 1)])
    log_d1, _ = _chain(family, points)
    value = family.f0_power(idx.q - 1, exact=False)(z)
    return float(value), log_d1, idx


def Fhat_eval(
    family: MapFamily, x: Any, err: float = 0.0
) -> Tuple[Any, Any, Any]:
    """first return map Fhat = f0^{q-1} o f1^{s-1} o f0 on Delta

    parameters
    ----------
    family : MapFamily
        the family
    x : float or Fraction
        a point of Delta
    err : float
        a bound of the absolute error of a float x [default 0]

    returns
    -------
    (value, d1, d2)
        exact on Fraction input for integer families

    examples
    --------
    >>> from hypmix.map_family import modular_family
    >>> Fhat_eval(modular_family(), Fraction(11, 20))[0]
    Fraction(2, 3)
    """

    # pylint: disable=invalid-name

    idx = locate(family, x, err)[0]
    if _is_exact(x) and family.exact_rational:
        value, f_d1, f_d2 = family.f0(x)
        power = family.f0_power(idx.q - 1)
        m_value, m_d1, m_d2 = power.evaluate(value - (idx.s - 1))
        return m_value, m_d1 * f_d1, m_d2 * f_d1 * f_d1 + m_d1 * f_d2
    x = float(x)
    z = family.f0_float(x) - (idx.s - 1)
    points = np.concatenate([[x], _orbit(family, z, idx.q - 1)])
    log_d1, ratio = _chain(family, points)
    value = family.f0_power(idx.q - 1, exact=False)(z)
    d1 = math.exp(log_d1)
    return float(value), d1, ratio * d1 * d1


def _image_error(x: Any, image: Any, d1: Any) -> float:
    """the error bound of a float image Fhat(x) of a float x."""

    if _is_exact(image):
        return 0.0
    return float(orbit_error(float(x), float(image), math.log(float(d1))))


def locate_quad(family: MapFamily, x: Any) -> QuadIndex:
    """the index (s0, q0, s1, q1) with x in J_{s0 s1}^{q0 q1}."""

    first = locate(family, x)[0]
    mid, d1, _ = Fhat_eval(family, x)
    second = locate(family, mid, _image_error(x, mid, d1))[0]
    return QuadIndex(first.s, first.q, second.s, second.q)


def Ftilde_eval(family: MapFamily, x: Any) -> Tuple[Any, Any]:
    """Ftilde = Fhat o Fhat with Ftilde'(x) = Fhat'(Fhat x) Fhat'(x).

    a BoundaryError is raised when Fhat(x) hits an endpoint.
    """

    # pylint: disable=invalid-name

    mid, d1_first, _ = Fhat_eval(family, x)
    value, d1_second, _ = Fhat_eval(
        family, mid, _image_error(x, mid, d1_first)
    )
    return value, d1_second * d1_first

def inverse_branch(
    family: MapFamily, path: Sequence[Tuple[int, int]], x: Any
) -> Tuple[Any, Any]:
    """value and derivative of phi_{path[0]} o ... o phi_{path[-1]} at x

    examples
    --------
    >>> from hypmix.map_family import modular_family
    >>> inverse_branch(modular_family(), [(2, 1)], Fraction(1))[0]
    Fraction(2, 3)
    """

    exact = _is_exact(x) and family.exact_rational
    mobius = _Mobius.identity()
    for s, q in path:
        if s < 2 or q < 1:
            raise DomainError(
                f"Input Error: (s, q) should be >= (2, 1), got ({s}, {q})."
            )
        mobius = mobius.compose(branch_map(family, s, q, exact=exact))
    if not exact:
        x = float(x)
    return mobius(x), mobius.derivative(x)


def chat_adler(family: MapFamily) -> float:
    """Chat_A = C_A C_I2 sum_{j>=1} omega_j^(2), the Adler constant of
    the first return map Fhat.

    examples
    --------
    >>> from hypmix.map_family import modular_family
    >>> round(chat_adler(modular_family()), 6)
    5.159473
    """

    return family.adler_constant() * family.ci2 * family.omega2.total()


def ctilde_adler(family: MapFamily) -> float:
    """Ctilde_A = Chat_A (1 + 1 / f0'(g0(1))), the Adler constant of
    Ftilde."""

    expansion = float(family.f0_float.derivative(float(family.delta_lo())))
    return chat_adler(family) * (1.0 + 1.0 / expansion)


def chat_distortion(family: MapFamily) -> float:
    """Chat_D = exp(Chat_A |Delta|)."""

    return math.exp(chat_adler(family) * (1.0 - float(family.delta_lo())))


def ctilde_distortion(family: MapFamily) -> float:
    """Ctilde_D = exp(Ctilde_A |Delta|), |Delta| = 1 - g0(1)."""

    return math.exp(ctilde_adler(family) * (1.0 - float(family.delta_lo())))


def locate_array(
    family: MapFamily,
    x: np.ndarray,
    err: Optional[np.ndarray] = None,
    reject: bool = False,
) -> Tuple[np.ndarray, np.ndarray]:
    """the branch indices (s, q) of an array of points of Delta

    parameters
    ----------
    family : MapFamily
        the family
    x : numpy.ndarray
        points of Delta
    err : numpy.ndarray, optional
        bounds of the absolute errors of x, for orbit points
    reject : bool
        when set, points outside Delta, within the singularity margin of
        x = 1 or within their error of a partition endpoint get
        s = q = 0; otherwise they raise [default]

    returns
    -------
    (s, q) : numpy.ndarray

    points beyond the cached orbit table are located by the scalar path.
    """

    # pylint: disable=too-many-locals

    x = np.asarray(x, dtype=float)
    err = np.broadcast_to(
        np.asarray(0.0 if err is None else err, dtype=float), x.shape
    )
    inside = (x > float(family.delta_lo())) & (x < 1.0)
    if not reject and not np.all(inside):
        raise DomainError("Input Error: x should be in (g0(1), 1).")
    inside &= x <= 1.0 - hm_params.singularity_margin
    if not reject and not np.all(inside):
        raise SingularityError("a point is within the margin of x = 1.")
    rows = np.flatnonzero(inside)
    f0 = family.f0_float
    value = np.asarray(f0(x[rows]), dtype=float)
    slack = np.asarray(f0.derivative(x[rows]), dtype=float) * err[rows]
    slack = np.minimum(slack, hm_params.boundary_slack_cap)
    tol = hm_params.boundary_ulps * np.spacing(np.maximum(value, 1.0))
    tol = tol + slack
    s_in = np.floor(value).astype(np.int64) + 1
    z = value - (s_in - 1)
    orbit = family.g0_orbit()
    n_table = orbit.size - 1
    q_in = n_table + 1 - np.searchsorted(orbit[::-1], z, side="left")
    # e_q < z <= e_{q-1}, and z = 0, 1 are the ends of I_s
    upper = np.minimum(q_in - 1, n_table)
    lower = np.minimum(q_in, n_table)
    near = (z <= tol) | (1.0 - z <= tol)
    near |= (upper >= 1) & (np.abs(z - orbit[upper]) <= tol)
    near |= np.abs(z - orbit[lower]) <= tol
    beyond = np.flatnonzero(~near & (q_in > n_table))
    if beyond.size:
        logger.debug("%d points beyond the orbit table", beyond.size)
    for i in beyond:
        try:
            q_in[i] = _locate_q(
                family, float(z[i]), max(float(value[i]), 1.0), slack[i]
            )
        except BoundaryError:
            near[i] = True
    if not reject and np.any(near):
        raise BoundaryError(
            f"x = {x[rows[near]][0]} is an endpoint of {{J_s^q}}."
        )
    s = np.zeros(x.shape, dtype=np.int64)
    q = np.zeros(x.shape, dtype=np.int64)
    s[rows[~near]] = s_in[~near]
    q[rows[~near]] = q_in[~near]
    rejected = x.size - int(np.sum(~near))
    if rejected:
        logger.debug("%d of %d points rejected", rejected, x.size)
    return s, q


def fhat_array(
    family: MapFamily,
    x: np.ndarray,
    err: Optional[np.ndarray] = None,
    reject: bool = False,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Fhat and ln Fhat' on an array of points of Delta

    err and reject are those of locate_array; rejected points get NaN
    values and s = q = 0.

    returns
    -------
    (value, log_d1, s, q) : numpy.ndarray
    """

    x = np.asarray(x, dtype=float)
    s, q = locate_array(family, x, err, reject)
    value = np.full(x.shape, np.nan)
    log_d1 = np.full(x.shape, np.nan)
    rows = np.flatnonzero(q > 0)
    xr, sr, qr = x[rows], s[rows], q[rows]
    f0 = family.f0_float
    z = np.asarray(f0(xr)) - (sr - 1)
    table = family.power_table("f0")
    inside = qr - 1 < table.shape[0]
    power = _Mobius.from_table(table, np.where(inside, qr - 1, 0))
    value[rows] = np.asarray(power(z), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_d1[rows] = np.log(np.asarray(f0.derivative(xr))) + np.log(
            np.abs(power.derivative(z))
        )
    redo = rows[~inside | ~np.isfinite(log_d1[rows])]
    for i in redo:
        value[i], log_d1[i], _ = fhat_log(
            family, float(x[i]), BranchIndex(int(s[i]), int(q[i]))
        )
    return value, log_d1, s, q


def ftilde_array(
    family: MapFamily, x: np.ndarray, reject: bool = False
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Ftilde and ln Ftilde' on an array, with the (n, 4) quad indices

    the second step carries the error bound of Fhat(x); with reject set,
    points whose orbit hits an endpoint get NaN and a zero quad.
    """

    mid, log_first, s0, q0 = fhat_array(family, x, reject=reject)
    mid_err = orbit_error(np.asarray(x, dtype=float), mid, log_first)
    value, log_second, s1, q1 = fhat_array(family, mid, mid_err, reject)
    quads = np.stack([s0, q0, s1, q1], axis=-1)
    quads[q1 == 0] = 0
    return value, log_first + log_second, quads


def inverse_branch_array(
    family: MapFamily, s: np.ndarray, q: np.ndarray, x: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """phi_s^q(x) and ln (phi_s^q)'(x) elementwise."""

    s = np.asarray(s, dtype=np.int64)
    q = np.asarray(q, dtype=np.int64)
    x = np.asarray(x, dtype=float)
    table = family.power_table("g0")
    if np.any(q - 1 >= table.shape[0]):
        raise DomainError(
            f"Input Error: q should be <= {table.shape[0]}, got {np.max(q)}."
        )
    power = _Mobius.from_table(table, q - 1)
    inner = np.asarray(power(x))
    g0 = family.g0_float
    shifted = inner + (s - 1)
    log_d1 = np.log(np.abs(power.derivative(x))) + np.log(
        np.asarray(g0.derivative(shifted))
    )
    return np.asarray(g0(shifted)), log_d1


def branch_array(
    family: MapFamily, s: np.ndarray, q: np.ndarray, fiber: bool = False
) -> _Mobius:
    """phi_s^q = g0 o T_{s-1} o g0^{q-1} (or Ghat_{s,q} = g0^{q-1} o
    T_{s-1} o g0 when fiber is set) with array coefficients."""

    s = np.asarray(s, dtype=float)
    power = _Mobius.from_table(family.power_table("g0"), np.asarray(q) - 1)
    shift = s - 1.0
    g0 = family.g0_float
    if fiber:
        # T o g0, then g0^{q-1} o (T o g0)
        ta, tb = g0.a + shift * g0.c, g0.b + shift * g0.d
        tc, td = g0.c, g0.d
        return _Mobius(
            power.a * ta + power.b * tc,
            power.a * tb + power.b * td,
            power.c * ta + power.d * tc,
            power.c * tb + power.d * td,
        )
    ta, tb = power.a + shift * power.c, power.b + shift * power.d
    tc, td = power.c, power.d
    return _Mobius(
        g0.a * ta + g0.b * tc,
        g0.a * tb + g0.b * td,
        g0.c * ta + g0.d * tc,
        g0.c * tb + g0.d * td,
    )
