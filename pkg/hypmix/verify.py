"""numerical verification of the standard assumptions

This module checks UNI, the exponential tails of the roof r (with the
comparabilities of the quad cylinders and the bound 1/Fhat'(d_s^q) <
C_I1 C_I2 omega_s^(1) omega_q^(2)) and the distortion constants. Every
check returns a report; failures are verdicts, not errors.
"""

import logging
import math
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from hypmix._general import ConfigError, _map_chunks
from hypmix.inducing import (
    branch_array,
    branch_map,
    chat_adler,
    chat_distortion,
    ctilde_adler,
    ctilde_distortion,
    fhat_array,
    ftilde_array,
    interval_J,
)
from hypmix.map_family import MapFamily
from hypmix.measure import rng_stream
from hypmix.roof import RoofConfig, r_eval

__all__: List[str] = [
    "DistortionReport",
    "OrdineMinoreReport",
    "OrdiniReport",
    "TailsReport",
    "UniReport",
    "admissible_sigma",
    "c_u_reference",
    "default_sigma",
    "distortion_check",
    "ordineminore_check",
    "ordini_check",
    "tails_partial",
    "uni_check",
    "uni_dpsi",
    "uni_psi",
]

logger = logging.getLogger(__name__)

_UNI_TOL = 1e-9
_REL_TOL = 1e-9


def _quad_quantities(
    family: MapFamily,
    first: Tuple[np.ndarray, np.ndarray],
    second: Tuple[np.ndarray, np.ndarray],
    y_prime: float,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """|J|, Ftilde'(d) and Gtilde'(y') of the quad cylinders
    J_{s0 s1}^{q0 q1} = phi_{s0}^{q0}(J_{s1}^{q1}); the index arrays
    broadcast against each other."""

    phi0 = branch_array(family, *first)
    phi1 = branch_array(family, *second)
    lo = float(family.delta_lo())
    right = np.asarray(phi1(1.0))
    left = np.asarray(phi1(lo))
    inner = np.asarray(phi1.difference(1.0, lo))
    denominators = (phi0.c * right + phi0.d) * (phi0.c * left + phi0.d)
    length = np.abs(phi0.det * inner / denominators)
    ftilde_d1 = 1.0 / np.abs(
        np.asarray(phi0.derivative(right)) * np.asarray(phi1.derivative(1.0))
    )
    ghat0 = branch_array(family, *first, fiber=True)
    ghat1 = branch_array(family, *second, fiber=True)
    mid = np.asarray(ghat0(y_prime))
    gtilde_d1 = np.abs(
        np.asarray(ghat1.derivative(mid))
        * np.asarray(ghat0.derivative(y_prime))
    )
    return length, ftilde_d1, gtilde_d1


class UniReport:
    """class for the outcome of the UNI check at one n

    Attributes
    ----------
    n : int
        the branches are phi = [phi_2^1]^{2n}, phibar = [phi_3^1]^{2n}
    grid_size : int
        number of grid points of (g0(1), 1)
    inf_dpsi : float
        the minimum of D psi over the grid
    c_u_reference : float
        the constant C_U
    passed : bool
        inf_dpsi >= c_u_reference - 1e-9
    witness : float
        the grid point of the minimum
    negative_summands : int
        number of grid points with a non-positive summand l <= 2n - 2
    """

    # pylint: disable=too-few-public-methods, too-many-instance-attributes

    __slots__ = (
        "n",
        "grid_size",
        "inf_dpsi",
        "c_u_reference",
        "passed",
        "witness",
        "negative_summands",
    )
    n: int
    grid_size: int
    inf_dpsi: float
    c_u_reference: float
    passed: bool
    witness: float
    negative_summands: int

    def __init__(
        self,
        n: int,
        grid_size: int,
        inf_dpsi: float,
        c_u: float,
        witness: float,
        negative_summands: int,
    ) -> None:
        # pylint: disable=too-many-arguments
        self.n = n
        self.grid_size = grid_size
        self.inf_dpsi = inf_dpsi
        self.c_u_reference = c_u
        self.passed = inf_dpsi >= c_u - _UNI_TOL
        self.witness = witness
        self.negative_summands = negative_summands

    def record(self) -> Dict[str, object]:
        return {
            "check": "uni",
            "n": self.n,
            "grid_size": self.grid_size,
            "value": self.inf_dpsi,
            "reference": self.c_u_reference,
            "witness": self.witness,
            "pass": self.passed,
        }


def c_u_reference(family: MapFamily) -> float:
    """C_U = rho0 (A(d_2^1) - A(c_3^1)), A = f0'' / f0'^2

    examples
    --------
    >>> from hypmix.map_family import modular_family
    >>> c_u_reference(modular_family())
    Fraction(1, 21)
    """

    d_21 = interval_J(family, 2, 1).hi
    c_31 = interval_J(family, 3, 1).lo
    gap = family.adler_ratio(d_21) - family.adler_ratio(c_31)
    if isinstance(gap, Fraction):
        return Fraction(family.rho0) * gap
    return family.rho0 * float(gap)


def _dpsi_terms(family: MapFamily, n: int, x: np.ndarray) -> np.ndarray:
    """the summands m = 1, ..., 2n of D psi, shape (2n, len(x)):
    rho0 [A(phi2^m x) (phi2^{m-1})'(x) - A(phi3^m x) (phi3^{m-1})'(x)]."""

    x = np.asarray(x, dtype=float)
    phi2 = branch_map(family, 2, 1, exact=False)
    phi3 = branch_map(family, 3, 1, exact=False)
    p2, p3 = x.copy(), x.copy()
    d2, d3 = np.ones_like(x), np.ones_like(x)
    terms = np.empty((2 * n,) + x.shape)
    for m in range(2 * n):
        next2, next3 = np.asarray(phi2(p2)), np.asarray(phi3(p3))
        terms[m] = family.rho0 * (
            family.adler_ratio(next2) * d2 - family.adler_ratio(next3) * d3
        )
        d2 = d2 * np.asarray(phi2.derivative(p2))
        d3 = d3 * np.asarray(phi3.derivative(p3))
        p2, p3 = next2, next3
    return terms


def uni_dpsi(family: MapFamily, n: int, x: Any) -> float:
    """D psi_{phi, phibar}(x) for phi = [phi_2^1]^{2n}, phibar =
    [phi_3^1]^{2n}, by the chain-rule expansion

    parameters
    ----------
    family : MapFamily
        the family
    n : int
        >= 1
    x : float
        a point of (g0(1), 1)

    returns
    -------
    float
        bounded below by c_u_reference(family) under (A5)
    """

    if n < 1:
        raise ConfigError(f"Input Error: n should be >= 1, got {n}.")
    return float(np.sum(_dpsi_terms(family, n, np.array([float(x)]))))


def uni_psi(
    family: MapFamily, n: int, x: Any, cfg: Optional[RoofConfig] = None
) -> float:
    """psi = r^(n) o phi - r^(n) o phibar by direct Birkhoff sums of r

    Ftilde inverts phi_s^1 o phi_s^1, so r^(n)(phi x) is the sum of r at
    the points phi_s^{2k} x, k = 1, ..., n.
    """

    cfg = cfg if cfg is not None else RoofConfig()
    total = []
    for s in (2, 3):
        phi = branch_map(family, s, 1, exact=False)
        point = float(x)
        for k in range(1, 2 * n + 1):
            point = float(phi(point))
            if k % 2 == 0:
                sign = 1.0 if s == 2 else -1.0
                total.append(sign * r_eval(family, point, cfg))
    return math.fsum(total)


def _uni_chunk(
    family: MapFamily, n: int, grid: np.ndarray
) -> Tuple[float, float, int]:
    terms = _dpsi_terms(family, n, grid)
    dpsi = np.sum(terms, axis=0)
    at = int(np.argmin(dpsi))
    negative = int(np.sum(np.any(terms[: 2 * n - 1] <= 0.0, axis=0)))
    return float(dpsi[at]), float(grid[at]), negative


def uni_check(
    family: MapFamily,
    n_list: Sequence[int],
    grid_size: int,
    threads: int = 1,
) -> List[UniReport]:
    """the infimum of D psi over a grid of (g0(1), 1) for every n

    examples
    --------
    >>> from hypmix.map_family import modular_family
    >>> [rep.passed for rep in uni_check(modular_family(), [1, 2], 100)]
    [True, True]
    """

    lo = float(family.delta_lo())
    eps = 1e-6
    grid = np.linspace(lo + eps, 1.0 - eps, grid_size)
    c_u = float(c_u_reference(family))
    chunks = np.array_split(grid, max(threads, 1))
    reports = []
    for n in n_list:
        if n < 1:
            raise ConfigError(f"Input Error: n should be >= 1, got {n}.")
        results = _map_chunks(
            _uni_chunk,
            [(family, n, chunk) for chunk in chunks if chunk.size],
            threads,
        )
        value, witness, _ = min(results, key=lambda item: item[0])
        negative = sum(item[2] for item in results)
        logger.info("uni n=%d: inf %.6g at %.6g", n, value, witness)
        reports.append(
            UniReport(n, grid_size, value, c_u, witness, negative)
        )
    return reports


def default_sigma(family: MapFamily) -> float:
    """0.8 min(sigma1, sigma2) / (2 rho0)."""

    return 0.8 * min(family.sigma1, family.sigma2) / (2.0 * family.rho0)


def admissible_sigma(family: MapFamily, sigma: Optional[float]) -> float:
    """sigma, or default_sigma when None; a ConfigError is raised outside
    (0, min(sigma1, sigma2) / (2 rho0)), where the tail series diverge.

    examples
    --------
    >>> from hypmix.map_family import modular_family
    >>> round(admissible_sigma(modular_family(), None), 12)
    0.392
    """

    bound = min(family.sigma1, family.sigma2) / (2.0 * family.rho0)
    sigma = default_sigma(family) if sigma is None else sigma
    if not 0.0 < sigma < bound:
        raise ConfigError(
            f"Input Error: sigma should be in (0, {bound}), got {sigma}."
        )
    return sigma


class TailsReport:
    """class for the outcome of the tails check

    Attributes
    ----------
    sigma : float
        the exponent, 0 < sigma < min(sigma_i) / (2 rho0)
    s_max, q_max : int
        the truncation
    partial_sum : float
        sum of |J| [Ftilde'(d) / Gtilde'(y')]^(sigma rho0)
    half_sum : float
        the same sum truncated at (s_max / 2, q_max / 2)
    tail_estimate : float
        certified bound of the omitted terms at (s_max, q_max)
    half_tail_estimate : float
        certified bound of the omitted terms at (s_max / 2, q_max / 2)
    majorant : float
        sum of [1 / Ftilde'(d)]^(1 - 2 sigma rho0)
    majorant_limit : float
        the value of the omega majorant series (an upper bound of majorant)
    comparability_violations : int
        quads violating Ftilde'(d)|J| in [|Delta|, Ctilde_D |Delta|] or
        [1/Gtilde'(y')] / Ftilde'(d) <= Ctilde'
    """

    # pylint: disable=too-few-public-methods, too-many-instance-attributes

    __slots__ = (
        "sigma",
        "s_max",
        "q_max",
        "partial_sum",
        "half_sum",
        "tail_estimate",
        "half_tail_estimate",
        "majorant",
        "majorant_limit",
        "comparability_violations",
    )
    sigma: float
    s_max: int
    q_max: int
    partial_sum: float
    half_sum: float
    tail_estimate: float
    half_tail_estimate: float
    majorant: float
    majorant_limit: float
    comparability_violations: int

    def __init__(self, **fields: Any) -> None:
        for key in self.__slots__:
            setattr(self, key, fields[key])

    @property
    def increment(self) -> float:
        """partial_sum - half_sum, the Cauchy increment."""

        return self.partial_sum - self.half_sum

    @property
    def passed(self) -> bool:
        """finite monotone sums whose Cauchy increment is covered by the
        certified tail, no comparability violation."""

        finite = all(
            math.isfinite(value)
            for value in (self.partial_sum, self.tail_estimate)
        )
        return (
            finite
            and self.half_sum <= self.partial_sum
            and self.increment <= self.half_tail_estimate
            and self.majorant <= self.majorant_limit * (1 + _REL_TOL)
            and self.comparability_violations == 0
        )

    def record(self) -> Dict[str, object]:
        return {
            "check": "tails",
            "n": "",
            "grid_size": self.s_max * self.q_max,
            "value": self.partial_sum,
            "reference": self.tail_estimate,
            "witness": self.increment,
            "pass": self.passed,
        }


def _tails_slice(
    family: MapFamily,
    s0: int,
    s_max: int,
    q_max: int,
    exponents: Tuple[float, float],
    y_prime: float,
) -> Tuple[float, float, float, float, int]:
    """the contributions of one s0: (partial, half, majorant, majorant
    half, violations)."""

    # pylint: disable=too-many-arguments, too-many-locals

    weight, power = exponents
    q0 = np.arange(1, q_max + 1).reshape(-1, 1, 1)
    s1 = np.arange(2, s_max + 1).reshape(1, -1, 1)
    q1 = np.arange(1, q_max + 1).reshape(1, 1, -1)
    first = (np.full_like(q0, s0), q0)
    length, ftilde_d1, gtilde_d1 = _quad_quantities(
        family, first, (s1, q1), y_prime
    )
    terms = length * np.power(ftilde_d1 / gtilde_d1, weight)
    majorant = np.power(1.0 / ftilde_d1, power)
    half = (q0 <= q_max // 2) & (s1 <= s_max // 2) & (q1 <= q_max // 2)
    half = np.broadcast_to(half, terms.shape) & (s0 <= s_max // 2)
    delta = 1.0 - float(family.delta_lo())
    product = ftilde_d1 * length
    c_prime = _c_prime(family, y_prime)
    violations = (
        (product < delta * (1 - _REL_TOL))
        | (product > ctilde_distortion(family) * delta * (1 + _REL_TOL))
        | (1.0 / gtilde_d1 > c_prime * ftilde_d1 * (1 + _REL_TOL))
    )
    return (
        float(np.sum(terms)),
        float(np.sum(terms[half])),
        float(np.sum(majorant)),
        float(np.sum(majorant[half])),
        int(np.sum(violations)),
    )


def _c_prime(family: MapFamily, y_prime: float) -> float:
    """Ctilde' = Ctilde_D exp(C_A (y' + 3))."""

    return ctilde_distortion(family) * math.exp(
        family.adler_constant() * (y_prime + 3.0)
    )


def _omega_majorant(
    family: MapFamily, power: float, s_max: Optional[int], q_max: Optional[int]
) -> float:
    """(W1 W2)^2 with W1 = sum_{s<=s_max} (omega_s^(1))^power and W2 the
    same over q <= q_max for omega^(2); None for the infinite sums."""

    w1 = (
        family.omega1.total(power)
        if s_max is None
        else family.omega1.partial_sum(s_max, power)
    )
    w2 = (
        family.omega2.total(power)
        if q_max is None
        else family.omega2.partial_sum(q_max, power)
    )
    return (w1 * w2) ** 2


def tails_partial(
    family: MapFamily,
    sigma: Optional[float],
    s_max: int,
    q_max: int,
    y_prime: float = 1.0,
    threads: int = 1,
) -> TailsReport:
    """truncated tail series of r with a certified bound of the omitted
    terms and a Cauchy comparison with the half truncation

    parameters
    ----------
    family : MapFamily
        the family
    sigma : float, optional
        0 < sigma < min(sigma1, sigma2) / (2 rho0) (default_sigma if None)
    s_max, q_max : int
        the truncation, s_max >= 4, q_max >= 2
    y_prime : float
        the fiber point of r
    threads : int
        worker processes over s0

    returns
    -------
    TailsReport
    """

    # pylint: disable=too-many-arguments, too-many-locals

    sigma = admissible_sigma(family, sigma)
    if s_max < 4 or q_max < 2:
        raise ConfigError(
            "Input Error: (s_max, q_max) should be >= (4, 2), got "
            f"({s_max}, {q_max})."
        )
    weight = sigma * family.rho0
    power = 1.0 - 2.0 * weight
    results = _map_chunks(
        _tails_slice,
        [
            (family, s0, s_max, q_max, (weight, power), y_prime)
            for s0 in range(2, s_max + 1)
        ],
        threads,
    )
    partial = math.fsum(item[0] for item in results)
    half = math.fsum(item[1] for item in results)
    majorant = math.fsum(item[2] for item in results)
    violations = sum(item[4] for item in results)

    delta = 1.0 - float(family.delta_lo())
    factor = (
        ctilde_distortion(family)
        * delta
        * _c_prime(family, y_prime) ** weight
        * (chat_distortion(family) * (family.ci1 * family.ci2) ** 2) ** power
    )
    limit = _omega_majorant(family, power, None, None)
    tail = factor * (limit - _omega_majorant(family, power, s_max, q_max))
    half_tail = factor * (
        limit - _omega_majorant(family, power, s_max // 2, q_max // 2)
    )
    majorant_limit = (
        chat_distortion(family) * (family.ci1 * family.ci2) ** 2
    ) ** power * limit
    logger.info(
        "tails sigma=%.4g: partial %.6g, half %.6g, tail bound %.6g",
        sigma,
        partial,
        half,
        tail,
    )
    return TailsReport(
        sigma=sigma,
        s_max=s_max,
        q_max=q_max,
        partial_sum=partial,
        half_sum=half,
        tail_estimate=tail,
        half_tail_estimate=half_tail,
        majorant=majorant,
        majorant_limit=majorant_limit,
        comparability_violations=violations,
    )


class OrdineMinoreReport:
    """class for the check 1/Fhat'(d_s^q) < C_I1 C_I2 omega_s^(1)
    omega_q^(2) over s <= s_max, q <= q_max."""

    # pylint: disable=too-few-public-methods

    __slots__ = ("s_max", "q_max", "violations", "worst_ratio", "witness")
    s_max: int
    q_max: int
    violations: int
    worst_ratio: float
    witness: Tuple[int, int]

    def __init__(
        self,
        s_max: int,
        q_max: int,
        violations: int,
        worst_ratio: float,
        witness: Tuple[int, int],
    ) -> None:
        # pylint: disable=too-many-arguments
        self.s_max = s_max
        self.q_max = q_max
        self.violations = violations
        self.worst_ratio = worst_ratio
        self.witness = witness

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def record(self) -> Dict[str, object]:
        return {
            "check": "ordineminore",
            "n": "",
            "grid_size": (self.s_max - 1) * self.q_max,
            "value": self.worst_ratio,
            "reference": 1.0,
            "witness": f"{self.witness[0]};{self.witness[1]}",
            "pass": self.passed,
        }


def ordineminore_check(
    family: MapFamily, s_max: int, q_max: int
) -> OrdineMinoreReport:
    """1/Fhat'(d_s^q) = (phi_s^q)'(1) against C_I1 C_I2 omega_s^(1)
    omega_q^(2), exactly on the rational path.

    examples
    --------
    >>> from hypmix.map_family import modular_family
    >>> ordineminore_check(modular_family(), 10, 10).passed
    True
    """

    exact = family.exact_rational and not (
        family.omega1.table or family.omega2.table
    )
    one: Any = Fraction(1) if exact else 1.0
    constant: Any = (
        Fraction(family.ci1) * Fraction(family.ci2)
        if exact
        else family.ci1 * family.ci2
    )
    violations = 0
    worst: Any = 0
    witness = (2, 1)
    for s in range(2, s_max + 1):
        for q in range(1, q_max + 1):
            lhs = branch_map(family, s, q, exact=exact).derivative(one)
            if exact:
                rhs = (
                    constant
                    * family.omega1.value_exact(s)
                    * family.omega2.value_exact(q)
                )
            else:
                rhs = (
                    constant * family.omega1.value(s) * family.omega2.value(q)
                )
            ratio = lhs / rhs
            if ratio >= 1:
                violations += 1
            if ratio > worst:
                worst, witness = ratio, (s, q)
    return OrdineMinoreReport(s_max, q_max, violations, float(worst), witness)


class OrdiniReport:
    """class for the comparabilities of the quad cylinders

    Attributes
    ----------
    samples : int
        number of sampled quads
    length_min, length_max : float
        extreme values of Ftilde'(d) |J|
    length_bounds : (float, float)
        (|Delta|, Ctilde_D |Delta|)
    fiber_min, fiber_max : float
        extreme values of [1/Gtilde'(y')] / Ftilde'(d)
    fiber_bound : float
        Ctilde' = Ctilde_D exp(C_A (y' + 3))
    """

    # pylint: disable=too-few-public-methods, too-many-instance-attributes

    __slots__ = (
        "samples",
        "length_min",
        "length_max",
        "length_bounds",
        "fiber_min",
        "fiber_max",
        "fiber_bound",
    )
    samples: int
    length_min: float
    length_max: float
    length_bounds: Tuple[float, float]
    fiber_min: float
    fiber_max: float
    fiber_bound: float

    def __init__(self, **fields: Any) -> None:
        for key in self.__slots__:
            setattr(self, key, fields[key])

    @property
    def passed(self) -> bool:
        lo, hi = self.length_bounds
        return (
            self.length_min >= lo * (1 - _REL_TOL)
            and self.length_max <= hi * (1 + _REL_TOL)
            and 0.0 < self.fiber_min
            and self.fiber_max <= self.fiber_bound * (1 + _REL_TOL)
        )

    def record(self) -> Dict[str, object]:
        return {
            "check": "ordini",
            "n": "",
            "grid_size": self.samples,
            "value": self.fiber_max,
            "reference": self.fiber_bound,
            "witness": self.length_max,
            "pass": self.passed,
        }


def _sample_quads(
    rng: np.random.Generator, samples: int, s_hi: int, q_hi: int
) -> Tuple[np.ndarray, ...]:
    s0 = rng.integers(2, s_hi + 1, samples)
    q0 = rng.integers(1, q_hi + 1, samples)
    s1 = rng.integers(2, s_hi + 1, samples)
    q1 = rng.integers(1, q_hi + 1, samples)
    return s0, q0, s1, q1


def ordini_check(
    family: MapFamily,
    samples: int,
    y_prime: float = 1.0,
    seed: int = 0,
    s_hi: int = 200,
    q_hi: int = 200,
) -> OrdiniReport:
    """both comparabilities Ftilde'(d) ~ |J|^-1 and 1/Gtilde'(y') ~
    Ftilde'(d) on randomly sampled quads."""

    # pylint: disable=too-many-arguments

    rng = rng_stream(seed, 1)
    s0, q0, s1, q1 = _sample_quads(rng, samples, s_hi, q_hi)
    length, ftilde_d1, gtilde_d1 = _quad_quantities(
        family, (s0, q0), (s1, q1), y_prime
    )
    product = ftilde_d1 * length
    fiber = 1.0 / (gtilde_d1 * ftilde_d1)
    delta = 1.0 - float(family.delta_lo())
    return OrdiniReport(
        samples=samples,
        length_min=float(np.min(product)),
        length_max=float(np.max(product)),
        length_bounds=(delta, ctilde_distortion(family) * delta),
        fiber_min=float(np.min(fiber)),
        fiber_max=float(np.max(fiber)),
        fiber_bound=_c_prime(family, y_prime),
    )


class DistortionReport:
    """class for the bounded-distortion check at the Fhat and Ftilde
    levels: |ln F'(x) - ln F'(x')| <= C_A |F(x) - F(x')| within a
    cylinder, with C_A = Chat_A resp. Ctilde_A."""

    # pylint: disable=too-few-public-methods, too-many-instance-attributes

    __slots__ = (
        "pairs",
        "hat_slack",
        "tilde_slack",
        "hat_violations",
        "tilde_violations",
        "hat_constant",
        "tilde_constant",
    )
    pairs: int
    hat_slack: float
    tilde_slack: float
    hat_violations: int
    tilde_violations: int
    hat_constant: float
    tilde_constant: float

    def __init__(self, **fields: Any) -> None:
        for key in self.__slots__:
            setattr(self, key, fields[key])

    @property
    def passed(self) -> bool:
        return self.hat_violations == 0 and self.tilde_violations == 0

    def record(self) -> Dict[str, object]:
        return {
            "check": "distortion",
            "n": "",
            "grid_size": self.pairs,
            "value": max(self.hat_slack, self.tilde_slack),
            "reference": 1.0,
            "witness": self.hat_violations + self.tilde_violations,
            "pass": self.passed,
        }


def _pair_violations(
    gap_log: np.ndarray, gap_image: np.ndarray, constant: float
) -> Tuple[float, int]:
    """max of |gap_log| / (C |gap_image|) and the count of violations;
    pairs with a rejected point are dropped."""

    keep = np.isfinite(gap_log) & np.isfinite(gap_image)
    gap_log, gap_image = gap_log[keep], gap_image[keep]
    allowed = constant * gap_image + 1e-12 * (1.0 + np.abs(gap_log))
    with np.errstate(divide="ignore", invalid="ignore"):
        slack = np.where(
            gap_image > 0, np.abs(gap_log) / (constant * gap_image), 0.0
        )
    return float(np.max(slack)), int(np.sum(np.abs(gap_log) > allowed))


def distortion_check(
    family: MapFamily,
    n_pairs: int,
    seed: int = 0,
    s_hi: int = 50,
    q_hi: int = 50,
) -> DistortionReport:
    """bounded distortion on pairs sampled in common cylinders

    pairs (x, x') are the images phi(u), phi(u') of uniform points of
    Delta under a random inverse branch of Fhat (of Ftilde), so that
    Fhat(x) = u is the image gap.
    """

    # pylint: disable=too-many-arguments, too-many-locals

    rng = rng_stream(seed, 2)
    lo = float(family.delta_lo())
    s0, q0, s1, q1 = _sample_quads(rng, n_pairs, s_hi, q_hi)
    u = rng.uniform(lo, 1.0, n_pairs)
    u_prime = rng.uniform(lo, 1.0, n_pairs)

    phi0 = branch_array(family, s0, q0)
    x = np.asarray(phi0(u))
    x_prime = np.asarray(phi0(u_prime))
    image, log_d1, _, _ = fhat_array(family, x, reject=True)
    image_prime, log_d1_prime, _, _ = fhat_array(family, x_prime, reject=True)
    hat_slack, hat_bad = _pair_violations(
        log_d1 - log_d1_prime,
        np.abs(image - image_prime),
        chat_adler(family),
    )

    phi1 = branch_array(family, s1, q1)
    x = np.asarray(phi0(np.asarray(phi1(u))))
    x_prime = np.asarray(phi0(np.asarray(phi1(u_prime))))
    image, log_d1, _ = ftilde_array(family, x, reject=True)
    image_prime, log_d1_prime, _ = ftilde_array(family, x_prime, reject=True)
    tilde_slack, tilde_bad = _pair_violations(
        log_d1 - log_d1_prime,
        np.abs(image - image_prime),
        ctilde_adler(family),
    )
    logger.info(
        "distortion: slack %.4g (Fhat), %.4g (Ftilde)", hat_slack, tilde_slack
    )
    return DistortionReport(
        pairs=n_pairs,
        hat_slack=hat_slack,
        tilde_slack=tilde_slack,
        hat_violations=hat_bad,
        tilde_violations=tilde_bad,
        hat_constant=chat_adler(family),
        tilde_constant=ctilde_adler(family),
    )
