"""roof functions and Bowen's cohomology

This module defines the roof tower rho, R, Rhat, rhat, rtilde and r, the
closed forms of the Birkhoff sums, and the function u of Bowen's
cohomology rtilde = r* + u - u o Ptilde with certified truncation bounds.
All roof values are floats computed as sums of logarithms.
"""

import logging
import math
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np

from hypmix._general import (
    BoundaryError,
    DomainError,
    MismatchError,
    SingularityError,
    UnsuitablePointError,
    _check_range,
    _Dispatcher,
)
from hypmix.inducing import (
    BranchIndex,
    QuadIndex,
    ctilde_adler,
    fhat_log,
    locate,
    locate_s,
    orbit_error,
)
from hypmix.map_family import MapFamily
from hypmix.parameters_settings import VerifySettings, hm_params
from hypmix.skew import P_step, PlanePoint, ghat_eval, ptilde_array

__all__: List[str] = [
    "CohomologyResidual",
    "CohomologyValue",
    "RoofBirkhoff",
    "RoofConfig",
    "R_eval",
    "Rhat_eval",
    "bowen_u",
    "branch_roof_bound",
    "cohomology_residual",
    "ct_bound",
    "induced_roof_array",
    "r_cohomologous",
    "r_eval",
    "rhat_eval",
    "rhat_fiber_derivative",
    "rho_eval",
    "roof_birkhoff",
    "rtilde_eval",
    "rtilde_orbit",
]

logger = logging.getLogger(__name__)


class RoofConfig:
    """class for the settings of the roof r and of the cohomology series

    Attributes
    ----------
    y_prime : float
        the fiber point defining r(x) = rtilde(x, y'), > 0
    truncation_n : int
        number of terms of the series u, >= 1
    """

    # pylint: disable=too-few-public-methods

    __slots__ = ("y_prime", "truncation_n")
    y_prime: float
    truncation_n: int

    def __init__(self, y_prime: float = 1.0, truncation_n: int = 20) -> None:
        """constructor for the RoofConfig class; y_prime > 0 and
        truncation_n >= 1."""

        _check_range("y_prime", y_prime, 0.0)
        _check_range("truncation_n", truncation_n, 1, None, closed=True)
        self.y_prime = float(y_prime)
        self.truncation_n = int(truncation_n)

    @classmethod
    def from_settings(cls, settings: VerifySettings) -> "RoofConfig":
        return cls(settings.y_prime, settings.truncation_n)


class CohomologyValue:
    """class for a truncated value of u with its certified tail bound."""

    # pylint: disable=too-few-public-methods

    __slots__ = ("value", "tail_bound")
    value: float
    tail_bound: float

    def __init__(self, value: float, tail_bound: float) -> None:
        if not tail_bound >= 0:
            raise ValueError(
                f"Input Error: tail_bound should be >= 0, got {tail_bound}."
            )
        self.value = value
        self.tail_bound = tail_bound

    def __repr__(self) -> str:
        return f"CohomologyValue({self.value}, tail_bound={self.tail_bound})"


class CohomologyResidual:
    """class for the residual of rtilde = r* + u - u o Ptilde at a point

    Attributes
    ----------
    residual : float
        |rtilde(x,y) - r*(x) - u_N(x,y) + u_N(Ptilde(x,y))|
    tail_bound : float
        certified bound of the truncation error of u_N
    fiber_gap : float
        distance of the fibers of Ptilde^N(x,y) and Ptilde^N(x,y')
    """

    # pylint: disable=too-few-public-methods

    __slots__ = ("residual", "tail_bound", "fiber_gap")
    residual: float
    tail_bound: float
    fiber_gap: float

    def __init__(
        self, residual: float, tail_bound: float, fiber_gap: float
    ) -> None:
        self.residual = residual
        self.tail_bound = tail_bound
        self.fiber_gap = fiber_gap

    @property
    def passed(self) -> bool:
        return self.residual <= 2.0 * self.tail_bound


def _finite(value: float, where: Any) -> float:
    if not math.isfinite(value):
        raise SingularityError(f"the roof is not finite at {where}.")
    return value


def rho_eval(family: MapFamily, p: PlanePoint) -> float:
    """rho(x, y) = rho0 ln[(x/y)(g_x(y)/f(x))(f'(x)/d_y g_x(y))]

    examples
    --------
    >>> from hypmix.map_family import modular_family
    >>> round(rho_eval(modular_family(), PlanePoint(0.5, 1.0)), 12)
    0.69314718056
    """

    x = float(p.x)
    y = float(p.y)
    if x < 1:
        f_value, f_d1, _ = family.f0(x)
        g_value, g_d1, _ = family.g0(y)
        logs = (
            math.log(x),
            -math.log(y),
            math.log(g_value),
            -math.log(f_value),
            math.log(f_d1),
            -math.log(g_d1),
        )
    else:
        logs = (math.log(x), -math.log(y), math.log(y + 1), -math.log(x - 1))
    return _finite(family.rho0 * math.fsum(logs), p)


def _v(family: MapFamily, x: float, y: float) -> float:
    """the transfer function v = rho0 ln(x/y)."""

    return family.rho0 * (math.log(x) - math.log(y))


def _birkhoff(family: MapFamily, p: PlanePoint, steps: int) -> float:
    terms = []
    point = p
    for _ in range(steps):
        terms.append(rho_eval(family, point))
        point = P_step(family, point)
    return math.fsum(terms)


def _compare(closed: float, birkhoff: float, what: str) -> float:
    tol = hm_params.closed_form_tol * max(1.0, abs(closed))
    if abs(closed - birkhoff) > tol:
        raise MismatchError(
            f"{what}: closed form {closed} and Birkhoff sum {birkhoff} "
            "disagree."
        )
    return closed


def R_eval(family: MapFamily, p: PlanePoint, check: bool = True) -> float:
    """R = sum of rho over tau steps, rho0 ln[(x/y)(G/F)(F'/G')]

    the Birkhoff sum is compared with the closed form when check is set;
    the closed form is returned.
    """

    # pylint: disable=invalid-name

    if not p.x < 1:
        raise DomainError(f"Input Error: x should be in (0, 1), got {p.x}.")
    s = locate_s(family, p.x)
    x = float(p.x)
    y = float(p.y)
    f_value, f_d1, _ = family.f0(x)
    g_value, g_d1, _ = family.g0(y)
    closed = family.rho0 * math.fsum(
        (
            math.log(x),
            -math.log(y),
            math.log(g_value + (s - 1)),
            -math.log(f_value - (s - 1)),
            math.log(f_d1),
            -math.log(g_d1),
        )
    )
    if check:
        return _compare(closed, _birkhoff(family, p, s), "R")
    return closed


def _hat_parts(
    family: MapFamily, x: float, y: float, idx: Optional[BranchIndex] = None
) -> Tuple[float, float, float, float, BranchIndex]:
    """Fhat(x), ln Fhat'(x), Ghat_x(y), ln Ghat_x'(y) and the branch."""

    fx, log_f, idx = fhat_log(family, x, idx)
    gy, g_d1, _ = ghat_eval(family, idx, y)
    return fx, log_f, float(gy), math.log(g_d1), idx


def Rhat_eval(family: MapFamily, p: PlanePoint, check: bool = True) -> float:
    """Rhat = sum of rho over theta steps,
    rho0 ln[(x/y)(Ghat/Fhat)(Fhat'/Ghat')]."""

    # pylint: disable=invalid-name

    idx = locate(family, p.x)[0]
    x = float(p.x)
    y = float(p.y)
    fx, log_f, gy, log_g, _ = _hat_parts(family, x, y, idx)
    closed = _v(family, x, y) - _v(family, fx, gy)
    closed += family.rho0 * (log_f - log_g)
    if check:
        steps = idx.return_times().theta
        return _compare(closed, _birkhoff(family, p, steps), "Rhat")
    return closed


def rhat_eval(family: MapFamily, p: PlanePoint, check: bool = True) -> float:
    """rhat = rho0 ln[Fhat'(x) / Ghat_x'(y)], cohomologous to Rhat via
    v = rho0 ln(x/y): rhat = Rhat - v + v o Phat.

    examples
    --------
    >>> from hypmix.map_family import modular_family
    >>> round(rhat_eval(modular_family(), PlanePoint(0.65, 1.0)), 6)
    1.742969
    """

    x = float(p.x)
    y = float(p.y)
    fx, log_f, gy, log_g, _ = _hat_parts(family, x, y)
    value = _finite(family.rho0 * (log_f - log_g), p)
    if check:
        expected = Rhat_eval(family, p) - _v(family, x, y) + _v(family, fx, gy)
        _compare(value, expected, "rhat")
    return value


def _tilde_step(
    family: MapFamily, x: float, ys: Sequence[float], err: float = 0.0
) -> Tuple[float, float, QuadIndex, List[Tuple[float, float]], float]:
    """one Ptilde step of the fibers ys over x

    returns Ftilde(x), ln Ftilde'(x), the quad, per fiber point
    (Gtilde_x(y), ln Gtilde_x'(y)) and the error bound of Ftilde(x) given
    the error err of x.
    """

    mid, log_first, first = fhat_log(family, x, err=err)
    mid_err = float(orbit_error(x, mid, log_first, err))
    end, log_second, second = fhat_log(family, mid, err=mid_err)
    end_err = float(orbit_error(mid, end, log_second, mid_err))
    fibers = []
    for y in ys:
        gy, d1_first, _ = ghat_eval(family, first, y)
        gz, d1_second, _ = ghat_eval(family, second, float(gy))
        fibers.append((float(gz), math.log(d1_first) + math.log(d1_second)))
    quad = QuadIndex(first.s, first.q, second.s, second.q)
    return end, log_first + log_second, quad, fibers, end_err


def rtilde_eval(family: MapFamily, p: PlanePoint) -> float:
    """rtilde = rho0 ln[Ftilde'(x) / Gtilde_x'(y)] = rhat + rhat o Phat."""

    _, log_f, _, fibers, _ = _tilde_step(family, float(p.x), [float(p.y)])
    return _finite(family.rho0 * (log_f - fibers[0][1]), p)


def r_eval(
    family: MapFamily, x: Any, cfg: Optional[RoofConfig] = None
) -> float:
    """the x-only roof r(x) = rtilde(x, y')

    examples
    --------
    >>> from hypmix.map_family import modular_family
    >>> r_eval(modular_family(), math.sqrt(0.5)) > math.log(4)
    True
    """

    cfg = cfg if cfg is not None else RoofConfig()
    return rtilde_eval(family, PlanePoint(float(x), cfg.y_prime))


def rtilde_orbit(
    family: MapFamily,
    x: float,
    ys: Sequence[float],
    n: int,
    err: float = 0.0,
) -> Tuple[List[List[float]], List[float], List[QuadIndex], List[float]]:
    """rtilde along n steps of Ptilde for fibers ys over the same x

    err bounds the error of x; the bound is carried along the orbit so
    that a point drifting onto a partition endpoint raises a
    BoundaryError instead of taking a wrong branch.

    returns
    -------
    (terms, fibers_end, quads, x_orbit)
        terms[k][i] is rtilde(Ptilde^i(x, ys[k])), fibers_end the fiber
        points after n steps, x_orbit the points Ftilde^i(x), i <= n
    """

    terms: List[List[float]] = [[] for _ in ys]
    fibers = [float(y) for y in ys]
    quads = []
    x_orbit = [float(x)]
    for _ in range(n):
        end, log_f, quad, images, err = _tilde_step(
            family, x_orbit[-1], fibers, err
        )
        for k, (_, log_g) in enumerate(images):
            terms[k].append(family.rho0 * (log_f - log_g))
        fibers = [image for image, _ in images]
        quads.append(quad)
        x_orbit.append(end)
    logger.debug("rtilde orbit of %s: error bound %.3e", x, err)
    return terms, fibers, quads, x_orbit


def ct_bound(family: MapFamily) -> float:
    """C_T = rho0 C_A (1 + C_I2 sum_{l>=1} omega_l^(2)), a bound of
    |d rhat / d eta| and so the fiber Lipschitz constant of rhat.

    examples
    --------
    >>> from hypmix.map_family import modular_family
    >>> round(ct_bound(modular_family()), 6)
    3.579736
    """

    return (
        family.rho0
        * family.adler_constant()
        * (1.0 + family.ci2 * family.omega2.total())
    )


def _tail_bound(
    family: MapFamily, y: float, y_prime: float, n: int, terms: Sequence[float]
) -> float:
    """2 C_T min(|y - y'|, 1/g) g^n / (1 - g), g = g0'(1), plus rounding."""

    contraction = float(family.g0_float.derivative(1.0))
    gap = min(abs(y - y_prime), 1.0 / contraction)
    bound = 2.0 * ct_bound(family) * gap * contraction**n
    bound /= 1.0 - contraction
    rounding = 64 * 2.0**-52 * math.fsum(abs(t) for t in terms)
    return bound + rounding


def bowen_u(
    family: MapFamily, cfg: RoofConfig, p: PlanePoint, err: float = 0.0
) -> CohomologyValue:
    """truncated transfer function of Bowen's cohomology

    u_N(x, y) = sum_{i<N} [rtilde(Ptilde^i(x,y)) - rtilde(Ptilde^i(x,y'))].
    An UnsuitablePointError is raised when an orbit hits a boundary.

    parameters
    ----------
    family : MapFamily
        the family
    cfg : RoofConfig
        y' and N
    p : PlanePoint
        a point of Delta x R+
    err : float
        a bound of the error of p.x, for orbit points [default 0]

    returns
    -------
    CohomologyValue
    """

    x = float(p.x)
    y = float(p.y)
    try:
        terms, _, _, _ = rtilde_orbit(
            family, x, [y, cfg.y_prime], cfg.truncation_n, err
        )
    except (BoundaryError, SingularityError) as error:
        raise UnsuitablePointError(
            f"the Ptilde orbit of ({x}, {y}) is unsuitable: {error}"
        ) from error
    differences = [a - b for a, b in zip(terms[0], terms[1])]
    value = math.fsum(differences)
    bound = _tail_bound(
        family, y, cfg.y_prime, cfg.truncation_n, terms[0] + terms[1]
    )
    return CohomologyValue(value, bound)


def _first_tilde_step(
    family: MapFamily, x: float, y: float
) -> Tuple[float, float, List[Tuple[float, float]], float]:
    try:
        end, log_f, _, images, end_err = _tilde_step(family, x, [y])
    except (BoundaryError, SingularityError) as error:
        raise UnsuitablePointError(
            f"x = {x} is unsuitable: {error}"
        ) from error
    return end, log_f, images, end_err


def r_cohomologous(family: MapFamily, cfg: RoofConfig, x: Any) -> float:
    """the x-only roof r*(x) = r(x) + u_N(Ptilde(x, y')) cohomologous to
    rtilde up to the truncation of u."""

    x = float(x)
    end, log_f, images, end_err = _first_tilde_step(family, x, cfg.y_prime)
    r_value = family.rho0 * (log_f - images[0][1])
    correction = bowen_u(family, cfg, PlanePoint(end, images[0][0]), end_err)
    return r_value + correction.value


def cohomology_residual(
    family: MapFamily, cfg: RoofConfig, p: PlanePoint
) -> CohomologyResidual:
    """the residual |rtilde(x,y) - r*(x) - u_N(x,y) + u_N(Ptilde(x,y))|

    the residual equals rtilde(Ptilde^N(x,y)) - rtilde(Ptilde^N(x,y')) and
    is certified by the tail bound of u_N.
    """

    x = float(p.x)
    y = float(p.y)
    end, log_f, images, end_err = _first_tilde_step(family, x, y)
    rtilde_value = family.rho0 * (log_f - images[0][1])
    u_here = bowen_u(family, cfg, p)
    u_next = bowen_u(family, cfg, PlanePoint(end, images[0][0]), end_err)
    r_star = r_cohomologous(family, cfg, x)
    residual = abs(rtilde_value - r_star - u_here.value + u_next.value)
    _, fibers, _, _ = rtilde_orbit(
        family, x, [y, cfg.y_prime], cfg.truncation_n
    )
    fiber_gap = abs(fibers[0] - fibers[1])
    logger.debug(
        "cohomology residual %.3e (tail %.3e) at (%s, %s)",
        residual,
        u_here.tail_bound,
        x,
        y,
    )
    return CohomologyResidual(residual, u_here.tail_bound, fiber_gap)


class RoofBirkhoff:
    """class for the Birkhoff sums of the roof along n steps of Ftilde

    Attributes
    ----------
    r_sum : float
        r^(n)(x) = sum_{i<n} r(Ftilde^i x)
    rtilde_sum : float
        sum_{i<n} rtilde(Ptilde^i(x, y'))
    rho_sum : float
        the sum of rho over the theta_tilde^(n) steps of P from (x, y')
    coboundary : float
        v(x, y') - v(Ptilde^n(x, y')), with rho_sum = rtilde_sum + coboundary
    steps : int
        theta_tilde^(n)(x)
    """

    # pylint: disable=too-few-public-methods

    __slots__ = ("r_sum", "rtilde_sum", "rho_sum", "coboundary", "steps")
    r_sum: float
    rtilde_sum: float
    rho_sum: float
    coboundary: float
    steps: int

    def __init__(
        self,
        r_sum: float,
        rtilde_sum: float,
        rho_sum: float,
        coboundary: float,
        steps: int,
    ) -> None:
        # pylint: disable=too-many-arguments
        self.r_sum = r_sum
        self.rtilde_sum = rtilde_sum
        self.rho_sum = rho_sum
        self.coboundary = coboundary
        self.steps = steps


def roof_birkhoff(
    family: MapFamily,
    x: Any,
    n: int,
    cfg: Optional[RoofConfig] = None,
    with_rho: bool = True,
) -> RoofBirkhoff:
    """Birkhoff sums of r and rtilde over n steps, and the matching sum
    of rho over the flow-level steps (skipped unless with_rho)."""

    cfg = cfg if cfg is not None else RoofConfig()
    x = float(x)
    terms, fibers, quads, x_orbit = rtilde_orbit(family, x, [cfg.y_prime], n)
    r_terms = [
        r_eval(family, point, cfg) for point in x_orbit[:-1]
    ]
    steps = sum(quad.theta for quad in quads)
    coboundary = _v(family, x, cfg.y_prime) - _v(
        family, x_orbit[-1], fibers[0]
    )
    rho_sum = math.nan
    if with_rho:
        rho_sum = _birkhoff(family, PlanePoint(x, cfg.y_prime), steps)
    return RoofBirkhoff(
        math.fsum(r_terms), math.fsum(terms[0]), rho_sum, coboundary, steps
    )


def rhat_fiber_derivative(
    family: MapFamily, idx: BranchIndex, eta: Any
) -> float:
    """d rhat(x, eta) / d eta = -rho0 Ghat''(eta) / Ghat'(eta) for x in
    J_s^q; it does not depend on x."""

    _, d1, d2 = ghat_eval(family, idx, float(eta))
    return float(-family.rho0 * d2 / d1)


def branch_roof_bound(family: MapFamily) -> float:
    """rho0 Ctilde_A, the bound of |D(r o phi)| on inverse branches of
    Ftilde."""

    return family.rho0 * ctilde_adler(family)


class _InducedRoof:  # pragma: no cover
    """abstract class for the roof of the induced suspension Sigma_r."""

    @staticmethod
    def values(
        family: MapFamily,
        x: np.ndarray,
        y: np.ndarray,
        cfg: RoofConfig,
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """the roof at (x, y) and the image Ptilde(x, y)."""

        raise NotImplementedError


class _InducedRoofBirkhoff(_InducedRoof):
    """Rtilde = rtilde + v - v o Ptilde, the sum of rho over the
    theta_tilde steps of P."""

    @staticmethod
    def values(
        family: MapFamily,
        x: np.ndarray,
        y: np.ndarray,
        cfg: RoofConfig,
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        new_x, new_y, log_f, log_g, _ = ptilde_array(family, x, y)
        with np.errstate(divide="ignore", invalid="ignore"):
            coboundary = np.log(x) - np.log(y) - np.log(new_x) + np.log(new_y)
        roof = family.rho0 * (log_f - log_g + coboundary)
        return roof, new_x, new_y


class _InducedRoofR(_InducedRoof):
    """the x-only roof r(x) = rtilde(x, y')."""

    @staticmethod
    def values(
        family: MapFamily,
        x: np.ndarray,
        y: np.ndarray,
        cfg: RoofConfig,
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = x.size
        both_x = np.concatenate([x, x])
        both_y = np.concatenate([y, np.full(n, cfg.y_prime)])
        new_x, new_y, log_f, log_g, _ = ptilde_array(family, both_x, both_y)
        roof = family.rho0 * (log_f[n:] - log_g[n:])
        return roof, new_x[:n], new_y[:n]


_dp_induced_roof: _Dispatcher[_InducedRoof] = _Dispatcher(_InducedRoof())
"""dispatcher for the roof of Sigma_r

_dp_induced_roof.dispatch("birkhoff") returns the roof for which the
projection to Sigma_rho is exact, "r" the x-only roof.
"""
_dp_induced_roof.set_method("birkhoff", _InducedRoofBirkhoff())
_dp_induced_roof.set_method("r", _InducedRoofR())


def induced_roof_array(
    family: MapFamily,
    x: np.ndarray,
    y: np.ndarray,
    kind: str = "birkhoff",
    cfg: Optional[RoofConfig] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """the roof of Sigma_r on arrays of points of Delta x R+

    parameters
    ----------
    family : MapFamily
        the family
    x, y : numpy.ndarray
        points of Delta x R+
    kind : str
        birkhoff [default] (sum of rho along the P-orbit up to the
        return, so that the projection to Sigma_rho is exact) or r
    cfg : RoofConfig, optional
        y' for the roof r

    returns
    -------
    (roof, x_new, y_new) : numpy.ndarray
        the roof and the image Ptilde(x, y)
    """

    cfg = cfg if cfg is not None else RoofConfig()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return _dp_induced_roof.dispatch(kind).values(family, x, y, cfg)
