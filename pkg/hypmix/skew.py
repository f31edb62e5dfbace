"""skew products and fiber maps

This module defines the points of the plane R+ x R+, the skew product
P(x, y) = (f(x), g_x(y)), its first return Phat to Delta x R+ and the
double step Ptilde = Phat o Phat, together with the fiber maps Ghat_x,
Gtilde_x. Fibers are Moebius maps: g1^{s-1} is a translation and g0^{q-1}
a Moebius power.
"""

import math
from typing import Any, List, Tuple

import numpy as np

from hypmix._general import (
    DomainError,
    SingularityError,
    _check_inputs,
    _check_range,
)
from hypmix._mobius import _is_exact, _Mobius
from hypmix.inducing import (
    BranchIndex,
    Fhat_eval,
    Interval,
    QuadIndex,
    _image_error,
    fhat_array,
    locate,
    orbit_error,
)
from hypmix.map_family import MapFamily
from hypmix.parameters_settings import hm_params

__all__: List[str] = [
    "FiberImage",
    "FlowPoint",
    "PlanePoint",
    "P_step",
    "Phat_step",
    "Ptilde_step",
    "ghat_eval",
    "ghat_image",
    "ghat_map",
    "gtilde_deriv",
    "gtilde_eval",
    "ptilde_array",
]


class PlanePoint:
    """class for a point (x, y) of R+ x R+ off the singular line x = 1

    Attributes
    ----------
    x, y : float or Fraction
        the coordinates, both > 0, x != 1
    """

    __slots__ = ("x", "y")
    x: Any
    y: Any

    def __init__(self, x: Any, y: Any) -> None:
        """constructor for the PlanePoint class.

        examples
        --------
        >>> PlanePoint(0.5, 2.0).region
        'left'
        """

        if not (x > 0 and y > 0):
            raise DomainError(
                f"Input Error: (x, y) should be positive, got ({x}, {y})."
            )
        if x == 1:
            raise SingularityError("x = 1 is the singular line.")
        self.x = x
        self.y = y

    def __repr__(self) -> str:
        return f"PlanePoint({self.x}, {self.y})"

    def __eq__(self, other: object) -> bool:
        if isinstance(other, tuple):
            return (self.x, self.y) == other
        if not isinstance(other, PlanePoint):
            return NotImplemented
        return (self.x, self.y) == (other.x, other.y)

    @property
    def region(self) -> str:
        """left (x < 1) or right (x > 1)."""

        return "left" if self.x < 1 else "right"


class FiberImage(Interval):
    """class for the image Ghat_x(R+) of a fiber, of width at most 1."""

    @property
    def width(self) -> Any:
        return self.length


def _checked(x: Any, y: Any) -> PlanePoint:
    if not _is_exact(x) and abs(float(x) - 1.0) < hm_params.singularity_margin:
        raise SingularityError(f"the orbit reaches x = {x}, next to x = 1.")
    return PlanePoint(x, y)


def P_step(family: MapFamily, p: PlanePoint) -> PlanePoint:
    """one step of the skew product

    (f0(x), g0(y)) for x < 1 and (x - 1, y + 1) for x > 1; a
    SingularityError is raised when the image lies on x = 1.

    examples
    --------
    >>> from fractions import Fraction
    >>> from hypmix.map_family import modular_family
    >>> P_step(modular_family(), PlanePoint(Fraction(1, 3), Fraction(1)))
    PlanePoint(1/2, 1/2)
    """

    # pylint: disable=invalid-name

    if p.x < 1:
        return _checked(family.f0(p.x)[0], family.g0(p.y)[0])
    return _checked(p.x - 1, p.y + 1)


def ghat_map(
    family: MapFamily, s: int, q: int, exact: bool = True
) -> _Mobius:
    """Ghat_{s,q} = g0^{q-1} o g1^{s-1} o g0 as a Moebius map."""

    g0 = family.mobius("g0", 0 if exact else 0.0)
    return (
        family.g0_power(q - 1, exact=exact)
        .compose(_Mobius.translation(s - 1))
        .compose(g0)
    )


def ghat_eval(
    family: MapFamily, idx: BranchIndex, y: Any
) -> Tuple[Any, Any, Any]:
    """Ghat_x(y) with its first and second derivative, x in J_s^q."""

    if not y > 0:
        raise DomainError(f"Input Error: y should be > 0, got {y}.")
    exact = _is_exact(y) and family.exact_rational
    if not exact:
        y = float(y)
    return ghat_map(family, idx.s, idx.q, exact).evaluate(y)


def ghat_image(family: MapFamily, s: int, q: int) -> FiberImage:
    """the image Ghat_{s,q}(R+) = (g0^{q-1}(s-1), g0^{q-1}(s))

    examples
    --------
    >>> from hypmix.map_family import modular_family
    >>> ghat_image(modular_family(), 2, 4)
    FiberImage(1/4, 2/7)
    """

    power = family.g0_power(q - 1)
    zero = power.a - power.a
    return FiberImage(power(zero + s - 1), power(zero + s))


def _phat_parts(
    family: MapFamily, p: PlanePoint, err: float
) -> Tuple[PlanePoint, BranchIndex, Any]:
    idx = locate(family, p.x, err)[0]
    x, d1, _ = Fhat_eval(family, p.x, err)
    y = ghat_eval(family, idx, p.y)[0]
    return _checked(x, y), idx, d1


def Phat_step(
    family: MapFamily, p: PlanePoint, err: float = 0.0
) -> Tuple[PlanePoint, BranchIndex]:
    """the first return (Fhat(x), Ghat_x(y)) of (x, y) in Delta x R+

    err bounds the absolute error of a float p.x; an orbit point within
    its error of a partition endpoint raises a BoundaryError.

    examples
    --------
    >>> from fractions import Fraction
    >>> from hypmix.map_family import modular_family
    >>> Phat_step(modular_family(), PlanePoint(Fraction(11, 20), Fraction(1)))
    (PlanePoint(2/3, 3/11), BranchIndex(2, 4))
    """

    # pylint: disable=invalid-name

    image, idx, _ = _phat_parts(family, p, err)
    return image, idx


def Ptilde_step(
    family: MapFamily, p: PlanePoint
) -> Tuple[PlanePoint, QuadIndex]:
    """Ptilde = Phat o Phat."""

    # pylint: disable=invalid-name

    mid, first, d1 = _phat_parts(family, p, 0.0)
    image, second = Phat_step(family, mid, _image_error(p.x, mid.x, d1))
    return image, QuadIndex(first.s, first.q, second.s, second.q)


def gtilde_eval(family: MapFamily, quad: QuadIndex, y: Any) -> Tuple[Any, Any]:
    """Gtilde_x(y) and its derivative; x enters only through the quad."""

    mid, d1_first, _ = ghat_eval(family, quad.first, y)
    value, d1_second, _ = ghat_eval(family, quad.second, mid)
    return value, d1_second * d1_first


def gtilde_deriv(family: MapFamily, quad: QuadIndex, y: Any) -> Any:
    """the derivative of Gtilde_x at y, in (0, g0'(1)]

    examples
    --------
    >>> from fractions import Fraction
    >>> from hypmix.map_family import modular_family
    >>> gtilde_deriv(modular_family(), QuadIndex(2, 1, 2, 1), Fraction(1))
    Fraction(1, 25)
    """

    return gtilde_eval(family, quad, y)[1]


def _ghat_array(
    family: MapFamily, s: np.ndarray, q: np.ndarray, y: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Ghat and ln Ghat' elementwise; q = 0 marks a rejected point."""

    g0 = family.g0_float
    table = family.power_table("g0")
    rejected = q < 1
    s = np.where(rejected, 2, s)
    q = np.where(rejected, 1, q)
    inside = q - 1 < table.shape[0]
    shifted = np.asarray(g0(y)) + (s - 1)
    power = _Mobius.from_table(table, np.where(inside, q - 1, 0))
    value = np.asarray(power(shifted), dtype=float)
    log_d1 = np.log(np.asarray(g0.derivative(y))) + np.log(
        np.abs(power.derivative(shifted))
    )
    # beyond the table
    for i in np.flatnonzero(~inside):
        far = family.g0_power(int(q[i]) - 1, exact=False)
        value[i], d1, _ = far.evaluate(float(shifted[i]))
        log_d1[i] = math.log(float(g0.derivative(y[i]))) + math.log(abs(d1))
    value[rejected] = np.nan
    log_d1[rejected] = np.nan
    return value, log_d1


def ptilde_array(
    family: MapFamily, x: np.ndarray, y: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Ptilde on arrays of points of Delta x R+

    points whose orbit comes within its error bound of a partition
    endpoint or within the singularity margin of x = 1, and NaN points,
    are rejected: their outputs are NaN and their quads zero.

    returns
    -------
    (x_new, y_new, log_ftilde_d1, log_gtilde_d1, quads)
        quads is an (n, 4) integer array of (s0, q0, s1, q1)
    """

    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any((x <= float(family.delta_lo())) | (x >= 1.0)):
        raise DomainError("Input Error: x should be in (g0(1), 1).")
    mid_x, log_f_first, s0, q0 = fhat_array(family, x, reject=True)
    mid_err = orbit_error(x, mid_x, log_f_first)
    mid_y, log_g_first = _ghat_array(family, s0, q0, y)
    new_x, log_f_second, s1, q1 = fhat_array(family, mid_x, mid_err, True)
    new_y, log_g_second = _ghat_array(family, s1, q1, mid_y)
    quads = np.stack([s0, q0, s1, q1], axis=-1)
    quads[q1 == 0] = 0
    return (
        new_x,
        new_y,
        log_f_first + log_f_second,
        log_g_first + log_g_second,
        quads,
    )


class FlowPoint:
    """class for a point [(x, y), s] of a suspension

    Attributes
    ----------
    base : PlanePoint
        the point of the base
    s : float
        the height, 0 <= s < roof(base); only s >= 0 is checked here,
        the roof bound by flow_advance and project_pi
    space : str
        sigma_rho (roof rho over R+ x R+) or sigma_r (roof over Delta x R+)
    """

    # pylint: disable=too-few-public-methods

    __slots__ = ("base", "s", "space")
    base: PlanePoint
    s: float
    space: str

    def __init__(self, base: PlanePoint, s: float, space: str) -> None:
        _check_inputs("space", ["sigma_rho", "sigma_r"], space)
        _check_range("s", s, 0.0, None, closed=True)
        self.base = base
        self.s = float(s)
        self.space = space

    def __repr__(self) -> str:
        return f"FlowPoint({self.base!r}, s={self.s}, {self.space})"
