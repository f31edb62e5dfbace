"""invariant densities, normalizations and samplers

This module defines the invariant measure m of the modular skew product,
with density 1/(x+y)^2 on R+ x R+, its marginal 1/x, the probability
measures mu_hat (on Delta) and nu (on Delta x R+), the suspension
measures m_rho and nu_r, their samplers and the invariance checks.

m is infinite; samplers of m and m_rho work on a SamplingWindow, while
nu and nu_r are probabilities and need none. Every sampler takes a numpy
Generator; rng_stream builds the counter-based stream of a (seed,
stream) pair.
"""

import functools
import logging
import math
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, stats

from hypmix._general import ConfigError, DomainError, RejectionBudgetError
from hypmix.inducing import ftilde_array, inverse_branch_array
from hypmix.map_family import MapFamily
from hypmix.parameters_settings import MeasureSettings
from hypmix.roof import RoofConfig, induced_roof_array
from hypmix.skew import FlowPoint, PlanePoint, ptilde_array

__all__: List[str] = [
    "ChiSquareReport",
    "DensitySpec",
    "InvarianceReport",
    "MRhoNormalizer",
    "NuSample",
    "SamplingWindow",
    "TransferResidual",
    "conditional_y",
    "density_m",
    "invariance_mc",
    "m_rho_normalizer",
    "marginal",
    "marginal_quadrature",
    "mu_hat_chi2",
    "nu_invariance_chi2",
    "omitted_mass",
    "preimage_rects",
    "rect_mass",
    "rho_marginal",
    "rng_stream",
    "sample_m",
    "sample_m_rho",
    "sample_m_rho_array",
    "sample_nu",
    "sample_nu_r",
    "strip_mass",
    "strip_quadrature",
    "transfer_residual",
]

logger = logging.getLogger(__name__)

Rect = Tuple[Tuple[float, float], Tuple[float, float]]

_INVARIANCE_STREAMS = (3, 4)
_Y_EDGES = (0.25, 0.5, 1.0, 2.0, 4.0)


def rng_stream(seed: int, stream: int) -> np.random.Generator:
    """the counter-based generator of a (seed, stream) pair

    examples
    --------
    >>> a = rng_stream(42, 7).random(3)
    >>> b = rng_stream(42, 7).random(3)
    >>> bool((a == b).all())
    True
    """

    key = np.array([seed, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _open_uniform(rng: np.random.Generator, n: int) -> np.ndarray:
    """uniforms on the open interval (0, 1)."""

    return rng.integers(1, 2**53, n) / 2.0**53


class SamplingWindow:
    """class for the window of the samplers of the infinite measure m

    Attributes
    ----------
    x_window : (float, float)
        x_lo < 1 - gap and x_hi > 1 + gap
    y_window : (float, float)
        0 < y_lo < y_hi, used by the m_rho sampler
    gap : float
        half width of the strip around x = 1 left out
    """

    __slots__ = ("x_window", "y_window", "gap")
    x_window: Tuple[float, float]
    y_window: Tuple[float, float]
    gap: float

    def __init__(
        self,
        x_window: Tuple[float, float] = (0.05, 20.0),
        y_window: Tuple[float, float] = (0.05, 20.0),
        gap: float = 1e-3,
    ) -> None:
        """constructor for the SamplingWindow class; the ranges are
        validated as for the [measure] section."""

        settings = MeasureSettings(
            x_window=x_window, y_window=y_window, singular_gap=gap
        )
        self.x_window = settings.x_window
        self.y_window = settings.y_window
        self.gap = settings.singular_gap

    def __repr__(self) -> str:
        return (
            f"SamplingWindow(x={self.x_window}, y={self.y_window}, "
            f"gap={self.gap})"
        )

    @classmethod
    def from_settings(cls, settings: MeasureSettings) -> "SamplingWindow":
        return cls(settings.x_window, settings.y_window, settings.singular_gap)

    def x_pieces(self) -> List[Tuple[float, float]]:
        """the two x-ranges, left and right of the gap."""

        x_lo, x_hi = self.x_window
        return [(x_lo, 1.0 - self.gap), (1.0 + self.gap, x_hi)]

    def log_masses(self) -> np.ndarray:
        """m(piece x R+) = ln(hi / lo) for both x-ranges."""

        return np.array([strip_mass(lo, hi) for lo, hi in self.x_pieces()])

    def x_mass(self) -> float:
        """the mass of m over the x-window times R+."""

        return float(np.sum(self.log_masses()))

    def mass(self) -> float:
        """the mass of m over the x-window times the y-window."""

        return math.fsum(
            rect_mass((piece, self.y_window)) for piece in self.x_pieces()
        )

    def corners(self) -> List[Tuple[float, float]]:
        """the corners of the window, on both sides of the gap."""

        xs = [x for piece in self.x_pieces() for x in piece]
        return [(x, y) for x in xs for y in self.y_window]


class DensitySpec:
    """class for the closed-form invariant measures of the modular family

    Attributes
    ----------
    family : MapFamily
        a family with f0(x) = x / (1 - x)
    window : SamplingWindow
        the window of the samplers of m and m_rho
    rejection_cap : int
        maximum number of proposals per accepted draw
    roof_cap : float
        envelope of the roof of Sigma_r
    """

    __slots__ = ("family", "window", "rejection_cap", "roof_cap")
    family: MapFamily
    window: SamplingWindow
    rejection_cap: int
    roof_cap: float

    def __init__(
        self,
        family: MapFamily,
        window: Optional[SamplingWindow] = None,
        rejection_cap: Optional[int] = None,
        roof_cap: Optional[float] = None,
    ) -> None:
        """constructor for the DensitySpec class.

        a ConfigError is raised for families other than the modular one,
        for which no closed-form density is known.

        examples
        --------
        >>> from hypmix.map_family import modular_family
        >>> spec = DensitySpec(modular_family())
        >>> round(spec.nu_normalizer, 12)
        0.69314718056
        """

        if not family.is_modular():
            raise ConfigError(
                "Input Error: family should be modular for the closed-form "
                f"density, got {family.name}."
            )
        settings = MeasureSettings(
            rejection_cap=rejection_cap, roof_cap=roof_cap
        )
        self.family = family
        self.window = window if window is not None else SamplingWindow()
        self.rejection_cap = settings.rejection_cap
        self.roof_cap = settings.roof_cap

    def __repr__(self) -> str:
        return f"DensitySpec({self.family.name}, {self.window!r})"

    @classmethod
    def from_settings(
        cls, family: MapFamily, settings: MeasureSettings
    ) -> "DensitySpec":
        return cls(
            family,
            SamplingWindow.from_settings(settings),
            settings.rejection_cap,
            settings.roof_cap,
        )

    @property
    def delta(self) -> Tuple[float, float]:
        """the inducing interval Delta = (g0(1), 1)."""

        return float(self.family.delta_lo()), 1.0

    @property
    def mu_hat_normalizer(self) -> float:
        """the mass of pi_* m over Delta."""

        lo, hi = self.delta
        return strip_mass(lo, hi)

    @property
    def nu_normalizer(self) -> float:
        """the mass of m over Delta x R+, equal to that of pi_* m."""

        return self.mu_hat_normalizer

    def rho(self, x: Any, y: Any) -> np.ndarray:
        """the closed form of rho: rho0 ln((1+y)/(1-x)) left of x = 1,
        rho0 ln(x(1+y)/(y(x-1))) right of it."""

        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            right = np.where(x > 1.0, np.log(x) - np.log(y), 0.0)
            value = np.log1p(y) - np.log(np.abs(1.0 - x)) + right
        return self.family.rho0 * value

    def rho_max(self) -> float:
        """the sup of rho over the window, attained at a corner."""

        corners = np.array(self.window.corners())
        return float(np.max(self.rho(corners[:, 0], corners[:, 1])))


def density_m(spec: DensitySpec, p: Any) -> Any:
    """the density 1/(x+y)^2 of m, for a PlanePoint or an (x, y) pair

    examples
    --------
    >>> from hypmix.map_family import modular_family
    >>> density_m(DensitySpec(modular_family()), (1, 1))
    0.25
    """

    # pylint: disable=unused-argument

    x, y = (p.x, p.y) if isinstance(p, PlanePoint) else p
    return 1 / (x + y) ** 2


def marginal(spec: DensitySpec, x: Any) -> Any:
    """the density 1/x of pi_* m."""

    # pylint: disable=unused-argument

    return 1 / x


def strip_mass(a: float, b: float) -> float:
    """m((a, b) x R+) = ln(b / a)

    examples
    --------
    >>> round(strip_mass(0.5, 1.0), 12)
    0.69314718056
    """

    if not 0 < a < b:
        raise DomainError(
            f"Input Error: (a, b) should satisfy 0 < a < b, got ({a}, {b})."
        )
    return math.log(b / a)


def rect_mass(rect: Rect) -> float:
    """m((a1, a2) x (b1, b2)), b2 = inf allowed

    ln((a2+b1)/(a1+b1)) - ln((a2+b2)/(a1+b2)).
    """

    (a1, a2), (b1, b2) = rect
    if not (0 <= a1 < a2 and 0 <= b1 < b2):
        raise DomainError(f"Input Error: rect should be ordered, got {rect}.")
    if a1 + b1 == 0:
        raise DomainError(
            f"Input Error: rect should avoid the corner (0, 0), got {rect}."
        )
    first = math.log((a2 + b1) / (a1 + b1))
    second = 0.0 if math.isinf(b2) else math.log((a2 + b2) / (a1 + b2))
    return first - second


def marginal_quadrature(spec: DensitySpec, x: float) -> float:
    """int_0^inf 1/(x+y)^2 dy by quadrature, equal to 1/x."""

    value, _ = integrate.quad(
        lambda y: density_m(spec, (x, y)),
        0.0,
        math.inf,
        epsabs=1e-13,
        epsrel=1e-12,
    )
    return value


def strip_quadrature(spec: DensitySpec, a: float, b: float) -> float:
    """m((a, b) x R+) by double quadrature, equal to ln(b / a)."""

    value, error = integrate.dblquad(
        lambda y, x: density_m(spec, (x, y)),
        a,
        b,
        0.0,
        math.inf,
        epsabs=1e-12,
        epsrel=1e-12,
    )
    logger.debug("strip (%s, %s): %.15g +- %.1e", a, b, value, error)
    return value


def rho_marginal(spec: DensitySpec, x: Any) -> Any:
    """int_0^inf rho(x, y) / (x+y)^2 dy
    = rho0 [ln x / (x-1) - ln|1-x| / x]."""

    x = np.asarray(x, dtype=float)
    value = np.log(x) / (x - 1.0) - np.log(np.abs(1.0 - x)) / x
    return spec.family.rho0 * value


class MRhoNormalizer:
    """class for the mass of m_rho = m x Leb

    Attributes
    ----------
    window : float
        the mass over the sampling window
    window_error : float
        the quadrature error estimate of window
    full : float
        the mass over all of R+ x R+
    """

    # pylint: disable=too-few-public-methods

    __slots__ = ("window", "window_error", "full")
    window: float
    window_error: float
    full: float

    def __init__(
        self, window: float, window_error: float, full: float
    ) -> None:
        self.window = window
        self.window_error = window_error
        self.full = full

    def __repr__(self) -> str:
        return f"MRhoNormalizer(window={self.window}, full={self.full})"

    @property
    def sensitivity(self) -> float:
        """the mass outside the window."""

        return self.full - self.window


def m_rho_normalizer(spec: DensitySpec) -> MRhoNormalizer:
    """the integral of rho dm over the sampling window (double quadrature)
    and over the whole plane (quadrature of rho_marginal)."""

    y_lo, y_hi = spec.window.y_window
    window = 0.0
    error = 0.0
    for x_lo, x_hi in spec.window.x_pieces():
        value, err = integrate.dblquad(
            lambda y, x: float(spec.rho(x, y)) / (x + y) ** 2,
            x_lo,
            x_hi,
            y_lo,
            y_hi,
            epsabs=1e-10,
            epsrel=1e-10,
        )
        window += value
        error += err
    full = 0.0
    for lo, hi in ((0.0, 1.0), (1.0, 2.0), (2.0, math.inf)):
        value, _ = integrate.quad(
            lambda x: float(rho_marginal(spec, x)), lo, hi, limit=200
        )
        full += value
    logger.info("m_rho mass: window %.10g, full %.10g", window, full)
    return MRhoNormalizer(window, error, full)


# the omitted mass decays like 1 / N, so halving the truncation should
# roughly double the residual
_TRANSFER_RATE = 0.75


class TransferResidual:
    """class for the residual of the transfer operator of Fhat at a density

    Attributes
    ----------
    x : float
        the point of Delta
    s_max, q_max : int
        the truncation
    partial : float
        sum_{s <= s_max, q <= q_max} h(phi_s^q(x)) (phi_s^q)'(x)
    residual : float
        |partial - h(x)|
    tail_bound : float
        bound of the omitted terms, sup_Delta (h(y) y) times the omitted
        mass of the marginal 1/x, which is known in closed form
    coarse_residual : float
        the residual at the halved truncation
    rounding : float
        the rounding allowance of the partial sum
    """

    # pylint: disable=too-few-public-methods

    __slots__ = (
        "x",
        "s_max",
        "q_max",
        "partial",
        "residual",
        "tail_bound",
        "coarse_residual",
        "rounding",
    )
    x: float
    s_max: int
    q_max: int
    partial: float
    residual: float
    tail_bound: float
    coarse_residual: float
    rounding: float

    def __init__(self, **fields: Any) -> None:
        for key in self.__slots__:
            setattr(self, key, fields[key])

    def __repr__(self) -> str:
        return (
            f"TransferResidual(x={self.x}, residual={self.residual}, "
            f"tail_bound={self.tail_bound})"
        )

    @property
    def rate(self) -> float:
        """residual / coarse_residual, about 1/2 for an invariant density
        and about 1 when the density is not invariant."""

        if self.coarse_residual <= self.rounding:
            return 0.0
        return self.residual / self.coarse_residual

    @property
    def passed(self) -> bool:
        """the residual is covered by the tail and shrinks with the
        truncation."""

        covered = self.residual <= self.tail_bound + self.rounding
        return covered and self.rate <= _TRANSFER_RATE

    def record(self) -> Dict[str, object]:
        return {
            "check": "transfer",
            "n": self.s_max,
            "grid_size": self.q_max,
            "value": self.residual,
            "reference": self.tail_bound,
            "witness": self.x,
            "pass": self.passed,
        }


def omitted_mass(x: float, s_max: int, q_max: int) -> float:
    """the terms of sum_{s >= 2, q >= 1} (phi_s^q)'(x) / phi_s^q(x) = 1/x
    left out by the truncation s <= s_max, q <= q_max

    with w = g0^{q-1}(x) = x / (1 + (q-1) x), the sum over s > s_max
    telescopes to w' / (s_max + w) and the sum over all s of the levels
    q > q_max to 1 / (x (1 + q_max x)).

    examples
    --------
    >>> round(omitted_mass(0.5, 1, 1), 12)
    2.0
    """

    q = np.arange(1, q_max + 1, dtype=float)
    shifted = 1.0 + (q - 1.0) * x
    w = x / shifted
    inner = math.fsum(1.0 / (shifted**2 * (s_max + w)))
    return inner + 1.0 / (x * (1.0 + q_max * x))


def transfer_residual(
    spec: DensitySpec,
    x: float,
    s_max: int = 200,
    q_max: int = 200,
    density: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> TransferResidual:
    """the residual of the invariant density of Fhat at a point of Delta

    parameters
    ----------
    spec : DensitySpec
        the density
    x : float
        a point of (g0(1), 1)
    s_max, q_max : int
        the truncation, s_max >= 2, q_max >= 1
    density : callable, optional
        the density h under test, vectorised [default: the marginal 1/x]

    returns
    -------
    TransferResidual
    """

    # pylint: disable=too-many-locals

    family = spec.family
    lo, hi = spec.delta
    if not lo < x < hi:
        raise DomainError(
            f"Input Error: x should be in ({lo}, {hi}), got {x}."
        )
    if s_max < 2 or q_max < 1:
        raise ConfigError(
            "Input Error: (s_max, q_max) should be >= (2, 1), got "
            f"({s_max}, {q_max})."
        )
    if density is None:
        density = functools.partial(marginal, spec)
    s = np.arange(2, s_max + 1).reshape(-1, 1)
    q = np.arange(1, q_max + 1).reshape(1, -1)
    s, q = np.broadcast_arrays(s, q)
    value, log_d1 = inverse_branch_array(
        family, s.ravel(), q.ravel(), np.full(s.size, float(x))
    )
    terms = np.asarray(density(value), dtype=float) * np.exp(log_d1)
    target = float(density(np.array([float(x)]))[0])
    partial = math.fsum(terms)
    s_half, q_half = max(s_max // 2, 2), max(q_max // 2, 1)
    coarse = (s.ravel() <= s_half) & (q.ravel() <= q_half)
    coarse_residual = abs(math.fsum(terms[coarse]) - target)
    if (s_half, q_half) == (s_max, q_max):
        coarse_residual = 0.0
    grid = np.linspace(lo, hi, 1001)
    weight = float(np.max(np.asarray(density(grid), dtype=float) * grid))
    tail = weight * omitted_mass(float(x), s_max, q_max)
    rounding = 256 * np.finfo(float).eps * math.fsum(np.abs(terms))
    residual = abs(partial - target)
    logger.debug(
        "transfer residual at %s: %.3e (tail %.3e, coarse %.3e)",
        x,
        residual,
        tail,
        coarse_residual,
    )
    return TransferResidual(
        x=float(x),
        s_max=s_max,
        q_max=q_max,
        partial=partial,
        residual=residual,
        tail_bound=tail,
        coarse_residual=coarse_residual,
        rounding=float(rounding),
    )


def preimage_rects(spec: DensitySpec, rect: Rect) -> List[Rect]:
    """P^{-1}(A) for a rectangle A, through the two inverse branches
    (g0(x), f0(y)) for y < 1 and (x + 1, y - 1) for y > 1."""

    family = spec.family
    (a1, a2), (b1, b2) = rect
    rects: List[Rect] = []
    if b1 < 1:
        top = min(b2, 1.0)
        y_hi = math.inf if top >= 1.0 else float(family.f0(top)[0])
        y_lo = 0.0 if b1 == 0 else float(family.f0(b1)[0])
        x_lo = 0.0 if a1 == 0 else float(family.g0(a1)[0])
        rects.append(((x_lo, float(family.g0(a2)[0])), (y_lo, y_hi)))
    if b2 > 1:
        rects.append(((a1 + 1.0, a2 + 1.0), (max(b1, 1.0) - 1.0, b2 - 1.0)))
    return rects


class InvarianceReport:
    """class for the Monte Carlo comparison of m(A) and m(P^{-1} A)

    Attributes
    ----------
    rect : ((float, float), (float, float))
        the rectangle A
    n : int
        samples per estimate
    exact : float
        m(A) in closed form
    m_rect, se_rect : float
        the estimate of m(A) and its standard error
    m_preimage, se_preimage : float
        the estimate of m(P^{-1} A) and its standard error
    n_sigma : float
        the acceptance threshold of |z|
    """

    # pylint: disable=too-few-public-methods

    __slots__ = (
        "rect",
        "n",
        "exact",
        "m_rect",
        "se_rect",
        "m_preimage",
        "se_preimage",
        "n_sigma",
    )
    rect: Rect
    n: int
    exact: float
    m_rect: float
    se_rect: float
    m_preimage: float
    se_preimage: float
    n_sigma: float

    def __init__(self, **fields: Any) -> None:
        for key in self.__slots__:
            setattr(self, key, fields[key])

    @property
    def z(self) -> float:
        """the difference of the estimates in combined standard errors."""

        scale = math.hypot(self.se_rect, self.se_preimage)
        return (self.m_preimage - self.m_rect) / scale

    @property
    def passed(self) -> bool:
        return abs(self.z) < self.n_sigma

    def record(self) -> Dict[str, object]:
        return {
            "check": "invariance",
            "n": self.n,
            "grid_size": "",
            "value": self.m_preimage,
            "reference": self.m_rect,
            "witness": f"{self.rect}",
            "pass": self.passed,
        }


def _preimage_weight(
    spec: DensitySpec, x: np.ndarray, y: np.ndarray
) -> np.ndarray:
    """h(P^{-1} q) |det D P^{-1}(q)| at the points q = (x, y)."""

    family = spec.family
    left = y < 1.0
    weight = np.empty_like(x)
    xl, yl = x[left], y[left]
    gx, gx_d1, _ = family.g0(xl)
    fy, fy_d1, _ = family.f0(yl)
    weight[left] = gx_d1 * fy_d1 / (gx + fy) ** 2
    xr, yr = x[~left], y[~left]
    weight[~left] = 1.0 / (xr + yr) ** 2
    return weight


def invariance_mc(
    spec: DensitySpec,
    rect: Rect,
    n: int = 1_000_000,
    seed: int = 0,
    n_sigma: float = 3.0,
) -> InvarianceReport:
    """Monte Carlo estimates of m(A) and m(P^{-1} A) from independent
    streams, A = (a1, a2) x (b1, b2) bounded.

    m(P^{-1} A) is estimated as the integral over A of the pulled-back
    density h(P^{-1} q) |det D P^{-1}(q)|.
    """

    (a1, a2), (b1, b2) = rect
    if not (0 < a1 < a2 and 0 < b1 < b2 and math.isfinite(b2)):
        raise DomainError(
            f"Input Error: rect should be bounded and positive, got {rect}."
        )
    if n < 2:
        raise ConfigError(f"Input Error: n should be >= 2, got {n}.")
    area = (a2 - a1) * (b2 - b1)
    estimates = []
    for stream, pulled in zip(_INVARIANCE_STREAMS, (False, True)):
        rng = rng_stream(seed, stream)
        x = rng.uniform(a1, a2, n)
        y = rng.uniform(b1, b2, n)
        if pulled:
            values = _preimage_weight(spec, x, y)
        else:
            values = density_m(spec, (x, y))
        mean = float(np.mean(values)) * area
        stderr = float(np.std(values, ddof=1)) * area / math.sqrt(n)
        estimates.append((mean, stderr))
    report = InvarianceReport(
        rect=rect,
        n=n,
        exact=rect_mass(rect),
        m_rect=estimates[0][0],
        se_rect=estimates[0][1],
        m_preimage=estimates[1][0],
        se_preimage=estimates[1][1],
        n_sigma=n_sigma,
    )
    logger.info("invariance on %s: z = %.3f", rect, report.z)
    return report


def conditional_y(x: Any, u: Any) -> Any:
    """the inverse of the conditional CDF y / (x + y) of y given x

    examples
    --------
    >>> conditional_y(1.0, 0.5)
    1.0
    """

    return x * u / (1 - u)


def sample_m(
    spec: DensitySpec, rng: np.random.Generator, n: int
) -> Tuple[np.ndarray, np.ndarray]:
    """n points of m restricted to the x-window times R+, normalized

    x by inverse CDF of 1/x on the two window pieces, y by conditional_y.
    """

    masses = spec.window.log_masses()
    (lo_left, _), (lo_right, _) = spec.window.x_pieces()
    v = _open_uniform(rng, n) * float(np.sum(masses))
    x = np.where(
        v < masses[0], lo_left * np.exp(v), lo_right * np.exp(v - masses[0])
    )
    y = conditional_y(x, _open_uniform(rng, n))
    return x, y


def _batch_size(missing: int, accepted: int, proposals: int) -> int:
    rate = accepted / proposals if proposals else 0.05
    rate = max(rate, 1e-3)
    return int(min(max(1.25 * missing / rate + 16, 64), 2**20))


def sample_m_rho_array(
    spec: DensitySpec, rng: np.random.Generator, n: int
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """n points [(x, y), s] of m_rho restricted to the window

    (x, y) is drawn from m on the x-window, kept if y lies in the
    y-window, and s is uniform on [0, rho_max) kept if s < rho(x, y);
    accepted heights are uniform on [0, rho(x, y)). A RejectionBudgetError
    is raised after rejection_cap proposals per draw.
    """

    rho_max = spec.rho_max()
    y_lo, y_hi = spec.window.y_window
    parts: List[Tuple[np.ndarray, np.ndarray, np.ndarray]] = []
    accepted = 0
    proposals = 0
    while accepted < n:
        if proposals > spec.rejection_cap * n:
            raise RejectionBudgetError(
                f"m_rho sampling: {proposals} proposals for {accepted} of "
                f"{n} draws (cap {spec.rejection_cap} per draw, rho_max "
                f"{rho_max:.4g})."
            )
        batch = _batch_size(n - accepted, accepted, proposals)
        x, y = sample_m(spec, rng, batch)
        s = rng.random(batch) * rho_max
        keep = (y > y_lo) & (y < y_hi)
        keep &= s < spec.rho(x, y)
        parts.append((x[keep], y[keep], s[keep]))
        accepted += int(np.sum(keep))
        proposals += batch
    logger.debug(
        "m_rho sampling: %d accepted of %d proposals", accepted, proposals
    )
    x, y, s = (np.concatenate(arrays)[:n] for arrays in zip(*parts))
    return x, y, s


def sample_m_rho(spec: DensitySpec, rng: np.random.Generator) -> FlowPoint:
    """one point of m_rho on the window, as a FlowPoint of Sigma_rho."""

    x, y, s = sample_m_rho_array(spec, rng, 1)
    return FlowPoint(PlanePoint(float(x[0]), float(y[0])), s[0], "sigma_rho")


def sample_nu(
    spec: DensitySpec, rng: np.random.Generator, n: int
) -> Tuple[np.ndarray, np.ndarray]:
    """n points of nu, the normalized restriction of m to Delta x R+."""

    lo, hi = spec.delta
    x = lo * np.exp(_open_uniform(rng, n) * math.log(hi / lo))
    y = conditional_y(x, _open_uniform(rng, n))
    return x, y


class NuSample:
    """class for a sample of nu_r on Sigma_r

    Attributes
    ----------
    x, y, s : numpy.ndarray
        the points [(x, y), s]
    roof : numpy.ndarray
        the roof at (x, y)
    kind : str
        the roof, birkhoff or r
    proposals : int
        number of proposed base points
    singular : int
        proposals dropped for a non-finite roof
    clipped : int
        accepted points whose roof exceeds the envelope
    """

    # pylint: disable=too-few-public-methods, too-many-instance-attributes

    __slots__ = (
        "x",
        "y",
        "s",
        "roof",
        "kind",
        "proposals",
        "singular",
        "clipped",
    )
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    roof: np.ndarray
    kind: str
    proposals: int
    singular: int
    clipped: int

    def __init__(self, **fields: Any) -> None:
        for key in self.__slots__:
            setattr(self, key, fields[key])

    def __len__(self) -> int:
        return int(self.x.size)

    def points(self) -> List[FlowPoint]:
        return [
            FlowPoint(PlanePoint(float(x), float(y)), float(s), "sigma_r")
            for x, y, s in zip(self.x, self.y, self.s)
        ]


def sample_nu_r(
    spec: DensitySpec,
    rng: np.random.Generator,
    n: int,
    cfg: Optional[RoofConfig] = None,
    kind: str = "birkhoff",
) -> NuSample:
    """n points of nu_r = nu x Leb / int roof dnu on Sigma_r

    base points from nu; a height uniform on [0, roof_cap) is kept if it
    lies under the roof. Points whose roof exceeds roof_cap are kept with
    a height below roof_cap and counted as clipped; proposals with a
    non-finite roof are dropped and counted as singular.

    parameters
    ----------
    spec : DensitySpec
        the density
    rng : numpy.random.Generator
        the stream
    n : int
        number of points
    cfg : RoofConfig, optional
        y' of the roof r
    kind : str
        birkhoff [default] or r

    returns
    -------
    NuSample
    """

    # pylint: disable=too-many-arguments, too-many-locals

    cap = spec.roof_cap
    parts = []
    accepted = 0
    proposals = 0
    singular = 0
    while accepted < n:
        if proposals > spec.rejection_cap * n:
            raise RejectionBudgetError(
                f"nu_r sampling: {proposals} proposals for {accepted} of "
                f"{n} draws (cap {spec.rejection_cap} per draw)."
            )
        batch = _batch_size(n - accepted, accepted, proposals)
        x, y = sample_nu(spec, rng, batch)
        roof, _, _ = induced_roof_array(spec.family, x, y, kind, cfg)
        s = rng.random(batch) * cap
        finite = np.isfinite(roof)
        singular += int(np.sum(~finite))
        keep = finite & (s < roof)
        parts.append((x[keep], y[keep], s[keep], roof[keep]))
        accepted += int(np.sum(keep))
        proposals += batch
    x, y, s, roof = (np.concatenate(arrays)[:n] for arrays in zip(*parts))
    clipped = int(np.sum(roof > cap))
    if clipped:
        logger.info("nu_r sampling: %d roofs above %.4g", clipped, cap)
    return NuSample(
        x=x,
        y=y,
        s=s,
        roof=roof,
        kind=kind,
        proposals=proposals,
        singular=singular,
        clipped=clipped,
    )


class ChiSquareReport:
    """class for a chi-square goodness-of-fit test on a fixed grid

    Attributes
    ----------
    check : str
        name of the check
    n : int
        number of binned points
    cells : int
        number of cells
    statistic, p_value : float
        the test result
    """

    # pylint: disable=too-few-public-methods

    __slots__ = ("check", "n", "cells", "statistic", "p_value")
    check: str
    n: int
    cells: int
    statistic: float
    p_value: float

    def __init__(self, **fields: Any) -> None:
        for key in self.__slots__:
            setattr(self, key, fields[key])

    @property
    def passed(self) -> bool:
        return self.p_value > 0.01

    def record(self) -> Dict[str, object]:
        return {
            "check": self.check,
            "n": self.n,
            "grid_size": self.cells,
            "value": self.p_value,
            "reference": 0.01,
            "witness": "",
            "pass": self.passed,
        }


def _x_edges(spec: DensitySpec, bins: int) -> np.ndarray:
    lo, hi = spec.delta
    return lo * (hi / lo) ** (np.arange(bins + 1) / bins)


def _chi2(
    check: str, counts: np.ndarray, probs: np.ndarray
) -> ChiSquareReport:
    n = int(np.sum(counts))
    expected = probs / np.sum(probs) * n
    result = stats.chisquare(counts, expected)
    return ChiSquareReport(
        check=check,
        n=n,
        cells=int(counts.size),
        statistic=float(result.statistic),
        p_value=float(result.pvalue),
    )


def nu_invariance_chi2(
    spec: DensitySpec,
    n: int = 1_000_000,
    seed: int = 0,
    x_bins: int = 8,
    y_edges: Sequence[float] = _Y_EDGES,
) -> ChiSquareReport:
    """chi-square test of Ptilde_* nu = nu: nu-samples are pushed through
    Ptilde and binned on a fixed grid of Delta x R+ whose cell
    probabilities are known in closed form."""

    x, y = sample_nu(spec, rng_stream(seed, 5), n)
    new_x, new_y, _, _, _ = ptilde_array(spec.family, x, y)
    kept = np.isfinite(new_x)
    new_x, new_y = new_x[kept], new_y[kept]
    edges = _x_edges(spec, x_bins)
    y_all = [0.0, *y_edges, math.inf]
    cell_x = np.clip(np.digitize(new_x, edges[1:-1]), 0, x_bins - 1)
    cell_y = np.digitize(new_y, np.asarray(y_edges))
    n_y = len(y_all) - 1
    counts = np.bincount(cell_x * n_y + cell_y, minlength=x_bins * n_y)
    probs = np.array(
        [
            rect_mass(((edges[i], edges[i + 1]), (y_all[j], y_all[j + 1])))
            for i in range(x_bins)
            for j in range(n_y)
        ]
    )
    return _chi2("nu_invariance", counts, probs)


def mu_hat_chi2(
    spec: DensitySpec, n: int = 1_000_000, seed: int = 0, bins: int = 20
) -> ChiSquareReport:
    """chi-square test of the x-components of Ptilde-pushed nu-samples
    against mu_hat, density (1/x) / ln(1/g0(1)) on Delta."""

    x, _ = sample_nu(spec, rng_stream(seed, 6), n)
    new_x, _, _ = ftilde_array(spec.family, x, reject=True)
    new_x = new_x[np.isfinite(new_x)]
    edges = _x_edges(spec, bins)
    cells = np.clip(np.digitize(new_x, edges[1:-1]), 0, bins - 1)
    counts = np.bincount(cells, minlength=bins)
    probs = np.log(edges[1:] / edges[:-1])
    return _chi2("mu_hat", counts, probs)
