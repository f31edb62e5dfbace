"""private module defining the _Mobius class

A Moebius map z -> (a z + b) / (c z + d) is stored as its coefficient
matrix. Coefficients may be python integers or Fractions (exact path),
floats, or numpy arrays of equal shape (a batch of maps evaluated
elementwise).
"""

from fractions import Fraction
from typing import Any, List, Tuple

import numpy as np

__all__: List[str] = []

_RENORMALIZE = 1e150


def _is_exact(value: Any) -> bool:
    return isinstance(value, (int, Fraction)) and not isinstance(value, bool)


def _div(num: Any, den: Any) -> Any:
    """division that stays rational on rational input."""

    if _is_exact(num) and _is_exact(den):
        return Fraction(num) / Fraction(den)
    return num / den


class _Mobius:
    """class for Moebius maps and batches of Moebius maps

    Attributes
    ----------
    a, b, c, d : number or numpy.ndarray
        coefficients of (a z + b) / (c z + d)
    """

    __slots__ = ("a", "b", "c", "d")
    a: Any
    b: Any
    c: Any
    d: Any

    def __init__(self, a: Any, b: Any, c: Any, d: Any) -> None:
        """constructor for the _Mobius class.

        parameters
        ----------
        a, b, c, d : number or numpy.ndarray
            the coefficients

        returns
        -------
        None

        examples
        --------
        >>> f0 = _Mobius(1, 0, -1, 1)
        >>> f0(Fraction(1, 2))
        Fraction(1, 1)
        """

        self.a = a
        self.b = b
        self.c = c
        self.d = d

    def __repr__(self) -> str:
        return f"_Mobius({self.a!r}, {self.b!r}, {self.c!r}, {self.d!r})"

    @classmethod
    def identity(cls) -> "_Mobius":
        return cls(1, 0, 0, 1)

    @classmethod
    def translation(cls, shift: Any) -> "_Mobius":
        """the map z -> z + shift."""

        return cls(1, shift, 0, 1)

    @classmethod
    def from_table(cls, table: np.ndarray, index: Any) -> "_Mobius":
        """a batch of maps read from a power table (see power_table)."""

        rows = table[index]
        return cls(rows[..., 0], rows[..., 1], rows[..., 2], rows[..., 3])

    @property
    def det(self) -> Any:
        return self.a * self.d - self.b * self.c

    def is_integral(self) -> bool:
        """whether all coefficients are (exact) integers."""

        return all(
            _is_exact(coef) and Fraction(coef).denominator == 1
            for coef in (self.a, self.b, self.c, self.d)
        )

    def exact(self) -> "_Mobius":
        """the same map with Fraction coefficients."""

        return _Mobius(*(Fraction(coef) for coef in self.coefficients()))

    def coefficients(self) -> Tuple[Any, Any, Any, Any]:
        return (self.a, self.b, self.c, self.d)

    def __call__(self, z: Any) -> Any:
        return _div(self.a * z + self.b, self.c * z + self.d)

    def derivative(self, z: Any) -> Any:
        den = self.c * z + self.d
        return _div(self.det, den * den)

    def second_derivative(self, z: Any) -> Any:
        den = self.c * z + self.d
        return _div(-2 * self.c * self.det, den * den * den)

    def evaluate(self, z: Any) -> Tuple[Any, Any, Any]:
        """value, first and second derivative at z."""

        den = self.c * z + self.d
        det = self.det
        return (
            _div(self.a * z + self.b, den),
            _div(det, den * den),
            _div(-2 * self.c * det, den * den * den),
        )

    def difference(self, u: Any, v: Any) -> Any:
        """M(u) - M(v), without cancellation for nearby u and v."""

        return _div(
            self.det * (u - v), (self.c * u + self.d) * (self.c * v + self.d)
        )

    def compose(self, other: "_Mobius") -> "_Mobius":
        """the map self o other."""

        return _Mobius(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "_Mobius":
        return _Mobius(self.d, -self.b, -self.c, self.a)

    def _renormalized(self) -> "_Mobius":
        coefs = self.coefficients()
        if all(_is_exact(coef) for coef in coefs):
            return self
        scale = np.max(np.abs(np.asarray(coefs, dtype=float)), axis=0)
        if np.all(scale < _RENORMALIZE):
            return self
        scale = np.where(scale < _RENORMALIZE, 1.0, scale)
        return _Mobius(*(coef / scale for coef in coefs))

    def power(self, n: int) -> "_Mobius":
        """n-fold composition by repeated squaring (n >= 0)."""

        if n < 0:
            raise ValueError(f"Input Error: n should be >= 0, got {n}.")
        result = _Mobius.identity()
        base = self
        while n:
            if n & 1:
                result = result.compose(base)._renormalized()
            n >>= 1
            if n:
                base = base.compose(base)._renormalized()
        return result

    def power_table(self, n_max: int) -> np.ndarray:
        """float coefficients of M^0, ..., M^n_max as an (n_max+1, 4) array

        rows are rescaled independently when their entries grow beyond
        1e150; a row represents the same map after rescaling.
        """

        table = np.empty((n_max + 1, 4), dtype=float)
        row = np.array([1.0, 0.0, 0.0, 1.0])
        step = np.array(
            [[self.a, self.b], [self.c, self.d]], dtype=float
        ).reshape(2, 2)
        for n in range(n_max + 1):
            table[n] = row
            mat = row.reshape(2, 2) @ step
            peak = np.max(np.abs(mat))
            if peak > _RENORMALIZE:
                mat = mat / peak
            row = mat.reshape(4)
        return table
