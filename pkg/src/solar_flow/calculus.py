"""
Periodic grid, sampled fields and spectral calculus on the circle R/Z
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np

LOGGER = logging.getLogger(__name__)

MIN_GRID_SIZE = 8


class PeriodicGrid:
    """
    Uniform grid of n samples on the circle of circumference one
    """

    def __init__(self, n: int) -> None:
        """
        Class constructor

        Parameters
        ------------------------
        n: int
            Number of samples. Must be even and at least 8 so that the
            Nyquist mode is well defined.

        Raises
        ------------------------
        ValueError:
            If n is odd or smaller than 8.
        """
        if int(n) != n or n < MIN_GRID_SIZE or n % 2:
            raise ValueError(
                f"Grid size must be an even integer >= {MIN_GRID_SIZE}. "
                f"Received: {n}"
            )
        self.__n = int(n)
        self.__theta = np.arange(self.__n) / self.__n
        # integer wavenumbers in numpy.fft ordering
        self.__k = np.fft.fftfreq(self.__n, d=1.0 / self.__n)

    @property
    def n(self) -> int:
        """
        Number of samples.

        Returns
        ------------------------
        int
            Grid size.
        """
        return self.__n

    @property
    def theta(self) -> np.ndarray:
        """
        Sample locations theta[j] = j / n.

        Returns
        ------------------------
        np.ndarray
            Copy of the sample locations.
        """
        return self.__theta.copy()

    @property
    def wavenumbers(self) -> np.ndarray:
        """
        Integer wavenumbers in numpy.fft ordering.

        Returns
        ------------------------
        np.ndarray
            Copy of the wavenumbers.
        """
        return self.__k.copy()

    @property
    def spacing(self) -> float:
        """
        Grid spacing 1 / n.

        Returns
        ------------------------
        float
            Spacing between consecutive samples.
        """
        return 1.0 / self.__n

    def sample(self, func: Callable[[np.ndarray], np.ndarray]) -> "Field":
        """
        Samples a vectorized function on the grid.

        Parameters
        ------------------------
        func: Callable[[np.ndarray], np.ndarray]
            Function of theta.

        Returns
        ------------------------
        Field
            Sampled field.
        """
        return Field(self, np.asarray(func(self.theta), dtype=float))

    def __eq__(self, other: object) -> bool:
        """Grids are equal when they have the same size."""
        return isinstance(other, PeriodicGrid) and other.n == self.n

    def __hash__(self) -> int:
        """Hash on the grid size."""
        return hash(("PeriodicGrid", self.n))

    def __repr__(self) -> str:
        """Representation with the grid size."""
        return f"PeriodicGrid(n={self.n})"


@dataclass(frozen=True)
class Field:
    """
    Real samples of a function on a periodic grid.
    """

    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        """Validates shape and finiteness of the samples."""
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n,):
            raise ValueError(
                f"Field expects {self.grid.n} samples. "
                f"Received shape: {values.shape}"
            )
        check_finite(values)
        object.__setattr__(self, "values", values)


FieldLike = Union[Field, np.ndarray]


def check_finite(values: np.ndarray, name: str = "field") -> None:
    """
    Raises if any sample is not finite.

    Parameters
    ------------------------
    values: np.ndarray
        Samples to check.
    name: str
        Name used in the error message.

    Raises
    ------------------------
    ValueError:
        If a sample is nan or infinite.
    """
    if not np.all(np.isfinite(values)):
        bad = int(np.argmin(np.isfinite(values)))
        raise ValueError(f"Non-finite {name} sample at index {bad}")


def _unwrap(f: FieldLike) -> Tuple[np.ndarray, Optional[PeriodicGrid]]:
    """
    Splits a field-like input into raw samples and its grid (if any).

    Parameters
    ------------------------
    f: FieldLike
        Field or bare array of samples.

    Returns
    ------------------------
    Tuple[np.ndarray, Optional[PeriodicGrid]]
        Samples and the grid of the field, or None for arrays.
    """
    if isinstance(f, Field):
        return f.values, f.grid

    values = np.asarray(f, dtype=float)
    if values.ndim != 1:
        raise ValueError("Field samples must be one dimensional")
    PeriodicGrid(values.size)
    check_finite(values)
    return values, None


def _wrap(values: np.ndarray, grid: Optional[PeriodicGrid]) -> FieldLike:
    """Returns a Field when the input was a Field, else the raw array."""
    if grid is None:
        return values
    return Field(grid, values)


def derivative(f: FieldLike, order: int = 1) -> FieldLike:
    """
    Spectral derivative d/dtheta applied `order` times.

    The Nyquist coefficient is zeroed.

    Parameters
    ------------------------
    f: FieldLike
        Periodic samples.
    order: int
        Number of derivatives. Default 1.

    Returns
    ------------------------
    FieldLike
        Derivative samples, same kind as the input.
    """
    values, grid = _unwrap(f)
    n = values.size
    k = PeriodicGrid(n).wavenumbers
    multiplier = (2j * np.pi * k) ** order
    multiplier[n // 2] = 0.0
    result = np.fft.ifft(np.fft.fft(values) * multiplier).real
    return _wrap(result, grid)


def mean(f: FieldLike) -> float:
    """
    Integral over the circle as the uniform sample average.

    numpy's pairwise summation fixes the reduction order, so the result is
    bitwise reproducible for a given n.

    Parameters
    ------------------------
    f: FieldLike
        Periodic samples.

    Returns
    ------------------------
    float
        Mean value.
    """
    values, _ = _unwrap(f)
    return float(np.sum(values) / values.size)


def cumulative_integral(f: FieldLike) -> FieldLike:
    """
    Antiderivative F(theta) = integral of f from 0 to theta.

    Computed as mean(f) * theta plus the Fourier antiderivative of the
    mean-free part, shifted so that F(0) = 0.

    Parameters
    ------------------------
    f: FieldLike
        Periodic samples.

    Returns
    ------------------------
    FieldLike
        Samples of F on [0, 1).
    """
    values, grid = _unwrap(f)
    n = values.size
    k = PeriodicGrid(n).wavenumbers
    coefficients = np.fft.fft(values)
    average = coefficients[0].real / n

    nonzero = k != 0
    antiderivative = np.zeros_like(coefficients)
    antiderivative[nonzero] = coefficients[nonzero] / (2j * np.pi * k[nonzero])
    antiderivative[n // 2] = 0.0

    periodic_part = np.fft.ifft(antiderivative).real
    theta = np.arange(n) / n
    result = average * theta + periodic_part - periodic_part[0]
    return _wrap(result, grid)


def hilbert(f: FieldLike) -> FieldLike:
    """
    Periodic Hilbert transform, Fourier multiplier -i sgn(k).

    Under this convention H(cos) = sin and H(sin) = -cos. The zero and
    Nyquist modes map to zero.

    Parameters
    ------------------------
    f: FieldLike
        Periodic samples.

    Returns
    ------------------------
    FieldLike
        Transformed samples.
    """
    values, grid = _unwrap(f)
    n = values.size
    multiplier = -1j * np.sign(PeriodicGrid(n).wavenumbers)
    multiplier[n // 2] = 0.0
    result = np.fft.ifft(np.fft.fft(values) * multiplier).real
    return _wrap(result, grid)


def dealias_mask(n: int) -> np.ndarray:
    """
    Two-thirds rule mask: keeps modes with |k| < n / 3.

    Parameters
    ------------------------
    n: int
        Grid size.

    Returns
    ------------------------
    np.ndarray
        Boolean mask in numpy.fft ordering.
    """
    return np.abs(PeriodicGrid(n).wavenumbers) < n / 3.0


def trig_basis(points: np.ndarray, top: int) -> np.ndarray:
    """
    Powers z**k, k = 0..top, of z = exp(2 pi i theta) at each point.

    Built by a cumulative product, one complex multiply per entry.

    Parameters
    ------------------------
    points: np.ndarray
        Locations on the real line (interpreted modulo one).
    top: int
        Highest power.

    Returns
    ------------------------
    np.ndarray
        Complex array of shape (points.size, top + 1).
    """
    z = np.exp(2j * np.pi * np.mod(np.ravel(points), 1.0))
    basis = np.empty((z.size, top + 1), dtype=complex)
    basis[:, 0] = 1.0
    if top > 0:
        basis[:, 1:] = z[:, None]
        np.cumprod(basis[:, 1:], axis=1, out=basis[:, 1:])
    return basis


def half_spectrum(
    f: FieldLike, order: int = 0, max_mode: Optional[int] = None
) -> np.ndarray:
    """
    Coefficients c_k, k >= 0, with f(theta) = Re(sum c_k z**k).

    Parameters
    ------------------------
    f: FieldLike
        Periodic samples.
    order: int
        Derivative order folded into the coefficients. Default 0.
    max_mode: Optional[int]
        Highest wavenumber kept. Default n / 2 - 1 (Nyquist dropped).

    Returns
    ------------------------
    np.ndarray
        Complex coefficients.
    """
    values, _ = _unwrap(f)
    n = values.size
    top = n // 2 - 1 if max_mode is None else min(int(max_mode), n // 2 - 1)
    k = np.arange(top + 1)
    coefficients = np.fft.fft(values)[: top + 1] / n
    coefficients[1:] *= 2.0
    return coefficients * (2j * np.pi * k) ** order


def evaluate(
    f: FieldLike,
    points: np.ndarray,
    order: int = 0,
    max_mode: Optional[int] = None,
) -> np.ndarray:
    """
    Evaluates the trigonometric interpolant of f (or of its derivative)
    at arbitrary points.

    The Nyquist mode is dropped, as in the other operators.

    Parameters
    ------------------------
    f: FieldLike
        Periodic samples.
    points: np.ndarray
        Locations on the real line (interpreted modulo one).
    order: int
        Derivative order of the evaluated interpolant. Default 0.
    max_mode: Optional[int]
        Highest wavenumber kept. Default n / 2 - 1.

    Returns
    ------------------------
    np.ndarray
        Interpolated values.
    """
    coefficients = half_spectrum(f, order, max_mode)
    points = np.asarray(points, dtype=float)
    basis = trig_basis(points, coefficients.size - 1)
    return (basis @ coefficients).real.reshape(points.shape)


def upsample(f: FieldLike, factor: int) -> np.ndarray:
    """
    Samples the trigonometric interpolant on a grid `factor` times finer.

    Parameters
    ------------------------
    f: FieldLike
        Periodic samples.
    factor: int
        Refinement factor (>= 1).

    Returns
    ------------------------
    np.ndarray
        Values at j / (factor * n).
    """
    values, _ = _unwrap(f)
    if factor <= 1:
        return values.copy()

    n = values.size
    fine = factor * n
    coefficients = np.fft.fft(values)
    coefficients[n // 2] = 0.0
    padded = np.zeros(fine, dtype=complex)
    half = n // 2
    padded[:half] = coefficients[:half]
    padded[fine - half + 1:] = coefficients[half + 1:]
    return np.fft.ifft(padded).real * factor


def continuous_min(f: FieldLike, factor: int = 4) -> Tuple[float, float]:
    """
    Minimum of the trigonometric interpolant and its location.

    Parameters
    ------------------------
    f: FieldLike
        Periodic samples.
    factor: int
        Oversampling factor used to locate the minimum. Default 4.

    Returns
    ------------------------
    Tuple[float, float]
        Minimum value and theta where it is attained.
    """
    fine = upsample(f, factor)
    index = int(np.argmin(fine))
    return float(fine[index]), index / fine.size
