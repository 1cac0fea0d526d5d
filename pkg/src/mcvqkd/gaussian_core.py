"""Gaussian building blocks: circular complex sampling, unitary FFT, entropies.

Conventions used throughout the package:

* Variances are in shot-noise units. A complex amplitude z = x + i p has
  per-quadrature variance var(x) = var(p); its complex covariance
  K = E[z z^H] is therefore twice the per-quadrature variance.
* The FFT pair is unitary (1/sqrt(n) both ways), so white noise keeps its
  covariance under either transform.
* Real phase-space covariance matrices use (x1, p1, x2, p2, ...) ordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DataError, DomainError, ParameterError

PHYSICALITY_TOL = 1e-9
HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
RNG_ALGORITHM = "numpy Philox4x64-10 seeded by SeedSequence"


def make_rng(*entropy: int) -> np.random.Generator:
    """Counter-based generator keyed by the given integers (seed, stream index, ...)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(list(entropy))))


def is_psd(matrix: np.ndarray, tol: float = PSD_TOL) -> bool:
    m = np.asarray(matrix)
    herm = 0.5 * (m + m.conj().T)
    return bool(np.linalg.eigvalsh(herm).min() >= -tol)


@dataclass(frozen=True)
class ComplexGaussianVector:
    """Zero-mean circular-symmetric complex Gaussian vector.

    ``covariance`` is K = E[z z^H]; ``samples`` optionally holds draws as rows.
    """

    dimension: int
    covariance: np.ndarray
    samples: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise ParameterError("dimension must be positive")
        k = np.asarray(self.covariance, dtype=complex)
        if k.shape != (self.dimension, self.dimension):
            raise ParameterError(f"covariance shape {k.shape} does not match dimension {self.dimension}")
        if np.max(np.abs(k - k.conj().T)) > HERMITIAN_TOL * max(1.0, np.max(np.abs(k))):
            raise DataError("covariance is not Hermitian")
        if not is_psd(k):
            raise DataError("covariance is not positive semidefinite")
        object.__setattr__(self, "covariance", k)

    @classmethod
    def white(cls, dimension: int, variance_per_quadrature: float) -> "ComplexGaussianVector":
        return cls(dimension, 2.0 * variance_per_quadrature * np.eye(dimension, dtype=complex))

    def quadrature_variances(self) -> np.ndarray:
        return np.real(np.diag(self.covariance)) / 2.0

    def logpdf(self, z: Sequence[complex]) -> float:
        """Log density (natural units) of CN(0, K) at z."""
        z = np.asarray(z, dtype=complex)
        sign, logdet = np.linalg.slogdet(self.covariance)
        if sign.real <= 0:
            raise DomainError("density undefined for a singular covariance")
        quad = np.real(np.conj(z) @ np.linalg.solve(self.covariance, z))
        return float(-self.dimension * math.log(math.pi) - logdet - quad)


def sample_circular_symmetric(
    dimension: int,
    variance_per_quadrature: float,
    seed: int,
    draws: Optional[int] = None,
) -> np.ndarray:
    """Draw z with independent N(0, variance) real and imaginary parts.

    Returns one vector of length ``dimension``, or a ``(draws, dimension)``
    array when ``draws`` is given.
    """
    if dimension < 1:
        raise ParameterError("dimension must be positive")
    if not variance_per_quadrature > 0:
        raise ParameterError("variance must be positive")
    rng = make_rng(seed)
    shape = (dimension,) if draws is None else (draws, dimension)
    std = math.sqrt(variance_per_quadrature)
    return std * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def unitary_fft(v: Iterable[complex]) -> np.ndarray:
    arr = np.asarray(v, dtype=complex)
    if arr.size == 0:
        raise ParameterError("cannot transform an empty vector")
    return np.fft.fft(arr, norm="ortho")


def unitary_ifft(v: Iterable[complex]) -> np.ndarray:
    arr = np.asarray(v, dtype=complex)
    if arr.size == 0:
        raise ParameterError("cannot transform an empty vector")
    return np.fft.ifft(arr, norm="ortho")


def dft_matrix(n: int) -> np.ndarray:
    """Unitary DFT matrix F with F @ v == unitary_fft(v)."""
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) / math.sqrt(n)


def entropy_g(s: float) -> float:
    """Von Neumann entropy (bits) of a thermal mode with symplectic eigenvalue s."""
    s = float(s)
    if math.isnan(s) or s < 1.0 - PHYSICALITY_TOL:
        raise DomainError(f"symplectic eigenvalue {s!r} is below 1")
    if s <= 1.0:
        return 0.0
    a = (s + 1.0) / 2.0
    b = (s - 1.0) / 2.0
    # a log a - b log b rewritten to avoid cancellation at large s
    return math.log2(a) + b * math.log1p(1.0 / b) / math.log(2.0)


@dataclass(frozen=True)
class SymplecticSpectrum:
    eigenvalues: tuple

    def __init__(self, eigenvalues: Iterable[float]):
        vals = tuple(float(v) for v in eigenvalues)
        for v in vals:
            if math.isnan(v) or v < 1.0 - PHYSICALITY_TOL:
                raise DomainError(f"symplectic eigenvalue {v!r} is below 1")
        # values inside the tolerance band are floored to exactly 1
        object.__setattr__(self, "eigenvalues", tuple(max(v, 1.0) for v in vals))

    def __iter__(self):
        return iter(self.eigenvalues)

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def __getitem__(self, i):
        return self.eigenvalues[i]


def spectrum_entropy(spectrum: SymplecticSpectrum | Iterable[float]) -> float:
    if not isinstance(spectrum, SymplecticSpectrum):
        spectrum = SymplecticSpectrum(spectrum)
    return math.fsum(entropy_g(s) for s in spectrum)


def differential_entropy_gaussian(variance: float) -> float:
    """Differential entropy in bits of a real Gaussian with the given variance."""
    if not variance > 0:
        raise ParameterError("variance must be positive")
    return 0.5 * math.log2(2.0 * math.pi * math.e * variance)


def symplectic_form(modes: int) -> np.ndarray:
    omega = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return np.kron(np.eye(modes), omega)


def symplectic_eigenvalues(covariance: np.ndarray) -> np.ndarray:
    """Symplectic spectrum of a real 2m x 2m covariance matrix, sorted ascending.

    Computed from the moduli of the eigenvalues of i*Omega*V, which come in
    +/- pairs; used as an independent cross-check of closed-form spectra.
    """
    v = np.asarray(covariance, dtype=float)
    if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] % 2:
        raise ParameterError("covariance must be a square matrix of even size")
    m = v.shape[0] // 2
    ev = np.abs(np.linalg.eigvals(1j * symplectic_form(m) @ v))
    return np.sort(ev)[::2]
