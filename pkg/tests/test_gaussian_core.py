import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from mcvqkd.errors import DomainError, ParameterError
from mcvqkd.gaussian_core import (
    ComplexGaussianVector,
    SymplecticSpectrum,
    dft_matrix,
    entropy_g,
    is_psd,
    make_rng,
    sample_circular_symmetric,
    spectrum_entropy,
    symplectic_eigenvalues,
    unitary_fft,
    unitary_ifft,
)


def test_entropy_exact_points():
    assert entropy_g(1.0) == 0.0
    assert entropy_g(3.0) == 2.0


@pytest.mark.parametrize("s", [1.0 + 1e-9, 1.5, 2.0, 7.25, 100.0, 1e6])
def test_entropy_matches_high_precision(s):
    assert entropy_g(s) == pytest.approx(float(oracles.g(s)), rel=1e-12, abs=1e-15)


def test_entropy_rejects_unphysical():
    with pytest.raises(DomainError):
        entropy_g(0.5)
    with pytest.raises(DomainError):
        entropy_g(float("nan"))
    assert entropy_g(1.0 - 1e-10) == 0.0


@settings(max_examples=300, deadline=None)
@given(st.floats(1.0, 1e4), st.floats(1e-6, 1e3))
def test_entropy_monotone(s, ds):
    assert entropy_g(s + ds) > entropy_g(s)


def test_spectrum_floors_tolerance_band():
    spec = SymplecticSpectrum([1.0 - 5e-10, 2.0])
    assert spec[0] == 1.0
    assert spectrum_entropy(spec) == pytest.approx(entropy_g(2.0))
    with pytest.raises(DomainError):
        SymplecticSpectrum([0.9])


def test_fft_unitary_round_trip():
    rng = make_rng(3)
    v = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    assert np.allclose(unitary_ifft(unitary_fft(v)), v, atol=1e-13)
    assert np.linalg.norm(unitary_fft(v)) == pytest.approx(np.linalg.norm(v), rel=1e-13)
    f = dft_matrix(16)
    assert np.allclose(f @ v, unitary_fft(v), atol=1e-12)
    assert np.allclose(f @ f.conj().T, np.eye(16), atol=1e-12)


def test_sampler_variance_and_determinism():
    a = sample_circular_symmetric(4, 2.0, seed=11, draws=50_000)
    b = sample_circular_symmetric(4, 2.0, seed=11, draws=50_000)
    assert np.array_equal(a, b)
    assert np.var(a.real) == pytest.approx(2.0, rel=0.03)
    assert np.var(a.imag) == pytest.approx(2.0, rel=0.03)


def test_complex_gaussian_vector_validation():
    white = ComplexGaussianVector.white(3, 1.5)
    assert np.allclose(white.quadrature_variances(), 1.5)
    with pytest.raises(ParameterError):
        ComplexGaussianVector(2, np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_complex_gaussian_logpdf_at_mean():
    v = ComplexGaussianVector.white(2, 0.5)
    # CN(0, I) in two dimensions: density at 0 is 1/pi^2
    assert v.logpdf([0, 0]) == pytest.approx(-2 * math.log(math.pi))


def test_symplectic_eigenvalues_of_epr_state():
    v = 5.0
    z = np.diag([1.0, -1.0])
    c = math.sqrt(v * v - 1)
    epr = np.block([[v * np.eye(2), c * z], [c * z, v * np.eye(2)]])
    assert np.allclose(symplectic_eigenvalues(epr), [1.0, 1.0], atol=1e-9)
    thermal = np.diag([3.0, 3.0, 7.0, 7.0])
    assert np.allclose(symplectic_eigenvalues(thermal), [3.0, 7.0])
    assert is_psd(epr)
