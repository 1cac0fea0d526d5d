"""Monte Carlo simulation of one multicarrier block.

Each trial draws single-carriers z on the selected slots, spreads them with
the inverse unitary FFT into subcarriers d, passes subcarrier i through
gain sqrt(g_i) plus noise, and decodes with the forward FFT. Unused slots
carry exact zeros and are left out of the transform.

Trials run in fixed-size chunks. Chunk k draws from its own Philox stream
keyed by (seed, k), so results do not depend on how chunks are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataError, ParameterError
from .gaussian_core import RNG_ALGORITHM, dft_matrix, make_rng
from .protocol import ProtocolConfig

MIN_TRIALS = 1000
CHUNK_SIZE = 4096


@dataclass(frozen=True)
class SimulationReport:
    trials: int
    seed: int
    rng_algorithm: str
    chunk_size: int
    slots: tuple
    gains: np.ndarray
    noise_variances: np.ndarray
    input_variance: float
    empirical_output_covariance: np.ndarray
    analytic_output_covariance: np.ndarray
    max_abs_deviation: float
    empirical_quadrature_variance: float
    analytic_quadrature_variance: float
    quadrature_variance_se: float
    max_pseudo_covariance: float
    max_reconstruction_error: float
    mean_input_energy: float
    input_energy_se: float
    analytic_input_energy: float
    sum_xx: np.ndarray = field(repr=False)
    sum_yy: np.ndarray = field(repr=False)
    sum_xy: np.ndarray = field(repr=False)
    empirical_mutual_info_bits: float = math.nan
    mutual_info_se: float = math.nan
    analytic_mutual_info_bits: float = math.nan

    def to_dict(self) -> dict:
        def cplx(m: np.ndarray) -> dict:
            return {"real": np.real(m).tolist(), "imag": np.imag(m).tolist()}

        return {
            "trials": self.trials,
            "seed": self.seed,
            "rng_algorithm": self.rng_algorithm,
            "chunk_size": self.chunk_size,
            "slots": list(self.slots),
            "gains": self.gains.tolist(),
            "noise_variances": self.noise_variances.tolist(),
            "input_variance": self.input_variance,
            "empirical_output_covariance": cplx(self.empirical_output_covariance),
            "analytic_output_covariance": cplx(self.analytic_output_covariance),
            "max_abs_deviation": self.max_abs_deviation,
            "empirical_quadrature_variance": self.empirical_quadrature_variance,
            "analytic_quadrature_variance": self.analytic_quadrature_variance,
            "quadrature_variance_se": self.quadrature_variance_se,
            "max_pseudo_covariance": self.max_pseudo_covariance,
            "max_reconstruction_error": self.max_reconstruction_error,
            "mean_input_energy": self.mean_input_energy,
            "input_energy_se": self.input_energy_se,
            "analytic_input_energy": self.analytic_input_energy,
            "empirical_mutual_info_bits": self.empirical_mutual_info_bits,
            "mutual_info_se": self.mutual_info_se,
            "analytic_mutual_info_bits": self.analytic_mutual_info_bits,
        }


def _chunks(trials: int, chunk_size: int):
    k = 0
    done = 0
    while done < trials:
        size = min(chunk_size, trials - done)
        yield k, size
        done += size
        k += 1


def analytic_output_covariance(gains: np.ndarray, noise: np.ndarray, input_variance: float) -> np.ndarray:
    """Complex covariance E[z' z'^H] of the decoded block."""
    f = dft_matrix(len(gains))
    c = f @ np.diag(np.sqrt(gains)) @ f.conj().T
    return 2.0 * input_variance * c @ c.conj().T + f @ np.diag(2.0 * noise) @ f.conj().T


def simulate_block(
    config: ProtocolConfig,
    trials: int,
    seed: int,
    *,
    all_slots: bool = False,
    include_eve: bool = False,
    chunk_size: int = CHUNK_SIZE,
) -> SimulationReport:
    """Simulate ``trials`` blocks through the configured ensemble.

    ``all_slots`` transmits on every slot instead of only the selected ones.
    ``include_eve`` adds the cloner's thermal leakage (1 - g) W to each slot's
    per-quadrature noise.
    """
    if trials < MIN_TRIALS:
        raise ParameterError(f"need at least {MIN_TRIALS} trials, got {trials}")
    if config.ensemble is None:
        raise ParameterError("simulation needs a channel ensemble")
    if chunk_size < 1:
        raise ParameterError("chunk size must be positive")
    ens = config.ensemble
    idx = tuple(range(ens.n)) if all_slots else ens.selected
    if not idx:
        raise ParameterError("no slots to simulate")
    slots = [ens.slots[i] for i in idx]
    gains = np.array([s.fourier_gain for s in slots])
    noise = np.array([s.noise_variance for s in slots])
    if include_eve:
        noise = noise + (1.0 - gains) * np.array([s.eve_variance for s in slots])
    s0 = float(config.single_carrier_variance)
    l = len(slots)
    amp = np.sqrt(gains)
    noise_std = np.sqrt(noise)
    in_std = math.sqrt(s0)

    cov_sum = np.zeros((l, l), dtype=complex)
    pseudo_sum = np.zeros((l, l), dtype=complex)
    sxx = np.zeros((l, 2))
    syy = np.zeros((l, 2))
    sxy = np.zeros((l, 2))
    quad_stat = []
    energy = []
    recon_err = 0.0

    for k, size in _chunks(trials, chunk_size):
        rng = make_rng(seed, k)
        z = in_std * (rng.standard_normal((size, l)) + 1j * rng.standard_normal((size, l)))
        delta = noise_std * (rng.standard_normal((size, l)) + 1j * rng.standard_normal((size, l)))
        d = np.fft.ifft(z, axis=1, norm="ortho")
        out = amp * d + delta
        zp = np.fft.fft(out, axis=1, norm="ortho")
        cov_sum += zp.T @ zp.conj()
        pseudo_sum += zp.T @ zp
        for q, part in enumerate((np.real, np.imag)):
            x, y = part(d), part(out)
            sxx[:, q] += np.einsum("ij,ij->j", x, x)
            syy[:, q] += np.einsum("ij,ij->j", y, y)
            sxy[:, q] += np.einsum("ij,ij->j", x, y)
        quad_stat.append((np.abs(zp) ** 2).mean(axis=1) / 2.0)
        energy.append((np.abs(d) ** 2).sum(axis=1))
        recon_err = max(recon_err, float(np.max(np.abs(zp - z))))

    emp_cov = cov_sum / trials
    ana_cov = analytic_output_covariance(gains, noise, s0)
    q = np.concatenate(quad_stat)
    e = np.concatenate(energy)
    report = SimulationReport(
        trials=trials,
        seed=seed,
        rng_algorithm=RNG_ALGORITHM,
        chunk_size=chunk_size,
        slots=idx,
        gains=gains,
        noise_variances=noise,
        input_variance=s0,
        empirical_output_covariance=emp_cov,
        analytic_output_covariance=ana_cov,
        max_abs_deviation=float(np.max(np.abs(emp_cov - ana_cov))),
        empirical_quadrature_variance=float(q.mean()),
        analytic_quadrature_variance=float(np.real(np.trace(ana_cov)) / (2 * l)),
        quadrature_variance_se=float(q.std(ddof=1) / math.sqrt(trials)),
        max_pseudo_covariance=float(np.max(np.abs(pseudo_sum / trials))),
        max_reconstruction_error=recon_err,
        mean_input_energy=float(e.mean()),
        input_energy_se=float(e.std(ddof=1) / math.sqrt(trials)),
        analytic_input_energy=2.0 * l * s0,
        sum_xx=sxx,
        sum_yy=syy,
        sum_xy=sxy,
    )
    mi, se = _plugin_mutual_information(report)
    analytic = float(np.sum(np.log2(1.0 + gains * s0 / noise)))
    return replace(report, empirical_mutual_info_bits=mi, mutual_info_se=se, analytic_mutual_info_bits=analytic)


def _plugin_mutual_information(report: SimulationReport) -> tuple[float, float]:
    if np.any(report.sum_xx <= 0) or np.any(report.sum_yy <= 0):
        raise DataError("degenerate sample variance in mutual-information estimate")
    rho2 = report.sum_xy ** 2 / (report.sum_xx * report.sum_yy)
    rho2 = np.clip(rho2, 0.0, 1.0 - 1e-15)
    est = -0.5 * np.log2(1.0 - rho2)
    n = report.trials
    ln2 = math.log(2.0)
    # delta method plus the second-order term that dominates when rho ~ 0
    var = rho2 / (n * ln2 ** 2) + 1.0 / (2.0 * n * n * ln2 ** 2)
    return float(est.sum()), float(math.sqrt(var.sum()))


def empirical_mutual_information(report: SimulationReport) -> float:
    """Gaussian plug-in estimate in bits, summed over slots and both quadratures.

    Per slot and quadrature the regression residual variance gives
    0.5 log2(var(y) / var(y|x)) = -0.5 log2(1 - rho^2).
    """
    return _plugin_mutual_information(report)[0]


@dataclass(frozen=True)
class InvarianceResult:
    passed: bool
    max_deviation: float
    max_z_score: float
    checks: int
    band: float


def verify_fft_noise_invariance(
    trials: int,
    seed: int,
    sigma2: float,
    n: int = 8,
    *,
    correlation: float = 0.0,
    band: float = 3.0,
) -> InvarianceResult:
    """Check that the unitary FFT of white noise has per-quadrature covariance sigma2 * I.

    Every distinct entry (diagonal, and real and imaginary parts above the
    diagonal) must sit within ``band`` standard errors. ``correlation`` > 0
    mixes a common-mode component into the input as a negative control.
    """
    if trials < MIN_TRIALS:
        raise ParameterError(f"need at least {MIN_TRIALS} trials, got {trials}")
    if not sigma2 > 0:
        raise ParameterError("sigma2 must be positive")
    rng = make_rng(seed)
    std = math.sqrt(sigma2)
    w = std * (rng.standard_normal((trials, n)) + 1j * rng.standard_normal((trials, n)))
    if correlation:
        common = std * (rng.standard_normal((trials, 1)) + 1j * rng.standard_normal((trials, 1)))
        w = math.sqrt(1.0 - correlation) * w + math.sqrt(correlation) * common
    fw = np.fft.fft(w, axis=1, norm="ortho")
    # per-trial products, halved to per-quadrature scale
    prod = fw[:, :, None] * fw[:, None, :].conj() / 2.0
    mean = prod.mean(axis=0)
    se_re = prod.real.std(axis=0, ddof=1) / math.sqrt(trials)
    se_im = prod.imag.std(axis=0, ddof=1) / math.sqrt(trials)
    expected = sigma2 * np.eye(n)
    dev_re = np.abs(mean.real - expected)
    dev_im = np.abs(mean.imag)
    iu = np.triu_indices(n, 1)
    di = np.diag_indices(n)
    floor = 1e-300
    z = np.concatenate(
        [
            dev_re[di] / np.maximum(se_re[di], floor),
            dev_re[iu] / np.maximum(se_re[iu], floor),
            dev_im[iu] / np.maximum(se_im[iu], floor),
        ]
    )
    max_dev = float(max(dev_re.max(), dev_im.max()))
    return InvarianceResult(bool(np.all(z <= band)), max_dev, float(z.max()), int(z.size), band)
