"""Shared builders for synthetic test data."""

import numpy as np

from resloss import ComplexSweep, GroundTruth, inverse_s21_model

# CODATA values typed in independently of scipy.constants, for oracle
# arithmetic in the tests.
HBAR = 1.054571817e-34
K_B = 1.380649e-23


def loaded_q(q_i: float, q_c: float) -> float:
    return 1.0 / (1.0 / q_i + 1.0 / q_c)


def model_sweep(f0, q_i, q_c, phi, span_linewidths=20, n_points=501,
                power=1e-15, temperature=0.1) -> ComplexSweep:
    """Noise-free sweep evaluated straight from the transmission model."""
    span = span_linewidths * f0 / loaded_q(q_i, q_c)
    f = np.linspace(f0 - span / 2, f0 + span / 2, n_points)
    z = 1.0 / inverse_s21_model(f, f0, q_i, q_c, phi)
    return ComplexSweep(frequencies=f, s21=z, power=power, temperature=temperature)


def resonator_truth(q_i, *, f0=4.5548e9, q_c=3e4, phi=0.1, span_linewidths=20,
                    n_points=501, power=1e-15, s21_sigma=0.0, delay=0.0,
                    baseline=1.0 + 0.0j, seed=0) -> GroundTruth:
    """Fixed-Q_i truth: the TLS curve is collapsed to a constant q_hp."""
    span = span_linewidths * f0 / loaded_q(q_i, q_c)
    return GroundTruth(
        f0=f0, q_c=q_c, phi=phi,
        f_tan_delta0=1e-30, n_c=1.0, beta=0.5, q_hp=q_i,
        temperature=0.1, span=span, n_points=n_points,
        powers=(power,), s21_sigma=s21_sigma, delay=delay,
        baseline=baseline, seed=seed,
    )


def device_a_truth(*, q_c=3e3, span=7.5e7, n_points=1001, n_powers=21,
                   s21_sigma=0.0, delay=0.0, baseline=1.0 + 0.0j,
                   loss_rel_sigma=0.0, seed=0) -> GroundTruth:
    """Lossy-PPC-style truth covering both TLS saturation regimes."""
    return GroundTruth(
        f0=3.7464e9, q_c=q_c, phi=0.05,
        f_tan_delta0=9.2e-4, n_c=10.0, beta=0.5, q_hp=1e6,
        temperature=0.1, span=span, n_points=n_points,
        powers=tuple(np.geomspace(1e-18, 1e-13, n_powers)),
        s21_sigma=s21_sigma, delay=delay, baseline=baseline,
        loss_rel_sigma=loss_rel_sigma, seed=seed,
    )
