"""Complex transmission sweeps and the inverse-transmission resonance fit.

A side-coupled resonator shows up in inverse transmission as

    1/S21(f) = 1 + (Q_i/Q_c) * exp(i*phi) / (1 + 2i*Q_i*(f - f0)/f0)

which traces a circle of diameter Q_i/Q_c in the complex plane. Fitting is
done in this inverse space: the circle geometry gives deterministic
initial guesses and the internal loss 1/Q_i enters the model linearly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.constants import hbar
from scipy.optimize import least_squares

from .errors import (
    FitFailureError,
    InsufficientBaselineError,
    OutOfSpanError,
)

TWO_PI = 2.0 * math.pi

_MAX_ITER = 200
_FTOL = 1e-12
_EDGE_FRACTION = 0.05  # per side; the outer 10% of points are off-resonant


@dataclass(frozen=True)
class ComplexSweep:
    """One frequency sweep of complex transmission at fixed power and T."""

    frequencies: np.ndarray  # Hz, strictly increasing
    s21: np.ndarray  # complex transmission
    power: float  # W, at the device reference plane
    temperature: float  # K

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        z = np.asarray(self.s21, dtype=complex)
        if f.ndim != 1 or z.shape != f.shape:
            raise ValueError("frequencies and s21 must be 1-D arrays of equal length")
        if f.size < 16:
            raise ValueError(f"need at least 16 samples, got {f.size}")
        if not np.all(np.diff(f) > 0.0):
            raise ValueError("frequencies must be strictly increasing")
        if not (
            np.all(np.isfinite(f))
            and np.all(np.isfinite(z.real))
            and np.all(np.isfinite(z.imag))
        ):
            raise ValueError("sweep contains non-finite samples")
        f = f.copy()
        z = z.copy()
        f.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "s21", z)

    def __len__(self) -> int:
        return self.frequencies.size

    @property
    def span(self) -> tuple[float, float]:
        return float(self.frequencies[0]), float(self.frequencies[-1])


@dataclass(frozen=True)
class ResonatorFitResult:
    """Fitted resonance parameters with one-sigma uncertainties."""

    f0: float  # Hz
    q_i: float
    q_c: float
    phi: float  # rad, impedance-mismatch rotation of the coupling term
    f0_err: float
    q_i_err: float
    q_c_err: float
    phi_err: float
    residual_rms: float  # RMS of the complex inverse-transmission misfit
    converged: bool
    n_points: int

    @property
    def loss(self) -> float:
        """Internal loss tan(delta) = 1/Q_i."""
        return 1.0 / self.q_i

    @property
    def loss_err(self) -> float:
        return self.q_i_err / self.q_i**2


def inverse_s21_model(f, f0: float, q_i: float, q_c: float, phi: float):
    """Inverse transmission of a side-coupled resonator.

    Equals 1 + Q_i/Q_c on resonance at phi = 0 and tends to 1 far off
    resonance.
    """
    if f0 <= 0.0 or q_i <= 0.0 or q_c <= 0.0:
        raise ValueError("f0, q_i and q_c must be > 0")
    x = (np.asarray(f, dtype=float) - f0) / f0
    out = 1.0 + (q_i / q_c) * np.exp(1j * phi) / (1.0 + 2j * q_i * x)
    return complex(out) if np.isscalar(f) else out


def photon_number(power: float, f0: float, q_i: float, q_c: float) -> float:
    """Mean intracavity photon number for a side-coupled resonator.

    Standard side-coupled convention: n = 2 * Q_l^2 * P / (Q_c * hbar * omega0^2)
    with Q_l the loaded quality factor and P the power at the device plane.
    """
    if power <= 0.0 or f0 <= 0.0 or q_i <= 0.0 or q_c <= 0.0:
        raise ValueError("all arguments must be > 0")
    q_l = 1.0 / (1.0 / q_i + 1.0 / q_c)
    omega0 = TWO_PI * f0
    return 2.0 * q_l**2 * power / (q_c * hbar * omega0**2)


def fit_circle(z: np.ndarray) -> tuple[complex, float]:
    """Algebraic least-squares circle through complex points.

    Returns (center, radius). Exact for noise-free circles; used to seed
    the resonance fit.
    """
    x = np.real(z)
    y = np.imag(z)
    design = np.column_stack([x, y, np.ones_like(x)])
    rhs = -(x**2 + y**2)
    (d, e, f_coef), *_ = np.linalg.lstsq(design, rhs, rcond=None)
    cx = -d / 2.0
    cy = -e / 2.0
    r2 = cx**2 + cy**2 - f_coef
    radius = math.sqrt(r2) if r2 > 0.0 else 0.0
    return complex(cx, cy), radius


def _edge_mask(n: int) -> np.ndarray:
    k = max(2, int(round(_EDGE_FRACTION * n)))
    mask = np.zeros(n, dtype=bool)
    mask[:k] = True
    mask[-k:] = True
    return mask


def _estimate_delay(f: np.ndarray, z: np.ndarray) -> float:
    """Cable delay from the off-resonant phase slope of the sweep edges.

    The estimate carries a small bias from the resonance phase tails,
    which shrinks with the square of the span-to-linewidth ratio;
    calibrate_and_fit removes the residual against the fitted model.
    """
    mask = _edge_mask(f.size)
    if np.count_nonzero(mask) < 4:
        raise InsufficientBaselineError(
            "fewer than 4 off-resonant points available for delay estimation"
        )
    phase = np.unwrap(np.angle(z))[mask]
    fe = f[mask]
    fc = fe.mean()
    slope = np.polyfit(fe - fc, phase, 1)[0]
    return -slope / TWO_PI


def _estimate_baseline(f: np.ndarray, z: np.ndarray) -> complex:
    """Off-resonant level from the mean magnitude and phase of the edges."""
    mask = _edge_mask(f.size)
    if np.count_nonzero(mask) < 4:
        raise InsufficientBaselineError(
            "fewer than 4 off-resonant points available for baseline estimation"
        )
    edges = z[mask]
    mag = float(np.mean(np.abs(edges)))
    direction = np.mean(edges / np.abs(edges))
    phase = float(np.angle(direction)) if direction != 0 else 0.0
    return mag * complex(math.cos(phase), math.sin(phase))


def preprocess_sweep(
    sweep: ComplexSweep,
    delay: float | None = None,
    baseline: complex | None = None,
) -> ComplexSweep:
    """Remove the cable-delay phase ramp and the off-resonant baseline.

    The raw trace is modeled as baseline * exp(-2i*pi*f*delay) * S21.
    Missing arguments are estimated from the outer 10% of points: the
    delay from their phase slope, the baseline from their mean magnitude
    and phase after the delay is removed.
    """
    f = sweep.frequencies
    z = sweep.s21
    if delay is None:
        delay = _estimate_delay(f, z)
    z = z * np.exp(2j * math.pi * f * delay)
    if baseline is None:
        baseline = _estimate_baseline(f, z)
    if baseline == 0:
        raise ValueError("baseline must be nonzero")
    return ComplexSweep(
        frequencies=f,
        s21=z / baseline,
        power=sweep.power,
        temperature=sweep.temperature,
    )


def calibrate_and_fit(
    sweep: ComplexSweep,
    delay: float | None = None,
    baseline: complex | None = None,
    max_refinements: int = 10,
) -> tuple[ResonatorFitResult, float, complex]:
    """Preprocess, fit, and refine the calibration against the fit.

    Edge-based delay/baseline estimates are slightly contaminated by the
    resonance tails, so after the first fit the data are normalized by
    the fitted model and the residual delay and baseline are re-estimated
    from the quasi-off-resonant part of the trace, where the ratio is
    featureless. A few passes push the calibration error to the noise
    floor. Returns (fit, total_delay, total_baseline).
    """
    f = sweep.frequencies
    total_delay = delay if delay is not None else _estimate_delay(f, sweep.s21)
    z = sweep.s21 * np.exp(2j * math.pi * f * total_delay)
    total_baseline = baseline if baseline is not None else _estimate_baseline(f, z)
    if total_baseline == 0:
        raise ValueError("baseline must be nonzero")
    z = z / total_baseline
    prepared = ComplexSweep(f, z, sweep.power, sweep.temperature)
    fit = fit_resonance(prepared)
    refine = delay is None or baseline is None
    for _ in range(max_refinements if refine else 0):
        model = 1.0 / inverse_s21_model(f, fit.f0, fit.q_i, fit.q_c, fit.phi)
        ratio = prepared.s21 / model
        q_l = 1.0 / (1.0 / fit.q_i + 1.0 / fit.q_c)
        detune = 2.0 * q_l * np.abs(f - fit.f0) / fit.f0
        mask = detune > 2.0
        if np.count_nonzero(mask) < 8:
            mask = np.ones_like(mask)
        phase = np.unwrap(np.angle(ratio))[mask]
        fe = f[mask]
        fc = fe.mean()
        slope, intercept = np.polyfit(fe - fc, phase, 1)
        d_delay = -slope / TWO_PI if delay is None else 0.0
        if baseline is None:
            # Constant phase of the residual dressing, referred back to f = 0.
            phase0 = intercept + TWO_PI * fc * d_delay
            mag = float(np.mean(np.abs(ratio[mask])))
            d_base = mag * complex(math.cos(phase0), math.sin(phase0))
        else:
            d_base = 1.0
        if abs(d_delay) * (f[-1] - f[0]) < 1e-13 and abs(d_base - 1.0) < 1e-13:
            break
        total_delay += d_delay
        total_baseline *= d_base
        z = z * np.exp(2j * math.pi * f * d_delay) / d_base
        prepared = ComplexSweep(f, z, sweep.power, sweep.temperature)
        fit = fit_resonance(prepared)
    return fit, float(total_delay), complex(total_baseline)


def _initial_guess(f: np.ndarray, z_inv: np.ndarray) -> tuple[float, float, float, float]:
    """Deterministic starting point (f0, q_i, q_c, phi) in inverse space."""
    dist = np.abs(z_inv - 1.0)
    i0 = int(np.argmax(dist))
    f0 = float(f[i0])

    # Width of |1/S21 - 1| at 1/sqrt(2) of its peak gives Q_i directly.
    level = dist[i0] / math.sqrt(2.0)
    f_lo = f[0]
    for i in range(i0, 0, -1):
        if dist[i - 1] <= level:
            frac = (dist[i] - level) / (dist[i] - dist[i - 1])
            f_lo = f[i] + frac * (f[i - 1] - f[i])
            break
    f_hi = f[-1]
    for i in range(i0, f.size - 1):
        if dist[i + 1] <= level:
            frac = (dist[i] - level) / (dist[i] - dist[i + 1])
            f_hi = f[i] + frac * (f[i + 1] - f[i])
            break
    width = max(f_hi - f_lo, (f[-1] - f[0]) / (f.size - 1))
    q_i = f0 / width

    center, radius = fit_circle(z_inv)
    diameter = 2.0 * radius
    q_c = q_i / diameter if diameter > 0.0 else q_i
    phi = float(np.angle(center - 1.0)) if center != 1.0 else 0.0
    return f0, q_i, q_c, phi


def _model_and_jacobian(p, f):
    f0, q_i, q_c, phi = p
    x = (f - f0) / f0
    denom = 1.0 + 2j * q_i * x
    coupling = (q_i / q_c) * np.exp(1j * phi)
    term = coupling / denom
    model = 1.0 + term
    d_f0 = term / denom * 2j * q_i * f / f0**2
    d_qi = term / q_i - term / denom * 2j * x
    d_qc = -term / q_c
    d_phi = 1j * term
    return model, (d_f0, d_qi, d_qc, d_phi)


def fit_resonance(
    sweep: ComplexSweep,
    initial_guess: Mapping[str, float] | None = None,
) -> ResonatorFitResult:
    """Fit a preprocessed sweep to the inverse-transmission circle model.

    Nonlinear least squares on the stacked real and imaginary parts of
    the inverse-transmission residual, seeded by the magnitude dip, the
    resonance width and an algebraic circle fit. Uncertainties come from
    the Jacobian-based covariance at the optimum, scaled by the residual
    variance.

    Raises FitFailureError when no resonance feature is present or the
    iteration cap is hit (carrying the best iterate), and OutOfSpanError
    when the resonance converges onto the edge of the swept range.
    """
    f = sweep.frequencies
    s21 = sweep.s21
    if np.any(s21 == 0):
        raise FitFailureError("transmission contains exact zeros; cannot invert")
    z = 1.0 / s21

    dist = np.abs(z - 1.0)
    spread = float(dist.max() - dist.min())
    if spread < 1e-6 * max(1.0, float(np.median(np.abs(z)))):
        raise FitFailureError("no resonance feature detected in the sweep")

    f0_0, qi_0, qc_0, phi_0 = _initial_guess(f, z)
    if initial_guess:
        f0_0 = float(initial_guess.get("f0", f0_0))
        qi_0 = float(initial_guess.get("q_i", qi_0))
        qc_0 = float(initial_guess.get("q_c", qc_0))
        phi_0 = float(initial_guess.get("phi", phi_0))
    f0_0 = min(max(f0_0, float(f[0])), float(f[-1]))
    qi_0 = min(max(qi_0, 1.0), 1e12)
    qc_0 = min(max(qc_0, 1.0), 1e12)
    phi_0 = min(max(phi_0, -math.pi), math.pi)

    def residuals(p):
        model, _ = _model_and_jacobian(p, f)
        diff = model - z
        return np.concatenate([diff.real, diff.imag])

    def jacobian(p):
        _, grads = _model_and_jacobian(p, f)
        cols = [np.concatenate([g.real, g.imag]) for g in grads]
        return np.column_stack(cols)

    lower = [f[0], 1.0, 1.0, -math.pi]
    upper = [f[-1], 1e12, 1e12, math.pi]
    res = least_squares(
        residuals,
        np.array([f0_0, qi_0, qc_0, phi_0]),
        jac=jacobian,
        bounds=(lower, upper),
        method="trf",
        x_scale="jac",
        ftol=_FTOL,
        xtol=_FTOL,
        gtol=_FTOL,
        max_nfev=_MAX_ITER,
    )

    result = _build_result(res, f)
    if not res.success:
        raise FitFailureError(
            "resonance fit did not converge within the iteration cap", best=result
        )
    edge = (f[-1] - f[0]) * 1e-9
    if result.f0 <= f[0] + edge or result.f0 >= f[-1] - edge:
        raise OutOfSpanError(
            f"fitted resonance {result.f0:.6g} Hz sits at the edge of the "
            f"swept range [{f[0]:.6g}, {f[-1]:.6g}] Hz"
        )
    return result


def _build_result(res, f) -> ResonatorFitResult:
    m = res.fun.size
    dof = max(m - 4, 1)
    s2 = 2.0 * res.cost / dof
    cov = np.linalg.pinv(res.jac.T @ res.jac) * s2
    err = np.sqrt(np.maximum(np.diag(cov), 0.0))
    n = f.size
    return ResonatorFitResult(
        f0=float(res.x[0]),
        q_i=float(res.x[1]),
        q_c=float(res.x[2]),
        phi=float(res.x[3]),
        f0_err=float(err[0]),
        q_i_err=float(err[1]),
        q_c_err=float(err[2]),
        phi_err=float(err[3]),
        residual_rms=float(np.sqrt(2.0 * res.cost / n)),
        converged=bool(res.success),
        n_points=n,
    )
