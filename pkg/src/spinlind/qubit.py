"""Closed-form CW dynamics of a driven spin-1/2 ensemble.

With a single spin there is no flip-flop term and the master equation is
exactly solvable.  In the Schrodinger picture,

    <sigma_3(t)> = -tanh(beta w0 / 2) exp(-2 Gamma t)
    <sigma_+(t)> = i w1 tanh(beta w0 / 2)
                   int_0^t exp(-(Gamma + i(varpi - w0))(t - t')) Re[phi_f(t')] dt'

with the stimulated rate ``Gamma = 2 pi (w1/2)^2 [rho_f(w0) + rho_f(-w0)]``
and the Lamb-shift rate ``varpi = 2 pi (w1/2)^2 [rho^>(w0) - rho^>(-w0)]``
(w0 = -gamma B_o is the Larmor frequency, w1 = -gamma B_1).  The transverse
components follow as <sigma_1> = 2 Re<sigma_+>, <sigma_2> = 2 Im<sigma_+>.

Heisenberg-picture coefficients, dynamic structure factors of sigma-+ and
the adiabatic-limit detailed-balance / fluctuation-dissipation identities
are provided alongside; Dirac deltas are carried as (weight, location)
records so those identities stay exact.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import numutil
from .errors import ValidationError
from .lineshape import FrequencyDistribution, characteristic, density, hilbert

__all__ = [
    "SIGMA",
    "QubitParams",
    "trajectory",
    "sigma_plus_expectation",
    "stationary_sigma_plus",
    "heisenberg_coefficients",
    "StructureFactorValue",
    "structure_factor",
    "fdt_check",
    "export_trajectory_csv",
    "export_structure_factor_csv",
]

SIGMA = {
    0: np.eye(2, dtype=complex),
    1: np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    2: np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    3: np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


@dataclass(frozen=True)
class QubitParams:
    """Larmor frequency, drive frequency scale, temperature and line shape."""

    omega_o: float   # -gamma B_o
    omega_1: float   # -gamma B_1
    beta: float
    dist: FrequencyDistribution

    @classmethod
    def from_field(cls, gamma: float, b_o: float, b_1: float, beta: float,
                   dist: FrequencyDistribution) -> "QubitParams":
        return cls(omega_o=-gamma * b_o, omega_1=-gamma * b_1, beta=beta, dist=dist)

    @property
    def rate(self) -> float:
        """Stimulated transition rate Gamma(w0)."""
        quarter = (0.5 * self.omega_1) ** 2
        return 2.0 * math.pi * quarter * (float(density(self.dist, self.omega_o))
                                          + float(density(self.dist, -self.omega_o)))

    @property
    def varpi(self) -> float:
        """Lamb-shift rate; varpi/2 is the frequency pull of the coherence."""
        quarter = (0.5 * self.omega_1) ** 2
        return 2.0 * math.pi * quarter * (hilbert(self.dist, self.omega_o)
                                          - hilbert(self.dist, -self.omega_o))

    @property
    def thermal_polarization(self) -> float:
        return math.tanh(0.5 * self.beta * self.omega_o)


def sigma_plus_expectation(params: QubitParams, t: float, *,
                           rtol: float = 1e-9) -> complex:
    """<sigma_+(t)> by adaptive quadrature of the damped convolution."""
    if t < 0:
        raise ValidationError("t must be nonnegative")
    if t == 0:
        return 0.0 + 0.0j
    gamma = params.rate
    detune = params.varpi - params.omega_o
    th = params.thermal_polarization

    def integrand(tp):
        phase = np.exp(-(gamma + 1j * detune) * (t - tp))
        return phase * np.real(characteristic(params.dist, tp))

    val = numutil.simpson_doubling(integrand, 0.0, t, rtol=rtol, atol=1e-300)
    return 1j * params.omega_1 * th * val


def trajectory(params: QubitParams, t: float, *, rtol: float = 1e-9):
    """Bloch vector (<sigma_1>, <sigma_2>, <sigma_3>) at time t."""
    if t < 0:
        raise ValidationError("t must be nonnegative")
    s3 = -params.thermal_polarization * math.exp(-2.0 * params.rate * t)
    sp = sigma_plus_expectation(params, t, rtol=rtol)
    return 2.0 * sp.real, 2.0 * sp.imag, s3


def stationary_sigma_plus(params: QubitParams, t: float) -> complex:
    """Quasi-static coherence -w1 tanh(beta w0/2) Re[phi(t)] / ((w0 - varpi) + i Gamma)."""
    gamma = params.rate
    if gamma <= 0:
        raise ValidationError("no stationary state without a finite rate")
    re_phi = float(np.real(characteristic(params.dist, t)))
    denom = (params.omega_o - params.varpi) + 1j * gamma
    return -params.omega_1 * params.thermal_polarization * re_phi / denom


def stationary(params: QubitParams, t: float):
    """Stationary <sigma_3> (zero) and <sigma_+(t)> of the driven qubit."""
    return 0.0, stationary_sigma_plus(params, t)


def _interaction_picture(values, omega_o, t):
    s1, s2, s3 = values
    c, s = math.cos(omega_o * t), math.sin(omega_o * t)
    return c * s1 + s * s2, -s * s1 + c * s2, s3


def heisenberg_coefficients(params: QubitParams, t: float, x_op: np.ndarray, *,
                            rtol: float = 1e-9) -> np.ndarray:
    """Coefficients c_i(t) with X(t) = sum_i c_i(t) sigma_i, for the thermal start.

    Determined through the duality Tr[rho(t) X] = Tr[rho(0) X(t)] with
    rho(0) the Boltzmann state; singular at zero temperature where the
    initial polarization is complete.
    """
    z0 = -params.thermal_polarization
    if abs(z0) >= 1.0:
        raise ValidationError("zero-temperature start makes the coefficient map singular")

    s1, s2, s3 = trajectory(params, t, rtol=rtol)
    s1p, s2p, s3p = _interaction_picture((s1, s2, s3), params.omega_o, t)

    denom = 1.0 - z0 * z0
    kappa0 = (1.0 - z0 * s3p) / denom
    kappa1 = 1j * (s2p * z0 - 1j * s1p) / denom
    kappa2 = -1j * (s1p * z0 + 1j * s2p) / denom
    kappa3 = (s3p - z0) / denom
    kappa = np.array([
        [kappa0, kappa1, kappa2, kappa3],
        [kappa1, kappa0, -1j * kappa3, 1j * kappa2],
        [kappa2, 1j * kappa3, kappa0, -1j * kappa1],
        [kappa3, -1j * kappa2, 1j * kappa1, kappa0],
    ])

    c0 = np.array([0.5 * np.trace(x_op @ SIGMA[i]) for i in range(4)])
    theta = params.omega_o * t
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, c, s, 0.0],
        [0.0, -s, c, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ])
    return kappa @ (rot @ c0)


def heisenberg_operator(params: QubitParams, t: float, x_op: np.ndarray, *,
                        rtol: float = 1e-9) -> np.ndarray:
    c = heisenberg_coefficients(params, t, x_op, rtol=rtol)
    return sum(c[i] * SIGMA[i] for i in range(4))


@dataclass(frozen=True)
class StructureFactorValue:
    """Delta piece (weight, location) plus the smooth part at the query point."""

    delta_weight: float
    delta_location: float
    smooth: float


def _lorentz_profile(gamma: float, x: float) -> float:
    two_g = 2.0 * gamma
    return (1.0 / math.pi) * two_g / (two_g * two_g + x * x)


def structure_factor(params: QubitParams, which: str,
                     omega_prime: float) -> StructureFactorValue:
    """Dynamic structure factor of sigma-+ ("-+") or sigma+- ("+-").

    The "-+" spectrum is a half-weight delta at the Larmor frequency plus a
    thermally weighted Lorentzian of half-width 2 Gamma centered there; the
    "+-" spectrum mirrors it at the opposite frequency with the smooth part
    entering with opposite sign.
    """
    th = params.thermal_polarization
    gamma = params.rate
    if which == "-+":
        if gamma <= 0:
            raise ValidationError("the smooth part needs a finite rate")
        return StructureFactorValue(
            delta_weight=0.5,
            delta_location=params.omega_o,
            smooth=0.5 * th * _lorentz_profile(gamma, omega_prime - params.omega_o),
        )
    if which == "+-":
        if gamma <= 0:
            raise ValidationError("the smooth part needs a finite rate")
        return StructureFactorValue(
            delta_weight=0.5,
            delta_location=-params.omega_o,
            smooth=-0.5 * th * _lorentz_profile(gamma, omega_prime + params.omega_o),
        )
    raise ValidationError(f"unknown structure factor label {which!r}")


def fdt_check(params: QubitParams) -> dict:
    """Adiabatic-limit detailed balance and fluctuation-dissipation residuals.

    In the adiabatic limit both spectra collapse to pure delta lines with
    weights (1 +- th)/2; the residuals are evaluated on those weights, so
    they vanish to machine precision by construction of the implemented
    forms.
    """
    th = params.thermal_polarization
    w_minus_plus = 0.5 * (1.0 + th)           # S^ad_{-+} weight at +w0
    w_plus_minus = 0.5 * (1.0 - th)           # S^ad_{+-} weight at -w0
    boltz = math.exp(-params.beta * params.omega_o)
    detailed_balance = abs(w_plus_minus - boltz * w_minus_plus)

    im_chi_weight = -math.pi * th             # Im chi_{-+}: -pi delta(w'-w0) th
    fdt = abs(im_chi_weight - (-math.pi * (1.0 - boltz) * w_minus_plus))
    return {"adiabatic_detailed_balance": detailed_balance, "fdt": fdt}


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def export_trajectory_csv(params: QubitParams, times, path, *,
                          rtol: float = 1e-9) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "sigma_1", "sigma_2", "sigma_3"])
        for t in times:
            s1, s2, s3 = trajectory(params, float(t), rtol=rtol)
            writer.writerow([_fmt(float(t)), _fmt(s1), _fmt(s2), _fmt(s3)])


def export_structure_factor_csv(params: QubitParams, which: str, grid, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["omega_prime", "value", "delta_weight", "delta_location"])
        for w in grid:
            val = structure_factor(params, which, float(w))
            writer.writerow([_fmt(float(w)), _fmt(val.smooth),
                             _fmt(val.delta_weight), _fmt(val.delta_location)])
