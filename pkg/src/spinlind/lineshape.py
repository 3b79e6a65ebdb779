"""Frequency distribution of the oscillating field and its transforms.

The drive is a superposition of rotating fields whose frequencies follow a
normalized probability density rho_f centered on the carrier frequency.  The
module provides the density itself, its characteristic function phi_f(t)
(which damps the inhomogeneous drive term), its Hilbert transform (which
feeds the Lamb shift), and the delta/principal-value split of the half-line
time integral that produces both.

Note on the Lorentzian: the normalized Cauchy density
``(1/pi) (w/2) / ((w/2)^2 + (omega - x)^2)`` (w = FWHM) is used, which is the
density whose characteristic function is ``exp(i omega t - (w/2)|t|)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.special

from .errors import PoleError, ValidationError

__all__ = [
    "FrequencyDistribution",
    "lorentzian",
    "gaussian",
    "delta_line",
    "density",
    "characteristic",
    "hilbert",
    "relaxation_time",
    "pv_integral",
    "GammaSplit",
    "gamma_halfline",
    "dissipator_weight",
    "lamb_weight",
]

_KINDS = ("lorentzian", "gaussian", "delta")


@dataclass(frozen=True)
class FrequencyDistribution:
    """Symmetric frequency density of the drive: kind, center, FWHM width."""

    kind: str
    center: float
    width: float

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown distribution kind {self.kind!r}")
        if self.kind == "delta":
            if self.width != 0.0:
                raise ValidationError("a delta line has zero width")
        elif not self.width > 0.0:
            raise ValidationError("width (FWHM) must be positive")


def lorentzian(center: float, width: float) -> FrequencyDistribution:
    return FrequencyDistribution("lorentzian", float(center), float(width))


def gaussian(center: float, width: float) -> FrequencyDistribution:
    return FrequencyDistribution("gaussian", float(center), float(width))


def delta_line(center: float) -> FrequencyDistribution:
    return FrequencyDistribution("delta", float(center), 0.0)


def _gauss_sigma(dist: FrequencyDistribution) -> float:
    return dist.width / (2.0 * math.sqrt(2.0 * math.log(2.0)))


def density(dist: FrequencyDistribution, omega_prime):
    """Probability density rho_f evaluated at omega_prime (vectorized)."""
    x = np.asarray(omega_prime, dtype=float)
    if dist.kind == "lorentzian":
        hw = 0.5 * dist.width
        out = (hw / np.pi) / (hw * hw + (dist.center - x) ** 2)
    elif dist.kind == "gaussian":
        s = _gauss_sigma(dist)
        out = np.exp(-0.5 * ((x - dist.center) / s) ** 2) / (s * math.sqrt(2.0 * math.pi))
    else:  # delta: symbolic spike, zero elsewhere
        out = np.where(x == dist.center, np.inf, 0.0)
    return out if out.ndim else float(out)


def characteristic(dist: FrequencyDistribution, t):
    """Characteristic function phi_f(t) = int rho_f(w') exp(i w' t) dw'."""
    tt = np.asarray(t, dtype=float)
    carrier = np.exp(1j * dist.center * tt)
    if dist.kind == "lorentzian":
        out = carrier * np.exp(-0.5 * dist.width * np.abs(tt))
    elif dist.kind == "gaussian":
        s = _gauss_sigma(dist)
        out = carrier * np.exp(-0.5 * (s * tt) ** 2)
    else:
        out = carrier
    return out if out.ndim else complex(out)


def relaxation_time(dist: FrequencyDistribution) -> float:
    """Time for the envelope of phi_f to decay to 1/e (inf for a delta line)."""
    if dist.kind == "lorentzian":
        return 2.0 / dist.width
    if dist.kind == "gaussian":
        return math.sqrt(2.0) / _gauss_sigma(dist)
    return math.inf


def pv_integral(f, pole: float, lo: float, hi: float, *, h0: float | None = None,
                breakpoints=(), epsabs: float = 1e-12,
                epsrel: float = 1e-10) -> float:
    """Cauchy principal value of int f(u)/(pole - u) du over [lo, hi].

    Symmetric excision of half-width h around the pole with Richardson
    extrapolation over h, h/2, h/4 (leading excision error is linear in h,
    next correction cubic).  ``breakpoints`` marks sharp features of f so the
    adaptive quadrature cannot skip over them on wide windows.
    """
    def plain(a: float, b: float) -> float:
        pts = [p for p in breakpoints if a < p < b] or None
        val, _ = scipy.integrate.quad(lambda u: f(u) / (pole - u), a, b,
                                      points=pts, epsabs=epsabs, epsrel=epsrel,
                                      limit=400)
        return val

    if not lo < pole < hi:
        return plain(lo, hi)
    if h0 is None:
        h0 = 0.125 * min(pole - lo, hi - pole)

    def excised(h: float) -> float:
        return plain(lo, pole - h) + plain(pole + h, hi)

    i_h = excised(h0)
    i_h2 = excised(0.5 * h0)
    i_h4 = excised(0.25 * h0)
    r_h = 2.0 * i_h2 - i_h          # removes the O(h) term
    r_h2 = 2.0 * i_h4 - i_h2
    return (8.0 * r_h2 - r_h) / 7.0  # removes the O(h^3) term


def hilbert(dist: FrequencyDistribution, x: float) -> float:
    """Hilbert transform (1/pi) PV int rho_f(w') / (x - w') dw'."""
    x = float(x)
    if dist.kind == "lorentzian":
        hw = 0.5 * dist.width
        u = x - dist.center
        return (1.0 / math.pi) * u / (u * u + hw * hw)
    if dist.kind == "delta":
        if x == dist.center:
            raise PoleError("Hilbert transform of a delta line diverges at its center")
        return 1.0 / (math.pi * (x - dist.center))
    # gaussian: principal-value quadrature over +-8 sigma around the center
    s = _gauss_sigma(dist)
    lo, hi = dist.center - 8.0 * s, dist.center + 8.0 * s
    if not lo < x < hi:
        # pole outside the mass: integrate the density directly
        val, _ = scipy.integrate.quad(lambda u: density(dist, u) / (x - u), lo, hi,
                                      points=[dist.center], epsabs=1e-13,
                                      epsrel=1e-11, limit=200)
        return val / math.pi
    h0 = min(0.05 * s, 0.25 * min(x - lo, hi - x))
    return pv_integral(lambda u: density(dist, u), x, lo, hi, h0=h0,
                       breakpoints=[dist.center]) / math.pi


def hilbert_gaussian_closed(dist: FrequencyDistribution, x: float) -> float:
    """Closed form of the Gaussian Hilbert transform via the Dawson function."""
    if dist.kind != "gaussian":
        raise ValidationError("closed form is specific to the gaussian kind")
    s = _gauss_sigma(dist)
    xi = (x - dist.center) / (math.sqrt(2.0) * s)
    return math.sqrt(2.0) / (math.pi * s) * float(scipy.special.dawsn(xi))


@dataclass(frozen=True)
class GammaSplit:
    """Delta/principal-value split of B1^2 int_0^inf exp(i tau w) dtau.

    The half-line integral equals B1^2 [pi delta(w) + i PV(1/w)]; the record
    carries the pi-weighted delta (located at w = 0) and the PV kernel weight.
    The master-equation assembly integrates this against the frequency
    density, turning the delta into density evaluations (dissipator rates)
    and the PV kernel into Hilbert-transform evaluations (Lamb shifts).
    """

    delta_weight: float
    delta_location: float
    pv_weight: float


def gamma_halfline(omega: float, b_1: float = 1.0) -> GammaSplit:
    return GammaSplit(delta_weight=math.pi * b_1 * b_1,
                      delta_location=0.0,
                      pv_weight=b_1 * b_1)


def dissipator_weight(dist: FrequencyDistribution, omega_o: float, b_1: float,
                      sign: int) -> float:
    """Stimulated rate 2 pi B1^2 rho_f(sign * omega_o) after the frequency integral."""
    if dist.kind == "delta":
        raise ValidationError(
            "a delta line gives no finite dissipator rates; use a finite-width kind"
        )
    return 2.0 * math.pi * b_1 * b_1 * float(density(dist, sign * omega_o))


def lamb_weight(dist: FrequencyDistribution, omega_o: float, b_1: float,
                sign: int) -> float:
    """Lamb-shift weight sign * pi B1^2 rho_f^>(sign * omega_o)."""
    return sign * math.pi * b_1 * b_1 * hilbert(dist, sign * omega_o)
