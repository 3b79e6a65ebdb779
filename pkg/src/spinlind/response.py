"""Linear response of a general multispin system in the relaxation-free limit.

With the semigroup part switched off and an equilibrium start, the change of
any observable X under the drive is governed by frequency response kernels
built from a single thermal commutator average,

    g = <[X, xi^x(+1, w0)]>_0 = <[X^dag(+1, w0), xi^x(+1, w0)]>_0,

through ``chi_{+-, w0, inf}(w') = g / ((+-w' - w0) + i 0+)``, i.e. a
principal-value kernel plus a (-i pi g)-weighted delta.  Deltas and PV
kernels are carried symbolically as weight/location records; the smooth
eta-regularized reconstruction exists only inside the Kramers-Kronig check.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate

from .eigenops import decompose, plus_blocks
from .errors import ValidationError
from .lineshape import FrequencyDistribution, density, hilbert
from .mastereq import MasterEquationModel, pauli_rates
from .spincore import SpinSystem, boltzmann_state, level_data, xi_operator

__all__ = [
    "AdiabaticContext",
    "make_context",
    "ChiKernel",
    "commutator_average",
    "chi_infinity",
    "chi_transient",
    "steady_rho_integral",
    "transient_rho_integral",
    "steady_magnetization",
    "absorbed_power",
    "PowerLine",
    "kramers_kronig_residual",
    "export_power_csv",
]


@dataclass(frozen=True)
class AdiabaticContext:
    """Equilibrium state and ladder decomposition used by the response kernels."""

    system: SpinSystem
    b_o: float
    beta: float
    levels: object
    rho0: np.ndarray
    xi_dec: object

    @property
    def plus(self):
        return plus_blocks(self.xi_dec)


def make_context(system: SpinSystem, b_o: float, beta: float,
                 gap_tol: float = 1e-9) -> AdiabaticContext:
    levels = level_data(system, b_o)
    rho0 = boltzmann_state(levels.energies, beta)
    dec = decompose(xi_operator(system, "x"), levels, gap_tol)
    return AdiabaticContext(system=system, b_o=b_o, beta=beta, levels=levels,
                            rho0=rho0, xi_dec=dec)


def commutator_average(ctx: AdiabaticContext, x_op: np.ndarray,
                       omega_o: float) -> complex:
    """Thermal average <[X, xi^x(+1, w0)]>_0 (zero when no such block exists)."""
    try:
        block = ctx.xi_dec.block(1, omega_o)
    except KeyError:
        return 0.0 + 0.0j
    comm = x_op @ block.matrix - block.matrix @ x_op
    return complex(np.trace(comm @ ctx.rho0))


@dataclass(frozen=True)
class ChiKernel:
    """Symbolic response value: PV kernel weight plus delta weight/location.

    chi(w') = pv_weight * PV(1/(sign*w' - w0)) + delta_weight * delta(w' - delta_location)

    The real/imaginary closed-form splits for Hermitian X follow from the
    complex weights (Re chi pairs Re g with the PV kernel and Im g with the
    delta, Im chi the other way around with a sign).
    """

    omega_o: float
    sign: int
    commutator_avg: complex
    transient_time: float | None = None

    @property
    def pv_weight(self) -> complex:
        g = self.commutator_avg
        return -g if self.transient_time is not None else g

    @property
    def delta_weight(self) -> complex:
        g = self.commutator_avg
        w = -1j * math.pi * g
        return -w if self.transient_time is not None else w

    @property
    def delta_location(self) -> float:
        # sign * w' = w0  =>  w' = sign * w0
        return self.sign * self.omega_o


def chi_infinity(ctx: AdiabaticContext, x_op: np.ndarray, omega_o: float,
                 sign: int) -> ChiKernel:
    """Steady-state response kernel chi_{sign, w0, inf}."""
    if sign not in (1, -1):
        raise ValidationError("sign must be +1 or -1")
    g = commutator_average(ctx, x_op, omega_o)
    return ChiKernel(omega_o=omega_o, sign=sign, commutator_avg=g)


def chi_transient(ctx: AdiabaticContext, x_op: np.ndarray, omega_o: float,
                  sign: int, t: float) -> ChiKernel:
    """Transient kernel: minus the steady kernel with phase exp(i(sign*w'-w0)t).

    At t = 0 the pieces are the exact negatives of :func:`chi_infinity`.
    """
    if t < 0:
        raise ValidationError("t must be nonnegative")
    g = commutator_average(ctx, x_op, omega_o)
    return ChiKernel(omega_o=omega_o, sign=sign, commutator_avg=g,
                     transient_time=t)


def steady_rho_integral(kernel: ChiKernel, dist: FrequencyDistribution) -> complex:
    """Frequency-density integral of a steady kernel (closed form).

    The PV piece becomes a Hilbert-transform evaluation and the delta piece a
    density evaluation: g [ -pi rho^>(+-w0) * (+-1) - i pi rho_f(+-w0) ].
    """
    if kernel.transient_time is not None:
        raise ValidationError("kernel is transient; use transient_rho_integral")
    g = kernel.commutator_avg
    w0 = kernel.omega_o
    if kernel.sign == 1:
        pv = -math.pi * hilbert(dist, w0)
    else:
        pv = math.pi * hilbert(dist, -w0)
    return g * (pv - 1j * math.pi * float(density(dist, kernel.sign * w0)))


def transient_rho_integral(kernel: ChiKernel, dist: FrequencyDistribution) -> complex:
    """Frequency-density integral of a transient kernel.

    Evaluates -g [ PV int rho_f(w') e^{i(sign w' - w0)t}/(sign w' - w0) dw'
    - i pi rho_f(sign w0) ], an exponentially decaying oscillation with the
    field's relaxation time.
    """
    if kernel.transient_time is None:
        raise ValidationError("kernel is not transient")
    t = kernel.transient_time
    g = kernel.commutator_avg
    w0 = kernel.omega_o
    sign = kernel.sign

    # substitute u = sign * w': density of u is rho_f(sign * u)
    def dens(u):
        return float(density(dist, sign * u))

    span = 60.0 * max(dist.width, 1e-12) + abs(dist.center) + abs(w0)
    lo, hi = w0 - span, w0 + span
    # the integrand oscillates at rate t; give the subdivision budget room
    limit = min(4000, max(400, int(2.0 * span * t / math.pi)))

    def pv_part(f):
        # quad's cauchy weight is 1/(u - wvar), exactly the kernel here
        val, _ = scipy.integrate.quad(f, lo, hi, weight="cauchy", wvar=w0,
                                      limit=limit)
        return val

    re = pv_part(lambda u: dens(u) * math.cos((u - w0) * t))
    im = pv_part(lambda u: dens(u) * math.sin((u - w0) * t))
    pv = re + 1j * im
    return -g * (pv - 1j * math.pi * dens(w0))


def lorentzian_transient_closed_form(kernel: ChiKernel,
                                     dist: FrequencyDistribution) -> complex:
    """Contour-integral result for a Lorentzian density (plus branch)."""
    if dist.kind != "lorentzian":
        raise ValidationError("closed form is specific to the lorentzian kind")
    if kernel.transient_time is None:
        raise ValidationError("kernel is not transient")
    if kernel.sign != 1:
        raise ValidationError("closed form implemented for the plus branch")
    t = kernel.transient_time
    g = kernel.commutator_avg
    w = 0.5 * dist.width
    dw = dist.center - kernel.omega_o
    return -g * np.exp(1j * dw * t) * math.exp(-w * t) / (dw + 1j * w)


def steady_magnetization(model: MasterEquationModel, t: float, *,
                         n_over_v: float = 1.0) -> float:
    """Steady-limit transverse magnetization under the drive (relaxation-free).

    Assembles 2 B1 int dw' rho_f(w') sum_w0 [cos(w0 t) chi' + sin(w0 t) chi'']
    from the steady kernels of M_x = -(N/V) xi^x; the density integrals of
    the PV kernels become Hilbert transforms and those of the deltas become
    density evaluations.
    """
    dist = model.field.dist
    b1 = model.field.b_1
    total = 0.0
    m_x = -n_over_v * xi_operator(model.system, "x")
    ctx = AdiabaticContext(system=model.system, b_o=model.field.b_o,
                           beta=model.beta, levels=model.levels,
                           rho0=model.boltzmann, xi_dec=model.dec)
    for block in ctx.plus:
        w0 = block.omega
        g = commutator_average(ctx, m_x, w0)
        if abs(g.imag) > 1e-10 * max(1.0, abs(g)):
            raise ValidationError("magnetization kernel should be real for Hermitian X")
        branches = (steady_rho_integral(chi_infinity(ctx, m_x, w0, +1), dist)
                    + steady_rho_integral(chi_infinity(ctx, m_x, w0, -1), dist))
        chi_p = branches.real            # rho_f integral of chi'
        chi_pp = -branches.imag          # rho_f integral of chi''
        total += math.cos(w0 * t) * chi_p + math.sin(w0 * t) * chi_pp
    return 2.0 * b1 * total


@dataclass(frozen=True)
class PowerLine:
    omega_o: float
    power: float


def absorbed_power(model: MasterEquationModel, *, n_over_v: float = 1.0):
    """Absorbed power per unit volume and its per-frequency decomposition.

    P = (N/V) sum_w0 w0 sum_{n,n'} (P_n - P_n') Gamma_{n,n'}(w0) over the
    canonical (+1)-step transition entries.
    """
    pops = np.real(np.diag(model.boltzmann))
    per_line: dict = {}
    total = 0.0
    for entry in pauli_rates(model):
        if not entry.canonical:
            continue
        contrib = n_over_v * entry.omega * (pops[entry.n_to] - pops[entry.n_from]) * entry.total
        per_line[entry.omega] = per_line.get(entry.omega, 0.0) + contrib
        total += contrib
    lines = tuple(PowerLine(omega_o=w, power=p) for w, p in sorted(per_line.items()))
    return total, lines


def kramers_kronig_residual(kernels, grid, eta: float, *,
                            window: float = 40.0) -> float:
    """Consistency of the eta-smoothed response with its dispersion relation.

    Reconstructs chi_eta(w') = sum g / ((sign w' - w0) + i eta), computes
    (1/pi) PV int Im chi_eta(u) / (u - w') du over a finite window by
    principal-value quadrature, and returns the maximum deviation from
    Re chi_eta on the grid.  The finite window contributes an O(eta) tail
    error; the identity itself is exact for the smoothed form.
    """
    if eta <= 0:
        raise ValidationError("eta must be positive")
    kernels = list(kernels)
    grid = np.asarray(grid, dtype=float)

    def chi(u):
        u = np.asarray(u, dtype=float)
        out = np.zeros(u.shape, dtype=complex)
        for k in kernels:
            out += k.commutator_avg / ((k.sign * u - k.omega_o) + 1j * eta)
        return out

    if not kernels:
        return 0.0

    centers = [k.sign * k.omega_o for k in kernels]
    lo = min(min(centers), float(grid.min())) - window
    hi = max(max(centers), float(grid.max())) + window

    worst = 0.0
    for x in grid:
        val, _ = scipy.integrate.quad(lambda u: float(np.imag(chi(u))), lo, hi,
                                      weight="cauchy", wvar=float(x), limit=400)
        re_rec = val / math.pi
        worst = max(worst, abs(re_rec - float(np.real(chi(x)))))
    return worst


def export_power_csv(model: MasterEquationModel, path, *, n_over_v: float = 1.0) -> None:
    total, lines = absorbed_power(model, n_over_v=n_over_v)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["omega_o", "power"])
        for line in lines:
            writer.writerow([f"{line.omega_o:.12g}", f"{line.power:.12g}"])
        writer.writerow(["total", f"{total:.12g}"])
