"""Zeroth-order semiclassical Markovian master equation for a driven multispin system.

The interaction-picture equation of motion is

    d rho / dt = -i [H_LR(t), rho(0)] - i [H_LS, rho(t)] + D[rho(t)]

where the inhomogeneous drive term acts on the *initial* (Boltzmann) state
only.  H_LR(t) is the drive Hamiltonian damped by the characteristic function
of the field's frequency density, H_LS the Lamb shift built from Hilbert
transforms of that density, and D the stimulated emission/absorption
dissipator whose rates are density evaluations at the transition gaps.

Sign convention for the Lamb shift: the commutator order is chosen so a
single spin-1/2 gives ``H_LS = -pi (omega_1/2)^2 [rho^>(w0) - rho^>(-w0)]
sigma_3``, i.e. the coherence relaxes as ``-(Gamma + i varpi) <sigma_+>`` with
``varpi = 2 pi (omega_1/2)^2 [rho^>(w0) - rho^>(-w0)]``.

The formal solution is the map ``Lambda(t) = exp(L t) + int_0^t exp(L (t-s))
A(s) ds``: trace preserving, but not completely positive because of the
inhomogeneous term.  Its domain is the Boltzmann state of the diagonal
Hamiltonian; propagation enforces this unless explicitly overridden.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.integrate

from . import lineshape, numutil
from .eigenops import Decomposition, decompose, plus_blocks
from .errors import (
    AccuracyError,
    DomainViolationError,
    ValidationError,
    WitnessInapplicableError,
)
from .lineshape import FrequencyDistribution, characteristic, relaxation_time
from .spincore import SpinSystem, boltzmann_state, level_data, xi_operator

__all__ = [
    "FieldConfig",
    "MasterEquationModel",
    "Trajectory",
    "PauliRate",
    "KrausAudit",
    "WitnessResult",
    "build_model",
    "linear_response_hamiltonian",
    "lamb_shift",
    "dissipator",
    "propagate",
    "lambda_map",
    "kraus_audit",
    "noncp_witness",
    "pauli_rates",
    "wavefunction_oracle",
    "wavefunction_distribution",
    "export_trajectory_csv",
    "export_trajectory_json",
]

MAP_DIM_CAP = 64
DOMAIN_ATOL = 1e-10


@dataclass(frozen=True)
class FieldConfig:
    """Static field, drive amplitude and drive frequency density.

    ``b_1 = 0`` is allowed (undriven probe); the weak-field regime
    ``b_1/b_o << 1`` is advisory and only warned about.
    """

    b_o: float
    b_1: float
    dist: FrequencyDistribution

    def __post_init__(self):
        if not self.b_o > 0:
            raise ValidationError("the steady field B_o must be positive")
        if self.b_1 < 0:
            raise ValidationError("the drive amplitude B_1 cannot be negative")
        if self.b_1 > 0.1 * self.b_o:
            warnings.warn(
                f"B_1/B_o = {self.b_1 / self.b_o:.3g} is outside the weak-field regime",
                stacklevel=2,
            )


@dataclass
class MasterEquationModel:
    """Assembled superoperator data; treat as immutable after construction."""

    system: SpinSystem
    field: FieldConfig
    beta: float
    levels: object
    dec: Decomposition
    plus_mats: np.ndarray       # (K, D, D) stacked xi^x(+1, w) blocks
    plus_omegas: np.ndarray     # (K,)
    rates_plus: np.ndarray      # 2 pi B1^2 rho_f(+w), per block
    rates_minus: np.ndarray     # 2 pi B1^2 rho_f(-w), per block
    h_ls: np.ndarray
    boltzmann: np.ndarray
    _anti: np.ndarray = field(repr=False, default=None)

    @property
    def dim(self) -> int:
        return self.system.dim

    @property
    def rates(self) -> dict:
        out = {}
        for w, gp, gm in zip(self.plus_omegas, self.rates_plus, self.rates_minus):
            out[(1, float(w))] = float(gp)
            out[(-1, float(w))] = float(gm)
        return out


def build_model(system: SpinSystem, field_cfg: FieldConfig, beta: float,
                gap_tol: float = 1e-9) -> MasterEquationModel:
    """Assemble the zeroth-order model for a system in the given field."""
    if not np.isfinite(beta):
        raise ValidationError("beta must be finite")
    levels = level_data(system, field_cfg.b_o)
    xi_x = xi_operator(system, "x")
    dec = decompose(xi_x, levels, gap_tol)
    plus = plus_blocks(dec)
    d = system.dim

    if plus:
        mats = np.stack([b.matrix for b in plus])
        omegas = np.array([b.omega for b in plus])
    else:
        mats = np.zeros((0, d, d), dtype=complex)
        omegas = np.zeros(0)

    b1 = field_cfg.b_1
    if b1 > 0 and mats.shape[0] and field_cfg.dist.kind == "delta":
        raise ValidationError("a delta-line drive has no finite dissipator rates")

    if b1 > 0 and mats.shape[0]:
        gp = np.array([lineshape.dissipator_weight(field_cfg.dist, w, b1, +1)
                       for w in omegas])
        gm = np.array([lineshape.dissipator_weight(field_cfg.dist, w, b1, -1)
                       for w in omegas])
        h_ls = np.zeros((d, d), dtype=complex)
        for k, w in enumerate(omegas):
            weight = (lineshape.lamb_weight(field_cfg.dist, w, b1, +1)
                      + lineshape.lamb_weight(field_cfg.dist, w, b1, -1))
            a = mats[k]
            h_ls += weight * (a @ a.conj().T - a.conj().T @ a)
    else:
        gp = np.zeros(len(omegas))
        gm = np.zeros(len(omegas))
        h_ls = np.zeros((d, d), dtype=complex)

    anti = np.zeros((d, d), dtype=complex)
    for k in range(mats.shape[0]):
        a = mats[k]
        anti += 0.5 * (gp[k] + gm[k]) * (a.conj().T @ a + a @ a.conj().T)

    rho0 = boltzmann_state(levels.energies, beta)
    return MasterEquationModel(
        system=system, field=field_cfg, beta=beta, levels=levels, dec=dec,
        plus_mats=mats, plus_omegas=omegas, rates_plus=gp, rates_minus=gm,
        h_ls=h_ls, boltzmann=rho0, _anti=anti,
    )


def linear_response_hamiltonian(model: MasterEquationModel, t: float) -> np.ndarray:
    """H_LR(t) = 2 B1 Re[phi_f(t)] sum_w exp(-i t w) xi^x(+1, w) + h.c."""
    if t < 0:
        raise ValidationError("t must be nonnegative")
    d = model.dim
    if model.plus_mats.shape[0] == 0 or model.field.b_1 == 0:
        return np.zeros((d, d), dtype=complex)
    phases = np.exp(-1j * t * model.plus_omegas)
    half = 2.0 * model.field.b_1 * np.real(characteristic(model.field.dist, t)) * (
        np.tensordot(phases, model.plus_mats, axes=(0, 0))
    )
    return half + half.conj().T


def _h_lr_stack(model: MasterEquationModel, ts: np.ndarray) -> np.ndarray:
    """Vectorized H_LR over a time grid, shape (len(ts), D, D)."""
    d = model.dim
    ts = np.asarray(ts, dtype=float)
    if model.plus_mats.shape[0] == 0 or model.field.b_1 == 0:
        return np.zeros((ts.size, d, d), dtype=complex)
    env = 2.0 * model.field.b_1 * np.real(characteristic(model.field.dist, ts))
    phases = np.exp(-1j * np.outer(ts, model.plus_omegas))
    half = np.einsum("t,tk,kij->tij", env, phases, model.plus_mats)
    return half + np.conj(np.swapaxes(half, 1, 2))


def lamb_shift(model: MasterEquationModel) -> np.ndarray:
    """The (time-independent) Lamb shift Hamiltonian."""
    return model.h_ls.copy()


def dissipator(model: MasterEquationModel, rho: np.ndarray) -> np.ndarray:
    """Apply the stimulated emission/absorption dissipator to ``rho``."""
    rho = np.asarray(rho)
    if rho.shape != (model.dim, model.dim):
        raise ValidationError("density matrix dimension mismatch")
    out = -(model._anti @ rho + rho @ model._anti)
    g = model.rates_plus + model.rates_minus
    if model.plus_mats.shape[0]:
        p = model.plus_mats
        out = out + np.einsum("k,kij,jl,kml->im", g, p, rho, p.conj())
        out = out + np.einsum("k,kji,jl,klm->im", g, p.conj(), rho, p)
    return out


def _l_term(model: MasterEquationModel, rho: np.ndarray) -> np.ndarray:
    h = model.h_ls
    return -1j * (h @ rho - rho @ h) + dissipator(model, rho)


def a_term(model: MasterEquationModel, t: float, rho0: np.ndarray) -> np.ndarray:
    """Inhomogeneous drive term -i [H_LR(t), rho0]."""
    h = linear_response_hamiltonian(model, t)
    return -1j * (h @ rho0 - rho0 @ h)


def default_dt(model: MasterEquationModel) -> float:
    """Step resolving the fastest drive phase and the phi_f decay."""
    max_phase = float(np.max(np.abs(model.plus_omegas), initial=0.0))
    max_phase += abs(model.field.dist.center)
    candidates = []
    if max_phase > 0:
        candidates.append(2.0 * math.pi / (50.0 * max_phase))
    tau = relaxation_time(model.field.dist)
    if math.isfinite(tau):
        candidates.append(tau / 50.0)
    if not candidates:
        raise ValidationError("cannot pick a default step for a static problem; pass dt")
    return min(candidates)


def _check_domain(model: MasterEquationModel, rho0: np.ndarray, unsafe: bool) -> None:
    if unsafe:
        return
    if numutil.max_abs(np.asarray(rho0) - model.boltzmann) > DOMAIN_ATOL:
        raise DomainViolationError(
            "rho0 is not the model's Boltzmann state; the zeroth-order map is "
            "defined on that state only (pass unsafe=True to override)"
        )


@dataclass(frozen=True)
class Trajectory:
    """Interaction-picture trajectory on a uniform grid."""

    times: np.ndarray
    states: np.ndarray            # (nt, D, D)
    energies: np.ndarray

    def schrodinger_states(self) -> np.ndarray:
        """Conjugate with exp(-i t Z0): rho_ab(t) = e^{-i t (eps_a - eps_b)} state_ab."""
        gaps = self.energies[:, None] - self.energies[None, :]
        phases = np.exp(-1j * self.times[:, None, None] * gaps[None, :, :])
        return phases * self.states

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def propagate(model: MasterEquationModel, rho0: np.ndarray, t_end: float,
              dt: float | None = None, *, store_every: int | None = None,
              unsafe: bool = False) -> Trajectory:
    """Fixed-step 4th-order integration of the inhomogeneous master equation."""
    if dt is None:
        dt = default_dt(model)
    if not dt > 0:
        raise ValidationError("dt must be positive")
    _check_domain(model, rho0, unsafe)

    n_steps = max(1, int(math.ceil(t_end / dt - 1e-12)))
    dt = t_end / n_steps
    if store_every is None:
        store_every = max(1, n_steps // 2000)

    rho_init = np.array(rho0, dtype=complex)
    y = rho_init.copy()
    times = [0.0]
    states = [y.copy()]

    def rhs(t, rho):
        return a_term(model, t, rho_init) + _l_term(model, rho)

    t = 0.0
    for step in range(1, n_steps + 1):
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
        k4 = rhs(t + dt, y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = step * dt
        if step % store_every == 0 or step == n_steps:
            times.append(t)
            states.append(y.copy())

    return Trajectory(times=np.array(times), states=np.array(states),
                      energies=model.levels.energies.copy())


def liouvillian_matrix(model: MasterEquationModel) -> np.ndarray:
    """Column-stacked matrix of the semigroup generator L."""
    if model.dim > MAP_DIM_CAP:
        raise ValidationError(
            f"map-level operations are capped at dimension {MAP_DIM_CAP}"
        )
    mat = numutil.hamiltonian_superop(model.h_ls)
    g = model.rates_plus + model.rates_minus
    channels = []
    for k in range(model.plus_mats.shape[0]):
        if g[k] != 0.0:
            channels.append((g[k], model.plus_mats[k]))
            channels.append((g[k], model.plus_mats[k].conj().T))
    if channels:
        mat = mat + numutil.dissipator_superop(channels)
    return mat


def lambda_map(model: MasterEquationModel, t: float, rho0: np.ndarray, *,
               unsafe: bool = False, include_drive: bool = True,
               rtol: float = 1e-9, max_nodes: int = 4096) -> np.ndarray:
    """Evaluate Lambda(t) rho0 = e^{Lt} rho0 + int_0^t e^{L(t-s)} A(s) rho0 ds.

    The semigroup part uses the matrix exponential of the vectorized
    generator; the inhomogeneity is integrated with Gauss-Legendre quadrature
    under node doubling.  ``include_drive=False`` drops the inhomogeneous
    term, leaving the completely positive semigroup alone.
    """
    _check_domain(model, rho0, unsafe)
    d = model.dim
    lmat = liouvillian_matrix(model)
    rho_init = np.array(rho0, dtype=complex)
    out_vec = numutil.expm(lmat * t) @ numutil.vec(rho_init)

    if include_drive and t > 0 and model.field.b_1 > 0 and model.plus_mats.shape[0]:
        def quadrature(n):
            nodes, weights = numutil.gauss_legendre(n, 0.0, t)
            acc = np.zeros(d * d, dtype=complex)
            for s, w in zip(nodes, weights):
                drive = numutil.vec(a_term(model, s, rho_init))
                acc += w * (numutil.expm(lmat * (t - s)) @ drive)
            return acc

        n = 16
        prev = quadrature(n)
        while True:
            n *= 2
            if n > max_nodes:
                raise AccuracyError("inhomogeneity quadrature did not converge")
            cur = quadrature(n)
            scale = max(numutil.max_abs(out_vec + cur), 1e-300)
            if numutil.max_abs(cur - prev) <= rtol * scale:
                break
            prev = cur
        out_vec = out_vec + cur

    return numutil.unvec(out_vec, d)


@dataclass(frozen=True)
class KrausAudit:
    trace_residual: float
    reconstruction_residual: float
    completeness_residual: float
    phi1_choi_min: float
    phi2_choi_min: float
    n_nodes: int


def _semigroup_kraus(model, lmat, s, psd_tol):
    prop = numutil.expm(lmat * s)
    choi = numutil.choi_matrix(prop, model.dim)
    return numutil.kraus_from_choi(choi, model.dim, psd_tol=psd_tol)


def kraus_audit(model: MasterEquationModel, t: float, rho0: np.ndarray, *,
                unsafe: bool = False, n_nodes: int = 256,
                psd_tol: float = 1e-9) -> KrausAudit:
    """Rebuild the map as a difference of two CP maps and report residuals.

    The semigroup factors come from the Choi eigendecomposition of e^{L s};
    the drive is inserted through M(s) = (I - i H_LR(s))/sqrt(2), so that
    ``M rho M^dag - M^dag rho M = -i [H_LR, rho]``.  The reconstruction
    residual is measured against :func:`lambda_map`.
    """
    _check_domain(model, rho0, unsafe)
    d = model.dim
    lmat = liouvillian_matrix(model)
    rho_init = np.array(rho0, dtype=complex)
    eye = np.eye(d)

    if n_nodes % 2:
        n_nodes += 1
    ts = np.linspace(0.0, t, n_nodes + 1)
    weights = np.ones(n_nodes + 1)
    weights[1:-1:2], weights[2:-1:2] = 4.0, 2.0
    weights *= t / n_nodes / 3.0

    h_lr = _h_lr_stack(model, ts)
    kraus_t = _semigroup_kraus(model, lmat, t, psd_tol)
    node_kraus = [_semigroup_kraus(model, lmat, t - tau, psd_tol) for tau in ts]

    def sandwich_superop(ops) -> np.ndarray:
        s = np.zeros((d * d, d * d), dtype=complex)
        for op in ops:
            s += np.kron(op.conj(), op)
        return s

    phi1_mat = sandwich_superop(kraus_t)
    phi2_mat = np.zeros((d * d, d * d), dtype=complex)
    completeness = sum(kop.conj().T @ kop for kop in kraus_t)

    for idx, weight in enumerate(weights):
        m_op = (eye - 1j * h_lr[idx]) / math.sqrt(2.0)
        phi1_mat += weight * sandwich_superop([kop @ m_op for kop in node_kraus[idx]])
        phi2_mat += weight * sandwich_superop([kop @ m_op.conj().T
                                               for kop in node_kraus[idx]])
        ksum = sum(kop.conj().T @ kop for kop in node_kraus[idx])
        completeness = completeness + weight * (
            m_op.conj().T @ ksum @ m_op - m_op @ ksum @ m_op.conj().T)

    reconstructed = numutil.unvec((phi1_mat - phi2_mat) @ numutil.vec(rho_init), d)
    reference = lambda_map(model, t, rho_init, unsafe=unsafe)
    trace_residual = abs(complex(np.trace(reconstructed)) - complex(np.trace(rho_init)))
    rec_residual = numutil.max_abs(reconstructed - reference)
    comp_residual = numutil.max_abs(completeness - eye)

    phi1_choi_min = float(np.linalg.eigvalsh(
        numutil.hermitize(numutil.choi_matrix(phi1_mat, d))).min())
    phi2_choi_min = float(np.linalg.eigvalsh(
        numutil.hermitize(numutil.choi_matrix(phi2_mat, d))).min())

    return KrausAudit(
        trace_residual=trace_residual,
        reconstruction_residual=rec_residual,
        completeness_residual=comp_residual,
        phi1_choi_min=phi1_choi_min,
        phi2_choi_min=phi2_choi_min,
        n_nodes=n_nodes,
    )


@dataclass(frozen=True)
class WitnessResult:
    det_value: float
    predicted: float
    x: float
    beta_abs: float


def drive_integral(model: MasterEquationModel, t: float, *,
                   rtol: float = 1e-10) -> np.ndarray:
    """K(t) = int_0^t H_LR(tau) dtau."""
    if t <= 0:
        return np.zeros((model.dim, model.dim), dtype=complex)
    return numutil.simpson_doubling(lambda ts: _h_lr_stack(model, ts), 0.0, t,
                                    rtol=rtol, atol=1e-300)


def noncp_witness(model: MasterEquationModel, psi: np.ndarray, t: float, *,
                  unsafe: bool = False) -> WitnessResult:
    """Negativity witness for a pure input under the drive-only (L -> 0) map.

    Builds rho(t) = rho0 - i [K(t), rho0] for rho0 = |psi><psi|, restricts to
    the two-dimensional subspace spanned by K|psi> and its orthogonal
    complement within span{psi, K psi}, and returns the restricted
    determinant next to the closed-form prediction ``-x^2 (1 + x^2) |b|^2``.
    """
    if not unsafe:
        raise DomainViolationError(
            "the witness feeds a pure state to a map whose domain is the "
            "Boltzmann state; pass unsafe=True to acknowledge"
        )
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.shape[0] != model.dim:
        raise ValidationError("state dimension mismatch")
    nrm = np.linalg.norm(psi)
    if nrm == 0:
        raise ValidationError("psi must be nonzero")
    psi = psi / nrm

    k_op = drive_integral(model, t)
    k_scale = 1.0 + model.field.b_1 * numutil.max_abs(model.plus_mats) * max(t, 1.0)
    if numutil.max_abs(k_op) <= 1e-13 * k_scale:
        raise WitnessInapplicableError(
            "the time-integrated drive vanishes; the map is the identity here"
        )

    rho0 = np.outer(psi, psi.conj())
    rho_t = rho0 - 1j * (k_op @ rho0 - rho0 @ k_op)

    v0 = k_op @ psi
    x = float(np.linalg.norm(v0))
    if x <= 1e-13 * k_scale:
        raise WitnessInapplicableError("K(t)|psi> vanishes; nothing to witness")
    v0t = v0 / x
    v1 = psi - 1j * v0
    v1t = v1 / np.linalg.norm(v1)
    alpha = complex(np.vdot(v0t, v1t))
    w = v1t - alpha * v0t
    beta_abs = float(np.linalg.norm(w))
    if beta_abs > 1e-12:
        perp = w / beta_abs
    else:
        # degenerate direction: any unit vector orthogonal to v0t will do
        basis = np.eye(model.dim, dtype=complex)
        overlaps = basis - np.outer(v0t, v0t.conj() @ basis)
        col = int(np.argmax(np.linalg.norm(overlaps, axis=0)))
        perp = overlaps[:, col] / np.linalg.norm(overlaps[:, col])

    sub = np.array([
        [np.vdot(v0t, rho_t @ v0t), np.vdot(v0t, rho_t @ perp)],
        [np.vdot(perp, rho_t @ v0t), np.vdot(perp, rho_t @ perp)],
    ])
    det = np.linalg.det(sub)
    if abs(det.imag) > 1e-10 * max(1.0, abs(det.real)):
        raise AccuracyError("restricted determinant is not numerically real")
    predicted = -x * x * (1.0 + x * x) * beta_abs * beta_abs
    return WitnessResult(det_value=float(det.real), predicted=float(predicted),
                         x=x, beta_abs=beta_abs)


@dataclass(frozen=True)
class PauliRate:
    """One directed transition entry of the Pauli rate table."""

    n_from: int       # column state (higher magnetization for omega > 0 entries)
    n_to: int
    omega: float
    gamma_plus: float
    gamma_minus: float
    element: complex
    canonical: bool = True   # False for the mirrored orientation of a pair

    @property
    def total(self) -> float:
        return self.gamma_plus + self.gamma_minus


def pauli_rates(model: MasterEquationModel):
    """Stimulated transition rates between basis states.

    Entries come in mirror pairs: the reverse transition carries the
    opposite-sign frequency with the plus/minus rates swapped, so the total
    rate is symmetric under exchanging the two states.
    """
    entries = []
    for k in range(model.plus_mats.shape[0]):
        w = float(model.plus_omegas[k])
        gp, gm = float(model.rates_plus[k]), float(model.rates_minus[k])
        mat = model.plus_mats[k]
        rows, cols = np.nonzero(mat)
        for a, b in zip(rows, cols):
            el = complex(mat[a, b])
            weight = abs(el) ** 2
            entries.append(PauliRate(n_from=int(b), n_to=int(a), omega=w,
                                     gamma_plus=gp * weight, gamma_minus=gm * weight,
                                     element=el, canonical=True))
            entries.append(PauliRate(n_from=int(a), n_to=int(b), omega=-w,
                                     gamma_plus=gm * weight, gamma_minus=gp * weight,
                                     element=np.conj(el), canonical=False))
    return tuple(entries)


def transition_rate(model: MasterEquationModel, n_from: int, n_to: int) -> float:
    """Total stimulated rate between two basis states (0 when forbidden)."""
    for entry in pauli_rates(model):
        if entry.n_from == n_from and entry.n_to == n_to:
            return entry.total
    return 0.0


def wavefunction_oracle(energies: np.ndarray, h_prime, k0: int, k: int,
                        t_o: float, t: float, *, rtol: float = 1e-9,
                        n0: int = 16) -> float:
    """Second-order transition probability |a_k(t)|^2 for a pure initial state.

    ``h_prime`` must map an array of times to stacked Hermitian drive
    matrices of shape (nt, D, D).  For ``k == k0`` this returns the
    first-order diagonal value (1.0); use :func:`wavefunction_distribution`
    for the second-order-corrected full distribution.  For strongly
    oscillatory drives pass an ``n0`` that already resolves the fastest
    phase, so the node-doubling convergence check is meaningful.
    """
    energies = np.asarray(energies, dtype=float)
    if k == k0:
        return 1.0
    omega = energies[k0] - energies[k]

    def integrand(ts):
        hs = np.asarray(h_prime(np.asarray(ts)))
        return np.exp(-1j * (np.asarray(ts) - t_o) * omega) * hs[:, k, k0]

    amp = numutil.simpson_doubling(integrand, t_o, t, rtol=rtol, atol=1e-300,
                                   n0=n0)
    return float(abs(amp) ** 2)


def wavefunction_distribution(energies: np.ndarray, h_prime, k0: int,
                              t_o: float, t: float, *, n0: int = 256,
                              rtol: float = 1e-9, max_n: int = 1 << 20) -> np.ndarray:
    """Full second-order |a_k(t)|^2 distribution including the diagonal correction.

    The diagonal receives ``delta - 2 Re[double time-ordered integral] +
    |first-order diagonal integral|^2`` evaluated on a shared grid, so the
    normalization sum rule can be checked numerically.
    """
    energies = np.asarray(energies, dtype=float)
    dim = energies.size

    def evaluate(n):
        ts = np.linspace(t_o, t, n + 1)
        hs = np.asarray(h_prime(ts))
        # f_k(t) = <k|V(t)|k0> in the interaction picture
        phases = np.exp(1j * (ts[:, None] - t_o) * (energies[None, :] - energies[k0]))
        f = phases * hs[:, :, k0]
        first = scipy.integrate.simpson(f, x=ts, axis=0)
        # cumulative_simpson handles real data; run the parts separately
        cumulative = (
            scipy.integrate.cumulative_simpson(f.real, x=ts, initial=0.0, axis=0)
            + 1j * scipy.integrate.cumulative_simpson(f.imag, x=ts, initial=0.0, axis=0)
        )
        double = scipy.integrate.simpson(
            2.0 * np.real(np.conj(f) * cumulative).sum(axis=1), x=ts)
        probs = np.abs(first) ** 2
        probs[k0] += 1.0 - double
        return probs

    n = n0
    prev = evaluate(n)
    while n <= max_n:
        n *= 2
        cur = evaluate(n)
        if numutil.max_abs(cur - prev) <= rtol * max(numutil.max_abs(cur), 1e-300):
            return cur
        prev = cur
    raise AccuracyError("wavefunction distribution quadrature did not converge")


def _float12(x: float) -> str:
    return f"{x:.12g}"


def export_trajectory_csv(model: MasterEquationModel, traj: Trajectory,
                          path) -> None:
    """Write t plus Re/Im of <xi^x>, <xi^y>, <xi^z> and populations (Schrodinger picture)."""
    xi = {axis: xi_operator(model.system, axis) for axis in "xyz"}
    states = traj.schrodinger_states()
    d = model.dim
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["t"]
        for axis in "xyz":
            header += [f"re_xi_{axis}", f"im_xi_{axis}"]
        header += [f"pop_{n}" for n in range(d)]
        writer.writerow(header)
        for tval, rho in zip(traj.times, states):
            row = [_float12(float(tval))]
            for axis in "xyz":
                ev = complex(np.trace(rho @ xi[axis]))
                row += [_float12(ev.real), _float12(ev.imag)]
            row += [_float12(float(np.real(rho[n, n]))) for n in range(d)]
            writer.writerow(row)


def export_trajectory_json(model: MasterEquationModel, traj: Trajectory,
                           path) -> None:
    """Full-matrix JSON export of an interaction-picture trajectory."""
    payload = {
        "times": [float(t) for t in traj.times],
        "states": [
            {"re": np.real(s).tolist(), "im": np.imag(s).tolist()}
            for s in traj.states
        ],
        "energies": [float(e) for e in traj.energies],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
