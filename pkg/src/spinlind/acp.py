"""Thermal perturbation bookkeeping around the diagonal Hamiltonian.

The flip-flop term X is moved against the diagonal part Z0 before expanding,
so corrections appear already in the initial state.  The machinery consists
of imaginary-time-ordered integrals Y^(n)(i beta), their thermal averages,
normalization coefficients zeta_n (computed both by recursion and as upper
Hessenberg determinants), the initial-state corrections of each order, and a
generic fixed-step integrator for the order-n equation of motion with a
caller-supplied inhomogeneity.

Y^(n)(i beta) is evaluated along the imaginary axis, where it reduces to
``(-1)^n`` times the ordered simplex integral of products of
``X(iu) = exp(u Z0) X exp(-u Z0)`` over ``beta >= u_1 >= ... >= u_n >= 0``;
summing ``exp(-beta Z0) Y^(n)`` over n reproduces the full Gibbs operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import numutil
from .errors import AccuracyError, ValidationError
from .mastereq import MasterEquationModel, Trajectory, a_term, _l_term, default_dt
from .spincore import SpinSystem, boltzmann_state, build_x, build_zo

__all__ = [
    "AcpMoments",
    "ZetaCoefficients",
    "x_interaction",
    "y_nested",
    "y_moment",
    "moments_up_to",
    "zeta_recursive",
    "zeta_determinant",
    "initial_correction",
    "propagate_order_n",
]

MAX_ORDER = 4
_NODE_LADDER = (4, 8, 16, 32)


@dataclass(frozen=True)
class AcpMoments:
    """Thermal averages <Y^(k)(i beta)>_0 for k = 1..order."""

    values: tuple

    def __init__(self, values: Sequence[complex]):
        object.__setattr__(self, "values", tuple(complex(v) for v in values))

    @property
    def order(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class ZetaCoefficients:
    """Normalization coefficients zeta_0..zeta_n, zeta_0 = 1."""

    zetas: tuple

    def __init__(self, zetas: Sequence[complex]):
        zetas = tuple(complex(z) for z in zetas)
        if not zetas or zetas[0] != 1.0:
            raise ValidationError("zeta_0 must be 1")
        object.__setattr__(self, "zetas", zetas)

    @property
    def order(self) -> int:
        return len(self.zetas) - 1


def x_interaction(system: SpinSystem, b_o: float, s: complex) -> np.ndarray:
    """X(s) = exp(-i s Z0) X exp(i s Z0), exact via diagonal phases.

    Real ``s`` gives oscillating phases; imaginary ``s = i u`` gives the
    real conjugation exp(u Z0) X exp(-u Z0).
    """
    x = build_x(system)
    eps = np.real(np.diag(build_zo(system, b_o)))
    gaps = eps[:, None] - eps[None, :]
    return x * np.exp(-1j * complex(s) * gaps)


def _simplex_tensor(x_mat: np.ndarray, eps: np.ndarray, beta: float, n: int,
                    m: int) -> np.ndarray:
    """Tensor-product Gauss-Legendre value of the ordered simplex integral.

    Integrates X(i u_1) ... X(i u_n) over beta >= u_1 >= ... >= u_n >= 0 via
    the prefix-product substitution u_k = beta v_1 ... v_k onto [0, 1]^n.
    """
    dim = x_mat.shape[0]
    v, w = np.polynomial.legendre.leggauss(m)
    v = 0.5 * (v + 1.0)
    w = 0.5 * w
    gaps = eps[:, None] - eps[None, :]

    def x_at(u: np.ndarray) -> np.ndarray:
        # stacked X(i u) for a flat array of u values
        return x_mat[None, :, :] * np.exp(u[:, None, None] * gaps[None, :, :])

    chunk_limit = 1 << 17  # bound on prefix * node count per batch

    def level(prefix: np.ndarray, depth: int) -> np.ndarray:
        """Sum over the remaining levels for a flat array of prefix values."""
        if prefix.size * m > chunk_limit and prefix.size > 1:
            half = prefix.size // 2
            return np.concatenate([level(prefix[:half], depth),
                                   level(prefix[half:], depth)])
        u = np.repeat(prefix, m) * np.tile(v, prefix.size)
        mats = x_at(u).reshape(prefix.size, m, dim, dim)
        power = n - depth - 1  # Jacobian exponent of this level's v
        lw = w * v ** power
        if depth == n - 1:
            return np.einsum("j,pjab->pab", lw, mats)
        inner = level(u, depth + 1).reshape(prefix.size, m, dim, dim)
        return np.einsum("j,pjab,pjbc->pac", lw, mats, inner)

    if n == 0:
        return np.eye(dim, dtype=complex)
    top = level(np.array([beta]), 0)[0]
    return (beta ** n) * top


def y_nested(system: SpinSystem, b_o: float, n: int, beta: float, *,
             rtol: float = 1e-8) -> np.ndarray:
    """Matrix of Y^(n)(i beta), converged under quadrature-node doubling."""
    if n < 0:
        raise ValidationError("order must be nonnegative")
    if n > MAX_ORDER:
        raise ValidationError(f"nested integrals are capped at order {MAX_ORDER}")
    dim = system.dim
    if n == 0:
        return np.eye(dim, dtype=complex)
    if not np.isfinite(beta):
        raise ValidationError("beta must be finite")
    x_mat = build_x(system)
    if numutil.max_abs(x_mat) == 0.0:
        return np.zeros((dim, dim), dtype=complex)
    eps = np.real(np.diag(build_zo(system, b_o)))

    prev = None
    for m in _NODE_LADDER:
        cur = (-1.0) ** n * _simplex_tensor(x_mat, eps, beta, n, m)
        if prev is not None:
            scale = max(numutil.max_abs(cur), 1e-300)
            if numutil.max_abs(cur - prev) <= rtol * scale:
                return cur
        prev = cur
    raise AccuracyError(
        f"order-{n} nested integral did not converge at {_NODE_LADDER[-1]} nodes per level"
    )


def y_moment(system: SpinSystem, b_o: float, n: int, beta: float, *,
             rtol: float = 1e-8) -> complex:
    """<Y^(n)(i beta)>_0, the thermal average against the order-0 state."""
    if n < 1:
        raise ValidationError("moments are defined for n >= 1")
    y = y_nested(system, b_o, n, beta, rtol=rtol)
    rho0 = boltzmann_state(np.real(np.diag(build_zo(system, b_o))), beta)
    return complex(np.trace(rho0 @ y))


def moments_up_to(system: SpinSystem, b_o: float, order: int, beta: float, *,
                  rtol: float = 1e-8) -> AcpMoments:
    return AcpMoments([y_moment(system, b_o, n, beta, rtol=rtol)
                       for n in range(1, order + 1)])


def zeta_recursive(moments: AcpMoments) -> ZetaCoefficients:
    """zeta_0 = 1; zeta_n = -sum_{n' < n} zeta_{n'} <Y^(n - n')>_0."""
    y = (0.0,) + moments.values  # y[k] = <Y^(k)>, y[0] unused
    zetas = [1.0 + 0.0j]
    for n in range(1, moments.order + 1):
        zetas.append(-sum(zetas[k] * y[n - k] for k in range(n)))
    return ZetaCoefficients(zetas)


def zeta_determinant(moments: AcpMoments, n: int) -> complex:
    """zeta_n as (-1)^n times an upper Hessenberg (Toeplitz) determinant."""
    if n < 1:
        raise ValidationError("the determinant form applies for n >= 1")
    if n > moments.order:
        raise ValidationError(f"need {n} moments, have {moments.order}")
    y = moments.values
    h = np.zeros((n, n), dtype=complex)
    for i in range(n):
        if i > 0:
            h[i, i - 1] = 1.0
        for j in range(i, n):
            h[i, j] = y[j - i]
    return complex((-1.0) ** n * np.linalg.det(h))


def initial_correction(system: SpinSystem, b_o: float, n: int, beta: float, *,
                       rtol: float = 1e-8, herm_report: list | None = None) -> np.ndarray:
    """Order-n initial-state correction; the order-0 term is the Boltzmann state.

    For n >= 1 the result is traceless by construction of the zeta
    coefficients; Hermiticity is asserted (the residual is appended to
    ``herm_report`` when a list is supplied) and the Hermitian part returned.
    """
    if n < 0:
        raise ValidationError("order must be nonnegative")
    eps = np.real(np.diag(build_zo(system, b_o)))
    rho0 = boltzmann_state(eps, beta)
    if n == 0:
        return rho0
    ys = [y_nested(system, b_o, k, beta, rtol=rtol) for k in range(n + 1)]
    moments = AcpMoments([complex(np.trace(rho0 @ ys[k])) for k in range(1, n + 1)])
    zetas = zeta_recursive(moments).zetas
    out = np.zeros_like(rho0)
    for n_prime in range(n + 1):
        out = out + zetas[n_prime] * (rho0 @ ys[n - n_prime])
    residual = numutil.max_abs(out - out.conj().T)
    scale = max(numutil.max_abs(out), 1e-300)
    if herm_report is not None:
        herm_report.append(residual / scale)
    if residual > 1e-6 * scale:
        raise AccuracyError(
            f"order-{n} correction lost Hermiticity (residual {residual / scale:.2e})"
        )
    return numutil.hermitize(out)


def propagate_order_n(model: MasterEquationModel, n: int,
                      g_callback: Callable[[float], np.ndarray],
                      t_end: float, dt: float | None = None, *,
                      store_every: int | None = None,
                      rho_n0: np.ndarray | None = None,
                      quad_rtol: float = 1e-8) -> Trajectory:
    """Integrate d rho^(n)/dt = A(t) rho^(n)(0) + L rho^(n)(t) + G(t).

    ``g_callback`` supplies the order-n inhomogeneity; its output must be
    traceless (Hermitian traceless corrections stay traceless).  The initial
    correction defaults to the thermal order-n term of the model's system.
    """
    if n < 1:
        raise ValidationError("use the order-0 propagator for n = 0")
    if rho_n0 is None:
        rho_n0 = initial_correction(model.system, model.field.b_o, n, model.beta,
                                    rtol=quad_rtol)
    rho_n0 = np.array(rho_n0, dtype=complex)
    if abs(complex(np.trace(rho_n0))) > 1e-9 * max(1.0, numutil.max_abs(rho_n0)):
        raise ValidationError("order-n initial corrections must be traceless")

    if dt is None:
        dt = default_dt(model)
    n_steps = max(1, int(math.ceil(t_end / dt - 1e-12)))
    dt = t_end / n_steps
    if store_every is None:
        store_every = max(1, n_steps // 2000)

    d = model.dim
    scale = max(numutil.max_abs(rho_n0), 1.0)

    def g_checked(t: float) -> np.ndarray:
        g = np.asarray(g_callback(t))
        if g.shape != (d, d):
            raise ValidationError("inhomogeneity callback returned a wrong shape")
        if abs(complex(np.trace(g))) > 1e-9 * max(numutil.max_abs(g), scale):
            raise ValidationError("inhomogeneity callback output must be traceless")
        return g

    def rhs(t, rho):
        return a_term(model, t, rho_n0) + _l_term(model, rho) + g_checked(t)

    y = rho_n0.copy()
    times = [0.0]
    states = [y.copy()]
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
