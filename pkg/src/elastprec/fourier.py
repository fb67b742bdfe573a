"""Per-mode symbol calculus for the periodic problem.

With periodic boundary conditions every frequency ``xi != 0`` decouples and
the operators reduce to small matrices acting on Fourier coefficients:

* rank-one projector      ``Pi = xi xi^* / |xi|^2``
* elasticity symbol       ``|xi|^2/2 * (I + (2 lam + 1) Pi)``
* elasticity solution     ``u_lam = 2/|xi|^2 (I - (2 lam+1)/(2 lam+2) Pi) f``
* Stokes solution         ``u_inf = 2/|xi|^2 (I - Pi) f``,  ``p = xi^* f / |xi|^2``

On this level the convex combination
``u_lam = lam/(lam+1) u_inf + 1/(lam+1) u_0`` is an exact identity, which is
what makes the combined preconditioner exact for periodic problems; the
functions below verify it in floating point.  Everything is
dimension-generic (2D and 3D vectors alike).
"""

from __future__ import annotations

import numpy as np


def _check_mode(xi: np.ndarray) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if xi.ndim != 1 or xi.size not in (2, 3):
        raise ValueError(f"frequency must be a 2- or 3-vector, got shape {xi.shape}")
    if not np.any(xi):
        raise ValueError("zero frequency has no symbol")
    return xi


def projector_symbol(xi) -> np.ndarray:
    """Rank-one projector onto the frequency direction."""
    xi = _check_mode(xi)
    return np.outer(xi, xi) / (xi @ xi)


def elasticity_symbol(xi, lam: float) -> np.ndarray:
    """Symbol of the scaled elasticity operator at one mode."""
    xi = _check_mode(xi)
    if lam < 0.0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    d = xi.size
    return 0.5 * (xi @ xi) * (np.eye(d) + (2.0 * lam + 1.0) * projector_symbol(xi))


def solve_mode_elasticity(xi, lam: float, fhat) -> np.ndarray:
    """Elasticity solution coefficient for data ``fhat`` at one mode."""
    xi = _check_mode(xi)
    if lam < 0.0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    fhat = np.asarray(fhat, dtype=complex)
    pi = projector_symbol(xi)
    c = (2.0 * lam + 1.0) / (2.0 * (lam + 1.0))
    return 2.0 / (xi @ xi) * (fhat - c * (pi @ fhat))


def solve_mode_stokes(xi, fhat):
    """Stokes velocity and multiplier coefficients at one mode."""
    xi = _check_mode(xi)
    fhat = np.asarray(fhat, dtype=complex)
    pi = projector_symbol(xi)
    norm2 = xi @ xi
    uhat = 2.0 / norm2 * (fhat - pi @ fhat)
    phat = (xi @ fhat) / norm2
    return uhat, phat


def stokes_symbol_residual(xi, fhat) -> float:
    """Residual of the (d+1) x (d+1) saddle system at one mode."""
    xi = _check_mode(xi)
    fhat = np.asarray(fhat, dtype=complex)
    uhat, phat = solve_mode_stokes(xi, fhat)
    momentum = elasticity_symbol(xi, 0.0) @ uhat + xi * phat - fhat
    constraint = xi @ uhat
    return float(np.sqrt(np.linalg.norm(momentum) ** 2 + abs(constraint) ** 2))


def verify_convex_combination(xi, lam: float, fhat) -> float:
    """Residual of ``u_lam - lam/(lam+1) u_inf - 1/(lam+1) u_0`` at one mode."""
    u_lam = solve_mode_elasticity(xi, lam, fhat)
    u_inf, _ = solve_mode_stokes(xi, fhat)
    u_0 = solve_mode_elasticity(xi, 0.0, fhat)
    w = lam / (lam + 1.0)
    return float(np.linalg.norm(u_lam - w * u_inf - (1.0 - w) * u_0))


def verify_inverse_idempotent(t: float, xi) -> float:
    """Residual of ``(I + t Pi)(I - t/(t+1) Pi) - I`` for a projector ``Pi``."""
    if t == -1.0:
        raise ValueError("t = -1 is excluded (the combination is singular)")
    pi = projector_symbol(xi)
    d = pi.shape[0]
    eye = np.eye(d)
    product = (eye + t * pi) @ (eye - (t / (t + 1.0)) * pi)
    return float(np.linalg.norm(product - eye))
