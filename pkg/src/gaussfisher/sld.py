"""Symmetric logarithmic derivatives as phase-space quadratic forms, and saturability.

The SLD for parameter i is represented by its coefficients in

    L_i = dA^dag quad_i dA + lin_i^dag dA + scalar_i,   dA = A - d,

where ``quad_i`` solves ``sigma quad sigma - K quad K = d_i sigma`` and
``lin_i = 2 sigma^-1 d_i d``.  Saturability of the multi-parameter
Cramer-Rao bound is read off ``C^{ij} = tr[rho [L_i, L_j]]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .family import DerivativeBundle
from .phase_space import block_residual, hermiticity_residual, symplectic_form
from .qfim import (
    EXTRAP_TOL,
    NU_SCHEDULE,
    PURE_TOL,
    QfimError,
    _require_mixed,
    _require_pure,
    _require_symplectic,
    pure_flags,
    regularized_limit,
    stein_matrix,
    unvec,
    vec,
    williamson_sigma_inv,
)
from .williamson import symplectic_inverse

SAT_TOL = 1e-8
SLD_METHODS = ("mixed", "williamson", "pure", "regularized")


@dataclass(frozen=True, eq=False)
class SldCoefficients:
    quad: np.ndarray
    lin: np.ndarray
    scalar: float

    def residual(self, sigma: np.ndarray, dsigma: np.ndarray) -> float:
        """Max-norm residual of the defining equation ``sigma quad sigma - K quad K = d sigma``."""
        k = symplectic_form(sigma.shape[0] // 2)
        return float(np.max(np.abs(sigma @ self.quad @ sigma - k @ self.quad @ k - dsigma)))

    def structure_residual(self) -> float:
        return max(hermiticity_residual(self.quad), block_residual(self.quad))

    def to_dict(self) -> dict:
        pair = lambda z: [float(z.real), float(z.imag)]  # noqa: E731
        return {
            "quad": [[pair(z) for z in row] for row in self.quad],
            "lin": [pair(z) for z in self.lin],
            "scalar": float(self.scalar),
        }


@dataclass(frozen=True, eq=False)
class SaturabilityReport:
    C: np.ndarray
    saturable: bool
    tol: float
    method: str

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "C": [[[float(z.real), float(z.imag)] for z in row] for row in self.C],
            "saturable": self.saturable,
            "tol": self.tol,
        }


def _lin_terms(b: DerivativeBundle, sigma_inv: np.ndarray) -> list[np.ndarray]:
    return [2 * sigma_inv @ dd for dd in b.dd]


def _scalar(sigma: np.ndarray, quad: np.ndarray) -> float:
    return float(np.real(-0.5 * np.trace(sigma @ quad)))


def sld_mixed(b: DerivativeBundle, pure_tol: float = PURE_TOL) -> list[SldCoefficients]:
    _require_mixed(b, pure_tol, "mixed SLD")
    n2 = b.sigma.shape[0]
    lu = lu_factor(stein_matrix(b.sigma))
    sigma_inv = np.linalg.inv(b.sigma)
    out = []
    for ds, lin in zip(b.dsigma, _lin_terms(b, sigma_inv)):
        quad = unvec(lu_solve(lu, vec(ds)), n2)
        out.append(SldCoefficients(quad, lin, _scalar(b.sigma, quad)))
    return out


def williamson_w(b: DerivativeBundle, i: int, pure_tol: float = PURE_TOL) -> np.ndarray:
    """``W_i`` with ``quad_i = (S^-1)^dag W_i S^-1``."""
    lams = b.lambdas
    lk, ll = lams[:, None], lams[None, :]
    pure = np.abs(lams - 1.0) <= pure_tol
    both = pure[:, None] & pure[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio_r = np.where(both, 0.0, (lk - ll) / (lk * ll - 1.0))
        diag = np.where(pure, 0.0, b.dlambdas[i] / (lams**2 - 1.0))
    wx = -ratio_r * b.lie[i].R + np.diag(diag)
    wy = (lk + ll) / (lk * ll + 1.0) * b.lie[i].Q
    return np.block([[wx, wy], [wy.conj(), wx.conj()]])


def sld_williamson(b: DerivativeBundle, pure_tol: float = PURE_TOL) -> list[SldCoefficients]:
    _require_symplectic(b, "williamson SLD")
    s_inv = symplectic_inverse(b.S)
    sigma_inv = williamson_sigma_inv(b)
    pure = np.abs(b.lambdas - 1.0) <= pure_tol
    out = []
    for i, lin in enumerate(_lin_terms(b, sigma_inv)):
        quad = s_inv.conj().T @ williamson_w(b, i, pure_tol) @ s_inv
        mixed = ~pure
        scalar = -float(np.sum(b.lambdas[mixed] * b.dlambdas[i, mixed] / (b.lambdas[mixed] ** 2 - 1.0)))
        out.append(SldCoefficients(quad, lin, scalar))
    return out


def sld_pure(b: DerivativeBundle, pure_tol: float = PURE_TOL) -> list[SldCoefficients]:
    """``quad_i = 1/2 sigma^-1 d_i sigma sigma^-1`` with ``sigma^-1 = K sigma K``; scalar 0."""
    _require_pure(b, pure_tol, "pure SLD")
    k = symplectic_form(b.modes)
    sigma_inv = k @ b.sigma @ k
    return [
        SldCoefficients(0.5 * sigma_inv @ ds @ sigma_inv, lin, 0.0)
        for ds, lin in zip(b.dsigma, _lin_terms(b, sigma_inv))
    ]


def _regularized_quads(b: DerivativeBundle, nu: float) -> np.ndarray:
    n2 = b.sigma.shape[0]
    vs = np.array([vec(ds) for ds in b.dsigma]).T
    sol = np.linalg.solve(stein_matrix(b.sigma, nu), vs)
    return np.array([unvec(sol[:, i], n2) for i in range(b.p)])


def sld_regularized(
    b: DerivativeBundle,
    nu_schedule: Sequence[float] = NU_SCHEDULE,
    extrap_tol: float = EXTRAP_TOL,
) -> list[SldCoefficients]:
    """Mixed-state SLD of ``nu sigma`` extrapolated to ``nu -> 1``."""
    quads = regularized_limit(lambda nu: _regularized_quads(b, nu), nu_schedule, extrap_tol)
    sigma_inv = np.linalg.inv(b.sigma)
    return [
        SldCoefficients(quad, lin, _scalar(b.sigma, quad))
        for quad, lin in zip(quads, _lin_terms(b, sigma_inv))
    ]


def sld(b: DerivativeBundle, method: str = "auto", **opts) -> list[SldCoefficients]:
    pure_tol = opts.get("pure_tol", PURE_TOL)
    if method == "auto":
        method = _auto(b, pure_tol)
    if method == "mixed":
        return sld_mixed(b, pure_tol)
    if method == "williamson":
        return sld_williamson(b, pure_tol)
    if method == "pure":
        return sld_pure(b, pure_tol)
    if method == "regularized":
        return sld_regularized(b, opts.get("nu_schedule", NU_SCHEDULE), opts.get("extrap_tol", EXTRAP_TOL))
    raise QfimError(f"unknown SLD method {method!r}; expected one of {SLD_METHODS + ('auto',)}")


def _auto(b: DerivativeBundle, pure_tol: float) -> str:
    flags = pure_flags(b, pure_tol)
    if not np.any(flags):
        return "mixed"
    if b.has_symplectic:
        return "williamson"
    if np.all(flags):
        return "pure"
    return "regularized"


def qfim_from_sld(b: DerivativeBundle, coeffs: Sequence[SldCoefficients]) -> np.ndarray:
    """``H^{ij} = 1/2 vec(d_i sigma)^dag vec(quad_j) + 1/2 lin_i^dag sigma lin_j`` (real part)."""
    p = b.p
    h = np.zeros((p, p), dtype=complex)
    for i in range(p):
        for j in range(p):
            h[i, j] = 0.5 * np.vdot(vec(b.dsigma[i]), vec(coeffs[j].quad)) + 0.5 * np.vdot(coeffs[i].lin, b.sigma @ coeffs[j].lin)
    return h.real


def sld_normal_form(coeff: SldCoefficients) -> np.ndarray:
    """Eigenvalues of ``K quad`` sorted by real part, descending.

    For a quad that is diagonalizable by a symplectic transformation these
    come in pairs ``(w_k, -w_k)`` and ``w_k`` are the normal-mode
    frequencies of the quadratic form.
    """
    k = symplectic_form(coeff.quad.shape[0] // 2)
    w = np.linalg.eigvals(k @ coeff.quad)
    return w[np.lexsort((w.imag, -w.real))]


# -- saturability ------------------------------------------------------------


def _displacement_commutator(b: DerivativeBundle, sigma_inv: np.ndarray) -> np.ndarray:
    k = symplectic_form(b.modes)
    return 4 * b.dd.conj() @ sigma_inv @ k @ sigma_inv @ b.dd.T


def _commutator_from_quads(sigma: np.ndarray, quads: Sequence[np.ndarray], nu: float = 1.0) -> np.ndarray:
    """``tr[quad_i^dag K quad_j sigma - quad_i^dag sigma quad_j K]`` at covariance ``nu sigma``."""
    k = symplectic_form(sigma.shape[0] // 2)
    s = nu * sigma
    p = len(quads)
    out = np.zeros((p, p), dtype=complex)
    for i in range(p):
        ai = quads[i].conj().T
        for j in range(p):
            out[i, j] = np.trace(ai @ k @ quads[j] @ s) - np.trace(ai @ s @ quads[j] @ k)
    return out


def commutator_mixed(b: DerivativeBundle, pure_tol: float = PURE_TOL) -> np.ndarray:
    coeffs = sld_mixed(b, pure_tol)
    first = _commutator_from_quads(b.sigma, [c.quad for c in coeffs])
    return first + _displacement_commutator(b, np.linalg.inv(b.sigma))


def commutator_williamson(b: DerivativeBundle, pure_tol: float = PURE_TOL) -> np.ndarray:
    _require_symplectic(b, "williamson saturability")
    lams = b.lambdas
    lk, ll = lams[:, None], lams[None, :]
    pure = np.abs(lams - 1.0) <= pure_tol
    both = pure[:, None] & pure[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        c_r = np.where(both, 0.0, (lk - ll) ** 3 / (lk * ll - 1.0) ** 2)
    c_q = (lk + ll) ** 3 / (lk * ll + 1.0) ** 2
    rs = np.array([lie.R for lie in b.lie])
    qs = np.array([lie.Q for lie in b.lie])
    im_q = np.einsum("kl,ikl,jkl->ij", c_q, qs.conj(), qs).imag
    im_r = np.einsum("kl,ikl,jkl->ij", c_r, rs.conj(), rs).imag
    return 2j * im_q - 2j * im_r + _displacement_commutator(b, williamson_sigma_inv(b))


def commutator_pure(b: DerivativeBundle, pure_tol: float = PURE_TOL) -> np.ndarray:
    """``1/4 tr[K sigma [K d_i sigma, K d_j sigma]] + 4 d_i d^dag sigma^-1 K sigma^-1 d_j d``."""
    _require_pure(b, pure_tol, "pure saturability")
    k = symplectic_form(b.modes)
    ks = k @ b.sigma
    xs = [k @ ds for ds in b.dsigma]
    p = b.p
    first = np.array([[0.25 * np.trace(ks @ (xs[i] @ xs[j] - xs[j] @ xs[i])) for j in range(p)] for i in range(p)])
    return first + _displacement_commutator(b, k @ b.sigma @ k)


def commutator_regularized(
    b: DerivativeBundle,
    nu_schedule: Sequence[float] = NU_SCHEDULE,
    extrap_tol: float = EXTRAP_TOL,
) -> np.ndarray:
    first = regularized_limit(
        lambda nu: _commutator_from_quads(b.sigma, _regularized_quads(b, nu), nu), nu_schedule, extrap_tol
    )
    return first + _displacement_commutator(b, np.linalg.inv(b.sigma))


def saturability(
    b: DerivativeBundle,
    method: str = "auto",
    sat_tol: float = SAT_TOL,
    pure_tol: float = PURE_TOL,
    nu_schedule: Sequence[float] = NU_SCHEDULE,
) -> SaturabilityReport:
    if method == "auto":
        method = _auto(b, pure_tol)
    if method == "mixed":
        c = commutator_mixed(b, pure_tol)
    elif method == "williamson":
        c = commutator_williamson(b, pure_tol)
    elif method == "pure":
        c = commutator_pure(b, pure_tol)
    elif method == "regularized":
        c = commutator_regularized(b, nu_schedule)
    else:
        raise QfimError(f"unknown saturability method {method!r}; expected one of {SLD_METHODS + ('auto',)}")
    # tr[rho [L, L]] vanishes identically
    np.fill_diagonal(c, 0.0)
    return SaturabilityReport(c, bool(np.max(np.abs(c), initial=0.0) < sat_tol), sat_tol, method)
