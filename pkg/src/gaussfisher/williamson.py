"""Symplectic spectrum, Williamson decomposition and Lie-algebra derivatives."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .phase_space import StateError, spectrum_of_k_sigma, swap_form, symplectic_form

TOL_RECON = 1e-9
DEGENERACY_TOL = 1e-8


class DecompositionError(ValueError):
    pass


class TangentError(ValueError):
    """``dS`` is not tangent to the symplectic group at ``S``."""


def symplectic_eigenvalues(sigma: np.ndarray) -> np.ndarray:
    """The N positive eigenvalues of ``K sigma``, descending."""
    sigma = np.asarray(sigma, dtype=complex)
    try:
        spec = spectrum_of_k_sigma(sigma)
    except StateError as exc:
        raise DecompositionError(str(exc)) from exc
    return spec[: sigma.shape[0] // 2]


def _hermitian_sqrt(sigma: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(sigma)
    if w[0] <= 0:
        raise DecompositionError("covariance matrix is not positive definite")
    return (v * np.sqrt(w)) @ v.conj().T


def _gauge_phases(s: np.ndarray) -> np.ndarray:
    """Phases making the largest entry of each of the first N columns real positive."""
    n = s.shape[0] // 2
    top = s[:, :n]
    piv = top[np.argmax(np.abs(top), axis=0), np.arange(n)]
    return np.abs(piv) / piv


def degenerate_clusters(lambdas: np.ndarray, tol: float = DEGENERACY_TOL) -> list[list[int]]:
    """Group indices of (descending) ``lambdas`` whose neighbours differ by less than ``tol``."""
    clusters: list[list[int]] = []
    for k, lam in enumerate(lambdas):
        if clusters and abs(lambdas[clusters[-1][-1]] - lam) < tol:
            clusters[-1].append(k)
        else:
            clusters.append([k])
    return clusters


@dataclass(frozen=True, eq=False)
class WilliamsonDecomposition:
    """``sigma = S D S^dag`` with ``D = diag(lambdas, lambdas)`` and ``S K S^dag = K``."""

    S: np.ndarray
    lambdas: np.ndarray
    degenerate: bool = False

    @property
    def modes(self) -> int:
        return self.lambdas.shape[0]

    @property
    def D(self) -> np.ndarray:
        return np.diag(np.concatenate([self.lambdas, self.lambdas])).astype(complex)

    def reconstruct(self) -> np.ndarray:
        return self.S @ self.D @ self.S.conj().T

    def inverse_S(self) -> np.ndarray:
        return symplectic_inverse(self.S)


def symplectic_inverse(s: np.ndarray) -> np.ndarray:
    """``S^-1 = K S^dag K`` for symplectic ``S``."""
    k = symplectic_form(s.shape[0] // 2)
    return k @ s.conj().T @ k


def williamson_decompose(sigma: np.ndarray, tol_recon: float = TOL_RECON) -> WilliamsonDecomposition:
    """``S = sigma^1/2 U D^-1/2`` with U diagonalizing ``sigma^1/2 K sigma^1/2``.

    The first N columns of U are eigenvectors of the positive eigenvalues in
    descending order; column ``N+k`` is set to ``T conj(u_k)``, which is an
    eigenvector for ``-lambda_k`` and enforces the block structure of ``S``.
    The residual phase freedom ``S -> S diag(p, conj(p))`` is fixed so the
    largest entry of each of the first N columns of S is real positive.
    """
    sigma = np.asarray(sigma, dtype=complex)
    n = sigma.shape[0] // 2
    root = _hermitian_sqrt(sigma)
    k = symplectic_form(n)
    m = root @ k @ root
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    order = np.argsort(w)[::-1][:n]
    lambdas = w[order]
    if lambdas[-1] <= 0:
        raise DecompositionError("K sigma has fewer than N positive eigenvalues")
    pos = v[:, order]
    u = np.hstack([pos, swap_form(n) @ np.conj(pos)])
    # pairing sanity: U must stay unitary after building the negative partners
    if np.max(np.abs(u.conj().T @ u - np.eye(2 * n))) > 1e-8:
        raise DecompositionError("eigenvector pairing failed (inconsistent conjugate partners)")
    s = root @ u / np.sqrt(np.concatenate([lambdas, lambdas]))
    phases = _gauge_phases(s)
    s = s * np.concatenate([phases, np.conj(phases)])
    dec = WilliamsonDecomposition(s, lambdas, degenerate=any(len(c) > 1 for c in degenerate_clusters(lambdas)))
    scale = max(1.0, float(np.max(np.abs(sigma))))
    if np.max(np.abs(dec.reconstruct() - sigma)) > tol_recon * scale:
        raise DecompositionError("Williamson reconstruction failed")
    return dec


@dataclass(frozen=True, eq=False)
class LieDerivative:
    """``P = S^-1 dS = [[R, Q], [conj(Q), conj(R)]]``; R skew-Hermitian, Q symmetric."""

    P: np.ndarray

    @property
    def R(self) -> np.ndarray:
        n = self.P.shape[0] // 2
        return self.P[:n, :n]

    @property
    def Q(self) -> np.ndarray:
        n = self.P.shape[0] // 2
        return self.P[:n, n:]


def lie_derivative(s: np.ndarray, ds: np.ndarray, tol: float = 1e-8) -> LieDerivative:
    p = symplectic_inverse(s) @ ds
    k = symplectic_form(s.shape[0] // 2)
    residual = np.max(np.abs(p @ k + k @ p.conj().T), initial=0.0)
    if residual > tol * max(1.0, float(np.max(np.abs(p), initial=0.0))):
        raise TangentError(f"dS is not tangent to the symplectic group (|PK + KP^dag| = {residual:.3g})")
    return LieDerivative(p)


def align_gauge(reference: WilliamsonDecomposition, other: WilliamsonDecomposition) -> np.ndarray:
    """Return ``other.S`` moved to the residual-gauge representative closest to ``reference.S``.

    The residual freedom is ``S -> S diag(u, conj(u))`` with ``u`` unitary
    inside each degenerate cluster of symplectic eigenvalues; each cluster's
    ``u`` is the unitary polar factor of the overlap (orthogonal Procrustes).
    """
    n = reference.modes
    s0, s1 = reference.S, other.S
    out = s1.copy()
    for cluster in degenerate_clusters(reference.lambdas):
        top = np.array(cluster)
        bot = top + n
        overlap = s1[:, top].conj().T @ s0[:, top] + np.conj(s1[:, bot].conj().T @ s0[:, bot])
        a, _, bh = np.linalg.svd(overlap)
        u = a @ bh
        out[:, top] = s1[:, top] @ u
        out[:, bot] = s1[:, bot] @ np.conj(u)
    return out
