"""Quantum Fisher information matrix estimators for Gaussian state families.

All routes take a :class:`~gaussfisher.family.DerivativeBundle` and return a
:class:`QfimResult`.  Routes and their domains:

===============  ==========================================================
``mixed``        Stein-matrix formula, every mode mixed
``williamson``   symplectic (S, lambda) data; pure modes by convention
``compact``      trace form of the Williamson route, every mode mixed
``limit``        truncated power series in ``(K sigma)^-1`` with error bound
``regularized``  mixed formula on ``nu * sigma`` extrapolated to ``nu -> 1``
``pure``         pure states only
``cqfim``        continuous QFIM: QFIM plus Hessians of pure-mode eigenvalues
===============  ==========================================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .family import DerivativeBundle
from .phase_space import symplectic_form

PURE_TOL = 1e-9
NU_SCHEDULE = (1 + 1e-2, 1 + 1e-3, 1 + 1e-4, 1 + 1e-5)
EXTRAP_TOL = 1e-7
MAX_TERMS = 100_000

METHODS = ("mixed", "williamson", "compact", "limit", "pure", "regularized", "cqfim")


class QfimError(ValueError):
    pass


class PureModeError(QfimError):
    """A mixed-state-only route was asked to handle a (numerically) pure mode."""


class ExtrapolationError(QfimError):
    pass


@dataclass(eq=False)
class QfimResult:
    H: np.ndarray
    method: str
    pure_mode_flags: np.ndarray
    series_terms_used: int | None = None
    error_bound: np.ndarray | None = None
    asymmetry: float = 0.0
    min_eigenvalue: float = 0.0
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "method": self.method,
            "H": self.H.tolist(),
            "pure_mode_flags": [bool(f) for f in self.pure_mode_flags],
            "asymmetry": self.asymmetry,
            "min_eigenvalue": self.min_eigenvalue,
        }
        if self.series_terms_used is not None:
            out["series_terms_used"] = self.series_terms_used
        if self.error_bound is not None:
            out["error_bound"] = self.error_bound.tolist()
        out.update(self.extras)
        return out


def vec(m: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(m).reshape(-1, order="F")


def unvec(v: np.ndarray, n: int) -> np.ndarray:
    return np.asarray(v).reshape(n, n, order="F")


def stein_matrix(sigma: np.ndarray, nu: float = 1.0) -> np.ndarray:
    """``nu^2 conj(sigma) (x) sigma - K (x) K``."""
    k = symplectic_form(sigma.shape[0] // 2)
    return nu**2 * np.kron(np.conj(sigma), sigma) - np.kron(k, k)


def pure_flags(b: DerivativeBundle, pure_tol: float = PURE_TOL) -> np.ndarray:
    return np.abs(b.spectrum - 1.0) <= pure_tol


def _require_mixed(b: DerivativeBundle, pure_tol: float, route: str) -> None:
    if np.any(pure_flags(b, pure_tol)):
        raise PureModeError(
            f"{route} route needs every mode mixed; symplectic spectrum {np.round(b.spectrum, 12).tolist()}"
        )


def displacement_term(b: DerivativeBundle, sigma_inv: np.ndarray | None = None) -> np.ndarray:
    """``2 d_i d^dag sigma^-1 d_j d`` as a complex (p, p) array."""
    if sigma_inv is None:
        return 2 * b.dd.conj() @ np.linalg.solve(b.sigma, b.dd.T)
    return 2 * b.dd.conj() @ sigma_inv @ b.dd.T


def _finish(raw: np.ndarray, method: str, b: DerivativeBundle, pure_tol: float, **kw) -> QfimResult:
    raw = np.real_if_close(np.asarray(raw), tol=1e6)
    real = np.real(raw)
    asym = float(np.max(np.abs(real - real.T), initial=0.0))
    h = 0.5 * (real + real.T)
    min_eig = float(np.linalg.eigvalsh(h)[0]) if h.size else 0.0
    return QfimResult(h, method, pure_flags(b, pure_tol), asymmetry=asym, min_eigenvalue=min_eig, **kw)


# -- mixed-state Stein formula ----------------------------------------------


def qfim_mixed(b: DerivativeBundle, pure_tol: float = PURE_TOL) -> QfimResult:
    _require_mixed(b, pure_tol, "mixed")
    lu = lu_factor(stein_matrix(b.sigma))
    vs = np.array([vec(ds) for ds in b.dsigma]).T
    first = 0.5 * vs.conj().T @ lu_solve(lu, vs)
    return _finish(first + displacement_term(b), "mixed", b, pure_tol)


# -- Williamson route --------------------------------------------------------


def _require_symplectic(b: DerivativeBundle, route: str) -> None:
    if not b.has_symplectic:
        raise QfimError(f"{route} route needs symplectic data (S, lambdas, dS, dlambdas)")


def williamson_sigma_inv(b: DerivativeBundle) -> np.ndarray:
    """``sigma^-1 = K S D^-1 S^dag K``."""
    k = symplectic_form(b.modes)
    dinv = 1.0 / np.concatenate([b.lambdas, b.lambdas])
    return k @ (b.S * dinv) @ b.S.conj().T @ k


def williamson_coefficients(lams: np.ndarray, pure_tol: float = PURE_TOL):
    """``((l_k - l_l)^2/(l_k l_l - 1), (l_k + l_l)^2/(l_k l_l + 1), both_pure)`` over (k, l)."""
    lk, ll = lams[:, None], lams[None, :]
    pure = np.abs(lams - 1.0) <= pure_tol
    both = pure[:, None] & pure[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        c_r = np.where(both, 0.0, (lk - ll) ** 2 / (lk * ll - 1.0))
    c_q = (lk + ll) ** 2 / (lk * ll + 1.0)
    return c_r, c_q, both


def _purity_term(b: DerivativeBundle, pure_tol: float) -> np.ndarray:
    pure = np.abs(b.lambdas - 1.0) <= pure_tol
    dl = b.dlambdas[:, ~pure]
    return dl @ np.diag(1.0 / (b.lambdas[~pure] ** 2 - 1.0)) @ dl.T


def qfim_williamson(b: DerivativeBundle, pure_tol: float = PURE_TOL) -> QfimResult:
    """Element-wise Williamson formula with the QFIM conventions at pure modes."""
    _require_symplectic(b, "williamson")
    c_r, c_q, _ = williamson_coefficients(b.lambdas, pure_tol)
    rs = np.array([lie.R for lie in b.lie])
    qs = np.array([lie.Q for lie in b.lie])
    first = np.einsum("kl,ikl,jkl->ij", c_r, rs.conj(), rs).real + np.einsum("kl,ikl,jkl->ij", c_q, qs.conj(), qs).real
    raw = first + _purity_term(b, pure_tol) + displacement_term(b, williamson_sigma_inv(b))
    return _finish(raw, "williamson", b, pure_tol)


def qfim_compact(b: DerivativeBundle, pure_tol: float = PURE_TOL) -> QfimResult:
    """Trace form with ``R~ = (l_k - l_l)/sqrt(l_k l_l - 1) R`` and ``Q~ = (l_k + l_l)/sqrt(l_k l_l + 1) Q``."""
    _require_symplectic(b, "compact")
    _require_mixed(b, pure_tol, "compact")
    lk, ll = b.lambdas[:, None], b.lambdas[None, :]
    rt = [(lk - ll) / np.sqrt(lk * ll - 1.0) * lie.R for lie in b.lie]
    qt = [(lk + ll) / np.sqrt(lk * ll + 1.0) * lie.Q for lie in b.lie]
    big_l2 = np.diag(1.0 / (b.lambdas**2 - 1.0))
    dls = [np.diag(row) for row in b.dlambdas]
    p = b.p
    raw = np.zeros((p, p), dtype=complex)
    for i in range(p):
        for j in range(p):
            raw[i, j] = 0.5 * np.trace(
                rt[i] @ rt[j].conj().T + rt[j] @ rt[i].conj().T + qt[i] @ qt[j].conj().T + qt[j] @ qt[i].conj().T
            ) + np.trace(big_l2 @ dls[i] @ dls[j])
    raw = raw + displacement_term(b, williamson_sigma_inv(b))
    return _finish(raw, "compact", b, pure_tol)


# -- limit formula -----------------------------------------------------------


def _trace_sq(a: np.ndarray, da: np.ndarray) -> float:
    """``tr[(A dA)^2]``, real and non-negative for covariance-structured inputs."""
    x = a @ da
    t = np.trace(x @ x)
    if abs(t.imag) > 1e-10 * max(1.0, abs(t.real)):
        raise QfimError(f"tr[(A dA)^2] has imaginary residue {t.imag:.3g}")
    return float(t.real)


def remainder_bound(a, da_i, da_j, terms: int, lam_min: float) -> float:
    """Bound on ``|1/2 sum_{n>terms} tr[A^-n dA_i A^-n dA_j]|``."""
    if lam_min <= 1.0:
        raise PureModeError("remainder bound needs the smallest symplectic eigenvalue > 1")
    num = math.sqrt(max(_trace_sq(a, da_i), 0.0)) * math.sqrt(max(_trace_sq(a, da_j), 0.0))
    return num / (2.0 * lam_min ** (2 * (terms + 1)) * (lam_min**2 - 1.0))


def terms_threshold(a: np.ndarray, das: Sequence[np.ndarray], lam_min: float, target: float) -> float:
    """Real ``x`` such that every truncation with ``M > x`` terms has bound below ``target``."""
    if lam_min <= 1.0:
        raise PureModeError("series threshold needs the smallest symplectic eigenvalue > 1")
    worst = max(_trace_sq(a, da) for da in das)
    if worst <= 0.0:
        return 0.0
    return (math.log10(worst / (2.0 * (lam_min**2 - 1.0))) - math.log10(target)) / (2.0 * math.log10(lam_min)) - 1.0


def select_terms(a: np.ndarray, das: Sequence[np.ndarray], lam_min: float, target: float, max_terms: int = MAX_TERMS) -> int:
    """Smallest ``M >= 1`` whose remainder bound is below ``target`` for every (i, j)."""
    x = terms_threshold(a, das, lam_min, target)
    m = max(1, math.floor(x) + 1)
    if m > max_terms:
        raise QfimError(f"target error {target:g} needs {m} series terms (cap {max_terms})")
    return m


def limit_series(a_inv: np.ndarray, das: Sequence[np.ndarray], terms: int) -> np.ndarray:
    """``1/2 sum_{n=1}^{terms} tr[A^-n dA_i A^-n dA_j]`` as a complex (p, p) array."""
    p = len(das)
    out = np.zeros((p, p), dtype=complex)
    power = np.eye(a_inv.shape[0], dtype=complex)
    for _ in range(terms):
        power = power @ a_inv
        ts = [power @ da for da in das]
        for i in range(p):
            for j in range(i, p):
                out[i, j] += 0.5 * np.sum(ts[i] * ts[j].T)
    iu = np.triu_indices(p, 1)
    out[(iu[1], iu[0])] = out[iu]
    return out


def qfim_limit(
    b: DerivativeBundle,
    target_abs_error: float = 1e-10,
    *,
    terms: int | None = None,
    max_terms: int = MAX_TERMS,
    pure_tol: float = PURE_TOL,
) -> QfimResult:
    """Truncated series; ``terms`` fixes M, otherwise M comes from ``target_abs_error``."""
    _require_mixed(b, pure_tol, "limit")
    k = symplectic_form(b.modes)
    a = k @ b.sigma
    das = [k @ ds for ds in b.dsigma]
    sigma_inv = williamson_sigma_inv(b) if b.has_symplectic else np.linalg.inv(b.sigma)
    a_inv = sigma_inv @ k
    lam_min = float(np.min(b.spectrum))
    threshold = terms_threshold(a, das, lam_min, target_abs_error)
    m = select_terms(a, das, lam_min, target_abs_error, max_terms) if terms is None else int(terms)
    bound = np.array([[remainder_bound(a, di, dj, m, lam_min) for dj in das] for di in das])
    raw = limit_series(a_inv, das, m) + displacement_term(b, sigma_inv)
    return _finish(raw, "limit", b, pure_tol, series_terms_used=m, error_bound=bound, extras={"terms_threshold": threshold})


# -- regularization ----------------------------------------------------------


def neville_extrapolate(hs: Sequence[float], values: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Polynomial extrapolation to ``h = 0``; returns (best, previous-order estimate)."""
    hs = list(hs)
    table = [np.asarray(v) for v in values]
    diagonal = [table[-1]]
    for order in range(1, len(hs)):
        table = [
            (hs[i + order] * table[i] - hs[i] * table[i + 1]) / (hs[i + order] - hs[i])
            for i in range(len(table) - 1)
        ]
        diagonal.append(table[-1])
    prev = diagonal[-2] if len(diagonal) > 1 else diagonal[-1]
    return diagonal[-1], prev


def regularized_limit(fn, nu_schedule: Sequence[float] = NU_SCHEDULE, extrap_tol: float = EXTRAP_TOL) -> np.ndarray:
    """Evaluate ``fn(nu)`` on the schedule and extrapolate to ``nu = 1`` in ``nu - 1``."""
    nus = sorted(float(nu) for nu in nu_schedule)[::-1]
    if len(nus) < 2 or nus[-1] <= 1.0:
        raise QfimError("nu schedule needs at least two values > 1")
    hs = [nu - 1.0 for nu in nus]
    vals = [np.asarray(fn(nu)) for nu in nus]
    best, prev = neville_extrapolate(hs, vals)
    scale = max(1.0, float(np.max(np.abs(best))))
    gap = float(np.max(np.abs(best - prev)))
    if gap > extrap_tol * scale:
        raise ExtrapolationError(f"nu -> 1 extrapolation not converged (last two estimates differ by {gap:.3g})")
    return best


def regularized_first_term(b: DerivativeBundle, nu: float) -> np.ndarray:
    vs = np.array([vec(ds) for ds in b.dsigma]).T
    return 0.5 * vs.conj().T @ np.linalg.solve(stein_matrix(b.sigma, nu), vs)


def qfim_regularized(
    b: DerivativeBundle,
    nu_schedule: Sequence[float] = NU_SCHEDULE,
    extrap_tol: float = EXTRAP_TOL,
    pure_tol: float = PURE_TOL,
) -> QfimResult:
    first = regularized_limit(lambda nu: regularized_first_term(b, nu), nu_schedule, extrap_tol)
    return _finish(first + displacement_term(b), "regularized", b, pure_tol)


# -- pure states -------------------------------------------------------------


def _require_pure(b: DerivativeBundle, pure_tol: float, route: str) -> None:
    if not np.all(pure_flags(b, pure_tol)):
        raise QfimError(f"{route} route needs a pure state; symplectic spectrum {b.spectrum.tolist()}")


def _pure_quadratic(b: DerivativeBundle) -> tuple[np.ndarray, np.ndarray]:
    k = symplectic_form(b.modes)
    sigma_inv = k @ b.sigma @ k
    xs = [sigma_inv @ ds for ds in b.dsigma]
    p = b.p
    quad = np.array([[np.sum(xs[i] * xs[j].T) for j in range(p)] for i in range(p)])
    return sigma_inv, quad


def qfim_pure(b: DerivativeBundle, pure_tol: float = PURE_TOL) -> QfimResult:
    """``1/4 tr[s^-1 d_i s s^-1 d_j s] + 2 d_i d^dag s^-1 d_j d`` with ``s^-1 = K s K``."""
    _require_pure(b, pure_tol, "pure")
    sigma_inv, quad = _pure_quadratic(b)
    return _finish(0.25 * quad + displacement_term(b, sigma_inv), "pure", b, pure_tol)


def cqfim_pure(b: DerivativeBundle, pure_tol: float = PURE_TOL) -> QfimResult:
    """Continuous QFIM of a pure state from second derivatives of the covariance."""
    _require_pure(b, pure_tol, "pure cQFIM")
    if b.d2sigma is None:
        raise QfimError("pure cQFIM needs second derivatives of sigma")
    sigma_inv, quad = _pure_quadratic(b)
    curv = np.einsum("ab,ijba->ij", sigma_inv, b.d2sigma)
    raw = 0.25 * (2 * curv - quad) + displacement_term(b, sigma_inv)
    return _finish(raw, "cqfim", b, pure_tol, extras={"route": "pure"})


# -- dispatch and cQFIM ------------------------------------------------------


def auto_method(b: DerivativeBundle, pure_tol: float = PURE_TOL) -> str:
    flags = pure_flags(b, pure_tol)
    if not np.any(flags):
        return "mixed"
    if b.has_symplectic:
        return "williamson"
    return "regularized"


def qfim(b: DerivativeBundle, method: str = "auto", **opts) -> QfimResult:
    pure_tol = opts.get("pure_tol", PURE_TOL)
    if method == "auto":
        method = auto_method(b, pure_tol)
    if method == "mixed":
        return qfim_mixed(b, pure_tol)
    if method == "williamson":
        return qfim_williamson(b, pure_tol)
    if method == "compact":
        return qfim_compact(b, pure_tol)
    if method == "limit":
        return qfim_limit(b, opts.get("target_abs_error", 1e-10), pure_tol=pure_tol)
    if method == "regularized":
        return qfim_regularized(b, opts.get("nu_schedule", NU_SCHEDULE), opts.get("extrap_tol", EXTRAP_TOL), pure_tol)
    if method == "pure":
        return qfim_pure(b, pure_tol)
    if method == "cqfim":
        return cqfim(b, pure_tol=pure_tol, nu_schedule=opts.get("nu_schedule", NU_SCHEDULE))
    raise QfimError(f"unknown method {method!r}; expected one of {METHODS + ('auto',)}")


def cqfim(
    b: DerivativeBundle,
    base: str = "auto",
    pure_tol: float = PURE_TOL,
    nu_schedule: Sequence[float] = NU_SCHEDULE,
) -> QfimResult:
    """``H_c = H + sum over pure modes of the Hessian of lambda_k``.

    For a fully pure state with second derivatives available, the direct
    pure-state cQFIM is evaluated too and the discrepancy is recorded in
    ``extras["pure_route_discrepancy"]``.
    """
    flags = pure_flags(b, pure_tol)
    if base == "auto":
        base = "pure" if np.all(flags) else auto_method(b, pure_tol)
    if base == "regularized":
        h = qfim_regularized(b, nu_schedule, pure_tol=pure_tol)
    else:
        h = qfim(b, base, pure_tol=pure_tol)
    extras: dict = {"base_method": base}
    total = h.H.copy()
    if np.any(flags):
        if b.lambda_hessians is None:
            raise QfimError("cQFIM needs Hessians of the pure-mode symplectic eigenvalues")
        total = total + b.lambda_hessians[flags].sum(axis=0)
    if np.all(flags) and b.d2sigma is not None:
        direct = cqfim_pure(b, pure_tol)
        extras["pure_route_discrepancy"] = float(np.max(np.abs(direct.H - total)))
    return _finish(total, "cqfim", b, pure_tol, extras=extras)
