"""Complex-form phase space: moments, symplectic form, checks and real-form adapters.

States are stored in the complex form built on the operator vector
``(a_1..a_N, a_1^dag..a_N^dag)``.  The displacement is ``d = (g, conj(g))``
and the covariance is the anticommutator matrix ``[[X, Y], [conj(Y), conj(X)]]``
(vacuum is the identity).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

TOL_STRUCT = 1e-10
TOL_PHYS = 1e-9

_FORMS = ("complex", "real-xxpp", "real-xpxp")
_CONVENTIONS = ("anticommutator", "symmetrized")


class StateError(ValueError):
    """Raised when moments violate the Gaussian-state invariants."""


def symplectic_form(n_modes: int) -> np.ndarray:
    """Complex-form symplectic form ``K = diag(I_N, -I_N)``."""
    return np.diag(np.concatenate([np.ones(n_modes), -np.ones(n_modes)])).astype(complex)


def swap_form(n_modes: int) -> np.ndarray:
    """``T = [[0, I], [I, 0]]``; maps ``A`` to ``A^dag`` componentwise."""
    eye = np.eye(n_modes)
    zero = np.zeros((n_modes, n_modes))
    return np.block([[zero, eye], [eye, zero]]).astype(complex)


def real_symplectic_form(n_modes: int) -> np.ndarray:
    """Real-form ``Omega_R = [[0, I], [-I, 0]]`` in xxpp ordering."""
    eye = np.eye(n_modes)
    zero = np.zeros((n_modes, n_modes))
    return np.block([[zero, eye], [-eye, zero]])


def real_to_complex_unitary(n_modes: int) -> np.ndarray:
    """``U = (1/sqrt2) [[I, iI], [I, -iI]]`` with ``A = U Q`` (Q in xxpp order)."""
    eye = np.eye(n_modes)
    return np.block([[eye, 1j * eye], [eye, -1j * eye]]) / np.sqrt(2.0)


def _modes_of(dim: int) -> int:
    if dim % 2 or dim == 0:
        raise StateError(f"phase-space dimension must be even and positive, got {dim}")
    return dim // 2


def conj_pair_residual(vec: np.ndarray) -> float:
    n = _modes_of(vec.shape[0])
    return float(np.max(np.abs(vec[n:] - np.conj(vec[:n])), initial=0.0))


def block_residual(mat: np.ndarray) -> float:
    """Distance of ``mat`` from the ``[[X, Y], [conj(Y), conj(X)]]`` pattern."""
    n = _modes_of(mat.shape[0])
    x, y = mat[:n, :n], mat[:n, n:]
    r1 = np.max(np.abs(mat[n:, n:] - np.conj(x)), initial=0.0)
    r2 = np.max(np.abs(mat[n:, :n] - np.conj(y)), initial=0.0)
    return float(max(r1, r2))


def hermiticity_residual(mat: np.ndarray) -> float:
    return float(np.max(np.abs(mat - mat.conj().T), initial=0.0))


def spectrum_of_k_sigma(sigma: np.ndarray) -> np.ndarray:
    """Eigenvalues of ``K sigma`` for Hermitian positive-definite ``sigma``, descending.

    Computed through the similar Hermitian matrix ``sigma^1/2 K sigma^1/2`` so the
    result is real to machine precision.
    """
    n = _modes_of(sigma.shape[0])
    w, v = np.linalg.eigh(sigma)
    if w[0] <= 0:
        raise StateError("covariance matrix is not positive definite")
    root = (v * np.sqrt(w)) @ v.conj().T
    k = symplectic_form(n)
    return np.linalg.eigvalsh(root @ k @ root)[::-1]


@dataclass(frozen=True, eq=False)
class GaussianState:
    """First and second moments of an N-mode Gaussian state in complex form.

    The constructor enforces every invariant (structure, Hermiticity,
    physicality).  Use :meth:`unchecked` to hold arbitrary moments for
    diagnostics with :func:`validate`.
    """

    d: np.ndarray
    sigma: np.ndarray

    def __post_init__(self) -> None:
        d = np.asarray(self.d, dtype=complex).reshape(-1)
        sigma = np.asarray(self.sigma, dtype=complex)
        if sigma.shape != (d.shape[0], d.shape[0]):
            raise StateError(f"shape mismatch: d {d.shape}, sigma {sigma.shape}")
        _modes_of(d.shape[0])
        d.setflags(write=False)
        sigma.setflags(write=False)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "sigma", sigma)
        problems = validate(self)
        if problems:
            raise StateError("invalid Gaussian state: " + ", ".join(problems))

    @classmethod
    def unchecked(cls, d: Any, sigma: Any) -> "GaussianState":
        obj = object.__new__(cls)
        object.__setattr__(obj, "d", np.asarray(d, dtype=complex).reshape(-1))
        object.__setattr__(obj, "sigma", np.asarray(sigma, dtype=complex))
        return obj

    @property
    def modes(self) -> int:
        return self.d.shape[0] // 2

    def symplectic_eigenvalues(self) -> np.ndarray:
        return spectrum_of_k_sigma(self.sigma)[: self.modes]

    def __repr__(self) -> str:
        return f"GaussianState(modes={self.modes})"


def validate(
    state: GaussianState, tol_struct: float = TOL_STRUCT, tol_phys: float = TOL_PHYS
) -> list[str]:
    """Return the names of violated invariants (empty when the state is valid).

    Possible entries: ``"dimension"``, ``"conjugate_pair"``, ``"hermiticity"``,
    ``"block_structure"``, ``"physicality"``.
    """
    d, sigma = state.d, state.sigma
    if sigma.ndim != 2 or sigma.shape != (d.shape[0], d.shape[0]) or d.shape[0] % 2:
        return ["dimension"]
    problems = []
    if conj_pair_residual(d) > tol_struct:
        problems.append("conjugate_pair")
    if hermiticity_residual(sigma) > tol_struct:
        problems.append("hermiticity")
    if block_residual(sigma) > tol_struct:
        problems.append("block_structure")
    herm = 0.5 * (sigma + sigma.conj().T)
    try:
        lams = spectrum_of_k_sigma(herm)[: d.shape[0] // 2]
    except StateError:
        problems.append("physicality")
    else:
        if lams.min() < 1.0 - tol_phys:
            problems.append("physicality")
    return problems


@dataclass(frozen=True, eq=False)
class RealFormState:
    """Real quadrature moments, ``sigma_R^{mn} = tr[rho {dQ^m, dQ^n}]``.

    ``ordering`` is ``"xxpp"`` (x_1..x_N, p_1..p_N) or ``"xpxp"``.
    """

    d_r: np.ndarray
    sigma_r: np.ndarray
    ordering: str = "xxpp"

    def __post_init__(self) -> None:
        d_r = np.asarray(self.d_r, dtype=float).reshape(-1)
        sigma_r = np.asarray(self.sigma_r, dtype=float)
        if sigma_r.shape != (d_r.shape[0], d_r.shape[0]):
            raise StateError(f"shape mismatch: d_r {d_r.shape}, sigma_r {sigma_r.shape}")
        _modes_of(d_r.shape[0])
        if self.ordering not in ("xxpp", "xpxp"):
            raise StateError(f"unknown ordering {self.ordering!r}")
        object.__setattr__(self, "d_r", d_r)
        object.__setattr__(self, "sigma_r", sigma_r)

    @property
    def modes(self) -> int:
        return self.d_r.shape[0] // 2


def xpxp_permutation(n_modes: int) -> np.ndarray:
    """Permutation matrix P with ``v_xpxp = P v_xxpp``."""
    order = np.ravel(np.column_stack([np.arange(n_modes), np.arange(n_modes) + n_modes]))
    return np.eye(2 * n_modes)[order]


def reorder_xpxp(rs: RealFormState) -> RealFormState:
    if rs.ordering == "xpxp":
        return rs
    p = xpxp_permutation(rs.modes)
    return RealFormState(p @ rs.d_r, p @ rs.sigma_r @ p.T, ordering="xpxp")


def reorder_xxpp(rs: RealFormState) -> RealFormState:
    if rs.ordering == "xxpp":
        return rs
    p = xpxp_permutation(rs.modes)
    return RealFormState(p.T @ rs.d_r, p.T @ rs.sigma_r @ p, ordering="xxpp")


def _convention_scale(convention: str) -> float:
    if convention not in _CONVENTIONS:
        raise ValueError(f"convention must be one of {_CONVENTIONS}, got {convention!r}")
    # "symmetrized" covariance is half the anticommutator one (vacuum = I/2)
    return 1.0 if convention == "anticommutator" else 2.0


def to_complex_form(
    rs: RealFormState, convention: str = "anticommutator", tol_struct: float = TOL_STRUCT
) -> GaussianState:
    """Convert real-form moments to the complex form (``d = U d_R``, ``sigma = U sigma_R U^dag``)."""
    rs = reorder_xxpp(rs)
    sigma_r = rs.sigma_r * _convention_scale(convention)
    if np.max(np.abs(sigma_r - sigma_r.T), initial=0.0) > tol_struct:
        raise StateError("real covariance matrix is not symmetric")
    u = real_to_complex_unitary(rs.modes)
    return GaussianState(u @ rs.d_r, u @ sigma_r @ u.conj().T)


def to_real_form(
    gs: GaussianState, convention: str = "anticommutator", tol_struct: float = TOL_STRUCT
) -> RealFormState:
    """Inverse of :func:`to_complex_form`; result in xxpp ordering."""
    u = real_to_complex_unitary(gs.modes)
    d_r = u.conj().T @ gs.d
    sigma_r = u.conj().T @ gs.sigma @ u
    residue = max(np.max(np.abs(d_r.imag), initial=0.0), np.max(np.abs(sigma_r.imag)))
    if residue > tol_struct:
        raise StateError(f"complex-form moments have no real counterpart (imaginary residue {residue:.3g})")
    return RealFormState(d_r.real, sigma_r.real / _convention_scale(convention))


# -- serialization -----------------------------------------------------------


def _pairs(values: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(values, dtype=complex)]


def _unpair(value: Any) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise StateError(f"complex entries must be [re, im] pairs, got {value!r}")
        return complex(float(value[0]), float(value[1]))
    return complex(float(value))


def state_to_dict(gs: GaussianState, form: str = "complex") -> dict:
    """Serialize to ``{modes, form, d, sigma}`` with complex numbers as ``[re, im]``."""
    if form not in _FORMS:
        raise ValueError(f"form must be one of {_FORMS}")
    if form == "complex":
        d, sigma = gs.d, gs.sigma
    else:
        rs = to_real_form(gs)
        if form == "real-xpxp":
            rs = reorder_xpxp(rs)
        d, sigma = rs.d_r, rs.sigma_r
    return {
        "modes": gs.modes,
        "form": form,
        "d": _pairs(d),
        "sigma": [_pairs(row) for row in sigma],
    }


def state_from_dict(doc: dict, convention: str = "anticommutator") -> GaussianState:
    form = doc.get("form", "complex")
    if form not in _FORMS:
        raise StateError(f"form must be one of {_FORMS}, got {form!r}")
    try:
        modes = int(doc["modes"])
        d = np.array([_unpair(v) for v in doc["d"]])
        sigma = np.array([[_unpair(v) for v in row] for row in doc["sigma"]])
    except (KeyError, TypeError) as exc:
        raise StateError(f"malformed state document: {exc}") from exc
    if d.shape != (2 * modes,) or sigma.shape != (2 * modes, 2 * modes):
        raise StateError(f"state document dimensions do not match modes={modes}")
    if form == "complex":
        return GaussianState(d, sigma)
    if np.max(np.abs(d.imag)) > 0 or np.max(np.abs(sigma.imag)) > 0:
        raise StateError("real-form state has imaginary entries")
    ordering = "xpxp" if form == "real-xpxp" else "xxpp"
    return to_complex_form(RealFormState(d.real, sigma.real, ordering), convention=convention)
