"""Parameterized Gaussian state families and their derivative bundles.

A :class:`StateFamily` maps a parameter vector to a :class:`GaussianState`.
Families composed from catalog pieces (:func:`catalog_family`) also carry
closed-form first derivatives and, when no mode is traced out, the
symplectic data ``(S, lambdas, dS, dlambdas)`` that the Williamson-form
estimators need.  Everything else falls back to central differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .gaussian_catalog import (
    ChannelStep,
    lambda_from_beta,
    keep_index,
)
from .phase_space import GaussianState, StateError, state_from_dict
from .williamson import (
    LieDerivative,
    align_gauge,
    lie_derivative,
    symplectic_eigenvalues,
    williamson_decompose,
)

_EPS = np.finfo(float).eps


class FamilyError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SymplecticData:
    """Williamson data of a family member: ``sigma = S diag(l, l) S^dag`` plus derivatives."""

    S: np.ndarray
    lambdas: np.ndarray
    dS: np.ndarray  # (p, 2N, 2N)
    dlambdas: np.ndarray  # (p, N)


@dataclass(frozen=True, eq=False)
class StateFamily:
    """``eps -> GaussianState`` with optional analytic derivative evaluators.

    ``derivatives(eps)`` returns ``(dd, dsigma)`` stacked over parameters;
    ``symplectic(eps)`` returns :class:`SymplecticData`.  Evaluators must be
    reentrant.
    """

    param_names: tuple[str, ...]
    evaluate: Callable[[np.ndarray], GaussianState]
    derivatives: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]] | None = None
    symplectic: Callable[[np.ndarray], SymplecticData] | None = None

    @property
    def p(self) -> int:
        return len(self.param_names)

    def __call__(self, eps) -> GaussianState:
        return self.evaluate(np.asarray(eps, dtype=float))


@dataclass(eq=False)
class DerivativeBundle:
    """Moments, their parameter derivatives and optional Williamson/Hessian data at one point."""

    param_names: tuple[str, ...]
    eps: np.ndarray
    d: np.ndarray
    sigma: np.ndarray
    dd: np.ndarray  # (p, 2N)
    dsigma: np.ndarray  # (p, 2N, 2N)
    spectrum: np.ndarray  # sorted symplectic eigenvalues, descending
    S: np.ndarray | None = None
    lambdas: np.ndarray | None = None  # in the order of S's columns
    dlambdas: np.ndarray | None = None  # (p, N)
    lie: list[LieDerivative] | None = None
    d2sigma: np.ndarray | None = None  # (p, p, 2N, 2N)
    d2d: np.ndarray | None = None  # (p, p, 2N)
    lambda_hessians: np.ndarray | None = None  # (N, p, p), sorted-spectrum labels
    notes: list[str] = field(default_factory=list)

    @property
    def p(self) -> int:
        return self.dd.shape[0]

    @property
    def modes(self) -> int:
        return self.d.shape[0] // 2

    @property
    def has_symplectic(self) -> bool:
        return self.S is not None

    def pure_modes(self, pure_tol: float) -> np.ndarray:
        """Indices (into ``spectrum``) of modes with ``|lambda - 1| <= pure_tol``."""
        return np.flatnonzero(np.abs(self.spectrum - 1.0) <= pure_tol)


def default_steps(eps: np.ndarray, power: float = 1.0 / 3.0) -> np.ndarray:
    """``max(|eps_i|, 1) * machine_eps**power`` (1/3 for gradients, 1/4 for Hessians)."""
    return np.maximum(np.abs(eps), 1.0) * _EPS**power


def _shift(eps: np.ndarray, i: int, h: float) -> np.ndarray:
    out = eps.copy()
    out[i] += h
    return out


def _moments(family: StateFamily, eps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    try:
        st = family.evaluate(eps)
    except (StateError, ValueError) as exc:
        raise FamilyError(f"family evaluation failed at eps={eps.tolist()}: {exc}") from exc
    return st.d, st.sigma


def fd_derivatives(family: StateFamily, eps, steps=None) -> tuple[np.ndarray, np.ndarray]:
    """Second-order central differences of ``(d, sigma)``."""
    eps = np.asarray(eps, dtype=float)
    steps = default_steps(eps) if steps is None else np.broadcast_to(np.asarray(steps, float), eps.shape)
    dds, dsigmas = [], []
    for i, h in enumerate(steps):
        dp, sp = _moments(family, _shift(eps, i, h))
        dm, sm = _moments(family, _shift(eps, i, -h))
        dds.append((dp - dm) / (2 * h))
        dsigmas.append((sp - sm) / (2 * h))
    return np.array(dds), np.array(dsigmas)


def check_derivatives(family: StateFamily, eps, steps=None) -> float:
    """Max relative deviation of analytic derivatives from central differences."""
    if family.derivatives is None:
        raise FamilyError("family has no analytic derivatives")
    eps = np.asarray(eps, dtype=float)
    dd_a, ds_a = family.derivatives(eps)
    dd_f, ds_f = fd_derivatives(family, eps, steps)
    scale = max(1.0, np.max(np.abs(ds_a)), np.max(np.abs(dd_a), initial=0.0))
    return float(max(np.max(np.abs(ds_a - ds_f)), np.max(np.abs(dd_a - dd_f), initial=0.0)) / scale)


def _spectrum(family: StateFamily, eps: np.ndarray) -> np.ndarray:
    return symplectic_eigenvalues(_moments(family, eps)[1])


_STENCIL = ((-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0))
_STENCIL2 = ((-2, -1.0 / 12.0), (-1, 16.0 / 12.0), (0, -30.0 / 12.0), (1, 16.0 / 12.0), (2, -1.0 / 12.0))


def spectrum_hessians(family: StateFamily, eps, steps=None) -> np.ndarray:
    """Hessians of every sorted symplectic eigenvalue, shape (N, p, p).

    Fourth-order central stencils; the default step ``max(|eps|, 1) * eps_mach**(1/6)``
    balances truncation against round-off for that order.
    """
    eps = np.asarray(eps, dtype=float)
    p = eps.shape[0]
    steps = default_steps(eps, 1.0 / 6.0) if steps is None else np.broadcast_to(np.asarray(steps, float), eps.shape)
    f0 = _spectrum(family, eps)
    out = np.zeros((f0.shape[0], p, p))
    for i in range(p):
        hi = steps[i]
        acc = np.zeros_like(f0)
        for a, w in _STENCIL2:
            acc += w * (f0 if a == 0 else _spectrum(family, _shift(eps, i, a * hi)))
        out[:, i, i] = acc / hi**2
        for j in range(i + 1, p):
            hj = steps[j]
            acc = np.zeros_like(f0)
            for a, wa in _STENCIL:
                for c, wc in _STENCIL:
                    acc += wa * wc * _spectrum(family, _shift(_shift(eps, i, a * hi), j, c * hj))
            out[:, i, j] = out[:, j, i] = acc / (hi * hj)
    return out


def symplectic_eigenvalue_hessian(family: StateFamily, eps, k: int, steps=None) -> np.ndarray:
    """Hessian ``d_i d_j lambda_k`` of the k-th largest symplectic eigenvalue."""
    return spectrum_hessians(family, eps, steps)[k]


def _second_derivatives(family: StateFamily, eps: np.ndarray, steps) -> tuple[np.ndarray, np.ndarray]:
    p = eps.shape[0]
    if family.derivatives is not None:
        h = default_steps(eps) if steps is None else steps
        rows_s, rows_d = [], []
        for i in range(p):
            ddp, dsp = family.derivatives(_shift(eps, i, h[i]))
            ddm, dsm = family.derivatives(_shift(eps, i, -h[i]))
            rows_d.append((ddp - ddm) / (2 * h[i]))
            rows_s.append((dsp - dsm) / (2 * h[i]))
        d2d, d2s = np.array(rows_d), np.array(rows_s)
        return 0.5 * (d2d + d2d.transpose(1, 0, 2)), 0.5 * (d2s + d2s.transpose(1, 0, 2, 3))
    h = default_steps(eps, 0.25)
    d0, s0 = _moments(family, eps)
    d2d = np.zeros((p, p) + d0.shape, dtype=complex)
    d2s = np.zeros((p, p) + s0.shape, dtype=complex)
    for i in range(p):
        dp, sp = _moments(family, _shift(eps, i, h[i]))
        dm, sm = _moments(family, _shift(eps, i, -h[i]))
        d2d[i, i] = (dp - 2 * d0 + dm) / h[i] ** 2
        d2s[i, i] = (sp - 2 * s0 + sm) / h[i] ** 2
        for j in range(i + 1, p):
            pts = [_moments(family, _shift(_shift(eps, i, a * h[i]), j, b * h[j])) for a, b in ((1, 1), (1, -1), (-1, 1), (-1, -1))]
            denom = 4 * h[i] * h[j]
            d2d[i, j] = d2d[j, i] = (pts[0][0] - pts[1][0] - pts[2][0] + pts[3][0]) / denom
            d2s[i, j] = d2s[j, i] = (pts[0][1] - pts[1][1] - pts[2][1] + pts[3][1]) / denom
    return d2d, d2s


def _fd_symplectic(family: StateFamily, eps: np.ndarray, steps) -> SymplecticData:
    h = default_steps(eps) if steps is None else steps
    center = williamson_decompose(_moments(family, eps)[1])
    ds, dl = [], []
    for i in range(eps.shape[0]):
        plus = williamson_decompose(_moments(family, _shift(eps, i, h[i]))[1])
        minus = williamson_decompose(_moments(family, _shift(eps, i, -h[i]))[1])
        ds.append((align_gauge(center, plus) - align_gauge(center, minus)) / (2 * h[i]))
        dl.append((plus.lambdas - minus.lambdas) / (2 * h[i]))
    return SymplecticData(center.S, center.lambdas, np.array(ds), np.array(dl))


def evaluate_bundle(
    family: StateFamily,
    eps,
    *,
    steps=None,
    symplectic: str = "auto",
    hessians: bool = False,
    second_derivatives: bool = False,
) -> DerivativeBundle:
    """Assemble moments and derivatives at ``eps``.

    ``symplectic``: ``"auto"``/``"analytic"`` use the family's analytic
    symplectic evaluator (``"analytic"`` requires one); ``"finite-difference"``
    differentiates Williamson decompositions with gauge alignment to the
    centre point; ``"none"`` skips the Williamson fields.
    """
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    if eps.shape[0] != family.p:
        raise FamilyError(f"expected {family.p} parameters, got {eps.shape[0]}")
    if steps is not None:
        steps = np.broadcast_to(np.asarray(steps, dtype=float), eps.shape).copy()
    d, sigma = _moments(family, eps)
    if family.derivatives is not None:
        dd, dsigma = family.derivatives(eps)
    else:
        dd, dsigma = fd_derivatives(family, eps, steps)
    b = DerivativeBundle(
        param_names=tuple(family.param_names),
        eps=eps,
        d=d,
        sigma=sigma,
        dd=np.asarray(dd, dtype=complex).reshape(family.p, -1),
        dsigma=np.asarray(dsigma, dtype=complex).reshape(family.p, *sigma.shape),
        spectrum=symplectic_eigenvalues(sigma),
    )
    data = None
    if symplectic in ("auto", "analytic"):
        if family.symplectic is not None:
            data = family.symplectic(eps)
        elif symplectic == "analytic":
            raise FamilyError("family has no analytic symplectic evaluator")
    elif symplectic == "finite-difference":
        data = _fd_symplectic(family, eps, steps)
        b.notes.append("symplectic derivatives by gauge-aligned finite differences")
    elif symplectic != "none":
        raise FamilyError(f"unknown symplectic mode {symplectic!r}")
    if data is not None:
        b.S = data.S
        b.lambdas = np.asarray(data.lambdas, dtype=float)
        b.dlambdas = np.asarray(data.dlambdas, dtype=float).reshape(family.p, -1)
        b.lie = [lie_derivative(data.S, dsi) for dsi in data.dS]
    if second_derivatives:
        b.d2d, b.d2sigma = _second_derivatives(family, eps, steps)
    if hessians:
        b.lambda_hessians = spectrum_hessians(family, eps)
    return b


# -- families composed from catalog pieces -----------------------------------

_INITIAL_KINDS = ("vacuum", "thermal", "coherent", "squeezed_vacuum", "two_mode_squeezed_vacuum", "custom")


def _value(raw, values: Mapping[str, float]) -> float:
    return float(values[raw]) if isinstance(raw, str) else float(raw)


def _grad(raw, symbol: str) -> float:
    return 1.0 if raw == symbol else 0.0


@dataclass(frozen=True)
class InitialState:
    """Catalog reference for the probe state; numeric entries may be symbol names.

    * ``thermal``: ``lambdas`` (list) or ``betas`` (list, ``lambda = coth(beta/2)``)
    * ``coherent``: ``alphas`` as ``[re, im]`` pairs
    * ``squeezed_vacuum``: ``r``, ``chi``, ``mode``
    * ``two_mode_squeezed_vacuum``: ``r``, ``chi``, ``modes``
    * ``custom``: ``state`` in the serialized state format (constant)
    """

    kind: str
    n_modes: int
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in _INITIAL_KINDS:
            raise FamilyError(f"unknown initial state {self.kind!r}; expected one of {_INITIAL_KINDS}")
        if self.n_modes < 1:
            raise FamilyError("n_modes must be positive")
        if self.kind == "thermal":
            key = "betas" if "betas" in self.params else "lambdas"
            if len(self.params.get(key, [])) != self.n_modes:
                raise FamilyError(f"thermal state needs {self.n_modes} entries in {key!r}")
        if self.kind == "coherent" and len(self.params.get("alphas", [])) != self.n_modes:
            raise FamilyError(f"coherent state needs {self.n_modes} alphas")

    def symbols(self) -> set[str]:
        out = set()
        for v in self.params.values():
            items = v if isinstance(v, list) else [v]
            for item in items:
                parts = item if isinstance(item, list) else [item]
                out.update(x for x in parts if isinstance(x, str))
        return out

    def prefix_steps(self) -> list[ChannelStep]:
        p = self.params
        if self.kind == "squeezed_vacuum":
            return [ChannelStep("squeeze", (p.get("mode", 0),), {"r": p.get("r", 0.0), "chi": p.get("chi", 0.0)})]
        if self.kind == "two_mode_squeezed_vacuum":
            return [ChannelStep("two_mode_squeeze", tuple(p.get("modes", (0, 1))), {"r": p.get("r", 0.0), "chi": p.get("chi", 0.0)})]
        return []

    def moments(self, values: Mapping[str, float], names: Sequence[str]):
        """``(d, sigma, S0, lambdas, dd, dsigma, dlambdas)`` of the probe."""
        n = self.n_modes
        p = len(names)
        zeros_d = np.zeros((p, 2 * n), dtype=complex)
        if self.kind == "custom":
            st = state_from_dict(self.params["state"])
            if st.modes != n:
                raise FamilyError("custom state mode count does not match")
            dec = williamson_decompose(st.sigma)
            return st.d, st.sigma, dec.S, dec.lambdas, zeros_d, np.zeros((p, 2 * n, 2 * n), complex), np.zeros((p, n))
        lams = np.ones(n)
        dlams = np.zeros((p, n))
        d = np.zeros(2 * n, dtype=complex)
        dd = zeros_d.copy()
        if self.kind == "thermal":
            if "betas" in self.params:
                for k, raw in enumerate(self.params["betas"]):
                    lam = lambda_from_beta(_value(raw, values))
                    lams[k] = lam
                    for i, name in enumerate(names):
                        dlams[i, k] = -0.5 * (lam**2 - 1.0) * _grad(raw, name)
            else:
                for k, raw in enumerate(self.params["lambdas"]):
                    lams[k] = _value(raw, values)
                    for i, name in enumerate(names):
                        dlams[i, k] = _grad(raw, name)
            if np.any(lams < 1.0):
                raise StateError(f"thermal symplectic eigenvalues must be >= 1, got {lams.tolist()}")
        elif self.kind == "coherent":
            for k, (re, im) in enumerate(self.params["alphas"]):
                alpha = _value(re, values) + 1j * _value(im, values)
                d[k], d[k + n] = alpha, np.conj(alpha)
                for i, name in enumerate(names):
                    g = _grad(re, name) + 1j * _grad(im, name)
                    dd[i, k], dd[i, k + n] = g, np.conj(g)
        sigma = np.diag(np.concatenate([lams, lams])).astype(complex)
        dsigma = np.array([np.diag(np.concatenate([row, row])) for row in dlams]).astype(complex).reshape(p, 2 * n, 2 * n)
        return d, sigma, np.eye(2 * n, dtype=complex), lams, dd, dsigma, dlams

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any], n_modes: int) -> "InitialState":
        doc = dict(doc)
        kind = doc.pop("kind", None)
        if kind is None:
            raise FamilyError("initial_state needs a 'kind'")
        params = doc.pop("params", doc)
        return cls(kind, n_modes, dict(params))


def catalog_family(
    initial: InitialState,
    steps: Sequence[ChannelStep],
    param_names: Sequence[str],
    keep: Sequence[int] | None = None,
) -> StateFamily:
    """Family ``eps -> [partial trace] o step_n o ... o step_1 (initial)`` with analytic derivatives.

    The symplectic evaluator is attached only when no modes are traced out
    (the reduced state's Williamson data is not a product of catalog pieces).
    """
    names = tuple(param_names)
    n = initial.n_modes
    all_steps = [*initial.prefix_steps(), *steps]
    used = initial.symbols().union(*(s.symbols() for s in all_steps)) if all_steps else initial.symbols()
    unknown = used - set(names)
    if unknown:
        raise FamilyError(f"undefined parameter symbols: {sorted(unknown)}")
    idx = keep_index(keep, n) if keep is not None else None

    def pipeline(eps: np.ndarray):
        values = dict(zip(names, np.asarray(eps, dtype=float)))
        d, sigma, stot, lams, dd, dsigma, dlams = initial.moments(values, names)
        dstot = np.zeros((len(names), 2 * n, 2 * n), dtype=complex)
        for step in all_steps:
            ch = step.channel(n, values)
            s, sh = ch.S, ch.S.conj().T
            for i, name in enumerate(names):
                ds, db = step.derivative(n, values, name)
                dd[i] = ds @ d + s @ dd[i] + db
                dsigma[i] = ds @ sigma @ sh + s @ dsigma[i] @ sh + s @ sigma @ ds.conj().T
                dstot[i] = ds @ stot + s @ dstot[i]
            d = s @ d + ch.b
            sigma = s @ sigma @ sh
            stot = s @ stot
        sigma = 0.5 * (sigma + sigma.conj().T)
        dsigma = 0.5 * (dsigma + dsigma.conj().transpose(0, 2, 1))
        if idx is not None:
            d, sigma, dd, dsigma = d[idx], sigma[np.ix_(idx, idx)], dd[:, idx], dsigma[:, idx][:, :, idx]
        return d, sigma, dd, dsigma, SymplecticData(stot, lams, dstot, dlams)

    def evaluate(eps):
        d, sigma, *_ = pipeline(eps)
        return GaussianState(d, sigma)

    def derivatives(eps):
        _, _, dd, dsigma, _ = pipeline(eps)
        return dd, dsigma

    def symplectic(eps):
        return pipeline(eps)[4]

    return StateFamily(names, evaluate, derivatives, symplectic if idx is None else None)


def constant_family(state: GaussianState, param_names: Sequence[str] = ("eps",)) -> StateFamily:
    """Family that ignores its parameters (all derivatives vanish)."""
    dec = williamson_decompose(state.sigma)
    p = len(param_names)
    n2 = state.d.shape[0]

    def symplectic(eps):
        return SymplecticData(dec.S, dec.lambdas, np.zeros((p, n2, n2), complex), np.zeros((p, n2 // 2)))

    return StateFamily(
        tuple(param_names),
        lambda eps: state,
        lambda eps: (np.zeros((p, n2), complex), np.zeros((p, n2, n2), complex)),
        symplectic,
    )

