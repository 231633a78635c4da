"""Gaussian unitaries and standard Gaussian states in the complex form.

Every catalog channel is available three ways: as a closed-form symplectic
matrix (with closed-form parameter derivatives), as a quadratic generator
``(W, a)`` fed through ``S = exp(iKW)``, and as a serializable
:class:`ChannelStep` whose parameters may be bound to estimation symbols.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.linalg import expm

from .phase_space import (
    TOL_STRUCT,
    GaussianState,
    StateError,
    block_residual,
    conj_pair_residual,
    hermiticity_residual,
    symplectic_form,
)

KINDS = ("rotation", "squeeze", "two_mode_squeeze", "beam_splitter", "displacement", "generator")

_PARAMS = {
    "rotation": ("theta",),
    "squeeze": ("r", "chi"),
    "two_mode_squeeze": ("r", "chi"),
    "beam_splitter": ("theta", "chi"),
    "displacement": ("re", "im"),
    "generator": ("t",),
}
_DEFAULTS = {"chi": 0.0, "t": 1.0, "re": 0.0, "im": 0.0}
_ARITY = {"rotation": 1, "squeeze": 1, "two_mode_squeeze": 2, "beam_splitter": 2, "displacement": 1}


class ChannelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GaussianChannel:
    """Phase-space action ``d -> S d + b``, ``sigma -> S sigma S^dag``."""

    S: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        s = np.asarray(self.S, dtype=complex)
        b = np.asarray(self.b, dtype=complex).reshape(-1)
        if s.shape != (b.shape[0], b.shape[0]) or b.shape[0] % 2:
            raise ChannelError(f"shape mismatch: S {s.shape}, b {b.shape}")
        object.__setattr__(self, "S", s)
        object.__setattr__(self, "b", b)
        k = symplectic_form(self.modes)
        if np.max(np.abs(s @ k @ s.conj().T - k)) > symplectic_tolerance(s):
            raise ChannelError("S is not symplectic (S K S^dag != K)")
        if block_residual(s) > TOL_STRUCT * max(1.0, np.max(np.abs(s))):
            raise ChannelError("S lacks the [[alpha, beta], [conj(beta), conj(alpha)]] structure")
        if conj_pair_residual(b) > TOL_STRUCT * max(1.0, np.max(np.abs(b), initial=0.0)):
            raise ChannelError("b is not a conjugate pair (g, conj(g))")

    @property
    def modes(self) -> int:
        return self.b.shape[0] // 2

    def then(self, other: "GaussianChannel") -> "GaussianChannel":
        """Composite channel: ``self`` first, then ``other``."""
        return GaussianChannel(other.S @ self.S, other.S @ self.b + other.b)


def symplectic_tolerance(s: np.ndarray) -> float:
    # S K S^dag loses digits proportional to |S|^2 (e.g. strong squeezing)
    return 1e-12 * max(1.0, float(np.max(np.abs(s))) ** 2) * s.shape[0]


def identity_channel(n_modes: int) -> GaussianChannel:
    return GaussianChannel(np.eye(2 * n_modes), np.zeros(2 * n_modes))


def apply(ch: GaussianChannel, st: GaussianState) -> GaussianState:
    if ch.modes != st.modes:
        raise ChannelError(f"channel acts on {ch.modes} modes, state has {st.modes}")
    sigma = ch.S @ st.sigma @ ch.S.conj().T
    return GaussianState(ch.S @ st.d + ch.b, 0.5 * (sigma + sigma.conj().T))


@dataclass(frozen=True, eq=False)
class GaussianGenerator:
    """Quadratic generator of ``exp(i/2 A^dag W A + A^dag K a)``."""

    W: np.ndarray
    a: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.W, dtype=complex)
        a = np.asarray(self.a, dtype=complex).reshape(-1)
        if w.shape != (a.shape[0], a.shape[0]) or a.shape[0] % 2:
            raise ChannelError(f"shape mismatch: W {w.shape}, a {a.shape}")
        if hermiticity_residual(w) > TOL_STRUCT * max(1.0, np.max(np.abs(w))):
            raise ChannelError("generator W is not Hermitian")
        if block_residual(w) > TOL_STRUCT * max(1.0, np.max(np.abs(w))):
            raise ChannelError("generator W lacks the [[X, Y], [conj(Y), conj(X)]] structure")
        if conj_pair_residual(a) > TOL_STRUCT * max(1.0, np.max(np.abs(a), initial=0.0)):
            raise ChannelError("generator vector a is not a conjugate pair")
        object.__setattr__(self, "W", w)
        object.__setattr__(self, "a", a)

    @property
    def modes(self) -> int:
        return self.a.shape[0] // 2


def phi1(x: np.ndarray) -> np.ndarray:
    """``int_0^1 exp(x t) dt``, read off the corner of an augmented exponential; fine for singular ``x``."""
    n = x.shape[0]
    aug = np.zeros((2 * n, 2 * n), dtype=complex)
    aug[:n, :n] = x
    aug[:n, n:] = np.eye(n)
    return expm(aug)[:n, n:]


def channel_from_generator(g: GaussianGenerator, t: float = 1.0) -> GaussianChannel:
    """``S = exp(t iKW)``, ``b = t * phi1(t iKW) a`` (generator scaled by ``t``)."""
    x = 1j * symplectic_form(g.modes) @ g.W * t
    return GaussianChannel(expm(x), t * (phi1(x) @ g.a))


# -- closed-form catalog -----------------------------------------------------


def _rotation_local(theta: float):
    s = np.diag([np.exp(-1j * theta), np.exp(1j * theta)])
    return s, {"theta": np.diag([-1j * np.exp(-1j * theta), 1j * np.exp(1j * theta)])}


def _squeeze_local(r: float, chi: float):
    c, sh, e = np.cosh(r), np.sinh(r), np.exp(1j * chi)
    s = np.array([[c, -e * sh], [-np.conj(e) * sh, c]])
    ds_dr = np.array([[sh, -e * c], [-np.conj(e) * c, sh]])
    ds_dchi = np.array([[0, -1j * e * sh], [1j * np.conj(e) * sh, 0]])
    return s, {"r": ds_dr, "chi": ds_dchi}


def _two_mode_squeeze_local(r: float, chi: float):
    one, grads = _squeeze_local(r, chi)

    def lift(m):
        # [[a, b], [c, d]] on (a1, a2^dag) -> 4x4 pattern on (a1, a2, a1^dag, a2^dag)
        out = np.zeros((4, 4), dtype=complex)
        out[0, 0] = out[1, 1] = m[0, 0]
        out[2, 2] = out[3, 3] = m[1, 1]
        out[0, 3] = out[1, 2] = m[0, 1]
        out[2, 1] = out[3, 0] = m[1, 0]
        return out

    return lift(one), {name: lift(g) for name, g in grads.items()}


def _beam_splitter_local(theta: float, chi: float):
    c, s, e = np.cos(theta), np.sin(theta), np.exp(1j * chi)

    def full(top):
        zero = np.zeros((2, 2))
        return np.block([[top, zero], [zero, np.conj(top)]])

    top = np.array([[c, e * s], [-np.conj(e) * s, c]])
    d_theta = np.array([[-s, e * c], [-np.conj(e) * c, -s]])
    d_chi = np.array([[0, 1j * e * s], [1j * np.conj(e) * s, 0]])
    return full(top), {"theta": full(d_theta), "chi": full(d_chi)}


def _lie_local(kind: str, p: Mapping[str, float]) -> np.ndarray:
    """Lie-algebra element X with ``S_local = exp(X)``."""
    if kind == "rotation":
        return np.diag([-1j * p["theta"], 1j * p["theta"]])
    if kind == "squeeze":
        e = np.exp(1j * p["chi"])
        return p["r"] * np.array([[0, -e], [-np.conj(e), 0]])
    if kind == "two_mode_squeeze":
        e = np.exp(1j * p["chi"])
        x = np.zeros((4, 4), dtype=complex)
        x[0, 3] = x[1, 2] = -e * p["r"]
        x[2, 1] = x[3, 0] = -np.conj(e) * p["r"]
        return x
    if kind == "beam_splitter":
        e = np.exp(1j * p["chi"])
        top = p["theta"] * np.array([[0, e], [-np.conj(e), 0]])
        zero = np.zeros((2, 2))
        return np.block([[top, zero], [zero, np.conj(top)]])
    raise ChannelError(f"no Lie-algebra form for {kind!r}")


def _embedding_index(modes: Sequence[int], n_modes: int) -> np.ndarray:
    modes = list(modes)
    if len(set(modes)) != len(modes):
        raise ChannelError(f"mode indices must be distinct, got {modes}")
    for m in modes:
        if not 0 <= m < n_modes:
            raise ChannelError(f"mode index {m} out of range for {n_modes} modes")
    return np.array(modes + [m + n_modes for m in modes])


def embed(local: np.ndarray, modes: Sequence[int], n_modes: int, fill_identity: bool = True) -> np.ndarray:
    """Place a local complex-form matrix on ``modes`` of an ``n_modes`` system."""
    idx = _embedding_index(modes, n_modes)
    out = np.eye(2 * n_modes, dtype=complex) if fill_identity else np.zeros((2 * n_modes,) * 2, complex)
    out[np.ix_(idx, idx)] = local
    return out


def embed_vector(local: np.ndarray, modes: Sequence[int], n_modes: int) -> np.ndarray:
    idx = _embedding_index(modes, n_modes)
    out = np.zeros(2 * n_modes, dtype=complex)
    out[idx] = local
    return out


def _local(kind: str, p: Mapping[str, float]):
    if kind == "rotation":
        return _rotation_local(p["theta"])
    if kind == "squeeze":
        return _squeeze_local(p["r"], p["chi"])
    if kind == "two_mode_squeeze":
        return _two_mode_squeeze_local(p["r"], p["chi"])
    if kind == "beam_splitter":
        return _beam_splitter_local(p["theta"], p["chi"])
    raise ChannelError(f"unknown closed-form kind {kind!r}")


def _default_modes(kind: str, modes, n_modes):
    if modes is None:
        modes = tuple(range(_ARITY[kind]))
    elif isinstance(modes, (int, np.integer)):
        modes = (int(modes),)
    modes = tuple(int(m) for m in modes)
    if len(modes) != _ARITY[kind]:
        raise ChannelError(f"{kind} acts on {_ARITY[kind]} mode(s), got {modes}")
    if n_modes is None:
        n_modes = max(modes) + 1
    return modes, n_modes


def _catalog(kind: str, p: dict, modes, n_modes) -> GaussianChannel:
    modes, n_modes = _default_modes(kind, modes, n_modes)
    s, _ = _local(kind, p)
    return GaussianChannel(embed(s, modes, n_modes), np.zeros(2 * n_modes))


def rotation(theta: float, modes=None, n_modes: int | None = None) -> GaussianChannel:
    """Phase change ``exp(-i theta a^dag a)``: ``S = diag(e^{-i theta}, e^{i theta})``."""
    return _catalog("rotation", {"theta": theta}, modes, n_modes)


def squeeze(r: float, chi: float = 0.0, modes=None, n_modes: int | None = None) -> GaussianChannel:
    return _catalog("squeeze", {"r": r, "chi": chi}, modes, n_modes)


def two_mode_squeeze(r: float, chi: float = 0.0, modes=None, n_modes: int | None = None) -> GaussianChannel:
    return _catalog("two_mode_squeeze", {"r": r, "chi": chi}, modes, n_modes)


def beam_splitter(theta: float, chi: float = 0.0, modes=None, n_modes: int | None = None) -> GaussianChannel:
    return _catalog("beam_splitter", {"theta": theta, "chi": chi}, modes, n_modes)


def displacement(alphas, modes=None, n_modes: int | None = None) -> GaussianChannel:
    """Weyl displacement: ``S = I``, ``b = (alpha, conj(alpha))`` on the chosen modes."""
    alphas = np.atleast_1d(np.asarray(alphas, dtype=complex))
    if modes is None:
        modes = tuple(range(alphas.shape[0]))
    modes = tuple(np.atleast_1d(modes).tolist())
    if len(modes) != alphas.shape[0]:
        raise ChannelError("one amplitude per displaced mode is required")
    if n_modes is None:
        n_modes = max(modes) + 1
    b = embed_vector(np.concatenate([alphas, np.conj(alphas)]), modes, n_modes)
    return GaussianChannel(np.eye(2 * n_modes), b)


def catalog_generator(kind: str, params: Mapping[str, Any], modes=None, n_modes: int | None = None) -> GaussianGenerator:
    """Generator ``(W, a)`` reproducing a catalog channel through :func:`channel_from_generator`."""
    p = {**{k: _DEFAULTS.get(k) for k in _PARAMS[kind]}, **params}
    if kind == "displacement":
        alphas = np.atleast_1d(np.asarray(p.get("alpha", p["re"] + 1j * p["im"]), dtype=complex))
        ch = displacement(alphas, modes, n_modes)
        return GaussianGenerator(np.zeros_like(ch.S), ch.b)
    modes, n_modes = _default_modes(kind, modes, n_modes)
    x = embed(_lie_local(kind, p), modes, n_modes, fill_identity=False)
    return GaussianGenerator(-1j * symplectic_form(n_modes) @ x, np.zeros(2 * n_modes))


# -- serializable steps ------------------------------------------------------


def _parse_complex_matrix(rows) -> np.ndarray:
    return np.array([[complex(*v) if isinstance(v, (list, tuple)) else complex(v) for v in row] for row in rows])


def _parse_complex_vector(vals) -> np.ndarray:
    return np.array([complex(*v) if isinstance(v, (list, tuple)) else complex(v) for v in vals])


@dataclass(frozen=True)
class ChannelStep:
    """One scenario step; ``params`` values are numbers or estimation-symbol names.

    ``generator`` steps take literal ``W`` (rows of ``[re, im]`` pairs) and
    ``a`` plus an optional scalar ``t`` that scales the whole generator.
    """

    kind: str
    modes: tuple[int, ...]
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ChannelError(f"unknown step kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "modes", tuple(int(m) for m in self.modes))
        allowed = set(_PARAMS[self.kind]) | ({"W", "a"} if self.kind == "generator" else set())
        extra = set(self.params) - allowed
        if extra:
            raise ChannelError(f"{self.kind} step has unknown parameters {sorted(extra)}")
        if self.kind in _ARITY and len(self.modes) != _ARITY[self.kind]:
            raise ChannelError(f"{self.kind} acts on {_ARITY[self.kind]} mode(s), got {list(self.modes)}")
        if self.kind == "generator":
            if "W" not in self.params:
                raise ChannelError("generator step needs a W matrix")
            w = _parse_complex_matrix(self.params["W"])
            if w.shape != (2 * len(self.modes),) * 2:
                raise ChannelError("generator W must be 2m x 2m for m listed modes")

    def symbols(self) -> set[str]:
        return {v for k, v in self.params.items() if isinstance(v, str) and k in _PARAMS[self.kind]}

    def _values(self, values: Mapping[str, float]) -> dict[str, float]:
        out = {}
        for name in _PARAMS[self.kind]:
            raw = self.params.get(name, _DEFAULTS.get(name))
            if raw is None:
                raise ChannelError(f"{self.kind} step is missing parameter {name!r}")
            out[name] = float(values[raw]) if isinstance(raw, str) else float(raw)
        return out

    def _generator_local(self):
        w = _parse_complex_matrix(self.params["W"])
        a = _parse_complex_vector(self.params.get("a", [0.0] * w.shape[0]))
        return w, a

    def channel(self, n_modes: int, values: Mapping[str, float] = {}) -> GaussianChannel:
        p = self._values(values)
        if self.kind == "displacement":
            return displacement(p["re"] + 1j * p["im"], self.modes, n_modes)
        if self.kind == "generator":
            w, a = self._generator_local()
            g = GaussianGenerator(embed(w, self.modes, n_modes, fill_identity=False), embed_vector(a, self.modes, n_modes))
            return channel_from_generator(g, p["t"])
        return _catalog(self.kind, p, self.modes, n_modes)

    def derivative(self, n_modes: int, values: Mapping[str, float], symbol: str) -> tuple[np.ndarray, np.ndarray]:
        """``(dS, db)`` with respect to an estimation symbol (zero if unused)."""
        p = self._values(values)
        bound = [k for k in _PARAMS[self.kind] if self.params.get(k) == symbol]
        ds = np.zeros((2 * n_modes,) * 2, dtype=complex)
        db = np.zeros(2 * n_modes, dtype=complex)
        if not bound:
            return ds, db
        if self.kind == "displacement":
            for name in bound:
                local = np.array([1, 1]) if name == "re" else np.array([1j, -1j])
                db += embed_vector(local, self.modes, n_modes)
            return ds, db
        if self.kind == "generator":
            w, a = self._generator_local()
            x = 1j * symplectic_form(n_modes) @ embed(w, self.modes, n_modes, fill_identity=False)
            s = expm(p["t"] * x)
            return x @ s, s @ embed_vector(a, self.modes, n_modes)
        _, dlocal = _local(self.kind, p)
        for name in bound:
            ds += embed(dlocal[name], self.modes, n_modes, fill_identity=False)
        return ds, db

    def to_dict(self) -> dict:
        return {"kind": self.kind, "modes": list(self.modes), "params": dict(self.params)}

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "ChannelStep":
        try:
            return cls(doc["kind"], tuple(doc.get("modes", [0])), dict(doc.get("params", {})))
        except KeyError as exc:
            raise ChannelError(f"channel step missing field {exc}") from exc


# -- standard states ---------------------------------------------------------


def lambda_from_beta(beta: float) -> float:
    """Symplectic eigenvalue ``coth(beta/2)`` of a thermal mode at inverse temperature ``beta``."""
    return 1.0 / np.tanh(beta / 2.0)


def vacuum(n_modes: int = 1) -> GaussianState:
    return GaussianState(np.zeros(2 * n_modes), np.eye(2 * n_modes))


def thermal(*lambdas: float) -> GaussianState:
    lams = np.atleast_1d(np.asarray(lambdas if len(lambdas) != 1 else lambdas[0], dtype=float))
    if np.any(lams < 1.0):
        raise StateError(f"thermal symplectic eigenvalues must be >= 1, got {lams.tolist()}")
    return GaussianState(np.zeros(2 * lams.shape[0]), np.diag(np.concatenate([lams, lams])))


def coherent(alpha) -> GaussianState:
    alphas = np.atleast_1d(np.asarray(alpha, dtype=complex))
    n = alphas.shape[0]
    return GaussianState(np.concatenate([alphas, np.conj(alphas)]), np.eye(2 * n))


def squeezed_vacuum(r: float, chi: float = 0.0) -> GaussianState:
    return apply(squeeze(r, chi), vacuum(1))


def two_mode_squeezed_vacuum(r: float, chi: float = 0.0) -> GaussianState:
    return apply(two_mode_squeeze(r, chi), vacuum(2))


def keep_index(keep: Sequence[int], n_modes: int) -> np.ndarray:
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise StateError("partial trace needs at least one kept mode")
    return _embedding_index(keep, n_modes)


def partial_trace(st: GaussianState, keep: Sequence[int]) -> GaussianState:
    """Reduced state on ``keep``: delete the traced modes' rows/columns in both blocks."""
    try:
        idx = keep_index(keep, st.modes)
    except ChannelError as exc:
        raise StateError(str(exc)) from exc
    return GaussianState(st.d[idx], st.sigma[np.ix_(idx, idx)])
