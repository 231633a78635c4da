import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaussfisher import qfim as Q
from gaussfisher import sld as L
from gaussfisher.family import InitialState, catalog_family, constant_family, evaluate_bundle
from gaussfisher.gaussian_catalog import ChannelStep, thermal
from gaussfisher.phase_space import symplectic_form

import oracles


def squeezed_thermal_bundle(lam, r):
    return evaluate_bundle(oracles.squeezed_thermal_family(), [oracles.beta_of(lam), r])


def test_constant_family_has_zero_sld():
    b = evaluate_bundle(constant_family(thermal(2.0)), [0.0])
    for method in ("mixed", "williamson"):
        (c,) = L.sld(b, method)
        assert np.allclose(c.quad, 0) and np.allclose(c.lin, 0) and c.scalar == 0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_defining_equation_and_structure(seed):
    family, eps = oracles.random_mixed_family(np.random.default_rng(seed))
    b = evaluate_bundle(family, eps)
    mixed, wil = L.sld_mixed(b), L.sld_williamson(b)
    for cm, cw, ds in zip(mixed, wil, b.dsigma):
        assert cm.residual(b.sigma, ds) <= 1e-8
        assert cw.residual(b.sigma, ds) <= 1e-8
        assert cm.structure_residual() <= 1e-9 * max(1, np.max(np.abs(cm.quad)))
        assert np.allclose(cm.quad, cw.quad, atol=1e-8)
        assert np.allclose(cm.scalar, cw.scalar, atol=1e-8)
    h = Q.qfim_mixed(b).H
    assert np.max(np.abs(L.qfim_from_sld(b, mixed) - h)) <= 1e-8
    assert np.max(np.abs(L.qfim_from_sld(b, wil) - Q.qfim_williamson(b).H)) <= 1e-8


def test_series_oracle_matches_stein_solution():
    rng = np.random.default_rng(8)
    for _ in range(10):
        family, eps = oracles.random_mixed_family(rng)
        b = evaluate_bundle(family, eps)
        k = symplectic_form(b.modes)
        a = k @ b.sigma
        das = [k @ ds for ds in b.dsigma]
        terms = Q.select_terms(a, das, float(b.spectrum.min()), 1e-13)
        for c, ds in zip(L.sld_mixed(b), b.dsigma):
            assert np.allclose(oracles.series_sld_quad(b.sigma, ds, terms), c.quad, atol=1e-9)


def test_thermal_only_family():
    fam = catalog_family(InitialState("thermal", 2, {"lambdas": ["a", 3.0]}), [], ["a"])
    b = evaluate_bundle(fam, [2.0])
    (c,) = L.sld_williamson(b)
    assert np.allclose(c.quad, np.diag([1 / 3, 0, 1 / 3, 0]))
    assert np.isclose(c.scalar, -2.0 / 3.0)
    (m,) = L.sld_mixed(b)
    assert np.allclose(m.quad, c.quad) and np.isclose(m.scalar, c.scalar)


def test_pure_sld_properties():
    b = evaluate_bundle(oracles.tmsv_family(), [0.4])
    (c,) = L.sld_pure(b)
    assert c.scalar == 0.0
    assert c.structure_residual() < 1e-12
    k = symplectic_form(2)
    sigma_inv = k @ b.sigma @ k
    # for a pure state sigma^-1 dsigma sigma^-1 = -K dsigma K
    assert np.allclose(c.quad, 0.5 * sigma_inv @ b.dsigma[0] @ sigma_inv, atol=1e-12)
    assert np.allclose(c.quad, -0.5 * k @ b.dsigma[0] @ k, atol=1e-12)
    assert np.isclose(L.qfim_from_sld(b, [c])[0, 0], 4.0)


def test_displacement_only_family():
    fam = catalog_family(InitialState("vacuum", 1), [ChannelStep("displacement", (0,), {"re": "x", "im": "y"})], ["x", "y"])
    b = evaluate_bundle(fam, [0.3, -0.2])
    for c, dd in zip(L.sld_pure(b), b.dd):
        assert np.allclose(c.quad, 0)
        assert np.allclose(c.lin, 2 * dd)
    assert np.allclose(Q.qfim_pure(b).H, 4 * np.eye(2))


def test_regularized_sld_converges_to_pure():
    b = evaluate_bundle(oracles.coherent_squeeze_phase_family(0.4 + 0.3j), [0.5, 0.2])
    for reg, pure, wil in zip(L.sld_regularized(b), L.sld_pure(b), L.sld_williamson(b)):
        assert np.allclose(reg.quad, pure.quad, atol=1e-7)
        assert abs(reg.scalar) < 1e-7
        assert np.allclose(wil.quad, pure.quad, atol=1e-9)


def test_squeezed_thermal_is_saturable():
    b = squeezed_thermal_bundle(2.0, 1.0)
    for method in ("mixed", "williamson", "regularized"):
        rep = L.saturability(b, method)
        assert rep.saturable and np.max(np.abs(rep.C)) <= 1e-9


def test_example2_commutator():
    alpha = 0.3 - 0.7j
    fam = oracles.coherent_squeeze_phase_family(alpha)
    for r, th in [(0.4, 0.9), (-0.3, 2.0), (0.0, 0.0)]:
        b = evaluate_bundle(fam, [r, th])
        expected = oracles.example2_commutator_rederived(alpha, r)
        for method in ("williamson", "pure", "regularized"):
            rep = L.saturability(b, method)
            assert abs(rep.C[0, 1] - expected) <= 1e-8 * max(1, abs(expected)), method
            assert not rep.saturable
    _, c_fock = oracles.fock_pure_metrics(0.4, 0.9, alpha)
    b = evaluate_bundle(fam, [0.4, 0.9])
    assert abs(L.saturability(b, "williamson").C[0, 1] - c_fock[0, 1]) < 1e-6


def test_target_example2_commutator_differs_only_by_displacement_sign():
    # without displacement the two expressions coincide
    assert oracles.example2_commutator_target(0j, 0.7) == oracles.example2_commutator_rederived(0j, 0.7)
    assert oracles.example2_commutator_target(0.5 + 0.5j, 0.7) != oracles.example2_commutator_rederived(0.5 + 0.5j, 0.7)


def test_single_parameter_is_always_saturable():
    b = evaluate_bundle(oracles.tmsv_family(keep=[0]), [0.3])
    rep = L.saturability(b)
    assert rep.C.shape == (1, 1) and rep.C[0, 0] == 0 and rep.saturable


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_commutator_structure_and_route_agreement(seed):
    family, eps = oracles.random_mixed_family(np.random.default_rng(seed))
    b = evaluate_bundle(family, eps)
    cm = L.saturability(b, "mixed").C
    cw = L.saturability(b, "williamson").C
    scale = max(1, np.max(np.abs(cm)))
    assert np.all(np.diag(cm) == 0)
    assert np.max(np.abs(cm + cm.T)) <= 1e-9 * scale
    assert np.max(np.abs(cm.real)) <= 1e-9 * scale
    assert np.max(np.abs(cm - cw)) <= 1e-8 * scale


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_pure_commutator_matches_regularized(seed):
    family, eps = oracles.random_pure_family(np.random.default_rng(seed))
    b = evaluate_bundle(family, eps)
    cp = L.saturability(b, "pure").C
    cr = L.saturability(b, "regularized").C
    cw = L.saturability(b, "williamson").C
    scale = max(1, np.max(np.abs(cp)))
    assert np.max(np.abs(cp - cr)) <= 1e-7 * scale
    assert np.max(np.abs(cp - cw)) <= 1e-8 * scale
    assert np.allclose(L.qfim_from_sld(b, L.sld_pure(b)), Q.qfim_pure(b).H, atol=1e-8)
    for pure, reg in zip(L.sld_pure(b), L.sld_regularized(b)):
        assert np.allclose(pure.quad, reg.quad, atol=1e-6 * max(1, np.max(np.abs(pure.quad))))


def test_normal_form_pairs():
    b = squeezed_thermal_bundle(2.0, 0.5)
    for c in L.sld_mixed(b):
        w = L.sld_normal_form(c)
        assert np.allclose(np.sort_complex(w), np.sort_complex(-w), atol=1e-10)


def test_unknown_methods_and_preconditions():
    b = squeezed_thermal_bundle(2.0, 0.5)
    with pytest.raises(Q.QfimError):
        L.sld(b, "bogus")
    with pytest.raises(Q.QfimError):
        L.saturability(b, "bogus")
    with pytest.raises(Q.QfimError):
        L.sld_pure(b)
    with pytest.raises(Q.PureModeError):
        L.sld_mixed(evaluate_bundle(oracles.tmsv_family(), [0.2]))
    with pytest.raises(Q.QfimError):
        L.sld_williamson(evaluate_bundle(oracles.tmsv_family(keep=[0]), [0.2]))


def test_serialization():
    b = squeezed_thermal_bundle(2.0, 0.5)
    doc = L.sld_mixed(b)[0].to_dict()
    assert len(doc["quad"]) == 2 and len(doc["quad"][0][0]) == 2
    rep = L.saturability(b).to_dict()
    assert rep["saturable"] is True and rep["method"] == "mixed"
