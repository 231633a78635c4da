import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaussfisher.gaussian_catalog import apply, squeeze, thermal, two_mode_squeezed_vacuum, vacuum
from gaussfisher.phase_space import (
    GaussianState,
    RealFormState,
    StateError,
    real_symplectic_form,
    real_to_complex_unitary,
    reorder_xpxp,
    reorder_xxpp,
    spectrum_of_k_sigma,
    state_from_dict,
    state_to_dict,
    swap_form,
    symplectic_form,
    to_complex_form,
    to_real_form,
    validate,
    xpxp_permutation,
)

from oracles import random_symplectic


def random_state(rng, n):
    lams = rng.uniform(1.0, 4.0, n)
    s = random_symplectic(rng, n)
    g = rng.normal(size=n) + 1j * rng.normal(size=n)
    sigma = s @ np.diag(np.r_[lams, lams]) @ s.conj().T
    return GaussianState(np.r_[g, g.conj()], 0.5 * (sigma + sigma.conj().T))


def test_vacuum_is_identity():
    v = vacuum(2)
    assert np.array_equal(v.sigma, np.eye(4))
    assert np.allclose(v.symplectic_eigenvalues(), 1.0)


def test_k_relates_to_real_form():
    for n in (1, 2, 3):
        u = real_to_complex_unitary(n)
        assert np.allclose(u @ u.conj().T, np.eye(2 * n))
        assert np.allclose(u @ (1j * real_symplectic_form(n)) @ u.conj().T, symplectic_form(n))


def test_swap_form_conjugates_structured_vectors():
    g = np.array([1 + 2j, -0.5j])
    d = np.r_[g, g.conj()]
    assert np.allclose(swap_form(2) @ d.conj(), d)


@pytest.mark.parametrize(
    "d, sigma, expected",
    [
        (np.zeros(2), np.eye(2), []),
        (np.array([1.0, 2.0]), np.eye(2), ["conjugate_pair"]),
        (np.zeros(2), np.array([[2, 0.1], [0.2, 2]]), ["hermiticity", "block_structure"]),
        (np.zeros(2), 0.5 * np.eye(2), ["physicality"]),
        (np.zeros(2), np.eye(3), ["dimension"]),
        (np.zeros(4), np.diag([1, 2, 1, 3.0]), ["block_structure"]),
    ],
)
def test_validate_flags(d, sigma, expected):
    problems = validate(GaussianState.unchecked(d, sigma))
    assert sorted(problems) == sorted(expected)


def test_constructor_rejects_unphysical():
    with pytest.raises(StateError, match="physicality"):
        GaussianState(np.zeros(2), 0.9 * np.eye(2))
    with pytest.raises(StateError):
        GaussianState(np.zeros(3), np.eye(3))


def test_state_is_read_only():
    st_ = thermal(2.0)
    with pytest.raises(ValueError):
        st_.sigma[0, 0] = 5


def test_spectrum_invariant_under_symplectic_conjugation():
    rng = np.random.default_rng(3)
    for n in (1, 2, 3):
        st_ = random_state(rng, n)
        s = random_symplectic(rng, n)
        moved = s @ st_.sigma @ s.conj().T
        assert np.max(np.abs(spectrum_of_k_sigma(moved) - spectrum_of_k_sigma(st_.sigma))) < 1e-9


def test_spectrum_comes_in_pairs():
    st_ = random_state(np.random.default_rng(0), 2)
    spec = spectrum_of_k_sigma(st_.sigma)
    assert np.allclose(spec[:2], -spec[2:][::-1])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 3), conv=st.sampled_from(["anticommutator", "symmetrized"]))
def test_real_complex_round_trip(seed, n, conv):
    st_ = random_state(np.random.default_rng(seed), n)
    back = to_complex_form(to_real_form(st_, conv), conv)
    assert np.max(np.abs(back.sigma - st_.sigma)) < 1e-10 * max(1, np.max(np.abs(st_.sigma)))
    assert np.max(np.abs(back.d - st_.d)) < 1e-10 * max(1, np.max(np.abs(st_.d)))


def test_symmetrized_convention_halves_covariance():
    st_ = thermal(3.0)
    assert np.allclose(to_real_form(st_, "symmetrized").sigma_r, 1.5 * np.eye(2))
    with pytest.raises(ValueError):
        to_real_form(st_, "weird")


def test_coherent_real_displacement():
    alpha = 0.3 - 1.1j
    st_ = GaussianState([alpha, np.conj(alpha)], np.eye(2))
    assert np.allclose(to_real_form(st_).d_r, np.sqrt(2) * np.array([alpha.real, alpha.imag]))


def test_real_form_is_symmetric_and_symplectic_invariant():
    st_ = random_state(np.random.default_rng(5), 2)
    rs = to_real_form(st_)
    assert np.allclose(rs.sigma_r, rs.sigma_r.T)
    om = real_symplectic_form(2)
    # real-form uncertainty relation sigma_R + i Omega >= 0
    assert np.linalg.eigvalsh(rs.sigma_r + 1j * om).min() > -1e-10


def test_xpxp_reordering():
    p = xpxp_permutation(2)
    assert np.array_equal(p @ np.arange(4), [0, 2, 1, 3])
    rs = to_real_form(two_mode_squeezed_vacuum(0.4))
    assert np.allclose(reorder_xxpp(reorder_xpxp(rs)).sigma_r, rs.sigma_r)
    xp = reorder_xpxp(rs)
    assert xp.ordering == "xpxp"
    assert np.allclose(to_complex_form(xp).sigma, two_mode_squeezed_vacuum(0.4).sigma)


def test_non_real_state_is_rejected_by_real_form():
    bad = GaussianState.unchecked(np.zeros(2), np.array([[1, 0], [0, 2.0]]))
    with pytest.raises(StateError):
        to_real_form(bad)


@pytest.mark.parametrize("form", ["complex", "real-xxpp", "real-xpxp"])
def test_serialization_round_trip(form):
    st_ = random_state(np.random.default_rng(11), 2)
    doc = state_to_dict(st_, form)
    assert doc["modes"] == 2 and doc["form"] == form
    assert all(len(z) == 2 for z in doc["d"])
    back = state_from_dict(doc)
    assert np.max(np.abs(back.sigma - st_.sigma)) < 1e-10 * np.max(np.abs(st_.sigma))


def test_serialization_rejects_malformed():
    with pytest.raises(StateError):
        state_from_dict({"modes": 1, "d": [[0, 0]], "sigma": [[[1, 0]]]})
    with pytest.raises(StateError):
        state_from_dict({"modes": 1, "form": "polar", "d": [], "sigma": []})


def test_real_form_state_checks():
    with pytest.raises(StateError):
        RealFormState(np.zeros(2), np.eye(3))
    with pytest.raises(StateError):
        RealFormState(np.zeros(2), np.eye(2), ordering="ppxx")


def test_squeezed_vacuum_is_pure():
    st_ = apply(squeeze(0.8, 0.4), vacuum(1))
    assert abs(st_.symplectic_eigenvalues()[0] - 1) < 1e-12
