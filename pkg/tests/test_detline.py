import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torsionzeta.detline import (
    AlternatingProduct,
    act_aut,
    alternating_determinant,
    check_abc_multiplicativity,
    check_gamma_axioms,
    contact_model,
    det_graded_iso,
    det_on_cohomology,
    dual_standard_element,
    dual_tau_pairing,
    hermitian_norm,
    koszul_sign,
    laplacian_alternating_det,
    norm_formula_d,
    norm_formula_delta,
    pair_dual,
    rho_gamma,
    rho_section,
    shift_identity_check,
    standard_element,
    tau_d,
    tau_delta,
    torsion_ratio,
    torsion_ratio_formula,
    transported_tau,
)
from torsionzeta.errors import FrameMismatchError, NotExactError, SingularMapError
from torsionzeta.graded_core import (
    Complex,
    GradedMap,
    GradedSpace,
    conjugate,
    direct_sum,
    random_automorphism,
    random_exact_pair,
    random_split_complex,
    regrade,
)

CASES = [((1, 1), 0), ((1, 2, 1), -1), ((2, 3, 1), 2), ((1, 3, 3, 1), 0), ((2, 2), 1), ((1, 1, 2, 2), -2)]


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def test_hand_sections(hand):
    assert tau_d(hand).scalar == pytest.approx(0.5)
    assert tau_delta(hand).scalar == pytest.approx(3.0)
    assert torsion_ratio(hand) == pytest.approx(1.0 / 6.0)


@pytest.mark.parametrize("dims, p", CASES)
def test_torsion_ratio_identities(dims, p):
    c = random_exact_pair(21, dims, p)
    assert rel(torsion_ratio(c), torsion_ratio_formula(c)) <= 1e-9
    assert abs(laplacian_alternating_det(c) - 1.0) <= 1e-9


@given(seed=st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_choice_independence(seed):
    c = random_exact_pair(seed, (1, 2, 2, 1))
    rng = np.random.default_rng(seed)
    base_d, base_delta = tau_d(c).scalar, tau_delta(c).scalar
    for _ in range(10):
        assert rel(tau_d(c, rng).scalar, base_d) <= 1e-9
        assert rel(tau_delta(c, rng).scalar, base_delta) <= 1e-9


@pytest.mark.parametrize("dims, p", CASES)
def test_scaling_law(dims, p):
    c = random_exact_pair(3, dims, p)
    a = 1.7 * np.exp(0.4j)
    scaled = Complex(c.space, c.d * a)
    assert rel(tau_d(scaled).scalar, a ** c.space.chi_prime * tau_d(c).scalar) <= 1e-10


@pytest.mark.parametrize("dims, p", CASES)
def test_aut_equivariance(dims, p):
    c = random_exact_pair(4, dims, p)
    g = random_automorphism(np.random.default_rng(1), c.space)
    moved, det_g = act_aut(g, c)
    assert rel(tau_d(moved).scalar, det_g * tau_d(c).scalar) <= 1e-9
    assert rel(tau_delta(moved).scalar, det_g * tau_delta(c).scalar) <= 1e-9


@pytest.mark.parametrize("shift", [-1, 0, 1, 2])
def test_transport_rule(shift):
    c = random_exact_pair(5, (1, 2, 2, 1))
    g = random_automorphism(np.random.default_rng(shift + 10), c.space)
    f = GradedMap(c.space, c.space.relabel(shift), shift, g.blocks)
    moved = Complex(c.space.relabel(shift), regrade(conjugate(g, c.d), shift))
    assert rel(tau_d(moved, label="E'").scalar, transported_tau(f, tau_d(c).scalar)) <= 1e-9


def test_graded_iso_relates_sections():
    c = random_exact_pair(5, (1, 2, 1))
    g = random_automorphism(np.random.default_rng(4), c.space)
    moved = Complex(c.space, conjugate(g, c.d))
    element = tau_d(c).inverse().tensor(tau_d(moved, label="E'"))
    assert abs(element.ratio(det_graded_iso(g)) - 1.0) <= 1e-9


def test_det_on_cohomology():
    split = random_split_complex(9, (2, 4, 3, 1), harmonic=(1, 2, 1, 0), with_delta=False)
    g = split.commuting_automorphism(np.random.default_rng(2))
    assert rel(det_on_cohomology(g, split.complex), alternating_determinant(g)) <= 1e-9


@pytest.mark.parametrize("dims, p", CASES)
def test_duality_and_shift(dims, p):
    c = random_exact_pair(6, dims, p)
    assert abs(dual_tau_pairing(c) - 1.0) <= 1e-9
    assert abs(shift_identity_check(c) - 1.0) <= 1e-9


@pytest.mark.parametrize("dims, p", CASES)
def test_norm_identities(dims, p):
    c = random_exact_pair(7, dims, p)
    assert rel(hermitian_norm(tau_d(c)) ** 2, norm_formula_d(c)) <= 1e-9
    assert rel(hermitian_norm(tau_delta(c)) ** 2, norm_formula_delta(c)) <= 1e-9


def test_multiplicativity():
    c1 = random_exact_pair(1, (1, 2, 1), p=-1)
    c2 = random_exact_pair(2, (2, 3, 1), p=0)
    whole = direct_sum(c1, c2)
    sign = koszul_sign(c1.space, c2.space)
    assert rel(tau_d(whole).scalar, sign * tau_d(c1).scalar * tau_d(c2).scalar) <= 1e-10
    assert rel(tau_delta(whole).scalar, sign * tau_delta(c1).scalar * tau_delta(c2).scalar) <= 1e-10


def test_koszul_sign():
    e = GradedSpace(0, (1, 1))
    assert koszul_sign(e, e) == -1
    assert koszul_sign(GradedSpace(0, (2, 0)), GradedSpace(0, (0, 2))) == 1


@pytest.mark.parametrize("m", [0, 1, 2])
def test_gamma_theorem(m):
    gs = contact_model(m)
    residuals = check_gamma_axioms(gs)
    assert max(residuals.values()) <= 1e-12
    rho = rho_gamma(gs).scalar
    assert rel(tau_d(gs.complex).scalar, rho) <= 1e-9
    assert rel(tau_delta(gs.complex).scalar, rho) <= 1e-9
    assert max(check_abc_multiplicativity(gs).values()) <= 1e-10


def test_contact_model_dims():
    assert contact_model(1).space.dims == (1, 3, 3, 1)


def test_rho_section_with_representatives():
    split = random_split_complex(3, (2, 3, 1), harmonic=(1, 1, 0), with_delta=False)
    reps = split.representatives
    value = rho_section(split.complex, reps).scalar
    rng = np.random.default_rng(0)
    assert rel(rho_section(split.complex, reps, rng).scalar, value) <= 1e-9
    doubled = {i: 2.0 * h for i, h in reps.items()}
    # degree-0 class doubled contributes 2, degree-1 class 2^{-1}
    assert rel(rho_section(split.complex, doubled).scalar, value) <= 1e-9


def test_not_exact_error_reports_dims():
    split = random_split_complex(3, (2, 3, 1), harmonic=(1, 1, 0), with_delta=False)
    with pytest.raises(NotExactError) as info:
        tau_d(split.complex)
    assert info.value.dims[0] == 1


def test_frame_mismatch():
    a = tau_d(random_exact_pair(1, (1, 1)))
    b = tau_d(random_exact_pair(1, (1, 2, 1)))
    with pytest.raises(FrameMismatchError):
        a.ratio(b)
    with pytest.raises(FrameMismatchError):
        pair_dual(b, b)


def test_standard_elements_pair_to_one():
    space = GradedSpace(-1, (2, 3, 1))
    assert pair_dual(standard_element(space), dual_standard_element(space)) == pytest.approx(1.0)


def test_alternating_product():
    acc = AlternatingProduct()
    acc.add(np.array([[-2.0]]), 1)
    acc.add(np.array([[4.0]]), -1)
    assert acc.value == pytest.approx(-0.5)
    with pytest.raises(SingularMapError):
        acc.add(np.zeros((2, 2)), 1)


def test_empty_top_degree_keeps_hand_value():
    space = GradedSpace(0, (1, 1, 0))
    c = Complex(space, GradedMap(space, space, 1, {0: [[2.0]]}))
    assert tau_d(c).scalar == pytest.approx(0.5)


def test_all_degrees_empty():
    space = GradedSpace(0, (0, 0))
    c = Complex(space, GradedMap(space, space, 1, {}), GradedMap(space, space, -1, {}))
    assert tau_d(c).scalar == pytest.approx(1.0)
    assert tau_delta(c).scalar == pytest.approx(1.0)


@pytest.mark.parametrize("dims, p", [((1, 1, 0), 0), ((0, 1, 1, 0, 2, 2), 0), ((0, 2, 2), -1)])
def test_sections_with_zero_dimensional_degrees(dims, p):
    c = random_exact_pair(11, dims, p)
    rng = np.random.default_rng(5)
    assert rel(tau_d(c, rng).scalar, tau_d(c).scalar) <= 1e-9
    assert rel(torsion_ratio(c), torsion_ratio_formula(c)) <= 1e-9
    assert rel(hermitian_norm(tau_d(c)) ** 2, norm_formula_d(c)) <= 1e-9
    assert abs(dual_tau_pairing(c) - 1.0) <= 1e-9


def test_rho_section_accepts_a_flat_representative():
    split = random_split_complex(3, (2, 3, 1), harmonic=(1, 1, 0), with_delta=False)
    reps = split.representatives
    flat = {0: reps[0][:, 0], 1: reps[1]}
    assert rel(rho_section(split.complex, flat).scalar, rho_section(split.complex, reps).scalar) <= 1e-12
