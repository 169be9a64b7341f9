import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from torsionzeta.errors import InfeasibleDimsError, NotADifferentialError, NotClosedError, StructuralError
from torsionzeta.graded_core import (
    Complex,
    GradedMap,
    GradedSpace,
    as_columns,
    cohomology,
    compose,
    delta_cohomology,
    direct_sum,
    dual_representatives,
    exact_ranks,
    identity,
    number_operator,
    numerical_rank,
    random_exact_complex,
    random_exact_pair,
    random_gluing_complex,
    random_map,
    random_split_complex,
    random_unitary,
    restrict_complex,
    supercommutator,
    supertrace,
    trial_rng,
)


@given(p=st.integers(-3, 3), dims=st.lists(st.integers(0, 6), min_size=1, max_size=6))
@settings(max_examples=60, deadline=None)
def test_parity_bookkeeping(p, dims):
    assert GradedSpace(p, tuple(dims)).parity_bookkeeping_holds()


def test_space_invariants():
    space = GradedSpace(-1, (1, 2, 3))
    assert space.q == 1
    assert space.euler_characteristic == -1 * 1 + 2 - 3
    assert space.chi_prime == (-1) * (-1) * 1 + 0 + (-1) * 1 * 3
    assert space.dual() == GradedSpace(-1, (3, 2, 1))
    assert space.shifted(1) == GradedSpace(-2, (1, 2, 3))
    assert space.offset(1) == 3


def test_graded_map_rejects_bad_block():
    space = GradedSpace(0, (1, 2))
    with pytest.raises(StructuralError):
        GradedMap(space, space, 1, {0: np.ones((1, 1))})


def test_non_differential_rejected():
    space = GradedSpace(0, (1, 1, 1))
    d = GradedMap(space, space, 1, {0: [[1.0]], 1: [[1.0]]})
    with pytest.raises(NotADifferentialError):
        Complex(space, d)


def test_hand_laplacian(hand):
    laplacian = hand.laplacian()
    assert_allclose(laplacian.to_dense(), 6.0 * np.eye(2))


@pytest.mark.parametrize("shift", [0, 1, 2])
def test_supertrace_kills_supercommutators(shift):
    rng = trial_rng(3, shift)
    space = GradedSpace(-1, (2, 3, 1, 2))
    f = random_map(rng, space, space, shift)
    g = random_map(rng, space, space, -shift)
    assert abs(supertrace(supercommutator(f, g))) < 1e-12


def test_number_operator_supertrace():
    space = GradedSpace(0, (1, 2, 1))
    assert supertrace(number_operator(space)) == pytest.approx(0 - 2 + 2)
    assert supertrace(identity(space)) == pytest.approx(space.euler_characteristic)


@pytest.mark.parametrize("dims", [(2, 1), (1, 2), (2, 1, 0, 1)])
def test_infeasible_dims(dims):
    with pytest.raises(InfeasibleDimsError):
        exact_ranks(GradedSpace(0, dims))


@pytest.mark.parametrize("dims, p", [((1, 1), 0), ((1, 2, 1), -1), ((2, 3, 1), 2), ((1, 3, 3, 1), 0)])
def test_random_exact_pair(dims, p):
    c = random_exact_pair(11, dims, p)
    assert cohomology(c).is_exact
    assert delta_cohomology(c).is_exact
    assert c.space.p == p
    assert np.linalg.matrix_rank(c.laplacian().to_dense()) == sum(dims)


def test_random_complexes_are_deterministic():
    first = random_exact_pair(5, (1, 2, 1))
    second = random_exact_pair(5, (1, 2, 1))
    assert np.array_equal(first.d.to_dense(), second.d.to_dense())
    assert np.array_equal(first.delta.to_dense(), second.delta.to_dense())


def test_cohomology_dims_of_split_complex():
    split = random_split_complex(2, (2, 3, 1), harmonic=(1, 1, 0), with_delta=False)
    h = cohomology(split.complex)
    assert h.dims == {0: 1, 1: 1, 2: 0}
    assert h.euler_characteristic == 0
    for i, reps in split.representatives.items():
        if reps.shape[1]:
            assert h.class_of(i, reps).shape == (reps.shape[1], reps.shape[1])


def test_class_of_rejects_non_closed():
    c = random_exact_complex(4, (1, 1))
    h = cohomology(c)
    with pytest.raises(NotClosedError):
        h.class_of(0, np.ones((1, 1)))


def test_gluing_complex_representatives_are_harmonic():
    split = random_gluing_complex(8, (2, 3, 1), (0, 1, 1))
    c = split.complex
    for i, reps in split.representatives.items():
        if not reps.shape[1]:
            continue
        if c.space.contains(i + 1):
            assert np.linalg.norm(c.d.block(i) @ reps) < 1e-9
        assert np.linalg.norm(c.laplacian().block(i) @ reps) < 1e-9
    assert delta_cohomology(c).is_exact


def test_commuting_automorphism():
    split = random_split_complex(6, (2, 3, 2), harmonic=(1, 1, 1), with_delta=False)
    g = split.commuting_automorphism(np.random.default_rng(0))
    d = split.complex.d
    assert (compose(g, d) - compose(d, g)).norm() < 1e-9 * max(1.0, g.norm() * d.norm())


def test_restrict_to_whole_space():
    c = random_exact_pair(1, (1, 2, 1))
    bases = {i: np.eye(c.space.dim(i)) for i in c.space.degrees}
    restricted = restrict_complex(c, bases)
    assert_allclose(restricted.d.to_dense(), c.d.to_dense(), atol=1e-12)


def test_direct_sum_and_dual():
    c1 = random_exact_pair(1, (1, 1), p=0)
    c2 = random_exact_pair(2, (1, 2, 1), p=-1)
    total = direct_sum(c1, c2)
    assert total.space == GradedSpace(-1, (1, 3, 2))
    dual = c2.dual()
    assert dual.space == GradedSpace(-1, (1, 2, 1))
    assert compose(dual.d, dual.d).norm() <= 1e-10 * dual.d.norm() ** 2


def test_random_unitary():
    space = GradedSpace(0, (0, 3, 2))
    u = random_unitary(np.random.default_rng(1), space)
    for i in space.degrees:
        block = u.block(i)
        assert_allclose(block.conj().T @ block, np.eye(space.dim(i)), atol=1e-12)


def test_numerical_rank_floors():
    assert numerical_rank(np.array([[1e-17]])) == 0
    assert numerical_rank(np.array([[1e-6]])) == 1
    assert numerical_rank(np.array([[1e-12]])) == 1
    assert numerical_rank(np.array([[1e-12]]), scale=10.0) == 0
    assert numerical_rank(np.zeros((3, 0))) == 0


def test_tiny_differential_is_accepted():
    space = GradedSpace(0, (1, 1, 1))
    d = GradedMap(space, space, 1, {0: [[1e-14]], 1: [[1e-14]]})
    assert Complex(space, d).d is d


def test_restriction_drops_roundoff():
    space = GradedSpace(0, (2, 2))
    d = GradedMap(space, space, 1, {0: np.diag([1.0, 1e-17])})
    e2 = np.array([[0.0], [1.0]], dtype=complex)
    restricted = restrict_complex(Complex(space, d), {0: e2, 1: e2})
    assert not np.any(restricted.d.block(0))
    assert cohomology(restricted).dims == {0: 1, 1: 1}


@pytest.mark.parametrize("dims", [(1, 1, 0), (0, 1, 1, 0, 2, 2), (0, 0)])
def test_zero_dimensional_degrees(dims):
    c = random_exact_pair(2, dims)
    assert cohomology(c).is_exact
    assert delta_cohomology(c).is_exact
    assert c.laplacian().block(0).shape == (dims[0], dims[0])


def test_as_columns():
    assert as_columns([1.0, 2.0], 2).shape == (2, 1)
    assert as_columns(np.zeros(0), 0).shape == (0, 0)
    assert as_columns(np.zeros((0, 0)), 0).shape == (0, 0)
    with pytest.raises(StructuralError):
        as_columns(np.zeros((3, 1)), 2)


def test_dual_representatives_pair_to_identity():
    split = random_split_complex(3, (2, 3, 1), harmonic=(1, 1, 0), with_delta=False)
    c, reps = split.complex, split.representatives
    dual = dual_representatives(c, reps)
    dual_c = c.dual()
    for i in c.space.degrees:
        h, h_star = reps[i], dual[-i]
        assert h_star.shape == h.shape
        assert_allclose(h_star.T @ h, np.eye(h.shape[1]), atol=1e-10)
        if h.shape[1] and dual_c.space.contains(-i + 1):
            assert np.linalg.norm(dual_c.require_d().block(-i) @ h_star) <= 1e-10
