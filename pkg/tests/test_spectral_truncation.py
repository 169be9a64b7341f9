import numpy as np
import pytest

from torsionzeta.errors import CutoffOnSpectrumError, StructuralError, ZetaSingularityError
from torsionzeta.graded_core import GradedMap, GradedSpace, compose, random_exact_pair, random_gluing_complex
from torsionzeta.spectral_truncation import (
    admissible_cutoffs,
    band_decomposition,
    band_section_identity,
    check_cutoff,
    dual_glued_relation,
    eigenvalue_clusters,
    glue_across_cutoffs,
    glued_section,
    outside,
    spectral_split,
    spectral_subspace,
    truncated_dim_alternating_sum,
    truncated_homotopy_residual,
    truncated_zeta,
    zeta_order_at,
)
from torsionzeta.variation_forms import homotopy_from_metric

GLUING_CASES = [(8, (2, 3, 1), (0, 1, 1)), (4, (1, 2, 1), (0, 0, 0)), (5, (1, 3, 3, 1), (0, 1, 1, 0))]


def test_hand_glue_at_two_cutoffs(hand):
    report = glue_across_cutoffs(hand, [1.0, 10.0])
    assert not report.rejections
    for value in report.values.values():
        assert value == pytest.approx(1.0 / 6.0, rel=1e-12)
    assert report.spread <= 1e-12


def test_hand_glued_pieces(hand):
    low = glued_section(hand, 1.0)
    assert low.truncated_dims == (0, 0)
    assert low.zeta_above == pytest.approx(1.0 / 6.0)
    high = glued_section(hand, 10.0)
    assert high.truncated_dims == (1, 1)
    assert high.zeta_above == pytest.approx(1.0)
    assert high.relative_error <= 1e-12


def test_hand_spectrum(hand):
    clusters = eigenvalue_clusters(hand.laplacian())
    assert len(clusters) == 1
    assert clusters[0].value == pytest.approx(6.0)
    assert clusters[0].multiplicities == {0: 1, 1: 1}
    assert zeta_order_at(hand.laplacian(), 6.0) == -1
    assert zeta_order_at(hand.laplacian(), 5.0) == 0


def test_cutoff_on_spectrum_rejected(hand):
    with pytest.raises(CutoffOnSpectrumError) as info:
        check_cutoff(hand.laplacian(), 6.0)
    assert info.value.eigenvalue == pytest.approx(6.0)
    with pytest.raises(StructuralError):
        check_cutoff(hand.laplacian(), 0.0)
    report = glue_across_cutoffs(hand, [1.0, 6.0])
    assert 6.0 in report.rejections
    assert list(report.values) == [1.0]


def test_truncated_zeta_singularity(hand):
    op = hand.laplacian()
    sub = spectral_subspace(op, outside(1.0))
    assert truncated_zeta(op, sub) == pytest.approx(1.0 / 6.0)
    with pytest.raises(ZetaSingularityError) as info:
        truncated_zeta(op, sub, -6.0)
    assert info.value.order == -1


def test_admissible_cutoffs_for_hand(hand):
    assert admissible_cutoffs(hand.laplacian(), 3) == pytest.approx([3.0, 12.0, 18.0])


def test_spectral_data_needs_degree_zero(hand):
    with pytest.raises(StructuralError):
        spectral_split(hand.require_d(), 1.0)
    with pytest.raises(StructuralError):
        band_decomposition(hand.laplacian(), 2.0, 1.0)


@pytest.mark.parametrize("seed, dims, harmonic", GLUING_CASES)
def test_glued_section_is_cutoff_independent(seed, dims, harmonic):
    split = random_gluing_complex(seed, dims, harmonic)
    c = split.complex
    cutoffs = admissible_cutoffs(c.laplacian(), 4)
    assert len(cutoffs) >= 3
    report = glue_across_cutoffs(c, cutoffs, split.representatives)
    assert not report.rejections
    assert report.spread <= 1e-7
    for value in report.values.values():
        assert abs(value - report.direct) <= 1e-7 * abs(report.direct)


@pytest.mark.parametrize("seed, dims, harmonic", GLUING_CASES)
def test_projectors(seed, dims, harmonic):
    split = random_gluing_complex(seed, dims, harmonic)
    c = split.complex
    op = c.laplacian()
    for a in admissible_cutoffs(op, 3):
        s = spectral_split(op, a)
        assert s.idempotency_residual() <= 1e-8
        assert s.commutation_residual(c.require_d()) <= 1e-8
        assert s.commutation_residual(c.require_delta()) <= 1e-8
        assert s.rank_additivity_holds()
        assert (compose(s.p_above, s.p_above) - s.p_above).norm() <= 1e-8
        # harmonic dims always carry an exact δ, so χ(H) = 0
        assert truncated_dim_alternating_sum(s) == 0
        assert truncated_homotopy_residual(s, homotopy_from_metric(c.require_delta())) <= 1e-8


def test_zeta_orders_match_multiplicities():
    c = random_exact_pair(12, (1, 3, 3, 1))
    op = c.laplacian()
    for cluster in eigenvalue_clusters(op):
        expected = sum((-1) ** i * i * m for i, m in cluster.multiplicities.items())
        assert zeta_order_at(op, cluster.value) == expected


@pytest.mark.parametrize("seed, dims, p", [(2, (1, 2, 1), 0), (3, (1, 2, 2, 1), -1), (6, (2, 3, 1), 1)])
def test_band_identities(seed, dims, p):
    c = random_exact_pair(seed, dims, p)
    cutoffs = admissible_cutoffs(c.laplacian(), 3)
    report = band_section_identity(c, cutoffs[0], cutoffs[-1])
    assert len(report) == 2
    assert max(report.values()) <= 1e-8


@pytest.mark.parametrize("seed, dims", [(3, (1, 1)), (4, (1, 2, 1)), (5, (1, 2, 2, 1))])
def test_dual_glued_relation(seed, dims):
    c = random_exact_pair(seed, dims)
    assert dual_glued_relation(c, admissible_cutoffs(c.laplacian(), 3)) <= 1e-8


def test_band_on_hand_complex(hand):
    bands = band_decomposition(hand.laplacian(), 1.0, 10.0)
    assert bands.below.rank == 0
    assert bands.band.rank == 2
    assert bands.above.rank == 0
    assert np.allclose(bands.band.eigenvalues[0], [6.0])


@pytest.mark.parametrize("seed, dims", [(4, (1, 2, 1)), (7, (2, 3, 1)), (9, (0, 1, 1, 0, 2, 2))])
def test_empty_low_band(seed, dims):
    c = random_exact_pair(seed, dims)
    a = admissible_cutoffs(c.laplacian(), 3)[0]
    glued = glued_section(c, a)
    assert glued.truncated_dims == (0,) * len(dims)
    assert glued.relative_error <= 1e-9


def test_low_band_of_harmonic_chains_only():
    split = random_gluing_complex(5, (1, 3, 3, 1), (0, 1, 1, 0))
    c = split.complex
    a = admissible_cutoffs(c.laplacian(), 3)[0]
    glued = glued_section(c, a, split.representatives)
    assert glued.truncated_dims == (0, 1, 1, 0)
    assert glued.relative_error <= 1e-8


@pytest.mark.parametrize("seed, dims, harmonic", GLUING_CASES)
def test_band_identities_with_cohomology(seed, dims, harmonic):
    c = random_gluing_complex(seed, dims, harmonic).complex
    cutoffs = admissible_cutoffs(c.laplacian(), 3)
    assert max(band_section_identity(c, cutoffs[0], cutoffs[-1]).values()) <= 1e-8


@pytest.mark.parametrize("seed, dims, harmonic", GLUING_CASES)
def test_dual_glued_relation_with_cohomology(seed, dims, harmonic):
    split = random_gluing_complex(seed, dims, harmonic)
    c = split.complex
    cutoffs = admissible_cutoffs(c.laplacian(), 3)
    assert dual_glued_relation(c, cutoffs, split.representatives) <= 1e-8


def test_degree_zero_eigenvalue_is_not_singular():
    space = GradedSpace(0, (1, 1))
    op = GradedMap(space, space, 0, {0: [[2.0]], 1: [[5.0]]})
    sub = spectral_subspace(op, outside(0.5))
    assert truncated_zeta(op, sub, -2.0) == pytest.approx(1.0 / 3.0)
    with pytest.raises(ZetaSingularityError) as info:
        truncated_zeta(op, sub, -5.0)
    assert info.value.order == -1
