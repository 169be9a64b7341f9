"""
Spectral Truncation
Cutoff decompositions of a degree-0 operator commuting with d and δ, truncated
sections and zeta factors, and the cutoff-independent glued section.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence

import numpy as np
from scipy import linalg

from .config import NumericsConfig, get_system_config
from .detline import AlternatingProduct, koszul_sign, rho_section, tau_d, tau_delta
from .errors import (
    BandNotInvertibleError,
    CutoffOnSpectrumError,
    StructuralError,
    TorsionZetaError,
    ZetaSingularityError,
)
from .graded_core import (
    Complex,
    GradedMap,
    GradedSpace,
    as_columns,
    compose,
    dual_representatives,
    identity,
    number_operator,
    restrict_complex,
    sign,
    supercommutator,
    supertrace,
)
from .variation_forms import Homotopy

logger = logging.getLogger(__name__)

Selector = Callable[[complex], bool]


def _numerics(numerics: Optional[NumericsConfig]) -> NumericsConfig:
    return numerics if numerics is not None else get_system_config().numerics


def _require_degree_zero(op: GradedMap):
    if op.shift != 0 or op.source != op.target:
        raise StructuralError("spectral data needs a degree-0 endomorphism")


def spectrum(op: GradedMap) -> Dict[int, np.ndarray]:
    """Eigenvalues per degree"""
    _require_degree_zero(op)
    return {i: linalg.eigvals(b) if b.size else np.zeros(0, dtype=complex) for i, b in op.blocks.items()}


@dataclass(frozen=True)
class EigenCluster:
    value: complex
    multiplicities: Dict[int, int]
    below: Optional[bool] = None


def eigenvalue_clusters(op: GradedMap, numerics: Optional[NumericsConfig] = None) -> List[EigenCluster]:
    """Group eigenvalues of all degrees whose distance is below cluster_rtol · max(1, ρ(op))"""
    eigs = spectrum(op)
    radius = max((float(np.max(np.abs(v))) for v in eigs.values() if v.size), default=0.0)
    tol = _numerics(numerics).cluster_rtol * max(1.0, radius)
    members: List[List] = []
    for i in sorted(eigs):
        for value in eigs[i]:
            for cluster in members:
                if abs(cluster[0] - value) <= tol:
                    cluster[1].append((i, value))
                    break
            else:
                members.append([value, [(i, value)]])
    clusters = []
    for _, entries in members:
        counts: Dict[int, int] = {}
        for i, _value in entries:
            counts[i] = counts.get(i, 0) + 1
        clusters.append(EigenCluster(complex(np.mean([v for _, v in entries])), counts))
    return clusters


@dataclass(frozen=True, eq=False)
class SpectralSubspace:
    """Generalized eigenspace for a selector: orthonormal bases per degree and the spectral projector"""

    space: GradedSpace
    bases: Dict[int, np.ndarray]
    projector: GradedMap
    eigenvalues: Dict[int, np.ndarray]

    @property
    def dims(self) -> GradedSpace:
        return GradedSpace(self.space.p, tuple(self.bases[i].shape[1] for i in self.space.degrees))

    @property
    def rank(self) -> int:
        return self.dims.total_dim

    def coordinates(self, i: int, vectors: np.ndarray) -> np.ndarray:
        return self.bases[i].conj().T @ vectors

    def restrict(self, op: GradedMap) -> GradedMap:
        """Coordinates of an operator preserving the subspace"""
        sub = self.dims
        return GradedMap(sub, sub, op.shift, {
            i: self.bases[i + op.shift].conj().T @ op.block(i) @ self.bases[i]
            for i in sub.degrees if sub.contains(i + op.shift)
        })


def _schur_block(matrix: np.ndarray, selector: Selector):
    n = matrix.shape[0]
    if n == 0:
        empty = np.zeros((0, 0), dtype=complex)
        return empty, empty, np.zeros(0, dtype=complex)
    t, z, k = linalg.schur(matrix.astype(complex), output="complex", sort=selector)
    if k == 0:
        return np.zeros((n, 0), dtype=complex), np.zeros((n, n), dtype=complex), np.zeros(0, dtype=complex)
    if k == n:
        return z, np.eye(n, dtype=complex), np.diag(t).copy()
    t11, t12, t22 = t[:k, :k], t[:k, k:], t[k:, k:]
    x = linalg.solve_sylvester(t11, -t22, -t12)
    reduced = np.zeros((n, n), dtype=complex)
    reduced[:k, :k] = np.eye(k)
    reduced[:k, k:] = -x
    return z[:, :k], z @ reduced @ z.conj().T, np.diag(t11).copy()


def spectral_subspace(op: GradedMap, selector: Selector) -> SpectralSubspace:
    """Invariant subspace of the eigenvalues accepted by `selector`, via ordered Schur forms"""
    _require_degree_zero(op)
    bases, projections, eigenvalues = {}, {}, {}
    for i in op.source.degrees:
        bases[i], projections[i], eigenvalues[i] = _schur_block(op.block(i), selector)
    projector = GradedMap(op.source, op.source, 0, projections)
    return SpectralSubspace(op.source, bases, projector, eigenvalues)


def disk(a: float) -> Selector:
    return lambda z: abs(z) < a


def annulus(a: float, b: float) -> Selector:
    return lambda z: a < abs(z) < b


def outside(a: float) -> Selector:
    return lambda z: abs(z) > a


def point(z0: complex, tol: float) -> Selector:
    return lambda z: abs(z - z0) <= tol


def check_cutoff(op: GradedMap, a: float, numerics: Optional[NumericsConfig] = None):
    """Raise CutoffOnSpectrumError when an eigenvalue sits on the ring |z| = a"""
    if a <= 0:
        raise StructuralError(f"cutoff must be positive, got {a}")
    values = np.concatenate([v for v in spectrum(op).values()] or [np.zeros(0)])
    if not values.size:
        return
    scale = max(float(np.max(np.abs(values))), 1e-300)
    distances = np.abs(np.abs(values) - a)
    worst = int(np.argmin(distances))
    if distances[worst] < _numerics(numerics).ring_rtol * scale:
        raise CutoffOnSpectrumError(values[worst], a)


@dataclass(frozen=True, eq=False)
class SpectralSplit:
    """E = E_{<a} ⊕ E_{>a} for the eigenvalue moduli of L"""

    op: GradedMap
    cutoff: float
    below: SpectralSubspace
    above: SpectralSubspace
    clusters: List[EigenCluster] = field(default_factory=list)

    @property
    def p_below(self) -> GradedMap:
        return self.below.projector

    @property
    def p_above(self) -> GradedMap:
        return identity(self.op.source) - self.below.projector

    def idempotency_residual(self) -> float:
        return (compose(self.p_below, self.p_below) - self.p_below).norm()

    def commutation_residual(self, f: GradedMap) -> float:
        """‖[P_{<a}, f]‖ relative to ‖f‖"""
        return supercommutator(self.p_below, f).norm() / max(f.norm(), 1e-300)

    def rank_additivity_holds(self) -> bool:
        return self.below.rank + self.above.rank == self.op.source.total_dim


def spectral_split(op: GradedMap, a: float, numerics: Optional[NumericsConfig] = None) -> SpectralSplit:
    """
    Split by |λ| < a and |λ| > a

    Args:
        op: degree-0 operator, usually L = [d, δ]
        a: positive cutoff away from the spectrum moduli

    Returns:
        SpectralSplit with both projectors and the clustered spectrum
    """
    check_cutoff(op, a, numerics)
    clusters = [
        EigenCluster(c.value, c.multiplicities, abs(c.value) < a)
        for c in eigenvalue_clusters(op, numerics)
    ]
    return SpectralSplit(op, float(a), spectral_subspace(op, disk(a)), spectral_subspace(op, outside(a)), clusters)


@dataclass(frozen=True, eq=False)
class BandDecomposition:
    """E_{<b} = E_{<a} ⊕ E_{(a,b)} together with E_{>b}"""

    op: GradedMap
    a: float
    b: float
    below: SpectralSubspace
    band: SpectralSubspace
    above: SpectralSubspace
    below_b: SpectralSubspace


def band_decomposition(op: GradedMap, a: float, b: float,
                       numerics: Optional[NumericsConfig] = None) -> BandDecomposition:
    if not a < b:
        raise StructuralError(f"band needs a < b, got ({a}, {b})")
    check_cutoff(op, a, numerics)
    check_cutoff(op, b, numerics)
    return BandDecomposition(op, float(a), float(b), spectral_subspace(op, disk(a)),
                             spectral_subspace(op, annulus(a, b)), spectral_subspace(op, outside(b)),
                             spectral_subspace(op, disk(b)))


def truncated_homotopy(split: SpectralSplit, homotopy: Homotopy) -> GradedMap:
    """k_{<a} = P_{<a} k P_{<a}"""
    p = split.p_below
    return compose(compose(p, homotopy.alpha), p)


def truncated_homotopy_residual(split: SpectralSplit, homotopy: Homotopy) -> float:
    """‖[δ, k_{<a}] - P_{<a}‖, zero when (E_{<a}, δ) is exact"""
    k_below = truncated_homotopy(split, homotopy)
    return (supercommutator(homotopy.delta, k_below) - split.p_below).norm()


def _order_on(sub: SpectralSubspace, z0: complex, tol: float) -> int:
    return sum(sign(i) * i * int(np.sum(np.abs(values - z0) <= tol)) for i, values in sub.eigenvalues.items())


def truncated_zeta(op: GradedMap, sub: SpectralSubspace, sigma: complex = 0.0,
                   numerics: Optional[NumericsConfig] = None) -> complex:
    """∏ det((L + σ)|_{sub ∩ E^i})^{(-1)^i i}; an empty band gives 1"""
    restricted = sub.restrict(op)
    radius = max((float(np.max(np.abs(v))) for v in sub.eigenvalues.values() if v.size), default=0.0)
    tol = _numerics(numerics).cluster_rtol * max(1.0, radius)
    # degree 0 carries exponent 0
    weighted = {i: values for i, values in sub.eigenvalues.items() if i != 0}
    if any(np.any(np.abs(values + sigma) <= tol) for values in weighted.values()):
        raise ZetaSingularityError(_order_on(sub, -sigma, tol), sigma)
    acc = AlternatingProduct()
    for i in restricted.source.degrees:
        if i == 0:
            continue
        block = restricted.block(i)
        acc.add(block + sigma * np.eye(block.shape[0]), sign(i) * i, where=f"in degree {i}")
    return acc.value


def zeta_order_at(op: GradedMap, z0: complex, numerics: Optional[NumericsConfig] = None) -> int:
    """
    Order of ∏ det((L + σ)|_{E^i})^{(-1)^i i} at σ = -z0 (zero when z0 is not an eigenvalue)

    Cross-checked against round(Trs[N P_{z0}]); disagreement raises StructuralError.
    """
    clusters = eigenvalue_clusters(op, numerics)
    radius = max((abs(c.value) for c in clusters), default=0.0)
    tol = _numerics(numerics).cluster_rtol * max(1.0, radius)
    order = 0
    for cluster in clusters:
        if abs(cluster.value - z0) <= tol:
            order = sum(sign(i) * i * m for i, m in cluster.multiplicities.items())
    projector = spectral_subspace(op, point(z0, tol)).projector
    traced = supertrace(compose(number_operator(op.source), projector))
    if round(traced.real) != order or abs(traced - order) > 1e-6:
        raise StructuralError(f"order {order} disagrees with Trs[N P] = {traced}")
    return order


# ---------------------------------------------------------------------------
# Glued sections
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GluedSection:
    cutoff: float
    value: complex
    direct: complex
    truncated_dims: tuple
    zeta_above: complex

    @property
    def relative_error(self) -> float:
        return abs(self.value - self.direct) / max(abs(self.direct), 1e-300)


def _require_commuting(c: Complex, op: GradedMap, rtol: float = 1e-8):
    for name, f in (("d", c.d), ("δ", c.delta)):
        if f is None:
            continue
        residual = supercommutator(op, f).norm()
        if residual > rtol * max(op.norm() * f.norm(), 1e-300):
            raise StructuralError(f"L does not commute with {name} (‖[L,{name}]‖ = {residual:.3e})")


def glued_section(c: Complex, a: float, representatives: Optional[Mapping[int, np.ndarray]] = None,
                  numerics: Optional[NumericsConfig] = None) -> GluedSection:
    """
    [ρh]_{det E,δ} computed through the cutoff a

    Args:
        c: complex with d and exact δ
        a: cutoff avoiding the spectrum moduli of L = [d, δ]
        representatives: closed chains spanning H(E, d); omit in the exact case

    Returns:
        GluedSection with the glued value and the direct value ρh / τ(δ)
    """
    op = c.laplacian()
    _require_commuting(c, op)
    split = spectral_split(op, a, numerics)
    below = restrict_complex(c, split.below.bases)
    reps = dict(representatives or {})
    projected = {
        i: split.below.coordinates(i, split.p_below.block(i) @ as_columns(h, c.space.dim(i)))
        for i, h in reps.items()
    }
    truncated = rho_section(below, projected).ratio(tau_delta(below))
    zeta_above = truncated_zeta(op, split.above, 0.0, numerics)
    direct = rho_section(c, reps).ratio(tau_delta(c))
    return GluedSection(float(a), complex(truncated * zeta_above), complex(direct),
                        below.space.dims, complex(zeta_above))


def admissible_cutoffs(op: GradedMap, count: int = 3, numerics: Optional[NumericsConfig] = None) -> List[float]:
    """
    Cutoffs away from the spectrum moduli: half the smallest nonzero modulus, midpoints
    of the gaps between distinct moduli (widest first) and multiples of the largest
    """
    clusters = eigenvalue_clusters(op, numerics)
    radius = max((abs(c.value) for c in clusters), default=0.0)
    tol = _numerics(numerics).cluster_rtol * max(1.0, radius)
    moduli: List[float] = []
    for modulus in sorted(abs(c.value) for c in clusters if abs(c.value) > tol):
        if not moduli or modulus - moduli[-1] > 1e-6 * max(1.0, modulus):
            moduli.append(modulus)
    if not moduli:
        return [float(k) for k in range(1, count + 1)]
    cutoffs = [moduli[0] / 2.0]
    gaps = sorted(((moduli[k + 1] - moduli[k], k) for k in range(len(moduli) - 1)), reverse=True)
    cutoffs += [(moduli[k] + moduli[k + 1]) / 2.0 for _, k in gaps[:max(count - 2, 1)]]
    multiple = 2.0
    while len(cutoffs) < count or multiple == 2.0:
        cutoffs.append(multiple * moduli[-1])
        multiple += 1.0
    return sorted(cutoffs)


@dataclass(frozen=True)
class GluingReport:
    cutoffs: List[float]
    values: Dict[float, complex]
    rejections: Dict[float, str]
    direct: complex
    spread: float

    def to_dict(self) -> Dict:
        return {
            "cutoffs": list(self.cutoffs),
            "values": {format(a, ".17g"): [v.real, v.imag] for a, v in self.values.items()},
            "rejections": {format(a, ".17g"): msg for a, msg in self.rejections.items()},
            "direct": [self.direct.real, self.direct.imag],
            "spread": self.spread,
        }


def glue_across_cutoffs(c: Complex, cutoffs: Sequence[float],
                        representatives: Optional[Mapping[int, np.ndarray]] = None,
                        numerics: Optional[NumericsConfig] = None) -> GluingReport:
    """Glued values per cutoff with their maximal relative spread; bad cutoffs are recorded, not raised"""
    values: Dict[float, complex] = {}
    rejections: Dict[float, str] = {}
    direct = rho_section(c, representatives).ratio(tau_delta(c))
    for a in cutoffs:
        try:
            values[float(a)] = glued_section(c, a, representatives, numerics).value
        except TorsionZetaError as exc:
            logger.warning(f"⚠️ Cutoff {a:g} rejected: {exc}")
            rejections[float(a)] = str(exc)
    reference = direct if abs(direct) > 0 else 1.0
    spread = max((abs(v - w) / abs(reference) for v in values.values() for w in values.values()), default=0.0)
    return GluingReport([float(a) for a in cutoffs], values, rejections, complex(direct), float(spread))


def band_section_identity(c: Complex, a: float, b: float,
                          numerics: Optional[NumericsConfig] = None) -> Dict[str, float]:
    """
    Relative residuals of τ_{(a,b)}(d) = R_{(a,b)}(0) τ_{(a,b)}(δ) and of
    τ_{<b}(δ) = det Φ · sign · τ_{<a}(δ) τ_{(a,b)}(δ)
    """
    op = c.laplacian()
    _require_commuting(c, op)
    bands = band_decomposition(op, a, b, numerics)
    band_complex = restrict_complex(c, bands.band.bases)
    band_op = bands.band.restrict(op)
    for i, block in band_op.blocks.items():
        if block.size and np.linalg.svd(block, compute_uv=False)[-1] <= _numerics(numerics).invertibility_rtol * max(op.norm(), 1e-300):
            raise BandNotInvertibleError(f"[d,δ] is singular on the band ({a}, {b}) in degree {i}")

    report = {}
    zeta_band = truncated_zeta(op, bands.band, 0.0, numerics)
    quotient = tau_d(band_complex).ratio(tau_delta(band_complex))
    report["τ_(a,b)(d)=R_(a,b)(0)τ_(a,b)(δ)"] = abs(quotient - zeta_band) / max(abs(zeta_band), 1e-300)

    below_a = restrict_complex(c, bands.below.bases)
    below_b = restrict_complex(c, bands.below_b.bases)
    acc = AlternatingProduct()
    for i in op.source.degrees:
        frame = np.hstack([bands.below.bases[i], bands.band.bases[i]])
        acc.add(bands.below_b.bases[i].conj().T @ frame, sign(i), where=f"in degree {i}")
    product = (acc.value * koszul_sign(below_a.space, band_complex.space)
               * tau_delta(below_a).scalar * tau_delta(band_complex).scalar)
    whole = tau_delta(below_b).scalar
    report["τ_<b(δ)=τ_<a(δ)τ_(a,b)(δ)"] = abs(whole - product) / max(abs(whole), 1e-300)
    return report


def truncated_dim_alternating_sum(split: SpectralSplit) -> int:
    """Σ (-1)^i dim E^i_{<a}"""
    return split.below.dims.euler_characteristic


def dual_glued_relation(c: Complex, cutoffs: Sequence[float],
                        representatives: Optional[Mapping[int, np.ndarray]] = None,
                        numerics: Optional[NumericsConfig] = None) -> float:
    """
    Largest relative residual of V*(a) = V(a)^{(-1)^{n-1}}, n = q - p, where V* is the glued
    value of the transposed complex regraded into degrees p..q

    With cohomology, the transposed complex is glued along the dual classes of
    `representatives` (see dual_representatives).
    """
    space = c.space
    offset = space.p + space.q
    dual = c.dual().regraded(offset)
    dual_reps = None
    if representatives:
        dual_reps = {j + offset: h for j, h in dual_representatives(c, representatives).items()}
    exponent = sign(space.q - space.p - 1)
    worst = 0.0
    for a in cutoffs:
        forward = glued_section(c, a, representatives, numerics).value
        backward = glued_section(dual, a, dual_reps, numerics).value
        expected = forward if exponent == 1 else 1.0 / forward
        worst = max(worst, abs(backward - expected) / max(abs(expected), 1e-300))
    return worst

