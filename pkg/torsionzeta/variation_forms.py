"""
Variation Forms
Homotopies for exact degree -1 differentials, the 1-form κ on families of them,
finite-difference checks of the connection and closedness identities, and the
exact algebraic identities in Λ(T*) ⊗ End(E).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import linalg

from .config import VariationConfig, get_system_config
from .detline import tau_delta
from .errors import NotExactError, StructuralError
from .graded_core import (
    Complex,
    GradedMap,
    GradedSpace,
    adjoint,
    compose,
    delta_cohomology,
    identity,
    inverse,
    number_operator,
    random_map,
    sign,
    supercommutator,
    supertrace,
)

logger = logging.getLogger(__name__)


def _map_residual(f: GradedMap, g: GradedMap) -> float:
    return (f - g).norm()


@dataclass(frozen=True, eq=False)
class Homotopy:
    """α of degree +1 with [δ, α] = 1"""

    alpha: GradedMap
    delta: GradedMap

    def residual(self) -> float:
        return _map_residual(supercommutator(self.delta, self.alpha), identity(self.delta.source))


def homotopy_from_metric(delta: GradedMap) -> Homotopy:
    """α = [δ, δ*]⁻¹ δ*"""
    laplacian = supercommutator(delta, adjoint(delta))
    cfg = get_system_config().numerics
    for block in laplacian.blocks.values():
        if block.size and np.linalg.svd(block, compute_uv=False)[-1] <= cfg.invertibility_rtol * laplacian.norm():
            raise NotExactError("δ", delta_cohomology(Complex(delta.source, None, delta)).dims)
    return Homotopy(compose(inverse(laplacian), adjoint(delta)), delta)


def random_homotopy(rng: np.random.Generator, homotopy: Homotopy, scale: float = 1.0) -> Homotopy:
    """α' = α + [δ, γ] with γ a random map of degree +2"""
    space = homotopy.delta.source
    gamma = random_map(rng, space, space, 2) * scale
    return Homotopy(homotopy.alpha + supercommutator(homotopy.delta, gamma), homotopy.delta)


def kappa_density(alpha: GradedMap, delta_dot: GradedMap) -> complex:
    """Raw supertrace Trs[α δ̇]"""
    return supertrace(compose(alpha, delta_dot))


# ---------------------------------------------------------------------------
# Curves and families
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DifferentialCurve:
    """A smooth family params -> δ(params) of exact degree -1 differentials on one space"""

    space: GradedSpace
    delta_of: Callable[..., GradedMap]
    name: str = "curve"
    dimension: int = 1

    def __call__(self, *params: float) -> GradedMap:
        if len(params) != self.dimension:
            raise StructuralError(f"{self.name} takes {self.dimension} parameter(s), got {len(params)}")
        delta = self.delta_of(*params)
        if delta.shift != -1 or delta.source != self.space:
            raise StructuralError(f"{self.name} must produce degree -1 endomorphisms of its space")
        Complex(self.space, None, delta)
        return delta


def _expm(x: GradedMap, t: float) -> GradedMap:
    return GradedMap(x.source, x.target, 0, {i: linalg.expm(t * b) for i, b in x.blocks.items()})


def constant_curve(delta0: GradedMap) -> DifferentialCurve:
    return DifferentialCurve(delta0.source, lambda t: delta0, "constant")


def scaling_curve(delta0: GradedMap) -> DifferentialCurve:
    """δ(t) = e^t δ₀"""
    return DifferentialCurve(delta0.source, lambda t: delta0 * np.exp(t), "scaling")


def conjugation_curve(delta0: GradedMap, generator: GradedMap) -> DifferentialCurve:
    """δ(t) = e^{tX} δ₀ e^{-tX} for a degree-0 generator X"""
    def delta_of(t: float) -> GradedMap:
        return compose(compose(_expm(generator, t), delta0), _expm(generator, -t))
    return DifferentialCurve(delta0.source, delta_of, "conjugation")


def two_parameter_family(delta0: GradedMap, x: GradedMap, y: GradedMap) -> DifferentialCurve:
    """δ(t, u) = e^{tX} e^{uY} δ₀ e^{-uY} e^{-tX}"""
    def delta_of(t: float, u: float) -> GradedMap:
        g = compose(_expm(x, t), _expm(y, u))
        g_inv = compose(_expm(y, -u), _expm(x, -t))
        return compose(compose(g, delta0), g_inv)
    return DifferentialCurve(delta0.source, delta_of, "two-parameter", dimension=2)


def _shifted(point: Sequence[float], direction: Sequence[float], h: float) -> Tuple[float, ...]:
    return tuple(p + h * v for p, v in zip(point, direction))


def _central(evaluate: Callable[[float], object], h: float, richardson: bool):
    first = (evaluate(h) - evaluate(-h)) * (1.0 / (2.0 * h))
    if not richardson:
        return first
    half = (evaluate(h / 2) - evaluate(-h / 2)) * (1.0 / h)
    return (half * 4.0 - first) * (1.0 / 3.0)


def directional_derivative(curve: DifferentialCurve, point: Sequence[float], direction: Sequence[float],
                           variation: Optional[VariationConfig] = None) -> GradedMap:
    """δ̇ along `direction` by central differences (Richardson-extrapolated by default)"""
    cfg = variation or get_system_config().variation
    return _central(lambda h: curve(*_shifted(point, direction, h)), cfg.step, cfg.richardson)


def kappa_eval(curve: DifferentialCurve, point: Sequence[float], direction: Sequence[float],
               homotopy: Optional[Homotopy] = None, variation: Optional[VariationConfig] = None) -> complex:
    """
    κ(v) = -Trs[α δ̇(v)]

    Args:
        curve: family of exact δ
        point: parameter values
        direction: tangent vector in parameter space
        homotopy: α for δ(point); the metric homotopy by default

    Returns:
        complex value of κ at point along direction
    """
    delta = curve(*point)
    alpha = (homotopy or homotopy_from_metric(delta)).alpha
    return -kappa_density(alpha, directional_derivative(curve, point, direction, variation))


def log_tau_derivative(curve: DifferentialCurve, point: Sequence[float], direction: Sequence[float],
                       variation: Optional[VariationConfig] = None) -> complex:
    """d/dv log τ(δ) by central differences of the τ(δ) scalar"""
    cfg = variation or get_system_config().variation
    base = tau_delta(Complex(curve.space, None, curve(*point))).scalar

    def log_tau(h: float) -> complex:
        value = tau_delta(Complex(curve.space, None, curve(*_shifted(point, direction, h)))).scalar
        return complex(np.log(value / base))

    return complex(_central(log_tau, cfg.step, cfg.richardson))


def check_connection_identity(curve: DifferentialCurve, point: Sequence[float],
                              direction: Optional[Sequence[float]] = None,
                              variation: Optional[VariationConfig] = None) -> float:
    """|d log τ(δ)(v) - κ(v)|"""
    direction = direction if direction is not None else (1.0,) * curve.dimension
    return float(abs(log_tau_derivative(curve, point, direction, variation)
                     - kappa_eval(curve, point, direction, variation=variation)))


def check_kappa_closed(family: DifferentialCurve, point: Tuple[float, float],
                       variation: Optional[VariationConfig] = None) -> float:
    """|∂_u κ_t - ∂_t κ_u| by second-order central differences"""
    if family.dimension != 2:
        raise StructuralError("closedness needs a two-parameter family")
    cfg = variation or get_system_config().variation
    step = cfg.closedness_step
    t, u = point

    def kappa_t(du: float) -> complex:
        return kappa_eval(family, (t, u + du), (1.0, 0.0), variation=cfg)

    def kappa_u(dt: float) -> complex:
        return kappa_eval(family, (t + dt, u), (0.0, 1.0), variation=cfg)

    d_u_kappa_t = (kappa_t(step) - kappa_t(-step)) / (2 * step)
    d_t_kappa_u = (kappa_u(step) - kappa_u(-step)) / (2 * step)
    return float(abs(d_u_kappa_t - d_t_kappa_u))


def loop_integral_real_kappa(family: DifferentialCurve, point: Tuple[float, float],
                             side: Optional[float] = None,
                             variation: Optional[VariationConfig] = None) -> float:
    """|∮ Re κ| around the square with lower-left corner `point`"""
    cfg = variation or get_system_config().variation
    side = cfg.loop_side if side is None else side
    nodes, weights = leggauss(cfg.loop_nodes)
    t, u = point
    corners = [(t, u), (t + side, u), (t + side, u + side), (t, u + side)]
    total = 0.0
    for k in range(4):
        start, end = np.array(corners[k]), np.array(corners[(k + 1) % 4])
        edge = end - start
        for x, w in zip(nodes, weights):
            where = start + 0.5 * (x + 1.0) * edge
            total += 0.5 * w * kappa_eval(family, tuple(where), tuple(edge), variation=cfg).real
    return float(abs(total))


# ---------------------------------------------------------------------------
# Form-valued maps
# ---------------------------------------------------------------------------

def _merge_sign(left: Tuple[int, ...], right: Tuple[int, ...]) -> int:
    """Sign of sorting the concatenation of two increasing index tuples"""
    return sign(sum(1 for i in left for j in right if i > j))


@dataclass(frozen=True, eq=False)
class FormValuedMap:
    """Σ_I dt_I ⊗ A_I in Λ(T*) ⊗̂ End(E), keyed by increasing index tuples"""

    terms: Dict[Tuple[int, ...], GradedMap] = field(default_factory=dict)

    @classmethod
    def constant(cls, f: GradedMap) -> "FormValuedMap":
        return cls({(): f})

    @classmethod
    def one_form(cls, components: Sequence[GradedMap]) -> "FormValuedMap":
        return cls({(l,): f for l, f in enumerate(components)})

    @property
    def parity(self) -> int:
        parities = {(len(key) + f.shift) % 2 for key, f in self.terms.items()}
        if len(parities) > 1:
            raise StructuralError("form-valued map is not homogeneous")
        return parities.pop() if parities else 0

    def __add__(self, other: "FormValuedMap") -> "FormValuedMap":
        terms = dict(self.terms)
        for key, f in other.terms.items():
            terms[key] = terms[key] + f if key in terms else f
        return FormValuedMap(terms)

    def __sub__(self, other: "FormValuedMap") -> "FormValuedMap":
        return self + other.scaled(-1.0)

    def scaled(self, factor: complex) -> "FormValuedMap":
        return FormValuedMap({key: f * factor for key, f in self.terms.items()})

    def __matmul__(self, other: "FormValuedMap") -> "FormValuedMap":
        """(dt_I ⊗ A)(dt_J ⊗ B) = (-1)^{|A||J|} dt_I ∧ dt_J ⊗ AB"""
        terms: Dict[Tuple[int, ...], GradedMap] = {}
        for left_key, a in self.terms.items():
            for right_key, b in other.terms.items():
                if set(left_key) & set(right_key):
                    continue
                key = tuple(sorted(left_key + right_key))
                coefficient = sign(a.parity * len(right_key)) * _merge_sign(left_key, right_key)
                product = compose(a, b) * coefficient
                terms[key] = terms[key] + product if key in terms else product
        return FormValuedMap(terms)

    def norm(self) -> float:
        return max((f.norm() for f in self.terms.values()), default=0.0)

    def supertraces(self) -> Dict[Tuple[int, ...], complex]:
        return {key: supertrace(f) for key, f in self.terms.items()}


def form_supercommutator(x: FormValuedMap, y: FormValuedMap) -> FormValuedMap:
    return (x @ y) - (y @ x).scaled(sign(x.parity * y.parity))


def tangent_data(homotopy: Homotopy, slots: Sequence[GradedMap]) -> Tuple[FormValuedMap, FormValuedMap]:
    """
    Project arbitrary degree -1 maps to tangent vectors of the exact differentials

    Args:
        homotopy: α at δ with α² = 0
        slots: one degree -1 map per parameter direction

    Returns:
        (𝐝δ, 𝐝α) with 𝐝δ components D_l = [δ, α M_l] and 𝐝α components -α[D_l, α]
    """
    delta, alpha = homotopy.delta, homotopy.alpha
    d_delta, d_alpha = [], []
    for m in slots:
        if m.shift != -1:
            raise StructuralError("𝐝δ slots must have degree -1")
        tangent = supercommutator(delta, compose(alpha, m))
        d_delta.append(tangent)
        d_alpha.append(-compose(alpha, supercommutator(tangent, alpha)))
    return FormValuedMap.one_form(d_delta), FormValuedMap.one_form(d_alpha)


def _relative(residual: float, *scales: float) -> float:
    return residual / max(max(scales, default=0.0), 1.0)


def check_algebraic_identities(c: Complex, homotopy: Homotopy, f: GradedMap,
                               slots: Optional[Sequence[GradedMap]] = None,
                               rng: Optional[np.random.Generator] = None) -> Dict[str, float]:
    """
    Relative residuals of the three exact identities

    - 𝐝(α𝐝δ) = [δ, (𝐝α)α𝐝δ] + (α𝐝δ)²
    - N - αδ = [δ, αN]
    - Trs[α[f, δ]] = Trs[f] for a 1-form valued degree-0 f = dt ⊗ F

    Args:
        c: complex carrying δ
        homotopy: α with [δ, α] = 1 and α² = 0 for the first identity
        f: degree-0 map F
        slots: degree -1 maps for the 𝐝δ slot (two random maps when omitted)
        rng: generator for the random slots
    """
    delta, alpha = c.require_delta(), homotopy.alpha
    space = c.space
    if f.shift != 0:
        raise StructuralError("f must have degree 0")
    if slots is None:
        rng = rng if rng is not None else np.random.default_rng(0)
        slots = [random_map(rng, space, space, -1) for _ in range(2)]

    report = {}
    d_delta, d_alpha = tangent_data(homotopy, slots)
    delta_hat, alpha_hat = FormValuedMap.constant(delta), FormValuedMap.constant(alpha)
    lhs = d_alpha @ d_delta
    first = form_supercommutator(delta_hat, d_alpha @ alpha_hat @ d_delta)
    transported = alpha_hat @ d_delta
    second = transported @ transported
    report["𝐝(α𝐝δ)=[δ,(𝐝α)α𝐝δ]+(α𝐝δ)²"] = _relative((lhs - (first + second)).norm(),
                                                    lhs.norm(), first.norm(), second.norm())

    n = number_operator(space)
    lhs_n = n - compose(alpha, delta)
    rhs_n = supercommutator(delta, compose(alpha, n))
    report["N-αδ=[δ,αN]"] = _relative(_map_residual(lhs_n, rhs_n), lhs_n.norm(), rhs_n.norm())

    f_form = FormValuedMap({(0,): f})
    traced = (alpha_hat @ form_supercommutator(f_form, delta_hat)).supertraces().get((0,), 0.0)
    expected = supertrace(f)
    report["Trs[α[f,δ]]=Trs[f]"] = _relative(abs(traced - expected), abs(expected),
                                              f.norm() * space.total_dim)
    return report
