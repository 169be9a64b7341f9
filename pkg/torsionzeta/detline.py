"""
Determinant Lines and Torsion Sections
Elements of det E stored as scalars relative to the standard-basis frame, the
canonical sections τ(d), τ(δ), torsion ratios, norms, duality, shifts and the
Γ-comparison section ρ_Γ.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Callable, Dict, Mapping, Optional, Tuple

import numpy as np

from .config import get_system_config
from .errors import (
    FrameMismatchError,
    GammaAxiomError,
    NotClosedError,
    NotExactError,
    SingularMapError,
    StructuralError,
)
from .graded_core import (
    Complex,
    GradedMap,
    GradedSpace,
    adjoint,
    as_columns,
    cohomology,
    delta_cohomology,
    kernel_basis,
    numerical_rank,
    random_invertible,
    range_basis,
    regrade,
    restrict_complex,
    sign,
    supercommutator,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Frames and elements
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DetFrame:
    """Ordered factors (label, degree, exponent ±1, dim) of a tensor of determinant lines"""

    factors: Tuple[Tuple[str, int, int, int], ...]

    @property
    def shape(self) -> Tuple[Tuple[int, int, int], ...]:
        return tuple((deg, exp, dim) for _, deg, exp, dim in self.factors)

    def inverse(self) -> "DetFrame":
        return DetFrame(tuple((label, deg, -exp, dim) for label, deg, exp, dim in self.factors))

    def tensor(self, other: "DetFrame") -> "DetFrame":
        return DetFrame(self.factors + other.factors)

    def dual(self) -> "DetFrame":
        """Frame of det E* (E*^j = (E^{-j})*, increasing degree)"""
        return DetFrame(tuple(
            (label[:-1] if label.endswith("*") else label + "*", -deg, exp, dim)
            for label, deg, exp, dim in reversed(self.factors)
        ))

    def is_paired_with(self, other: "DetFrame") -> bool:
        return self.dual().shape == other.shape


def det_frame(space: GradedSpace, label: str = "E") -> DetFrame:
    """det E = ⊗ (det E^i)^{(-1)^i} in increasing degree"""
    return DetFrame(tuple((label, i, sign(i), space.dim(i)) for i in space.degrees))


@dataclass(frozen=True)
class DetLineElement:
    """A vector of a determinant line, as a coefficient of the standard frame"""

    frame: DetFrame
    scalar: complex
    parity: int

    def _require_frame(self, other: "DetLineElement"):
        if self.frame != other.frame:
            raise FrameMismatchError("elements live in different determinant lines")

    def ratio(self, other: "DetLineElement") -> complex:
        """self / other, both in the same line"""
        self._require_frame(other)
        if other.scalar == 0:
            raise SingularMapError("division by the zero element")
        return complex(self.scalar / other.scalar)

    def tensor(self, other: "DetLineElement") -> "DetLineElement":
        return DetLineElement(self.frame.tensor(other.frame), complex(self.scalar * other.scalar),
                              (self.parity + other.parity) % 2)

    def inverse(self) -> "DetLineElement":
        if self.scalar == 0:
            raise SingularMapError("the zero element has no inverse")
        return DetLineElement(self.frame.inverse(), complex(1.0 / self.scalar), self.parity)


def _element(space: GradedSpace, scalar: complex, label: str = "E") -> DetLineElement:
    return DetLineElement(det_frame(space, label), complex(scalar), space.parity)


def frame_sign(space: GradedSpace) -> int:
    """ε(E) = (-1)^{Σ C(n_i, 2)}"""
    return sign(sum(comb(space.dim(i), 2) for i in space.degrees))


def standard_element(space: GradedSpace, label: str = "E") -> DetLineElement:
    return _element(space, 1.0, label)


def dual_standard_element(space: GradedSpace, label: str = "E") -> DetLineElement:
    """Dual of the standard frame of det E, written in the standard frame of det E*"""
    dual_label = label[:-1] if label.endswith("*") else label + "*"
    return _element(space.dual(), frame_sign(space), dual_label)


# ---------------------------------------------------------------------------
# Alternating determinant products (accumulated as phase + log-modulus)
# ---------------------------------------------------------------------------

class AlternatingProduct:
    def __init__(self):
        self.phase = 1.0 + 0.0j
        self.log_modulus = 0.0

    def add(self, matrix: np.ndarray, exponent: int, where: str = ""):
        if matrix.shape[0] != matrix.shape[1]:
            raise StructuralError(f"non-square factor {matrix.shape} {where}")
        if matrix.size == 0:
            return
        phase, logabs = np.linalg.slogdet(matrix)
        if phase == 0 or not np.isfinite(logabs):
            raise SingularMapError(f"singular factor {where}")
        self.phase *= phase ** exponent
        self.log_modulus += exponent * logabs

    @property
    def value(self) -> complex:
        return complex(self.phase * np.exp(self.log_modulus))


def alternating_determinant(f: GradedMap, exponent: Callable[[int], int] = sign) -> complex:
    """∏_i det(f|_{E^i})^{exponent(i)} over source degrees"""
    acc = AlternatingProduct()
    for i in f.source.degrees:
        acc.add(f.block(i), exponent(i), where=f"in degree {i}")
    return acc.value


def _check_invertible(f: GradedMap, what: str):
    cfg = get_system_config().numerics
    scale = f.norm()
    for i, block in f.blocks.items():
        if not block.size:
            continue
        if block.shape[0] != block.shape[1]:
            raise SingularMapError(f"{what} is not square in degree {i}")
        smallest = np.linalg.svd(block, compute_uv=False)[-1]
        if smallest <= cfg.invertibility_rtol * scale:
            raise SingularMapError(f"{what} is singular in degree {i} (σ_min = {smallest:.3e})")


# ---------------------------------------------------------------------------
# Canonical sections
# ---------------------------------------------------------------------------

def _complement(block: np.ndarray, rng: Optional[np.random.Generator]) -> np.ndarray:
    """Columns spanning a complement of ker(block); randomized when rng is given"""
    sigma = range_basis(block.conj().T)
    if rng is None or sigma.shape[1] == 0:
        return sigma
    kernel = kernel_basis(block)
    mixed = sigma + kernel @ rng.standard_normal((kernel.shape[1], sigma.shape[1]))
    return mixed @ random_invertible(rng, sigma.shape[1])


def _outgoing(space: GradedSpace, f: GradedMap, i: int) -> np.ndarray:
    if space.contains(i + f.shift):
        return f.block(i)
    return np.zeros((0, space.dim(i)), dtype=complex)


def _require_exact(c: Complex, f: GradedMap, which: str):
    space = c.space
    for i in space.degrees:
        incoming = numerical_rank(f.block(i - f.shift)) if space.contains(i - f.shift) else 0
        outgoing = numerical_rank(_outgoing(space, f, i))
        if incoming + outgoing != space.dim(i):
            dims = cohomology(c).dims if which == "d" else delta_cohomology(c).dims
            raise NotExactError(which, dims)


def rho_section(c: Complex, representatives: Optional[Mapping[int, np.ndarray]] = None,
                rng: Optional[np.random.Generator] = None, label: str = "E") -> DetLineElement:
    """
    Image in det E of the class spanned by closed representatives under det H(E,d) ≅ det E

    Args:
        c: complex with d
        representatives: degree -> closed columns whose classes form a basis of H^i
        rng: randomizes the complements σ^i (result is independent of them)
        label: frame label

    Returns:
        DetLineElement in det E
    """
    space = c.space
    d = c.require_d()
    reps = dict(representatives or {})
    sigmas = {i: _complement(_outgoing(space, d, i), rng) for i in space.degrees}
    scale = max(d.norm(), 1.0)
    acc = AlternatingProduct()
    sign_exponent = 0
    for i in space.degrees:
        h = as_columns(reps.get(i, np.zeros((space.dim(i), 0))), space.dim(i))
        if h.shape[1]:
            residual = np.linalg.norm(_outgoing(space, d, i) @ h)
            if residual > 1e-8 * scale * max(np.linalg.norm(h), 1.0):
                raise NotClosedError(f"representative in degree {i} is not closed ({residual:.3e})")
        incoming = d.block(i - 1) @ sigmas[i - 1] if space.contains(i - 1) else np.zeros((space.dim(i), 0))
        square = np.hstack([incoming, h, sigmas[i]])
        if square.shape[1] != space.dim(i):
            if not reps:
                dims = cohomology(c).dims
                raise NotExactError("d", dims)
            raise NotClosedError(
                f"degree {i}: {incoming.shape[1]} + {h.shape[1]} + {sigmas[i].shape[1]} columns "
                f"for dimension {space.dim(i)}"
            )
        try:
            acc.add(square, sign(i), where=f"in degree {i}")
        except SingularMapError as exc:
            raise NotClosedError(f"representatives do not span cohomology in degree {i}") from exc
        sign_exponent += comb(sigmas[i].shape[1], 2)
    return _element(space, sign(sign_exponent) * acc.value, label)


def tau_d(c: Complex, rng: Optional[np.random.Generator] = None, label: str = "E") -> DetLineElement:
    """τ(d) in det E for exact d"""
    _require_exact(c, c.require_d(), "d")
    return rho_section(c, None, rng, label)


def tau_delta(c: Complex, rng: Optional[np.random.Generator] = None, label: str = "E") -> DetLineElement:
    """τ(δ) in det E for exact δ, in the same frame as τ(d)"""
    space = c.space
    delta = c.require_delta()
    _require_exact(c, delta, "δ")
    rhos = {i: _complement(_outgoing(space, delta, i), rng) for i in space.degrees}
    acc = AlternatingProduct()
    sign_exponent = 0
    for i in space.degrees:
        image = delta.block(i + 1) @ rhos[i + 1] if space.contains(i + 1) else np.zeros((space.dim(i), 0))
        acc.add(np.hstack([rhos[i], image]), sign(i), where=f"in degree {i}")
        sign_exponent += comb(rhos[i].shape[1], 2)
    return _element(space, sign(sign_exponent) * acc.value, label)


def torsion_ratio(c: Complex) -> complex:
    """τ(d)·τ(δ)⁻¹ for [d, δ] invertible"""
    _check_invertible(c.laplacian(), "[d,δ]")
    return tau_d(c).ratio(tau_delta(c))


def torsion_ratio_formula(c: Complex) -> complex:
    """∏ det([d,δ]|_{E^i})^{(-1)^i i}"""
    return alternating_determinant(c.laplacian(), lambda i: sign(i) * i)


def laplacian_alternating_det(c: Complex) -> complex:
    """∏ det([d,δ]|_{E^i})^{(-1)^i}, equal to 1 when [d,δ] is invertible"""
    return alternating_determinant(c.laplacian())


# ---------------------------------------------------------------------------
# Products, automorphisms, duality and shifts
# ---------------------------------------------------------------------------

def koszul_sign(e: GradedSpace, f: GradedSpace) -> int:
    """Sign of det E ⊗ det E' ≅ det(E ⊕ E') with per-degree basis order (E, E')"""
    degrees = range(min(e.p, f.p), max(e.q, f.q) + 1)
    total = sum(e.dim(j) * f.dim(i) for i in degrees for j in degrees if j > i)
    return sign(total)


def det_graded_iso(f: GradedMap) -> DetLineElement:
    """det f in (det E)^{-1} ⊗ det E'"""
    _check_invertible(f, "f")
    scalar = alternating_determinant(f)
    frame = det_frame(f.source).inverse().tensor(det_frame(f.target, "E'"))
    return DetLineElement(frame, scalar, 0)


def transported_tau(f: GradedMap, tau_source: complex) -> complex:
    """Scalar of τ_{E'}(f d f⁻¹) from τ_E(d): (det f · τ_E(d))^{(-1)^{shift f}}"""
    value = det_graded_iso(f).scalar * tau_source
    return value if f.shift % 2 == 0 else 1.0 / value


def act_aut(g: GradedMap, c: Complex) -> Tuple[Complex, complex]:
    """
    Action of a degree-0 automorphism on a complex

    Returns:
        (g.c with g d g⁻¹ and g δ g⁻¹, det g|_E)
    """
    if g.shift != 0 or g.source != c.space or g.target != c.space:
        raise StructuralError("g must be a degree-0 automorphism of the complex's space")
    _check_invertible(g, "g")
    return c.conjugated(g), alternating_determinant(g)


def det_on_cohomology(g: GradedMap, c: Complex) -> complex:
    """∏ det(g|_{H^i(E,d)})^{(-1)^i} for g commuting with d"""
    h = cohomology(c)
    acc = AlternatingProduct()
    for i in c.space.degrees:
        reps = h.representatives[i]
        if not reps.shape[1]:
            continue
        acc.add(h.class_of(i, g.block(i) @ reps), sign(i), where=f"on H^{i}")
    return acc.value


def pair_dual(s: DetLineElement, t: DetLineElement) -> complex:
    """Canonical pairing det E ⊗ det E* → C"""
    if not s.frame.is_paired_with(t.frame):
        raise FrameMismatchError("frames are not dual to each other")
    epsilon = sign(sum(comb(dim, 2) for _, _, dim in s.frame.shape))
    return complex(s.scalar * t.scalar * epsilon)


def dual_tau_pairing(c: Complex) -> complex:
    """<τ(d), τ(d̃)>, equal to 1 for exact d"""
    return pair_dual(tau_d(c), tau_d(c.dual(), label="E*"))


def shift_identity_check(c: Complex) -> complex:
    """τ_E(d) τ_{E₁}(-d) under det E ⊗ det E₁ ≅ C, with E₁^i = E^{i+1}"""
    d = c.require_d()
    shifted = Complex(c.space.shifted(1), regrade(-d, -1))
    forward = tau_d(c).scalar
    backward = tau_d(shifted, label="E1").scalar
    return complex(forward * backward * sign(c.space.total_dim // 2))


# ---------------------------------------------------------------------------
# Hermitian norms
# ---------------------------------------------------------------------------

def hermitian_norm(s: DetLineElement) -> float:
    """Norm for the metric induced by the standard Hermitian metrics (standard frame has norm 1)"""
    return float(abs(s.scalar))


def norm_formula_d(c: Complex) -> float:
    """∏ det([d,d*]|_{E^i})^{(-1)^i i}, equal to ‖τ(d)‖²"""
    d = c.require_d()
    return float(alternating_determinant(supercommutator(d, adjoint(d)), lambda i: sign(i) * i).real)


def norm_formula_delta(c: Complex) -> float:
    """∏ det([δ,δ*]|_{E^i})^{(-1)^{i-1} i}, equal to ‖τ(δ)‖²"""
    delta = c.require_delta()
    return float(alternating_determinant(supercommutator(delta, adjoint(delta)), lambda i: -sign(i) * i).real)


# ---------------------------------------------------------------------------
# Γ structures
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GammaStructure:
    """An odd involution Γ: E^i -> E^{p+q-i} with δΓ = Γd and Γ|_B = d + δ"""

    complex: Complex
    gamma: Dict[int, np.ndarray]

    @property
    def space(self) -> GradedSpace:
        return self.complex.space

    @property
    def top(self) -> int:
        """p + q"""
        return self.space.p + self.space.q

    def block(self, i: int) -> np.ndarray:
        return np.asarray(self.gamma[i], dtype=complex)

    def to_dense(self) -> np.ndarray:
        space = self.space
        dense = np.zeros((space.total_dim, space.total_dim), dtype=complex)
        for i in space.degrees:
            j = self.top - i
            dense[space.offset(j):space.offset(j) + space.dim(j),
                  space.offset(i):space.offset(i) + space.dim(i)] = self.block(i)
        return dense


def check_gamma_axioms(gs: GammaStructure, atol: float = 1e-10) -> Dict[str, float]:
    """
    Residuals of the Γ axioms; raises GammaAxiomError on the first violated one

    Returns:
        identity name -> residual
    """
    space, top = gs.space, gs.top
    d, delta = gs.complex.require_d(), gs.complex.require_delta()
    if top % 2 == 0:
        raise StructuralError(f"p + q = {top} must be odd for a Γ structure")
    for i in space.degrees:
        expected = (space.dim(top - i), space.dim(i))
        if gs.block(i).shape != expected:
            raise StructuralError(f"Γ block at degree {i} has shape {gs.block(i).shape}, expected {expected}")

    residuals = {}
    laplacian = supercommutator(d, delta)
    residuals["[d,δ]=1"] = max(
        (np.linalg.norm(laplacian.block(i) - np.eye(space.dim(i)), 2) for i in space.degrees if space.dim(i)),
        default=0.0,
    )
    residuals["Γ²=1"] = max(
        (np.linalg.norm(gs.block(top - i) @ gs.block(i) - np.eye(space.dim(i)), 2)
         for i in space.degrees if space.dim(i)),
        default=0.0,
    )

    commute = 0.0
    for i in space.degrees:
        gd = gs.block(i + 1) @ d.block(i) if space.contains(i + 1) else np.zeros((space.dim(top - i - 1), space.dim(i)))
        dg = delta.block(top - i) @ gs.block(i) if space.contains(top - i - 1) else np.zeros_like(gd)
        if gd.size:
            commute = max(commute, np.linalg.norm(gd - dg, 2))
    residuals["δΓ=Γd"] = commute

    low, high = (top - 1) // 2, (top + 1) // 2
    lower = range_basis(delta.block(high)) if space.contains(high) else np.zeros((space.dim(low), 0))
    upper = range_basis(d.block(low)) if space.contains(high) else np.zeros((space.dim(high), 0))
    middle = 0.0
    if lower.size:
        middle = max(middle, np.linalg.norm(gs.block(low) @ lower - d.block(low) @ lower, 2))
    if upper.size:
        middle = max(middle, np.linalg.norm(gs.block(high) @ upper - delta.block(high) @ upper, 2))
    residuals["Γ|_B=d+δ"] = middle

    for identity_name, residual in residuals.items():
        if residual > atol:
            raise GammaAxiomError(identity_name, residual)
    return residuals


def rho_gamma(gs: GammaStructure) -> DetLineElement:
    """ρ_Γ = (det Γ_{-+})^{-1} written in the standard frame of det E"""
    check_gamma_axioms(gs, get_system_config().tolerances.symmetry)
    acc = AlternatingProduct()
    sign_exponent = 0
    for i in gs.space.degrees:
        if i > (gs.top - 1) // 2:
            break
        acc.add(gs.block(i), sign(i + 1), where=f"Γ block at degree {i}")
        sign_exponent += comb(gs.space.dim(i), 2)
    return _element(gs.space, sign(sign_exponent) * acc.value)


def contact_model(m: int) -> GammaStructure:
    """
    E = Λ(W*) ⊕ α∧Λ(W*) with dim W = 2m, d = α∧, δ = i_Z and Γ(u + αv) = Kv + αKu

    K sends e_I to e_{Iᶜ} off the middle exterior power and is the identity on Λ^m W*.
    """
    if m < 0:
        raise StructuralError("m must be non-negative")
    w = 2 * m
    pure = {k: list(combinations(range(w), k)) for k in range(w + 1)}
    bases = {}
    for k in range(w + 2):
        bases[k] = [("e", idx) for idx in pure.get(k, [])] + [("a", idx) for idx in pure.get(k - 1, [])]
    position = {k: {mono: pos for pos, mono in enumerate(basis)} for k, basis in bases.items()}
    space = GradedSpace(0, tuple(len(bases[k]) for k in range(w + 2)))

    def complement(idx: tuple) -> tuple:
        if len(idx) == m:
            return idx
        return tuple(j for j in range(w) if j not in idx)

    d_blocks, delta_blocks, gamma = {}, {}, {}
    for k in space.degrees:
        gamma_block = np.zeros((space.dim(w + 1 - k), space.dim(k)), dtype=complex)
        if k < w + 1:
            d_blocks[k] = np.zeros((space.dim(k + 1), space.dim(k)), dtype=complex)
        if k > 0:
            delta_blocks[k] = np.zeros((space.dim(k - 1), space.dim(k)), dtype=complex)
        for col, (kind, idx) in enumerate(bases[k]):
            if kind == "e":
                d_blocks[k][position[k + 1][("a", idx)], col] = 1.0
                gamma_block[position[w + 1 - k][("a", complement(idx))], col] = 1.0
            else:
                delta_blocks[k][position[k - 1][("e", idx)], col] = 1.0
                gamma_block[position[w + 1 - k][("e", complement(idx))], col] = 1.0
        gamma[k] = gamma_block
    c = Complex(space, GradedMap(space, space, 1, d_blocks), GradedMap(space, space, -1, delta_blocks))
    return GammaStructure(c, gamma)


@dataclass(frozen=True, eq=False)
class ABCSplit:
    """Column bases per degree of the subcomplexes A, B, C with E = A ⊕ B ⊕ C"""

    a: Dict[int, np.ndarray]
    b: Dict[int, np.ndarray]
    c: Dict[int, np.ndarray]


def abc_split(gs: GammaStructure) -> ABCSplit:
    space, top = gs.space, gs.top
    d, delta = gs.complex.require_d(), gs.complex.require_delta()
    low, high = (top - 1) // 2, (top + 1) // 2

    def empty(i):
        return np.zeros((space.dim(i), 0), dtype=complex)

    def image(f: GradedMap, i: int) -> np.ndarray:
        j = i - f.shift
        return range_basis(f.block(j)) if space.contains(j) else empty(i)

    a, b, c = {}, {}, {}
    for i in space.degrees:
        full = np.eye(space.dim(i), dtype=complex)
        if i < low:
            a[i], b[i], c[i] = full, empty(i), empty(i)
        elif i == low:
            a[i], b[i], c[i] = image(d, i), image(delta, i), empty(i)
        elif i == high:
            a[i], b[i], c[i] = empty(i), image(d, i), image(delta, i)
        else:
            a[i], b[i], c[i] = empty(i), empty(i), full
    return ABCSplit(a, b, c)


def check_abc_multiplicativity(gs: GammaStructure) -> Dict[str, float]:
    """
    Relative residuals of τ(d) = det Φ · signs · τ_A τ_B τ_C and the same for δ

    Φ is the change of basis [A | B | C] per degree; signs are the Koszul signs of
    det A ⊗ det B ⊗ det C ≅ det(A ⊕ B ⊕ C).
    """
    split = abc_split(gs)
    space = gs.space
    pieces = [restrict_complex(gs.complex, part) for part in (split.a, split.b, split.c)]
    phi = GradedMap(space, space, 0, {i: np.hstack([split.a[i], split.b[i], split.c[i]]) for i in space.degrees})
    det_phi = alternating_determinant(phi)
    ab_space = GradedSpace(space.p, tuple(pieces[0].space.dim(i) + pieces[1].space.dim(i) for i in space.degrees))
    signs = koszul_sign(pieces[0].space, pieces[1].space) * koszul_sign(ab_space, pieces[2].space)

    residuals = {}
    for name, section in (("d", tau_d), ("δ", tau_delta)):
        whole = section(gs.complex).scalar
        product = det_phi * signs
        for piece in pieces:
            product *= section(piece).scalar
        residuals[name] = abs(whole - product) / max(abs(whole), 1e-300)
    return residuals
