"""
Graded Core
Finite Z-graded vector spaces, degree-shifting block maps, the supertrace /
supercommutator calculus, cohomology, adjoints, duals and seeded random complexes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
from scipy import linalg

from .config import NumericsConfig, get_system_config
from .errors import (
    InfeasibleDimsError,
    NotADifferentialError,
    NotClosedError,
    StructuralError,
)

logger = logging.getLogger(__name__)

Seed = Union[int, Sequence[int], np.random.Generator]


def make_rng(seed: Seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream per (master seed, trial index)"""
    return np.random.default_rng([int(seed), int(trial)])


def sign(k: int) -> int:
    """(-1)^k for any integer k"""
    return -1 if k % 2 else 1


def _numerics(numerics: Optional[NumericsConfig] = None) -> NumericsConfig:
    return numerics if numerics is not None else get_system_config().numerics


# ---------------------------------------------------------------------------
# Graded spaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GradedSpace:
    """E = ⊕_{i=p}^{q} E^i with dims n_p..n_q and standard ordered bases"""

    p: int
    dims: tuple

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        if not dims:
            raise StructuralError("a graded space needs at least one degree")
        if any(n < 0 for n in dims):
            raise StructuralError(f"negative dimension in {dims}")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_range(cls, p: int, q: int, dims: Sequence[int]) -> "GradedSpace":
        if q < p or len(dims) != q - p + 1:
            raise StructuralError(f"degrees {p}..{q} do not match {len(dims)} dims")
        return cls(p, tuple(dims))

    @property
    def q(self) -> int:
        return self.p + len(self.dims) - 1

    @property
    def degrees(self) -> range:
        return range(self.p, self.q + 1)

    def contains(self, i: int) -> bool:
        return self.p <= i <= self.q

    def dim(self, i: int) -> int:
        return self.dims[i - self.p] if self.contains(i) else 0

    @property
    def total_dim(self) -> int:
        return sum(self.dims)

    @property
    def parity(self) -> int:
        return self.total_dim % 2

    @property
    def euler_characteristic(self) -> int:
        """χ = Σ (-1)^i dim E^i"""
        return sum(sign(i) * self.dim(i) for i in self.degrees)

    @property
    def chi_prime(self) -> int:
        """χ' = Σ (-1)^i i dim E^i"""
        return sum(sign(i) * i * self.dim(i) for i in self.degrees)

    def parity_bookkeeping_holds(self) -> bool:
        """χ ≡ dim E and χ' ≡ (χ - dim E)/2 modulo 2"""
        chi, dim = self.euler_characteristic, self.total_dim
        if (chi - dim) % 2:
            return False
        return (self.chi_prime - (chi - dim) // 2) % 2 == 0

    def offset(self, i: int) -> int:
        """Position of E^i inside the dense concatenation"""
        return sum(self.dim(j) for j in range(self.p, i))

    def relabel(self, offset: int) -> "GradedSpace":
        """Same blocks, degree i moved to i + offset"""
        return GradedSpace(self.p + offset, self.dims)

    def shifted(self, k: int) -> "GradedSpace":
        """E_k with E_k^i = E^{i+k}"""
        return self.relabel(-k)

    def dual(self) -> "GradedSpace":
        """E* with E*^i = (E^{-i})*"""
        return GradedSpace(-self.q, tuple(reversed(self.dims)))

    def to_dict(self) -> Dict:
        return {"degrees": [self.p, self.q], "dims": list(self.dims)}


# ---------------------------------------------------------------------------
# Graded maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GradedMap:
    """Linear map E -> E' raising the degree by `shift`, one block per source degree"""

    source: GradedSpace
    target: GradedSpace
    shift: int
    blocks: Mapping[int, np.ndarray] = field(default_factory=dict)

    __array_ufunc__ = None

    def __post_init__(self):
        stored: Dict[int, np.ndarray] = {}
        for i, block in dict(self.blocks).items():
            i = int(i)
            arr = np.asarray(block, dtype=complex)
            if not (self.source.contains(i) and self.target.contains(i + self.shift)):
                if arr.size and np.any(arr != 0):
                    raise StructuralError(f"nonzero block at out-of-range degree {i}")
                continue
            expected = (self.target.dim(i + self.shift), self.source.dim(i))
            if arr.size == 0 and 0 in expected:
                arr = np.zeros(expected, dtype=complex)
            if arr.shape != expected:
                raise StructuralError(
                    f"block at degree {i} has shape {arr.shape}, expected {expected}"
                )
            arr = np.array(arr, dtype=complex)
            arr.setflags(write=False)
            stored[i] = arr
        for i in self.in_range_degrees:
            if i not in stored:
                zero = np.zeros((self.target.dim(i + self.shift), self.source.dim(i)), dtype=complex)
                zero.setflags(write=False)
                stored[i] = zero
        object.__setattr__(self, "shift", int(self.shift))
        object.__setattr__(self, "blocks", stored)

    @property
    def in_range_degrees(self) -> List[int]:
        return [i for i in self.source.degrees if self.target.contains(i + self.shift)]

    @property
    def parity(self) -> int:
        return self.shift % 2

    def block(self, i: int) -> np.ndarray:
        """E^i -> E'^{i+shift}; implicit zeros outside the stored range"""
        if i in self.blocks:
            return self.blocks[i]
        return np.zeros((self.target.dim(i + self.shift), self.source.dim(i)), dtype=complex)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.target.total_dim, self.source.total_dim), dtype=complex)
        for i, block in self.blocks.items():
            r0 = self.target.offset(i + self.shift)
            c0 = self.source.offset(i)
            dense[r0:r0 + block.shape[0], c0:c0 + block.shape[1]] = block
        return dense

    def norm(self) -> float:
        """Operator 2-norm (blocks act between mutually orthogonal degrees)"""
        norms = [np.linalg.norm(b, 2) for b in self.blocks.values() if b.size]
        return float(max(norms)) if norms else 0.0

    def _check_same_type(self, other: "GradedMap"):
        if self.source != other.source or self.target != other.target or self.shift != other.shift:
            raise StructuralError("maps differ in source, target or shift")

    def __add__(self, other: "GradedMap") -> "GradedMap":
        self._check_same_type(other)
        return GradedMap(self.source, self.target, self.shift,
                         {i: b + other.block(i) for i, b in self.blocks.items()})

    def __sub__(self, other: "GradedMap") -> "GradedMap":
        self._check_same_type(other)
        return GradedMap(self.source, self.target, self.shift,
                         {i: b - other.block(i) for i, b in self.blocks.items()})

    def __neg__(self) -> "GradedMap":
        return self * -1.0

    def __mul__(self, scalar: complex) -> "GradedMap":
        return GradedMap(self.source, self.target, self.shift,
                         {i: scalar * b for i, b in self.blocks.items()})

    __rmul__ = __mul__

    def __matmul__(self, other: "GradedMap") -> "GradedMap":
        return compose(self, other)


def compose(f: GradedMap, g: GradedMap) -> GradedMap:
    """f ∘ g"""
    if g.target != f.source:
        raise StructuralError(
            f"cannot compose: g lands in {g.target.to_dict()}, f starts at {f.source.to_dict()}"
        )
    blocks = {}
    for i in g.source.degrees:
        j = i + g.shift
        if f.target.contains(j + f.shift) and g.target.contains(j):
            blocks[i] = f.block(j) @ g.block(i)
    return GradedMap(g.source, f.target, f.shift + g.shift, blocks)


def supercommutator(f: GradedMap, g: GradedMap) -> GradedMap:
    """[f, g] = fg - (-1)^{|f||g|} gf"""
    return compose(f, g) - sign(f.parity * g.parity) * compose(g, f)


def supertrace(f: GradedMap) -> complex:
    """Trs[f] = Σ (-1)^i tr f|_{E^i}"""
    if f.shift != 0 or f.source != f.target:
        raise StructuralError("supertrace needs a degree-0 endomorphism")
    return complex(sum(sign(i) * np.trace(f.block(i)) for i in f.source.degrees))


def identity(space: GradedSpace) -> GradedMap:
    return GradedMap(space, space, 0, {i: np.eye(space.dim(i)) for i in space.degrees})


def number_operator(space: GradedSpace) -> GradedMap:
    """N acts on E^i as multiplication by i"""
    return GradedMap(space, space, 0, {i: i * np.eye(space.dim(i)) for i in space.degrees})


def adjoint(f: GradedMap) -> GradedMap:
    """Conjugate transpose for the standard Hermitian metrics"""
    return GradedMap(f.target, f.source, -f.shift,
                     {i + f.shift: b.conj().T for i, b in f.blocks.items()})


def dual_transpose(f: GradedMap) -> GradedMap:
    """Transpose f^T: E'* -> E*, regraded so that E*^j = (E^{-j})*"""
    return GradedMap(f.target.dual(), f.source.dual(), f.shift,
                     {-i - f.shift: b.T for i, b in f.blocks.items()})


def regrade(f: GradedMap, offset: int) -> GradedMap:
    """Relabel degrees i -> i + offset on source and target, blocks unchanged"""
    return GradedMap(f.source.relabel(offset), f.target.relabel(offset), f.shift,
                     {i + offset: b for i, b in f.blocks.items()})


def inverse(g: GradedMap) -> GradedMap:
    if g.shift != 0:
        raise StructuralError("only degree-0 maps are inverted blockwise")
    blocks = {}
    for i, b in g.blocks.items():
        if b.shape[0] != b.shape[1]:
            raise StructuralError(f"block at degree {i} is not square")
        blocks[i] = linalg.inv(b) if b.size else b
    return GradedMap(g.target, g.source, 0, blocks)


def conjugate(g: GradedMap, f: GradedMap) -> GradedMap:
    """g.f = g f g^{-1}"""
    return compose(compose(g, f), inverse(g))


def _block_diag(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0] + b.shape[0], a.shape[1] + b.shape[1]), dtype=complex)
    out[:a.shape[0], :a.shape[1]] = a
    out[a.shape[0]:, a.shape[1]:] = b
    return out


def direct_sum_space(e: GradedSpace, f: GradedSpace) -> GradedSpace:
    p, q = min(e.p, f.p), max(e.q, f.q)
    return GradedSpace(p, tuple(e.dim(i) + f.dim(i) for i in range(p, q + 1)))


def direct_sum_map(f: GradedMap, g: GradedMap) -> GradedMap:
    """Block-diagonal f ⊕ g, per-degree basis order (E, E')"""
    if f.shift != g.shift:
        raise StructuralError("direct sum of maps with different shifts")
    source = direct_sum_space(f.source, g.source)
    target = direct_sum_space(f.target, g.target)
    blocks = {i: _block_diag(f.block(i), g.block(i))
              for i in source.degrees if target.contains(i + f.shift)}
    return GradedMap(source, target, f.shift, blocks)


# ---------------------------------------------------------------------------
# Complexes and cohomology
# ---------------------------------------------------------------------------

def _check_differential(space: GradedSpace, f: GradedMap, shift: int, name: str,
                        numerics: Optional[NumericsConfig] = None):
    if f.shift != shift or f.source != space or f.target != space:
        raise StructuralError(f"{name} must be an endomorphism of degree {shift:+d}")
    cfg = _numerics(numerics)
    scale = f.norm() ** 2
    residual = compose(f, f).norm()
    if residual > max(cfg.differential_rtol * scale, cfg.differential_atol):
        raise NotADifferentialError(f"{name}∘{name} has norm {residual:.3e} (||{name}||² = {scale:.3e})")


@dataclass(frozen=True, eq=False)
class Complex:
    """Graded space with an optional differential d (+1) and/or δ (-1)"""

    space: GradedSpace
    d: Optional[GradedMap] = None
    delta: Optional[GradedMap] = None

    def __post_init__(self):
        if self.d is not None:
            _check_differential(self.space, self.d, 1, "d")
        if self.delta is not None:
            _check_differential(self.space, self.delta, -1, "δ")

    def require_d(self) -> GradedMap:
        if self.d is None:
            raise StructuralError("complex has no d")
        return self.d

    def require_delta(self) -> GradedMap:
        if self.delta is None:
            raise StructuralError("complex has no δ")
        return self.delta

    def laplacian(self) -> GradedMap:
        """L = [d, δ]"""
        return supercommutator(self.require_d(), self.require_delta())

    def dual(self) -> "Complex":
        """(E*, d̃, δ̃) with transposed data"""
        return Complex(
            self.space.dual(),
            None if self.d is None else dual_transpose(self.d),
            None if self.delta is None else dual_transpose(self.delta),
        )

    def regraded(self, offset: int) -> "Complex":
        return Complex(
            self.space.relabel(offset),
            None if self.d is None else regrade(self.d, offset),
            None if self.delta is None else regrade(self.delta, offset),
        )

    def conjugated(self, g: GradedMap) -> "Complex":
        return Complex(
            g.target,
            None if self.d is None else conjugate(g, self.d),
            None if self.delta is None else conjugate(g, self.delta),
        )


def direct_sum(c1: Complex, c2: Complex) -> Complex:
    space = direct_sum_space(c1.space, c2.space)
    d = delta = None
    if c1.d is not None and c2.d is not None:
        d = direct_sum_map(c1.d, c2.d)
    if c1.delta is not None and c2.delta is not None:
        delta = direct_sum_map(c1.delta, c2.delta)
    return Complex(space, d, delta)


def numerical_rank(matrix: np.ndarray, rtol: Optional[float] = None, scale: Optional[float] = None) -> int:
    """
    Number of singular values above rtol · max(s_max, scale) and above rank_atol

    Args:
        matrix: any 2-D array
        rtol: relative threshold (configured rank_rtol when omitted)
        scale: ambient operator norm, for blocks cut out of a larger map
    """
    if matrix.size == 0:
        return 0
    cfg = _numerics()
    s = linalg.svdvals(matrix)
    rtol = cfg.rank_rtol if rtol is None else rtol
    reference = max(float(s[0]), 0.0 if scale is None else float(scale))
    return int(np.sum((s > rtol * reference) & (s > cfg.rank_atol)))


def as_columns(vectors, dim: int) -> np.ndarray:
    """Column array of vectors in a degree of dimension `dim`; a 1-D array is a single column"""
    array = np.asarray(vectors, dtype=complex)
    if array.ndim == 1:
        array = array[:, None] if array.size else np.zeros((dim, 0), dtype=complex)
    if array.ndim != 2 or array.shape[0] != dim:
        raise StructuralError(f"expected columns of length {dim}, got shape {array.shape}")
    return array


def range_basis(matrix: np.ndarray, rtol: Optional[float] = None) -> np.ndarray:
    """Orthonormal basis of the column space"""
    m = matrix.shape[0]
    if matrix.size == 0:
        return np.zeros((m, 0), dtype=complex)
    u, s, _ = linalg.svd(matrix, full_matrices=False)
    rank = numerical_rank(matrix, rtol)
    return u[:, :rank].astype(complex)


def kernel_basis(matrix: np.ndarray, rtol: Optional[float] = None) -> np.ndarray:
    """Orthonormal basis of the null space"""
    m, n = matrix.shape
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    if m == 0:
        return np.eye(n, dtype=complex)
    _, _, vh = linalg.svd(matrix, full_matrices=True)
    rank = numerical_rank(matrix, rtol)
    return vh[rank:].conj().T.astype(complex)


def coordinates(basis: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Solve basis @ X = vectors in the least-squares sense"""
    if basis.shape[1] == 0 or vectors.shape[1] == 0:
        return np.zeros((basis.shape[1], vectors.shape[1]), dtype=complex)
    solution, *_ = linalg.lstsq(basis, vectors)
    return solution


def _incoming_block(space: GradedSpace, f: GradedMap, i: int) -> np.ndarray:
    j = i - f.shift
    if space.contains(j):
        return f.block(j)
    return np.zeros((space.dim(i), 0), dtype=complex)


def _outgoing_block(space: GradedSpace, f: GradedMap, i: int) -> np.ndarray:
    if space.contains(i + f.shift):
        return f.block(i)
    return np.zeros((0, space.dim(i)), dtype=complex)


@dataclass(frozen=True, eq=False)
class CohomologyData:
    """Cohomology of one differential with representatives of a basis per degree"""

    space: GradedSpace
    dims: Dict[int, int]
    representatives: Dict[int, np.ndarray]
    images: Dict[int, np.ndarray]
    kernels: Dict[int, np.ndarray]

    @property
    def is_exact(self) -> bool:
        return not any(self.dims.values())

    @property
    def euler_characteristic(self) -> int:
        return sum(sign(i) * n for i, n in self.dims.items())

    def class_of(self, i: int, vectors: np.ndarray, atol: float = 1e-8) -> np.ndarray:
        """Coordinates of the classes of closed columns in the representative basis"""
        vectors = as_columns(vectors, self.space.dim(i))
        reps, image = self.representatives[i], self.images[i]
        stacked = np.hstack([reps, image])
        coords = coordinates(stacked, vectors)
        residual = np.linalg.norm(stacked @ coords - vectors) if vectors.size else 0.0
        if residual > atol * max(1.0, np.linalg.norm(vectors)):
            raise NotClosedError(f"vectors in degree {i} are not closed (residual {residual:.3e})")
        return coords[:reps.shape[1]]


def _homology(space: GradedSpace, f: GradedMap, rtol: Optional[float] = None) -> CohomologyData:
    dims, reps, images, kernels = {}, {}, {}, {}
    for i in space.degrees:
        kernel = kernel_basis(_outgoing_block(space, f, i), rtol)
        image = range_basis(_incoming_block(space, f, i), rtol)
        if image.shape[1] > kernel.shape[1]:
            raise NotADifferentialError(f"image exceeds kernel in degree {i}")
        if kernel.shape[1]:
            rep = kernel @ kernel_basis(image.conj().T @ kernel, rtol)
        else:
            rep = np.zeros((space.dim(i), 0), dtype=complex)
        if rep.shape[1] != kernel.shape[1] - image.shape[1]:
            raise StructuralError(f"inconsistent rank decisions in degree {i}")
        dims[i], reps[i], images[i], kernels[i] = rep.shape[1], rep, image, kernel
    return CohomologyData(space, dims, reps, images, kernels)


def cohomology(c: Complex, rtol: Optional[float] = None) -> CohomologyData:
    """H(E, d)"""
    return _homology(c.space, c.require_d(), rtol)


def delta_cohomology(c: Complex, rtol: Optional[float] = None) -> CohomologyData:
    """H(E, δ) for δ of degree -1"""
    return _homology(c.space, c.require_delta(), rtol)


def _drop_roundoff(matrix: np.ndarray, floor: float) -> np.ndarray:
    """Zero the singular directions of `matrix` below `floor`"""
    if not matrix.size:
        return matrix
    u, s, vh = linalg.svd(matrix, full_matrices=False)
    if s[-1] > floor:
        return matrix
    return (u * np.where(s > floor, s, 0.0)) @ vh


def restrict_complex(c: Complex, bases: Mapping[int, np.ndarray], atol: float = 1e-8,
                     numerics: Optional[NumericsConfig] = None) -> Complex:
    """
    Coordinates of d and δ on an invariant graded subspace

    Singular values of the restricted blocks below rank_rtol times the ambient norm are
    set to zero, so a map that only survives as roundoff restricts to the zero map.

    Args:
        c: ambient complex
        bases: degree -> column basis of the subspace in that degree
        atol: relative tolerance for the invariance check

    Returns:
        Complex on the coordinate space
    """
    cfg = _numerics(numerics)
    sub = GradedSpace(c.space.p, tuple(bases[i].shape[1] for i in c.space.degrees))

    def _restrict(f: Optional[GradedMap]) -> Optional[GradedMap]:
        if f is None:
            return None
        floor = cfg.rank_rtol * f.norm()
        blocks = {}
        for i in sub.degrees:
            j = i + f.shift
            if not sub.contains(j):
                continue
            image = f.block(i) @ bases[i]
            coords = coordinates(bases[j], image)
            residual = np.linalg.norm(bases[j] @ coords - image) if image.size else 0.0
            if residual > atol * max(1.0, f.norm()):
                raise StructuralError(f"subspace is not invariant in degree {i} (residual {residual:.3e})")
            blocks[i] = _drop_roundoff(coords, floor)
        return GradedMap(sub, sub, f.shift, blocks)

    return Complex(sub, _restrict(c.d), _restrict(c.delta))


def dual_representatives(c: Complex, representatives: Mapping[int, np.ndarray]) -> Dict[int, np.ndarray]:
    """
    Closed chains of the transposed complex whose classes are dual to the given ones

    Args:
        c: complex with d
        representatives: degree i -> closed columns h spanning H^i(E, d)

    Returns:
        degree -i of E* -> columns h* with h*ᵀ h = 1 and h* ∘ d = 0
    """
    space = c.space
    d = c.require_d()
    dual = {}
    for i in space.degrees:
        h = as_columns(representatives.get(i, np.zeros((space.dim(i), 0))), space.dim(i))
        if not h.shape[1]:
            dual[-i] = np.zeros((space.dim(i), 0), dtype=complex)
            continue
        closed = kernel_basis(_incoming_block(space, d, i).T)
        pairing = h.T @ closed
        if numerical_rank(pairing) != h.shape[1]:
            raise NotClosedError(f"representatives in degree {i} do not give independent classes")
        dual[-i] = closed @ linalg.pinv(pairing)
    return dual


# ---------------------------------------------------------------------------
# Seeded random complexes
# ---------------------------------------------------------------------------

def random_invertible(rng: np.random.Generator, n: int,
                      numerics: Optional[NumericsConfig] = None) -> np.ndarray:
    """I + scale * G with unit-variance complex G, resampled while ill-conditioned"""
    cfg = _numerics(numerics)
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    while True:
        g = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
        m = np.eye(n) + cfg.automorphism_scale * g
        if np.linalg.cond(m) <= cfg.automorphism_cond_max:
            return m


def random_automorphism(rng: np.random.Generator, space: GradedSpace) -> GradedMap:
    return GradedMap(space, space, 0, {i: random_invertible(rng, space.dim(i)) for i in space.degrees})


def random_unitary(rng: np.random.Generator, space: GradedSpace) -> GradedMap:
    """Degree-0 unitary automorphism from the QR factor of a complex Gaussian matrix per degree"""
    blocks = {}
    for i in space.degrees:
        n = space.dim(i)
        if not n:
            continue
        g = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
        q, r = linalg.qr(g)
        blocks[i] = q * (np.diag(r) / np.abs(np.diag(r)))
    return GradedMap(space, space, 0, blocks)


def random_map(rng: np.random.Generator, source: GradedSpace, target: GradedSpace, shift: int) -> GradedMap:
    blocks = {}
    for i in source.degrees:
        if target.contains(i + shift):
            shape = (target.dim(i + shift), source.dim(i))
            blocks[i] = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    return GradedMap(source, target, shift, blocks)


def random_spectrum(rng: np.random.Generator, count: int, low: float = 0.3, high: float = 4.0) -> np.ndarray:
    """Nonzero eigenvalues, log-uniform in modulus with uniform phase"""
    moduli = np.exp(rng.uniform(np.log(low), np.log(high), size=count))
    phases = rng.uniform(-np.pi, np.pi, size=count)
    return moduli * np.exp(1j * phases)


def exact_ranks(space: GradedSpace) -> Dict[int, int]:
    """Ranks r_i of d^i for an exact complex on `space`, r_{p-1} = 0"""
    chi = space.euler_characteristic
    if chi != 0:
        raise InfeasibleDimsError(f"Euler characteristic χ = {chi} ≠ 0 for dims {space.dims}")
    ranks = {space.p - 1: 0}
    for i in space.degrees:
        ranks[i] = space.dim(i) - ranks[i - 1]
        if ranks[i] < 0:
            raise InfeasibleDimsError(f"rank r_{i} = {ranks[i]} < 0 for dims {space.dims}")
    return ranks


def delta_exact_ranks(space: GradedSpace) -> Dict[int, int]:
    """Ranks t_i of δ^i: E^i -> E^{i-1} for an exact δ, t_{q+1} = 0"""
    chi = space.euler_characteristic
    if chi != 0:
        raise InfeasibleDimsError(f"Euler characteristic χ = {chi} ≠ 0 for dims {space.dims}")
    ranks = {space.q + 1: 0}
    for i in reversed(space.degrees):
        ranks[i] = space.dim(i) - ranks[i + 1]
        if ranks[i] < 0:
            raise InfeasibleDimsError(f"rank t_{i} = {ranks[i]} < 0 for dims {space.dims}")
    return ranks


def random_exact_space(rng: np.random.Generator, span: int, max_rank: int = 3,
                       p_range: Sequence[int] = (-2, 2)) -> GradedSpace:
    """Dims n_i = r_{i-1} + r_i from random ranks, degrees p..p+span"""
    p = int(rng.integers(p_range[0], p_range[1] + 1))
    while True:
        ranks = [int(r) for r in rng.integers(0, max_rank + 1, size=span)]
        if any(ranks):
            break
    padded = [0] + ranks + [0]
    return GradedSpace(p, tuple(padded[k] + padded[k + 1] for k in range(span + 1)))


@dataclass(frozen=True, eq=False)
class SplitComplex:
    """
    A conjugated split model: per degree i the model basis is
    [image of d^{i-1} (r_{i-1}) | harmonic (β_i) | complement (r_i)].
    """

    complex: Complex
    model: Complex
    gauge: GradedMap
    ranks: Dict[int, int]
    harmonic: Dict[int, int]
    spectrum: Dict[int, np.ndarray]

    @property
    def space(self) -> GradedSpace:
        return self.model.space

    @property
    def representatives(self) -> Dict[int, np.ndarray]:
        """Closed chains whose classes form a basis of H(E, d)"""
        reps = {}
        for i in self.space.degrees:
            start = self.ranks[i - 1]
            columns = np.eye(self.space.dim(i), dtype=complex)[:, start:start + self.harmonic[i]]
            reps[i] = self.gauge.block(i) @ columns
        return reps

    def commuting_automorphism(self, rng: np.random.Generator) -> GradedMap:
        """Random g with g d = d g (an element of Aut⁰_d)"""
        space = self.space
        pieces = {j: random_invertible(rng, r) for j, r in self.ranks.items()}
        blocks = {}
        for i in space.degrees:
            a, b, c = self.ranks[i - 1], self.harmonic[i], self.ranks[i]
            g = np.zeros((a + b + c, a + b + c), dtype=complex)
            g[:a, :a] = pieces[i - 1]
            g[a:a + b, a:a + b] = random_invertible(rng, b)
            g[a + b:, a + b:] = pieces[i]
            g[:a, a:] = rng.standard_normal((a, b + c))
            g[a:a + b, a + b:] = rng.standard_normal((b, c))
            blocks[i] = g
        model_g = GradedMap(space, space, 0, blocks)
        return conjugate(self.gauge, model_g)


def _split_model(space: GradedSpace, ranks: Dict[int, int], harmonic: Dict[int, int],
                 spectrum: Dict[int, np.ndarray], with_delta: bool) -> Complex:
    d_blocks, delta_blocks = {}, {}
    harmonic_space = GradedSpace(space.p, tuple(harmonic[i] for i in space.degrees))
    t = delta_exact_ranks(harmonic_space) if with_delta else {}
    for i in space.degrees:
        if not space.contains(i + 1):
            continue
        a, b, c = ranks[i - 1], harmonic[i], ranks[i]
        a1, b1 = ranks[i], harmonic[i + 1]
        d = np.zeros((space.dim(i + 1), space.dim(i)), dtype=complex)
        d[:a1, a + b:] = np.eye(c)
        d_blocks[i] = d
        if with_delta:
            delta = np.zeros((space.dim(i), space.dim(i + 1)), dtype=complex)
            delta[a + b:, :a1] = np.diag(spectrum[i])
            # harmonic part: source piece of degree i+1 onto the image piece of degree i
            t1 = t[i + 1]
            src = a1 + t[i + 2]
            delta[a:a + t1, src:src + t1] = np.eye(t1)
            delta_blocks[i + 1] = delta
    d = GradedMap(space, space, 1, d_blocks)
    delta = GradedMap(space, space, -1, delta_blocks) if with_delta else None
    return Complex(space, d, delta)


def random_split_complex(seed: Seed, dims: Sequence[int], p: int = 0,
                         harmonic: Optional[Sequence[int]] = None,
                         with_delta: bool = True) -> SplitComplex:
    """
    Build a split model and conjugate it by a random degree-0 automorphism

    Args:
        seed: integer seed, seed sequence or Generator
        dims: total dimension per degree, starting at degree p
        p: lowest degree
        harmonic: cohomology dims β_i of d (must themselves carry an exact δ)
        with_delta: also build δ with [d, δ] invertible off the harmonic part

    Returns:
        SplitComplex (deterministic per seed)
    """
    rng = make_rng(seed)
    space = GradedSpace(p, tuple(dims))
    betas = tuple(harmonic) if harmonic is not None else (0,) * len(space.dims)
    if len(betas) != len(space.dims):
        raise StructuralError("harmonic dims must match dims")
    core = GradedSpace(p, tuple(n - b for n, b in zip(space.dims, betas)))
    ranks = exact_ranks(core)
    betas_by_degree = {i: betas[i - p] for i in space.degrees}
    spectrum = {i: random_spectrum(rng, ranks[i]) for i in space.degrees}
    model = _split_model(space, ranks, betas_by_degree, spectrum, with_delta)
    gauge = random_automorphism(rng, space)
    logger.debug(f"📥 split complex dims={space.dims} p={p} harmonic={betas}")
    return SplitComplex(model.conjugated(gauge), model, gauge, ranks, betas_by_degree, spectrum)


def random_exact_complex(seed: Seed, dims: Sequence[int], p: int = 0) -> Complex:
    """Exact d on the given dims; infeasible dims raise InfeasibleDimsError"""
    return random_split_complex(seed, dims, p, with_delta=False).complex


def random_exact_pair(seed: Seed, dims: Sequence[int], p: int = 0) -> Complex:
    """Exact d and δ with [d, δ] invertible"""
    return random_split_complex(seed, dims, p, with_delta=True).complex


def random_gluing_complex(seed: Seed, dims: Sequence[int], harmonic: Sequence[int], p: int = 0) -> SplitComplex:
    """d with cohomology dims `harmonic`, δ exact, [d, δ] = 0 on the harmonic summand"""
    return random_split_complex(seed, dims, p, harmonic=harmonic, with_delta=True)
