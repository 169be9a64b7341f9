"""
Fried Dynamics
Fried zeta functions of suspension flows of hyperbolic SL(2,Z) matrices with a
unitary twist along the suspension circle: orbit enumeration, truncated Euler
products with tail bounds, orbit-sum log series and the rational closed form.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy import special
from sympy import Matrix, ZZ, divisors, eye, mobius
from sympy.matrices.normalforms import smith_normal_form

from .config import ZetaConfig, get_system_config
from .errors import NonHyperbolicError, StructuralError, ZetaSingularityError
from .graded_core import sign

logger = logging.getLogger(__name__)

IntMatrix = Tuple[Tuple[int, int], Tuple[int, int]]

_LOG_MAX = math.log(np.finfo(float).max)


def _as_matrix(entries: Union[Sequence[int], Sequence[Sequence[int]]]) -> IntMatrix:
    flat = np.asarray(entries).reshape(-1).tolist()
    if len(flat) != 4:
        raise StructuralError(f"expected 4 matrix entries, got {len(flat)}")
    if any(int(x) != x for x in flat):
        raise NonHyperbolicError(f"matrix entries must be integers, got {flat}")
    a, b, c, d = (int(x) for x in flat)
    return (a, b), (c, d)


@dataclass(frozen=True)
class SuspensionModel:
    """Suspension of a hyperbolic A ∈ SL(2,Z) with roof 1 and holonomy e^{iθ} per unit time"""

    matrix: IntMatrix
    theta: float = 0.0
    n_u: int = 1
    n_s: int = 1
    roof: float = 1.0

    def __post_init__(self):
        matrix = _as_matrix(self.matrix)
        (a, b), (c, d) = matrix
        if a * d - b * c != 1:
            raise NonHyperbolicError(f"det A = {a * d - b * c} ≠ 1")
        if abs(a + d) <= 2:
            raise NonHyperbolicError(f"|tr A| = {abs(a + d)} ≤ 2, A is not hyperbolic")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "theta", float(self.theta))

    @classmethod
    def from_entries(cls, text: str, theta: float = 0.0) -> "SuspensionModel":
        """Parse 'a,b,c,d'"""
        try:
            entries = [int(x) for x in text.split(",")]
        except ValueError as exc:
            raise NonHyperbolicError(f"cannot parse matrix '{text}'") from exc
        return cls(_as_matrix(entries), theta)

    @property
    def n(self) -> int:
        return self.n_u + self.n_s + 1

    @property
    def trace(self) -> int:
        return self.matrix[0][0] + self.matrix[1][1]

    @property
    def expanding_eigenvalue(self) -> float:
        """Signed eigenvalue λ with |λ| > 1"""
        t = self.trace
        return (t + math.copysign(math.sqrt(t * t - 4), t)) / 2.0

    @property
    def entropy(self) -> float:
        return math.log(abs(self.expanding_eigenvalue))

    def conjugate(self) -> "SuspensionModel":
        """The model twisted by the dual bundle F* (holonomy e^{-iθ})"""
        return SuspensionModel(self.matrix, -self.theta, self.n_u, self.n_s, self.roof)


def _matrix_of(model_or_matrix) -> IntMatrix:
    if isinstance(model_or_matrix, SuspensionModel):
        return model_or_matrix.matrix
    return SuspensionModel(_as_matrix(model_or_matrix)).matrix


def trace_powers(model_or_matrix, K: int) -> Tuple[int, ...]:
    """tr A^k for k = 1..K via tr A^{k+1} = tr A · tr A^k - tr A^{k-1}"""
    (a, _), (_, d) = _matrix_of(model_or_matrix)
    t = a + d
    previous, current = 2, t
    traces = []
    for _ in range(K):
        traces.append(current)
        previous, current = current, t * current - previous
    return tuple(traces)


def fixed_counts(model_or_matrix, K: int) -> Tuple[int, ...]:
    """N_k = |det(A^k - I)| = |2 - tr A^k| for k = 1..K"""
    return tuple(abs(2 - t) for t in trace_powers(model_or_matrix, K))


def fixed_count_smith(model_or_matrix, k: int) -> int:
    """|coker(A^k - I)| from the Smith normal form over Z"""
    power = Matrix(_matrix_of(model_or_matrix)) ** k - eye(2)
    snf = smith_normal_form(power, domain=ZZ)
    count = 1
    for i in range(2):
        count *= abs(int(snf[i, i]))
    return count


def primitive_counts(fixed: Sequence[int]) -> Tuple[int, ...]:
    """
    P_k = (1/k) Σ_{d|k} μ(k/d) N_d

    Raises StructuralError when the inversion is not integral or Σ_{d|k} d P_d ≠ N_k.
    """
    primitive = []
    for k in range(1, len(fixed) + 1):
        total = sum(int(mobius(k // d)) * int(fixed[d - 1]) for d in divisors(k))
        if total % k:
            raise StructuralError(f"Σ μ(k/d) N_d = {total} is not divisible by k = {k}")
        primitive.append(total // k)
    for k in range(1, len(fixed) + 1):
        if sum(d * primitive[d - 1] for d in divisors(k)) != fixed[k - 1]:
            raise StructuralError(f"primitive counts do not reproduce N_{k}")
    return tuple(primitive)


def stable_sign(model_or_matrix, k: int) -> int:
    """Sign of the stable eigenvalue of A^k"""
    (a, _), (_, d) = _matrix_of(model_or_matrix)
    return sign(k) if a + d < 0 else 1


def return_map_signs(model_or_matrix, k: int, n_u: int = 1) -> Tuple[int, int]:
    """
    (ε_u, ε_s) for the k-th return map P = A^k

    ε_u = (-1)^{n_u} sgn det(1 - P|T_u) sgn det P|T_u and ε_s = sgn det P|T_s.
    """
    matrix = _matrix_of(model_or_matrix)
    lam = SuspensionModel(matrix).expanding_eigenvalue
    unstable_sign = int(np.sign(lam)) ** k
    one_minus = int(np.sign(1.0 - unstable_sign * abs(lam) ** k))
    return sign(n_u) * one_minus * unstable_sign, stable_sign(matrix, k)


@dataclass(frozen=True)
class OrbitTable:
    """Periodic-orbit data up to period K (roof 1, so the flow period of a k-orbit is k)"""

    fixed: Tuple[int, ...]
    primitive: Tuple[int, ...]
    signs: Tuple[int, ...]
    orientation: Tuple[int, ...]
    theta: float
    n_u: int
    n_s: int
    growth: float

    @property
    def K(self) -> int:
        return len(self.fixed)

    @property
    def n(self) -> int:
        return self.n_u + self.n_s + 1

    @property
    def periods(self) -> Tuple[int, ...]:
        return tuple(range(1, self.K + 1))

    def holonomy(self, k: int) -> complex:
        return complex(np.exp(1j * k * self.theta))


def orbit_table(model: SuspensionModel, K: int) -> OrbitTable:
    fixed = fixed_counts(model, K)
    matrix = model.matrix
    orientation = tuple(sign(0) for _ in range(K))  # det A^k = 1
    return OrbitTable(fixed, primitive_counts(fixed), tuple(stable_sign(matrix, k) for k in range(1, K + 1)),
                      orientation, model.theta, model.n_u, model.n_s, abs(model.expanding_eigenvalue))


def single_orbit_table(K: int, n_s: int = 0, theta: float = 0.0) -> OrbitTable:
    """One primitive orbit of period 1 (N_k = 1 for every k)"""
    fixed = (1,) * K
    return OrbitTable(fixed, primitive_counts(fixed), (1,) * K, (1,) * K, theta, 0, n_s, 1.0)


@dataclass(frozen=True)
class ZetaEvaluation:
    sigma: complex
    K: int
    value: complex
    tail_bound: float
    closed_form: Optional[complex] = None
    converges: bool = True

    @property
    def abs_diff(self) -> Optional[float]:
        if self.closed_form is None:
            return None
        return float(abs(self.value - self.closed_form))

    def to_row(self) -> dict:
        closed = self.closed_form if self.closed_form is not None else complex("nan")
        diff = self.abs_diff if self.abs_diff is not None else float("nan")
        return {
            "sigma_re": self.sigma.real,
            "sigma_im": self.sigma.imag,
            "K": self.K,
            "value_re": self.value.real,
            "value_im": self.value.imag,
            "tail_bound": self.tail_bound,
            "closed_re": closed.real,
            "closed_im": closed.imag,
            "abs_diff": diff,
        }


def _log_product(table: OrbitTable, sigma: complex, signs: Sequence[int], exponent_sign: int):
    """
    Sum of P_k log(1 - s_k e^{ikθ} e^{-kσ}) times exponent_sign, the summed moduli of the
    terms, and the total count P_k of vanishing factors (left out of both sums)
    """
    terms, vanishing = [], 0
    for k in table.periods:
        count = table.primitive[k - 1]
        if count == 0:
            continue
        log_factor = complex(special.log1p(-signs[k - 1] * table.holonomy(k) * np.exp(-k * sigma)))
        if np.isfinite(log_factor):
            terms.append(count * log_factor)
        elif log_factor.real == -math.inf:
            vanishing += count
        else:
            terms.append(complex(math.inf, 0.0))
    total = complex(np.sum(np.array(terms, dtype=complex)))
    if exponent_sign < 0:
        total = -total
    return total, float(np.abs(np.array(terms, dtype=complex)).sum()), vanishing


def tail_bound(table: OrbitTable, sigma: complex, magnitude: float, log_mass: float,
               config: Optional[ZetaConfig] = None) -> float:
    """
    Bound on |R(σ) - R_K(σ)| from P_k ≤ (|λ|^k + 2)/k and |log(1 - x)| ≤ |x|/(1 - |x|),
    plus a floating-point allowance of a few ulps per factor and per unit of summed log mass
    """
    cfg = config or get_system_config().zeta
    r = math.exp(-sigma.real)
    K = table.K
    if table.growth * r >= 1.0 or r >= 1.0:
        return math.inf
    geometric = (table.growth * r) ** (K + 1) / (1.0 - table.growth * r) + 2.0 * r ** (K + 1) / (1.0 - r)
    tail = geometric / ((K + 1) * (1.0 - r ** (K + 1)))
    rounding = cfg.rounding_factor * np.finfo(float).eps * (log_mass + K) * magnitude
    return float(magnitude * math.expm1(tail) + rounding)


def zeta_from_table(table: OrbitTable, sigma: complex, config: Optional[ZetaConfig] = None,
                    closed_form: Optional[complex] = None, convergence_abscissa: Optional[float] = None) -> ZetaEvaluation:
    """
    ∏_{k≤K} (1 - s_k e^{ikθ} e^{-kσ})^{(-1)^{n_s+1} P_k}

    A vanishing factor gives 0 or ∞ and an overflowing product gives ∞; both come back
    flagged as not converging with an infinite tail bound.
    """
    cfg = config or get_system_config().zeta
    sigma = complex(sigma)
    exponent_sign = sign(table.n_s + 1)
    log_value, mass, vanishing = _log_product(table, sigma, table.signs, exponent_sign)
    if vanishing or not np.isfinite(log_value) or log_value.real > _LOG_MAX:
        vanishes = exponent_sign > 0 if vanishing else log_value.real < 0
        value = 0j if vanishes else complex(math.inf, 0.0)
        logger.warning(f"⚠️ σ = {sigma}: truncated product is {'0' if value == 0 else '∞'}")
        return ZetaEvaluation(sigma, table.K, value, math.inf, closed_form, False)
    value = complex(np.exp(log_value))
    bound = tail_bound(table, sigma, abs(value), mass, cfg)
    abscissa = math.log(table.growth) if convergence_abscissa is None else convergence_abscissa
    converges = math.isfinite(bound) and sigma.real > abscissa + cfg.convergence_margin
    if not converges:
        logger.warning(f"⚠️ σ = {sigma} lies outside the guaranteed convergence region")
    return ZetaEvaluation(sigma, table.K, value, bound, closed_form, converges)


def fried_zeta_truncated(model: SuspensionModel, sigma: complex, K: Optional[int] = None,
                         config: Optional[ZetaConfig] = None) -> ZetaEvaluation:
    """
    Truncated Euler product with tail bound and the closed-form comparison

    Args:
        model: suspension model
        sigma: spectral parameter
        K: truncation period (configured default when omitted)

    Returns:
        ZetaEvaluation; closed_form is None at zeros and poles of the rational function
    """
    cfg = config or get_system_config().zeta
    K = cfg.truncation if K is None else K
    try:
        closed = fried_closed_form(model, sigma)
    except ZetaSingularityError:
        closed = None
    return zeta_from_table(orbit_table(model, K), sigma, cfg, closed)


def _w(model: SuspensionModel, sigma: complex) -> complex:
    return complex(np.exp(-complex(sigma) + 1j * model.theta))


def closed_form_order(model: SuspensionModel, sigma0: complex, rtol: float = 1e-12) -> int:
    """Order of (1 - λw)(1 - w/λ)/(1 - w)² at σ0 (negative for poles)"""
    w = _w(model, sigma0)
    lam = model.expanding_eigenvalue

    def hits(target: complex) -> int:
        return int(abs(w - target) <= rtol * max(1.0, abs(target)))

    return hits(1.0 / lam) + hits(lam) - 2 * hits(1.0)


def fried_closed_form(model: SuspensionModel, sigma: complex) -> complex:
    """(1 - λw)(1 - w/λ)/(1 - w)² with w = e^{-σ + iθ} and λ the signed expanding eigenvalue"""
    order = closed_form_order(model, sigma)
    if order != 0:
        raise ZetaSingularityError(order, sigma)
    w = _w(model, sigma)
    lam = model.expanding_eigenvalue
    return complex((1 - lam * w) * (1 - w / lam) / (1 - w) ** 2)


def fried_log_series(table_or_model: Union[OrbitTable, SuspensionModel], sigma: complex,
                     K: Optional[int] = None) -> complex:
    """(-1)^{n_s} Σ_{kj ≤ K} P_k (s_k e^{ikθ})^j e^{-jkσ} / j"""
    table = _table(table_or_model, K)
    total = 0j
    for k in table.periods:
        weight = table.signs[k - 1] * table.holonomy(k)
        for j in range(1, table.K // k + 1):
            total += table.primitive[k - 1] * weight ** j * np.exp(-j * k * complex(sigma)) / j
    return complex(sign(table.n_s) * total)


def fried_log_derivative(table_or_model: Union[OrbitTable, SuspensionModel], sigma: complex,
                         K: Optional[int] = None) -> complex:
    """d/dσ log R(σ) = (-1)^{n_s+1} Σ_{kj ≤ K} k P_k (s_k e^{ikθ})^j e^{-jkσ}"""
    table = _table(table_or_model, K)
    total = 0j
    for k in table.periods:
        weight = table.signs[k - 1] * table.holonomy(k)
        for j in range(1, table.K // k + 1):
            total += k * table.primitive[k - 1] * weight ** j * np.exp(-j * k * complex(sigma))
    return complex(sign(table.n_s + 1) * total)


def closed_form_log_derivative(model: SuspensionModel, sigma: complex) -> complex:
    """λw/(1 - λw) + (w/λ)/(1 - w/λ) - 2w/(1 - w)"""
    order = closed_form_order(model, sigma)
    if order != 0:
        raise ZetaSingularityError(order, sigma)
    w = _w(model, sigma)
    lam = model.expanding_eigenvalue
    return complex(lam * w / (1 - lam * w) + (w / lam) / (1 - w / lam) - 2 * w / (1 - w))


def _table(table_or_model, K: Optional[int]) -> OrbitTable:
    if isinstance(table_or_model, OrbitTable):
        return table_or_model
    return orbit_table(table_or_model, K if K is not None else get_system_config().zeta.truncation)


def duality_check(table_or_model: Union[OrbitTable, SuspensionModel], sigma: complex,
                  K: Optional[int] = None) -> float:
    """
    Relative residual between the reversed-flow product for F* ⊗ o(TY) and the
    (-1)^{n-1} power of the forward product

    Reversing the flow swaps stable and unstable directions; the reversed orbit carries
    holonomy e^{ikθ} and the sign sgn det A^k · (sign of the unstable eigenvalue of A^k).
    """
    table = _table(table_or_model, K)
    forward, _, _ = _log_product(table, complex(sigma), table.signs, sign(table.n_s + 1))
    if isinstance(table_or_model, SuspensionModel):
        lam_sign = 1 if table_or_model.expanding_eigenvalue > 0 else -1
        unstable = tuple(lam_sign ** k for k in table.periods)
    else:
        unstable = table.signs
    reversed_signs = tuple(o * u for o, u in zip(table.orientation, unstable))
    backward, _, _ = _log_product(table, complex(sigma), reversed_signs, sign(table.n_u + 1))
    expected = np.exp(sign(table.n - 1) * forward)
    return float(abs(np.exp(backward) - expected) / max(abs(expected), 1e-300))


def growth_bound_holds(table: OrbitTable, C: float = 3.0, c: Optional[float] = None) -> bool:
    """N_k ≤ C e^{ck} for every k ≤ K (c = log|λ| + 0.01 by default)"""
    c = math.log(table.growth) + 0.01 if c is None else c
    return all(n <= C * math.exp(c * k) for k, n in zip(table.periods, table.fixed))
