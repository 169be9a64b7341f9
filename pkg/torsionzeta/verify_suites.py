"""
Verification Suites
Seeded property checks for determinant lines, variation forms, spectral
truncation and Fried zeta functions, collected into a deterministic report
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import VerificationConfig, get_system_config
from .detline import (
    act_aut,
    alternating_determinant,
    check_abc_multiplicativity,
    check_gamma_axioms,
    contact_model,
    det_on_cohomology,
    dual_tau_pairing,
    hermitian_norm,
    koszul_sign,
    laplacian_alternating_det,
    norm_formula_d,
    norm_formula_delta,
    rho_gamma,
    shift_identity_check,
    tau_d,
    tau_delta,
    torsion_ratio,
    torsion_ratio_formula,
    transported_tau,
)
from .errors import TorsionZetaError, ZetaSingularityError
from .fried_dynamics import (
    SuspensionModel,
    closed_form_log_derivative,
    closed_form_order,
    duality_check,
    fixed_count_smith,
    fried_closed_form,
    fried_log_derivative,
    fried_log_series,
    fried_zeta_truncated,
    growth_bound_holds,
    orbit_table,
    return_map_signs,
    single_orbit_table,
    stable_sign,
    zeta_from_table,
)
from .graded_core import (
    Complex,
    GradedMap,
    GradedSpace,
    conjugate,
    direct_sum,
    random_automorphism,
    random_exact_space,
    random_map,
    random_split_complex,
    random_unitary,
    regrade,
    supercommutator,
    supertrace,
    trial_rng,
)
from .spectral_truncation import (
    admissible_cutoffs,
    band_section_identity,
    dual_glued_relation,
    eigenvalue_clusters,
    glue_across_cutoffs,
    spectral_split,
    truncated_dim_alternating_sum,
    truncated_homotopy_residual,
    zeta_order_at,
)
from .variation_forms import (
    check_algebraic_identities,
    check_connection_identity,
    check_kappa_closed,
    conjugation_curve,
    homotopy_from_metric,
    kappa_density,
    kappa_eval,
    loop_integral_real_kappa,
    random_homotopy,
    scaling_curve,
    two_parameter_family,
)

logger = logging.getLogger(__name__)

SUITES = ("detline", "variation", "spectral", "fried")
CAT_MAP = ((2, 1), (1, 1))


@dataclass
class CheckRecord:
    """One verified identity: residual against tolerance"""

    suite: str
    anchor: str
    residual: float
    tolerance: float
    trial: Optional[int] = None
    wall_time: Optional[float] = None
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.error is None and bool(self.residual <= self.tolerance)

    def to_dict(self) -> Dict:
        """Convert to dictionary"""
        out = {
            "suite": self.suite,
            "anchor": self.anchor,
            "trial": self.trial,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }
        if self.wall_time is not None:
            out["wall_time"] = self.wall_time
        if self.error is not None:
            out["error"] = self.error
        return out


@dataclass
class SuiteReport:
    suite: str
    seed: int
    preset: str
    checks: List[CheckRecord] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[CheckRecord]:
        return [check for check in self.checks if not check.passed]

    def to_dict(self) -> Dict:
        """Convert to dictionary"""
        return {
            "suite": self.suite,
            "seed": self.seed,
            "preset": self.preset,
            "passed": self.passed,
            "total_checks": len(self.checks),
            "failed_checks": len(self.failures),
            "checks": [check.to_dict() for check in self.checks],
        }


def _relative(value: complex, expected: complex) -> float:
    return float(abs(value - expected) / max(abs(expected), 1e-300))


def _spread(values: Sequence[complex]) -> float:
    reference = values[0]
    return max(_relative(v, reference) for v in values)


def _harmonic_dims(rng: np.random.Generator, length: int) -> Tuple[int, ...]:
    """Dims that carry an exact δ: h_i = t_{i-1} + t_i with t_i ∈ {0, 1}"""
    ranks = [int(r) for r in rng.integers(0, 2, size=max(length - 1, 0))]
    padded = [0] + ranks + [0]
    return tuple(padded[k] + padded[k + 1] for k in range(length))


def hand_complex(d_value: complex = 2.0, delta_value: complex = 3.0) -> Complex:
    """dims (1, 1) with d = [[d_value]] and δ = [[delta_value]]"""
    space = GradedSpace(0, (1, 1))
    return Complex(space, GradedMap(space, space, 1, {0: [[d_value]]}),
                   GradedMap(space, space, -1, {1: [[delta_value]]}))


class VerificationEngine:
    """
    Runs the verification suites for one master seed

    Every trial draws from its own stream trial_rng(seed, index), so any subset or
    ordering of trials reproduces the same numbers.
    """

    def __init__(self, config: Optional[VerificationConfig] = None, seed: int = 0,
                 trials: Optional[int] = None, timings: bool = False):
        """
        Initialize verification engine

        Args:
            config: configuration (preset from the environment when omitted)
            seed: master seed
            trials: overrides the per-suite trial counts of the preset
            timings: record wall times (reports are no longer byte-identical)
        """
        self.config = config or get_system_config()
        self.seed = int(seed)
        self.trials = trials
        self.timings = timings
        self.tol = self.config.tolerances
        self._records: List[CheckRecord] = []
        self._suite = ""

    def _trial_count(self, name: str) -> int:
        if self.trials is not None:
            return int(self.trials)
        return int(self.config.suites.trials.get(name, 1))

    def _check(self, anchor: str, tolerance: float, compute: Callable[[], float], trial: Optional[int] = None):
        started = time.perf_counter()
        error = None
        try:
            residual = float(compute())
        except (TorsionZetaError, np.linalg.LinAlgError) as exc:
            residual, error = float("inf"), f"{type(exc).__name__}: {exc}"
        record = CheckRecord(self._suite, anchor, residual, float(tolerance), trial,
                             time.perf_counter() - started if self.timings else None, error)
        if not record.passed:
            logger.warning(f"⚠️ {self._suite}/{anchor} trial={trial}: residual {residual:.3e} > {tolerance:.1e}"
                           + (f" ({error})" if error else ""))
        self._records.append(record)

    def run(self, suite: str) -> SuiteReport:
        """
        Run one suite or 'all'

        Raises:
            KeyError: unknown suite name
        """
        names = SUITES if suite == "all" else (suite,)
        for name in names:
            if name not in SUITES:
                raise KeyError(f"unknown suite '{suite}' (choose from {', '.join(SUITES + ('all',))})")
        self._records = []
        for name in names:
            logger.info(f"🚀 Running suite '{name}' (seed {self.seed})")
            self._suite = name
            getattr(self, f"_run_{name}")()
        report = SuiteReport(suite, self.seed, self.config.preset, list(self._records))
        status = "✅" if report.passed else "❌"
        logger.info(f"{status} {suite}: {len(report.checks) - len(report.failures)}/{len(report.checks)} checks passed")
        return report

    # ------------------------------------------------------------------
    # detline
    # ------------------------------------------------------------------

    def _run_detline(self):
        tol = self.tol
        hand = hand_complex()
        self._check("torsion ratio of d=[[2]], δ=[[3]] equals 1/6", tol.section,
                    lambda: _relative(torsion_ratio(hand), 1.0 / 6.0))

        for m in (0, 1, 2):
            gs = contact_model(m)
            self._check(f"Γ axioms on the contact model m={m}", tol.symmetry,
                        lambda gs=gs: max(check_gamma_axioms(gs, tol.symmetry).values()))
            self._check(f"τ(d) = ρ_Γ on the contact model m={m}", tol.section,
                        lambda gs=gs: _relative(tau_d(gs.complex).scalar, rho_gamma(gs).scalar))
            self._check(f"τ(δ) = ρ_Γ on the contact model m={m}", tol.section,
                        lambda gs=gs: _relative(tau_delta(gs.complex).scalar, rho_gamma(gs).scalar))
            self._check(f"τ multiplicative over A ⊕ B ⊕ C, m={m}", tol.multiplicativity,
                        lambda gs=gs: max(check_abc_multiplicativity(gs).values()))

        for trial in range(self._trial_count("detline")):
            rng = trial_rng(self.seed, trial)
            span = int(rng.integers(1, self.config.suites.max_degree_span + 1))
            space = random_exact_space(rng, span)
            c = random_split_complex(rng, space.dims, space.p).complex
            self._check("τ(d)/τ(δ) = ∏ det [d,δ]|_i^{(-1)^i i}", tol.section,
                        lambda c=c: _relative(torsion_ratio(c), torsion_ratio_formula(c)), trial)
            self._check("∏ det [d,δ]|_i^{(-1)^i} = 1", tol.section,
                        lambda c=c: abs(laplacian_alternating_det(c) - 1.0), trial)
            choices = self.config.suites.complement_choices
            self._check("τ(d) independent of complement choices", tol.section,
                        lambda c=c, rng=rng: _spread([tau_d(c, rng).scalar for _ in range(choices)]), trial)
            self._check("τ(δ) independent of complement choices", tol.section,
                        lambda c=c, rng=rng: _spread([tau_delta(c, rng).scalar for _ in range(choices)]), trial)

        for trial in range(self._trial_count("structural")):
            rng = trial_rng(self.seed, 100_000 + trial)
            self._structural_trial(rng, trial)

    def _structural_trial(self, rng: np.random.Generator, trial: int):
        tol = self.tol
        span = int(rng.integers(1, self.config.suites.max_degree_span + 1))
        space = random_exact_space(rng, span)
        c = random_split_complex(rng, space.dims, space.p).complex
        d = c.require_d()

        a = complex(rng.uniform(0.5, 2.0) * np.exp(1j * rng.uniform(-np.pi, np.pi)))
        self._check("τ(a d) = a^{χ'} τ(d)", tol.structural,
                    lambda: _relative(tau_d(Complex(space, d * a)).scalar, a ** space.chi_prime * tau_d(c).scalar),
                    trial)

        g = random_automorphism(rng, space)

        def equivariance() -> float:
            moved, det_g = act_aut(g, c)
            return _relative(tau_d(moved).scalar, det_g * tau_d(c).scalar)

        self._check("τ(g.d) = det g · τ(d)", tol.structural, equivariance, trial)

        shift = int(rng.integers(-2, 3))

        def transport() -> float:
            f = GradedMap(space, space.relabel(shift), shift, g.blocks)
            moved = Complex(space.relabel(shift), regrade(conjugate(g, d), shift))
            return _relative(tau_d(moved, label="E'").scalar, transported_tau(f, tau_d(c).scalar))

        self._check("τ(f d f⁻¹) = (det f · τ(d))^{(-1)^{shift}}", tol.structural, transport, trial)

        betas = tuple(int(b) for b in rng.integers(0, 3, size=len(space.dims)))
        total = tuple(n + b for n, b in zip(space.dims, betas))
        sc = random_split_complex(rng, total, space.p, harmonic=betas, with_delta=False)
        h = sc.commuting_automorphism(rng)
        self._check("det g|_E = det g|_H for g commuting with d", tol.structural,
                    lambda: _relative(det_on_cohomology(h, sc.complex), alternating_determinant(h)), trial)

        self._check("<τ(d), τ(d̃)> = 1", tol.structural, lambda: abs(dual_tau_pairing(c) - 1.0), trial)
        self._check("τ_E(d) τ_E₁(-d) = 1", tol.structural, lambda: abs(shift_identity_check(c) - 1.0), trial)
        self._check("‖τ(d)‖² = ∏ det [d,d*]|_i^{(-1)^i i}", tol.structural,
                    lambda: _relative(hermitian_norm(tau_d(c)) ** 2, norm_formula_d(c)), trial)
        self._check("‖τ(δ)‖² = ∏ det [δ,δ*]|_i^{(-1)^{i-1} i}", tol.structural,
                    lambda: _relative(hermitian_norm(tau_delta(c)) ** 2, norm_formula_delta(c)), trial)
        self._check("parity bookkeeping χ ≡ dim E, χ' ≡ (χ - dim E)/2", 0.0,
                    lambda: 0.0 if space.parity_bookkeeping_holds() else 1.0, trial)

        other_space = random_exact_space(rng, span)
        other = random_split_complex(rng, other_space.dims, other_space.p).complex

        def multiplicativity() -> float:
            whole = direct_sum(c, other)
            signs = koszul_sign(c.space, other.space)
            return max(
                _relative(tau_d(whole).scalar, signs * tau_d(c).scalar * tau_d(other).scalar),
                _relative(tau_delta(whole).scalar, signs * tau_delta(c).scalar * tau_delta(other).scalar),
            )

        self._check("τ(d ⊕ d') = koszul · τ(d) τ(d')", tol.multiplicativity, multiplicativity, trial)

    # ------------------------------------------------------------------
    # variation
    # ------------------------------------------------------------------

    def _run_variation(self):
        tol = self.tol
        for trial in range(self._trial_count("variation")):
            rng = trial_rng(self.seed, 200_000 + trial)
            span = int(rng.integers(1, self.config.suites.max_degree_span + 1))
            space = random_exact_space(rng, span)
            model = random_split_complex(rng, space.dims, space.p).model
            delta = model.conjugated(random_unitary(rng, space)).require_delta()
            x = random_map(rng, space, space, 0) * 0.3
            y = random_map(rng, space, space, 0) * 0.3
            t0, u0 = (float(v) for v in rng.uniform(-0.1, 0.1, size=2))
            curve = conjugation_curve(delta, x)

            self._check("d log τ(δ) = κ along a conjugation curve", tol.connection,
                        lambda: check_connection_identity(curve, (t0,)), trial)
            self._check("d log τ(δ) = κ along a scaling curve", tol.connection,
                        lambda: check_connection_identity(scaling_curve(delta), (t0,)), trial)
            self._check("κ = Trs X along e^{tX} δ e^{-tX}", tol.connection,
                        lambda: abs(kappa_eval(curve, (t0,), (1.0,)) - supertrace(x)), trial)

            family = two_parameter_family(delta, x, y)
            self._check("𝐝κ = 0 on a two-parameter family", tol.closedness,
                        lambda: check_kappa_closed(family, (t0, u0)), trial)
            self._check("∮ Re κ = 0 around a small square", tol.closedness,
                        lambda: loop_integral_real_kappa(family, (t0, u0)), trial)

            def independence() -> float:
                delta_t = curve(t0)
                tangent = supercommutator(x, delta_t)
                base = homotopy_from_metric(delta_t)
                reference = kappa_density(base.alpha, tangent)
                others = [kappa_density(random_homotopy(rng, base).alpha, tangent) for _ in range(5)]
                return max(abs(v - reference) for v in others) / max(1.0, abs(reference))

            self._check("κ independent of the homotopy", tol.homotopy, independence, trial)

            homotopy = homotopy_from_metric(delta)
            self._check("[δ, α] = 1 for the metric homotopy", tol.homotopy, homotopy.residual, trial)
            f = random_map(rng, space, space, 0)
            identities = check_algebraic_identities(Complex(space, None, delta), homotopy, f, rng=rng)
            for name, residual in identities.items():
                self._check(name, tol.algebraic, lambda residual=residual: residual, trial)

    # ------------------------------------------------------------------
    # spectral
    # ------------------------------------------------------------------

    def _run_spectral(self):
        tol = self.tol
        hand = hand_complex()
        self._check("glued value of d=[[2]], δ=[[3]] at a=1 and a=10 equals 1/6", tol.gluing,
                    lambda: max(_relative(v, 1.0 / 6.0)
                                for v in glue_across_cutoffs(hand, [1.0, 10.0]).values.values()))

        for trial in range(self._trial_count("spectral")):
            rng = trial_rng(self.seed, 300_000 + trial)
            span = int(rng.integers(1, self.config.suites.max_degree_span + 1))
            core = random_exact_space(rng, span, max_rank=2)
            harmonic = _harmonic_dims(rng, len(core.dims)) if trial % 2 else (0,) * len(core.dims)
            dims = tuple(n + h for n, h in zip(core.dims, harmonic))
            sc = random_split_complex(rng, dims, core.p, harmonic=harmonic)
            c, reps = sc.complex, sc.representatives
            op = c.laplacian()
            cutoffs = admissible_cutoffs(op, 3)

            def gluing() -> float:
                report = glue_across_cutoffs(c, cutoffs, reps)
                if report.rejections:
                    return float("inf")
                return max(report.spread, max(_relative(v, report.direct) for v in report.values.values()))

            self._check("glued section independent of the cutoff", tol.gluing, gluing, trial)

            split = spectral_split(op, cutoffs[1])
            self._check("P_<a idempotent", tol.projector, split.idempotency_residual, trial)
            self._check("P_<a commutes with d and δ", tol.projector,
                        lambda: max(split.commutation_residual(c.require_d()),
                                    split.commutation_residual(c.require_delta())), trial)
            self._check("rank P_<a + rank P_>a = dim E", 0.0,
                        lambda: 0.0 if split.rank_additivity_holds() else 1.0, trial)
            self._check("χ(E_<a) = χ(H)", 0.0,
                        lambda: abs(truncated_dim_alternating_sum(split) - sum(
                            (-1) ** i * h for i, h in zip(c.space.degrees, harmonic))), trial)
            self._check("[δ, P k P] = P_<a", tol.homotopy,
                        lambda: truncated_homotopy_residual(split, homotopy_from_metric(c.require_delta())), trial)
            self._check("band identities on (a, b)", tol.band,
                        lambda: max(band_section_identity(c, cutoffs[0], cutoffs[-1]).values()), trial)

            def orders() -> float:
                mismatch = 0
                for cluster in eigenvalue_clusters(op):
                    expected = sum((-1) ** i * i * m for i, m in cluster.multiplicities.items())
                    mismatch += abs(zeta_order_at(op, cluster.value) - expected)
                return float(mismatch)

            self._check("zeta order = Trs[N P] at every eigenvalue", 0.0, orders, trial)
            self._check("glued value of the regraded dual complex", tol.gluing,
                        lambda: dual_glued_relation(c, cutoffs, reps), trial)

    # ------------------------------------------------------------------
    # fried
    # ------------------------------------------------------------------

    def _run_fried(self):
        tol = self.tol
        K = self.config.zeta.truncation
        cat = SuspensionModel(CAT_MAP)
        table = orbit_table(cat, K)

        self._check("cat map N_k = (1, 5, 16, 45)", 0.0,
                    lambda: sum(abs(a - b) for a, b in zip(table.fixed[:4], (1, 5, 16, 45))))
        self._check("cat map P_k = (1, 2, 5, 10)", 0.0,
                    lambda: sum(abs(a - b) for a, b in zip(table.primitive[:4], (1, 2, 5, 10))))
        self._check("N_k agrees with the Smith normal form count", 0.0,
                    lambda: sum(abs(table.fixed[k - 1] - fixed_count_smith(cat, k)) for k in range(1, 13)))
        self._check("N_k ≤ 3 e^{(log λ + 0.01) k}", 0.0,
                    lambda: 0.0 if growth_bound_holds(table) else 1.0)
        self._check("ε_u = 1 on every return map", 0.0,
                    lambda: sum(abs(return_map_signs(cat, k)[0] - 1) for k in table.periods))
        negative = SuspensionModel(((-2, -1), (-1, -1)))
        self._check("stable sign of -A is (-1)^k", 0.0,
                    lambda: sum(abs(stable_sign(negative, k) - (-1) ** k) for k in range(1, 9)))

        for step in range(16):
            sigma = 1.5 + 0.1 * step
            evaluation = fried_zeta_truncated(cat, sigma, K, self.config.zeta)
            self._check(f"truncated product = closed form at σ={sigma:.1f}", tol.zeta,
                        lambda e=evaluation: e.abs_diff)
            self._check(f"|R_K - R| ≤ tail bound at σ={sigma:.1f}", 0.0,
                        lambda e=evaluation: max(e.abs_diff - e.tail_bound, 0.0))

        self._check("R(2) ≈ 0.8190", 5e-5, lambda: abs(fried_zeta_truncated(cat, 2.0, K).value - 0.8190))
        self._check("R(σ) → 1 as σ → ∞", tol.zeta, lambda: abs(fried_closed_form(cat, 40.0) - 1.0))
        self._check("closed form has a pole of order 2 at σ = 0", 0.0,
                    lambda: abs(closed_form_order(cat, 0.0) + 2))

        def pole_raises() -> float:
            try:
                fried_closed_form(cat, 0.0)
            except ZetaSingularityError as exc:
                return float(abs(exc.order + 2))
            return 1.0

        self._check("closed form reports the pole order at σ = 0", 0.0, pole_raises)
        self._check("log series = log closed form at σ=2", tol.zeta,
                    lambda: abs(fried_log_series(table, 2.0) - np.log(fried_closed_form(cat, 2.0))))
        self._check("log series = log of the truncated product at σ=2", tol.zeta,
                    lambda: abs(fried_log_series(table, 2.0) - np.log(zeta_from_table(table, 2.0).value)))
        self._check("orbit-sum log derivative = closed-form log derivative at σ=2", tol.zeta,
                    lambda: abs(fried_log_derivative(table, 2.0) - closed_form_log_derivative(cat, 2.0)))

        def finite_difference() -> float:
            h = self.config.variation.step
            numeric = (fried_log_series(table, 2.0 + h) - fried_log_series(table, 2.0 - h)) / (2 * h)
            return abs(numeric - closed_form_log_derivative(cat, 2.0))

        self._check("central difference of the log series = closed-form log derivative", tol.connection,
                    finite_difference)
        self._check("closed form for tr A < -2 at σ=2", tol.zeta,
                    lambda: fried_zeta_truncated(negative, 2.0, K).abs_diff)

        twisted = SuspensionModel(CAT_MAP, theta=0.7)
        self._check("duality R = R_{-Z}^{(-1)^{n-1}} at θ=0", tol.duality, lambda: duality_check(table, 2.0))
        self._check("duality at θ=0.7", tol.duality, lambda: duality_check(twisted, 2.0, K))
        self._check("twist shift R_θ(σ) = R_0(σ - iθ)", tol.symmetry,
                    lambda: _relative(fried_zeta_truncated(twisted, 2.0, K).value,
                                      fried_zeta_truncated(cat, 2.0 - 0.7j, K).value))
        self._check("R_{F*}(σ) = conj R_F(σ̄)", tol.symmetry,
                    lambda: _relative(fried_zeta_truncated(twisted.conjugate(), 2.0 + 0.3j, K).value,
                                      np.conj(fried_zeta_truncated(twisted, 2.0 - 0.3j, K).value)))

        toy = single_orbit_table(K)
        self._check("single orbit log series = -log(1 - e^{-σ})", tol.zeta,
                    lambda: abs(fried_log_series(toy, 1.0) + np.log1p(-np.exp(-1.0))))
        self._check("single orbit duality", tol.duality, lambda: duality_check(toy, 1.0))


def run_verification(suite: str, seed: int = 0, trials: Optional[int] = None,
                     config: Optional[VerificationConfig] = None, timings: bool = False) -> SuiteReport:
    """Convenience wrapper around VerificationEngine.run"""
    return VerificationEngine(config, seed, trials, timings).run(suite)
