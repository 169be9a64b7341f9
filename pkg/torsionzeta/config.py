"""
Torsion/Zeta Verification Configuration
Centralized numerical thresholds, tolerances and trial counts for every suite
"""

import copy
import logging
import os
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional

from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger(__name__)

DEFAULT_PRESET = "standard"


@dataclass
class NumericsConfig:
    """Thresholds shared by the linear-algebra kernels"""

    # Rank decisions
    rank_rtol: float = 1e-9  # singular values below rtol * max(s_max, scale) count as zero
    rank_atol: float = 1e-14  # absolute floor for the same decision
    differential_rtol: float = 1e-12  # ||d∘d|| <= rtol * ||d||^2
    differential_atol: float = 1e-24  # absolute floor for the same check

    # Random automorphisms: I + scale * G, resampled above cond_max
    automorphism_scale: float = 0.5
    automorphism_cond_max: float = 1e4

    # Spectral truncation
    cluster_rtol: float = 1e-8
    ring_rtol: float = 1e-6
    invertibility_rtol: float = 1e-10

    def to_dict(self) -> Dict:
        """Convert to dictionary"""
        return {
            "rank_rtol": self.rank_rtol,
            "rank_atol": self.rank_atol,
            "differential_rtol": self.differential_rtol,
            "differential_atol": self.differential_atol,
            "automorphism_scale": self.automorphism_scale,
            "automorphism_cond_max": self.automorphism_cond_max,
            "cluster_rtol": self.cluster_rtol,
            "ring_rtol": self.ring_rtol,
            "invertibility_rtol": self.invertibility_rtol,
        }


@dataclass
class VariationConfig:
    """Finite-difference settings for the κ checks"""

    step: float = 1e-4
    closedness_step: float = 1e-3
    richardson: bool = True
    loop_side: float = 1e-2
    loop_nodes: int = 8  # Gauss-Legendre nodes per edge

    def to_dict(self) -> Dict:
        """Convert to dictionary"""
        return {
            "step": self.step,
            "closedness_step": self.closedness_step,
            "richardson": self.richardson,
            "loop_side": self.loop_side,
            "loop_nodes": self.loop_nodes,
        }


@dataclass
class ZetaConfig:
    """Euler-product truncation settings"""

    truncation: int = 60
    convergence_margin: float = 0.05  # Re σ must exceed log|λ| + margin
    rounding_factor: float = 64.0  # multiplies eps in the floating-point allowance

    def to_dict(self) -> Dict:
        """Convert to dictionary"""
        return {
            "truncation": self.truncation,
            "convergence_margin": self.convergence_margin,
            "rounding_factor": self.rounding_factor,
        }


@dataclass
class ToleranceConfig:
    """Pass/fail thresholds of the verification checks"""

    section: float = 1e-9
    structural: float = 1e-9
    multiplicativity: float = 1e-10
    connection: float = 1e-5
    closedness: float = 1e-4
    homotopy: float = 1e-9
    algebraic: float = 1e-12
    gluing: float = 1e-8
    band: float = 1e-9
    projector: float = 1e-9
    zeta: float = 1e-8
    duality: float = 1e-9
    symmetry: float = 1e-10

    def to_dict(self) -> Dict:
        """Convert to dictionary"""
        return {
            "section": self.section,
            "structural": self.structural,
            "multiplicativity": self.multiplicativity,
            "connection": self.connection,
            "closedness": self.closedness,
            "homotopy": self.homotopy,
            "algebraic": self.algebraic,
            "gluing": self.gluing,
            "band": self.band,
            "projector": self.projector,
            "zeta": self.zeta,
            "duality": self.duality,
            "symmetry": self.symmetry,
        }


@dataclass
class SuiteConfig:
    """Trial counts per verification suite"""

    trials: Dict[str, int] = field(default_factory=lambda: {
        "detline": 200,
        "structural": 100,
        "variation": 20,
        "spectral": 50,
    })
    complement_choices: int = 10
    max_degree_span: int = 4  # q - p in 1..max_degree_span
    log_level: str = "INFO"  # 'DEBUG', 'INFO', 'WARNING', 'ERROR'

    def to_dict(self) -> Dict:
        """Convert to dictionary"""
        return {
            "trials": dict(self.trials),
            "complement_choices": self.complement_choices,
            "max_degree_span": self.max_degree_span,
            "log_level": self.log_level,
        }


class VerificationConfig:
    """Main configuration for the whole toolkit"""

    def __init__(self, preset: str = DEFAULT_PRESET):
        """
        Initialize system configuration

        Args:
            preset: Configuration preset ('standard', 'quick', 'thorough')
        """
        self.preset = preset
        self.numerics = NumericsConfig()
        self.variation = VariationConfig()
        self.zeta = ZetaConfig()
        self.tolerances = ToleranceConfig()

        if preset == "quick":
            self.suites = SuiteConfig(
                trials={"detline": 20, "structural": 10, "variation": 4, "spectral": 6},
                complement_choices=10,
            )

        elif preset == "thorough":
            self.suites = SuiteConfig(
                trials={"detline": 1000, "structural": 400, "variation": 60, "spectral": 200},
                complement_choices=20,
            )
            self.zeta = ZetaConfig(truncation=90)

        else:  # standard (default)
            self.suites = SuiteConfig()

        log_level = os.getenv("TORSIONZETA_LOG_LEVEL")
        if log_level:
            self.suites.log_level = log_level.upper()

    def get_full_config(self) -> Dict:
        """Get complete configuration as dictionary"""
        return {
            "preset": self.preset,
            "numerics": self.numerics.to_dict(),
            "variation": self.variation.to_dict(),
            "zeta": self.zeta.to_dict(),
            "tolerances": self.tolerances.to_dict(),
            "suites": self.suites.to_dict(),
        }

    def print_config(self):
        """Print configuration nicely"""
        print("\n" + "=" * 60)
        print("TORSION / ZETA VERIFICATION - Configuration")
        print(f"Preset: {self.preset.upper()}")
        print("=" * 60)

        print("\n🧮 NUMERICS")
        print(f"  Rank threshold: {self.numerics.rank_rtol:g} x s_max")
        print(f"  Automorphisms: I + {self.numerics.automorphism_scale} G, cond <= {self.numerics.automorphism_cond_max:g}")
        print(f"  Ring tolerance: {self.numerics.ring_rtol:g}")

        print("\n📐 VARIATION")
        print(f"  Step: {self.variation.step:g} (Richardson: {self.variation.richardson})")

        print("\n🌀 ZETA")
        print(f"  Truncation K: {self.zeta.truncation}")

        print("\n✅ SUITES")
        for name, count in self.suites.trials.items():
            print(f"  {name}: {count} trial(s)")

        print("\n" + "=" * 60 + "\n")


def with_tolerance_overrides(config: VerificationConfig, overrides: Mapping[str, float]) -> VerificationConfig:
    """
    Copy a configuration with selected tolerances replaced

    Args:
        config: base configuration
        overrides: tolerance name -> value

    Returns:
        New VerificationConfig; the base is left untouched
    """
    known = config.tolerances.to_dict()
    unknown = sorted(set(overrides) - set(known))
    if unknown:
        raise KeyError(f"unknown tolerance(s): {', '.join(unknown)}")
    updated = copy.deepcopy(config)
    for name, value in overrides.items():
        setattr(updated.tolerances, name, float(value))
    return updated


# Predefined configurations
SYSTEM_CONFIGS = {
    "standard": VerificationConfig("standard"),
    "quick": VerificationConfig("quick"),
    "thorough": VerificationConfig("thorough"),
}


def get_system_config(preset: Optional[str] = None) -> VerificationConfig:
    """
    Get system configuration by preset

    Args:
        preset: 'standard', 'quick' or 'thorough'; defaults to $TORSIONZETA_PRESET

    Returns:
        VerificationConfig instance
    """
    if preset is None:
        preset = os.getenv("TORSIONZETA_PRESET", DEFAULT_PRESET)
    if preset in SYSTEM_CONFIGS:
        return SYSTEM_CONFIGS[preset]
    logger.warning(f"⚠️ Unknown preset '{preset}', using '{DEFAULT_PRESET}'")
    return SYSTEM_CONFIGS[DEFAULT_PRESET]
