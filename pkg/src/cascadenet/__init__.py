"""Cascading failures in cross-holding financial networks.

Simulation of the switched dynamics, equilibrium analysis and the monotone
sign-space iteration for worst- and best-case outcomes.
"""

from .dynamics import PriceOverride, PriceSignal, Trajectory, check_positivity_condition, simulate, step
from .equilibria import (
    OrthantEquilibrium,
    RegimeReport,
    TranslatedSystem,
    classify_regime,
    enumerate_equilibria,
    no_all_fail_certificate,
    orthant_equilibrium,
    stability_report,
    translate,
)
from .model import FinancialNetwork, failure_indicator, orthant_sign_pattern, validate
from .signiter import attractors, fixed_sign_classification, iterate_best, iterate_worst, sign_step

__version__ = "0.1.0"
