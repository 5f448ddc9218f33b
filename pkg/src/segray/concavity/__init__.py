"""Bound constants, sampled log-concavity checks and boundary probes."""

from .boundary import BoundarySequenceReport, boundary_probe
from .kernel import heat_kernel_spot_check
from .mformula import (MResult, compute_m_elliptic, compute_m_parabolic,
                       m_quotient, quotient_curve)
from .profiles import PotentialModulus, Profile
from .verify import (VerificationReport, sample_pairs, verify_comparison_elliptic,
                     verify_comparison_parabolic, verify_lower_bound,
                     verify_model_self)

__all__ = [
    "BoundarySequenceReport", "MResult", "PotentialModulus", "Profile",
    "VerificationReport", "boundary_probe", "compute_m_elliptic",
    "compute_m_parabolic", "heat_kernel_spot_check", "m_quotient",
    "quotient_curve", "sample_pairs", "verify_comparison_elliptic",
    "verify_comparison_parabolic", "verify_lower_bound", "verify_model_self",
]
