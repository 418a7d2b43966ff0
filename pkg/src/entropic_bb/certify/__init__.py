"""Numerical certificates for the entropic Benamou-Brenier identity and its bounds."""

from .bounds import (
    AssumptionConstants,
    HessianBounds,
    TailEnvelope,
    cutoff,
    cutoff_derivatives,
    hessian_bounds_endpoint,
    propagate_hessian_bound,
    tail_envelope,
)
from .checks import (
    check_gaussian_tail,
    check_gradient_growth,
    check_hessian_sandwich,
    check_polynomial_moments,
    envelope_for_path,
)
from .identity import bb_identity_from_path, verify_bb_identity
from .report import CertificateReport, read_reports_csv, write_reports_csv
from .residuals import dual_lift, dual_value, fp_weak_residual, hjb_residual

__all__ = [
    "AssumptionConstants",
    "CertificateReport",
    "HessianBounds",
    "TailEnvelope",
    "bb_identity_from_path",
    "check_gaussian_tail",
    "check_gradient_growth",
    "check_hessian_sandwich",
    "check_polynomial_moments",
    "cutoff",
    "cutoff_derivatives",
    "dual_lift",
    "dual_value",
    "envelope_for_path",
    "fp_weak_residual",
    "hessian_bounds_endpoint",
    "hjb_residual",
    "propagate_hessian_bound",
    "read_reports_csv",
    "tail_envelope",
    "verify_bb_identity",
    "write_reports_csv",
]
