"""Exact counting of Hecke double-coset elements that nearly preserve a Hermitian form."""

from .gaussian import GaussianInt, GaussianRational, SplitPrime, parse_gaussian, parse_gaussian_rational, split_primes_in_window, valuation
from .linalg import GaussMatrix, SelfAdjointMatrix, gram_schmidt_diagonalize, smith_normal_form
from .enumeration import ShellQuery, enumerate_interval, enumerate_shell
from .polarization import PolarizationWitness, exhaustive_polarization, polarize
from .hecke import (
    EXACT,
    CountQuery,
    DetPower,
    HeckeCosetSpec,
    HeckeSet,
    VerificationReport,
    count_S,
    det_power,
    enumerate_S,
    membership_test,
    verify_one_prime_bound,
    verify_two_primes_empty,
)
from .pipeline import EndgameConfig, Envelope, PipelineTrace, q_from_point, run_pipeline, validate_M
from .experiments import amplification_diagnostic, d_lambda, parse_config, run_experiments

__version__ = "0.1.0"

__all__ = [
    "GaussianInt", "GaussianRational", "SplitPrime", "parse_gaussian", "parse_gaussian_rational",
    "split_primes_in_window", "valuation", "GaussMatrix", "SelfAdjointMatrix", "gram_schmidt_diagonalize",
    "smith_normal_form", "ShellQuery", "enumerate_interval", "enumerate_shell", "PolarizationWitness",
    "exhaustive_polarization", "polarize", "EXACT", "CountQuery", "DetPower", "HeckeCosetSpec", "HeckeSet",
    "VerificationReport", "count_S", "det_power", "enumerate_S", "membership_test", "verify_one_prime_bound",
    "verify_two_primes_empty", "EndgameConfig", "Envelope", "PipelineTrace", "q_from_point", "run_pipeline",
    "validate_M", "amplification_diagnostic", "d_lambda", "parse_config", "run_experiments",
]
