"""Exact and Monte Carlo checks of the probabilistic guarantees."""
from .bernoulli import bernoulli_extremes, poisson_binomial, profile_value, reference_extremes
from .certificate import (
    CertificateContext,
    CertificateParams,
    certificate_trial,
    combine_certificate,
    construct_y,
    expected_y,
    expected_z,
    verify_feasibility,
)
from .evenness import EdgeAnalysis, cut_parity_law, edge_law, estimate_p, even_at_last
from .lemmas import LemmaReport, lemma_suite

__all__ = [
    "CertificateContext",
    "CertificateParams",
    "EdgeAnalysis",
    "LemmaReport",
    "bernoulli_extremes",
    "certificate_trial",
    "combine_certificate",
    "construct_y",
    "cut_parity_law",
    "edge_law",
    "estimate_p",
    "even_at_last",
    "expected_y",
    "expected_z",
    "lemma_suite",
    "poisson_binomial",
    "profile_value",
    "reference_extremes",
    "verify_feasibility",
]
