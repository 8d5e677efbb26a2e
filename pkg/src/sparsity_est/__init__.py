"""Nonadaptive sparsity estimation for group testing and linear measurements."""

from .bits import BitMatrix, BitVector, NoiseBudget, SupportSet, or_measure
from .certifier import CertResult, certify_noiseless, certify_noisy, universal_decode_gt
from .fields import FieldMatrix, PrimeField, RealField, field_ops
from .gt_scheme import GtScheme, GtSchemeParams, build_scheme, decode
from .linear import LinearScheme, build_random_gv, build_rs_parity, build_vandermonde_real, coset_decode

__all__ = [
    "BitMatrix",
    "BitVector",
    "CertResult",
    "FieldMatrix",
    "GtScheme",
    "GtSchemeParams",
    "LinearScheme",
    "NoiseBudget",
    "PrimeField",
    "RealField",
    "SupportSet",
    "build_random_gv",
    "build_rs_parity",
    "build_scheme",
    "build_vandermonde_real",
    "certify_noiseless",
    "certify_noisy",
    "coset_decode",
    "decode",
    "field_ops",
    "or_measure",
    "universal_decode_gt",
]
