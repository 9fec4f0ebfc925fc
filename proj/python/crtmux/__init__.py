"""Chinese-remainder multi-channel transmission: Python bindings."""

from ._crtmux import (
    Error,
    bandwidth_loss,
    crt_combine,
    crt_split,
    describe_key,
    distinguishability,
    gen_moduli,
    independence_table,
    is_probable_prime,
    keygen,
    s_max_estimate,
    transfer,
)

__all__ = [
    "Error",
    "bandwidth_loss",
    "crt_combine",
    "crt_split",
    "describe_key",
    "distinguishability",
    "gen_moduli",
    "independence_table",
    "is_probable_prime",
    "keygen",
    "s_max_estimate",
    "transfer",
]
