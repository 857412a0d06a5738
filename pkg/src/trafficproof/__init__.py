"""Cross-confirmation of perceived vehicles via proofs of a shared secret.

A vehicle that both heard a target's pseudonym and read its number
plate can publish a recoverable signature made with a key derived from
the two; anyone holding two such proofs from distinct senders can
confirm the target exists by comparing the recovered public keys,
learning nothing about pseudonym or plate.  The package bundles the
proof scheme, the 70-byte wire format that carries proofs inside
collective perception messages, prover/verifier station logic, and a
deterministic traffic simulator that measures how often real traffic
gets cross-confirmed.
"""

from .crypto import (
    EmptyPlate,
    InvalidPseudonym,
    NumberPlate,
    ProofSignature,
    Pseudonym,
    RecoveryFailed,
    canonicalize_shared_secret,
    derive_public_key,
    derive_scalar,
    make_proof,
    match_proofs,
    recover_key,
)
from .station import ObjectConfirmed, Observation, Prover, Verifier
from .wire import (
    Cpm,
    PerceivedObject,
    ProofEntry,
    WireError,
    decode_cpm,
    decode_proof_entry,
    encode_cpm,
    encode_proof_entry,
    prefix_of,
)

__version__ = "0.1.0"
