"""Proofs of a shared secret derived from a vehicle's pseudonym and plate.

Two vehicles that independently heard a target's pseudonym and saw its
number plate hold the same byte string (the shared secret).  Hashing
that secret yields a secp256k1 private key, so an ECDSA signature made
with it is evidence of knowing the secret, and because the public key
can be recovered from a signature, any third party can pair two such
signatures by recovered-key equality without learning pseudonym or
plate.  Each prover signs its own pseudonym, which binds the proof to
its sender and defeats replay under a different identity.

All operations are pure functions of their arguments: signatures use a
deterministic HMAC-SHA256 nonce (the RFC 6979 construction), so equal
inputs give byte-identical outputs on any host, and results are safe
to cache and to share across threads.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass
from functools import lru_cache

from . import curve
from .curve import N

HALF_N = N >> 1

PSEUDONYM_LEN = 16
PLATE_MAX_LEN = 12

_PLATE_ALPHABET = frozenset("ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789")


class EmptyPlate(ValueError):
    """Plate text canonicalized to zero characters."""


class InvalidPseudonym(ValueError):
    """Pseudonym is not 16 bytes or is the reserved all-zero value."""


class RecoveryFailed(ValueError):
    """Signature fields define no public key (out of range or off curve)."""


class Pseudonym(bytes):
    """16-byte opaque vehicle identifier; all-zero is reserved for 'unknown'."""

    def __new__(cls, value):
        value = bytes(value)
        if len(value) != PSEUDONYM_LEN:
            raise InvalidPseudonym(f"pseudonym must be {PSEUDONYM_LEN} bytes, got {len(value)}")
        if value == bytes(PSEUDONYM_LEN):
            raise InvalidPseudonym("all-zero pseudonym is reserved")
        return super().__new__(cls, value)


class NumberPlate(str):
    """Canonical plate string: uppercase letters and digits, 1-12 chars."""

    def __new__(cls, value):
        if not value:
            raise EmptyPlate("empty number plate")
        if len(value) > PLATE_MAX_LEN:
            raise ValueError(f"plate longer than {PLATE_MAX_LEN} characters: {value!r}")
        if not set(value) <= _PLATE_ALPHABET:
            raise ValueError(f"plate is not canonical (uppercase alphanumerics only): {value!r}")
        return super().__new__(cls, value)

    @classmethod
    def from_raw(cls, text: str) -> "NumberPlate":
        """Canonicalize free-form plate text: uppercase, drop separators."""
        cleaned = "".join(c for c in text.upper() if c in _PLATE_ALPHABET)
        if not cleaned:
            raise EmptyPlate(f"no alphanumeric characters in plate text {text!r}")
        return cls(cleaned)


@dataclass(frozen=True)
class ProofSignature:
    """Recoverable ECDSA signature (v, r, s).

    Values produced by this module always satisfy 0 < r < N, 0 < s <= N/2
    (canonical low-s form) and v in {0, 1}; consumers such as
    :func:`recover_key` re-check ranges rather than trusting them.
    """

    v: int
    r: int
    s: int


def canonicalize_shared_secret(target_id: Pseudonym, plate: str) -> bytes:
    """Build the canonical secret bytes for (pseudonym, plate).

    The encoding is ``hex(pseudonym) + "|" + canonical_plate`` so that
    equal observations on different vehicles produce identical bytes
    and the two halves can never bleed into each other ("|" occurs in
    neither lowercase hex nor a canonical plate).
    """
    target_id = Pseudonym(target_id)
    canonical = NumberPlate.from_raw(plate)
    return target_id.hex().encode("ascii") + b"|" + canonical.encode("ascii")


def _derive_scalar(ss: bytes, wf: int, order: int) -> int:
    # Iterated SHA-256 of ss, then ss||ss, ... until the digest lands in
    # (0, order).  The retry branch is astronomically rare for the real
    # group order but must exist for correctness; `order` is injectable
    # so tests can actually reach it.
    copies = 1
    while True:
        h = ss * copies
        for _ in range(wf):
            h = hashlib.sha256(h).digest()
        value = int.from_bytes(h, "big")
        if 0 < value < order:
            return value
        copies += 1


@lru_cache(maxsize=65536)
def derive_scalar(ss: bytes, wf: int = 1) -> int:
    """Hash the shared secret into a private scalar in (0, N).

    ``wf`` is the work factor: the number of SHA-256 iterations applied,
    the knob that makes offline plate brute-forcing proportionally more
    expensive.
    """
    if wf < 1:
        raise ValueError("work factor must be >= 1")
    return _derive_scalar(bytes(ss), wf, N)


@lru_cache(maxsize=65536)
def derive_public_key(ss: bytes, wf: int = 1) -> bytes:
    """Compressed public key for the secret: G * derive_scalar(ss, wf).

    This is what a vehicle that saw the target directly compares against
    keys recovered from remote proofs.
    """
    return curve.compress(curve.scalar_mult_base(derive_scalar(ss, wf)))


def _rfc6979_nonces(sk: int, digest: bytes):
    # HMAC-SHA256 nonce stream per RFC 6979; qlen == hlen == 256 so the
    # bits2int conversions are identity.
    sk_bytes = sk.to_bytes(32, "big")
    msg_bytes = (int.from_bytes(digest, "big") % N).to_bytes(32, "big")
    k = b"\x00" * 32
    v = b"\x01" * 32
    k = hmac.new(k, v + b"\x00" + sk_bytes + msg_bytes, hashlib.sha256).digest()
    v = hmac.new(k, v, hashlib.sha256).digest()
    k = hmac.new(k, v + b"\x01" + sk_bytes + msg_bytes, hashlib.sha256).digest()
    v = hmac.new(k, v, hashlib.sha256).digest()
    while True:
        v = hmac.new(k, v, hashlib.sha256).digest()
        yield int.from_bytes(v, "big")
        k = hmac.new(k, v + b"\x00", hashlib.sha256).digest()
        v = hmac.new(k, v, hashlib.sha256).digest()


@lru_cache(maxsize=65536)
def _make_proof_cached(ss: bytes, prover_id: bytes, wf: int) -> ProofSignature:
    sk = derive_scalar(ss, wf)
    digest = hashlib.sha256(prover_id).digest()
    z = int.from_bytes(digest, "big")
    for k in _rfc6979_nonces(sk, digest):
        if not 0 < k < N:
            continue
        R = curve.scalar_mult_base(k)
        r = R[0]
        # r >= N would need recovery ids 2/3; skip so v stays in {0, 1}.
        if r == 0 or r >= N:
            continue
        s = (pow(k, N - 2, N) * (z + r * sk)) % N
        if s == 0:
            continue
        v = R[1] & 1
        if s > HALF_N:
            s = N - s
            v ^= 1
        return ProofSignature(v=v, r=r, s=s)
    raise AssertionError("unreachable: nonce stream is infinite")


def make_proof(ss: bytes, prover_id: Pseudonym, wf: int = 1) -> ProofSignature:
    """Sign the prover's own pseudonym with the secret-derived key.

    The signed message is the prover's 16 pseudonym bytes (hashed with
    SHA-256), so the proof is only valid bound to that sender.  The
    nonce is deterministic in (sk, digest): repeated calls return the
    identical signature.
    """
    return _make_proof_cached(bytes(ss), bytes(Pseudonym(prover_id)), wf)


@lru_cache(maxsize=65536)
def _recover_cached(message_id: bytes, v: int, r: int, s: int) -> bytes:
    if v not in (0, 1):
        raise RecoveryFailed(f"recovery id must be 0 or 1, got {v}")
    if not 0 < r < N:
        raise RecoveryFailed("r out of range")
    if not 0 < s < N:
        raise RecoveryFailed("s out of range")
    R = curve.lift_x(r, odd_y=bool(v))
    if R is None:
        raise RecoveryFailed("r is not the x-coordinate of a curve point")
    z = int.from_bytes(hashlib.sha256(message_id).digest(), "big")
    r_inv = pow(r, N - 2, N)
    u1 = (-z * r_inv) % N
    u2 = (s * r_inv) % N
    Q = curve.double_mult(u1, u2, R)
    if Q is curve.INFINITY:
        raise RecoveryFailed("recovered point at infinity")
    return curve.compress(Q)


def recover_key(message_id: Pseudonym, sig: ProofSignature) -> bytes:
    """Public key implied by (message, signature), compressed.

    Recovery is total over in-range inputs: an unrelated (message, sig)
    pair still yields *some* key, just not one anybody else will ever
    reproduce.  The verdict comes from key equality, never from here.
    ``message_id`` bytes are digested as given; this sits on the
    verifier's per-entry hot path, so no pseudonym validation here.
    """
    return _recover_cached(bytes(message_id), sig.v, sig.r, sig.s)


def match_proofs(a: tuple[Pseudonym, ProofSignature], b: tuple[Pseudonym, ProofSignature]) -> bool:
    """True iff two proofs recover the same key and come from distinct provers.

    Same-prover pairs are rejected regardless of key equality: one vehicle
    repeating itself is not independent evidence.  Raises RecoveryFailed
    when either signature defines no key at all.
    """
    id_a, sig_a = a
    id_b, sig_b = b
    if bytes(id_a) == bytes(id_b):
        return False
    return recover_key(id_a, sig_a) == recover_key(id_b, sig_b)
