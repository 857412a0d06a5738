"""Binary codec for the extended collective perception message.

The envelope is a self-contained big-endian layout rather than the
ASN.1 encoding a production ITS stack would use; the proof container
(count byte followed by fixed 70-byte entries) is kept intact so it
could be grafted onto a standards-compliant CPM unchanged.

Message layout::

    version(1)=1 | sender(16) | timestamp_ms(8) | n_objects(1)
      objects: object_id(1) x_cm(4,signed) y_cm(4,signed)
               speed_cms(2) heading_cdeg(2)          -> 13 bytes each
    n_proofs(1), 0..8
      entries: object_id(1) prefix(4) v(1) r(32) s(32) -> 70 bytes each

Codecs are pure and total: every malformed input maps to one of the
exception types below, and decoding never reads past the declared
counts (trailing bytes are tolerated, so a message can be peeled off
the front of a longer stream).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from .crypto import Pseudonym, ProofSignature
from .curve import N

PROOF_ENTRY_LEN = 70
CPM_MIN_LEN = 27
OBJECT_LEN = 13
MAX_PROOFS = 8
CPM_VERSION = 1
PREFIX_LEN = 4


class WireError(ValueError):
    pass


class TruncatedEntry(WireError):
    pass


class InvalidRecoveryId(WireError):
    pass


class SignatureOutOfRange(WireError):
    pass


class BadVersion(WireError):
    pass


class TooManyProofs(WireError):
    pass


class DanglingObjectRef(WireError):
    pass


class Truncated(WireError):
    pass


@dataclass(frozen=True)
class ProofEntry:
    """One 70-byte proof record: object reference, target prefix, signature."""

    object_id: int
    prefix: bytes
    sig: ProofSignature


@dataclass(frozen=True)
class PerceivedObject:
    object_id: int
    x_cm: int
    y_cm: int
    speed_cms: int
    heading_cdeg: int


@dataclass(frozen=True)
class Cpm:
    sender: Pseudonym
    timestamp_ms: int
    objects: tuple[PerceivedObject, ...] = field(default_factory=tuple)
    proofs: tuple[ProofEntry, ...] = field(default_factory=tuple)
    version: int = CPM_VERSION


def prefix_of(p: Pseudonym) -> bytes:
    """Leading 4 bytes of a pseudonym, the advisory pre-filter value.

    Prefix equality is never evidence of a match; it only lets a
    verifier skip work for proofs about vehicles it has not heard.
    """
    return bytes(Pseudonym(p)[:PREFIX_LEN])


def _check_sig_ranges(v: int, r: int, s: int) -> None:
    if v not in (0, 1):
        raise InvalidRecoveryId(f"recovery id must be 0 or 1, got {v}")
    if not 0 < r < N:
        raise SignatureOutOfRange("r out of range")
    if not 0 < s < N:
        raise SignatureOutOfRange("s out of range")
    if s > N >> 1:
        raise SignatureOutOfRange("s not in canonical low form")


def encode_proof_entry(e: ProofEntry) -> bytes:
    """Fixed 70-byte layout: object_id | prefix | v | r | s, big-endian."""
    if not 0 <= e.object_id <= 0xFF:
        raise WireError(f"object_id out of byte range: {e.object_id}")
    if len(e.prefix) != PREFIX_LEN:
        raise WireError(f"prefix must be {PREFIX_LEN} bytes")
    _check_sig_ranges(e.sig.v, e.sig.r, e.sig.s)
    return (
        bytes([e.object_id])
        + bytes(e.prefix)
        + bytes([e.sig.v])
        + e.sig.r.to_bytes(32, "big")
        + e.sig.s.to_bytes(32, "big")
    )


def decode_proof_entry(data: bytes) -> ProofEntry:
    if len(data) != PROOF_ENTRY_LEN:
        raise TruncatedEntry(f"proof entry must be {PROOF_ENTRY_LEN} bytes, got {len(data)}")
    object_id = data[0]
    prefix = bytes(data[1:5])
    v = data[5]
    r = int.from_bytes(data[6:38], "big")
    s = int.from_bytes(data[38:70], "big")
    _check_sig_ranges(v, r, s)
    return ProofEntry(object_id=object_id, prefix=prefix, sig=ProofSignature(v=v, r=r, s=s))


def _encode_object(o: PerceivedObject) -> bytes:
    if not 0 <= o.object_id <= 0xFF:
        raise WireError(f"object_id out of byte range: {o.object_id}")
    if not 0 <= o.heading_cdeg < 36000:
        raise WireError(f"heading_cdeg out of range: {o.heading_cdeg}")
    return struct.pack(">BiiHH", o.object_id, o.x_cm, o.y_cm, o.speed_cms, o.heading_cdeg)


def encode_cpm(m: Cpm) -> bytes:
    if m.version != CPM_VERSION:
        raise BadVersion(f"cannot encode version {m.version}")
    if len(m.proofs) > MAX_PROOFS:
        raise TooManyProofs(f"{len(m.proofs)} proof entries, limit is {MAX_PROOFS}")
    if len(m.objects) > 0xFF:
        raise WireError("more than 255 perceived objects")
    ids = [o.object_id for o in m.objects]
    if len(set(ids)) != len(ids):
        raise WireError("duplicate object_id in perceived object list")
    known = set(ids)
    for e in m.proofs:
        if e.object_id not in known:
            raise DanglingObjectRef(f"proof references unknown object {e.object_id}")
    out = bytearray()
    out.append(m.version)
    out += bytes(Pseudonym(m.sender))
    out += struct.pack(">Q", m.timestamp_ms)
    out.append(len(m.objects))
    for o in m.objects:
        out += _encode_object(o)
    out.append(len(m.proofs))
    for e in m.proofs:
        out += encode_proof_entry(e)
    return bytes(out)


def decode_cpm(data: bytes) -> Cpm:
    """Parse one message from the front of ``data`` (trailing bytes ignored)."""
    if len(data) < CPM_MIN_LEN:
        raise Truncated(f"need at least {CPM_MIN_LEN} bytes, got {len(data)}")
    if data[0] != CPM_VERSION:
        raise BadVersion(f"unsupported version {data[0]}")
    sender = Pseudonym(data[1:17])
    timestamp_ms = struct.unpack(">Q", data[17:25])[0]
    pos = 25
    n_objects = data[pos]
    pos += 1
    if len(data) < pos + n_objects * OBJECT_LEN + 1:
        raise Truncated("object list truncated")
    objects = []
    for _ in range(n_objects):
        oid, x, y, speed, heading = struct.unpack(">BiiHH", data[pos : pos + OBJECT_LEN])
        if heading >= 36000:
            raise WireError(f"heading_cdeg out of range: {heading}")
        objects.append(PerceivedObject(oid, x, y, speed, heading))
        pos += OBJECT_LEN
    n_proofs = data[pos]
    pos += 1
    if n_proofs > MAX_PROOFS:
        raise TooManyProofs(f"{n_proofs} proof entries, limit is {MAX_PROOFS}")
    if len(data) < pos + n_proofs * PROOF_ENTRY_LEN:
        raise Truncated("proof container truncated")
    known = {o.object_id for o in objects}
    proofs = []
    for _ in range(n_proofs):
        entry = decode_proof_entry(data[pos : pos + PROOF_ENTRY_LEN])
        if entry.object_id not in known:
            raise DanglingObjectRef(f"proof references unknown object {entry.object_id}")
        proofs.append(entry)
        pos += PROOF_ENTRY_LEN
    return Cpm(
        sender=sender,
        timestamp_ms=timestamp_ms,
        objects=tuple(objects),
        proofs=tuple(proofs),
    )
