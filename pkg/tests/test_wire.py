"""Codec tests: golden byte layouts pinned forever, plus round-trip laws."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trafficproof.crypto import ProofSignature, Pseudonym
from trafficproof.curve import N
from trafficproof.wire import (
    BadVersion,
    Cpm,
    DanglingObjectRef,
    InvalidRecoveryId,
    PerceivedObject,
    ProofEntry,
    SignatureOutOfRange,
    TooManyProofs,
    Truncated,
    TruncatedEntry,
    WireError,
    decode_cpm,
    decode_proof_entry,
    encode_cpm,
    encode_proof_entry,
    prefix_of,
)

# Spec'd layout example: id=7, prefix 01020304, v=0, r=1, s=1.
ENTRY_GOLDEN_HEX = (
    "07" + "01020304" + "00" + "01".rjust(64, "0") + "01".rjust(64, "0")
)

# Hand-assembled message: sender 00..0f, timestamp 1234567890123,
# two objects, one proof entry about object 5.
CPM_GOLDEN_HEX = (
    "01"
    + "000102030405060708090a0b0c0d0e0f"
    + "0000011f71fb04cb"
    + "02"
    + "00" + "000003e8" + "ffffff06" + "056d" + "2328"
    + "05" + "fffe7960" + "7fffffff" + "ffff" + "8c9f"
    + "01"
    + "05" + "aabbccdd" + "01" + "02".rjust(64, "0") + "03".rjust(64, "0")
)

CPM_GOLDEN = Cpm(
    sender=Pseudonym(bytes.fromhex("000102030405060708090a0b0c0d0e0f")),
    timestamp_ms=1234567890123,
    objects=(
        PerceivedObject(object_id=0, x_cm=1000, y_cm=-250, speed_cms=1389, heading_cdeg=9000),
        PerceivedObject(object_id=5, x_cm=-100000, y_cm=2147483647, speed_cms=65535, heading_cdeg=35999),
    ),
    proofs=(
        ProofEntry(object_id=5, prefix=bytes.fromhex("aabbccdd"), sig=ProofSignature(v=1, r=2, s=3)),
    ),
)


signatures = st.builds(
    ProofSignature,
    v=st.integers(min_value=0, max_value=1),
    r=st.integers(min_value=1, max_value=N - 1),
    s=st.integers(min_value=1, max_value=N >> 1),
)
entries = st.builds(
    ProofEntry,
    object_id=st.integers(min_value=0, max_value=255),
    prefix=st.binary(min_size=4, max_size=4),
    sig=signatures,
)


@st.composite
def cpms(draw):
    object_ids = draw(
        st.lists(st.integers(min_value=0, max_value=255), min_size=0, max_size=12, unique=True)
    )
    objects = tuple(
        PerceivedObject(
            object_id=oid,
            x_cm=draw(st.integers(min_value=-(2**31), max_value=2**31 - 1)),
            y_cm=draw(st.integers(min_value=-(2**31), max_value=2**31 - 1)),
            speed_cms=draw(st.integers(min_value=0, max_value=0xFFFF)),
            heading_cdeg=draw(st.integers(min_value=0, max_value=35999)),
        )
        for oid in object_ids
    )
    n_proofs = draw(st.integers(min_value=0, max_value=min(8, len(objects))))
    proofs = tuple(
        ProofEntry(
            object_id=draw(st.sampled_from(object_ids)),
            prefix=draw(st.binary(min_size=4, max_size=4)),
            sig=draw(signatures),
        )
        for _ in range(n_proofs)
    )
    sender = draw(st.binary(min_size=16, max_size=16).filter(lambda b: any(b)))
    return Cpm(
        sender=Pseudonym(sender),
        timestamp_ms=draw(st.integers(min_value=0, max_value=2**64 - 1)),
        objects=objects,
        proofs=proofs,
    )


class TestProofEntryCodec:
    def test_golden_layout(self):
        entry = ProofEntry(
            object_id=7, prefix=bytes.fromhex("01020304"), sig=ProofSignature(v=0, r=1, s=1)
        )
        assert encode_proof_entry(entry).hex() == ENTRY_GOLDEN_HEX
        assert decode_proof_entry(bytes.fromhex(ENTRY_GOLDEN_HEX)) == entry

    @given(entries)
    @settings(max_examples=300)
    def test_round_trip_and_length(self, entry):
        data = encode_proof_entry(entry)
        assert len(data) == 70
        assert decode_proof_entry(data) == entry

    def test_truncated(self):
        data = bytes.fromhex(ENTRY_GOLDEN_HEX)
        with pytest.raises(TruncatedEntry):
            decode_proof_entry(data[:69])
        with pytest.raises(TruncatedEntry):
            decode_proof_entry(data + b"\x00")

    def test_r_at_group_order_rejected(self):
        data = bytearray(bytes.fromhex(ENTRY_GOLDEN_HEX))
        data[6:38] = N.to_bytes(32, "big")
        with pytest.raises(SignatureOutOfRange):
            decode_proof_entry(bytes(data))

    def test_zero_r_and_s_rejected(self):
        data = bytearray(bytes.fromhex(ENTRY_GOLDEN_HEX))
        data[6:38] = bytes(32)
        with pytest.raises(SignatureOutOfRange):
            decode_proof_entry(bytes(data))
        data = bytearray(bytes.fromhex(ENTRY_GOLDEN_HEX))
        data[38:70] = bytes(32)
        with pytest.raises(SignatureOutOfRange):
            decode_proof_entry(bytes(data))

    def test_high_s_rejected(self):
        data = bytearray(bytes.fromhex(ENTRY_GOLDEN_HEX))
        data[38:70] = ((N >> 1) + 1).to_bytes(32, "big")
        with pytest.raises(SignatureOutOfRange):
            decode_proof_entry(bytes(data))

    def test_bad_recovery_id(self):
        data = bytearray(bytes.fromhex(ENTRY_GOLDEN_HEX))
        data[5] = 2
        with pytest.raises(InvalidRecoveryId):
            decode_proof_entry(bytes(data))
        with pytest.raises(InvalidRecoveryId):
            encode_proof_entry(
                ProofEntry(object_id=0, prefix=bytes(4), sig=ProofSignature(v=4, r=1, s=1))
            )


class TestCpmCodec:
    def test_empty_message_is_27_bytes(self):
        m = Cpm(sender=Pseudonym(b"\x01" * 16), timestamp_ms=0)
        assert len(encode_cpm(m)) == 27
        assert decode_cpm(encode_cpm(m)) == m

    def test_golden_message(self):
        assert encode_cpm(CPM_GOLDEN).hex() == CPM_GOLDEN_HEX
        assert decode_cpm(bytes.fromhex(CPM_GOLDEN_HEX)) == CPM_GOLDEN

    @given(cpms())
    @settings(max_examples=300, deadline=None)
    def test_round_trip(self, m):
        data = encode_cpm(m)
        assert len(data) == 27 + 13 * len(m.objects) + 70 * len(m.proofs)
        assert decode_cpm(data) == m

    def test_nine_proofs_rejected_on_encode(self):
        objects = tuple(PerceivedObject(i, 0, 0, 0, 0) for i in range(9))
        proofs = tuple(
            ProofEntry(object_id=i, prefix=bytes(4), sig=ProofSignature(v=0, r=1, s=1))
            for i in range(9)
        )
        with pytest.raises(TooManyProofs):
            encode_cpm(Cpm(sender=Pseudonym(b"\x01" * 16), timestamp_ms=0, objects=objects, proofs=proofs))

    def test_nine_proofs_rejected_on_decode(self):
        data = bytearray(encode_cpm(Cpm(sender=Pseudonym(b"\x01" * 16), timestamp_ms=0)))
        data[-1] = 9  # proof count byte of an otherwise empty message
        with pytest.raises(TooManyProofs):
            decode_cpm(bytes(data))

    def test_dangling_object_ref(self):
        proof = ProofEntry(object_id=3, prefix=bytes(4), sig=ProofSignature(v=0, r=1, s=1))
        with pytest.raises(DanglingObjectRef):
            encode_cpm(Cpm(sender=Pseudonym(b"\x01" * 16), timestamp_ms=0, proofs=(proof,)))
        good = encode_cpm(
            Cpm(
                sender=Pseudonym(b"\x01" * 16),
                timestamp_ms=0,
                objects=(PerceivedObject(3, 0, 0, 0, 0),),
                proofs=(proof,),
            )
        )
        tampered = bytearray(good)
        tampered[26] = 4  # rewrite the object id the proof points at
        with pytest.raises(DanglingObjectRef):
            decode_cpm(bytes(tampered))

    def test_bad_version(self):
        data = bytearray(encode_cpm(Cpm(sender=Pseudonym(b"\x01" * 16), timestamp_ms=0)))
        data[0] = 2
        with pytest.raises(BadVersion):
            decode_cpm(bytes(data))

    def test_truncated_message(self):
        data = encode_cpm(CPM_GOLDEN)
        with pytest.raises(Truncated):
            decode_cpm(data[:20])
        with pytest.raises(Truncated):
            decode_cpm(data[:-1])

    def test_trailing_bytes_tolerated(self):
        # Decode consumes one message from the front of a stream.
        data = encode_cpm(CPM_GOLDEN) + b"\xde\xad\xbe\xef"
        assert decode_cpm(data) == CPM_GOLDEN

    def test_duplicate_object_ids_rejected(self):
        objects = (PerceivedObject(1, 0, 0, 0, 0), PerceivedObject(1, 5, 5, 0, 0))
        with pytest.raises(WireError):
            encode_cpm(Cpm(sender=Pseudonym(b"\x01" * 16), timestamp_ms=0, objects=objects))

    def test_heading_range_enforced(self):
        with pytest.raises(WireError):
            encode_cpm(
                Cpm(
                    sender=Pseudonym(b"\x01" * 16),
                    timestamp_ms=0,
                    objects=(PerceivedObject(0, 0, 0, 0, 36000),),
                )
            )


class TestPrefix:
    def test_leading_bytes(self):
        p = Pseudonym(bytes.fromhex("aabbccdd") + bytes.fromhex("00112233445566778899aabb"))
        assert prefix_of(p) == bytes.fromhex("aabbccdd")

    def test_collisions_allowed(self):
        a = Pseudonym(bytes.fromhex("aabbccdd") + b"\x01" * 12)
        b = Pseudonym(bytes.fromhex("aabbccdd") + b"\x02" * 12)
        assert bytes(a) != bytes(b)
        assert prefix_of(a) == prefix_of(b)
