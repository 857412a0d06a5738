"""Frozen proof test vectors.

Every line of tests/data/proof_vectors.txt was verified against two
independent implementations (textbook affine arithmetic and OpenSSL)
before being frozen.  The implementation must keep reproducing the file
exactly; a diff here means the proof format or the deterministic nonce
changed, which breaks cross-vendor matching.

Line format: ss_hex,prover_id_hex,wf,v,r_hex,s_hex,pk_compressed_hex
"""

from conftest import DATA_DIR
from trafficproof.cli import main as cli_main
from trafficproof.crypto import Pseudonym, derive_public_key, make_proof, recover_key

VECTOR_FILE = DATA_DIR / "proof_vectors.txt"


def load_vectors():
    out = []
    for line in VECTOR_FILE.read_text().splitlines():
        ss_hex, prover_hex, wf, v, r_hex, s_hex, pk_hex = line.split(",")
        out.append(
            (
                bytes.fromhex(ss_hex),
                Pseudonym(bytes.fromhex(prover_hex)),
                int(wf),
                int(v),
                int(r_hex, 16),
                int(s_hex, 16),
                bytes.fromhex(pk_hex),
            )
        )
    return out


def test_vectors_cover_both_work_factors():
    vectors = load_vectors()
    assert len(vectors) == 32
    assert {wf for _, _, wf, _, _, _, _ in vectors} == {1, 3}


def test_implementation_reproduces_frozen_vectors():
    for ss, prover, wf, v, r, s, pk in load_vectors():
        sig = make_proof(ss, prover, wf)
        assert (sig.v, sig.r, sig.s) == (v, r, s)
        assert derive_public_key(ss, wf) == pk
        assert recover_key(prover, sig) == pk


def test_cli_vectors_regenerates_file(tmp_path, capsys):
    out = tmp_path / "vectors.txt"
    assert cli_main(["vectors", "--count", "24", "--seed", "20260809", "--out", str(out)]) == 0
    expected = VECTOR_FILE.read_text().splitlines()[:24]
    assert out.read_text().splitlines() == expected
    assert cli_main(["vectors", "--count", "8", "--seed", "31337", "--work-factor", "3"]) == 0
    printed = capsys.readouterr().out.splitlines()
    assert printed == VECTOR_FILE.read_text().splitlines()[24:]
