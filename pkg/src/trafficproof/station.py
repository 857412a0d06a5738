"""Prover and verifier station logic around the perception pipeline.

The prover turns current observations into proof entries on a fixed
cadence (default one proof per target every 3 s, at most 8 entries per
message).  The verifier sits between the receiver and the planning
module as a gatekeeper: it recovers a public key from every incoming
proof, groups records by key, and declares an object confirmed once
two independent sources vouch for the same key (two distinct remote
provers, or one remote prover plus the station's own direct
observation).  Raw perceived objects always flow through, annotated
with their confirmation status.

Defenses wired in here:

* the recovery message is always the CPM sender, so a proof replayed
  under another pseudonym recovers a different (useless) key;
* a per-prover quota on stored unmatched proofs bounds database growth
  under spam, with silent drops past the limit;
* unconfirmed records expire after ``ttl_ms``, confirmed groups after
  the longer ``ttl_confirmed_ms``.

A station is a single-threaded state machine: callers serialize
mutating calls; every event is returned synchronously by the call that
caused it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .crypto import (
    NumberPlate,
    Pseudonym,
    RecoveryFailed,
    canonicalize_shared_secret,
    derive_public_key,
    make_proof,
    recover_key,
)
from .wire import MAX_PROOFS, Cpm, PerceivedObject, ProofEntry, prefix_of

DEFAULT_CADENCE_MS = 3000
DEFAULT_QUOTA_LIMIT = 8
DEFAULT_TTL_MS = 5000
DEFAULT_TTL_CONFIRMED_MS = 10000


@dataclass(frozen=True)
class Observation:
    """A target both heard (pseudonym) and seen (plate) by this station."""

    target_id: Pseudonym
    plate: NumberPlate
    object_id: int
    first_seen_ms: int
    last_seen_ms: int


@dataclass(frozen=True)
class ObjectConfirmed:
    """Two independent sources vouched for the same recovered key."""

    time_ms: int
    key: bytes
    provers: tuple[Pseudonym, ...]
    local_supported: bool = False

    def log_line(self) -> str:
        provers = ",".join(sorted(p.hex() for p in self.provers))
        if self.local_supported:
            provers = provers + "+local" if provers else "local"
        return f"{self.time_ms}\tobject-confirmed\t{self.key.hex()}\t{provers}"


@dataclass
class ProofRecord:
    prover: Pseudonym
    entry: ProofEntry | None
    recovered_key: bytes
    received_ms: int
    local: bool = False


class Prover:
    """Emits proof entries for current observations on a fixed cadence."""

    def __init__(self, self_id: Pseudonym, wf: int = 1, cadence_ms: int = DEFAULT_CADENCE_MS):
        self.self_id = Pseudonym(self_id)
        self.wf = wf
        self.cadence_ms = cadence_ms
        self._last_emit: dict[bytes, int] = {}

    def step(self, observations: list[Observation], now_ms: int) -> list[ProofEntry]:
        """Proof entries due now, oldest-unproven targets first, at most 8.

        Targets beyond the per-message capacity keep their "due" status
        and win the ordering on the next call.
        """
        due = [
            o
            for o in observations
            if now_ms - self._last_emit.get(bytes(o.target_id), -self.cadence_ms) >= self.cadence_ms
        ]
        due.sort(
            key=lambda o: (
                self._last_emit.get(bytes(o.target_id), -1),
                o.first_seen_ms,
                bytes(o.target_id),
            )
        )
        entries = []
        for obs in due[:MAX_PROOFS]:
            ss = canonicalize_shared_secret(obs.target_id, obs.plate)
            sig = make_proof(ss, self.self_id, self.wf)
            entries.append(
                ProofEntry(object_id=obs.object_id, prefix=prefix_of(obs.target_id), sig=sig)
            )
            self._last_emit[bytes(obs.target_id)] = now_ms
        return entries


class Verifier:
    """Gatekeeper database of proof records grouped by recovered key."""

    def __init__(
        self,
        self_id: Pseudonym,
        *,
        quota_limit: int = DEFAULT_QUOTA_LIMIT,
        ttl_ms: int = DEFAULT_TTL_MS,
        ttl_confirmed_ms: int = DEFAULT_TTL_CONFIRMED_MS,
        confirm_threshold: int = 2,
        local_counts: bool = True,
    ):
        self.self_id = Pseudonym(self_id)
        self.quota_limit = quota_limit
        self.ttl_ms = ttl_ms
        self.ttl_confirmed_ms = ttl_confirmed_ms
        self.confirm_threshold = confirm_threshold
        self.local_counts = local_counts
        # key -> {source id -> ProofRecord}; the local pseudo-record is
        # stored under the station's own pseudonym with local=True.
        self.by_key: dict[bytes, dict[bytes, ProofRecord]] = {}
        self.unmatched_count: dict[bytes, int] = {}
        self.confirmed: dict[bytes, int] = {}
        self.dropped_unrecoverable = 0
        self.dropped_quota = 0
        # Latest forwarding batch for the planning module:
        # (sender, object, confirmed flag) per perceived object.
        self.staged: list[tuple[Pseudonym, PerceivedObject, bool]] = []

    # -- ingest ----------------------------------------------------------

    def ingest(self, cpm: Cpm, now_ms: int) -> list[ObjectConfirmed]:
        """Process one received CPM; returns confirmation events, if any.

        Per entry: recover the key using the *sender* pseudonym as the
        message (replay defense), deduplicate on (sender, key), enforce
        the unmatched-proof quota, then store and evaluate the
        confirmation rule.  Unrecoverable entries are dropped and
        tallied, never fatal.  Re-ingesting an identical CPM is a no-op.
        """
        events = []
        confirmed_objects: set[int] = set()
        sender = cpm.sender
        sender_b = bytes(sender)
        by_key = self.by_key
        confirmed = self.confirmed
        for entry in cpm.proofs:
            try:
                key = recover_key(sender, entry.sig)
            except RecoveryFailed:
                self.dropped_unrecoverable += 1
                continue
            group = by_key.get(key)
            existing = group.get(sender_b) if group else None
            if existing is not None and not existing.local:
                # Fresh copy of a stored proof: restart its clock.
                if now_ms > existing.received_ms:
                    existing.received_ms = now_ms
                if key in confirmed:
                    if now_ms > confirmed[key]:
                        confirmed[key] = now_ms
                    confirmed_objects.add(entry.object_id)
                continue
            if self.unmatched_count.get(sender_b, 0) >= self.quota_limit:
                self.dropped_quota += 1
                continue
            record = ProofRecord(
                prover=sender, entry=entry, recovered_key=key, received_ms=now_ms
            )
            if group is None:
                group = by_key[key] = {}
            group[sender_b] = record
            if key in confirmed:
                # Joins an already confirmed group: matched on arrival.
                if now_ms > confirmed[key]:
                    confirmed[key] = now_ms
                confirmed_objects.add(entry.object_id)
                continue
            self.unmatched_count[sender_b] = self.unmatched_count.get(sender_b, 0) + 1
            event = self._evaluate(key, now_ms)
            if event is not None:
                events.append(event)
                confirmed_objects.add(entry.object_id)
        self.staged = [(sender, obj, obj.object_id in confirmed_objects) for obj in cpm.objects]
        return events

    def note_local(self, ss: bytes, wf: int, now_ms: int) -> ObjectConfirmed | None:
        """Register the station's own direct observation of a secret.

        The pseudo-record counts as one independent source, so a single
        remote proof of the same secret is then enough to confirm.
        Re-noting refreshes the record; it never consumes quota.
        """
        key = derive_public_key(ss, wf)
        group = self.by_key.setdefault(key, {})
        existing = group.get(bytes(self.self_id))
        if existing is not None and existing.local:
            existing.received_ms = max(existing.received_ms, now_ms)
        else:
            group[bytes(self.self_id)] = ProofRecord(
                prover=self.self_id,
                entry=None,
                recovered_key=key,
                received_ms=now_ms,
                local=True,
            )
        if key in self.confirmed:
            self.confirmed[key] = max(self.confirmed[key], now_ms)
            return None
        return self._evaluate(key, now_ms)

    def _evaluate(self, key: bytes, now_ms: int) -> ObjectConfirmed | None:
        group = self.by_key[key]
        remote = [r for r in group.values() if not r.local]
        has_local = any(r.local for r in group.values())
        sources = len(remote) + (1 if has_local and self.local_counts else 0)
        if sources < self.confirm_threshold:
            return None
        self.confirmed[key] = now_ms
        for rec in remote:
            count = self.unmatched_count.get(bytes(rec.prover), 0) - 1
            self.unmatched_count[bytes(rec.prover)] = max(count, 0)
        return ObjectConfirmed(
            time_ms=now_ms,
            key=key,
            provers=tuple(sorted((r.prover for r in remote), key=bytes)),
            local_supported=has_local and self.local_counts,
        )

    # -- maintenance -----------------------------------------------------

    def gc(self, now_ms: int) -> int:
        """Expire stale state; returns the number of records removed.

        Unconfirmed records go after ``ttl_ms`` of silence (releasing
        quota); confirmed groups are retained ``ttl_confirmed_ms`` past
        their last supporting evidence, then dropped whole.
        """
        evicted = 0
        for key in list(self.by_key):
            group = self.by_key[key]
            if key in self.confirmed:
                if now_ms - self.confirmed[key] > self.ttl_confirmed_ms:
                    evicted += len(group)
                    del self.by_key[key]
                    del self.confirmed[key]
                continue
            for source in list(group):
                record = group[source]
                if now_ms - record.received_ms > self.ttl_ms:
                    del group[source]
                    evicted += 1
                    if not record.local:
                        count = self.unmatched_count.get(source, 0) - 1
                        self.unmatched_count[source] = max(count, 0)
            if not group:
                del self.by_key[key]
        return evicted

    # -- introspection ---------------------------------------------------

    def stored_records(self) -> int:
        return sum(len(g) for g in self.by_key.values())

    def is_confirmed(self, key: bytes) -> bool:
        return key in self.confirmed
