"""Manager: map incoming records to triples and bulk-insert with set semantics."""

from __future__ import annotations

import threading

from provtrace.core.retrospective import ProvRecord
from provtrace.manager.mapping import map_to_triples
from provtrace.store.triples import TripleStore


class ManagerCore:
    def __init__(self, store: TripleStore):
        self.store = store
        self._write_lock = threading.Lock()
        self.records_received = 0

    def insert_records(self, record_objs: list[dict]) -> int:
        """One all-or-nothing bulk insert per call; duplicate triples are no-ops."""
        records = [ProvRecord.from_obj(obj) for obj in record_objs]
        triples = []
        for record in records:
            triples.extend(map_to_triples(record))
        with self._write_lock:
            inserted = self.store.insert(triples)
            self.records_received += len(records)
        return inserted
