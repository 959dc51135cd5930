"""The indexed triple store: set-semantics inserts, lookups, traversal, durability.

Three full permutation indexes (SPO/POS/OSP) over interned ids serve
pattern joins and both traversal directions. One writer and any number of
readers share a store under a coarse lock; a read-only handle opened on
the same segment log follows the writer by tailing appended segments.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Optional, Union

from provtrace.store.terms import (
    Iri,
    Term,
    TermDict,
    canon_term,
    ntriples_term,
    term_from_obj,
    term_key,
    term_to_obj,
)


class Triple(NamedTuple):
    s: Term
    p: Term
    o: Term


@dataclass
class Subgraph:
    """Result of a traversal: visited nodes and the edges walked."""

    exists: bool
    nodes: list[Term] = field(default_factory=list)
    edges: list[tuple[Term, Term, Term]] = field(default_factory=list)


def _index_add(index: dict, a: int, b: int, c: int) -> None:
    index.setdefault(a, {}).setdefault(b, set()).add(c)


class TripleStore:
    """In-memory store with optional append-only segment log + snapshot durability."""

    def __init__(self, path: Union[str, Path, None] = None, read_only: bool = False):
        self._dict = TermDict()
        self._spo: dict[int, dict[int, set[int]]] = {}
        self._pos: dict[int, dict[int, set[int]]] = {}
        self._osp: dict[int, dict[int, set[int]]] = {}
        self._count = 0
        self._lock = threading.RLock()
        self._path = Path(path) if path else None
        self._read_only = read_only
        self._log_offset = 0
        self._log_fh = None
        if self._path:
            self._path.mkdir(parents=True, exist_ok=True)
            self._load_snapshot()
            self._tail_log()
            if not read_only:
                self._log_fh = open(self._segments_path(), "ab")

    # -- durability ---------------------------------------------------------

    def _segments_path(self) -> Path:
        return self._path / "segments.ndjson"

    def _snapshot_path(self) -> Path:
        return self._path / "snapshot.json"

    def _load_snapshot(self) -> None:
        snap = self._snapshot_path()
        if snap.exists():
            obj = json.loads(snap.read_text(encoding="utf-8"))
            for s, p, o in obj["triples"]:
                self._add(Triple(term_from_obj(s), term_from_obj(p), term_from_obj(o)))

    def _tail_log(self) -> None:
        """Apply segments appended since the last refresh; tolerates a torn tail."""
        seg = self._segments_path()
        if not seg.exists():
            return
        with open(seg, "rb") as fh:
            fh.seek(self._log_offset)
            data = fh.read()
        consumed = 0
        for line in data.split(b"\n")[:-1]:
            consumed += len(line) + 1
            if not line.strip():
                continue
            for s, p, o in json.loads(line):
                self._add(Triple(term_from_obj(s), term_from_obj(p), term_from_obj(o)))
        self._log_offset += consumed

    def refresh(self) -> None:
        """Pick up segments written by another process (read-only handles)."""
        if self._path is None:
            return
        with self._lock:
            self._tail_log()

    def snapshot(self) -> None:
        """Compact the log into a snapshot (writer only)."""
        if self._path is None or self._read_only:
            return
        with self._lock:
            tmp = self._snapshot_path().with_suffix(".tmp")
            triples = [[term_to_obj(t.s), term_to_obj(t.p), term_to_obj(t.o)] for t in self.triples()]
            tmp.write_text(json.dumps({"triples": triples}), encoding="utf-8")
            os.replace(tmp, self._snapshot_path())
            if self._log_fh:
                self._log_fh.close()
            open(self._segments_path(), "wb").close()
            self._log_offset = 0
            if not self._read_only:
                self._log_fh = open(self._segments_path(), "ab")

    def close(self) -> None:
        if self._log_fh:
            self._log_fh.close()
            self._log_fh = None

    # -- mutation -----------------------------------------------------------

    def _add(self, triple: Triple) -> bool:
        s = self._dict.intern(triple.s)
        p = self._dict.intern(triple.p)
        o = self._dict.intern(triple.o)
        objs = self._spo.get(s, {}).get(p)
        if objs is not None and o in objs:
            return False
        _index_add(self._spo, s, p, o)
        _index_add(self._pos, p, o, s)
        _index_add(self._osp, o, s, p)
        self._count += 1
        return True

    def insert(self, triples: Iterable[Triple]) -> int:
        """Set-semantics bulk insert; returns how many triples were new.

        All-or-nothing per call: new triples are staged and logged before the
        indexes mutate, so a failed log write leaves the store untouched.
        """
        if self._read_only:
            raise PermissionError("store opened read-only")
        staged = []
        with self._lock:
            present = set()
            for t in triples:
                raw = t if isinstance(t, tuple) else (t.s, t.p, t.o)
                st = Triple(canon_term(raw[0]), canon_term(raw[1]), canon_term(raw[2]))
                sid = self._dict.lookup(st.s)
                pid = self._dict.lookup(st.p) if sid is not None else None
                oid = self._dict.lookup(st.o) if pid is not None else None
                if oid is not None and oid in self._spo.get(sid, {}).get(pid, ()):
                    continue
                key = (term_key(st.s), term_key(st.p), term_key(st.o))
                if key in present:
                    continue
                present.add(key)
                staged.append(st)
            if not staged:
                return 0
            if self._log_fh:
                line = json.dumps(
                    [[term_to_obj(t.s), term_to_obj(t.p), term_to_obj(t.o)] for t in staged],
                    separators=(",", ":"),
                ).encode("utf-8")
                self._log_fh.write(line + b"\n")
                self._log_fh.flush()
                self._log_offset += len(line) + 1
            inserted = 0
            for t in staged:
                if self._add(t):
                    inserted += 1
            return inserted

    # -- lookup -------------------------------------------------------------

    def __len__(self):
        return self._count

    def __contains__(self, triple) -> bool:
        s, p, o = triple
        with self._lock:
            sid, pid, oid = self._dict.lookup(s), self._dict.lookup(p), self._dict.lookup(o)
            if sid is None or pid is None or oid is None:
                return False
            return oid in self._spo.get(sid, {}).get(pid, ())

    def triples(self) -> list[Triple]:
        with self._lock:
            out = []
            for s, ps in self._spo.items():
                for p, os_ in ps.items():
                    for o in os_:
                        out.append(Triple(self._dict.term(s), self._dict.term(p), self._dict.term(o)))
            return out

    def _ids(self, term: Optional[Term]):
        return None if term is None else self._dict.lookup(term)

    def candidates(self, s: Optional[Term], p: Optional[Term], o: Optional[Term]) -> list[Triple]:
        """Triples matching a constant mask (None = wildcard), via the best index."""
        with self._lock:
            sid = self._ids(s)
            pid = self._ids(p)
            oid = self._ids(o)
            if (s is not None and sid is None) or (p is not None and pid is None) or (o is not None and oid is None):
                return []
            term = self._dict.term
            out = []
            if sid is not None and pid is not None:
                for oo in self._spo.get(sid, {}).get(pid, ()):
                    if oid is None or oo == oid:
                        out.append(Triple(term(sid), term(pid), term(oo)))
            elif pid is not None and oid is not None:
                for ss in self._pos.get(pid, {}).get(oid, ()):
                    out.append(Triple(term(ss), term(pid), term(oid)))
            elif oid is not None and sid is not None:
                for pp in self._osp.get(oid, {}).get(sid, ()):
                    out.append(Triple(term(sid), term(pp), term(oid)))
            elif sid is not None:
                for pp, os_ in self._spo.get(sid, {}).items():
                    for oo in os_:
                        out.append(Triple(term(sid), term(pp), term(oo)))
            elif pid is not None:
                for oo, ss in self._pos.get(pid, {}).items():
                    for s2 in ss:
                        out.append(Triple(term(s2), term(pid), term(oo)))
            elif oid is not None:
                for ss, ps in self._osp.get(oid, {}).items():
                    for pp in ps:
                        out.append(Triple(term(ss), term(pp), term(oid)))
            else:
                out = self.triples()
            return out

    def estimate(self, s: Optional[Term], p: Optional[Term], o: Optional[Term]) -> int:
        """Cheap upper bound on candidate count, used for join ordering."""
        with self._lock:
            sid = self._ids(s)
            pid = self._ids(p)
            oid = self._ids(o)
            if (s is not None and sid is None) or (p is not None and pid is None) or (o is not None and oid is None):
                return 0
            if sid is not None and pid is not None:
                objs = self._spo.get(sid, {}).get(pid, ())
                return 1 if oid is not None and objs else len(objs)
            if pid is not None and oid is not None:
                return len(self._pos.get(pid, {}).get(oid, ()))
            if sid is not None and oid is not None:
                return len(self._osp.get(oid, {}).get(sid, ()))
            if sid is not None:
                return sum(len(v) for v in self._spo.get(sid, {}).values())
            if pid is not None:
                return sum(len(v) for v in self._pos.get(pid, {}).values())
            if oid is not None:
                return sum(len(v) for v in self._osp.get(oid, {}).values())
            return self._count

    def node_exists(self, node: Term) -> bool:
        with self._lock:
            tid = self._dict.lookup(node)
            if tid is None:
                return False
            return tid in self._spo or tid in self._osp

    # -- traversal ----------------------------------------------------------

    def traverse(
        self,
        start: Term,
        predicate: Term,
        direction: str = "out",
        transitive: bool = True,
        stop_types: Optional[set] = None,
    ) -> Subgraph:
        """BFS over one predicate's edges; nodes typed in stop_types are kept but not expanded.

        direction "out" follows subject->object, "in" follows object->subject.
        The visited set guarantees termination on cycles.
        """
        from provtrace.vocab import TYPE  # local import: vocab depends on terms

        if direction not in ("out", "in"):
            raise ValueError(f"direction must be out or in, got {direction!r}")
        stop_types = stop_types or set()
        if not self.node_exists(start):
            return Subgraph(exists=False)
        sub = Subgraph(exists=True, nodes=[start])
        visited = {self._dict.lookup(start)}
        frontier = [start]
        while frontier:
            next_frontier = []
            for node in frontier:
                if stop_types and any(
                    Triple(node, TYPE, st) in self for st in stop_types
                ):
                    continue
                if direction == "out":
                    neighbors = [(t.o, Triple(node, predicate, t.o)) for t in self.candidates(node, predicate, None)]
                else:
                    neighbors = [(t.s, Triple(t.s, predicate, node)) for t in self.candidates(None, predicate, node)]
                for other, edge in neighbors:
                    sub.edges.append(edge)
                    oid = self._dict.lookup(other)
                    if oid in visited:
                        continue
                    visited.add(oid)
                    sub.nodes.append(other)
                    if transitive:
                        next_frontier.append(other)
            frontier = next_frontier
        # dedupe edges while preserving discovery order
        seen = set()
        deduped = []
        for e in sub.edges:
            k = (term_key(e.s), term_key(e.p), term_key(e.o))
            if k not in seen:
                seen.add(k)
                deduped.append(e)
        sub.edges = deduped
        return sub

    # -- export -------------------------------------------------------------

    def to_ntriples(self) -> str:
        lines = [
            f"{ntriples_term(t.s)} {ntriples_term(t.p)} {ntriples_term(t.o)} ."
            for t in self.triples()
        ]
        return "\n".join(sorted(lines)) + ("\n" if lines else "")

    def check_indexes(self) -> bool:
        """All three indexes describe the same triple set (test hook)."""
        with self._lock:
            spo = {(s, p, o) for s, ps in self._spo.items() for p, os_ in ps.items() for o in os_}
            pos = {(s, p, o) for p, os_ in self._pos.items() for o, ss in os_.items() for s in ss}
            osp = {(s, p, o) for o, ss in self._osp.items() for s, ps in ss.items() for p in ps}
            return spo == pos == osp and len(spo) == self._count
