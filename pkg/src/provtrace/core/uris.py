"""Global identifier scheme for tasks, data values, stores, and transformations.

Forms (components percent-escaped so the scheme delimiters stay unambiguous):

    <ns>:<wf_exec_id>/t<task_seq>                      task execution
    <ns>:<wf_exec_id>/t<task_seq>/<attr>/<occurrence>  data value
    <ns>:store/<store_id>                              data store
    <ns>:spec/<workflow>/<version>/<name>              transformation

``store`` and ``spec`` are reserved first segments, so workflow execution
ids may not take those two literal values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional
from urllib.parse import quote, unquote

_RESERVED_EXEC_IDS = frozenset({"store", "spec"})


class UriError(ValueError):
    """Raised for malformed URI text or invalid URI components."""


def _esc(component: str) -> str:
    return quote(component, safe="")


def make_uri(
    namespace: str,
    wf_exec_id: str,
    task_seq: int,
    attr_name: Optional[str] = None,
    occurrence: Optional[int] = None,
) -> str:
    """Build a task URI (no attr) or a data-value URI (attr + occurrence).

    Pure and deterministic; distinct component tuples yield distinct URIs.
    """
    if not namespace or not wf_exec_id:
        raise UriError("namespace and wf_exec_id must be non-empty")
    if wf_exec_id in _RESERVED_EXEC_IDS:
        raise UriError(f"wf_exec_id {wf_exec_id!r} is reserved")
    if task_seq < 0:
        raise UriError("task_seq must be >= 0")
    if (attr_name is None) != (occurrence is None):
        raise UriError("attr_name and occurrence must be given together")
    base = f"{_esc(namespace)}:{_esc(wf_exec_id)}/t{task_seq}"
    if attr_name is None:
        return base
    if not attr_name:
        raise UriError("attr_name must be non-empty")
    if occurrence is None or occurrence < 0:
        raise UriError("occurrence must be >= 0")
    return f"{base}/{_esc(attr_name)}/{occurrence}"


def store_uri(namespace: str, store_id: str) -> str:
    if not namespace or not store_id:
        raise UriError("namespace and store_id must be non-empty")
    return f"{_esc(namespace)}:store/{_esc(store_id)}"


def transformation_uri(namespace: str, workflow_name: str, version: str, name: str) -> str:
    if not namespace or not workflow_name or not version or not name:
        raise UriError("all transformation URI components must be non-empty")
    return f"{_esc(namespace)}:spec/{_esc(workflow_name)}/{_esc(version)}/{_esc(name)}"


@dataclass(frozen=True)
class UriParts:
    """Parsed URI. ``kind`` is one of task | value | store | transformation."""

    kind: str
    namespace: str
    wf_exec_id: Optional[str] = None
    task_seq: Optional[int] = None
    attr_name: Optional[str] = None
    occurrence: Optional[int] = None
    store_id: Optional[str] = None
    workflow_name: Optional[str] = None
    version: Optional[str] = None
    transformation_name: Optional[str] = None

    def format(self) -> str:
        if self.kind == "task":
            return make_uri(self.namespace, self.wf_exec_id, self.task_seq)
        if self.kind == "value":
            return make_uri(
                self.namespace, self.wf_exec_id, self.task_seq, self.attr_name, self.occurrence
            )
        if self.kind == "store":
            return store_uri(self.namespace, self.store_id)
        if self.kind == "transformation":
            return transformation_uri(
                self.namespace, self.workflow_name, self.version, self.transformation_name
            )
        raise UriError(f"unknown URI kind {self.kind!r}")


def parse_uri(text: str) -> UriParts:
    """Inverse of the formatters: ``parse_uri(u).format() == u``."""
    if ":" not in text:
        raise UriError(f"missing namespace delimiter in {text!r}")
    ns_raw, rest = text.split(":", 1)
    if not ns_raw or not rest:
        raise UriError(f"empty namespace or body in {text!r}")
    namespace = unquote(ns_raw)
    segs = rest.split("/")
    head = segs[0]
    if head == "store":
        if len(segs) != 2 or not segs[1]:
            raise UriError(f"malformed store URI {text!r}")
        return UriParts(kind="store", namespace=namespace, store_id=unquote(segs[1]))
    if head == "spec":
        if len(segs) != 4 or not all(segs[1:]):
            raise UriError(f"malformed transformation URI {text!r}")
        return UriParts(
            kind="transformation",
            namespace=namespace,
            workflow_name=unquote(segs[1]),
            version=unquote(segs[2]),
            transformation_name=unquote(segs[3]),
        )
    if len(segs) < 2 or not head:
        raise UriError(f"malformed URI {text!r}")
    tseg = segs[1]
    if not tseg.startswith("t") or not tseg[1:].isdigit():
        raise UriError(f"malformed task segment {tseg!r} in {text!r}")
    wf_exec_id = unquote(head)
    task_seq = int(tseg[1:])
    if len(segs) == 2:
        return UriParts(kind="task", namespace=namespace, wf_exec_id=wf_exec_id, task_seq=task_seq)
    if len(segs) == 4:
        if not segs[2] or not segs[3].isdigit():
            raise UriError(f"malformed data value URI {text!r}")
        return UriParts(
            kind="value",
            namespace=namespace,
            wf_exec_id=wf_exec_id,
            task_seq=task_seq,
            attr_name=unquote(segs[2]),
            occurrence=int(segs[3]),
        )
    raise UriError(f"wrong segment count in {text!r}")
