"""Locator normalization, so reference equality is well-defined across workflows."""

from __future__ import annotations

import posixpath
import re
from typing import Optional

from provtrace.core.prospective import PATH_LIKE_KINDS, StoreKind

_DUP_SEP = re.compile(r"/{2,}")


def normalize_locator(store_kind: Optional[StoreKind], locator: str) -> str:
    """Path-like stores get separator/dot-segment cleanup; everything else passes through.

    Case is preserved; only syntactic path noise is removed, never semantics.
    """
    if store_kind not in PATH_LIKE_KINDS:
        return locator
    collapsed = _DUP_SEP.sub("/", locator)
    norm = posixpath.normpath(collapsed)
    # normpath("") == "." but an empty locator should stay empty
    return norm if collapsed else locator
