"""Maps resolved provenance records onto the triple vocabulary and bulk-inserts them."""

from provtrace.manager.mapping import map_to_triples, record_from_triples

__all__ = ["map_to_triples", "record_from_triples"]
