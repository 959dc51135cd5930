"""provtrace: end-to-end workflow provenance tracking for the ML lifecycle.

Instrumented workflows emit capture events; the tracker assigns global
identifiers and stitches cross-workflow derivations; the manager maps
records to triples in an embedded store; the query engine answers lineage
and aggregate queries over the resulting provenance graph.
"""

__version__ = "0.1.0"
