"""Synthetic workloads, capture-setting experiments, latency probes, fixture builder."""
