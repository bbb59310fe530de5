"""Synthetic smart-building benchmark: buildings, workloads W1 to W5, driver."""
from .building import INVERSES, Building, BuildingSpec, generate
from .runner import BenchReport, BenchTimeout, affine_fit, format_table, run_bench, sweep
from .workloads import NAMES, SIZES, model_iri, publish, workload_spec, workloads
