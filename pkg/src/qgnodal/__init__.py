"""Spectra, nodal counts and heat-flow nodal dynamics on metric graphs.

The package computes eigenvalues and eigenfunctions of Schroedinger
operators on metric graphs with standard vertex conditions, counts the
zeros of eigenfunction linear combinations, certifies them against the
two-sided count bounds, reproduces the extremal star and ladder
constructions, and propagates combinations under the heat semigroup while
auditing every change of their zero count.
"""
from .errors import (DegenerateEdgeError, GenericityError, InvalidGraphError,
                     NotARootError, QGError, RangeExplosionError, SearchError,
                     SpectrumError)
from .graphs import (DIRICHLET, NEUMANN, Constant, Edge, GraphTopology,
                     MetricGraph, Sampled, ValidationReport, build_interval,
                     build_ladder, build_star, from_json, load_graph,
                     make_graph, perturb_lengths, random_connected_graph,
                     random_tree, save_graph, to_json, topology, validate)
from .spectral import (Eigenpair, GenericityReport, SecularSystem, Spectrum,
                       edge_fundamental_solutions, eigenfunction_recover,
                       genericity_check, l2_inner, scan_spectrum,
                       secular_value)
from .nodal import (FunctionOnGraph, NodalReport, ZeroLocus,
                    brute_force_count, count_zeros)
from .combolab import (BoundCertificate, FindBResult, GenericEnsemble,
                       SaturationResult, SelectEpsResult,
                       design_saturating_combo, find_b,
                       generic_perturbed_ladder, generic_perturbed_star,
                       random_combo_trial, run_bound_trials, select_eps,
                       theorem_bounds, verify_bounds)
from .heatflow import (ComboFlow, ExpSumBound, HeatFlowAudit, HeatFlowTrace,
                       NodalEvent, audit_trace, detect_events, evolve,
                       vertex_crossing_bound)
from .tolerances import DEFAULT, Tolerances

__version__ = "0.1.0"

__all__ = [
    "QGError", "InvalidGraphError", "SpectrumError", "NotARootError",
    "DegenerateEdgeError", "GenericityError", "SearchError",
    "RangeExplosionError",
    "DIRICHLET", "NEUMANN", "Constant", "Sampled", "Edge", "MetricGraph",
    "ValidationReport", "GraphTopology", "make_graph", "validate", "topology",
    "build_interval", "build_star", "build_ladder", "perturb_lengths",
    "random_tree", "random_connected_graph", "to_json", "from_json",
    "save_graph", "load_graph",
    "SecularSystem", "secular_value", "edge_fundamental_solutions",
    "scan_spectrum", "eigenfunction_recover", "l2_inner", "Eigenpair",
    "Spectrum", "GenericityReport", "genericity_check",
    "FunctionOnGraph", "ZeroLocus", "NodalReport", "count_zeros",
    "brute_force_count",
    "theorem_bounds", "BoundCertificate", "verify_bounds", "SelectEpsResult",
    "select_eps", "SaturationResult", "design_saturating_combo",
    "FindBResult", "find_b", "GenericEnsemble", "generic_perturbed_star",
    "generic_perturbed_ladder", "random_combo_trial", "run_bound_trials",
    "ComboFlow", "HeatFlowTrace", "NodalEvent", "evolve", "detect_events",
    "ExpSumBound", "vertex_crossing_bound", "HeatFlowAudit", "audit_trace",
    "Tolerances", "DEFAULT",
    "__version__",
]
