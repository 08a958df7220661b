"""Workbench for Steiner triple systems and disjoint-matching experiments.

The package is organized around a small immutable core:

- :mod:`stslab.core` — triple systems, leave graphs, matchings, .sts I/O
- :mod:`stslab.generate` — triangle removal, binomial models, coupling
- :mod:`stslab.quasirandom` — quasirandomness / discrepancy / goodness audits
- :mod:`stslab.matching` — exact perfect-matching search, packing, .res I/O
- :mod:`stslab.absorbers` — absorber gadgets, resilient templates, structures
- :mod:`stslab.partition` — randomized vertex/edge partition and its audit
- :mod:`stslab.pipeline` — end-to-end partition-and-pack driver
- :mod:`stslab.seeding` — deterministic seed derivation for trials
"""

from .core import (
    BudgetExceeded,
    DomainError,
    LeaveGraph,
    Matching,
    OrderedPartialSTS,
    TripleSystem,
    from_sts_text,
    load_sts,
    normalize_triple,
    save_sts,
    sts_admissible,
    to_sts_text,
)
from .generate import (
    CouplingReport,
    TrpOutcome,
    complete_to_sts,
    couple,
    sample_binomial_3graph,
    triangle_removal,
    triangle_removal_from,
)
from .matching import (
    DecompositionReport,
    Resolution,
    ResolveResult,
    complete_partial_pm,
    enumerate_perfect_matchings,
    find_perfect_matching,
    from_res_text,
    greedy_maximal_matching,
    load_res,
    nibble_matching,
    pack_disjoint_pms,
    ps_decompose,
    resolve,
    save_res,
    to_res_text,
    trim_decomposition,
)
from .quasirandom import (
    DiscrepancyReport,
    GoodnessReport,
    QuasiReport,
    UpperQuasiReport,
    audit_goodness,
    check_quasirandom,
    count_triangles,
    discrepancy,
    upper_quasi_defect,
)
from .absorbers import (
    Absorber,
    AbsorbingStructure,
    ResilientTemplate,
    SubAbsorber,
    assemble_absorbing_structure,
    build_template,
    complete_via_structure,
    contracted_absorber_check,
    find_absorber,
    find_sub_absorber,
    resilience_spotcheck,
)
from .partition import PartitionAudit, PartitionBundle, audit_partition, good_partition
from .pipeline import PipelineReport, RichSet, almost_resolve, rich_set_search
from .seeding import spawn

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded",
    "DomainError",
    "LeaveGraph",
    "Matching",
    "OrderedPartialSTS",
    "TripleSystem",
    "from_sts_text",
    "load_sts",
    "normalize_triple",
    "save_sts",
    "sts_admissible",
    "to_sts_text",
    "CouplingReport",
    "TrpOutcome",
    "complete_to_sts",
    "couple",
    "sample_binomial_3graph",
    "triangle_removal",
    "triangle_removal_from",
    "DecompositionReport",
    "Resolution",
    "ResolveResult",
    "complete_partial_pm",
    "enumerate_perfect_matchings",
    "find_perfect_matching",
    "from_res_text",
    "greedy_maximal_matching",
    "load_res",
    "nibble_matching",
    "pack_disjoint_pms",
    "ps_decompose",
    "resolve",
    "save_res",
    "to_res_text",
    "trim_decomposition",
    "DiscrepancyReport",
    "GoodnessReport",
    "QuasiReport",
    "UpperQuasiReport",
    "audit_goodness",
    "check_quasirandom",
    "count_triangles",
    "discrepancy",
    "upper_quasi_defect",
    "Absorber",
    "AbsorbingStructure",
    "ResilientTemplate",
    "SubAbsorber",
    "assemble_absorbing_structure",
    "build_template",
    "complete_via_structure",
    "contracted_absorber_check",
    "find_absorber",
    "find_sub_absorber",
    "resilience_spotcheck",
    "PartitionAudit",
    "PartitionBundle",
    "audit_partition",
    "good_partition",
    "PipelineReport",
    "RichSet",
    "almost_resolve",
    "rich_set_search",
    "spawn",
    "__version__",
]
