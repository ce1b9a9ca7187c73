"""Eventual conjugacy of finite directed graphs: moves, block maps and matrices."""

from .errors import (
    BlockMapError,
    BoundExceeded,
    EvconjError,
    GraphError,
    InternalConsistencyError,
    MatrixError,
    SinkError,
    SplitError,
)
from .graph import (
    Graph,
    VertexBijection,
    adjacency_matrix,
    are_isomorphic,
    graph_from_dict,
    graph_from_json,
    graph_from_matrix,
    graph_to_dict,
    graph_to_json,
    higher_block_graph,
    paths_of_length,
    to_dot,
    validate_graph,
)
from .intmat import (
    BeeTriple,
    Bounds,
    BsseCertificate,
    NonNegMatrix,
    bsse_search,
    decide_balanced_elementary,
    is_division_matrix,
    necessary_invariants,
    verify_balanced_elementary,
    verify_certificate,
    verify_elementary,
)
from .moves import (
    InPartition,
    OutPartition,
    ScriptStep,
    SplitScript,
    balanced_in_split,
    connect_by_elementary,
    in_split,
    iterated_balanced_in_split,
    matrices_to_split,
    out_split,
)
from .blockmap import (
    BlockMap,
    apply_prefix,
    block_map_from_triple,
    check_conditions,
    check_sliding,
    extend,
    make_block_map,
    psi_from_history,
    reduce_continuity,
)
from .ladder import decompose_eventual_conjugacy
from .equivalence import EventualConjugacyWitness, verify_witness, witness_from_matrices, witness_from_script

__version__ = "0.1.0"
