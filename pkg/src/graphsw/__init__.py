"""Distributed compression of marked random graphs.

Samplers for marked Erdos-Renyi and configuration-model graphs, closed-form
BC entropies and the two-domain rate region, a random-binning codec
simulator with an exhaustive decoder, and exact counting oracles.
"""
from .errors import AmbiguousDecode, DecodeError, GraphParseError, NotFoundDecode, ResourceLimitError
from .marked_graph import (
    BLANK,
    CountVectors,
    DomainGraph,
    JointGraph,
    MarkSpaces,
    count_vectors,
    degree_statistics,
    marginal,
    parse_graph,
    project_counts,
    serialize_graph,
    superpose,
)
from .ensembles import CmModel, ErModel, load_model, log_prob_cm, log_prob_er, parse_model_config, sample_cm, sample_er
from .entropy import BcSummary, RateTuple, bc_entropy, bc_entropy_cm, bc_entropy_er, rate_region_contains
from .local_weak import NeighborhoodDist, RootedClass, dist_tv, empirical_u, neighborhood
from .codec import CodeParams, decode_exhaustive, encode, is_typical, simulate, typical_set

__version__ = "0.1.0"
