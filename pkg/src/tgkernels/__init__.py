"""Temporal graph kernels for classifying dissemination processes.

The toolkit lifts static graph kernels (k-step random walk,
Weisfeiler-Lehman subtree) to temporal graphs through three
temporal-to-static transformations, adds a sampled temporal-walk kernel
with a provable sample-size bound, generates SI dissemination datasets,
and evaluates everything with a kernel-SVM cross-validation harness.
"""

from .errors import TGKError
from .temporal import (
    LabelTimeline,
    TemporalEdge,
    TemporalGraph,
    TemporalWalk,
    availability_positions,
    enumerate_temporal_walks,
    label_sequence,
    parse,
    serialize,
    temporal_degree,
)
from .transform import (
    StaticLabeledGraph,
    dl_expand,
    reduce,
    static_baseline,
    static_expand,
)
from .kernels import (
    FeatureVector,
    GramMatrix,
    gram,
    normalize,
    rw_feature_map,
    wl_feature_map,
)
from .sampling import (
    SampleBoundInputs,
    SamplerConfig,
    approx_feature_map,
    approx_kernel,
    sample_size,
    sample_temporal_walk,
)
from .dissemination import (
    Dataset,
    SIConfig,
    extract_bfs_subgraphs,
    make_task1,
    make_task2,
    random_temporal_graph,
    reset_infections,
    si_simulate,
)
from .evaluation import CvProtocol, SvmModel, cross_validate, svm_predict, svm_train

__version__ = "0.1.0"
