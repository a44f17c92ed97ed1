"""Metric learning for ordered labeled trees with pq-grams.

Extract pq-grams, compute the unweighted and learnable weighted pq-gram
distances, train the weights with an LMNN-style hinge loss, and evaluate
k-NN classification against a tree edit distance baseline.
"""

from .tree import (
    DUMMY,
    Node,
    Tree,
    TreeParseError,
    parse_tree,
    serialize_tree,
    tree_size,
)
from .grams import (
    GramShape,
    LabelTuple,
    Profile,
    SparseCounts,
    Vocabulary,
    build_vocabulary,
    extract_grams,
    gram_count,
    multiset_distance,
    profile,
    sym_diff,
)
from .metric import (
    W_INIT,
    WeightModel,
    distance_gradient,
    pq_distance,
    sigmoid,
    softplus,
    weighted_distance,
)
from .lmnn import (
    LabeledTree,
    ModelFormatError,
    PairSet,
    TrainConfig,
    TrainedModel,
    build_targets,
    encode_dataset,
    find_impostors,
    load_model,
    loss,
    loss_gradient,
    save_model,
    stratified_subsample,
    train,
)
from .knn import (
    BenchResult,
    EvalReport,
    TreeDistance,
    benchmark_inference,
    cross_validate,
    edit_distance_baseline,
    knn_classify,
    stratified_folds,
    unweighted_gram_distance,
    weighted_gram_distance,
)
from .ted import EditCostTable, UNIT_COSTS, tree_edit_distance, unit_relabel
from .datasets import (
    LabeledCorpus,
    chain_tree,
    gen_strings,
    load_tsv,
    random_corpus,
    random_tree,
    save_tsv,
)

__version__ = "0.1.0"
