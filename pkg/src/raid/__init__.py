"""Region-relationship descriptors, indexing and retrieval."""

from .baseline import BaselineDescriptor, shape_context
from .classify import (
    CLASS_NAMES,
    ClassifierConfig,
    EvalReport,
    LabeledRelationship,
    generate_synthetic,
    knn_predict,
    loocv,
    relationships_from_dataset,
    render_report,
    synthetic_dataset,
)
from .dataset import (
    Dataset,
    ImageRecord,
    LabeledRegion,
    RelationshipCandidate,
    enumerate_relationships,
    load_dataset,
    load_relationship_labels,
    save_annotations,
    save_relationship_labels,
)
from .descriptor import (
    DescriptorConfig,
    PointHistogram,
    PointHistogramCache,
    RaidDescriptor,
    compute_r_max,
    l1_distance,
    point_histogram,
    raid,
)
from .errors import (
    BadRequestError,
    ConfigMismatchError,
    ConflictError,
    DegenerateRegionError,
    EmptyRelationshipError,
    InvalidPolygonError,
    NotFoundError,
    ParseError,
    RaidError,
)
from .geometry import AnnularSector, PolygonSet
from .indexing import (
    DescriptorIndex,
    QuerySpec,
    VerbEntry,
    VerbStore,
    build_index,
    load_index,
    precision_at_n,
    query,
    save_index,
)

__version__ = "0.1.0"

__all__ = [
    "AnnularSector",
    "BadRequestError",
    "BaselineDescriptor",
    "CLASS_NAMES",
    "ClassifierConfig",
    "ConfigMismatchError",
    "ConflictError",
    "Dataset",
    "DegenerateRegionError",
    "DescriptorConfig",
    "DescriptorIndex",
    "EmptyRelationshipError",
    "EvalReport",
    "ImageRecord",
    "InvalidPolygonError",
    "LabeledRegion",
    "LabeledRelationship",
    "NotFoundError",
    "ParseError",
    "PointHistogram",
    "PointHistogramCache",
    "QuerySpec",
    "RaidDescriptor",
    "RaidError",
    "RelationshipCandidate",
    "VerbEntry",
    "VerbStore",
    "build_index",
    "compute_r_max",
    "enumerate_relationships",
    "generate_synthetic",
    "knn_predict",
    "l1_distance",
    "load_dataset",
    "load_index",
    "load_relationship_labels",
    "loocv",
    "point_histogram",
    "precision_at_n",
    "query",
    "raid",
    "relationships_from_dataset",
    "render_report",
    "save_annotations",
    "save_index",
    "save_relationship_labels",
    "shape_context",
    "synthetic_dataset",
    "__version__",
]
