"""Four-point curvature comparison via associated quadratic forms."""

from .cones import (
    SignPattern,
    all_negtype_hold,
    classify_lambda,
    enumerate_cones,
    min_form_on_cone,
)
from .errors import (
    InternalInconsistency,
    InvalidArgument,
    NotASemimetric,
    NotCAT,
    NotCBB,
    NotEuclidean,
    NotOnSide,
    QuadcompError,
    UndefinedAngle,
)
from .forms import (
    AssociatedForm,
    FiniteSemimetric,
    LambdaArray,
    euclidean_embed,
    form_from_metric,
    is_euclidean,
    lambda_to_vector,
    metric_from_form,
    negtype_value,
    simplex_frame,
    vector_to_lambda,
)
from .wald import (
    Embedding,
    check_triangle,
    classify4,
    embed_cat,
    embed_cbb,
    equality_pattern,
    minimal_form,
    verify_embedding,
)

__version__ = "0.1.0"
