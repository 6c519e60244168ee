"""Constructive machinery of the JL optimality lower bound, checkable at desk scale."""

__version__ = "0.1.0"

from .geometry import (  # noqa: E402
    DistortionReport,
    PointSequence,
    check_jl_guarantee,
    polarization_inner,
    squared_distance,
    translate_to_origin,
)
from .embed import (  # noqa: E402
    ProjectionMatrix,
    apply_embedding,
    compose_embeddings,
    djl_failure_rate,
    gaussian_projection,
    span_isometry,
)
from .instance import (  # noqa: E402
    HardInstance,
    HardInstanceParams,
    SupportSet,
    build_instance,
    derive_params,
    family_size,
    lower_bound_m,
    make_support_vector,
)
from .nets import (  # noqa: E402
    L2Ball,
    Net,
    SliceBody,
    body_norm,
    build_net,
    locate,
    orthonormalize_columns,
    verify_cover_bound,
)
from .codec import (  # noqa: E402
    Bitstream,
    CodecBudget,
    closeips_bound_check,
    decode,
    encode,
    plan_budget,
    predict_bits,
)
from .report import coherence, run_experiment, welch_bound  # noqa: E402
