"""Numerical laboratory for weighted operator families on p-normed spaces.

The package models finite families {(V_i, L_i, v_i)} of subspace
projections, local operators, and positive weights over R^n with a
coordinate p-norm, estimates and certifies the two-sided encoding
bounds, classifies families (frame, tight, parseval, ...), tests the
Riesz property and analysis/synthesis duality, and builds new families
by invertible transport, perturbation, direct sum, and tensor product.
"""

from .bounds import (
    BoundEstimate,
    GridBounds,
    grid_oracle,
    inf_ratio,
    lower_bound_constant,
    operator_p_norm,
    p2_exact_bounds,
    p2_exact_estimates,
    sup_ratio,
)
from .constructions import (
    BoundedBelowReport,
    CombineResult,
    PerturbationCheck,
    PerturbationParams,
    PredictedBounds,
    TransformResult,
    bounded_below_iff_frame,
    direct_sum,
    measure_perturbation_radius,
    perturbation_condition_holds,
    predicted_perturbed_bounds,
    simple_perturbation_bounds,
    tensor_converse_extract,
    tensor_product,
    transform_by_invertible,
    transported_projections,
)
from .frameio import (
    FrameSpecError,
    frame_to_spec,
    frames_allclose,
    parse_frame_spec,
    random_frame,
    serialize_frame_spec,
)
from .frames import (
    BESSEL_ONLY,
    FRAME,
    NOT_FRAME,
    PARSEVAL,
    TIGHT,
    DualityReport,
    FrameClassification,
    GPFusionFrame,
    RieszReport,
    SurjectivityReport,
    WeightedTriple,
    analysis_apply,
    check_riesz,
    classify,
    estimate_bounds,
    identity_frame,
    is_gf_complete,
    rescale_to_parseval,
    synthesis_apply,
    verify_duality,
    verify_surjectivity_characterization,
)
from .linops import (
    InvertibilityReport,
    LinOp,
    SubspaceProjection,
    is_invertible,
    make_projection,
    projection_from_matrix,
)
from .seeding import RNG_KIND, make_rng, sample_p_sphere
from .spaces import (
    DualMixedSeq,
    MixedSeq,
    PNormSpace,
    dual_exponent,
    dual_mixed_norm,
    dual_pairing,
    mixed_norm,
    norming_functional,
    p_norm,
)

__version__ = "0.1.0"
