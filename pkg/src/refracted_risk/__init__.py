"""Fluctuation and occupation-time identities for refracted Levy risk processes."""

__version__ = "0.1.0"

from .levy_model import (  # noqa: E402
    JumpSpec,
    LevyModel,
    RefractedModel,
    exponent_derivative,
    laplace_exponent,
    mean_per_unit_time,
    refract,
    right_inverse_phi,
)
from .scale_fn import (  # noqa: E402
    ExponentialSum,
    RootSet,
    W,
    W_antiderivative,
    W_at_infinity,
    W_prime,
    Z,
    scale_function,
    scale_roots,
)
from .refracted import (  # noqa: E402
    RefractedScaleEval,
    convolution_identity_residual,
    exit_down_U,
    exit_down_X,
    exit_up_U,
    exit_up_X,
    little_w,
    little_z,
    rep_wq_residual,
    ruin_prob_U,
    ruin_prob_X,
)
from .occupation import (  # noqa: E402
    OccupationQuery,
    bankruptcy_lt_ruin_finite,
    occ_lt_exit_down,
    occ_lt_exit_up,
    occ_lt_reach_up,
    occupation_atom,
    occupation_density,
    prob_bankruptcy,
    prob_parisian,
    survival_lt,
    total_occupation_lt,
)
