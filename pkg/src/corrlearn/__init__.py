"""corrlearn: online learning from a variety of corrective feedback in a
2D household-navigation simulator, with programmatic teachers, a
reproducible experiment harness, and a live teaching service."""

from .feedback import (
    ActionFeedback,
    CoactiveFeedback,
    Feedback,
    NoFeedback,
    PreferenceFeedback,
    PseudoLoss,
    SemanticFeedback,
    action_pseudo_loss,
    coactive_pseudo_loss,
    feedback_from_json,
    feedback_to_json,
    feedback_to_pseudo_loss,
    preference_pseudo_loss,
    semantic_pseudo_loss,
    zero_bias,
)
from .harness import (
    best_in_hindsight,
    ExperimentConfig,
    TeacherConfig,
    TrialLog,
    compute_metrics,
    load_config,
    run,
    run_bc_baseline,
    run_sweep,
    run_trial,
)
from .learner import (
    bc_fit,
    coactive_update,
    empirical_alpha,
    hinge_eval,
    ogd_update,
    select_action,
    weights_digest,
)
from .teacher import LatentEval, Teacher, decide_correction, latent_eval, perturb
from .world import (
    FEATURE_DIM,
    FEATURE_NAMES,
    FeatureVector,
    Map,
    Pose,
    Trajectory,
    WorldState,
    feature_matrix,
    features,
    generate_action_set,
    initial_state,
    load_map,
    mask_colliding,
    step,
)

__version__ = "0.1.0"
