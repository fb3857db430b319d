"""Few-shot lifelong learning at desk scale.

A small dense feature extractor learns a many-sample base session; later
few-shot sessions update only a magnitude-selected sliver of its weights
under a triplet / prototype-cosine / L1-drift objective, while frozen
weights stay bit-identical. Classification is nearest-prototype throughout,
so accuracy over all encountered classes can be measured after each session
and compared against fine-tuning, frozen, and joint-training baselines.
"""

from .data import Corpus, Dataset, SyntheticSpec, generate_synthetic, \
    load_delimited, rotate_grid, write_delimited
from .engine import GradTape, cosine_similarity, euclidean_distance, \
    finite_difference_check
from .errors import ConfigError, DataFormatError, DegenerateInputError, \
    ProtocolError, ShapeError
from .losses import LossWeights, TripletBatch, base_loss, base_loss_with_ss, \
    l1_regularization, prototype_cosine_loss, session_loss, triplet_loss
from .masking import SessionMask, apply_masked_update, \
    reselect_for_next_session, select_session_trainable
from .model import Arch, BoundParams, ModelConfig, ParameterStore, Snapshot, \
    classify_logits, discard_classifier, extract_features, load_checkpoint, \
    rotation_logits, save_checkpoint, snapshot_params
from .prototypes import PrototypeRegistry, compute_prototypes, \
    evaluate_accuracy, mean_pairwise_cosine
from .protocol import METHODS, MetricsReport, SessionSchedule, TrainConfig, \
    build_schedule, reference_schedule, reference_train_config, run_protocol, \
    run_session, train_base

__version__ = "0.1.0"
