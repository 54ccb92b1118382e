from .models import (
    DEFAULTS,
    MODEL_KINDS,
    ModelSpec,
    TrainedModel,
    fit,
    fit_core,
    mlp_init,
    mlp_loss_and_grad,
    predict_proba,
)
from .preprocess import Preprocessor, preprocess_apply, preprocess_fit
