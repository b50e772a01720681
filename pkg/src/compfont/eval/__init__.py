from .classifier import (FEATURE_LAYER, ClassifierConfig, EvalClassifier, ResNet,
                         train_eval_classifier)
from .evaluate import METRICS, EvalConfig, EvalReport, cell_name, evaluate, reference_sensitivity
from .metrics import fid, frechet_distance, gaussian_fit, ms_ssim, ssim
from .perceptual import accuracy, mfid, mfid_from_features, perceptual_distance, style_attribution
from .sheet import sample_sheet, write_grid

__all__ = ["ClassifierConfig", "EvalClassifier", "EvalConfig", "EvalReport", "FEATURE_LAYER",
           "METRICS", "ResNet", "accuracy", "cell_name", "evaluate", "fid", "frechet_distance",
           "gaussian_fit", "mfid", "mfid_from_features", "ms_ssim", "perceptual_distance",
           "reference_sensitivity", "sample_sheet", "ssim", "style_attribution",
           "train_eval_classifier", "write_grid"]
