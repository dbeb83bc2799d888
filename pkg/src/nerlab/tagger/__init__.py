from .features import (COMMON_FEATURE_NAMES, FeatureExtractor, PsycholingMarkers,
                       code_features, common_features, dict_features,
                       emotion_features, psycholing_markers)
from .perceptron import (TaggerModel, TrainingError, tag, tag_sentences, trace_csv,
                         train, viterbi)

__all__ = [
    "COMMON_FEATURE_NAMES", "FeatureExtractor", "PsycholingMarkers", "code_features",
    "common_features", "dict_features", "emotion_features", "psycholing_markers",
    "TaggerModel", "TrainingError", "tag", "tag_sentences", "trace_csv", "train", "viterbi",
]
