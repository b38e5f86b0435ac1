"""scikit-learn estimator facades so the pipeline composes with the ecosystem.

``SoftmaxHeadClassifier`` wraps the deterministic trainer in head.py behind
fit/predict/predict_proba and inherits get_params/set_params, so it drops
into sklearn model selection and pipelines.  ``BackboneFeaturizer`` exposes
frozen-backbone extraction as a transformer over raw images.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import head
from .backbone import BackboneSpec, extract, load_backbone
from .validation import check_feature_matrix, check_labels


class SoftmaxHeadClassifier(BaseEstimator, ClassifierMixin):
    """Dropout + 4-way linear layer + softmax on fixed feature vectors."""

    def __init__(
        self,
        epochs: int = 3,
        batch_size: int = 32,
        learning_rate: float = 0.001,
        dropout_rate: float = 0.5,
        adam_beta1: float = 0.9,
        adam_beta2: float = 0.999,
        adam_epsilon: float = 1e-8,
        seed: int = 0,
        class_weights: bool = False,
    ):
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.dropout_rate = dropout_rate
        self.adam_beta1 = adam_beta1
        self.adam_beta2 = adam_beta2
        self.adam_epsilon = adam_epsilon
        self.seed = seed
        self.class_weights = class_weights

    def _config(self) -> head.TrainConfig:
        return head.TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            dropout_rate=self.dropout_rate,
            adam_beta1=self.adam_beta1,
            adam_beta2=self.adam_beta2,
            adam_epsilon=self.adam_epsilon,
            seed=self.seed,
            class_weights=self.class_weights,
        )

    def fit(self, X, y):
        X = check_feature_matrix(X)
        y = check_labels(y, n=X.shape[0])
        result = head.train(X, y, self._config())
        self.params_ = result.params
        self.coef_ = result.params.W
        self.intercept_ = result.params.b
        self.loss_history_ = list(result.epoch_losses)
        self.fit_seconds_ = result.seconds
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.arange(4)
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "params_")
        return head.predict_proba(self.params_, X)

    def predict(self, X):
        proba = self.predict_proba(X)
        return self.classes_[np.argmax(proba, axis=1)]


class BackboneFeaturizer(BaseEstimator, TransformerMixin):
    """Stateless transform: raw uint8 images -> frozen backbone features."""

    def __init__(
        self,
        backbone_id: str = "custom",
        model_file: str = "",
        input_size: int = 64,
        feature_dim: int = 8,
        preprocess_mode: str = "scale_pm1",
        pre_pooled: bool = False,
    ):
        self.backbone_id = backbone_id
        self.model_file = model_file
        self.input_size = input_size
        self.feature_dim = feature_dim
        self.preprocess_mode = preprocess_mode
        self.pre_pooled = pre_pooled

    def _handle(self):
        if not hasattr(self, "_handle_cache"):
            if self.backbone_id == "custom":
                spec = BackboneSpec.custom(
                    self.model_file,
                    self.input_size,
                    self.feature_dim,
                    self.preprocess_mode,
                    self.pre_pooled,
                )
            else:
                spec = BackboneSpec.named(self.backbone_id, self.model_file, self.pre_pooled)
            self._handle_cache = load_backbone(spec)
        return self._handle_cache

    def fit(self, X=None, y=None):
        self._handle()
        return self

    def transform(self, images) -> np.ndarray:
        handle = self._handle()
        rows = [extract(handle, image).values for image in images]
        if not rows:
            return np.empty((0, handle.spec.feature_dim), dtype=np.float32)
        return np.stack(rows)
