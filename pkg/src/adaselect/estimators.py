"""Scikit-learn style estimators wrapping the subsampled training loop.

These give the selection strategies a fit/predict surface that composes
with pipelines, grid search, and cross-validation. Per-epoch evaluation
inside ``fit`` runs on the training data itself; use external
cross-validation for honest generalization estimates.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .datasets import CLASSIFICATION, REGRESSION, Dataset
from .models import LossKind, make_model, predict
from .rng import RngStream
from .training import SGDMomentum, strategy_from_token, train

_STREAM_MODEL_INIT = 7


class _SubsampledBase(BaseEstimator):
    def __init__(
        self,
        strategy="adaselect",
        candidates=("big_loss", "small_loss", "uniform"),
        sampling_rate=0.5,
        beta=0.5,
        kappa=-0.5,
        curriculum=True,
        softmax_temperature=1.0,
        hidden_layer_sizes=(16,),
        activation="relu",
        learning_rate=0.01,
        momentum=0.9,
        batch_size=100,
        epochs=20,
        random_state=0,
    ):
        self.strategy = strategy
        self.candidates = candidates
        self.sampling_rate = sampling_rate
        self.beta = beta
        self.kappa = kappa
        self.curriculum = curriculum
        self.softmax_temperature = softmax_temperature
        self.hidden_layer_sizes = hidden_layer_sizes
        self.activation = activation
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.batch_size = batch_size
        self.epochs = epochs
        self.random_state = random_state

    def _fit_arrays(self, x, y, task, n_outputs, loss):
        dataset = Dataset(
            name="fit",
            task=task,
            x_train=x,
            y_train=y,
            x_test=x,
            y_test=y,
            num_classes=n_outputs if task == CLASSIFICATION else None,
        )
        layer_sizes = (x.shape[1], *tuple(self.hidden_layer_sizes), n_outputs)
        seed = int(self.random_state)
        model = make_model(
            layer_sizes,
            activation=self.activation,
            rng=RngStream(seed).derive(_STREAM_MODEL_INIT),
        )
        strategy = strategy_from_token(
            self.strategy,
            candidates=tuple(self.candidates),
            sampling_rate=self.sampling_rate,
            beta=self.beta,
            kappa=self.kappa,
            curriculum_enabled=self.curriculum,
            softmax_temperature=self.softmax_temperature,
        )
        opt = SGDMomentum(learning_rate=self.learning_rate, momentum=self.momentum)
        report = train(
            strategy,
            dataset,
            model,
            loss,
            opt,
            epochs=self.epochs,
            sampling_rate=self.sampling_rate,
            seed=seed,
            batch_size=self.batch_size,
        )
        self.model_ = model
        self.report_ = report
        self.n_features_in_ = x.shape[1]
        return self


class SubsampledSGDRegressor(RegressorMixin, _SubsampledBase):
    """Feedforward regressor trained with subsampled minibatch SGD."""

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True, dtype=np.float64)
        return self._fit_arrays(X, np.asarray(y, dtype=np.float64), REGRESSION, 1, LossKind.MSE)

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        return predict(self.model_, X)[:, 0]


class SubsampledSGDClassifier(ClassifierMixin, _SubsampledBase):
    """Feedforward softmax classifier trained with subsampled minibatch SGD."""

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_, encoded = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise ValueError("classifier needs at least 2 classes")
        return self._fit_arrays(
            X,
            encoded.astype(np.int64),
            CLASSIFICATION,
            len(self.classes_),
            LossKind.CROSS_ENTROPY,
        )

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        return predict(self.model_, X)

    def predict_proba(self, X):
        logits = self.decision_function(X)
        shifted = logits - logits.max(axis=1, keepdims=True)
        exps = np.exp(shifted)
        return exps / exps.sum(axis=1, keepdims=True)

    def predict(self, X):
        return self.classes_[self.decision_function(X).argmax(axis=1)]
