from __future__ import annotations

import math

import numpy as np
import pandas as pd
from loguru import logger
from pyrsistent import PClass, field, pvector_field

import foresight.tensor as ft
from foresight import models
from foresight.models import ForwardContext, ModelKind, ModelParams
from foresight.optimizer import AdamState, NonFiniteGradientError, adam_step
from foresight.pipeline import PipelineError, Scaler, WindowedDataset, invert_minmax, shuffle_once

DEFAULT_SEED = 42


class TrainingError(RuntimeError):
    def __init__(self, message, *, epoch, batch):
        super().__init__(f"{message} (epoch {epoch}, batch {batch})")
        self.epoch = epoch
        self.batch = batch


def _positive(name):
    return lambda value: (value > 0, f"{name} must be positive")


def _non_negative(name):
    return lambda value: (value >= 0, f"{name} must not be negative")


def _dropout_rate(value):
    return 0.0 <= value < 1.0, "dropout must lie in [0, 1)"


class TrainConfig(PClass):
    epochs = field(type=int, mandatory=True, invariant=_positive("epochs"))
    learning_rate = field(type=float, mandatory=True, factory=float, invariant=_non_negative("learning_rate"))
    batch_size = field(type=int, mandatory=True, invariant=_positive("batch_size"))
    seq_len = field(type=int, mandatory=True, invariant=_positive("seq_len"))
    dropout = field(type=float, initial=0.0, factory=float, invariant=_dropout_rate)
    seed = field(type=int, initial=DEFAULT_SEED)


# epochs, learning rate, batch size, sequence length, dropout
kind_to_default_config = {
    ModelKind.DLINEAR: (100, 1e-3, 32, 10, 0.0),
    ModelKind.VANILLA_TRANSFORMER: (50, 1e-4, 64, 10, 0.1),
    ModelKind.TST: (50, 1e-4, 32, 5, 0.1),
    ModelKind.LSTNET: (100, 1e-5, 64, 5, 0.2),
}


def default_config(kind: ModelKind, **overrides) -> TrainConfig:
    epochs, learning_rate, batch_size, seq_len, dropout = kind_to_default_config[kind]
    config = TrainConfig(
        epochs=epochs, learning_rate=learning_rate, batch_size=batch_size, seq_len=seq_len, dropout=dropout
    )
    return config.set(**overrides) if overrides else config


class EpochLoss(PClass):
    epoch = field(type=int, mandatory=True)
    train_loss = field(type=float, mandatory=True, factory=float)
    test_loss = field(type=float, mandatory=True, factory=float)


class TrainedModel(PClass):
    params = field(type=ModelParams, mandatory=True)
    config = field(type=TrainConfig, mandatory=True)
    loss_curve = pvector_field(EpochLoss)
    scaler = field(type=Scaler, mandatory=True)
    target_column = field(type=str, mandatory=True)

    def __invariant__(self):
        return (
            (len(self.loss_curve) == self.config.epochs, "loss curve must have one entry per epoch"),
            (
                all(math.isfinite(entry.train_loss) and math.isfinite(entry.test_loss) for entry in self.loss_curve),
                "losses must be finite",
            ),
        )

    @property
    def kind(self) -> ModelKind:
        return self.params.kind

    def loss_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "epoch": [entry.epoch for entry in self.loss_curve],
                "train_loss": [entry.train_loss for entry in self.loss_curve],
                "test_loss": [entry.test_loss for entry in self.loss_curve],
            }
        )


def mean_squared_error(predictions, targets):
    return ft.mean(ft.square(predictions - targets))


def evaluate_loss(params: ModelParams, dataset: WindowedDataset) -> float:
    predictions = models.predict(params, dataset.inputs)
    return float(np.mean(np.square(predictions - dataset.targets)))


def _check_datasets(train_set, test_set, config):
    for name, dataset in (("train", train_set), ("test", test_set)):
        if dataset.seq_len != config.seq_len:
            raise ValueError(f"{name} windows have seq_len {dataset.seq_len}, config expects {config.seq_len}")
        if len(dataset) == 0:
            raise ValueError(f"{name} dataset has no samples")
    if list(train_set.feature_names) != list(test_set.feature_names):
        raise ValueError("train and test datasets have different feature columns")


def train(
    kind: ModelKind,
    train_set: WindowedDataset,
    test_set: WindowedDataset,
    config: TrainConfig,
    *,
    scaler: Scaler,
    hyper=None,
) -> TrainedModel:
    """Fits a freshly initialized model with Adam on the mean squared error of the normalized target.

    The training windows are shuffled once with ``config.seed``; batches then keep that order in every epoch.
    """
    _check_datasets(train_set, test_set, config)

    params = models.init_params(
        kind, config.seq_len, train_set.n_features, config.seed, hyper=hyper, target_index=train_set.target_index
    )
    shuffled = shuffle_once(train_set, config.seed)
    optimizer_state = AdamState()

    loss_curve = []
    step = 0
    for epoch in range(config.epochs):
        weighted_loss = 0.0
        for batch_index, start in enumerate(range(0, len(shuffled), config.batch_size)):
            inputs = shuffled.inputs[start : start + config.batch_size]
            targets = shuffled.targets[start : start + config.batch_size]

            parameters = models.as_tensors(params, requires_grad=True)
            context = ForwardContext(train=True, dropout=config.dropout, seed=config.seed, step=step)
            loss = mean_squared_error(models.forward(params, inputs, context, parameters), targets)
            if not math.isfinite(loss.item()):
                raise TrainingError(f"Loss became {loss.item()}", epoch=epoch, batch=batch_index)

            gradients = ft.backward(loss, inputs=list(parameters.values()))
            try:
                updated, optimizer_state = adam_step(
                    dict(params.parameters),
                    {name: gradients[tensor] for name, tensor in parameters.items()},
                    optimizer_state,
                    config.learning_rate,
                )
            except NonFiniteGradientError as error:
                raise TrainingError(str(error), epoch=epoch, batch=batch_index) from error
            params = params.with_parameters(updated)

            weighted_loss += loss.item() * len(targets)
            step += 1
            logger.debug(f"{kind.value} epoch {epoch} batch {batch_index}: loss {loss.item():.6g}")

        train_loss = weighted_loss / len(shuffled)
        test_loss = evaluate_loss(params, test_set)
        if not math.isfinite(test_loss):
            raise TrainingError(f"Test loss became {test_loss}", epoch=epoch, batch=batch_index)
        loss_curve.append(EpochLoss(epoch=epoch + 1, train_loss=train_loss, test_loss=test_loss))
        logger.info(f"{kind.value} epoch {epoch + 1}/{config.epochs}: train {train_loss:.6g}, test {test_loss:.6g}")

    return TrainedModel(
        params=params, config=config, loss_curve=loss_curve, scaler=scaler, target_column=train_set.target_column
    )


def predict(model: TrainedModel, dataset: WindowedDataset) -> pd.DataFrame:
    """Eval-mode forecasts in price units, indexed by target date with columns ``y_true`` and ``y_pred``."""
    if not dataset.normalized:
        raise PipelineError("predict expects windows normalized with the model's scaler")
    if list(dataset.feature_names) != list(model.scaler.columns) or dataset.target_column != model.target_column:
        raise PipelineError("dataset columns do not match the scaler the model was trained with")
    if dataset.seq_len != model.params.seq_len:
        raise ValueError(f"dataset seq_len {dataset.seq_len} does not match model seq_len {model.params.seq_len}")

    predictions = models.predict(model.params, dataset.inputs)
    return pd.DataFrame(
        {
            "y_true": invert_minmax(model.scaler, model.target_column, dataset.targets),
            "y_pred": invert_minmax(model.scaler, model.target_column, predictions),
        },
        index=pd.DatetimeIndex(dataset.target_dates, name="date"),
    )


__all__ = [
    "DEFAULT_SEED",
    "EpochLoss",
    "TrainConfig",
    "TrainedModel",
    "TrainingError",
    "default_config",
    "evaluate_loss",
    "predict",
    "train",
]
