from .losses import LossReport, err_flow, err_vel, frame_mse, loss_mse
from .params import GLOBAL_NAMES, ParamModel, ParamValues, particle_features, softplus_inverse
from .training import (
    Observations,
    TrainConfig,
    TrainResult,
    gradient,
    predict_fields,
    resample_kinematics,
    sample_particles_from_flow,
    supervised_frames,
    train,
    transferred_field,
    window_loss,
)

__all__ = [
    "LossReport",
    "err_flow",
    "err_vel",
    "frame_mse",
    "loss_mse",
    "GLOBAL_NAMES",
    "ParamModel",
    "ParamValues",
    "particle_features",
    "softplus_inverse",
    "Observations",
    "TrainConfig",
    "TrainResult",
    "gradient",
    "predict_fields",
    "resample_kinematics",
    "sample_particles_from_flow",
    "supervised_frames",
    "train",
    "transferred_field",
    "window_loss",
]
