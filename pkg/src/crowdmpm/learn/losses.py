"""Field-space training loss and the two reporting metrics.

The loss compares node velocity fields on a set Phi of supervised frames:

    L = (1/|Phi|) sum_{t in Phi}  mean_nodes |v^t - vhat^t|^2 .

err_vel is the same quantity over all frames of a sequence; err_flow moves
the comparison to pixel space (per-pixel squared flow error), with the
predicted flow produced by sampling the field at pixel centers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..backends import ops_for
from ..core.grids import VectorField, _check_same_spec
from ..errors import DimMismatch, EmptyMask
from ..flow import FlowFrame, field_to_flow


@dataclass
class LossReport:
    total: object  # scalar, backend of the predictions (keeps the tape alive)
    per_frame: list  # [(timestamp, float mse)] for every supervised frame
    mask: tuple  # supervised frame indices, sorted

    def total_float(self) -> float:
        ops = ops_for(self.total)
        return ops.item(ops.detach(self.total))


def _field_values(f):
    return f.values if isinstance(f, VectorField) else f


def frame_mse(pred, target):
    """Mean over nodes of the squared 2-norm error; backend scalar."""
    p, t = _field_values(pred), _field_values(target)
    if isinstance(pred, VectorField) and isinstance(target, VectorField):
        _check_same_spec(pred.spec, target.spec)
    if p.shape != t.shape:
        raise DimMismatch(f"field shapes differ: {p.shape} vs {t.shape}")
    diff = p - t
    return (diff**2).sum(-1).mean()


def loss_mse(predicted, targets, mask=None, timestamps=None) -> LossReport:
    """predicted/targets: aligned sequences of fields; mask: supervised
    frame indices (default all)."""
    if len(predicted) != len(targets):
        raise DimMismatch(f"{len(predicted)} predictions vs {len(targets)} targets")
    if mask is None:
        mask = range(len(targets))
    indices = sorted(set(int(i) for i in mask))
    if not indices:
        raise EmptyMask("no supervised frames in mask")
    if indices and (indices[0] < 0 or indices[-1] >= len(targets)):
        raise IndexError(f"mask indices {indices} outside 0..{len(targets) - 1}")

    per_frame = []
    total = None
    for i in indices:
        mse = frame_mse(predicted[i], targets[i])
        total = mse if total is None else total + mse
        ts = timestamps[i] if timestamps is not None else float(i)
        ops = ops_for(mse)
        per_frame.append((ts, ops.item(ops.detach(mse))))
    total = total / len(indices)
    return LossReport(total=total, per_frame=per_frame, mask=tuple(indices))


def err_vel(predicted, targets) -> float:
    """Mean squared field error across all frames."""
    report = loss_mse(predicted, targets)
    return report.total_float()


def err_flow(predicted, targets) -> float:
    """Mean squared per-pixel flow error across frames.

    Accepts FlowFrames on both sides, or fields on the predicted side (they
    are sampled back to pixels first). Pixels masked out in either frame are
    excluded from the average.
    """
    if len(predicted) != len(targets):
        raise DimMismatch(f"{len(predicted)} predictions vs {len(targets)} targets")
    if not targets:
        raise EmptyMask("no frames to compare")
    acc = 0.0
    for pred, gt in zip(predicted, targets):
        if isinstance(pred, VectorField):
            pred = field_to_flow(pred, gt.width, gt.height, timestamp=gt.timestamp)
        if (pred.width, pred.height) != (gt.width, gt.height):
            raise DimMismatch(
                f"flow sizes differ: {pred.width}x{pred.height} vs {gt.width}x{gt.height}"
            )
        valid = pred.mask & gt.mask
        if not valid.any():
            raise EmptyMask("no jointly valid pixels")
        diff = (pred.uv - gt.uv)[valid]
        acc += float((diff**2).sum(-1).mean())
    return acc / len(targets)
