"""Array-backend dispatch.

All physics arithmetic is written once against the small ops surface below and
runs unchanged on numpy (fast, order-deterministic forward simulation) or torch
(reverse-mode gradients for fitting). numpy arrays and torch tensors share
enough operator syntax that only scatter/where/etc. need wrapping; everything
here is float64.

torch import is deferred so the plain simulator never pays its startup cost.
"""

from __future__ import annotations

import numpy as np


class NumpyOps:
    name = "numpy"

    def asarray(self, x):
        return np.asarray(x, dtype=np.float64)

    def index(self, x):
        return np.asarray(x, dtype=np.int64)

    def zeros(self, shape):
        return np.zeros(shape, dtype=np.float64)

    def zeros_like(self, x):
        return np.zeros_like(x)

    def full(self, shape, value):
        return np.full(shape, value, dtype=np.float64)

    def arange(self, n):
        return np.arange(n, dtype=np.float64)

    def stack(self, xs, axis=0):
        return np.stack(xs, axis=axis)

    def concatenate(self, xs, axis=0):
        return np.concatenate(xs, axis=axis)

    def where(self, cond, a, b):
        return np.where(cond, a, b)

    def sqrt(self, x):
        return np.sqrt(x)

    def log(self, x):
        return np.log(x)

    def exp(self, x):
        return np.exp(x)

    def floor(self, x):
        return np.floor(x)

    def maximum(self, a, b):
        return np.maximum(a, b)

    def minimum(self, a, b):
        return np.minimum(a, b)

    def clip(self, x, lo, hi):
        return np.clip(x, lo, hi)

    def amax(self, x):
        return np.max(x)

    def softplus(self, x):
        # log(1 + e^x), overflow-safe
        return np.logaddexp(0.0, x)

    def isfinite_all(self, x):
        return bool(np.isfinite(x).all())

    def scatter_add(self, target, idx, values):
        """target[idx] += values, accumulation in index order. target is
        modified in place; idx indexes the leading axis."""
        np.add.at(target, idx, values)
        return target

    def gather(self, source, idx):
        return source[idx]

    def einsum(self, eq, *xs):
        return np.einsum(eq, *xs)

    def gradient(self, f, dx, axis):
        return np.gradient(f, dx, axis=axis, edge_order=1)

    def copy(self, x):
        return np.copy(x)

    def detach(self, x):
        return x

    def to_numpy(self, x):
        return np.asarray(x)

    def item(self, x):
        return float(x)


class TorchOps:
    name = "torch"

    def __init__(self):
        import torch

        self.torch = torch

    def asarray(self, x):
        t = self.torch
        if isinstance(x, t.Tensor):
            return x.to(dtype=t.float64)
        return t.as_tensor(np.asarray(x, dtype=np.float64))

    def index(self, x):
        t = self.torch
        if isinstance(x, t.Tensor):
            return x.to(dtype=t.int64)
        return t.as_tensor(np.asarray(x, dtype=np.int64))

    def zeros(self, shape):
        return self.torch.zeros(shape, dtype=self.torch.float64)

    def zeros_like(self, x):
        return self.torch.zeros_like(x)

    def full(self, shape, value):
        return self.torch.full(shape, float(value), dtype=self.torch.float64)

    def arange(self, n):
        return self.torch.arange(n, dtype=self.torch.float64)

    def stack(self, xs, axis=0):
        return self.torch.stack(xs, dim=axis)

    def concatenate(self, xs, axis=0):
        return self.torch.cat(xs, dim=axis)

    def where(self, cond, a, b):
        t = self.torch
        if not isinstance(a, t.Tensor):
            a = t.as_tensor(a, dtype=t.float64)
        if not isinstance(b, t.Tensor):
            b = t.as_tensor(b, dtype=t.float64)
        return t.where(cond, a, b)

    def sqrt(self, x):
        return self.torch.sqrt(x)

    def log(self, x):
        return self.torch.log(x)

    def exp(self, x):
        return self.torch.exp(x)

    def floor(self, x):
        return self.torch.floor(x)

    def maximum(self, a, b):
        t = self.torch
        if not isinstance(b, t.Tensor):
            b = t.as_tensor(b, dtype=t.float64)
        return t.maximum(a, b)

    def minimum(self, a, b):
        t = self.torch
        if not isinstance(b, t.Tensor):
            b = t.as_tensor(b, dtype=t.float64)
        return t.minimum(a, b)

    def clip(self, x, lo, hi):
        return self.torch.clamp(x, lo, hi)

    def amax(self, x):
        return self.torch.max(x)

    def softplus(self, x):
        return self.torch.nn.functional.softplus(x)

    def isfinite_all(self, x):
        return bool(self.torch.isfinite(x).all())

    def scatter_add(self, target, idx, values):
        t = self.torch
        if not isinstance(idx, t.Tensor):
            idx = t.as_tensor(idx)
        # CPU index_put_ accumulation is order-deterministic (verified across
        # thread counts); differentiable w.r.t. values.
        return target.index_put_((idx,), values, accumulate=True)

    def gather(self, source, idx):
        t = self.torch
        if not isinstance(idx, t.Tensor):
            idx = t.as_tensor(idx)
        return source[idx]

    def einsum(self, eq, *xs):
        return self.torch.einsum(eq, *xs)

    def gradient(self, f, dx, axis):
        return self.torch.gradient(f, spacing=float(dx), dim=axis, edge_order=1)[0]

    def copy(self, x):
        return x.clone()

    def detach(self, x):
        return x.detach()

    def to_numpy(self, x):
        return x.detach().cpu().numpy()

    def item(self, x):
        return float(x)


numpy_ops = NumpyOps()
_torch_ops = None


def torch_ops() -> TorchOps:
    global _torch_ops
    if _torch_ops is None:
        _torch_ops = TorchOps()
    return _torch_ops


def ops_for(x):
    """Pick the backend matching an array/tensor."""
    if isinstance(x, np.ndarray) or np.isscalar(x):
        return numpy_ops
    return torch_ops()
