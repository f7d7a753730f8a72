"""
First-order update rules: SGD, Adam, AMSGrad and RMSProp on flat parameter vectors
"""
from __future__ import annotations

from enum import Enum

import numpy as np

from modules.errors import BindingError, ConfigError, NumericFaultError


class OptimizerKind(str, Enum):
    SGD = "sgd"
    ADAM = "adam"
    AMSGRAD = "amsgrad"
    RMSPROP = "rmsprop"


class Optimizer:
    """Base class holding the learning rate, buffers sized to n_params and the step counter"""
    kind: OptimizerKind

    def __init__(self, learning_rate: float, n_params: int):
        if not learning_rate > 0:
            raise ConfigError(f"learning rate must be positive, got {learning_rate}")
        self.learning_rate = learning_rate
        self.n_params = n_params
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        params = np.asarray(params, dtype=float)
        grad = np.asarray(grad, dtype=float)
        if params.shape != (self.n_params,) or grad.shape != (self.n_params,):
            raise BindingError(
                f"optimizer sized for {self.n_params} params got params {params.shape}, grad {grad.shape}"
            )
        if not np.all(np.isfinite(grad)):
            bad = np.flatnonzero(~np.isfinite(grad))
            raise NumericFaultError(f"non-finite gradient entries at indices {bad.tolist()} (step {self.t + 1})")
        self.t += 1
        return params - self._update(grad)

    def _update(self, grad: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class SGD(Optimizer):
    kind = OptimizerKind.SGD

    def _update(self, grad):
        return self.learning_rate * grad


class Adam(Optimizer):
    kind = OptimizerKind.ADAM

    def __init__(self, learning_rate: float, n_params: int,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        super().__init__(learning_rate, n_params)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = np.zeros(n_params)
        self.v = np.zeros(n_params)

    def _moments(self, grad):
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * (grad * grad)
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        return bc1, bc2

    def _update(self, grad):
        bc1, bc2 = self._moments(grad)
        return self.learning_rate * (self.m / bc1) / (np.sqrt(self.v / bc2) + self.eps)


class AMSGrad(Adam):
    """Adam with the running maximum of the second moment in the denominator"""
    kind = OptimizerKind.AMSGRAD

    def __init__(self, learning_rate: float, n_params: int,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        super().__init__(learning_rate, n_params, beta1, beta2, eps)
        self.v_max = np.zeros(n_params)

    def _update(self, grad):
        bc1, bc2 = self._moments(grad)
        self.v_max = np.maximum(self.v_max, self.v)
        return self.learning_rate * (self.m / bc1) / (np.sqrt(self.v_max / bc2) + self.eps)


class RMSProp(Optimizer):
    kind = OptimizerKind.RMSPROP

    def __init__(self, learning_rate: float, n_params: int, rho: float = 0.9, eps: float = 1e-8):
        super().__init__(learning_rate, n_params)
        self.rho, self.eps = rho, eps
        self.sq = np.zeros(n_params)

    def _update(self, grad):
        self.sq = self.rho * self.sq + (1.0 - self.rho) * (grad * grad)
        return self.learning_rate * grad / (np.sqrt(self.sq) + self.eps)


_OPTIMIZERS = {
    OptimizerKind.SGD: SGD,
    OptimizerKind.ADAM: Adam,
    OptimizerKind.AMSGRAD: AMSGrad,
    OptimizerKind.RMSPROP: RMSProp,
}


def make_optimizer(kind: OptimizerKind | str, learning_rate: float, n_params: int) -> Optimizer:
    return _OPTIMIZERS[OptimizerKind(kind)](learning_rate, n_params)
