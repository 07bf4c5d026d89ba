"""Adaptive moment optimizer with decoupled weight decay, from scratch.

Decay is applied directly to the parameters (never folded into the
gradient), is skipped for bias vectors and the temperature scalar, and
with zero gradients shrinks each decayed weight by exactly (1 - lr * wd)
per step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class OptimizerConfig:
    lr: float = 3e-5
    beta1: float = 0.9
    beta2: float = 0.98
    eps: float = 1e-6
    weight_decay: float = 0.001


@dataclass
class MomentOptimizer:
    """Holds first/second moment accumulators per named parameter."""

    config: OptimizerConfig
    step_count: int = 0
    moments: dict = field(default_factory=dict)

    def _state(self, name: str, shape) -> tuple[np.ndarray, np.ndarray]:
        if name not in self.moments:
            self.moments[name] = (np.zeros(shape), np.zeros(shape))
        m, v = self.moments[name]
        if m.shape != tuple(shape):
            raise ValueError(f"moment shape mismatch for {name}")
        return m, v

    def apply(self, named_updates) -> None:
        """One step over [(name, param_array, grad_array, decay_flag)] in-place.

        Bias-corrected adaptive step first, then decoupled decay computed
        from the pre-step parameter value.
        """
        cfg = self.config
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - cfg.beta1**t
        bc2 = 1.0 - cfg.beta2**t
        for name, param, grad, decay in named_updates:
            grad = np.asarray(grad, dtype=np.float64)
            if grad.shape != param.shape:
                raise ValueError(f"gradient shape mismatch for {name}")
            m, v = self._state(name, param.shape)
            m *= cfg.beta1
            m += (1.0 - cfg.beta1) * grad
            v *= cfg.beta2
            v += (1.0 - cfg.beta2) * grad * grad
            step = cfg.lr * (m / bc1) / (np.sqrt(v / bc2) + cfg.eps)
            if decay and cfg.weight_decay:
                step = step + cfg.lr * cfg.weight_decay * param
            param -= step

    def state_arrays(self) -> dict:
        """Flat name -> array view of the moment state, for checkpointing."""
        out = {}
        for name, (m, v) in self.moments.items():
            out[f"{name}.m"] = m
            out[f"{name}.v"] = v
        return out

    def load_state_arrays(self, arrays: dict, step_count: int) -> None:
        self.step_count = int(step_count)
        self.moments = {}
        names = {k[: -len(".m")] for k in arrays if k.endswith(".m")}
        for name in names:
            self.moments[name] = (
                np.array(arrays[f"{name}.m"], dtype=np.float64),
                np.array(arrays[f"{name}.v"], dtype=np.float64),
            )
