"""Dense networks with hand-written reverse-mode gradients.

Two learner architectures are supported: a single rectified hidden layer,
and a four-hidden-layer variant whose layers 2..4 see the previous
activations concatenated with the raw input (the final output layer is a
plain affine map). A bare "linear" (single affine) architecture exists for
gradient-check fixtures. Everything runs in float64 on numpy; the Adam
optimizer and the finite-difference gradient checker live here too.
"""

from __future__ import annotations

import numpy as np

D2RL_HIDDEN_LAYERS = 4


def orthogonal_init(rows: int, cols: int, gain: float, rng: np.random.Generator) -> np.ndarray:
    """Orthogonal weight matrix scaled by ``gain``."""
    flat = rng.normal(size=(max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(flat)
    q = q * np.sign(np.diag(r))  # fix the sign ambiguity of the decomposition
    if rows < cols:
        q = q.T
    return gain * q[:rows, :cols]


class DenseNet:
    """Feed-forward net: forward caches what backward needs.

    Parameters are the flat list [W0, b0, W1, b1, ...]; backward returns
    gradients aligned with that list.
    """

    def __init__(self, in_dim: int, out_dim: int, width: int, arch: str,
                 rng: np.random.Generator, final_gain: float = 1.0):
        if arch not in ("linear", "single", "d2rl"):
            raise ValueError(f"unknown architecture {arch!r}")
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.width = width
        self.arch = arch

        if arch == "linear":
            shapes = [(out_dim, in_dim)]
        elif arch == "single":
            shapes = [(width, in_dim), (out_dim, width)]
        else:
            shapes = [(width, in_dim)]
            shapes += [(width, width + in_dim)] * (D2RL_HIDDEN_LAYERS - 1)
            shapes += [(out_dim, width)]
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for i, (rows, cols) in enumerate(shapes):
            gain = final_gain if i == len(shapes) - 1 else np.sqrt(2.0)
            self.weights.append(orthogonal_init(rows, cols, gain, rng))
            self.biases.append(np.zeros(rows))
        self._cache: dict | None = None

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def _layer_input(self, i: int, h: np.ndarray, x: np.ndarray) -> np.ndarray:
        if self.arch == "d2rl" and 0 < i < self.n_layers - 1:
            return np.concatenate([h, x], axis=1)
        return h

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        inputs: list[np.ndarray] = []
        masks: list[np.ndarray] = []
        h = x
        for i in range(self.n_layers):
            inp = self._layer_input(i, h, x)
            inputs.append(inp)
            z = inp @ self.weights[i].T + self.biases[i]
            if i < self.n_layers - 1:
                masks.append(z > 0)
                h = np.maximum(z, 0.0)
            else:
                h = z
        self._cache = {"inputs": inputs, "masks": masks}
        return h

    def backward(self, dout: np.ndarray) -> list[np.ndarray]:
        """Gradients of a scalar loss given d(loss)/d(output) of the last
        forward call. Returns [dW0, db0, dW1, db1, ...]."""
        if self._cache is None:
            raise RuntimeError("backward called before forward")
        inputs, masks = self._cache["inputs"], self._cache["masks"]
        g = np.atleast_2d(np.asarray(dout, dtype=float))
        grads: list[np.ndarray] = [np.empty(0)] * (2 * self.n_layers)
        for i in range(self.n_layers - 1, -1, -1):
            grads[2 * i] = g.T @ inputs[i]
            grads[2 * i + 1] = g.sum(axis=0)
            if i == 0:
                break
            dinp = g @ self.weights[i]
            if self.arch == "d2rl" and 0 < i < self.n_layers - 1:
                dinp = dinp[:, : self.width]  # gradient w.r.t. raw input is unused
            g = dinp * masks[i - 1]
        return grads

    def parameters(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def get_weights(self) -> list[np.ndarray]:
        return [p.copy() for p in self.parameters()]

    def set_weights(self, arrays: list[np.ndarray]) -> None:
        params = self.parameters()
        if len(arrays) != len(params):
            raise ValueError("weight list length mismatch")
        for p, a in zip(params, arrays):
            if p.shape != a.shape:
                raise ValueError(f"shape mismatch {p.shape} vs {a.shape}")
            p[...] = a


class Adam:
    """Adam with bias correction; updates parameter arrays in place."""

    def __init__(self, params: list[np.ndarray], lr: float, eps: float = 1e-5,
                 beta1: float = 0.9, beta2: float = 0.999):
        self.lr = lr
        self.eps = eps
        self.beta1 = beta1
        self.beta2 = beta2
        self.t = 0
        self._m = [np.zeros_like(p) for p in params]
        self._v = [np.zeros_like(p) for p in params]

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self._m, self._v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


def clip_grad_norm(grads: list[np.ndarray], max_norm: float) -> list[np.ndarray]:
    """Scale the gradient list so its global L2 norm is at most ``max_norm``."""
    total = np.sqrt(sum(float((g * g).sum()) for g in grads))
    if total > max_norm:
        scale = max_norm / (total + 1e-12)
        return [g * scale for g in grads]
    return grads


def gradient_check(net: DenseNet, x: np.ndarray, loss_fn, rng: np.random.Generator,
                   step: float = 1e-5, coords_per_array: int = 5) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``loss_fn`` maps network outputs to (scalar loss, d loss / d outputs).
    A random subset of coordinates of every parameter array is probed.
    """
    out = net.forward(x)
    _, dout = loss_fn(out)
    analytic = net.backward(dout)

    worst = 0.0
    for p, g in zip(net.parameters(), analytic):
        n = p.size
        picks = rng.choice(n, size=min(coords_per_array, n), replace=False)
        for idx in picks:
            orig = p.flat[idx]
            p.flat[idx] = orig + step
            up, _ = loss_fn(net.forward(x))
            p.flat[idx] = orig - step
            down, _ = loss_fn(net.forward(x))
            p.flat[idx] = orig
            numeric = (up - down) / (2.0 * step)
            denom = max(abs(numeric), abs(g.flat[idx]), 1e-8)
            worst = max(worst, abs(numeric - g.flat[idx]) / denom)
    return worst
