"""Network architectures: a plain stacked CNN (optionally output-thresholded) and a stacked ConvLSTM.

Every model maps a ``(B, T, H, W, C)`` window to a ``(B, H, W, 1)`` front.
The CNNs only look at the newest frame.
"""
from __future__ import annotations

import numpy as np

from . import layers as L

CLIP = 0.025

# profiles: the searched configuration and a small one that trains on a laptop CPU
PROFILES = {
    "cnn": {
        "paper": {"filters": [32, 64, 128], "kernel": 5},
        "desk": {"filters": [4, 8], "kernel": 5},
    },
    "convlstm": {
        "paper": {"blocks": 10, "filters": 20, "kernel": 3, "history": 10},
        "desk": {"blocks": 2, "filters": 4, "kernel": 3, "history": 4},
    },
}


def _uniform(rng, shape, fan_in):
    lim = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-lim, lim, size=shape)


class Model:
    kind = "model"
    history = 1

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}

    @property
    def config(self) -> dict:
        raise NotImplementedError

    def forward(self, x):
        """Returns ``(y, cache)``."""
        raise NotImplementedError

    def backward(self, dy, cache) -> dict[str, np.ndarray]:
        raise NotImplementedError

    def predict(self, x):
        """Inference output; subclasses may post-process."""
        return self.forward(x)[0]

    def n_params(self) -> int:
        return int(sum(p.size for p in self.params.values()))


class CNNSimplified(Model):
    kind = "cnn"
    history = 1

    def __init__(self, in_channels: int, filters=(32, 64, 128), kernel: int = 5, seed: int = 0):
        super().__init__()
        if kernel % 2 == 0:
            raise ValueError("kernel size must be odd")
        self.in_channels = in_channels
        self.filters = [int(f) for f in filters]
        self.kernel = kernel
        self.seed = seed
        rng = np.random.default_rng(seed)
        cin = in_channels
        for n, f in enumerate(self.filters + [1]):
            fan = kernel * kernel * cin
            self.params[f"conv{n}.w"] = _uniform(rng, (kernel, kernel, cin, f), fan)
            self.params[f"conv{n}.b"] = np.zeros(f)
            cin = f

    @property
    def config(self):
        return {"kind": self.kind, "in_channels": self.in_channels, "filters": self.filters,
                "kernel": self.kernel, "seed": self.seed}

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 5:
            x = x[:, -1]
        caches = []
        n_layers = len(self.filters) + 1
        for n in range(n_layers):
            x, cc = L.conv2d_forward(x, self.params[f"conv{n}.w"], self.params[f"conv{n}.b"])
            mask = None
            if n < n_layers - 1:
                x, mask = L.relu_forward(x)
            caches.append((cc, mask))
        return x, (caches, n_layers)

    def backward(self, dy, cache):
        caches, n_layers = cache
        grads = {}
        for n in reversed(range(n_layers)):
            cc, mask = caches[n]
            if mask is not None:
                dy = L.relu_backward(dy, mask)
            dy, grads[f"conv{n}.w"], grads[f"conv{n}.b"] = L.conv2d_backward(dy, cc)
        return grads


class CNNThresholded(CNNSimplified):
    """Same network; at inference outputs below the clip level become 0."""

    kind = "cnn-thresholded"

    def predict(self, x):
        y = self.forward(x)[0]
        return np.where(y < CLIP, 0.0, y)


class ConvLSTMModel(Model):
    kind = "convlstm"

    def __init__(self, in_channels: int, blocks: int = 10, filters: int = 20, kernel: int = 3,
                 history: int = 10, seed: int = 0):
        super().__init__()
        if blocks < 1:
            raise ValueError("need at least one ConvLSTM block")
        if kernel % 2 == 0:
            raise ValueError("kernel size must be odd")
        self.in_channels = in_channels
        self.blocks = blocks
        self.filters = filters
        self.kernel = kernel
        self.history = history
        self.seed = seed
        rng = np.random.default_rng(seed)
        cin = in_channels
        for n in range(blocks):
            fan = kernel * kernel * (cin + filters)
            self.params[f"lstm{n}.w"] = _uniform(rng, (kernel, kernel, cin + filters, 4 * filters), fan)
            b = np.zeros(4 * filters)
            b[filters:2 * filters] = 1.0  # forget gate starts open
            self.params[f"lstm{n}.b"] = b
            cin = filters
        self.params["collapse.w"] = _uniform(rng, (1, 1, history * filters, 1), history * filters)
        self.params["collapse.b"] = np.zeros(1)

    @property
    def config(self):
        return {"kind": self.kind, "in_channels": self.in_channels, "blocks": self.blocks,
                "filters": self.filters, "kernel": self.kernel, "history": self.history,
                "seed": self.seed}

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 5 or x.shape[1] != self.history:
            raise ValueError(f"expected (B, {self.history}, H, W, C) input, got {x.shape}")
        caches = []
        for n in range(self.blocks):
            x, cc = L.convlstm_forward(x, self.params[f"lstm{n}.w"], self.params[f"lstm{n}.b"], self.filters)
            caches.append(cc)
        y, tc = L.time_collapse_forward(x, self.params["collapse.w"], self.params["collapse.b"])
        return y, (caches, tc)

    def backward(self, dy, cache):
        caches, tc = cache
        grads = {}
        dx, grads["collapse.w"], grads["collapse.b"] = L.time_collapse_backward(dy, tc)
        for n in reversed(range(self.blocks)):
            dx, grads[f"lstm{n}.w"], grads[f"lstm{n}.b"] = L.convlstm_backward(dx, caches[n])
        return grads


def build_cnn_simplified(in_channels: int, profile: str = "paper", seed: int = 0, **overrides) -> CNNSimplified:
    cfg = {**PROFILES["cnn"][profile], **overrides}
    return CNNSimplified(in_channels, cfg["filters"], cfg["kernel"], seed)


def build_cnn_thresholded(in_channels: int, profile: str = "paper", seed: int = 0, **overrides) -> CNNThresholded:
    cfg = {**PROFILES["cnn"][profile], **overrides}
    return CNNThresholded(in_channels, cfg["filters"], cfg["kernel"], seed)


def build_convlstm(in_channels: int, profile: str = "paper", seed: int = 0, **overrides) -> ConvLSTMModel:
    cfg = {**PROFILES["convlstm"][profile], **overrides}
    return ConvLSTMModel(in_channels, cfg["blocks"], cfg["filters"], cfg["kernel"], cfg["history"], seed)


BUILDERS = {
    "cnn": build_cnn_simplified,
    "cnn-thresholded": build_cnn_thresholded,
    "convlstm": build_convlstm,
}


def build_model(kind: str, in_channels: int, profile: str = "paper", seed: int = 0, **overrides) -> Model:
    if kind not in BUILDERS:
        raise ValueError(f"unknown model {kind!r}; choose from {sorted(BUILDERS)}")
    return BUILDERS[kind](in_channels, profile, seed, **overrides)


def model_from_config(cfg: dict) -> Model:
    cfg = dict(cfg)
    kind = cfg.pop("kind")
    if kind == "cnn":
        return CNNSimplified(**cfg)
    if kind == "cnn-thresholded":
        return CNNThresholded(**cfg)
    if kind == "convlstm":
        return ConvLSTMModel(**cfg)
    raise ValueError(f"unknown model kind {kind!r}")


class ModelPredictor:
    """Adapts a model to the rollout predictor interface."""

    def __init__(self, model: Model):
        self.model = model
        self.history = model.history

    def predict(self, window):
        return self.model.predict(np.asarray(window)[None])[0, ..., 0]
