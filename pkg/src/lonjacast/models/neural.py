"""Small recurrent regressors (stacked RNN / LSTM) trained with Adam on MSE.

Everything is plain numpy: forward passes, backpropagation through time and
the optimizer.  The window's weeks are the recurrent time steps; each step's
input vector holds one value per selected market.  A ``flatten`` flag collapses
the window into a single time step for comparison runs.

Gradient correctness is checked against central finite differences
(`gradient_check`), which is the keystone test for this module.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = ["NetSpec", "NetworkModel", "net_init", "net_fit", "net_predict", "gradient_check"]


@dataclass(frozen=True)
class NetSpec:
    kind: str = "rnn"  # "rnn" | "lstm"
    layer_sizes: tuple[int, ...] = (1024, 256, 1)
    dropout: float = 0.02
    activation: str = "relu"  # "relu" | "linear" (test hook, rnn only)
    epochs: int = 500
    batch_size: int = 10
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    flatten: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("rnn", "lstm"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if not self.layer_sizes or self.layer_sizes[-1] != 1:
            raise ValueError("layer_sizes must end in 1 (the output layer)")
        if any(s < 1 for s in self.layer_sizes):
            raise ValueError("zero-sized layer")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    @property
    def hidden_sizes(self) -> tuple[int, ...]:
        return self.layer_sizes[:-1]


def _param_shapes(spec: NetSpec, n_inputs: int) -> list[tuple[str, tuple[int, ...]]]:
    shapes: list[tuple[str, tuple[int, ...]]] = []
    gate = 4 if spec.kind == "lstm" else 1
    fan_in = n_inputs
    for li, size in enumerate(spec.hidden_sizes):
        shapes.append((f"l{li}.Wx", (gate * size, fan_in)))
        shapes.append((f"l{li}.Wh", (gate * size, size)))
        shapes.append((f"l{li}.b", (gate * size,)))
        fan_in = size
    shapes.append(("out.w", (fan_in,)))
    shapes.append(("out.b", (1,)))
    return shapes


class _ParamView:
    """Named views into one flat parameter (or gradient) vector."""

    def __init__(self, shapes: list[tuple[str, tuple[int, ...]]], flat: np.ndarray):
        self.flat = flat
        self._views: dict[str, np.ndarray] = {}
        ofs = 0
        for name, shape in shapes:
            size = int(np.prod(shape))
            self._views[name] = flat[ofs : ofs + size].reshape(shape)
            ofs += size
        if ofs != len(flat):
            raise ValueError(f"parameter vector length {len(flat)}, expected {ofs}")

    def __getitem__(self, name: str) -> np.ndarray:
        return self._views[name]


def param_count(spec: NetSpec, n_inputs: int) -> int:
    return sum(int(np.prod(shape)) for _, shape in _param_shapes(spec, n_inputs))


@dataclass(frozen=True)
class NetworkModel:
    spec: NetSpec
    parameters: np.ndarray
    n_inputs: int  # per-step feature count
    time_steps: int
    target_mean: float = 0.0
    target_scale: float = 1.0
    loss_curve: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self) -> None:
        p = np.asarray(self.parameters, dtype=float)
        expected = param_count(self.spec, self.n_inputs)
        if p.shape != (expected,):
            raise ValueError(f"expected {expected} parameters, got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValueError("parameters must be finite")
        object.__setattr__(self, "parameters", p)

    def to_json(self, fingerprint: str = "") -> str:
        s = self.spec
        return json.dumps(
            {
                "family": s.kind,
                "hyperparams": {
                    "layer_sizes": list(s.layer_sizes),
                    "dropout": s.dropout,
                    "activation": s.activation,
                    "epochs": s.epochs,
                    "batch_size": s.batch_size,
                    "learning_rate": s.learning_rate,
                    "flatten": s.flatten,
                },
                "layout": {"time_steps": self.time_steps, "per_step_features": self.n_inputs},
                "target_mean": self.target_mean,
                "target_scale": self.target_scale,
                "parameters": [float(v) for v in self.parameters],
                "seed": s.seed,
                "trained_on": fingerprint,
            },
            sort_keys=True,
        )


def net_init(spec: NetSpec, n_inputs: int, time_steps: int) -> NetworkModel:
    """Seeded uniform fan-scaled init; biases zero, LSTM forget-gate bias 1."""
    shapes = _param_shapes(spec, n_inputs)
    flat = np.zeros(sum(int(np.prod(sh)) for _, sh in shapes))
    view = _ParamView(shapes, flat)
    rng = np.random.default_rng(spec.seed)
    gate = 4 if spec.kind == "lstm" else 1
    for name, shape in shapes:
        if name.endswith(".b"):
            if spec.kind == "lstm" and name.startswith("l"):
                size = shape[0] // 4
                view[name][size : 2 * size] = 1.0  # forget gate
            continue
        if len(shape) == 2:
            fan_out, fan_in = shape[0] // gate if name.startswith("l") else shape[0], shape[1]
            limit = np.sqrt(6.0 / (fan_in + fan_out))
        else:  # out.w
            limit = np.sqrt(6.0 / (shape[0] + 1))
        view[name][...] = rng.uniform(-limit, limit, size=shape)
    return NetworkModel(spec=spec, parameters=flat, n_inputs=n_inputs, time_steps=time_steps)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _forward_backward(
    model: NetworkModel,
    X: np.ndarray,  # (B, T, F)
    y: np.ndarray | None,  # standardized targets, (B,), None = predict only
    masks: list[np.ndarray] | None = None,  # dropout masks per hidden layer, (B, T, size)
) -> tuple[np.ndarray, float | None, np.ndarray | None]:
    """Returns (predictions, loss, flat gradient).  Loss/grad are None when y is None."""
    spec = model.spec
    shapes = _param_shapes(spec, model.n_inputs)
    p = _ParamView(shapes, model.parameters)
    B, T, _ = X.shape
    relu = spec.activation == "relu"

    layer_inputs: list[np.ndarray] = []  # (B, T, in) per layer, after dropout
    caches: list[dict] = []
    cur = X
    for li, size in enumerate(spec.hidden_sizes):
        Wx, Wh, b = p[f"l{li}.Wx"], p[f"l{li}.Wh"], p[f"l{li}.b"]
        layer_inputs.append(cur)
        H = np.zeros((B, T, size))
        if spec.kind == "rnn":
            A = np.zeros((B, T, size))
            h = np.zeros((B, size))
            for t in range(T):
                a = cur[:, t] @ Wx.T + h @ Wh.T + b
                h = np.maximum(a, 0.0) if relu else a
                A[:, t] = a
                H[:, t] = h
            caches.append({"A": A, "H": H})
        else:
            gates = np.zeros((B, T, 4, size))
            C = np.zeros((B, T, size))
            h = np.zeros((B, size))
            c = np.zeros((B, size))
            for t in range(T):
                a = cur[:, t] @ Wx.T + h @ Wh.T + b
                a = a.reshape(B, 4, size)
                ig = _sigmoid(a[:, 0])
                fg = _sigmoid(a[:, 1])
                gg = np.tanh(a[:, 2])
                og = _sigmoid(a[:, 3])
                c = fg * c + ig * gg
                h = og * np.tanh(c)
                gates[:, t, 0], gates[:, t, 1] = ig, fg
                gates[:, t, 2], gates[:, t, 3] = gg, og
                C[:, t] = c
                H[:, t] = h
            caches.append({"G": gates, "C": C, "H": H})
        cur = H
        if masks is not None:
            cur = cur * masks[li]

    final_h = cur[:, -1]  # (B, last_hidden)
    preds = final_h @ p["out.w"] + p["out.b"][0]

    if y is None:
        return preds, None, None

    diff = preds - y
    loss = float(np.mean(diff**2))

    grad_flat = np.zeros_like(model.parameters)
    g = _ParamView(shapes, grad_flat)
    dpred = 2.0 * diff / B  # (B,)
    g["out.w"][...] = final_h.T @ dpred
    g["out.b"][0] = float(np.sum(dpred))
    d_top = np.zeros((B, T, spec.hidden_sizes[-1]))
    d_top[:, -1] = np.outer(dpred, p["out.w"])

    d_upper = d_top
    for li in range(len(spec.hidden_sizes) - 1, -1, -1):
        size = spec.hidden_sizes[li]
        Wx, Wh = p[f"l{li}.Wx"], p[f"l{li}.Wh"]
        cache = caches[li]
        xin = layer_inputs[li]
        dH_ext = d_upper if masks is None else d_upper * masks[li]
        dX = np.zeros_like(xin)
        dWx = np.zeros_like(Wx)
        dWh = np.zeros_like(Wh)
        db = np.zeros(Wx.shape[0])

        if spec.kind == "rnn":
            A, H = cache["A"], cache["H"]
            dh_rec = np.zeros((B, size))
            for t in range(T - 1, -1, -1):
                dh = dH_ext[:, t] + dh_rec
                da = dh * (A[:, t] > 0.0) if relu else dh
                h_prev = H[:, t - 1] if t > 0 else np.zeros((B, size))
                dWx += da.T @ xin[:, t]
                dWh += da.T @ h_prev
                db += da.sum(axis=0)
                dX[:, t] = da @ Wx
                dh_rec = da @ Wh
        else:
            G, C, H = cache["G"], cache["C"], cache["H"]
            dh_rec = np.zeros((B, size))
            dc_rec = np.zeros((B, size))
            for t in range(T - 1, -1, -1):
                ig, fg, gg, og = G[:, t, 0], G[:, t, 1], G[:, t, 2], G[:, t, 3]
                c = C[:, t]
                c_prev = C[:, t - 1] if t > 0 else np.zeros((B, size))
                hc = np.tanh(c)
                dh = dH_ext[:, t] + dh_rec
                do = dh * hc
                dc = dc_rec + dh * og * (1.0 - hc**2)
                di = dc * gg
                dg = dc * ig
                df = dc * c_prev
                dc_rec = dc * fg
                da = np.concatenate(
                    [
                        di * ig * (1.0 - ig),
                        df * fg * (1.0 - fg),
                        dg * (1.0 - gg**2),
                        do * og * (1.0 - og),
                    ],
                    axis=1,
                )
                h_prev = H[:, t - 1] if t > 0 else np.zeros((B, size))
                dWx += da.T @ xin[:, t]
                dWh += da.T @ h_prev
                db += da.sum(axis=0)
                dX[:, t] = da @ Wx
                dh_rec = da @ Wh
        g[f"l{li}.Wx"][...] = dWx
        g[f"l{li}.Wh"][...] = dWh
        g[f"l{li}.b"][...] = db
        d_upper = dX
    return preds, loss, grad_flat


def _as_sequences(X: np.ndarray, spec: NetSpec, n_inputs: int, time_steps: int) -> np.ndarray:
    """Accepts (n, T, F) or flat (n, T*F); honours the flatten flag."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        if X.shape[1] != time_steps * n_inputs:
            raise ValueError(
                f"flat input width {X.shape[1]} != time_steps*features {time_steps * n_inputs}"
            )
        X = X.reshape(len(X), time_steps, n_inputs)
    if X.shape[1:] != (time_steps, n_inputs):
        raise ValueError(f"input layout {X.shape[1:]} != ({time_steps}, {n_inputs})")
    if spec.flatten:
        X = X.reshape(len(X), 1, time_steps * n_inputs)
    return X


def net_fit(
    X_sequences: np.ndarray, y: np.ndarray, spec: NetSpec, n_inputs: int, time_steps: int
) -> NetworkModel:
    """Mini-batch Adam on MSE with BPTT, seeded shuffling and inverted dropout.

    Targets are z-scored internally and the transform inverted at predict time.
    """
    eff_inputs = time_steps * n_inputs if spec.flatten else n_inputs
    eff_steps = 1 if spec.flatten else time_steps
    X = _as_sequences(X_sequences, spec, n_inputs, time_steps)
    y = np.asarray(y, dtype=float)
    n = len(X)
    if y.shape != (n,):
        raise ValueError("y length must match sample count")
    if n < spec.batch_size:
        raise ValueError(f"batch_size {spec.batch_size} exceeds sample count {n}")

    mean = float(y.mean())
    scale = float(y.std())
    if scale == 0.0:
        scale = 1.0
    ys = (y - mean) / scale

    model = net_init(spec, eff_inputs, eff_steps)
    params = model.parameters.copy()
    rng = np.random.default_rng(spec.seed + 1)
    m = np.zeros_like(params)
    v = np.zeros_like(params)
    step = 0
    curve: list[float] = []
    keep = 1.0 - spec.dropout

    for epoch in range(spec.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        n_batches = 0
        for lo in range(0, n - spec.batch_size + 1, spec.batch_size):
            idx = order[lo : lo + spec.batch_size]
            xb, yb = X[idx], ys[idx]
            masks = None
            if spec.dropout > 0.0:
                masks = [
                    (rng.random((len(idx), eff_steps, s)) < keep).astype(float) / keep
                    for s in spec.hidden_sizes
                ]
            work = NetworkModel(
                spec=spec, parameters=params, n_inputs=eff_inputs, time_steps=eff_steps
            )
            _, loss, grad = _forward_backward(work, xb, yb, masks)
            assert loss is not None and grad is not None
            if not np.isfinite(loss):
                raise FloatingPointError(f"non-finite training loss at epoch {epoch}")
            step += 1
            m = spec.beta1 * m + (1 - spec.beta1) * grad
            v = spec.beta2 * v + (1 - spec.beta2) * grad**2
            mhat = m / (1 - spec.beta1**step)
            vhat = v / (1 - spec.beta2**step)
            params = params - spec.learning_rate * mhat / (np.sqrt(vhat) + spec.adam_eps)
            epoch_loss += loss
            n_batches += 1
        curve.append(epoch_loss / max(n_batches, 1))

    return NetworkModel(
        spec=spec,
        parameters=params,
        n_inputs=eff_inputs,
        time_steps=eff_steps,
        target_mean=mean,
        target_scale=scale,
        loss_curve=tuple(curve),
    )


def net_predict(m: NetworkModel, X_sequences: np.ndarray) -> np.ndarray:
    """Deterministic forward pass, dropout disabled, standardization inverted."""
    spec = m.spec
    if spec.flatten:
        # the model stores the flattened layout; accept flat or sequence input
        X = np.asarray(X_sequences, dtype=float)
        X = X.reshape(len(X), 1, m.n_inputs)
    else:
        X = _as_sequences(X_sequences, spec, m.n_inputs, m.time_steps)
    preds, _, _ = _forward_backward(m, X, None, None)
    return preds * m.target_scale + m.target_mean


def gradient_check(
    m: NetworkModel, x_seq: np.ndarray, y: float, step: float = 1e-5
) -> float:
    """Max relative error between analytic and central-difference gradients of
    the MSE at one sample.  Small nets only (walks every parameter)."""
    if len(m.parameters) > 500:
        raise ValueError("gradient_check is for nets with <= 500 parameters")
    X = np.asarray(x_seq, dtype=float).reshape(1, m.time_steps, m.n_inputs)
    yv = np.array([float(y)])
    _, _, grad = _forward_backward(m, X, yv, None)
    assert grad is not None

    worst = 0.0
    base = m.parameters.copy()
    for i in range(len(base)):
        p_hi = base.copy()
        p_hi[i] += step
        p_lo = base.copy()
        p_lo[i] -= step
        hi_model = replace(m, parameters=p_hi)
        lo_model = replace(m, parameters=p_lo)
        _, l_hi, _ = _forward_backward(hi_model, X, yv, None)
        _, l_lo, _ = _forward_backward(lo_model, X, yv, None)
        assert l_hi is not None and l_lo is not None
        numeric = (l_hi - l_lo) / (2 * step)
        # the floor keeps float noise in near-zero gradients from dominating:
        # below it the comparison is effectively absolute, not relative
        denom = max(abs(numeric) + abs(grad[i]), 1e-6)
        rel = abs(numeric - grad[i]) / denom
        worst = max(worst, rel)
    return worst
