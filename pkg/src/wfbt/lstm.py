"""From-scratch LSTM regression network: gate-equation forward pass, full
backpropagation through time, inverted dropout, and early-stopped training.

Conventions:
  - gates use the sigmoid, the candidate cell and the dense output head use
    tanh; states start at zero.
  - dropout applies to each layer's hidden-state output on its way to the
    next layer or the head, never to the within-layer recurrence.
  - training iterates mini-batches in chronological dataset order with no
    shuffling, so a (seed, data, config) triple reproduces bit-identical
    histories.

All batched arrays are (batch, time, features)/(batch, hidden).
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergedLoss, EmptyDataset, ShapeMismatch
from .optimizers import Optimizer

GATES = ("i", "f", "o", "c")
DEFAULT_CLIP_NORM = 5.0


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class LstmLayerParams:
    """One layer's gate weights: W_* act on the input, U_* on the previous
    hidden state, b_* are biases; suffixes i/f/o/c = input, forget, output,
    candidate gates."""

    W_i: np.ndarray
    W_f: np.ndarray
    W_o: np.ndarray
    W_c: np.ndarray
    U_i: np.ndarray
    U_f: np.ndarray
    U_o: np.ndarray
    U_c: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_o: np.ndarray
    b_c: np.ndarray

    def W(self, gate: str) -> np.ndarray:
        return getattr(self, f"W_{gate}")

    def U(self, gate: str) -> np.ndarray:
        return getattr(self, f"U_{gate}")

    def b(self, gate: str) -> np.ndarray:
        return getattr(self, f"b_{gate}")


@dataclass
class LstmNetwork:
    layers: list[LstmLayerParams]
    head_w: np.ndarray
    head_b: np.ndarray  # 1-element array so optimizers can update in place
    hidden_size: int
    input_size: int
    dropout_rate: float = 0.0

    def param_dict(self) -> dict[str, np.ndarray]:
        """Live views of every parameter array, keyed layer{k}.{name}."""
        out: dict[str, np.ndarray] = {}
        for k, layer in enumerate(self.layers):
            for gate in GATES:
                out[f"layer{k}.W_{gate}"] = layer.W(gate)
                out[f"layer{k}.U_{gate}"] = layer.U(gate)
                out[f"layer{k}.b_{gate}"] = layer.b(gate)
        out["head.w"] = self.head_w
        out["head.b"] = self.head_b
        return out

    def clone(self) -> "LstmNetwork":
        return copy.deepcopy(self)


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "Adam"
    learning_rate: float = 0.001
    batch_size: int = 32
    max_epochs: int = 100
    patience: int = 10
    seed: int = 0
    clip_norm: float | None = DEFAULT_CLIP_NORM


@dataclass(frozen=True)
class SequenceDataset:
    """Feature windows with next-step scaled-close targets.

    inputs[(n, seq_len, input_size)]; targets[i] is the scaled close at bar
    target_indices[i], one step after the window's last row.
    """

    inputs: np.ndarray
    targets: np.ndarray
    target_indices: np.ndarray
    seq_len: int

    def __len__(self) -> int:
        return self.inputs.shape[0]


def init_network(input_size: int, hidden_size: int, layers: int,
                 dropout_rate: float, seed: int) -> LstmNetwork:
    """Seeded uniform init in [-1/sqrt(hidden), +1/sqrt(hidden)]; forget-gate
    biases start at 1, everything else at 0."""
    if input_size < 1 or hidden_size < 1 or layers < 1:
        raise ValueError("sizes must be positive")
    rng = np.random.default_rng(seed)
    bound = 1.0 / math.sqrt(hidden_size)

    def draw(*shape):
        return rng.uniform(-bound, bound, size=shape)

    layer_list = []
    in_dim = input_size
    for _ in range(layers):
        kwargs = {}
        for gate in GATES:
            kwargs[f"W_{gate}"] = draw(hidden_size, in_dim)
            kwargs[f"U_{gate}"] = draw(hidden_size, hidden_size)
            kwargs[f"b_{gate}"] = (np.ones(hidden_size) if gate == "f"
                                   else np.zeros(hidden_size))
        layer_list.append(LstmLayerParams(**kwargs))
        in_dim = hidden_size
    return LstmNetwork(layer_list, draw(hidden_size), np.zeros(1),
                       hidden_size, input_size, dropout_rate)


@dataclass
class ForwardCache:
    """Per-step activations retained for BPTT."""

    x: list[np.ndarray]  # per layer: input sequence (B,T,in)
    gates: list[dict[str, np.ndarray]]  # per layer: i/f/o/c stacks (B,T,H)
    c: list[np.ndarray]  # per layer: cell states (B,T,H)
    h: list[np.ndarray]  # per layer: raw hidden states (B,T,H)
    masks: list[np.ndarray | None]  # per layer: dropout masks or None
    head_in: np.ndarray  # (B,H) post-dropout final hidden state
    pred: np.ndarray  # (B,)


def forward_batch(net: LstmNetwork, windows: np.ndarray, training: bool = False,
                  rng: np.random.Generator | None = None) -> tuple[np.ndarray, ForwardCache]:
    x = np.asarray(windows, dtype=float)
    if x.ndim != 3 or x.shape[2] != net.input_size:
        raise ShapeMismatch(
            f"expected (batch, seq, {net.input_size}) windows, got {x.shape}")
    B, T, _ = x.shape
    H = net.hidden_size
    drop = net.dropout_rate if training else 0.0
    if drop > 0.0 and rng is None:
        raise ValueError("training forward with dropout needs an rng")

    xs, gate_stacks, c_stacks, h_stacks, masks = [], [], [], [], []
    inp = x
    for layer in net.layers:
        xs.append(inp)
        g = {k: np.empty((B, T, H)) for k in GATES}
        cs = np.empty((B, T, H))
        hs = np.empty((B, T, H))
        h_prev = np.zeros((B, H))
        c_prev = np.zeros((B, H))
        for t in range(T):
            xt = inp[:, t, :]
            zi = xt @ layer.W_i.T + h_prev @ layer.U_i.T + layer.b_i
            zf = xt @ layer.W_f.T + h_prev @ layer.U_f.T + layer.b_f
            zo = xt @ layer.W_o.T + h_prev @ layer.U_o.T + layer.b_o
            zc = xt @ layer.W_c.T + h_prev @ layer.U_c.T + layer.b_c
            i_t = _sigmoid(zi)
            f_t = _sigmoid(zf)
            o_t = _sigmoid(zo)
            ch_t = np.tanh(zc)
            c_t = f_t * c_prev + i_t * ch_t
            h_t = o_t * np.tanh(c_t)
            g["i"][:, t], g["f"][:, t], g["o"][:, t], g["c"][:, t] = i_t, f_t, o_t, ch_t
            cs[:, t] = c_t
            hs[:, t] = h_t
            h_prev, c_prev = h_t, c_t
        gate_stacks.append(g)
        c_stacks.append(cs)
        h_stacks.append(hs)
        if drop > 0.0:
            mask = (rng.random((B, T, H)) >= drop) / (1.0 - drop)
            masks.append(mask)
            inp = hs * mask
        else:
            masks.append(None)
            inp = hs
    head_in = inp[:, -1, :]
    pred = np.tanh(head_in @ net.head_w + net.head_b[0])
    cache = ForwardCache(xs, gate_stacks, c_stacks, h_stacks, masks, head_in, pred)
    return pred, cache


def forward(net: LstmNetwork, window: np.ndarray, training: bool = False,
            rng: np.random.Generator | None = None) -> tuple[float, ForwardCache]:
    """Single-window forward pass; see forward_batch."""
    pred, cache = forward_batch(net, np.asarray(window, dtype=float)[None], training, rng)
    return float(pred[0]), cache


def backward_batch(net: LstmNetwork, cache: ForwardCache,
                   d_pred: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of sum(d_pred * pred) w.r.t. every parameter."""
    B = cache.pred.shape[0]
    H = net.hidden_size
    grads = {k: np.zeros_like(v) for k, v in net.param_dict().items()}

    dz = np.asarray(d_pred, dtype=float) * (1.0 - cache.pred**2)  # (B,)
    grads["head.w"] += dz @ cache.head_in
    grads["head.b"] += np.array([dz.sum()])
    d_out_last = dz[:, None] * net.head_w  # grad on final layer's (dropped) h_T

    n_layers = len(net.layers)
    d_out_seq = None  # (B,T,H) grad on the post-dropout output sequence
    for k in range(n_layers - 1, -1, -1):
        layer = net.layers[k]
        xs = cache.x[k]
        g = cache.gates[k]
        cs = cache.c[k]
        hs = cache.h[k]
        T = hs.shape[1]
        if d_out_seq is None:
            d_out_seq = np.zeros_like(hs)
            d_out_seq[:, -1] = d_out_last
        mask = cache.masks[k]
        d_h_seq = d_out_seq * mask if mask is not None else d_out_seq

        d_x_seq = np.zeros_like(xs)
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        gW = {gate: grads[f"layer{k}.W_{gate}"] for gate in GATES}
        gU = {gate: grads[f"layer{k}.U_{gate}"] for gate in GATES}
        gb = {gate: grads[f"layer{k}.b_{gate}"] for gate in GATES}
        for t in range(T - 1, -1, -1):
            i_t, f_t, o_t, ch_t = g["i"][:, t], g["f"][:, t], g["o"][:, t], g["c"][:, t]
            c_t = cs[:, t]
            c_prev = cs[:, t - 1] if t > 0 else np.zeros((B, H))
            h_prev = hs[:, t - 1] if t > 0 else np.zeros((B, H))
            tanh_c = np.tanh(c_t)

            dh = d_h_seq[:, t] + dh_next
            dzo = dh * tanh_c * o_t * (1 - o_t)
            dc = dh * o_t * (1 - tanh_c**2) + dc_next
            dzf = dc * c_prev * f_t * (1 - f_t)
            dzi = dc * ch_t * i_t * (1 - i_t)
            dzc = dc * i_t * (1 - ch_t**2)

            xt = xs[:, t]
            for gate, dzg in (("i", dzi), ("f", dzf), ("o", dzo), ("c", dzc)):
                gW[gate] += dzg.T @ xt
                gU[gate] += dzg.T @ h_prev
                gb[gate] += dzg.sum(axis=0)
            d_x_seq[:, t] = (dzi @ layer.W_i + dzf @ layer.W_f
                             + dzo @ layer.W_o + dzc @ layer.W_c)
            dh_next = (dzi @ layer.U_i + dzf @ layer.U_f
                       + dzo @ layer.U_o + dzc @ layer.U_c)
            dc_next = dc * f_t
        d_out_seq = d_x_seq  # feeds the layer below
    return grads


def backward(net: LstmNetwork, cache: ForwardCache,
             d_loss_d_pred: float) -> dict[str, np.ndarray]:
    """Single-window gradients; see backward_batch."""
    return backward_batch(net, cache, np.asarray([d_loss_d_pred], dtype=float))


def clip_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    total = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total > max_norm and total > 0:
        scale = max_norm / total
        for g in grads.values():
            g *= scale
    return total


def _inference_mse(net: LstmNetwork, dataset: SequenceDataset,
                   chunk: int = 512) -> float:
    sse = 0.0
    for lo in range(0, len(dataset), chunk):
        pred, _ = forward_batch(net, dataset.inputs[lo:lo + chunk])
        sse += float(np.sum((pred - dataset.targets[lo:lo + chunk]) ** 2))
    return sse / len(dataset)


def train(net: LstmNetwork, train_set: SequenceDataset, valid_set: SequenceDataset,
          config: TrainConfig) -> tuple[LstmNetwork, list[tuple[float, float]], int]:
    """Mini-batch training with validation-loss early stopping.

    Returns (net carrying the best-validation-epoch weights, per-epoch
    (train_loss, valid_loss) history, best_epoch starting at 1).
    """
    if len(train_set) == 0 or len(valid_set) == 0:
        raise EmptyDataset("train and validation sets must be non-empty")
    rng = np.random.default_rng(config.seed)
    opt = Optimizer(config.optimizer, config.learning_rate)
    params = net.param_dict()

    history: list[tuple[float, float]] = []
    best_loss = math.inf
    best_epoch = 0
    best_params: dict[str, np.ndarray] | None = None
    since_best = 0
    n = len(train_set)
    for epoch in range(1, config.max_epochs + 1):
        sse = 0.0
        for lo in range(0, n, config.batch_size):
            xb = train_set.inputs[lo:lo + config.batch_size]
            yb = train_set.targets[lo:lo + config.batch_size]
            pred, cache = forward_batch(net, xb, training=True, rng=rng)
            err = pred - yb
            sse += float(np.sum(err * err))
            grads = backward_batch(net, cache, 2.0 * err / xb.shape[0])
            if config.clip_norm is not None:
                clip_global_norm(grads, config.clip_norm)
            opt.step(params, grads)
        train_loss = sse / n
        valid_loss = _inference_mse(net, valid_set)
        if not (math.isfinite(train_loss) and math.isfinite(valid_loss)):
            raise DivergedLoss(
                f"non-finite loss at epoch {epoch}: train={train_loss}, valid={valid_loss}")
        history.append((train_loss, valid_loss))
        if valid_loss < best_loss:
            best_loss = valid_loss
            best_epoch = epoch
            best_params = {k: v.copy() for k, v in params.items()}
            since_best = 0
        else:
            since_best += 1
            if since_best >= config.patience:
                break
    assert best_params is not None
    for key, value in best_params.items():
        params[key][...] = value
    return net, history, best_epoch


def predict_series(net: LstmNetwork, dataset: SequenceDataset, scaler) -> np.ndarray:
    """Inference predictions mapped back to price units via the close scaler."""
    preds = np.empty(len(dataset))
    chunk = 512
    for lo in range(0, len(dataset), chunk):
        p, _ = forward_batch(net, dataset.inputs[lo:lo + chunk])
        preds[lo:lo + chunk] = p
    return scaler.inverse(preds)
