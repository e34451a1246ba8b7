"""Toy scene-completion model.

A 4-level U-Net over (x, y) with the grid's z axis folded into the channel
dimension: depthwise-separable encoder, criss-cross attention bottleneck,
separable-attention decoder blocks at the 1:8 and 1:4 resolutions, and a
per-column linear head emitting one class score vector per voxel.

Everything is float64 numpy with hand-written backward passes; the trainer
is plain momentum gradient descent.
"""

from dataclasses import dataclass, field

import numpy as np

from ..rng import Xorshift128Plus
from ..mapping.grid import Occupancy, VoxelGrid
from .baseline import PredictedOccupancy
from .ops import (
    CcaParams,
    SeparableAttentionParams,
    cca_forward_backward,
    dsconv_backward,
    dsconv_forward,
)

FREE_CLASS = 0

_CHANNELS = (8, 16, 32, 64)


@dataclass
class CompletionModel:
    grid_dims: tuple[int, int, int]
    n_classes: int
    params: dict[str, np.ndarray] = field(default_factory=dict)

    @staticmethod
    def init(grid_dims, n_classes: int = 3, seed: int = 0) -> "CompletionModel":
        nx, ny, nz = (int(d) for d in grid_dims)
        if nx % 8 or ny % 8:
            raise ValueError(
                f"grid x/y dims must be divisible by 8 for the 4-level model; "
                f"got {(nx, ny)} -- pad the grid first")
        rng = Xorshift128Plus(seed)
        c1, c2, c3, c4 = _CHANNELS
        p: dict[str, np.ndarray] = {}

        def conv(name, cin, cout, k=3):
            p[f"{name}_k"] = rng.normal_array((cin, k, k), 1.0 / k)
            p[f"{name}_p"] = rng.normal_array((cout, cin), 1.0 / np.sqrt(cin))

        conv("enc1", nz, c1)
        conv("enc2", c1, c2)
        conv("enc3", c2, c3)
        conv("enc4", c3, c4)

        cca = CcaParams.init(rng, c4)
        p["cca_q"], p["cca_k"], p["cca_v"] = cca.query_proj, cca.key_proj, cca.value_proj

        for name, d in (("attn8", c4), ("attn4", c4)):
            a = SeparableAttentionParams.init(rng, d)
            p[f"{name}_i"] = a.context_weights
            p[f"{name}_wk"] = a.key_weights
            p[f"{name}_wv"] = a.value_weights
            p[f"{name}_wo"] = a.out_weights

        conv("dec3", c4, c3)
        conv("dec2", c3 + c3, c2)
        conv("dec1", c2 + c2, c1)

        head_out = nz * n_classes
        p["head_w"] = rng.normal_array((head_out, c1 + c1), 1.0 / np.sqrt(c1 + c1))
        bias = np.zeros((n_classes, nz))
        bias[FREE_CLASS, :] = 1.0  # untrained model leans free
        p["head_b"] = bias.reshape(-1)

        return CompletionModel(grid_dims=(nx, ny, nz), n_classes=n_classes, params=p)

    def copy(self) -> "CompletionModel":
        return CompletionModel(
            grid_dims=self.grid_dims,
            n_classes=self.n_classes,
            params={k: v.copy() for k, v in self.params.items()},
        )

    def cca_params(self) -> CcaParams:
        return CcaParams(self.params["cca_q"], self.params["cca_k"], self.params["cca_v"])

    def attn_params(self, name: str) -> SeparableAttentionParams:
        p = self.params
        return SeparableAttentionParams(
            p[f"{name}_i"], p[f"{name}_wk"], p[f"{name}_wv"], p[f"{name}_wo"])


# -- grid <-> tensor encoding ------------------------------------------------

_OCC_CODE = np.array([0.0, -1.0, 1.0])  # unknown, free, occupied


def encode_grid(grid: VoxelGrid) -> np.ndarray:
    """(nz, nx, ny) float map: unknown 0, free -1, occupied +1."""
    return _OCC_CODE[grid.occ].transpose(2, 0, 1).astype(np.float64)


def target_classes(grid: VoxelGrid, n_classes: int) -> np.ndarray:
    """(nx, ny, nz) int class targets: free class for non-occupied voxels,
    clamped stored class for occupied ones."""
    t = np.where(
        grid.occ == Occupancy.OCCUPIED,
        np.clip(grid.cls, 1, n_classes - 1),
        FREE_CLASS,
    )
    return t.astype(np.int64)


# -- forward / backward ------------------------------------------------------

def _pool(x):
    c, w, h = x.shape
    return x.reshape(c, w // 2, 2, h // 2, 2).mean(axis=(2, 4))


def _pool_back(dy, shape):
    c, w, h = shape
    return np.repeat(np.repeat(dy, 2, axis=1), 2, axis=2) / 4.0


def _up(x):
    return np.repeat(np.repeat(x, 2, axis=1), 2, axis=2)


def _up_back(dy):
    c, w, h = dy.shape
    return dy.reshape(c, w // 2, 2, h // 2, 2).sum(axis=(2, 4))


def _attn_tokens(x):
    c, w, h = x.shape
    return x.reshape(c, w * h).T, (c, w, h)


def _attn_untokens(t, shape):
    c, w, h = shape
    return t.T.reshape(c, w, h)


def _model_forward(model: CompletionModel, feat: np.ndarray, want_cache: bool):
    from .ops import cca_forward, _sepattn_core

    p = model.params
    cache: dict = {"relu": {}, "conv": {}}

    def conv_relu(name, x):
        y, cc = dsconv_forward(x, p[f"{name}_k"], p[f"{name}_p"])
        r = np.maximum(y, 0.0)
        if want_cache:
            cache["conv"][name] = cc
            cache["relu"][name] = y
        return r

    e1 = conv_relu("enc1", feat)
    e2 = conv_relu("enc2", _pool(e1))
    e3 = conv_relu("enc3", _pool(e2))
    e4 = conv_relu("enc4", _pool(e3))

    cca = model.cca_params()
    if want_cache:
        cache["cca_in"] = e4
    b = cca_forward(e4, cca)

    t8, shape8 = _attn_tokens(b)
    y8, _ = _sepattn_core(t8, model.attn_params("attn8"))
    a8 = b + _attn_untokens(y8, shape8)
    if want_cache:
        cache["t8"] = t8

    d3 = conv_relu("dec3", _up(a8))
    d3c = np.concatenate([d3, e3], axis=0)

    t4, shape4 = _attn_tokens(d3c)
    y4, _ = _sepattn_core(t4, model.attn_params("attn4"))
    a4 = d3c + _attn_untokens(y4, shape4)
    if want_cache:
        cache["t4"] = t4

    d2 = conv_relu("dec2", _up(a4))
    d2c = np.concatenate([d2, e2], axis=0)
    d1 = conv_relu("dec1", _up(d2c))
    d1c = np.concatenate([d1, e1], axis=0)

    logits_flat = np.einsum("oc,cwh->owh", p["head_w"], d1c) + p["head_b"][:, None, None]
    nz = model.grid_dims[2]
    w, h = d1c.shape[1], d1c.shape[2]
    logits = logits_flat.reshape(model.n_classes, nz, w, h)

    if want_cache:
        cache.update(e1=e1, e2=e2, e3=e3, e4=e4, b=b, a8=a8, d3=d3, d3c=d3c,
                     a4=a4, d2=d2, d2c=d2c, d1=d1, d1c=d1c, shape8=shape8,
                     shape4=shape4, feat=feat)
    return logits, cache


def _model_backward(model: CompletionModel, cache, dlogits: np.ndarray):
    from .ops import separable_attention_backward

    p = model.params
    grads = {k: np.zeros_like(v) for k, v in p.items()}

    n_cls, nz, w, h = dlogits.shape
    dflat = dlogits.reshape(n_cls * nz, w, h)
    grads["head_b"] = dflat.sum(axis=(1, 2))
    grads["head_w"] = np.einsum("owh,cwh->oc", dflat, cache["d1c"])
    dd1c = np.einsum("oc,owh->cwh", p["head_w"], dflat)

    def conv_relu_back(name, dout):
        dpre = dout * (cache["relu"][name] > 0)
        dx, dk, dp = dsconv_backward(dpre, cache["conv"][name])
        grads[f"{name}_k"] += dk
        grads[f"{name}_p"] += dp
        return dx

    c1 = cache["d1"].shape[0]
    dd1, de1_skip = dd1c[:c1], dd1c[c1:]
    dd2c = _up_back(conv_relu_back("dec1", dd1))

    c2 = cache["d2"].shape[0]
    dd2, de2_skip = dd2c[:c2], dd2c[c2:]
    da4 = _up_back(conv_relu_back("dec2", dd2))

    # residual separable attention at 1:4
    dt4_out = _attn_tokens(da4)[0]
    _, dt4, di, dwk, dwv, dwo = separable_attention_backward(
        cache["t4"], model.attn_params("attn4"), dt4_out)
    grads["attn4_i"] += di
    grads["attn4_wk"] += dwk
    grads["attn4_wv"] += dwv
    grads["attn4_wo"] += dwo
    dd3c = da4 + _attn_untokens(dt4, cache["shape4"])

    c3 = cache["d3"].shape[0]
    dd3, de3_skip = dd3c[:c3], dd3c[c3:]
    da8 = _up_back(conv_relu_back("dec3", dd3))

    dt8_out = _attn_tokens(da8)[0]
    _, dt8, di, dwk, dwv, dwo = separable_attention_backward(
        cache["t8"], model.attn_params("attn8"), dt8_out)
    grads["attn8_i"] += di
    grads["attn8_wk"] += dwk
    grads["attn8_wv"] += dwv
    grads["attn8_wo"] += dwo
    db = da8 + _attn_untokens(dt8, cache["shape8"])

    _, de4, dq, dk, dv = cca_forward_backward(cache["cca_in"], model.cca_params(), db)
    grads["cca_q"] += dq
    grads["cca_k"] += dk
    grads["cca_v"] += dv

    de3 = _pool_back(conv_relu_back("enc4", de4), cache["e3"].shape)
    de3 += de3_skip
    de2 = _pool_back(conv_relu_back("enc3", de3), cache["e2"].shape)
    de2 += de2_skip
    de1 = _pool_back(conv_relu_back("enc2", de2), cache["e1"].shape)
    de1 += de1_skip
    conv_relu_back("enc1", de1)
    return grads


def model_logits(model: CompletionModel, scan: VoxelGrid) -> np.ndarray:
    """(n_classes, nz, nx, ny) per-voxel class scores."""
    nx, ny, nz = model.grid_dims
    if scan.dims != (nx, ny, nz):
        raise ValueError(f"scan dims {scan.dims} do not match model dims {model.grid_dims}")
    if nx % 8 or ny % 8:
        raise ValueError(f"grid x/y dims {(nx, ny)} not divisible by 8 -- pad the grid first")
    logits, _ = _model_forward(model, encode_grid(scan), want_cache=False)
    return logits


def completion_forward(scan: VoxelGrid, model: CompletionModel) -> PredictedOccupancy:
    """Run the model and return the predicted-occupied set.

    Observation-preserving: predictions may only add occupancy on unknown
    voxels; every scanned-occupied voxel is carried through with its class.
    """
    logits = model_logits(model, scan)
    pred_cls = np.argmax(logits, axis=0)            # (nz, nx, ny)
    pred_cls = pred_cls.transpose(1, 2, 0)          # (nx, ny, nz)

    unknown = scan.occ == Occupancy.UNKNOWN
    model_occ = unknown & (pred_cls != FREE_CLASS)

    observed_occ = scan.occ == Occupancy.OCCUPIED
    coords_model = np.argwhere(model_occ)
    coords_obs = np.argwhere(observed_occ)

    cls_model = pred_cls[model_occ]
    cls_obs = scan.cls[observed_occ].astype(np.int64)
    # observed voxels keep their scanned class when they have one
    obs_model_cls = pred_cls[observed_occ]
    cls_obs = np.where(cls_obs >= 0, cls_obs, obs_model_cls)

    coords = np.concatenate([coords_obs, coords_model], axis=0)
    classes = np.concatenate([cls_obs, cls_model], axis=0)
    return PredictedOccupancy(coords, classes.astype(np.int16))


# -- training ----------------------------------------------------------------

def _class_weights(n_classes: int, occupied_weight: float) -> np.ndarray:
    w = np.full(n_classes, occupied_weight, dtype=np.float64)
    w[FREE_CLASS] = 1.0
    return w


def sample_loss_grads(model: CompletionModel, scan: VoxelGrid, full: VoxelGrid,
                      occupied_weight: float = 4.0):
    """Class-weighted per-voxel cross entropy against the full grid plus
    parameter grads. Occupied classes are upweighted because they are a few
    percent of the voxels and plain CE collapses to all-free."""
    feat = encode_grid(scan)
    logits, cache = _model_forward(model, feat, want_cache=True)
    n_cls, nz, w, h = logits.shape
    targets = target_classes(full, model.n_classes).transpose(2, 0, 1)  # (nz, nx, ny)

    m = logits.max(axis=0, keepdims=True)
    e = np.exp(logits - m)
    probs = e / e.sum(axis=0, keepdims=True)

    idx = np.indices((nz, w, h))
    p_true = probs[targets, idx[0], idx[1], idx[2]]
    vox_w = _class_weights(model.n_classes, occupied_weight)[targets]
    w_sum = float(vox_w.sum())
    loss = float(-(vox_w * np.log(np.maximum(p_true, 1e-300))).sum() / w_sum)

    onehot = np.zeros_like(probs)
    onehot[targets, idx[0], idx[1], idx[2]] = 1.0
    dlogits = vox_w[None] * (probs - onehot) / w_sum

    grads = _model_backward(model, cache, dlogits)
    return loss, grads


def dataset_loss(model: CompletionModel, dataset, occupied_weight: float = 4.0) -> float:
    total = 0.0
    for scan, full in dataset:
        feat = encode_grid(scan)
        logits, _ = _model_forward(model, feat, want_cache=False)
        n_cls, nz, w, h = logits.shape
        targets = target_classes(full, model.n_classes).transpose(2, 0, 1)
        m = logits.max(axis=0, keepdims=True)
        e = np.exp(logits - m)
        probs = e / e.sum(axis=0, keepdims=True)
        idx = np.indices((nz, w, h))
        p_true = probs[targets, idx[0], idx[1], idx[2]]
        vox_w = _class_weights(model.n_classes, occupied_weight)[targets]
        total += float(-(vox_w * np.log(np.maximum(p_true, 1e-300))).sum() / vox_w.sum())
    return total / len(dataset)


def train_toy(model: CompletionModel, dataset, epochs: int, seed: int = 0,
              lr: float = 3e-3, lr_decay: float = 0.98, momentum: float = 0.9,
              occupied_weight: float = 4.0, verbose: bool = False) -> CompletionModel:
    """Momentum gradient descent on per-voxel cross entropy.

    Samples are visited in a seed-shuffled order each epoch; the whole run is
    bit-deterministic for a fixed seed. Returns a new model; the input model
    is untouched.
    """
    if not dataset:
        raise ValueError("dataset must be nonempty")
    shapes = {s.dims for s, _ in dataset} | {f.dims for _, f in dataset}
    if len(shapes) != 1:
        raise ValueError(f"all dataset grids must share one shape, got {sorted(shapes)}")

    out = model.copy()
    if epochs == 0:
        return out

    rng = Xorshift128Plus(seed)
    velocity = {k: np.zeros_like(v) for k, v in out.params.items()}
    step_lr = lr
    for epoch in range(epochs):
        order = list(range(len(dataset)))
        rng.shuffle(order)
        epoch_loss = 0.0
        for i in order:
            scan, full = dataset[i]
            loss, grads = sample_loss_grads(out, scan, full, occupied_weight)
            epoch_loss += loss
            for k, g in grads.items():
                velocity[k] = momentum * velocity[k] - step_lr * g
                out.params[k] = out.params[k] + velocity[k]
        if verbose:
            print(f"epoch {epoch:3d}  lr {step_lr:.5f}  loss {epoch_loss / len(dataset):.5f}")
        step_lr *= lr_decay
    return out


def voxel_iou(pred: PredictedOccupancy, truth_grid: VoxelGrid) -> float:
    """Intersection over union between a predicted-occupied set and the
    occupied voxels of a ground-truth grid."""
    truth = truth_grid.occ == Occupancy.OCCUPIED
    pred_mask = np.zeros(truth_grid.dims, dtype=bool)
    coords, _ = pred.as_arrays()
    if coords.shape[0]:
        pred_mask[coords[:, 0], coords[:, 1], coords[:, 2]] = True
    union = np.count_nonzero(truth | pred_mask)
    if union == 0:
        return 1.0
    return float(np.count_nonzero(truth & pred_mask) / union)
