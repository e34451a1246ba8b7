"""Core completion-network numerics with analytic gradients.

Feature maps are plain float64 arrays of shape (channels, width, height).
Every forward op has a matching backward that the trainer and the gradient
checks rely on; none of this touches an autodiff framework.
"""

from dataclasses import dataclass

import numpy as np

_NEG_BIG = -1e30  # softmax mask value; exp underflows to exactly 0.0


def _check_feature_map(x: np.ndarray, name: str = "input") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError(f"{name} must have shape (channels, width, height), got {x.shape}")
    if 0 in x.shape:
        raise ValueError(f"{name} has a zero-sized dimension: {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError(f"{name} contains non-finite values")
    return x


# ---------------------------------------------------------------------------
# depthwise-separable convolution
# ---------------------------------------------------------------------------

def dsconv_forward(x: np.ndarray, depth_kernels: np.ndarray, point_weights: np.ndarray):
    """Per-channel k x k spatial correlation (same zero padding) followed by
    1 x 1 channel mixing.

    depth_kernels: (C_in, k, k); point_weights: (C_out, C_in).
    Returns (y, cache) with y of shape (C_out, W, H).
    """
    x = _check_feature_map(x)
    depth_kernels = np.asarray(depth_kernels, dtype=np.float64)
    point_weights = np.asarray(point_weights, dtype=np.float64)

    c_in, w, h = x.shape
    if depth_kernels.ndim != 3 or depth_kernels.shape[0] != c_in:
        raise ValueError(
            f"depth_kernels channel dim {depth_kernels.shape} does not match input channels {c_in}")
    k = depth_kernels.shape[1]
    if depth_kernels.shape[2] != k:
        raise ValueError(f"depth kernels must be square, got {depth_kernels.shape}")
    if k % 2 != 1:
        raise ValueError(f"kernel size must be odd, got {k}")
    if point_weights.ndim != 2 or point_weights.shape[1] != c_in:
        raise ValueError(
            f"point_weights input dim {point_weights.shape} does not match input channels {c_in}")

    pad = k // 2
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    z = np.zeros_like(x)
    for a in range(k):
        for b in range(k):
            z += depth_kernels[:, a, b][:, None, None] * xp[:, a:a + w, b:b + h]
    y = np.einsum("oc,cwh->owh", point_weights, z)
    cache = (xp, z, depth_kernels, point_weights, k, pad, (c_in, w, h))
    return y, cache


def dsconv_backward(dy: np.ndarray, cache):
    """Gradients of dsconv_forward w.r.t. input, depth kernels and point weights."""
    xp, z, depth_kernels, point_weights, k, pad, (c_in, w, h) = cache
    dy = np.asarray(dy, dtype=np.float64)

    d_point = np.einsum("owh,cwh->oc", dy, z)
    dz = np.einsum("oc,owh->cwh", point_weights, dy)

    d_kernels = np.zeros_like(depth_kernels)
    dxp = np.zeros_like(xp)
    for a in range(k):
        for b in range(k):
            d_kernels[:, a, b] = np.einsum("cwh,cwh->c", dz, xp[:, a:a + w, b:b + h])
            dxp[:, a:a + w, b:b + h] += depth_kernels[:, a, b][:, None, None] * dz
    dx = dxp[:, pad:pad + w, pad:pad + h] if pad else dxp
    return dx, d_kernels, d_point


def depthwise_separable_conv(x: np.ndarray, depth_kernels: np.ndarray,
                             point_weights: np.ndarray) -> np.ndarray:
    y, _ = dsconv_forward(x, depth_kernels, point_weights)
    return y


def dsconv_param_count(c_in: int, c_out: int, k: int) -> int:
    return c_in * k * k + c_out * c_in


def dense_conv_param_count(c_in: int, c_out: int, k: int) -> int:
    return c_out * c_in * k * k


# ---------------------------------------------------------------------------
# criss-cross attention
# ---------------------------------------------------------------------------

@dataclass
class CcaParams:
    """1x1 projections for criss-cross attention.

    query_proj, key_proj: (C', C) with C' < C; value_proj: (C, C).
    """

    query_proj: np.ndarray
    key_proj: np.ndarray
    value_proj: np.ndarray

    def __post_init__(self):
        self.query_proj = np.asarray(self.query_proj, dtype=np.float64)
        self.key_proj = np.asarray(self.key_proj, dtype=np.float64)
        self.value_proj = np.asarray(self.value_proj, dtype=np.float64)

    def validate(self, channels: int) -> None:
        cq, c = self.query_proj.shape
        if c != channels:
            raise ValueError(f"query_proj expects {c} channels, feature map has {channels}")
        if self.key_proj.shape != (cq, channels):
            raise ValueError(
                f"key_proj shape {self.key_proj.shape} does not match query_proj {self.query_proj.shape}")
        if cq >= channels:
            raise ValueError(f"reduced channels C'={cq} must be < C={channels}")
        if self.value_proj.shape != (channels, channels):
            raise ValueError(f"value_proj must be ({channels}, {channels}), got {self.value_proj.shape}")

    @staticmethod
    def init(rng, channels: int, reduced: int | None = None) -> "CcaParams":
        cq = reduced if reduced is not None else max(1, channels // 8)
        scale_q = 1.0 / np.sqrt(channels)
        return CcaParams(
            query_proj=rng.normal_array((cq, channels), scale_q),
            key_proj=rng.normal_array((cq, channels), scale_q),
            value_proj=rng.normal_array((channels, channels), scale_q),
        )


def _cca_core(h: np.ndarray, params: CcaParams):
    c, w, hh = h.shape
    q = np.einsum("qc,cwh->qwh", params.query_proj, h)
    k = np.einsum("qc,cwh->qwh", params.key_proj, h)
    v = np.einsum("oc,cwh->owh", params.value_proj, h)

    # affinities of each position u=(w,h) against its column (H entries,
    # including u itself) and its row with u masked out (W entries, mask at u)
    col_scores = np.einsum("qwh,qwg->whg", q, k)          # (W, H, H)
    row_scores = np.einsum("qwh,qvh->whv", q, k)          # (W, H, W)
    row_scores = row_scores.copy()
    iw = np.arange(w)
    row_scores[iw, :, iw] = _NEG_BIG

    scores = np.concatenate([col_scores, row_scores], axis=2)  # (W, H, H+W)
    m = scores.max(axis=2, keepdims=True)
    e = np.exp(scores - m)
    a = e / e.sum(axis=2, keepdims=True)

    a_col = a[:, :, :hh]
    a_row = a[:, :, hh:]
    out = (
        np.einsum("whg,cwg->cwh", a_col, v)
        + np.einsum("whv,cvh->cwh", a_row, v)
        + h
    )
    return out, (q, k, v, a, col_scores.shape, h)


def cca_forward(h: np.ndarray, params: CcaParams) -> np.ndarray:
    """Criss-cross attention: affinities against the H+W-1 positions sharing
    a row or column, softmax-normalized, aggregated over the value map, plus
    the residual input."""
    h = _check_feature_map(h, "feature map")
    params.validate(h.shape[0])
    out, _ = _cca_core(h, params)
    return out


def cca_forward_backward(h: np.ndarray, params: CcaParams, dout: np.ndarray):
    """Forward pass plus gradients w.r.t. the feature map and all projections."""
    h = _check_feature_map(h, "feature map")
    params.validate(h.shape[0])
    out, (q, k, v, a, _, _) = _cca_core(h, params)

    c, w, hh = h.shape
    dout = np.asarray(dout, dtype=np.float64)
    a_col = a[:, :, :hh]
    a_row = a[:, :, hh:]

    da_col = np.einsum("cwh,cwg->whg", dout, v)
    da_row = np.einsum("cwh,cvh->whv", dout, v)
    dv = np.einsum("whg,cwh->cwg", a_col, dout) + np.einsum("whv,cwh->cvh", a_row, dout)

    da = np.concatenate([da_col, da_row], axis=2)
    # softmax backward per position; masked entries have a == 0 -> ds == 0
    ds = a * (da - np.sum(a * da, axis=2, keepdims=True))
    ds_col = ds[:, :, :hh]
    ds_row = ds[:, :, hh:]

    dq = np.einsum("whg,qwg->qwh", ds_col, k) + np.einsum("whv,qvh->qwh", ds_row, k)
    dk = np.einsum("whg,qwh->qwg", ds_col, q) + np.einsum("whv,qwh->qvh", ds_row, q)

    dh = (
        np.einsum("qc,qwh->cwh", params.query_proj, dq)
        + np.einsum("qc,qwh->cwh", params.key_proj, dk)
        + np.einsum("oc,owh->cwh", params.value_proj, dv)
        + dout
    )
    d_query = np.einsum("qwh,cwh->qc", dq, h)
    d_key = np.einsum("qwh,cwh->qc", dk, h)
    d_value = np.einsum("owh,cwh->oc", dv, h)
    return out, dh, d_query, d_key, d_value


# ---------------------------------------------------------------------------
# separable self-attention
# ---------------------------------------------------------------------------

@dataclass
class SeparableAttentionParams:
    """Weights for linear-in-token-count attention: a d->1 context scorer and
    d x d key / value / output maps."""

    context_weights: np.ndarray  # (d,)
    key_weights: np.ndarray      # (d, d)
    value_weights: np.ndarray    # (d, d)
    out_weights: np.ndarray      # (d, d)

    def __post_init__(self):
        self.context_weights = np.asarray(self.context_weights, dtype=np.float64).reshape(-1)
        self.key_weights = np.asarray(self.key_weights, dtype=np.float64)
        self.value_weights = np.asarray(self.value_weights, dtype=np.float64)
        self.out_weights = np.asarray(self.out_weights, dtype=np.float64)

    def validate(self, d: int) -> None:
        if self.context_weights.shape != (d,):
            raise ValueError(f"context_weights must be ({d},), got {self.context_weights.shape}")
        for name, m in (("key_weights", self.key_weights),
                        ("value_weights", self.value_weights),
                        ("out_weights", self.out_weights)):
            if m.shape != (d, d):
                raise ValueError(f"{name} must be ({d}, {d}), got {m.shape}")

    @staticmethod
    def init(rng, d: int) -> "SeparableAttentionParams":
        s = 1.0 / np.sqrt(d)
        return SeparableAttentionParams(
            context_weights=rng.normal_array((d,), s),
            key_weights=rng.normal_array((d, d), s),
            value_weights=rng.normal_array((d, d), s),
            out_weights=rng.normal_array((d, d), s),
        )


def _sepattn_core(x: np.ndarray, p: SeparableAttentionParams):
    s = x @ p.context_weights                      # (k,)
    e = np.exp(s - s.max())
    cs = e / e.sum()                               # context scores over tokens
    xk = x @ p.key_weights                         # (k, d)
    cv = cs @ xk                                   # (d,) weighted-sum context vector
    xv_pre = x @ p.value_weights
    xv = np.maximum(xv_pre, 0.0)
    z = cv[None, :] * xv                           # broadcast gating
    y = z @ p.out_weights
    return y, (s, cs, xk, cv, xv_pre, xv, z)


def separable_attention(x: np.ndarray, params: SeparableAttentionParams) -> np.ndarray:
    """Linear-complexity attention: softmax context scores over the k tokens,
    one d-vector of context, broadcast-gated values, output projection."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise ValueError(f"token matrix must be (k, d) with k, d >= 1, got {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("token matrix contains non-finite values")
    params.validate(x.shape[1])
    y, _ = _sepattn_core(x, params)
    return y


def separable_attention_backward(x: np.ndarray, params: SeparableAttentionParams,
                                 dy: np.ndarray):
    """Gradients w.r.t. tokens and all four weight groups."""
    x = np.asarray(x, dtype=np.float64)
    params.validate(x.shape[1])
    y, (s, cs, xk, cv, xv_pre, xv, z) = _sepattn_core(x, params)
    dy = np.asarray(dy, dtype=np.float64)

    dz = dy @ params.out_weights.T
    d_out = z.T @ dy

    dcv = np.einsum("kd,kd->d", dz, xv)
    dxv = dz * cv[None, :]
    dxv_pre = dxv * (xv_pre > 0)
    d_value = x.T @ dxv_pre
    dx = dxv_pre @ params.value_weights.T

    dxk = cs[:, None] * dcv[None, :]
    dcs = xk @ dcv
    ds = cs * (dcs - float(cs @ dcs))
    d_key = x.T @ dxk
    dx += dxk @ params.key_weights.T
    d_context = x.T @ ds
    dx += np.outer(ds, params.context_weights)

    return y, dx, d_context, d_key, d_value, d_out
