"""Velocity-predicting transformer with axial rotary attention.

The token grid follows the input resolution, so inference may run at any
side divisible by the patch size; the positional policy is evaluated with
the trained grid as context L and the current grid as L', per axis.
Forward/backward are hand-written over the kernel set, with gradients
checked against central finite differences in the test suite.
"""

from __future__ import annotations

import numpy as np

from .. import kernels
from ..dynamic import PePolicy, policy_axis_eval, policy_tau
from ..rope2d import build_frequency_table
from .params import Params, init_params

VANILLA = PePolicy(kind="vanilla")

_TIME_FREQ_MAX = 1000.0
_LN_EPS = 1e-6


def patchify(x, p):
    """(B, H, W) -> (B, T, p*p), row-major token order."""
    b, h, w = x.shape
    gh, gw = h // p, w // p
    return x.reshape(b, gh, p, gw, p).transpose(0, 1, 3, 2, 4).reshape(b, gh * gw, p * p)


def unpatchify(tok, p, h, w):
    """(B, T, p*p) -> (B, H, W); exact inverse (and adjoint) of patchify."""
    b = tok.shape[0]
    gh, gw = h // p, w // p
    return tok.reshape(b, gh, gw, p, p).transpose(0, 1, 3, 2, 4).reshape(b, h, w)


def time_features(t, d):
    """Sinusoidal features of t in [0, 1]: d/2 geometric frequencies."""
    half = d // 2
    freqs = np.exp(np.linspace(0.0, np.log(_TIME_FREQ_MAX), half))
    ang = np.asarray(t, dtype=np.float64)[:, None] * freqs[None, :]
    return np.concatenate([np.sin(ang), np.cos(ang)], axis=1)


class Model:
    """Parameter container plus forward/backward/loss."""

    def __init__(self, cfg, params=None, seed=0, dtype=np.float32):
        self.cfg = cfg
        self.params = params if params is not None else init_params(cfg, seed, dtype=dtype)
        if self.params.dtype not in (np.float32, np.float64):
            raise ValueError("parameters must be float32 or float64")
        self.base_table = build_frequency_table(cfg.pairs_per_axis, cfg.theta_base)

    @property
    def dtype(self):
        return self.params.dtype

    # -- positional tables ------------------------------------------------

    def _rope_tables(self, gh, gw, policy, t_policy):
        """Per-token cos/sin for each axis plus the attention scale."""
        cfg = self.cfg
        L = cfg.train_grid
        ev_y = policy_axis_eval(policy, self.base_table, L, gh, t=t_policy)
        ev_x = policy_axis_eval(policy, self.base_table, L, gw, t=t_policy)
        pos_y = np.arange(gh, dtype=np.float64) * ev_y.position_factor
        pos_x = np.arange(gw, dtype=np.float64) * ev_x.position_factor
        ang_y = np.multiply.outer(pos_y, ev_y.table.theta)  # (gh, P)
        ang_x = np.multiply.outer(pos_x, ev_x.table.theta)  # (gw, P)
        tok_y = ang_y[np.repeat(np.arange(gh), gw)]  # (T, P)
        tok_x = ang_x[np.tile(np.arange(gw), gh)]  # (T, P)
        tau = policy_tau(policy, gh / L, gw / L)
        dt = self.dtype
        return (
            np.cos(tok_x).astype(dt),
            np.sin(tok_x).astype(dt),
            np.cos(tok_y).astype(dt),
            np.sin(tok_y).astype(dt),
            tau,
        )

    def _rope_qk(self, q, cos_x, sin_x, cos_y, sin_y, inverse=False):
        """Rotate (B, nh, T, dh): x-angles on the first half, y on the second."""
        dh = q.shape[-1]
        half = dh // 2
        out = np.empty_like(q)
        out[..., :half] = kernels.rope_rotate(q[..., :half], cos_x, sin_x, inverse=inverse)
        out[..., half:] = kernels.rope_rotate(q[..., half:], cos_y, sin_y, inverse=inverse)
        return out

    # -- forward -----------------------------------------------------------

    def forward(self, x, t, class_id, policy=None, want_cache=False, attn_sink=None):
        """Predict the velocity field for a noised batch.

        x: (B, H, W) with H, W divisible by the patch size; t: scalar or
        (B,) sampling times; class_id: (B,) ints.  Time-dependent policies
        require a uniform t.  attn_sink, when a list, collects the per-layer
        attention probabilities.
        """
        cfg = self.cfg
        dt = self.dtype
        x = np.asarray(x, dtype=dt)
        if x.ndim != 3:
            raise ValueError("expected a (batch, H, W) input")
        b, h, w = x.shape
        p = cfg.patch_size
        if h % p or w % p:
            raise ValueError(f"resolution {h}x{w} not divisible by patch size {p}")
        gh, gw = h // p, w // p
        t_arr = np.broadcast_to(np.asarray(t, dtype=np.float64), (b,))
        class_id = np.broadcast_to(np.asarray(class_id, dtype=np.intp), (b,))
        if np.any(class_id < 0) or np.any(class_id >= cfg.class_count):
            raise ValueError("class id out of range")
        policy = policy or VANILLA
        if policy.time_dependent and np.ptp(t_arr) != 0:
            raise ValueError("time-dependent policies need a uniform batch time")
        t_policy = float(t_arr[0])

        P = self.params
        patches = patchify(x, p)
        tok = patches @ P.view("patch_embed.w") + P.view("patch_embed.b")

        tfeat = time_features(t_arr, cfg.d_model).astype(dt)
        u_t = tfeat @ P.view("time_mlp.w1") + P.view("time_mlp.b1")
        a_t = kernels.silu_forward(u_t)
        cond = a_t @ P.view("time_mlp.w2") + P.view("time_mlp.b2")
        cond = cond + P.view("class_embed.table")[class_id]

        hstate = tok + cond[:, None, :]
        cos_x, sin_x, cos_y, sin_y, tau = self._rope_tables(gh, gw, policy, t_policy)

        nh, dh = cfg.heads, cfg.head_dim
        T = gh * gw
        scale = tau / np.sqrt(dh)
        cache = {"patches": patches, "tfeat": tfeat, "u_t": u_t, "a_t": a_t,
                 "class_id": class_id, "grid": (gh, gw), "tau": tau,
                 "rope": (cos_x, sin_x, cos_y, sin_y), "blocks": []} if want_cache else None

        for i in range(cfg.layers):
            blk = f"blocks.{i}"
            x_in = hstate
            a, mu1, rstd1 = kernels.layernorm_forward(
                x_in, P.view(f"{blk}.ln1.gain"), P.view(f"{blk}.ln1.bias"), _LN_EPS
            )
            qkv = a @ P.view(f"{blk}.attn.wqkv") + P.view(f"{blk}.attn.bqkv")
            q, k, v = np.split(qkv, 3, axis=-1)
            q = q.reshape(b, T, nh, dh).transpose(0, 2, 1, 3)
            k = k.reshape(b, T, nh, dh).transpose(0, 2, 1, 3)
            v = np.ascontiguousarray(v.reshape(b, T, nh, dh).transpose(0, 2, 1, 3))
            qr = self._rope_qk(q, cos_x, sin_x, cos_y, sin_y)
            kr = self._rope_qk(k, cos_x, sin_x, cos_y, sin_y)
            logits = (qr @ kr.swapaxes(-1, -2)) * np.asarray(scale, dtype=dt)
            probs = kernels.softmax_rows(logits)
            if attn_sink is not None:
                attn_sink.append(probs)
            ctx = probs @ v
            ctx_t = np.ascontiguousarray(ctx.transpose(0, 2, 1, 3)).reshape(b, T, cfg.d_model)
            attn_out = ctx_t @ P.view(f"{blk}.attn.wo") + P.view(f"{blk}.attn.bo")
            x_mid = x_in + attn_out
            m, mu2, rstd2 = kernels.layernorm_forward(
                x_mid, P.view(f"{blk}.ln2.gain"), P.view(f"{blk}.ln2.bias"), _LN_EPS
            )
            u1 = m @ P.view(f"{blk}.mlp.w1") + P.view(f"{blk}.mlp.b1")
            u2 = kernels.gelu_forward(u1)
            mlp_out = u2 @ P.view(f"{blk}.mlp.w2") + P.view(f"{blk}.mlp.b2")
            hstate = x_mid + mlp_out
            if want_cache:
                cache["blocks"].append(
                    {"x_in": x_in, "a": a, "mu1": mu1, "rstd1": rstd1, "qr": qr, "kr": kr,
                     "v": v, "probs": probs, "ctx_t": ctx_t, "x_mid": x_mid, "m": m,
                     "mu2": mu2, "rstd2": rstd2, "u1": u1, "u2": u2}
                )

        f, muf, rstdf = kernels.layernorm_forward(
            hstate, P.view("final_ln.gain"), P.view("final_ln.bias"), _LN_EPS
        )
        out_tok = f @ P.view("head.w") + P.view("head.b")
        vel = unpatchify(out_tok, p, h, w)
        if want_cache:
            cache.update({"f_in": hstate, "f": f, "muf": muf, "rstdf": rstdf, "shape": (h, w)})
            return vel, cache
        return vel

    # -- backward ----------------------------------------------------------

    def backward_from_cache(self, cache, dvel):
        """Exact reverse-mode gradients for every parameter; returns Params."""
        cfg = self.cfg
        P = self.params
        grads = P.zeros_like()
        p = cfg.patch_size
        h, w = cache["shape"]
        b = dvel.shape[0]
        gh, gw = cache["grid"]
        T = gh * gw
        nh, dh = cfg.heads, cfg.head_dim
        d = cfg.d_model
        scale = np.asarray(cache["tau"] / np.sqrt(dh), dtype=self.dtype)
        cos_x, sin_x, cos_y, sin_y = cache["rope"]

        dout_tok = patchify(np.asarray(dvel, dtype=self.dtype), p)
        f2 = cache["f"].reshape(b * T, d)
        do2 = dout_tok.reshape(b * T, cfg.patch_values)
        grads.view("head.w")[:] = f2.T @ do2
        grads.view("head.b")[:] = do2.sum(axis=0)
        df = dout_tok @ P.view("head.w").T
        dh_state, dgf, dbf = kernels.layernorm_backward(
            df, cache["f_in"], cache["muf"], cache["rstdf"], P.view("final_ln.gain")
        )
        grads.view("final_ln.gain")[:] = dgf
        grads.view("final_ln.bias")[:] = dbf

        for i in reversed(range(cfg.layers)):
            blk = f"blocks.{i}"
            c = cache["blocks"][i]
            # mlp branch
            dmlp_out = dh_state
            du2 = dmlp_out @ P.view(f"{blk}.mlp.w2").T
            grads.view(f"{blk}.mlp.w2")[:] = c["u2"].reshape(b * T, -1).T @ dmlp_out.reshape(b * T, d)
            grads.view(f"{blk}.mlp.b2")[:] = dmlp_out.reshape(b * T, d).sum(axis=0)
            du1 = kernels.gelu_backward(c["u1"], du2)
            dm = du1 @ P.view(f"{blk}.mlp.w1").T
            grads.view(f"{blk}.mlp.w1")[:] = c["m"].reshape(b * T, d).T @ du1.reshape(b * T, -1)
            grads.view(f"{blk}.mlp.b1")[:] = du1.reshape(b * T, -1).sum(axis=0)
            dx_mid_ln, dg2, db2 = kernels.layernorm_backward(
                dm, c["x_mid"], c["mu2"], c["rstd2"], P.view(f"{blk}.ln2.gain")
            )
            grads.view(f"{blk}.ln2.gain")[:] = dg2
            grads.view(f"{blk}.ln2.bias")[:] = db2
            dx_mid = dh_state + dx_mid_ln
            # attention branch
            dattn_out = dx_mid
            dctx_t = dattn_out @ P.view(f"{blk}.attn.wo").T
            grads.view(f"{blk}.attn.wo")[:] = (
                c["ctx_t"].reshape(b * T, d).T @ dattn_out.reshape(b * T, d)
            )
            grads.view(f"{blk}.attn.bo")[:] = dattn_out.reshape(b * T, d).sum(axis=0)
            dctx = dctx_t.reshape(b, T, nh, dh).transpose(0, 2, 1, 3)
            dprobs = dctx @ c["v"].swapaxes(-1, -2)
            dv = c["probs"].swapaxes(-1, -2) @ dctx
            dlogits = kernels.softmax_rows_backward(c["probs"], dprobs)
            dqr = (dlogits @ c["kr"]) * scale
            dkr = (dlogits.swapaxes(-1, -2) @ c["qr"]) * scale
            dq = self._rope_qk(dqr, cos_x, sin_x, cos_y, sin_y, inverse=True)
            dk = self._rope_qk(dkr, cos_x, sin_x, cos_y, sin_y, inverse=True)
            dqkv = np.concatenate(
                [
                    np.ascontiguousarray(g.transpose(0, 2, 1, 3)).reshape(b, T, d)
                    for g in (dq, dk, dv)
                ],
                axis=-1,
            )
            da = dqkv @ P.view(f"{blk}.attn.wqkv").T
            grads.view(f"{blk}.attn.wqkv")[:] = (
                c["a"].reshape(b * T, d).T @ dqkv.reshape(b * T, 3 * d)
            )
            grads.view(f"{blk}.attn.bqkv")[:] = dqkv.reshape(b * T, 3 * d).sum(axis=0)
            dx_in_ln, dg1, db1 = kernels.layernorm_backward(
                da, c["x_in"], c["mu1"], c["rstd1"], P.view(f"{blk}.ln1.gain")
            )
            grads.view(f"{blk}.ln1.gain")[:] = dg1
            grads.view(f"{blk}.ln1.bias")[:] = db1
            dh_state = dx_mid + dx_in_ln

        # embeddings
        dtok = dh_state
        dcond = dh_state.sum(axis=1)
        np.add.at(grads.view("class_embed.table"), cache["class_id"], dcond)
        grads.view("time_mlp.w2")[:] = cache["a_t"].T @ dcond
        grads.view("time_mlp.b2")[:] = dcond.sum(axis=0)
        da_t = dcond @ P.view("time_mlp.w2").T
        du_t = kernels.silu_backward(cache["u_t"], da_t)
        grads.view("time_mlp.w1")[:] = cache["tfeat"].T @ du_t
        grads.view("time_mlp.b1")[:] = du_t.sum(axis=0)
        grads.view("patch_embed.w")[:] = (
            cache["patches"].reshape(b * T, -1).T @ dtok.reshape(b * T, d)
        )
        grads.view("patch_embed.b")[:] = dtok.reshape(b * T, d).sum(axis=0)

        if not np.all(np.isfinite(grads.flat)):
            bad = [n for n in grads.block_names() if not np.all(np.isfinite(grads.view(n)))]
            raise FloatingPointError(f"non-finite gradients in {bad}")
        return grads

    # -- training objective --------------------------------------------------

    def _draws(self, images, seed):
        """The documented deterministic stream behind loss/backward: per-batch
        times first, then the noise batch, from default_rng(seed)."""
        rng = np.random.default_rng(int(seed))
        t = rng.uniform(0.0, 1.0, size=images.shape[0])
        eps = rng.standard_normal(images.shape)
        return t, eps

    def loss_terms(self, images, classes, seed, want_cache=False):
        images = np.asarray(images, dtype=np.float64)
        if images.ndim != 3 or images.shape[0] == 0:
            raise ValueError("expected a nonempty (batch, H, W) image array")
        t, eps = self._draws(images, seed)
        x_t = (1.0 - t)[:, None, None] * images + t[:, None, None] * eps
        target = eps - images
        out = self.forward(x_t, t, classes, want_cache=want_cache)
        vel, cache = out if want_cache else (out, None)
        diff = vel.astype(np.float64) - target
        return float(np.mean(diff * diff)), diff, cache

    def loss(self, images, classes, seed):
        """Mean squared error against the constant-path velocity target."""
        value, _, _ = self.loss_terms(images, classes, seed)
        return value

    def backward(self, images, classes, seed):
        """Gradient of loss() with respect to every parameter (flat array)."""
        _, grads = self.loss_and_grad(images, classes, seed)
        return grads

    def loss_and_grad(self, images, classes, seed):
        value, diff, cache = self.loss_terms(images, classes, seed, want_cache=True)
        dvel = (2.0 / diff.size) * diff
        grads = self.backward_from_cache(cache, dvel)
        return value, grads.flat

    # -- sampling adapter ----------------------------------------------------

    def velocity_fn(self, class_id):
        """Sampler-facing closure: (x, t, policy) -> velocity."""

        def fn(x, t, policy):
            b = x.shape[0]
            return self.forward(x, np.full(b, t), np.full(b, class_id, dtype=np.intp), policy)

        return fn
