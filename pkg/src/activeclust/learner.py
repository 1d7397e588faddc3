"""Trainable representation stack with hand-derived gradients.

Three parts share one parameter store: a one-hidden-layer projection of the
raw embeddings, an autoencoder that compresses the projected vector into the
low-dimensional clustering code, and a softmax classifier over discovered
relations. Losses: mean-squared reconstruction (autoencoder parameters only,
projected input treated as constant), cross-entropy on high-reliability rows
(classifier and projection), and a paired KL loss on moderate-reliability rows
where the starred side of each KL term is held constant so gradient flows
through exactly one distribution per term. For label-mismatched pairs each KL
term passes through the hinge max(0, sigma - x).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, ContractError, ShapeError

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1

_ACTIVATIONS = {
    "tanh": (np.tanh, lambda a: 1.0 - np.tanh(a) ** 2),
    "linear": (lambda a: a, lambda a: np.ones_like(a)),
}


@dataclass
class LossConfig:
    sigma: float = 2.0
    lr: float = 1e-4
    batch: int = 100
    pair_samples_per_batch: int = 64
    epochs: int = 5
    w_rec: float = 1.0
    w_ce: float = 1.0
    w_bce: float = 1.0

    def validate(self) -> "LossConfig":
        if self.sigma <= 0:
            raise ConfigError("sigma must be positive")
        if self.lr < 0:
            raise ConfigError("lr must be non-negative")
        if self.batch < 1:
            raise ConfigError("batch must be at least 1")
        return self


@dataclass(frozen=True)
class EncodeResult:
    h_low: np.ndarray
    h_proj: np.ndarray
    reconstruction: np.ndarray


def hinge(x: float, sigma: float) -> float:
    """max(0, sigma - x): zero once the argument clears the margin."""
    return max(0.0, sigma - x)


def _softmax(logits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_p = shifted - log_z
    return np.exp(log_p), log_p


class Learner:
    """Parameters, optimizer state, and the training loop for the full stack."""

    def __init__(
        self,
        dim: int,
        proj_hidden: int = 256,
        proj_dim: int = 256,
        low_dim: int = 32,
        activation: str = "tanh",
        seed: int = 0,
    ):
        if activation not in _ACTIVATIONS:
            raise ConfigError(f"unknown activation '{activation}'")
        self.dim = dim
        self.proj_hidden = proj_hidden
        self.proj_dim = proj_dim
        self.low_dim = low_dim
        self.activation = activation
        self.C = 0
        self.rng = np.random.default_rng(seed)
        self.mu = np.zeros(dim)
        self.scale = 1.0
        self.params: dict[str, np.ndarray] = {
            "proj_w1": self._xavier(dim, proj_hidden),
            "proj_b1": np.zeros(proj_hidden),
            "proj_w2": self._xavier(proj_hidden, proj_dim),
            "proj_b2": np.zeros(proj_dim),
            "enc_w": self._xavier(proj_dim, low_dim),
            "enc_b": np.zeros(low_dim),
            "dec_w": self._xavier(low_dim, proj_dim),
            "dec_b": np.zeros(proj_dim),
        }
        self._adam_m = {k: np.zeros_like(v) for k, v in self.params.items()}
        self._adam_v = {k: np.zeros_like(v) for k, v in self.params.items()}
        self._adam_t = {k: 0 for k in self.params}

    def _xavier(self, fan_in: int, fan_out: int) -> np.ndarray:
        std = np.sqrt(2.0 / (fan_in + fan_out))
        return self.rng.normal(0.0, std, size=(fan_in, fan_out))

    def fit_scaler(self, X: np.ndarray) -> None:
        """Center per feature and scale by overall RMS so tanh stays in range."""
        X = np.asarray(X, dtype=np.float64)
        self.mu = X.mean(axis=0)
        rms = float(np.sqrt(((X - self.mu) ** 2).mean()))
        self.scale = rms if rms > 1e-12 else 1.0

    # forward passes ------------------------------------------------------

    def _act(self):
        return _ACTIVATIONS[self.activation]

    def _project(self, X: np.ndarray):
        act, _ = self._act()
        xn = (X - self.mu) / self.scale
        a1 = xn @ self.params["proj_w1"] + self.params["proj_b1"]
        z1 = act(a1)
        h = z1 @ self.params["proj_w2"] + self.params["proj_b2"]
        return xn, a1, z1, h

    def _autoencode(self, h: np.ndarray):
        act, _ = self._act()
        ae = h @ self.params["enc_w"] + self.params["enc_b"]
        code = act(ae)
        recon = code @ self.params["dec_w"] + self.params["dec_b"]
        return ae, code, recon

    def encode(self, x: np.ndarray) -> EncodeResult:
        """Low-dimensional code, projected vector, and its reconstruction."""
        X = np.asarray(x, dtype=np.float64)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.dim:
            raise ShapeError(f"expected embeddings of dim {self.dim}, got {X.shape[1]}")
        _, _, _, h = self._project(X)
        _, code, recon = self._autoencode(h)
        if single:
            return EncodeResult(code[0], h[0], recon[0])
        return EncodeResult(code, h, recon)

    def probabilities(self, x: np.ndarray) -> np.ndarray:
        if self.C == 0:
            raise ContractError("classifier not initialized; no relations discovered yet")
        X = np.atleast_2d(np.asarray(x, dtype=np.float64))
        _, _, _, h = self._project(X)
        logits = h @ self.params["cls_w"] + self.params["cls_b"]
        probs, _ = _softmax(logits)
        return probs

    # losses with gradients ------------------------------------------------

    def reconstruction_loss(self, x: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
        """MSE between the projected vector and its decode; autoencoder grads only."""
        X = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if X.shape[0] == 0:
            raise ContractError("reconstruction loss needs a non-empty batch")
        _, _, _, h = self._project(X)
        loss, grads, _ = self._rec_from_projection(h)
        return loss, grads

    def _rec_from_projection(self, h: np.ndarray):
        _, dact = self._act()
        ae, code, recon = self._autoencode(h)
        diff = recon - h
        denom = diff.size
        loss = float((diff**2).sum() / denom)
        d_recon = 2.0 * diff / denom
        grads = {
            "dec_w": code.T @ d_recon,
            "dec_b": d_recon.sum(axis=0),
        }
        d_code = d_recon @ self.params["dec_w"].T
        d_ae = d_code * dact(ae)
        grads["enc_w"] = h.T @ d_ae
        grads["enc_b"] = d_ae.sum(axis=0)
        return loss, grads, recon

    def _backprop_projection(self, xn, a1, z1, d_h) -> dict[str, np.ndarray]:
        _, dact = self._act()
        grads = {
            "proj_w2": z1.T @ d_h,
            "proj_b2": d_h.sum(axis=0),
        }
        d_z1 = d_h @ self.params["proj_w2"].T
        d_a1 = d_z1 * dact(a1)
        grads["proj_w1"] = xn.T @ d_a1
        grads["proj_b1"] = d_a1.sum(axis=0)
        return grads

    def ce_loss(self, x: np.ndarray, y: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
        """Mean cross-entropy of the classifier against integer labels."""
        if self.C == 0:
            raise ContractError("classifier not initialized")
        X = np.atleast_2d(np.asarray(x, dtype=np.float64))
        y = np.atleast_1d(np.asarray(y, dtype=np.int64))
        if y.min() < 0 or y.max() >= self.C:
            raise ContractError(f"label outside [0, {self.C})")
        xn, a1, z1, h = self._project(X)
        logits = h @ self.params["cls_w"] + self.params["cls_b"]
        probs, log_p = _softmax(logits)
        m = X.shape[0]
        loss = float(-log_p[np.arange(m), y].sum() / m)
        d_logits = probs.copy()
        d_logits[np.arange(m), y] -= 1.0
        d_logits /= m
        grads = {
            "cls_w": h.T @ d_logits,
            "cls_b": d_logits.sum(axis=0),
        }
        d_h = d_logits @ self.params["cls_w"].T
        grads.update(self._backprop_projection(xn, a1, z1, d_h))
        return loss, grads

    def contrastive_pair_loss(
        self, x_i: np.ndarray, x_j: np.ndarray, same: bool, sigma: float = 2.0
    ) -> tuple[float, dict[str, np.ndarray]]:
        """Paired KL loss for one (i, j); each term freezes one side's distribution."""
        if self.C == 0:
            raise ContractError("classifier not initialized")
        X = np.stack([np.asarray(x_i, dtype=np.float64), np.asarray(x_j, dtype=np.float64)])
        xn, a1, z1, h = self._project(X)
        logits = h @ self.params["cls_w"] + self.params["cls_b"]
        loss, d_logits = self._pair_terms(
            logits, np.array([0]), np.array([1]), np.array([same]), sigma
        )
        grads = {
            "cls_w": h.T @ d_logits,
            "cls_b": d_logits.sum(axis=0),
        }
        d_h = d_logits @ self.params["cls_w"].T
        grads.update(self._backprop_projection(xn, a1, z1, d_h))
        return float(loss), grads

    def _pair_terms(self, logits, idx_i, idx_j, same, sigma, normalize=False):
        """Summed pair losses plus d(loss)/d(logits); set normalize to average over pairs."""
        probs, log_p = _softmax(logits)
        p_i, p_j = probs[idx_i], probs[idx_j]
        lp_i, lp_j = log_p[idx_i], log_p[idx_j]
        kl = (p_i * (lp_i - lp_j)).sum(axis=1)  # value of both asymmetric terms

        # gradient of KL(frozen_i || j) in logits_j, and of KL(i || frozen_j) in logits_i
        g_j = p_j - p_i
        g_i = p_i * ((lp_i - lp_j) - kl[:, None])

        active = np.where(same, 1.0, np.where(kl < sigma, -1.0, 0.0))
        loss_per_pair = np.where(same, 2.0 * kl, 2.0 * np.maximum(0.0, sigma - kl))
        scale = 1.0 / idx_i.size if normalize else 1.0

        d_logits = np.zeros_like(logits)
        np.add.at(d_logits, idx_j, g_j * active[:, None] * scale)
        np.add.at(d_logits, idx_i, g_i * active[:, None] * scale)
        return loss_per_pair.sum() * scale, d_logits

    # training -------------------------------------------------------------

    def reinit_classifier(self, new_c: int) -> None:
        """Fresh softmax head for new_c relations; everything else untouched."""
        if new_c < self.C:
            raise ContractError("relation count cannot shrink")
        if new_c == self.C:
            return
        self.C = new_c
        self.params["cls_w"] = self._xavier(self.proj_dim, new_c)
        self.params["cls_b"] = np.zeros(new_c)
        for slot in ("cls_w", "cls_b"):
            self._adam_m[slot] = np.zeros_like(self.params[slot])
            self._adam_v[slot] = np.zeros_like(self.params[slot])
            self._adam_t[slot] = 0

    def _adam_step(self, grads: dict[str, np.ndarray], lr: float) -> None:
        beta1, beta2, eps = 0.9, 0.999, 1e-8
        for key, g in grads.items():
            self._adam_t[key] += 1
            t = self._adam_t[key]
            self._adam_m[key] = beta1 * self._adam_m[key] + (1 - beta1) * g
            self._adam_v[key] = beta2 * self._adam_v[key] + (1 - beta2) * g * g
            m_hat = self._adam_m[key] / (1 - beta1**t)
            v_hat = self._adam_v[key] / (1 - beta2**t)
            self.params[key] -= lr * m_hat / (np.sqrt(v_hat) + eps)

    def _sample_pairs(self, rows: np.ndarray, labels: np.ndarray, want: int):
        """Balanced same/different pairs among the given rows, 1:1 when possible."""
        if rows.size < 2 or want < 1:
            return None
        li = labels[rows]
        same_mask = li[:, None] == li[None, :]
        iu = np.triu_indices(rows.size, k=1)
        flat_same = same_mask[iu]
        same_pool = np.flatnonzero(flat_same)
        diff_pool = np.flatnonzero(~flat_same)
        half = want // 2
        n_same = min(half, same_pool.size)
        n_diff = min(want - n_same, diff_pool.size)
        n_same = min(want - n_diff, same_pool.size)  # refill if diff ran short
        picks = []
        if n_same:
            picks.append(self.rng.choice(same_pool, size=n_same, replace=False))
        if n_diff:
            picks.append(self.rng.choice(diff_pool, size=n_diff, replace=False))
        if not picks:
            return None
        chosen = np.concatenate(picks)
        pi = iu[0][chosen]
        pj = iu[1][chosen]
        return rows[pi], rows[pj], flat_same[chosen]

    def train_iteration(
        self,
        X: np.ndarray,
        labels: np.ndarray,
        high_mask: np.ndarray,
        mod_mask: np.ndarray,
        config: LossConfig,
    ) -> list[dict]:
        """One pass of config.epochs over shuffled mini-batches.

        Per batch: reconstruction on every member, cross-entropy on the
        high-reliability members, and the pair loss on sampled
        moderate-reliability pairs. One optimizer step per batch.
        """
        config.validate()
        X = np.asarray(X, dtype=np.float64)
        n = X.shape[0]
        labels = np.asarray(labels, dtype=np.int64)
        if self.C == 0 or not high_mask.any():
            if self.C == 0 or not mod_mask.any():
                logger.warning("no reliable pseudo-labels; training on reconstruction only")
        trace: list[dict] = []
        for _ in range(config.epochs):
            perm = self.rng.permutation(n)
            for start in range(0, n, config.batch):
                batch = perm[start : start + config.batch]
                trace.append(self._train_batch(X, labels, high_mask, mod_mask, batch, config))
        return trace

    def _train_batch(self, X, labels, high_mask, mod_mask, batch, config) -> dict:
        xn, a1, z1, h = self._project(X[batch])
        rec_loss, rec_grads, _ = self._rec_from_projection(h)
        grads = {k: v * config.w_rec for k, v in rec_grads.items()}

        ce_loss_val = 0.0
        bce_loss_val = 0.0
        d_logits = None
        probs = log_p = None
        if self.C > 0:
            logits = h @ self.params["cls_w"] + self.params["cls_b"]
            d_logits = np.zeros_like(logits)

            in_high = np.flatnonzero(high_mask[batch] & (labels[batch] >= 0))
            if in_high.size:
                probs, log_p = _softmax(logits)
                y = labels[batch][in_high]
                m = in_high.size
                ce_loss_val = float(-log_p[in_high, y].sum() / m)
                d_ce = probs[in_high].copy()
                d_ce[np.arange(m), y] -= 1.0
                np.add.at(d_logits, in_high, config.w_ce * d_ce / m)

            in_mod = np.flatnonzero(mod_mask[batch] & (labels[batch] >= 0))
            sampled = self._sample_pairs(in_mod, labels[batch], config.pair_samples_per_batch)
            if sampled is not None:
                pi, pj, same = sampled
                loss, d_pairs = self._pair_terms(
                    logits, pi, pj, same, config.sigma, normalize=True
                )
                bce_loss_val = float(loss)
                d_logits += config.w_bce * d_pairs

            if d_logits.any():
                grads["cls_w"] = grads.get("cls_w", 0) + h.T @ d_logits
                grads["cls_b"] = grads.get("cls_b", 0) + d_logits.sum(axis=0)
                d_h = d_logits @ self.params["cls_w"].T
                for key, val in self._backprop_projection(xn, a1, z1, d_h).items():
                    grads[key] = grads.get(key, 0) + val

        if config.lr > 0:
            self._adam_step(grads, config.lr)
        total = config.w_rec * rec_loss + config.w_ce * ce_loss_val + config.w_bce * bce_loss_val
        return {"rec": rec_loss, "ce": ce_loss_val, "bce": bce_loss_val, "total": total}

    # checkpoints ------------------------------------------------------------

    def save(self, path: str | Path) -> None:
        meta = {
            "version": CHECKPOINT_VERSION,
            "dim": self.dim,
            "proj_hidden": self.proj_hidden,
            "proj_dim": self.proj_dim,
            "low_dim": self.low_dim,
            "activation": self.activation,
            "C": self.C,
            "scale": self.scale,
            "rng_state": self.rng.bit_generator.state,
            "adam_t": self._adam_t,
        }
        arrays = {f"param_{k}": v for k, v in self.params.items()}
        arrays.update({f"adam_m_{k}": v for k, v in self._adam_m.items()})
        arrays.update({f"adam_v_{k}": v for k, v in self._adam_v.items()})
        np.savez_compressed(path, mu=self.mu, meta=json.dumps(meta), **arrays)

    @classmethod
    def load(cls, path: str | Path) -> "Learner":
        blob = np.load(path, allow_pickle=False)
        meta = json.loads(str(blob["meta"]))
        if meta["version"] != CHECKPOINT_VERSION:
            raise ConfigError(f"unsupported checkpoint version {meta['version']}")
        out = cls(
            dim=meta["dim"],
            proj_hidden=meta["proj_hidden"],
            proj_dim=meta["proj_dim"],
            low_dim=meta["low_dim"],
            activation=meta["activation"],
        )
        out.C = meta["C"]
        out.scale = meta["scale"]
        out.mu = blob["mu"]
        out.params = {
            k[len("param_"):]: blob[k] for k in blob.files if k.startswith("param_")
        }
        out._adam_m = {
            k[len("adam_m_"):]: blob[k] for k in blob.files if k.startswith("adam_m_")
        }
        out._adam_v = {
            k[len("adam_v_"):]: blob[k] for k in blob.files if k.startswith("adam_v_")
        }
        out._adam_t = {k: int(v) for k, v in meta["adam_t"].items()}
        out.rng.bit_generator.state = meta["rng_state"]
        return out
