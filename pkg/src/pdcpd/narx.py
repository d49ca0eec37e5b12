"""NARX predictor: one tanh hidden layer mapping delayed features and delayed
levels to the current resource level.

Training is series-parallel (open loop): delayed levels fed to the network are
the label series itself. Every array in the trainer carries a leading model axis
so independent models on equally shaped data train in one pass; the
single-model API is the ``B == 1`` case.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .ddcpd import ChangePointSet
from .errors import ConfigurationError, TrainingError

PARAM_NAMES = ("W1", "b1", "W2", "b2")


@dataclass(frozen=True)
class NarxConfig:
    input_delays: tuple = (1, 2)
    feedback_delays: tuple = (1, 2)
    hidden_size: int = 5
    epochs: int = 500
    learning_rate: float = 0.01
    patience: int = 25
    train_fraction: float = 0.8
    kfold_k: int = 5
    split: str = "chronological"
    closed_loop: bool = False
    init: str = "uniform"
    optimizer: str = "scg"

    def __post_init__(self):
        object.__setattr__(self, "input_delays", tuple(int(d) for d in self.input_delays))
        object.__setattr__(self, "feedback_delays", tuple(int(d) for d in self.feedback_delays))
        if not self.input_delays or min(self.input_delays) < 1:
            raise ConfigurationError("input delays must be >= 1")
        if self.feedback_delays and min(self.feedback_delays) < 1:
            raise ConfigurationError("feedback delays must be >= 1")
        if self.hidden_size < 1:
            raise ConfigurationError("hidden_size must be >= 1")
        if not 0 < self.train_fraction < 1:
            raise ConfigurationError("train_fraction must be in (0, 1)")
        if self.split not in ("chronological", "random"):
            raise ConfigurationError(f"unknown split {self.split!r}")
        if self.init not in ("uniform", "zeros"):
            raise ConfigurationError(f"unknown init {self.init!r}")
        if self.optimizer not in ("scg", "adam"):
            raise ConfigurationError(f"unknown optimizer {self.optimizer!r}")

    @property
    def max_delay(self) -> int:
        return max(self.input_delays + self.feedback_delays)

    def input_dim(self, n_features: int) -> int:
        return n_features * len(self.input_delays) + len(self.feedback_delays)


@dataclass
class NarxModel:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: float
    u_mean: np.ndarray
    u_std: np.ndarray
    y_mean: float
    y_std: float
    config: NarxConfig = field(default_factory=NarxConfig)
    train_mse: float = float("nan")
    val_mse: float = float("nan")
    epochs_run: int = 0

    @property
    def params(self) -> dict:
        return {"W1": self.W1, "b1": self.b1, "W2": self.W2, "b2": np.asarray(self.b2, dtype=float)}

    def normalize_features(self, u):
        return (np.asarray(u, dtype=float) - self.u_mean) / self.u_std

    def denormalize_features(self, z):
        return np.asarray(z) * self.u_std + self.u_mean

    def normalize_labels(self, y):
        return (np.asarray(y, dtype=float) - self.y_mean) / self.y_std

    def denormalize_labels(self, z):
        return np.asarray(z) * self.y_std + self.y_mean

    def to_dict(self) -> dict:
        cfg = asdict(self.config)
        return {
            "config": cfg,
            "shapes": {"W1": list(self.W1.shape), "b1": list(self.b1.shape), "W2": list(self.W2.shape)},
            "W1": self.W1.ravel().tolist(),
            "b1": self.b1.tolist(),
            "W2": self.W2.tolist(),
            "b2": float(self.b2),
            "u_mean": self.u_mean.tolist(),
            "u_std": self.u_std.tolist(),
            "y_mean": float(self.y_mean),
            "y_std": float(self.y_std),
            "train_mse": self.train_mse,
            "val_mse": self.val_mse,
            "epochs_run": self.epochs_run,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NarxModel":
        shapes = d["shapes"]
        return cls(
            W1=np.asarray(d["W1"], dtype=float).reshape(shapes["W1"]),
            b1=np.asarray(d["b1"], dtype=float).reshape(shapes["b1"]),
            W2=np.asarray(d["W2"], dtype=float).reshape(shapes["W2"]),
            b2=float(d["b2"]),
            u_mean=np.asarray(d["u_mean"], dtype=float),
            u_std=np.asarray(d["u_std"], dtype=float),
            y_mean=float(d["y_mean"]),
            y_std=float(d["y_std"]),
            config=NarxConfig(**d["config"]),
            train_mse=float(d["train_mse"]),
            val_mse=float(d["val_mse"]),
            epochs_run=int(d["epochs_run"]),
        )

    def save(self, path):
        # json writes floats with repr, which round-trips exactly
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "NarxModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class AccuracyReport:
    mse: float
    windowed_accuracy: float
    predicted_cp_times: tuple
    abs_time_deviation_min: float
    no_transition: tuple = ()

    def error(self, objective: str) -> float:
        if objective == "one_minus_accuracy":
            return 1.0 - self.windowed_accuracy
        if objective == "mse":
            return self.mse
        if objective == "time_deviation":
            return self.abs_time_deviation_min
        raise ConfigurationError(f"unknown objective {objective!r}")


# ---------------------------------------------------------------- network math


def forward(params: dict, X: np.ndarray):
    """Batched forward pass; ``X`` is ``(B, N, D)``. Returns outputs ``(B, N)`` and hidden activations."""
    A = np.tanh(X @ params["W1"] + params["b1"][:, None, :])
    out = np.einsum("bnh,bh->bn", A, params["W2"]) + params["b2"][:, None]
    return out, A


def loss_and_grad(params: dict, X: np.ndarray, y: np.ndarray):
    """Per-model mean squared error and its gradient."""
    out, A = forward(params, X)
    resid = out - y
    n = X.shape[1]
    loss = np.mean(resid * resid, axis=1)
    dout = 2.0 * resid / n
    dA = dout[:, :, None] * params["W2"][:, None, :]
    dZ = dA * (1.0 - A * A)
    grads = {
        "W1": np.swapaxes(X, 1, 2) @ dZ,
        "b1": dZ.sum(axis=1),
        "W2": np.einsum("bnh,bn->bh", A, dout),
        "b2": dout.sum(axis=1),
    }
    return loss, grads


def _loss(params, X, y):
    out, _ = forward(params, X)
    return np.mean((out - y) ** 2, axis=1)


def _stack(models: Sequence[NarxModel]) -> dict:
    return {
        "W1": np.stack([m.W1 for m in models]),
        "b1": np.stack([m.b1 for m in models]),
        "W2": np.stack([m.W2 for m in models]),
        "b2": np.array([float(m.b2) for m in models]),
    }


# ---------------------------------------------------------------- data plumbing


def _series_values(features) -> np.ndarray:
    u = np.asarray(getattr(features, "values", features), dtype=float)
    return u[:, None] if u.ndim == 1 else u


def design_matrix(u_norm: np.ndarray, y_norm: np.ndarray, cfg: NarxConfig):
    """Rows for t = max_delay .. T-1: ``[u(t-d) for d in input_delays] + [y(t-d) for d in feedback_delays]``."""
    d = cfg.max_delay
    T = u_norm.shape[0]
    cols = [u_norm[d - k : T - k] for k in cfg.input_delays]
    cols += [y_norm[d - k : T - k, None] for k in cfg.feedback_delays]
    return np.hstack(cols), y_norm[d:]


def _norm_stats(v: np.ndarray, axis=0):
    mean = v.mean(axis=axis)
    sd = v.std(axis=axis)
    return mean, np.where(sd > 0, sd, 1.0)


def init_params(cfg: NarxConfig, input_dim: int, rng: np.random.Generator) -> dict:
    H = cfg.hidden_size
    if cfg.init == "zeros":
        return {"W1": np.zeros((input_dim, H)), "b1": np.zeros(H), "W2": np.zeros(H), "b2": np.zeros(())}
    return {
        "W1": rng.uniform(-0.5, 0.5, (input_dim, H)) / math.sqrt(input_dim),
        "b1": rng.uniform(-0.5, 0.5, H) / math.sqrt(input_dim),
        "W2": rng.uniform(-0.5, 0.5, H) / math.sqrt(H),
        "b2": np.asarray(rng.uniform(-0.5, 0.5) / math.sqrt(H)),
    }


def _split_rows(n_rows: int, cfg: NarxConfig, rng: np.random.Generator):
    n_train = max(1, min(n_rows - 1, int(math.floor(cfg.train_fraction * n_rows))))
    if cfg.split == "chronological":
        idx = np.arange(n_rows)
    else:
        idx = rng.permutation(n_rows)
    return np.sort(idx[:n_train]), np.sort(idx[n_train:])


def _prepare(features, labels, cfg: NarxConfig):
    u = _series_values(features)
    y = np.asarray(labels, dtype=float).reshape(-1)
    if u.shape[0] != y.size:
        raise ConfigurationError(f"features have {u.shape[0]} rows but labels have {y.size}")
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(y))):
        raise TrainingError("non-finite training inputs")
    if y.size <= cfg.max_delay + 10:
        raise ConfigurationError(f"series too short ({y.size}) for max delay {cfg.max_delay}")
    u_mean, u_std = _norm_stats(u)
    y_mean, y_std = _norm_stats(y)
    X, target = design_matrix((u - u_mean) / u_std, (y - y_mean) / y_std, cfg)
    return X, target, (u_mean, u_std, float(y_mean), float(y_std))


# ---------------------------------------------------------------- training


def _fit_batch(X, y, train_idx, val_idx, params, cfg: NarxConfig, seeds):
    if cfg.optimizer == "scg":
        return _fit_batch_scg(X, y, train_idx, val_idx, params, cfg, seeds)
    return _fit_batch_adam(X, y, train_idx, val_idx, params, cfg, seeds)


def _fit_batch_adam(X, y, train_idx, val_idx, params, cfg: NarxConfig, seeds):
    """Full-batch Adam with per-model early stopping on validation MSE.

    ``X`` is ``(B, N, D)``, ``y`` is ``(B, N)``; row index sets are shared.
    Returns best parameters, their train/val MSE (normalized units) and epochs run.
    """
    B = X.shape[0]
    Xt, yt = X[:, train_idx], y[:, train_idx]
    Xv, yv = X[:, val_idx], y[:, val_idx]
    has_val = len(val_idx) > 0
    p = {k: v.copy() for k, v in params.items()}
    m1 = {k: np.zeros_like(v) for k, v in p.items()}
    m2 = {k: np.zeros_like(v) for k, v in p.items()}
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    lr = cfg.learning_rate

    best = {k: v.copy() for k, v in p.items()}
    best_val = _loss(p, Xv, yv) if has_val else _loss(p, Xt, yt)
    best_train = _loss(p, Xt, yt)
    stale = np.zeros(B, dtype=int)
    active = np.ones(B, dtype=bool)
    epochs_run = np.zeros(B, dtype=int)

    for epoch in range(1, cfg.epochs + 1):
        train_loss, grads = loss_and_grad(p, Xt, yt)
        if not np.all(np.isfinite(train_loss)):
            bad = int(np.flatnonzero(~np.isfinite(train_loss))[0])
            raise TrainingError("training loss diverged", seed=seeds[bad])
        mask = active.astype(float)
        c1 = 1.0 - beta1**epoch
        c2 = 1.0 - beta2**epoch
        for k in PARAM_NAMES:
            g = grads[k]
            m1[k] = beta1 * m1[k] + (1 - beta1) * g
            m2[k] = beta2 * m2[k] + (1 - beta2) * g * g
            step = lr * (m1[k] / c1) / (np.sqrt(m2[k] / c2) + eps)
            p[k] = p[k] - step * mask.reshape((B,) + (1,) * (g.ndim - 1))
        epochs_run += active

        score = _loss(p, Xv, yv) if has_val else _loss(p, Xt, yt)
        improved = active & (score < best_val)
        if improved.any():
            for k in PARAM_NAMES:
                best[k][improved] = p[k][improved]
            best_val = np.where(improved, score, best_val)
            best_train = np.where(improved, _loss(p, Xt, yt), best_train)
        stale = np.where(improved, 0, stale + active)
        active &= stale < cfg.patience
        if not active.any():
            break
    return best, best_train, best_val, epochs_run


def _pack(p: dict) -> np.ndarray:
    B = p["W1"].shape[0]
    return np.concatenate([np.asarray(p[k]).reshape(B, -1) for k in PARAM_NAMES], axis=1)


def _unpack(w: np.ndarray, like: dict) -> dict:
    out, i = {}, 0
    for k in PARAM_NAMES:
        shape = like[k].shape
        n = int(np.prod(shape[1:], dtype=int))
        out[k] = w[:, i : i + n].reshape(shape)
        i += n
    return out


def _fit_batch_scg(X, y, train_idx, val_idx, params, cfg: NarxConfig, seeds):
    """Scaled conjugate gradient with per-model early stopping on validation MSE.

    Every scalar of the method (step size, scale parameter, restart flags) is
    kept per model, so a batch of independent networks advances in lockstep.
    One iteration counts as one epoch.
    """
    B = X.shape[0]
    Xt, yt = X[:, train_idx], y[:, train_idx]
    Xv, yv = X[:, val_idx], y[:, val_idx]
    has_val = len(val_idx) > 0

    def fg(w):
        loss, g = loss_and_grad(_unpack(w, params), Xt, yt)
        return loss, _pack(g)

    def f(w):
        return _loss(_unpack(w, params), Xt, yt)

    def score(w):
        return _loss(_unpack(w, params), Xv, yv) if has_val else f(w)

    w = _pack(params).copy()
    n_w = w.shape[1]
    E, g = fg(w)
    if not np.all(np.isfinite(E)):
        bad = int(np.flatnonzero(~np.isfinite(E))[0])
        raise TrainingError("training loss is not finite", seed=seeds[bad])
    r = -g
    p = r.copy()
    sigma0 = 5e-5
    lam = np.full(B, 5e-7)
    lam_bar = np.zeros(B)
    success = np.ones(B, dtype=bool)
    delta = np.zeros(B)
    n_success = np.zeros(B, dtype=int)

    best_w = w.copy()
    best_val = score(w)
    best_train = E.copy()
    stale = np.zeros(B, dtype=int)
    active = np.ones(B, dtype=bool)
    epochs_run = np.zeros(B, dtype=int)
    tiny = 1e-300

    for _ in range(cfg.epochs):
        p2 = np.sum(p * p, axis=1)
        done = p2 < 1e-30
        active &= ~done
        if not active.any():
            break
        pn = np.sqrt(np.maximum(p2, tiny))
        # second-order information along p, refreshed after every successful step
        sigma = sigma0 / pn
        _, g_probe = fg(w + sigma[:, None] * p)
        s = (g_probe - g) / sigma[:, None]
        delta = np.where(success, np.sum(p * s, axis=1), delta)
        delta = delta + (lam - lam_bar) * p2
        neg = delta <= 0
        lam_bar = np.where(neg, 2 * (lam - delta / np.maximum(p2, tiny)), lam_bar)
        delta = np.where(neg, -delta + lam * p2, delta)
        lam = np.where(neg, lam_bar, lam)

        mu = np.sum(p * r, axis=1)
        alpha = mu / np.maximum(delta, tiny)
        w_new = w + alpha[:, None] * p
        E_new = f(w_new)
        if not np.all(np.isfinite(E_new[active])):
            bad = int(np.flatnonzero(active & ~np.isfinite(E_new))[0])
            raise TrainingError("training loss diverged", seed=seeds[bad])
        comp = 2 * delta * (E - E_new) / np.maximum(mu * mu, tiny)
        ok = (comp >= 0) & active

        if ok.any():
            _, g_new = fg(w_new)
            r_new = -g_new
            n_success = n_success + ok
            restart = n_success % n_w == 0
            beta = (np.sum(r_new * r_new, axis=1) - np.sum(r_new * r, axis=1)) / np.maximum(np.abs(mu), tiny)
            p_new = np.where(restart[:, None], r_new, r_new + beta[:, None] * p)
            sel = ok[:, None]
            w = np.where(sel, w_new, w)
            E = np.where(ok, E_new, E)
            g = np.where(sel, g_new, g)
            r = np.where(sel, r_new, r)
            p = np.where(sel, p_new, p)
            lam_bar = np.where(ok, 0.0, lam_bar)
        lam_bar = np.where(~ok & active, lam, lam_bar)
        success = ok | ~active
        lam = np.where(ok & (comp >= 0.75), lam / 4, lam)
        lam = np.where(active & (comp < 0.25), lam + delta * (1 - comp) / np.maximum(p2, tiny), lam)
        lam = np.minimum(lam, 1e100)
        epochs_run += active

        val = score(w)
        improved = active & (val < best_val)
        best_w = np.where(improved[:, None], w, best_w)
        best_val = np.where(improved, val, best_val)
        best_train = np.where(improved, E, best_train)
        stale = np.where(improved, 0, stale + active)
        active &= stale < cfg.patience
    return _unpack(best_w, params), best_train, best_val, epochs_run


def train_many(
    features_list: Sequence,
    labels_list: Sequence,
    cfg: NarxConfig = NarxConfig(),
    seeds: Sequence[int] = (0,),
) -> list[NarxModel]:
    """Train independent models, one per (features, labels, seed), in a single batched loop.

    All series must have the same shape.
    """
    if not (len(features_list) == len(labels_list) == len(seeds)):
        raise ConfigurationError("features, labels and seeds must have equal counts")
    prepared = [_prepare(f, l, cfg) for f, l in zip(features_list, labels_list)]
    shapes = {p[0].shape for p in prepared}
    if len(shapes) != 1:
        raise ConfigurationError(f"batched training needs equal shapes, got {sorted(shapes)}")
    X = np.stack([p[0] for p in prepared])
    y = np.stack([p[1] for p in prepared])
    rngs = [np.random.default_rng(s % 2**64) for s in seeds]
    inits = [init_params(cfg, X.shape[2], r) for r in rngs]
    params = {k: np.stack([np.asarray(i[k], dtype=float) for i in inits]) for k in PARAM_NAMES}
    # split is drawn from the first model's stream so shared row sets stay well defined
    train_idx, val_idx = _split_rows(X.shape[1], cfg, np.random.default_rng(seeds[0] % 2**64 ^ 0x5EED))
    best, tr, va, ep = _fit_batch(X, y, train_idx, val_idx, params, cfg, list(seeds))

    models = []
    for b, (_, _, (um, us, ym, ys)) in enumerate(prepared):
        models.append(
            NarxModel(
                W1=best["W1"][b].copy(),
                b1=best["b1"][b].copy(),
                W2=best["W2"][b].copy(),
                b2=float(best["b2"][b]),
                u_mean=um,
                u_std=us,
                y_mean=ym,
                y_std=ys,
                config=cfg,
                train_mse=float(tr[b]) * ys**2,
                val_mse=float(va[b]) * ys**2,
                epochs_run=int(ep[b]),
            )
        )
    return models


def train(features, labels, cfg: NarxConfig = NarxConfig(), seed: int = 0) -> NarxModel:
    """Fit one model; the returned weights are those with the best validation MSE."""
    return train_many([features], [labels], cfg, [seed])[0]


def untrained_model(features, labels, cfg: NarxConfig = NarxConfig(), seed: int = 0) -> NarxModel:
    """A model holding its initial weights and the data's normalization stats."""
    X, _, (um, us, ym, ys) = _prepare(features, labels, cfg)
    p = init_params(cfg, X.shape[1], np.random.default_rng(seed % 2**64))
    return NarxModel(p["W1"], p["b1"], p["W2"], float(p["b2"]), um, us, ym, ys, cfg)


def kfold_tune(features, labels, grid: Sequence[NarxConfig], k: int = 5, seed: int = 0) -> NarxConfig:
    """Pick the grid entry with the lowest mean validation MSE over k contiguous folds."""
    if not grid:
        raise ConfigurationError("empty hyperparameter grid")
    if k < 2:
        raise ConfigurationError("k must be >= 2")
    scores = []
    for cfg in grid:
        X, y, (_, _, _, ys) = _prepare(features, labels, cfg)
        folds = np.array_split(np.arange(X.shape[0]), k)
        fold_mse = []
        for j, val_idx in enumerate(folds):
            train_idx = np.setdiff1d(np.arange(X.shape[0]), val_idx)
            p0 = init_params(cfg, X.shape[1], np.random.default_rng((seed + j) % 2**64))
            params = {n: np.asarray(v, dtype=float)[None] for n, v in p0.items()}
            _, _, va, _ = _fit_batch(X[None], y[None], train_idx, val_idx, params, cfg, [seed + j])
            fold_mse.append(float(va[0]) * ys**2)
        scores.append(float(np.mean(fold_mse)))
    return grid[int(np.argmin(scores))]


# ---------------------------------------------------------------- inference


def predict(model: NarxModel, features, teacher_labels, closed_loop: bool | None = None) -> np.ndarray:
    """Real-valued level predictions for every interval.

    Delayed levels come from ``teacher_labels`` (series-parallel); with
    ``closed_loop`` they come from the model's own earlier outputs. The first
    ``max_delay`` outputs are copied from the teacher series.
    """
    cfg = model.config
    closed = cfg.closed_loop if closed_loop is None else closed_loop
    u = _series_values(features)
    y = np.asarray(teacher_labels, dtype=float).reshape(-1)
    if u.shape[0] != y.size:
        raise ConfigurationError(f"features have {u.shape[0]} rows but teacher labels have {y.size}")
    if u.shape[1] != model.u_mean.size:
        raise ConfigurationError(f"model expects {model.u_mean.size} features, got {u.shape[1]}")
    d = cfg.max_delay
    if y.size <= d:
        raise ConfigurationError("series shorter than the delay window")
    un = model.normalize_features(u)
    yn = model.normalize_labels(y)
    params = {k: np.asarray(v, dtype=float)[None] for k, v in model.params.items()}
    if not closed:
        X, _ = design_matrix(un, yn, cfg)
        out, _ = forward(params, X[None])
        return np.concatenate((y[:d], model.denormalize_labels(out[0])))
    own = yn.copy()
    for t in range(d, y.size):
        row = [un[t - k] for k in cfg.input_delays] + [own[t - k : t - k + 1] for k in cfg.feedback_delays]
        out, _ = forward(params, np.concatenate(row)[None, None, :])
        own[t] = out[0, 0]
    return np.concatenate((y[:d], model.denormalize_labels(own[d:])))


def discretize(pred, level_bounds=(1, 3)) -> np.ndarray:
    """Round half up, then clamp into ``level_bounds``."""
    lo, hi = level_bounds
    return np.clip(np.floor(np.asarray(pred, dtype=float) + 0.5), lo, hi).astype(int)


def windowed_accuracy(
    pred_levels,
    sim_levels,
    centers,
    half_width_intervals: int,
    interval_min: float = 1.0,
    pred_real=None,
) -> AccuracyReport:
    """Agreement between predicted and simulated levels over windows
    ``[c - h, c + h)`` around each simulated change point ``c`` (clipped to the series).

    Each window's predicted change point is its first transition in
    ``pred_levels``; a window with no transition scores the half-width as its
    deviation.
    """
    pred = np.asarray(pred_levels).reshape(-1)
    sim = np.asarray(sim_levels).reshape(-1)
    if pred.size != sim.size:
        raise ConfigurationError(f"length mismatch: {pred.size} vs {sim.size}")
    T = pred.size
    h = int(half_width_intervals)
    cs = [int(math.floor(float(c) + 0.5)) for c in getattr(centers, "taus", centers)]
    mask = np.zeros(T, dtype=bool)
    found, deviations, missing = [], [], []
    for c in cs:
        lo, hi = max(0, c - h), min(T, c + h)
        if hi <= lo:
            raise ValueError(f"empty window around change point {c}")
        mask[lo:hi] = True
        flips = np.flatnonzero(pred[lo + 1 : hi] != pred[lo : hi - 1])
        if flips.size:
            at = lo + 1 + int(flips[0])
            found.append(at * interval_min)
            deviations.append(abs(at - c))
        else:
            found.append(float("nan"))
            deviations.append(h)
            missing.append(c)
    if not mask.any():
        raise ValueError("no windows to score")
    ref = pred if pred_real is None else np.asarray(pred_real, dtype=float).reshape(-1)
    return AccuracyReport(
        mse=float(np.mean((ref[mask] - sim[mask]) ** 2)),
        windowed_accuracy=float(np.mean(pred[mask] == sim[mask])),
        predicted_cp_times=tuple(found),
        abs_time_deviation_min=float(sum(deviations) * interval_min),
        no_transition=tuple(missing),
    )


# ---------------------------------------------------------------- diagnostics


def make_batch(model: NarxModel, features, labels):
    """Normalized design matrix and targets for ``model`` on a series."""
    un = model.normalize_features(_series_values(features))
    yn = model.normalize_labels(np.asarray(labels, dtype=float).reshape(-1))
    return design_matrix(un, yn, model.config)


def gradient_norm(model: NarxModel, batch) -> float:
    X, y = batch
    params = {k: np.asarray(v, dtype=float)[None] for k, v in model.params.items()}
    _, g = loss_and_grad(params, X[None], np.asarray(y)[None])
    return float(math.sqrt(sum(float(np.sum(v * v)) for v in g.values())))


def gradient_check(model: NarxModel, batch, step: float = 1e-5, floor: float = 1e-7) -> float:
    """Largest relative gap between the analytic gradient and central differences.

    Relative error is ``|a - n| / max(|a|, |n|, floor)``; the floor keeps
    exactly-zero gradients from dividing by zero.
    """
    X, y = batch
    X = np.asarray(X, dtype=float)[None]
    y = np.asarray(y, dtype=float)[None]
    if X.shape[1] == 0:
        raise ValueError("empty batch")
    params = {k: np.array(v, dtype=float)[None] for k, v in model.params.items()}
    _, grads = loss_and_grad(params, X, y)
    worst = 0.0
    for name in PARAM_NAMES:
        flat = params[name].reshape(-1)
        g = grads[name].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = _loss(params, X, y)[0]
            flat[i] = orig - step
            down = _loss(params, X, y)[0]
            flat[i] = orig
            num = (up - down) / (2 * step)
            rel = abs(g[i] - num) / max(abs(g[i]), abs(num), floor)
            worst = max(worst, rel)
    return worst


def with_config(model: NarxModel, **changes) -> NarxModel:
    return replace(model, config=replace(model.config, **changes))
