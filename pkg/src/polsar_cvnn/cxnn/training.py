"""Epoch loop: shuffled mini-batches, validation MSE, best/last checkpoints, exact resume."""
from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from ..cxcore import CTensor
from ..errors import ConfigError, NumericError
from . import functional as F
from .checkpoint import load_checkpoint, save_checkpoint
from .optim import AdamW

log = logging.getLogger(__name__)

LOSS_HEADER = ("epoch", "train_mse", "val_mse")


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 5e-4
    weight_decay: float = 1e-3
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    batch: int = 32
    epochs: int = 250
    seed: int = 0

    def validate(self):
        if self.batch < 1 or self.epochs < 0:
            raise ConfigError("batch must be positive and epochs non-negative")
        if self.lr <= 0 or self.weight_decay < 0:
            raise ConfigError("lr must be positive and weight decay non-negative")
        return self


@dataclass
class TrainResult:
    history: list = field(default_factory=list)  # (epoch, train_mse, val_mse)
    initial_val_mse: float = float("nan")
    best_val_mse: float = float("inf")
    best_epoch: int = 0

    @property
    def final_val_mse(self):
        return self.history[-1][2] if self.history else self.initial_val_mse


def evaluate_mse(model, x, batch=32):
    """Eval-mode mean |x_hat - x|^2 over an (N, C, H, W) array."""
    was = model.training
    model.eval()
    total, count = 0.0, 0
    for i in range(0, len(x), batch):
        xb = x[i:i + batch]
        out = model(CTensor(xb)).data
        total += float(np.sum(np.abs(out - xb) ** 2))
        count += xb.size
    model.train(was)
    return total / max(count, 1)


def _write_losses(path, history):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LOSS_HEADER)
        for epoch, tr, va in history:
            w.writerow((epoch, repr(tr), repr(va)))


def _dump_batch(out_dir, epoch, batch_id, index, loss):
    path = os.path.join(out_dir, "nan_batch.json") if out_dir else None
    info = {"epoch": epoch, "batch_id": batch_id, "tiles": [int(i) for i in index], "loss": repr(loss)}
    if path:
        with open(path, "w") as fh:
            json.dump(info, fh)
    return info


def train(model, train_x, val_x, cfg: TrainConfig, out_dir=None, resume=None, model_meta=None,
          stop_after=None) -> TrainResult:
    """Fit ``model`` to reconstruct ``train_x``.

    With ``out_dir`` set, ``last.ckpt`` is written after every epoch, ``best.ckpt``
    whenever validation MSE improves, and ``losses.csv`` holds one row per epoch.
    ``resume`` continues from a ``last.ckpt`` so that the finished run is
    bit-identical to an uninterrupted one.  ``stop_after`` ends the call after
    that many epochs of this invocation (used to emulate interruptions).
    """
    cfg.validate()
    if len(train_x) == 0:
        raise ConfigError("empty training split")
    rng = np.random.default_rng(cfg.seed)
    opt = AdamW(model.parameters(), lr=cfg.lr, weight_decay=cfg.weight_decay, betas=cfg.betas, eps=cfg.eps)
    res = TrainResult()
    start = 0
    if resume is not None:
        trailer = load_checkpoint(resume, model, opt, rng)
        start = trailer["epoch"]
        res.history = [tuple(h) for h in trailer["history"]]
        res.initial_val_mse = trailer["initial_val_mse"]
        res.best_val_mse = trailer["best_val_mse"]
        res.best_epoch = trailer["best_epoch"]
    else:
        res.initial_val_mse = evaluate_mse(model, val_x, cfg.batch) if len(val_x) else float("nan")
        log.info("initial val mse %.6g", res.initial_val_mse)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)

    def checkpoint(path, epoch):
        save_checkpoint(path, model, opt, rng, epoch=epoch, history=[list(h) for h in res.history],
                        initial_val_mse=res.initial_val_mse, best_val_mse=res.best_val_mse,
                        best_epoch=res.best_epoch, train=_cfg_dict(cfg), model=model_meta or {})

    n = len(train_x)
    done = 0
    for epoch in range(start + 1, cfg.epochs + 1):
        if stop_after is not None and done >= stop_after:
            break
        model.train()
        order = rng.permutation(n)
        total, count = 0.0, 0
        for batch_id, i in enumerate(range(0, n, cfg.batch)):
            index = order[i:i + cfg.batch]
            xb = train_x[index]
            opt.zero_grad()
            loss = F.mse_loss(model(CTensor(xb)), CTensor(xb))
            value = float(loss.data.real)
            if not np.isfinite(value):
                info = _dump_batch(out_dir, epoch, batch_id, index, value)
                raise NumericError(f"non-finite loss at epoch {epoch}, batch {batch_id}: {info}")
            loss.backward()
            if not opt.step():
                info = _dump_batch(out_dir, epoch, batch_id, index, value)
                raise NumericError(f"non-finite gradient at epoch {epoch}, batch {batch_id}: {info}")
            total += value * xb.size
            count += xb.size
        val = evaluate_mse(model, val_x, cfg.batch) if len(val_x) else float("nan")
        res.history.append((epoch, total / count, val))
        log.info("epoch %d train %.6g val %.6g", epoch, total / count, val)
        improved = val < res.best_val_mse
        if improved:
            res.best_val_mse, res.best_epoch = val, epoch
        if out_dir:
            checkpoint(os.path.join(out_dir, "last.ckpt"), epoch)
            if improved:
                checkpoint(os.path.join(out_dir, "best.ckpt"), epoch)
            _write_losses(os.path.join(out_dir, "losses.csv"), res.history)
        done += 1
    return res


def _cfg_dict(cfg):
    d = asdict(cfg)
    d["betas"] = list(d["betas"])
    return d
