"""Seeded optimizer-comparison experiments with CSV/JSON run logs.

`run_experiment` trains the MLP on a synthetic task under one optimizer
with a linear learning-rate decay to 1e-7, logging one record per step
plus one validation record per epoch end. `compare` runs several configs
that differ only in optimizer and learning rates and summarizes final
losses and per-step wall time.

Identical configs produce byte-identical CSVs: every compute path is
deterministic and the CSV's wall_ms column is left empty (step timings
vary run to run, so they live in the in-memory log and the JSON
serialization instead).
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ._version import VERSION
from .models import MlpModel, TaskSpec, forward, init_model, loss_and_grads, make_task
from .newton_schulz import NsConfig
from .optim import AdamHyper, AdamW, Muon, MuonAll, MuonHyper, lr_schedule
from .tensor import NonFiniteError

#: Desk-task learning rates, tuned so the three optimizers land within a
#: few percent of each other on the default gaussian_clusters config.
DESK_LR_PRESETS = {
    "adamw": {"lr0": 6e-3},
    "muon": {"lr0": 2e-2, "lr_aux0": 6e-3},
    "muonall": {"lr0": 2e-2},
}

#: Initial rates used for supervised finetuning of small public language
#: models, kept as reference presets; note the muonall:adamw ratio of
#: 2.5-4x as a starting point when tuning elsewhere. Muon entries are
#: (matrix rate, non-matrix rate).
LLM_SFT_LR_PRESETS = {
    "qwen2-0.5b": {"adamw": 2e-5, "muonall": 5e-5, "muon": (5e-5, 2e-5)},
    "smollm2-360m": {"adamw": 2e-4, "muonall": 8e-4, "muon": (7e-4, 2e-4)},
    "gpt2-medium": {"adamw": 5e-4, "muonall": 9e-4, "muon": (9e-4, 5e-4)},
}


class TrainingDiverged(RuntimeError):
    """A loss or gradient went non-finite; carries the 1-based step index."""

    def __init__(self, step: int, detail: str):
        super().__init__(f"training diverged at step {step}: {detail}")
        self.step = step


class CompareError(RuntimeError):
    """A compare sub-run failed; `summary` holds the partial results."""

    def __init__(self, message: str, summary: dict):
        super().__init__(message)
        self.summary = summary


@dataclass
class TrainConfig:
    """Full description of one experiment.

    `out_path` is where the CSV goes and is excluded from the config
    echo and fingerprint, so runs written to different files still
    compare byte-identical.
    """

    optimizer: str
    lr0: float
    lr_aux0: float | None = None
    momentum: float = 0.95
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float | None = None
    ns_steps: int = 5
    epochs: int = 2
    batch_size: int = 64
    grad_accum: int = 1
    hidden: int = 64
    task: TaskSpec = field(default_factory=TaskSpec)
    seed: int = 0
    out_path: str | None = None

    def __post_init__(self):
        if self.optimizer not in ("adamw", "muon", "muonall"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.lr0 <= 0:
            raise ValueError("lr0 must be > 0")
        if self.optimizer == "muon" and (self.lr_aux0 is None or self.lr_aux0 <= 0):
            raise ValueError("muon requires lr_aux0 > 0 for non-matrix parameters")
        if min(self.epochs, self.batch_size, self.grad_accum, self.hidden,
               self.ns_steps) < 1:
            raise ValueError("epochs, batch_size, grad_accum, hidden, ns_steps must be >= 1")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")

    @property
    def effective_batch_size(self) -> int:
        return self.batch_size * self.grad_accum

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("out_path")
        return d

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


@dataclass
class StepRecord:
    """One optimizer step (val_loss None) or one evaluation (train_loss None,
    step index of the last completed step)."""

    step: int
    epoch: int
    train_loss: float | None
    val_loss: float | None
    lr: float
    wall_ms: float


CSV_COLUMNS = "step,epoch,train_loss,val_loss,lr,wall_ms"


@dataclass
class RunLog:
    config: TrainConfig
    records: list[StepRecord]
    version: str = VERSION

    def step_records(self) -> list[StepRecord]:
        return [r for r in self.records if r.train_loss is not None]

    def val_records(self) -> list[StepRecord]:
        return [r for r in self.records if r.val_loss is not None]

    def final_train_loss(self) -> float:
        return self.step_records()[-1].train_loss

    def final_val_loss(self) -> float:
        return self.val_records()[-1].val_loss

    def mean_step_wall_ms(self) -> float:
        steps = self.step_records()
        return float(np.mean([r.wall_ms for r in steps]))

    def csv_text(self) -> str:
        lines = [
            f"# muonkit {self.version} config={self.config.fingerprint()}",
            f"# {json.dumps(self.config.to_dict(), sort_keys=True)}",
            CSV_COLUMNS,
        ]
        for r in self.records:
            train = repr(r.train_loss) if r.train_loss is not None else ""
            val = repr(r.val_loss) if r.val_loss is not None else ""
            # wall_ms stays empty: timings differ run to run and would break
            # byte-identical logs; they are kept in memory / JSON.
            lines.append(f"{r.step},{r.epoch},{train},{val},{repr(r.lr)},")
        return "\n".join(lines) + "\n"

    def json_text(self) -> str:
        payload = {
            "version": self.version,
            "fingerprint": self.config.fingerprint(),
            "config": self.config.to_dict(),
            "records": [asdict(r) for r in self.records],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def write_csv(self, path):
        Path(path).write_text(self.csv_text())

    def write_json(self, path):
        Path(path).write_text(self.json_text())


def _build_optimizer(cfg: TrainConfig, params):
    ns = NsConfig(steps=cfg.ns_steps)
    if cfg.optimizer == "adamw":
        wd = 0.01 if cfg.weight_decay is None else cfg.weight_decay
        return AdamW(params, AdamHyper(lr=cfg.lr0, beta1=cfg.beta1, beta2=cfg.beta2,
                                       eps=cfg.eps, weight_decay=wd))
    # Matrix group follows the momentum-orthogonalized update with no decay
    # unless asked; Muon's sidecar keeps the usual AdamW decay default.
    wd = 0.0 if cfg.weight_decay is None else cfg.weight_decay
    if cfg.optimizer == "muon":
        aux_wd = 0.01 if cfg.weight_decay is None else cfg.weight_decay
        aux = AdamHyper(lr=cfg.lr_aux0, beta1=cfg.beta1, beta2=cfg.beta2,
                        eps=cfg.eps, weight_decay=aux_wd)
        hyper = MuonHyper(lr_matrix=cfg.lr0, lr_aux=cfg.lr_aux0, mu=cfg.momentum,
                          weight_decay=wd, ns=ns, adam_aux=aux)
        return Muon(params, hyper)
    hyper = MuonHyper(lr_matrix=cfg.lr0, mu=cfg.momentum, weight_decay=wd, ns=ns)
    return MuonAll(params, hyper)


def run_experiment(cfg: TrainConfig) -> RunLog:
    """Run one seeded experiment and return (and optionally write) its log."""
    train_batches, val_batches = make_task(cfg.task, cfg.batch_size)
    in_dim = train_batches[0].inputs.shape[1]
    n_classes = cfg.task.n_classes if cfg.task.kind == "gaussian_clusters" else in_dim
    model = init_model(cfg.seed, in_dim, cfg.hidden, n_classes)
    params = model.params()
    opt = _build_optimizer(cfg, params)

    steps_per_epoch = len(train_batches) // cfg.grad_accum
    if steps_per_epoch < 1:
        raise ValueError("grad_accum exceeds the number of training batches")
    total_steps = cfg.epochs * steps_per_epoch
    # Schedule over total_steps-1 so the first step runs at lr0 and the
    # last exactly at the final rate.
    sched_span = max(total_steps - 1, 1)

    records: list[StepRecord] = []
    gstep = 0
    for epoch in range(1, cfg.epochs + 1):
        for s in range(steps_per_epoch):
            lr_now = lr_schedule(gstep, sched_span, cfg.lr0)
            micro = train_batches[s * cfg.grad_accum:(s + 1) * cfg.grad_accum]
            try:
                loss_acc = 0.0
                grad_acc: dict | None = None
                for mb in micro:
                    loss, grads = loss_and_grads(model, mb)
                    loss_acc += loss
                    if grad_acc is None:
                        grad_acc = grads
                    else:
                        for k in grad_acc:
                            grad_acc[k] = grad_acc[k] + grads[k]
                train_loss = loss_acc / len(micro)
                if not math.isfinite(train_loss):
                    raise NonFiniteError("non-finite training loss")
                mean_grads = {k: v / len(micro) for k, v in grad_acc.items()}
                t0 = time.perf_counter_ns()
                if cfg.optimizer == "muon":
                    opt.step(mean_grads, lr_now,
                             lr_schedule(gstep, sched_span, cfg.lr_aux0))
                else:
                    opt.step(mean_grads, lr_now)
                wall_ms = (time.perf_counter_ns() - t0) / 1e6
            except NonFiniteError as err:
                raise TrainingDiverged(gstep + 1, str(err)) from err
            model.load(params)
            gstep += 1
            records.append(StepRecord(step=gstep, epoch=epoch, train_loss=train_loss,
                                      val_loss=None, lr=lr_now, wall_ms=wall_ms))
        t0 = time.perf_counter_ns()
        val_loss = float(np.mean([forward(model, b)[0] for b in val_batches]))
        eval_ms = (time.perf_counter_ns() - t0) / 1e6
        records.append(StepRecord(step=gstep, epoch=epoch, train_loss=None,
                                  val_loss=val_loss, lr=records[-1].lr,
                                  wall_ms=eval_ms))

    log = RunLog(config=cfg, records=records)
    if cfg.out_path:
        log.write_csv(cfg.out_path)
    return log


def compare(cfgs, out) -> dict:
    """Run several configs and write per-optimizer CSVs plus a summary JSON.

    Configs must share everything except the optimizer choice and
    learning rates. A sub-run failure stops the comparison; the summary
    is still written with the failure flagged, then CompareError is
    raised.
    """
    cfgs = list(cfgs)
    if len(cfgs) < 2:
        raise ValueError("compare needs at least 2 configs")
    seen = set()
    base = cfgs[0]
    for cfg in cfgs:
        if cfg.optimizer in seen:
            raise ValueError(f"duplicate optimizer {cfg.optimizer!r} in compare")
        seen.add(cfg.optimizer)
        shared = (cfg.task, cfg.seed, cfg.epochs, cfg.batch_size, cfg.grad_accum,
                  cfg.hidden)
        if shared != (base.task, base.seed, base.epochs, base.batch_size,
                      base.grad_accum, base.hidden):
            raise ValueError("compare configs may differ only in optimizer and learning rates")

    out = Path(out)
    summary = {"version": VERSION, "results": {}}
    failure = None
    for cfg in cfgs:
        csv_path = out.parent / f"{out.stem}_{cfg.optimizer}.csv"
        try:
            log = run_experiment(replace(cfg, out_path=str(csv_path)))
        except Exception as err:  # noqa: BLE001 - flag any sub-run failure
            failure = f"{cfg.optimizer}: {type(err).__name__}: {err}"
            summary["failed"] = failure
            summary["partial"] = True
            break
        summary["results"][cfg.optimizer] = {
            "final_train_loss": log.final_train_loss(),
            "final_val_loss": log.final_val_loss(),
            "mean_step_wall_ms": log.mean_step_wall_ms(),
            "csv": csv_path.name,
            "fingerprint": cfg.fingerprint(),
        }
    out.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if failure is not None:
        raise CompareError(failure, summary)
    return summary
