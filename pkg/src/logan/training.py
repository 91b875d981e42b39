"""Adversarial training loop: n_critic critic updates per generator step,
then one generator and one classifier update, with loss logging, checkpoints,
and periodic sample grids.
"""

import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np
import torch
from PIL import Image

from . import checkpoint as ckpt
from .colors import CLASSES
from .config import TrainConfig
from .dataset import LabeledCorpus, batch_stream, denormalize
from .models import (
    GpConfig,
    ModelBundle,
    classifier_loss,
    generator_adv_loss,
    generator_forward,
    critic_loss,
    new_bundle,
)


class TrainingDivergedError(RuntimeError):
    def __init__(self, step, last_checkpoint=None):
        self.step = step
        self.last_checkpoint = last_checkpoint
        kept = f"; last checkpoint kept at {last_checkpoint}" if last_checkpoint else ""
        super().__init__(f"non-finite loss at generator step {step}{kept}")


class LossRow(NamedTuple):
    step: int
    epoch: int
    d_loss: float
    g_loss: float
    q_loss_real: float
    q_loss_fake: float


@dataclass
class LossLog:
    rows: list = field(default_factory=list)

    def append(self, row: LossRow):
        if self.rows and row.step <= self.rows[-1].step:
            raise ValueError("steps must be strictly increasing")
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)


@dataclass
class TrainResult:
    bundle: ModelBundle
    log: LossLog
    checkpoints: list


def mix_seed(*parts) -> int:
    """Deterministic splitmix-style combine of integer seed parts."""
    h = 0x9E3779B97F4A7C15
    for p in parts:
        h = (h ^ (int(p) & 0xFFFFFFFFFFFFFFFF)) * 0xBF58476D1CE4E5B9 % 2**64
        h = (h ^ (h >> 31)) * 0x94D049BB133111EB % 2**64
        h ^= h >> 29
    return h % 2**63


def steps_per_epoch(corpus_size: int, config: TrainConfig) -> int:
    """Generator steps per epoch: at least one full data pass per epoch."""
    batches = math.ceil(corpus_size / config.batch_size)
    return max(1, math.ceil(batches / (config.n_critic + 1)))


def _to_torch(batch):
    images = torch.from_numpy(batch.images).permute(0, 3, 1, 2).contiguous()
    return images, torch.from_numpy(batch.classes)


def train(config: TrainConfig, corpus: LabeledCorpus, out_dir=None) -> TrainResult:
    """Run the full training schedule over a labeled corpus.

    Per generator step: exactly config.n_critic critic updates on fresh
    real/fake batches, one generator update on the combined adversarial +
    classification objective, one classifier update on a fresh real batch.
    Aborts on non-finite losses. Deterministic given the config seeds.
    """
    config.validate()
    if len(corpus) == 0:
        raise ValueError("corpus is empty")
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    bundle = new_bundle(config)
    opt_g = ckpt.make_optimizer(bundle.G, config)
    opt_d = ckpt.make_optimizer(bundle.D, config)
    opt_q = ckpt.make_optimizer(bundle.Q, config)
    optimizers = {"g": opt_g, "d": opt_d, "q": opt_q}

    stream = batch_stream(corpus, config.batch_size, config.seed_data)
    latent_gen = torch.Generator().manual_seed(config.seed_latent)
    alpha_gen = torch.Generator().manual_seed(config.seed_alpha)
    gp = GpConfig(config.lambda_gp)

    per_epoch = steps_per_epoch(len(corpus), config)
    total_steps = config.epochs * per_epoch
    log = LossLog()
    checkpoints = []
    bundle.G.train()
    bundle.D.train()
    bundle.Q.train()

    def write_checkpoint(step):
        path = out / f"ckpt_{step}.bin"
        cid = ckpt.save_checkpoint(path, bundle, optimizers)
        bundle.checkpoint_id = cid
        (out / "latest").write_text(path.name + "\n")
        checkpoints.append(path)
        return path

    def sample_fakes(n, requires_grad):
        z = torch.randn(n, config.z_dim, generator=latent_gen)
        codes = torch.randint(0, len(CLASSES), (n,), generator=latent_gen)
        if requires_grad:
            return generator_forward(bundle.G, z, codes), codes
        with torch.no_grad():
            return generator_forward(bundle.G, z, codes), codes

    for step in range(1, total_steps + 1):
        epoch = (step - 1) // per_epoch

        d_losses = []
        for _ in range(config.n_critic):
            real, _ = _to_torch(next(stream))
            fake, _ = sample_fakes(len(real), requires_grad=False)
            d_loss = critic_loss(bundle.D, real, fake, gp, seed=alpha_gen)
            opt_d.zero_grad()
            d_loss.backward()
            opt_d.step()
            bundle.critic_steps += 1
            d_losses.append(d_loss.item())

        fake, codes = sample_fakes(config.batch_size, requires_grad=True)
        adv = generator_adv_loss(bundle.D, fake)
        bundle.Q.eval()  # keep Q's batch-norm state purely real-trained
        q_fake = classifier_loss(bundle.Q, fake, codes)
        bundle.Q.train()
        g_total = adv + config.w_cls * q_fake
        opt_g.zero_grad()
        g_total.backward()
        opt_g.step()
        bundle.generator_steps += 1

        real, labels = _to_torch(next(stream))
        q_real = classifier_loss(bundle.Q, real, labels)
        opt_q.zero_grad()
        q_real.backward()
        opt_q.step()
        bundle.q_steps += 1

        row = LossRow(
            step=step,
            epoch=epoch,
            d_loss=float(np.mean(d_losses)),
            g_loss=adv.item(),
            q_loss_real=q_real.item(),
            q_loss_fake=q_fake.item(),
        )
        if not all(math.isfinite(v) for v in row[2:]):
            raise TrainingDivergedError(
                step, checkpoints[-1] if checkpoints else None
            )
        log.append(row)
        if config.log_interval and step % config.log_interval == 0:
            print(
                f"step {step}/{total_steps} epoch {epoch} "
                f"d {row.d_loss:.3f} g {row.g_loss:.3f} "
                f"q_real {row.q_loss_real:.3f} q_fake {row.q_loss_fake:.3f}"
            )

        if out is not None:
            if config.checkpoint_interval and step % config.checkpoint_interval == 0:
                write_checkpoint(step)
            end_of_epoch = step % per_epoch == 0
            if (
                config.snapshot_interval
                and end_of_epoch
                and (epoch + 1) % config.snapshot_interval == 0
            ):
                snapshot_samples(
                    bundle, epoch, seed=config.seed_latent, out_dir=out / "samples"
                )

    if out is not None and total_steps > 0:
        if not checkpoints or checkpoints[-1].name != f"ckpt_{total_steps}.bin":
            write_checkpoint(total_steps)
        export_loss_csv(log, out / "loss_log.csv")
    return TrainResult(bundle=bundle, log=log, checkpoints=checkpoints)


# ---------------------------------------------------------------------------
# sample grids
# ---------------------------------------------------------------------------

def tile_grid(images: np.ndarray, cols: Optional[int] = None) -> np.ndarray:
    """Tile n HxWx3 images into a grid array (8-wide past 8 images)."""
    n, h, w, _ = images.shape
    if cols is None:
        cols = 8 if n >= 8 else n
    rows = math.ceil(n / cols)
    canvas = np.full((rows * h, cols * w, 3), 255, dtype=np.uint8)
    for i in range(n):
        r, c = divmod(i, cols)
        canvas[r * h : (r + 1) * h, c * w : (c + 1) * w] = images[i]
    return canvas


def png_bytes(array: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(array).save(buf, format="PNG")
    return buf.getvalue()


def snapshot_samples(
    bundle: ModelBundle,
    epoch: int,
    n_per_class: int = 64,
    seed: int = 0,
    out_dir=None,
) -> dict:
    """Per-class sample grids plus a 12-class contact sheet.

    The latent batch is derived from (seed, epoch) and shared across classes
    so grids stay comparable between classes and across epochs.
    """
    gen = torch.Generator().manual_seed(mix_seed(seed, epoch))
    z = torch.randn(n_per_class, bundle.G.z_dim, generator=gen)
    was_training = bundle.G.training
    bundle.G.eval()
    grids = {}
    try:
        with torch.no_grad():
            for idx, cls in enumerate(CLASSES):
                codes = torch.full((n_per_class,), idx, dtype=torch.long)
                imgs = generator_forward(bundle.G, z, codes)
                imgs = denormalize(imgs.permute(0, 2, 3, 1).numpy())
                grids[cls] = tile_grid(imgs)
    finally:
        bundle.G.train(was_training)
    sheet = tile_grid(np.stack([grids[c] for c in CLASSES]), cols=4)
    grids["all"] = sheet

    out = {name: png_bytes(arr) for name, arr in grids.items()}
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, data in out.items():
            (out_dir / f"epoch_{epoch:04d}_{name}.png").write_bytes(data)
    return out


def export_loss_csv(log: LossLog, path):
    """Write the loss log as CSV; float reprs round-trip exactly."""
    lines = ["step,epoch,d_loss,g_loss,q_loss_real,q_loss_fake"]
    for row in log.rows:
        lines.append(
            f"{row.step},{row.epoch},{row.d_loss!r},{row.g_loss!r},"
            f"{row.q_loss_real!r},{row.q_loss_fake!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n")
