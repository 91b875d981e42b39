"""Versioned checkpoint container for the three networks and optimizer state.

Layout: 4-byte magic, u32 format version, u64 JSON header length, the header
(sorted keys), then the raw little-endian array payloads in header order.
A deliberately plain format so that save -> load -> save is byte-identical.
"""

import hashlib
import json
from dataclasses import asdict
from pathlib import Path

import numpy as np
import torch

from .config import TrainConfig
from .models import ModelBundle, new_bundle

MAGIC = b"LGCK"
FORMAT_VERSION = 1


class CheckpointError(Exception):
    """Unreadable, corrupt, or version-mismatched checkpoint."""


def _net_arrays(prefix, net):
    for name, tensor in net.state_dict().items():
        yield f"{prefix}.{name}", tensor.detach().numpy()


def _optimizer_arrays(prefix, net, optimizer):
    params = list(net.parameters())
    names = [n for n, _ in net.named_parameters()]
    state = optimizer.state_dict()["state"]
    for idx, name in enumerate(names):
        if idx not in state:
            continue
        for key, val in sorted(state[idx].items()):
            arr = val.detach().numpy() if isinstance(val, torch.Tensor) else np.asarray(val)
            yield f"{prefix}.{name}.{key}", arr
    assert len(params) == len(names)


def save_checkpoint(path, bundle: ModelBundle, optimizers=None) -> str:
    """Write the bundle (and optional {'g','d','q'} optimizers); returns id."""
    arrays = []
    for prefix, net in (("G", bundle.G), ("D", bundle.D), ("Q", bundle.Q)):
        arrays.extend(_net_arrays(prefix, net))
    if optimizers:
        for key in sorted(optimizers):
            net = {"g": bundle.G, "d": bundle.D, "q": bundle.Q}[key]
            arrays.extend(_optimizer_arrays(f"opt_{key}", net, optimizers[key]))

    payload = b"".join(np.ascontiguousarray(a).tobytes() for _, a in arrays)
    digest = hashlib.sha256(payload).hexdigest()[:12]
    ckpt_id = f"step{bundle.generator_steps}-{digest}"
    header = {
        "format_version": FORMAT_VERSION,
        "checkpoint_id": ckpt_id,
        "config": asdict(bundle.config),
        "counters": bundle.counters(),
        "arrays": [
            {"name": name, "dtype": a.dtype.str, "shape": list(a.shape)}
            for name, a in arrays
        ],
    }
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(np.uint32(FORMAT_VERSION).tobytes())
        fh.write(np.uint64(len(head)).tobytes())
        fh.write(head)
        fh.write(payload)
    return ckpt_id


def load_checkpoint(path):
    """Read a checkpoint; returns (bundle, optimizer_state) with fresh nets.

    optimizer_state maps 'g'/'d'/'q' to a state dict loadable into an Adam
    built over the matching network's parameters (empty if the checkpoint
    was written without optimizers).
    """
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    version = int(np.frombuffer(raw[4:8], dtype=np.uint32)[0])
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"{path}: format version {version} unsupported (expected {FORMAT_VERSION})"
        )
    head_len = int(np.frombuffer(raw[8:16], dtype=np.uint64)[0])
    try:
        header = json.loads(raw[16 : 16 + head_len].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt header: {exc}") from exc

    offset = 16 + head_len
    tensors = {}
    for meta in header["arrays"]:
        dtype = np.dtype(meta["dtype"])
        count = int(np.prod(meta["shape"])) if meta["shape"] else 1
        nbytes = count * dtype.itemsize
        arr = np.frombuffer(raw[offset : offset + nbytes], dtype=dtype)
        arr = arr.reshape(meta["shape"]) if meta["shape"] else arr[0]
        tensors[meta["name"]] = arr
        offset += nbytes
    if offset != len(raw):
        raise CheckpointError(f"{path}: payload size mismatch")

    config = TrainConfig(**header["config"])
    bundle = new_bundle(config)
    for prefix, net in (("G", bundle.G), ("D", bundle.D), ("Q", bundle.Q)):
        state = {}
        for name in net.state_dict():
            key = f"{prefix}.{name}"
            if key not in tensors:
                raise CheckpointError(f"{path}: missing array {key}")
            state[name] = torch.from_numpy(np.array(tensors[key]))
        net.load_state_dict(state)

    counters = header["counters"]
    bundle.generator_steps = counters["generator_steps"]
    bundle.critic_steps = counters["critic_steps"]
    bundle.q_steps = counters["q_steps"]
    bundle.checkpoint_id = header["checkpoint_id"]

    optimizer_state = {}
    for key, net in (("g", bundle.G), ("d", bundle.D), ("q", bundle.Q)):
        names = [n for n, _ in net.named_parameters()]
        state = {}
        for idx, name in enumerate(names):
            entries = {}
            for suffix in ("exp_avg", "exp_avg_sq", "step"):
                k = f"opt_{key}.{name}.{suffix}"
                if k in tensors:
                    entries[suffix] = torch.from_numpy(np.array(tensors[k]))
            if entries:
                state[idx] = entries
        if state:
            optimizer_state[key] = state
    return bundle, optimizer_state


def make_optimizer(net, config: TrainConfig) -> torch.optim.Adam:
    return torch.optim.Adam(
        net.parameters(), lr=config.lr, betas=(config.beta1, config.beta2)
    )


def restore_optimizer(optimizer, state: dict):
    """Install saved per-parameter Adam state into a fresh optimizer."""
    sd = optimizer.state_dict()
    sd["state"] = state
    optimizer.load_state_dict(sd)
