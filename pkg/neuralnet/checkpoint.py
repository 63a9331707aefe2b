"""
Versioned binary checkpoint for a Network plus optional Adam state and normalizer.

    b"MFNN" | u32 version | u32 header length | header JSON | float64 LE blobs

Blobs are the parameters in network order, followed by the Adam first and
second moments in the same order when the header records an optimizer.
"""
import json
import logging
import struct
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from core.errors import CheckpointError, MissingArtifactError
from neuralnet.network import Network
from neuralnet.optim import Adam

logger = logging.getLogger(__name__)

MAGIC = b"MFNN"
VERSION = 1
_PREFIX = struct.Struct("<4sII")


@dataclass
class Checkpoint:
    network: Network
    optimizer: Adam | None = None
    normalizer: dict | None = None
    extra: dict = field(default_factory=dict)


def _blob(array):
    return np.ascontiguousarray(array, dtype="<f8").tobytes()


def encode(network, optimizer=None, normalizer=None, extra=None):
    params = network.parameters()
    header = {
        "architecture": network.descriptor(),
        "parameters": [[key, list(value.shape)] for key, value in params.items()],
        "optimizer": optimizer.hyperparameters() if optimizer is not None else None,
        "normalizer": normalizer,
        "extra": extra or {},
    }
    body = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    chunks = [_PREFIX.pack(MAGIC, VERSION, len(body)), body]
    chunks.extend(_blob(v) for v in params.values())
    if optimizer is not None:
        optimizer.ensure_state(params)
        chunks.extend(_blob(optimizer.m[k]) for k in params)
        chunks.extend(_blob(optimizer.v[k]) for k in params)
    return b"".join(chunks)


def decode(data):
    if len(data) < _PREFIX.size:
        raise CheckpointError("checkpoint truncated before header")
    magic, version, length = _PREFIX.unpack_from(data, 0)
    if magic != MAGIC:
        raise CheckpointError(f"bad checkpoint magic {magic!r}")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version} (expected {VERSION})")
    start = _PREFIX.size
    if len(data) < start + length:
        raise CheckpointError("checkpoint truncated inside header")
    try:
        header = json.loads(data[start:start + length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"unreadable checkpoint header: {exc}") from None

    try:
        network = Network.from_descriptor(header["architecture"])
    except Exception as exc:
        raise CheckpointError(f"invalid architecture descriptor: {exc}") from None
    params = network.parameters()
    listed = [(k, tuple(s)) for k, s in header["parameters"]]
    actual = [(k, v.shape) for k, v in params.items()]
    if listed != actual:
        raise CheckpointError("parameter shapes do not match the architecture")

    sizes = [int(np.prod(s)) for _, s in listed]
    n_blocks = 3 if header.get("optimizer") else 1
    expected = start + length + 8 * sum(sizes) * n_blocks
    if len(data) != expected:
        raise CheckpointError(f"checkpoint size {len(data)} bytes, expected {expected}")

    offset = start + length

    def read_block():
        nonlocal offset
        out = {}
        for (key, shape), n in zip(listed, sizes):
            out[key] = np.frombuffer(data, dtype="<f8", count=n, offset=offset).reshape(shape).astype(np.float64)
            offset += 8 * n
        return out

    values = read_block()
    for key, value in values.items():
        params[key][...] = value

    optimizer = None
    if header.get("optimizer"):
        hp = header["optimizer"]
        optimizer = Adam(hp["lr"], hp["beta1"], hp["beta2"], hp["eps"])
        optimizer.t = int(hp["t"])
        optimizer.m = read_block()
        optimizer.v = read_block()
    return Checkpoint(network, optimizer, header.get("normalizer"), header.get("extra", {}))


def save_checkpoint(path, network, optimizer=None, normalizer=None, extra=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = encode(network, optimizer, normalizer, extra)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)
    logger.debug("saved %s (%d bytes)", path.name, len(data))
    return path


def load_checkpoint(path):
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"checkpoint not found: {path}")
    return decode(path.read_bytes())
