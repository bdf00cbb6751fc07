"""
Checkpoint file format.

    "VAMP" | u32 version | u32 header length | JSON header | f64 payloads

All integers and reals are little-endian. The JSON header carries the
ModelSpec (prior tag and hyperparameters included) and the manifest of
tensors (name and shape) in declaration order; payloads follow in the same
order. A file is validated completely before any model is built.
"""
import json
import logging
import struct
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from vampvae.errors import FormatError
from vampvae.models.model_spec import ModelSpec
from vampvae.networks.factory import Model, build_model

logger = logging.getLogger(__name__)

MAGIC = b"VAMP"
FORMAT_VERSION = 1
PREAMBLE = struct.Struct("<4sII")
PAYLOAD_DTYPE = np.dtype("<f8")


def encode_checkpoint(model: Model, state: dict[str, np.ndarray] | None = None) -> bytes:
    """Serialise `model` (or `state`, a snapshot of its tensors) to bytes."""
    names = [name for name, _ in model.named_tensors()]
    state = model.state_dict() if state is None else state
    if sorted(state) != sorted(names):
        raise FormatError("state snapshot does not match the model's tensors")
    header = {
        "model": model.spec.model_dump(mode="json"),
        "tensors": [{"name": name, "shape": list(state[name].shape)} for name in names],
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    chunks = [PREAMBLE.pack(MAGIC, FORMAT_VERSION, len(header_bytes)), header_bytes]
    chunks += [np.ascontiguousarray(state[name], dtype=PAYLOAD_DTYPE).tobytes() for name in names]
    return b"".join(chunks)


def save_checkpoint(model: Model, path: str | Path, state: dict[str, np.ndarray] | None = None) -> None:
    path = Path(path)
    path.write_bytes(encode_checkpoint(model, state))
    logger.debug("Wrote checkpoint %s", path)


def _parse_header(blob: bytes) -> tuple[ModelSpec, list[dict], int]:
    if len(blob) < PREAMBLE.size:
        raise FormatError("file too short for a checkpoint preamble", offset=len(blob))
    magic, version, header_len = PREAMBLE.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}", offset=0)
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported checkpoint version {version} (this build reads version {FORMAT_VERSION})",
                          offset=4)
    start = PREAMBLE.size
    if start + header_len > len(blob):
        raise FormatError(f"header of {header_len} bytes runs past end of file", offset=len(blob))
    try:
        header = json.loads(blob[start:start + header_len].decode("utf-8"))
        spec = ModelSpec.model_validate(header["model"])
        manifest = header["tensors"]
        for entry in manifest:
            entry["shape"] = tuple(int(n) for n in entry["shape"])
            if any(n < 0 for n in entry["shape"]) or not isinstance(entry["name"], str):
                raise ValueError(f"bad manifest entry {entry!r}")
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, ValueError, ValidationError) as exc:
        raise FormatError(f"malformed checkpoint header: {exc}", offset=start)
    return spec, manifest, start + header_len


def decode_checkpoint(blob: bytes) -> Model:
    spec, manifest, offset = _parse_header(blob)
    state: dict[str, np.ndarray] = {}
    for entry in manifest:
        count = int(np.prod(entry["shape"], dtype=np.int64))
        nbytes = count * PAYLOAD_DTYPE.itemsize
        if offset + nbytes > len(blob):
            raise FormatError(f"truncated payload for tensor {entry['name']!r}", offset=len(blob))
        values = np.frombuffer(blob, dtype=PAYLOAD_DTYPE, count=count, offset=offset)
        if not np.all(np.isfinite(values)):
            raise FormatError(f"non-finite values in tensor {entry['name']!r}", offset=offset)
        state[entry["name"]] = values.astype(np.float64).reshape(entry["shape"])
        offset += nbytes
    if offset != len(blob):
        raise FormatError(f"{len(blob) - offset} trailing bytes after the last tensor", offset=offset)

    model = build_model(spec)
    expected = {name: tensor.shape for name, tensor in model.named_tensors()}
    found = {entry["name"]: entry["shape"] for entry in manifest}
    if expected != found:
        raise FormatError("tensor manifest does not match the architecture in the header", offset=PREAMBLE.size)
    model.load_state_dict(state)
    return model


def load_checkpoint(path: str | Path) -> Model:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read checkpoint {path}: {exc.strerror or exc}")
    model = decode_checkpoint(blob)
    logger.debug("Loaded checkpoint %s (%s prior)", path, model.spec.prior.kind)
    return model
