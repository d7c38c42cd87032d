"""
Checkpoint files.

Layout, all integers little-endian:

    8 bytes   magic b"PINNCKPT"
    uint16    format version (1)
    uint8     length of the activation tag, then the ASCII tag
    uint32    number of layer sizes n, then n x uint32 sizes
    float64   per layer: weights row-major (N_l x N_{l-1}), then biases (N_l)

Nothing follows the last bias.
"""
import logging
import struct
from pathlib import Path

import numpy as np

from core.exceptions import (
    CorruptPayloadError, ExportError, MalformedHeaderError, ShapeMismatchError, TruncatedPayloadError,
)

from .activations import ACTIVATIONS
from .mlp import INPUT_WIDTH, OUTPUT_WIDTH, LayerParams, Network

logger = logging.getLogger(__name__)

MAGIC = b'PINNCKPT'
VERSION = 1
_FLOAT = np.dtype('<f8')


def encode(net):
    tag = net.activation.encode('ascii')
    sizes = net.layer_sizes
    chunks = [
        MAGIC,
        struct.pack('<HB', VERSION, len(tag)),
        tag,
        struct.pack(f'<I{len(sizes)}I', len(sizes), *sizes),
    ]
    for layer in net.layers:
        chunks.append(layer.weights.astype(_FLOAT).tobytes(order='C'))
        chunks.append(layer.biases.astype(_FLOAT).tobytes())
    return b''.join(chunks)


class _Reader:
    def __init__(self, data):
        self.data = data
        self.offset = 0

    def take(self, size, what):
        end = self.offset + size
        if end > len(self.data):
            raise MalformedHeaderError(f"checkpoint header ends inside the {what}")
        chunk = self.data[self.offset:end]
        self.offset = end
        return chunk


def _read_header(data):
    reader = _Reader(data)
    if reader.take(len(MAGIC), 'magic') != MAGIC:
        raise MalformedHeaderError("not a checkpoint file (bad magic)")
    version, tag_length = struct.unpack('<HB', reader.take(3, 'version'))
    if version != VERSION:
        raise MalformedHeaderError(f"unsupported checkpoint version {version}")
    try:
        activation = reader.take(tag_length, 'activation tag').decode('ascii')
    except UnicodeDecodeError:
        raise MalformedHeaderError("activation tag is not ASCII") from None
    if activation not in ACTIVATIONS:
        raise MalformedHeaderError(f"unknown activation tag {activation!r}")
    (count,) = struct.unpack('<I', reader.take(4, 'layer count'))
    if count < 2:
        raise MalformedHeaderError(f"checkpoint lists {count} layer sizes")
    sizes = list(struct.unpack(f'<{count}I', reader.take(4 * count, 'layer sizes')))
    return activation, sizes, reader.offset


def decode(data, expected_sizes=None):
    activation, sizes, offset = _read_header(data)
    if sizes[0] != INPUT_WIDTH or sizes[-1] != OUTPUT_WIDTH or min(sizes) < 1:
        raise ShapeMismatchError(f"checkpoint layer sizes {sizes} do not describe a (t, x) -> u network")
    if expected_sizes is not None and list(expected_sizes) != sizes:
        raise ShapeMismatchError(
            f"checkpoint has layer sizes {sizes}, expected {list(expected_sizes)}")

    needed = sum(rows * cols + rows for cols, rows in zip(sizes, sizes[1:])) * _FLOAT.itemsize
    payload = data[offset:]
    if len(payload) < needed:
        raise TruncatedPayloadError(
            f"checkpoint payload has {len(payload)} bytes, layer sizes need {needed}")
    if len(payload) > needed:
        raise ShapeMismatchError(
            f"checkpoint payload has {len(payload) - needed} bytes beyond layer sizes {sizes}")

    values = np.frombuffer(payload, dtype=_FLOAT).astype(np.float64)
    if not np.all(np.isfinite(values)):
        bad = int(np.count_nonzero(~np.isfinite(values)))
        raise CorruptPayloadError(f"checkpoint payload holds {bad} non-finite parameters")
    layers, position = [], 0
    for cols, rows in zip(sizes, sizes[1:]):
        weights = values[position:position + rows * cols].reshape(rows, cols)
        position += rows * cols
        biases = values[position:position + rows]
        position += rows
        layers.append(LayerParams(weights, biases))
    return Network(tuple(layers), activation)


def save_checkpoint(net, path):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(encode(net))
    except OSError as e:
        logger.error(f"Error saving checkpoint to {path}: {e}")
        raise ExportError(path, e) from e
    logger.info(f"Saved {net.layer_sizes} {net.activation} checkpoint to {path}")
    return path


def load_checkpoint(path, expected_sizes=None):
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise MalformedHeaderError(f"cannot read checkpoint {path}: {e}") from e
    net = decode(data, expected_sizes)
    logger.info(f"Loaded {net.layer_sizes} {net.activation} checkpoint from {path}")
    return net
