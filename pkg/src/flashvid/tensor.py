"""Dense tensor containers, token identities, configuration and file I/O.

On-disk tensor format is NPY v1.0, little-endian float32, C order, and
nothing else. Results are written as a token NPY plus a sidecar JSON
report (schema "flashvid-report-v1", documented in docs/report_schema.md).
"""

from __future__ import annotations

import ast
import json
import math
import struct
from dataclasses import dataclass, field, asdict
from typing import NamedTuple

import numpy as np

NPY_MAGIC = b"\x93NUMPY"
REPORT_SCHEMA = "flashvid-report-v1"


class FlashvidError(Exception):
    """Base class for all library errors."""


class ConfigError(FlashvidError):
    """A configuration value is out of its admissible range."""


class TensorFormatError(FlashvidError):
    """Malformed NPY container; carries the byte offset of the violation."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class TensorRankError(FlashvidError):
    """Tensor on disk has the wrong rank or an inadmissible shape."""


class TensorValueError(FlashvidError):
    """Non-finite value in a tensor; carries the flat index of the first one."""

    def __init__(self, message, index):
        super().__init__(f"{message} (flat index {index})")
        self.index = index


class InternalError(FlashvidError):
    """An internal invariant was breached; indicates a bug, not bad input."""


class TokenRef(NamedTuple):
    """Identity of one visual token: (frame index, spatial index).

    Tuple comparison gives the lexicographic total order used for all
    tie-breaking throughout the library.
    """

    frame: int
    pos: int


def _check_finite(arr):
    finite = np.isfinite(arr)
    if not finite.all():
        idx = int(np.flatnonzero(~finite.ravel())[0])
        raise TensorValueError("non-finite value in tensor", idx)


def _freeze(arr):
    view = arr.view()
    view.flags.writeable = False
    return view


@dataclass(frozen=True)
class VideoFeatures:
    """F x N_v x d float32 feature tensor; immutable after construction."""

    data: np.ndarray

    @property
    def frames(self):
        return self.data.shape[0]

    @property
    def tokens_per_frame(self):
        return self.data.shape[1]

    @property
    def dim(self):
        return self.data.shape[2]

    @staticmethod
    def from_array(arr, *, copy=False):
        """Validate and wrap a (F, N_v, d) float32 array without copying.

        Raises TensorRankError on wrong rank/dtype and TensorValueError on
        the first non-finite entry.
        """
        if not isinstance(arr, np.ndarray) or arr.ndim != 3:
            raise TensorRankError(
                f"expected rank-3 feature array, got rank "
                f"{getattr(arr, 'ndim', None)}"
            )
        if arr.dtype != np.float32:
            raise TensorRankError(
                f"expected float32 features, got {arr.dtype}; refusing to cast"
            )
        if min(arr.shape) < 1:
            raise TensorRankError(f"empty axis in feature shape {arr.shape}")
        if copy:
            arr = np.ascontiguousarray(arr)
        _check_finite(arr)
        return VideoFeatures(_freeze(arr))


@dataclass(frozen=True)
class AttentionStack:
    """F x N_v x N_v stack of row-stochastic attention matrices."""

    data: np.ndarray

    ROW_SUM_TOL = 1e-4

    @property
    def frames(self):
        return self.data.shape[0]

    @property
    def tokens_per_frame(self):
        return self.data.shape[1]

    @staticmethod
    def from_array(arr, *, copy=False):
        if not isinstance(arr, np.ndarray) or arr.ndim != 3:
            raise TensorRankError(
                f"expected rank-3 attention array, got rank "
                f"{getattr(arr, 'ndim', None)}"
            )
        if arr.shape[1] != arr.shape[2]:
            raise TensorRankError(
                f"attention matrices must be square, got shape {arr.shape}"
            )
        if arr.dtype != np.float32:
            raise TensorRankError(
                f"expected float32 attention, got {arr.dtype}; refusing to cast"
            )
        if min(arr.shape) < 1:
            raise TensorRankError(f"empty axis in attention shape {arr.shape}")
        if copy:
            arr = np.ascontiguousarray(arr)
        _check_finite(arr)
        if (arr < 0).any():
            idx = int(np.flatnonzero((arr < 0).ravel())[0])
            raise TensorValueError("negative attention weight", idx)
        sums = arr.sum(axis=2, dtype=np.float64)
        if not np.allclose(sums, 1.0, atol=AttentionStack.ROW_SUM_TOL, rtol=0):
            bad = np.unravel_index(
                int(np.argmax(np.abs(sums - 1.0))), sums.shape
            )
            raise TensorValueError(
                f"attention row {bad} sums to {sums[bad]:.6f}, expected 1",
                int(np.ravel_multi_index(bad, sums.shape)),
            )
        return AttentionStack(_freeze(arr))

    @staticmethod
    def uniform(frames, tokens_per_frame):
        """Uniform attention (every token attends equally to every token)."""
        a = np.full(
            (frames, tokens_per_frame, tokens_per_frame),
            1.0 / tokens_per_frame,
            dtype=np.float32,
        )
        return AttentionStack(_freeze(a))


@dataclass(frozen=True)
class CompressionConfig:
    """All pipeline tunables with validated ranges.

    Defaults follow the recommended operating point: merge threshold 0.8,
    selection/merge split 0.7, expansion factor 1.25, segment threshold
    0.9, at least 8 segments, pruning layer 20 of 28.
    """

    merge_threshold: float = 0.8
    adts_ratio: float = 0.7
    expansion_factor: float = 1.25
    segment_threshold: float = 0.9
    min_segments: int = 8
    prune_layer: int = 20
    num_layers: int = 28
    retention_ratio: float = 0.1
    budget: int | None = None
    max_depth: int | None = None
    neighborhood: int | None = None
    aggregation: str = "mean"

    def __post_init__(self):
        if not (0.0 < self.merge_threshold <= 1.0):
            raise ConfigError(f"merge_threshold must be in (0,1], got {self.merge_threshold}")
        if not (0.0 <= self.adts_ratio <= 1.0):
            raise ConfigError(f"adts_ratio must be in [0,1], got {self.adts_ratio}")
        if self.expansion_factor < 1.0:
            raise ConfigError(f"expansion_factor must be >= 1, got {self.expansion_factor}")
        if not (0.0 < self.segment_threshold <= 1.0):
            raise ConfigError(f"segment_threshold must be in (0,1], got {self.segment_threshold}")
        if self.min_segments < 1:
            raise ConfigError(f"min_segments must be >= 1, got {self.min_segments}")
        if self.prune_layer < 0:
            raise ConfigError(f"prune_layer must be >= 0, got {self.prune_layer}")
        if self.num_layers < 1:
            raise ConfigError(f"num_layers must be >= 1, got {self.num_layers}")
        if not (0.0 < self.retention_ratio <= 1.0):
            raise ConfigError(f"retention_ratio must be in (0,1], got {self.retention_ratio}")
        if self.budget is not None and self.budget < 1:
            raise ConfigError(f"budget must be >= 1, got {self.budget}")
        if self.max_depth is not None and self.max_depth < 1:
            raise ConfigError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.neighborhood is not None and self.neighborhood < 1:
            raise ConfigError(f"neighborhood must be >= 1, got {self.neighborhood}")
        if self.aggregation != "mean":
            raise ConfigError(f"unsupported aggregation {self.aggregation!r}")
        if self.prune_layer > 0:
            # keep-ratio (L - f_e*K) / (f_e*(L-K)) must stay positive
            if self.expansion_factor * self.prune_layer >= self.num_layers:
                raise ConfigError(
                    f"infeasible inner pruning: expansion_factor*prune_layer = "
                    f"{self.expansion_factor * self.prune_layer} >= num_layers "
                    f"{self.num_layers}"
                )

    def to_dict(self):
        return asdict(self)

    @staticmethod
    def from_dict(d):
        return CompressionConfig(**d)


@dataclass
class CompressionResult:
    """Retained token vectors plus full provenance and per-stage statistics.

    ``provenance[i]`` lists the input TokenRefs aggregated into output
    token ``i``; output ``tokens[i]`` is the arithmetic mean of those
    input vectors.
    """

    tokens: np.ndarray
    provenance: list[list[TokenRef]]
    stats: dict = field(default_factory=dict)

    def __eq__(self, other):
        if not isinstance(other, CompressionResult):
            return NotImplemented
        return (
            self.tokens.shape == other.tokens.shape
            and self.tokens.tobytes() == other.tokens.tobytes()
            and self.provenance == other.provenance
            and self.stats == other.stats
        )


def round_half_up(x):
    """Deterministic half-up rounding for nonnegative reals/rationals."""
    return int(math.floor(x + type(x)(1) / 2)) if hasattr(x, "denominator") \
        else int(math.floor(x + 0.5))


# ---------------------------------------------------------------------------
# NPY v1.0 I/O


def _read_npy_f32(path):
    try:
        with open(path, "rb") as fh:
            buf = fh.read()
    except OSError as exc:
        raise FlashvidError(f"cannot read {path}: {exc}") from exc
    if len(buf) < 10 or buf[:6] != NPY_MAGIC:
        raise TensorFormatError(f"{path}: not an NPY file (bad magic)", 0)
    if buf[6:8] != b"\x01\x00":
        raise TensorFormatError(
            f"{path}: unsupported NPY version {buf[6]}.{buf[7]}", 6
        )
    (hlen,) = struct.unpack("<H", buf[8:10])
    start = 10
    if len(buf) < start + hlen:
        raise TensorFormatError(f"{path}: truncated header", len(buf))
    try:
        header = ast.literal_eval(buf[start : start + hlen].decode("latin1"))
    except (ValueError, SyntaxError):
        raise TensorFormatError(f"{path}: unparseable header dict", start) from None
    if not isinstance(header, dict) or set(header) != {
        "descr",
        "fortran_order",
        "shape",
    }:
        raise TensorFormatError(f"{path}: malformed header keys", start)
    if header["descr"] != "<f4":
        raise TensorFormatError(
            f"{path}: dtype {header['descr']!r} is not little-endian float32",
            start,
        )
    if header["fortran_order"]:
        raise TensorFormatError(f"{path}: fortran_order not supported", start)
    shape = header["shape"]
    if not (
        isinstance(shape, tuple) and all(isinstance(s, int) and s >= 0 for s in shape)
    ):
        raise TensorFormatError(f"{path}: malformed shape {shape!r}", start)
    count = int(np.prod(shape, dtype=np.int64)) if shape else 1
    data = np.frombuffer(buf, dtype="<f4", offset=start + hlen)
    if data.size != count:
        raise TensorFormatError(
            f"{path}: payload holds {data.size} floats, shape {shape} "
            f"needs {count}",
            start + hlen,
        )
    return data.reshape(shape)


def write_npy(path, arr):
    """Write a float32 array as NPY v1.0, C order, little-endian."""
    arr = np.ascontiguousarray(arr, dtype="<f4")
    with open(path, "wb") as fh:
        np.lib.format.write_array(fh, arr, version=(1, 0))


def load_tensor(path, kind="features"):
    """Load and validate an NPY tensor as features or an attention stack."""
    arr = _read_npy_f32(path)
    if arr.ndim != 3:
        raise TensorRankError(
            f"{path}: expected a rank-3 tensor, got shape {arr.shape}"
        )
    if kind == "features":
        return VideoFeatures.from_array(arr)
    if kind == "attention":
        return AttentionStack.from_array(arr)
    raise ValueError(f"unknown tensor kind {kind!r}")


# ---------------------------------------------------------------------------
# Result serialization


def canonical_json(obj):
    """Canonical JSON text: sorted keys, no spaces, repr floats, newline."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def default_report_path(tokens_path):
    return str(tokens_path) + ".report.json"


def save_result(result, tokens_path, report_path=None, config=None):
    """Write result tokens as NPY plus the sidecar JSON report."""
    if report_path is None:
        report_path = default_report_path(tokens_path)
    write_npy(tokens_path, result.tokens)
    report = {
        "schema": REPORT_SCHEMA,
        "shape": list(result.tokens.shape),
        "provenance": [
            [[int(r.frame), int(r.pos)] for r in group] for group in result.provenance
        ],
        "stats": result.stats,
    }
    if config is not None:
        report["config"] = config.to_dict()
    with open(report_path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(report))


def load_result(tokens_path, report_path=None):
    """Inverse of save_result; round-trips the token buffer bit-exactly."""
    if report_path is None:
        report_path = default_report_path(tokens_path)
    arr = _read_npy_f32(tokens_path)
    if arr.ndim != 2:
        raise TensorRankError(
            f"{tokens_path}: expected a rank-2 token matrix, got shape {arr.shape}"
        )
    with open(report_path, "r", encoding="utf-8") as fh:
        report = json.load(fh)
    if report.get("schema") != REPORT_SCHEMA:
        raise FlashvidError(
            f"{report_path}: unknown report schema {report.get('schema')!r}"
        )
    provenance = [
        [TokenRef(int(f), int(p)) for f, p in group]
        for group in report["provenance"]
    ]
    return CompressionResult(tokens=arr, provenance=provenance, stats=report["stats"])
