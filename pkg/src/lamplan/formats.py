"""File formats: RVOL volumes, RTEN tensors, SPUW weights, and JSON schemas.

All binary formats are little-endian with a 4-byte magic and a version byte.
Writers go through a temp file plus atomic rename, so a failed command never
leaves a partial artifact. JSON numbers are serialized with 9 significant
digits to keep golden files stable.
"""

from __future__ import annotations

import dataclasses
import json
import os
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError
from .frame import CutPlane, Frame
from .grading import Grade, GradeResult, LONGITUDINAL, TRANSVERSE_KIND
from .heatmap import HeatmapStack
from .phantom import PhantomParams
from .net.weights import WeightStore
from .volume import LANDMARK_NAMES, LandmarkSet, Volume

RVOL_MAGIC = b"RVOL"
RTEN_MAGIC = b"RTEN"
SPUW_MAGIC = b"SPUW"
FORMAT_VERSION = 1


def _atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    try:
        tmp.write_bytes(data)
        os.replace(tmp, path)
    finally:
        tmp.unlink(missing_ok=True)


class _Reader:
    def __init__(self, data: bytes, path):
        self.data = data
        self.pos = 0
        self.path = str(path)

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(
                f"{self.path}: truncated file (wanted {n} bytes at offset {self.pos})"
            )
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack("<" + fmt, self.take(struct.calcsize("<" + fmt)))

    def array(self, dtype, count: int) -> np.ndarray:
        raw = self.take(count * np.dtype(dtype).itemsize)
        return np.frombuffer(raw, dtype="<" + np.dtype(dtype).str[1:], count=count)

    def expect_magic(self, magic: bytes) -> None:
        got = self.take(4)
        if got != magic:
            raise FormatError(f"{self.path}: bad magic {got!r}, expected {magic!r}")
        (ver,) = self.unpack("B")
        if ver != FORMAT_VERSION:
            raise FormatError(f"{self.path}: unsupported version {ver}")

    def done(self) -> None:
        if self.pos != len(self.data):
            raise FormatError(
                f"{self.path}: {len(self.data) - self.pos} trailing bytes"
            )


def write_rvol(vol: Volume, path) -> None:
    nz, ny, nx = vol.dims
    header = RVOL_MAGIC + struct.pack("<B", FORMAT_VERSION)
    header += struct.pack("<3I", nz, ny, nx)
    header += struct.pack("<6d", *vol.spacing, *vol.origin)
    payload = np.ascontiguousarray(vol.voxels, dtype="<f4").tobytes()
    _atomic_write_bytes(path, header + payload)


def read_rvol(path) -> Volume:
    r = _Reader(Path(path).read_bytes(), path)
    r.expect_magic(RVOL_MAGIC)
    nz, ny, nx = r.unpack("3I")
    sx, sy, sz, ox, oy, oz = r.unpack("6d")
    vox = r.array(np.float32, nz * ny * nx).reshape(nz, ny, nx)
    r.done()
    return Volume(vox, (sx, sy, sz), (ox, oy, oz))


def write_rten(array: np.ndarray, path) -> None:
    arr = np.ascontiguousarray(np.asarray(array), dtype="<f4")
    header = RTEN_MAGIC + struct.pack("<B", FORMAT_VERSION)
    header += struct.pack("<B", arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    _atomic_write_bytes(path, header + arr.tobytes())


def read_rten(path) -> np.ndarray:
    r = _Reader(Path(path).read_bytes(), path)
    r.expect_magic(RTEN_MAGIC)
    (rank,) = r.unpack("B")
    if rank < 1:
        raise FormatError(f"{path}: rank must be >= 1, got {rank}")
    dims = r.unpack(f"{rank}I")
    arr = r.array(np.float32, int(np.prod(dims))).reshape(dims)
    r.done()
    return arr


def write_heatmap(h: HeatmapStack, path) -> None:
    """Heatmap stacks are rank-4 RTEN files in canonical channel order."""
    write_rten(h.data, path)


def read_heatmap(path, names=LANDMARK_NAMES) -> HeatmapStack:
    arr = read_rten(path)
    if arr.ndim != 4:
        raise FormatError(f"{path}: heatmap stack must be rank 4, got rank {arr.ndim}")
    if arr.shape[0] != len(names):
        raise FormatError(
            f"{path}: {arr.shape[0]} channels, expected {len(names)}"
        )
    return HeatmapStack(arr, tuple(names))


def write_spuw(store: WeightStore, path) -> None:
    parts = [SPUW_MAGIC + struct.pack("<B", FORMAT_VERSION)]
    parts.append(struct.pack("<I", len(store)))
    for name, arr in store.items():
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<B", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    _atomic_write_bytes(path, b"".join(parts))


def read_spuw(path) -> WeightStore:
    r = _Reader(Path(path).read_bytes(), path)
    r.expect_magic(SPUW_MAGIC)
    (count,) = r.unpack("I")
    params = []
    for _ in range(count):
        (name_len,) = r.unpack("H")
        name = r.take(name_len).decode("utf-8")
        (rank,) = r.unpack("B")
        dims = r.unpack(f"{rank}I") if rank else ()
        arr = r.array(np.float32, int(np.prod(dims, dtype=np.int64)) if dims else 1)
        params.append((name, arr.reshape(dims)))
    r.done()
    return WeightStore(params)


def _round_floats(obj):
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, float):
        return float(f"{obj:.9g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def dump_json(obj, path) -> None:
    text = json.dumps(_round_floats(obj), indent=2, sort_keys=True, allow_nan=False)
    _atomic_write_bytes(path, (text + "\n").encode("utf-8"))


def load_json(path):
    try:
        return json.loads(Path(path).read_text("utf-8"))
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON ({e})") from e


def write_landmarks(lm: LandmarkSet, path) -> None:
    dump_json(lm.as_dict(), path)


def read_landmarks(path) -> LandmarkSet:
    obj = load_json(path)
    if not isinstance(obj, dict):
        raise FormatError(f"{path}: landmark file must be a JSON object")
    for name in LANDMARK_NAMES:
        if name not in obj:
            raise FormatError(f"{path}: missing landmark {name}")
        v = obj[name]
        if not (isinstance(v, list) and len(v) == 3):
            raise FormatError(f"{path}: landmark {name} must be [x, y, z]")
    return LandmarkSet(obj)


def write_frame(f: Frame, path) -> None:
    dump_json(f.as_dict(), path)


def read_frame(path) -> Frame:
    obj = load_json(path)
    for key in ("origin", "X", "Y", "Z"):
        if key not in obj:
            raise FormatError(f"{path}: missing frame field {key}")
    return Frame(
        origin=obj["origin"], x_axis=obj["X"], y_axis=obj["Y"], z_axis=obj["Z"]
    )


def write_planes(planes, path) -> None:
    dump_json([p.as_dict() for p in planes], path)


def read_planes(path) -> list[CutPlane]:
    obj = load_json(path)
    if not isinstance(obj, list):
        raise FormatError(f"{path}: planes file must be a JSON list")
    planes = []
    for entry in obj:
        for key in ("name", "point", "normal", "resect_side"):
            if key not in entry:
                raise FormatError(f"{path}: plane entry missing field {key}")
        planes.append(
            CutPlane(
                name=entry["name"],
                point=entry["point"],
                normal=entry["normal"],
                resect_side=entry["resect_side"],
            )
        )
    return planes


def _kind_for_plane(plane_name: str) -> str:
    return TRANSVERSE_KIND if plane_name == "transverse" else LONGITUDINAL


def write_grades(grades, path) -> None:
    dump_json([g.as_dict() for g in grades], path)


def read_grades(path) -> list[GradeResult]:
    obj = load_json(path)
    if not isinstance(obj, list):
        raise FormatError(f"{path}: grades file must be a JSON list")
    out = []
    for entry in obj:
        for key in ("plane_name", "grade", "r_or_s", "reason"):
            if key not in entry:
                raise FormatError(f"{path}: grade entry missing field {key}")
        try:
            grade = Grade(entry["grade"])
        except ValueError:
            raise FormatError(f"{path}: unknown grade {entry['grade']!r}") from None
        ratio = entry["r_or_s"]
        out.append(
            GradeResult(
                plane_name=entry["plane_name"],
                kind=_kind_for_plane(entry["plane_name"]),
                grade=grade,
                ratio=None if ratio is None else float(ratio),
                reason=str(entry["reason"]),
            )
        )
    return out


def write_phantom_params(p: PhantomParams, path) -> None:
    dump_json(dataclasses.asdict(p), path)


def read_phantom_params(path) -> PhantomParams:
    obj = load_json(path)
    if not isinstance(obj, dict):
        raise FormatError(f"{path}: params file must be a JSON object")
    return phantom_params_from_dict(obj, source=str(path))


def phantom_params_from_dict(obj: dict, source: str = "params") -> PhantomParams:
    """Build params from a (possibly partial) dict; defaults fill the rest."""
    known = {f.name for f in dataclasses.fields(PhantomParams)}
    unknown = set(obj) - known
    if unknown:
        raise FormatError(f"{source}: unknown parameter fields {sorted(unknown)}")
    kwargs = {}
    for f in dataclasses.fields(PhantomParams):
        if f.name not in obj:
            continue
        v = obj[f.name]
        kwargs[f.name] = tuple(v) if isinstance(v, list) else v
    return PhantomParams(**kwargs)
