"""Trace, frame and config files."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .scenarios import FrameSeq, Trace

TRACE_HEADER = ["t", "p1", "p2", "p3", "p4", "fx", "fy", "fz", "tx", "ty", "tz", "c1", "c2", "c3", "c4"]
FMT = "%.10g"


def write_csv(path, header, rows, fmt=FMT):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = np.asarray(rows, dtype=float)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows.reshape(len(rows), -1):
            fh.write(",".join(fmt % v for v in r) + "\n")
    return path


def read_csv(path, required=None):
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        data = [[float(v) for v in row] for row in rd if row]
    if required is not None:
        missing = [c for c in required if c not in header]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
    arr = np.asarray(data, dtype=float).reshape(len(data), len(header))
    return header, arr


def write_trace(trace: Trace, path):
    rows = np.column_stack([trace.t, trace.p_vac, trace.ft, trace.contact])
    path = write_csv(path, TRACE_HEADER, rows)
    meta = Path(path).with_suffix(".json")
    meta.write_text(json.dumps(trace.meta, indent=2, sort_keys=True) + "\n")
    return path


def read_trace(path):
    header, a = read_csv(path, TRACE_HEADER)
    col = {h: i for i, h in enumerate(header)}
    pick = lambda names: a[:, [col[n] for n in names]]
    meta_path = Path(path).with_suffix(".json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    return Trace(a[:, col["t"]], pick(TRACE_HEADER[1:5]), pick(TRACE_HEADER[5:11]),
                 pick(TRACE_HEADER[11:15]), meta)


def write_pgm(path, img):
    img = np.asarray(img, dtype=np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    parts = []
    pos = 0
    while len(parts) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        parts.append(data[pos:end])
        pos = end
    if parts[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval > 255:
        raise ValueError(f"{path}: 16-bit PGM not supported")
    pos += 1
    return np.frombuffer(data[pos:pos + w * h], dtype=np.uint8).reshape(h, w).copy()


def write_frames(frames: FrameSeq, trial_dir):
    d = Path(trial_dir)
    d.mkdir(parents=True, exist_ok=True)
    for i, img in enumerate(frames.images):
        write_pgm(d / f"frame_{i:05d}.pgm", img)
    write_csv(d / "frame_times.csv", ["index", "t"], np.column_stack([np.arange(len(frames.t)), frames.t]))
    write_csv(d / "centers.csv", ["index", "t", "x", "y"],
              np.column_stack([np.arange(len(frames.t)), frames.t, frames.centers]))
    write_csv(d / "orientation.csv", ["t", "yaw"], np.column_stack([frames.orientation_t, frames.orientation]))
    return d


def read_frames(trial_dir):
    d = Path(trial_dir)
    files = sorted(d.glob("frame_*.pgm"))
    if not files:
        raise FileNotFoundError(f"no frames in {d}")
    imgs = np.stack([read_pgm(f) for f in files])
    _, ft = read_csv(d / "frame_times.csv", ["index", "t"])
    _, ori = read_csv(d / "orientation.csv", ["t", "yaw"])
    centers = None
    if (d / "centers.csv").exists():
        _, c = read_csv(d / "centers.csv", ["index", "t", "x", "y"])
        centers = c[:, 2:4]
    return FrameSeq(ft[:, 1], imgs, centers, ori[:, 0], ori[:, 1])


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path
