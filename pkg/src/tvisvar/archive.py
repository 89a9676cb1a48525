"""On-disk archive: one ``.npy`` file per state block plus ``manifest.json``.

Every block is stored little-endian: floating blocks as ``<f8`` and integer
blocks (regime path, pattern indicators, mixture indicators) as ``<i8``. A
block with per-draw shape ``b`` therefore takes ``8 * D * prod(b)`` bytes
plus a ``.npy`` header of at most ``NPY_HEADER_BOUND`` bytes; see
:func:`archive_size_bound`.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .config import ModelConfig
from .gibbs import ARCHIVE_FORMAT_VERSION, BLOCK_NAMES, PosteriorArchive

__all__ = [
    "ArchiveError",
    "ArchiveVersionError",
    "ArchiveTruncatedError",
    "write_archive",
    "read_archive",
    "archive_size_bound",
    "MANIFEST_NAME",
]

MANIFEST_NAME = "manifest.json"
NPY_HEADER_BOUND = 256
MANIFEST_BOUND = 64 * 1024


class ArchiveError(IOError):
    pass


class ArchiveVersionError(ArchiveError):
    """Manifest missing, unreadable or written by another format version."""


class ArchiveTruncatedError(ArchiveError):
    pass


def _disk_dtype(arr: np.ndarray) -> str:
    return "<i8" if np.issubdtype(arr.dtype, np.integer) else "<f8"


def write_archive(archive: PosteriorArchive, directory: str | Path) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    blocks = {}
    for name in BLOCK_NAMES:
        arr = np.asarray(archive.draws[name])
        dt = _disk_dtype(arr)
        np.save(d / f"{name}.npy", np.ascontiguousarray(arr.astype(dt, copy=False)), allow_pickle=False)
        blocks[name] = {"dtype": dt, "shape": list(arr.shape)}
    manifest = dict(archive.manifest)
    manifest["format_version"] = ARCHIVE_FORMAT_VERSION
    manifest["blocks"] = blocks
    manifest["config"] = archive.config.to_dict()
    manifest["pattern_names"] = list(archive.pattern_names)
    tmp = d / (MANIFEST_NAME + ".tmp")
    with open(tmp, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, d / MANIFEST_NAME)
    return d


def read_archive(directory: str | Path) -> PosteriorArchive:
    d = Path(directory)
    path = d / MANIFEST_NAME
    if not path.is_file():
        raise ArchiveVersionError(f"{path}: manifest not found")
    try:
        manifest = json.loads(path.read_text())
        version = manifest["format_version"]
    except (ValueError, KeyError, TypeError) as err:
        raise ArchiveVersionError(f"{path}: unreadable manifest ({err})") from None
    if version != ARCHIVE_FORMAT_VERSION:
        raise ArchiveVersionError(f"{path}: format version {version!r}, this reader supports {ARCHIVE_FORMAT_VERSION}")
    draws = {}
    for name in BLOCK_NAMES:
        meta = manifest.get("blocks", {}).get(name)
        f = d / f"{name}.npy"
        if meta is None or not f.is_file():
            raise ArchiveTruncatedError(f"{d}: block {name!r} is missing")
        try:
            arr = np.load(f, allow_pickle=False)
        except (ValueError, OSError, EOFError) as err:
            raise ArchiveTruncatedError(f"{f}: {err}") from None
        if list(arr.shape) != list(meta["shape"]) or arr.dtype.str != meta["dtype"]:
            raise ArchiveTruncatedError(f"{f}: expected {meta['dtype']} {meta['shape']}, found {arr.dtype.str} {list(arr.shape)}")
        draws[name] = arr.astype(np.int64 if arr.dtype.kind == "i" else np.float64, copy=False)
    n = manifest.get("n_draws")
    if n is not None and draws["A"].shape[0] != n:
        raise ArchiveTruncatedError(f"{d}: manifest lists {n} draws, blocks hold {draws['A'].shape[0]}")
    config = ModelConfig.from_dict(manifest["config"])
    names = manifest.get("pattern_names", [])
    core = {k: v for k, v in manifest.items() if k not in ("blocks", "config", "pattern_names")}
    return PosteriorArchive(draws=draws, manifest=core, config=config, pattern_names=names)


def archive_size_bound(archive: PosteriorArchive) -> int:
    """Upper bound in bytes on the directory written by :func:`write_archive`."""
    total = MANIFEST_BOUND
    for name in BLOCK_NAMES:
        total += 8 * int(np.asarray(archive.draws[name]).size) + NPY_HEADER_BOUND
    return total
