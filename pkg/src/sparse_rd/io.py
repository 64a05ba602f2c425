"""Run configuration, result files and manifests.

Configs are flat ``key = value`` text with ``#`` comments.  Every output
file is written atomically (temp file + rename) and listed with its SHA-256
in a plain-text ``manifest.txt``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
import time
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from . import __version__
from .core import DistributionSpec, discrete, gaussian, gaussian_family, laplace, uniform

__all__ = [
    "OUTPUT_ROOT_ENV",
    "ExperimentConfig",
    "ResultManifest",
    "parse_distribution",
    "format_distribution",
    "atomic_write_text",
    "csv_text",
    "json_text",
    "write_manifest",
    "read_manifest",
    "verify_manifest",
    "resolve_output_dir",
]

OUTPUT_ROOT_ENV = "SPARSE_RD_OUTPUT_ROOT"
MANIFEST_NAME = "manifest.txt"


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def parse_distribution(text: str) -> DistributionSpec:
    """Parse ``kind:params``.

    Recognized forms: ``gaussian:MEAN,VAR``, ``family:MU`` (``N(mu, 1-mu^2)``),
    ``discrete:A1,A2,...[;W1,W2,...]``, ``uniform:LO,HI`` and
    ``laplace:LOC,SCALE``.
    """
    kind, _, params = text.strip().partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "gaussian":
            mean, var = _floats(params)
            return gaussian(mean, var)
        if kind == "family":
            (mu,) = _floats(params)
            return gaussian_family(mu)
        if kind == "discrete":
            atoms, _, weights = params.partition(";")
            return discrete(_floats(atoms), _floats(weights) if weights.strip() else None)
        if kind == "uniform":
            lo, hi = _floats(params)
            return uniform(lo, hi)
        if kind == "laplace":
            loc, scale = _floats(params)
            return laplace(loc, scale)
    except ValueError as exc:
        raise ValueError(f"bad distribution {text!r}: {exc}") from None
    raise ValueError(f"unknown distribution kind in {text!r}")


def format_distribution(f: DistributionSpec) -> str:
    return f.label


@dataclass
class ExperimentConfig:
    omega: Optional[float] = None
    alpha: Optional[float] = None
    rho: Optional[float] = None
    n: Optional[int] = None
    trials: Optional[int] = None
    seed: Optional[int] = None
    distribution: Optional[str] = None
    basis_kind: Optional[str] = None
    output_path: Optional[str] = None

    _FLOATS = ("omega", "alpha", "rho")
    _INTS = ("n", "trials", "seed")

    def validate(self) -> "ExperimentConfig":
        if self.omega is not None and not 0 < self.omega < 1:
            raise ValueError(f"omega must lie in (0, 1), got {self.omega}")
        if self.alpha is not None and not 0 <= self.alpha <= 1:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.rho is not None and not (0 <= self.rho and math.isfinite(self.rho)):
            raise ValueError(f"rho must be a nonnegative number, got {self.rho}")
        if self.n is not None and self.n < 1:
            raise ValueError("n must be positive")
        if self.trials is not None and self.trials < 1:
            raise ValueError("trials must be positive")
        if self.seed is not None and not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.basis_kind is not None and self.basis_kind not in ("haar", "identity"):
            raise ValueError("basis_kind must be 'haar' or 'identity'")
        if self.distribution is not None:
            parse_distribution(self.distribution)
        return self

    def to_text(self) -> str:
        lines = []
        for fld in fields(self):
            v = getattr(self, fld.name)
            if v is None:
                continue
            lines.append(f"{fld.name} = {v!r}" if fld.name in self._FLOATS else f"{fld.name} = {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or key not in known:
                raise ValueError(f"config line {lineno}: cannot parse {raw!r}")
            if key in cls._FLOATS:
                values[key] = float(value)
            elif key in cls._INTS:
                values[key] = int(value)
            else:
                values[key] = value
        return cls(**values).validate()

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_text(Path(path).read_text())

    def merged(self, **overrides) -> "ExperimentConfig":
        vals = {f.name: getattr(self, f.name) for f in fields(self)}
        vals.update({k: v for k, v in overrides.items() if v is not None})
        return ExperimentConfig(**vals).validate()

    def run_id(self, command: str) -> str:
        digest = hashlib.sha256(f"{command}\n{self.to_text()}".encode()).hexdigest()
        return digest[:12]


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _timestamp() -> str:
    # SOURCE_DATE_EPOCH pins the stamp for byte-reproducible runs
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


@dataclass
class ResultManifest:
    run_id: str
    timestamp: str
    config: ExperimentConfig
    files: dict  # name -> sha256
    version: str = __version__

    def to_text(self) -> str:
        lines = [
            f"run_id: {self.run_id}",
            f"timestamp: {self.timestamp}",
            f"version: {self.version}",
        ]
        lines += [f"config: {line}" for line in self.config.to_text().splitlines()]
        lines += [f"file: {digest}  {name}" for name, digest in sorted(self.files.items())]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ResultManifest":
        head, cfg, files = {}, [], {}
        for line in text.splitlines():
            key, _, value = line.partition(": ")
            if key == "config":
                cfg.append(value)
            elif key == "file":
                digest, _, name = value.partition("  ")
                files[name] = digest
            else:
                head[key] = value
        return cls(head["run_id"], head["timestamp"], ExperimentConfig.from_text("\n".join(cfg)), files,
                   head["version"])


def write_manifest(out_dir, run_id: str, config: ExperimentConfig, names) -> ResultManifest:
    out_dir = Path(out_dir)
    files = {name: _sha256(out_dir / name) for name in names}
    manifest = ResultManifest(run_id, _timestamp(), config, files)
    atomic_write_text(out_dir / MANIFEST_NAME, manifest.to_text())
    return manifest


def read_manifest(out_dir) -> ResultManifest:
    return ResultManifest.from_text((Path(out_dir) / MANIFEST_NAME).read_text())


def verify_manifest(out_dir) -> bool:
    out_dir = Path(out_dir)
    manifest = read_manifest(out_dir)
    return all((out_dir / n).is_file() and _sha256(out_dir / n) == d for n, d in manifest.files.items())


def resolve_output_dir(out: Optional[str], default_name: str) -> Path:
    """Relative paths (and the default) resolve under ``$SPARSE_RD_OUTPUT_ROOT``."""
    root = Path(os.environ.get(OUTPUT_ROOT_ENV) or ".")
    return root / (out or default_name)
