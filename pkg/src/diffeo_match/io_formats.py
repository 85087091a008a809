"""Run configuration and file formats: config text, PGM images, raw grids.

Config files are flat ``key = value`` lines with ``#`` comments; unknown keys
are errors.  Raw grid files carry a single-line JSON header followed by
packed little-endian float32 in row-major node order (vector values
interleaved per node).  PGM covers 8- and 16-bit P5, scaled to [0, 1].
"""

import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import ConfigError
from .kernels import KernelSpec
from .relax import MatchConfig
from .shoot import ShootConfig

_SOLVERS = ("relax", "shoot", "landmarks")

# key -> (type, default)
_SCHEMA = {
    "solver": (str, "relax"),
    "seed": (int, 0),
    "dim": (int, 2),
    "kernel_kind": (str, "gaussian"),
    "kernel_width": (float, 0.125),
    "kernel_alpha": (float, 0.05),
    "kernel_order": (int, 3),
    "sigma2": (float, 1e-2),
    "n_time": (int, 16),
    "max_iters": (int, 200),
    "step0": (float, 1.0),
    "armijo_c": (float, 1e-4),
    "tol_grad": (float, 1e-6),
    "n_steps": (int, 64),
    "filter_frac": (float, 1.0 / 3.0),
    "p0_basis": (int, 8),
    "pre_smooth": (float, 0.0),
}


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        merged = {k: v for k, (_, v) in _SCHEMA.items()}
        merged.update(self.values)
        self.values = merged
        if self.values["solver"] not in _SOLVERS:
            raise ConfigError(f"solver must be one of {_SOLVERS}")
        if not self.values["sigma2"] > 0:
            raise ConfigError("sigma2 must be > 0")
        # constructing the typed sub-configs runs their validation
        self.kernel_spec()
        self.match_config()
        self.shoot_config()

    def __getitem__(self, key):
        return self.values[key]

    def kernel_spec(self):
        return KernelSpec(
            kind=self.values["kernel_kind"],
            dim=self.values["dim"],
            width=self.values["kernel_width"],
            alpha=self.values["kernel_alpha"],
            order=self.values["kernel_order"],
        )

    def match_config(self):
        return MatchConfig(
            sigma2=self.values["sigma2"],
            n_time=self.values["n_time"],
            max_iters=self.values["max_iters"],
            step0=self.values["step0"],
            armijo_c=self.values["armijo_c"],
            tol_grad=self.values["tol_grad"],
        )

    def shoot_config(self):
        return ShootConfig(
            sigma2=self.values["sigma2"],
            n_steps=self.values["n_steps"],
            filter_frac=self.values["filter_frac"],
            p0_basis=self.values["p0_basis"],
            max_iters=self.values["max_iters"],
            step0=self.values["step0"],
            armijo_c=self.values["armijo_c"],
        )


def parse_config(path):
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key not in _SCHEMA:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            typ, _ = _SCHEMA[key]
            try:
                values[key] = typ(val)
            except ValueError as exc:
                raise ConfigError(
                    f"{path}:{lineno}: cannot parse {key} value {val!r}"
                ) from exc
    return RunConfig(values)


def serialize_config(cfg: RunConfig):
    lines = []
    for key in _SCHEMA:
        v = cfg.values[key]
        if isinstance(v, float):
            lines.append(f"{key} = {v!r}")
        else:
            lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"


def atomic_write_bytes(path, payload):
    """Write via a same-directory temp file and rename; no partial files."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text):
    atomic_write_bytes(path, text.encode("utf-8"))


def write_raw_grid(path, values, spacing, vector=None):
    """values: scalar (*dims) or vector (arity, *dims) float field.

    vector=None infers the layout: a leading axis of length <= 3 in front of
    grid axes (always >= 8 samples) is treated as the component axis.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 0:
        raise ValueError("scalar payload is not a grid")
    if vector is None:
        vector = (
            values.ndim >= 2
            and values.shape[0] <= 3
            and min(values.shape[1:]) >= 8
        )
    if vector:
        arity = values.shape[0]
        dims = values.shape[1:]
        node_major = np.moveaxis(values, 0, -1)
    else:
        arity = 1
        dims = values.shape
        node_major = values
    header = json.dumps(
        {"dims": list(dims), "spacing": spacing, "arity": arity,
         "endian": "little"}
    )
    payload = header.encode("ascii") + b"\n"
    payload += node_major.astype("<f4").tobytes(order="C")
    atomic_write_bytes(path, payload)


def read_raw_grid(path):
    """Returns (values, spacing); vector grids come back as (arity, *dims)."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        data = fh.read()
    try:
        header = json.loads(header_line.decode("ascii"))
        dims = tuple(int(n) for n in header["dims"])
        arity = int(header["arity"])
        spacing = float(header["spacing"])
        endian = header["endian"]
    except (ValueError, KeyError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{path}: malformed raw grid header") from exc
    if endian != "little":
        raise ConfigError(f"{path}: unsupported endianness tag {endian!r}")
    count = int(np.prod(dims)) * arity
    if len(data) != 4 * count:
        raise ConfigError(
            f"{path}: payload length {len(data)} != expected {4 * count}"
        )
    flat = np.frombuffer(data, dtype="<f4").astype(np.float64)
    node_major = flat.reshape(dims + (arity,))
    if arity == 1:
        return node_major[..., 0], spacing
    return np.moveaxis(node_major, -1, 0), spacing


def _read_pgm_token(fh):
    token = b""
    while True:
        ch = fh.read(1)
        if not ch:
            raise ConfigError("truncated PGM header")
        if ch == b"#":
            while ch not in (b"\n", b""):
                ch = fh.read(1)
            continue
        if ch.isspace():
            if token:
                return token
            continue
        token += ch


def read_pgm(path):
    """8- or 16-bit binary PGM mapped to floats in [0, 1]."""
    with open(path, "rb") as fh:
        magic = _read_pgm_token(fh)
        if magic != b"P5":
            raise ConfigError(f"{path}: not a binary PGM (magic {magic!r})")
        width = int(_read_pgm_token(fh))
        height = int(_read_pgm_token(fh))
        maxval = int(_read_pgm_token(fh))
        if width <= 0 or height <= 0 or width * height > 10**9:
            raise ConfigError(f"{path}: bad dimensions {width}x{height}")
        if not 0 < maxval < 65536:
            raise ConfigError(f"{path}: bad maxval {maxval}")
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        count = width * height
        data = fh.read(count * dtype.itemsize)
    if len(data) != count * dtype.itemsize:
        raise ConfigError(f"{path}: truncated PGM payload")
    img = np.frombuffer(data, dtype=dtype).reshape(height, width)
    return img.astype(np.float64) / maxval


def write_pgm(path, img, maxval=255):
    img = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    if img.ndim != 2:
        raise ValueError("PGM output requires a 2-d image")
    quant = np.round(img * maxval)
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n{maxval}\n".encode("ascii")
    atomic_write_bytes(path, header + quant.astype(dtype).tobytes(order="C"))


def write_csv(path, header_cols, rows):
    lines = [",".join(header_cols)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, float):
                cells.append(f"{v:.17g}")
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_points_csv(path):
    """Landmark lists: 'id,x,y[,z]' with an optional header line."""
    ids = []
    pts = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            cells = [c.strip() for c in line.split(",")]
            if lineno == 1 and not _is_number(cells[-1]):
                continue  # header
            if len(cells) not in (3, 4):
                raise ConfigError(f"{path}:{lineno}: expected id,x,y[,z]")
            ids.append(cells[0])
            try:
                pts.append([float(c) for c in cells[1:]])
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad coordinate") from exc
    if not pts:
        raise ConfigError(f"{path}: no points found")
    arr = np.array(pts)
    if not np.all([len(p) == len(pts[0]) for p in pts]):
        raise ConfigError(f"{path}: inconsistent point dimensions")
    return ids, arr


def _is_number(s):
    try:
        float(s)
        return True
    except ValueError:
        return False
