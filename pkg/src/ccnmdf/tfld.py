"""TFLD v1 tensor-field text format and block extraction.

Format::

    TFLD 1
    dims X Y Z n
    voxel x y z a11 a12 ... ann

One ``voxel`` line per present voxel with the upper triangle in row-major
order. Missing voxels are masked out, as are voxels that fail the positive
definiteness test. Blank lines and lines starting with ``#`` are skipped.
"""

from dataclasses import dataclass

import numpy as np

from . import symlinalg as sl
from .errors import InvalidInput, ParseError, VersionError
from .manifolds import SPD, Power

MAGIC = "TFLD"
VERSION = "1"


@dataclass(eq=False)
class TensorField:
    """Grid of symmetric matrices indexed ``[x, y, z]``; ``mask`` marks valid voxels."""

    voxels: np.ndarray
    mask: np.ndarray

    @property
    def dims(self):
        return tuple(self.voxels.shape[:3])

    @property
    def n(self):
        return self.voxels.shape[-1]

    @classmethod
    def from_array(cls, voxels, mask=None):
        voxels = np.asarray(voxels, dtype=float)
        if voxels.ndim != 5 or voxels.shape[-1] != voxels.shape[-2]:
            raise InvalidInput(f"expected an (X, Y, Z, n, n) array, got {voxels.shape}")
        valid = sl.is_pd(voxels)
        mask = valid if mask is None else np.asarray(mask, dtype=bool) & valid
        return cls(voxels, mask)

    def __eq__(self, other):
        if not isinstance(other, TensorField):
            return NotImplemented
        return (
            self.voxels.shape == other.voxels.shape
            and np.array_equal(self.mask, other.mask)
            and np.array_equal(self.voxels[self.mask], other.voxels[other.mask])
        )


def parse_tfld(stream):
    lines = iter(enumerate(stream, start=1))

    def next_line():
        for lineno, raw in lines:
            text = raw.strip()
            if text and not text.startswith("#"):
                return lineno, text.split()
        return None, None

    lineno, tok = next_line()
    if tok is None or tok[0] != MAGIC:
        raise ParseError(lineno or 1, "missing TFLD header")
    if len(tok) != 2 or tok[1] != VERSION:
        raise VersionError(f"unsupported TFLD version {' '.join(tok[1:])!r}")
    lineno, tok = next_line()
    if tok is None or tok[0] != "dims" or len(tok) != 5:
        raise ParseError(lineno or 2, "expected 'dims X Y Z n'")
    try:
        nx, ny, nz, n = (int(t) for t in tok[1:])
    except ValueError:
        raise ParseError(lineno, "dims must be integers") from None
    if min(nx, ny, nz, n) < 1:
        raise ParseError(lineno, "dims must be positive")
    width = n * (n + 1) // 2
    packed = np.zeros((nx, ny, nz, width))
    present = np.zeros((nx, ny, nz), dtype=bool)
    while True:
        lineno, tok = next_line()
        if tok is None:
            break
        if tok[0] != "voxel":
            raise ParseError(lineno, f"unexpected record {tok[0]!r}")
        if len(tok) != 4 + width:
            raise ParseError(lineno, f"expected {width} matrix entries, got {len(tok) - 4}")
        try:
            x, y, z = (int(t) for t in tok[1:4])
            vals = [float(t) for t in tok[4:]]
        except ValueError as exc:
            raise ParseError(lineno, str(exc)) from None
        if not (0 <= x < nx and 0 <= y < ny and 0 <= z < nz):
            raise ParseError(lineno, f"voxel ({x}, {y}, {z}) outside the grid")
        if present[x, y, z]:
            raise ParseError(lineno, f"duplicate voxel ({x}, {y}, {z})")
        present[x, y, z] = True
        packed[x, y, z] = vals
    voxels = sl.unpack_upper(packed, n)
    return TensorField.from_array(voxels, present)


def write_tfld(field, stream):
    nx, ny, nz = field.dims
    stream.write(f"{MAGIC} {VERSION}\n")
    stream.write(f"dims {nx} {ny} {nz} {field.n}\n")
    packed = sl.pack_upper(field.voxels)
    for x, y, z in zip(*np.nonzero(field.mask)):
        vals = " ".join(f"{v:.17g}" for v in packed[x, y, z])
        stream.write(f"voxel {x} {y} {z} {vals}\n")


def read_tfld(path):
    with open(path, encoding="utf-8") as fh:
        return parse_tfld(fh)


def save_tfld(field, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        write_tfld(field, fh)


@dataclass
class BlockDataset:
    """Unfolded voxel blocks, one power-manifold point per block."""

    block: tuple
    points: np.ndarray
    origins: np.ndarray
    n: int = 3

    @property
    def manifold(self):
        bx, by, bz = self.block
        return Power(SPD(self.n), bx * by * bz)


def extract_blocks(field, block=(4, 4, 4)):
    """Tile the grid into blocks anchored at multiples of ``block``.

    Blocks that touch a masked-out voxel or stick out of the grid are
    dropped. Within a block the voxels are ordered x-major, then y, then z.
    """
    bx, by, bz = (int(b) for b in block)
    if min(bx, by, bz) < 1:
        raise InvalidInput("block dimensions must be positive")
    nx, ny, nz = field.dims
    points, origins = [], []
    for x0 in range(0, nx - bx + 1, bx):
        for y0 in range(0, ny - by + 1, by):
            for z0 in range(0, nz - bz + 1, bz):
                region = (slice(x0, x0 + bx), slice(y0, y0 + by), slice(z0, z0 + bz))
                if not field.mask[region].all():
                    continue
                points.append(field.voxels[region].reshape(bx * by * bz, field.n, field.n))
                origins.append((x0, y0, z0))
    pts = np.array(points) if points else np.zeros((0, bx * by * bz, field.n, field.n))
    return BlockDataset((bx, by, bz), pts, np.array(origins, dtype=int).reshape(-1, 3), field.n)


def example_path(name="synthetic_8x8x8.tfld"):
    """Path of a TFLD file bundled with the package."""
    from importlib import resources

    return resources.files("ccnmdf") / "data" / name
