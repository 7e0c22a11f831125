"""PNSF1 field dump format.

Layout: one ASCII header line ``PNSF1 N L time name`` terminated by a
newline, followed by N^3 raw 8-byte little-endian IEEE-754 doubles in
x-fastest row-major order (x index varies fastest, then y, then z).
"""

import numpy as np

from .errors import InvalidArgumentError
from .grid import PHYSICAL, ScalarField, SpectralGrid, as_physical

MAGIC = "PNSF1"


def write_field(path, field, time, name):
    """Dump a scalar field's physical samples to ``path``."""
    if " " in name or not name:
        raise InvalidArgumentError(f"field name must be nonempty and space-free: {name!r}")
    phys = as_physical(field)
    g = phys.grid
    header = f"{MAGIC} {g.n_modes} {repr(float(g.box_length))} {repr(float(time))} {name}\n"
    # values are indexed [ix, iy, iz]; x-fastest means iz slowest in file order
    payload = np.ascontiguousarray(
        phys.values.transpose(2, 1, 0), dtype="<f8"
    ).tobytes()
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(payload)


def read_field(path):
    """Read a PNSF1 dump; returns (ScalarField, time, name)."""
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").rstrip("\n")
        parts = header.split(" ")
        if len(parts) != 5 or parts[0] != MAGIC:
            raise InvalidArgumentError(f"not a {MAGIC} file: header {header!r}")
        n = int(parts[1])
        box_length = float(parts[2])
        time = float(parts[3])
        name = parts[4]
        raw = fh.read(8 * n**3)
        if len(raw) != 8 * n**3:
            raise InvalidArgumentError(
                f"truncated payload: expected {8 * n**3} bytes, got {len(raw)}"
            )
    flat = np.frombuffer(raw, dtype="<f8")
    values = flat.reshape(n, n, n).transpose(2, 1, 0).copy()
    grid = SpectralGrid(n, box_length)
    return ScalarField(grid, values, PHYSICAL), time, name
