"""Readers for the solver's CSV trajectory files and coordinate sidecars.

These parse the files by header name only; no solver quantities are ever
recomputed here.
"""

from __future__ import annotations

from pathlib import Path


class InputError(ValueError):
    """An input file is missing, malformed, or lacks a required column."""


def _read_rows(path: Path) -> tuple[list[str], list[list[str]]]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise InputError(f"{path}: empty file")
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]


def _column(path: Path, header: list[str], rows: list[list[str]], name: str) -> list[float | None]:
    try:
        idx = header.index(name)
    except ValueError:
        raise InputError(f"{path}: no column named {name!r}") from None
    out: list[float | None] = []
    for row in rows:
        if len(row) != len(header):
            raise InputError(f"{path}: malformed row {','.join(row)!r}")
        cell = row[idx]
        out.append(None if cell == "" else float(cell))
    return out


def read_decay(path) -> tuple[list[float], list[float]]:
    """Return (k, grad_norm_sq) pairs from a trajectory CSV."""
    path = Path(path)
    header, rows = _read_rows(path)
    ks = _column(path, header, rows, "k")
    gs = _column(path, header, rows, "grad_norm_sq")
    if any(v is None for v in ks) or any(v is None for v in gs):
        raise InputError(f"{path}: empty cells in the k or grad_norm_sq columns")
    return [float(v) for v in ks], [float(v) for v in gs]


def coords_sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".coords.csv")


def read_coords(csv_path) -> tuple[list[float], list[float], list[float], list[float]]:
    """Return (x, y, xbar, ybar) lists from the 2-D coordinate sidecar."""
    sidecar = coords_sidecar_path(csv_path)
    if not sidecar.exists():
        raise InputError(
            f"{sidecar}: coordinate sidecar not found; it is only written for "
            "problems with one-dimensional blocks"
        )
    header, rows = _read_rows(sidecar)
    cols = [_column(sidecar, header, rows, name) for name in ("x", "y", "xbar", "ybar")]
    if any(v is None for col in cols for v in col):
        raise InputError(f"{sidecar}: empty coordinate cells")
    return tuple([float(v) for v in col] for col in cols)  # type: ignore[return-value]
