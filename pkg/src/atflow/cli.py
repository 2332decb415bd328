"""Command-line front door: PGM images in, PGM fields and CSV diagnostics out.

Usage:

    atflow --input g.pgm --output-dir out --epsilon 0.05 --eta 1e-4 \
           --dt 1e-4 --t-end 0.5 --backend fd
    atflow synth --kind two-region --width 64 --height 64 --out g.pgm

The run command evolves the flow from u0 = g, z0 = 1 (or a z0 image) and
writes u.pgm, z.pgm and diagnostics.csv into the output directory.

Exit codes: 0 success, 2 configuration or parse error, 3 numerical
divergence, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from .energy import ATParams
from .fields import Grid, ScalarField2D
from .flow import DivergedError, SolverError, TrajectoryRecord, run_flow
from .galerkin import CoeffVector, build_basis, integrate_galerkin, project, stable_dt


class PgmError(ValueError):
    """Anything wrong with a PGM file.  offset is a byte position when known."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class PgmFormatError(PgmError):
    """Not a PGM we support (bad magic number)."""


class PgmParseError(PgmError):
    """Structurally broken PGM (header, maxval, or pixel data)."""


_WS = b" \t\n\r\x0b\x0c"


def _next_token(data: bytes, pos: int) -> tuple[bytes, int, int]:
    """Next whitespace-delimited header token, skipping # comments.

    Returns (token, token_start, position_after_token).
    """
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c in _WS:
            pos += 1
        elif c == b"#":
            while pos < n and data[pos : pos + 1] != b"\n":
                pos += 1
        else:
            break
    if pos >= n:
        raise PgmParseError("unexpected end of file in header", offset=pos)
    start = pos
    while pos < n and data[pos : pos + 1] not in _WS:
        pos += 1
    return data[start:pos], start, pos


def _next_int(data: bytes, pos: int, what: str, minimum: int = 1) -> tuple[int, int]:
    tok, start, pos = _next_token(data, pos)
    try:
        value = int(tok)
    except ValueError:
        raise PgmParseError(f"expected integer {what}, got {tok!r}", offset=start) from None
    if value < minimum:
        raise PgmParseError(f"{what} must be >= {minimum}, got {value}", offset=start)
    return value, pos


def load_pgm(path) -> ScalarField2D:
    """Read a P2 (ASCII) or P5 (binary) PGM as a field with values in [0, 1].

    The image spans the rectangle [0, 1] x [0, ny/nx]; pixel (column ix,
    row iy) becomes node values[ix, iy], so the y axis runs down the image.
    Raises PgmFormatError / PgmParseError on malformed files, OSError on
    unreadable ones.
    """
    with open(path, "rb") as fh:
        data = fh.read()

    magic, start, pos = _next_token(data, 0)
    if magic not in (b"P2", b"P5"):
        raise PgmFormatError(f"unsupported magic {magic!r}, want P2 or P5", offset=start)
    width, pos = _next_int(data, pos, "width")
    height, pos = _next_int(data, pos, "height")
    maxval, pos = _next_int(data, pos, "maxval")
    if maxval > 65535:
        raise PgmParseError(f"maxval {maxval} exceeds 65535", offset=pos)

    count = width * height
    if magic == b"P5":
        # exactly one whitespace byte separates maxval from the raster
        if pos >= len(data) or data[pos : pos + 1] not in _WS:
            raise PgmParseError("missing whitespace before binary raster", offset=pos)
        pos += 1
        itemsize = 2 if maxval > 255 else 1
        need = count * itemsize
        raster = data[pos : pos + need]
        if len(raster) < need:
            raise PgmParseError(
                f"truncated raster: need {need} bytes, have {len(raster)}", offset=len(data)
            )
        dtype = ">u2" if itemsize == 2 else np.uint8
        pixels = np.frombuffer(raster, dtype=dtype).astype(np.float64)
    else:
        pixels = np.empty(count)
        for i in range(count):
            value, pos = _next_int(data, pos, f"pixel {i}", minimum=0)
            pixels[i] = value
    if np.any(pixels > maxval):
        bad = int(np.argmax(pixels > maxval))
        raise PgmParseError(f"pixel {bad} exceeds maxval {maxval}", offset=None)

    img = pixels.reshape(height, width) / float(maxval)
    grid = Grid(nx=width, ny=height, lx=1.0, ly=height / width)
    return ScalarField2D(grid, img.T.copy())


def save_pgm(f: ScalarField2D, path, clip_range: tuple[float, float] = (0.0, 1.0)) -> None:
    """Write the field as an 8-bit binary PGM, clamped to clip_range.

    Quantization maps clip_range linearly onto 0..255 with numpy's
    round-half-to-even.
    """
    lo, hi = clip_range
    if not hi > lo:
        raise ValueError(f"clip range must be increasing, got {clip_range}")
    scaled = (np.clip(f.values, lo, hi) - lo) / (hi - lo)
    img = np.rint(scaled.T * 255.0).astype(np.uint8)
    header = f"P5\n{f.grid.nx} {f.grid.ny}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(img).tobytes())


CSV_COLUMNS = (
    "t",
    "energy",
    "energy_identity_residual",
    "f0_norm",
    "f1_norm",
    "u_l2",
    "u_h1",
    "u_h2",
    "u_gradl4_4",
    "z_l2",
    "z_h1",
    "z_h2",
    "z_gradl4_4",
    "dt_u_l2",
    "dt_z_l2",
)


def write_diagnostics_csv(path, traj: TrajectoryRecord) -> None:
    """RFC-4180 CSV, one row per recorded instant, 17 significant digits."""

    def fmt(v: float) -> str:
        return format(v, ".17g")

    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(CSV_COLUMNS)
        for r in traj.diagnostics:
            writer.writerow(
                fmt(v)
                for v in (
                    r.t,
                    r.energy,
                    r.energy_identity_residual,
                    r.f0_norm,
                    r.f1_norm,
                    r.u_ladder.l2,
                    r.u_ladder.h1_semi,
                    r.u_ladder.h2_semi,
                    r.u_ladder.l4_grad4,
                    r.z_ladder.l2,
                    r.z_ladder.h1_semi,
                    r.z_ladder.h2_semi,
                    r.z_ladder.l4_grad4,
                    r.dt_u_l2,
                    r.dt_z_l2,
                )
            )


@dataclass
class RunConfig:
    """Everything one run needs; built from the CLI flags or constructed directly.

    grid_override has no flag: it is for embedding callers that want g
    resampled onto a different node count before the run.
    """

    input_path: str
    output_dir: str = "."
    epsilon: float = 0.05
    eta: float = 1e-4
    dt: float | None = None
    t_end: float = 0.5
    backend: str = "fd"
    n_modes: int = 16
    snapshot_stride: int = 0
    z0_mode: str = "ones"
    grid_override: tuple[int, int] | None = None

    def validate(self) -> None:
        if self.backend not in ("galerkin", "fd"):
            raise ValueError(f"unknown backend {self.backend!r}")
        for name in ("epsilon", "eta", "t_end"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"--{name.replace('_', '-')} must be positive")
        if self.dt is not None and not self.dt > 0.0:
            raise ValueError("--dt must be positive")
        if self.backend == "fd" and self.dt is None:
            raise ValueError("backend fd needs an explicit --dt")
        if self.backend == "galerkin" and self.n_modes < 1:
            raise ValueError("--modes must be >= 1 for the galerkin backend")
        if self.snapshot_stride < 0:
            raise ValueError("--snapshot-stride must be >= 0")


def resample(f: ScalarField2D, nx: int, ny: int) -> ScalarField2D:
    """Bilinear resampling onto an (nx, ny) grid over the same rectangle."""
    grid = Grid(nx=nx, ny=ny, lx=f.grid.lx, ly=f.grid.ly)
    xs = np.linspace(0.0, f.grid.nx - 1.0, nx)
    ys = np.linspace(0.0, f.grid.ny - 1.0, ny)
    ix = np.minimum(xs.astype(int), f.grid.nx - 2)
    iy = np.minimum(ys.astype(int), f.grid.ny - 2)
    fx = xs - ix
    fy = ys - iy
    v = f.values
    out = (
        np.outer(1 - fx, 1 - fy) * v[np.ix_(ix, iy)]
        + np.outer(fx, 1 - fy) * v[np.ix_(ix + 1, iy)]
        + np.outer(1 - fx, fy) * v[np.ix_(ix, iy + 1)]
        + np.outer(fx, fy) * v[np.ix_(ix + 1, iy + 1)]
    )
    return ScalarField2D(grid, out)


def run_from_config(cfg: RunConfig) -> TrajectoryRecord:
    """Load inputs, run the configured backend, return the trajectory."""
    cfg.validate()
    g = load_pgm(cfg.input_path)
    if cfg.grid_override is not None:
        g = resample(g, *cfg.grid_override)
    grid = g.grid

    if cfg.z0_mode == "ones":
        z0 = ScalarField2D.constant(grid, 1.0)
    else:
        z0 = load_pgm(cfg.z0_mode)
        if cfg.grid_override is not None:
            z0 = resample(z0, *cfg.grid_override)
        if z0.grid != grid:
            raise ValueError(
                f"--z0 image grid {z0.grid.shape} does not match input {grid.shape}"
            )

    p = ATParams(epsilon=cfg.epsilon, eta=cfg.eta)
    if cfg.backend == "fd":
        return run_flow(
            g.copy(), z0, g, p, cfg.dt, cfg.t_end, snapshot_stride=cfg.snapshot_stride
        )
    basis = build_basis(grid, cfg.n_modes)
    g_coeffs = project(g, basis)
    c0 = CoeffVector(g_coeffs.copy(), project(z0, basis))
    dt = cfg.dt if cfg.dt is not None else stable_dt(basis, p)
    return integrate_galerkin(
        c0, basis, g_coeffs, p, dt=dt, t_end=cfg.t_end, snapshot_stride=cfg.snapshot_stride
    )


def _build_run_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="atflow",
        description="Gradient flow of the Ambrosio-Tortorelli functional on a PGM image.",
    )
    ap.add_argument("--input", required=True, help="datum image g, PGM P2/P5")
    ap.add_argument("--output-dir", default=".", help="where u.pgm, z.pgm, diagnostics.csv go")
    ap.add_argument("--epsilon", type=float, default=0.05, help="phase-field width (default 0.05)")
    ap.add_argument("--eta", type=float, default=1e-4, help="diffusion floor (default 1e-4)")
    ap.add_argument(
        "--dt",
        type=float,
        default=None,
        help="time step; required for fd, defaults to the stability bound for galerkin",
    )
    ap.add_argument("--t-end", type=float, default=0.5, help="final time (default 0.5)")
    ap.add_argument("--backend", choices=("galerkin", "fd"), default="fd")
    ap.add_argument("--modes", type=int, default=16, help="galerkin basis size (default 16)")
    ap.add_argument(
        "--snapshot-stride",
        type=int,
        default=0,
        help="store (u, z) every N steps; 0 keeps only the first and last",
    )
    ap.add_argument(
        "--z0",
        default="ones",
        help="'ones' (default) or a PGM path for the initial phase field",
    )
    return ap


def _build_synth_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="atflow synth", description="Generate synthetic datum images."
    )
    ap.add_argument("--kind", choices=("two-region", "smooth"), required=True)
    ap.add_argument("--width", type=int, default=64)
    ap.add_argument("--height", type=int, default=64)
    ap.add_argument("--out", required=True, help="output PGM path")
    ap.add_argument("--seed", type=int, default=0, help="RNG seed for --kind smooth")
    return ap


def synth_image(kind: str, width: int, height: int, seed: int = 0) -> ScalarField2D:
    """Synthetic data:  two-region = left half 0 / right half 1 step;
    smooth = seeded random low-mode cosine blend into [0.1, 0.9]."""
    grid = Grid(nx=width, ny=height, lx=1.0, ly=height / width)
    if kind == "two-region":
        vals = np.zeros(grid.shape)
        vals[grid.nx // 2 :, :] = 1.0
        return ScalarField2D(grid, vals)
    if kind == "smooth":
        rng = np.random.default_rng(seed)
        x, y = grid.meshgrid()
        vals = np.zeros(grid.shape)
        for k in range(4):
            for l in range(4):
                amp = rng.normal() / (1.0 + k * k + l * l)
                vals += amp * np.cos(k * math.pi * x / grid.lx) * np.cos(
                    l * math.pi * y / grid.ly
                )
        lo, hi = float(vals.min()), float(vals.max())
        span = hi - lo if hi > lo else 1.0
        return ScalarField2D(grid, 0.1 + 0.8 * (vals - lo) / span)
    raise ValueError(f"unknown synthetic kind {kind!r}")


def _run_synth(ns: argparse.Namespace) -> int:
    field = synth_image(ns.kind, ns.width, ns.height, seed=ns.seed)
    save_pgm(field, ns.out)
    return 0


def _run_flow_cmd(ns: argparse.Namespace) -> int:
    cfg = RunConfig(
        input_path=ns.input,
        output_dir=ns.output_dir,
        epsilon=ns.epsilon,
        eta=ns.eta,
        dt=ns.dt,
        t_end=ns.t_end,
        backend=ns.backend,
        n_modes=ns.modes,
        snapshot_stride=ns.snapshot_stride,
        z0_mode=ns.z0,
    )
    traj = run_from_config(cfg)
    os.makedirs(cfg.output_dir, exist_ok=True)
    u, z = traj.final_state()
    save_pgm(u, os.path.join(cfg.output_dir, "u.pgm"))
    save_pgm(z, os.path.join(cfg.output_dir, "z.pgm"))
    write_diagnostics_csv(os.path.join(cfg.output_dir, "diagnostics.csv"), traj)
    return 0


def main(argv=None) -> int:
    """Entry point; returns the exit code instead of raising SystemExit."""
    if argv is None:
        argv = sys.argv[1:]
    argv = list(argv)
    synth = argv[:1] == ["synth"]
    try:
        if synth:
            ns = _build_synth_parser().parse_args(argv[1:])
        else:
            ns = _build_run_parser().parse_args(argv)
    except SystemExit as e:  # argparse already printed the message
        return int(e.code) if e.code else 0

    try:
        return _run_synth(ns) if synth else _run_flow_cmd(ns)
    except (DivergedError, SolverError) as e:
        print(f"atflow: diverged: {e}", file=sys.stderr)
        return 3
    except PgmError as e:
        print(f"atflow: bad image: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"atflow: bad configuration: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"atflow: i/o error: {e}", file=sys.stderr)
        return 4


def console_main() -> None:
    sys.exit(main())
