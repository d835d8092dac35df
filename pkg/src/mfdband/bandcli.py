"""End-to-end band-structure driver and command line interface.

Subcommands:
  bands <config.json>   full k-path sweep with CSV/SVG/manifest outputs
  eig                   eigenvalues at a single Bloch vector
  verify-order          convergence-order study against the uniform-medium
                        analytic spectrum
  exact                 the analytic spectrum itself

Exit codes: 0 success, 2 solver failure, 3 configuration error.
"""

import argparse
import concurrent.futures
import dataclasses
import json
import sys
import zlib
from dataclasses import dataclass

import numpy as np

from . import __version__
from .compensation import (MAX_GAMMA_DOUBLINGS, CompensatedOperator, EigResult,
                           default_shift, penalty_gamma, recompute_check)
from .dielectric import DielectricModel, assemble_M0, geometry_by_name
from .errors import ConfigError, InvalidParameterError, SolverFailureError
from .grid_fields import GridSpec, Space, write_field
from .lattice import KPath, make_lattice, sample_kpath, symmetry_points
from .lobpcg import SolverConfig, lobpcg_solve
from .precond_fft import build_symbols, solve_P_batch
from .precond_mg import build_hierarchy, distributive_solve
from .stencil_ops import ShiftedOperators

__all__ = [
    "RunConfig",
    "BandStructure",
    "KPointReport",
    "run_bandstructure",
    "solve_at_k",
    "gap_ratio",
    "exact_iso_eigs",
    "verify_order",
    "emit_outputs",
    "main",
]

_CONFIG_KEYS = {
    "lattice", "l", "geometry", "eps_in", "eps_out", "N", "order", "kpath",
    "samples_per_segment", "nev", "tol", "maxit", "precond", "seed", "m0_interface",
    "gamma", "shift", "mg_depth", "mg_smooth", "workers",
    "csv", "svg", "manifest", "dump_eigenvectors",
}


@dataclass
class RunConfig:
    lattice: str = "sc"
    l: float = 1.0
    geometry: str = "homogeneous"
    eps_in: float = 1.0
    eps_out: float = 1.0
    N: int = 16
    order: int = 2
    kpath: list | None = None          # labels and/or [label, [kx,ky,kz]]
    samples_per_segment: int = 10
    nev: int = 10
    tol: float = 1e-5
    maxit: int = 500
    precond: str = "fft"
    seed: int = 0
    m0_interface: str = "harmonic"
    gamma: float | None = None
    shift: float | None = None
    mg_depth: int | None = None
    mg_smooth: tuple = (2, 2)
    workers: int = 1
    csv: str | None = None
    svg: str | None = None
    manifest: str | None = None
    dump_eigenvectors: str | None = None

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        unknown = set(raw) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    def validate(self):
        if self.order not in (2, 4, 6, 8):
            raise ConfigError(f"order must be one of 2,4,6,8, got {self.order}")
        if self.precond not in ("fft", "mg"):
            raise ConfigError(f"precond must be 'fft' or 'mg', got {self.precond!r}")
        if self.nev < 1:
            raise ConfigError("nev must be >= 1")
        if self.N <= self.order:
            raise ConfigError(f"N={self.N} incompatible with order {self.order}")
        if self.precond == "mg" and self.order != 2:
            raise ConfigError("the multigrid preconditioner supports order 2 only")
        if self.l <= 0 or self.eps_in <= 0 or self.eps_out <= 0:
            raise ConfigError("l and permittivities must be positive")
        if self.m0_interface not in ("harmonic", "sharp"):
            raise ConfigError(
                f"m0_interface must be 'harmonic' or 'sharp', got {self.m0_interface!r}")

    @property
    def order_k(self) -> int:
        return self.order // 2

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["mg_smooth"] = list(self.mg_smooth)
        return d


@dataclass
class KPointReport:
    index: int
    k: np.ndarray
    gamma: float
    shift: float
    escalations: int
    iterations: int
    max_residual: float


@dataclass
class BandStructure:
    kpoints: list
    abscissa: np.ndarray
    markers: list
    bands: np.ndarray          # (nev, nk) of omega values
    gap: dict | None
    l: float
    reports: list

    def omega_normalized(self) -> np.ndarray:
        return self.bands * self.l / (2 * np.pi)


def resolve_kpath(cfg: RunConfig) -> KPath:
    """Turn config path entries (labels or explicit vectors) into a KPath;
    defaults to the full symmetry-point circuit of the lattice."""
    table = dict(symmetry_points(cfg.lattice, cfg.l))
    entries = cfg.kpath if cfg.kpath is not None else list(table.keys())
    verts = []
    for e in entries:
        if isinstance(e, str):
            if e not in table:
                raise ConfigError(f"unknown symmetry point {e!r} for {cfg.lattice}")
            verts.append((e, table[e]))
        else:
            label, vec = e
            verts.append((str(label), np.asarray(vec, dtype=float)))
    return KPath(vertices=tuple(verts), samples_per_segment=cfg.samples_per_segment)


def _make_beta(cfg: RunConfig, grid: GridSpec, lattice) -> np.ndarray:
    model = DielectricModel(inside=geometry_by_name(cfg.geometry, cfg.l),
                            eps_in=cfg.eps_in, eps_out=cfg.eps_out)
    return assemble_M0(grid, lattice, model, interface=cfg.m0_interface).beta


def solve_at_k(grid: GridSpec, lattice, beta: np.ndarray, k, *, nev: int,
               tol: float = 1e-5, maxit: int = 500, seed: int = 0,
               precond: str = "fft", gamma: float | None = None,
               shift: float | None = None, mg_depth: int | None = None,
               mg_smooth=(2, 2), block_extra: int | None = None) -> EigResult:
    """Solve the compensated eigenproblem at one Bloch vector, escalating
    the penalty until the recomputation check passes.

    Escalation doubles gamma but never below the formula value (an
    artificially tiny starting penalty would otherwise need unboundedly
    many doublings to clear the divergence branch out of the low
    spectrum).
    """
    k = np.asarray(k, dtype=float).reshape(3)
    ops = ShiftedOperators(grid, lattice, k)
    gamma_formula = penalty_gamma(grid.h, k)
    g = gamma_formula if gamma is None else float(gamma)
    c = (default_shift(lattice) if np.all(k == 0.0) else 0.0) if shift is None else float(shift)
    N = grid.N
    dim = grid.nvector

    symbols = build_symbols(ops) if precond == "fft" else None

    result = None
    for esc in range(MAX_GAMMA_DOUBLINGS + 1):
        op = CompensatedOperator.from_parts(ops, beta, g, c)

        def apply_cols(X, _op=op):
            return _op.apply_columns(X)

        if precond == "fft":
            def pinv_cols(X, _g=g):
                nc = X.shape[1]
                xb = np.ascontiguousarray(X.T).reshape(nc, 3, N, N, N)
                yb = solve_P_batch(xb, symbols, _g, c)
                return np.asfortranarray(yb.reshape(nc, -1).T)
        else:
            H = build_hierarchy(ops, g, c, depth=mg_depth,
                                n1=mg_smooth[0], n2=mg_smooth[1])

            def pinv_cols(X, _H=H):
                out = np.empty_like(X)
                for j in range(X.shape[1]):
                    out[:, j] = distributive_solve(X[:, j], _H, tol=1e-8).reshape(-1)
                return out

        scfg = SolverConfig(m=nev, block_extra=block_extra, tol=tol, maxit=maxit,
                            seed=seed)
        result = lobpcg_solve(apply_cols, pinv_cols, dim, scfg, shift=c)
        # Norm-form Rayleigh quotients evaluate the converged eigenvalues
        # without the eps*||S|| floor of the projected Ritz values.
        result.lambdas = op.rayleigh_values(result.vectors)
        result.gamma = g
        result.escalations = esc
        recompute_check(result, op)
        if not result.spurious_flags.any():
            break
        g = max(2.0 * g, gamma_formula)
    else:
        raise SolverFailureError(
            f"spurious eigenvalues survived {MAX_GAMMA_DOUBLINGS} penalty doublings at k={k}")
    if not result.converged:
        raise SolverFailureError(
            f"eigensolver did not converge within {maxit} iterations at k={k}")
    return result


def _seed_at(base: int, k) -> int:
    """Per-k-point seed derived from the quantized k-vector content, so a
    path traversed in any order (or resampled) reproduces identical solves
    at identical k."""
    kq = np.round(np.asarray(k, dtype=float), 12) + 0.0  # normalize -0.0
    return (int(base) + zlib.crc32(kq.tobytes())) % (2**31)


def _nev_at(cfg: RunConfig, k) -> int:
    # The discrete kernel at k = 0 is three-dimensional while the physical
    # zero frequency is double; solve one extra pair there and drop the
    # surplus kernel mode so band indices line up across the path.
    return cfg.nev + 1 if np.all(np.asarray(k) == 0.0) else cfg.nev


def _band_lambdas(res: EigResult, k, nev: int) -> np.ndarray:
    lam = np.asarray(res.lambdas, dtype=float)
    if np.all(np.asarray(k) == 0.0) and len(lam) > nev:
        lam = lam[1:nev + 1]
    lam = lam[:nev].copy()
    # Kernel modes are exact zeros analytically; taking square roots of
    # solver noise there would jitter the omega = 0 bands.
    floor = 1e-9 * max(1.0, float(np.abs(lam).max()))
    lam[np.abs(lam) < floor] = 0.0
    return lam


def _solve_task(args):
    cfg_dict, k, idx = args
    cfg = RunConfig.from_dict(cfg_dict)
    lattice = make_lattice(cfg.lattice, cfg.l)
    grid = GridSpec(N=cfg.N, order_k=cfg.order_k)
    beta = _make_beta(cfg, grid, lattice)
    res = solve_at_k(grid, lattice, beta, k, nev=_nev_at(cfg, k), tol=cfg.tol,
                     maxit=cfg.maxit, seed=_seed_at(cfg.seed, k), precond=cfg.precond,
                     gamma=cfg.gamma, shift=cfg.shift, mg_depth=cfg.mg_depth,
                     mg_smooth=tuple(cfg.mg_smooth))
    res.vectors = None  # not worth shipping across the pool
    return idx, res


def run_bandstructure(cfg: RunConfig, keep_vectors: bool = False,
                      progress=None) -> BandStructure:
    """Sweep the k-path, solve per point, and assemble bands and gap."""
    cfg.validate()
    lattice = make_lattice(cfg.lattice, cfg.l)
    grid = GridSpec(N=cfg.N, order_k=cfg.order_k)
    path = resolve_kpath(cfg)
    kpoints, abscissa, markers = sample_kpath(path)
    beta = _make_beta(cfg, grid, lattice)

    results: list = [None] * len(kpoints)
    if cfg.workers > 1:
        tasks = [(cfg.as_dict(), k, i) for i, k in enumerate(kpoints)]
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            for idx, res in pool.map(_solve_task, tasks):
                results[idx] = res
                if progress:
                    progress(idx, len(kpoints), res)
    else:
        for i, k in enumerate(kpoints):
            res = solve_at_k(grid, lattice, beta, k, nev=_nev_at(cfg, k),
                             tol=cfg.tol, maxit=cfg.maxit, seed=_seed_at(cfg.seed, k),
                             precond=cfg.precond, gamma=cfg.gamma,
                             shift=cfg.shift, mg_depth=cfg.mg_depth,
                             mg_smooth=tuple(cfg.mg_smooth))
            if not keep_vectors and cfg.dump_eigenvectors is None:
                res.vectors = None
            results[i] = res
            if progress:
                progress(i, len(kpoints), res)

    bands = np.empty((cfg.nev, len(kpoints)))
    reports = []
    for i, (k, res) in enumerate(zip(kpoints, results)):
        lam = np.maximum(_band_lambdas(res, k, cfg.nev), 0.0)
        bands[:, i] = np.sqrt(lam)
        reports.append(KPointReport(
            index=i, k=np.asarray(k), gamma=res.gamma, shift=res.shift,
            escalations=res.escalations, iterations=res.iterations,
            max_residual=float(np.max(res.residuals))))
        if cfg.dump_eigenvectors is not None and res.vectors is not None:
            write_field(f"{cfg.dump_eigenvectors}_k{i:03d}.mfdf",
                        res.vectors.T, cfg.N, Space.FACE)
            if not keep_vectors:
                res.vectors = None

    best = gap_ratio(bands)
    gap = best if best is not None and best["ratio"] > 0 else None
    return BandStructure(kpoints=kpoints, abscissa=abscissa, markers=markers,
                         bands=bands, gap=gap, l=cfg.l, reports=reports)


def gap_ratio(bands: np.ndarray, n: int | None = None) -> dict | None:
    """Band-gap ratio between bands n and n+1 (1-based n): the gap width
    over its midpoint frequency.  With n omitted, picks the n that
    maximizes the ratio.  A nonpositive ratio means overlapping bands."""
    nev = bands.shape[0]
    if nev < 2:
        return None
    if n is not None:
        if not 1 <= n < nev:
            raise InvalidParameterError(f"band index {n} outside 1..{nev - 1}")
        lo = float(np.max(bands[n - 1]))
        up = float(np.min(bands[n]))
        mid = 0.5 * (up + lo)
        ratio = (up - lo) / mid if mid > 0 else 0.0
        return {"n": n, "omega_low": lo, "omega_up": up, "ratio": ratio}
    best = None
    for nn in range(1, nev):
        g = gap_ratio(bands, nn)
        if best is None or g["ratio"] > best["ratio"]:
            best = g
    return best


def exact_iso_eigs(k, l: float, count: int) -> np.ndarray:
    """The `count` smallest squared frequencies of the uniform medium:
    |k + (2 pi / l) m|^2 over integer m, each twice (two transverse
    polarizations), ascending.  The search box grows until provably no
    smaller value can lie outside it."""
    if count < 1:
        raise InvalidParameterError("count must be >= 1")
    k = np.asarray(k, dtype=float).reshape(3)
    g0 = 2 * np.pi / l
    R = 2
    while True:
        rng = np.arange(-R, R + 1)
        mx, my, mz = np.meshgrid(rng, rng, rng, indexing="ij")
        m = np.stack([mx, my, mz], axis=-1).reshape(-1, 3)
        vals = np.sort(np.sum((k[None] + g0 * m) ** 2, axis=1))
        need = (count + 1) // 2
        top = vals[need - 1]
        # Everything outside the box is at least ((R+1) g0 - |k|)^2 away.
        margin = (R + 1) * g0 - np.linalg.norm(k)
        if margin > 0 and margin**2 >= top:
            break
        R += 1
    return np.repeat(vals[:need], 2)[:count]


def verify_order(orders, n_list, *, l: float = 2 * np.pi, k=(0.5, 0.0, 0.0),
                 nev: int = 6, tol: float = 1e-7, seed: int = 0,
                 maxit: int = 2000, block_extra: int = 14) -> dict:
    """Errors and fitted convergence rates of the uniform-medium spectrum.

    For each order and N, computes |omega^2 - omega_h^2| for the first nev
    eigenvalues against the analytic multiset, and log2 error ratios
    between successive N.  The guard block defaults wide enough to cover
    the full degeneracy cluster of the second distinct eigenvalue, which
    high-order stencils split only at the 1e-6 level.
    """
    lattice = make_lattice("sc", l)
    exact = exact_iso_eigs(k, l, nev)
    out = {"l": l, "k": list(np.asarray(k, dtype=float)), "exact": exact.tolist(),
           "orders": {}}
    for order in orders:
        rows = []
        for N in n_list:
            grid = GridSpec(N=N, order_k=order // 2)
            beta = np.ones(grid.nvector)
            res = solve_at_k(grid, lattice, beta, k, nev=nev, tol=tol,
                             maxit=maxit, seed=seed, block_extra=block_extra)
            errs = np.abs(np.asarray(res.lambdas) - exact)
            rows.append({"N": N, "errors": errs.tolist(),
                         "iterations": res.iterations})
        for i in range(1, len(rows)):
            e0 = np.asarray(rows[i - 1]["errors"])
            e1 = np.asarray(rows[i]["errors"])
            with np.errstate(divide="ignore", invalid="ignore"):
                rows[i]["rates"] = np.log2(e0 / e1).tolist()
        out["orders"][order] = rows
    return out


# -- outputs -----------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def emit_outputs(bs: BandStructure, cfg: RunConfig) -> list:
    """Write CSV / SVG / JSON manifest as configured; returns the paths."""
    written = []
    if cfg.csv:
        write_band_csv(cfg.csv, bs)
        written.append(cfg.csv)
    if cfg.svg:
        write_band_svg(cfg.svg, bs)
        written.append(cfg.svg)
    if cfg.manifest:
        write_manifest(cfg.manifest, bs, cfg)
        written.append(cfg.manifest)
    return written


def write_band_csv(path, bs: BandStructure) -> None:
    nev = bs.bands.shape[0]
    labels = {i: lab for i, lab in bs.markers}
    norm = bs.omega_normalized()
    cols = (["label", "kx", "ky", "kz", "abscissa"]
            + [f"band{j + 1}" for j in range(nev)]
            + [f"band{j + 1}_norm" for j in range(nev)])
    lines = [",".join(cols)]
    for i, k in enumerate(bs.kpoints):
        row = [labels.get(i, "")]
        row += [_fmt(v) for v in k]
        row.append(_fmt(bs.abscissa[i]))
        row += [_fmt(bs.bands[j, i]) for j in range(nev)]
        row += [_fmt(norm[j, i]) for j in range(nev)]
        lines.append(",".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_band_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read back a band CSV; returns (abscissa, bands) at full precision."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        nev = sum(1 for c in header if c.startswith("band") and not c.endswith("_norm"))
        absc, bands = [], []
        for line in fh:
            parts = line.strip().split(",")
            absc.append(float(parts[4]))
            bands.append([float(v) for v in parts[5:5 + nev]])
    return np.array(absc), np.array(bands).T


def write_band_svg(path, bs: BandStructure, width: int = 800, height: int = 560) -> None:
    """Static band diagram: one polyline per band, symmetry-point labels,
    and a shaded rectangle over the gap when present."""
    mleft, mright, mtop, mbot = 60, 20, 20, 40
    pw, ph = width - mleft - mright, height - mtop - mbot
    xs = bs.abscissa
    xmax = xs[-1] if xs[-1] > 0 else 1.0
    ymax = float(bs.bands.max()) * 1.05 or 1.0

    def X(a):
        return mleft + pw * a / xmax

    def Y(w):
        return mtop + ph * (1.0 - w / ymax)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>']
    if bs.gap is not None:
        y1, y0 = Y(bs.gap["omega_up"]), Y(bs.gap["omega_low"])
        parts.append(
            f'<rect class="gap" x="{mleft}" y="{y1:.2f}" width="{pw}" '
            f'height="{(y0 - y1):.2f}" fill="#ffd27f" opacity="0.6"/>')
    for i, lab in bs.markers:
        x = X(xs[i])
        parts.append(f'<line x1="{x:.2f}" y1="{mtop}" x2="{x:.2f}" '
                     f'y2="{mtop + ph}" stroke="#bbbbbb" stroke-width="1"/>')
        parts.append(f'<text x="{x:.2f}" y="{height - 12}" text-anchor="middle" '
                     f'font-size="14">{lab}</text>')
    parts.append(f'<line x1="{mleft}" y1="{mtop + ph}" x2="{mleft + pw}" '
                 f'y2="{mtop + ph}" stroke="black"/>')
    parts.append(f'<line x1="{mleft}" y1="{mtop}" x2="{mleft}" '
                 f'y2="{mtop + ph}" stroke="black"/>')
    for j in range(bs.bands.shape[0]):
        pts = " ".join(f"{X(a):.2f},{Y(w):.2f}" for a, w in zip(xs, bs.bands[j]))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="#2255cc" '
                     f'stroke-width="1.5"/>')
    parts.append(f'<text x="14" y="{mtop + ph / 2:.0f}" font-size="14" '
                 f'transform="rotate(-90 14 {mtop + ph / 2:.0f})">omega</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def write_manifest(path, bs: BandStructure, cfg: RunConfig) -> None:
    doc = {
        "version": __version__,
        "config": cfg.as_dict(),
        "gap": bs.gap,
        "kpoints": [
            {
                "index": r.index,
                "k": [float(v) for v in r.k],
                "gamma": r.gamma,
                "shift": r.shift,
                "escalations": r.escalations,
                "iterations": r.iterations,
                "max_residual": r.max_residual,
            }
            for r in bs.reports
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


# -- CLI ---------------------------------------------------------------


def _parse_vec(s: str) -> np.ndarray:
    parts = [float(v) for v in s.split(",")]
    if len(parts) != 3:
        raise ConfigError(f"expected three comma-separated values, got {s!r}")
    return np.array(parts)


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mfdband", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bands", help="band structure over a k-path from a JSON config")
    b.add_argument("config", help="path to JSON run configuration")
    b.add_argument("--csv")
    b.add_argument("--svg")
    b.add_argument("--manifest")
    b.add_argument("--dump-eigenvectors", dest="dump_eigenvectors")
    b.add_argument("--nev", type=int)
    b.add_argument("--N", type=int, dest="N")
    b.add_argument("--tol", type=float)
    b.add_argument("--maxit", type=int)
    b.add_argument("--seed", type=int)
    b.add_argument("--gamma", type=float)
    b.add_argument("--shift", type=float)
    b.add_argument("--precond", choices=["fft", "mg"])
    b.add_argument("--mg-depth", type=int, dest="mg_depth")
    b.add_argument("--mg-smooth", dest="mg_smooth",
                   help="pre,post smoothing counts, e.g. 2,2")
    b.add_argument("--workers", type=int)

    e = sub.add_parser("eig", help="eigenvalues at one Bloch vector")
    e.add_argument("--lattice", default="sc")
    e.add_argument("--l", type=float, default=1.0)
    e.add_argument("--k", required=True, help="kx,ky,kz")
    e.add_argument("--N", type=int, required=True)
    e.add_argument("--order", type=int, default=2)
    e.add_argument("--nev", type=int, default=6)
    e.add_argument("--geometry", default="homogeneous")
    e.add_argument("--eps-in", type=float, default=1.0)
    e.add_argument("--eps-out", type=float, default=1.0)
    e.add_argument("--tol", type=float, default=1e-5)
    e.add_argument("--maxit", type=int, default=500)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--gamma", type=float)
    e.add_argument("--shift", type=float)
    e.add_argument("--precond", choices=["fft", "mg"], default="fft")

    v = sub.add_parser("verify-order", help="convergence-order study, uniform medium")
    v.add_argument("--orders", default="2,4,6,8")
    v.add_argument("--N", dest="n_list", default="10,20,40")
    v.add_argument("--l", type=float, default=2 * np.pi)
    v.add_argument("--k", default="0.5,0,0")
    v.add_argument("--nev", type=int, default=6)
    v.add_argument("--tol", type=float, default=1e-9)

    x = sub.add_parser("exact", help="analytic uniform-medium eigenvalues")
    x.add_argument("--k", required=True)
    x.add_argument("--l", type=float, required=True)
    x.add_argument("--count", type=int, default=10)
    return ap


def _cmd_bands(args) -> int:
    with open(args.config) as fh:
        raw = json.load(fh)
    for key in ("csv", "svg", "manifest", "dump_eigenvectors", "nev", "N", "tol",
                "maxit", "seed", "gamma", "shift", "precond", "mg_depth", "workers"):
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    if getattr(args, "mg_smooth", None):
        raw["mg_smooth"] = [int(v) for v in args.mg_smooth.split(",")]
    cfg = RunConfig.from_dict(raw)

    def progress(i, n, res):
        print(f"k-point {i + 1}/{n}: {res.iterations} iterations", flush=True)

    bs = run_bandstructure(cfg, progress=progress)
    emit_outputs(bs, cfg)
    if bs.gap:
        g = bs.gap
        print(f"gap between bands {g['n']} and {g['n'] + 1}: "
              f"omega in [{g['omega_low']:.6g}, {g['omega_up']:.6g}], "
              f"ratio {g['ratio']:.5f}")
    else:
        print("no complete band gap among the computed bands")
    return 0


def _cmd_eig(args) -> int:
    lattice = make_lattice(args.lattice, args.l)
    grid = GridSpec(N=args.N, order_k=args.order // 2)
    model = DielectricModel(inside=geometry_by_name(args.geometry, args.l),
                            eps_in=args.eps_in, eps_out=args.eps_out)
    beta = assemble_M0(grid, lattice, model).beta
    res = solve_at_k(grid, lattice, beta, _parse_vec(args.k), nev=args.nev,
                     tol=args.tol, maxit=args.maxit, seed=args.seed,
                     precond=args.precond, gamma=args.gamma, shift=args.shift)
    print(f"# gamma={res.gamma:.6g} shift={res.shift:.6g} "
          f"iterations={res.iterations} escalations={res.escalations}")
    for i, (lam, lre) in enumerate(zip(res.lambdas, res.lambdas_re)):
        print(f"{i + 1:3d}  omega^2 = {lam:.12g}   recomputed = {lre:.12g}   "
              f"omega = {np.sqrt(max(lam, 0.0)):.12g}")
    return 0


def _cmd_verify_order(args) -> int:
    orders = [int(v) for v in args.orders.split(",")]
    n_list = [int(v) for v in args.n_list.split(",")]
    table = verify_order(orders, n_list, l=args.l, k=_parse_vec(args.k),
                         nev=args.nev, tol=args.tol)
    print(f"exact omega^2: {', '.join(f'{v:.6g}' for v in table['exact'])}")
    for order, rows in table["orders"].items():
        print(f"\norder {order}:")
        for row in rows:
            errs = ", ".join(f"{v:.3e}" for v in row["errors"])
            line = f"  N={row['N']:>4}  errors: {errs}"
            if "rates" in row:
                rates = ", ".join(f"{v:5.2f}" for v in row["rates"])
                line += f"   rates: {rates}"
            print(line)
    return 0


def _cmd_exact(args) -> int:
    vals = exact_iso_eigs(_parse_vec(args.k), args.l, args.count)
    for i, v in enumerate(vals):
        print(f"{i + 1:3d}  omega^2 = {v:.12g}  omega = {np.sqrt(v):.12g}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "bands":
            return _cmd_bands(args)
        if args.command == "eig":
            return _cmd_eig(args)
        if args.command == "verify-order":
            return _cmd_verify_order(args)
        if args.command == "exact":
            return _cmd_exact(args)
        return 3
    except (ConfigError, InvalidParameterError, FileNotFoundError,
            json.JSONDecodeError, TypeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 3
    except SolverFailureError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
