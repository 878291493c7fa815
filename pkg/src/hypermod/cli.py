"""Command-line front end: ``hypermod <scenario> [--config FILE] [flags]``.

Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
3 a construction failed or a requested quantity is infeasible.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from . import __version__
from .config import PRESETS, SCENARIOS, RunConfig, build_config, load_toml
from .constructions import porosity_center, step1
from .errors import ConfigError, ConstructionError, DomainError, InfeasibleError, MisuseError
from .funcspace import canonical_json, check_in_C_omega, map_to_json, mod_lower_witness
from .verify import (
    CheckRecord,
    VerificationReport,
    run_negative_controls,
    verify_dTheta,
    verify_porosity,
    verify_retraction,
    verify_space,
    verify_step1,
    verify_step2,
)

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_CONSTRUCTION = 0, 1, 2, 3
DEFAULT_S_GRID = (0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0)


# ---------------------------------------------------------------------------
# artifacts
# ---------------------------------------------------------------------------

def modulus_profile(space, m, omega, s_grid, budget, seed, centers=None, radius=16.0):
    """Rows ``(s, omega(s), lower bound on omega_m(s))`` over ``s_grid``."""
    rows = []
    for k, s in enumerate(s_grid):
        lb = mod_lower_witness(space, m, float(s), int(budget), seed + k, centers=centers, radius=radius)
        rows.append((float(s), float(omega(float(s))), float(lb.value)))
    return rows


def write_csv(path: Path, rows, header=("s", "omega", "mod_lower")) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) for v in r])
    path.write_text(buf.getvalue())


def svg_plot(series: dict, title: str = "", xlabel: str = "s", ylabel: str = "",
             width: int = 640, height: int = 420) -> str:
    """Line plot of ``{name: (xs, ys)}`` as a standalone SVG document."""
    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")
    xs = np.concatenate([np.asarray(v[0], float) for v in series.values()])
    ys = np.concatenate([np.asarray(v[1], float) for v in series.values()])
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = min(0.0, float(ys.min())), float(ys.max())
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    left, right, top, bottom = 60, 20, 40, 50
    pw, ph = width - left - right, height - top - bottom

    def px(x):
        return left + pw * (x - x_lo) / (x_hi - x_lo)

    def py(y):
        return top + ph * (1.0 - (y - y_lo) / (y_hi - y_lo))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for k in range(6):
        xv = x_lo + (x_hi - x_lo) * k / 5
        yv = y_lo + (y_hi - y_lo) * k / 5
        out.append(f'<text x="{px(xv):.1f}" y="{top + ph + 16}" text-anchor="middle">{xv:.3g}</text>')
        out.append(f'<text x="{left - 6}" y="{py(yv) + 4:.1f}" text-anchor="end">{yv:.3g}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{top + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 14 {top + ph / 2:.1f})">{escape(ylabel)}</text>')
    for i, (name, (sx, sy)) in enumerate(series.items()):
        c = colors[i % len(colors)]
        pts = " ".join(f"{px(float(a)):.2f},{py(float(b)):.2f}" for a, b in zip(sx, sy))
        out.append(f'<polyline fill="none" stroke="{c}" stroke-width="2" points="{pts}"/>')
        for a, b in zip(sx, sy):
            out.append(f'<circle cx="{px(float(a)):.2f}" cy="{py(float(b)):.2f}" r="3" fill="{c}"/>')
        out.append(f'<text x="{left + 10}" y="{top + 16 + 16 * i}" fill="{c}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_artifacts(out_dir: Path, cfg: RunConfig, report: VerificationReport, record=None, profile=None) -> list:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    def put(name, text):
        (out_dir / name).write_text(text)
        written.append(out_dir / name)

    put("config.json", canonical_json(cfg.to_json()) + "\n")
    if record is not None:
        put("record.json", record.dumps() + "\n")
    put("report.json", report.stable_json() + "\n")
    put("report.md", report.to_markdown(timing=False))
    put("timing.json", canonical_json({c.check_id: round(c.seconds, 4) for c in report.checks}) + "\n")
    if profile is not None:
        write_csv(out_dir / "modulus.csv", profile)
        written.append(out_dir / "modulus.csv")
        if cfg.plot:
            s = [r[0] for r in profile]
            put("modulus.svg", svg_plot({"omega(s)": (s, [r[1] for r in profile]),
                                         "mod_lower(s)": (s, [r[2] for r in profile])},
                                        title=f"{cfg.scenario}: omega vs sampled modulus", ylabel="value"))
    return written


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------

def _s_grid(cfg):
    return tuple(float(v) for v in cfg.params.get("s_grid", DEFAULT_S_GRID))


def run_verify_space(cfg: RunConfig):
    space = cfg.build_space()
    n = int(cfg.budgets["trials"])
    tol = float(cfg.tolerances["geometry"])
    rep = verify_space(space, n, tol, cfg.seed)
    rep.extend(verify_retraction(space, trials=n, tol=tol, seed=cfg.seed), prefix="retraction.")
    return rep, None, None


def _construct_step1(cfg):
    space = cfg.build_space()
    omega = cfg.build_modulus()
    f = cfg.build_map(space)
    p = cfg.params
    return step1(space, omega, f, float(p["s"]), float(p["mu"]), float(p["eps"]),
                 search_budget=int(cfg.budgets["budget"]), rng_seed=cfg.seed)


def _profile(cfg, rec, m):
    if not cfg.plot and not cfg.params.get("profile", True):
        return None
    budget = min(int(cfg.budgets["budget"]), 4096)
    centers = [rec.points[k] for k in ("x0", "z0") if k in rec.points]
    return modulus_profile(rec.space, m, rec.omega, _s_grid(cfg), budget, cfg.seed, centers=centers)


def run_step1(cfg: RunConfig):
    rec = _construct_step1(cfg)
    b = cfg.budgets
    rep = verify_step1(rec, pairs=int(b["trials"]), budget=int(b["budget"]), tol=float(cfg.tolerances["construction"]),
                       N=int(b["N"]), mesh=float(b["mesh"]), seed=cfg.seed)
    return rep, rec, _profile(cfg, rec, rec.h)


def run_step2(cfg: RunConfig):
    rec = _construct_step1(cfg)
    b = cfg.budgets
    rep = verify_step2(rec, n_neighbors=int(b["neighbors"]), budget=min(int(b["budget"]), 4096), seed=cfg.seed,
                       tol=float(cfg.tolerances["construction"]))
    return rep, rec, _profile(cfg, rec, rec.h)


def run_porosity(cfg: RunConfig):
    space = cfg.build_space()
    omega = cfg.build_modulus()
    f = cfg.build_map(space)
    p = cfg.params
    rec = porosity_center(space, omega, f, float(p["s"]), float(p["eps"]), rng_seed=cfg.seed)
    b = cfg.budgets
    pairs = min(int(b["trials"]), 10000)
    rep = verify_porosity(rec, n_samples=int(b["neighbors"]), pairs=pairs, seed=cfg.seed,
                          tol=float(cfg.tolerances["construction"]))
    return rep, rec, _profile(cfg, rec, rec.g)


def run_dtheta(cfg: RunConfig):
    space = cfg.build_space()
    trials = min(int(cfg.budgets["trials"]), 1000)
    rep = verify_dTheta(space, trials=trials, N=int(cfg.params.get("N", 40)), seed=cfg.seed)
    return rep, None, None


def run_estimate_modulus(cfg: RunConfig):
    space = cfg.build_space()
    omega = cfg.build_modulus()
    m = cfg.build_map(space)
    b = cfg.budgets
    tol = float(cfg.tolerances["construction"])
    rows = modulus_profile(space, m, omega, _s_grid(cfg), int(b["budget"]), cfg.seed)
    rep = VerificationReport(f"estimate-modulus:{space.model_tag}", seed=cfg.seed,
                             budgets={"budget": int(b["budget"]), "trials": int(b["trials"])})
    res = check_in_C_omega(space, m, omega, int(b["trials"]), cfg.seed, tol)
    rep.add(CheckRecord("in_C_omega", "rho(m x, m y) <= omega(rho(x, y)) on sampled pairs", res.passed, res.pairs,
                        tol, res.worst_margin, res.witness))
    gaps = [r[1] - r[2] for r in rows]
    i = int(np.argmin(gaps))
    ok = gaps[i] >= -tol
    rep.add(CheckRecord("mod_lower_below_omega", "sampled lower bound on omega_m(s) stays below omega(s)", ok,
                        len(rows), tol, gaps[i], None if ok else {"s": rows[i][0], "omega": rows[i][1],
                                                                  "mod_lower": rows[i][2]},
                        details={"map": map_to_json(m)}))
    return rep, None, rows


def run_controls(cfg: RunConfig):
    rep = run_negative_controls(seed=cfg.seed, trials=min(int(cfg.budgets["trials"]), 20000))
    return rep, None, None


RUNNERS = {
    "verify-space": run_verify_space,
    "step1": run_step1,
    "step2": run_step2,
    "porosity": run_porosity,
    "dtheta": run_dtheta,
    "estimate-modulus": run_estimate_modulus,
    "controls": run_controls,
}


def run(cfg: RunConfig, out_dir: Path | None = None):
    """Execute one scenario; returns ``(exit_code, report, record, written_paths)``."""
    report, record, profile = RUNNERS[cfg.scenario](cfg)
    target = out_dir or Path(cfg.out_dir or Path("hypermod-out") / cfg.scenario)
    written = write_artifacts(Path(target), cfg, report, record, profile)
    return (EXIT_PASS if report.passed else EXIT_FAIL), report, record, written


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--seed", type=int)
    common.add_argument("--budget", type=int, help="sampling budget for sup estimates and searches")
    common.add_argument("--trials", type=int, help="number of random trials or pairs")
    common.add_argument("--tol", type=float, help="tolerance for every inequality check")
    common.add_argument("--out-dir", dest="out_dir")
    common.add_argument("--plot", action="store_true", default=None, help="also write modulus.svg")
    common.add_argument("--model", choices=("euclidean", "poincare_half_plane", "star_tree"))
    common.add_argument("--dimension", type=int)
    common.add_argument("--s", type=float)
    common.add_argument("--mu", type=float)
    common.add_argument("--eps", type=float)
    common.add_argument("--quiet", action="store_true")

    ap = argparse.ArgumentParser(prog="hypermod", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"hypermod {__version__}")
    sub = ap.add_subparsers(dest="scenario", required=True)
    helps = {
        "verify-space": "geometry and retraction identities on random samples",
        "step1": "build and verify a Step-1 perturbation",
        "step2": "verify the neighbourhood radius of a Step-1 perturbation",
        "porosity": "build and verify a porosity centre",
        "dtheta": "metric axioms and convergence for the pointwise metric",
        "estimate-modulus": "sampled modulus of a map against omega",
        "controls": "deliberately broken inputs that must be detected",
    }
    for name in SCENARIOS:
        sub.add_parser(name, parents=[common], help=helps[name],
                       epilog=f"map presets: {', '.join(PRESETS)}" if name != "controls" else None)
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    ov = {k: getattr(args, k) for k in ("seed", "budget", "trials", "tol", "out_dir", "plot", "model",
                                        "dimension", "s", "mu", "eps")}
    err = sys.stderr
    try:
        data = load_toml(args.config) if args.config else {}
        cfg = build_config(args.scenario, data, ov, source=args.config)
        code, report, record, written = run(cfg)
    except (ConfigError, MisuseError, DomainError) as exc:
        print(f"hypermod: configuration error: {exc}", file=err)
        return EXIT_CONFIG
    except (ConstructionError, InfeasibleError) as exc:
        print(f"hypermod: construction failed: {exc}", file=err)
        diag = getattr(exc, "diagnostics", None)
        if diag:
            print(canonical_json({k: (v if not isinstance(v, float) or math.isfinite(v) else str(v))
                                  for k, v in diag.items()}), file=err)
        return EXIT_CONSTRUCTION
    if not args.quiet:
        print(f"{report.suite}: {'PASS' if report.passed else 'FAIL'}")
        for c in report.checks:
            mark = "ok " if c.ok else "BAD"
            exp = " (control)" if c.expect_fail else ""
            print(f"  [{mark}] {c.check_id}{exp}: {'PASS' if c.passed else 'FAIL'}  margin={c.margin:.3e}")
        print(f"artifacts: {', '.join(str(p) for p in written)}")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
