"""Command-line interface and experiment orchestration.

Subcommands: classify, volume, lengths, hull, polar, scan-degeneration,
regularity, verify-lemmas.  Single-object results are printed as JSON;
sweeps write CSV with a fixed header and 17 significant digits, so a rerun
with the same configuration reproduces byte-identical output.

Exit codes: 0 success, 2 usage error, 3 domain error (inadmissible or
non-compact input), 4 property violation detected by a verification sweep.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import degeneration as dg
from . import gram, polar, polyhedra, schlafli

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_VIOLATION = 4


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


class DomainError(Exception):
    pass


class ViolationError(Exception):
    pass


@dataclass
class ExperimentConfig:
    """Fully serializable description of one command invocation."""

    command: str
    curvature: int | None = None
    angles: list[float] | None = None
    seed: int = 0
    samples: int = 10**6
    tol: float = 1e-8
    trials: int = 10**4
    n_vertices: int = 4
    rho_list: list[float] = field(default_factory=list)
    t_list: list[float] = field(default_factory=lambda: [1.0, 2.0, 5.0])
    eps_list: list[float] = field(default_factory=lambda: [0.01, 0.05, 0.1])
    start: list[float] | None = None
    end: list[float] | None = None
    steps: int = 8
    with_oracle: bool = False
    input_path: str | None = None
    output_path: str | None = None

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        data = json.loads(text)
        return cls(**data)


def _parse_angles(spec: str) -> np.ndarray:
    """Angle list syntax: comma-separated tokens, each 'v' or 'vxk' (repeat)."""
    out: list[float] = []
    for token in spec.split(","):
        token = token.strip()
        if not token:
            continue
        if "x" in token:
            v, k = token.split("x")
            out.extend([float(v)] * int(k))
        else:
            out.append(float(token))
    if not out:
        raise ValueError("empty angle list")
    return np.array(out)


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _curvature(name: str) -> int:
    if name in ("spherical", "+1", "1"):
        return +1
    if name in ("hyperbolic", "-1"):
        return -1
    raise ValueError(f"unknown curvature {name!r}")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_classify(cfg: ExperimentConfig) -> int:
    theta = np.asarray(cfg.angles, dtype=float)
    g = gram.gram_from_angles(theta)
    cls = gram.classify(g)
    cof = gram.cofactor_matrix(g)
    report = {
        "class": cls.kind.value,
        "ideal_vertices": list(cls.ideal_vertices),
        "eigenvalues": [float(v) for v in np.linalg.eigvalsh(g)],
        "det": float(np.linalg.det(g)),
        "cofactor_diagonal": [float(v) for v in np.diag(cof)],
    }
    if cls.kind != gram.SimplexKind.INADMISSIBLE:
        report["boundary_margin"] = gram.boundary_margin(theta)
    _emit(json.dumps(report, indent=2) + "\n", cfg.output_path)
    return EXIT_OK


def cmd_volume(cfg: ExperimentConfig) -> int:
    theta = np.asarray(cfg.angles, dtype=float)
    curvature = cfg.curvature or -1
    cls = gram.classify(gram.gram_from_angles(theta))
    want = gram.SimplexKind.SPHERICAL if curvature > 0 else gram.SimplexKind.HYPERBOLIC_COMPACT
    if cls.kind != want:
        raise DomainError(
            f"angles classify as {cls.kind.value}, not a compact simplex of "
            f"curvature {curvature:+d}"
            + (": volume vanishes toward this boundary"
               if cls.kind == gram.SimplexKind.EUCLIDEAN_BOUNDARY else "")
        )
    est = schlafli.volume_tetra(theta, curvature, cfg.tol)
    report = {
        "volume": est.value,
        "error_bound": est.error_bound,
        "method": est.method,
        "curvature": curvature,
    }
    if cfg.with_oracle:
        w = gram.vertices_from_gram(gram.gram_from_angles(theta))
        mc = schlafli.mc_volume_oracle(w, curvature, cfg.samples, cfg.seed)
        report["mc_volume"] = mc.value
        report["mc_error_bound"] = mc.error_bound
        report["agreement"] = bool(est.agrees_with(mc))
    _emit(json.dumps(report, indent=2) + "\n", cfg.output_path)
    return EXIT_OK


def cmd_lengths(cfg: ExperimentConfig) -> int:
    theta = np.asarray(cfg.angles, dtype=float)
    g = gram.gram_from_angles(theta)
    cls = gram.classify(g)
    if not cls.is_compact:
        raise DomainError(f"angles classify as {cls.kind.value}: no finite edge lengths")
    lengths = gram.edge_lengths(g)
    report = {
        "class": cls.kind.value,
        "edge_lengths": [[float(v) for v in row] for row in lengths],
    }
    _emit(json.dumps(report, indent=2) + "\n", cfg.output_path)
    return EXIT_OK


def cmd_hull(cfg: ExperimentConfig) -> int:
    if not cfg.input_path:
        raise ValueError("hull requires --in pointing to a JSON point file")
    with open(cfg.input_path) as fh:
        data = json.load(fh)
    if "points_klein" in data:
        pts = np.asarray(data["points_klein"], dtype=float)
        verts = np.concatenate(
            [np.ones((len(pts), 1)), pts], axis=1
        ) / np.sqrt(1.0 - np.sum(pts * pts, axis=1))[:, None]
    elif "vertices" in data:
        verts = np.asarray(data["vertices"], dtype=float)
    else:
        raise ValueError("point file needs 'points_klein' or 'vertices'")
    try:
        poly = polyhedra.hull_klein(verts)
    except ValueError as exc:
        raise DomainError(str(exc)) from exc
    out = poly.to_json_dict()
    out["n_vertices"] = poly.n_vertices
    out["n_edges"] = poly.n_edges
    out["n_faces"] = poly.n_faces
    out["dihedral_angles"] = [float(e.angle) for e in poly.edges]
    _emit(json.dumps(out, indent=2) + "\n", cfg.output_path)
    return EXIT_OK


def cmd_polar(cfg: ExperimentConfig) -> int:
    if not cfg.input_path:
        raise ValueError("polar requires --in pointing to a polyhedron JSON file")
    with open(cfg.input_path) as fh:
        data = json.load(fh)
    try:
        poly = polyhedra.Polyhedron.from_json_dict(data)
        dm = polar.dual_metric(poly)
    except ValueError as exc:
        raise DomainError(str(exc)) from exc
    out = dm.to_json_dict()
    out["admissibility"] = polar.admissibility_report(dm).as_dict()
    out["boundary_proximity"] = polar.boundary_proximity(dm)
    _emit(json.dumps(out, indent=2) + "\n", cfg.output_path)
    return EXIT_OK


def cmd_scan_degeneration(cfg: ExperimentConfig) -> int:
    if cfg.n_vertices < 4:
        raise ValueError("need at least 4 vertices")
    rhos = cfg.rho_list or [10.0, 15.0, 20.0, 25.0, 30.0]
    lines = ["rho,trial,k,cycle_total,bound,curvature_total,curvature_bound,proximity,status"]
    violations = 0
    skipped = 0
    for rho in rhos:
        for trial in range(cfg.trials):
            seed = int(cfg.seed) + 1000 * int(round(rho)) + trial
            prefix = f"{_fmt(rho)},{trial}"
            try:
                poly = polyhedra.stretch_generator(cfg.n_vertices, float(rho), seed)
            except RuntimeError as exc:
                lines.append(f"{prefix},,,,,,,generator:{exc}")
                skipped += 1
                continue
            try:
                cyc = dg.find_short_face_cycle(poly)
            except ValueError as exc:
                lines.append(f"{prefix},,,,,,,precondition:{str(exc)[:40]}")
                skipped += 1
                continue
            cur = dg.quasigeodesic_curvature(poly, cyc)
            prox = polar.boundary_proximity(polar.dual_metric(poly))
            ok = (
                2 * np.pi < cyc.total < cyc.bound
                and cur.total <= cur.bound
                and all(c >= cur.cos_bound for c in cur.cos_gamma)
            )
            violations += not ok
            lines.append(
                f"{prefix},{cyc.k},{_fmt(cyc.total)},{_fmt(cyc.bound)},"
                f"{_fmt(cur.total)},{_fmt(cur.bound)},{_fmt(prox)},"
                + ("ok" if ok else "VIOLATION")
            )
    lines.append(f"# violations={violations} skipped={skipped}")
    _emit("\n".join(lines) + "\n", cfg.output_path)
    if violations:
        raise ViolationError(f"{violations} degeneration bound violations")
    return EXIT_OK


def cmd_regularity(cfg: ExperimentConfig) -> int:
    if cfg.start is None or cfg.end is None:
        raise ValueError("regularity requires --start and --end angle vectors")
    start = np.asarray(cfg.start, dtype=float)
    end = np.asarray(cfg.end, dtype=float)
    curvature = cfg.curvature or -1

    def margin_at(t: float) -> float:
        return gram.boundary_margin(start + t * (end - start))

    m0 = margin_at(0.0)
    thetas = []
    for k in range(cfg.steps):
        target = m0 * 0.5**k
        lo, hi = 0.0, 1.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            try:
                m = margin_at(mid)
            except ValueError:
                hi = mid
                continue
            if m > target:
                lo = mid
            else:
                hi = mid
        thetas.append(start + lo * (end - start))
    try:
        rows = schlafli.holder_probe(thetas, curvature, cfg.tol)
    except ValueError as exc:
        raise DomainError(str(exc)) from exc
    lines = ["margin,volume,grad_norm"]
    for r in rows:
        lines.append(f"{_fmt(r.margin)},{_fmt(r.volume)},{_fmt(r.grad_norm)}")
    margins = np.array([r.margin for r in rows])
    grads = np.array([r.grad_norm for r in rows])
    vols = np.array([r.volume for r in rows])
    if np.all(grads > 0) and np.all(margins > 0):
        slope, _icp = np.polyfit(np.log(margins), grads, 1)
        pred = np.polyval(np.polyfit(np.log(margins), grads, 1), np.log(margins))
        ss_res = float(np.sum((grads - pred) ** 2))
        ss_tot = float(np.sum((grads - grads.mean()) ** 2))
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
        lines.append(f"# log_gradient_slope={_fmt(-slope)} r_squared={_fmt(r2)}")
    dv = np.abs(vols[:-1] - vols[-1])
    keep = dv > 0
    if keep.sum() >= 2:
        alpha, _ = np.polyfit(np.log(margins[:-1][keep]), np.log(dv[keep]), 1)
        lines.append(f"# holder_exponent_estimate={_fmt(alpha)}")
    _emit("\n".join(lines) + "\n", cfg.output_path)
    return EXIT_OK


def cmd_verify_lemmas(cfg: ExperimentConfig) -> int:
    trials = cfg.trials
    report_lines = []
    csv_lines = ["suite,param,trial,measured,bound,margin"]
    failures = []

    for t in cfg.t_list:
        if t < dg.T_MIN:
            raise ValueError(
                f"frame parameter t = {t} is below the valid threshold {dg.T_MIN}"
            )

    for t in cfg.t_list:
        qs = dg.sample_crossing_planes(t, trials, seed=cfg.seed)
        bound = 3.0 * np.exp(-t)
        cos_a = np.abs(qs[:, 1])
        ab2 = qs[:, 0] ** 2 + qs[:, 1] ** 2
        bad = np.nonzero((cos_a >= bound) | (ab2 >= bound))[0]
        for i in bad[:5]:
            failures.append(f"plane-angle t={t} trial={i} seed={cfg.seed}")
        worst = int(np.argmax(cos_a))
        csv_lines.append(
            f"plane-angle,{_fmt(t)},{worst},{_fmt(cos_a[worst])},{_fmt(bound)},"
            f"{_fmt(bound - cos_a[worst])}"
        )
        report_lines.append(
            f"plane-angle      t={t:<4g} trials={trials} max|cos|={cos_a.max():.6f} "
            f"bound={bound:.6f} violations={len(bad)}"
        )

    for t in cfg.t_list:
        lines_h = dg.sample_crossing_lines(t, trials, seed=cfg.seed + 1)
        bound = 4.0 * np.exp(-2.0 * t) + 1.0
        worst = 0.0
        nbad = 0
        for i, ln in enumerate(lines_h):
            r = dg.check_distance_lemma(t, ln)
            worst = max(worst, r.cosh_distance)
            if r.cosh_distance >= r.bound or r.cosh_distance > r.intermediate_bound + 1e-12:
                nbad += 1
                if nbad <= 5:
                    failures.append(f"line-distance t={t} trial={i} seed={cfg.seed + 1}")
        csv_lines.append(
            f"line-distance,{_fmt(t)},-1,{_fmt(worst)},{_fmt(bound)},{_fmt(bound - worst)}"
        )
        report_lines.append(
            f"line-distance    t={t:<4g} trials={trials} max cosh d={worst:.8f} "
            f"bound={bound:.8f} violations={nbad}"
        )

    for eps in cfg.eps_list:
        tris = dg.sample_spherical_triangles(trials, seed=cfg.seed + 2, eps=eps)
        worst = 0.0
        nbad = 0
        for i, (side_a, alpha, beta, gamma) in enumerate(tris):
            alpha_rec = dg.spherical_angle_transfer(beta, gamma, side_a)
            diff = abs(alpha_rec - side_a)
            worst = max(worst, diff)
            two_sided = abs(np.cos(alpha) - np.cos(side_a)) <= 2 * eps**2 + 1e-12
            if diff >= 2 * eps or abs(alpha_rec - alpha) > 1e-9 or not two_sided:
                nbad += 1
                if nbad <= 5:
                    failures.append(f"angle-transfer eps={eps} trial={i} seed={cfg.seed + 2}")
        csv_lines.append(
            f"angle-transfer,{_fmt(eps)},-1,{_fmt(worst)},{_fmt(2 * eps)},{_fmt(2 * eps - worst)}"
        )
        report_lines.append(
            f"angle-transfer   eps={eps:<5g} trials={trials} max|alpha-A|={worst:.6f} "
            f"bound={2 * eps:.6f} violations={nbad}"
        )

    rng = np.random.Generator(np.random.Philox(key=[np.uint64(cfg.seed + 3), np.uint64(0)]))
    r_disk = 2.0
    worst = 0.0
    nbad = 0
    n_poly = max(trials // 10, 100)
    center = np.array([1.0, 0.0, 0.0, 0.0])
    for i in range(n_poly):
        poly = dg.random_convex_polygon(r_disk, 12, rng)
        s, b = dg.exterior_angle_bound(poly, center, r_disk)
        worst = max(worst, s)
        if s >= b:
            nbad += 1
            if nbad <= 5:
                failures.append(f"polygon-exterior trial={i} seed={cfg.seed + 3}")
    csv_lines.append(
        f"polygon-exterior,{_fmt(r_disk)},-1,{_fmt(worst)},{_fmt(2 * np.pi * np.cosh(r_disk))},"
        f"{_fmt(2 * np.pi * np.cosh(r_disk) - worst)}"
    )
    report_lines.append(
        f"polygon-exterior r={r_disk:<4g} trials={n_poly} max sum={worst:.6f} "
        f"bound={2 * np.pi * np.cosh(r_disk):.6f} violations={nbad}"
    )

    text = "\n".join(report_lines) + "\n"
    if cfg.output_path:
        _emit("\n".join(csv_lines) + "\n", cfg.output_path)
        sys.stdout.write(text)
    else:
        sys.stdout.write(text)
    if failures:
        sys.stdout.write("replay seeds for failing trials:\n  " + "\n  ".join(failures) + "\n")
        raise ViolationError(f"{len(failures)} lemma violations")
    sys.stdout.write("all lemma suites passed\n")
    return EXIT_OK


COMMANDS = {
    "classify": cmd_classify,
    "volume": cmd_volume,
    "lengths": cmd_lengths,
    "hull": cmd_hull,
    "polar": cmd_polar,
    "scan-degeneration": cmd_scan_degeneration,
    "regularity": cmd_regularity,
    "verify-lemmas": cmd_verify_lemmas,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="polyvol",
        description="Constant-curvature simplex volumes and polyhedron degeneration checks",
    )
    ap.add_argument("--config", help="run a saved experiment configuration (JSON)")
    sub = ap.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--out", dest="output_path", help="write the result to this file")
        p.add_argument("--save-config", help="also save the resolved configuration JSON here")

    p = sub.add_parser("classify", help="classify a dihedral-angle assignment")
    p.add_argument("--angles", required=True, help="e.g. 1.2x6 or a comma list")
    common(p)

    p = sub.add_parser("volume", help="tetrahedron volume from dihedral angles")
    p.add_argument("--angles", required=True)
    p.add_argument("--curvature", default="hyperbolic", help="spherical or hyperbolic")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--with-oracle", action="store_true")
    p.add_argument("--samples", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=0)
    common(p)

    p = sub.add_parser("lengths", help="edge lengths of a compact simplex")
    p.add_argument("--angles", required=True)
    common(p)

    p = sub.add_parser("hull", help="convex hull of hyperbolic points")
    p.add_argument("--in", dest="input_path", required=True)
    common(p)

    p = sub.add_parser("polar", help="dual cone metric of a polyhedron JSON")
    p.add_argument("--in", dest="input_path", required=True)
    common(p)

    p = sub.add_parser("scan-degeneration", help="stretch-family degeneration sweep")
    p.add_argument("--n-vertices", type=int, default=4)
    p.add_argument("--rho", default="10,15,20,25,30", help="comma list of target diameters")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    common(p)

    p = sub.add_parser("regularity", help="volume/gradient probe along an angle family")
    p.add_argument("--start", required=True, help="angle vector, e.g. 1.2x6")
    p.add_argument("--end", required=True)
    p.add_argument("--curvature", default="hyperbolic")
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--tol", type=float, default=1e-8)
    common(p)

    p = sub.add_parser("verify-lemmas", help="replay the seeded lemma suites")
    p.add_argument("--trials", type=int, default=10**4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t", default="1,2,5", help="frame parameters")
    p.add_argument("--eps", default="0.01,0.05,0.1", help="angle-transfer thresholds")
    common(p)
    return ap


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig(command=args.command)
    if getattr(args, "angles", None):
        cfg.angles = [float(v) for v in _parse_angles(args.angles)]
    if getattr(args, "curvature", None):
        cfg.curvature = _curvature(args.curvature)
    for name in ("tol", "seed", "samples", "trials", "steps"):
        if hasattr(args, name):
            setattr(cfg, name, getattr(args, name))
    if getattr(args, "with_oracle", False):
        cfg.with_oracle = True
    if getattr(args, "input_path", None):
        cfg.input_path = args.input_path
    if getattr(args, "output_path", None):
        cfg.output_path = args.output_path
    if getattr(args, "n_vertices", None):
        cfg.n_vertices = args.n_vertices
    if getattr(args, "rho", None):
        cfg.rho_list = [float(v) for v in args.rho.split(",")]
    if getattr(args, "t", None):
        cfg.t_list = [float(v) for v in args.t.split(",")]
    if getattr(args, "eps", None):
        cfg.eps_list = [float(v) for v in args.eps.split(",")]
    if getattr(args, "start", None):
        cfg.start = [float(v) for v in _parse_angles(args.start)]
    if getattr(args, "end", None):
        cfg.end = [float(v) for v in _parse_angles(args.end)]
    return cfg


def run_config(cfg: ExperimentConfig) -> int:
    if cfg.command not in COMMANDS:
        raise ValueError(f"unknown command {cfg.command!r}")
    return COMMANDS[cfg.command](cfg)


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.config:
            with open(args.config) as fh:
                cfg = ExperimentConfig.from_json(fh.read())
        elif args.command:
            cfg = _config_from_args(args)
        else:
            ap.print_usage(sys.stderr)
            return EXIT_USAGE
        if getattr(args, "save_config", None):
            with open(args.save_config, "w") as fh:
                fh.write(cfg.to_json() + "\n")
        return run_config(cfg)
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ViolationError as exc:
        print(f"property violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
