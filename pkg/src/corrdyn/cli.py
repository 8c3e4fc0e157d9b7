"""Command-line front end.

Subcommands ``evolve``, ``domain``, ``generator``, ``cpcheck`` and
``figures`` write CSV files with a ``# key=value`` metadata block followed by
a header row. Floats are written with 17 significant digits so identical
inputs give byte-identical files.

Exit codes: 0 success, 2 input or schema error, 3 singular dynamical map,
4 invariant violated at runtime.
"""

import argparse
import json
import os
import sys
import warnings

import numpy as np

from . import operators as ops
from .dynamics import (PhysicalDomainWarning, assign, bloch_to_state, condition_number, cp_spectra,
                       in_physical_domain, linear_map)
from .errors import CorrDynError, ReconstructionFailure, SingularMap
from .generators import (correlated_canonical, exact_trajectory, integrate_master_equation,
                         integrate_piecewise)
from .models import jc_coefficients, jc_domain_margin, jc_rates_closed_form
from .scenario import SchemaError, builtin_scenario, load_scenario, parse_matrix

EXIT_OK, EXIT_SCHEMA, EXIT_SINGULAR, EXIT_INVARIANT = 0, 2, 3, 4
TRACE_TOL = 1e-8
ORACLE_TOL = 1e-8

FIG2B_P0 = (0.1, 0.3, 0.5, 0.7, 0.9)
FIG3_T_MAX, FIG3_STEPS = 200.0, 2000


class InvariantViolation(CorrDynError, RuntimeError):
    pass


# -- CSV output -----------------------------------------------------------------

def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if np.isnan(x):
        return "nan"
    return "%.17g" % (x + 0.0)  # +0.0 folds -0.0


def fmt_times(ts):
    return ";".join(fmt(t) for t in ts) if ts else "none"


def write_csv(path, header, rows, meta):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        for k, v in meta.items():
            fh.write(f"# {k}={v}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(x) for x in row) + "\n")


def read_csv(path):
    """Parse a file written by :func:`write_csv` into ``(meta, header, float array)``."""
    meta, lines = {}, []
    with open(path) as fh:
        for line in fh:
            if line.startswith("# "):
                k, _, v = line[2:].rstrip("\n").partition("=")
                meta[k] = v
            else:
                lines.append(line.rstrip("\n"))
    header = lines[0].split(",")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]]) if len(lines) > 1 \
        else np.zeros((0, len(header)))
    return meta, header, data


def state_columns(d, prefix=""):
    return [f"{prefix}{part}_{i}{j}" for i in range(d) for j in range(d) for part in ("re", "im")]


def state_values(rho):
    return [v for z in np.asarray(rho).reshape(-1) for v in (z.real, z.imag)]


def base_meta(sc, command, singular=()):
    return {
        "command": command,
        "model": sc.model,
        "scenario_hash": sc.digest(),
        "t_max": fmt(sc.time_grid.t_max),
        "steps": sc.time_grid.steps,
        "tol_herm": fmt(sc.tolerances.herm),
        "tol_psd": fmt(sc.tolerances.psd),
        "tol_trace": fmt(sc.tolerances.trace),
        "cond_threshold": fmt(sc.cond_threshold),
        "seed": sc.seed,
        "skipped_singular_times": fmt_times(list(singular)),
    }


# -- evolve ---------------------------------------------------------------------

def run_evolve(sc, out, skip_singular=False, allow_unphysical=False, margin=None):
    """Write exact, linear-map and master-equation trajectories plus a summary.

    Returns the pairwise deviations as a dict.
    """
    model, ref = sc.build()
    rho0 = sc.initial(model, ref)
    ok, lam = in_physical_domain(model.context, rho0)
    if not ok:
        if not allow_unphysical:
            raise SchemaError(f"initial state outside the physical domain (min eigenvalue {lam:.3e}); "
                              "use --allow-unphysical to evaluate anyway")
        warnings.warn(f"initial state outside the physical domain (min eigenvalue {lam:.3e})",
                      PhysicalDomainWarning, stacklevel=2)
    times = sc.time_grid.times
    d = model.d_s
    jc = sc.jc_params()
    trajs, singular = {}, []

    if "master" in sc.outputs:
        try:
            tr = integrate_master_equation(model, rho0, times, sc.cond_threshold)
        except SingularMap:
            if not skip_singular:
                raise
            h = times[1] - times[0]
            tr = integrate_piecewise(model, rho0, times, margin if margin is not None else max(10 * h, 1e-2),
                                     sc.cond_threshold)
        singular = list(tr.singular_times)
        trajs["master"] = (tr.states, tr.valid)
    if "exact" in sc.outputs or "linear" in sc.outputs:
        trajs["exact"] = (exact_trajectory(model, rho0, times), np.ones(len(times), dtype=bool))

    meta = base_meta(sc, "evolve", singular)
    meta["domain_min_eigenvalue"] = fmt(lam)
    cols = ["t"] + state_columns(d) + ["trace"]

    if "exact" in sc.outputs:
        states = trajs["exact"][0]
        write_csv(os.path.join(out, "exact.csv"), cols,
                  [[t] + state_values(r) + [np.trace(r).real] for t, r in zip(times, states)], meta)

    if "linear" in sc.outputs:
        rows, lin = [], []
        extra = ["min_choi_eig", "condition_number"]
        if jc is not None:
            extra += ["rho_gg_unc", "rho_gg_corr", "f"]
        for t in times:
            snap = linear_map(model, t)
            r = snap.apply(rho0)
            lin.append(r)
            choi_ev, _ = cp_spectra(snap.M_psi)
            row = [t] + state_values(r) + [np.trace(r).real, choi_ev[0], condition_number(snap.M_phi)]
            if jc is not None:
                unc = ops.apply_superop(snap.M_phi, rho0)
                row += [unc[1, 1].real, r[1, 1].real, jc_coefficients(jc, t).f]
            rows.append(row)
        trajs["linear"] = (np.array(lin), np.ones(len(times), dtype=bool))
        write_csv(os.path.join(out, "linear.csv"), cols + extra, rows, meta)

    if "master" in sc.outputs:
        states, valid = trajs["master"]
        write_csv(os.path.join(out, "master.csv"), cols + ["valid"],
                  [[t] + state_values(r) + [np.trace(r).real, v] for t, r, v in zip(times, states, valid)], meta)

    names = [n for n in ("exact", "linear", "master") if n in trajs]
    devs, summary = {}, []
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            (sa, va), (sb, vb) = trajs[a], trajs[b]
            mask = va & vb
            diff = np.linalg.norm((sa - sb)[mask], axis=(1, 2)) if mask.any() else np.zeros(1)
            devs[(a, b)] = float(np.max(diff))
            summary.append([f"{a}-{b}", devs[(a, b)], int(mask.sum())])
    drifts = {}
    for n in names:
        s, v = trajs[n]
        drifts[n] = float(np.max(np.abs(np.einsum("nii->n", s[v]) - 1))) if v.any() else 0.0
        summary.append([f"trace_drift-{n}", drifts[n], int(v.sum())])
    write_csv(os.path.join(out, "summary.csv"), ["quantity", "max_deviation", "n_points"], summary, meta)

    bad = [n for n, v in drifts.items() if v > TRACE_TOL]
    if bad:
        raise InvariantViolation(f"trace drift above {TRACE_TOL:g} in {', '.join(bad)}")
    if devs.get(("exact", "linear"), 0.0) > ORACLE_TOL and ok:
        raise InvariantViolation(f"linear map deviates from exact propagation by {devs[('exact', 'linear')]:.3e}")
    return devs


# -- domain ---------------------------------------------------------------------

def domain_rows(sc, model, mode="cross", resolution=101, states=None):
    """Header and rows of a domain scan."""
    ctx = model.context
    tol = sc.tolerances.psd
    jc = sc.jc_params()

    def min_eig(rho):
        return float(np.linalg.eigvalsh(ops.hermitian_part(assign(ctx, rho)))[0])

    if mode == "list":
        header = ["index", "accepted", "min_eigenvalue", "trace_error"]
        rows = []
        for k, rho in enumerate(states):
            rho = ops.as_operator(rho, model.d_s)
            lam = min_eig(rho)
            terr = abs(np.trace(rho) - 1)
            rows.append([k, lam >= -tol and terr <= sc.tolerances.trace, lam, terr])
        return header, rows

    if model.d_s != 2:
        raise SchemaError("Bloch-grid domain scans need d_S = 2; use --mode list")
    axis = np.linspace(-1.0, 1.0, resolution)
    if mode == "cross":
        pts = [(x, 0.0, z) for z in axis for x in axis]
    elif mode == "lattice":
        pts = [(x, y, z) for z in axis for y in axis for x in axis]
    else:
        raise SchemaError(f"unknown domain mode {mode!r}")
    header = ["x", "y", "z", "abs_rho01", "in_ball", "accepted", "min_eigenvalue"]
    if jc is not None:
        header.append("sphere_margin")
    pts = np.array(pts)
    sig = np.array([ops.SIGMA_X, ops.SIGMA_Y, ops.SIGMA_Z])
    rhos = 0.5 * (np.eye(2) + np.einsum("nk,kij->nij", pts, sig))
    joint = np.einsum("nij,ab->niajb", rhos, ctx.rho_e).reshape(len(pts), model.d_s * model.d_e, -1) + ctx.chi
    lams = np.linalg.eigvalsh(0.5 * (joint + joint.conj().transpose(0, 2, 1)))[:, 0]
    rows = []
    for v, lam in zip(pts, lams):
        r = float(np.sqrt(v @ v))
        row = [v[0], v[1], v[2], 0.5 * np.hypot(v[0], v[1]), r <= 1 + 1e-12, lam >= -tol, lam]
        if jc is not None:
            row.append(jc_domain_margin(jc, v))
        rows.append(row)
    return header, rows


def run_domain(sc, out, mode="cross", resolution=101, states_path=None, name="domain.csv"):
    model, _ = sc.build()
    states = None
    if mode == "list":
        if states_path is None:
            raise SchemaError("list mode needs --states <file>")
        try:
            with open(states_path) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise SchemaError(f"cannot read states file: {exc}") from None
        if not isinstance(raw, list):
            raise SchemaError("states file must hold a list of matrices")
        states = [parse_matrix(m, f"states[{k}]") for k, m in enumerate(raw)]
    header, rows = domain_rows(sc, model, mode, resolution, states)
    meta = base_meta(sc, "domain")
    meta["mode"] = mode
    if mode != "list":
        meta["resolution"] = resolution
    write_csv(os.path.join(out, name), header, rows, meta)
    return header, rows


# -- generator ------------------------------------------------------------------

QUBIT_KOSSAKOWSKI_BASIS = np.array([ops.SIGMA_PLUS, ops.SIGMA_MINUS, ops.SIGMA_Z / np.sqrt(2)])


def qubit_rates(form):
    """Rates of the sigma_+, sigma_-, sigma_z channels (diagonal Kossakowski entries)."""
    a = form.kossakowski(QUBIT_KOSSAKOWSKI_BASIS)
    off = a - np.diag(np.diag(a))
    return a[0, 0].real, a[1, 1].real, 0.5 * a[2, 2].real, float(np.max(np.abs(off)))


def run_generator(sc, out):
    model, _ = sc.build()
    d = model.d_s
    jc = sc.jc_params()
    times = sc.time_grid.times
    kcols = [f"K_{p}_{i}{j}" for i in range(d) for j in range(d) for p in ("re", "im")]
    header = ["t"] + kcols + [f"unc_{c}" for c in kcols] + ["kchi_norm", "residual", "n_channels"]
    if d == 2:
        header += ["lambda_plus", "lambda_minus", "lambda_z", "kossakowski_offdiag"]
    if jc is not None:
        header += ["lambda_plus_closed", "lambda_minus_closed", "lambda_z_closed"]
    ch_header = ["t", "form", "index", "rate"] + [f"L_{p}_{i}{j}" for i in range(d) for j in range(d)
                                                  for p in ("re", "im")]
    rows, ch_rows, skipped = [], [], []
    max_kchi = 0.0
    for t in times:
        try:
            cc = correlated_canonical(model, t, sc.cond_threshold)
        except SingularMap:
            skipped.append(float(t))
            continue
        kchi = float(np.linalg.norm(cc.correlation.K_S))
        max_kchi = max(max_kchi, kchi)
        resid = float(np.max(np.abs(cc.merged.superop() - cc.snapshot.M_Lchi)))
        row = [t] + state_values(cc.merged.K_S) + state_values(cc.uncorrelated.K_S) + \
            [kchi, resid, len(cc.merged.rates)]
        if d == 2:
            row += list(qubit_rates(cc.merged))
        if jc is not None:
            try:
                r = jc_rates_closed_form(jc, t)
                row += [r.lambda_plus, r.lambda_minus, r.lambda_z]
            except ArithmeticError:
                row += [np.nan] * 3
        rows.append(row)
        for tag, form in (("uncorrelated", cc.uncorrelated), ("correlation", cc.correlation),
                          ("merged", cc.merged)):
            for k, (rate, L) in enumerate(form.channels):
                ch_rows.append([t, tag, k, rate] + state_values(L))
    if not rows:
        raise SingularMap(skipped[0] if skipped else float("nan"), float("inf"),
                          "all requested times are singular")
    meta = base_meta(sc, "generator", skipped)
    write_csv(os.path.join(out, "generator.csv"), header, rows, meta)
    write_csv(os.path.join(out, "channels.csv"), ch_header, ch_rows, meta)
    if max_kchi > 1e-9:
        raise InvariantViolation(f"correlation dissipator carries a Hamiltonian part ({max_kchi:.3e})")
    return header, rows


# -- cpcheck --------------------------------------------------------------------

def run_cpcheck(sc, out):
    model, _ = sc.build()
    tol = sc.tolerances.psd
    rows = []
    first = None
    for t in sc.time_grid.times:
        choi_ev, eps_ev = cp_spectra(linear_map(model, t).M_psi)
        rows.append([t, choi_ev[0], eps_ev[0], float(np.max(np.abs(choi_ev - eps_ev)))])
        if first is None and choi_ev[0] < -tol:
            first = float(t)
    meta = base_meta(sc, "cpcheck")
    meta["first_violation_t"] = "none" if first is None else fmt(first)
    write_csv(os.path.join(out, "cpcheck.csv"), ["t", "min_choi_eig", "min_eps_eig", "spectrum_gap"], rows, meta)
    return first, rows


# -- figures --------------------------------------------------------------------

FIGURE_TAGS = ("fig1", "fig2", "fig3")


def _svg_heatmap(path, rows, header, title):
    ix, iz, ia = header.index("x"), header.index("z"), header.index("accepted")
    xs = sorted({r[ix] for r in rows})
    n = len(xs)
    cell = 300.0 / n
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="320" height="340" viewBox="0 0 320 340">',
             f'<text x="10" y="15" font-size="12">{title}</text>',
             '<circle cx="160" cy="180" r="150" fill="none" stroke="black" stroke-dasharray="4"/>']
    for r in rows:
        if r[ia]:
            cx = 10 + (r[ix] + 1) / 2 * 300 - cell / 2
            cy = 30 + (1 - (r[iz] + 1) / 2) * 300 - cell / 2
            parts.append(f'<rect x="{cx:.3f}" y="{cy:.3f}" width="{cell:.3f}" height="{cell:.3f}" fill="#4a7ebb"/>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def _svg_lines(path, t, series, title):
    colors = ("#4a7ebb", "#c0392b", "#27ae60")
    lo = min(float(np.min(s)) for _, s in series)
    hi = max(float(np.max(s)) for _, s in series)
    span = (hi - lo) or 1.0
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="520" height="300" viewBox="0 0 520 300">',
             f'<text x="10" y="15" font-size="12">{title}</text>']
    for k, (name, s) in enumerate(series):
        pts = " ".join(f"{10 + 500 * ti / t[-1]:.2f},{280 - 250 * (si - lo) / span:.2f}" for ti, si in zip(t, s))
        parts.append(f'<polyline fill="none" stroke="{colors[k % 3]}" points="{pts}"/>')
        parts.append(f'<text x="420" y="{30 + 14 * k}" font-size="11" fill="{colors[k % 3]}">{name}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def run_figures(tags, out, resolution=101, svg=False):
    unknown = [t for t in tags if t not in FIGURE_TAGS]
    if unknown:
        raise SchemaError(f"unknown figure tag(s) {unknown}; choose from {FIGURE_TAGS}")
    root = os.path.join(out, "figures")
    written = []

    def domain(sc, sub, name, title):
        model, _ = sc.build()
        header, rows = domain_rows(sc, model, "cross", resolution)
        meta = base_meta(sc, "figures")
        meta["resolution"] = resolution
        path = os.path.join(root, sub, name + ".csv")
        write_csv(path, header, rows, meta)
        written.append(path)
        if svg:
            _svg_heatmap(path[:-4] + ".svg", rows, header, title)

    if "fig1" in tags:
        for p, name in ((0.5, "swap_p0.5"), (0.875, "swap_p0.875")):
            domain(builtin_scenario("swap", p=p), "fig1", name, f"swap p={p}")
    if "fig2" in tags:
        domain(builtin_scenario("jaynes_cummings", a=0.7, p0=0.5), "fig2", "jc_a0.7_p0_0.5", "a=0.7 p0=0.5")
        for p0 in FIG2B_P0:
            domain(builtin_scenario("jaynes_cummings", a=0.9, p0=p0), "fig2", f"jc_a0.9_p0_{p0}", f"a=0.9 p0={p0}")
    if "fig3" in tags:
        sc = builtin_scenario("jaynes_cummings", a=0.6, p0=0.4, delta=0.1, g=0.1).with_overrides(
            t_max=FIG3_T_MAX, steps=FIG3_STEPS)
        model, rho0 = sc.build()
        rows = []
        for t in sc.time_grid.times:
            snap = linear_map(model, t)
            unc = ops.apply_superop(snap.M_phi, rho0)[1, 1].real
            corr = snap.apply(rho0)[1, 1].real
            rows.append([t, unc, corr, jc_coefficients(sc.jc_params(), t).f])
        path = os.path.join(root, "fig3", "fig3.csv")
        write_csv(path, ["t", "rho_gg_unc", "rho_gg_corr", "f"], rows, base_meta(sc, "figures"))
        written.append(path)
        if svg:
            arr = np.array(rows)
            _svg_lines(path[:-4] + ".svg", arr[:, 0], [("rho_gg_unc", arr[:, 1]), ("rho_gg_corr", arr[:, 2]),
                                                       ("f", arr[:, 3])], "ground state probability")
    return written


# -- entry point ------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario JSON file")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--t-max", type=float)
    common.add_argument("--steps", type=int)
    common.add_argument("--tol-psd", type=float)
    common.add_argument("--cond-threshold", type=float)
    common.add_argument("--skip-singular", action="store_true",
                        help="restart past singular times instead of failing")
    common.add_argument("--allow-unphysical", action="store_true",
                        help="evaluate initial states outside the physical domain")
    common.add_argument("--seed", type=int)

    p = argparse.ArgumentParser(prog="corrdyn", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    ev = sub.add_parser("evolve", parents=[common], help="exact, linear-map and master-equation trajectories")
    ev.add_argument("--margin", type=float, help="time skipped after a singular point (with --skip-singular)")
    dm = sub.add_parser("domain", parents=[common], help="physical-domain scan")
    dm.add_argument("--mode", choices=("cross", "lattice", "list"), default="cross")
    dm.add_argument("--resolution", type=int, default=101)
    dm.add_argument("--states", help="JSON list of matrices (list mode)")
    sub.add_parser("generator", parents=[common], help="effective Hamiltonian and rates over the time grid")
    sub.add_parser("cpcheck", parents=[common], help="complete-positivity sweep")
    fg = sub.add_parser("figures", parents=[common], help="figure data bundles")
    fg.add_argument("tags", nargs="*", default=list(FIGURE_TAGS))
    fg.add_argument("--resolution", type=int, default=101)
    fg.add_argument("--svg", action="store_true", help="also write simple SVG previews")
    return p


def _scenario(args):
    if not args.scenario:
        raise SchemaError("--scenario is required")
    return load_scenario(args.scenario).with_overrides(args.t_max, args.steps, args.tol_psd,
                                                       args.cond_threshold, args.seed)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "figures":
            if getattr(args, "resolution", 101) < 2:
                raise SchemaError("--resolution must be at least 2")
            for path in run_figures(args.tags, args.out, args.resolution, args.svg):
                print(path)
            return EXIT_OK
        sc = _scenario(args)
        if args.command == "evolve":
            with warnings.catch_warnings():
                warnings.simplefilter("always", PhysicalDomainWarning)
                devs = run_evolve(sc, args.out, args.skip_singular, args.allow_unphysical, args.margin)
            for (a, b), v in devs.items():
                print(f"{a}-{b} max deviation {v:.3e}")
        elif args.command == "domain":
            if args.resolution < 2:
                raise SchemaError("--resolution must be at least 2")
            _, rows = run_domain(sc, args.out, args.mode, args.resolution, args.states)
            acc = sum(1 for r in rows if r[1 if args.mode == "list" else 5])
            print(f"accepted {acc} of {len(rows)}")
        elif args.command == "generator":
            run_generator(sc, args.out)
        elif args.command == "cpcheck":
            first, _ = run_cpcheck(sc, args.out)
            print("no CP violation on grid" if first is None else f"first CP violation at t={first:.17g}")
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (SingularMap, ArithmeticError) as exc:
        if isinstance(exc, ReconstructionFailure):
            print(f"invariant violated: {exc}", file=sys.stderr)
            return EXIT_INVARIANT
        print(f"singular: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (CorrDynError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
