"""Command-line entry point ``bsq``.

Exit codes: 0 ok, 2 configuration error, 3 blow-up signal, 4 invariant failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from bsq import analysis, io, orchestrate
from bsq.config import ConfigError, parse_config
from bsq.errors import BsqError, ConfigurationError

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_INVARIANT = 0, 2, 3, 4

log = logging.getLogger("bsq")


def _load(path, overrides):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from exc
    return parse_config(text, overrides)


def cmd_run(args) -> int:
    cfg = _load(args.config, args.override)
    result = orchestrate.execute(cfg)
    out = orchestrate.emit_outputs(result, args.out)
    print(orchestrate.summary_text(result), end="")
    print(f"outputs written to {out}")
    if result.trajectory.flagged:
        return EXIT_BLOWUP
    return EXIT_OK if result.ok else EXIT_INVARIANT


def _parse_radii(text):
    try:
        return [float(x) for x in text.split(",") if x]
    except ValueError as exc:
        raise ConfigError([f"--R: cannot parse {text!r}"]) from exc


def cmd_study(args) -> int:
    cfg = _load(args.config, args.override)
    R_list = _parse_radii(args.R)
    ref = float(args.ref) if args.ref is not None else None
    if cfg.stepper.dt is None:
        raise ConfigError(["dt: the Cauchy study needs a fixed dt, not auto"])
    res = analysis.truncation_convergence_study(
        cfg.grid, cfg.spec, cfg.stepper, cfg.ic, R_list, cfg["t_end"], ref,
        every=cfg["diagnostics.every"])
    out = Path(args.out or cfg["output.dir"])
    out.mkdir(parents=True, exist_ok=True)
    rows = [(R, y) for R, y in zip(res.R_list, res.Y_ref)]
    lines = [f"ref_R={io.fmt17(res.ref_R)}", f"epsilon_hat={io.fmt17(res.epsilon_hat)}"]
    checks = [
        orchestrate.Check("Y_decreasing", res.is_decreasing(), float(res.is_decreasing()), 1.0),
        orchestrate.Check("epsilon_hat_positive", res.epsilon_hat > 0, res.epsilon_hat, 0.0),
    ]
    for sp, (actual, bound, holds) in sorted(res.lift.items()):
        checks.append(orchestrate.Check(f"lift_H{sp:g}", holds, actual, bound))
    lines += [c.line() for c in checks]
    with io.output_lock(out):
        io.atomic_write(out / "cauchy.csv", io.csv_text(("R", "Y"), rows))
        io.atomic_write(out / "cauchy_matrix.csv",
                        io.csv_text(("R",) + tuple(io.fmt17(r) for r in res.R_all),
                                    [(R,) + tuple(row) for R, row in zip(res.R_all, res.Y)]))
        io.atomic_write(out / "summary.txt", "\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_INVARIANT


PROBE_ALIASES = {"kp": "kato_ponce", "feff": "fefferman", "lip": "lipschitz_F"}


def cmd_probe(args) -> int:
    cfg = _load(args.config, args.override)
    kind = PROBE_ALIASES[args.kind]
    ens = analysis.Ensemble(seeds=tuple(range(cfg["seed"], cfg["seed"] + cfg["probe.draws"])),
                            resolutions=tuple(cfg["probe.resolutions"]), dim=cfg["grid.dim"],
                            s=cfg["probe.s"], band=cfg["probe.band"])
    rep = analysis.inequality_probe(kind, ens)
    out = Path(args.out or cfg["output.dir"])
    out.mkdir(parents=True, exist_ok=True)
    lines = [f"probe={kind}"]
    for n, summ in rep.summary.items():
        lines.append(f"resolution={n} max={io.fmt17(summ['max'])} median={io.fmt17(summ['median'])}")
    checks = [orchestrate.Check("ratios_finite", rep.all_finite, float(rep.all_finite), 1.0)]
    if len(rep.summary) > 1:
        checks.append(orchestrate.Check("max_ratio_stable", rep.stable, rep.spread, 0.2))
    lines += [c.line() for c in checks]
    with io.output_lock(out):
        io.atomic_write(out / f"probe_{args.kind}.csv", rep.to_csv())
        io.atomic_write(out / f"probe_{args.kind}_summary.txt", "\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_INVARIANT


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    records = orchestrate.read_timeseries(run_dir)
    calib = analysis.load_calibration()
    mon = analysis.blowup_monitor(records, calib.get("gronwall_C_emp"))
    checks = [
        orchestrate.Check("integrals_monotone", mon.monotone, float(mon.monotone), 1.0),
        orchestrate.Check("integrals_start_at_zero", mon.start_at_zero, float(mon.start_at_zero), 1.0),
        orchestrate.Check("integrals_finite", mon.finite, float(mon.finite), 1.0),
        orchestrate.Check("bmo_le_2_linf", mon.bmo_linf_ok, mon.bmo_linf_max_ratio, 2.0),
    ]
    if mon.C_emp is not None:
        checks.append(orchestrate.Check("gronwall_envelope", bool(mon.envelope_ok), mon.C_required,
                                        mon.envelope_factor * mon.C_emp))
    lines = [
        f"records={len(records)} t_final={io.fmt17(mon.times[-1])}",
        f"I_BKM={io.fmt17(mon.I_bkm[-1])} I_curl={io.fmt17(mon.I_curl[-1])} I_linf={io.fmt17(mon.I_linf[-1])}",
        f"X0={io.fmt17(mon.X[0])} Xmax={io.fmt17(mon.X.max())} C_required={io.fmt17(mon.C_required)}",
    ] + [c.line() for c in checks]
    summary = run_dir / "summary.txt"
    if summary.exists() and "BLOWUP_SIGNAL" in summary.read_text():
        lines.append("note: run was flagged with a blow-up signal; monitor covers the finite part")
    text = "\n".join(lines) + "\n"
    io.atomic_write(run_dir / "report.txt", text)
    print(text, end="")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_INVARIANT


def cmd_selftest(args) -> int:
    from bsq import selftest

    ok = selftest.run_selftest(Path(args.out), verbose=not args.quiet)
    return EXIT_OK if ok else EXIT_INVARIANT


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bsq", description="Truncated Boussinesq solver and diagnostics")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("config")
        sp.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
        sp.add_argument("--out", default=None, help="output directory (default: output.dir)")

    sp = sub.add_parser("run", help="integrate one configuration")
    add_common(sp)
    sp.set_defaults(func=cmd_run)

    st = sub.add_parser("study", help="truncation studies")
    st_sub = st.add_subparsers(dest="study", required=True)
    sc = st_sub.add_parser("cauchy", help="Cauchy-in-R convergence study")
    add_common(sc)
    sc.add_argument("--R", required=True, help="comma-separated radii, e.g. 8,12,16,24")
    sc.add_argument("--ref", default=None, help="reference radius (default: largest R)")
    sc.set_defaults(func=cmd_study)

    pr = sub.add_parser("probe", help="inequality ratio probes")
    pr.add_argument("kind", choices=sorted(PROBE_ALIASES))
    add_common(pr)
    pr.set_defaults(func=cmd_probe)

    rp = sub.add_parser("report", help="blow-up monitor report for a run directory")
    rp.add_argument("run_dir")
    rp.set_defaults(func=cmd_report)

    sf = sub.add_parser("selftest", help="desk-scale property suite")
    sf.add_argument("--out", default="bsq_selftest")
    sf.add_argument("--quiet", action="store_true")
    sf.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ConfigurationError) as exc:
        print(f"configuration error:\n{exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BsqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
