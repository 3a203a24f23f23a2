"""Command-line interface.

Subcommands mirror the library layers: ``catalog`` and ``analyze`` inspect
codes, ``transform`` applies group mixing or constellation rotation,
``mindet`` / ``divprod`` / ``sweep-theta`` / ``search-t8`` run the coding
gain machinery, ``simulate`` produces BER curves, and ``verify`` executes
the cross-module invariant suite.

Exit codes: 0 success, 1 usage error (unknown flags, codes or modulations),
2 verification failure, 3 infeasible enumeration budget. Angles are degrees
on the command line; JSON artifacts carry both degrees and radians. Every
subcommand is deterministic given its arguments and seed. Output files are
written whole after the computation finishes, so failures leave no partial
artifacts behind.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import analysis, catalog, decoder, gain, modem, simulate, transforms

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY = 2
EXIT_BUDGET = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); route to exit code 1
        raise UsageError(f"{self.prog}: {message}")


def _angles_block(radians) -> dict:
    rad = [float(a) for a in radians]
    return {"deg": [math.degrees(a) for a in rad], "rad": rad}


def _write_artifact(path, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except BaseException:
        if os.path.exists(path):
            os.unlink(path)
        raise


def _parse_snr(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"snr grid {text!r} is not start:step:stop")
    start, step, stop = (float(p) for p in parts)
    if step <= 0 or stop < start:
        raise UsageError(f"snr grid {text!r} is not increasing")
    grid = []
    value = start
    while value <= stop + 1e-9:
        grid.append(round(value, 10))
        value += step
    return tuple(grid)


def _parse_curves(code_arg: str, default_mod: str):
    """Parse ``--code`` entries of the form NAME or NAME:MOD."""
    curves = []
    for token in code_arg.split(","):
        token = token.strip()
        if not token:
            continue
        name, _, mod = token.partition(":")
        if name not in catalog.CODE_NAMES:
            raise UsageError(
                f"unknown code {name!r}; valid: {', '.join(catalog.CODE_NAMES)}"
            )
        try:
            constellation = modem.parse_modulation(mod or default_mod)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        curves.append((name, constellation))
    if not curves:
        raise UsageError("no codes given")
    return curves


def _get_code(name: str) -> catalog.CodeDefinition:
    try:
        return catalog.build(name)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _get_modulation(name: str) -> modem.Constellation:
    try:
        return modem.parse_modulation(name)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# --------------------------------------------------------------------------
# subcommands

def _cmd_catalog(args) -> int:
    if args.all:
        payload = [catalog.code_to_dict(catalog.build(n))
                   for n in catalog.CODE_NAMES]
    else:
        payload = catalog.code_to_dict(_get_code(args.code))
    _write_artifact(args.out, json.dumps(payload, indent=2) + "\n")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    code = _get_code(args.code)
    table = analysis.qo_table(code)
    payload = {
        "code": code.name,
        "T": code.T,
        "Nt": code.nt,
        "K": code.K,
        "rate": f"{code.rate.numerator}/{code.rate.denominator}",
        "grouping": [list(g) for g in code.grouping],
        "qo_table": table.tolist(),
        "symbols_per_group": analysis.joint_detection_size(code),
    }
    _write_artifact(args.out, json.dumps(payload, indent=2) + "\n")
    return EXIT_OK


def _cmd_transform(args) -> int:
    code = _get_code(args.code)
    chosen = [v is not None for v in (args.gclt_theta, args.gclt_givens,
                                      args.cr_angle)]
    if sum(chosen) != 1:
        raise UsageError(
            "choose exactly one of --gclt-theta, --gclt-givens, --cr-angle"
        )
    if args.gclt_theta is not None:
        theta = math.radians(args.gclt_theta)
        spec = transforms.GcltSpec.rotations_2d(code.grouping, theta)
        out = transforms.apply_gclt(code, spec)
        meta = {"type": "gclt", "theta": _angles_block([theta])}
    elif args.gclt_givens is not None:
        rads = [math.radians(v) for v in args.gclt_givens]
        spec = transforms.GcltSpec.givens_4d_spec(code.grouping, rads)
        out = transforms.apply_gclt(code, spec)
        meta = {"type": "gclt-givens", "angles": _angles_block(rads)}
    else:
        if not args.cr_symbols:
            raise UsageError("--cr-angle requires --cr-symbols")
        symbols = [int(v) for v in args.cr_symbols.split(",")]
        phi = math.radians(args.cr_angle)
        spec = transforms.CrSpec.uniform(symbols, phi)
        out = transforms.apply_cr(code, spec)
        meta = {
            "type": "cr",
            "symbols": symbols,
            "angle": _angles_block([phi]),
        }
    payload = catalog.code_to_dict(out)
    payload["transform"] = meta
    _write_artifact(args.out, json.dumps(payload, indent=2) + "\n")
    return EXIT_OK


def _cmd_mindet(args) -> int:
    code = _get_code(args.code)
    constellation = _get_modulation(args.mod)
    report = gain.min_det_search(code, constellation, scope=args.scope)
    payload = {
        "code": code.name,
        "mod": args.mod,
        "scope": report.scope,
        "min_det": report.min_det,
        "argmin_deltas": list(report.argmin),
        "per_group": [
            {"group": list(g.group), "min_det": g.min_det,
             "argmin_deltas": list(g.argmin)}
            for g in report.per_group
        ],
    }
    _write_artifact(args.out, json.dumps(payload, indent=2) + "\n")
    return EXIT_OK


def _cmd_divprod(args) -> int:
    code = _get_code(args.code)
    constellation = _get_modulation(args.mod)
    report = gain.diversity_product(code, constellation)
    payload = {
        "code": code.name,
        "mod": args.mod,
        "zeta": report.zeta,
        "full_diversity": report.full_diversity,
        "min_det": report.min_det,
    }
    _write_artifact(args.out, json.dumps(payload, indent=2) + "\n")
    return EXIT_OK


def _cmd_sweep_theta(args) -> int:
    constellation = _get_modulation(args.mod)
    rows = gain.case_sweep_rows(constellation, step_deg=args.step)
    top = constellation.levels_per_rail - 1
    pairs = [(m, n) for m in range(1, top + 1) for n in range(1, top + 1)]
    header = ["theta_deg", "min_det"] + [f"det_m{m}_n{n}" for m, n in pairs]
    lines = [f"# qostbc sweep-theta mod={args.mod} step={args.step}",
             ",".join(header)]
    for deg, overall, cases in rows:
        cells = [str(deg), str(overall)] + [str(cases[p]) for p in pairs]
        lines.append(",".join(cells))
    _write_artifact(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_search_t8(args) -> int:
    result = gain.search_t8_angles(
        starts=args.starts, seed=args.seed, workers=args.workers
    )
    payload = {
        "starts": args.starts,
        "seed": args.seed,
        "angles": _angles_block(result.angles),
        "zeta": result.zeta,
    }
    _write_artifact(args.out, json.dumps(payload, indent=2) + "\n")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    curve_specs = _parse_curves(args.code, args.mod)
    curves = []
    for name, constellation in curve_specs:
        config = simulate.SimConfig(
            code=name,
            modulation=constellation.order,
            nr=args.nr,
            snr_db=_parse_snr(args.snr),
            min_bit_errors=args.min_errors,
            max_channel_uses=args.max_uses,
            seed=args.seed,
            workers=args.workers,
        )
        curves.append(simulate.run_ber(config))
    _write_artifact(args.out, simulate.curve_csv(curves))
    if args.svg:
        _write_artifact(args.svg, simulate.curve_svg(curves))
    return EXIT_OK


def _cmd_verify(args) -> int:
    failures = 0
    checks = run_verification()
    if args.ber:
        checks = _chain(checks, run_ber_verification(args.workers))
    for name, ok, detail in checks:
        print(f"[{'pass' if ok else 'FAIL'}] {name}: {detail}")
        failures += 0 if ok else 1
    if failures:
        print(f"{failures} verification check(s) failed")
        return EXIT_VERIFY
    print("all verification checks passed")
    return EXIT_OK


def _chain(*iterables):
    for it in iterables:
        yield from it


# --------------------------------------------------------------------------
# verification suite (fast cross-module invariants)

def run_verification():
    """Yield (check name, ok, detail) for the cross-module invariant suite."""
    qam4 = modem.make_qam(4)

    # power traces
    worst = 0.0
    for name in catalog.CODE_NAMES:
        code = catalog.build(name)
        traces, _ = catalog.validate_power(code)
        worst = max(worst, float(np.abs(traces - code.power_target).max()))
    yield "power traces", worst <= 1e-12, f"max deviation {worst:.2e}"

    # grouping regressions
    expected = {
        "Q4": ((1, 4), (2, 3), (5, 8), (6, 7)),
        "Q4_CR": ((1, 4, 5, 8), (2, 3, 6, 7)),
        "Q8": ((1, 10), (2, 11), (3, 12), (4, 7), (5, 8), (6, 9)),
        "T8": ((1, 4, 6, 7), (2, 3, 5, 8), (9, 12, 14, 15),
               (10, 11, 13, 16)),
    }
    bad = [n for n, want in expected.items()
           if catalog.build(n).grouping != want]
    yield "grouping regressions", not bad, f"mismatches: {bad or 'none'}"

    sizes = {"Q4": 2, "Q4_CR": 4, "Q4_LT": 2, "Q8": 2, "Q8_CR": 4,
             "Q8_LT": 2, "T8": 4, "T8_CR": 8, "T8_LT": 4, "G4C": 1}
    bad = [n for n, want in sizes.items()
           if analysis.joint_detection_size(catalog.build(n)) != want]
    yield "joint-detection sizes", not bad, f"mismatches: {bad or 'none'}"

    # matched-filter Gram block-diagonality
    rng = np.random.default_rng(np.random.SeedSequence([101]))
    worst_ratio = 0.0
    for name in catalog.CODE_NAMES:
        code = catalog.build(name)
        for nr in (1, 2):
            for _ in range(25):
                h = simulate.draw_channel(rng, code.nt, nr)
                rep = analysis.gram_block_report(code, h)
                worst_ratio = max(worst_ratio,
                                  rep.max_off_group / rep.max_entry)
    yield ("gram block-diagonality", worst_ratio < 1e-10,
           f"max off-group ratio {worst_ratio:.2e}")

    # grouping preserved under random group mixing
    rng = np.random.default_rng(np.random.SeedSequence([202]))
    ok = True
    for name in ("Q4", "Q8", "T8"):
        code = catalog.build(name)
        for _ in range(10):
            mats = []
            for group in code.grouping:
                if len(group) == 2:
                    mats.append(transforms.rotation_2d(rng.uniform(0, np.pi)))
                else:
                    mats.append(transforms.givens_4d(
                        list(rng.uniform(-np.pi / 2, np.pi / 2, 6))
                    ))
            spec = transforms.GcltSpec.from_matrices(code.grouping, mats)
            mixed = transforms.apply_gclt(code, spec)
            ok = ok and mixed.grouping == code.grouping
            _, power_ok = catalog.validate_power(mixed)
            ok = ok and power_ok
    yield "group mixing preserves grouping/power", ok, "30 random specs"

    # diversity products
    targets = {"Q4_CR": 0.3536, "Q4_LT": 0.3344, "Q8_CR": 0.2887,
               "Q8_LT": 0.2730, "T8_CR": 0.2187, "T8_LT": 0.1531}
    worst_err = 0.0
    for name, want in targets.items():
        got = gain.diversity_product(catalog.build(name), qam4).zeta
        worst_err = max(worst_err, abs(got - want))
    nfd = all(
        not gain.diversity_product(catalog.build(n), qam4).full_diversity
        for n in ("Q4", "Q8", "T8")
    )
    yield ("diversity products", worst_err <= 1e-3 and nfd,
           f"max |zeta error| {worst_err:.2e}")

    # decoder spot check: grouped equals exhaustive
    rng = np.random.default_rng(np.random.SeedSequence([303]))
    agree = True
    for name in ("Q4", "Q4_CR", "Q4_LT", "G4C"):
        code = catalog.build(name)
        for _ in range(40):
            h = simulate.draw_channel(rng, code.nt, 1)
            bits = rng.integers(0, 2, code.K * qam4.bits_per_symbol)
            s = qam4.modulate(bits)
            rho = 10.0
            r = simulate.transmit(code, s, h, rho, rng)
            g = decoder.grouped_ml_detect(code, qam4, h, r, rho)
            e = decoder.exhaustive_ml_detect(code, qam4, h, r, rho)
            agree = agree and np.array_equal(g.real_symbols, e.real_symbols)
    yield "grouped vs exhaustive ML", agree, "160 trials"

    # modem round trip
    rng = np.random.default_rng(np.random.SeedSequence([404]))
    ok = True
    for order in modem.SUPPORTED_ORDERS:
        constellation = modem.make_qam(order)
        bits = rng.integers(0, 2, (50, 4 * constellation.bits_per_symbol))
        ok = ok and bool(
            np.array_equal(constellation.demap(constellation.modulate(bits)),
                           bits)
        )
        energy = np.mean(np.abs(
            constellation.pam_levels[:, None]
            + 1j * constellation.pam_levels[None, :]
        ) ** 2)
        ok = ok and abs(energy - 1.0) <= 1e-12
    yield "modem round trip / unit energy", ok, "all orders"


def run_ber_verification(workers: int = 1):
    """Monte Carlo relationship checks (minutes): full-diversity slopes and
    the horizontal gaps between the rotated and group-mixed variants."""
    grid = tuple(float(v) for v in range(0, 26, 2))
    curves = {}
    for name, order in (("Q4", 4), ("Q4_CR", 4), ("Q4_LT", 4), ("G4C", 16)):
        cfg = simulate.SimConfig(
            code=name, modulation=order, nr=1, snr_db=grid,
            min_bit_errors=200, max_channel_uses=2_000_000, seed=7,
            workers=workers,
        )
        curves[name] = simulate.run_ber(cfg)
    gap = (simulate.snr_at_ber(curves["Q4_LT"], 1e-3)
           - simulate.snr_at_ber(curves["Q4_CR"], 1e-3))
    yield ("four-antenna gap at BER 1e-3", 0.0 <= gap <= 0.7,
           f"{gap:.3f} dB (<= 0.7)")
    s_lt = simulate.final_decade_slope(curves["Q4_LT"])
    s_bench = simulate.final_decade_slope(curves["G4C"])
    ok = (s_lt is not None and s_bench is not None
          and abs(s_lt - s_bench) <= 0.25 * abs(s_bench))
    yield ("full-diversity slope agreement", ok,
           f"{s_lt:.3f} vs {s_bench:.3f} per dB")
    s_q4 = simulate.final_decade_slope(curves["Q4"])
    yield ("unmixed code visibly shallower", s_q4 / s_lt < 0.8,
           f"slope ratio {s_q4 / s_lt:.3f} (< 0.8)")

    eight = {}
    for name in ("Q8_CR", "Q8_LT"):
        cfg = simulate.SimConfig(
            code=name, modulation=4, nr=1,
            snr_db=tuple(float(v) for v in range(0, 14, 2)),
            min_bit_errors=200, max_channel_uses=2_000_000, seed=7,
            workers=workers,
        )
        eight[name] = simulate.run_ber(cfg)
    gap8 = (simulate.snr_at_ber(eight["Q8_LT"], 1e-3)
            - simulate.snr_at_ber(eight["Q8_CR"], 1e-3))
    yield ("eight-antenna gap at BER 1e-3", abs(gap8) <= 0.7,
           f"{gap8:.3f} dB (|.| <= 0.7)")


# --------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="qostbc", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("catalog", help="dump a code (or all) as JSON")
    p.add_argument("--code", default="Q4")
    p.add_argument("--all", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_catalog)

    p = sub.add_parser("analyze", help="grouping and pair-check table")
    p.add_argument("--code", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("transform", help="apply group mixing or rotation")
    p.add_argument("--code", required=True)
    p.add_argument("--gclt-theta", type=float, default=None,
                   help="pair mixing angle in degrees")
    p.add_argument("--gclt-givens", type=float, nargs=6, default=None,
                   metavar="DEG",
                   help="six plane angles in degrees for four-rail groups")
    p.add_argument("--cr-angle", type=float, default=None,
                   help="rotation angle in degrees")
    p.add_argument("--cr-symbols", default=None,
                   help="comma-separated complex symbol indices to rotate")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_transform)

    p = sub.add_parser("mindet", help="minimum distance determinant")
    p.add_argument("--code", required=True)
    p.add_argument("--mod", default="4qam")
    p.add_argument("--scope", choices=("within_group", "full"),
                   default="within_group")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_mindet)

    p = sub.add_parser("divprod", help="diversity product")
    p.add_argument("--code", required=True)
    p.add_argument("--mod", default="4qam")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_divprod)

    p = sub.add_parser("sweep-theta", help="min-det vs mixing angle CSV")
    p.add_argument("--mod", default="16qam")
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_sweep_theta)

    p = sub.add_parser("search-t8", help="search the six 4-D mixing angles")
    p.add_argument("--starts", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_search_t8)

    p = sub.add_parser("simulate", help="Monte Carlo BER curves (CSV/SVG)")
    p.add_argument("--code", required=True,
                   help="comma list of codes, each optionally NAME:MOD")
    p.add_argument("--mod", default="4qam")
    p.add_argument("--nr", type=int, default=1)
    p.add_argument("--snr", required=True,
                   help="grid as start:step:stop dB, stop inclusive")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-errors", type=int, default=200)
    p.add_argument("--max-uses", type=int, default=2_000_000)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", default=None)
    p.add_argument("--svg", default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("verify", help="run the cross-module invariant suite")
    p.add_argument("--ber", action="store_true",
                   help="also run the Monte Carlo relationship checks "
                        "(takes minutes)")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=_cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        print("run 'qostbc --help' for usage", file=sys.stderr)
        return EXIT_USAGE
    except gain.PatternBudgetError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, OSError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
