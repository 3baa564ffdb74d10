"""Command-line entry point: ``simulate``, ``identities``, ``exponent`` and ``report``.

Exit codes: 0 success, 1 identity suite failure, 2 configuration error,
3 resource or manifest error.

Any flag may also come from a flat ``key=value`` file given by ``--config``
(keys are flag names without the leading dashes).  Flags on the command line
win over the file, the file wins over built-in defaults.  The default output
directory is taken from ``OYPOLYMER_OUT`` when ``--out`` is not given.
"""

import argparse
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import DEFAULT
from .environment import GridSpec, auto_delta, zero_environment
from .errors import BudgetError, ConvergenceError, DomainError, TruncationError
from .experiments import EXPERIMENTS, ExperimentConfig, aggregate, check_budget, run_task, tasks
from .identities import SUITE, expected_false_failures, run_suite
from .parallel import replica_map
from .partition import (BoundaryWeights, PhiSpec, kpz_final, kpz_negative_horizon, ptp_final, ptp_forward,
                        stationary_final, stationary_forward)
from .specialfn import characteristic_params, psi1

log = logging.getLogger("oypolymer")

EXIT_OK, EXIT_SUITE, EXIT_CONFIG, EXIT_RESOURCE = 0, 1, 2, 3
OUT_ENV = "OYPOLYMER_OUT"
_BOOL_FLAGS = {"zero-env", "auto-char-t", "auto-delta", "resume", "no-two-grid", "no-cross-check", "quiet"}


class ConfigError(DomainError):
    pass


class ManifestError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# parsing


def _int_list(text):
    try:
        vals = [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    return tuple(vals)


def _float_list(text):
    try:
        vals = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    return tuple(vals)


def read_config_file(path):
    """``key=value`` lines as a list of command-line tokens (``#`` starts a comment)."""
    out = []
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"--config: cannot read {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("_", "-")
        value = value.strip()
        if not sep or not key:
            raise ConfigError(f"--config: {path}:{lineno}: expected key=value, got {raw!r}")
        if key in _BOOL_FLAGS:
            if value.lower() in ("1", "true", "yes", "on"):
                out.append(f"--{key}")
            elif value.lower() not in ("0", "false", "no", "off"):
                raise ConfigError(f"--config: {path}:{lineno}: {key} expects true or false")
        else:
            out += [f"--{key}", value]
    return out


def _expand_config(argv):
    """Insert file tokens right after the subcommand so later command-line flags override them."""
    argv = list(argv)
    path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
            del argv[i:i + 2]
            break
        if tok.startswith("--config="):
            path = tok.split("=", 1)[1]
            del argv[i]
            break
    if path is None or not argv:
        return argv
    return argv[:1] + read_config_file(path) + argv[1:]


def build_parser():
    p = argparse.ArgumentParser(prog="oypolymer", description="Semi-discrete directed polymer simulations.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed_default=0):
        sp.add_argument("--config", help="key=value file with default flag values")
        sp.add_argument("--seed", type=int, default=seed_default, help="master seed")
        sp.add_argument("--workers", type=int, default=1, help="worker processes (output does not depend on it)")
        sp.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./oypolymer-out)")
        sp.add_argument("--quiet", action="store_true")

    s = sub.add_parser("simulate", help="per-replica log partition functions")
    common(s)
    s.add_argument("--kind", choices=("ptp", "stationary", "kpz"), required=True)
    s.add_argument("--n", type=int, required=True, help="levels, or the size parameter with --alpha")
    s.add_argument("--t", type=float, help="time horizon")
    s.add_argument("--alpha", type=float)
    s.add_argument("--beta0", type=float)
    s.add_argument("--tau", type=float)
    s.add_argument("--theta", type=float, help="boundary drift (stationary)")
    s.add_argument("--auto-char-t", action="store_true", help="t = n * psi1(theta)")
    s.add_argument("--zero-env", action="store_true", help="switch the environment (and Burke seeds) off")
    s.add_argument("--phi", help="kpz initial profile: const:c, sin:a, tanh:a or step:a")
    s.add_argument("--replicas", type=int, default=1)
    s.add_argument("--delta", type=float)
    s.add_argument("--auto-delta", action="store_true")
    s.add_argument("--budget-core-hours", type=float)

    i = sub.add_parser("identities", help="exact-law checks of the simulator")
    common(i)
    i.add_argument("--only", help=f"comma-separated subset of: {','.join(SUITE)}")
    i.add_argument("--replicas", type=int, help="override the per-check replica count")

    e = sub.add_parser("exponent", help="fluctuation exponent sweeps with log-log fits")
    common(e)
    e.add_argument("--experiment", choices=EXPERIMENTS, required=True)
    e.add_argument("--alpha", type=float, default=0.0)
    e.add_argument("--beta0", type=float, default=1.0)
    e.add_argument("--n", type=_int_list, default=(8, 16, 32, 64, 128))
    e.add_argument("--tau", type=_float_list, default=(1.0,))
    e.add_argument("--gamma", type=float, default=0.5)
    e.add_argument("--replicas", type=int, default=500)
    e.add_argument("--delta", type=float)
    e.add_argument("--kind", choices=("stationary", "point_to_point", "kpz"))
    e.add_argument("--phi")
    e.add_argument("--theta-convention", choices=("characteristic", "literal"), default="characteristic")
    e.add_argument("--b", type=_float_list, default=(1.0, 2.0, 4.0), help="tail radii multipliers")
    e.add_argument("--n-boot", type=int, default=200)
    e.add_argument("--no-two-grid", action="store_true")
    e.add_argument("--no-cross-check", action="store_true")
    e.add_argument("--budget-core-hours", type=float)
    e.add_argument("--resume", action="store_true", help="continue the run recorded in --out")
    e.add_argument("--max-tasks", type=int, help="stop after this many new tasks (checkpoint testing)")

    r = sub.add_parser("report", help="rebuild the summary of an exponent run from its raw rows")
    r.add_argument("--out", help="run directory")
    r.add_argument("--quiet", action="store_true")
    return p


def _out_dir(args):
    return Path(args.out or os.environ.get(OUT_ENV) or "oypolymer-out")


# ---------------------------------------------------------------------------
# small io helpers


def _append_jsonl(path, records):
    with open(path, "a") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
        fh.flush()
        os.fsync(fh.fileno())


def _read_jsonl(path, repair=False):
    """Records of a JSON-lines file; a torn final line is dropped (and cut off with ``repair``)."""
    if not path.exists():
        return []
    data = path.read_bytes()
    lines = data.split(b"\n")
    out = []
    good = 0
    for i, line in enumerate(lines):
        if not line.strip():
            good += len(line) + 1
            continue
        try:
            out.append(json.loads(line))
        except json.JSONDecodeError:
            if i >= len(lines) - 2:
                break
            raise ManifestError(f"{path}: corrupt line {i + 1}") from None
        good += len(line) + 1
    if repair and good < len(data):
        with open(path, "r+b") as fh:
            fh.truncate(min(good, len(data)))
    return out


def _write_last(path, text):
    """Write via a temporary file and rename, so readers never see half a summary."""
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _now():
    return time.strftime("%Y-%m-%dT%H:%M:%S%z")


# ---------------------------------------------------------------------------
# simulate


def _simulate_replica(kind, seed, replica, n_levels, theta, grid, zero_env, phi, tau, n, log_offset, phi_scale):
    if kind == "ptp":
        if zero_env:
            return float(ptp_forward(zero_environment(n_levels, grid), n_levels).log_total) + log_offset
        return float(ptp_final(seed, replica, n_levels, grid)[0]) + log_offset
    if kind == "stationary":
        if zero_env:
            bw = BoundaryWeights(np.zeros(n_levels), theta)
            return float(stationary_forward(zero_environment(n_levels, grid), bw, theta, n_levels).log_total) + log_offset
        return float(stationary_final(seed, replica, n_levels, theta, grid)[0, -1]) + log_offset
    return float(kpz_final(seed, replica, tau, n, n_levels, theta, grid, phi=phi, log_offset=log_offset,
                           phi_time_scale=phi_scale))


def _check_range(flag, value, lo=None, hi=None, lo_open=False, text=None):
    if value is None:
        return
    bad = (not math.isfinite(value) or (lo is not None and (value <= lo if lo_open else value < lo))
           or (hi is not None and value > hi))
    if bad:
        raise ConfigError(f"{flag}: {text or 'out of range'}, got {value!r}")


def resolve_simulation(args):
    """Model parameters for ``simulate`` as a plain dict (raises ConfigError)."""
    _check_range("--alpha", args.alpha, 0.0, 0.25, text="must lie in the valid range [0, 0.25]")
    _check_range("--beta0", args.beta0, 0.0, lo_open=True, text="must be > 0")
    _check_range("--tau", args.tau, 0.0, lo_open=True, text="must be > 0")
    _check_range("--t", args.t, 0.0, text="must be >= 0")
    _check_range("--theta", args.theta, 0.0, text="must be >= 0")
    _check_range("--delta", args.delta, 0.0, lo_open=True, text="must be > 0")
    if args.n < 1:
        raise ConfigError(f"--n: must be >= 1, got {args.n}")
    if args.replicas < 1:
        raise ConfigError(f"--replicas: must be >= 1, got {args.replicas}")
    if args.workers < 1:
        raise ConfigError(f"--workers: must be >= 1, got {args.workers}")
    if args.delta is not None and args.auto_delta:
        raise ConfigError("--delta and --auto-delta are mutually exclusive")
    scaled = any(v is not None for v in (args.alpha, args.beta0, args.tau))
    kind = args.kind
    res = dict(kind=kind, n=args.n, tau=args.tau or 1.0, log_offset=0.0, alpha=args.alpha, beta0=args.beta0)
    if kind == "kpz" and not scaled:
        raise ConfigError("--kind kpz: give --alpha 0.25 (with --tau, optionally --beta0)")
    if args.phi is not None and kind != "kpz":
        raise ConfigError("--phi: only valid with --kind kpz")
    if args.zero_env and kind == "kpz":
        raise ConfigError("--zero-env: not available for --kind kpz")
    if scaled:
        if args.t is not None or args.auto_char_t:
            raise ConfigError("--t / --auto-char-t: not allowed together with --alpha/--beta0/--tau")
        if args.theta is not None:
            raise ConfigError("--theta: fixed by --alpha/--beta0/--tau on the characteristic line")
        alpha = 0.0 if args.alpha is None else args.alpha
        if kind == "kpz" and alpha != 0.25:
            raise ConfigError("--alpha: the kpz model needs the critical value 0.25")
        p = characteristic_params(alpha, args.beta0 or 1.0, args.tau or 1.0, args.n)
        res.update(n_levels=p.n_levels, t=p.t, theta=p.theta, beta=p.beta,
                   log_offset=p.log_offset_ptp if kind == "ptp" else p.log_offset_stationary)
        res["alpha"], res["beta0"] = alpha, args.beta0 or 1.0
    else:
        theta = args.theta
        if kind == "stationary" and theta is None:
            raise ConfigError("--theta: required for --kind stationary")
        if args.auto_char_t:
            if theta is None or theta <= 0:
                raise ConfigError("--auto-char-t: needs --theta > 0")
            t = args.n * psi1(theta)
        elif args.t is None:
            raise ConfigError("--t: required (or use --auto-char-t, or --alpha/--beta0/--tau)")
        else:
            t = args.t
        res.update(n_levels=args.n, t=float(t), theta=theta, beta=1.0)
    if args.delta is not None:
        delta = args.delta
    elif res.get("theta"):
        delta = auto_delta(res["theta"])
    else:
        delta = DEFAULT.delta_cap
    res["delta"] = float(delta)
    return res


def cmd_simulate(args):
    res = resolve_simulation(args)
    kind, nl, theta = res["kind"], res["n_levels"], res["theta"]
    phi = PhiSpec.parse(args.phi) if args.phi else None
    t_neg = kpz_negative_horizon(nl, theta) if phi is not None else 0.0
    grid = GridSpec.build(res["t"], res["delta"], t_neg)
    cells = (nl + 1) * (grid.m_count + grid.m_neg + 1) * args.replicas
    if args.zero_env and (nl + 1) * (grid.m_count + 1) > DEFAULT.max_cells:
        raise BudgetError(f"zero environment needs {(nl + 1) * (grid.m_count + 1)} cells > {DEFAULT.max_cells}")
    if args.budget_core_hours is not None and cells * 1.5e-8 > 3600 * args.budget_core_hours:
        raise BudgetError(f"estimated {cells * 1.5e-8 / 3600:.3f} core-hours exceeds --budget-core-hours "
                          f"{args.budget_core_hours:g}")
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    rows_path = out / "rows.jsonl"
    if rows_path.exists():
        rows_path.unlink()
    summary = dict(kind=kind, n=res["n"], n_levels=nl, t=res["t"], theta=theta, delta=grid.delta,
                   m_count=grid.m_count, t_neg=grid.t_neg, replicas=args.replicas, seed=args.seed,
                   zero_env=bool(args.zero_env), alpha=res["alpha"], beta0=res["beta0"],
                   tau=res["tau"] if kind == "kpz" or res["alpha"] is not None else None,
                   log_offset=res["log_offset"], phi=args.phi)
    manifest = dict(event="start", command="simulate", version=__version__, started=_now(),
                    config=summary, digest=_digest(summary))
    (out / "manifest.jsonl").write_text(json.dumps(manifest, sort_keys=True) + "\n")
    task = (kind, args.seed, None, nl, theta, grid, args.zero_env, phi, res["tau"], res["n"],
            res["log_offset"], (res["beta0"] or 1.0) ** 2)
    values = []
    step = max(16, 8 * args.workers)
    for lo in range(0, args.replicas, step):
        reps = range(lo, min(args.replicas, lo + step))
        vals = replica_map(_simulate_replica, [task[:2] + (r,) + task[3:] for r in reps], args.workers)
        _append_jsonl(rows_path, [{"replica": r, "logz": v} for r, v in zip(reps, vals)])
        values += vals
    v = np.asarray(values)
    summary.update(mean_logz=float(v.mean()),
                   se_logz=float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else None,
                   var_logz=float(v.var(ddof=1)) if len(v) > 1 else None)
    if args.zero_env or args.replicas == 1:
        summary["logz"] = float(v[0])
    _append_jsonl(out / "manifest.jsonl", [dict(event="end", finished=_now(), completed=len(v))])
    _write_last(out / "summary.json", json.dumps(summary, sort_keys=True, indent=1) + "\n")
    if not args.quiet:
        print(json.dumps({k: summary[k] for k in ("kind", "n_levels", "t", "replicas", "mean_logz")}))
    return EXIT_OK


def _digest(d):
    import hashlib
    return hashlib.sha256(json.dumps(d, sort_keys=True, default=str).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# identities


def cmd_identities(args):
    only = [x.strip() for x in args.only.split(",") if x.strip()] if args.only else None
    if args.replicas is not None and args.replicas < 10:
        raise ConfigError(f"--replicas: need at least 10, got {args.replicas}")
    if only:
        bad = [x for x in only if x not in SUITE]
        if bad:
            raise ConfigError(f"--only: unknown test(s) {', '.join(bad)}; choose from {', '.join(SUITE)}")
    verdicts = run_suite(only, args.seed, args.replicas, args.workers)
    lines = [v.to_json() for v in verdicts]
    if args.out or os.environ.get(OUT_ENV):
        out = _out_dir(args)
        out.mkdir(parents=True, exist_ok=True)
        (out / "verdicts.jsonl").write_text("".join(line + "\n" for line in lines))
    for line in lines:
        print(line)
    print(f"expected false failures under a correct simulator: {expected_false_failures(verdicts):.3g}",
          file=sys.stderr)
    failed = [v.name for v in verdicts if not v.passed]
    if failed:
        print(f"failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_SUITE
    return EXIT_OK


# ---------------------------------------------------------------------------
# exponent


def experiment_config(args):
    for flag, value in (("--alpha", args.alpha),):
        _check_range(flag, value, 0.0, 0.25, text="must lie in the valid range [0, 0.25]")
    _check_range("--beta0", args.beta0, 0.0, lo_open=True, text="must be > 0")
    if args.workers < 1:
        raise ConfigError(f"--workers: must be >= 1, got {args.workers}")
    try:
        cfg = ExperimentConfig(experiment=args.experiment, alpha=args.alpha, beta0=args.beta0, n_list=args.n,
                               tau_list=args.tau, gamma=args.gamma, replicas=args.replicas,
                               master_seed=args.seed, delta=args.delta, kind=args.kind, phi=args.phi,
                               theta_convention=args.theta_convention, b_list=args.b,
                               two_grid=not args.no_two_grid, cross_check=not args.no_cross_check,
                               n_boot=args.n_boot, budget_core_hours=args.budget_core_hours)
        cfg.validate()
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def _task_key(rec):
    return (int(rec["n"]), float(rec["tau"]), int(rec["replica"]))


def write_summary(out, cfg, records):
    report = aggregate(cfg, records)
    report.write_csv(out / "summary.csv.tmp")
    os.replace(out / "summary.csv.tmp", out / "summary.csv")
    fits = {"config": cfg.to_dict(), "digest": cfg.digest(),
            "fits": json.loads(report.to_json())["fits"]}
    _write_last(out / "fits.json", json.dumps(fits, sort_keys=True, indent=1) + "\n")
    return report


def cmd_exponent(args):
    cfg = experiment_config(args)
    out = _out_dir(args)
    man_path, rows_path = out / "manifest.jsonl", out / "rows.jsonl"
    if args.resume:
        head = _read_jsonl(man_path)
        if not head or head[0].get("event") != "start":
            raise ManifestError(f"--resume: no manifest in {out}")
        if head[0].get("digest") != cfg.digest():
            raise ManifestError(f"--resume: flags differ from the run recorded in {man_path} "
                                f"(config hash {head[0].get('digest')} vs {cfg.digest()})")
        records = _read_jsonl(rows_path, repair=True)
    else:
        if rows_path.exists() or man_path.exists():
            raise ManifestError(f"{out} already holds a run; use --resume or another --out")
        check_budget(cfg)
        out.mkdir(parents=True, exist_ok=True)
        _append_jsonl(man_path, [dict(event="start", command="exponent", version=__version__, started=_now(),
                                      config=cfg.to_dict(), digest=cfg.digest(), tolerances=DEFAULT.as_dict())])
        records = []
    done = {_task_key(r) for r in records}
    todo = [t for t in tasks(cfg) if (t[0], float(t[1]), t[2]) not in done]
    if args.max_tasks is not None:
        todo = todo[:max(0, args.max_tasks)]
    step = max(32, 8 * args.workers)
    for lo in range(0, len(todo), step):
        batch = todo[lo:lo + step]
        recs = replica_map(run_task, [(cfg,) + t for t in batch], args.workers)
        _append_jsonl(rows_path, recs)
        _append_jsonl(man_path, [dict(event="done", tasks=[list(t) for t in batch])])
        records += recs
        if not args.quiet:
            log.info("%d/%d tasks", len(records), len(tasks(cfg)))
    if len(records) < len(tasks(cfg)):
        print(f"stopped after {len(records)} of {len(tasks(cfg))} tasks; rerun with --resume", file=sys.stderr)
        return EXIT_OK
    report = write_summary(out, cfg, records)
    _append_jsonl(man_path, [dict(event="end", finished=_now(), completed=len(records))])
    if not args.quiet:
        for f in report.fits:
            print(json.dumps({"axis": f.axis, "fixed": f.fixed, "slope": f.slope, "ci": [f.ci_low, f.ci_high],
                              "target": f.target}))
    return EXIT_OK


def cmd_report(args):
    out = _out_dir(args)
    head = _read_jsonl(out / "manifest.jsonl")
    if not head or head[0].get("command") != "exponent":
        raise ManifestError(f"no exponent run manifest in {out}")
    cfg = ExperimentConfig.from_dict(head[0]["config"])
    records = _read_jsonl(out / "rows.jsonl")
    if len({_task_key(r) for r in records}) < len(tasks(cfg)):
        raise ManifestError(f"run in {out} is incomplete; finish it with exponent --resume")
    write_summary(out, cfg, records)
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "identities": cmd_identities, "exponent": cmd_exponent,
            "report": cmd_report}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_expand_config(argv))
    except ConfigError as exc:
        print(f"oypolymer: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING if getattr(args, "quiet", False) else logging.INFO,
                        format="%(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, DomainError) as exc:
        print(f"oypolymer: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BudgetError, TruncationError, ConvergenceError, ManifestError, OSError) as exc:
        print(f"oypolymer: error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
