"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 I/O or parse error.  Output files are written only after all computation
has succeeded, via a temporary file renamed into place.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
from dataclasses import dataclass, fields
from fractions import Fraction

import numpy as np

from . import analysis
from .bi_model import (BernoulliTruth, BiSample, FixedTruth, alt_cdf, parse_alternative)
from .ecdf import Ecdf
from .errors import ConfigError, DomainError, FdrlabError
from .estimators import parse_estimator
from .stepwise import ProcedureConfig, config_errors, run_procedure

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3
CURVE_POINTS = 513   # 512 equal steps on [0, 1]


class InputError(FdrlabError):
    """Unreadable or malformed input file."""


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".fdrlab-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def read_pvalues(path: str) -> BiSample:
    """Read a CSV with a header row, a ``p`` column and an optional ``h`` column."""
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or "p" not in [f.strip() for f in reader.fieldnames]:
                raise InputError(f"{path}: header must contain a 'p' column")
            reader.fieldnames = [f.strip() for f in reader.fieldnames]
            has_h = "h" in reader.fieldnames
            p, h = [], []
            for lineno, row in enumerate(reader, start=2):
                try:
                    p.append(float(row["p"]))
                    if has_h:
                        h.append(int(row["h"]))
                except (TypeError, ValueError):
                    raise InputError(f"{path}:{lineno}: malformed record {row!r}") from None
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None
    if not p:
        raise InputError(f"{path}: no p-values")
    bad = [i for i, x in enumerate(p) if not 0.0 <= x <= 1.0]
    if bad:
        raise InputError(f"{path}:{bad[0] + 2}: p-value {p[bad[0]]!r} outside [0, 1]")
    try:
        return BiSample(np.array(p), np.array(h) if has_h else None)
    except DomainError as exc:
        raise InputError(f"{path}: {exc}") from None


# --------------------------------------------------------------------------
# Run configuration for ``simulate``


@dataclass(frozen=True)
class RunConfig:
    n: int
    alt: str
    estimator: str
    alpha: float
    lam: float
    replications: int
    master_seed: int
    n0: int | None = None
    pi0: float | None = None
    direction: str = "su"
    tie_variant: str = "standard"

    JSON_KEYS = {"lambda": "lam"}

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        """Validate every field at once; raise one ConfigError listing all problems."""
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        names = {f.name for f in fields(cls)}
        json_names = {next((k for k, v in cls.JSON_KEYS.items() if v == nm), nm) for nm in names}
        errors = [f"unknown key {k!r}" for k in sorted(set(data) - json_names)]
        kw = {cls.JSON_KEYS.get(k, k): v for k, v in data.items() if k in json_names}
        required = ("n", "alt", "estimator", "alpha", "lam", "replications", "master_seed")
        for key in required:
            if key not in kw:
                errors.append(f"missing key {'lambda' if key == 'lam' else key!r}")

        def number(key, kind):
            if key in kw and not (isinstance(kw[key], (int, float)) and not isinstance(kw[key], bool)
                                  and (kind is float or float(kw[key]).is_integer())):
                errors.append(f"{key!r} must be {'an integer' if kind is int else 'a number'}")
                kw.pop(key)
            elif key in kw:
                kw[key] = kind(kw[key])

        for key in ("n", "replications", "master_seed", "n0"):
            number(key, int)
        for key in ("alpha", "lam", "pi0"):
            number(key, float)
        if ("n0" in kw) == ("pi0" in kw):
            errors.append("exactly one of 'n0' (fixed truth) or 'pi0' (bernoulli truth) is required")
        if "n" in kw and kw["n"] < 1:
            errors.append("'n' must be at least 1")
        if "replications" in kw and kw["replications"] < 1:
            errors.append("'replications' must be at least 1")
        if "n0" in kw and "n" in kw and not 0 <= kw["n0"] <= kw["n"]:
            errors.append("'n0' must satisfy 0 <= n0 <= n")
        if "n0" in kw and kw["n0"] == 0:
            errors.append("'n0' must be positive (expected number of true nulls > 0)")
        if "pi0" in kw and not 0 < kw["pi0"] <= 1:
            errors.append("'pi0' must satisfy 0 < pi0 <= 1")
        if "alpha" in kw and "lam" in kw:
            errors += config_errors(kw["alpha"], kw["lam"], kw.get("direction", "su"),
                                    kw.get("tie_variant", "standard"))
        for key, parser in (("alt", parse_alternative), ("estimator", parse_estimator)):
            if key in kw:
                try:
                    parser(str(kw[key]))
                except (ConfigError, DomainError, OSError) as exc:
                    errors.append(f"{key!r}: {exc}")
        if not errors and "lam" in kw:
            try:
                ProcedureConfig(kw["alpha"], kw["lam"], parse_estimator(kw["estimator"]),
                                kw.get("direction", "su"), kw.get("tie_variant", "standard"))
            except (ConfigError, DomainError) as exc:
                errors.append(f"'estimator': {exc}")
        if errors:
            raise ConfigError("; ".join(errors))
        return cls(**kw)

    def simulation(self) -> analysis.SimulationConfig:
        truth = FixedTruth(self.n0) if self.n0 is not None else BernoulliTruth(self.pi0)
        proc = ProcedureConfig(self.alpha, self.lam, parse_estimator(self.estimator),
                               self.direction, self.tie_variant)
        return analysis.SimulationConfig(self.n, truth, parse_alternative(self.alt), proc,
                                         self.replications, self.master_seed)


# --------------------------------------------------------------------------
# Subcommands


def cmd_test(args) -> int:
    errors = config_errors(args.alpha, args.lam, args.direction, args.tie_variant)
    if errors:
        raise ConfigError("; ".join(errors))
    cfg = ProcedureConfig(args.alpha, args.lam, parse_estimator(args.estimator),
                          args.direction, args.tie_variant)
    sample = read_pvalues(args.input)
    res = run_procedure(sample, cfg)
    report = {
        "n": sample.n, "r": res.r, "rejected": [int(i) for i in res.rejected],
        "threshold": res.threshold, "n0_hat": res.estimate,
        "alpha": cfg.alpha, "lambda": cfg.lam, "estimator": str(cfg.estimator),
        "direction": cfg.direction, "tie_variant": cfg.tie_variant,
    }
    if res.v is not None:
        report.update(v=res.v, fdp=res.fdp)
    print(f"{cfg}\n  n={sample.n} R={res.r} threshold={res.threshold:.6g} n0_hat={res.estimate:.6g}"
          + (f" V={res.v} FDP={res.fdp:.4f}" if res.v is not None else ""))
    if args.out:
        _write_atomic(args.out, _json(report))
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        with open(args.config) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"{args.config}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.config}: invalid JSON ({exc})") from None
    cfg = RunConfig.from_dict(data).simulation()
    rep = analysis.simulate_fdr(cfg, args.threads)
    print(f"{cfg.procedure} alt={cfg.alt} n={cfg.n} reps={cfg.replications}\n"
          f"  FDR={rep.fdr_hat:.5f} ± {rep.fdr_se:.5f}  power={rep.power_hat:.4f}  "
          f"mean n0_hat={rep.mean_estimate:.2f}  mean R={rep.mean_r:.2f}")
    if args.out:
        _write_atomic(args.out, _json(rep.as_dict()))
    return EXIT_OK


def cmd_table1(args) -> int:
    if args.reps < 1:
        raise ConfigError("--reps must be at least 1")
    res = analysis.table1(args.reps, args.seed, args.threads, args.direction, args.tie_variant,
                          include_bh=args.bh)
    print(res.format())
    if args.direction == "su" and args.tie_variant == "standard":
        dev = res.deviations()
        print(f"max |deviation| from published values: {dev.max():.4f}"
              f" (tolerance {analysis.TABLE1_TOLERANCE})")
    if args.out:
        _write_atomic(args.out, res.to_csv())
    return EXIT_OK


def _parse_simplex(text: str) -> list:
    try:
        probs = [Fraction(x.strip()) for x in text.split(",")]
    except ValueError:
        raise ConfigError(f"--p must be three comma-separated probabilities, got {text!r}") from None
    if len(probs) != 3:
        raise ConfigError("--p needs exactly three probabilities")
    return probs


def cmd_verify(args) -> int:
    if args.suite == "multinomial":
        probs = _parse_simplex(args.p)
        if abs(float(sum(probs)) - 1.0) > 1e-12:
            raise ConfigError(f"--p must sum to 1, sums to {float(sum(probs))!r}")
        rep = analysis.multinomial_identity(args.n, *probs)
    else:
        errors = config_errors(args.alpha, args.lam)
        if args.n < 1 or not 0 < args.n0 <= args.n:
            errors.append("need n >= 1 and 0 < n0 <= n")
        if args.reps < 1:
            errors.append("--reps must be at least 1")
        if errors:
            raise ConfigError("; ".join(errors))
        proc = ProcedureConfig(args.alpha, args.lam, parse_estimator(args.estimator))
        cfg = analysis.SimulationConfig(args.n, FixedTruth(args.n0), parse_alternative(args.alt),
                                        proc, args.reps, args.seed)
        check = {"thm1": analysis.thm1_identity, "condition": analysis.check_control_condition,
                 "lemma2": analysis.lemma2_sides}[args.suite]
        rep = check(cfg, args.threads)
    print(rep.line())
    if args.out:
        _write_atomic(args.out, _json(rep.as_dict()))
    return EXIT_OK if rep.passed else EXIT_VERIFY


def cmd_curves(args) -> int:
    if (args.alt is None) == (args.sample is None):
        raise ConfigError("give exactly one of --alt or --sample")
    t = np.linspace(0.0, 1.0, CURVE_POINTS)
    if args.alt is not None:
        values = alt_cdf(parse_alternative(args.alt), t)
    else:
        values = Ecdf.from_pvalues(read_pvalues(args.sample).p)(t)
    lines = ["t,F"] + [f"{float(a)!r},{float(b)!r}" for a, b in zip(t, values)]
    text = "\n".join(lines) + "\n"
    if args.out:
        _write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# --------------------------------------------------------------------------


def _threads(value: str) -> int:
    k = int(value)
    if k < 1:
        raise argparse.ArgumentTypeError("threads must be at least 1")
    return k


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fdrlab", description="Adaptive step-up/step-down FDR tests.")
    sub = ap.add_subparsers(dest="command", required=True)

    def procedure_flags(p, need_estimator=True):
        p.add_argument("--alpha", type=float, default=0.05)
        p.add_argument("--lambda", dest="lam", type=float, default=0.5)
        p.add_argument("--estimator", default="storey:0.5" if need_estimator else "bh")

    p = sub.add_parser("test", help="apply a procedure to a CSV of p-values")
    p.add_argument("input", nargs="?")
    p.add_argument("--input", dest="input_flag")
    procedure_flags(p, need_estimator=False)
    p.add_argument("--direction", default="su")
    p.add_argument("--tie-variant", default="standard")
    p.add_argument("--out")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", help="Monte Carlo FDR for a JSON run config")
    p.add_argument("config")
    p.add_argument("--out")
    p.add_argument("--threads", type=_threads)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("table1", help="reproduce the 3x3 FDR table")
    p.add_argument("--reps", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--direction", default="su", choices=("su", "sd"))
    p.add_argument("--tie-variant", default="standard", choices=("standard", "modified"))
    p.add_argument("--bh", action="store_true", help="add a Benjamini-Hochberg row")
    p.add_argument("--out")
    p.add_argument("--threads", type=_threads)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("verify", help="check one of the exact identities")
    p.add_argument("suite", choices=("thm1", "condition", "lemma2", "multinomial"))
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--n0", type=int, default=60)
    p.add_argument("--alt", default="d2")
    procedure_flags(p)
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p", default="0.2,0.3,0.5", help="multinomial probabilities p1,p2,p3")
    p.add_argument("--out")
    p.add_argument("--threads", type=_threads)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("curves", help="emit (t, F) pairs for plotting")
    p.add_argument("--alt")
    p.add_argument("--sample")
    p.add_argument("--out")
    p.set_defaults(func=cmd_curves)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.command == "test":
        args.input = args.input_flag or args.input
        if not args.input:
            print("error: test needs an input CSV", file=sys.stderr)
            return EXIT_CONFIG
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
