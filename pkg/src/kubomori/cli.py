"""Command-line entry point: ``kubomori scal | verify | scan``.

Exit codes: 0 success, 1 verification failure, 2 parse error, 3 domain error.
Machine-readable output (JSON, CSV) goes to stdout or files; human text to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import closedform, conjlab, curvature, metric, oracle
from .matcore import ConvergenceError, DomainError, PosDefMatrix, SymMatrix

EXIT_OK, EXIT_VERIFY, EXIT_PARSE, EXIT_DOMAIN = 0, 1, 2, 3

# per-quantity relative error budget for `verify`
BUDGET = {
    "metric": 1e-8,
    "ginv": 1e-10,
    "dg": 1e-6,
    "christoffel": 1e-5,
    "riemann": 1e-5,
    "scal1": 1e-4,
}


class ParseError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParseError(message)


@dataclass(frozen=True)
class CliConfig:
    command: str
    spectrum: tuple | None = None
    matrix_path: str | None = None
    normalize: bool = False
    method: str = "closed"
    output: str | None = None
    oracle: oracle.OracleConfig = field(default_factory=oracle.OracleConfig)
    seed: int = 0
    n: int | None = None
    trials: int = 0
    samples: int = 0
    extra: dict = field(default_factory=dict)


def _spectrum_arg(text: str) -> tuple:
    try:
        vals = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of reals: {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty spectrum")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kubomori", description="Kubo-Mori scalar curvature tools")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def oracle_flags(q):
        q.add_argument("--fd-step", type=float, default=oracle.DEFAULT.fd_step_rel)
        q.add_argument("--richardson-levels", type=int, default=oracle.DEFAULT.richardson_levels)
        q.add_argument("--quad-tol", type=float, default=oracle.DEFAULT.quad_tol)

    s = sub.add_parser("scal", help="scalar curvature of the trace-one slice at a point")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--spectrum", type=_spectrum_arg, help="comma-separated eigenvalues")
    src.add_argument("--matrix", help="JSON file holding a symmetric 2-D array")
    s.add_argument("--normalize", action="store_true", help="rescale to trace one")
    s.add_argument("--method", choices=["closed", "oracle"], default="closed")
    s.add_argument("--route", choices=["gauss", "intrinsic"], default="gauss")
    s.add_argument("-o", "--output")
    oracle_flags(s)

    v = sub.add_parser("verify", help="closed forms against the brute-force oracle")
    v.add_argument("--n", type=int, required=True)
    v.add_argument("--trials", type=int, default=10)
    v.add_argument("--seed", type=int, default=0)
    for name, tol in BUDGET.items():
        v.add_argument(f"--tol-{name}", type=float, default=tol)
    v.add_argument("-o", "--output")
    oracle_flags(v)

    c = sub.add_parser("scan", help="randomized conjecture scan")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--samples", type=int, default=1000)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--method", choices=["closed", "oracle"], default="closed")
    c.add_argument("--exhaustive", action="store_true", help="compare every pair of samples")
    c.add_argument("--ray", type=int, default=0, metavar="POINTS",
                   help="also write ray.json: POINTS values from uniform toward a near-pure state")
    c.add_argument("-o", "--output", default=".")
    return p


def parse_config(argv) -> CliConfig:
    a = build_parser().parse_args(argv)
    oc = None
    if a.command in ("scal", "verify"):
        oc = oracle.OracleConfig(a.fd_step, a.richardson_levels, a.quad_tol)
    if a.command == "scal":
        return CliConfig("scal", spectrum=a.spectrum, matrix_path=a.matrix, normalize=a.normalize,
                         method=a.method, output=a.output, oracle=oc, extra={"route": a.route})
    if a.command == "verify":
        if not 2 <= a.n <= 6:
            raise DomainError("verify needs 2 <= n <= 6")
        if a.trials < 1:
            raise DomainError("trials must be at least 1")
        tols = {k: getattr(a, f"tol_{k}") for k in BUDGET}
        return CliConfig("verify", n=a.n, trials=a.trials, seed=a.seed, output=a.output,
                         oracle=oc, extra={"budget": tols})
    return CliConfig("scan", n=a.n, samples=a.samples, seed=a.seed, method=a.method, output=a.output,
                     extra={"exhaustive": a.exhaustive, "ray": a.ray})


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


# -- scal -------------------------------------------------------------------------------

def _load_point(cfg: CliConfig) -> np.ndarray:
    if cfg.spectrum is not None:
        m = np.diag(np.asarray(cfg.spectrum, dtype=float))
    else:
        try:
            with open(cfg.matrix_path) as fh:
                raw = json.load(fh)
            m = np.asarray(raw, dtype=float)
        except (OSError, ValueError, TypeError) as exc:
            raise ParseError(f"cannot read matrix from {cfg.matrix_path!r}: {exc}") from None
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ParseError(f"matrix must be a square 2-D array, got shape {m.shape}")
        m = SymMatrix(m).matrix
    p = PosDefMatrix.from_array(m)          # raises DomainError unless positive definite
    if cfg.normalize:
        m = m / p.trace
    elif abs(p.trace - 1.0) > closedform.TRACE_TOL * p.dim:
        raise DomainError(f"trace must be 1, got {p.trace!r} (pass --normalize to rescale)")
    return m


def cmd_scal(cfg: CliConfig) -> int:
    m = _load_point(cfg)
    p = PosDefMatrix.from_array(m)
    if cfg.method == "closed":
        out = closedform.scal1_closed(p.spectrum).to_dict()
    else:
        val = oracle.scal1_oracle(m, cfg.oracle, route=cfg.extra.get("route", "gauss"))
        out = {"spectrum": p.spectrum.values.tolist(), "total": val.value, "method": val.method.value,
               "route": cfg.extra.get("route", "gauss")}
    _emit(conjlab.dumps(out), cfg.output)
    return EXIT_OK


# -- verify -----------------------------------------------------------------------------

def _random_point(rng, n: int) -> np.ndarray:
    lam = np.exp(rng.uniform(np.log(0.05), np.log(5.0), size=n))
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return (q * lam) @ q.T


def _random_sym(rng, n: int) -> np.ndarray:
    a = rng.standard_normal((n, n))
    return 0.5 * (a + a.T)


def _rel(a, b, floor: float = 1e-300) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), floor))


def run_verify(n: int, trials: int, seed: int, config: oracle.OracleConfig = oracle.DEFAULT) -> dict:
    """Max relative error per quantity over ``trials`` random points."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    worst = dict.fromkeys(BUDGET, 0.0)
    for _ in range(trials):
        d = _random_point(rng, n)
        x, y, z = (_random_sym(rng, n) for _ in range(3))
        ctx = metric.MetricContext.at(d)
        worst["metric"] = max(worst["metric"], _rel(metric.g(ctx, x, y), oracle.g_oracle(d, x, y, config)))
        worst["ginv"] = max(worst["ginv"], _rel(metric.g_inv(ctx, x), oracle.ginv_oracle(d, x)))
        worst["dg"] = max(worst["dg"], _rel(metric.dg_form(ctx, z, x, y), oracle.dg_fd(d, z, x, y, config)))
        worst["christoffel"] = max(worst["christoffel"],
                                   _rel(metric.christoffel(ctx, x, y), oracle.christoffel_fd(d, x, y, config)))
        worst["riemann"] = max(worst["riemann"],
                               _rel(curvature.riemann(ctx, x, y, z), oracle.riemann_fd(d, x, y, z, config)))
        e = rng.exponential(size=n)
        lam = e / e.sum()
        closed = closedform.scal1_closed(lam).total
        orc = oracle.scal1_oracle(np.diag(lam), config).value
        # unit floor: the value itself can pass through zero
        worst["scal1"] = max(worst["scal1"], _rel(closed, orc, floor=1.0))
    return worst


def cmd_verify(cfg: CliConfig) -> int:
    t0 = time.perf_counter()
    worst = run_verify(cfg.n, cfg.trials, cfg.seed, cfg.oracle)
    budget = cfg.extra["budget"]
    checks = {k: {"max_rel_error": worst[k], "budget": budget[k], "pass": bool(worst[k] <= budget[k])}
              for k in BUDGET}
    ok = all(c["pass"] for c in checks.values())
    summary = {"n": cfg.n, "trials": cfg.trials, "seed": cfg.seed, "pass": ok, "checks": checks}
    _emit(conjlab.dumps(summary), cfg.output)
    for k, c in checks.items():
        print(f"{k:12s} {c['max_rel_error']:.3e}  budget {c['budget']:.0e}  {'ok' if c['pass'] else 'FAIL'}",
              file=sys.stderr)
    print(f"verify finished in {time.perf_counter() - t0:.1f} s", file=sys.stderr)
    if not ok:
        name = max(BUDGET, key=lambda k: worst[k] / budget[k])
        print(f"verification failed; worst offender: {name} "
              f"({worst[name]:.3e} > {budget[name]:.0e})", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


# -- scan -------------------------------------------------------------------------------

def cmd_scan(cfg: CliConfig) -> int:
    t0 = time.perf_counter()
    report = conjlab.scan(cfg.n, cfg.samples, cfg.seed, cfg.method, exhaustive=cfg.extra["exhaustive"])
    csv_path, json_path = report.write(cfg.output)
    if cfg.extra["ray"]:
        ray = conjlab.ray_scan(cfg.n, cfg.extra["ray"], cfg.method)
        with open(json_path.replace("scan.json", "ray.json"), "w") as fh:
            fh.write(conjlab.dumps(ray.to_dict()) + "\n")
    print(f"scan n={cfg.n} samples={cfg.samples}: scal1 at mixed {report.scal1_at_mixed:.6g}, "
          f"max observed {report.max_observed:.6g}, {report.comparisons} comparable pairs, "
          f"{len(report.violations)} violations, {len(report.failures)} failed evaluations "
          f"({time.perf_counter() - t0:.1f} s)", file=sys.stderr)
    print(f"wrote {csv_path} and {json_path}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {"scal": cmd_scal, "verify": cmd_verify, "scan": cmd_scan}


def main(argv=None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
        return COMMANDS[cfg.command](cfg)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (DomainError, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
