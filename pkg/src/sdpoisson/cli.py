"""Command-line front end: simulation, pmf tables, copula grids, verification.

Output conventions: CSV files carry a header row, comma separators, '.'
decimals with 17 significant digits, UTF-8 and LF line endings; JSON
files hold a single object with "config", "results" and "checks" keys.
All commands are deterministic for a fixed seed.

Exit codes: 0 success (verify: all checks pass), 1 runtime failure or any
failed check, 2 any inconclusive check, 64 usage error (bad flags or
parameter domain).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import copulas as cop
from .errors import DomainError, SdPoissonError
from .exponential import ModelParams, sample_triples
from .harness import (
    McEstimate,
    TolerancePolicy,
    Verdict,
    compare,
    mc_joint_pmf_grid,
    sample_correlation,
)
from .pmf import joint_pmf, pmf_table
from .special import kummer_elementary, kummer_series

EX_OK = 0
EX_FAIL = 1
EX_INCONCLUSIVE = 2
EX_USAGE = 64

_COPULA_CHOICES = (
    "sd",
    "gumbel",
    "marshall-olkin",
    "raftery",
    "frechet-lower",
    "frechet-upper",
    "independence",
)


@dataclass
class RunConfig:
    """Parsed invocation; round-trips through to_dict/from_dict unchanged."""

    command: str
    lam: float
    mu: float
    a: float
    seed: int
    output: str
    fmt: str
    options: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "lam": self.lam,
            "mu": self.mu,
            "a": self.a,
            "seed": self.seed,
            "output": self.output,
            "fmt": self.fmt,
            "options": dict(self.options),
        }

    @staticmethod
    def from_dict(data: dict) -> "RunConfig":
        return RunConfig(
            command=data["command"],
            lam=data["lam"],
            mu=data["mu"],
            a=data["a"],
            seed=data["seed"],
            output=data["output"],
            fmt=data["fmt"],
            options=dict(data["options"]),
        )


class _Parser(argparse.ArgumentParser):
    # Unknown flags and malformed values are usage errors (exit 64),
    # matching the documented convention instead of argparse's default 2.
    def error(self, message):
        self.exit(EX_USAGE, f"{self.prog}: usage error: {message}\n")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _write_json(path: Path, config: RunConfig, results: dict, checks: list) -> None:
    payload = {"config": config.to_dict(), "results": results, "checks": checks}
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n"
    )


def _read_config_file(path: str) -> dict:
    """Flat key=value file mirroring the long flag names."""
    values: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DomainError(f"config line is not key=value: {line!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _build_parser() -> _Parser:
    parser = _Parser(prog="sdpoisson", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: _Parser) -> None:
        p.add_argument("--lambda", dest="lam", type=float, default=1.0, help="rate of the N-chain renewals")
        p.add_argument("--mu", type=float, default=1.0, help="rate of the M-chain renewals")
        p.add_argument("--a", type=float, default=0.5, help="decomposition/correlation parameter in (0,1)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--output", type=str, default="sdpoisson_out")
        p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
        p.add_argument("--config", type=str, default=None, help="flat key=value file mirroring flags")

    p_sim = sub.add_parser("simulate", help="emit renewal pairs, arrival chains and compensated traces")
    add_common(p_sim)
    p_sim.add_argument("--n", type=int, default=1000, help="number of renewals")

    p_pmf = sub.add_parser("pmf", help="evaluate a single joint probability")
    add_common(p_pmf)
    p_pmf.add_argument("--m", type=int, required=True)
    p_pmf.add_argument("--n", type=int, required=True)
    p_pmf.add_argument("--s", type=float, required=True)
    p_pmf.add_argument("--t", type=float, required=True)
    p_pmf.add_argument("--method", choices=("closed", "quadrature", "auto"), default="auto")

    p_tab = sub.add_parser("table", help="evaluate a block of joint probabilities")
    add_common(p_tab)
    p_tab.add_argument("--m-max", type=int, default=10)
    p_tab.add_argument("--n-max", type=int, default=10)
    p_tab.add_argument("--s", type=float, required=True)
    p_tab.add_argument("--t", type=float, required=True)
    p_tab.add_argument("--method", choices=("closed", "quadrature", "auto"), default="auto")

    p_cop = sub.add_parser("copula", help="tabulate a copula on a regular grid")
    add_common(p_cop)
    p_cop.add_argument("--copula", choices=_COPULA_CHOICES, default="sd")
    p_cop.add_argument("--b", type=float, default=0.5, help="second Marshall-Olkin parameter")
    p_cop.add_argument("--grid", type=int, default=21, help="points per axis")

    p_ver = sub.add_parser("verify", help="run the oracle and Monte Carlo check suite")
    add_common(p_ver)
    p_ver.add_argument("--samples", type=int, default=200_000)
    return parser


def _apply_config_file(args: argparse.Namespace, argv: list[str]) -> None:
    if getattr(args, "config", None) is None:
        return
    overrides = _read_config_file(args.config)
    flag_types = {
        "lambda": ("lam", float), "mu": ("mu", float), "a": ("a", float),
        "seed": ("seed", int), "output": ("output", str), "format": ("fmt", str),
        "n": ("n", int), "m": ("m", int), "s": ("s", float), "t": ("t", float),
        "m-max": ("m_max", int), "n-max": ("n_max", int), "method": ("method", str),
        "copula": ("copula", str), "b": ("b", float), "grid": ("grid", int),
        "samples": ("samples", int),
    }
    given = {tok.split("=")[0].lstrip("-") for tok in argv if tok.startswith("--")}
    for key, raw in overrides.items():
        if key not in flag_types:
            raise DomainError(f"unknown config key {key!r}")
        dest, conv = flag_types[key]
        if key in given or not hasattr(args, dest):
            continue  # explicit flags win; irrelevant keys for the command are ignored
        setattr(args, dest, conv(raw))


def _run_config(args: argparse.Namespace) -> RunConfig:
    option_keys = ("n", "m", "s", "t", "m_max", "n_max", "method", "copula", "b", "grid", "samples")
    options = {k: getattr(args, k) for k in option_keys if hasattr(args, k)}
    return RunConfig(
        command=args.command, lam=args.lam, mu=args.mu, a=args.a,
        seed=args.seed, output=args.output, fmt=args.fmt, options=options,
    )


def _out_path(config: RunConfig, suffix: str = "", ext: str | None = None) -> Path:
    base = Path(config.output)
    ext = ext or config.fmt
    stem = base.stem if base.suffix else base.name
    parent = base.parent
    return parent / f"{stem}{suffix}.{ext}"


def cmd_simulate(config: RunConfig) -> int:
    params = ModelParams(lam=config.lam, mu=config.mu, a=config.a)
    n = int(config.options["n"])
    if n < 1:
        raise DomainError(f"--n must be >= 1, got {n}")
    rng = np.random.default_rng(config.seed)
    x, y, z, b = sample_triples(params, n, rng)
    t_arr = np.concatenate([[0.0], np.cumsum(x)])
    s_arr = (params.lam / params.mu) * np.concatenate([[0.0], np.cumsum(y)])
    idx = np.arange(n + 1)
    t_centered = t_arr - idx / params.lam
    s_centered = s_arr - idx / params.mu

    # Compensated traces sampled at the merged jump times of both chains,
    # cut below the shorter horizon so no count is censored.
    horizon = min(t_arr[-1], s_arr[-1])
    times = np.concatenate([t_arr[1:], s_arr[1:]])
    times = np.sort(times[times < horizon])
    n_at = np.searchsorted(t_arr, times, side="right") - 1
    m_at = np.searchsorted(s_arr, times, side="right") - 1
    n_comp = n_at - params.lam * times
    m_comp = m_at - params.mu * times

    corr_xy = float(np.corrcoef(x, y)[0, 1])
    corr_xz = float(np.corrcoef(x, z)[0, 1])
    results = {
        "n_renewals": n,
        "sample_corr_xy": corr_xy,
        "sample_corr_xz": corr_xz,
        "final_t": float(t_arr[-1]),
        "final_s": float(s_arr[-1]),
    }
    renewal_rows = [
        (int(k), float(x[k - 1]), float(y[k - 1]), float(t_arr[k]), float(s_arr[k]),
         float(t_centered[k]), float(s_centered[k]))
        for k in range(1, n + 1)
    ]
    comp_rows = [
        (float(times[i]), float(n_comp[i]), float(m_comp[i])) for i in range(len(times))
    ]
    if config.fmt == "json":
        _write_json(
            _out_path(config), config,
            {
                **results,
                "renewals": [list(r) for r in renewal_rows],
                "compensated": [list(r) for r in comp_rows],
            },
            [],
        )
    else:
        _write_csv(
            _out_path(config), ["k", "x", "y", "t_n", "s_n", "t_centered", "s_centered"],
            renewal_rows,
        )
        _write_csv(
            _out_path(config, "_compensated"), ["time", "n_compensated", "m_compensated"],
            comp_rows,
        )
        _write_json(_out_path(config, "_summary", ext="json"), config, results, [])
    return EX_OK


def cmd_pmf(config: RunConfig) -> int:
    params = ModelParams(lam=config.lam, mu=config.mu, a=config.a)
    opt = config.options
    report = joint_pmf(
        params, int(opt["m"]), int(opt["n"]), float(opt["s"]), float(opt["t"]),
        method=opt["method"],
    )
    results = {
        "m": report.m, "n": report.n, "s": report.s, "t": report.t,
        "probability": report.value, "raw": report.raw, "method": report.method_used,
    }
    if config.fmt == "json":
        _write_json(_out_path(config), config, results, [])
    else:
        _write_csv(
            _out_path(config), ["m", "n", "s", "t", "probability", "raw", "method"],
            [(report.m, report.n, report.s, report.t, report.value, report.raw,
              report.method_used)],
        )
    return EX_OK


def cmd_table(config: RunConfig) -> int:
    params = ModelParams(lam=config.lam, mu=config.mu, a=config.a)
    opt = config.options
    table = pmf_table(
        params, float(opt["s"]), float(opt["t"]), int(opt["m_max"]), int(opt["n_max"]),
        method=opt["method"],
    )
    results = {
        "s": table.s, "t": table.t,
        "deficit": table.deficit, "tail_bound": table.tail_bound,
        "pmf": [[float(v) for v in row] for row in table.values],
        "row_sums": [float(v) for v in table.row_sums],
        "col_sums": [float(v) for v in table.col_sums],
        "poisson_row": [float(v) for v in table.poisson_row],
        "poisson_col": [float(v) for v in table.poisson_col],
    }
    if config.fmt == "json":
        _write_json(_out_path(config), config, results, [])
        return EX_OK
    n_max = int(opt["n_max"])
    header = ["m"] + [f"p_{n}" for n in range(n_max + 1)] + ["row_sum", "poisson_row"]
    rows = [
        (m, *[float(v) for v in table.values[m]], float(table.row_sums[m]),
         float(table.poisson_row[m]))
        for m in range(int(opt["m_max"]) + 1)
    ]
    _write_csv(_out_path(config), header, rows)
    _write_csv(
        _out_path(config, "_colsums"), ["n", "col_sum", "poisson_col"],
        [(n, float(table.col_sums[n]), float(table.poisson_col[n])) for n in range(n_max + 1)],
    )
    _write_json(
        _out_path(config, "_summary", ext="json"), config,
        {"deficit": table.deficit, "tail_bound": table.tail_bound}, [],
    )
    return EX_OK


def _make_copula(config: RunConfig) -> cop.Copula:
    kind = config.options["copula"]
    if kind == "sd":
        return cop.SelfDecomposableCopula(config.a)
    if kind == "gumbel":
        return cop.GumbelCopula(config.a, config.lam, config.mu)
    if kind == "marshall-olkin":
        return cop.MarshallOlkinCopula(config.a, float(config.options["b"]))
    if kind == "raftery":
        return cop.RafteryCopula(config.a)
    if kind == "frechet-lower":
        return cop.FrechetLowerCopula()
    if kind == "frechet-upper":
        return cop.FrechetUpperCopula()
    return cop.IndependenceCopula()


def cmd_copula(config: RunConfig) -> int:
    grid = int(config.options["grid"])
    if grid < 2:
        raise DomainError(f"--grid must be >= 2, got {grid}")
    family = _make_copula(config)
    us = np.linspace(0.0, 1.0, grid)
    rows = []
    for u in us:
        for v in us:
            value = cop.copula_eval(family, float(u), float(v))
            lower, upper = cop.frechet_bounds(float(u), float(v))
            rows.append((float(u), float(v), value, lower, upper))
    results = {"copula": config.options["copula"], "grid": grid,
               "values": [list(r) for r in rows]}
    if config.fmt == "json":
        _write_json(_out_path(config), config, results, [])
    else:
        _write_csv(_out_path(config), ["u", "v", "value", "frechet_lower", "frechet_upper"], rows)
    return EX_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _explicit_reference(m: int, n: int, lam: float, mu: float, s: float, t: float, a: float) -> float:
    # The six low-order probabilities in elementary form, valid when
    # a*mu*s >= lam*t.
    u = lam * t
    v = mu * s
    e = math.exp(-v)
    q = -math.expm1(-u)
    if (m, n) == (0, 0):
        return e
    if (m, n) == (1, 0):
        return e / a * ((1 - a) * q + a * v - u)
    if (m, n) == (1, 1):
        return e / a * (u - (1 - a) * q)
    if (m, n) == (2, 0):
        return e / (2 * a * a) * (2 * (1 - a) * (1 + a * v) * q + (a * v - u) ** 2 - 2 * (1 - a) * u)
    if (m, n) == (2, 1):
        return e / (a * a) * ((1 - a) * (a - 4 - (1 - a) * u - a * v) * q
                              + u * (a * a - 5 * a + 4 + a * v - u))
    if (m, n) == (2, 2):
        return e / (2 * a * a) * (2 * (1 - a) * (3 - a + (1 - a) * u) * q
                                  + u * (u - 2 * (1 - a) * (3 - a)))
    raise DomainError(f"no explicit reference for (m, n) = ({m}, {n})")


def _verify_checks(config: RunConfig) -> list[dict]:
    params = ModelParams(lam=config.lam, mu=config.mu, a=config.a)
    n_samples = int(config.options["samples"])
    checks: list[dict] = []

    def record(name: str, verdict: Verdict, detail: str) -> None:
        checks.append({"name": name, "verdict": verdict.value, "detail": detail})

    # 1. general evaluator vs the explicit low-order formulas
    rng = np.random.default_rng(config.seed)
    worst = 0.0
    for _ in range(20):
        s = rng.uniform(0.2, 2.5)
        t = rng.uniform(0.01, 0.95) * params.a * s * params.mu / params.lam
        for m in range(3):
            for n in range(m + 1):
                got = joint_pmf(params, m, n, s, t, method="closed").raw
                ref = _explicit_reference(m, n, params.lam, params.mu, s, t, params.a)
                worst = max(worst, abs(got - ref))
    record("explicit-formulas", Verdict.PASS if worst <= 1e-10 else Verdict.FAIL,
           f"max abs err {worst:.3e} (tol 1e-10)")

    # 2. closed form vs quadrature oracle
    worst = 0.0
    st_points = [(0.8, 0.15), (0.8, 0.7), (1.6, 0.35), (1.6, 1.3), (2.4, 2.0)]
    for s, t in st_points:
        for m in range(5):
            for n in range(5):
                closed = joint_pmf(params, m, n, s, t, method="closed").raw
                quadr = joint_pmf(params, m, n, s, t, method="quadrature").raw
                worst = max(worst, abs(closed - quadr))
    record("closed-vs-quadrature", Verdict.PASS if worst <= 1e-8 else Verdict.FAIL,
           f"max abs gap {worst:.3e} (tol 1e-8)")

    # 3. normalization and marginals
    table = pmf_table(params, 1.0, 1.0, 30, 30)
    ok = -1e-9 <= table.deficit <= table.tail_bound + 1e-12
    record("table-normalization", Verdict.PASS if ok else Verdict.FAIL,
           f"deficit {table.deficit:.3e}, tail bound {table.tail_bound:.3e}")
    row_gap = float(np.max(np.abs(table.row_sums - table.poisson_row)))
    col_gap = float(np.max(np.abs(table.col_sums - table.poisson_col)))
    ok = row_gap <= 1e-8 and col_gap <= 1e-8
    record("table-marginals", Verdict.PASS if ok else Verdict.FAIL,
           f"row gap {row_gap:.3e}, col gap {col_gap:.3e} (tol 1e-8)")

    # 4. Monte Carlo agreement on a small block
    points = [(1.0, 0.3), (1.0, 0.8)]
    freq = mc_joint_pmf_grid(params, points, 3, 3, n_samples, config.seed)
    policy = TolerancePolicy(k_se=3.5, abs_floor=3.0 / n_samples)
    verdict = Verdict.PASS
    worst_gap = 0.0
    for i, (s, t) in enumerate(points):
        for m in range(4):
            for n in range(4):
                closed = joint_pmf(params, m, n, s, t).value
                count = int(round(freq[i, m, n] * n_samples))
                est = McEstimate.from_count(count, n_samples, config.seed)
                v = compare(closed, est, policy)
                worst_gap = max(worst_gap, abs(closed - est.value))
                if v == Verdict.FAIL:
                    verdict = Verdict.FAIL
                elif v == Verdict.INCONCLUSIVE and verdict == Verdict.PASS:
                    verdict = Verdict.INCONCLUSIVE
    record("mc-agreement", verdict, f"max |closed - mc| {worst_gap:.3e} at {n_samples} paths")

    # 5. sampler correlations with batch-estimated standard errors
    rng = np.random.default_rng(config.seed + 1)
    x, y, z, _ = sample_triples(params, n_samples, rng)
    est_xy = sample_correlation(x, y)
    est_xz = sample_correlation(x, z)
    a_val = params.a
    ok = (abs(est_xy.value - a_val) <= 3.0 * est_xy.std_error
          and abs(est_xz.value - (1.0 - a_val)) <= 3.0 * est_xz.std_error)
    record("sampler-correlations", Verdict.PASS if ok else Verdict.FAIL,
           f"corr(x,y) {est_xy.value:.4f} vs {a_val}, corr(x,z) {est_xz.value:.4f} vs {1-a_val:.4f}")

    # 6. copula sanity on a coarse grid
    families = [
        cop.SelfDecomposableCopula(params.a),
        cop.GumbelCopula(min(params.a, params.lam * params.mu), params.lam, params.mu),
        cop.MarshallOlkinCopula(params.a, 0.7),
        cop.RafteryCopula(params.a),
        cop.IndependenceCopula(),
    ]
    worst = 0.0
    for family in families:
        for u in np.linspace(0.0, 1.0, 21):
            for v in np.linspace(0.0, 1.0, 21):
                value = cop.copula_eval(family, float(u), float(v))
                lo, hi = cop.frechet_bounds(float(u), float(v))
                worst = max(worst, lo - value, value - hi)
    record("copula-bounds", Verdict.PASS if worst <= 1e-14 else Verdict.FAIL,
           f"max bound excursion {worst:.3e}")

    # 7. degenerate-Kummer reduction vs its series
    worst = 0.0
    for beta in range(11):
        for alpha in range(beta + 1):
            for xv in (0.01, 0.1, 1.0, 5.0, 20.0):
                a_val = kummer_elementary(alpha, beta, xv)
                s_val = kummer_series(alpha, beta, xv)
                worst = max(worst, abs(a_val - s_val) / s_val)
    record("kummer-reduction", Verdict.PASS if worst <= 1e-10 else Verdict.FAIL,
           f"max rel gap {worst:.3e} (tol 1e-10)")
    return checks


def cmd_verify(config: RunConfig) -> int:
    checks = _verify_checks(config)
    verdicts = {c["verdict"] for c in checks}
    if config.fmt == "json":
        _write_json(_out_path(config), config, {"n_checks": len(checks)}, checks)
    else:
        _write_csv(
            _out_path(config), ["name", "verdict", "detail"],
            [(c["name"], c["verdict"], '"' + c["detail"] + '"') for c in checks],
        )
    for c in checks:
        print(f"[{c['verdict'].upper():12s}] {c['name']}: {c['detail']}")
    if "fail" in verdicts:
        return EX_FAIL
    if "inconclusive" in verdicts:
        return EX_INCONCLUSIVE
    return EX_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "pmf": cmd_pmf,
    "table": cmd_table,
    "copula": cmd_copula,
    "verify": cmd_verify,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_file(args, argv)
        config = _run_config(args)
        ModelParams(lam=config.lam, mu=config.mu, a=config.a)  # domain gate
    except (DomainError, OSError, ValueError) as exc:
        print(f"sdpoisson: usage error: {exc}", file=sys.stderr)
        return EX_USAGE
    try:
        return _COMMANDS[config.command](config)
    except DomainError as exc:
        print(f"sdpoisson: usage error: {exc}", file=sys.stderr)
        return EX_USAGE
    except OSError as exc:
        print(f"sdpoisson: i/o error: {exc}", file=sys.stderr)
        return EX_FAIL
    except SdPoissonError as exc:
        print(f"sdpoisson: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EX_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
