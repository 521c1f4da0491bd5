"""Command-line frontend.

Every subcommand writes a table (CSV or JSON) whose first line is a metadata
header: package version, the echoed configuration and the truncation/tail
bounds that apply.  Output depends only on the configuration, never on
``--threads``.

Exit codes: 0 success, 1 usage error, 2 numerical failure (whatever was
computed is still written).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from typing import Any, List, Optional, Sequence

from lderiv import __version__
from lderiv import moments as mom
from lderiv.arithmetic import DEFAULT_TABLE_BUDGET
from lderiv.characters import build_group, character_metadata
from lderiv.distribution import (
    build_distribution,
    hankel_report,
    moments_from_distribution,
    plot_rows,
)
from lderiv.errors import LDerivError
from lderiv.lfunctions import MIN_EPS, EvalParams, l_values_all, plan

log = logging.getLogger("lderiv")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(x: Any) -> Any:
    """Round floats to 15 significant digits; NaN/inf become None."""
    if isinstance(x, float):
        if not math.isfinite(x):
            return None
        return float(format(x, ".15g"))
    if isinstance(x, dict):
        return {k: fmt(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [fmt(v) for v in x]
    return x


def _cell(x: Any) -> str:
    if isinstance(x, float):
        return format(x, ".15g")
    if isinstance(x, bool):
        return "1" if x else "0"
    return str(x)


@dataclass
class RunConfig:
    command: str
    q: Optional[int] = None
    q_list: List[int] = field(default_factory=list)
    t0: float = 0.0
    k_list: List[int] = field(default_factory=list)
    trunc_M: int = 10**6
    eps: float = 1e-12
    format: str = "csv"
    out: Optional[str] = None
    threads: int = 1
    plot_vmax: Optional[float] = None
    hankel_K: int = 6
    level: str = "quick"

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        cfg = cls(command=ns.command)
        for name in ("format", "out", "threads", "level"):
            if hasattr(ns, name):
                setattr(cfg, name, getattr(ns, name))
        if getattr(ns, "t0", None) is not None:
            cfg.t0 = float(ns.t0)
        if getattr(ns, "eps", None) is not None:
            cfg.eps = ns.eps
        if getattr(ns, "trunc_M", None) is not None:
            cfg.trunc_M = ns.trunc_M
        if getattr(ns, "plot_vmax", None) is not None:
            cfg.plot_vmax = ns.plot_vmax
        if getattr(ns, "hankel_K", None) is not None:
            cfg.hankel_K = ns.hankel_K
        qs = list(getattr(ns, "q_list", None) or [])
        if getattr(ns, "q", None) is not None:
            qs = [ns.q] + qs
        cfg.q_list = qs
        cfg.q = qs[0] if len(qs) == 1 else None
        ks = list(getattr(ns, "k_list", None) or [])
        if getattr(ns, "k", None) is not None:
            ks = [ns.k] + ks
        cfg.k_list = ks or [1]
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.threads < 1:
            raise UsageError("--threads must be >= 1")
        if not math.isfinite(self.t0):
            raise UsageError("--t0 must be finite")
        if abs(self.t0) > mom.T0_MAX:
            raise UsageError(f"--t0 must satisfy |t0| <= {mom.T0_MAX}")
        if not (MIN_EPS <= self.eps < 1):
            raise UsageError(f"--eps must lie in [{MIN_EPS:g}, 1)")
        if self.command == "verify":
            return
        if not self.q_list:
            raise UsageError("give a modulus with --q or --q-list")
        if len(set(self.q_list)) != len(self.q_list):
            raise UsageError("--q-list contains duplicates")
        if self.command in ("characters", "lvalues") and len(self.q_list) != 1:
            raise UsageError(f"'{self.command}' takes exactly one modulus (--q)")
        # dist/moments accept q = 2 and report it per row (empty character set at t0 = 0)
        floor = 3 if self.command == "lvalues" else 2
        bad = [q for q in self.q_list if q < floor]
        if bad:
            raise UsageError(f"modulus must be >= {floor} for '{self.command}', got {bad[0]}")
        if any(k < 1 for k in self.k_list):
            raise UsageError("k must be a positive integer")
        if not (2 <= self.trunc_M <= DEFAULT_TABLE_BUDGET):
            raise UsageError(f"--trunc-M must lie in [2, {DEFAULT_TABLE_BUDGET}]")
        if self.plot_vmax is not None and not self.plot_vmax > 0:
            raise UsageError("--plot-vmax must be positive")
        if not (0 <= self.hankel_K <= 10):
            raise UsageError("--hankel-K must lie in [0, 10]")

    def echo(self) -> dict:
        """Configuration as recorded in output headers.

        threads and out are left out: they must not change the file contents.
        """
        d = {"command": self.command, "format": self.format}
        if self.command == "characters":
            d["q"] = self.q
        elif self.command == "lvalues":
            d.update(q=self.q, t0=self.t0, eps=self.eps)
        elif self.command == "moments":
            d.update(q_list=self.q_list, k_list=self.k_list, t0=self.t0, trunc_M=self.trunc_M, eps=self.eps)
        elif self.command == "dist":
            d.update(q_list=self.q_list, t0=self.t0, eps=self.eps, plot_vmax=self.plot_vmax, hankel_K=self.hankel_K)
        return d

    @property
    def params(self) -> EvalParams:
        return EvalParams(target_eps=self.eps)


@dataclass
class Table:
    columns: List[str]
    rows: List[list]
    metadata: dict
    failed: bool = False

    def render(self, fmt_name: str) -> str:
        meta = fmt(self.metadata)
        if fmt_name == "json":
            records = [dict(zip(self.columns, fmt(list(r)))) for r in self.rows]
            return json.dumps({"metadata": meta, "rows": records}, sort_keys=True, indent=1) + "\n"
        buf = io.StringIO()
        buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_cell(x) for x in r])
        return buf.getvalue()


def _metadata(cfg: RunConfig, **extra) -> dict:
    return {"version": __version__, "config": cfg.echo(), **extra}


def _em_bounds(cfg: RunConfig) -> dict:
    pl = plan(complex(1.0, cfg.t0), cfg.params)
    return {
        "euler_maclaurin_shift": pl.shift,
        "euler_maclaurin_terms": pl.terms,
        "hurwitz_value_bound": pl.value_bound,
        "hurwitz_derivative_bound": pl.derivative_bound,
    }


def _root_str(r) -> str:
    return f"{r.numerator}/{r.denominator}"


def cmd_characters(cfg: RunConfig) -> Table:
    g = build_group(cfg.q)
    cols = ["index", "exponents", "principal", "real", "parity"] + [f"chi({x})" for x in g.generators]
    rows = []
    for j in range(g.size):
        chi = g.character(j)
        minus = chi.evaluate(cfg.q - 1)
        parity = "even" if complex(minus) == 1 else "odd"
        rows.append(
            [j, ";".join(map(str, chi.exponents)), chi.is_principal(), chi.is_real(), parity]
            + [_root_str(chi.evaluate(x)) for x in g.generators]
        )
    meta = _metadata(cfg, group=character_metadata(g), value_format="a/N means exp(2*pi*i*a/N)", bounds="exact")
    return Table(cols, rows, meta)


LVALUE_COLUMNS = [
    "index", "L_re", "L_im", "err_L", "dL_re", "dL_im", "err_dL",
    "logderiv_re", "logderiv_im", "abs_logderiv", "err_logderiv", "status",
]


def cmd_lvalues(cfg: RunConfig) -> Table:
    g = build_group(cfg.q)
    s = complex(1.0, cfg.t0)
    vals = l_values_all(s, g, cfg.params, threads=cfg.threads, skip_principal=(cfg.t0 == 0))
    rows, failed = [], False
    for lv in vals:
        base = [lv.index, lv.L.real, lv.L.imag, lv.err_L, lv.dL.real, lv.dL.imag, lv.err_dL]
        try:
            c = lv.log_derivative()
            rows.append(base + [c.value.real, c.value.imag, abs(c.value), c.error, "ok"])
        except LDerivError as exc:
            failed = True
            nan = float("nan")
            rows.append(base + [nan, nan, nan, nan, f"failed: {exc}"])
    meta = _metadata(
        cfg,
        s=[s.real, s.imag],
        principal_excluded=cfg.t0 == 0,
        sign_convention="logderiv = L'(s)/L(s)",
        bounds=_em_bounds(cfg),
        group=character_metadata(g),
    )
    return Table(LVALUE_COLUMNS, rows, meta, failed)


MOMENT_COLUMNS = [
    "q", "k", "t0", "empirical", "main_term", "deviation", "predicted_scale", "tail_bound", "restricted", "status",
]


def cmd_moments(cfg: RunConfig) -> Table:
    rep = mom.deviation_sweep(cfg.k_list, cfg.q_list, cfg.t0, cfg.trunc_M, cfg.params, threads=cfg.threads)
    rows = [
        [r.q, r.k, r.t0, r.empirical, r.main_term, r.deviation, r.predicted_scale, r.tail_bound, r.restricted, r.status]
        for r in rep.rows
    ]
    failed = any(r.status != "ok" for r in rep.rows)
    tails = {str(k): mom.tail_bound(k, cfg.trunc_M) for k in cfg.k_list}
    meta = _metadata(
        cfg,
        notes=rep.notes,
        bounds={"main_term_truncation": cfg.trunc_M, "main_term_tail_bound_by_k": tails, **_em_bounds(cfg)},
        predicted_scale="error-term shape with implied constant 1",
    )
    return Table(MOMENT_COLUMNS, rows, meta, failed)


def cmd_dist(cfg: RunConfig):
    """Returns the plot table and the Hankel document."""
    dists, reports, failures = [], [], []
    for q in cfg.q_list:
        try:
            D = build_distribution(q, cfg.t0, cfg.params)
        except (LDerivError, ValueError) as exc:
            failures.append({"q": q, "error": str(exc)})
            continue
        log.info("q=%d distribution built (%d samples)", q, D.count)
        dists.append(D)
        seq = moments_from_distribution(D, 2 * cfg.hankel_K + 1)
        reports.append({"q": q, "samples": D.count, "phi": D.phi, "moments": list(seq.values),
                        "report": hankel_report(seq, cfg.hankel_K).to_dict()})
    rows = [list(r) for r in plot_rows(dists, None, cfg.plot_vmax)]
    meta = _metadata(
        cfg,
        cdf="right-continuous, jumps 1/phi(q); principal character skipped at t0 = 0",
        bounds=_em_bounds(cfg),
        failures=failures,
    )
    table = Table(["q", "v", "D"], rows, meta, bool(failures))
    hankel = {"metadata": fmt(_metadata(cfg, failures=failures)), "reports": fmt(reports)}
    return table, hankel


def cmd_verify(cfg: RunConfig, stream) -> bool:
    from lderiv import verify

    results = verify.run(cfg.level)
    for r in results:
        stream.write(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail} ({r.seconds:.2f}s)\n")
    ok = all(r.passed for r in results)
    stream.write(f"{sum(r.passed for r in results)}/{len(results)} checks passed at level {cfg.level}\n")
    return ok


def _write(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _log_to_stderr() -> None:
    """Progress goes to whatever sys.stderr is now; stdout stays data-only."""
    root = logging.getLogger("lderiv")
    for h in list(root.handlers):
        root.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
    root.addHandler(handler)
    root.setLevel(logging.INFO)
    root.propagate = False


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--out", help="output file (default: standard output)")
    common.add_argument("--threads", type=int, default=1, help="worker threads; output does not depend on it")
    common.add_argument("--eps", type=float, help="target truncation error for Hurwitz zeta values")

    def q_args(p, multi):
        p.add_argument("--q", type=int, help="modulus")
        if multi:
            p.add_argument("--q-list", type=int, nargs="+", help="moduli")

    parser = _Parser(prog="lderiv", description="Power means of |L'/L(1+it0, chi)| over Dirichlet characters.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("characters", parents=[common], help="character table mod q")
    q_args(p, False)

    p = sub.add_parser("lvalues", parents=[common], help="L, L' and L'/L at 1+it0 for every character")
    q_args(p, False)
    p.add_argument("--t0", type=float, default=0.0)

    p = sub.add_parser("moments", parents=[common], help="empirical power means against the main term")
    q_args(p, True)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--k", type=int)
    p.add_argument("--k-list", type=int, nargs="+")
    p.add_argument("--trunc-M", type=int, default=10**6, help="main-term truncation point")

    p = sub.add_parser("dist", parents=[common], help="distribution-function breakpoints and Hankel checks")
    q_args(p, True)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--plot-vmax", type=float, help="drop breakpoints above this v")
    p.add_argument("--hankel-K", type=int, default=6, help="largest Hankel order (needs 2K+1 moments)")

    p = sub.add_parser("verify", help="run the invariant suites")
    p.add_argument("--level", choices=["quick", "full"], default="quick")
    p.add_argument("--threads", type=int, default=1)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    _log_to_stderr()
    try:
        cfg = RunConfig.from_args(ns)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"lderiv: error: {exc}\n")
        return EXIT_USAGE
    mom.set_threads(cfg.threads)

    if cfg.command == "verify":
        return EXIT_OK if cmd_verify(cfg, sys.stdout) else EXIT_NUMERIC

    hankel = None
    try:
        if cfg.command == "characters":
            table = cmd_characters(cfg)
        elif cfg.command == "lvalues":
            table = cmd_lvalues(cfg)
        elif cfg.command == "moments":
            table = cmd_moments(cfg)
        else:
            table, hankel = cmd_dist(cfg)
    except LDerivError as exc:
        sys.stderr.write(f"lderiv: numerical failure: {exc}\n")
        return EXIT_NUMERIC

    text = table.render(cfg.format)
    if hankel is not None:
        htext = json.dumps(hankel, sort_keys=True, indent=1) + "\n"
        if cfg.out is not None:
            _write(htext, cfg.out + ".hankel.json")
        elif cfg.format == "json":
            doc = json.loads(text)
            doc["hankel"] = hankel
            text = json.dumps(doc, sort_keys=True, indent=1) + "\n"
        else:
            text += "# hankel: " + json.dumps(hankel, sort_keys=True) + "\n"
    _write(text, cfg.out)
    if table.failed:
        sys.stderr.write("lderiv: some rows failed; partial output written\n")
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
