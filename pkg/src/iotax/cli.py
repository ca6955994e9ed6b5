"""Batch command-line front end.

Loads scenario documents, dispatches to the analysis modules, and emits a
human-readable table on standard output plus an optional structured JSON
report (``--out``).  Identical inputs produce byte-identical structured
reports: all solvers are deterministic and numbers are rounded to 12
significant digits.

Exit codes: 0 success, 1 input errors (unreadable or malformed documents),
2 domain rejections (the requested object does not exist for this data,
e.g. a tax system that is not sustainable or a clearing solution without an
equilibrium).  Industries are numbered from 1 in all output.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import clearing as clr
from . import taxation as tax
from .equilibrium import SolverConfig, solve_price_balance
from .errors import AnalysisError, InputError, NoEquilibriumError, ParseError
from .matcheck import analyze_matrix
from .model import (
    DEFAULT_BALANCE_TOL,
    EconomyModel,
    RegimeKind,
    balance_residual,
    demand_regime,
    load_economy,
    _read_json,
)

COMMANDS = ("validate", "tax-sustainable", "tax-perfect", "check-tax",
            "classify", "subsidies", "clear", "report")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_REJECTED = 2


@dataclass
class ScenarioConfig:
    """One scenario run: an economy (or raw clearing) document plus options."""

    economy_path: Path
    command: str = "report"
    z_path: Path | None = None
    pi_path: Path | None = None
    scale_b: float | None = None
    tol: float = DEFAULT_BALANCE_TOL
    max_iter: int = 100_000
    damping: float = 0.5
    out_path: Path | None = None

    def solver(self) -> SolverConfig:
        return SolverConfig(tol=min(self.tol, 1e-12), max_iter=self.max_iter,
                            damping=self.damping)


def _round12(value: float) -> float:
    return float(f"{value:.12g}")


def _vec(arr) -> list[float]:
    return [_round12(float(v)) for v in np.asarray(arr, dtype=float)]


def _indices(s) -> list[int]:
    return sorted(int(k) + 1 for k in s)


def load_vector(path: Path) -> np.ndarray:
    """Read a vector from JSON (array, or object with key z/pi/values) or plain text."""
    path = Path(path)
    if not path.exists():
        raise ParseError(f"vector file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        try:
            return np.array([float(tok) for tok in text.replace(",", " ").split()])
        except ValueError as exc:
            raise ParseError(f"{path}: not JSON and not a plain number list") from exc
    if isinstance(doc, list):
        return np.asarray(doc, dtype=float)
    if isinstance(doc, dict):
        for key in ("z", "pi", "values"):
            if key in doc:
                return np.asarray(doc[key], dtype=float)
    raise ParseError(f"{path}: expected a JSON array or an object with key z/pi/values")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iotax",
        description="Taxation systems, price equilibria, and market clearing "
                    "for input-output economies.",
    )
    parser.add_argument("command", nargs="?", choices=COMMANDS, default="report",
                        help="analysis to run (default: report, the full pipeline)")
    parser.add_argument("--economy", type=Path, help="scenario document (JSON, or CSV matrix with JSON sidecar)")
    parser.add_argument("--z", dest="z_path", type=Path, help="generating vector for sustainable taxes or a clearing solution")
    parser.add_argument("--pi", dest="pi_path", type=Path, help="external tax-rate vector")
    parser.add_argument("--scale-b", type=float, default=None, help="tax scale constant (default: interval midpoint)")
    parser.add_argument("--tol", type=float, default=DEFAULT_BALANCE_TOL, help="balance/verification tolerance")
    parser.add_argument("--max-iter", type=int, default=100_000, help="iteration cap for the price solver")
    parser.add_argument("--damping", type=float, default=0.5, help="price-solver damping in (0, 1]")
    parser.add_argument("--out", type=Path, default=None, help="write the structured JSON report here (a directory in batch mode)")
    parser.add_argument("--batch", type=Path, default=None, help="process every *.json scenario in a directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.batch is not None:
        code = run_batch(args)
    else:
        if args.economy is None:
            print("error: --economy PATH is required (or use --batch DIR)", file=sys.stderr)
            return EXIT_INPUT
        config = _config_from_args(args, args.economy)
        code, _ = run(config)
    if argv is None:  # invoked as a console script
        sys.exit(code)
    return code


def _config_from_args(args, economy_path: Path) -> ScenarioConfig:
    return ScenarioConfig(
        economy_path=economy_path,
        command=args.command,
        z_path=args.z_path,
        pi_path=args.pi_path,
        scale_b=args.scale_b,
        tol=args.tol,
        max_iter=args.max_iter,
        damping=args.damping,
        out_path=args.out,
    )


def run(config: ScenarioConfig) -> tuple[int, dict]:
    """Execute one scenario: print the human table, write --out, return (code, report)."""
    try:
        code, report, lines = _execute(config)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT, {"error": str(exc)}
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT, {"error": str(exc)}
    except AnalysisError as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        return EXIT_REJECTED, {"error": str(exc)}
    for line in lines:
        print(line)
    if config.out_path is not None:
        config.out_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                                   encoding="utf-8")
    return code, report


def run_batch(args) -> int:
    """Run one scenario per *.json file in a directory, in parallel."""
    directory = Path(args.batch)
    if not directory.is_dir():
        print(f"error: batch directory not found: {directory}", file=sys.stderr)
        return EXIT_INPUT
    paths = sorted(p for p in directory.glob("*.json"))
    if not paths:
        print(f"error: no *.json scenarios in {directory}", file=sys.stderr)
        return EXIT_INPUT
    out_dir = args.out
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    def one(path: Path):
        config = _config_from_args(args, path)
        config.out_path = (out_dir / f"{path.stem}.report.json") if out_dir else None
        try:
            code, report, lines = _execute(config)
        except InputError as exc:
            return EXIT_INPUT, {"error": str(exc)}, [f"error: {exc}"]
        except AnalysisError as exc:
            return EXIT_REJECTED, {"error": str(exc)}, [f"rejected: {exc}"]
        if config.out_path is not None:
            config.out_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                                       encoding="utf-8")
        return code, report, lines

    with ThreadPoolExecutor(max_workers=min(8, len(paths))) as pool:
        results = list(pool.map(one, paths))
    worst = EXIT_OK
    for path, (code, _, lines) in zip(paths, results):
        print(f"== {path.name} (exit {code}) ==")
        for line in lines:
            print(line)
        worst = max(worst, code)
    return worst


def _execute(config: ScenarioConfig) -> tuple[int, dict, list[str]]:
    handler = {
        "validate": _cmd_validate,
        "tax-sustainable": _cmd_tax_sustainable,
        "tax-perfect": _cmd_tax_perfect,
        "check-tax": _cmd_check_tax,
        "classify": _cmd_classify,
        "subsidies": _cmd_subsidies,
        "clear": _cmd_clear,
        "report": _cmd_report,
    }.get(config.command)
    if handler is None:
        raise ParseError(f"unknown command {config.command!r}")
    return handler(config)


def _require(config: ScenarioConfig, attribute: str, flag: str) -> Path:
    value = getattr(config, attribute)
    if value is None:
        raise ParseError(f"command '{config.command}' requires {flag} PATH")
    return value


def _structural_summary(model: EconomyModel, tol: float) -> tuple[dict, list[str], bool]:
    residual = balance_residual(model)
    regime = demand_regime(model, tol)
    profile = analyze_matrix(model.A)
    summary = {
        "n": model.n,
        "balance_residual_max": _round12(float(np.max(np.abs(residual)))),
        "regime": regime.kind.value,
        "regime_I": _indices(regime.I_set),
        "regime_J": _indices(regime.J_set),
        "irreducible": profile.irreducible,
        "spectral_radius": _round12(profile.spectral_radius),
        "productive": profile.productive,
    }
    lines = [
        f"industries: {model.n}",
        f"balance residual (max): {summary['balance_residual_max']:.12g}",
        f"demand regime: {regime.kind.value}"
        + (f"  (J = {summary['regime_J']})" if regime.kind is RegimeKind.MIXED else ""),
        f"spectral radius: {summary['spectral_radius']:.12g}"
        f"  irreducible: {profile.irreducible}  productive: {profile.productive}",
    ]
    return summary, lines, regime.kind is not RegimeKind.INVALID


def _table_lines(rows: list[dict]) -> list[str]:
    if not rows:
        return []
    columns = list(rows[0].keys())
    header = "  ".join(f"{name:>14}" for name in columns)
    lines = [header]
    for row in rows:
        cells = []
        for name in columns:
            value = row[name]
            cells.append(f"{value:>14.12g}" if isinstance(value, float) else f"{value:>14}")
        lines.append("  ".join(cells))
    return lines


def _cmd_validate(config: ScenarioConfig):
    model = load_economy(config.economy_path)
    summary, lines, valid = _structural_summary(model, config.tol)
    report = {"command": "validate", **summary}
    if not valid:
        lines.append("balance identity does not hold at the requested tolerance")
        return EXIT_REJECTED, report, lines
    return EXIT_OK, report, lines


def _tax_report(config: ScenarioConfig, model: EconomyModel, system: tax.TaxVector):
    price = solve_price_balance(model.A, system.z, config.solver())
    accounts = tax.value_accounts(model, price)
    scale = max(1.0, float(np.max(np.abs(accounts.X))))
    classification = tax.classify_industries(accounts, tol=1e-9 * scale)
    rows = tax.industry_table(model, system, price, accounts, classification)
    report = {
        "command": config.command,
        "pi": _vec(system.pi),
        "scale_b": _round12(system.scale_b),
        "provenance": system.provenance.value,
        "p": _vec(price.p),
        "lambda_residual": _round12(price.lambda_residual),
        "delta": _vec(accounts.delta),
        "Delta": _vec(accounts.Delta),
        "final_product": _vec(accounts.final_product),
        "classification_I": _indices(classification.I_set),
        "classification_J": _indices(classification.J_set),
        "signature": list(classification.signature),
        "table": [dict(row, **{k: _round12(v) for k, v in row.items()
                               if isinstance(v, float)}) for row in rows],
    }
    lines = [f"tax system ({system.provenance.value}), scale_b = {system.scale_b:.12g}"]
    lines += _table_lines(rows)
    return report, lines


def _cmd_tax_perfect(config: ScenarioConfig):
    model = load_economy(config.economy_path)
    system = tax.perfect_tax(model, config.scale_b, tol=config.tol)
    report, lines = _tax_report(config, model, system)
    return EXIT_OK, report, lines


def _cmd_tax_sustainable(config: ScenarioConfig):
    model = load_economy(config.economy_path)
    z = load_vector(_require(config, "z_path", "--z"))
    system = tax.sustainable_tax(model, z, config.scale_b)
    report, lines = _tax_report(config, model, system)
    return EXIT_OK, report, lines


def _cmd_check_tax(config: ScenarioConfig):
    model = load_economy(config.economy_path)
    rates = load_vector(_require(config, "pi_path", "--pi"))
    result = tax.check_tax_sustainable(model, rates, config.solver())
    if not result.sustainable:
        report = {"command": "check-tax", "sustainable": False,
                  "failed_stage": result.failed_stage, "reason": result.reason}
        lines = [f"not sustainable ({result.failed_stage}): {result.reason}"]
        return EXIT_REJECTED, report, lines
    report = {
        "command": "check-tax",
        "sustainable": True,
        "z": _vec(result.z),
        "p": _vec(result.p.p),
        "lambda_residual": _round12(result.p.lambda_residual),
    }
    lines = ["sustainable: yes",
             f"recovered z: {[f'{v:.12g}' for v in result.z]}",
             f"equilibrium p: {[f'{v:.12g}' for v in result.p.p]}"]
    return EXIT_OK, report, lines


def _equilibrium_inputs(config: ScenarioConfig, model: EconomyModel) -> np.ndarray:
    """Generating vector for classify/subsidies: --pi, --z, or x (perfect)."""
    if config.pi_path is not None:
        rates = load_vector(config.pi_path)
        result = tax.check_tax_sustainable(model, rates, config.solver())
        if not result.sustainable:
            raise AnalysisError(f"tax system is not sustainable: {result.reason}")
        return result.z
    if config.z_path is not None:
        return load_vector(config.z_path)
    return model.x.copy()


def _cmd_classify(config: ScenarioConfig):
    model = load_economy(config.economy_path)
    z = _equilibrium_inputs(config, model)
    price = solve_price_balance(model.A, z, config.solver())
    accounts = tax.value_accounts(model, price)
    scale = max(1.0, float(np.max(np.abs(accounts.X))))
    classification = tax.classify_industries(accounts, tol=1e-9 * scale)
    report = {
        "command": "classify",
        "p": _vec(price.p),
        "gaps": _vec(classification.gaps),
        "I": _indices(classification.I_set),
        "J": _indices(classification.J_set),
        "signature": list(classification.signature),
    }
    lines = [
        f"I (value added <= final product): {report['I']}",
        f"J (value added >  final product): {report['J']}",
        f"signature (positive, negative, zero gaps): {classification.signature}",
    ]
    return EXIT_OK, report, lines


def _cmd_subsidies(config: ScenarioConfig):
    model = load_economy(config.economy_path)
    z = load_vector(config.z_path) if config.z_path is not None else model.x.copy()
    price = solve_price_balance(model.A, z, config.solver())
    subsidies = tax.subsidy_requirements(model, z, price)
    report = {
        "command": "subsidies",
        "p": _vec(price.p),
        "subsidies": [[k + 1, _round12(v)] for k, v in subsidies],
    }
    lines = ["minimum subsidies:"]
    lines += [f"  industry {k + 1}: {v:.12g}" for k, v in subsidies if v > 0]
    return EXIT_OK, report, lines


def _load_clearing(config: ScenarioConfig) -> tuple[np.ndarray, np.ndarray]:
    """A raw document with keys A and b, or an economy plus --pi (b = (1-pi) o x)."""
    path = Path(config.economy_path)
    doc = _read_json(path) if path.suffix.lower() != ".csv" else None
    if doc is not None and "b" in doc and "A" in doc:
        A = np.asarray(doc["A"], dtype=float)
        b = np.asarray(doc["b"], dtype=float)
        return A, b
    model = load_economy(config.economy_path)
    rates = load_vector(_require(config, "pi_path", "--pi"))
    return np.asarray(model.A, dtype=float), (1.0 - rates) * model.x


def _cmd_clear(config: ScenarioConfig):
    A, b = _load_clearing(config)
    cfg = clr.ClearingConfig(solver=config.solver(), verify_tol=config.tol)
    report: dict = {"command": "clear"}
    lines: list[str] = []
    if config.z_path is not None:
        z = load_vector(config.z_path)
    else:
        family = clr.min_excess_solution(clr.ClearingProblem(C=A, b=b), cfg)
        z = family.z
        report["objective"] = _round12(family.objective)
        report["full_clearing"] = family.full_clearing
        lines.append(f"minimal excess objective: {family.objective:.12g}"
                     + ("  (full clearing)" if family.full_clearing else ""))
    try:
        equilibrium = clr.equilibrium_from_solution(A, b, z, cfg)
    except NoEquilibriumError:
        if config.z_path is not None:
            raise
        # The minimizer may weight columns of strict-inequality rows; retry
        # with the support-restricted solve on the detected equality set.
        slack = b - A @ z
        rows = np.flatnonzero(slack <= cfg.tol_eq * np.maximum(1.0, b))
        retry = clr.support_solution(A, b, rows) if rows.size else None
        if retry is None:
            raise
        z = retry
        equilibrium = clr.equilibrium_from_solution(A, b, z, cfg)
    check = clr.verify_partial_clearing(A, b, equilibrium, cfg.verify_tol)
    report.update({
        "z": _vec(equilibrium.z),
        "I": _indices(equilibrium.I_set),
        "J": _indices(equilibrium.J_set),
        "b_bar": _vec(equilibrium.b_bar),
        "p": _vec(equilibrium.p.p),
        "p_u": _vec(equilibrium.p_u),
        "R": _round12(equilibrium.R),
        "verified": bool(check),
        "rows": [{"industry": row.industry + 1, "demand": _round12(row.demand),
                  "bound": _round12(row.bound), "clears": row.in_I, "ok": row.ok}
                 for row in check.rows],
    })
    lines += [
        f"clearing rows I: {report['I']}   slack rows J: {report['J']}",
        f"prices p: {[f'{v:.12g}' for v in equilibrium.p.p]}",
        f"generalized prices p_u: {[f'{v:.12g}' for v in equilibrium.p_u]}",
        f"excess supply R: {equilibrium.R:.12g}",
        f"verified: {bool(check)}",
    ]
    return EXIT_OK, report, lines


def _cmd_report(config: ScenarioConfig):
    """Full pipeline: validate, perfect tax, equilibrium, accounts,
    classification, subsidies under a mixed regime, and the exact-clearing
    confirmation (excess supply zero under the constructed system)."""
    model = load_economy(config.economy_path)
    summary, lines, valid = _structural_summary(model, config.tol)
    report = {"command": "report", **summary}
    if not valid:
        lines.append("balance identity does not hold; no further analysis")
        return EXIT_REJECTED, report, lines
    system = tax.perfect_tax(model, config.scale_b, tol=config.tol)
    tax_report, tax_lines = _tax_report(config, model, system)
    tax_report.pop("command")
    report.update(tax_report)
    lines += tax_lines

    if summary["regime"] == RegimeKind.MIXED.value:
        price = solve_price_balance(model.A, model.x, config.solver())
        subsidies = tax.subsidy_requirements(model, model.x, price)
        report["subsidies"] = [[k + 1, _round12(v)] for k, v in subsidies]
        lines += ["minimum subsidies:"]
        lines += [f"  industry {k + 1}: {v:.12g}" for k, v in subsidies if v > 0]

    cfg = clr.ClearingConfig(solver=config.solver())
    b = (1.0 - system.pi) * model.x
    equilibrium = clr.equilibrium_from_solution(model.A, b, system.scale_b * model.x, cfg)
    report["excess_supply"] = _round12(equilibrium.R)
    lines.append(f"excess supply under this system: {equilibrium.R:.12g}")
    return EXIT_OK, report, lines


if __name__ == "__main__":
    main()
