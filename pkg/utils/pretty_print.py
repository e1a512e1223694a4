"""
Console output: progress lines and result tables.
"""
from typing import Dict, Iterable, Optional

from prettytable import PrettyTable

from config.manager import settings


def echo(*args, **kwargs):
    """print() that respects log.verbose and always flushes."""
    if settings.log.verbose:
        kwargs.setdefault("flush", True)
        print(*args, **kwargs)


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


def metrics_table(results: Dict[str, Dict[str, Optional[float]]]) -> PrettyTable:
    """
    One row per method with count / median / mean / std / p25 / p75 columns.

    Args:
        results: method name -> error_metrics() dict.
    """
    table = PrettyTable()
    table.field_names = ["method", "count", "median", "mean", "std", "p25", "p75"]
    for method, m in results.items():
        table.add_row([method] + [_fmt(m.get(k)) for k in ("count", "median", "mean", "std", "p25", "p75")])
    table.align["method"] = "l"
    return table


def sweep_table(rows: Iterable, best_lambda: Optional[float] = None, best_d: Optional[int] = None) -> PrettyTable:
    table = PrettyTable()
    table.field_names = ["", "d", "lambda", "matching loss", "anchor CV error", "median error", "status"]
    for r in rows:
        mark = "*" if (r.lam == best_lambda and r.d == best_d) else ""
        status = "ok" if r.ok else f"failed: {r.error[:40]}"
        table.add_row([mark, r.d, f"{r.lam:.3g}", _fmt(r.loss), _fmt(r.cv_error), _fmt(r.median_error), status])
    return table


def error_vs_n_table(rows: Iterable[dict]) -> PrettyTable:
    table = PrettyTable()
    table.field_names = ["N", "seed", "method", "median error"]
    for r in rows:
        table.add_row([r["N"], r["seed"], r["method"], _fmt(r["median_error"])])
    return table


def show(table: PrettyTable, title: Optional[str] = None):
    if title:
        echo(f"\n📊 {title}")
    echo(table)
