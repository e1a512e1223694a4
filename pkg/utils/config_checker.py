"""
Config checker
Validates an experiment config before any stage runs and reports every problem at once.
"""
from pathlib import Path
from typing import List, Optional, Tuple

from src.errors import ConfigError
from src.pipeline.experiment import ExperimentConfig
from utils.pretty_print import echo


class ConfigChecker:
    """Checks for ExperimentConfig; each check returns (ok, error message)."""

    def __init__(self, config: ExperimentConfig):
        self.config = config

    def check_inputs(self) -> Tuple[bool, Optional[str]]:
        """
        Exactly one corpus source, and every referenced file exists.

        Returns:
            Tuple[bool, Optional[str]]: (passed, error message)
        """
        cfg = self.config
        if (cfg.corpus is None) == (cfg.synth is None):
            return False, "give exactly one of 'corpus' (a file) or 'synth' (generate in memory)"
        missing = [p for p in (cfg.corpus, cfg.plan.file) if p and not Path(p).exists()]
        if cfg.synth is not None and cfg.synth.plan.file and not Path(cfg.synth.plan.file).exists():
            missing.append(cfg.synth.plan.file)
        if missing:
            return False, f"file not found: {', '.join(missing)}"
        return True, None

    def check_dimensions(self) -> Tuple[bool, Optional[str]]:
        cfg = self.config
        problems = []
        if cfg.d < 1:
            problems.append(f"d must be >= 1 (got {cfg.d})")
        if cfg.l < 1:
            problems.append(f"l must be >= 1 (got {cfg.l})")
        if cfg.lam < 0:
            problems.append(f"lambda must be >= 0 (got {cfg.lam})")
        if cfg.anchors.n < 1 and cfg.anchors.mode != "explicit":
            problems.append(f"anchor count N must be >= 1 (got {cfg.anchors.n})")
        if cfg.anchors.mode == "explicit" and not cfg.anchors.ids:
            problems.append("explicit anchor mode needs anchors.ids")
        if cfg.area.T is not None and cfg.area.T < 1:
            problems.append(f"area T must be >= 1 (got {cfg.area.T})")
        return (not problems), "; ".join(problems) or None

    def check_anchor_count(self, m: Optional[int]) -> Tuple[bool, Optional[str]]:
        """N < M once the corpus size is known."""
        if m is None:
            return True, None
        n = len(self.config.anchors.ids or []) if self.config.anchors.mode == "explicit" else self.config.anchors.n
        if n >= m:
            return False, f"anchor count N={n} must be smaller than the number of devices M={m}"
        return True, None

    def check_grids(self) -> Tuple[bool, Optional[str]]:
        sweep = self.config.sweep
        problems = []
        if not sweep.lambdas:
            problems.append("sweep.lambdas is empty")
        elif any(v < 0 for v in sweep.lambdas):
            problems.append("sweep.lambdas must be nonnegative")
        if sweep.d_grid is not None and (not sweep.d_grid or min(sweep.d_grid) < 1):
            problems.append("sweep.d_grid must be a nonempty list of positive integers")
        if sweep.l_grid:
            problems.append("l cannot be selected by the matching loss (the loss grows with l); remove sweep.l_grid")
        if self.config.plots.enabled and not self.config.plots.n_grid:
            problems.append("plots.n_grid is empty")
        return (not problems), "; ".join(problems) or None

    def run_all_checks(self, m: Optional[int] = None) -> bool:
        """
        Run every check.

        Returns:
            bool: True when all checks pass.

        Raises:
            ConfigError: listing every failed check.
        """
        echo("🔍 Checking configuration...")
        failures: List[str] = []
        checks = [
            ("inputs", self.check_inputs),
            ("dimensions", self.check_dimensions),
            ("anchors", lambda: self.check_anchor_count(m)),
            ("grids", self.check_grids),
        ]
        for name, check in checks:
            echo(f"  - {name}...", end="")
            ok, error = check()
            if ok:
                echo(" ✅")
            else:
                echo(" ❌")
                failures.append(f"{name}: {error}")
        if failures:
            raise ConfigError("configuration errors:\n  " + "\n  ".join(failures))
        return True
