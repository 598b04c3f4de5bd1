"""Evaluation report: JSON for machines, aligned text tables for people, and
CSV of fold-level raw values."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .harness import AblationRow, DepthTable, DisagreementResult, FeatureSetResult, HybridComparison


def _clean(v):
    if isinstance(v, float):
        return None if math.isnan(v) or math.isinf(v) else v
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


def _fmt(v, digits: int = 4) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "n/a"
    if isinstance(v, float):
        return f"{v:.{digits}f}"
    return str(v)


def _table(headers, rows) -> list[str]:
    cells = [[str(h) for h in headers]] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    out = []
    for n, r in enumerate(cells):
        out.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))).rstrip())
        if n == 0:
            out.append("  ".join("-" * w for w in widths))
    return out


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class EvalReport:
    meta: dict
    sections: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)

    # ---------------------------------------------------------- builders

    def add_feature_sets(self, results: list[FeatureSetResult]) -> None:
        self.sections["feature_sets"] = [
            {
                "name": r.name,
                "columns": list(r.columns),
                "n_columns": len(r.columns),
                "auc_mean": r.cv.auc_mean,
                "auc_sd": r.cv.auc_sd,
                "f1_mean": r.cv.f1_mean,
                "f1_sd": r.cv.f1_sd,
                "fold_auc": list(r.cv.fold_auc),
                "fold_f1": list(r.cv.fold_f1),
                "fold_sizes": list(r.cv.fold_sizes),
                "converged": list(r.cv.converged),
            }
            for r in results
        ]

    def add_ablation(self, rows: list[AblationRow]) -> None:
        self.sections["ablation"] = [vars(r).copy() for r in rows]

    def add_depth(self, table: DepthTable) -> None:
        self.sections["depth"] = {
            "beta": table.beta,
            "N": table.sample_size,
            "n_depth0": table.n_depth0,
            "n_depth1": table.n_depth1,
            "excluded_depth2": table.excluded_depth2,
            "agents": [
                {
                    "k": c.k,
                    "mean_error_depth0": c.mean_d0,
                    "mean_error_depth1": c.mean_d1,
                    "cohens_d": c.cohens_d,
                    "mann_whitney_u": c.mw_u,
                    "mann_whitney_p": c.mw_p,
                    "note": c.note,
                }
                for c in table.cells
            ],
        }

    def add_disagreement(self, res: DisagreementResult) -> None:
        self.sections["disagreement"] = vars(res).copy()

    def add_hybrid(self, cmp: HybridComparison) -> None:
        self.sections["hybrid"] = {
            "n": cmp.n,
            "k": cmp.k,
            "beta": cmp.beta,
            "N": cmp.sample_size,
            "models": {"feature": vars(cmp.feature).copy(), "hybrid": vars(cmp.hybrid).copy()},
            "diagnostics": dict(cmp.diagnostics),
        }

    def check(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(Check(name, bool(passed), detail))

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    # ----------------------------------------------------------- output

    def to_dict(self) -> dict:
        return _clean({
            "meta": self.meta,
            **self.sections,
            "checks": [vars(c).copy() for c in self.checks],
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_text(self) -> str:
        lines = [f"# {k}: {v}" for k, v in sorted(self.meta.items()) if not isinstance(v, dict)]
        fs = self.sections.get("feature_sets")
        if fs:
            lines += ["", "Feature sets (5-fold CV logistic regression)"]
            lines += _table(
                ["set", "cols", "AUC", "sd", "F1", "sd"],
                [[r["name"], r["n_columns"], _fmt(r["auc_mean"]), _fmt(r["auc_sd"]), _fmt(r["f1_mean"]),
                  _fmt(r["f1_sd"])] for r in fs],
            )
        ab = self.sections.get("ablation")
        if ab:
            lines += ["", "Ablation (Pearson r, belief vs label)"]
            lines += _table(
                ["config", "k", "beta", "N", "r", "delta r"],
                [[r["name"], r["k"], _fmt(r["beta"], 1), r["sample_size"], _fmt(r["r"]), f"{r['delta_r']:+.4f}"]
                 for r in ab],
            )
        dp = self.sections.get("depth")
        if dp:
            lines += ["", f"Depth-stratified error (beta={dp['beta']}, N={dp['N']}; "
                          f"n depth0={dp['n_depth0']}, depth1={dp['n_depth1']}, depth2 excluded={dp['excluded_depth2']})"]
            lines += _table(
                ["agent", "err d=0", "err d=1", "Cohen d", "MW p"],
                [[f"k={a['k']}", _fmt(a["mean_error_depth0"]), _fmt(a["mean_error_depth1"]), _fmt(a["cohens_d"]),
                  _fmt(a["mann_whitney_p"])] for a in dp["agents"]],
            )
        dg = self.sections.get("disagreement")
        if dg:
            lines += ["", "Disagreement vs ambiguity"]
            lines += _table(["n", "r", "perm p", "shuffles"],
                            [[dg["n"], _fmt(dg["r"]), _fmt(dg["p_permutation"]), dg["n_permutations"]]])
        hy = self.sections.get("hybrid")
        if hy:
            lines += ["", f"Hybrid vs feature (n={hy['n']}; k={hy['k']}, beta={hy['beta']}, N={hy['N']})"]
            lines += _table(
                ["pipeline", "AUC", "Pearson r", "F1", "mean belief"],
                [[name, _fmt(m["auc"]), _fmt(m["pearson_r"]), _fmt(m["f1"]), _fmt(m["mean_belief"])]
                 for name, m in hy["models"].items()],
            )
            lines += ["", "Component diagnostics"]
            lines += _table(["diagnostic", "r"], [[k, _fmt(v)] for k, v in hy["diagnostics"].items()])
        if self.checks:
            lines += ["", "Checks"]
            lines += [f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.detail}" for c in self.checks]
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        """Fold-level raw values, one row per (feature set, fold)."""
        with open(path, "w", encoding="utf-8", newline="") as fh:
            for k, v in sorted(self.meta.items()):
                if not isinstance(v, dict):
                    fh.write(f"# {k}: {v}\n")
            w = csv.writer(fh)
            w.writerow(["feature_set", "fold", "n_test", "auc", "f1"])
            for r in self.sections.get("feature_sets", []):
                for i, (a, f, n) in enumerate(zip(r["fold_auc"], r["fold_f1"], r["fold_sizes"])):
                    w.writerow([r["name"], i, n, repr(a), repr(f)])


def recompute_summary(section: dict) -> dict:
    """Means and sds of one feature-set entry recomputed from its fold values."""
    auc = np.asarray(section["fold_auc"])
    f1 = np.asarray(section["fold_f1"])
    return {
        "auc_mean": float(auc.mean()),
        "auc_sd": float(auc.std(ddof=1)) if auc.size > 1 else 0.0,
        "f1_mean": float(f1.mean()),
        "f1_sd": float(f1.std(ddof=1)) if f1.size > 1 else 0.0,
    }


def load_report(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


__all__ = ["Check", "EvalReport", "recompute_summary", "load_report"]
