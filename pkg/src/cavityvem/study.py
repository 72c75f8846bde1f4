"""Convergence studies: eigenvalues under mesh refinement and observed orders.

A study sweeps mesh families, refinement levels and stabilization weights,
solves the eigenproblem for each combination, and reports the scaled
eigenvalues (lambda / pi^2) next to the exact values of the rectangular
cavity together with least-squares convergence orders. Output is a
deterministic CSV (byte-identical across reruns of the same configuration)
and an aligned text table.
"""

from __future__ import annotations

import json
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .assembly import assemble
from .eigensolve import EigenOptions, solve
from .mesh import generators

__all__ = [
    "StudyConfig",
    "RunResult",
    "ConvergenceReport",
    "exact_eigenvalues",
    "observed_order",
    "run_study",
]


def exact_eigenvalues(a: float, b: float, count: int) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Lowest scaled cavity eigenvalues (n/a)^2 + (m/b)^2 with (n, m) labels.

    Values are repeated according to multiplicity and sorted ascending;
    ties are labeled in lexicographic (n, m) order.
    """
    if a <= 0 or b <= 0:
        raise ValueError("cavity sides must be positive")
    if count < 1:
        raise ValueError("count must be at least 1")
    kmax = 4
    while True:
        pairs = [
            ((n / a) ** 2 + (m / b) ** 2, (n, m))
            for n in range(kmax)
            for m in range(kmax)
            if n + m > 0
        ]
        pairs.sort()
        # trustworthy only below the enumeration boundary
        ceiling = min((kmax / a) ** 2, (kmax / b) ** 2)
        safe = [p for p in pairs if p[0] < ceiling]
        if len(safe) >= count:
            vals = np.array([p[0] for p in safe[:count]])
            labels = [p[1] for p in safe[:count]]
            return vals, labels
        kmax *= 2


def observed_order(ns, values, exact: float) -> float:
    """Least-squares slope of log|error| against log(1/N).

    Levels with zero error are excluded (with a warning); fewer than two
    usable levels yield NaN, reported as "n/a" by the table writer.
    """
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    err = np.abs(values - exact)
    keep = np.isfinite(err) & (err > 0)
    if (~keep & np.isfinite(err)).any():
        warnings.warn("zero-error levels excluded from the order fit", stacklevel=2)
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(1.0 / ns[keep]), np.log(err[keep]), 1)[0])


@dataclass
class StudyConfig:
    """Sweep definition for a convergence study."""

    a: float = 1.0
    b: float = 1.1
    families: tuple = ("rect",)
    levels: tuple = (8, 16, 32, 64)
    sigmas: tuple = (1.0,)
    k: int = 0
    modes: int = 5
    method: str = "auto"
    shift: float = 4.0
    dense_cutoff: int = 6000

    def __post_init__(self):
        if isinstance(self.families, str):
            self.families = (self.families,)
        self.families = tuple(self.families)
        self.levels = tuple(int(n) for n in self.levels)
        sig = self.sigmas
        if isinstance(sig, (int, float)):
            sig = (sig,)
        self.sigmas = tuple(float(s) for s in sig)
        if any(n2 <= n1 for n1, n2 in zip(self.levels, self.levels[1:])):
            raise ValueError("levels must be strictly increasing")
        if self.modes < 1:
            raise ValueError("modes must be at least 1")
        unknown = set(self.families) - set(generators)
        if unknown:
            raise ValueError(f"unknown mesh families: {sorted(unknown)}")

    @classmethod
    def from_dict(cls, doc: dict) -> "StudyConfig":
        aliases = {"family": "families", "n": "levels", "N": "levels", "sigma": "sigmas"}
        kwargs = {}
        for key, value in doc.items():
            key = aliases.get(key, key)
            if key not in cls.__dataclass_fields__:
                raise ValueError(f"unknown study option {key!r}")
            kwargs[key] = value
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path: str) -> "StudyConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunResult:
    """One solved (family, sigma, level) combination."""

    family: str
    sigma: float
    n: int
    n_dofs: int
    scaled: np.ndarray
    kernel_multiplicity: int | None
    method: str
    seconds: float


@dataclass
class ConvergenceReport:
    """All study results with exact references and derived orders."""

    config: StudyConfig
    exact: np.ndarray
    exact_labels: list
    results: list = field(default_factory=list)

    def result(self, family: str, sigma: float, n: int) -> RunResult:
        for r in self.results:
            if r.family == family and r.sigma == sigma and r.n == n:
                return r
        raise KeyError((family, sigma, n))

    def values(self, family: str, sigma: float) -> np.ndarray:
        """Scaled eigenvalues, shape (n_levels, modes)."""
        return np.array(
            [self.result(family, sigma, n).scaled for n in self.config.levels]
        )

    def orders(self, family: str, sigma: float) -> np.ndarray:
        vals = self.values(family, sigma)
        return np.array(
            [
                observed_order(self.config.levels, vals[:, m], self.exact[m])
                for m in range(self.config.modes)
            ]
        )

    def to_csv(self, path: str) -> None:
        """One row per (family, sigma, N, mode); deterministic formatting."""
        lines = ["family,sigma,N,n_dofs,mode,computed,exact,abs_error,order"]
        for family in self.config.families:
            for sigma in self.config.sigmas:
                orders = self.orders(family, sigma)
                for n in self.config.levels:
                    r = self.result(family, sigma, n)
                    for m in range(self.config.modes):
                        err = abs(r.scaled[m] - self.exact[m])
                        lines.append(
                            f"{family},{sigma:.10g},{n},{r.n_dofs},{m + 1},"
                            f"{r.scaled[m]:.12e},{self.exact[m]:.12e},"
                            f"{err:.12e},{_fmt_order(orders[m])}"
                        )
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    def format_table(self) -> str:
        """Aligned text table, one block per (family, sigma)."""
        cfg = self.config
        out = []
        for family in cfg.families:
            for sigma in cfg.sigmas:
                vals = self.values(family, sigma)
                orders = self.orders(family, sigma)
                out.append(
                    f"family={family}  sigma={sigma:.10g}  "
                    f"(a={cfg.a:g}, b={cfg.b:g}, k={cfg.k}, scaled by 1/pi^2)"
                )
                head = ["mode"] + [f"N={n}" for n in cfg.levels] + ["Order", "exact"]
                rows = [head]
                for m in range(cfg.modes):
                    rows.append(
                        [f"{m + 1}"]
                        + [f"{vals[i, m]:.4f}" for i in range(len(cfg.levels))]
                        + [_fmt_order(orders[m]), f"{self.exact[m]:.6f}"]
                    )
                widths = [max(len(r[c]) for r in rows) for c in range(len(head))]
                for r in rows:
                    out.append("  ".join(s.rjust(w) for s, w in zip(r, widths)))
                out.append("")
        return "\n".join(out)


def _fmt_order(x: float) -> str:
    return "n/a" if not np.isfinite(x) else f"{x:.2f}"


def run_study(config: StudyConfig) -> ConvergenceReport:
    """Execute a study configuration deterministically.

    Meshes are generated once per (family, level); the (family, sigma,
    level) solves run on a thread pool sized by the VEM_THREADS environment
    variable (default 1). Results are ordered by the configuration, not by
    completion, so reports do not depend on scheduling.
    """
    exact, labels = exact_eigenvalues(config.a, config.b, config.modes)
    report = ConvergenceReport(config=config, exact=exact, exact_labels=labels)

    meshes = {
        (family, n): generators[family](config.a, config.b, n)
        for family in config.families
        for n in config.levels
    }
    tasks = [
        (family, sigma, n)
        for family in config.families
        for sigma in config.sigmas
        for n in config.levels
    ]

    def run_one(task):
        family, sigma, n = task
        system = assemble(meshes[(family, n)], config.k, sigma)
        opts = EigenOptions(
            modes=config.modes,
            method=config.method,
            sigma_shift=config.shift,
            dense_cutoff=config.dense_cutoff,
        )
        spectrum = solve(system, opts)
        scaled = np.full(config.modes, np.nan)
        got = min(config.modes, len(spectrum.eigenvalues))
        scaled[:got] = spectrum.scaled[:got]
        return RunResult(
            family=family,
            sigma=sigma,
            n=n,
            n_dofs=system.n_dofs,
            scaled=scaled,
            kernel_multiplicity=spectrum.kernel_multiplicity,
            method=spectrum.method,
            seconds=spectrum.solve_seconds,
        )

    workers = max(1, int(os.environ.get("VEM_THREADS", "1")))
    if workers == 1:
        report.results = [run_one(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            report.results = list(pool.map(run_one, tasks))
    return report
