"""Configuration-driven experiment runner.

One JSON config describes one experiment; each subcommand runs one
pipeline and writes machine-readable artifacts (CSV rows, a structured
summary JSON) into the output directory.  Outputs carry no timestamps
and all floats are printed with 12 significant digits, so identical
configs produce byte-identical files, for any ``--threads`` value.

Exit codes: 0 when the run completes and every configured check passes;
2 for configuration problems, 3 for numerical failures (including
completed runs whose checks fail), 4 for I/O problems.  The summary JSON
is written even when a run fails.

Subcommands: spectrum, integrate, simulate, check-optimality, report.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .errors import ArgumentError, ConfigError, KLSpecError, NumericError
from .functions import Constant, PiecewiseLinear, Polynomial, Sine
from .kernels import (
    BrownianMotion,
    FractionalBrownian,
    Interval,
    OrnsteinUhlenbeck,
    Partition,
    TabulatedKernel,
)
from .montecarlo import (
    RandomSource,
    empirical_integral_variance,
    partition_node_indices,
    simulate_paths,
)
from .optimality import (
    check_trace_dominance,
    entropy_partial_sums,
    fourier_cosine_onb,
    haar_onb,
    kl_onb,
    legendre_onb,
)
from .spectral import (
    basis_to_json,
    closed_form_brownian_basis,
    eigen_residuals,
    nystrom_decompose,
)
from .stieltjes import apriori_bound, variance_discrete, variance_spectral

SEED_ENV_VAR = "KLSPEC_SEED"
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

_MARGIN_TOL = 1e-10


def _fmt(x) -> str:
    return f"{float(x):.12g}"


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) if isinstance(v, (int, float, np.floating)) else v for v in row])


def _write_summary(path: Path, summary: dict):
    with open(path, "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")


class Experiment:
    """Validated experiment configuration."""

    def __init__(
        self,
        doc: dict,
        out_dir: str | None,
        threads: int,
        dump_paths: bool,
        subcommand: str = "",
    ):
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        self.doc = doc
        self.subcommand = subcommand
        self.threads = max(1, threads)
        self.dump_paths = dump_paths
        self.kernel = self._kernel(doc.get("kernel", {"family": "brownian"}))
        a, b = doc.get("interval", [0.0, 1.0])
        try:
            self.interval = Interval(float(a), float(b))
        except ArgumentError as exc:
            raise ConfigError(str(exc)) from exc
        self.grid_size = self._positive_int(doc.get("grid_size", 513), "grid_size")
        self.quadrature = doc.get("quadrature", "trapezoid")
        if self.quadrature not in ("trapezoid", "gauss-legendre"):
            raise ConfigError(f"unknown quadrature kind {self.quadrature!r}")
        self.panels = doc.get("panels")
        if self.panels is not None:
            self.panels = self._positive_int(self.panels, "panels")
        self.truncation = self._positive_int(doc.get("truncation", 128), "truncation")
        self.tolerance = float(doc.get("tolerance", 1e-12))
        if self.tolerance <= 0:
            raise ConfigError("tolerance must be positive")
        self.partition_size = self._positive_int(doc.get("partition_size", 256), "partition_size")
        self.mc_paths = int(doc.get("mc_paths", 0))
        if self.mc_paths < 0:
            raise ConfigError("mc_paths must be nonnegative")
        seed = os.environ.get(SEED_ENV_VAR, doc.get("seed"))
        if self.mc_paths > 0 and seed is None:
            raise ConfigError("a seed is required whenever mc_paths > 0")
        self.seed = None if seed is None else int(seed)
        self.integrands = [self._integrand(spec) for spec in doc.get(
            "integrands",
            [{"kind": "constant", "value": 1.0}],
        )]
        self.onbs = list(doc.get("onbs", ["cosine", "legendre", "haar"]))
        for name in self.onbs:
            if name not in ("cosine", "legendre", "haar"):
                raise ConfigError(f"unknown orthonormal family {name!r}")
        self.onb_size = self._positive_int(doc.get("onb_size", 64), "onb_size")
        self.dominance_n_max = self._positive_int(doc.get("dominance_n_max", 32), "dominance_n_max")
        self.entropy_n_max = self._positive_int(doc.get("entropy_n_max", 16), "entropy_n_max")
        self.consistency_tol = float(doc.get("consistency_tol", 1e-2))
        self.isometry_tol = float(doc.get("isometry_tol", 5e-3))
        if subcommand == "check-optimality" and "haar" in self.onbs:
            n = self.grid_size
            if n & (n - 1) != 0:
                raise ConfigError("haar comparisons require a power-of-two grid_size")
            if self.quadrature != "gauss-legendre":
                raise ConfigError(
                    "haar comparisons need quadrature='gauss-legendre' so panel "
                    "boundaries sit on the dyadic jump points"
                )
            if self.panels is None:
                self.panels = max(1, self.grid_size // 4)
        self.out_dir = Path(out_dir or doc.get("output_dir", "out"))

    @staticmethod
    def _positive_int(value, name: str) -> int:
        try:
            value = int(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{name} must be an integer") from exc
        if value <= 0:
            raise ConfigError(f"{name} must be positive, got {value}")
        return value

    @staticmethod
    def _kernel(spec: dict):
        family = spec.get("family", "brownian")
        try:
            if family == "brownian":
                return BrownianMotion()
            if family == "fbm":
                return FractionalBrownian(hurst=float(spec["hurst"]))
            if family == "ou":
                return OrnsteinUhlenbeck(
                    theta=float(spec.get("theta", 1.0)), sigma=float(spec.get("sigma", 1.0))
                )
            if family == "tabulated":
                return TabulatedKernel.from_csv(spec["csv"])
        except KeyError as exc:
            raise ConfigError(f"kernel family {family!r} is missing field {exc}") from exc
        except ArgumentError as exc:
            raise ConfigError(str(exc)) from exc
        raise ConfigError(f"unknown kernel family {family!r}")

    @staticmethod
    def _integrand(spec: dict):
        kind = spec.get("kind")
        try:
            if kind == "constant":
                return Constant(float(spec["value"]))
            if kind == "polynomial":
                return Polynomial(spec["coefficients"])
            if kind == "sine":
                return Sine(
                    amplitude=float(spec.get("amplitude", 1.0)),
                    omega=float(spec.get("omega", np.pi)),
                    phase=float(spec.get("phase", 0.0)),
                )
            if kind == "piecewise-linear":
                return PiecewiseLinear(spec["knots"])
        except KeyError as exc:
            raise ConfigError(f"integrand {kind!r} is missing field {exc}") from exc
        except ArgumentError as exc:
            raise ConfigError(str(exc)) from exc
        raise ConfigError(f"unknown integrand kind {kind!r}")

    def decompose(self):
        basis = nystrom_decompose(
            self.kernel,
            self.interval,
            self.grid_size,
            rule_kind=self.quadrature,
            tol=self.tolerance,
            panels=self.panels,
        )
        return basis

    def spectral_modes(self, basis) -> int:
        return min(self.truncation, basis.n_modes)

    @property
    def is_standard_brownian(self) -> bool:
        return (
            isinstance(self.kernel, BrownianMotion)
            and self.interval.a == 0.0
            and self.interval.b == 1.0
        )


def run_spectrum(exp: Experiment) -> dict:
    basis = exp.decompose()
    residuals = eigen_residuals(basis, exp.kernel)
    lam1 = float(basis.eigenvalues[0])
    trace_discrete = float(
        np.dot(basis.rule.weights, exp.kernel(basis.rule.nodes, basis.rule.nodes))
    )
    trace_eigensum = float(np.sum(basis.eigenvalues))
    trace_ok = abs(trace_eigensum - trace_discrete) <= 1e-10 * max(trace_discrete, 1e-300)
    residual_ok = bool(np.all(residuals <= 1e-8 * lam1))

    (exp.out_dir / "spectrum.json").write_text(basis_to_json(basis) + "\n")
    _write_csv(
        exp.out_dir / "spectrum.csv",
        ["k", "lambda", "eigen_residual"],
        [(k + 1, basis.eigenvalues[k], residuals[k]) for k in range(basis.n_modes)],
    )
    summary = {
        "subcommand": "spectrum",
        "lambda_1": lam1,
        "modes_retained": basis.n_modes,
        "trace_discrete": trace_discrete,
        "trace_eigensum": trace_eigensum,
        "checks": {"trace_identity": trace_ok, "eigen_residuals": residual_ok},
    }
    print(f"trace: eigenvalue sum {_fmt(trace_eigensum)} vs diagonal quadrature {_fmt(trace_discrete)}")

    if exp.is_standard_brownian:
        # Closed-form families on this grid: the half-integer sine family
        # solves the eigenproblem, the integer (both-ends-zero) one does
        # not; both residuals are reported so the gap is visible.
        k_show = min(16, basis.n_modes)
        grid = basis.rule.nodes if exp.quadrature == "trapezoid" else np.linspace(0, 1, exp.grid_size)
        mixed = closed_form_brownian_basis(k_show, "mixed", grid)
        dirichlet = closed_form_brownian_basis(k_show, "dirichlet", grid)
        res_mixed = eigen_residuals(mixed, exp.kernel)
        res_dir = eigen_residuals(dirichlet, exp.kernel)
        _write_csv(
            exp.out_dir / "closed_form.csv",
            ["k", "mixed_lambda", "mixed_residual", "dirichlet_lambda", "dirichlet_residual"],
            [
                (k + 1, mixed.eigenvalues[k], res_mixed[k], dirichlet.eigenvalues[k], res_dir[k])
                for k in range(k_show)
            ],
        )
        summary["closed_form"] = {
            "mixed_max_residual": float(np.max(res_mixed)),
            "dirichlet_max_residual": float(np.max(res_dir)),
        }
        print(
            "closed forms: mixed family residual "
            f"{_fmt(np.max(res_mixed))}, dirichlet family residual {_fmt(np.max(res_dir))}"
        )
    return summary


def run_integrate(exp: Experiment) -> dict:
    basis = exp.decompose()
    K = exp.spectral_modes(basis)
    t0, t1 = exp.interval.a, exp.interval.b
    partition = Partition.uniform(t0, t1, exp.partition_size)
    rows = []
    checks_ok = True
    for f in exp.integrands:
        spectral = variance_spectral(f, basis, t0, t1, K, threads=exp.threads)
        discrete = variance_discrete(f, partition, exp.kernel)
        err = abs(spectral - discrete)
        ok = err <= exp.consistency_tol
        oracle = ""
        if exp.is_standard_brownian:
            xs = np.linspace(t0, t1, 4097)
            oracle = float(np.trapezoid(np.abs(f(xs)) ** 2, xs))
            ok = ok and abs(spectral - oracle) <= exp.isometry_tol
        try:
            ap = apriori_bound(f, basis, t0, t1, K)
            ap_lhs, ap_bound = ap.lhs, ap.bound
            ap_status = "pass" if ap.satisfied else "fail"
            ok = ok and ap.satisfied
        except KLSpecError:
            ap_lhs, ap_bound, ap_status = "", "", "skipped"
        checks_ok = checks_ok and ok
        rows.append(
            (f.label, t0, t1, K, spectral, discrete, err, oracle, ap_lhs, ap_bound, ap_status)
        )
    _write_csv(
        exp.out_dir / "integrate.csv",
        [
            "f", "t0", "t", "K", "spectral", "discrete", "abs_error",
            "isometry_oracle", "apriori_lhs", "apriori_bound", "apriori_status",
        ],
        rows,
    )
    summary = {
        "subcommand": "integrate",
        "modes_used": K,
        "checks": {"all_integrands": bool(checks_ok)},
    }
    print(f"integrate: {len(rows)} integrand(s), checks {'pass' if checks_ok else 'FAIL'}")
    return summary


def run_simulate(exp: Experiment) -> dict:
    if exp.mc_paths < 2:
        raise ConfigError("simulate needs mc_paths >= 2")
    if exp.quadrature != "trapezoid":
        raise ConfigError("simulate needs a trapezoid grid so partition points are nodes")
    if (exp.grid_size - 1) % exp.partition_size != 0:
        raise ConfigError(
            f"partition_size {exp.partition_size} must divide grid_size-1 = {exp.grid_size - 1}"
        )
    basis = exp.decompose()
    K = exp.spectral_modes(basis)
    source = RandomSource(exp.seed)
    ensemble = simulate_paths(basis, K, exp.mc_paths, source, threads=exp.threads)
    partition = Partition.uniform(exp.interval.a, exp.interval.b, exp.partition_size)
    idx = partition_node_indices(basis.rule.nodes, partition)
    rows = []
    checks_ok = True
    for f in exp.integrands:
        est = empirical_integral_variance(f, ensemble, partition)
        fvals = np.asarray(f(partition.points[:-1]))
        phi_at = basis.eigenfunctions[:K][:, idx]
        c = np.sqrt(basis.eigenvalues[:K]) * (np.diff(phi_at, axis=1) @ fvals)
        oracle = float(np.sum(np.abs(c) ** 2))
        within = abs(est.estimate - oracle) <= 3.0 * est.std_error
        checks_ok = checks_ok and within
        rows.append(
            (f.label, est.estimate, est.std_error, oracle,
             abs(est.estimate - oracle), "yes" if within else "no")
        )
    _write_csv(
        exp.out_dir / "simulate.csv",
        ["f", "estimate", "std_error", "oracle", "abs_error", "within_3se"],
        rows,
    )
    if exp.dump_paths:
        _write_csv(
            exp.out_dir / "paths.csv",
            [f"t={_fmt(x)}" for x in ensemble.grid],
            ensemble.paths,
        )
    summary = {
        "subcommand": "simulate",
        "paths": exp.mc_paths,
        "modes_used": K,
        "seed": exp.seed,
        "checks": {"all_within_3se": bool(checks_ok)},
    }
    print(f"simulate: {exp.mc_paths} paths, checks {'pass' if checks_ok else 'FAIL'}")
    return summary


def run_optimality(exp: Experiment) -> dict:
    basis = exp.decompose()
    n_max = min(exp.dominance_n_max, exp.onb_size, basis.n_modes)
    families = {"kl": lambda: kl_onb(basis, min(exp.onb_size, basis.n_modes))}
    builders = {"cosine": fourier_cosine_onb, "legendre": legendre_onb, "haar": haar_onb}
    for name in exp.onbs:
        families[name] = (lambda b=builders[name]: b(basis.rule, exp.onb_size))
    trace = float(np.dot(basis.rule.weights, exp.kernel(basis.rule.nodes, basis.rule.nodes)))
    rows = []
    margins_ok = True
    entropy_ok = True
    n_entropy = min(exp.entropy_n_max, n_max)
    s_kl = entropy_partial_sums(basis.eigenvalues, n_max, total=trace)
    for name, build in families.items():
        onb = build()
        report = check_trace_dominance(onb, basis, n_max)
        comp = np.diff(np.concatenate([[0.0], report.compression_partials]))
        s_onb = entropy_partial_sums(comp, n_max, total=trace)
        for n in range(1, n_max + 1):
            rows.append(
                (name, n, report.eigen_partials[n - 1], report.compression_partials[n - 1],
                 report.margins[n - 1], s_kl[n - 1], s_onb[n - 1])
            )
        margins_ok = margins_ok and report.all_passed
        if name != "kl":
            entropy_ok = entropy_ok and bool(
                np.all(s_kl[:n_entropy] <= s_onb[:n_entropy] + _MARGIN_TOL)
            )
    _write_csv(
        exp.out_dir / "optimality.csv",
        ["onb", "n", "sum_lambda", "sum_d", "margin", "entropy_kl", "entropy_onb"],
        rows,
    )
    summary = {
        "subcommand": "check-optimality",
        "trace": trace,
        "families": sorted(families),
        "checks": {"dominance": bool(margins_ok), "entropy": bool(entropy_ok)},
    }
    print(
        f"optimality: dominance {'pass' if margins_ok else 'FAIL'}, "
        f"entropy {'pass' if entropy_ok else 'FAIL'}"
    )
    return summary


def run_report(exp: Experiment) -> dict:
    rows = []
    all_ok = True
    found = False
    for name in ("spectrum", "integrate", "simulate", "check-optimality"):
        path = exp.out_dir / f"summary_{name.replace('-', '_')}.json"
        if not path.exists():
            continue
        found = True
        doc = json.loads(path.read_text())
        for check, ok in sorted(doc.get("checks", {}).items()):
            rows.append((name, check, "pass" if ok else "fail"))
            all_ok = all_ok and bool(ok)
    if not found:
        raise ConfigError(f"no summaries found in {exp.out_dir}")
    _write_csv(exp.out_dir / "report.csv", ["subcommand", "check", "status"], rows)
    width = max(len(r[0]) for r in rows)
    for sub, check, status in rows:
        print(f"{sub:<{width}}  {check:<24} {status}")
    return {"subcommand": "report", "checks": {"all": bool(all_ok)}}


_RUNNERS = {
    "spectrum": run_spectrum,
    "integrate": run_integrate,
    "simulate": run_simulate,
    "check-optimality": run_optimality,
    "report": run_report,
}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="klspec",
        description="spectral stochastic-integration experiments from a JSON config",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _RUNNERS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=(name != "report"), help="path to the JSON config")
        p.add_argument("--out", default=None, help="output directory (default from config)")
        p.add_argument("--threads", type=int, default=1, help="worker threads; outputs invariant")
        p.add_argument("--dump-paths", action="store_true", help="also write simulated paths")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    summary_path = None
    try:
        doc = {}
        if args.config is not None:
            try:
                doc = json.loads(Path(args.config).read_text())
            except OSError as exc:
                print(f"error (io): cannot read config: {exc}", file=sys.stderr)
                return EXIT_IO
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config is not valid JSON: {exc}") from exc
        exp = Experiment(doc, args.out, args.threads, args.dump_paths, args.subcommand)
        exp.out_dir.mkdir(parents=True, exist_ok=True)
        summary_path = exp.out_dir / f"summary_{args.subcommand.replace('-', '_')}.json"
        summary = _RUNNERS[args.subcommand](exp)
        _write_summary(summary_path, summary)
        checks = summary.get("checks", {})
        if all(checks.values()):
            return EXIT_OK
        print("error (numeric): one or more checks failed", file=sys.stderr)
        return EXIT_NUMERIC
    except ConfigError as exc:
        print(f"error (config): {exc}", file=sys.stderr)
        if summary_path is not None:
            _write_summary(summary_path, {"error": str(exc), "category": "config"})
        return EXIT_CONFIG
    except (NumericError, KLSpecError) as exc:
        category = "numeric" if isinstance(exc, NumericError) else "config"
        print(f"error ({category}): {exc}", file=sys.stderr)
        if summary_path is not None:
            _write_summary(summary_path, {"error": str(exc), "category": category})
        return EXIT_NUMERIC if category == "numeric" else EXIT_CONFIG
    except OSError as exc:
        print(f"error (io): {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
