"""Batch command line: simulate, identify, impute, estimate, evaluate, plot.

Each command is one pipeline stage operating on files in the output
directory, so stages can be rerun or inspected independently:

* ``simulate``  writes ``population.csv`` (latent table, for evaluation
  only), ``observed.csv`` (masked table with NA tokens) and the resolved
  ``run_config.txt``.
* ``identify``  reports the identification and missing-at-random checks for
  a graph file (or the two bundled graphs).
* ``impute``    reads ``observed.csv``; writes ``completed_XX.csv`` and
  ``imputation_diagnostics.csv``.
* ``estimate``  reads the completed copies plus ``observed.csv``; writes
  ``effect_mi.csv`` and ``effect_cc.csv``.
* ``evaluate``  compares both curve files against the closed-form truth.
* ``plot``      emits the three SVG figures.

Exit codes: 0 success, 2 usage or malformed input, 3 missing input file,
4 numeric failure.  Errors print a single machine-parsable line to stderr.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from ._seeds import mix_seed
from .causal_graph import (
    Dag,
    bidirected_path_exists,
    frontdoor_dag,
    frontdoor_design_dag,
    frontdoor_identifiable,
    load_graph,
    mar_holds,
)
from .dataset import dataset_from_csv, dataset_to_csv
from .errors import FrontdoorLabError, MissingInput, NumericError
from .figures import effect_curves_svg, scatter_matrix_svg, truth_vs_conditional_svg
from .frontdoor_estimator import (
    complete_case_effect,
    effect_from_csv,
    effect_to_csv,
    estimate_effect,
    fit_pair,
)
from .mi_engine import (
    CompletedDatasets,
    diagnostics_to_csv,
    imputation_diagnostics,
    run_mice,
)
from .runconfig import RunConfig, config_to_text, load_config
from .scm_sim import (
    apply_missingness,
    generate_population,
    intervene_generate,
    oracle_ace,
    population_from_csv,
    population_to_csv,
)
from .spline_smooth import NoConvergenceWarning, additive_fit_to_text, spline_fit_to_text


def _resolve_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise MissingInput(path)
        cfg = load_config(path, cfg)
    overrides = {}
    for name in ("seed", "n", "m"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "out", None) is not None:
        overrides["out"] = args.out
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg


def _require(path: Path) -> Path:
    if not path.exists():
        raise MissingInput(path)
    return path


def _completed_paths(out: Path, m: int) -> list[Path]:
    return [out / f"completed_{i + 1:02d}.csv" for i in range(m)]


# ----------------------------------------------------------------- commands


def cmd_simulate(args) -> int:
    cfg = _resolve_config(args)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    population = generate_population(cfg.scm, cfg.n, mix_seed(cfg.seed, "population"))
    data = apply_missingness(cfg.scm, population, mix_seed(cfg.seed, "missingness"))
    population_to_csv(population, out / "population.csv")
    dataset_to_csv(data, out / "observed.csv")
    (out / "run_config.txt").write_text(config_to_text(cfg), encoding="utf-8")
    miss_x = 1.0 - float(np.mean(data.m_x))
    miss_z = 1.0 - float(np.mean(data.m_z))
    both = float(np.mean(~data.m_x & ~data.m_z))
    print(f"rows={data.n} x_missing={miss_x:.4f} z_missing={miss_z:.4f} both_missing={both:.4f}")
    print(f"wrote {out / 'population.csv'}")
    print(f"wrote {out / 'observed.csv'}")
    return 0


def _mar_report(graph: Dag) -> list[str]:
    lines = []
    names = graph.node_names
    value_nodes = sorted(
        name[2:] for name in names if name.startswith("M_") and name[2:] in names
    )
    if not value_nodes:
        return ["mar: no missingness indicators present"]
    fully_observed = sorted(
        name
        for name in names
        if f"{name}*" in names and f"M_{name}" not in names and not name.startswith("M_")
        and name not in ("m_1", "m_Omega")
    )
    lines.append(f"mar conditioning set: {{{', '.join(fully_observed)}}}")
    for value in value_nodes:
        indicator = f"M_{value}"
        given = [n for n in fully_observed if n != value]
        holds = mar_holds(graph, value, indicator, given)
        unconditional = mar_holds(graph, value, indicator, [])
        lines.append(
            f"mar value={value} indicator={indicator}: holds={str(holds).lower()} "
            f"unconditional={str(unconditional).lower()}"
        )
    return lines


def _identify_report(graph: Dag, label: str, treatment: str) -> list[str]:
    lines = [f"graph: {label}", f"treatment: {treatment}"]
    if treatment not in graph.node_names:
        lines.append("identifiable: n/a (treatment not in graph)")
    elif graph.is_latent(treatment):
        lines.append("identifiable: n/a (treatment is latent in this graph)")
    else:
        children = sorted(graph.children(treatment))
        lines.append(f"children: {', '.join(children) if children else '(none)'}")
        lines.append(f"identifiable: {str(frontdoor_identifiable(graph, treatment)).lower()}")
        for child in children:
            if graph.is_latent(child):
                lines.append(f"  child {child}: latent, blocks identification")
                continue
            has_path = bidirected_path_exists(graph, treatment, child)
            lines.append(
                f"  child {child}: bidirected path to {treatment}: {str(has_path).lower()}"
            )
    lines.extend(_mar_report(graph))
    return lines


def cmd_identify(args) -> int:
    treatment = args.treatment
    if args.graph:
        path = _require(Path(args.graph))
        graphs = [(load_graph(path), str(path))]
    else:
        graphs = [
            (frontdoor_dag(), "builtin frontdoor"),
            (frontdoor_design_dag(), "builtin frontdoor_design"),
        ]
    for graph, label in graphs:
        for line in _identify_report(graph, label, treatment):
            print(line)
        print()
    return 0


def cmd_impute(args) -> int:
    cfg = _resolve_config(args)
    out = Path(cfg.out)
    data = dataset_from_csv(_require(out / "observed.csv"))
    result = run_mice(data, cfg.imputation_config())
    for path, completed in zip(_completed_paths(out, cfg.m), result.completed):
        dataset_to_csv(completed, path)
    diagnostics_to_csv(imputation_diagnostics(result), out / "imputation_diagnostics.csv")
    print(f"wrote {cfg.m} completed datasets to {out}")
    print(f"wrote {out / 'imputation_diagnostics.csv'}")
    return 0


def cmd_estimate(args) -> int:
    cfg = _resolve_config(args)
    out = Path(cfg.out)
    data = dataset_from_csv(_require(out / "observed.csv"))
    completed = tuple(
        dataset_from_csv(_require(path)) for path in _completed_paths(out, cfg.m)
    )
    bundle = CompletedDatasets(source=data, completed=completed)
    grid = cfg.grid_values()
    oracle = oracle_ace(cfg.scm, grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NoConvergenceWarning)
        mi = estimate_effect(bundle, grid, cfg.estimator_config("mi"))
        cc = complete_case_effect(data, grid, cfg.estimator_config("cc"))
        if args.save_models:
            models = out / "models"
            models.mkdir(exist_ok=True)
            for i, copy in enumerate(completed, start=1):
                pair = fit_pair(copy, cfg.estimator_config("mi"))
                (models / f"mediator_{i:02d}.txt").write_text(
                    spline_fit_to_text(pair.mediator), encoding="utf-8"
                )
                (models / f"outcome_{i:02d}.txt").write_text(
                    additive_fit_to_text(pair.outcome), encoding="utf-8"
                )
    effect_to_csv(mi, oracle, out / "effect_mi.csv")
    effect_to_csv(cc, oracle, out / "effect_cc.csv")
    print(f"wrote {out / 'effect_mi.csv'}")
    print(f"wrote {out / 'effect_cc.csv'}")
    return 0


def _error_stats(estimate, oracle, lo=-2.0, hi=2.0):
    errors = estimate.pooled_ace - oracle
    inner = (estimate.grid >= lo - 1e-9) & (estimate.grid <= hi + 1e-9)
    return {
        "max_abs": float(np.max(np.abs(errors))),
        "mean_abs": float(np.mean(np.abs(errors))),
        "mean_signed": float(np.mean(errors)),
        "inner_max_abs": float(np.max(np.abs(errors[inner]))) if inner.any() else float("nan"),
        "inner_mean_abs": float(np.mean(np.abs(errors[inner]))) if inner.any() else float("nan"),
        "inner_mean_signed": float(np.mean(errors[inner])) if inner.any() else float("nan"),
    }


def cmd_evaluate(args) -> int:
    cfg = _resolve_config(args)
    out = Path(cfg.out)
    mi, oracle_mi = effect_from_csv(_require(out / "effect_mi.csv"))
    cc, oracle_cc = effect_from_csv(_require(out / "effect_cc.csv"))
    for label, estimate, oracle in (("mi", mi, oracle_mi), ("cc", cc, oracle_cc)):
        stats = _error_stats(estimate, oracle)
        print(
            f"method={label} max_abs_error={stats['max_abs']:.4f} "
            f"mean_abs_error={stats['mean_abs']:.4f} "
            f"mean_signed_error={stats['mean_signed']:+.4f}"
        )
        print(
            f"method={label} region=[-2,2] max_abs_error={stats['inner_max_abs']:.4f} "
            f"mean_abs_error={stats['inner_mean_abs']:.4f} "
            f"mean_signed_error={stats['inner_mean_signed']:+.4f}"
        )
    cc_stats = _error_stats(cc, oracle_cc)
    print(f"cc_overestimates={str(cc_stats['inner_mean_signed'] > 0).lower()}")

    population_path = out / "population.csv"
    observed_path = out / "observed.csv"
    completed = _completed_paths(out, cfg.m)
    if population_path.exists() and observed_path.exists() and all(p.exists() for p in completed):
        population = population_from_csv(population_path)
        observed = dataset_from_csv(observed_path)
        if len(population) == observed.n:
            masked = ~observed.m_z
            if masked.any():
                true_mean = float(np.mean(population.z[masked]))
                pooled = float(
                    np.mean(
                        [
                            np.mean(dataset_from_csv(p).z_star[masked])
                            for p in completed
                        ]
                    )
                )
                print(
                    f"imputed_z_pooled_mean={pooled:.4f} true_masked_z_mean={true_mean:.4f} "
                    f"gap={pooled - true_mean:+.4f}"
                )

    lines = ["x,oracle,mi_pooled,mi_error,cc_pooled,cc_error"]
    for j in range(len(mi.grid)):
        values = (
            mi.grid[j], oracle_mi[j], mi.pooled_ace[j],
            mi.pooled_ace[j] - oracle_mi[j], cc.pooled_ace[j],
            cc.pooled_ace[j] - oracle_cc[j],
        )
        lines.append(",".join(repr(float(v)) for v in values))
    (out / "evaluation.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {out / 'evaluation.csv'}")
    return 0


def cmd_plot(args) -> int:
    cfg = _resolve_config(args)
    out = Path(cfg.out)
    data = dataset_from_csv(_require(out / "observed.csv"))
    mi, oracle = effect_from_csv(_require(out / "effect_mi.csv"))
    cc, _ = effect_from_csv(_require(out / "effect_cc.csv"))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NoConvergenceWarning)
        scatter = scatter_matrix_svg(data, cfg.subsample, cfg.seed)
        truth_panel = truth_vs_conditional_svg(cfg.scm, data, cfg.subsample, cfg.seed)
    true_q05 = np.empty(len(mi.grid))
    true_q95 = np.empty(len(mi.grid))
    for j, x in enumerate(mi.grid):
        draws = intervene_generate(
            cfg.scm, float(x), 200000, mix_seed(cfg.seed, "plot-truth", j)
        )
        true_q05[j] = float(np.quantile(draws, 0.05))
        true_q95[j] = float(np.quantile(draws, 0.95))
    curves = effect_curves_svg(mi, cc, oracle, true_q05, true_q95)

    for name, text in (
        ("scatter_matrix.svg", scatter),
        ("true_vs_conditional.svg", truth_panel),
        ("estimated_effects.svg", curves),
    ):
        (out / name).write_text(text, encoding="utf-8")
        print(f"wrote {out / name}")
    return 0


# ----------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frontdoor-lab",
        description="Nonlinear causal effect estimation from incomplete data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key-value run configuration file")
        p.add_argument("--seed", type=int, help="root random seed")
        p.add_argument("--n", type=int, help="sample size")
        p.add_argument("--m", type=int, help="number of imputations")
        p.add_argument("--out", help="output directory")

    p = sub.add_parser("simulate", help="draw the population and masked dataset")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("identify", help="graph identification and MAR report")
    common(p)
    p.add_argument("--graph", help="graph file (defaults to both bundled graphs)")
    p.add_argument("--treatment", default="X", help="treatment node name")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("impute", help="multiple imputation of the observed table")
    common(p)
    p.set_defaults(func=cmd_impute)

    p = sub.add_parser("estimate", help="effect curves for imputed and complete-case data")
    common(p)
    p.add_argument(
        "--save-models", action="store_true", help="serialize the fitted regressions"
    )
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("evaluate", help="compare estimates against the closed-form truth")
    common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("plot", help="emit the SVG figures")
    common(p)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MissingInput as exc:
        print(f"error: input-missing: {exc.path}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"error: numeric-failure: {exc}", file=sys.stderr)
        return 4
    except FrontdoorLabError as exc:
        print(f"error: invalid-input: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
