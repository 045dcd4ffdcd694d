"""Command line pipeline: synth, train, anonymize, baseline, eval-ks, sweep, asv-sim.

Conventions shared by all commands:

* ``--seed`` defaults to 0 and is echoed into a ``# seed=<n> version=<v>``
  comment heading every output, so runs are self-documenting;
* identical flags and inputs produce byte-identical outputs;
* files are written atomically (temp file + rename);
* per-gender outputs substitute ``{gender}`` in the target path, or add a
  ``_<gender>`` suffix before the extension when the placeholder is absent;
* report commands also render a PNG figure next to the CSV unless
  ``--no-figures`` is given.

Exit codes: 0 ok, 2 usage or input error, 3 training/computation error,
4 contract violation (forced dissimilarity exhausted).
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from . import __version__
from .anonymize import (
    DEFAULT_FD_THRESHOLD,
    DEFAULT_MAX_ATTEMPTS,
    DEFAULT_N_COMPONENTS,
    DEFAULT_RETAINED_VARIANCE,
    FdConfig,
    anonymize_set,
    baseline_anonymize_set,
    load_model,
    make_baseline_strategy,
    make_generative_strategy,
    save_model,
    train_per_gender,
)
from .embeddings import GENDERS, EmbeddingSet, read_embeddings, write_embeddings
from .errors import (
    DegenerateDataError,
    InvalidInputError,
    ParseError,
    RejectionExhaustedError,
    XvecAnonError,
)
from .metrics import (
    SCENARIOS,
    cllr,
    cllr_min,
    cross_similarities,
    ecdf_points,
    eer,
    ks_statistic,
    linkage_scenario,
    parameter_sweep,
)
from .seeding import derive_seed
from .serialize import atomic_write_text


def _num(x) -> str:
    """Shortest float text that parses back bit-exactly (report columns)."""
    return repr(float(x))
from .synthpop import PopulationSpec, generate_population

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_COMPUTE = 3
EXIT_CONTRACT = 4


def _header(seed: int) -> str:
    return f"seed={seed} version={__version__}"


def _csv_report(path, seed: int, header_row: str, rows) -> None:
    lines = [f"# {_header(seed)}", header_row]
    lines += rows
    atomic_write_text(path, "\n".join(lines) + "\n")


def _gender_path(template: str, gender: str) -> Path:
    if "{gender}" in template:
        return Path(template.replace("{gender}", gender))
    p = Path(template)
    return p.with_name(f"{p.stem}_{gender}{p.suffix}")


def _read_input(path, fmt: str, sidecar=None) -> EmbeddingSet:
    return read_embeddings(path, fmt=fmt, sidecar=sidecar)


def _filter_gender(eset: EmbeddingSet, gender) -> EmbeddingSet:
    if gender is None:
        return eset
    idx = [i for i, g in enumerate(eset.genders) if g == gender]
    if not idx:
        raise InvalidInputError(f"no embeddings with gender {gender!r}")
    return eset.subset(idx)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _fraction(text: str) -> float:
    value = float(text)
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError(f"must be in (0, 1], got {text}")
    return value


def _float_list(text: str):
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _int_list(text: str):
    return [int(tok) for tok in text.split(",") if tok.strip()]


# ---------------------------------------------------------------------------
# commands

def cmd_synth(args) -> int:
    spec = PopulationSpec(
        n_speakers=args.speakers,
        utterances_per_speaker=args.utts,
        dim=args.dim,
        n_modes=args.modes,
        between_speaker_scale=args.between,
        within_speaker_scale=args.within,
        gender_fractions=(args.male_fraction, 1.0 - args.male_fraction),
        seed=args.seed,
    )
    population = generate_population(spec)
    write_embeddings(population, args.out, fmt="csv", header_comment=_header(args.seed))
    print(f"wrote {len(population)} embeddings ({spec.n_speakers} speakers) to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    pool = _filter_gender(_read_input(args.input, args.format, args.sidecar), args.gender)
    models = train_per_gender(pool, args.variance, args.components,
                              seed=args.seed, restarts=args.restarts)
    for gender, model in models.items():
        out = _gender_path(args.out, gender)
        save_model(model, out)
        print(f"{gender}: trained on {model.training_metadata['n_training_vectors']} vectors, "
              f"pca {model.pca.input_dim}->{model.pca.reduced_dim}, "
              f"{model.gmm.n_components} components, "
              f"{model.gmm.n_iterations_run} EM iterations -> {out}")
    return EXIT_OK


def _load_models(template: str, genders) -> dict:
    models = {}
    literal = Path(template)
    if "{gender}" not in template and literal.exists():
        model = load_model(literal)
        models[model.gender] = model
    for gender in genders:
        if gender in models:
            continue
        path = _gender_path(template, gender)
        if path.exists():
            models[gender] = load_model(path)
    if not models:
        raise InvalidInputError(f"no model files found for template {template!r}")
    return models


def cmd_anonymize(args) -> int:
    eset = _filter_gender(_read_input(args.input, args.format, args.sidecar), args.gender)
    models = _load_models(args.model, set(eset.genders) | {"unspecified"})
    fd = None
    if args.fd:
        fd = FdConfig(similarity_threshold=args.fd_threshold, max_attempts=args.max_attempts)
    fakes = anonymize_set(eset, models, seed=args.seed,
                          per_speaker=not args.per_utterance, fd=fd)
    write_embeddings(fakes, args.out, fmt="csv", header_comment=_header(args.seed))
    print(f"anonymized {len(fakes)} utterances "
          f"({'per utterance' if args.per_utterance else 'per speaker'}) -> {args.out}")
    return EXIT_OK


def cmd_baseline(args) -> int:
    pool = _read_input(args.pool, args.format, args.sidecar)
    eset = _filter_gender(_read_input(args.input, args.format, args.sidecar), args.gender)
    fakes = baseline_anonymize_set(eset, pool, seed=args.seed,
                                   per_speaker=not args.per_utterance,
                                   n_far=args.n_far, n_avg=args.n_avg)
    write_embeddings(fakes, args.out, fmt="csv", header_comment=_header(args.seed))
    print(f"baseline-anonymized {len(fakes)} utterances -> {args.out}")
    return EXIT_OK


def cmd_eval_ks(args) -> int:
    set_a = _filter_gender(_read_input(args.a, args.format, None), args.gender)
    set_b = _filter_gender(_read_input(args.b, args.format, None), args.gender)
    strata_a = set_a.by_gender()
    strata_b = set_b.by_gender()
    shared = [g for g in GENDERS if g in strata_a and g in strata_b]
    if not shared:
        raise InvalidInputError("inputs share no gender stratum")
    rows = []
    sims = {}
    for gender in shared:
        sample_a = cross_similarities(strata_a[gender], source_label=f"a-{gender}")
        sample_b = cross_similarities(strata_b[gender], source_label=f"b-{gender}")
        ks = ks_statistic(sample_a.values, sample_b.values)
        rows.append(f"{gender},{_num(ks)},{sample_a.values.size},{sample_b.values.size}")
        sims[f"a ({gender})"] = sample_a.values
        sims[f"b ({gender})"] = sample_b.values
        if args.ecdf_prefix:
            for side, sample in (("a", sample_a), ("b", sample_b)):
                xs, heights = ecdf_points(sample.values)
                ecdf_rows = [f"{_num(x)},{_num(h)}" for x, h in zip(xs, heights)]
                _csv_report(f"{args.ecdf_prefix}_{side}_{gender}.csv", args.seed,
                            "x,F", ecdf_rows)
        print(f"{gender}: ks={ks:.6f}")
    _csv_report(args.out, args.seed, "gender,ks,n_pairs_a,n_pairs_b", rows)
    if not args.no_figures:
        from .figures import save_similarity_comparison
        save_similarity_comparison(sims, Path(args.out).with_suffix(".png"),
                                   title="cross-similarity comparison")
    return EXIT_OK


def cmd_sweep(args) -> int:
    pool = _filter_gender(_read_input(args.input, args.format, args.sidecar), args.gender)
    result = parameter_sweep(pool, args.variances, args.components,
                             split_fraction=args.split, seed=args.seed)
    rows = []
    for cell in result.cells:
        ks = "nan" if math.isnan(cell.ks_statistic) else _num(cell.ks_statistic)
        rows.append(f"{cell.gender},{_num(cell.retained_variance_target)},"
                    f"{cell.n_components},{ks}")
        if cell.error:
            print(f"cell ({cell.gender}, {cell.retained_variance_target}, "
                  f"{cell.n_components}) failed: {cell.error}", file=sys.stderr)
    _csv_report(args.out, args.seed, "gender,variance,components,ks", rows)
    if not args.no_figures:
        from .figures import save_sweep_figure
        save_sweep_figure(result.cells, Path(args.out).with_suffix(".png"),
                          title="KS vs fake generator capacity")
    print(f"swept {len(result.cells)} cells -> {args.out}")
    return EXIT_OK


def _strategy_for(name: str, args, genders) -> object:
    if name == "none":
        return None
    if name == "baseline":
        if not args.pool:
            raise InvalidInputError("strategy 'baseline' needs --pool")
        pool = read_embeddings(args.pool, fmt=args.format, sidecar=args.sidecar)
        return make_baseline_strategy(pool, n_far=args.n_far, n_avg=args.n_avg)
    if name in ("ours", "ours_fd"):
        if not args.model:
            raise InvalidInputError(f"strategy {name!r} needs --model")
        models = _load_models(args.model, set(genders) | {"unspecified"})
        fd = None
        if name == "ours_fd":
            fd = FdConfig(similarity_threshold=args.fd_threshold,
                          max_attempts=args.max_attempts)
        return make_generative_strategy(models, fd=fd)
    raise InvalidInputError(f"unknown strategy {name!r}")


def cmd_asv_sim(args) -> int:
    enroll = _filter_gender(_read_input(args.enroll, args.format, args.sidecar), args.gender)
    trial = _filter_gender(_read_input(args.trial, args.format, args.sidecar), args.gender)
    strategies = args.strategy or ["ours"]
    enroll_strata = enroll.by_gender()
    trial_strata = trial.by_gender()
    shared = [g for g in GENDERS if g in enroll_strata and g in trial_strata]
    if not shared:
        raise InvalidInputError("enroll and trial share no gender stratum")
    rows = []
    fig_rows = []
    for strategy_name in strategies:
        strategy = _strategy_for(strategy_name, args, shared)
        for gender in shared:
            scores = linkage_scenario(
                enroll_strata[gender], trial_strata[gender], args.scenario,
                strategy=strategy,
                seed=derive_seed(args.seed, args.scenario, strategy_name, gender),
            )
            row = {
                "scenario": args.scenario,
                "strategy": strategy_name,
                "gender": gender,
                "eer": eer(scores),
                "cllr": cllr(scores),
                "cllr_min": cllr_min(scores),
                "n_genuine": scores.genuine.size,
                "n_impostor": scores.impostor.size,
            }
            fig_rows.append(row)
            rows.append(
                f"{row['scenario']},{row['strategy']},{row['gender']},"
                f"{_num(row['eer'])},{_num(row['cllr'])},"
                f"{_num(row['cllr_min'])},{row['n_genuine']},{row['n_impostor']}"
            )
            print(f"{args.scenario}/{strategy_name}/{gender}: "
                  f"eer={row['eer']:.4f} cllr_min={row['cllr_min']:.4f}")
    _csv_report(args.out, args.seed,
                "scenario,strategy,gender,eer,cllr,cllr_min,n_genuine,n_impostor", rows)
    if not args.no_figures:
        from .figures import save_metrics_figure
        save_metrics_figure(fig_rows, Path(args.out).with_suffix(".png"),
                            title=f"linkage metrics ({args.scenario})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def _add_io_options(parser, sidecar: bool = True):
    parser.add_argument("--format", choices=("csv", "kaldi_text"), default="csv",
                        help="input embedding file format (outputs are always csv)")
    if sidecar:
        parser.add_argument("--sidecar", default=None,
                            help="utt_id,spk_id,gender mapping for kaldi_text inputs")
    parser.add_argument("--gender", choices=GENDERS, default=None,
                        help="restrict processing to one gender stratum")
    parser.add_argument("--seed", type=int, default=0, help="master seed (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xvecanon",
        description="Speaker-embedding anonymization by sampling a PCA+GMM "
                    "population model, with distribution and linkage evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic labeled population")
    p.add_argument("--speakers", type=_positive_int, default=500)
    p.add_argument("--utts", type=_positive_int, default=4)
    p.add_argument("--dim", type=_positive_int, default=64)
    p.add_argument("--modes", type=_positive_int, default=5)
    p.add_argument("--between", type=float, default=10.0)
    p.add_argument("--within", type=float, default=1.0)
    p.add_argument("--male-fraction", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train per-gender anonymizer models")
    p.add_argument("--input", required=True)
    p.add_argument("--variance", type=_fraction, default=DEFAULT_RETAINED_VARIANCE,
                   help="retained variance target in (0, 1] (default 0.95)")
    p.add_argument("--components", type=_positive_int, default=DEFAULT_N_COMPONENTS,
                   help="GMM components (default 20)")
    p.add_argument("--restarts", type=_positive_int, default=1,
                   help="EM restarts keeping the best log-likelihood (default 1)")
    p.add_argument("--out", required=True,
                   help="model path; '{gender}' expands per stratum")
    _add_io_options(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("anonymize", help="replace embeddings with generated fakes")
    p.add_argument("--input", required=True)
    p.add_argument("--model", required=True,
                   help="model path template matching the train command")
    p.add_argument("--out", required=True)
    p.add_argument("--per-utterance", action="store_true",
                   help="draw one fake per utterance instead of per speaker")
    p.add_argument("--fd", action="store_true", help="enable forced dissimilarity")
    p.add_argument("--fd-threshold", type=float, default=DEFAULT_FD_THRESHOLD)
    p.add_argument("--max-attempts", type=_positive_int, default=DEFAULT_MAX_ATTEMPTS)
    _add_io_options(p)
    p.set_defaults(func=cmd_anonymize)

    p = sub.add_parser("baseline", help="pool-averaging fake generator")
    p.add_argument("--pool", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--n-far", type=_positive_int, default=200)
    p.add_argument("--n-avg", type=_positive_int, default=100)
    p.add_argument("--per-utterance", action="store_true")
    _add_io_options(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("eval-ks", help="KS statistic between two sets' similarity distributions")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ecdf-prefix", default=None,
                   help="write eCDF dumps <prefix>_<side>_<gender>.csv")
    p.add_argument("--no-figures", action="store_true")
    _add_io_options(p, sidecar=False)
    p.set_defaults(func=cmd_eval_ks)

    p = sub.add_parser("sweep", help="KS grid over variance targets and component counts")
    p.add_argument("--input", required=True)
    p.add_argument("--variances", type=_float_list, default=[0.90, 0.95, 0.99])
    p.add_argument("--components", type=_int_list, default=[1, 2, 5, 10, 20, 50])
    p.add_argument("--split", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.add_argument("--no-figures", action="store_true")
    _add_io_options(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("asv-sim", help="attacker-linkage metrics for anonymization scenarios")
    p.add_argument("--enroll", required=True)
    p.add_argument("--trial", required=True)
    p.add_argument("--scenario", choices=SCENARIOS, default="aa")
    p.add_argument("--strategy", action="append",
                   choices=("ours", "ours_fd", "baseline", "none"),
                   help="repeatable; default: ours")
    p.add_argument("--model", default=None, help="model template for ours/ours_fd")
    p.add_argument("--pool", default=None, help="pool file for the baseline strategy")
    p.add_argument("--n-far", type=_positive_int, default=200)
    p.add_argument("--n-avg", type=_positive_int, default=100)
    p.add_argument("--fd-threshold", type=float, default=DEFAULT_FD_THRESHOLD)
    p.add_argument("--max-attempts", type=_positive_int, default=DEFAULT_MAX_ATTEMPTS)
    p.add_argument("--out", required=True)
    p.add_argument("--no-figures", action="store_true")
    _add_io_options(p)
    p.set_defaults(func=cmd_asv_sim)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, matching our input-error code
        return int(exc.code or 0)
    try:
        return args.func(args)
    except RejectionExhaustedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except (ParseError, InvalidInputError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DegenerateDataError, XvecAnonError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
