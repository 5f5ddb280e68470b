"""``emoxgen`` command line.

Subcommands: prepare, synth, train, eval, matrix, analyze, fixture-check.
Exit status is 0 on success, 1 for usage or validation errors and 2 for
runtime failures. Every output directory receives a ``manifest.json`` holding
the resolved command that produced it; commands whose output is a single file
write ``<file>.manifest.json`` next to it.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

from . import __version__
from .corpus import (
    GO_EMOTIONS,
    DatasetSpec,
    LabeledExample,
    Splits,
    SynthConfig,
    clean_text,
    load_dataset,
    read_jsonl,
    split,
    synth_generate,
    write_benchmark,
    write_jsonl,
)
from .errors import ConfigError, DataError, EmoxgenError, SchemaError, ValidationError
from .evalkit import (
    ResultMatrix,
    analyze_matrix,
    check_marginal,
    fixture_path,
    marginal_aggregate,
    read_claims,
    read_marginal_claims,
    render_report,
    verify_fixture,
)
from .model import EncoderConfig
from .tokenizer import Vocab, train_vocab
from .trainer import TrainConfig, encode_hs, evaluate_f1, load_run, run_seeds

JOBS_ENV = "EMOXGEN_JOBS"


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# manifests
# ---------------------------------------------------------------------------


@dataclass
class ExperimentManifest:
    """Everything needed to re-run one subcommand."""

    command: str
    out: str
    datasets: dict = field(default_factory=dict)
    aux: str | None = None
    aux_scheme: str = "none"
    encoder: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    version: str = __version__

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"bad manifest: {exc}") from None

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def check_paths(self):
        paths = [p for p in self.datasets.values() if isinstance(p, str)]
        if self.aux:
            paths.append(self.aux)
        missing = [p for p in paths if not os.path.exists(p)]
        if missing:
            raise ConfigError(f"manifest references missing paths {missing}")

    def write(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_json())


def _manifest_path(out):
    return os.path.join(out, "manifest.json") if os.path.isdir(out) else out + ".manifest.json"


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _require_file(path, what):
    if not os.path.exists(path):
        raise ConfigError(f"{what} {path!r} does not exist")
    return path


def _default_jobs():
    raw = os.environ.get(JOBS_ENV)
    if not raw:
        return 1
    try:
        jobs = int(raw)
    except ValueError:
        raise ConfigError(f"{JOBS_ENV} must be an integer, got {raw!r}") from None
    if jobs < 1:
        raise ConfigError(f"{JOBS_ENV} must be >= 1")
    return jobs


def _read_json(path):
    with open(_require_file(path, "config"), encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc.msg})") from None


def _read_emotion_file(path):
    """Emotion corpus as JSONL (``emotions`` names), headerless TSV (text, label ids)
    or CSV with a ``text`` column plus one 0/1 column per emotion name."""
    ext = os.path.splitext(path)[1].lower()
    out = []
    if ext in (".jsonl", ".json"):
        rows = read_jsonl(path)
        pairs = [(ex.text, ex.emotions) for ex in rows]
    elif ext == ".tsv":
        pairs = []
        with open(path, encoding="utf-8", newline="") as fh:
            for lineno, rec in enumerate(csv.reader(fh, delimiter="\t"), 1):
                if len(rec) < 2:
                    raise SchemaError(f"{path}:{lineno}: expected text and label ids")
                try:
                    ids = [int(i) for i in rec[1].split(",") if i.strip()]
                    pairs.append((rec[0], frozenset(GO_EMOTIONS[i] for i in ids)))
                except (ValueError, IndexError):
                    raise SchemaError(f"{path}:{lineno}: bad label ids {rec[1]!r}") from None
    else:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            fields = set(reader.fieldnames or ())
            if "text" not in fields:
                raise SchemaError(f"{path}: no 'text' column")
            names = [e for e in GO_EMOTIONS if e in fields]
            if not names:
                raise SchemaError(f"{path}: no emotion columns")
            pairs = [(r["text"], frozenset(e for e in names if str(r[e]).strip() == "1")) for r in reader]
    for text, emos in pairs:
        text = clean_text(text)
        if text and emos:
            out.append(LabeledExample(text, None, emos))
    if not out:
        raise DataError(f"{path}: no usable emotion examples")
    return out


def _load_splits(path, split_seed, ratios):
    """A prepared directory (train/val/test.jsonl) or one JSONL file to split."""
    if os.path.isdir(path):
        parts = [os.path.join(path, f"{p}.jsonl") for p in ("train", "val", "test")]
        for p in parts:
            _require_file(p, "split file")
        return Splits(*(read_jsonl(p) for p in parts))
    rows = read_jsonl(_require_file(path, "training data"))
    if any(r.hs_label is None for r in rows):
        raise DataError(f"{path}: every training record needs a 'label'")
    return split(rows, ratios, split_seed)


def _load_test(path):
    if os.path.isdir(path):
        path = os.path.join(path, "test.jsonl")
    rows = read_jsonl(_require_file(path, "test data"))
    if any(r.hs_label is None for r in rows):
        raise DataError(f"{path}: every test record needs a 'label'")
    return rows


def _discover_tests(root):
    """``<name>.jsonl`` files or ``<name>/test.jsonl`` directories under ``root``."""
    if not os.path.isdir(root):
        raise ConfigError(f"tests directory {root!r} does not exist")
    found = {}
    for entry in sorted(os.listdir(root)):
        full = os.path.join(root, entry)
        if entry.endswith(".jsonl") and os.path.isfile(full):
            found[entry[: -len(".jsonl")]] = full
        elif os.path.isfile(os.path.join(full, "test.jsonl")):
            found[entry] = os.path.join(full, "test.jsonl")
    if not found:
        raise ConfigError(f"no test sets found under {root!r}")
    return found


def _discover_runs(root):
    if not os.path.isdir(root):
        raise ConfigError(f"runs directory {root!r} does not exist")
    runs = {e: os.path.join(root, e) for e in sorted(os.listdir(root)) if os.path.isfile(os.path.join(root, e, "result.json"))}
    if not runs:
        raise ConfigError(f"no run directories (with result.json) under {root!r}")
    return runs


def _write_text(path, text):
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def score_run(run_dir, test_path):
    """Mean binary F1 over the seeds of a saved run on one test file."""
    run = load_run(run_dir)
    enc = encode_hs(_load_test(test_path), run.vocab, run.config.max_len)
    scores = {seed: evaluate_f1(bundle, enc, run.config.eval_batch_size) for seed, bundle in run.bundles()}
    if not scores:
        raise DataError(f"run {run_dir!r} has no exported weights")
    return scores


def _cell_job(args):
    row, col, run_dir, test_path = args
    scores = score_run(run_dir, test_path)
    return row, col, sum(scores.values()) / len(scores)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_prepare(a):
    _require_file(a.input, "input")
    os.makedirs(a.out, exist_ok=True)
    if a.kind == "emotion":
        rows = _read_emotion_file(a.input)
        write_jsonl(os.path.join(a.out, "emotions.jsonl"), rows)
        spec = None
        print(f"wrote {len(rows)} emotion examples to {a.out}")
    else:
        spec_d = _read_json(a.spec) if a.spec else {}
        for key in ("name", "text_field", "label_field", "positive", "policy", "cap", "delimiter"):
            val = getattr(a, key)
            if val is not None:
                spec_d[key] = val
        if a.strip_hashtag_symbol_only:
            spec_d["strip_hashtag_symbol_only"] = True
        spec_d.setdefault("name", os.path.splitext(os.path.basename(a.input))[0])
        spec = DatasetSpec.from_dict(spec_d)
        data = load_dataset(a.input, spec, a.seed)
        parts = split(data, _float_list(a.ratios), a.seed)
        for name, rows in zip(("train", "val", "test"), parts):
            write_jsonl(os.path.join(a.out, f"{name}.jsonl"), rows)
        print(f"{spec.name}: {len(parts.train)} train / {len(parts.val)} val / {len(parts.test)} test")
    ExperimentManifest(
        "prepare",
        a.out,
        datasets={"input": a.input},
        options={"kind": a.kind, "seed": a.seed, "ratios": a.ratios, "spec": spec.to_dict() if spec else None},
    ).write(os.path.join(a.out, "manifest.json"))
    return 0


def cmd_synth(a):
    cfg = SynthConfig(
        domains=a.domains,
        n=a.n,
        overlap=a.overlap,
        explicit_rate=a.explicit_rate,
        emotion_corr=a.emotion_corr,
        seed=a.seed,
        n_emotion=a.n_emotion,
    )
    bench = synth_generate(cfg)
    paths = write_benchmark(bench, a.out)
    ExperimentManifest("synth", a.out, options=asdict(cfg)).write(os.path.join(a.out, "manifest.json"))
    print(f"wrote {len(paths) - 1} domains and an emotion corpus to {a.out}")
    return 0


def _train_configs(a):
    base = _read_json(a.config) if a.config else {}
    train_d = dict(base.get("train", {}))
    enc_d = dict(base.get("encoder", {}))
    overrides = {
        "epochs": a.epochs,
        "batch_size": a.batch_size,
        "lr": a.lr,
        "early_stop_patience": a.patience,
        "task_mix": a.task_mix,
        "max_len": a.max_len,
    }
    train_d.update({k: v for k, v in overrides.items() if v is not None})
    if a.seeds is not None:
        train_d["seeds"] = _int_list(a.seeds)
    if a.aux_scheme is not None:
        train_d["aux_scheme"] = a.aux_scheme
    if a.normalize_nll:
        train_d["normalize_nll"] = True
    for key in ("layers", "dim", "heads", "ffn_dim", "dropout"):
        val = getattr(a, key)
        if val is not None:
            enc_d[key] = val
    if "max_len" in train_d:
        enc_d.setdefault("max_len", train_d["max_len"])
    vocab_size = a.vocab_size or base.get("vocab_size", 8000)
    return TrainConfig.from_dict(train_d), enc_d, vocab_size, base


def cmd_train(a):
    config, enc_d, vocab_size, base = _train_configs(a)
    if config.aux_scheme != "none" and not a.aux:
        raise UsageError("--aux is required when --aux-scheme is not 'none'")
    splits = _load_splits(a.train, a.split_seed, _float_list(a.ratios))
    aux = _read_emotion_file(_require_file(a.aux, "aux corpus")) if a.aux and config.aux_scheme != "none" else []
    if a.vocab:
        vocab = Vocab.load(_require_file(a.vocab, "vocab"))
    else:
        vocab = train_vocab([e.text for e in splits.train] + [e.text for e in aux], vocab_size)
    enc_d["vocab_size"] = len(vocab)
    enc = EncoderConfig(**enc_d)
    tests = {}
    for item in a.test or []:
        name, sep, path = item.partition("=")
        if not sep:
            raise UsageError(f"--test expects NAME=PATH, got {item!r}")
        tests[name] = _load_test(path)
    result = run_seeds(splits, aux, config, enc, vocab, tests, a.out, a.init_weights)
    ExperimentManifest(
        "train",
        a.out,
        datasets={"train": a.train, **{f"test:{k}": v.partition("=")[2] for k, v in zip(tests, a.test or [])}},
        aux=a.aux,
        aux_scheme=config.aux_scheme,
        encoder=enc.to_dict(),
        train=config.to_dict(),
        options={
            "split_seed": a.split_seed,
            "ratios": a.ratios,
            "vocab": a.vocab,
            "vocab_size": vocab_size,
            "init_weights": a.init_weights,
        },
    ).write(os.path.join(a.out, "manifest.json"))
    print(f"mean val F1 {result.mean_val_f1:.4f}; mean test F1 " + json.dumps(result.mean_test_f1, sort_keys=True))
    return 0


def cmd_eval(a):
    scores = score_run(_require_file(a.run, "run directory"), a.test)
    mean = sum(scores.values()) / len(scores)
    os.makedirs(a.out, exist_ok=True)
    body = {"run": a.run, "test": a.test, "f1": {str(k): v for k, v in scores.items()}, "mean_f1": mean}
    _write_text(os.path.join(a.out, "eval.json"), json.dumps(body, indent=2, sort_keys=True) + "\n")
    ExperimentManifest("eval", a.out, datasets={"run": a.run, "test": a.test}).write(os.path.join(a.out, "manifest.json"))
    print(f"mean F1 {mean:.4f}")
    return 0


def build_matrix(runs, tests, jobs=1):
    """Score every run directory on every test file; rows and columns sorted by name."""
    jobs_list = [(r, c, runs[r], tests[c]) for r in sorted(runs) for c in sorted(tests)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            done = list(pool.map(_cell_job, jobs_list))
    else:
        done = [_cell_job(j) for j in jobs_list]
    cells = {(r, c): v for r, c, v in done}
    rows, cols = sorted(runs), sorted(tests)
    return ResultMatrix(rows, cols, [[cells[(r, c)] for c in cols] for r in rows])


def cmd_matrix(a):
    jobs = a.jobs if a.jobs is not None else _default_jobs()
    if jobs < 1:
        raise UsageError("--jobs must be >= 1")
    runs, tests = _discover_runs(a.runs), _discover_tests(a.tests)
    matrix = build_matrix(runs, tests, jobs)
    _write_text(a.out, matrix.to_csv_text())
    ExperimentManifest(
        "matrix", a.out, datasets={**{f"run:{k}": v for k, v in runs.items()}, **{f"test:{k}": v for k, v in tests.items()}}
    ).write(_manifest_path(a.out))
    print(f"wrote {len(matrix.rows)}x{len(matrix.cols)} matrix to {a.out}")
    return 0


def cmd_analyze(a):
    matrix = ResultMatrix.from_csv(_require_file(a.matrix, "matrix"))
    claims = read_claims(a.claims) if a.claims else ()
    report = analyze_matrix(matrix, a.baseline, a.tolerance, claims, title=f"Analysis of {os.path.basename(a.matrix)}")
    text = render_report(report, a.format)
    if a.out:
        _write_text(a.out, text)
        ExperimentManifest(
            "analyze",
            a.out,
            datasets={"matrix": a.matrix},
            options={"baseline": a.baseline, "tolerance": a.tolerance, "format": a.format, "claims": a.claims},
        ).write(_manifest_path(a.out))
    else:
        sys.stdout.write(text)
    return 0


def cmd_fixture_check(a):
    names = a.fixture or ["table3"]
    reports = []
    matrices = {}
    for name in names:
        path = _require_file(fixture_path(name), "fixture")
        stem = os.path.splitext(os.path.basename(path))[0]
        matrix = ResultMatrix.from_csv(path)
        matrices[stem] = matrix
        claims_path = a.claims or fixture_path(f"reported_{stem}")
        claims = read_claims(claims_path) if os.path.exists(claims_path) else ()
        reports.append(verify_fixture(matrix, a.tolerance, claims, title=f"Fixture check: {stem}"))
    if len(matrices) > 1:
        try:
            marginal = {k: marginal_aggregate(matrices, k) for k in ("emotion-corpus", "base-model")}
        except EmoxgenError as exc:
            print(f"marginal aggregation skipped: {exc}", file=sys.stderr)
        else:
            reports[-1].marginal = marginal
            mpath = fixture_path("reported_marginal")
            if os.path.exists(mpath):
                reports[-1].marginal_claims = check_marginal(marginal, read_marginal_claims(mpath))
    text = "\n".join(render_report(r, a.format) for r in reports)
    if a.out:
        _write_text(a.out, text)
        ExperimentManifest(
            "fixture-check",
            a.out,
            datasets={n: fixture_path(n) for n in names},
            options={"tolerance": a.tolerance, "format": a.format, "claims": a.claims},
        ).write(_manifest_path(a.out))
    else:
        sys.stdout.write(text)
    flagged = sorted({d.row for r in reports for d in r.discrepancies})
    print(f"discrepant CD rows: {', '.join(flagged) if flagged else 'none'}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser():
    p = _Parser(prog="emoxgen", description="Emotion-enriched multitask HS training and cross-domain evaluation.")
    p.add_argument("--version", action="version", version=f"emoxgen {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("prepare", help="clean, balance and split one dataset file")
    s.add_argument("--input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--kind", choices=("hs", "emotion"), default="hs")
    s.add_argument("--spec", help="DatasetSpec JSON; flags below override it")
    s.add_argument("--name")
    s.add_argument("--text-field", dest="text_field")
    s.add_argument("--label-field", dest="label_field")
    s.add_argument("--positive", help='label predicate, e.g. "== 1" or "in hateful,abusive"')
    s.add_argument("--policy", choices=("cap", "downsample"))
    s.add_argument("--cap", type=int)
    s.add_argument("--delimiter")
    s.add_argument("--strip-hashtag-symbol-only", action="store_true")
    s.add_argument("--ratios", default="0.8,0.1,0.1")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_prepare)

    s = sub.add_parser("synth", help="generate the synthetic multi-domain benchmark")
    s.add_argument("--out", required=True)
    s.add_argument("--domains", type=int, default=3)
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--overlap", type=float, default=0.5)
    s.add_argument("--explicit-rate", type=float, default=0.5)
    s.add_argument("--emotion-corr", type=float, default=0.8)
    s.add_argument("--n-emotion", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("train", help="train an HS model, optionally with an emotion aux task")
    s.add_argument("--train", required=True, help="prepared directory or a JSONL file to split")
    s.add_argument("--out", required=True)
    s.add_argument("--aux")
    s.add_argument("--aux-scheme", choices=("none", "go", "ekman"))
    s.add_argument("--config", help="JSON with optional 'train', 'encoder' and 'vocab_size' keys")
    s.add_argument("--seeds")
    s.add_argument("--epochs", type=int)
    s.add_argument("--batch-size", type=int, dest="batch_size")
    s.add_argument("--lr", type=float)
    s.add_argument("--patience", type=int)
    s.add_argument("--task-mix", choices=("roundrobin", "proportional"), dest="task_mix")
    s.add_argument("--max-len", type=int, dest="max_len")
    s.add_argument("--normalize-nll", action="store_true")
    s.add_argument("--layers", type=int)
    s.add_argument("--dim", type=int)
    s.add_argument("--heads", type=int)
    s.add_argument("--ffn-dim", type=int, dest="ffn_dim")
    s.add_argument("--dropout", type=float)
    s.add_argument("--vocab", help="existing vocab.txt; otherwise trained on train + aux texts")
    s.add_argument("--vocab-size", type=int, dest="vocab_size")
    s.add_argument("--init-weights", dest="init_weights")
    s.add_argument("--test", action="append", metavar="NAME=PATH", help="extra test set (repeatable)")
    s.add_argument("--split-seed", type=int, default=0, dest="split_seed")
    s.add_argument("--ratios", default="0.8,0.1,0.1")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", help="score a saved run on a test set")
    s.add_argument("--run", required=True)
    s.add_argument("--test", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("matrix", help="train-on-one / test-on-all F1 matrix from saved runs")
    s.add_argument("--runs", required=True, help="directory of run directories; each name is a row label")
    s.add_argument("--tests", required=True, help="directory of <name>.jsonl or <name>/test.jsonl")
    s.add_argument("--out", required=True)
    s.add_argument("--jobs", type=int, help=f"parallel cell jobs (default ${JOBS_ENV} or 1)")
    s.set_defaults(func=cmd_matrix)

    s = sub.add_parser("analyze", help="CD averages, declines and uplifts of a matrix")
    s.add_argument("--matrix", required=True)
    s.add_argument("--baseline", help="row compared against every other row")
    s.add_argument("--claims", help="reported percentages to check")
    s.add_argument("--tolerance", type=float, default=0.001)
    s.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    s.add_argument("--out")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("fixture-check", help="recompute the shipped result tables")
    s.add_argument("--fixture", action="append", help="path or packaged name (table3, table4); repeatable")
    s.add_argument("--claims")
    s.add_argument("--tolerance", type=float, default=0.001)
    s.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    s.add_argument("--out")
    s.set_defaults(func=cmd_fixture_check)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        # --help and --version
        return exc.code if isinstance(exc.code, int) else 0
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
