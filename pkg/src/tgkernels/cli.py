"""Command-line pipeline: simulate -> transform -> gram/sample -> classify.

Every subcommand writes its artifacts atomically and appends a stage record
(command, parameters, seed, input/output digests) to ``manifest.json`` in
the output directory.  Commands that read a directory carrying a manifest
verify the recorded digests first and refuse to run on tampered inputs.
Re-running any stage with the same seed reproduces byte-identical files.

All randomness derives from the user-supplied ``--seed`` through the
spawn-key scheme in :mod:`tgkernels.seeding`.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Iterable, Sequence

from . import dissemination, evaluation, kernels, sampling, seeding, temporal, transform
from .errors import ManifestError, ParseError, TGKError

MANIFEST_NAME = "manifest.json"
GRAPH_SUFFIX = ".tg"
STATIC_SUFFIX = ".sg"
GRAM_SUFFIX = ".gram"


# ---------------------------------------------------------------------------
# Manifest and atomic file handling
# ---------------------------------------------------------------------------


def _write_atomic(path: Path, data: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + f".tmp-{os.getpid()}")
    tmp.write_text(data, encoding="utf-8", newline="\n")
    os.replace(tmp, path)


def _digest_path(path: Path) -> str:
    return seeding.file_digest(path.read_bytes())


def _load_manifest(directory: Path) -> dict:
    mf = directory / MANIFEST_NAME
    if not mf.exists():
        return {"stages": []}
    try:
        return json.loads(mf.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"unreadable manifest {mf}: {exc}") from exc


def _append_stage(
    directory: Path,
    command: str,
    params: dict,
    seed: int | None,
    inputs: dict[str, str],
    outputs: Iterable[Path],
) -> None:
    manifest = _load_manifest(directory)
    record = {
        "command": command,
        "params": params,
        "seed": seed,
        "inputs": inputs,
        "outputs": {
            str(p.relative_to(directory)): _digest_path(p) for p in sorted(outputs)
        },
    }
    manifest["stages"].append(record)
    _write_atomic(directory / MANIFEST_NAME, json.dumps(manifest, indent=2, sort_keys=True))


def verify_manifest(directory: Path) -> dict[str, str]:
    """Check recorded output digests of a directory; return them.

    Raises ManifestError when a recorded file is missing or its content
    changed since it was produced.
    """
    manifest = _load_manifest(directory)
    digests: dict[str, str] = {}
    for stage in manifest["stages"]:
        digests.update(stage.get("outputs", {}))
    for rel, expected in sorted(digests.items()):
        path = directory / rel
        if not path.exists():
            raise ManifestError(f"{directory}: file {rel} recorded in manifest is missing")
        actual = _digest_path(path)
        if actual != expected:
            raise ManifestError(
                f"{directory}: digest mismatch for {rel} "
                f"(manifest {expected[:12]}..., on disk {actual[:12]}...)"
            )
    return digests


def _input_digests(paths: Sequence[Path], base: Path | None = None) -> dict[str, str]:
    out = {}
    for p in paths:
        key = str(p if base is None else p.relative_to(base))
        out[key] = _digest_path(p)
    return out


# ---------------------------------------------------------------------------
# Dataset directory layout
# ---------------------------------------------------------------------------


def write_dataset(directory: Path, dataset: dissemination.Dataset) -> list[Path]:
    """graph_NNNN.tg files + labels.txt + meta.txt."""
    written = []
    labels_lines = []
    for i, (g, cls) in enumerate(dataset.items):
        stem = f"graph_{i:04d}"
        path = directory / f"{stem}{GRAPH_SUFFIX}"
        _write_atomic(path, temporal.serialize(g))
        written.append(path)
        labels_lines.append(f"{stem} {cls:+d}")
    labels_path = directory / "labels.txt"
    _write_atomic(labels_path, "\n".join(labels_lines) + "\n")
    written.append(labels_path)
    meta_lines = [f"task = {dataset.task}"]
    for key in sorted(dataset.params):
        meta_lines.append(f"{key} = {dataset.params[key]}")
    meta_path = directory / "meta.txt"
    _write_atomic(meta_path, "\n".join(meta_lines) + "\n")
    written.append(meta_path)
    return written


def read_graph_files(directory: Path) -> list[tuple[str, temporal.TemporalGraph]]:
    files = sorted(directory.glob(f"*{GRAPH_SUFFIX}"))
    if not files:
        raise ParseError(f"no {GRAPH_SUFFIX} files in {directory}")
    return [(p.stem, temporal.parse(p.read_text(encoding="utf-8"))) for p in files]


def read_labels(path: Path) -> dict[str, int]:
    labels = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 2:
            raise ParseError(f"labels line must be `<id> <class>`", lineno)
        labels[fields[0]] = int(fields[1])
    return labels


# ---------------------------------------------------------------------------
# Subcommand implementations (shared by CLI and pipeline)
# ---------------------------------------------------------------------------


def _load_base_graphs(args) -> tuple[list[temporal.TemporalGraph], dict]:
    if args.input:
        src = Path(args.input)
        if src.is_dir():
            verify_manifest(src)
            graphs = [g for _, g in read_graph_files(src)]
            params = {"input": str(src)}
        else:
            graphs = [temporal.parse(src.read_text(encoding="utf-8"))]
            params = {"input": str(src)}
    else:
        rng_info = {
            "graphs": args.graphs,
            "vertices": args.vertices,
            "edges": args.edges,
            "tmax": args.tmax,
        }
        graphs = [
            dissemination.random_temporal_graph(
                args.vertices, args.edges, args.tmax, seeding.derive_rng(args.seed, 0, i)
            )
            for i in range(args.graphs)
        ]
        params = {"generator": rng_info}
    if args.cap:
        pooled = []
        for g in graphs:
            pooled.extend(dissemination.extract_bfs_subgraphs(g, args.cap))
        graphs = pooled
        params["cap"] = args.cap
    return graphs, params


def cmd_simulate(args) -> int:
    graphs, source_params = _load_base_graphs(args)
    if args.task == 1:
        cfg = dissemination.SIConfig(
            seed_count=args.s, p=args.p, target_fraction=args.big_i, rng_seed=args.seed
        )
        dataset = dissemination.make_task1(graphs, cfg)
    else:
        dataset = dissemination.make_task2(
            graphs,
            p_low=args.p,
            p_high=args.p2,
            seed_count=args.s,
            target_fraction=args.big_i,
            rng_seed=args.seed,
        )
    out = Path(args.out)
    written = write_dataset(out, dataset)
    inputs = {}
    if args.input:
        src = Path(args.input)
        files = sorted(src.glob(f"*{GRAPH_SUFFIX}")) if src.is_dir() else [src]
        inputs = _input_digests(files)
    _append_stage(
        out,
        "simulate",
        {**source_params, "task": args.task, "s": args.s, "p": args.p,
         "p2": args.p2 if args.task == 2 else None, "I": args.big_i},
        args.seed,
        inputs,
        written,
    )
    print(f"simulate: wrote {len(dataset.items)} graphs to {out}")
    return 0


def cmd_transform(args) -> int:
    src = Path(args.input)
    out = Path(args.out)
    if src.is_dir():
        verify_manifest(src)
        named = read_graph_files(src)
        written = []
        for stem, g in named:
            sg = transform.apply_transform(g, args.method, annotate_waiting=args.waiting)
            path = out / f"{stem}{STATIC_SUFFIX}"
            _write_atomic(path, transform.serialize_static(sg))
            written.append(path)
        labels_src = src / "labels.txt"
        if labels_src.exists():
            dst = out / "labels.txt"
            _write_atomic(dst, labels_src.read_text(encoding="utf-8"))
            written.append(dst)
        _append_stage(
            out,
            "transform",
            {"method": args.method, "waiting": args.waiting, "input": str(src)},
            None,
            _input_digests(sorted(src.glob(f"*{GRAPH_SUFFIX}"))),
            written,
        )
        print(f"transform: {args.method} applied to {len(named)} graphs -> {out}")
    else:
        g = temporal.parse(src.read_text(encoding="utf-8"))
        sg = transform.apply_transform(g, args.method, annotate_waiting=args.waiting)
        _write_atomic(out, transform.serialize_static(sg))
        print(f"transform: {args.method} applied to {src} -> {out}")
    return 0


def _read_static_dir(directory: Path) -> tuple[list[str], list[transform.StaticLabeledGraph]]:
    verify_manifest(directory)
    files = sorted(directory.glob(f"*{STATIC_SUFFIX}"))
    if not files:
        raise ParseError(f"no {STATIC_SUFFIX} files in {directory}")
    stems = [p.stem for p in files]
    graphs = [transform.parse_static(p.read_text(encoding="utf-8")) for p in files]
    return stems, graphs


def cmd_gram(args) -> int:
    src = Path(args.input)
    stems, graphs = _read_static_dir(src)
    if args.kernel == "rw":
        feats = [kernels.rw_feature_map(g, args.param) for g in graphs]
    else:
        feats = [kernels.wl_feature_map(g, args.param) for g in graphs]
    matrix = kernels.gram(feats, ids=stems, normalized=args.normalize)
    out = Path(args.out)
    _write_atomic(out, kernels.write_gram(matrix))
    _append_stage(
        out.parent,
        "gram",
        {"kernel": args.kernel, "param": args.param, "normalize": args.normalize,
         "input": str(src)},
        None,
        _input_digests(sorted(src.glob(f"*{STATIC_SUFFIX}"))),
        [out],
    )
    print(f"gram: {args.kernel}(param={args.param}) over {len(graphs)} graphs -> {out}")
    return 0


def cmd_sample(args) -> int:
    src = Path(args.input)
    verify_manifest(src)
    named = read_graph_files(src)
    feats = []
    for i, (stem, g) in enumerate(named):
        graph_seed = int(seeding.derive_rng(args.seed, 4, i).integers(0, 2**63 - 1))
        cfg = sampling.SamplerConfig(
            k=args.k,
            samples=args.samples,
            rejection=not args.no_reject,
            max_restarts=args.max_restarts,
            seed=graph_seed,
        )
        feats.append(sampling.approx_feature_map(g, cfg))
    matrix = kernels.gram(feats, ids=[stem for stem, _ in named])
    out = Path(args.out)
    _write_atomic(out, kernels.write_gram(matrix))
    _append_stage(
        out.parent,
        "sample",
        {"k": args.k, "samples": args.samples, "rejection": not args.no_reject,
         "input": str(src)},
        args.seed,
        _input_digests(sorted(src.glob(f"*{GRAPH_SUFFIX}"))),
        [out],
    )
    print(f"sample: k={args.k}, S={args.samples} over {len(named)} graphs -> {out}")
    return 0


def _group_gram_files(directory: Path) -> dict[str, dict[int, Path]]:
    """Group <method>.<param>.gram files by method."""
    groups: dict[str, dict[int, Path]] = {}
    for path in sorted(directory.glob(f"*{GRAM_SUFFIX}")):
        stem = path.name[: -len(GRAM_SUFFIX)]
        method, _, param = stem.rpartition(".")
        if not method or not param.isdigit():
            raise ParseError(
                f"gram file {path.name} does not follow <method>.<param>{GRAM_SUFFIX}"
            )
        groups.setdefault(method, {})[int(param)] = path
    if not groups:
        raise ParseError(f"no {GRAM_SUFFIX} files in {directory}")
    return groups


def cmd_classify(args) -> int:
    gram_dir = Path(args.grams)
    verify_manifest(gram_dir)
    groups = _group_gram_files(gram_dir)
    labels_by_id = read_labels(Path(args.labels))
    results = {}
    lines = []
    for method, files in sorted(groups.items()):
        family = {p: kernels.read_gram(path.read_text(encoding="utf-8")) for p, path in files.items()}
        ids = family[min(family)].ids
        try:
            y = [labels_by_id[i] for i in ids]
        except KeyError as exc:
            raise ParseError(f"no class label for graph id {exc.args[0]!r}") from exc
        protocol = evaluation.CvProtocol(
            outer_folds=args.folds,
            repetitions=args.reps,
            inner_folds=args.folds,
            param_grid=tuple(sorted(family)),
            seed=args.seed,
        )
        res = evaluation.cross_validate(family, y, protocol)
        results[method] = {
            "mean": res.mean,
            "std": res.std,
            "param_grid": sorted(family),
            "repetition_accuracies": list(res.repetition_accuracies),
        }
        lines.append(f"{method}: {100 * res.mean:.2f} +- {100 * res.std:.2f}")
    print("\n".join(lines))
    if args.out:
        out = Path(args.out)
        _write_atomic(out, json.dumps(results, indent=2, sort_keys=True))
        _append_stage(
            out.parent,
            "classify",
            {"grams": str(gram_dir), "labels": str(args.labels),
             "folds": args.folds, "reps": args.reps},
            args.seed,
            _input_digests(sorted(gram_dir.glob(f"*{GRAM_SUFFIX}"))),
            [out],
        )
    return 0


# ---------------------------------------------------------------------------
# Declarative pipeline
# ---------------------------------------------------------------------------

_PIPELINE_DEFAULTS = {
    "task": "1",
    "graphs": "100",
    "vertices": "50",
    "edges": "250",
    "tmax": "30",
    "input": "",
    "cap": "",
    "s": "1",
    "p": "",
    "p2": "0.8",
    "I": "0.5",
    "seed": "0",
    "methods": "dl:wl,se:wl,base:wl",
    "params": "0,1,2,3,4,5",
    "folds": "10",
    "reps": "10",
    "reset_fraction": "",
}


def parse_experiment_file(text: str) -> dict[str, str]:
    """Flat `key = value` lines; '#' starts a comment."""
    config = dict(_PIPELINE_DEFAULTS)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError("expected `key = value`", lineno)
        key = key.strip()
        if key not in _PIPELINE_DEFAULTS:
            raise ParseError(f"unknown experiment key {key!r}", lineno)
        config[key] = value.strip()
    return config


def _pipeline_dataset(config: dict[str, str], out: Path) -> tuple[dissemination.Dataset, Path]:
    seed = int(config["seed"])
    task = int(config["task"])
    if config["input"]:
        graphs = [g for _, g in read_graph_files(Path(config["input"]))]
    else:
        graphs = [
            dissemination.random_temporal_graph(
                int(config["vertices"]),
                int(config["edges"]),
                int(config["tmax"]),
                seeding.derive_rng(seed, 0, i),
            )
            for i in range(int(config["graphs"]))
        ]
    if config["cap"]:
        graphs = [
            sub for g in graphs for sub in dissemination.extract_bfs_subgraphs(g, int(config["cap"]))
        ]
    p_default = "0.5" if task == 1 else "0.2"
    p = float(config["p"] or p_default)
    if task == 1:
        dataset = dissemination.make_task1(
            graphs,
            dissemination.SIConfig(
                seed_count=int(config["s"]),
                p=p,
                target_fraction=float(config["I"]),
                rng_seed=seed,
            ),
        )
    else:
        dataset = dissemination.make_task2(
            graphs,
            p_low=p,
            p_high=float(config["p2"]),
            seed_count=int(config["s"]),
            target_fraction=float(config["I"]),
            rng_seed=seed,
        )
    if config["reset_fraction"]:
        dataset = dissemination.reset_infections(
            dataset, float(config["reset_fraction"]), seeding.derive_rng(seed, 3)
        )
    dataset_dir = out / "dataset"
    written = write_dataset(dataset_dir, dataset)
    _append_stage(dataset_dir, "simulate", {k: config[k] for k in sorted(config)}, seed, {}, written)
    return dataset, dataset_dir


def run_pipeline(config: dict[str, str], out: Path) -> dict:
    """Execute simulate -> transform -> gram -> classify per the config."""
    seed = int(config["seed"])
    params = [int(p) for p in config["params"].split(",") if p.strip() != ""]
    methods = [m.strip() for m in config["methods"].split(",") if m.strip()]
    dataset, dataset_dir = _pipeline_dataset(config, out)
    labels = list(dataset.classes)

    results = {}
    gram_dir = out / "grams"
    for spec_name in methods:
        tr_name, _, kern = spec_name.partition(":")
        if kern not in ("rw", "wl") or tr_name not in transform.TRANSFORMS:
            raise ParseError(f"bad method entry {spec_name!r} (expected transform:kernel)")
        statics = [transform.apply_transform(g, tr_name) for g in dataset.graphs]
        family = {}
        if kern == "wl":
            per_graph = [kernels.wl_feature_maps_upto(g, max(params)) for g in statics]
            for p in params:
                feats = [fv[p] for fv in per_graph]
                family[p] = kernels.gram(feats, normalized=True)
        else:
            for p in params:
                feats = [kernels.rw_feature_map(g, p) for g in statics]
                family[p] = kernels.gram(feats, normalized=True)
        written = []
        for p, matrix in family.items():
            path = gram_dir / f"{tr_name}-{kern}.{p}{GRAM_SUFFIX}"
            _write_atomic(path, kernels.write_gram(matrix))
            written.append(path)
        _append_stage(
            gram_dir,
            "gram",
            {"method": spec_name, "params": params, "normalize": True},
            None,
            {},
            written,
        )
        protocol = evaluation.CvProtocol(
            outer_folds=int(config["folds"]),
            repetitions=int(config["reps"]),
            inner_folds=int(config["folds"]),
            param_grid=tuple(params),
            seed=seed,
        )
        res = evaluation.cross_validate(family, labels, protocol)
        results[spec_name] = {
            "mean": res.mean,
            "std": res.std,
            "param_grid": params,
            "repetition_accuracies": list(res.repetition_accuracies),
        }

    lines = [
        f"{name}: {100 * r['mean']:.2f} +- {100 * r['std']:.2f}" for name, r in results.items()
    ]
    _write_atomic(out / "results.txt", "\n".join(lines) + "\n")
    _write_atomic(out / "results.json", json.dumps(results, indent=2, sort_keys=True))
    _append_stage(
        out,
        "pipeline",
        {k: config[k] for k in sorted(config)},
        seed,
        {},
        [out / "results.txt", out / "results.json"],
    )
    print("\n".join(lines))
    return results


def cmd_pipeline(args) -> int:
    config = parse_experiment_file(Path(args.config).read_text(encoding="utf-8"))
    run_pipeline(config, Path(args.out))
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tgk",
        description="Temporal graph kernels for classifying dissemination processes",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=1,
        help="global worker cap (stages currently run single-threaded)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a labeled SI dataset")
    p.add_argument("--task", type=int, choices=(1, 2), required=True)
    p.add_argument("--input", help="directory of .tg files (default: generate)")
    p.add_argument("--graphs", type=int, default=100, help="generated base graphs")
    p.add_argument("--vertices", type=int, default=50)
    p.add_argument("--edges", type=int, default=250)
    p.add_argument("--tmax", type=int, default=30)
    p.add_argument("--cap", type=int, help="BFS extraction vertex budget")
    p.add_argument("--s", type=int, default=1, help="number of seed vertices")
    p.add_argument("--p", type=float, default=0.5, help="infection probability (task 2: low p)")
    p.add_argument("--p2", type=float, default=0.8, help="high infection probability (task 2)")
    p.add_argument("--I", dest="big_i", type=float, default=0.5, help="target infected fraction")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("transform", help="map temporal graphs to static graphs")
    p.add_argument("--method", choices=sorted(transform.TRANSFORMS), required=True)
    p.add_argument("--waiting", action="store_true", help="annotate waiting times (dl only)")
    p.add_argument("--input", required=True, help=".tg file or dataset directory")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("gram", help="compute a (normalized) Gram matrix")
    p.add_argument("--kernel", choices=("rw", "wl"), required=True)
    p.add_argument("--param", type=int, required=True, help="walk length k or WL depth h")
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--input", required=True, help="directory of .sg files")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gram)

    p = sub.add_parser("sample", help="approximate temporal walk kernel by sampling")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--no-reject", action="store_true")
    p.add_argument("--max-restarts", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--input", required=True, help="directory of .tg files")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("classify", help="cross-validated SVM accuracy per method")
    p.add_argument("--grams", required=True, help="directory of <method>.<param>.gram files")
    p.add_argument("--labels", required=True)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="machine-readable results file (JSON)")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("pipeline", help="run a declarative experiment file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except TGKError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
