"""Command-line pipeline: one subcommand per stage, one JSON config.

Precedence for every parameter: command-line flag over config-file value
over documented default. The config file comes from --config or the
LSEP_CONFIG environment variable and holds one JSON object with optional
per-stage sections (frontend, detector, augment, separation, mine,
classify, explain) plus a top-level seed.

Every invocation writes a run record (subcommand, effective parameters,
seed, version) next to its primary output, so any artifact is replayable
from the record alone. Exit codes: 0 success, 1 runtime error, 2 usage.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .augment import (
    SubdialogueConfig,
    balance_classes,
    gen_entangled_demo,
    load_layer_corpus,
    sample_subdialogues,
)
from .classify import (
    SvmModel,
    f1_score,
    fuse,
    mean_pool,
    predict,
    random_search,
    reduce_dim,
    train_svm,
)
from .dsp import FrontendConfig, band_energies, decode_wav
from .errors import LsepError, UsageError
from .explain import compare_bigram_durations, sentence_importance
from .landmarks import (
    DetectorConfig,
    detect_landmarks,
    read_landmarks_jsonl,
    to_bigrams,
    write_bigrams_jsonl,
    write_landmarks_jsonl,
)
from .manifest import load_manifest
from .mine import MineConfig, estimate_mi
from .seeding import derive_seed
from .separation import (
    TrainConfig,
    corpus_from_manifest,
    extend_dense_vectors,
    extract_dense_vectors,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .tensorio import read_tensor, write_tensor

@dataclasses.dataclass
class RunConfig:
    subcommand: str
    params: dict
    seed: int


def _load_config_file(path_flag: str | None) -> dict:
    path = path_flag or os.environ.get("LSEP_CONFIG")
    if path is None:
        return {}
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"config file {path} not found")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return doc


def _pick(args: argparse.Namespace, config: dict, section: str | None, key: str, default):
    """Flag > config-file section > default."""
    flag = getattr(args, key.replace("-", "_"), None)
    if flag is not None:
        return flag
    block = config.get(section, {}) if section else config
    if isinstance(block, dict) and key in block:
        return block[key]
    return default


def _require_path(args: argparse.Namespace, config: dict, section: str | None, key: str) -> str:
    value = _pick(args, config, section, key, None)
    if value is None:
        raise UsageError(f"missing required --{key.replace('_', '-')}")
    return value


def _dataclass_from(config: dict, section: str, cls, overrides: dict):
    fields = {f.name for f in dataclasses.fields(cls)}
    block = {k: v for k, v in config.get(section, {}).items() if k in fields}
    block.update({k: v for k, v in overrides.items() if v is not None})
    if section == "frontend" and "band_edges" in block:
        block["band_edges"] = tuple(tuple(edge) for edge in block["band_edges"])
    return cls(**block)


def _write_run_record(primary_out: str | Path, rc: RunConfig) -> None:
    out = Path(primary_out)
    record_path = out / "run_record.json" if out.is_dir() else out.with_name(out.name + ".run.json")
    record = {
        "subcommand": rc.subcommand,
        "version": __version__,
        "seed": rc.seed,
        "params": rc.params,
    }
    record_path.write_text(json.dumps(record, sort_keys=True, indent=1))


def _read_labels(path: str) -> np.ndarray:
    labels = json.loads(Path(path).read_text())
    return np.asarray(labels, dtype=np.int64)


def _load_corpus(path: str):
    """Synthetic corpus directory (meta.json) or manifest JSON document."""
    p = Path(path)
    if p.is_dir() and (p / "meta.json").is_file():
        return load_layer_corpus(p), "synthetic"
    if p.is_file():
        return corpus_from_manifest(load_manifest(p)), "manifest"
    raise UsageError(f"--corpus {path} is neither a corpus directory nor a manifest file")


# --------------------------------------------------------------------------
# subcommand handlers; each returns the effective params dict it ran with


def _cmd_landmarks(args, config, seed) -> dict:
    wav = args.in_ if args.in_ is not None else config.get("in")
    if wav is None:
        raise UsageError("missing required --in")
    out = _require_path(args, config, None, "out")
    frontend = _dataclass_from(config, "frontend", FrontendConfig, {})
    detector = _dataclass_from(config, "detector", DetectorConfig, {})
    bigram_mode = _pick(args, config, "detector", "bigram_mode", "non-overlapping")

    audio = decode_wav(wav)
    seq = detect_landmarks(audio, frontend, detector, utterance_id=Path(wav).stem)
    write_landmarks_jsonl(seq, out)
    params = {
        "in": str(wav),
        "out": str(out),
        "frontend": dataclasses.asdict(frontend),
        "detector": dataclasses.asdict(detector),
        "n_landmarks": len(seq),
    }
    if args.bigrams:
        write_bigrams_jsonl(to_bigrams(seq, bigram_mode), args.bigrams)
        params["bigrams"] = args.bigrams
        params["bigram_mode"] = bigram_mode
    if args.band_energies:
        track = band_energies(audio, frontend)
        write_tensor(track.frames.astype(np.float32), args.band_energies)
        params["band_energies"] = args.band_energies
    _write_run_record(out, RunConfig("landmarks", params, seed))
    return params


def _cmd_augment(args, config, seed) -> dict:
    manifest_path = _require_path(args, config, None, "manifest")
    out = _require_path(args, config, None, "out")
    session_set = load_manifest(manifest_path)
    max_len = _pick(args, config, "augment", "max_len", None)
    cfg = SubdialogueConfig(
        m=int(_pick(args, config, "augment", "m", 1000)),
        min_len=int(_pick(args, config, "augment", "min_len", 5)),
        max_len=int(max_len) if max_len is not None else None,
        seed=seed,
    )
    balance = bool(_pick(args, config, "augment", "balance", False))
    params = {
        "manifest": str(manifest_path),
        "out": str(out),
        "m": cfg.m,
        "min_len": cfg.min_len,
        "max_len": cfg.max_len,
        "balance": balance,
    }
    quotas = None
    if balance:
        counts: dict[int, int] = {0: 0, 1: 0}
        for s in session_set.sessions:
            counts[s.label] += 1
        default_total = cfg.m * max(counts.values())
        per_class_total = int(_pick(args, config, "augment", "per_class_total", default_total))
        quotas = balance_classes(session_set, per_class_total)
        params["per_class_total"] = per_class_total
    with open(out, "w") as fh:
        for session in session_set.sessions:
            m = quotas[session.session_id] if quotas else cfg.m
            ranges = sample_subdialogues(session, dataclasses.replace(cfg, m=m))
            for s, e in ranges:
                fh.write(json.dumps({"session": session.session_id, "s": s, "e": e}) + "\n")
    _write_run_record(out, RunConfig("augment", params, seed))
    return params


def _train_config(args, config, seed) -> TrainConfig:
    return TrainConfig(
        objective=_pick(args, config, "separation", "objective", "speech-preserve"),
        temperature=float(_pick(args, config, "separation", "temperature", 0.1)),
        learning_rate=float(_pick(args, config, "separation", "learning_rate", 1e-4)),
        batch_size=int(_pick(args, config, "separation", "batch_size", 64)),
        epochs=int(_pick(args, config, "separation", "epochs", 1500)),
        seed=seed,
        dense_dim=int(_pick(args, config, "separation", "dense_dim", 300)),
        leaky_slope=float(_pick(args, config, "separation", "leaky_slope", 0.01)),
    )


def _cmd_train_sep(args, config, seed) -> dict:
    corpus_path = _require_path(args, config, None, "corpus")
    out_dir = Path(_require_path(args, config, None, "out_dir"))
    corpus, kind = _load_corpus(corpus_path)
    cfg = _train_config(args, config, seed)
    if args.extend_from:
        base, _ = load_checkpoint(args.extend_from)
        model, history = extend_dense_vectors(base, corpus, cfg)
    else:
        model, history = train(corpus, cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_checkpoint(model, cfg, out_dir)
    with open(out_dir / "loss_history.csv", "w") as fh:
        fh.write("epoch,mean_loss\n")
        for epoch, value in enumerate(history):
            fh.write(f"{epoch},{value!r}\n")
    params = {"corpus": str(corpus_path), "corpus_kind": kind, "out_dir": str(out_dir)}
    params.update(dataclasses.asdict(cfg))
    if args.extend_from:
        params["extend_from"] = args.extend_from
    _write_run_record(out_dir, RunConfig("train-sep", params, seed))
    return params


def _cmd_extract(args, config, seed) -> dict:
    model_dir = _require_path(args, config, None, "model")
    out = _require_path(args, config, None, "out")
    model, descriptor = load_checkpoint(model_dir)
    ids = json.loads(Path(args.ids).read_text()) if args.ids else list(model.sentence_ids)
    vectors, alpha = extract_dense_vectors(model, ids)
    params = {"model": str(model_dir), "out": str(out), "n_sentences": len(ids)}
    if args.pool_manifest:
        session_set = load_manifest(args.pool_manifest)
        rows, row_ids, labels = [], [], []
        for session in session_set.sessions:
            sids = [f"{session.session_id}/{u.utterance_id}" for u in session.utterances]
            sess_vectors, _ = extract_dense_vectors(model, sids)
            rows.append(mean_pool(sess_vectors))
            row_ids.append(session.session_id)
            labels.append(session.label)
        vectors = np.stack(rows)
        ids = row_ids
        params["pool_manifest"] = args.pool_manifest
        if args.labels_out:
            Path(args.labels_out).write_text(json.dumps(labels))
            params["labels_out"] = args.labels_out
    write_tensor(vectors.astype(np.float32), out)
    if args.ids_out:
        Path(args.ids_out).write_text(json.dumps(list(ids)))
        params["ids_out"] = args.ids_out
    alpha_out = args.alpha_out or str(Path(out).with_name(Path(out).stem + ".alpha.json"))
    Path(alpha_out).write_text(json.dumps({"alpha": alpha.tolist()}, sort_keys=True))
    params["alpha_out"] = alpha_out
    params["objective"] = descriptor.get("objective")
    _write_run_record(out, RunConfig("extract", params, seed))
    return params


def _cmd_mine(args, config, seed) -> dict:
    x_path = _require_path(args, config, None, "x")
    y_path = _require_path(args, config, None, "y")
    out = _require_path(args, config, None, "out")
    cfg = MineConfig(
        epochs=int(_pick(args, config, "mine", "epochs", 200)),
        batch_size=int(_pick(args, config, "mine", "batch_size", 512)),
        learning_rate=float(_pick(args, config, "mine", "learning_rate", 1e-3)),
        hidden=int(_pick(args, config, "mine", "hidden", 128)),
        seed=seed,
    )
    estimate = estimate_mi(read_tensor(x_path).data, read_tensor(y_path).data, cfg)
    Path(out).write_text(
        json.dumps({"mi_nats": estimate.value, "epochs": cfg.epochs, "seed": seed}, sort_keys=True)
    )
    if args.history:
        with open(args.history, "w") as fh:
            fh.write("epoch,dv_bound\n")
            for epoch, value in enumerate(estimate.history):
                fh.write(f"{epoch},{value!r}\n")
    params = {"x": str(x_path), "y": str(y_path), "out": str(out)}
    params.update(dataclasses.asdict(cfg))
    _write_run_record(out, RunConfig("mine", params, seed))
    return params


def _cmd_fuse(args, config, seed) -> dict:
    speech_path = _require_path(args, config, None, "speech")
    llm_path = _require_path(args, config, None, "llm")
    out = _require_path(args, config, None, "out")
    k = int(_pick(args, config, "classify", "k", 300))
    method = _pick(args, config, "classify", "method", "pca")
    speech = read_tensor(speech_path).data.astype(np.float64)
    llm = read_tensor(llm_path).data.astype(np.float64)
    speech = np.atleast_2d(speech)
    llm = np.atleast_2d(llm)
    if speech.shape[0] != llm.shape[0]:
        raise UsageError("--speech and --llm must have one row per document each")
    if method == "external":
        reduced = reduce_dim(llm, k, method="external", external=llm)
    else:
        reduced = reduce_dim(llm, k, method="pca")
    fused = np.stack([fuse(speech[i], reduced[i]).vector for i in range(speech.shape[0])])
    write_tensor(fused.astype(np.float32), out)
    params = {
        "speech": str(speech_path),
        "llm": str(llm_path),
        "out": str(out),
        "k": k,
        "method": method,
        "speech_dim": int(speech.shape[1]),
        "fused_dim": int(fused.shape[1]),
    }
    _write_run_record(out, RunConfig("fuse", params, seed))
    return params


def _load_xy(args, config):
    x_train = read_tensor(_require_path(args, config, None, "train_features")).data.astype(np.float64)
    y_train = _read_labels(_require_path(args, config, None, "train_labels"))
    x_eval = read_tensor(_require_path(args, config, None, "eval_features")).data.astype(np.float64)
    y_eval = _read_labels(_require_path(args, config, None, "eval_labels"))
    return np.atleast_2d(x_train), y_train, np.atleast_2d(x_eval), y_eval


def _cmd_classify(args, config, seed) -> dict:
    out = _require_path(args, config, None, "out")
    x_train, y_train, x_eval, y_eval = _load_xy(args, config)
    c = float(_pick(args, config, "classify", "c", 1.0))
    epochs = int(_pick(args, config, "classify", "epochs", 500))
    model = train_svm(x_train, y_train, c, epochs, seed)
    preds = predict(model, x_eval)
    y_pm = np.where(y_eval == 1, 1, -1)
    report = {
        "f1": f1_score(preds, y_pm),
        "accuracy": float(np.mean(preds == y_pm)),
        "c": c,
        "epochs": epochs,
        "n_train": int(x_train.shape[0]),
        "n_eval": int(x_eval.shape[0]),
    }
    Path(out).write_text(json.dumps(report, sort_keys=True, indent=1))
    if args.model_out:
        Path(args.model_out).write_text(
            json.dumps({"w": model.w.tolist(), "b": model.b, "c": model.c, "seed": model.seed}, sort_keys=True)
        )
    params = dict(report)
    params["out"] = str(out)
    _write_run_record(out, RunConfig("classify", params, seed))
    return params


def _cmd_search(args, config, seed) -> dict:
    out = _require_path(args, config, None, "out")
    x_train, y_train, x_eval, y_eval = _load_xy(args, config)
    trials = int(_pick(args, config, "classify", "trials", 20))
    report = random_search(x_train, y_train, x_eval, y_eval, trials, seed)
    doc = {
        "f1_avg": report.f1_avg,
        "f1_max": report.f1_max,
        "f1_std": report.f1_std,
        "trials": [dataclasses.asdict(t) for t in report.trials],
    }
    Path(out).write_text(json.dumps(doc, sort_keys=True, indent=1))
    params = {"out": str(out), "trials": trials, "f1_avg": report.f1_avg, "f1_max": report.f1_max}
    _write_run_record(out, RunConfig("search", params, seed))
    return params


def _landmark_sequences(directory: str):
    paths = sorted(Path(directory).glob("*.jsonl"))
    if not paths:
        raise UsageError(f"no .jsonl landmark files under {directory}")
    return [read_landmarks_jsonl(p, utterance_id=p.stem) for p in paths]


def _cmd_explain(args, config, seed) -> dict:
    out_dir = Path(_require_path(args, config, None, "out_dir"))
    out_dir.mkdir(parents=True, exist_ok=True)
    params: dict = {"out_dir": str(out_dir)}
    did_anything = False

    if args.svm and args.vectors:
        doc = json.loads(Path(args.svm).read_text())
        model = SvmModel(np.asarray(doc["w"], dtype=np.float64), float(doc["b"]), float(doc.get("c", 1.0)), int(doc.get("seed", 0)))
        vectors = read_tensor(args.vectors).data.astype(np.float64)
        ids = tuple(json.loads(Path(args.ids).read_text())) if args.ids else None
        k = int(_pick(args, config, "explain", "top_k", 5))
        report = sentence_importance(model, vectors, ids, k)
        (out_dir / "importance.json").write_text(
            json.dumps(
                {
                    "d_original": report.d_original,
                    "sentences": [dataclasses.asdict(e) for e in report.entries],
                    "top": list(report.top),
                },
                sort_keys=True,
                indent=1,
            )
        )
        params.update({"svm": args.svm, "vectors": args.vectors, "top_k": k})
        did_anything = True

    if args.landmarks_dep and args.landmarks_healthy:
        alpha = float(_pick(args, config, "explain", "alpha", 0.05))
        rows = compare_bigram_durations(
            _landmark_sequences(args.landmarks_dep),
            _landmark_sequences(args.landmarks_healthy),
            alpha,
        )
        with open(out_dir / "bigram_stats.csv", "w") as fh:
            fh.write("bigram,u,p,mean_dep,mean_healthy,n_dep,n_healthy,significant\n")
            for r in rows:
                fh.write(
                    f"{r.bigram},{r.u!r},{r.p!r},{r.mean_a!r},{r.mean_b!r},{r.n_a},{r.n_b},{int(r.significant)}\n"
                )
        params.update(
            {"landmarks_dep": args.landmarks_dep, "landmarks_healthy": args.landmarks_healthy, "alpha": alpha}
        )
        did_anything = True

    if not did_anything:
        raise UsageError("explain needs --svm/--vectors and/or --landmarks-dep/--landmarks-healthy")
    _write_run_record(out_dir, RunConfig("explain", params, seed))
    return params


def _cmd_demo_entanglement(args, config, seed) -> dict:
    n = int(_pick(args, config, "augment", "n", 1000))
    independent, entangled = gen_entangled_demo(n, seed)
    accuracies = {}
    for ds in (independent, entangled):
        train_idx = np.arange(0, 2 * n, 2)
        eval_idx = np.arange(1, 2 * n, 2)
        y = np.where(ds.labels == 1, 1, -1)
        model = train_svm(ds.features[train_idx], y[train_idx], c=10.0, epochs=500, seed=seed)
        acc = float(np.mean(predict(model, ds.features[eval_idx]) == y[eval_idx]))
        accuracies[ds.variant] = acc
        print(f"{ds.variant} linear-SVM accuracy: {acc:.4f}")
    params = {"n_per_class": n, "accuracies": accuracies}
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for ds in (independent, entangled):
            write_tensor(ds.features.astype(np.float32), out_dir / f"{ds.variant}_features.ften")
            sidecar = {
                "labels": ds.labels.tolist(),
                "latents": ds.latents.tolist(),
                "variant": ds.variant,
            }
            (out_dir / f"{ds.variant}_latents.json").write_text(json.dumps(sidecar, sort_keys=True))
        (out_dir / "accuracies.json").write_text(json.dumps(accuracies, sort_keys=True, indent=1))
        params["out_dir"] = str(out_dir)
        _write_run_record(out_dir, RunConfig("demo-entanglement", params, seed))
    return params


def _cmd_sweep_dim(args, config, seed) -> dict:
    corpus_path = _require_path(args, config, None, "corpus")
    out = _require_path(args, config, None, "out")
    corpus, kind = _load_corpus(corpus_path)
    if not hasattr(corpus, "labels"):
        raise UsageError("sweep-dim needs a synthetic corpus with labels")
    dims_arg = _pick(args, config, "separation", "dims", "100,200,300,400,500")
    dims = [int(d) for d in str(dims_arg).split(",") if d]
    trials = int(_pick(args, config, "classify", "trials", 8))
    mine_epochs = args.epochs_mine
    if mine_epochs is None:
        mine_epochs = int(config.get("mine", {}).get("epochs", 80))
    base_cfg = _train_config(args, config, seed)

    n = len(corpus.ids)
    split = int(0.75 * n)
    labels = np.asarray(corpus.labels)
    rows = []
    for d in dims:
        cfg = dataclasses.replace(base_cfg, dense_dim=d, seed=derive_seed(seed, "sweep", d))
        model, _ = train(corpus, cfg)
        vectors, _ = extract_dense_vectors(model, corpus.ids)
        mi = estimate_mi(vectors, corpus.sent_embs, MineConfig(epochs=mine_epochs, seed=derive_seed(seed, "mine", d)))
        report = random_search(
            vectors[:split], labels[:split], vectors[split:], labels[split:], trials, derive_seed(seed, "cls", d)
        )
        rows.append((d, mi.value, report.f1_avg, report.f1_max, report.f1_std))
        print(f"d={d}: mi={mi.value:.4f} f1_avg={report.f1_avg:.4f} f1_max={report.f1_max:.4f}")
    with open(out, "w") as fh:
        fh.write("d,mi_nats,f1_avg,f1_max,f1_std\n")
        for row in rows:
            fh.write(",".join(repr(x) for x in row) + "\n")
    params = {
        "corpus": str(corpus_path),
        "corpus_kind": kind,
        "out": str(out),
        "dims": dims,
        "trials": trials,
        "mine_epochs": mine_epochs,
        "separation": dataclasses.asdict(base_cfg),
    }
    _write_run_record(out, RunConfig("sweep-dim", params, seed))
    return params


# --------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lsep", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name: str, **kwargs) -> argparse.ArgumentParser:
        p = sub.add_parser(name, **kwargs)
        p.add_argument("--config", help="JSON config file (default: $LSEP_CONFIG)")
        p.add_argument("--seed", type=int, help="RNG seed (default: config seed or 0)")
        return p

    p = add("landmarks", help="detect acoustic landmarks in a WAV file")
    p.add_argument("--in", dest="in_", metavar="WAV", help="input RIFF/PCM16 file")
    p.add_argument("--out", help="landmark JSONL output")
    p.add_argument("--bigrams", help="optional bigram JSONL output")
    p.add_argument("--bigram-mode", choices=["overlapping", "non-overlapping"])
    p.add_argument("--band-energies", help="optional band-energy tensor output")

    p = add("augment", help="sample sub-dialogue ranges from a manifest")
    p.add_argument("--manifest")
    p.add_argument("--out", help="JSONL of {session, s, e} ranges")
    p.add_argument("--m", type=int)
    p.add_argument("--min-len", type=int)
    p.add_argument("--max-len", type=int)
    p.add_argument("--balance", action="store_const", const=True, default=None)
    p.add_argument("--per-class-total", type=int)

    p = add("train-sep", help="train the information-separation model")
    p.add_argument("--corpus", help="synthetic corpus dir or manifest JSON")
    p.add_argument("--out-dir", help="checkpoint directory")
    p.add_argument("--objective", choices=["speech-preserve", "text-preserve", "sim-max"])
    p.add_argument("--temperature", type=float)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--dense-dim", type=int)
    p.add_argument("--leaky-slope", type=float)
    p.add_argument("--extend-from", help="freeze shared params from this checkpoint, fit new rows")

    p = add("extract", help="export dense vectors and layer weights")
    p.add_argument("--model", help="checkpoint directory")
    p.add_argument("--out", help="dense-vector tensor output")
    p.add_argument("--ids", help="JSON list of sentence ids to extract")
    p.add_argument("--ids-out", help="write the extracted ids as JSON")
    p.add_argument("--alpha-out", help="layer-weight JSON output")
    p.add_argument("--pool-manifest", help="mean-pool vectors per session of this manifest")
    p.add_argument("--labels-out", help="with --pool-manifest: write session labels JSON")

    p = add("mine", help="estimate mutual information between two sample tensors")
    p.add_argument("--x")
    p.add_argument("--y")
    p.add_argument("--out", help="JSON output")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--hidden", type=int)
    p.add_argument("--history", help="optional per-epoch CSV")

    p = add("fuse", help="reduce the LLM side and concatenate with speech vectors")
    p.add_argument("--speech")
    p.add_argument("--llm")
    p.add_argument("--k", type=int)
    p.add_argument("--method", choices=["pca", "external"])
    p.add_argument("--out")

    for name in ("classify", "search"):
        p = add(name, help="train/evaluate a linear SVM" if name == "classify" else "random hyperparameter search")
        p.add_argument("--train-features")
        p.add_argument("--train-labels")
        p.add_argument("--eval-features")
        p.add_argument("--eval-labels")
        p.add_argument("--out")
        if name == "classify":
            p.add_argument("--c", type=float)
            p.add_argument("--epochs", type=int)
            p.add_argument("--model-out", help="write the trained SVM as JSON")
        else:
            p.add_argument("--trials", type=int)

    p = add("explain", help="sentence importance and bigram duration statistics")
    p.add_argument("--svm", help="SVM model JSON")
    p.add_argument("--vectors", help="per-sentence dense vectors")
    p.add_argument("--ids", help="JSON list of sentence ids")
    p.add_argument("--top-k", type=int)
    p.add_argument("--landmarks-dep", help="directory of landmark JSONL, positive class")
    p.add_argument("--landmarks-healthy", help="directory of landmark JSONL, negative class")
    p.add_argument("--alpha", type=float)
    p.add_argument("--out-dir")

    p = add("demo-entanglement", help="independent vs entangled classification demo")
    p.add_argument("--n", type=int, help="points per class (default 1000)")
    p.add_argument("--out-dir", help="optional artifact directory")

    p = add("sweep-dim", help="train/mine/classify across dense dimensions")
    p.add_argument("--corpus")
    p.add_argument("--out", help="CSV output")
    p.add_argument("--dims", help="comma-separated dense dims (default 100..500)")
    p.add_argument("--trials", type=int)
    p.add_argument("--mine-epochs", dest="epochs_mine", type=int, help="epochs for the per-dim MI estimate")
    p.add_argument("--objective", choices=["speech-preserve", "text-preserve", "sim-max"])
    p.add_argument("--temperature", type=float)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--leaky-slope", type=float)

    return parser


_HANDLERS = {
    "landmarks": _cmd_landmarks,
    "augment": _cmd_augment,
    "train-sep": _cmd_train_sep,
    "extract": _cmd_extract,
    "mine": _cmd_mine,
    "fuse": _cmd_fuse,
    "classify": _cmd_classify,
    "search": _cmd_search,
    "explain": _cmd_explain,
    "demo-entanglement": _cmd_demo_entanglement,
    "sweep-dim": _cmd_sweep_dim,
}


def parse_args(argv: list[str] | None = None) -> tuple[argparse.Namespace, dict, int]:
    args = _build_parser().parse_args(argv)
    config = _load_config_file(args.config)
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    return args, config, seed


def run(argv: list[str] | None = None) -> int:
    try:
        args, config, seed = parse_args(argv)
        _HANDLERS[args.subcommand](args, config, seed)
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except LsepError as exc:
        print(f"{type(exc).__module__.split('.')[-1]}.{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
