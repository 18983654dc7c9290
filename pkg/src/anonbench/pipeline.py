"""Run-directory orchestration: anonymize -> infer -> align -> score -> report.

Each stage persists one structured-text artifact in the run directory and is
skipped on rerun when its artifact already covers every document, so an
interrupted run resumes where it stopped.  Report files contain no
timestamps; identical inputs and cassettes yield byte-identical reports.
"""

from __future__ import annotations

import hashlib
import json
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

from . import prompts
from .adversary import AdversaryError, InferenceResult, run_adversary
from .alignment import AlignmentError, AlignmentResult, align_subjects, subject_match_ratio
from .anonymizers import (
    AnonymizerError,
    adversarial_anonymize,
    deid_gpt,
    dp_prompt,
)
from .backbones import complete_text
from .corpus.loader import load_dataset
from .corpus.model import Document, ValidationError
from .gateway import CassetteStore, GatewayError, LlmGateway, default_providers
from .metrics import GROUP_KEYS, build_metrics_report, metrics_table
from .scoring import ScoreCell, score_document

ANONYMIZE_METHODS = ("deid_gpt", "dp_prompt", "adversarial")
UTILITY_TEMPERATURE = 0.0


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass
class RunConfig:
    dataset: str
    method: str
    backbone: str
    adversary: str
    judge: str
    mode: str = "replay"
    certainty_floor: int = 3
    pred_certainty_floor: int = 1
    rounds: int = 3
    group_by: tuple[str, ...] = ()
    cassette_dir: str = "cassettes"
    optimal_pairing: bool = False

    def to_obj(self) -> dict:
        return {
            "dataset": self.dataset,
            "method": self.method,
            "backbone": self.backbone,
            "adversary": self.adversary,
            "judge": self.judge,
            "mode": self.mode,
            "certainty_floor": self.certainty_floor,
            "pred_certainty_floor": self.pred_certainty_floor,
            "rounds": self.rounds,
            "group_by": list(self.group_by),
            "optimal_pairing": self.optimal_pairing,
        }


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


def _dataset_digest(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run_id_for(config: RunConfig, dataset_digest: str) -> str:
    payload = _dumps({"config": config.to_obj(), "dataset_digest": dataset_digest})
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


@dataclass
class RunManifest:
    run_id: str
    dataset_digest: str
    config: dict
    stages: dict[str, str] = field(default_factory=dict)  # stage -> artifact file
    started_at: Optional[str] = None
    finished_at: Optional[str] = None

    def to_obj(self) -> dict:
        return {
            "run_id": self.run_id,
            "dataset_digest": self.dataset_digest,
            "config": self.config,
            "stages": self.stages,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "RunManifest":
        return cls(
            run_id=obj["run_id"],
            dataset_digest=obj["dataset_digest"],
            config=obj["config"],
            stages=dict(obj.get("stages", {})),
            started_at=obj.get("started_at"),
            finished_at=obj.get("finished_at"),
        )


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())


def _atomic_write(path: Path, content: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(content, encoding="utf-8")
    tmp.replace(path)


def _load_jsonl(path: Path) -> dict[str, dict]:
    out: dict[str, dict] = {}
    if not path.is_file():
        return out
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            out[obj["doc_id"]] = obj
    return out


def _run_doc_stage(
    stage: str,
    path: Path,
    docs: Sequence[Document],
    fn: Callable[[Document], dict],
) -> dict[str, dict]:
    """Per-document stage with doc-level resume and a canonical final write."""
    existing = _load_jsonl(path)
    missing = [d for d in docs if d.doc_id not in existing]
    if missing:
        with path.open("a", encoding="utf-8") as fh:
            for doc in missing:
                try:
                    obj = fn(doc)
                except (AnonymizerError, AdversaryError, AlignmentError, GatewayError) as exc:
                    raise StageError(stage, f"doc {doc.doc_id}: {exc}") from exc
                obj["doc_id"] = doc.doc_id
                fh.write(_dumps(obj) + "\n")
                fh.flush()
                existing[doc.doc_id] = obj
    # Canonical rewrite in dataset order keeps artifacts deterministic
    # regardless of how many resumes it took to finish the stage.
    lines = [_dumps(existing[d.doc_id]) for d in docs if d.doc_id in existing]
    _atomic_write(path, "\n".join(lines) + ("\n" if lines else ""))
    return existing


def make_gateway(mode: str, cassette_dir: str) -> LlmGateway:
    store = CassetteStore(Path(cassette_dir))
    if mode in ("record", "live"):
        store.directory.mkdir(parents=True, exist_ok=True)
    return LlmGateway(store, mode=mode, providers=default_providers())


def anonymize_document(
    doc: Document, method: str, backbone: str, gateway: LlmGateway, rounds: int
):
    if method == "deid_gpt":
        return deid_gpt(doc, backbone, gateway)
    if method == "dp_prompt":
        return dp_prompt(doc, backbone, gateway)
    if method == "adversarial":
        return adversarial_anonymize(doc, backbone, gateway, rounds=rounds)
    raise StageError("anonymize", f"unknown method {method!r}; expected one of {ANONYMIZE_METHODS}")


_INT_RE = re.compile(r"\d+")


def judge_utility_score(content: str) -> float:
    match = _INT_RE.search(content)
    if not match:
        raise StageError("utility", f"no integer score in judge output: {content!r}")
    value = int(match.group())
    if not 1 <= value <= 10:
        raise StageError("utility", f"judge score {value} outside [1, 10]")
    return float(value)


class Pipeline:
    """Stateful orchestration bound to one run directory."""

    def __init__(self, config: RunConfig, out_dir: str):
        self.config = config
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.gateway = make_gateway(config.mode, config.cassette_dir)
        self.docs = load_dataset(config.dataset)
        if not self.docs:
            raise ValidationError("dataset is empty")
        digest = _dataset_digest(config.dataset)
        self.manifest = self._load_or_create_manifest(digest)

    # -- manifest ---------------------------------------------------------

    @property
    def manifest_path(self) -> Path:
        return self.out / "manifest.json"

    def _load_or_create_manifest(self, digest: str) -> RunManifest:
        run_id = run_id_for(self.config, digest)
        if self.manifest_path.is_file():
            manifest = RunManifest.from_obj(
                json.loads(self.manifest_path.read_text(encoding="utf-8"))
            )
            if manifest.run_id != run_id:
                raise ValidationError(
                    f"run directory {self.out} belongs to run {manifest.run_id}, "
                    f"but this configuration is run {run_id}"
                )
            return manifest
        manifest = RunManifest(
            run_id=run_id,
            dataset_digest=digest,
            config=self.config.to_obj(),
            started_at=_now(),
        )
        self._save_manifest(manifest)
        return manifest

    def _save_manifest(self, manifest: Optional[RunManifest] = None) -> None:
        manifest = manifest or self.manifest
        _atomic_write(
            self.manifest_path, json.dumps(manifest.to_obj(), indent=2) + "\n"
        )

    def _mark(self, stage: str, filename: str) -> None:
        self.manifest.stages[stage] = filename
        self._save_manifest()

    # -- stages -----------------------------------------------------------

    def stage_anonymize(self) -> dict[str, dict]:
        path = self.out / "anonymized.jsonl"

        def one(doc: Document) -> dict:
            run = anonymize_document(
                doc, self.config.method, self.config.backbone, self.gateway,
                self.config.rounds,
            )
            return {
                "method": run.method,
                "backbone": run.backbone,
                "anonymized_text": run.anonymized_text,
                "effective_temperature": run.effective_temperature,
                "effective_top_p": run.effective_top_p,
                "diagnostics": run.diagnostics,
            }

        result = _run_doc_stage("anonymize", path, self.docs, one)
        self._mark("anonymize", path.name)
        return result

    def stage_infer(self, anonymized: dict[str, dict]) -> dict[str, dict]:
        path = self.out / "inference.jsonl"

        def one(doc: Document) -> dict:
            text = anonymized[doc.doc_id]["anonymized_text"]
            result = run_adversary(text, self.config.adversary, self.gateway)
            return result.to_obj()

        result = _run_doc_stage("infer", path, self.docs, one)
        self._mark("infer", path.name)
        return result

    def stage_align(
        self, anonymized: dict[str, dict], inferences: dict[str, dict]
    ) -> dict[str, dict]:
        path = self.out / "alignment.jsonl"

        def one(doc: Document) -> dict:
            inference = InferenceResult.from_obj(inferences[doc.doc_id])
            result = align_subjects(
                original_text=doc.text,
                anonymized_text=anonymized[doc.doc_id]["anonymized_text"],
                gt=doc.subjects,
                pred=inference.subjects,
                backbone=self.config.judge,
                gateway=self.gateway,
            )
            return result.to_obj()

        result = _run_doc_stage("align", path, self.docs, one)
        self._mark("align", path.name)
        return result

    def stage_score(
        self, inferences: dict[str, dict], alignments: dict[str, dict]
    ) -> list[ScoreCell]:
        path = self.out / "cells.jsonl"

        def one(doc: Document) -> dict:
            cells = score_document(
                doc,
                AlignmentResult.from_obj(alignments[doc.doc_id]),
                InferenceResult.from_obj(inferences[doc.doc_id]),
                judge_backbone=self.config.judge,
                gateway=self.gateway,
                gt_certainty_floor=self.config.certainty_floor,
                pred_certainty_floor=self.config.pred_certainty_floor,
                optimal_pairing=self.config.optimal_pairing,
            )
            return {"cells": [c.to_obj() for c in cells]}

        by_doc = _run_doc_stage("score", path, self.docs, one)
        self._mark("score", path.name)
        cells: list[ScoreCell] = []
        for doc in self.docs:
            cells.extend(ScoreCell.from_obj(o) for o in by_doc[doc.doc_id]["cells"])
        return cells

    def stage_utility(self, anonymized: dict[str, dict]) -> dict[str, dict]:
        path = self.out / "utility.jsonl"

        def one(doc: Document) -> dict:
            text = anonymized[doc.doc_id]["anonymized_text"]
            read_out, _, _ = complete_text(
                self.gateway, self.config.judge,
                prompts.readability_prompt(text), UTILITY_TEMPERATURE,
            )
            mean_out, _, _ = complete_text(
                self.gateway, self.config.judge,
                prompts.meaning_prompt(doc.text, text), UTILITY_TEMPERATURE,
            )
            return {
                "readability": judge_utility_score(read_out),
                "meaning": judge_utility_score(mean_out),
            }

        result = _run_doc_stage("utility", path, self.docs, one)
        self._mark("utility", path.name)
        return result

    # -- report -----------------------------------------------------------

    def write_report(
        self,
        cells: list[ScoreCell],
        anonymized: dict[str, dict],
        utility: dict[str, dict],
        alignments: dict[str, dict],
    ) -> dict:
        texts = {i: o["anonymized_text"] for i, o in anonymized.items()}
        scores = {
            i: (o["readability"], o["meaning"]) for i, o in utility.items()
        }
        report = build_metrics_report(
            self.docs,
            cells,
            anonymized_texts=texts,
            utility_scores=scores,
            group_by=self.config.group_by,
        )
        alignment_results = [
            AlignmentResult.from_obj(alignments[d.doc_id]) for d in self.docs
        ]
        obj = {
            "run_id": self.manifest.run_id,
            "config": self.config.to_obj(),
            "dataset_digest": self.manifest.dataset_digest,
            "metrics": report.to_obj(),
            "subject_match_ratio": subject_match_ratio(alignment_results),
        }
        _atomic_write(self.out / "report.json", _dumps(obj) + "\n")
        label = f"{self.config.method}/{self.config.backbone}"
        table = metrics_table({label: report})
        _atomic_write(self.out / "report.txt", table + "\n")
        self._mark("report", "report.json")
        self.manifest.finished_at = _now()
        self._save_manifest()
        return obj

    def run(self) -> dict:
        anonymized = self.stage_anonymize()
        inferences = self.stage_infer(anonymized)
        alignments = self.stage_align(anonymized, inferences)
        cells = self.stage_score(inferences, alignments)
        utility = self.stage_utility(anonymized)
        return self.write_report(cells, anonymized, utility, alignments)


def cmd_evaluate(config: RunConfig, out_dir: str) -> dict:
    return Pipeline(config, out_dir).run()


def compare_adversaries(report_paths: Sequence[str]) -> dict:
    """Pairwise Spearman rho over CPR and IPR series, grouped by adversary.

    Every adversary must cover the same (method, backbone) configurations;
    the series are indexed by configuration in sorted order.
    """
    from .metrics import spearman_rho

    if len(report_paths) < 2:
        raise ValidationError("need at least two report files")
    by_adversary: dict[str, dict[str, dict]] = {}
    for path in report_paths:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        cfg = obj["config"]
        adversary = cfg["adversary"]
        key = f"{cfg['method']}:{cfg['backbone']}"
        by_adversary.setdefault(adversary, {})[key] = obj["metrics"]
    tags = sorted(by_adversary)
    if len(tags) == 1:
        # Self-comparison: identical series, rho 1.0 by construction.
        by_adversary[tags[0] + " (copy)"] = dict(by_adversary[tags[0]])
        tags = sorted(by_adversary)
    config_sets = {tag: set(rows) for tag, rows in by_adversary.items()}
    reference = config_sets[tags[0]]
    for tag in tags[1:]:
        if config_sets[tag] != reference:
            diff = sorted(config_sets[tag] ^ reference)
            raise ValidationError(
                f"configuration mismatch between {tags[0]} and {tag}: {diff}"
            )
    configs = sorted(reference)
    pairs = {}
    for i, a in enumerate(tags):
        for b in tags[i + 1 :]:
            row = {}
            for metric in ("cpr", "ipr"):
                xs = [by_adversary[a][c][metric] for c in configs]
                ys = [by_adversary[b][c][metric] for c in configs]
                if any(v is None for v in xs + ys):
                    row[metric] = None
                else:
                    row[metric] = spearman_rho(xs, ys)
            pairs[f"{a} vs {b}"] = row
    return {"configurations": configs, "rho": pairs}
