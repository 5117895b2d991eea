"""Multi-clip corpus builder.

Input manifest: JSON lines ``{"id", "path", "prompt"}`` with ``path``
relative to the manifest.  Output: one stitched ``.lmf`` per sample and a
``manifest.jsonl`` of ``{id, clip_ids, seed, total_frames, prompt}``.
Per-sample seeds come from ``(seed, sample index)`` only, so the result does
not depend on the number of workers.
"""
from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidArgument, MalformedFile
from .fileio import atomic_write, load_motion, motion_to_bytes
from .stitch import Clip, StitchConfig, build_long_sequence

OUTPUT_MANIFEST = "manifest.jsonl"


@dataclass(frozen=True)
class ClipRecord:
    clip_id: str
    path: Path
    prompt: str


def read_clip_manifest(path) -> list[ClipRecord]:
    path = Path(path)
    records = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            entry = json.loads(line)
            records.append(ClipRecord(str(entry["id"]), path.parent / entry["path"], str(entry["prompt"])))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise MalformedFile(f"bad clip manifest line {lineno}: {exc}", line=lineno) from None
    return records


def sample_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, dtype=np.uint64)[0])


_CLIPS: list[Clip] = []


def _init_worker(clips: list[Clip]) -> None:
    global _CLIPS
    _CLIPS = clips


def _build_one(args: tuple[int, int, StitchConfig]) -> tuple[dict, bytes]:
    index, seed, config = args
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(_CLIPS), size=config.clip_count, replace=False)
    chosen = [_CLIPS[int(i)] for i in picks]
    motion, prompt = build_long_sequence(chosen, config)
    record = {
        "id": f"sample_{index:05d}",
        "clip_ids": [c.clip_id for c in chosen],
        "seed": seed,
        "total_frames": motion.frame_count,
        "prompt": prompt,
    }
    return record, motion_to_bytes(motion)


def build_corpus(
    manifest,
    count: int,
    out_dir,
    config: StitchConfig = StitchConfig(),
    workers: int = 1,
) -> list[dict]:
    """Build ``count`` stitched samples from clips eligible under ``config``'s length bounds."""
    if count < 1:
        raise InvalidArgument("count must be >= 1", count=count)
    if workers < 1:
        raise InvalidArgument("workers must be >= 1", workers=workers)
    clips = []
    for rec in read_clip_manifest(manifest):
        motion = load_motion(rec.path)
        if config.len_min <= motion.frame_count <= config.len_max:
            clips.append(Clip(motion, rec.prompt, rec.clip_id))
    if len(clips) < config.clip_count:
        raise InvalidArgument(
            f"only {len(clips)} clips fall within [{config.len_min}, {config.len_max}] frames; "
            f"need {config.clip_count}",
            eligible=len(clips),
        )
    jobs = [(i, sample_seed(config.seed, i), config) for i in range(count)]
    if workers == 1:
        _init_worker(clips)
        results = [_build_one(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(clips,)) as pool:
            results = list(pool.map(_build_one, jobs))
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for record, payload in results:
        atomic_write(out_dir / f"{record['id']}.lmf", payload)
    lines = "".join(json.dumps(r, sort_keys=True) + "\n" for r, _ in results)
    atomic_write(out_dir / OUTPUT_MANIFEST, lines.encode())
    return [r for r, _ in results]
