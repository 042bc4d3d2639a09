"""Interchange-file parsing and the on-disk dataset bundle.

Input formats (UTF-8, header row):
  words.tsv     recording, speaker, text, start_ms, end_ms        (tab)
  gestures.tsv  recording, speaker, phase, gtype, communicative, start_ms, end_ms
  aus.csv       recording, speaker, timestamp_ms, au_id, value, confidence
  features.csv  recording, speaker, frame_ms, f0, f0_dir, intensity, mfcc00..mfcc12

A dataset bundle is a directory holding manifest.txt (key-value text) and
data.npz with the padded label/feature tensors.
"""

from __future__ import annotations

import csv
import os

import numpy as np

from .corpus import (AuFrame, BrowDirection, BrowInterval, Dataset,
                     GestureAnnotation, GesturePhase, GestureType, Utterance,
                     WordToken, CLASS_NAMES, class_distribution,
                     derive_class_track, filter_au_blocks, pad_dataset,
                     segment_ipus)
from .errors import InputFormatError
from .features import RAW_COLUMNS

BUNDLE_VERSION = 1


def _open_rows(path, delimiter, expected_header):
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise InputFormatError(f"{path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise InputFormatError(f"{path}: empty file") from None
        if [h.strip() for h in header] != list(expected_header):
            raise InputFormatError(
                f"{path}: line 1: expected header {','.join(expected_header)}, "
                f"got {','.join(header)}")
        yield from ((lineno, row) for lineno, row in enumerate(reader, start=2))


def _field(path, lineno, row, idx, name, conv):
    try:
        return conv(row[idx].strip())
    except (IndexError, ValueError) as exc:
        raise InputFormatError(
            f"{path}: line {lineno}: column {name!r}: {exc}") from None


def read_words_tsv(path) -> dict[tuple[str, str], list[WordToken]]:
    header = ("recording", "speaker", "text", "start_ms", "end_ms")
    out: dict[tuple[str, str], list[WordToken]] = {}
    for lineno, row in _open_rows(path, "\t", header):
        key = (row[0].strip(), row[1].strip())
        tok = WordToken(text=_field(path, lineno, row, 2, "text", str),
                        start_ms=_field(path, lineno, row, 3, "start_ms", int),
                        end_ms=_field(path, lineno, row, 4, "end_ms", int))
        out.setdefault(key, []).append(tok)
    for toks in out.values():
        toks.sort(key=lambda t: t.start_ms)
    return out


def read_gestures_tsv(path) -> dict[tuple[str, str], list[GestureAnnotation]]:
    header = ("recording", "speaker", "phase", "gtype", "communicative",
              "start_ms", "end_ms")
    out: dict[tuple[str, str], list[GestureAnnotation]] = {}
    for lineno, row in _open_rows(path, "\t", header):
        key = (row[0].strip(), row[1].strip())
        ann = GestureAnnotation(
            phase=_field(path, lineno, row, 2, "phase", GesturePhase),
            gtype=_field(path, lineno, row, 3, "gtype", GestureType),
            communicative=bool(_field(path, lineno, row, 4, "communicative", int)),
            start_ms=_field(path, lineno, row, 5, "start_ms", int),
            end_ms=_field(path, lineno, row, 6, "end_ms", int))
        out.setdefault(key, []).append(ann)
    return out


def read_aus_csv(path) -> dict[tuple[str, str], list[AuFrame]]:
    header = ("recording", "speaker", "timestamp_ms", "au_id", "value",
              "confidence")
    out: dict[tuple[str, str], list[AuFrame]] = {}
    for lineno, row in _open_rows(path, ",", header):
        key = (row[0].strip(), row[1].strip())
        frame = AuFrame(
            timestamp_ms=_field(path, lineno, row, 2, "timestamp_ms", int),
            au_id=_field(path, lineno, row, 3, "au_id", str),
            value=_field(path, lineno, row, 4, "value", float),
            confidence=_field(path, lineno, row, 5, "confidence", float))
        out.setdefault(key, []).append(frame)
    for frames in out.values():
        frames.sort(key=lambda f: (f.au_id, f.timestamp_ms))
    return out


def read_features_csv(path) -> dict[tuple[str, str], dict[int, np.ndarray]]:
    header = ("recording", "speaker", "frame_ms") + RAW_COLUMNS
    out: dict[tuple[str, str], dict[int, np.ndarray]] = {}
    for lineno, row in _open_rows(path, ",", header):
        key = (row[0].strip(), row[1].strip())
        ts = _field(path, lineno, row, 2, "frame_ms", int)
        vec = np.array([_field(path, lineno, row, 3 + i, RAW_COLUMNS[i], float)
                        for i in range(len(RAW_COLUMNS))])
        out.setdefault(key, {})[ts] = vec
    return out


def build_dataset(words, gestures, aus, feature_rows, frame_ms: int = 100,
                  gap_ms: int = 200) -> Dataset:
    """Assemble unpadded utterances from parsed interchange streams."""
    samples = []
    for key in sorted(words):
        recording, speaker = key
        spans = segment_ipus(words[key], gap_ms=gap_ms)
        brow_spans = filter_au_blocks(aus.get(key, []), frame_ms=frame_ms)
        rows = feature_rows.get(key, {})
        for start_ms, end_ms in spans:
            n_frames = (end_ms - start_ms) // frame_ms
            if n_frames == 0:
                continue
            labels = derive_class_track(gestures.get(key, []),
                                        (start_ms, end_ms), frame_ms)
            feats = np.zeros((n_frames, len(RAW_COLUMNS)))
            for t in range(n_frames):
                ts = start_ms + t * frame_ms
                if ts not in rows:
                    raise InputFormatError(
                        f"features.csv: no frame at {ts} ms for recording "
                        f"{recording!r} speaker {speaker!r}")
                feats[t] = rows[ts]
            brows = []
            for b_start, b_end, direction in brow_spans:
                lo = max(b_start, start_ms)
                hi = min(b_end, end_ms)
                if lo < hi:
                    brows.append(BrowInterval(
                        start=(lo - start_ms) // frame_ms,
                        end=-(-(hi - start_ms) // frame_ms),
                        direction=direction))
            samples.append(Utterance(
                speaker=speaker, recording=recording, start_ms=start_ms,
                end_ms=end_ms, labels=labels, features=feats,
                brows=tuple(brows)))
    return Dataset(samples=samples, frame_ms=frame_ms)


# ---------------------------------------------------------------- manifests

def write_manifest(path, entries: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in entries.items():
            fh.write(f"{key} = {value}\n")


def read_manifest(path) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise InputFormatError(f"{path}: line {lineno}: expected key = value")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


# ------------------------------------------------------------------ bundles

_DIR_CODE = {BrowDirection.Up: 0, BrowDirection.Down: 1}
_CODE_DIR = {v: k for k, v in _DIR_CODE.items()}


def save_bundle(bundle_dir, ds: Dataset, extra_manifest: dict | None = None
                ) -> None:
    """Persist a padded dataset as manifest.txt + data.npz."""
    ds = pad_dataset(ds) if ds.padded_len is None else ds
    os.makedirs(bundle_dir, exist_ok=True)
    stats = class_distribution(ds)
    brow_rows = [(i, b.start, b.end, _DIR_CODE[b.direction])
                 for i, u in enumerate(ds.samples) for b in u.brows]
    brow_arr = (np.array(brow_rows, dtype=np.int64)
                if brow_rows else np.zeros((0, 4), dtype=np.int64))
    np.savez(os.path.join(bundle_dir, "data.npz"),
             labels=np.stack([u.labels for u in ds.samples]),
             features=np.stack([u.features for u in ds.samples]),
             lengths=np.array([u.n_frames for u in ds.samples], dtype=np.int64),
             start_ms=np.array([u.start_ms for u in ds.samples], dtype=np.int64),
             end_ms=np.array([u.end_ms for u in ds.samples], dtype=np.int64),
             speakers=np.array([u.speaker for u in ds.samples]),
             recordings=np.array([u.recording for u in ds.samples]),
             brows=brow_arr)
    manifest = {
        "bundle_version": BUNDLE_VERSION,
        "n": stats.n, "l": stats.l, "frame_ms": ds.frame_ms,
    }
    for name, count in zip(CLASS_NAMES, stats.counts):
        manifest[f"count_{name}"] = int(count)
    manifest.update(extra_manifest or {})
    write_manifest(os.path.join(bundle_dir, "manifest.txt"), manifest)


def load_bundle(bundle_dir) -> Dataset:
    manifest = read_manifest(os.path.join(bundle_dir, "manifest.txt"))
    if int(manifest["bundle_version"]) != BUNDLE_VERSION:
        raise InputFormatError(
            f"unsupported bundle version {manifest['bundle_version']}")
    data = np.load(os.path.join(bundle_dir, "data.npz"))
    brows_per_sample: dict[int, list[BrowInterval]] = {}
    for i, start, end, code in data["brows"]:
        brows_per_sample.setdefault(int(i), []).append(
            BrowInterval(start=int(start), end=int(end),
                         direction=_CODE_DIR[int(code)]))
    samples = []
    for i in range(len(data["labels"])):
        samples.append(Utterance(
            speaker=str(data["speakers"][i]),
            recording=str(data["recordings"][i]),
            start_ms=int(data["start_ms"][i]), end_ms=int(data["end_ms"][i]),
            labels=data["labels"][i], features=data["features"][i],
            brows=tuple(brows_per_sample.get(i, [])),
            n_frames=int(data["lengths"][i])))
    return Dataset(samples=samples, frame_ms=int(manifest["frame_ms"]),
                   padded_len=int(manifest["l"]))


# ----------------------------------------------- interchange writers (synth)

def write_interchange(out_dir, channels) -> None:
    """Write words.tsv / gestures.tsv / aus.csv / features.csv for channels."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "words.tsv"), "w", encoding="utf-8") as fh:
        fh.write("recording\tspeaker\ttext\tstart_ms\tend_ms\n")
        for ch in channels:
            for w in ch.words:
                fh.write(f"{ch.recording}\t{ch.speaker}\t{w.text}\t"
                         f"{w.start_ms}\t{w.end_ms}\n")
    with open(os.path.join(out_dir, "gestures.tsv"), "w", encoding="utf-8") as fh:
        fh.write("recording\tspeaker\tphase\tgtype\tcommunicative\t"
                 "start_ms\tend_ms\n")
        for ch in channels:
            for g in ch.gestures:
                fh.write(f"{ch.recording}\t{ch.speaker}\t{g.phase.value}\t"
                         f"{g.gtype.value}\t{int(g.communicative)}\t"
                         f"{g.start_ms}\t{g.end_ms}\n")
    with open(os.path.join(out_dir, "aus.csv"), "w", encoding="utf-8") as fh:
        fh.write("recording,speaker,timestamp_ms,au_id,value,confidence\n")
        for ch in channels:
            for f in ch.au_frames:
                fh.write(f"{ch.recording},{ch.speaker},{f.timestamp_ms},"
                         f"{f.au_id},{f.value!r},{f.confidence!r}\n")
    with open(os.path.join(out_dir, "features.csv"), "w", encoding="utf-8") as fh:
        fh.write("recording,speaker,frame_ms," + ",".join(RAW_COLUMNS) + "\n")
        for ch in channels:
            for ts, vec in ch.feature_rows:
                fh.write(f"{ch.recording},{ch.speaker},{ts},"
                         + ",".join(repr(float(x)) for x in vec) + "\n")
