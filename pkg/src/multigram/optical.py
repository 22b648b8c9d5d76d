"""Synthetic frame-level character posteriors standing in for an optical model."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import CharacterInventory, CorpusLine
from .graph import BLANK

NORM_TOL = 1e-9


@dataclass(frozen=True)
class NoiseSpec:
    """Noise model.

    ``confusion_mass`` is both the per-frame spread of probability away from
    the intended label and the chance that a character is confused with a
    random other one. ``blank_bias`` is the share of the spread that goes to
    other labels on blank frames (the rest stays on the true character).
    """

    confusion_mass: float = 0.0
    frames_per_char: int = 2
    blank_bias: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.confusion_mass < 1.0:
            raise ValueError("confusion_mass must be in [0, 1)")
        if int(self.frames_per_char) != self.frames_per_char or self.frames_per_char < 2:
            raise ValueError("frames_per_char must be an integer >= 2")
        if not 0.0 <= self.blank_bias < 1.0:
            raise ValueError("blank_bias must be in [0, 1)")


@dataclass
class PosteriorLattice:
    frames: np.ndarray  # (frame_count, len(labels)), linear probabilities
    labels: tuple[str, ...]  # blank first, then the inventory

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=float).reshape(-1, len(self.labels))
        if (self.frames < 0).any():
            raise ValueError("negative posterior")
        if len(self.frames) and np.abs(self.frames.sum(axis=1) - 1.0).max() > NORM_TOL:
            raise ValueError("posterior frames must sum to 1")

    @property
    def frame_count(self) -> int:
        return len(self.frames)

    def to_text(self) -> str:
        head = f"#frames={self.frame_count} labels={len(self.labels)}\n"
        body = "".join(" ".join(format(x, ".17g") for x in row) + "\n" for row in self.frames)
        return head + body

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_text())

    @classmethod
    def read(cls, path, labels: Sequence[str]) -> PosteriorLattice:
        with open(path, encoding="utf-8") as f:
            head = f.readline().strip()
            try:
                parts = dict(p.split("=", 1) for p in head.lstrip("#").split())
                n, m = int(parts["frames"]), int(parts["labels"])
            except (ValueError, KeyError):
                raise ValueError(f"{path}:1: expected '#frames=<N> labels=<M>'") from None
            if m != len(labels):
                raise ValueError(f"{path}:1: lattice has {m} labels, label table has {len(labels)}")
            rows = []
            for lineno, line in enumerate(f, 2):
                if not line.strip():
                    continue
                try:
                    row = [float(x) for x in line.split()]
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: non-numeric probability") from None
                if len(row) != m:
                    raise ValueError(f"{path}:{lineno}: expected {m} values, got {len(row)}")
                rows.append(row)
        if len(rows) != n:
            raise ValueError(f"{path}: header says {n} frames, found {len(rows)}")
        try:
            return cls(np.array(rows, dtype=float).reshape(n, m), tuple(labels))
        except ValueError as e:
            raise ValueError(f"{path}: {e}") from None


def lattice_labels(inventory: CharacterInventory) -> tuple[str, ...]:
    return (BLANK, *inventory.characters)


def write_labels(labels: Sequence[str], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for i, lab in enumerate(labels):
            f.write(f"{'<space>' if lab == ' ' else lab}\t{i}\n")


def read_labels(path) -> tuple[str, ...]:
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2 or int(parts[1]) != len(out):
                raise ValueError(f"{path}:{lineno}: expected label<TAB>{len(out)}")
            out.append(" " if parts[0] == "<space>" else parts[0])
    if not out or out[0] != BLANK:
        raise ValueError(f"{path}: first label must be {BLANK}")
    return tuple(out)


def synthesize_lattice(text: str, inventory: CharacterInventory, noise: NoiseSpec) -> PosteriorLattice:
    """Frames for ``text``: one peaked frame per character followed by blank frames.

    Every character consumes the same number of random draws whatever the
    noise level, so for a fixed seed the set of confused characters only
    grows as ``confusion_mass`` increases.
    """
    labels = lattice_labels(inventory)
    idx = {c: i for i, c in enumerate(labels)}
    bad = sorted({c for c in text if c not in inventory})
    if bad:
        raise ValueError(f"characters outside the inventory: {''.join(bad)!r}")
    M = len(labels)
    V = M - 1
    eps = noise.confusion_mass
    F = noise.frames_per_char
    rng = np.random.default_rng(noise.seed)
    frames = np.zeros((len(text) * F, M))
    for k, ch in enumerate(text):
        true = idx[ch]
        r, u, pick = rng.random(), rng.uniform(0.5, 1.0), rng.integers(0, max(V - 1, 1))
        first = frames[k * F]
        if V > 1:
            first[1:] = eps / (V - 1)
            first[true] = 1.0 - eps
        else:
            first[true] = 1.0
        if V > 1 and r < eps:
            others = [j for j in range(1, M) if j != true]
            conf = others[pick]
            first[conf] += (1.0 - eps) * u
            first[true] = (1.0 - eps) * (1.0 - u)
        for f in range(1, F):
            row = frames[k * F + f]
            row[0] = 1.0 - eps
            spread = eps * noise.blank_bias
            row[true] = eps - spread
            others = [j for j in range(1, M) if j != true]
            if others:
                row[others] += spread / len(others)
            else:
                row[true] = eps
    return PosteriorLattice(frames, labels)


def greedy_collapse(lattice: PosteriorLattice) -> str:
    """Per-frame argmax, merge repeats, drop blanks."""
    out = []
    prev = -1
    for j in np.argmax(lattice.frames, axis=1) if lattice.frame_count else ():
        if j != prev and j != 0:
            out.append(lattice.labels[j])
        prev = j
    return "".join(out)


# ---------------------------------------------------------------------------
# manifests


@dataclass(frozen=True)
class ManifestEntry:
    line_id: str
    lattice_path: Path
    text: str


def _synth_one(args):
    text, inventory, noise, path = args
    synthesize_lattice(text, inventory, noise).write(path)


def synthesize_manifest(
    lines: Sequence[CorpusLine | str],
    inventory: CharacterInventory,
    noise: NoiseSpec,
    out_dir,
    jobs: int = 1,
) -> Path:
    """Write one lattice per line plus ``labels.txt`` and ``manifest.tsv``.

    Line ``i`` uses seed ``noise.seed + i``.
    """
    out = Path(out_dir)
    (out / "lattices").mkdir(parents=True, exist_ok=True)
    write_labels(lattice_labels(inventory), out / "labels.txt")
    tasks = []
    rows = []
    for i, line in enumerate(lines):
        text = line.text if isinstance(line, CorpusLine) else line
        lid = f"line{i:05d}"
        rel = f"lattices/{lid}.lat"
        spec = NoiseSpec(noise.confusion_mass, noise.frames_per_char, noise.blank_bias, noise.seed + i)
        tasks.append((text, inventory, spec, out / rel))
        rows.append(f"{lid}\t{rel}\t{text}\n")
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(jobs) as ex:
            list(ex.map(_synth_one, tasks, chunksize=16))
    else:
        for t in tasks:
            _synth_one(t)
    with open(out / "manifest.tsv", "w", encoding="utf-8") as f:
        f.writelines(rows)
    return out / "manifest.tsv"


def read_manifest(path) -> list[ManifestEntry]:
    """Read ``id<TAB>lattice path<TAB>transcription``; paths are relative to the manifest."""
    path = Path(path)
    base = path.parent
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected id<TAB>lattice<TAB>transcription")
            out.append(ManifestEntry(parts[0], base / parts[1], parts[2]))
    return out


def load_manifest(path) -> list[tuple[ManifestEntry, PosteriorLattice]]:
    path = Path(path)
    labels = read_labels(path.parent / "labels.txt")
    return [(e, PosteriorLattice.read(e.lattice_path, labels)) for e in read_manifest(path)]
