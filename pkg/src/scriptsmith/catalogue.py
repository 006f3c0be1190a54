"""Embedding-indexed store of reviewed action -> script pairs.

Statements are decomposed into entity/value pairs plus a residual text whose
embedding carries the fuzzy part of the match; scoring blends cosine
similarity with entity agreement.  Two scoring modes exist: ``verbatim``
applies the published-style formula literally (a self-match then tops out at
1 - alpha, leaving the 0.95 retrieval threshold unreachable), while the
default ``corrected`` mode inverts the value-distance term into a similarity
normalized over the entity-name union so a self-match scores exactly 1.0.

Retrieval is an exact scan over the index; at catalogue scale (thousands of
entries) this is both the reference behaviour and fast enough.
"""

from __future__ import annotations

import base64
import hashlib
import json
import re
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

import numpy as np

from .config import CatalogueConfig, ScoreMode
from .errors import DuplicateStatement, EmptyText, SyntaxRejected
from .generation import BashScript
from .syntax import check_syntax

EPS = 1e-12

EMBEDDER_ID = "hash-v1"

STOPWORDS = frozenset(
    "a an and are as at be by for from in into is it of on or over per "
    "that the then this to top up with within".split()
)


class Provenance(str, Enum):
    APPROVED = "approved"
    EDITED = "edited"


@dataclass(frozen=True)
class Entity:
    name: str
    value: float | None = None

    def to_record(self) -> list:
        return [self.name, self.value]


_TOKEN_RE = re.compile(r"\d+(?:\.\d+)?|[A-Za-z]+")
_NUMBER_RE = re.compile(r"^\d+(?:\.\d+)?$")


def _singularize(word: str) -> str:
    if len(word) > 3 and word.endswith("s") and not word.endswith("ss"):
        return word[:-1]
    return word


def normalize_entity_name(tokens: list[str]) -> str:
    return " ".join(_singularize(t.lower()) for t in tokens)


def extract_entities(statement: str) -> tuple[str, tuple[Entity, ...]]:
    """Split a statement into (residual text, entity/value pairs).

    Every numeric token is a value; its entity name is the nearest run of up
    to two adjacent non-stopword word tokens, looking after the number first
    and before it otherwise.  Matched spans are removed to form the residual.
    A number with no adjacent content words stays in the residual unpaired,
    and a statement without numbers passes through whole.
    """
    tokens = [(m.group(0), m.span()) for m in _TOKEN_RE.finditer(statement)]
    used: set[int] = set()
    entities: list[Entity] = []

    for idx, (tok, _span) in enumerate(tokens):
        if not _NUMBER_RE.match(tok) or idx in used:
            continue

        def run_from(start: int, step: int) -> list[int]:
            picked: list[int] = []
            j = start
            while 0 <= j < len(tokens) and len(picked) < 2:
                word, _ = tokens[j]
                if j in used or _NUMBER_RE.match(word) or word.lower() in STOPWORDS:
                    break
                picked.append(j)
                j += step
            return picked

        name_idx = run_from(idx + 1, +1)
        if not name_idx:
            name_idx = sorted(run_from(idx - 1, -1))
        if not name_idx:
            continue
        used.add(idx)
        used.update(name_idx)
        name = normalize_entity_name([tokens[j][0] for j in name_idx])
        entities.append(Entity(name=name, value=float(tok)))

    if not entities:
        return statement, ()

    drop_spans = sorted(tokens[j][1] for j in used)
    parts: list[str] = []
    pos = 0
    for start, end in drop_spans:
        parts.append(statement[pos:start])
        pos = end
    parts.append(statement[pos:])
    residual = re.sub(r"\s+", " ", "".join(parts)).strip()
    return residual, tuple(entities)


def embed(text: str, dim: int = 256) -> np.ndarray:
    """Deterministic hashing embedder: signed token counts, L2-normalized.

    Each lowercase token hashes (blake2b, salt-free) to a dimension and a
    sign; counts accumulate and the result is normalized in float64, so the
    same text always yields the same unit vector on any platform.
    """
    tokens = re.findall(r"[a-z0-9]+", text.lower())
    if not tokens:
        raise EmptyText("cannot embed empty text")
    vec = np.zeros(dim, dtype=np.float64)
    for tok in tokens:
        digest = hashlib.blake2b(tok.encode("utf-8"), digest_size=8).digest()
        idx = int.from_bytes(digest[:4], "little") % dim
        sign = 1.0 if digest[4] & 1 else -1.0
        vec[idx] += sign
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:  # opposite-signed tokens cancelled out entirely
        digest = hashlib.blake2b(" ".join(tokens).encode("utf-8"), digest_size=8).digest()
        vec[int.from_bytes(digest[:4], "little") % dim] = 1.0
        norm = 1.0
    return vec / norm


@dataclass(frozen=True, eq=False)
class ActionKey:
    """A statement plus everything retrieval needs: residual, embedding, entities."""

    statement: str
    residual: str
    embedding: np.ndarray  # unit L2 norm, float64
    entities: tuple[Entity, ...]

    @classmethod
    def build(cls, statement: str, dim: int = 256) -> "ActionKey":
        residual, entities = extract_entities(statement)
        text = residual if residual.strip() else statement
        return cls(statement=statement, residual=residual,
                   embedding=embed(text, dim), entities=entities)


@dataclass(frozen=True)
class MatchScore:
    total: float
    cosine_part: float
    entity_part: float
    alpha: float
    mode: ScoreMode

    def to_record(self) -> dict:
        return {
            "total": self.total,
            "cosine_part": self.cosine_part,
            "entity_part": self.entity_part,
            "alpha": self.alpha,
            "mode": self.mode.value,
        }


def _first_values(entities: tuple[Entity, ...]) -> dict[str, float | None]:
    values: dict[str, float | None] = {}
    for ent in entities:
        values.setdefault(ent.name, ent.value)
    return values


def _entity_part_corrected(a: tuple[Entity, ...], b: tuple[Entity, ...]) -> float:
    """Similarity in [0, 1] over the union of entity names.

    Shared names score 1 minus the relative value distance (clamped at 0); a
    shared name missing a value on either side counts as a full match;
    one-sided names contribute 0.  Two empty entity sets agree perfectly.
    """
    va, vb = _first_values(a), _first_values(b)
    union = set(va) | set(vb)
    if not union:
        return 1.0
    total = 0.0
    for name in union:
        if name not in va or name not in vb:
            continue
        x, y = va[name], vb[name]
        if x is None or y is None:
            total += 1.0
        else:
            total += max(0.0, 1.0 - abs(x - y) / max(abs(x), abs(y), EPS))
    return total / len(union)


def _entity_part_verbatim(a: tuple[Entity, ...], b: tuple[Entity, ...]) -> float:
    """Literal published-style term: pairs in list order, distances summed.

    Identical values contribute 0, so a perfect match adds nothing; kept
    behind a flag for fidelity and comparison.
    """
    total = 0.0
    for ea, eb in zip(a, b):
        if ea.name != eb.name or ea.value is None or eb.value is None:
            continue
        denom = max(ea.value, eb.value)
        if denom <= 0:
            continue
        total += abs(ea.value - eb.value) / denom
    return total


def match_score(a: ActionKey, b: ActionKey, alpha: float = 0.5,
                mode: ScoreMode = ScoreMode.CORRECTED) -> MatchScore:
    """Blend cosine similarity of residual embeddings with entity agreement.

    Symmetric in its arguments in both modes.  In corrected mode the total
    stays within [-1, 1] and a key matched against itself scores exactly 1.
    """
    cos = float(np.dot(a.embedding, b.embedding))
    cos = max(-1.0, min(1.0, cos))
    if mode is ScoreMode.VERBATIM:
        entity = _entity_part_verbatim(a.entities, b.entities)
    else:
        entity = _entity_part_corrected(a.entities, b.entities)
    total = (1.0 - alpha) * cos + alpha * entity
    return MatchScore(total=total, cosine_part=cos, entity_part=entity,
                      alpha=alpha, mode=mode)


@dataclass(frozen=True)
class CatalogueEntry:
    id: str
    key: ActionKey
    script: BashScript
    provenance: Provenance
    created_at: str
    source_outcome_id: str | None = None

    def to_record(self) -> dict:
        emb32 = self.key.embedding.astype("<f4")
        return {
            "id": self.id,
            "statement": self.key.statement,
            "residual": self.key.residual,
            "entities": [e.to_record() for e in self.key.entities],
            "embedding": base64.b64encode(emb32.tobytes()).decode("ascii"),
            "embedder": EMBEDDER_ID,
            "dim": int(self.key.embedding.shape[0]),
            "script": self.script.text,
            "provenance": self.provenance.value,
            "created_at": self.created_at,
            "source_outcome_id": self.source_outcome_id,
        }


@dataclass(frozen=True)
class RetrievalResult:
    hits: tuple[tuple[CatalogueEntry, MatchScore], ...]
    high_confidence: bool

    def best(self) -> tuple[CatalogueEntry, MatchScore] | None:
        return self.hits[0] if self.hits else None


def _entry_id(statement: str, script_text: str) -> str:
    digest = hashlib.sha1(f"{statement}\x00{script_text}".encode("utf-8")).hexdigest()
    return f"c-{digest[:12]}"


def _normalize_statement(statement: str) -> str:
    return re.sub(r"\s+", " ", statement.strip().lower())


class Catalogue:
    """Reviewed statement -> script pairs with scored retrieval.

    Concurrency: retrieval reads an immutable snapshot, so reads never block
    reads; upserts serialize on a writer lock and atomically publish a new
    snapshot.  Persistence is a newline-delimited record file rewritten
    atomically on save; loading recomputes built-in embeddings from the
    stored text so a save/load cycle reproduces retrieval bit-exactly.
    """

    def __init__(self, cfg: CatalogueConfig | None = None):
        self.cfg = cfg or CatalogueConfig()
        self._lock = threading.Lock()
        self._entries: dict[str, CatalogueEntry] = {}
        self._snapshot: tuple[CatalogueEntry, ...] = ()

    def __len__(self) -> int:
        return len(self._entries)

    def entries(self) -> tuple[CatalogueEntry, ...]:
        return self._snapshot

    def get(self, entry_id: str) -> CatalogueEntry | None:
        return self._entries.get(entry_id)

    def _publish(self) -> None:
        self._snapshot = tuple(sorted(self._entries.values(), key=lambda e: e.id))

    # -- growth -------------------------------------------------------------

    def make_entry(self, statement: str, script: BashScript,
                   provenance: Provenance, source_outcome_id: str | None = None,
                   created_at: str | None = None) -> CatalogueEntry:
        key = ActionKey.build(statement, self.cfg.dim)
        return CatalogueEntry(
            id=_entry_id(statement, script.text),
            key=key,
            script=script,
            provenance=provenance,
            created_at=created_at or datetime.now(timezone.utc).isoformat(),
            source_outcome_id=source_outcome_id,
        )

    def upsert(self, entry: CatalogueEntry) -> str:
        """Persist and index a reviewed entry; idempotent on identical id.

        The syntax gate runs on every write: a broken script never enters
        the catalogue, whatever its review provenance.
        """
        if entry.provenance not in (Provenance.APPROVED, Provenance.EDITED):
            raise SyntaxRejected("only reviewed entries may enter the catalogue")
        report = check_syntax(entry.script)
        if not report.ok:
            raise SyntaxRejected("script failed the syntax gate", report.findings)
        with self._lock:
            if entry.id not in self._entries:
                norm = _normalize_statement(entry.key.statement)
                for other in self._entries.values():
                    if (_normalize_statement(other.key.statement) == norm
                            and other.script.text != entry.script.text):
                        if self.cfg.duplicate_statement == "reject":
                            raise DuplicateStatement(
                                f"statement already catalogued with a different "
                                f"script (entry {other.id})"
                            )
                        break  # version: keep both entries
            self._entries[entry.id] = entry
            self._publish()
        return entry.id

    def add(self, statement: str, script: BashScript,
            provenance: Provenance = Provenance.APPROVED,
            source_outcome_id: str | None = None,
            created_at: str | None = None) -> str:
        return self.upsert(self.make_entry(statement, script, provenance,
                                           source_outcome_id, created_at))

    # -- retrieval ------------------------------------------------------------

    def retrieve(self, statement: str, k: int = 5, *, alpha: float | None = None,
                 mode: ScoreMode | None = None,
                 threshold: float | None = None) -> RetrievalResult:
        """Score the statement against every entry; top-k by total, ties by id.

        An empty catalogue yields an empty result with the confidence flag
        down; that is a normal state, not an error.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        snapshot = self._snapshot
        if not snapshot:
            return RetrievalResult(hits=(), high_confidence=False)
        alpha = self.cfg.alpha if alpha is None else alpha
        mode = self.cfg.score_mode if mode is None else mode
        threshold = self.cfg.threshold if threshold is None else threshold
        query = ActionKey.build(statement, self.cfg.dim)
        scored = [(entry, match_score(query, entry.key, alpha, mode))
                  for entry in snapshot]
        scored.sort(key=lambda pair: (-pair[1].total, pair[0].id))
        return RetrievalResult(
            hits=tuple(scored[:k]),
            high_confidence=scored[0][1].total > threshold,
        )

    # -- persistence ------------------------------------------------------------

    def save(self, path: str | Path) -> None:
        path = Path(path)
        tmp = path.with_suffix(path.suffix + ".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            for entry in self._snapshot:
                fh.write(json.dumps(entry.to_record(), sort_keys=True) + "\n")
        tmp.replace(path)

    @classmethod
    def load(cls, path: str | Path, cfg: CatalogueConfig | None = None) -> "Catalogue":
        cat = cls(cfg)
        path = Path(path)
        if not path.exists():
            return cat
        with open(path, encoding="utf-8") as fh:
            with cat._lock:
                for raw in fh:
                    raw = raw.strip()
                    if not raw:
                        continue
                    rec = json.loads(raw)
                    entry = cat._entry_from_record(rec)
                    cat._entries[entry.id] = entry
                cat._publish()
        return cat

    def _entry_from_record(self, rec: dict) -> CatalogueEntry:
        dim = int(rec.get("dim", self.cfg.dim))
        statement = str(rec["statement"])
        residual = str(rec.get("residual", statement))
        entities = tuple(Entity(str(n), None if v is None else float(v))
                         for n, v in rec.get("entities", []))
        if rec.get("embedder", EMBEDDER_ID) == EMBEDDER_ID:
            # Recompute instead of trusting the 32-bit stored vector: the
            # embedder is deterministic, and float64 keeps norms exact.
            text = residual if residual.strip() else statement
            vec = embed(text, dim)
        else:
            raw = np.frombuffer(base64.b64decode(rec["embedding"]), dtype="<f4")
            vec = raw.astype(np.float64)
            norm = float(np.linalg.norm(vec))
            vec = vec / norm if norm else vec
        key = ActionKey(statement=statement, residual=residual,
                        embedding=vec, entities=entities)
        return CatalogueEntry(
            id=str(rec["id"]),
            key=key,
            script=BashScript(str(rec["script"])),
            provenance=Provenance(rec["provenance"]),
            created_at=str(rec.get("created_at", "")),
            source_outcome_id=rec.get("source_outcome_id"),
        )
