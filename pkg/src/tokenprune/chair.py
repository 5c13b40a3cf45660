"""Caption hallucination metrics over an object lexicon.

Captions are scanned for lexicon phrases (longest match first, so a
compound like "hot dog" is never double-counted as "dog"), mapped to
canonical object names, and compared against per-caption ground-truth
object sets. Instance-level and sentence-level hallucination rates use set
semantics per caption; recall is a corpus-level ratio.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
import re

from .errors import EmptyCorpus, InvalidValue

_WORD = re.compile(r"[a-z0-9']+")


def _tokenize(text: str) -> list[str]:
    return _WORD.findall(text.lower())


@dataclass(frozen=True, eq=False)
class ObjectLexicon:
    """Canonical object names plus surface-form synonyms, matched
    case-insensitively on word boundaries."""

    objects: frozenset[str]
    synonyms: dict[str, str]

    def __post_init__(self):
        objects = frozenset(" ".join(_tokenize(o)) for o in self.objects)
        if not objects or "" in objects:
            raise InvalidValue("lexicon needs at least one non-empty object name")
        synonyms = {}
        for surface, canonical in self.synonyms.items():
            s = " ".join(_tokenize(surface))
            c = " ".join(_tokenize(canonical))
            if not s:
                raise InvalidValue(f"empty synonym surface form {surface!r}")
            if c not in objects:
                raise InvalidValue(f"synonym {surface!r} maps to unknown object {canonical!r}")
            synonyms[s] = c
        index = {tuple(o.split()): o for o in objects}
        for s, c in synonyms.items():
            index[tuple(s.split())] = c
        object.__setattr__(self, "objects", objects)
        object.__setattr__(self, "synonyms", synonyms)
        object.__setattr__(self, "_phrase_index", index)
        object.__setattr__(self, "_max_phrase", max(len(p) for p in index))

    @classmethod
    def from_dict(cls, mapping: dict) -> "ObjectLexicon":
        """Build from a flat surface -> canonical map; the canonical set is
        the set of map values, and identity entries are implied."""
        if not isinstance(mapping, dict) or not mapping:
            raise InvalidValue("lexicon mapping must be a non-empty JSON object")
        objects = frozenset(str(v) for v in mapping.values())
        synonyms = {str(k): str(v) for k, v in mapping.items() if str(k) != str(v)}
        return cls(objects=objects, synonyms=synonyms)

    def to_dict(self) -> dict:
        out = {o: o for o in sorted(self.objects)}
        out.update(dict(sorted(self.synonyms.items())))
        return out


def extract_objects(caption: str, lexicon: ObjectLexicon) -> frozenset[str]:
    """Canonical objects mentioned in a caption.

    The caption is lowercased and tokenized on word characters; lexicon
    phrases are matched greedily left to right, longest phrase first, and
    matched words are consumed so overlapping shorter phrases do not fire.
    """
    words = _tokenize(caption)
    index = lexicon._phrase_index
    longest = lexicon._max_phrase
    found = set()
    i = 0
    while i < len(words):
        for span in range(min(longest, len(words) - i), 0, -1):
            hit = index.get(tuple(words[i : i + span]))
            if hit is not None:
                found.add(hit)
                i += span
                break
        else:
            i += 1
    return frozenset(found)


@dataclass(frozen=True)
class CaptionRecord:
    """One generated caption with its ground-truth objects and, once
    extracted, the canonical objects it mentions."""

    caption_text: str
    gt_objects: frozenset[str]
    mentioned_objects: frozenset[str] | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "gt_objects", frozenset(" ".join(_tokenize(o)) for o in self.gt_objects)
        )
        if self.mentioned_objects is not None:
            object.__setattr__(self, "mentioned_objects", frozenset(self.mentioned_objects))

    def with_mentions(self, lexicon: ObjectLexicon) -> "CaptionRecord":
        return replace(self, mentioned_objects=extract_objects(self.caption_text, lexicon))


@dataclass(frozen=True)
class ChairReport:
    """Corpus hallucination summary.

    chair_i is the share of mentioned objects (counted once per caption)
    absent from that caption's ground truth; chair_s is the share of
    captions containing at least one such object. Ratios whose denominator
    was zero are reported as 0 with the matching flag set.
    """

    chair_s: float
    chair_i: float
    recall: float
    mean_len: float
    n_captions: int
    no_mentions: bool = False
    no_gt: bool = False

    def __post_init__(self):
        if self.n_captions < 1:
            raise EmptyCorpus("report requires at least one caption")
        for name in ("chair_s", "chair_i", "recall"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise InvalidValue(f"{name} must be in [0, 1], got {v}")
        if self.mean_len < 0.0:
            raise InvalidValue(f"mean_len must be >= 0, got {self.mean_len}")

    def to_dict(self) -> dict:
        return {
            "chair_s": self.chair_s,
            "chair_i": self.chair_i,
            "recall": self.recall,
            "mean_len": self.mean_len,
            "n_captions": self.n_captions,
            "no_mentions": self.no_mentions,
            "no_gt": self.no_gt,
        }


def chair_metrics(records) -> ChairReport:
    """Aggregate hallucination metrics over caption records.

    Every record must already carry mentioned_objects (see
    CaptionRecord.with_mentions). Per caption, hallucinated objects are
    mentioned_objects minus gt_objects; instance counting is per caption
    per distinct object. Recall sums hits and ground-truth sizes over the
    corpus before dividing, so empty-GT captions simply contribute nothing.

    Raises:
        EmptyCorpus: no records.
        InvalidValue: a record is missing mentioned_objects.
    """
    records = list(records)
    if not records:
        raise EmptyCorpus("no caption records")
    total_mentions = 0
    hall_mentions = 0
    hall_captions = 0
    recall_num = 0
    recall_den = 0
    word_counts = []
    for rec in records:
        if rec.mentioned_objects is None:
            raise InvalidValue("record has no mentioned_objects; extract first")
        hall = rec.mentioned_objects - rec.gt_objects
        total_mentions += len(rec.mentioned_objects)
        hall_mentions += len(hall)
        if hall:
            hall_captions += 1
        recall_num += len(rec.gt_objects & rec.mentioned_objects)
        recall_den += len(rec.gt_objects)
        word_counts.append(len(rec.caption_text.split()))
    return ChairReport(
        chair_s=hall_captions / len(records),
        chair_i=hall_mentions / total_mentions if total_mentions else 0.0,
        recall=recall_num / recall_den if recall_den else 0.0,
        mean_len=sum(word_counts) / len(records),
        n_captions=len(records),
        no_mentions=total_mentions == 0,
        no_gt=recall_den == 0,
    )
