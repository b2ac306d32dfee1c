"""Pair forward and reverse transcripts into a requirements report.

Each reverse segment is mapped into forward time and matched to the forward
segment it overlaps most. Label pairs are tagged congruent, incongruent, or
expansive via a small synonym/antonym lexicon; incongruent pairs are flagged
for human review, never silently dropped.
"""

import json
from dataclasses import dataclass

from .errors import LexiconFormatError, ReportFormatError
from .recognizer import SegmentHypothesis, Transcript

REPORT_FORMAT_VERSION = "srs-v1"

CATEGORY_CONGRUENT = "congruent"
CATEGORY_INCONGRUENT = "incongruent"
CATEGORY_EXPANSIVE = "expansive"
CATEGORY_UNMATCHED = "unmatched"

_NEGATION_PREFIXES = ("not_", "not-", "no_", "no-")

DEFAULT_LEXICON_ROWS = [
    ("accept", "antonym-of", "reject"),
    ("allow", "antonym-of", "deny"),
    ("enable", "antonym-of", "disable"),
    ("start", "antonym-of", "stop"),
    ("login", "antonym-of", "logout"),
    ("open", "antonym-of", "close"),
    ("delete", "synonym-of", "remove"),
    ("signin", "synonym-of", "login"),
]


class Lexicon:
    """Symmetric word-relation table: synonym-of / antonym-of entries."""

    def __init__(self, rows=()):
        self._relations: dict[frozenset, str] = {}
        for left, relation, right in rows:
            self.add(left, relation, right)

    def add(self, left: str, relation: str, right: str) -> None:
        if relation not in ("synonym-of", "antonym-of"):
            raise LexiconFormatError(f"unknown relation {relation!r}")
        self._relations[frozenset((left, right))] = relation.split("-")[0]

    def relation(self, a: str, b: str) -> str | None:
        """'synonym', 'antonym', or None; negation-marked labels are antonyms."""
        found = self._relations.get(frozenset((a, b)))
        if found is not None:
            return found
        if _strip_negation(a) == b or _strip_negation(b) == a:
            return "antonym"
        return None

    @classmethod
    def from_text(cls, text: str) -> "Lexicon":
        lexicon = cls()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 3 or not all(parts):
                raise LexiconFormatError(
                    f"line {lineno}: expected 'word, relation, word', got {raw!r}"
                )
            lexicon.add(parts[0], parts[1], parts[2])
        return lexicon

    @classmethod
    def from_file(cls, path) -> "Lexicon":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    @classmethod
    def default(cls) -> "Lexicon":
        return cls(DEFAULT_LEXICON_ROWS)


def _strip_negation(label: str) -> str:
    for prefix in _NEGATION_PREFIXES:
        if label.startswith(prefix) and len(label) > len(prefix):
            return label[len(prefix) :]
    return label


@dataclass
class ReversalPair:
    forward_segment: SegmentHypothesis
    reverse_segment: SegmentHypothesis | None
    category: str | None = None
    note: str = ""

    def __post_init__(self):
        if (self.reverse_segment is None) != (self.category == CATEGORY_UNMATCHED):
            raise ValueError("category is 'unmatched' exactly when reverse is absent")


@dataclass
class Requirement:
    id: str
    text: str
    labels: list[str]
    start_s: float
    end_s: float
    score: float


@dataclass
class SrsReport:
    source_file: str
    requirements: list[Requirement]
    pairs: list[ReversalPair]
    flagged: list[ReversalPair]
    tool_config_fingerprint: str
    timestamp: str = ""


def _mirror(seg: SegmentHypothesis, duration: float) -> tuple[float, float]:
    return duration - seg.end_s, duration - seg.start_s


def pair_segments(fwd: Transcript, rev: Transcript) -> list[ReversalPair]:
    """Match every reverse segment to the forward segment of maximal overlap.

    Reverse times are mirrored into forward time first. A reverse segment
    with no overlap pairs with the nearest forward segment and says so in
    its note. Forward segments no reverse segment chose become unmatched
    pairs, so the report accounts for every segment on both sides.
    """
    if abs(fwd.source_duration_s - rev.source_duration_s) > 1e-3:
        raise ValueError(
            f"transcript durations differ: {fwd.source_duration_s} vs "
            f"{rev.source_duration_s}"
        )
    duration = fwd.source_duration_s

    pairs = []
    used = set()
    for rseg in rev.segments:
        lo, hi = _mirror(rseg, duration)
        best_idx, best_overlap, best_gap = None, -1.0, float("inf")
        for idx, fseg in enumerate(fwd.segments):
            overlap = max(0.0, min(fseg.end_s, hi) - max(fseg.start_s, lo))
            gap = max(fseg.start_s - hi, lo - fseg.end_s, 0.0)
            if overlap > best_overlap or (overlap == best_overlap and gap < best_gap):
                best_idx, best_overlap, best_gap = idx, overlap, gap
        if best_idx is None:
            continue  # no forward segments at all; nothing to pair against
        note = "" if best_overlap > 0 else "no temporal overlap; paired with nearest"
        used.add(best_idx)
        pairs.append(ReversalPair(fwd.segments[best_idx], rseg, None, note))

    for idx, fseg in enumerate(fwd.segments):
        if idx not in used:
            pairs.append(
                ReversalPair(fseg, None, CATEGORY_UNMATCHED, "no reverse counterpart")
            )
    return pairs


def categorize(pair: ReversalPair, lexicon: Lexicon) -> str:
    """congruent on same/synonym labels, incongruent on antonyms, else expansive."""
    if pair.reverse_segment is None:
        raise ValueError("cannot categorize a pair without a reverse segment")
    fwd_label = pair.forward_segment.label
    rev_label = pair.reverse_segment.label
    if fwd_label == rev_label:
        return CATEGORY_CONGRUENT
    relation = lexicon.relation(fwd_label, rev_label)
    if relation == "synonym":
        return CATEGORY_CONGRUENT
    if relation == "antonym":
        return CATEGORY_INCONGRUENT
    return CATEGORY_EXPANSIVE


def build_report(
    fwd: Transcript, rev: Transcript, lexicon: Lexicon, meta: dict
) -> SrsReport:
    """Assemble requirements, categorized pairs, and the flagged subset.

    meta supplies source_file, tool_config_fingerprint, and timestamp, so
    identical inputs always produce an identical report.
    """
    pairs = pair_segments(fwd, rev)
    for pair in pairs:
        if pair.reverse_segment is not None:
            pair.category = categorize(pair, lexicon)
    flagged = [p for p in pairs if p.category == CATEGORY_INCONGRUENT]

    requirements = [
        Requirement(
            id=f"R-{idx:03d}",
            text=seg.label,
            labels=[seg.label],
            start_s=seg.start_s,
            end_s=seg.end_s,
            score=seg.score,
        )
        for idx, seg in enumerate(fwd.segments, start=1)
    ]
    return SrsReport(
        source_file=meta.get("source_file", ""),
        requirements=requirements,
        pairs=pairs,
        flagged=flagged,
        tool_config_fingerprint=meta.get("tool_config_fingerprint", ""),
        timestamp=meta.get("timestamp", ""),
    )


def _segment_dict(seg: SegmentHypothesis) -> dict:
    return {
        "start_s": seg.start_s,
        "end_s": seg.end_s,
        "label": seg.label,
        "score": seg.score,
        "margin": seg.margin,
        "direction": seg.direction,
    }


def _segment_from_dict(data: dict) -> SegmentHypothesis:
    return SegmentHypothesis(
        data["start_s"],
        data["end_s"],
        data["label"],
        data["score"],
        data["margin"],
        data["direction"],
    )


def _span(seg: SegmentHypothesis) -> str:
    return f"{seg.start_s:.3f}-{seg.end_s:.3f} s"


def render(report: SrsReport, fmt: str = "markdown") -> str:
    """Render as human-readable markdown or a lossless structured document."""
    if fmt == "structured":
        payload = {
            "format": REPORT_FORMAT_VERSION,
            "source_file": report.source_file,
            "timestamp": report.timestamp,
            "tool_config_fingerprint": report.tool_config_fingerprint,
            "requirements": [
                {
                    "id": r.id,
                    "text": r.text,
                    "labels": r.labels,
                    "start_s": r.start_s,
                    "end_s": r.end_s,
                    "score": r.score,
                }
                for r in report.requirements
            ],
            "pairs": [
                {
                    "forward": _segment_dict(p.forward_segment),
                    "reverse": None
                    if p.reverse_segment is None
                    else _segment_dict(p.reverse_segment),
                    "category": p.category,
                    "note": p.note,
                }
                for p in report.pairs
            ],
            "flagged": [
                i
                for i, p in enumerate(report.pairs)
                if any(p is flagged for flagged in report.flagged)
            ],
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    if fmt != "markdown":
        raise ValueError(f"unknown render format {fmt!r}")

    lines = [
        "# Software Requirements Report",
        "",
        "## Header",
        "",
        f"- Source: {report.source_file}",
        f"- Config fingerprint: {report.tool_config_fingerprint}",
        f"- Generated: {report.timestamp}",
        "",
        "## Functional Requirements",
        "",
        "| ID | Requirement | Time span | Score |",
        "|----|-------------|-----------|-------|",
    ]
    for r in report.requirements:
        lines.append(
            f"| {r.id} | {r.text} | {r.start_s:.3f}-{r.end_s:.3f} s | {r.score:.4f} |"
        )
    lines += ["", "## Reversal Analysis", ""]
    for p in report.pairs:
        fwd = p.forward_segment
        if p.reverse_segment is None:
            lines.append(
                f"- forward '{fwd.label}' ({_span(fwd)}): {p.category}; {p.note}"
            )
        else:
            rev = p.reverse_segment
            detail = f"; {p.note}" if p.note else ""
            lines.append(
                f"- forward '{fwd.label}' ({_span(fwd)}) with reverse "
                f"'{rev.label}' ({_span(rev)} in reversed time): {p.category}{detail}"
            )
    lines += ["", "## Flagged Inconsistencies", ""]
    if not report.flagged:
        lines.append("None detected.")
    else:
        for p in report.flagged:
            lines.append(
                f"- forward '{p.forward_segment.label}' ({_span(p.forward_segment)}) "
                f"contradicted by reverse '{p.reverse_segment.label}'"
            )
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> SrsReport:
    """Rebuild a report from its structured rendering."""
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ReportFormatError(f"not valid structured text: {exc}") from exc
    if payload.get("format") != REPORT_FORMAT_VERSION:
        raise ReportFormatError(
            f"expected format {REPORT_FORMAT_VERSION!r}, got {payload.get('format')!r}"
        )
    try:
        requirements = [Requirement(**r) for r in payload["requirements"]]
        pairs = [
            ReversalPair(
                _segment_from_dict(p["forward"]),
                None if p["reverse"] is None else _segment_from_dict(p["reverse"]),
                p["category"],
                p["note"],
            )
            for p in payload["pairs"]
        ]
        flagged = [pairs[i] for i in payload["flagged"]]
    except (KeyError, TypeError, IndexError) as exc:
        raise ReportFormatError(f"malformed report document: {exc}") from exc
    return SrsReport(
        source_file=payload["source_file"],
        requirements=requirements,
        pairs=pairs,
        flagged=flagged,
        tool_config_fingerprint=payload["tool_config_fingerprint"],
        timestamp=payload["timestamp"],
    )
