"""Turn raw TeX source trees and Stack Exchange data dumps into standalone,
caption-aligned, compilable TikZ records."""

from __future__ import annotations

import hashlib
import html
import json
import logging
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, IO, Iterable, Iterator, Optional

from .errors import CycleDetected, UnbalancedEnvironment

log = logging.getLogger(__name__)

INCLUDE_DEPTH_CAP = 16

REPLACEMENT_CHAR = "\ufffd"


class Origin(str, Enum):
    ARXIV = "arxiv"
    STACKEXCHANGE = "stackexchange"
    CURATED = "curated"
    ARTIFICIAL = "artificial"


class MacroKind(str, Enum):
    DEF = "def"
    NEWCOMMAND = "newcommand"
    NEWENVIRONMENT = "newenvironment"
    OTHER = "other"


@dataclass
class TexProject:
    """One TeX source tree: a root file plus its sibling files."""

    root_file: str
    files: dict[str, str]
    origin: Origin = Origin.ARXIV

    def __post_init__(self):
        if self.root_file not in self.files:
            raise ValueError(f"root file {self.root_file!r} not in project files")


@dataclass
class MacroDef:
    name: str  # backslash-prefixed command token, or env name for environments
    body: str  # full definition text, emitted verbatim into assembled docs
    kind: MacroKind = MacroKind.OTHER


@dataclass
class EnvSpan:
    """One outermost tikzpicture environment with its byte span."""

    code: str
    start: int
    end: int


@dataclass
class TikzRecord:
    id: str
    caption: str
    code: str
    origin: str
    license: str = ""
    augmented: bool = False
    created: Optional[str] = None  # ISO-8601 date or None

    def to_json(self) -> str:
        return json.dumps(
            {
                "id": self.id,
                "caption": self.caption,
                "code": self.code,
                "origin": self.origin,
                "license": self.license,
                "augmented": self.augmented,
                "created": self.created,
            },
            ensure_ascii=False,
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> "TikzRecord":
        d = json.loads(line)
        return cls(
            id=d["id"],
            caption=d["caption"],
            code=d["code"],
            origin=d["origin"],
            license=d.get("license", ""),
            augmented=bool(d.get("augmented", False)),
            created=d.get("created"),
        )


def record_id(code: str) -> str:
    """Deterministic record id: sha256 of the code bytes."""
    return hashlib.sha256(code.encode("utf-8")).hexdigest()[:16]


def decode_lossy(data: bytes) -> tuple[str, int]:
    """UTF-8 decode with replacement; returns text and replacement count."""
    text = data.decode("utf-8", errors="replace")
    return text, text.count(REPLACEMENT_CHAR)


# ---------------------------------------------------------------------------
# include expansion

_INCLUDE_RE = re.compile(r"\\(?:input|include)\{([^}]+)\}")


def _resolve(name: str, files: dict[str, str]) -> Optional[str]:
    for candidate in (name, name + ".tex"):
        if candidate in files:
            return candidate
    return None


def expand_includes(
    project: TexProject, report: Optional[list[str]] = None
) -> str:
    """Recursively replace resolvable \\input/\\include directives with file
    content followed by a single space.

    Unresolvable directives are left in place and reported. Raises
    CycleDetected when expansion recurses past the depth cap.
    """

    def expand(name: str, stack: tuple[str, ...]) -> str:
        if len(stack) > INCLUDE_DEPTH_CAP:
            raise CycleDetected(
                f"include depth exceeded {INCLUDE_DEPTH_CAP}: {' -> '.join(stack)}"
            )
        text = project.files[name]

        def sub(m: re.Match) -> str:
            target = _resolve(m.group(1).strip(), project.files)
            if target is None:
                if report is not None:
                    report.append(m.group(0))
                log.warning("unresolvable include %s in %s", m.group(0), name)
                return m.group(0)
            if target in stack:
                raise CycleDetected(
                    f"include cycle: {' -> '.join(stack + (target,))}"
                )
            # single trailing space approximates TeX's \input token boundary
            return expand(target, stack + (target,)) + " "

        return _INCLUDE_RE.sub(sub, text)

    return expand(project.root_file, (project.root_file,))


# ---------------------------------------------------------------------------
# environment extraction

_ENV_TOKEN_RE = re.compile(r"\\(begin|end)\{tikzpicture\}")


def extract_tikz_environments(
    tex: str, report: Optional[list[str]] = None
) -> list[EnvSpan]:
    """Return every outermost tikzpicture environment span, in document
    order. Nested environments stay inside their outermost span. A begin
    without a matching end is skipped and reported."""
    spans = []
    depth = 0
    start = None
    for m in _ENV_TOKEN_RE.finditer(tex):
        if m.group(1) == "begin":
            if depth == 0:
                start = m.start()
            depth += 1
        else:
            if depth == 0:
                continue  # stray \end, ignore
            depth -= 1
            if depth == 0:
                spans.append(EnvSpan(tex[start : m.end()], start, m.end()))
                start = None
    if depth > 0 and start is not None:
        msg = f"unbalanced tikzpicture environment at byte {start}"
        if report is not None:
            report.append(msg)
        log.warning("%s", UnbalancedEnvironment(msg))
    return spans


# ---------------------------------------------------------------------------
# macro parsing and dependency closure

_DEF_RE = re.compile(r"\\(?:def|gdef|edef)\s*(\\[a-zA-Z@]+)")
_NEWCMD_RE = re.compile(
    r"\\(newcommand|renewcommand|providecommand)\s*\*?\s*\{?(\\[a-zA-Z@]+)\}?"
)
_NEWENV_RE = re.compile(r"\\(newenvironment|renewenvironment)\s*\*?\s*\{([^}]+)\}")


def _balanced_end(text: str, open_idx: int) -> int:
    """Index one past the brace group starting at text[open_idx] == '{'."""
    depth = 0
    i = open_idx
    while i < len(text):
        c = text[i]
        if c == "\\":
            i += 2
            continue
        if c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth == 0:
                return i + 1
        i += 1
    return len(text)


def _definition_span(text: str, def_start: int, n_groups: int) -> int:
    """End index of a definition: skips optional [..] args, then consumes
    n_groups brace-balanced groups."""
    i = def_start
    consumed = 0
    while consumed < n_groups and i < len(text):
        c = text[i]
        if c in " \t\n":
            i += 1
        elif c == "[":
            j = text.find("]", i)
            i = len(text) if j < 0 else j + 1
        elif c == "{":
            i = _balanced_end(text, i)
            consumed += 1
        else:
            break
    return i


def parse_macro_definitions(tex: str) -> tuple[list[MacroDef], int]:
    """Parse \\def, \\newcommand, \\renewcommand, \\providecommand and
    \\newenvironment definitions with brace-balanced bodies.

    Later redefinitions replace earlier ones; the replacement count is
    returned alongside the definitions (order = first-definition order).
    """
    found: list[MacroDef] = []
    redefinitions = 0

    events: list[tuple[int, MacroDef]] = []
    for m in _DEF_RE.finditer(tex):
        end = _definition_span(tex, m.end(), 1)
        events.append(
            (m.start(), MacroDef(m.group(1), tex[m.start() : end], MacroKind.DEF))
        )
    for m in _NEWCMD_RE.finditer(tex):
        end = _definition_span(tex, m.end(), 1)
        events.append(
            (
                m.start(),
                MacroDef(m.group(2), tex[m.start() : end], MacroKind.NEWCOMMAND),
            )
        )
    for m in _NEWENV_RE.finditer(tex):
        end = _definition_span(tex, m.end(), 2)
        events.append(
            (
                m.start(),
                MacroDef(m.group(2), tex[m.start() : end], MacroKind.NEWENVIRONMENT),
            )
        )

    by_name: dict[str, int] = {}
    for _, macro in sorted(events, key=lambda e: e[0]):
        if macro.name in by_name:
            found[by_name[macro.name]] = macro
            redefinitions += 1
        else:
            by_name[macro.name] = len(found)
            found.append(macro)
    return found, redefinitions


def _uses(text: str, macro: MacroDef) -> bool:
    if macro.kind is MacroKind.NEWENVIRONMENT:
        return f"\\begin{{{macro.name}}}" in text
    # command token followed by a non-letter (\foo must not match \foobar)
    return re.search(re.escape(macro.name) + r"(?![a-zA-Z@])", text) is not None


def collect_used_macros(snippet: str, defs: list[MacroDef]) -> list[MacroDef]:
    """Transitive closure of macros whose name occurs in the snippet or in
    the body of another kept macro; definition order preserved."""
    kept: set[str] = set()
    changed = True
    while changed:
        changed = False
        for macro in defs:
            if macro.name in kept:
                continue
            if _uses(snippet, macro) or any(
                _uses(d.body, macro) for d in defs if d.name in kept
            ):
                kept.add(macro.name)
                changed = True
    return [d for d in defs if d.name in kept]


# ---------------------------------------------------------------------------
# preamble retention

@dataclass
class RuleSet:
    """Ordered allow/deny line rules; first match wins, default deny."""

    rules: list[tuple[bool, re.Pattern]] = field(default_factory=list)

    @classmethod
    def from_text(cls, text: str) -> "RuleSet":
        rules = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                verb, pattern = line.split(None, 1)
            except ValueError:
                raise ValueError(f"rule line {lineno}: missing pattern") from None
            if verb not in ("ALLOW", "DENY"):
                raise ValueError(f"rule line {lineno}: unknown verb {verb!r}")
            rules.append((verb == "ALLOW", re.compile(pattern)))
        return cls(rules)

    @classmethod
    def from_file(cls, path: str | Path) -> "RuleSet":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    def allows(self, line: str) -> bool:
        for allow, pattern in self.rules:
            if pattern.search(line):
                return allow
        return False


def default_rules() -> RuleSet:
    data = Path(__file__).parent / "data" / "preamble_rules.txt"
    return RuleSet.from_file(data)


def retain_preamble(preamble: str, rules: RuleSet) -> str:
    """Keep preamble lines matching allow-rules, drop the rest; order
    preserved."""
    kept = [line for line in preamble.splitlines() if rules.allows(line)]
    return "\n".join(kept)


# ---------------------------------------------------------------------------
# document assembly

DOCUMENTCLASS = "\\documentclass{standalone}"


def assemble_document(
    snippet: str, macros: list[MacroDef], preamble: str
) -> str:
    """Emit a deterministic standalone document: documentclass, filtered
    preamble, kept macros in definition order, then the snippet wrapped in a
    document environment."""
    parts = [DOCUMENTCLASS]
    if preamble.strip():
        parts.append(preamble.strip("\n"))
    for macro in macros:
        parts.append(macro.body.strip("\n"))
    parts.append("\\begin{document}")
    parts.append(snippet.strip("\n"))
    parts.append("\\end{document}")
    return "\n".join(parts) + "\n"


def split_preamble(tex: str) -> tuple[str, str]:
    """Split a flattened document at \\begin{document}; returns
    (preamble, body). Documents without one are all body."""
    marker = "\\begin{document}"
    idx = tex.find(marker)
    if idx < 0:
        return "", tex
    return tex[:idx], tex[idx + len(marker) :]


# ---------------------------------------------------------------------------
# project-level extraction

def extract_records(
    project: TexProject,
    rules: Optional[RuleSet] = None,
    caption: str = "",
    license: str = "",
) -> list[TikzRecord]:
    """Full extraction pipeline for one project: flatten, split, parse
    macros, extract environments, assemble one record per outermost
    environment. Records containing replacement characters are rejected."""
    rules = rules or default_rules()
    flat = expand_includes(project)
    preamble_text, body = split_preamble(flat)
    defs, _ = parse_macro_definitions(preamble_text)
    filtered = retain_preamble(preamble_text, rules)
    records = []
    for span in extract_tikz_environments(body):
        macros = collect_used_macros(span.code, defs)
        code = assemble_document(span.code, macros, filtered)
        if REPLACEMENT_CHAR in code:
            log.warning("record rejected: replacement characters in code")
            continue
        records.append(
            TikzRecord(
                id=record_id(code),
                caption=caption,
                code=code,
                origin=project.origin.value,
                license=license,
            )
        )
    return records


def dedupe_records(records: Iterable[TikzRecord]) -> tuple[list[TikzRecord], int]:
    """Drop records whose code hash was already seen; keeps first
    occurrence."""
    seen: set[str] = set()
    unique = []
    dropped = 0
    for rec in records:
        if rec.id in seen:
            dropped += 1
            continue
        seen.add(rec.id)
        unique.append(rec)
    return unique, dropped


def filter_compilable(
    records: Iterable[TikzRecord],
    compile_fn: Callable[[str], "object"],
) -> tuple[list[TikzRecord], int]:
    """Keep records whose document compiles to an image.

    compile_fn takes document text and returns a CompileReport-like object
    with a produced_image attribute (see tikzlab.compiler.make_compile_fn).
    """
    kept = []
    rejected = 0
    for rec in records:
        report = compile_fn(rec.code)
        if report.produced_image:
            kept.append(rec)
        else:
            rejected += 1
    return kept, rejected


# ---------------------------------------------------------------------------
# Stack Exchange ingestion

_TIKZ_ENV_RE = re.compile(r"\\begin\{tikzpicture\}")


@dataclass
class SECandidate:
    question_id: str
    title: str
    body: str
    answers: list[str]  # answer bodies (HTML-unescaped), score >= threshold


def ingest_stackexchange(
    stream: IO[str] | Iterable[str],
    tag: str = "tikz-pgf",
    min_score: int = 1,
) -> tuple[list[SECandidate], int]:
    """Parse a Posts.xml dump stream; returns TikZ-tagged questions paired
    with answers of score >= min_score that contain a tikzpicture
    environment, plus the count of malformed rows skipped.

    Captions are left empty; captioner attachment happens downstream.
    """
    questions: dict[str, SECandidate] = {}
    answers: dict[str, list[str]] = {}
    malformed = 0
    for line in stream:
        line = line.strip()
        if not line.startswith("<row"):
            continue
        try:
            row = ET.fromstring(line)
        except ET.ParseError:
            malformed += 1
            log.warning("malformed dump row skipped")
            continue
        post_type = row.get("PostTypeId")
        if post_type == "1":
            tags = row.get("Tags", "")
            if f"<{tag}>" not in tags and f"|{tag}|" not in tags:
                continue
            qid = row.get("Id", "")
            questions[qid] = SECandidate(
                question_id=qid,
                title=html.unescape(row.get("Title", "")),
                body=html.unescape(row.get("Body", "")),
                answers=[],
            )
        elif post_type == "2":
            try:
                score = int(row.get("Score", "0"))
            except ValueError:
                malformed += 1
                continue
            if score < min_score:
                continue
            body = html.unescape(row.get("Body", ""))
            if not _TIKZ_ENV_RE.search(body):
                continue
            answers.setdefault(row.get("ParentId", ""), []).append(body)
    out = []
    for qid, cand in questions.items():
        cand.answers = answers.get(qid, [])
        if cand.answers:
            out.append(cand)
    return out, malformed


# ---------------------------------------------------------------------------
# JSONL persistence

def write_jsonl(records: Iterable[TikzRecord], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for rec in records:
            f.write(rec.to_json() + "\n")
            n += 1
    return n


def read_jsonl(path: str | Path) -> Iterator[TikzRecord]:
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                yield TikzRecord.from_json(line)
