"""Recovery of structured content from noisy generator output.

Three parsers live here: multi-strategy JSON extraction for orchestrator turns,
schema mapping of routing documents, and token scanning for specialist verdicts.
All functions are pure.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from typing import Any, Optional

from .domain import (
    AgentVerdict,
    Decision,
    RedFlag,
    RoutingDecision,
    UnknownAgentName,
    Vignette,
    parse_red_flag,
    validate_routing,
)


class NoJsonFound(ValueError):
    """No extraction strategy yielded a parseable JSON document."""


class SchemaUnusable(ValueError):
    """A document was recovered but has no interpretable 'next' member."""


class Strategy(enum.Enum):
    STRICT = "STRICT"
    FENCED_BLOCK = "FENCED_BLOCK"
    BRACE_SPAN = "BRACE_SPAN"
    REPAIRED = "REPAIRED"


@dataclass(frozen=True)
class RecoveryOutcome:
    value: Any
    strategy_used: Strategy
    original_length: int
    extracted_span: tuple[int, int]


_FENCE_RE = re.compile(r"```[A-Za-z0-9_+-]*[ \t]*\r?\n?(.*?)```", re.DOTALL)


def _balanced_brace_span(text: str, start: int) -> Optional[int]:
    """Return the index just past the `}` balancing text[start] == '{', or None.

    Braces inside string literals are ignored; backslash escapes are honored.
    """
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return i + 1
    return None


def repair_json_text(text: str) -> str:
    """Apply the bounded repair set: trailing commas, single-quoted strings, line comments.

    Nothing more aggressive is attempted; repair must never invent content.
    """
    out: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == '"':  # copy a double-quoted string verbatim
            out.append(ch)
            i += 1
            while i < n:
                out.append(text[i])
                if text[i] == "\\" and i + 1 < n:
                    out.append(text[i + 1])
                    i += 2
                    continue
                if text[i] == '"':
                    i += 1
                    break
                i += 1
            continue
        if ch == "'":  # convert a single-quoted string to double-quoted
            out.append('"')
            i += 1
            while i < n:
                c = text[i]
                if c == "\\" and i + 1 < n:
                    nxt = text[i + 1]
                    if nxt == "'":
                        out.append("'")
                    else:
                        out.append(c)
                        out.append(nxt)
                    i += 2
                    continue
                if c == "'":
                    i += 1
                    break
                if c == '"':
                    out.append('\\"')
                else:
                    out.append(c)
                i += 1
            out.append('"')
            continue
        if ch == "/" and i + 1 < n and text[i + 1] == "/":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == ",":
            # drop the comma when the next significant character closes a container
            j = i + 1
            while j < n and text[j] in " \t\r\n":
                j += 1
            if j < n and text[j] in "]}":
                i += 1
                continue
        out.append(ch)
        i += 1
    return "".join(out)


def extract_json(raw: str) -> RecoveryOutcome:
    """Extract a JSON document from raw text, least-invasive strategy first.

    Order: STRICT parse of the trimmed input, then fenced code blocks, then
    balanced brace spans, then the bounded repair set applied to brace-span
    candidates. Raises NoJsonFound when nothing parses.
    """
    original_length = len(raw)
    stripped = raw.strip()
    if stripped:
        lead = len(raw) - len(raw.lstrip())
        try:
            value = json.loads(stripped)
        except json.JSONDecodeError:
            pass
        else:
            return RecoveryOutcome(value, Strategy.STRICT, original_length, (lead, lead + len(stripped)))

    for m in _FENCE_RE.finditer(raw):
        body = m.group(1)
        inner = body.strip()
        if not inner:
            continue
        try:
            value = json.loads(inner)
        except json.JSONDecodeError:
            continue
        lead = len(body) - len(body.lstrip())
        start = m.start(1) + lead
        return RecoveryOutcome(value, Strategy.FENCED_BLOCK, original_length, (start, start + len(inner)))

    candidates: list[tuple[int, int]] = []
    pos = raw.find("{")
    while pos != -1:
        end = _balanced_brace_span(raw, pos)
        if end is not None:
            span_text = raw[pos:end]
            try:
                value = json.loads(span_text)
            except json.JSONDecodeError:
                candidates.append((pos, end))
            else:
                return RecoveryOutcome(value, Strategy.BRACE_SPAN, original_length, (pos, end))
        pos = raw.find("{", pos + 1)

    for start, end in candidates:
        repaired = repair_json_text(raw[start:end])
        try:
            value = json.loads(repaired)
        except json.JSONDecodeError:
            continue
        return RecoveryOutcome(value, Strategy.REPAIRED, original_length, (start, end))

    raise NoJsonFound(f"no parseable JSON in {original_length} chars of output")


def parse_routing(
    raw: str,
    note: Optional[Vignette] = None,
    strict_evidence: bool = False,
) -> tuple[RoutingDecision, list[str]]:
    """Recover a RoutingDecision from raw orchestrator output.

    Tolerates a bare-string 'next', unknown agent names, duplicates, and missing
    'why'/'evidence', each downgraded to a warning. Raises NoJsonFound or
    SchemaUnusable when no usable document exists.
    """
    outcome = extract_json(raw)
    doc = outcome.value
    if not isinstance(doc, dict) or "next" not in doc:
        raise SchemaUnusable("document has no 'next' member")

    warnings: list[str] = []
    next_val = doc["next"]
    if isinstance(next_val, str):
        warnings.append(f"CoercedScalarNext: 'next' was a bare string {next_val!r}")
        next_val = [next_val]
    if not isinstance(next_val, list):
        raise SchemaUnusable(f"'next' is not an array or string: {type(next_val).__name__}")

    targets: list[RedFlag] = []
    for item in next_val:
        if not isinstance(item, str):
            warnings.append(f"NonStringNext: dropped non-string entry {item!r}")
            continue
        try:
            flag = parse_red_flag(item)
        except UnknownAgentName:
            warnings.append(f"UnknownAgentName: dropped routing target {item!r}")
            continue
        if flag in targets:
            warnings.append(f"DuplicateAgent: {flag.value!r} named more than once")
            continue
        targets.append(flag)

    why = doc.get("why")
    if not isinstance(why, str):
        warnings.append("MissingWhy: no usable 'why' member, defaulted to empty")
        why = ""
    evidence_val = doc.get("evidence")
    if isinstance(evidence_val, str):
        evidence = [evidence_val]
    elif isinstance(evidence_val, list):
        evidence = [e for e in evidence_val if isinstance(e, str)]
    else:
        warnings.append("MissingEvidence: no usable 'evidence' member, defaulted to empty")
        evidence = []

    decision = RoutingDecision(next=targets, why=why, evidence=evidence)
    warnings.extend(validate_routing(decision, note, strict_evidence))
    return decision, warnings


_TOKEN_RE = re.compile(r"\b(yes|no)\b", re.IGNORECASE)
_QUOTED_RE = re.compile(r'"([^"]+)"')
_LEADING_PUNCT = " \t\r\n.,:;!—–-"


def parse_verdict(raw: str, flag: RedFlag) -> AgentVerdict:
    """Turn raw specialist output into a verdict. Total: never raises.

    The first standalone YES/NO token wins; the remainder is the rationale and
    double-quoted substrings within it become the evidence list. No token means
    an ERROR verdict.
    """
    m = _TOKEN_RE.search(raw)
    if m is None:
        return AgentVerdict(
            flag=flag,
            decision=Decision.ERROR,
            raw=raw,
            error_detail="no YES/NO token",
        )
    decision = Decision.YES if m.group(1).lower() == "yes" else Decision.NO
    rationale = raw[m.end():].lstrip(_LEADING_PUNCT).rstrip()
    evidence = _QUOTED_RE.findall(rationale)
    return AgentVerdict(flag=flag, decision=decision, rationale=rationale, evidence=evidence, raw=raw)


_BASELINE_LINE_RE = re.compile(
    r"^[^A-Za-z_]*([A-Za-z_]+)\s*:\s*(yes|no)\b[\s.,:;!—–-]*(.*)$", re.IGNORECASE
)


def parse_baseline(raw: str) -> dict[RedFlag, AgentVerdict]:
    """Parse the single-LLM response: one `<wire_name>: YES|NO` line per flag.

    Flags with no parseable line become ERROR verdicts so that every baseline
    run still yields exactly seven verdicts.
    """
    verdicts: dict[RedFlag, AgentVerdict] = {}
    for line in raw.splitlines():
        m = _BASELINE_LINE_RE.match(line)
        if m is None:
            continue
        try:
            flag = parse_red_flag(m.group(1))
        except UnknownAgentName:
            continue
        if flag in verdicts:
            continue
        decision = Decision.YES if m.group(2).lower() == "yes" else Decision.NO
        rationale = m.group(3).strip()
        verdicts[flag] = AgentVerdict(
            flag=flag,
            decision=decision,
            rationale=rationale,
            evidence=_QUOTED_RE.findall(rationale),
            raw=line,
        )
    for flag in RedFlag:
        if flag not in verdicts:
            verdicts[flag] = AgentVerdict(
                flag=flag,
                decision=Decision.ERROR,
                raw=raw,
                error_detail="missing or unparseable line",
            )
    return verdicts
