"""Unified-diff parsing, strict application, generation, and edit statistics.

The patch format is the pipeline's minimal-edit action representation, so the
rules here are deliberately unforgiving: context and removed lines must match
the original byte-for-byte (zero fuzz), and ``\\ No newline at end of file``
markers are honored so that a parse/apply round trip reproduces the target
exactly, including trailing-newline state. Line endings are never normalized;
a ``\\r`` is part of the line's content.
"""

from __future__ import annotations

import difflib
import re
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .core.errors import PatchwrightError

CONTEXT = "context"
ADD = "add"
REMOVE = "remove"

_HUNK_HEADER = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")
_NO_NEWLINE = "\\ No newline at end of file"
_SKIPPABLE_PREFIXES = (
    "diff ",
    "index ",
    "new file mode",
    "deleted file mode",
    "old mode",
    "new mode",
    "similarity index",
    "rename from",
    "rename to",
    "Binary files",
)


class ParseError(PatchwrightError):
    """Malformed diff text; carries the 1-based line number of the offense."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class CountError(PatchwrightError):
    """Hunk header counts disagree with the tagged lines in the body."""


class ApplyError(PatchwrightError):
    """A context or removed line does not match the original at its position."""

    def __init__(self, message: str, hunk: int, line: Optional[int] = None):
        loc = f"hunk {hunk}" + (f", original line {line}" if line is not None else "")
        super().__init__(f"{loc}: {message}")
        self.hunk = hunk
        self.line = line


class RangeError(PatchwrightError):
    """A hunk addresses lines beyond the end of the original file."""


@dataclass(frozen=True)
class HunkLine:
    """One tagged body line; `newline` records whether the source line had one."""

    tag: str
    text: str
    newline: bool = True


@dataclass(frozen=True)
class Hunk:
    original_start: int
    original_count: int
    new_start: int
    new_count: int
    lines: Tuple[HunkLine, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "lines", tuple(self.lines))
        ctx = sum(1 for l in self.lines if l.tag == CONTEXT)
        rem = sum(1 for l in self.lines if l.tag == REMOVE)
        add = sum(1 for l in self.lines if l.tag == ADD)
        if ctx + rem != self.original_count or ctx + add != self.new_count:
            raise CountError(
                f"hunk @@ -{self.original_start},{self.original_count} "
                f"+{self.new_start},{self.new_count} @@ has {ctx} context, "
                f"{rem} removed, {add} added lines"
            )


@dataclass(frozen=True)
class UnifiedDiff:
    """One file's worth of hunks. `source_path` is None for file creation."""

    target_path: Optional[str]
    hunks: Tuple[Hunk, ...] = ()
    source_path: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "hunks", tuple(self.hunks))
        prev_last = 0
        for h in self.hunks:
            if h.original_count > 0:
                first, last = h.original_start, h.original_start + h.original_count - 1
            else:
                # Pure insertion after line original_start consumes nothing.
                first, last = h.original_start + 1, h.original_start
            if first <= prev_last:
                raise CountError("hunks overlap or are out of order")
            prev_last = max(prev_last, last)


def _split_lines(text: str) -> List[Tuple[str, bool]]:
    """Split into (content, has_newline) pairs; content excludes the ``\\n``."""
    if not text:
        return []
    out: List[Tuple[str, bool]] = []
    start = 0
    while True:
        idx = text.find("\n", start)
        if idx == -1:
            out.append((text[start:], False))
            break
        out.append((text[start:idx], True))
        start = idx + 1
        if start == len(text):
            break
    return out


def _join_lines(lines: Sequence[Tuple[str, bool]]) -> str:
    return "".join(content + ("\n" if nl else "") for content, nl in lines)


def _strip_header_path(raw: str) -> Optional[str]:
    # "--- a/foo.py<TAB>timestamp" -> "foo.py"; /dev/null -> None
    path = raw.split("\t")[0].strip()
    if path == "/dev/null":
        return None
    if path.startswith("a/") or path.startswith("b/"):
        path = path[2:]
    return path


def parse_multi_file_diff(text: str) -> List[UnifiedDiff]:
    """Parse a diff covering any number of files into one UnifiedDiff each."""
    lines = text.split("\n")
    # A trailing newline yields one final empty element; drop it.
    if lines and lines[-1] == "":
        lines.pop()

    diffs: List[UnifiedDiff] = []
    i = 0
    n = len(lines)
    while i < n:
        line = lines[i]
        if line.startswith("--- "):
            source = _strip_header_path(line[4:])
            if i + 1 >= n or not lines[i + 1].startswith("+++ "):
                raise ParseError("'---' header without matching '+++'", i + 1)
            target = _strip_header_path(lines[i + 1][4:])
            i += 2
            hunks, i = _parse_hunks(lines, i)
            diffs.append(UnifiedDiff(target_path=target, hunks=tuple(hunks), source_path=source))
        elif line == "" or any(line.startswith(p) for p in _SKIPPABLE_PREFIXES):
            i += 1
        elif line.startswith("@@"):
            raise ParseError("hunk header before any file header", i + 1)
        else:
            raise ParseError(f"unrecognized diff line: {line[:60]!r}", i + 1)
    return diffs


def _parse_hunks(lines: List[str], i: int) -> Tuple[List[Hunk], int]:
    hunks: List[Hunk] = []
    n = len(lines)
    while i < n and lines[i].startswith("@@"):
        m = _HUNK_HEADER.match(lines[i])
        if not m:
            raise ParseError(f"malformed hunk header: {lines[i][:60]!r}", i + 1)
        o_start = int(m.group(1))
        o_count = int(m.group(2)) if m.group(2) is not None else 1
        n_start = int(m.group(3))
        n_count = int(m.group(4)) if m.group(4) is not None else 1
        i += 1

        body: List[HunkLine] = []
        seen_original = 0
        seen_new = 0
        while i < n and (seen_original < o_count or seen_new < n_count):
            raw = lines[i]
            if raw.startswith(_NO_NEWLINE[0]) and raw.rstrip("\r") == _NO_NEWLINE:
                if not body:
                    raise ParseError("no-newline marker before any hunk line", i + 1)
                body[-1] = HunkLine(body[-1].tag, body[-1].text, newline=False)
                i += 1
                continue
            if raw.startswith(" "):
                body.append(HunkLine(CONTEXT, raw[1:]))
                seen_original += 1
                seen_new += 1
            elif raw.startswith("-"):
                body.append(HunkLine(REMOVE, raw[1:]))
                seen_original += 1
            elif raw.startswith("+"):
                body.append(HunkLine(ADD, raw[1:]))
                seen_new += 1
            elif raw == "":
                # Tools sometimes strip the single space off empty context lines.
                body.append(HunkLine(CONTEXT, ""))
                seen_original += 1
                seen_new += 1
            else:
                raise CountError(
                    f"hunk body ended early at line {i + 1}: expected "
                    f"{o_count} original / {n_count} new lines"
                )
            i += 1
        if seen_original != o_count or seen_new != n_count:
            raise CountError(
                f"hunk body exhausted input: got {seen_original}/{o_count} original, "
                f"{seen_new}/{n_count} new lines"
            )
        # Trailing no-newline marker for the final body line.
        if i < n and lines[i].rstrip("\r") == _NO_NEWLINE:
            if not body:
                raise ParseError("no-newline marker before any hunk line", i + 1)
            body[-1] = HunkLine(body[-1].tag, body[-1].text, newline=False)
            i += 1
        hunks.append(Hunk(o_start, o_count, n_start, n_count, tuple(body)))
    return hunks, i


def parse_unified_diff(text: str) -> UnifiedDiff:
    """Parse a diff that touches exactly one file (or nothing at all)."""
    diffs = parse_multi_file_diff(text)
    if not diffs:
        return UnifiedDiff(target_path=None, hunks=())
    if len(diffs) > 1:
        raise ParseError(f"expected a single-file diff, found {len(diffs)} file sections", 1)
    return diffs[0]


def apply_diff(diff: UnifiedDiff, original: str) -> str:
    """Apply strictly: every context/removed line must match byte-for-byte."""
    source = _split_lines(original)
    out: List[Tuple[str, bool]] = []
    cursor = 0  # 0-based index into source

    for idx, hunk in enumerate(diff.hunks, start=1):
        # A zero original count means "insert after line original_start".
        anchor = hunk.original_start - 1 if hunk.original_count > 0 else hunk.original_start
        if anchor < cursor:
            raise ApplyError("hunk overlaps previously applied region", idx)
        if anchor > len(source):
            raise RangeError(
                f"hunk {idx} starts at original line {hunk.original_start}, "
                f"but the file has only {len(source)} lines"
            )
        out.extend(source[cursor:anchor])
        cursor = anchor

        for hline in hunk.lines:
            if hline.tag == ADD:
                out.append((hline.text, hline.newline))
                continue
            if cursor >= len(source):
                raise RangeError(
                    f"hunk {idx} runs past end of file at original line {cursor + 1}"
                )
            actual_text, actual_nl = source[cursor]
            if actual_text != hline.text or actual_nl != hline.newline:
                raise ApplyError(
                    f"expected {hline.text!r}, found {actual_text!r}",
                    idx,
                    cursor + 1,
                )
            if hline.tag == CONTEXT:
                out.append((actual_text, actual_nl))
            cursor += 1

    out.extend(source[cursor:])
    return _join_lines(out)


def diff_stats(diff: UnifiedDiff) -> Tuple[int, int, int]:
    """(added lines, removed lines, touched hunks)."""
    added = sum(1 for h in diff.hunks for l in h.lines if l.tag == ADD)
    removed = sum(1 for h in diff.hunks for l in h.lines if l.tag == REMOVE)
    return added, removed, len(diff.hunks)


def make_unified_diff(original: str, modified: str, path: str, context: int = 3) -> UnifiedDiff:
    """Compute a minimal unified diff turning `original` into `modified`."""
    src = _split_lines(original)
    dst = _split_lines(modified)
    src_units = [t + ("\n" if nl else "") for t, nl in src]
    dst_units = [t + ("\n" if nl else "") for t, nl in dst]

    matcher = difflib.SequenceMatcher(a=src_units, b=dst_units, autojunk=False)
    hunks: List[Hunk] = []
    for group in matcher.get_grouped_opcodes(context):
        body: List[HunkLine] = []
        i1, j1 = group[0][1], group[0][3]
        i2, j2 = group[-1][2], group[-1][4]
        for tag, a1, a2, b1, b2 in group:
            if tag == "equal":
                body.extend(HunkLine(CONTEXT, t, nl) for t, nl in src[a1:a2])
                continue
            if tag in ("replace", "delete"):
                body.extend(HunkLine(REMOVE, t, nl) for t, nl in src[a1:a2])
            if tag in ("replace", "insert"):
                body.extend(HunkLine(ADD, t, nl) for t, nl in dst[b1:b2])
        o_count = i2 - i1
        n_count = j2 - j1
        o_start = i1 + 1 if o_count > 0 else i1
        n_start = j1 + 1 if n_count > 0 else j1
        hunks.append(Hunk(o_start, o_count, n_start, n_count, tuple(body)))

    source_path = path if original else None
    return UnifiedDiff(target_path=path, hunks=tuple(hunks), source_path=source_path)


def render_unified_diff(diff: UnifiedDiff) -> str:
    """Serialize back to standard unified-diff text."""
    if not diff.hunks:
        return ""
    src = f"a/{diff.source_path}" if diff.source_path else "/dev/null"
    dst = f"b/{diff.target_path}" if diff.target_path else "/dev/null"
    out: List[str] = [f"--- {src}", f"+++ {dst}"]
    tag_chars = {CONTEXT: " ", ADD: "+", REMOVE: "-"}
    for h in diff.hunks:
        o = f"{h.original_start},{h.original_count}" if h.original_count != 1 else f"{h.original_start}"
        n = f"{h.new_start},{h.new_count}" if h.new_count != 1 else f"{h.new_start}"
        out.append(f"@@ -{o} +{n} @@")
        for line in h.lines:
            out.append(tag_chars[line.tag] + line.text)
            if not line.newline:
                out.append(_NO_NEWLINE)
    return "\n".join(out) + "\n"
