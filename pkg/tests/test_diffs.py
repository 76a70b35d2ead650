from __future__ import annotations

import random
import shutil
import subprocess

import pytest

from patchwright.diffs import (
    ADD,
    CONTEXT,
    REMOVE,
    ApplyError,
    CountError,
    Hunk,
    HunkLine,
    ParseError,
    RangeError,
    UnifiedDiff,
    apply_diff,
    diff_stats,
    make_unified_diff,
    parse_multi_file_diff,
    parse_unified_diff,
    render_unified_diff,
)

HAVE_GNU_DIFF = shutil.which("diff") is not None
HAVE_GNU_PATCH = shutil.which("patch") is not None


def random_file(rng: random.Random, max_lines: int = 60) -> str:
    words = ["alpha", "beta", "gamma", "delta", "x", "total", "value", "# note", ""]
    n = rng.randint(0, max_lines)
    lines = [rng.choice(words) + str(rng.randint(0, 999)) for _ in range(n)]
    text = "\n".join(lines)
    if lines and rng.random() < 0.8:
        text += "\n"
    return text


def mutate_file(rng: random.Random, text: str) -> str:
    lines = text.split("\n")
    for _ in range(rng.randint(1, 6)):
        op = rng.choice(["insert", "delete", "replace"])
        if op == "insert" or not lines:
            lines.insert(rng.randint(0, len(lines)), f"new{rng.randint(0, 999)}")
        elif op == "delete":
            lines.pop(rng.randrange(len(lines)))
        else:
            lines[rng.randrange(len(lines))] = f"changed{rng.randint(0, 999)}"
    return "\n".join(lines)


class TestParse:
    def test_empty_input(self):
        diff = parse_unified_diff("")
        assert diff.hunks == ()
        assert diff.target_path is None

    def test_single_hunk_counts(self):
        text = "--- a/f.txt\n+++ b/f.txt\n@@ -3,1 +3,1 @@\n-old\n+new\n"
        diff = parse_unified_diff(text)
        assert len(diff.hunks) == 1
        h = diff.hunks[0]
        assert (h.original_start, h.original_count, h.new_start, h.new_count) == (3, 1, 3, 1)
        assert [l.tag for l in h.lines] == [REMOVE, ADD]

    def test_count_defaults_to_one(self):
        text = "--- a/f\n+++ b/f\n@@ -3 +3 @@\n-old\n+new\n"
        diff = parse_unified_diff(text)
        assert diff.hunks[0].original_count == 1

    def test_malformed_header_reports_line(self):
        text = "--- a/f\n+++ b/f\n@@ bogus @@\n"
        with pytest.raises(ParseError) as exc:
            parse_unified_diff(text)
        assert exc.value.line == 3

    def test_inconsistent_counts_rejected(self):
        text = "--- a/f\n+++ b/f\n@@ -1,2 +1,1 @@\n-only\n+new\n"
        with pytest.raises(CountError):
            parse_unified_diff(text)

    def test_missing_plus_header(self):
        with pytest.raises(ParseError):
            parse_unified_diff("--- a/f\n@@ -1 +1 @@\n-x\n+y\n")

    def test_multi_file_sections(self):
        text = (
            "--- a/one\n+++ b/one\n@@ -1,1 +1,1 @@\n-a\n+b\n"
            "--- a/two\n+++ b/two\n@@ -1,1 +1,1 @@\n-c\n+d\n"
        )
        diffs = parse_multi_file_diff(text)
        assert [d.target_path for d in diffs] == ["one", "two"]
        with pytest.raises(ParseError):
            parse_unified_diff(text)

    def test_git_style_preamble_is_skipped(self):
        text = (
            "diff --git a/f b/f\nindex 123..456 100644\n"
            "--- a/f\n+++ b/f\n@@ -1,1 +1,1 @@\n-a\n+b\n"
        )
        diff = parse_unified_diff(text)
        assert diff.target_path == "f"

    def test_dev_null_creation_header(self):
        text = "--- /dev/null\n+++ b/new.py\n@@ -0,0 +1,2 @@\n+x = 1\n+y = 2\n"
        diff = parse_unified_diff(text)
        assert diff.source_path is None
        assert apply_diff(diff, "") == "x = 1\ny = 2\n"


class TestApply:
    def test_zero_hunk_identity(self):
        assert apply_diff(UnifiedDiff(target_path="f"), "abc\ndef\n") == "abc\ndef\n"

    def test_replace_middle_line(self):
        original = "a\nb\nc\nd\ne\n"
        text = "--- a/f\n+++ b/f\n@@ -2,3 +2,3 @@\n b\n-c\n+X\n d\n"
        assert apply_diff(parse_unified_diff(text), original) == "a\nb\nX\nd\ne\n"

    def test_context_mismatch_names_hunk(self):
        original = "a\nb\nWRONG\nd\ne\n"
        text = "--- a/f\n+++ b/f\n@@ -2,3 +2,3 @@\n b\n-c\n+X\n d\n"
        with pytest.raises(ApplyError) as exc:
            apply_diff(parse_unified_diff(text), original)
        assert exc.value.hunk == 1

    def test_hunk_beyond_eof(self):
        text = "--- a/f\n+++ b/f\n@@ -10,1 +10,1 @@\n-x\n+y\n"
        with pytest.raises(RangeError):
            apply_diff(parse_unified_diff(text), "a\nb\n")

    def test_no_newline_marker_round_trip(self):
        original = "a\nb"
        modified = "a\nc"
        diff = make_unified_diff(original, modified, "f")
        rendered = render_unified_diff(diff)
        assert "\\ No newline at end of file" in rendered
        assert apply_diff(parse_unified_diff(rendered), original) == modified

    def test_adding_trailing_newline(self):
        original = "a\nb"
        modified = "a\nb\n"
        diff = make_unified_diff(original, modified, "f")
        assert apply_diff(parse_unified_diff(render_unified_diff(diff)), original) == modified

    def test_crlf_preserved(self):
        original = "a\r\nb\r\n"
        modified = "a\r\nc\r\n"
        diff = make_unified_diff(original, modified, "f")
        applied = apply_diff(parse_unified_diff(render_unified_diff(diff)), original)
        assert applied == modified


class TestStats:
    def test_empty(self):
        assert diff_stats(UnifiedDiff(target_path=None)) == (0, 0, 0)

    def test_one_add_one_remove(self):
        diff = parse_unified_diff("--- a/f\n+++ b/f\n@@ -1,1 +1,1 @@\n-a\n+b\n")
        assert diff_stats(diff) == (1, 1, 1)

    def test_random_diffs_match_naive_recount(self):
        rng = random.Random(5)
        for _ in range(30):
            a = random_file(rng)
            b = mutate_file(rng, a)
            diff = make_unified_diff(a, b, "f")
            added = sum(1 for h in diff.hunks for l in h.lines if l.tag == ADD)
            removed = sum(1 for h in diff.hunks for l in h.lines if l.tag == REMOVE)
            assert diff_stats(diff) == (added, removed, len(diff.hunks))


class TestRoundTrip:
    def test_random_pairs_round_trip(self):
        rng = random.Random(1234)
        for _ in range(100):
            a = random_file(rng)
            b = mutate_file(rng, a)
            rendered = render_unified_diff(make_unified_diff(a, b, "f.txt"))
            assert apply_diff(parse_unified_diff(rendered), a) == b

    def test_context_regions_unchanged(self):
        rng = random.Random(99)
        for _ in range(20):
            a = random_file(rng, max_lines=40)
            b = mutate_file(rng, a)
            diff = make_unified_diff(a, b, "f")
            touched_first = min(
                (h.original_start for h in diff.hunks if h.original_count), default=None
            )
            if touched_first and touched_first > 1:
                prefix = "\n".join(a.split("\n")[: touched_first - 1])
                assert apply_diff(diff, a).startswith(prefix)

    @pytest.mark.skipif(not HAVE_GNU_DIFF, reason="GNU diff not installed")
    def test_gnu_diff_output_parses_and_applies(self, tmp_path):
        rng = random.Random(777)
        for i in range(25):
            a = random_file(rng, max_lines=50)
            b = mutate_file(rng, a)
            fa, fb = tmp_path / f"a{i}", tmp_path / f"b{i}"
            fa.write_text(a)
            fb.write_text(b)
            proc = subprocess.run(
                ["diff", "-u", str(fa), str(fb)], capture_output=True, text=True
            )
            assert proc.returncode in (0, 1)
            if proc.returncode == 0:
                continue
            assert apply_diff(parse_unified_diff(proc.stdout), a) == b

    @pytest.mark.skipif(not HAVE_GNU_PATCH, reason="GNU patch not installed")
    def test_gnu_patch_agrees_with_apply(self, tmp_path):
        rng = random.Random(31337)
        for i in range(15):
            a = random_file(rng, max_lines=40)
            b = mutate_file(rng, a)
            rendered = render_unified_diff(make_unified_diff(a, b, f"w{i}.txt"))
            if not rendered:
                continue
            work = tmp_path / f"w{i}.txt"
            work.write_text(a)
            proc = subprocess.run(
                ["patch", "--no-backup-if-mismatch", str(work)],
                input=rendered,
                capture_output=True,
                text=True,
                cwd=tmp_path,
            )
            assert proc.returncode == 0, proc.stderr
            assert work.read_text() == b == apply_diff(parse_unified_diff(rendered), a)


class TestTokenEconomy:
    def test_small_edits_cost_less_than_half_the_file(self):
        # A patch region of size k <= L/10 on files of length L >= 200 must stay
        # under half the whole-file token count (tokens = whitespace words).
        rng = random.Random(2024)
        for _ in range(10):
            n_lines = rng.randint(200, 400)
            lines = [f"word{i} value{i} item{i}" for i in range(n_lines)]
            a = "\n".join(lines) + "\n"
            k = rng.randint(1, n_lines // 10)
            start = rng.randint(0, n_lines - k)
            mutated = list(lines)
            mutated[start : start + k] = [f"edited line {j}" for j in range(k)]
            b = "\n".join(mutated) + "\n"
            diff_tokens = len(render_unified_diff(make_unified_diff(a, b, "f")).split())
            full_tokens = len(b.split())
            assert diff_tokens < 0.5 * full_tokens
