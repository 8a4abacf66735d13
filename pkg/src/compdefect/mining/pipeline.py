"""Mining function triples from history, and applying a trained model to a
single commit."""
from __future__ import annotations

import enum
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ..jparse import FunctionDecl, FunctionSpan, JParseError, diff_statements, scan_java_file
from ..labels import DefectLabel
from ..patterns import NotSingleStatement, classify_pair, match_pattern
from ..triples import FunctionTriple
from .gitstore import Repository, RepositoryError

log = logging.getLogger(__name__)


class CommitKind(str, enum.Enum):
    BUG_FIXING = "BugFixing"
    NON_BUG_FIXING = "NonBugFixing"


# "buy" is kept next to "bug" because the published list spells it that way
BUG_KEYWORDS = ("error", "bug", "buy", "fix", "issue", "mistake", "incorrect", "fault", "defect", "flaw", "type")
_KEYWORD_RE = re.compile(r"\b(?:" + "|".join(BUG_KEYWORDS) + r")", re.IGNORECASE)


def classify_commit_message(message: str) -> CommitKind:
    """Bug-fixing iff some keyword starts a word of the message."""
    return CommitKind.BUG_FIXING if _KEYWORD_RE.search(message or "") else CommitKind.NON_BUG_FIXING


class MalformedDiff(ValueError):
    pass


@dataclass(frozen=True)
class Hunk:
    file_path: str
    old_range: tuple[int, int]
    new_range: tuple[int, int]
    removed_lines: tuple[str, ...]
    added_lines: tuple[str, ...]
    # line numbers of the removed / added lines when the hunk carries context
    removed_at: tuple[int, ...] | None = None
    added_at: tuple[int, ...] | None = None

    @property
    def removed_line_numbers(self) -> list[int]:
        if self.removed_at is not None:
            return list(self.removed_at)
        s, n = self.old_range
        return list(range(s, s + n))

    @property
    def added_line_numbers(self) -> list[int]:
        if self.added_at is not None:
            return list(self.added_at)
        s, n = self.new_range
        return list(range(s, s + n))


_HUNK_RE = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")


def split_hunks(unified_diff: str) -> list[Hunk]:
    """One Hunk per ``@@`` section; binary sections are skipped."""
    hunks: list[Hunk] = []
    path: str | None = None
    lines = unified_diff.splitlines()
    i = 0
    while i < len(lines):
        line = lines[i]
        if line.startswith("diff --git "):
            m = re.match(r"diff --git a/(.*) b/(.*)$", line)
            path = m.group(2) if m else None
            i += 1
            continue
        if line.startswith("Binary files "):
            path = None
            i += 1
            continue
        if line.startswith("--- "):
            i += 1
            continue
        if line.startswith("+++ "):
            target = line[4:].strip()
            if target != "/dev/null":
                path = target[2:] if target.startswith("b/") else target
            i += 1
            continue
        if line.startswith("@@"):
            m = _HUNK_RE.match(line)
            if not m or path is None:
                raise MalformedDiff(f"bad hunk header at line {i + 1}: {line!r}")
            os_, oc, ns, nc = m.groups()
            old = (int(os_), 1 if oc is None else int(oc))
            new = (int(ns), 1 if nc is None else int(nc))
            removed, added, rm_at, add_at = [], [], [], []
            o, n = old[0], new[0]
            i += 1
            while i < len(lines) and (o < old[0] + old[1] or n < new[0] + new[1]):
                body = lines[i]
                if body.startswith("-"):
                    removed.append(body[1:])
                    rm_at.append(o)
                    o += 1
                elif body.startswith("+"):
                    added.append(body[1:])
                    add_at.append(n)
                    n += 1
                elif body.startswith(" ") or body == "":
                    o, n = o + 1, n + 1
                elif body.startswith("\\"):
                    pass
                else:
                    raise MalformedDiff(f"unexpected line {i + 1} inside hunk: {body!r}")
                i += 1
            while i < len(lines) and lines[i].startswith("\\"):
                i += 1
            if o != old[0] + old[1] or n != new[0] + new[1]:
                raise MalformedDiff(f"hunk at {path} {old}/{new} has {o - old[0]}/{n - new[0]} lines")
            hunks.append(Hunk(path, old, new, tuple(removed), tuple(added), tuple(rm_at), tuple(add_at)))
            continue
        if path is None and line.strip() and not line.startswith(("index ", "new file", "deleted file", "similarity", "rename ", "old mode", "new mode")):
            raise MalformedDiff(f"unexpected line {i + 1} outside a file section: {line!r}")
        i += 1
    return hunks


def locate_enclosing_function(file_text: str, line: int) -> FunctionDecl | None:
    """Innermost parsed function whose span covers ``line``."""
    try:
        span = scan_java_file(file_text).enclosing(line)
    except JParseError:
        return None
    return span.decl if span is not None else None


def _enclosing_span(file_text: str, line: int) -> FunctionSpan | None:
    return scan_java_file(file_text).enclosing(line)


def find_inducing_commit(repo: Repository, fix_commit: str, file_path: str, removed_line_numbers: Sequence[int], insertion_line: int | None = None) -> str | None:
    """SZZ-lite: blame the fix's parent at the removed lines; most recent wins.

    For a pure addition, the lines around ``insertion_line`` (the old-side
    line after which text was added) are blamed instead.
    """
    fix = repo.commit(fix_commit)
    if fix.first_parent is None:
        return None
    try:
        blame = repo.blame(fix.first_parent, file_path)
    except RepositoryError:
        return None
    lines = [n for n in removed_line_numbers if 1 <= n <= len(blame)]
    if not lines and insertion_line is not None:
        lines = [n for n in (insertion_line, insertion_line + 1) if 1 <= n <= len(blame)]
    if not lines:
        return None
    order = {c.sha: k for k, c in enumerate(repo.first_parent_log(fix.first_parent))}
    candidates = {blame[n - 1].commit for n in lines}
    return min(candidates, key=lambda sha: order.get(sha, len(order)))


class RejectReason(str, enum.Enum):
    OUTSIDE_FUNCTION = "OutsideFunction"
    NEW_FUNCTION = "NewFunction"
    FUNCTION_NAME_UNIDENTIFIED = "FunctionNameUnidentified"
    NOT_SINGLE_STATEMENT = "NotSingleStatement"
    NO_PATTERN = "NoPattern"
    OTHER = "Other"


@dataclass(frozen=True)
class Rejected:
    reason: RejectReason
    detail: str = ""


def _function_text(text: str, span: FunctionSpan) -> str:
    return text[span.start_offset : span.end_offset]


def _changed_new_lines(h: Hunk) -> list[int]:
    if h.added_lines:
        return h.added_line_numbers
    # pure deletion: the new-side line after which lines vanished, and the next
    s = h.new_range[0]
    return [max(s, 1)]


def _single_function(text: str, lines: Iterable[int]) -> FunctionSpan | Rejected:
    try:
        scan = scan_java_file(text)
    except JParseError as exc:
        return Rejected(RejectReason.OTHER, f"file does not scan: {exc}")
    spans = [scan.enclosing(n) for n in lines]
    if any(s is None for s in spans):
        return Rejected(RejectReason.OUTSIDE_FUNCTION, "modified lines lie outside any function")
    if len({(s.start_offset, s.end_offset) for s in spans}) != 1:
        return Rejected(RejectReason.NOT_SINGLE_STATEMENT, "hunk spans several functions")
    span = spans[0]
    if span.decl is None:
        return Rejected(RejectReason.OTHER, f"function {span.name} does not parse: {span.error}")
    return span


def _same_function(text: str | None, name: str, like: FunctionDecl) -> FunctionSpan | Rejected:
    if text is None:
        return Rejected(RejectReason.NEW_FUNCTION, "file did not exist")
    try:
        spans = scan_java_file(text).by_name(name)
    except JParseError as exc:
        return Rejected(RejectReason.OTHER, f"file does not scan: {exc}")
    if not spans:
        return Rejected(RejectReason.NEW_FUNCTION, f"no earlier version of {name}")
    parsed = [s for s in spans if s.decl is not None]
    if not parsed:
        return Rejected(RejectReason.OTHER, f"earlier {name} does not parse")
    for s in parsed:
        if s.decl.signature_key() == like.signature_key():
            return s
    if len(parsed) == 1:
        return parsed[0]
    return Rejected(RejectReason.FUNCTION_NAME_UNIDENTIFIED, f"{name} is overloaded")


def _is_single_change(before: FunctionDecl, after: FunctionDecl) -> bool:
    counts = diff_statements(before, after).counts()
    header_same = before.modifiers == after.modifiers and before.throws_list == after.throws_list and before.signature_key() == after.signature_key()
    return (counts == (1, 0, 0) and header_same) or (counts == (0, 0, 0) and not header_same)


def extract_triple(repo: Repository, fix_commit: str, hunk: Hunk, keep_unmatched: DefectLabel | None = None) -> FunctionTriple | Rejected:
    """Clean, buggy and fixed versions of the function touched by ``hunk``.

    Never raises; every failure becomes a Rejected reason.
    """
    try:
        return _extract(repo, fix_commit, hunk, keep_unmatched)
    except Exception as exc:  # pipeline totality
        return Rejected(RejectReason.OTHER, f"{type(exc).__name__}: {exc}")


def _extract(repo: Repository, fix_commit: str, hunk: Hunk, keep_unmatched: DefectLabel | None) -> FunctionTriple | Rejected:
    fix = repo.commit(fix_commit)
    path = hunk.file_path
    fixed_text = repo.text_at(fix.sha, path)
    if fixed_text is None:
        return Rejected(RejectReason.OTHER, "file deleted by the fix")
    fixed_span = _single_function(fixed_text, _changed_new_lines(hunk))
    if isinstance(fixed_span, Rejected):
        return fixed_span
    fixed_fn = fixed_span.decl
    # the fix itself must be a single-statement change of that function
    before_text = repo.text_at(fix.first_parent, path) if fix.first_parent else None
    before_span = _same_function(before_text, fixed_span.name, fixed_fn)
    if isinstance(before_span, Rejected):
        return before_span
    if not _is_single_change(before_span.decl, fixed_fn):
        return Rejected(RejectReason.NOT_SINGLE_STATEMENT, "fix changes more than one statement")

    inducing = find_inducing_commit(repo, fix.sha, path, hunk.removed_line_numbers, hunk.old_range[0])
    if inducing is None:
        return Rejected(RejectReason.OTHER, "could not annotate the removed lines")
    ind_text = repo.text_at(inducing, path)
    blame_lines = hunk.removed_line_numbers or [hunk.old_range[0]]
    blame = repo.blame(fix.first_parent, path)
    ind_lines = [blame[n - 1].line for n in blame_lines if 1 <= n <= len(blame) and blame[n - 1].commit == inducing]
    try:
        ind_scan = scan_java_file(ind_text)
    except JParseError as exc:
        return Rejected(RejectReason.OTHER, f"inducing version does not scan: {exc}")
    buggy_span = ind_scan.enclosing(ind_lines[0]) if ind_lines else None
    if buggy_span is None or buggy_span.name != fixed_span.name:
        return Rejected(RejectReason.FUNCTION_NAME_UNIDENTIFIED, "inducing line is not inside the fixed function")
    if buggy_span.decl is None:
        return Rejected(RejectReason.OTHER, f"inducing version of {buggy_span.name} does not parse")

    ind_commit = repo.commit(inducing)
    parent_text = repo.text_at(ind_commit.first_parent, path) if ind_commit.first_parent else None
    clean_span = _same_function(parent_text, buggy_span.name, buggy_span.decl)
    if isinstance(clean_span, Rejected):
        return clean_span

    buggy_src = _function_text(ind_text, buggy_span)
    fixed_src = _function_text(fixed_text, fixed_span)
    clean_src = _function_text(parent_text, clean_span)
    try:
        m = match_pattern(buggy_span.decl, fixed_fn)
    except NotSingleStatement as exc:
        return Rejected(RejectReason.NOT_SINGLE_STATEMENT, str(exc))
    if m is None:
        if keep_unmatched is None:
            return Rejected(RejectReason.NO_PATTERN, "no defect pattern matches the fix")
        label = keep_unmatched
    else:
        label = m.label
    buggy_line = (ind_lines[0] - buggy_span.start_line + 1) if ind_lines else 1
    fixed_line = _changed_new_lines(hunk)[0] - fixed_span.start_line + 1
    tid = f"{repo.name}:{fix.sha[:12]}:{path}:{fixed_span.name}"
    return FunctionTriple(tid, repo.name, fix.sha, inducing, label, clean_src, buggy_src, fixed_src, buggy_line, fixed_line, path)


def extract_negative(repo: Repository, commit: str, hunk: Hunk) -> FunctionTriple | Rejected:
    """Clean triple from a non-bug-fixing commit: current = fixed = the
    commit's version, clean = its parent's version."""
    try:
        c = repo.commit(commit)
        path = hunk.file_path
        text = repo.text_at(c.sha, path)
        if text is None:
            return Rejected(RejectReason.OTHER, "file deleted")
        span = _single_function(text, _changed_new_lines(hunk))
        if isinstance(span, Rejected):
            return span
        before = repo.text_at(c.first_parent, path) if c.first_parent else None
        prev = _same_function(before, span.name, span.decl)
        if isinstance(prev, Rejected):
            return prev
        clean_src = _function_text(before, prev)
        cur_src = _function_text(text, span)
        if classify_pair(prev.decl, span.decl) is not None:
            return Rejected(RejectReason.OTHER, "change in a non-fixing commit matches a defect pattern")
        if diff_statements(prev.decl, span.decl).counts() == (0, 0, 0) and prev.decl.signature_key() == span.decl.signature_key() and prev.decl.modifiers == span.decl.modifiers and prev.decl.throws_list == span.decl.throws_list:
            return Rejected(RejectReason.OTHER, "change is invisible after tokenization")
        line = _changed_new_lines(hunk)[0] - span.start_line + 1
        tid = f"{repo.name}:{c.sha[:12]}:{path}:{span.name}"
        return FunctionTriple(tid, repo.name, c.sha, c.first_parent, DefectLabel.CLEAN, clean_src, cur_src, cur_src, line, line, path)
    except Exception as exc:
        return Rejected(RejectReason.OTHER, f"{type(exc).__name__}: {exc}")


@dataclass
class MiningReport:
    repo: str
    triples: list[FunctionTriple] = field(default_factory=list)
    rejected: Counter = field(default_factory=Counter)
    commits_seen: int = 0

    def summary(self) -> dict:
        return {
            "repo": self.repo,
            "commits": self.commits_seen,
            "triples": len(self.triples),
            "rejected": {k.value if hasattr(k, "value") else k: v for k, v in sorted(self.rejected.items())},
        }


def commit_hunks(repo: Repository, commit: str) -> list[Hunk]:
    return [h for h in split_hunks(repo.commit_diff(commit)) if h.file_path.endswith(".java")]


def mine_repository(repo: Repository | str, rev: str = "HEAD", include_negatives: bool = True, keep_unmatched: DefectLabel | None = None) -> MiningReport:
    """Walk first-parent history and turn hunks into triples."""
    if not isinstance(repo, Repository):
        repo = Repository(repo)
    report = MiningReport(repo.name)
    seen: set[str] = set()
    for c in reversed(repo.first_parent_log(rev)):
        report.commits_seen += 1
        if c.first_parent is None:
            continue
        kind = classify_commit_message(c.message)
        if kind is CommitKind.NON_BUG_FIXING and not include_negatives:
            continue
        for h in commit_hunks(repo, c.sha):
            if kind is CommitKind.BUG_FIXING:
                out = extract_triple(repo, c.sha, h, keep_unmatched)
            else:
                out = extract_negative(repo, c.sha, h)
            if isinstance(out, Rejected):
                report.rejected[out.reason] += 1
                log.debug("%s %s: rejected %s (%s)", repo.name, c.sha[:10], out.reason.value, out.detail)
                continue
            if out.id in seen:
                continue
            seen.add(out.id)
            out.validate()
            report.triples.append(out)
    log.info("mined %s: %s", repo.name, report.summary())
    return report


# ---------------------------------------------------------------------------
# applying a model to one commit


@dataclass
class FunctionPrediction:
    file: str
    name: str
    label: DefectLabel
    probabilities: list[float]
    patch: str | None = None
    patch_logprob: float | None = None

    def top(self, k: int = 3) -> list[tuple[str, float]]:
        order = sorted(range(len(self.probabilities)), key=lambda i: (-self.probabilities[i], i))[:k]
        return [(DefectLabel(i).name, self.probabilities[i]) for i in order]

    def to_dict(self) -> dict:
        d = {"file": self.file, "name": self.name, "label": self.label.name, "top3": [[n, p] for n, p in self.top(3)]}
        if self.patch is not None:
            d["patch"] = self.patch
            d["patch_logprob"] = self.patch_logprob
        return d


@dataclass
class CommitPrediction:
    commit: str
    functions: list[FunctionPrediction]
    warnings: list[str] = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "buggy" if any(f.label is not DefectLabel.CLEAN for f in self.functions) else "clean"

    def to_dict(self) -> dict:
        return {"commit": self.commit, "verdict": self.verdict, "functions": [f.to_dict() for f in self.functions]}


def apply_to_commit(repo: Repository | str, commit: str, model, beam_width: int = 10) -> CommitPrediction:
    """Classify every single-statement function change in ``commit`` and
    propose a repair for the ones predicted defective."""
    if not isinstance(repo, Repository):
        repo = Repository(repo)
    c = repo.commit(commit)
    result = CommitPrediction(c.sha, [])
    done: set[tuple[str, str, int]] = set()
    for h in commit_hunks(repo, c.sha):
        text = repo.text_at(c.sha, h.file_path)
        if text is None:
            continue
        span = _single_function(text, _changed_new_lines(h))
        if isinstance(span, Rejected):
            result.warnings.append(f"{h.file_path}:{h.new_range[0]}: skipped ({span.reason.value}: {span.detail})")
            continue
        key = (h.file_path, span.name, span.start_line)
        if key in done:
            continue
        done.add(key)
        before = repo.text_at(c.first_parent, h.file_path) if c.first_parent else None
        prev = _same_function(before, span.name, span.decl)
        if isinstance(prev, Rejected):
            result.warnings.append(f"{h.file_path}:{span.name}: skipped ({prev.reason.value})")
            continue
        if not _is_single_change(prev.decl, span.decl):
            continue
        pred = model.predict(_function_text(before, prev), _function_text(text, span), beam_width)
        result.functions.append(
            FunctionPrediction(h.file_path, span.name, pred.label, [float(p) for p in pred.probabilities], pred.patch, pred.patch_logprob)
        )
    for w in result.warnings:
        log.warning(w)
    return result
