"""Execution-free Bash syntax checking.

The built-in checker is a single-pass lexer that tracks quoting, comments,
heredocs, paren/brace balance outside quotes, and if/fi, do/done, case/esac
keyword pairing with command-position awareness (so ``echo done`` is not a
closer).  It never invokes a shell, which keeps assessment usable where no
execution environment exists; an external checker command (for example a
shell's no-execute mode) can be configured and then overrides the verdict.

Known lexical limits, accepted by design: quoting inside command
substitution is not re-parsed (an unclosed quote nested in backticks passes),
and a bare ``{`` that Bash would treat as a literal word counts toward brace
balance.
"""

from __future__ import annotations

import re
import subprocess
import tempfile
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import ExternalCheckerUnavailable

BUILTIN_CHECKER_ID = "builtin-lex-v1"

_WORD_CHARS = frozenset("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_")
_COMMENT_PREV = frozenset("\n\t ;|&(){}")


class FindingKind(str, Enum):
    UNCLOSED_QUOTE = "unclosed_quote"
    UNBALANCED_PAREN = "unbalanced_paren"
    UNBALANCED_BRACE = "unbalanced_brace"
    MISSING_KEYWORD_PAIR = "missing_keyword_pair"
    UNTERMINATED_HEREDOC = "unterminated_heredoc"
    DANGLING_FENCE = "dangling_fence"
    EXTERNAL = "external"


@dataclass(frozen=True)
class SyntaxFinding:
    line: int
    kind: FindingKind
    detail: str

    def to_record(self) -> dict:
        return {"line": self.line, "kind": self.kind.value, "detail": self.detail}

    @classmethod
    def from_record(cls, rec: dict) -> "SyntaxFinding":
        return cls(int(rec["line"]), FindingKind(rec["kind"]), str(rec["detail"]))


@dataclass(frozen=True)
class SyntaxReport:
    ok: bool
    findings: tuple[SyntaxFinding, ...]
    checker_id: str

    def to_record(self) -> dict:
        return {
            "ok": self.ok,
            "findings": [f.to_record() for f in self.findings],
            "checker_id": self.checker_id,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "SyntaxReport":
        return cls(
            ok=bool(rec["ok"]),
            findings=tuple(SyntaxFinding.from_record(f) for f in rec.get("findings", [])),
            checker_id=str(rec.get("checker_id", BUILTIN_CHECKER_ID)),
        )


@dataclass
class _Open:
    kind: str  # "paren" | "brace" | "if" | "do" | "case"
    line: int
    in_seen: bool = False  # case only: True once its 'in' appeared


_PAIR_CLOSERS = {"fi": "if", "done": "do", "esac": "case"}
_PAIR_OPENERS = {"if": "fi", "do": "done", "case": "esac"}


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.n = len(text)
        self.i = 0
        self.line = 1
        self.findings: list[SyntaxFinding] = []
        self.stack: list[_Open] = []
        self.pending_heredocs: list[tuple[str, bool, int]] = []
        self.arith = 0  # paren depth while inside $(( )) / (( ))
        self.expect_cmd = True
        self.word = ""
        self.word_line = 1
        self.word_at_cmd = True
        self.prev = "\n"

    def add(self, line: int, kind: FindingKind, detail: str) -> None:
        self.findings.append(SyntaxFinding(line, kind, detail))

    # -- word handling -------------------------------------------------

    def _start_word(self) -> None:
        if not self.word:
            self.word_line = self.line
            self.word_at_cmd = self.expect_cmd

    def _flush_word(self) -> None:
        if not self.word:
            return
        w, at_cmd, w_line = self.word, self.word_at_cmd, self.word_line
        self.word = ""
        if at_cmd:
            if w == "if":
                self.stack.append(_Open("if", w_line))
                self.expect_cmd = True
            elif w in ("while", "until", "then", "else", "elif"):
                self.expect_cmd = True
            elif w == "do":
                self.stack.append(_Open("do", w_line))
                self.expect_cmd = True
            elif w == "case":
                self.stack.append(_Open("case", w_line))
                self.expect_cmd = False
            elif w in _PAIR_CLOSERS:
                self._close_keyword(w, w_line)
                self.expect_cmd = False
            else:
                # includes "for": the loop body pairing hangs off do/done
                self.expect_cmd = False
        else:
            if (w == "in" and self.stack and self.stack[-1].kind == "case"
                    and not self.stack[-1].in_seen):
                self.stack[-1].in_seen = True
            self.expect_cmd = False

    def _close_keyword(self, closer: str, line: int) -> None:
        opener = _PAIR_CLOSERS[closer]
        if self.stack and self.stack[-1].kind == opener:
            self.stack.pop()
        else:
            self.add(line, FindingKind.MISSING_KEYWORD_PAIR,
                     f"'{closer}' without matching '{opener}'")

    def _in_case_body(self) -> bool:
        # A bare ')' is a pattern delimiter when the nearest enclosing
        # construct that could claim it is a case body, with no open '('
        # above it.
        for entry in reversed(self.stack):
            if entry.kind == "paren":
                return False
            if entry.kind == "case" and entry.in_seen:
                return True
        return False

    # -- heredocs --------------------------------------------------------

    def _try_heredoc(self) -> bool:
        """At ``<<``: queue a heredoc unless this is ``<<<`` or arithmetic shift."""
        t, i = self.text, self.i
        if t[i:i + 2] != "<<" or t[i + 2:i + 3] == "<":
            return False
        if self.arith > 0:
            return False
        j = i + 2
        strip_tabs = False
        if t[j:j + 1] == "-":
            strip_tabs = True
            j += 1
        while j < self.n and t[j] in " \t":
            j += 1
        delim = ""
        if j < self.n and t[j] in "'\"":
            quote = t[j]
            j += 1
            k = t.find(quote, j)
            if k == -1:
                return False  # broken quoting; quote scanner will flag it
            delim = t[j:k]
            j = k + 1
        else:
            k = j
            while k < self.n and (t[k] in _WORD_CHARS or t[k] in ".-/"):
                k += 1
            delim = t[j:k]
            j = k
        if not delim:
            return False
        self.pending_heredocs.append((delim, strip_tabs, self.line))
        self._flush_word()
        self.i = j
        self.prev = "<"
        return True

    def _consume_heredoc_bodies(self) -> None:
        """Called just after a newline; eats lines until each delimiter."""
        t = self.text
        for delim, strip_tabs, open_line in self.pending_heredocs:
            terminated = False
            while self.i < self.n:
                end = t.find("\n", self.i)
                last = end == -1
                stop = self.n if last else end
                body_line = t[self.i:stop]
                self.i = self.n if last else end + 1
                if not last:
                    self.line += 1
                cmp = body_line.lstrip("\t") if strip_tabs else body_line
                if cmp == delim:
                    terminated = True
                    break
                if last:
                    break
            if not terminated:
                self.add(open_line, FindingKind.UNTERMINATED_HEREDOC,
                         f"heredoc '{delim}' is never terminated")
        self.pending_heredocs = []

    # -- quote scanning ----------------------------------------------------

    def _scan_single(self) -> None:
        open_line = self.line
        while self.i < self.n:
            c = self.text[self.i]
            self.i += 1
            if c == "'":
                return
            if c == "\n":
                self.line += 1
        self.add(open_line, FindingKind.UNCLOSED_QUOTE, "unclosed single quote")

    def _scan_double(self) -> None:
        open_line = self.line
        while self.i < self.n:
            c = self.text[self.i]
            self.i += 1
            if c == "\\" and self.i < self.n:
                if self.text[self.i] == "\n":
                    self.line += 1
                self.i += 1
                continue
            if c == '"':
                return
            if c == "\n":
                self.line += 1
        self.add(open_line, FindingKind.UNCLOSED_QUOTE, "unclosed double quote")

    def _scan_backtick(self) -> None:
        open_line = self.line
        while self.i < self.n:
            c = self.text[self.i]
            self.i += 1
            if c == "\\" and self.i < self.n:
                if self.text[self.i] == "\n":
                    self.line += 1
                self.i += 1
                continue
            if c == "`":
                return
            if c == "\n":
                self.line += 1
        self.add(open_line, FindingKind.UNCLOSED_QUOTE,
                 "unclosed backtick command substitution")

    # -- main loop -----------------------------------------------------------

    def run(self) -> list[SyntaxFinding]:
        t = self.text
        while self.i < self.n:
            c = t[self.i]

            if c == "\\":
                self._start_word()
                nxt = t[self.i + 1:self.i + 2]
                if nxt == "\n":
                    self.line += 1
                else:
                    # escaped char can never form part of a keyword
                    self.word += "\\" + nxt
                self.i += 2
                self.prev = nxt or "\\"
                continue

            if c == "'":
                self._start_word()
                self.word += "\\'"  # quoted text can never form a keyword
                self.i += 1
                self._scan_single()
                self.prev = "'"
                continue

            if c == '"':
                self._start_word()
                self.word += '\\"'
                self.i += 1
                self._scan_double()
                self.prev = '"'
                continue

            if c == "`":
                if t[self.i:self.i + 3] == "```":
                    self._flush_word()
                    self.add(self.line, FindingKind.DANGLING_FENCE,
                             "markdown code-fence marker left in script")
                    self.i += 3
                    self.prev = "`"
                    continue
                self._start_word()
                self.word += "\\`"
                self.i += 1
                self._scan_backtick()
                self.prev = "`"
                continue

            if c == "#" and self.prev in _COMMENT_PREV:
                end = t.find("\n", self.i)
                self.i = self.n if end == -1 else end  # newline handled below
                continue

            if c == "\n":
                self._flush_word()
                self.line += 1
                self.i += 1
                self.expect_cmd = True
                self.prev = "\n"
                if self.pending_heredocs:
                    self._consume_heredoc_bodies()
                continue

            if c in " \t\r":
                self._flush_word()
                self.i += 1
                self.prev = " "
                continue

            if c in ";|&":
                self._flush_word()
                self.i += 1
                self.expect_cmd = True
                self.prev = c
                continue

            if c == "<":
                if self._try_heredoc():
                    continue
                self._flush_word()
                self.i += 1
                self.prev = c
                continue

            if c == "(":
                had_word = bool(self.word)
                self._flush_word()
                if self.arith > 0:
                    self.arith += 1
                elif t[self.i + 1:self.i + 2] == "(" and (self.prev == "$" or
                                                          (self.expect_cmd and not had_word)):
                    # $(( )) expansion or (( )) arithmetic command
                    self.arith = 2
                    self.i += 2
                    self.prev = "("
                    continue
                else:
                    self.stack.append(_Open("paren", self.line))
                    self.expect_cmd = True
                self.i += 1
                self.prev = c
                continue

            if c == ")":
                self._flush_word()
                if self.arith > 0:
                    self.arith -= 1
                elif self.stack and self.stack[-1].kind == "paren":
                    self.stack.pop()
                    self.expect_cmd = False
                elif self._in_case_body():
                    self.expect_cmd = True  # pattern delimiter
                else:
                    self.add(self.line, FindingKind.UNBALANCED_PAREN,
                             "')' without matching '('")
                self.i += 1
                self.prev = c
                continue

            if c == "{":
                had_word = bool(self.word)
                self._flush_word()
                self.stack.append(_Open("brace", self.line))
                if not had_word and self.prev != "$":
                    self.expect_cmd = True  # start of a { ...; } group
                self.i += 1
                self.prev = c
                continue

            if c == "}":
                self._flush_word()
                if self.stack and self.stack[-1].kind == "brace":
                    self.stack.pop()
                else:
                    self.add(self.line, FindingKind.UNBALANCED_BRACE,
                             "'}' without matching '{'")
                self.expect_cmd = False
                self.i += 1
                self.prev = c
                continue

            if c in _WORD_CHARS:
                self._start_word()
                self.word += c
                self.i += 1
                self.prev = c
                continue

            # any other character (.$=/-*?! etc.) extends or starts a word
            self._start_word()
            self.word += "\\" + c
            self.i += 1
            self.prev = c

        self._flush_word()
        for delim, _tabs, open_line in self.pending_heredocs:
            self.add(open_line, FindingKind.UNTERMINATED_HEREDOC,
                     f"heredoc '{delim}' is never terminated")
        for entry in self.stack:
            if entry.kind == "paren":
                self.add(entry.line, FindingKind.UNBALANCED_PAREN,
                         "'(' is never closed")
            elif entry.kind == "brace":
                self.add(entry.line, FindingKind.UNBALANCED_BRACE,
                         "'{' is never closed")
            else:
                closer = _PAIR_OPENERS[entry.kind]
                self.add(entry.line, FindingKind.MISSING_KEYWORD_PAIR,
                         f"missing '{closer}' for '{entry.kind}'")
        self.findings.sort(key=lambda f: f.line)
        return self.findings


def builtin_check(text: str) -> list[SyntaxFinding]:
    return _Lexer(text).run()


_LINE_RE = re.compile(r"line (\d+)")

_EXTERNAL_KIND_HINTS = (
    ('matching `"\'', FindingKind.UNCLOSED_QUOTE),
    ("matching `''", FindingKind.UNCLOSED_QUOTE),
    ("matching ``'", FindingKind.UNCLOSED_QUOTE),
    ("token `)'", FindingKind.UNBALANCED_PAREN),
    ("token `('", FindingKind.UNBALANCED_PAREN),
    ("token `}'", FindingKind.UNBALANCED_BRACE),
    ("here-document", FindingKind.UNTERMINATED_HEREDOC),
)


def _map_external_line(line: str) -> SyntaxFinding | None:
    m = _LINE_RE.search(line)
    if not m:
        return None
    lineno = int(m.group(1))
    kind = FindingKind.EXTERNAL
    for hint, mapped in _EXTERNAL_KIND_HINTS:
        if hint in line:
            kind = mapped
            break
    detail = line.split(":", 2)[-1].strip()
    return SyntaxFinding(lineno, kind, detail)


def external_check(text: str, cmd: tuple[str, ...]) -> SyntaxReport:
    """Run a configured checker command against the script on a temp path."""
    checker_id = "external:" + " ".join(cmd)
    with tempfile.TemporaryDirectory(prefix="scriptsmith-syn-") as tmp:
        path = Path(tmp) / "script.sh"
        path.write_text(text, encoding="utf-8")
        try:
            proc = subprocess.run(
                list(cmd) + [str(path)],
                capture_output=True, text=True, timeout=30,
            )
        except FileNotFoundError as exc:
            raise ExternalCheckerUnavailable(f"cannot run {cmd[0]!r}: {exc}") from exc
        except (PermissionError, subprocess.TimeoutExpired) as exc:
            raise ExternalCheckerUnavailable(str(exc)) from exc
    if proc.returncode == 0:
        return SyntaxReport(ok=True, findings=(), checker_id=checker_id)
    findings = []
    stderr = (proc.stderr or proc.stdout or "").strip()
    for raw_line in stderr.splitlines():
        mapped = _map_external_line(raw_line)
        if mapped:
            findings.append(mapped)
    if not findings:
        head = stderr.splitlines()[0] if stderr else f"exit status {proc.returncode}"
        findings.append(SyntaxFinding(1, FindingKind.EXTERNAL, head))
    return SyntaxReport(ok=False, findings=tuple(findings), checker_id=checker_id)


def check_syntax(script, external_cmd: tuple[str, ...] | None = None) -> SyntaxReport:
    """Check a script lexically; an external checker, if given, overrides.

    Accepts a BashScript or plain text.  The built-in result is computed
    first so a broken external command never hides a lexical verdict;
    when the external command runs, its exit status wins.
    """
    text = getattr(script, "text", None)
    if text is None:
        text = str(script)
    findings = builtin_check(text)
    report = SyntaxReport(ok=not findings, findings=tuple(findings),
                          checker_id=BUILTIN_CHECKER_ID)
    if external_cmd:
        report = external_check(text, tuple(external_cmd))
    return report
