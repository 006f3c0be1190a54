#!/usr/bin/env python3
"""Regenerate the committed test fixtures.

Deterministic by construction: running this twice yields byte-identical
files.  The syntax corpus is cross-checked against ``bash -n`` when bash is
available, and the 153-record metrics fixture is validated against the
aggregate counts its tests assert before anything is written.
"""

from __future__ import annotations

import json
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures"


# --------------------------------------------------------------------------
# extraction corpus: raw completion -> expected script, covering all rules
# --------------------------------------------------------------------------

EXTRACTION_CORPUS = [
    {
        "name": "tagged_bash_with_prose",
        "raw": "Here you go:\n```bash\necho hi\n```",
        "script": "echo hi\n",
        "rule": "fenced_block_with_tag",
    },
    {
        "name": "tagged_sh",
        "raw": "```sh\ndf -h\n```",
        "script": "df -h\n",
        "rule": "fenced_block_with_tag",
    },
    {
        "name": "tagged_shell_mixed_case_with_trailer",
        "raw": "```Shell\nuptime\n```\nThis prints the system uptime.",
        "script": "uptime\n",
        "rule": "fenced_block_with_tag",
    },
    {
        "name": "tagged_bash_full_reply",
        "raw": ("Sure!\n```bash\ntar -czf backup.tar.gz /etc\n```\n"
                "Let me know if you need anything else."),
        "script": "tar -czf backup.tar.gz /etc\n",
        "rule": "fenced_block_with_tag",
    },
    {
        "name": "tagged_bash_crlf",
        "raw": "```bash\r\necho hi\r\n```\r\n",
        "script": "echo hi\n",
        "rule": "fenced_block_with_tag",
    },
    {
        "name": "untagged_with_trailer",
        "raw": "```\ndf -h\n```\nExplanation of the command above.",
        "script": "df -h\n",
        "rule": "fenced_block",
    },
    {
        "name": "untagged_with_lead_in",
        "raw": "The script:\n\n```\nfree -m\n```",
        "script": "free -m\n",
        "rule": "fenced_block",
    },
    {
        "name": "other_language_tag",
        "raw": "```console\nls -la\n```",
        "script": "ls -la\n",
        "rule": "fenced_block",
    },
    {
        "name": "untagged_pipeline",
        "raw": "```\nps -eo pid --sort=-%cpu | head -6 | tail -5\n```",
        "script": "ps -eo pid --sort=-%cpu | head -6 | tail -5\n",
        "rule": "fenced_block",
    },
    {
        "name": "many_fences_first_tagged",
        "raw": "```bash\necho one\n```\nUsage example:\n```\necho two\n```",
        "script": "echo one\n",
        "rule": "first_fence_of_many",
    },
    {
        "name": "many_fences_shell_tag_second",
        "raw": "```python\nprint('x')\n```\n```bash\necho right\n```",
        "script": "echo right\n",
        "rule": "first_fence_of_many",
    },
    {
        "name": "many_fences_all_untagged",
        "raw": "```\necho a\n```\nand then\n```\necho b\n```",
        "script": "echo a\n",
        "rule": "first_fence_of_many",
    },
    {
        "name": "bare_command",
        "raw": "df -h",
        "script": "df -h\n",
        "rule": "whole_text_fallback",
    },
    {
        "name": "bare_pipeline",
        "raw": "ps -eo pid --sort=-%cpu | head -6 | tail -5",
        "script": "ps -eo pid --sort=-%cpu | head -6 | tail -5\n",
        "rule": "whole_text_fallback",
    },
    {
        "name": "unterminated_fence_with_lead_in",
        "raw": "Here is the script:\n```bash\necho hi",
        "script": "echo hi\n",
        "rule": "whole_text_fallback",
    },
    {
        "name": "inline_fence_tokens_stripped",
        "raw": "echo start && echo ``` && echo end",
        "script": "echo start && echo  && echo end\n",
        "rule": "whole_text_fallback",
    },
]


# ----------------------------------------------------------------------------
# syntax corpus: 10 valid / 10 defective scripts, one distinct kind each
# ----------------------------------------------------------------------------

SYNTAX_CORPUS = [
    # --- valid -----------------------------------------------------------
    {"name": "v01_simple", "ok": True, "script": (
        "#!/bin/bash\n# report disk usage\ndf -h\necho done\n")},
    {"name": "v02_if_elif_else", "ok": True, "script": (
        "if [ -f /etc/passwd ]; then\n  echo present\nelif [ -d /etc ]; then\n"
        "  echo dir\nelse\n  echo missing\nfi\n")},
    {"name": "v03_for_loop_done_arg", "ok": True, "script": (
        "for f in *.log; do\n  echo done processing \"$f\"\ndone\n")},
    {"name": "v04_case_patterns", "ok": True, "script": (
        "case \"$1\" in\n  start) echo starting;;\n  stop|halt) echo stopping;;\n"
        "  *) echo usage;;\nesac\n")},
    {"name": "v05_heredoc", "ok": True, "script": (
        "cat <<EOF > /tmp/motd\nwelcome\nEOF\ncat <<-'END'\n\tindented\n\tEND\n")},
    {"name": "v06_function_braces", "ok": True, "script": (
        "cleanup() {\n  rm -rf \"${TMPDIR}/scratch\"\n}\ncleanup\n")},
    {"name": "v07_arithmetic_shift", "ok": True, "script": (
        "n=$((1<<3))\n(( n += 2 ))\necho \"$n\"\n")},
    {"name": "v08_quoting_mix", "ok": True, "script": (
        "echo 'single with \"double\" inside'\necho \"now: $(date)\"\n"
        "stamp=`date +%s`\necho \"$stamp\"\n")},
    {"name": "v09_while_read", "ok": True, "script": (
        "grep -v '^#' /etc/hosts | while read -r line; do\n"
        "  [ -n \"$line\" ] && echo \"$line\" || true\ndone\n")},
    {"name": "v10_subshell_case", "ok": True, "script": (
        "( case $(uname) in\n  Linux) echo linux;;\n  *) echo other;;\nesac ) > /dev/null\n")},
    # --- invalid, one defect kind each ---------------------------------------
    {"name": "i01_unclosed_double_quote", "ok": False, "kind": "unclosed_quote",
     "line": 1, "script": "echo \"unterminated\n"},
    {"name": "i02_unclosed_single_quote", "ok": False, "kind": "unclosed_quote",
     "line": 2, "script": "echo ok\necho 'oops\n"},
    {"name": "i03_unclosed_backtick", "ok": False, "kind": "unclosed_quote",
     "line": 1, "script": "now=`date\necho \"$now\"\n"},
    {"name": "i04_if_without_fi", "ok": False, "kind": "missing_keyword_pair",
     "line": 1, "script": "if true; then\n  echo yes\n"},
    {"name": "i05_do_without_done", "ok": False, "kind": "missing_keyword_pair",
     "line": 1, "script": "for f in a b c; do\n  echo \"$f\"\n"},
    {"name": "i06_case_without_esac", "ok": False, "kind": "missing_keyword_pair",
     "line": 1, "script": "case $1 in\n  a) echo a;;\n"},
    {"name": "i07_stray_paren", "ok": False, "kind": "unbalanced_paren",
     "line": 1, "script": "echo hello )\n"},
    {"name": "i08_unclosed_group", "ok": False, "kind": "unbalanced_brace",
     "line": 1, "script": "{ echo grouped;\necho next\n"},
    # heredoc nested in if: bash treats a merely EOF-delimited heredoc as a
    # warning, but here it swallows the fi so bash -n fails too
    {"name": "i09_unterminated_heredoc", "ok": False, "kind": "unterminated_heredoc",
     "line": 2, "script": "if true; then\ncat <<MARKER\npayload\nfi\n"},
    {"name": "i10_dangling_fence", "ok": False, "kind": "dangling_fence",
     "line": 1, "script": "```bash\necho hi\n"},
]


# ----------------------------------------------------------------------------
# scoring catalogue: 20 synthetic statements with scripts
# ----------------------------------------------------------------------------

SCORING_CATALOGUE = [
    ("Print the process ids of top 5 CPU consumers",
     "ps -eo pid --sort=-%cpu | head -6 | tail -5\n"),
    ("Print the process ids of top 3 CPU consumers",
     "ps -eo pid --sort=-%cpu | head -4 | tail -3\n"),
    ("kill top 3 memory hogs",
     "ps -eo pid --sort=-%mem | head -4 | tail -3 | xargs kill\n"),
    ("check disk usage", "df -h\n"),
    ("check disk usage of the home directory", "du -sh /home\n"),
    ("show free memory", "free -m\n"),
    ("list all files including hidden ones", "ls -la\n"),
    ("list the 10 largest files in /var",
     "du -a /var | sort -nr | head -10\n"),
    ("list the 20 largest files in /var",
     "du -a /var | sort -nr | head -20\n"),
    ("restart the nginx service", "systemctl restart nginx\n"),
    ("restart the postgres service", "systemctl restart postgresql\n"),
    ("delete log files older than 30 days",
     "find /var/log -name '*.log' -mtime +30 -delete\n"),
    ("delete log files older than 7 days",
     "find /var/log -name '*.log' -mtime +7 -delete\n"),
    ("count running processes", "ps -e --no-headers | wc -l\n"),
    ("show the 5 most recent system log lines", "tail -5 /var/log/syslog\n"),
    ("archive the etc directory to a tarball", "tar -czf /tmp/etc.tar.gz /etc\n"),
    ("print the current kernel version", "uname -r\n"),
    ("show open network connections", "ss -tunap\n"),
    ("check whether port 8080 is listening",
     "ss -ltn | grep -q ':8080' && echo open || echo closed\n"),
    ("print system uptime", "uptime\n"),
]


# --------------------------------------------------------------------------
# replay fixture: 10 tasks, 4 flagged incorrect and refined
# --------------------------------------------------------------------------

REPLAY_TASKS = [
    {
        "id": "t01",
        "task": "list all files in the current directory including hidden ones",
        "script": "ls -la",
        "functionality": "lists all files including hidden ones with details",
        "similarity": "aligned", "difference": "aligned",
        "labels": {"first_pass": 2},
    },
    {
        "id": "t02",
        "task": "show free disk space in human readable form",
        "script": "df -h",
        "functionality": "reports disk usage of mounted filesystems in human readable units",
        "similarity": "aligned", "difference": "aligned",
        "labels": {"first_pass": 2},
    },
    {
        "id": "t03",
        "task": "print the five largest files under /var/log",
        "script": "du -a /var/log | sort -nr | head -5",
        "functionality": "sizes every file under /var/log, sorts descending, prints the top five",
        "similarity": "aligned", "difference": "aligned",
        "labels": {"first_pass": 2},
    },
    {
        "id": "t04",
        "task": "count the number of running processes",
        "script": "ps aux | wc -l",
        "functionality": "counts the lines of ps output including the header line",
        "similarity": "deviates", "difference": "aligned",
        "explain": "the header line of ps is counted too, so the result is off by one",
        "refined": "ps -e --no-headers | wc -l",
        "labels": {"first_pass": 1, "feedback": 2, "refined": 2},
    },
    {
        "id": "t05",
        "task": "archive the /etc directory to /tmp/etc.tar.gz",
        "script": "tar -czf /tmp/etc.tar.gz /etc",
        "functionality": "creates a gzip compressed tarball of /etc at /tmp/etc.tar.gz",
        "similarity": "aligned", "difference": "aligned",
        "labels": {"first_pass": 2},
    },
    {
        "id": "t06",
        "task": "show the current memory usage",
        "script": "free -m",
        "functionality": "prints memory and swap usage in megabytes",
        "similarity": "aligned", "difference": "aligned",
        "labels": {"first_pass": 2},
    },
    {
        "id": "t07",
        "task": "print the process ids of the top 5 cpu consumers",
        "script": "ps -eo pid --sort=-%cpu | head -5",
        "functionality": "prints the header and the first four process ids sorted by cpu",
        "similarity": "aligned", "difference": "deviates",
        "explain": "head -5 keeps the PID header row, so only four process ids are shown",
        "refined": "ps -eo pid --sort=-%cpu | head -6 | tail -5",
        "labels": {"first_pass": 0, "feedback": 2, "refined": 2},
    },
    {
        "id": "t08",
        "task": "delete temporary files older than seven days in /tmp",
        "script": "find /tmp -type f -mtime +7 -delete",
        "functionality": "removes regular files under /tmp not modified in the last seven days",
        "similarity": "aligned", "difference": "aligned",
        "labels": {"first_pass": 2},
    },
    {
        "id": "t09",
        "task": "check whether the nginx service is running",
        "script": "systemctl status nginx",
        "functionality": "dumps the full status page and recent log lines of the nginx unit",
        "similarity": "deviates", "difference": "deviates",
        "explain": "status prints a whole page instead of a simple running check",
        "refined": "systemctl is-active --quiet nginx && echo running || echo stopped",
        "labels": {"first_pass": 0, "feedback": 1, "refined": 1},
    },
    {
        "id": "t10",
        "task": "display the kernel version",
        "script": "uname -a",
        "functionality": "prints all system information including hostname and architecture",
        "similarity": "deviates", "difference": "aligned",
        "explain": "uname -a prints everything, not only the kernel version",
        "refined": "uname -r",
        "labels": {"first_pass": 1, "feedback": 0, "refined": 0},
    },
]


def replay_fixture_entries() -> list[dict]:
    entries = []
    for t in REPLAY_TASKS:
        entries.append({
            "template_id": "gen.initial", "prompt_match": "substring",
            "prompt": t["task"],
            "response": f"```bash\n{t['script']}\n```",
        })
        entries.append({
            "template_id": "assess.functionality", "prompt_match": "substring",
            "prompt": t["script"],
            "response": t["functionality"],
        })
        for kind in ("similarity", "difference"):
            verdict = "ALIGNED" if t[kind] == "aligned" else "DEVIATES"
            entries.append({
                "template_id": f"assess.{kind}", "prompt_match": "substring",
                "prompt": t["task"],
                "response": f"Considered the {kind}.\nVERDICT: {verdict}",
            })
        if "refined" in t:
            entries.append({
                "template_id": "refine.explain", "prompt_match": "substring",
                "prompt": t["task"],
                "response": t["explain"],
            })
            entries.append({
                "template_id": "refine.regenerate", "prompt_match": "substring",
                "prompt": t["task"],
                "response": f"```bash\n{t['refined']}\n```",
            })
    return entries


REPLAY_CONFIG = """\
backends:
  - id: default
    kind: scripted
    fixture: llm_fixture.json
    strict: true
roles:
  generator: {backend: default, model: gen-large}
  assessor: {backend: default, model: judge-small}
  refiner: {backend: default, model: gen-large}
pipeline:
  preset: peer_review
  parallelism: 1
  max_refine_rounds: 1
  reassess_after_refine: false
  retry_backoff_s: 0.0
"""


# --------------------------------------------------------------------------
# 153-record metrics fixture reproducing the study arithmetic
# --------------------------------------------------------------------------

def metrics_records() -> list[dict]:
    """Label/verdict layout, by 1-based record index:

    first_pass: 1-65 -> 2, 66-95 -> 1, 96-153 -> 0   (88 strict-incorrect)
    verdict:    2s: true for 1-52; 1s: true for 66-85; 0s: true for 96-113
    feedback (66-153): 2 for 66-81 and 96-140 (61 total),
                       1 for 82-90 and 141-148, 0 for 91-95 and 149-153
    refined  (66-153): 2 for 66-85 and 96-126 (51), 0 for 91-95, else 1
    """
    records = []
    for i in range(1, 154):
        if i <= 65:
            fp = 2
        elif i <= 95:
            fp = 1
        else:
            fp = 0

        if fp == 2:
            verdict = i <= 52
        elif fp == 1:
            verdict = i <= 85
        else:
            verdict = i <= 113

        feedback = refined = None
        if fp != 2:
            if 66 <= i <= 81 or 96 <= i <= 140:
                feedback = 2
            elif 82 <= i <= 90 or 141 <= i <= 148:
                feedback = 1
            else:
                feedback = 0
            if 66 <= i <= 85 or 96 <= i <= 126:
                refined = 2
            elif 91 <= i <= 95:
                refined = 0
            else:
                refined = 1

        records.append({
            "task_id": f"t{i:03d}",
            "statement": f"remediation case {i:03d}",
            "labels": {"first_pass": fp, "feedback": feedback, "refined": refined},
            "verdict_correct": verdict,
            "status": "needs_review",
            "source": "generated",
        })
    return records


def validate_metrics(records: list[dict]) -> None:
    fp = [r["labels"]["first_pass"] for r in records]
    fb = [r["labels"]["feedback"] for r in records]
    rf = [r["labels"]["refined"] for r in records]
    assert len(records) == 153
    assert sum(1 for x in fp if x != 2) == 88, "strict-incorrect count"
    assert sum(1 for x in fb if x == 2) == 61, "feedback=2 count"
    corrected = sum(1 for f, r in zip(fb, rf) if f == 2 and r == 2)
    assert corrected == 47, f"refined=2 among feedback=2: {corrected}"
    post_ok = sum(1 for f_, r in zip(fp, rf) if (r if r is not None else f_) == 2)
    assert post_ok == 116, f"strict post-refinement correct: {post_ok}"


def metrics_tasks(records: list[dict]) -> list[dict]:
    return [
        {"id": r["task_id"], "task": r["statement"], "labels": r["labels"]}
        for r in records
    ]


# ---------------------------------------------------------------------------

def check_against_bash(corpus: list[dict]) -> None:
    bash = shutil.which("bash")
    if not bash:
        print("bash not found; skipping corpus cross-check", file=sys.stderr)
        return
    for case in corpus:
        with tempfile.NamedTemporaryFile("w", suffix=".sh", delete=False) as fh:
            fh.write(case["script"])
            path = fh.name
        rc = subprocess.run([bash, "-n", path], capture_output=True).returncode
        Path(path).unlink()
        bash_ok = rc == 0
        if bash_ok != case["ok"]:
            raise SystemExit(
                f"corpus case {case['name']}: expected ok={case['ok']} "
                f"but bash -n says ok={bash_ok}"
            )
    print(f"bash -n agrees on all {len(corpus)} syntax corpus scripts")


def write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    print(f"wrote {path.relative_to(ROOT)}")


def write_jsonl(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    print(f"wrote {path.relative_to(ROOT)} ({len(rows)} records)")


def main() -> int:
    check_against_bash(SYNTAX_CORPUS)
    records = metrics_records()
    validate_metrics(records)

    write_json(FIXTURES / "extraction_corpus.json", EXTRACTION_CORPUS)
    write_json(FIXTURES / "syntax_corpus.json", SYNTAX_CORPUS)
    write_json(FIXTURES / "scoring_catalogue.json",
               [{"statement": s, "script": t} for s, t in SCORING_CATALOGUE])

    write_jsonl(FIXTURES / "metrics_153.jsonl", records)
    write_jsonl(FIXTURES / "tasks_153.jsonl", metrics_tasks(records))

    replay = FIXTURES / "replay"
    write_jsonl(replay / "dataset.jsonl", [
        {"id": t["id"], "task": t["task"], "labels": t["labels"]}
        for t in REPLAY_TASKS
    ])
    write_json(replay / "llm_fixture.json",
               {"strict": True, "entries": replay_fixture_entries()})
    (replay / "config.yaml").write_text(REPLAY_CONFIG, encoding="utf-8")
    print(f"wrote {(replay / 'config.yaml').relative_to(ROOT)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
