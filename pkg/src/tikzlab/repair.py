"""Iterative compile-and-repair loop: truncate generated code before the
first error line, back off exponentially on persistent errors, and account
for partial samples (CSR) and residual errors (CER)."""

from __future__ import annotations

import json
import logging
import shlex
import subprocess
import uuid
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

from .compiler import CompileReport, error_count
from .errors import EmptyInput, SamplerFailure

log = logging.getLogger(__name__)

DEFAULT_MAX_ATTEMPTS = 10
DEFAULT_MAX_NEW = 2048


@dataclass
class SamplerRequest:
    caption: str
    prefix: str = ""  # code generated so far, ends at a line boundary
    max_new: int = DEFAULT_MAX_NEW


class Sampler(Protocol):
    def __call__(self, request: SamplerRequest) -> str: ...


@dataclass
class AttemptStat:
    error_line: Optional[int]  # earliest error of this attempt's compile
    truncate_at: Optional[int]  # keep-lines-strictly-below value chosen next
    regenerated_lines: int
    total_lines: int


@dataclass
class RepairOutcome:
    code: str
    attempts: list[AttemptStat] = field(default_factory=list)
    success: bool = False
    sampled_units: float = 1.0
    final_errors: int = 0


def truncation_point(error_line: int, repair_iter: int, power_from_first: bool = False) -> int:
    """Keep-lines-strictly-below value for a repair iteration.

    Default schedule: iteration 1 truncates just before the error line;
    iteration i >= 2 backs off 4^(i-1) lines above it, clamped at 1. With
    power_from_first, the power schedule applies from iteration 1 (first
    backoff is error_line - 1).
    """
    if error_line < 1 or repair_iter < 1:
        raise ValueError("error_line and repair_iter must be >= 1")
    if repair_iter == 1 and not power_from_first:
        return error_line
    return max(1, error_line - 4 ** (repair_iter - 1))


def _earliest_error_line(report: CompileReport) -> Optional[int]:
    lines = [d.line for d in report.errors if d.line is not None]
    return min(lines) if lines else None


def generate_with_repair(
    caption: str,
    sampler: Sampler,
    compile_fn: Callable[[str], CompileReport],
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    max_new: int = DEFAULT_MAX_NEW,
    power_from_first: bool = False,
) -> RepairOutcome:
    """Sample a document, then iteratively resample from before the earliest
    compile error until an image is produced or attempts run out.

    The repair counter increments only while the earliest error stays at or
    past the previous truncation point; an earlier error resets it.
    """
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")

    outcome = RepairOutcome(code="", sampled_units=0.0)
    prefix = ""
    prefix_lines = 0
    repair_iter = 0
    last_truncation: Optional[int] = None

    for attempt in range(max_attempts):
        try:
            continuation = sampler(SamplerRequest(caption, prefix, max_new))
        except SamplerFailure as exc:
            exc.partial = outcome
            raise
        code = prefix + continuation
        lines = code.split("\n")
        total = len(lines)
        regenerated = total - prefix_lines
        outcome.code = code
        outcome.sampled_units += regenerated / total if total else 1.0

        report = compile_fn(code)
        outcome.final_errors = error_count(report)
        error_line = None if report.produced_image else _earliest_error_line(report)
        stat = AttemptStat(
            error_line=_earliest_error_line(report),
            truncate_at=None,
            regenerated_lines=regenerated,
            total_lines=total,
        )
        outcome.attempts.append(stat)

        if report.produced_image:
            outcome.success = True
            break
        if attempt == max_attempts - 1:
            break

        line = error_line if error_line is not None else 1
        if last_truncation is not None and line >= last_truncation:
            repair_iter += 1  # error persists, back off further
        else:
            repair_iter = 1  # new (earlier) error, fresh schedule
        t = truncation_point(line, repair_iter, power_from_first)
        stat.truncate_at = t
        last_truncation = t
        kept = lines[: t - 1]
        prefix = "\n".join(kept) + ("\n" if kept else "")
        prefix_lines = len(kept)

    return outcome


def csr(outcomes: list[RepairOutcome]) -> float:
    """Compilation Sampling Rate: mean partial-weighted samples per
    caption."""
    if not outcomes:
        raise EmptyInput("csr over empty outcome list")
    return sum(o.sampled_units for o in outcomes) / len(outcomes)


def cer(outcomes: list[RepairOutcome]) -> float:
    """Code Error Rate: mean compile errors remaining in final attempts."""
    if not outcomes:
        raise EmptyInput("cer over empty outcome list")
    return sum(o.final_errors for o in outcomes) / len(outcomes)


# ---------------------------------------------------------------------------
# samplers

class ScriptedSampler:
    """Replays scripted continuations: a per-caption list, with "*" as the
    fallback key. Each call consumes the next entry for its caption."""

    def __init__(self, transcript: dict[str, list[str]]):
        self.transcript = transcript
        self._cursors: dict[str, int] = {}

    def __call__(self, request: SamplerRequest) -> str:
        key = request.caption if request.caption in self.transcript else "*"
        entries = self.transcript.get(key)
        if entries is None:
            raise SamplerFailure(f"no transcript for caption {request.caption!r}")
        i = self._cursors.get(key, 0)
        if i >= len(entries):
            raise SamplerFailure(f"transcript exhausted for caption {request.caption!r}")
        self._cursors[key] = i + 1
        return entries[i]


class SubprocessSampler:
    """Newline-delimited JSON sampler protocol over a child process.

    Request: {"id", "caption", "prefix", "max_new"}; response: {"id",
    "continuation"}. One request in flight per process.
    """

    def __init__(self, cmd: str | list[str]):
        argv = shlex.split(cmd) if isinstance(cmd, str) else list(cmd)
        self.proc = subprocess.Popen(
            argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )

    def __call__(self, request: SamplerRequest) -> str:
        req_id = uuid.uuid4().hex
        payload = json.dumps(
            {
                "id": req_id,
                "caption": request.caption,
                "prefix": request.prefix,
                "max_new": request.max_new,
            },
            ensure_ascii=False,
        )
        try:
            self.proc.stdin.write(payload + "\n")
            self.proc.stdin.flush()
            line = self.proc.stdout.readline()
        except (BrokenPipeError, OSError) as exc:
            raise SamplerFailure(f"sampler process I/O failed: {exc}") from exc
        if not line:
            raise SamplerFailure("sampler process closed its output")
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SamplerFailure(f"sampler sent invalid JSON: {line!r}") from exc
        if response.get("id") != req_id:
            raise SamplerFailure("sampler response id mismatch")
        if "continuation" not in response:
            raise SamplerFailure("sampler response missing continuation")
        return response["continuation"]

    def close(self) -> None:
        if self.proc.poll() is None:
            self.proc.stdin.close()
            self.proc.wait(timeout=10)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
