"""Compile standalone TikZ documents, parse logs into line-anchored
diagnostics, and rasterize resulting PDFs."""

from __future__ import annotations

import logging
import os
import re
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Optional

from .errors import ConverterMissing, CorruptPdf, EngineMissing

log = logging.getLogger(__name__)

DEFAULT_ENGINE = "pdflatex"
DEFAULT_RASTER = "pdftoppm"
DEFAULT_TIMEOUT = 60.0
DEFAULT_DPI = 300

TEXBIN_ENV = "TIKZLAB_TEXBIN"


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass
class Diagnostic:
    severity: Severity
    message: str
    line: Optional[int] = None  # 1-based line in the compiled document
    raw: str = ""


@dataclass
class CompileReport:
    success: bool
    produced_image: bool
    diagnostics: list[Diagnostic] = field(default_factory=list)
    pdf_path: Optional[Path] = None
    duration: float = 0.0
    engine: str = ""

    @property
    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity is Severity.ERROR]


def error_count(report: CompileReport) -> int:
    return len(report.errors)


def _search_path() -> str:
    path = os.environ.get("PATH", "")
    texbin = os.environ.get(TEXBIN_ENV)
    if texbin:
        path = texbin + os.pathsep + path
    return path


def engine_available(engine_cmd: str = DEFAULT_ENGINE) -> bool:
    return shutil.which(engine_cmd.split()[0], path=_search_path()) is not None


# ---------------------------------------------------------------------------
# log parsing

# file-line-error records: ./main.tex:12: Undefined control sequence.
_FLE_RE = re.compile(r"^(?:\./)?(\S*?\.\w+):(\d+):\s*(.*)$")
# bang blocks: "! Missing $ inserted." followed later by "l.7 ..."
_BANG_RE = re.compile(r"^!\s*(.+)$")
_LDOT_RE = re.compile(r"^l\.(\d+)")
_WARN_RE = re.compile(r"^(?:LaTeX|Package \S+|Class \S+) Warning:\s*(.*)$")
_ON_LINE_RE = re.compile(r"on input line (\d+)")


def parse_log(logtext: str) -> list[Diagnostic]:
    """Total log parser: recognizes file-line-error records, bang blocks with
    l.<n> anchors, and warnings; merges duplicates with identical line and
    message; never fails on arbitrary input."""
    diagnostics: list[Diagnostic] = []
    pending: Optional[Diagnostic] = None  # bang block awaiting an l.<n> anchor

    def flush():
        nonlocal pending
        if pending is not None:
            diagnostics.append(pending)
            pending = None

    for line in logtext.splitlines():
        m = _FLE_RE.match(line)
        if m:
            flush()
            diagnostics.append(
                Diagnostic(Severity.ERROR, m.group(3).strip(), int(m.group(2)), line)
            )
            continue
        m = _BANG_RE.match(line)
        if m:
            flush()
            pending = Diagnostic(Severity.ERROR, m.group(1).strip(), None, line)
            continue
        if pending is not None:
            m = _LDOT_RE.match(line)
            if m:
                pending.line = int(m.group(1))
                pending.raw += "\n" + line
                flush()
                continue
        m = _WARN_RE.match(line)
        if m:
            flush()
            msg = m.group(1).strip()
            anchor = _ON_LINE_RE.search(line)
            diagnostics.append(
                Diagnostic(
                    Severity.WARNING,
                    msg,
                    int(anchor.group(1)) if anchor else None,
                    line,
                )
            )
    flush()

    merged: list[Diagnostic] = []
    seen: set[tuple] = set()
    for d in diagnostics:
        key = (d.severity, d.message, d.line)
        if key in seen:
            continue
        seen.add(key)
        merged.append(d)
    return merged


# ---------------------------------------------------------------------------
# compilation

def compile(
    document: str,
    workdir: str | Path,
    timeout: float = DEFAULT_TIMEOUT,
    engine_cmd: str = DEFAULT_ENGINE,
    keep_scratch: bool = False,
) -> CompileReport:
    """Run the TeX engine on the document in nonstop mode with
    file-line-error output and shell escape disabled."""
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    tex_path = workdir / "doc.tex"
    tex_path.write_text(document, encoding="utf-8")

    argv = engine_cmd.split() + [
        "-interaction=nonstopmode",
        "-file-line-error",
        "-no-shell-escape",
        "doc.tex",
    ]
    env = dict(os.environ, PATH=_search_path())
    start = time.monotonic()
    timed_out = False
    try:
        proc = subprocess.run(
            argv,
            cwd=workdir,
            env=env,
            stdout=subprocess.DEVNULL,
            stderr=subprocess.DEVNULL,
            timeout=timeout,
        )
        exit_code = proc.returncode
    except FileNotFoundError:
        raise EngineMissing(f"TeX engine {engine_cmd!r} not found") from None
    except subprocess.TimeoutExpired:
        timed_out = True
        exit_code = -1
    duration = time.monotonic() - start

    log_path = workdir / "doc.log"
    diagnostics = (
        parse_log(log_path.read_text(encoding="utf-8", errors="replace"))
        if log_path.exists()
        else []
    )
    if timed_out:
        diagnostics.append(
            Diagnostic(
                Severity.ERROR, f"compilation timed out after {timeout}s", None, ""
            )
        )

    pdf_path = workdir / "doc.pdf"
    has_pdf = pdf_path.exists() and pdf_path.stat().st_size > 0
    report = CompileReport(
        success=exit_code == 0 and has_pdf,
        produced_image=has_pdf,
        diagnostics=diagnostics,
        pdf_path=pdf_path if has_pdf else None,
        duration=duration,
        engine=engine_cmd,
    )
    if not report.success and not keep_scratch:
        log.debug("compile failed with %d diagnostics", len(diagnostics))
    return report


def make_compile_fn(
    engine_cmd: str = DEFAULT_ENGINE,
    timeout: float = DEFAULT_TIMEOUT,
    scratch_root: Optional[str | Path] = None,
    keep_scratch: bool = False,
) -> Callable[[str], CompileReport]:
    """Bind compile() to per-call private scratch directories."""
    root = Path(scratch_root) if scratch_root else None
    if root:
        root.mkdir(parents=True, exist_ok=True)

    def compile_fn(document: str) -> CompileReport:
        workdir = Path(
            tempfile.mkdtemp(prefix="tikzlab-", dir=str(root) if root else None)
        )
        try:
            return compile(
                document,
                workdir,
                timeout=timeout,
                engine_cmd=engine_cmd,
                keep_scratch=keep_scratch,
            )
        finally:
            if not keep_scratch:
                shutil.rmtree(workdir, ignore_errors=True)

    return compile_fn


# ---------------------------------------------------------------------------
# rasterization

def rasterize(
    pdf_path: str | Path,
    dpi: int = DEFAULT_DPI,
    out_dir: Optional[str | Path] = None,
    raster_cmd: str = DEFAULT_RASTER,
    first_page_only: bool = False,
) -> list[Path]:
    """Convert a PDF to PNGs named page-0001.png... in page order."""
    if dpi <= 0:
        raise ValueError(f"dpi must be positive, got {dpi}")
    pdf_path = Path(pdf_path)
    if not pdf_path.exists():
        raise FileNotFoundError(pdf_path)
    out_dir = Path(out_dir) if out_dir else pdf_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)

    prefix = out_dir / "raster"
    argv = raster_cmd.split() + ["-png", "-r", str(dpi)]
    if first_page_only:
        argv += ["-f", "1", "-l", "1"]
    argv += [str(pdf_path), str(prefix)]
    env = dict(os.environ, PATH=_search_path())
    try:
        proc = subprocess.run(
            argv, env=env, stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL
        )
    except FileNotFoundError:
        raise ConverterMissing(f"converter {raster_cmd!r} not found") from None

    produced = sorted(
        out_dir.glob("raster-*.png"),
        key=lambda p: int(re.search(r"(\d+)\.png$", p.name).group(1)),
    )
    if proc.returncode != 0 or not produced:
        raise CorruptPdf(f"rasterization of {pdf_path} produced no pages")
    pages = []
    for i, src in enumerate(produced, 1):
        dst = out_dir / f"page-{i:04d}.png"
        src.rename(dst)
        pages.append(dst)
    return pages
