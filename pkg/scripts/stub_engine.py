#!/usr/bin/env python3
"""Deterministic stand-in for a TeX engine, for environments without a
TeXLive installation. Mimics the pdflatex invocation surface (nonstopmode,
file-line-error) closely enough for the toolkit's compile/repair plumbing:

- a line containing \\FAIL or \\undefinedmacro logs an error at that line,
  exits 1 and writes no PDF;
- a line containing \\SOFTFAIL logs an error but still writes a PDF
  (image-with-errors case);
- a missing \\begin{document} or \\documentclass is an error at line 1;
- otherwise writes doc.pdf and a clean log, exit 0.

Usage: stub_engine.py [engine flags...] FILE.tex
"""

import sys
from pathlib import Path

MINIMAL_PDF = b"%PDF-1.4\n1 0 obj<</Type/Catalog>>endobj\ntrailer<<>>\n%%EOF\n"


def main() -> int:
    tex = Path([a for a in sys.argv[1:] if not a.startswith("-")][-1])
    if not tex.exists():
        print(f"stub_engine: no such file {tex}", file=sys.stderr)
        return 2
    text = tex.read_text(encoding="utf-8", errors="replace")
    lines = text.split("\n")

    errors = []
    soft = []
    if "\\documentclass" not in text:
        errors.append((1, "Missing \\documentclass."))
    if "\\begin{document}" not in text:
        errors.append((1, "Missing \\begin{document}."))
    for i, line in enumerate(lines, 1):
        if "\\FAIL" in line or "\\undefinedmacro" in line:
            errors.append((i, "Undefined control sequence."))
        if "\\SOFTFAIL" in line:
            soft.append((i, "Undefined control sequence."))

    log_lines = [f"This is stub_engine, a fake TeX engine ({tex.name})"]
    for line_no, message in sorted(errors + soft):
        log_lines.append(f"./{tex.name}:{line_no}: {message}")
    log_lines.append("")
    tex.with_suffix(".log").write_text("\n".join(log_lines), encoding="utf-8")

    if not errors:
        tex.with_suffix(".pdf").write_bytes(MINIMAL_PDF)
    return 1 if (errors or soft) else 0


if __name__ == "__main__":
    sys.exit(main())
