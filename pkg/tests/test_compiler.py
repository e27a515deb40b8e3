import shutil

import pytest
from hypothesis import given, strategies as st

from tikzlab import compiler
from tikzlab.compiler import Severity, error_count, parse_log
from tikzlab.errors import EngineMissing

from conftest import STUB_ENGINE_CMD

# log excerpts in the shape a TeXLive engine emits under -file-line-error
GOLDEN_FLE_LOG = r"""This is pdfTeX, Version 3.141592653 (TeX Live 2022)
entering extended mode
(./main.tex
LaTeX2e <2021-11-15>
./main.tex:12: Undefined control sequence.
l.12 \undefinedmacro

./main.tex:12: Undefined control sequence.
l.12 \undefinedmacro
[1{/var/lib/texmf/fonts/map/pdftex/updmap/pdftex.map}]
)
Output written on main.pdf (1 page, 8450 bytes).
"""

GOLDEN_BANG_LOG = r"""This is pdfTeX, Version 3.141592653
(./doc.tex
! Missing $ inserted.
<inserted text>
                $
l.7 x_
      1
! Emergency stop.
<*> doc.tex
"""

GOLDEN_WARNING_LOG = r"""(./doc.tex
LaTeX Warning: Reference `fig:x' on page 1 undefined on input line 42.
Package tikz Warning: Snakes have been superseded by decorations.
)
"""


def test_parse_fle_record():
    diags = parse_log("./main.tex:12: Undefined control sequence.")
    assert len(diags) == 1
    d = diags[0]
    assert d.severity is Severity.ERROR
    assert d.line == 12
    assert d.message == "Undefined control sequence."


def test_parse_empty_log():
    assert parse_log("") == []


def test_parse_bang_block_with_line_anchor():
    diags = parse_log("! Missing $ inserted.\nl.7 x_\n")
    assert len(diags) == 1
    assert diags[0].severity is Severity.ERROR
    assert diags[0].line == 7
    assert diags[0].message == "Missing $ inserted."


def test_golden_fle_log_merges_duplicates():
    diags = parse_log(GOLDEN_FLE_LOG)
    errors = [d for d in diags if d.severity is Severity.ERROR]
    assert len(errors) == 1  # duplicate line+message merged
    assert errors[0].line == 12


def test_golden_bang_log():
    diags = parse_log(GOLDEN_BANG_LOG)
    errors = [d for d in diags if d.severity is Severity.ERROR]
    assert [e.message for e in errors] == ["Missing $ inserted.", "Emergency stop."]
    assert errors[0].line == 7


def test_golden_warning_log():
    diags = parse_log(GOLDEN_WARNING_LOG)
    assert all(d.severity is Severity.WARNING for d in diags)
    assert diags[0].line == 42
    assert diags[1].line is None


@given(st.text(max_size=2000))
def test_parse_log_total_on_arbitrary_text(text):
    # fuzz property: parser never raises
    parse_log(text)


@given(st.binary(max_size=2000))
def test_parse_log_total_on_bytes_as_text(data):
    parse_log(data.decode("utf-8", errors="replace"))


# ---------------------------------------------------------------------------
# compile via the stub engine (a real TeXLive engine is exercised when present)

VALID_DOC = "\\documentclass{standalone}\n\\begin{document}\nx\n\\end{document}\n"
BROKEN_DOC = "\\documentclass{standalone}\n\\begin{document}\n\\undefinedmacro\n\\end{document}\n"


def test_compile_valid_document(tmp_path):
    report = compiler.compile(VALID_DOC, tmp_path, engine_cmd=STUB_ENGINE_CMD)
    assert report.success
    assert report.produced_image
    assert error_count(report) == 0
    assert report.pdf_path is not None and report.pdf_path.exists()


def test_compile_broken_document(tmp_path):
    report = compiler.compile(BROKEN_DOC, tmp_path, engine_cmd=STUB_ENGINE_CMD)
    assert not report.success
    assert not report.produced_image
    errors = report.errors
    assert errors and errors[0].line == 3


def test_compile_error_count_matches_log(tmp_path):
    report = compiler.compile(BROKEN_DOC, tmp_path, engine_cmd=STUB_ENGINE_CMD)
    logtext = (tmp_path / "doc.log").read_text()
    assert error_count(report) == len(
        [d for d in parse_log(logtext) if d.severity is Severity.ERROR]
    )


def test_compile_engine_missing(tmp_path):
    with pytest.raises(EngineMissing):
        compiler.compile(VALID_DOC, tmp_path, engine_cmd="definitely-not-a-tex-engine")


def test_compile_deterministic_outcome(tmp_path):
    r1 = compiler.compile(VALID_DOC, tmp_path / "a", engine_cmd=STUB_ENGINE_CMD)
    r2 = compiler.compile(VALID_DOC, tmp_path / "b", engine_cmd=STUB_ENGINE_CMD)
    assert (r1.success, r1.produced_image) == (r2.success, r2.produced_image)


@pytest.mark.skipif(
    not compiler.engine_available("pdflatex"), reason="no real TeX engine installed"
)
def test_compile_real_engine(tmp_path):
    report = compiler.compile(VALID_DOC, tmp_path, engine_cmd="pdflatex")
    assert report.success and report.produced_image


def test_rasterize_rejects_nonpositive_dpi(tmp_path):
    pdf = tmp_path / "doc.pdf"
    pdf.write_bytes(b"%PDF-1.4\n%%EOF\n")
    with pytest.raises(ValueError):
        compiler.rasterize(pdf, dpi=0)


@pytest.mark.skipif(
    shutil.which("pdftoppm") is None, reason="no PDF converter installed"
)
def test_rasterize_corrupt_pdf(tmp_path):
    from tikzlab.errors import CorruptPdf

    pdf = tmp_path / "bad.pdf"
    pdf.write_bytes(b"\x00\x01 not a pdf")
    with pytest.raises(CorruptPdf):
        compiler.rasterize(pdf, dpi=96)
