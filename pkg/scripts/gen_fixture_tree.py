#!/usr/bin/env python3
"""Regenerate the bundled synthetic TeX source tree used by the corpus
round-trip tests (tests/fixtures/textree). Deterministic; run from the repo
root after editing the project definitions below."""

from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "textree"

PROJECTS = {
    # single file, one drawing, minimal preamble
    "proj01": {
        "main.tex": r"""\documentclass{article}
\usepackage{tikz}
\begin{document}
A circle.
\begin{tikzpicture}
\draw (0,0) circle (1cm);
\end{tikzpicture}
\end{document}
""",
    },
    # include expansion pulls the drawing in from a sibling file
    "proj02": {
        "main.tex": r"""\documentclass{article}
\usepackage{tikz}
\begin{document}
\input{fig}
\end{document}
""",
        "fig.tex": r"""\begin{tikzpicture}
\draw (0,0) -- (2,2);
\end{tikzpicture}
""",
    },
    # nested environments stay one record
    "proj03": {
        "main.tex": r"""\documentclass{article}
\usepackage{tikz}
\begin{document}
\begin{tikzpicture}
\node {outer};
\begin{tikzpicture}
\node {inner};
\end{tikzpicture}
\end{tikzpicture}
\end{document}
""",
    },
    # two disjoint drawings yield two records
    "proj04": {
        "main.tex": r"""\documentclass{article}
\usepackage{tikz}
\begin{document}
\begin{tikzpicture}
\draw (0,0) rectangle (1,1);
\end{tikzpicture}
Some prose between figures.
\begin{tikzpicture}
\draw (0,0) ellipse (2 and 1);
\end{tikzpicture}
\end{document}
""",
    },
    # macro dependency closure: \mysquare uses \mylen; \unusedmacro dropped
    "proj05": {
        "main.tex": r"""\documentclass{article}
\usepackage{tikz}
\newcommand{\mylen}{1.5cm}
\newcommand{\mysquare}{\draw (0,0) rectangle (\mylen,\mylen);}
\newcommand{\unusedmacro}{\draw (9,9) circle (1);}
\begin{document}
\begin{tikzpicture}
\mysquare
\end{tikzpicture}
\end{document}
""",
    },
    # decoy preamble: metadata dropped, tikz configuration kept
    "proj06": {
        "main.tex": r"""\documentclass{article}
\usepackage{tikz}
\usetikzlibrary{calc}
\title{A Decoy Title}
\author{Nobody at All}
\date{2020-01-01}
\newcommand{\decoy}{unused decoy macro}
\begin{document}
\maketitle
\begin{tikzpicture}
\draw (0,0) -- ($(1,1)+(1,0)$);
\end{tikzpicture}
\end{document}
""",
    },
    # byte-identical assembled document to proj01: removed by deduplication
    "proj07": {
        "main.tex": r"""\documentclass{article}
\usepackage{tikz}
\begin{document}
The same circle again.
\begin{tikzpicture}
\draw (0,0) circle (1cm);
\end{tikzpicture}
\end{document}
""",
    },
    # drawing that cannot compile: rejected by the compilability filter
    "proj08": {
        "main.tex": r"""\documentclass{article}
\usepackage{tikz}
\begin{document}
\begin{tikzpicture}
\FAIL this line is broken
\end{tikzpicture}
\end{document}
""",
    },
    # one valid drawing followed by an unbalanced begin (skipped, reported)
    "proj09": {
        "main.tex": r"""\documentclass{article}
\usepackage{tikz}
\begin{document}
\begin{tikzpicture}
\draw (0,0) grid (3,3);
\end{tikzpicture}
\begin{tikzpicture}
\draw (0,0) -- (1,0);
\end{document}
""",
    },
    # \def macro plus an environment definition, both used by the drawing
    "proj10": {
        "main.tex": r"""\documentclass{article}
\usepackage{tikz}
\def\myscale{0.8}
\newenvironment{framedpic}{\begin{tikzpicture}[scale=\myscale]}{\end{tikzpicture}}
\begin{document}
\begin{tikzpicture}[scale=\myscale]
\draw (0,0) -- (1,1) -- (2,0);
\end{tikzpicture}
\end{document}
""",
    },
}


def main() -> None:
    for project, files in PROJECTS.items():
        for name, text in files.items():
            path = ROOT / project / name
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
    print(f"wrote {sum(len(f) for f in PROJECTS.values())} files under {ROOT}")


if __name__ == "__main__":
    main()
