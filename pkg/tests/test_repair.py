import json
import sys

import pytest
from hypothesis import given, strategies as st

from tikzlab.errors import EmptyInput, SamplerFailure
from tikzlab.repair import (
    RepairOutcome,
    SamplerRequest,
    ScriptedSampler,
    SubprocessSampler,
    cer,
    csr,
    generate_with_repair,
    truncation_point,
)

from conftest import MOCK_SAMPLER_CMD, fake_compile


# ---------------------------------------------------------------------------
# truncation schedule

def test_first_iteration_keeps_just_before_error():
    assert truncation_point(10, 1) == 10


def test_backoff_schedule():
    assert truncation_point(10, 2) == 6
    assert truncation_point(10, 3) == 1  # clamped from 10 - 16


def test_clamp_floor():
    assert truncation_point(1, 1) == 1


def test_power_from_first_flag():
    assert truncation_point(10, 1, power_from_first=True) == 9
    assert truncation_point(10, 2, power_from_first=True) == 6


def test_invalid_arguments():
    with pytest.raises(ValueError):
        truncation_point(0, 1)
    with pytest.raises(ValueError):
        truncation_point(5, 0)


@given(st.integers(1, 500), st.integers(1, 8))
def test_truncation_monotone_nonincreasing_and_positive(error_line, i):
    t_i = truncation_point(error_line, i)
    t_next = truncation_point(error_line, i + 1)
    assert 1 <= t_next <= t_i <= error_line


# ---------------------------------------------------------------------------
# repair loop

def _doc(n_lines, fail_at=None, soft_at=None, tag="x"):
    lines = [f"{tag} line {i}" for i in range(1, n_lines + 1)]
    if fail_at is not None:
        lines[fail_at - 1] += " \\FAIL"
    if soft_at is not None:
        lines[soft_at - 1] += " \\SOFTFAIL"
    return "\n".join(lines)


def test_valid_on_first_attempt():
    sampler = ScriptedSampler({"*": [_doc(5)]})
    outcome = generate_with_repair("cap", sampler, fake_compile)
    assert outcome.success
    assert outcome.sampled_units == 1.0
    assert len(outcome.attempts) == 1
    assert outcome.final_errors == 0


def test_error_persisting_twice_then_fixed():
    # 20-line doc, error at line 10 twice, then fixed:
    # truncations 10 then 6, units 1 + 11/20 + 15/20 = 2.3
    first = _doc(20, fail_at=10, tag="a")
    kept_after_1 = "\n".join(first.split("\n")[:9]) + "\n"
    second_cont = _doc(20, fail_at=10, tag="b").split("\n")[9:]
    second_cont = "\n".join(second_cont)
    kept_after_2 = (kept_after_1 + second_cont).split("\n")[:5]
    third_cont = "\n".join(_doc(20, tag="c").split("\n")[5:])

    sampler = ScriptedSampler({"*": [first, second_cont, third_cont]})
    outcome = generate_with_repair("cap", sampler, fake_compile)

    assert outcome.success
    assert [a.truncate_at for a in outcome.attempts] == [10, 6, None]
    assert outcome.sampled_units == pytest.approx(2.3, abs=1e-12)
    # brute-force recount of regenerated lines
    recount = sum(a.regenerated_lines / a.total_lines for a in outcome.attempts)
    assert outcome.sampled_units == pytest.approx(recount, abs=1e-15)


def test_kept_prefix_is_byte_identical():
    first = _doc(8, fail_at=5)
    cont = "\n".join(_doc(8).split("\n")[4:])
    sampler = ScriptedSampler({"*": [first, cont]})
    outcome = generate_with_repair("cap", sampler, fake_compile)
    assert outcome.success
    assert outcome.code.split("\n")[:4] == first.split("\n")[:4]


def test_earlier_error_resets_schedule():
    # error at 10, then a new error at 3 (earlier than truncation point 10):
    # the repair counter resets, so truncation is 3 (just-before), not 3 - 4.
    # Scripted compiler: with real TeX an earlier line can start erroring
    # when later context changes, which per-line token scanning cannot model.
    from tikzlab.compiler import CompileReport, Diagnostic, Severity

    reports = iter(
        [
            CompileReport(False, False, [Diagnostic(Severity.ERROR, "e", 10)]),
            CompileReport(False, False, [Diagnostic(Severity.ERROR, "e", 3)]),
            CompileReport(True, True, []),
        ]
    )
    sampler = ScriptedSampler(
        {"*": [_doc(12), "\n".join(_doc(12).split("\n")[9:]),
               "\n".join(_doc(12).split("\n")[2:])]}
    )
    outcome = generate_with_repair("cap", sampler, lambda code: next(reports))
    assert outcome.success
    assert [a.truncate_at for a in outcome.attempts] == [10, 3, None]


def test_never_fixed_exhausts_attempts():
    sampler = ScriptedSampler({"*": [_doc(4, fail_at=2)] * 3})
    outcome = generate_with_repair("cap", sampler, fake_compile, max_attempts=3)
    assert not outcome.success
    assert len(outcome.attempts) == 3
    assert outcome.final_errors >= 1
    assert 1.0 <= outcome.sampled_units <= 1.0 + 3


def test_image_with_errors_counts_as_success():
    sampler = ScriptedSampler({"*": [_doc(5, soft_at=2)]})
    outcome = generate_with_repair("cap", sampler, fake_compile)
    assert outcome.success
    assert outcome.final_errors == 1


def test_deterministic_replay():
    transcript = {"*": [_doc(6, fail_at=3), "\n".join(_doc(6).split("\n")[2:])]}
    runs = []
    for _ in range(2):
        sampler = ScriptedSampler(json.loads(json.dumps(transcript)))
        runs.append(generate_with_repair("cap", sampler, fake_compile))
    assert runs[0].code == runs[1].code
    assert runs[0].sampled_units == runs[1].sampled_units


def test_sampler_failure_carries_partial_outcome():
    sampler = ScriptedSampler({"*": [_doc(4, fail_at=1)]})  # exhausts on attempt 2
    with pytest.raises(SamplerFailure) as exc_info:
        generate_with_repair("cap", sampler, fake_compile)
    assert isinstance(exc_info.value.partial, RepairOutcome)
    assert len(exc_info.value.partial.attempts) == 1


# ---------------------------------------------------------------------------
# CSR / CER

def _outcome(units, errors=0):
    return RepairOutcome(code="", sampled_units=units, final_errors=errors)


def test_csr_single_shot():
    assert csr([_outcome(1.0), _outcome(1.0)]) == 1.0


def test_csr_mean():
    assert csr([_outcome(1.0), _outcome(1.4)]) == pytest.approx(1.2, abs=1e-12)


def test_csr_empty():
    with pytest.raises(EmptyInput):
        csr([])


def test_cer_clean():
    assert cer([_outcome(1.0), _outcome(1.0)]) == 0.0


def test_cer_mean():
    assert cer([_outcome(1.0, 1), _outcome(1.0, 0)]) == 0.5


def test_cer_empty():
    with pytest.raises(EmptyInput):
        cer([])


# ---------------------------------------------------------------------------
# subprocess sampler protocol

def test_subprocess_sampler_roundtrip(tmp_path):
    transcript = tmp_path / "t.json"
    transcript.write_text(json.dumps({"*": ["line one\nline two", "again"]}))
    with SubprocessSampler(f"{MOCK_SAMPLER_CMD} {transcript}") as sampler:
        assert sampler(SamplerRequest("cap")) == "line one\nline two"
        assert sampler(SamplerRequest("cap", prefix="line one\n")) == "again"


def test_subprocess_sampler_protocol_violation(tmp_path):
    transcript = tmp_path / "t.json"
    transcript.write_text(json.dumps({"*": []}))  # immediately exhausted
    with SubprocessSampler(f"{MOCK_SAMPLER_CMD} {transcript}") as sampler:
        with pytest.raises(SamplerFailure):
            sampler(SamplerRequest("cap"))


def test_subprocess_sampler_dead_process():
    sampler = SubprocessSampler(f"{sys.executable} -c pass")
    with pytest.raises(SamplerFailure):
        sampler(SamplerRequest("cap"))
