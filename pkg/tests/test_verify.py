import pytest

from belllab.verify import run_verification


def test_default_suite_passes():
    summary = run_verification(seed=0, samples=30)
    assert summary.passed
    names = [r.name for r in summary.results]
    assert names == [
        "density-normalization",
        "chsh-bound-oracle",
        "q-range",
        "closure-smoothed",
        "oracle-vs-mc",
    ]
    assert all(r.checked > 0 for r in summary.results)


def test_fault_injection_caught_only_by_oracle_agreement():
    def flip_bits(log):
        flipped = log.outcome_a.copy()
        flipped[::5] ^= 1
        log.outcome_a = flipped
        return log

    summary = run_verification(seed=0, samples=30, records_filter=flip_bits)
    by_name = {r.name: r for r in summary.results}
    assert by_name["density-normalization"].ok
    assert by_name["chsh-bound-oracle"].ok
    assert by_name["q-range"].ok
    assert by_name["closure-smoothed"].ok
    assert not by_name["oracle-vs-mc"].ok
    assert not summary.passed
    # failure lines name a reproducing seed
    assert any("seed" in f for f in by_name["oracle-vs-mc"].failures)


def test_zero_samples_rejected():
    with pytest.raises(ValueError):
        run_verification(samples=0)


def test_summary_lines_format():
    summary = run_verification(seed=3, samples=5)
    lines = summary.lines()
    assert any(line.startswith("chsh-bound-oracle:") for line in lines)
    assert lines[-1].startswith("verify:")
