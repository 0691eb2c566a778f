"""Density, validity and creativity metrics for synthetic schedule samples."""

from pathlib import Path

from .distances import emd, l1_bivariate
from .marginals import (
    BivariateTimeDistribution,
    RateDistribution,
    TimeDistribution,
    Timings,
    enumerate_activities,
    ngram_rates,
    pair_participation_rates,
    participation_rates,
    sequence_lengths,
    timing_distributions,
)
from .report import (
    DISTRIBUTIONS,
    DOMAINS,
    EvalReport,
    SegmentRow,
    WelchResult,
    aggregate,
    combine_creativity,
    compare_runs,
    creativity,
    evaluate,
    invalidity,
    segment_rows,
)


def write_report(report: EvalReport, real, synthetic, out_dir, plots: bool = True) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(report.report_csv())
    (out / "summary.csv").write_text(report.summary_csv())
    if plots:
        from .plots import plot_activity_frequencies, plot_top_sequences

        plot_activity_frequencies(real, synthetic, out / "activity_frequencies.svg")
        plot_top_sequences(real, synthetic, out / "top_sequences.svg")


__all__ = [
    "emd", "l1_bivariate", "BivariateTimeDistribution", "RateDistribution",
    "TimeDistribution", "Timings", "enumerate_activities", "ngram_rates",
    "pair_participation_rates", "participation_rates", "sequence_lengths",
    "timing_distributions", "DISTRIBUTIONS", "DOMAINS", "EvalReport", "SegmentRow",
    "WelchResult", "aggregate", "combine_creativity", "compare_runs", "creativity",
    "evaluate", "invalidity", "segment_rows", "write_report",
]
