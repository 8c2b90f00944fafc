"""Report rendering tests: aligned tables, CSV summary, figures, histogram."""

from labrag.evaluation import MetricRow
from labrag.experiment import EvaluationReport
from labrag.report import (
    chunk_size_histogram,
    grid_figure,
    overall_table,
    summary_csv,
    topk_figure,
    topk_table,
    write_outputs,
)


def fake_report(experiment_id="exp1", ar=0.7, f=0.6, cr=0.5):
    ks = [1, 2, 4, 8]
    rows = [MetricRow(
        question_id=0, faithfulness=f, answer_relevance=ar, context_recall=cr,
        precision_at={k: 1.0 / k for k in ks},
        recall_at={k: min(1.0, 0.2 * k) for k in ks},
        f1_at={k: 0.5 for k in ks},
    )]
    return EvaluationReport(
        experiment_id=experiment_id,
        config={"description": f"demo {experiment_id}", "ks": ks},
        rows=rows,
        aggregates={
            "faithfulness": f, "answer_relevance": ar, "context_recall": cr,
            "precision_at": {str(k): 1.0 / k for k in ks},
            "recall_at": {str(k): min(1.0, 0.2 * k) for k in ks},
            "f1_at": {str(k): 0.5 for k in ks},
        },
        runtime_ms=12.5,
        num_chunks=9,
    )


def test_overall_table_shape():
    table = overall_table([fake_report("exp1"), fake_report("exp2", ar=None)])
    lines = table.splitlines()
    assert "Answer Relevance" in lines[0]
    assert len(lines) == 4  # header, rule, two rows
    assert "exp2" in lines[3]
    assert "-" in lines[3]  # missing metric rendered as a dash


def test_topk_table_rows():
    table = topk_table(fake_report())
    lines = table.splitlines()
    assert lines[0].startswith("k")
    assert len(lines) == 6
    assert lines[2].startswith("1")
    assert "1.000" in lines[2]


def test_summary_csv_columns():
    csv_text = summary_csv([fake_report()])
    header, row = csv_text.splitlines()
    assert header.split(",")[:4] == ["experiment_id", "description", "num_chunks",
                                     "answer_relevance"]
    assert "precision_at_8" in header
    assert row.startswith("exp1,")


def test_write_outputs_files_and_figures(tmp_path):
    reports = [fake_report("exp1"), fake_report("exp2")]
    written = write_outputs(reports, tmp_path / "out")
    names = {p.name for p in written}
    assert names == {"exp1.json", "exp2.json", "summary.csv",
                     "exp1_topk.png", "exp2_topk.png", "grid_metrics.png"}
    for p in written:
        assert p.exists() and p.stat().st_size > 0


def test_figures_render_deterministically(tmp_path):
    report = fake_report()
    topk_figure(report, tmp_path / "a.png")
    topk_figure(report, tmp_path / "b.png")
    assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()
    grid_figure([report, fake_report("exp2")], tmp_path / "g1.png")
    grid_figure([report, fake_report("exp2")], tmp_path / "g2.png")
    assert (tmp_path / "g1.png").read_bytes() == (tmp_path / "g2.png").read_bytes()


def test_chunk_size_histogram_buckets():
    text = chunk_size_histogram([10, 100, 300, 3000])
    assert "chunks: 4" in text
    assert "max tokens: 3000" in text
    assert ">= 2048" in text  # oversized-chunk bucket is visible
