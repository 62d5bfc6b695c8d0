from __future__ import annotations

import hashlib

import pytest

from regretplots.cli import main
from regretplots.figures import FigureSpec, plot
from regretplots.schema import SchemaError

CURVE_HEADER = ("t,algo,graph,n_nodes,d,L,measure,C,"
                "mean_regret,std_regret,mean_reward,n_seeds")


@pytest.fixture
def curve_file(tmp_path):
    def make(name, algo, rows):
        lines = [CURVE_HEADER]
        for t, mean, std in rows:
            lines.append(f"{t},{algo},chain,4,1,3,ad,10,{mean},{std},1.5,5")
        p = tmp_path / name
        p.write_text("\n".join(lines) + "\n")
        return p
    return make


@pytest.fixture
def summary_file(tmp_path):
    p = tmp_path / "summary.csv"
    p.write_text(
        "param,value,algo,final_mean_regret,final_std_regret,n_seeds\n"
        "C,2,robust_lcb,100,5,10\nC,50,robust_lcb,900,30,10\n"
        "C,500,robust_lcb,9000,100,10\nC,500,linsem_ucb,36000,400,10\n"
    )
    return p


@pytest.fixture
def bounds_file(tmp_path):
    p = tmp_path / "bounds.csv"
    p.write_text("param,value,upper_bound,lower_bound\n"
                 "d,1,3000,100\nd,2,12000,100\nd,3,29000,150\n")
    return p


class TestPlot:
    def test_overlay_curves(self, tmp_path, curve_file):
        a = curve_file("a.csv", "robust_lcb", [(1, 0.5, 0.1), (10, 4.0, 0.5), (20, 6.0, 0.5)])
        b = curve_file("b.csv", "linsem_ucb", [(1, 1.0, 0.1), (10, 9.0, 0.5), (20, 18.0, 0.5)])
        out = tmp_path / "fig.png"
        plot(FigureSpec(kind="regret_vs_t", inputs=[str(a), str(b)], out=str(out)))
        assert out.stat().st_size > 0

    def test_summary_figure_with_bounds_twin_axis(self, tmp_path, summary_file, bounds_file):
        out = tmp_path / "fig.png"
        plot(FigureSpec(kind="regret_vs_c", inputs=[str(summary_file)], out=str(out),
                        bounds=str(bounds_file), logx=True))
        assert out.stat().st_size > 0

    def test_inputs_unmodified(self, tmp_path, curve_file):
        a = curve_file("a.csv", "robust_lcb", [(1, 0.5, 0.1), (2, 1.0, 0.2)])
        before = hashlib.sha256(a.read_bytes()).hexdigest()
        plot(FigureSpec(kind="regret_vs_t", inputs=[str(a)], out=str(tmp_path / "f.png")))
        assert hashlib.sha256(a.read_bytes()).hexdigest() == before

    def test_rerender_is_byte_identical(self, tmp_path, curve_file):
        a = curve_file("a.csv", "robust_lcb", [(1, 0.5, 0.1), (2, 1.0, 0.2)])
        o1, o2 = tmp_path / "f1.png", tmp_path / "f2.png"
        plot(FigureSpec(kind="regret_vs_t", inputs=[str(a)], out=str(o1)))
        plot(FigureSpec(kind="regret_vs_t", inputs=[str(a)], out=str(o2)))
        assert o1.read_bytes() == o2.read_bytes()

    def test_empty_input_rejected_and_no_image(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text(CURVE_HEADER + "\n")
        out = tmp_path / "f.png"
        with pytest.raises(SchemaError, match="no data rows"):
            plot(FigureSpec(kind="regret_vs_t", inputs=[str(empty)], out=str(out)))
        assert not out.exists()

    def test_schema_mismatch_names_column(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("t,algo\n1,x\n")
        with pytest.raises(SchemaError, match="missing column"):
            plot(FigureSpec(kind="regret_vs_t", inputs=[str(bad)],
                            out=str(tmp_path / "f.png")))

    def test_unknown_kind_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="unknown figure kind"):
            FigureSpec(kind="pie", inputs=["x"], out="y")


class TestCli:
    def test_renders_and_reports(self, tmp_path, curve_file, capsys):
        a = curve_file("a.csv", "robust_lcb", [(1, 0.5, 0.1), (2, 1.0, 0.2)])
        out = tmp_path / "f.png"
        rc = main(["--kind", "regret_vs_t", "--in", str(a), "--out", str(out)])
        assert rc == 0
        assert out.exists()
        assert "wrote" in capsys.readouterr().out

    def test_error_exit_code(self, tmp_path, capsys):
        missing = tmp_path / "nope.csv"
        rc = main(["--kind", "regret_vs_t", "--in", str(missing),
                   "--out", str(tmp_path / "f.png")])
        assert rc == 1
        assert "error" in capsys.readouterr().err
