from __future__ import annotations

import pytest

from regretplots.schema import SchemaError, read_bounds, read_curve, read_summary

CURVE_HEADER = ("t,algo,graph,n_nodes,d,L,measure,C,"
                "mean_regret,std_regret,mean_reward,n_seeds")


def write_curve(path, rows):
    lines = [CURVE_HEADER]
    for t, mean, std in rows:
        lines.append(f"{t},robust_lcb,chain,4,1,3,ad,10,{mean},{std},1.5,5")
    path.write_text("\n".join(lines) + "\n")


class TestCurveReader:
    def test_reads_fields(self, tmp_path):
        p = tmp_path / "c.csv"
        write_curve(p, [(1, 0.5, 0.1), (2, 1.0, 0.2)])
        c = read_curve(str(p))
        assert c.algo == "robust_lcb"
        assert c.t.tolist() == [1, 2]
        assert c.mean_regret.tolist() == [0.5, 1.0]
        assert c.n_seeds == 5

    def test_missing_column_named(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("t,algo,graph\n1,x,chain\n")
        with pytest.raises(SchemaError, match="missing column 'n_nodes'"):
            read_curve(str(p))

    def test_empty_file_rejected(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text(CURVE_HEADER + "\n")
        with pytest.raises(SchemaError, match="no data rows"):
            read_curve(str(p))

    def test_short_row_rejected_with_line(self, tmp_path):
        p = tmp_path / "short.csv"
        p.write_text(CURVE_HEADER + "\n1,robust_lcb,chain\n")
        with pytest.raises(SchemaError, match=":2:"):
            read_curve(str(p))


class TestSummaryReader:
    def test_reads_rows(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text(
            "param,value,algo,final_mean_regret,final_std_regret,n_seeds\n"
            "C,2,robust_lcb,100.5,3.5,10\n"
            "C,50,robust_lcb,900,20,10\n"
        )
        s = read_summary(str(p))
        assert s.param == "C"
        assert s.values.tolist() == [2.0, 50.0]
        assert s.final_mean.tolist() == [100.5, 900.0]

    def test_wrong_order_rejected(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("value,param,algo,final_mean_regret,final_std_regret,n_seeds\n")
        with pytest.raises(SchemaError):
            read_summary(str(p))


class TestBoundsReader:
    def test_reads_rows(self, tmp_path):
        p = tmp_path / "b.csv"
        p.write_text("param,value,upper_bound,lower_bound\nd,1,100,10\nd,2,300,20\n")
        b = read_bounds(str(p))
        assert b.param == "d"
        assert b.upper.tolist() == [100.0, 300.0]
        assert b.lower.tolist() == [10.0, 20.0]
