from fractions import Fraction

import pytest

from hypmix._general import DomainError
from hypmix.cli import (
    cohomology_records,
    dispatch,
    emit_csv,
    main,
    partition_records,
)
from hypmix.map_family import modular_family
from hypmix.measure import DensitySpec
from hypmix.roof import RoofConfig

FAMILY = modular_family()


class TestEmitCsv:
    def test_stdout(self, capsys):
        emit_csv([{"s": 2, "c": Fraction(3, 5), "ok": True}], None)
        assert capsys.readouterr().out == "s,c,ok\n2,3/5,True\n"

    def test_header_only(self, tmp_path):
        path = tmp_path / "sub" / "empty.csv"
        emit_csv([], path, ["t", "c_hat"])
        assert path.read_text(encoding="utf-8") == "t,c_hat\n"

    def test_keys(self, tmp_path):
        with pytest.raises(DomainError, match="should have the keys"):
            emit_csv([{"a": 1}, {"b": 2}], tmp_path / "bad.csv")


class TestRecords:
    def test_partition(self):
        records = partition_records(FAMILY, 3, 2)
        assert len(records) == 4
        assert records[0] == {
            "s": 2,
            "q": 1,
            "c": Fraction(3, 5),
            "d": Fraction(2, 3),
            "length": Fraction(1, 15),
            "fhat_d1_at_d": 9,
        }

    def test_cohomology(self):
        spec = DensitySpec(FAMILY)
        records = cohomology_records(FAMILY, RoofConfig(1.0, 20), spec, 3, 0)
        assert len(records) == 3
        assert all(record["pass"] for record in records)
        assert list(records[0]) == [
            "x",
            "y",
            "residual",
            "tail_bound",
            "fiber_gap",
            "pass",
        ]


class TestDispatch:
    def test_usage(self):
        assert dispatch(["badcmd"]) == 2
        assert dispatch([]) == 2
        assert dispatch(["partition", "--s-max", "1.5"]) == 2
        assert main(["--help"]) == 0

    def test_config_errors(self, tmp_path):
        out = tmp_path / "report.csv"
        assert dispatch(["verify", "--sigma", "0.6", "--out", str(out)]) == 2
        assert not out.exists()
        assert dispatch(["partition", "--s-max", "1"]) == 2
        assert dispatch(["check", "--n-max", "1"]) == 2

    def test_check(self, tmp_path):
        out = tmp_path / "check.csv"
        assert dispatch(["check", "--n-max", "200", "--out", str(out)]) == 0
        header = out.read_text(encoding="utf-8").splitlines()[0]
        assert "assumption" in header.split(",")

    def test_partition(self, tmp_path):
        out = tmp_path / "partitions.csv"
        code = dispatch(
            ["partition", "--s-max", "3", "--q-max", "2", "--out", str(out)]
        )
        assert code == 0
        lines = out.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "s,q,c,d,length,fhat_d1_at_d"
        assert lines[1] == "2,1,3/5,2/3,1/15,9"
        assert len(lines) == 5

    def test_config_file(self, tmp_path):
        config = tmp_path / "run.ini"
        config.write_text(
            f"[run]\noutput_dir = {tmp_path / 'results'}\n", encoding="utf-8"
        )
        code = dispatch(
            ["partition", "--s-max", "2", "--q-max", "1e1", "-q"]
            + ["--config", str(config)]
        )
        assert code == 0
        lines = (tmp_path / "results" / "partitions.csv").read_text(
            encoding="utf-8"
        )
        assert len(lines.splitlines()) == 11
