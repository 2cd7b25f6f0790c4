import numpy as np
import pytest

from hdmean import NonFinite, ParseError, TwoSampleProblem, invariance_problem
from hdmean.cli import main
from hdmean.io import (
    LONG_TABLE_HEADER,
    MatrixFile,
    format_aligned,
    format_long_table,
    parse_matrix_text,
    read_matrix,
    result_document,
    write_matrix,
)

# ---------------------------------------------------------------------------
# matrix parsing


def test_parse_simple_csv():
    np.testing.assert_array_equal(
        parse_matrix_text("1,2\n3,4\n"), [[1.0, 2.0], [3.0, 4.0]]
    )


def test_parse_skips_header_and_blank_lines():
    text = "gene_a,gene_b\n1,2\n\n3,4\n"
    np.testing.assert_array_equal(
        parse_matrix_text(text, header=True), [[1.0, 2.0], [3.0, 4.0]]
    )


def test_parse_cols_orientation_transposes():
    # one variable per row: 2 variables x 3 observations
    m = parse_matrix_text("1,2,3\n4,5,6\n", orientation="cols")
    np.testing.assert_array_equal(m, [[1.0, 4.0], [2.0, 5.0], [3.0, 6.0]])


def test_parse_ragged_row_is_a_parse_error():
    with pytest.raises(ParseError) as err:
        parse_matrix_text("1,2\n3,4,5\n6,7\n")
    assert err.value.line == 2
    assert "expected 2 fields" in str(err.value)


def test_parse_bad_token_reports_position():
    with pytest.raises(ParseError) as err:
        parse_matrix_text("1,2\n3,oops\n")
    assert (err.value.line, err.value.column) == (2, 2)


def test_parse_na_token_becomes_nonfinite():
    with pytest.raises(NonFinite) as err:
        parse_matrix_text("1,2\n3,NA\n5,6\n")
    assert (err.value.row, err.value.col) == (1, 1)


def test_parse_empty_input():
    with pytest.raises(ParseError):
        parse_matrix_text("\n\n")


def test_matrix_round_trip_is_bit_identical(tmp_path):
    rng = np.random.default_rng(0)
    m = rng.standard_normal((7, 4)) * 10.0 ** rng.integers(-8, 8, size=(7, 4))
    path = tmp_path / "m.csv"
    write_matrix(m, path)
    back = read_matrix(MatrixFile(path))
    np.testing.assert_array_equal(back, m)


def test_matrix_file_validation(tmp_path):
    with pytest.raises(ValueError):
        MatrixFile(tmp_path / "m.csv", delimiter=",,")
    with pytest.raises(ValueError):
        MatrixFile(tmp_path / "m.csv", orientation="diag")


# ---------------------------------------------------------------------------
# result documents and tables


def test_result_document_format_and_order():
    doc = result_document({"b": 1, "a": 0.5, "flag": True, "off": False})
    assert doc == "b = 1\na = 0.5\nflag = true\noff = false\n"


def test_long_table_format():
    rows = [("s", "rs", 0.05, 0.049, 0.02, 0.08)]
    text = format_long_table(rows)
    lines = text.splitlines()
    assert lines[0] == "\t".join(LONG_TABLE_HEADER)
    assert lines[1].split("\t")[0:2] == ["s", "rs"]


def test_aligned_table_pads_columns():
    text = format_aligned(("name", "v"), [("long-name", 1), ("s", 22)])
    lines = text.splitlines()
    assert lines[0].startswith("name")
    assert len({len(l) for l in lines if l.strip()}) <= 2  # consistent padding


# ---------------------------------------------------------------------------
# bundled dataset


def test_invariance_problem_shape_and_corners():
    prob = invariance_problem()
    assert (prob.n_x, prob.n_y, prob.p) == (5, 5, 20)
    assert prob.x[0, 0] == 1.46
    assert prob.x[4, 19] == 0.75
    assert prob.y[0, 0] == 1.57
    assert prob.y[4, 19] == 2.2


# ---------------------------------------------------------------------------
# CLI


@pytest.fixture
def matrix_pair(tmp_path):
    rng = np.random.default_rng(42)
    x = rng.standard_normal((8, 10))
    y = rng.standard_normal((8, 10)) + 0.5
    xp = tmp_path / "x.csv"
    yp = tmp_path / "y.csv"
    write_matrix(x, xp)
    write_matrix(y, yp)
    return str(xp), str(yp)


def _doc(text):
    return dict(line.split(" = ", 1) for line in text.strip().splitlines())


def test_cli_test_rs_document(matrix_pair, capsys):
    xp, yp = matrix_pair
    argv = ["test", "--x", xp, "--y", yp, "--method", "rs", "--b1", "5", "--b2", "40", "--seed", "3"]
    assert main(argv) == 0
    out = capsys.readouterr()
    doc = _doc(out.out)
    assert doc["method"] == "rs"
    assert doc["k"] == "7"  # floor((8+8-2)/2)
    assert 0.0 <= float(doc["p_value"]) <= 1.0
    assert doc["reject"] in ("true", "false")
    assert "wall_time_seconds" in out.err
    assert "wall_time_seconds" not in out.out


def test_cli_output_is_identical_across_threads(matrix_pair, capsys):
    xp, yp = matrix_pair
    base = ["test", "--x", xp, "--y", yp, "--method", "lopes", "--b1", "5", "--b2", "40"]
    outs = []
    for threads in ("1", "3", "3"):
        assert main(base + ["--threads", threads]) == 0
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1] == outs[2]


def test_cli_out_file_matches_stdout(matrix_pair, tmp_path, capsys):
    xp, yp = matrix_pair
    base = ["test", "--x", xp, "--y", yp, "--method", "sd", "--b2", "30"]
    assert main(base) == 0
    stdout_doc = capsys.readouterr().out
    target = tmp_path / "result.txt"
    assert main(base + ["--out", str(target)]) == 0
    capsys.readouterr()
    assert target.read_text() == stdout_doc


def test_cli_dump_replicates(matrix_pair, tmp_path, capsys):
    xp, yp = matrix_pair
    dump = tmp_path / "reps.txt"
    argv = [
        "test", "--x", xp, "--y", yp, "--method", "rs",
        "--b1", "4", "--b2", "25", "--dump-replicates", str(dump),
    ]
    assert main(argv) == 0
    capsys.readouterr()
    values = [float(line) for line in dump.read_text().splitlines()]
    assert len(values) == 25


def test_cli_marginal_methods(matrix_pair, capsys):
    xp, yp = matrix_pair
    for method in ("cq", "bonferroni", "bh"):
        assert main(["test", "--x", xp, "--y", yp, "--method", method]) == 0
        doc = _doc(capsys.readouterr().out)
        assert doc["method"] == method
        assert (float(doc["p_value"]) <= 0.05) == (doc["reject"] == "true")


def test_cli_missing_file_is_input_error(tmp_path, capsys):
    missing = str(tmp_path / "nope.csv")
    code = main(["test", "--x", missing, "--y", missing, "--method", "cq"])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_cli_dimension_mismatch_is_input_error(tmp_path, capsys):
    xp = tmp_path / "x.csv"
    yp = tmp_path / "y.csv"
    write_matrix(np.ones((4, 3)) + np.arange(12).reshape(4, 3), xp)
    write_matrix(np.ones((4, 2)) + np.arange(8).reshape(4, 2), yp)
    code = main(["test", "--x", str(xp), "--y", str(yp), "--method", "cq"])
    assert code == 2
    assert "dimension mismatch" in capsys.readouterr().err


def test_cli_bad_k_is_input_error(matrix_pair, capsys):
    xp, yp = matrix_pair
    code = main(["test", "--x", xp, "--y", yp, "--method", "rs", "--k", "100"])
    assert code == 2
    capsys.readouterr()


def test_cli_na_cell_is_input_error(tmp_path, capsys):
    xp = tmp_path / "x.csv"
    xp.write_text("1,2\n3,NA\n4,5\n")
    code = main(["test", "--x", str(xp), "--y", str(xp), "--method", "cq"])
    assert code == 2
    assert "non-finite" in capsys.readouterr().err


def test_cli_singular_data_is_numerical_error(tmp_path, capsys):
    rng = np.random.default_rng(5)
    x = rng.standard_normal((5, 3))
    y = rng.standard_normal((5, 3))
    x[:, 1] = 7.0
    y[:, 1] = 7.0
    xp = tmp_path / "x.csv"
    yp = tmp_path / "y.csv"
    write_matrix(x, xp)
    write_matrix(y, yp)
    code = main(["test", "--x", str(xp), "--y", str(yp), "--method", "rs", "--k", "3", "--b1", "2", "--b2", "10"])
    assert code == 3
    assert "singular" in capsys.readouterr().err


def test_cli_rejects_unknown_method(matrix_pair):
    xp, yp = matrix_pair
    with pytest.raises(SystemExit):
        main(["test", "--x", xp, "--y", yp, "--method", "anova"])


def test_cli_simulate_type1_table(capsys):
    argv = [
        "simulate", "type1", "--tests", "cq", "--replicates", "6",
        "--seed", "1", "--threads", "1",
    ]
    assert main(argv) == 0
    out1 = capsys.readouterr().out
    lines = out1.strip().splitlines()
    assert lines[0] == "\t".join(LONG_TABLE_HEADER)
    assert len(lines) == 3  # two scenarios x one test
    assert main(argv) == 0  # rerun reproduces the bytes
    assert capsys.readouterr().out == out1


def test_cli_simulate_type1_unknown_test(capsys):
    code = main(["simulate", "type1", "--tests", "anova", "--replicates", "2"])
    assert code == 2
    assert "unknown tests" in capsys.readouterr().err


def test_cli_simulate_ksweep_reports_best_k(capsys):
    argv = [
        "simulate", "ksweep", "--k-grid", "2,5", "--replicates", "3",
        "--b1", "4", "--b2", "20", "--norm", "2.5",
    ]
    assert main(argv) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "\t".join(LONG_TABLE_HEADER)
    assert "best_k = " in out


def test_cli_simulate_invariance_doc(capsys):
    argv = ["simulate", "invariance", "--b1", "10", "--b2", "30", "--k", "4"]
    assert main(argv) == 0
    doc = _doc(capsys.readouterr().out)
    assert doc["rs_p_raw"] == doc["rs_p_std"]
    assert doc["k"] == "4"


def test_cli_simulate_bench_table(capsys):
    argv = [
        "simulate", "bench", "--k", "3", "--threads", "1", "--repeats", "1",
        "--b1", "3", "--b2", "8", "--backends", "numpy",
    ]
    assert main(argv) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].split("\t") == ["backend", "k", "threads", "seconds", "speedup"]
    assert lines[1].startswith("numpy\t3\t1\t")


def test_cli_simulate_table_to_file_echoes_aligned(tmp_path, capsys):
    out = tmp_path / "rates.tsv"
    argv = [
        "simulate", "type1", "--tests", "bonferroni", "--replicates", "4",
        "--out", str(out),
    ]
    assert main(argv) == 0
    echoed = capsys.readouterr().out
    assert out.read_text().startswith("\t".join(LONG_TABLE_HEADER))
    assert echoed.startswith("scenario")  # aligned preview on stdout
