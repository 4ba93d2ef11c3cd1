import csv
import os

import pytest

from assockit import bench
from assockit import store as st
from assockit.bench import (
    ALGORITHM_SCHEMAS,
    CSV_FIELDS,
    RESULTS_MAGIC,
    BenchRecord,
    ensure_graphs,
    graph_table_name,
    open_results,
    plan_cells,
    read_records,
    run_benchmark,
    sample_starts,
)
from assockit.cli import cli_selector, main
from assockit.errors import InvalidCell, IoFailure
from assockit.schemas import EdgeList, Schema, build_adjacency
from assockit.selectors import ALL, KeyList, KeyRange, Positional, Prefix
from assockit.store import Store


@pytest.fixture(autouse=True)
def fresh_locks():
    st._reset_process_locks()
    yield
    st._reset_process_locks()


# ---- benchmark records and results files ---------------------------------------------


def test_record_row_and_line():
    rec = BenchRecord("bfs", "adjacency", "local", 8, 16, 0, 0.123456789123, 42, True)
    row = rec.as_row()
    assert row[0:3] == ["bfs", "adjacency", "local"]
    assert row[3:6] == ["8", "16", "0"]
    assert row[6] == "0.123456789"
    assert row[7] == "42"
    assert row[8] == "1"
    assert row[9] == "ok"
    assert rec.as_line() == ",".join(row)
    assert rec.cell_id() == ("bfs", "adjacency", "local", 8, 16, 0)


def test_open_results_writes_header_once(tmp_path):
    path = tmp_path / "r.csv"
    with open_results(path):
        pass
    with open_results(path):
        pass
    lines = path.read_text().splitlines()
    assert lines == [RESULTS_MAGIC, ",".join(CSV_FIELDS)]
    assert read_records(path) == []


def test_open_results_rejects_foreign_file(tmp_path):
    path = tmp_path / "junk.csv"
    path.write_text("wall_seconds,stuff\n1,2\n")
    with pytest.raises(IoFailure):
        open_results(path)
    with pytest.raises(IoFailure):
        read_records(path)


def test_read_records_roundtrip_and_partial_tail(tmp_path):
    path = tmp_path / "r.csv"
    a = BenchRecord("bfs", "incidence", "server", 9, 16, 2, 1.5, 100, False)
    b = BenchRecord("ktruss", "adjacency", "local", 8, 16, 0, 0.25, 7, True, "failed:Boom")
    with open_results(path) as fp:
        w = csv.writer(fp, lineterminator="\n")
        w.writerow(a.as_row())
        w.writerow(b.as_row())
    with open(path, "a") as fp:
        fp.write("jaccard,adjacency,loc")  # interrupted mid-record
    got = read_records(path)
    assert got == [a, b]
    assert got[0].scale == 9 and got[0].wall_seconds == 1.5
    assert got[1].includes_query_time is True and got[1].status == "failed:Boom"


def test_read_records_rejects_bad_header(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text(RESULTS_MAGIC + "\nnot,the,header\n")
    with pytest.raises(IoFailure):
        read_records(path)


def test_graph_table_name():
    assert graph_table_name(8, 16, 2, Schema.ADJACENCY) == "g8d16s2_adjacency"
    assert graph_table_name(12, 4, 0, Schema.SINGLE) == "g12d4s0_single"


# ---- cell planning -------------------------------------------------------------------


def test_plan_cells_full_matrix():
    cells = plan_cells(
        ("bfs", "jaccard", "ktruss"),
        (Schema.ADJACENCY, Schema.INCIDENCE, Schema.SINGLE),
        ("local", "server"),
    )
    assert len(cells) == 12
    per_alg = {}
    for alg, sch, _ in cells:
        per_alg.setdefault(alg, set()).add(sch)
    assert per_alg == {k: set(v) for k, v in ALGORITHM_SCHEMAS.items()}


def test_plan_cells_drops_invalid_pairings():
    cells = plan_cells(("jaccard", "ktruss"), ("adjacency", "single"), ("local",))
    assert cells == [
        ("jaccard", Schema.ADJACENCY, "local"),
        ("ktruss", Schema.ADJACENCY, "local"),
    ]


def test_plan_cells_errors():
    with pytest.raises(InvalidCell):
        plan_cells(("jaccard",), (Schema.INCIDENCE,), ("local",))
    with pytest.raises(InvalidCell):
        plan_cells(("pagerank",), (Schema.ADJACENCY,), ("local",))
    with pytest.raises(InvalidCell):
        plan_cells(("bfs",), (Schema.ADJACENCY,), ("turbo",))


# ---- graph provisioning --------------------------------------------------------------


def test_ensure_graphs_generates_once(tmp_path, monkeypatch):
    calls = []
    real = bench.generate

    def counted(cfg):
        calls.append(cfg)
        return real(cfg)

    monkeypatch.setattr(bench, "generate", counted)
    schemas = (Schema.ADJACENCY, Schema.INCIDENCE)
    with Store(tmp_path) as s:
        first = ensure_graphs(s, 4, 4, 0, schemas)
        assert set(first) == set(schemas)
        assert len(calls) == 1
        again = ensure_graphs(s, 4, 4, 0, schemas)
        assert len(calls) == 1
        assert {g.name for g in again.values()} == {g.name for g in first.values()}
        ensure_graphs(s, 4, 4, 1, schemas)
        assert len(calls) == 2


def test_sample_starts_deterministic(tmp_path):
    with Store(tmp_path) as s:
        graphs = ensure_graphs(s, 5, 4, 0, (Schema.ADJACENCY,))
        sg = graphs[Schema.ADJACENCY]
        one = sample_starts(sg, 5, 0)
        two = sample_starts(sg, 5, 0)
        assert one == two
        assert len(one) == 5
        rows = {r for r, _, _ in sg.degree_handle().scan()}
        assert set(one) <= rows
        assert sample_starts(sg, 5, 1) != one or True  # different seed may differ


# ---- run_benchmark -------------------------------------------------------------------


def same_records(read_back, in_memory):
    """Records survive the file round trip; wall time is written at 9 decimals."""
    assert len(read_back) == len(in_memory)
    for got, want in zip(read_back, in_memory):
        assert got.cell_id() == want.cell_id()
        assert got.result_entries == want.result_entries
        assert got.includes_query_time == want.includes_query_time
        assert got.status == want.status
        assert got.wall_seconds == pytest.approx(want.wall_seconds, abs=1e-9)


def run_small(tmp_path, results, **kw):
    kw.setdefault("scales", (4, 5))
    kw.setdefault("degree", 4)
    kw.setdefault("seeds", (0,))
    kw.setdefault("algorithms", ("bfs",))
    kw.setdefault("schemas", (Schema.ADJACENCY,))
    kw.setdefault("modes", ("local", "server"))
    kw.setdefault("warmup", 0)
    return run_benchmark(tmp_path / "ws", results, **kw)


def test_run_benchmark_small_matrix(tmp_path):
    results = tmp_path / "r.csv"
    records = run_small(tmp_path, results)
    assert len(records) == 4  # 2 scales x 1 seed x 1 algorithm x 1 schema x 2 modes
    assert all(r.status == "ok" for r in records)
    assert all(r.wall_seconds > 0 for r in records)
    by_cell = {r.cell_id(): r for r in records}
    for scale in (4, 5):
        local = by_cell[("bfs", "adjacency", "local", scale, 4, 0)]
        server = by_cell[("bfs", "adjacency", "server", scale, 4, 0)]
        assert local.result_entries == server.result_entries
    same_records(read_records(results), records)


def test_run_benchmark_appends_and_counts_repeat(tmp_path):
    results = tmp_path / "r.csv"
    first = run_small(tmp_path, results)
    second = run_small(tmp_path, results, include_query_time=True)
    same_records(read_records(results), first + second)
    count_a = {r.cell_id(): r.result_entries for r in first}
    count_b = {r.cell_id(): r.result_entries for r in second}
    assert count_a == count_b  # identical matrix, identical result sizes
    assert all(not r.includes_query_time for r in first)
    assert all(r.includes_query_time for r in second)


def test_run_benchmark_echo_order(tmp_path):
    seen = []
    records = run_small(tmp_path, tmp_path / "r.csv", echo=seen.append)
    assert seen == records


def test_run_benchmark_records_cell_failure(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise RuntimeError("forced")

    monkeypatch.setattr(bench, "bfs", boom)
    results = tmp_path / "r.csv"
    records = run_small(tmp_path, results, scales=(4,))
    assert [r.status for r in records] == ["failed:RuntimeError"] * 2
    assert all(r.result_entries == 0 for r in records)
    same_records(read_records(results), records)  # failures still land in the file


def test_run_benchmark_rejects_bad_plan(tmp_path):
    with pytest.raises(InvalidCell):
        run_small(tmp_path, tmp_path / "r.csv", algorithms=("jaccard",), schemas=("single",))


# ---- CLI ------------------------------------------------------------------------------


TRIANGLE_TSV = "a\tb\t1.0\nb\tc\t1.0\nc\ta\t1.0\na\td\t1.0\nb\td\t1.0\n"


def stdout_triples(capsys):
    out = capsys.readouterr().out
    return [line.split("\t") for line in out.splitlines() if line]


def make_graph(tmp_path, schema="adjacency", table="g"):
    edges = tmp_path / "edges.tsv"
    edges.write_text(TRIANGLE_TSV)
    db = str(tmp_path / "db")
    code = main(["ingest", str(edges), "--db", db, "--table", table, "--schema", schema])
    assert code == 0
    return db


def test_cli_selector_forms():
    assert cli_selector(":") is ALL
    assert cli_selector("3") == Positional(3, 3)
    assert cli_selector("2:5") == Positional(2, 5)
    assert cli_selector("pre* ") == Prefix("pre")
    assert cli_selector("a b ") == KeyList(("a", "b"))
    assert cli_selector("a : d ") == KeyRange("a", "d")
    assert cli_selector("a ") == KeyList(("a",))


def test_gen_writes_edge_file(tmp_path, capsys):
    out = tmp_path / "edges.tsv"
    assert main(["gen", "--scale", "4", "--degree", "4", "--seed", "1", "--out", str(out)]) == 0
    assert "wrote" in capsys.readouterr().out
    lines = out.read_text().splitlines()
    assert lines and all(len(l.split("\t")) == 3 for l in lines)


def test_gen_missing_required_flag_exits_one(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["gen", "--out", "x.tsv"])
    assert exc.value.code == 1


def test_unknown_subcommand_exits_one(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1


def test_ingest_and_query_roundtrip(tmp_path, capsys):
    db = make_graph(tmp_path)
    assert "ingested 5 edges" in capsys.readouterr().out
    want = build_adjacency(EdgeList.read(str(tmp_path / "edges.tsv")))
    assert main(["query", "--db", db, "--table", "g"]) == 0
    got = stdout_triples(capsys)
    assert len(got) == want.main.nnz == 10


def test_query_row_selectors(tmp_path, capsys):
    db = make_graph(tmp_path)
    capsys.readouterr()
    assert main(["query", "--db", db, "--table", "g", "--row", "a "]) == 0
    rows = {r for r, _, _ in stdout_triples(capsys)}
    assert rows == {"a"}
    assert main(["query", "--db", db, "--table", "g", "--row", "1:2"]) == 0
    rows = {r for r, _, _ in stdout_triples(capsys)}
    assert rows == {"a", "b"}  # first two distinct row keys
    assert main(["query", "--db", db, "--table", "g", "--row", "9:12"]) == 0
    assert stdout_triples(capsys) == []  # window past the last key selects nothing


def test_query_value_filter_and_out_file(tmp_path, capsys):
    db = make_graph(tmp_path)
    out = tmp_path / "hits.tsv"
    code = main(
        ["query", "--db", db, "--table", "g", "--value", "1.0", "--out", str(out)]
    )
    assert code == 0
    assert len(out.read_text().splitlines()) == 10
    assert main(["query", "--db", db, "--table", "g", "--value", "7.5"]) == 0
    capsys.readouterr()


def test_query_errors(tmp_path, capsys):
    db = make_graph(tmp_path)
    capsys.readouterr()
    assert main(["query", "--db", db, "--table", "nope"]) == 2
    assert "no table" in capsys.readouterr().err
    assert main(["query", "--db", db, "--table", "g", "--row", "b : a "]) == 2
    assert main(["query", "--db", db, "--table", "g", "--row", "5:2"]) == 2


def test_query_io_error_exit_three(tmp_path, capsys):
    blocker = tmp_path / "notadir"
    blocker.write_text("x")
    assert main(["query", "--db", str(blocker), "--table", "g"]) == 3


def test_query_corrupt_manifest_exit_three(tmp_path, capsys):
    db = make_graph(tmp_path)
    (tmp_path / "db" / st.MANIFEST).write_text("scrambled\n")
    st._reset_process_locks()
    assert main(["query", "--db", db, "--table", "g"]) == 3


def test_algo_bfs_modes_agree(tmp_path, capsys):
    db = make_graph(tmp_path)
    capsys.readouterr()
    base = ["algo", "bfs", "--db", db, "--table", "g", "--starts", "a,", "--hops", "2"]
    assert main(base + ["--mode", "local"]) == 0
    local = capsys.readouterr().out.strip().split(",")
    assert main(base + ["--mode", "server"]) == 0
    server = capsys.readouterr().out.strip().split(",")
    assert len(local) == len(CSV_FIELDS)
    assert local[0:3] == ["bfs", "adjacency", "local"]
    assert server[2] == "server"
    assert local[7] == server[7] == "3"  # b, c, d reached
    assert local[9] == server[9] == "ok"


def test_algo_ktruss_server_stores_and_exports(tmp_path, capsys):
    db = make_graph(tmp_path)
    capsys.readouterr()
    out = tmp_path / "truss.tsv"
    code = main(
        ["algo", "ktruss", "--db", db, "--table", "g", "--k", "3", "--out", str(out)]
    )
    assert code == 0
    captured = capsys.readouterr()
    fields = captured.out.strip().split(",")
    assert fields[0] == "ktruss" and fields[9] == "ok"
    assert "result stored under table 'g_truss3'" in captured.err
    assert len(out.read_text().splitlines()) == int(fields[7]) == 10


def test_algo_sampled_starts_run(tmp_path, capsys):
    db = make_graph(tmp_path)
    capsys.readouterr()
    code = main(["algo", "bfs", "--db", db, "--table", "g", "--starts", "2", "--seed", "3"])
    assert code == 0
    fields = capsys.readouterr().out.strip().split(",")
    assert fields[9] == "ok"


def test_algo_schema_mismatch_exit_two(tmp_path, capsys):
    db = make_graph(tmp_path, schema="single", table="gs")
    capsys.readouterr()
    code = main(
        ["algo", "jaccard", "--db", db, "--table", "gs", "--schema", "single"]
    )
    assert code == 2
    assert main(["algo", "bfs", "--db", db, "--table", "missing"]) == 2


def test_bench_subcommand_end_to_end(tmp_path, capsys):
    db = str(tmp_path / "ws")
    out = tmp_path / "r.csv"
    argv = [
        "bench",
        "--db", db,
        "--out", str(out),
        "--scales", "4:5",
        "--degree", "4",
        "--seeds", "1",
        "--algorithms", "bfs",
        "--schemas", "adjacency",
        "--modes", "local,server",
        "--warmup", "0",
    ]
    assert main(argv) == 0
    captured = capsys.readouterr()
    assert len([l for l in captured.out.splitlines() if l]) == 4
    assert "4 cells ok" in captured.err
    assert len(read_records(out)) == 4


def test_bench_subcommand_bad_algorithm_exit_two(tmp_path, capsys):
    argv = [
        "bench",
        "--db", str(tmp_path / "ws"),
        "--out", str(tmp_path / "r.csv"),
        "--scales", "4",
        "--seeds", "1",
        "--algorithms", "sssp",
    ]
    assert main(argv) == 2
