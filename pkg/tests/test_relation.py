import io
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import T1, T2, T3, T4, T6
from fdrepair.relation import (DataError, FDError, FunctionalDependency, Instance, dist_sub, inc_deg,
                               is_consistent, parse_fd_set, partition, read_csv, write_csv)


def test_parse_fd_line():
    (fd,) = parse_fd_set("zip -> CT,ST")
    assert fd.determinant == ("zip",)
    assert fd.dependent == ("CT", "ST")
    assert not fd.trivial


def test_trivial_fd_flagged():
    (fd,) = parse_fd_set("A -> A")
    assert fd.trivial


def test_empty_determinant_rejected_with_line():
    with pytest.raises(FDError) as err:
        parse_fd_set("A -> B\n-> B")
    assert err.value.line == 2


@pytest.mark.parametrize("text", ["A B", "A -> B -> C", "A ->", "A,,B -> C"])
def test_syntax_errors(text):
    with pytest.raises(FDError):
        parse_fd_set(text)


def test_unknown_attribute(running):
    inst, _ = running
    with pytest.raises(FDError):
        parse_fd_set("zip -> county", inst.schema)


def test_comments_and_blank_lines_skipped():
    fds = parse_fd_set("# header\n\nA -> B\n  # note\nB,C -> D\n")
    assert [str(f) for f in fds] == ["A -> B", "B,C -> D"]


def test_partition_running_example(running, fd2):
    inst, _ = running
    part = partition(inst, fd2[0])
    assert len(part.determinant_classes) == 1
    assert len(next(iter(part.determinant_classes.values()))) == 6
    assert sorted(len(v) for v in part.dependent_classes.values()) == [1, 1, 2, 2]


def test_partition_empty_instance():
    inst = Instance.from_rows(["A", "B"], [])
    part = partition(inst, FunctionalDependency(("A",), ("B",)))
    assert part.determinant_classes == {} and part.dependent_classes == {}


def test_consistency_examples(running, fd2):
    inst, _ = running
    assert is_consistent({T1, T2}, inst, fd2)
    assert is_consistent({T4}, inst, fd2)
    assert not is_consistent({T1, T3}, inst, fd2)
    with pytest.raises(DataError):
        is_consistent({99}, inst, fd2)


def test_distance_and_degree(running):
    inst, _ = running
    assert dist_sub({T1, T2}, inst) == 4
    assert dist_sub(inst.ids, inst) == 0
    assert dist_sub(set(), inst) == 6
    assert inc_deg({T1, T2}, range(6)) == Fraction(2, 3)
    assert inc_deg({T1, T2}, {T1, T2, T4, T6}) == Fraction(1, 2)
    assert inc_deg({0, 1}, {0, 1}) == 0
    with pytest.raises(ValueError):
        inc_deg(set(), set())


def test_whitespace_is_trimmed_only():
    inst = Instance.from_rows(["A", "B"], [[" x ", "1"], ["x", "01"]])
    assert inst.rows[0][0] == "x"
    assert not is_consistent({0, 1}, inst, [FunctionalDependency(("A",), ("B",))])


def test_csv_round_trip_keeps_numeric_header(running):
    inst, _ = running
    buf = io.StringIO()
    write_csv(inst, buf)
    again = read_csv(io.StringIO(buf.getvalue()))
    assert again.rows == inst.rows and again.numeric == inst.numeric


def test_csv_quoted_values():
    inst = read_csv(io.StringIO('A,B\n"x, y",2\n'))
    assert inst.rows == (("x, y", "2"),)


rows_st = st.lists(st.lists(st.sampled_from("abc"), min_size=3, max_size=3), max_size=30)


@settings(max_examples=150, deadline=None)
@given(rows_st)
def test_partition_exhaustive_and_nested(rows):
    inst = Instance.from_rows(["A", "B", "C"], rows)
    part = partition(inst, FunctionalDependency(("A",), ("B", "C")))
    det = [t for ids in part.determinant_classes.values() for t in ids]
    dep = [t for ids in part.dependent_classes.values() for t in ids]
    assert sorted(det) == sorted(dep) == list(inst.ids)
    for (x, _), ids in part.dependent_classes.items():
        assert set(ids) <= set(part.determinant_classes[x])


@settings(max_examples=150, deadline=None)
@given(rows_st, st.data())
def test_distance_identity_and_degree_monotone(rows, data):
    inst = Instance.from_rows(["A", "B", "C"], rows)
    j = data.draw(st.sets(st.sampled_from(list(inst.ids)))) if rows else set()
    assert dist_sub(j, inst) + len(j) == len(inst)
    if j:
        smaller = set(list(j)[1:])
        assert inc_deg(smaller, inst.ids) >= inc_deg(j, inst.ids)
