import numpy as np
import pytest

from qforma.errors import MatrixFormatError
from qforma.linalg import SymmetricMatrix, gen_block_ones, random_symmetric
from qforma.matio import (
    format_data,
    format_dense,
    format_triplets,
    parse_data,
    parse_dense,
    parse_matrix,
    parse_triplets,
    read_matrix,
    write_matrix,
)


def test_dense_round_trip_is_exact():
    a = random_symmetric(6, np.random.default_rng(1))
    assert parse_dense(format_dense(a)) == a


def test_triplet_round_trip_is_exact():
    a = gen_block_ones(3, 2).scaled(1 / 3)
    text = format_triplets(a)
    assert text.splitlines()[0] == "6 9"
    assert parse_triplets(text) == a


def test_triplets_mirror_upper_triangle():
    a = parse_matrix("3 2\n1 2 0.5\n3 3 2\n")
    assert np.array_equal(a.values, [[0, 0.5, 0], [0.5, 0, 0], [0, 0, 2]])


@pytest.mark.parametrize("text", [
    "",
    "2\n1,2\n",
    "2\n1,2\n3\n",
    "2\n1,x\n1,2\n",
    "2\n1,2\n3,4\n",  # asymmetric
    "2 1\n2 1 1.0\n",  # below diagonal
    "2 1\n1 3 1.0\n",  # out of range
    "2 2\n1 1 1.0\n",  # nnz mismatch
])
def test_malformed(text):
    with pytest.raises(MatrixFormatError):
        parse_matrix(text)


def test_file_io(tmp_path):
    a = random_symmetric(4, np.random.default_rng(2))
    write_matrix(a, tmp_path / "a.csv")
    write_matrix(a, tmp_path / "a.txt", sparse=True)
    assert read_matrix(tmp_path / "a.csv") == a
    assert read_matrix(tmp_path / "a.txt") == a
    with pytest.raises(MatrixFormatError):
        read_matrix(tmp_path / "missing.csv")


def test_seventeen_digits():
    a = SymmetricMatrix([[0.1]])
    assert format_dense(a).splitlines()[1] == "0.10000000000000001"


def test_data_round_trip():
    x = np.random.default_rng(3).standard_normal((5, 3))
    assert np.array_equal(parse_data(format_data(x)), x)
    with pytest.raises(MatrixFormatError):
        parse_data("2 3\n1,2,3\n")
    with pytest.raises(MatrixFormatError):
        parse_data("1 3\n1,2\n")
