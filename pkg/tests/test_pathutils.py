import pathlib

import pytest

from sicprob import pathutils


def test_get_str_filepath(tmp_path: pathlib.Path):
    filepath = tmp_path / "input.json"
    filepath.write_text("{}")
    assert pathutils.get_str_filepath(filepath) == str(filepath.resolve())
    with pytest.raises(FileNotFoundError):
        pathutils.get_str_filepath(tmp_path / "missing.json")
    with pytest.raises(IsADirectoryError):
        pathutils.get_str_filepath(tmp_path)


def test_atomic_write_text(tmp_path: pathlib.Path):
    filepath = tmp_path / "out.json"
    assert pathutils.atomic_write_text(filepath, "first\n") == filepath
    pathutils.atomic_write_text(str(filepath), "second\n")
    assert pathutils.read_bytes(filepath) == b"second\n"
    assert list(tmp_path.iterdir()) == [filepath]


def test_atomic_write_text_rejects(tmp_path: pathlib.Path):
    with pytest.raises(IsADirectoryError):
        pathutils.atomic_write_text(tmp_path, "text")
    with pytest.raises(FileNotFoundError):
        pathutils.atomic_write_text(tmp_path / "missing" / "out.json", "x")
    assert list(tmp_path.iterdir()) == []


def test_atomic_write_text_cleans_up(tmp_path: pathlib.Path):
    filepath = tmp_path / "out.json"
    filepath.write_text("old")
    with pytest.raises(UnicodeEncodeError):
        # a lone surrogate cannot be encoded as UTF-8
        pathutils.atomic_write_text(filepath, "new \ud800")
    assert filepath.read_text() == "old"
    assert list(tmp_path.iterdir()) == [filepath]
