"""Checking input paths and writing output files atomically."""
import os
import pathlib
import tempfile
import typing

Path = typing.Union["os.PathLike", typing.Text]


def get_str_filepath(filepath: Path) -> str:
    """Returns the absolute path of an existing input file as a string.

    Raises:
        FileNotFoundError if the file cannot be found.
        IsADirectoryError if the file is a directory.
    """
    path = pathlib.Path(filepath)
    # raises FileNotFoundError if does not exist
    abs_path = path.resolve(strict=True)
    if abs_path.is_dir():
        raise IsADirectoryError(f"Given filepath '{path}' is a directory.")
    return str(abs_path)


def read_bytes(filepath: Path) -> bytes:
    with open(get_str_filepath(filepath), "rb") as file:
        return file.read()


def atomic_write_text(filepath: Path, text: str) -> pathlib.Path:
    """Writes `text` to `filepath` so that it appears complete or not at all.

    The text goes to a temporary file in the same directory, which is then
    renamed over the target. A failed write leaves no partial output behind.

    Returns:
        The path written.

    Raises:
        IsADirectoryError if `filepath` is an existing directory.
        FileNotFoundError if its parent directory does not exist.
    """
    path = pathlib.Path(filepath)
    if path.is_dir():
        raise IsADirectoryError(f"Output path '{path}' is a directory.")
    directory = path.parent.resolve(strict=True)
    handle, temporary = tempfile.mkstemp(
        prefix=f".{path.name}.", suffix=".tmp", dir=str(directory)
    )
    try:
        with os.fdopen(handle, "w", encoding="utf-8") as file:
            file.write(text)
        os.replace(temporary, str(path))
    except BaseException:
        os.unlink(temporary)
        raise
    return path
