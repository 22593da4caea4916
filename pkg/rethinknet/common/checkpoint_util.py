from typing import IO, Iterator, Union
import contextlib
import os
import pathlib


@contextlib.contextmanager
def atomic_open(path: Union[str, pathlib.Path], mode: str = 'w') -> Iterator[IO]:
    """
    Write to ``<path>.tmp`` and rename over ``path`` on success, so readers
    never see a partial file. The temporary file is removed on failure.
    """
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_name(path.name + '.tmp')
    try:
        with open(tmp_path, mode) as f:
            yield f
        os.replace(tmp_path, path)
    finally:
        if tmp_path.exists():
            tmp_path.unlink()


def atomic_write_text(path: Union[str, pathlib.Path], text: str) -> str:
    with atomic_open(path, 'w') as f:
        f.write(text)
    return str(pathlib.Path(path).absolute())
