from typing import Any, Callable, Dict, Optional
import copy
import json
import math
import numbers
import pathlib

import torch


def _scalar(value: Any) -> Optional[Any]:
    if isinstance(value, torch.Tensor):
        if value.numel() != 1:
            return None
        value = value.item()
    if isinstance(value, bool) or not isinstance(value, numbers.Number):
        return None
    if isinstance(value, numbers.Integral):
        return int(value)
    value = float(value)
    # JSON has no NaN or Inf
    return value if math.isfinite(value) else repr(value)


class JsonLogger:
    """
    Per-epoch training log, one JSON object per line. Only scalar values are
    written. Re-opening an existing file keeps every complete line and cuts
    a partial last line left by an interrupted run.
    """
    def __init__(self, path: str,
            keep: Optional[Callable[[str, Any], bool]] = None):
        self.path = pathlib.Path(path)
        self.keep = keep
        self.file = None
        self.last_log: Optional[Dict] = None

    def start(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if self.path.is_file():
            content = self.path.read_bytes()
            complete = content[:content.rfind(b'\n') + 1]
            lines = complete.decode('utf-8').splitlines()
            if len(lines) > 0:
                self.last_log = json.loads(lines[-1])
            with self.path.open('r+b') as f:
                f.truncate(len(complete))
        # line buffered so a crash loses at most the current epoch
        self.file = self.path.open('a', buffering=1)

    def stop(self):
        if self.file is not None:
            self.file.close()
            self.file = None

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.stop()

    @property
    def n_records(self) -> int:
        if not self.path.is_file():
            return 0
        return len(self.path.read_text().splitlines())

    def log(self, data: Dict):
        record = dict()
        for key, value in data.items():
            if self.keep is not None and not self.keep(key, value):
                continue
            value = _scalar(value)
            if value is not None:
                record[key] = value
        self.last_log = record
        self.file.write(json.dumps(record, sort_keys=True).replace('\n', '') + '\n')

    def get_last_log(self) -> Optional[Dict]:
        return copy.deepcopy(self.last_log)


class NullLogger:
    """Used by ``fit`` when no log file is configured."""
    last_log = None

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        pass

    def log(self, data: Dict):
        self.last_log = dict(data)

    def get_last_log(self):
        return copy.deepcopy(self.last_log)
