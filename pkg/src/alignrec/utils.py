import hashlib
import json
import os
import re
import tempfile
from typing import Dict, List, Union

from .exceptions import ImproperlyConfigured, MissingPathError

_CONFIG_LINE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_\-]*)\s*=\s*(.*?)\s*$")


def log(message: str, title: str = "Info"):
    print(f"{title}: {message}")


def validate_config_path(path):
    if not os.path.exists(path):
        raise ImproperlyConfigured(
            f'No such configuration file: {path}'
        )

    if not os.path.isfile(path):
        raise ImproperlyConfigured(
            f'Config should be a file: {path}'
        )

    if not os.access(path, os.R_OK):
        raise ImproperlyConfigured(
            f'Cannot read the config file. Please grant read privileges: {path}'
        )


def require_path(path):
    if path is None or not os.path.exists(path):
        raise MissingPathError(path)


def read_config_file(path) -> Dict[str, str]:
    """Reads a flat `key = value` config file.

    Blank lines and lines starting with `#` are skipped, and a trailing
    `# comment` after a value is dropped. Keys are normalized to
    snake_case so `top-fraction` and `top_fraction` are the same entry.

    Args:
        path: Path of the config file.

    Returns:
        The raw string values by key.
    """
    validate_config_path(path)

    config = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            match = _CONFIG_LINE.match(stripped)
            if match is None:
                raise ImproperlyConfigured(f"{path}:{line_number}: expected 'key = value'")
            key, value = match.groups()
            config[key.replace("-", "_")] = value.strip().strip('"')
    return config


def parse_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off", ""):
        return False
    raise ImproperlyConfigured(f"Not a boolean: {value!r}")


def parse_int_list(value) -> List[int]:
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    try:
        return [int(v) for v in str(value).replace(" ", "").split(",") if v]
    except ValueError:
        raise ImproperlyConfigured(f"Not a list of integers: {value!r}")


def atomic_write(path, content: Union[str, bytes]):
    """Writes `content` to a temp file next to `path` and renames it into place."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    mode = "wb" if isinstance(content, bytes) else "w"
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8"})) as f:
            f.write(content)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def write_json(path, obj):
    atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def config_digest(content: Union[str, bytes, dict]) -> str:
    """Creates a deterministic digest of a config snapshot.

    Args:
        content: String, bytes or a JSON-serializable dict.

    Returns:
        Hex sha256 of the content.
    """
    if isinstance(content, dict):
        content = json.dumps(content, sort_keys=True)
    if isinstance(content, str):
        content_bytes = content.encode("utf-8")
    elif isinstance(content, bytes):
        content_bytes = content
    else:
        raise ValueError(f"Content type {type(content)} not supported !")

    return hashlib.sha256(content_bytes).hexdigest()
