import csv
import io
import json
import os
import tempfile
from typing import IO, Any, Callable, Dict, List, Sequence, Tuple

import numpy as np
import toml
import yaml

from wave_stability.core.logger import logger

CSV_FLOAT_FORMAT = "{:.17g}"


def _dump_toml(data: Any) -> str:
    if not isinstance(data, dict):
        raise ValueError("TOML format requires a dictionary.")
    return toml.dumps(data).strip() + "\n"


# fmt -> (extensions, loader, dumper)
CONFIG_FORMATS: Dict[str, Tuple[Tuple[str, ...], Callable[[IO[str]], Any], Callable[[Any], str]]] = {
    "json": ((".json",), json.load, lambda data: json.dumps(data, indent=4)),
    "yaml": (
        (".yaml", ".yml"),
        yaml.safe_load,
        lambda data: yaml.safe_dump(data, default_flow_style=False),
    ),
    "toml": ((".toml",), toml.load, _dump_toml),
}


def _format_for(file_path: str) -> str:
    lowered = file_path.lower()
    for fmt, (extensions, _, _) in CONFIG_FORMATS.items():
        if lowered.endswith(extensions):
            return fmt
    raise ValueError("Unsupported config file format. Use JSON, YAML, or TOML.")


def load_config_file(file_path: str) -> Dict[str, Any]:
    """
    Read a settings mapping from a JSON, YAML or TOML file.

    The format follows the file extension. An empty file is an empty mapping.

    Raises:
        ValueError: If the extension is unknown, the file does not parse,
            or its top level is not a mapping.
    """
    fmt = _format_for(file_path)
    loader = CONFIG_FORMATS[fmt][1]
    with open(file_path, "r") as file:
        try:
            data = loader(file)
        except (json.JSONDecodeError, yaml.YAMLError, toml.TomlDecodeError) as e:
            raise ValueError(f"Config file {file_path} is not valid {fmt}: {e}") from e
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ValueError(f"Config file {file_path} must contain a mapping.")
    return data


def convert_config(data: Any, fmt: str) -> str:
    """
    Render settings as JSON, YAML or TOML text.

    Raises:
        ValueError: If the format is unknown, or TOML is asked for a non-mapping.
    """
    if fmt not in CONFIG_FORMATS:
        raise ValueError("Unsupported format. Choose 'json', 'yaml', or 'toml'.")
    return CONFIG_FORMATS[fmt][2](data)


def atomic_write(file_path: str, text: str) -> None:
    """
    Write text to a temporary file next to `file_path`, then rename it into place.

    A failed run never leaves a partially written output file.
    """
    directory = os.path.dirname(os.path.abspath(file_path))
    tmp_path = None
    try:
        os.makedirs(directory, exist_ok=True)
        fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp_path, file_path)
    except OSError as e:
        if tmp_path and os.path.exists(tmp_path):
            os.remove(tmp_path)
        logger.error(f"❌ Failed to write {file_path}: {e}")
        raise OSError(f"Failed to write {file_path}: {e}") from e
    logger.debug(f"🔹 Wrote {file_path}")


def save_config_file(file_path: str, data: Dict[str, Any]) -> None:
    """
    Save configuration data atomically, choosing the format from the extension.

    Raises:
        ValueError: If the file format is unsupported.
    """
    atomic_write(file_path, convert_config(data, _format_for(file_path)))


def _format_cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return CSV_FLOAT_FORMAT.format(float(value))
    return str(value)


def csv_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    """Render rows as CSV with a header; floats use 17 significant digits."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise ValueError(
                f"Row has {len(row)} fields, header has {len(header)}."
            )
        writer.writerow([_format_cell(value) for value in row])
    return buffer.getvalue()


def write_csv(file_path: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    atomic_write(file_path, csv_text(header, rows))


def read_csv(file_path: str) -> List[Dict[str, str]]:
    """Read a CSV written by `write_csv` into a list of rows keyed by column."""
    with open(file_path, "r", newline="") as file:
        return list(csv.DictReader(file))


def read_csv_columns(file_path: str, columns: Sequence[str] = ()) -> Dict[str, np.ndarray]:
    """
    Float arrays per CSV column, all columns when `columns` is empty.

    Cells that do not parse as floats become nan.

    Raises:
        KeyError: If a requested column is missing.
    """
    rows = read_csv(file_path)
    with open(file_path, "r", newline="") as file:
        header = next(csv.reader(file), [])
    names = list(columns) or header
    missing = [name for name in names if name not in header]
    if missing:
        raise KeyError(f"Columns {missing} not in {file_path}.")

    def _to_float(cell: str) -> float:
        try:
            return float(cell)
        except ValueError:
            return float("nan")

    return {name: np.array([_to_float(row[name]) for row in rows]) for name in names}


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(key): _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(np.real(value)), "im": float(np.imag(value))}
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return str(value)
    return value


def write_json(file_path: str, data: Any) -> None:
    """Dump numpy-aware data as indented JSON, atomically."""
    atomic_write(file_path, json.dumps(_jsonable(data), indent=4, sort_keys=True) + "\n")


def json_text(data: Any) -> str:
    return json.dumps(_jsonable(data), sort_keys=True)
