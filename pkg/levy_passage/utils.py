"""Shared utility functions for the levy-passage toolkit."""

from __future__ import annotations

import hashlib
import json
import os
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from levy_passage import THREADS_ENV_VAR
from levy_passage.errors import ConfigError


class PassageUtils:
    """Common utility methods for file I/O, hashing and timestamps."""

    @staticmethod
    def load_json(path: Path) -> Any:  # noqa: ANN401
        """
        Load and decode a JSON file from disk.

        Args:
            path: Path to the JSON file.

        Returns:
            The decoded JSON object or array.

        Raises:
            ConfigError: If the file is missing or not valid JSON.

        """
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as error:
            msg = f"Cannot read JSON from `{path}`: {error}"
            raise ConfigError(msg) from error

    @staticmethod
    def save_json(
        data: Any,  # noqa: ANN401
        path: Path,
        *,
        indent: int = 4,
    ) -> None:
        """
        Serialize data to a JSON file on disk.

        Args:
            data: The Python object to serialize.
            path: Destination file path.
            indent: Number of spaces for indentation.

        """
        path.write_text(
            json.dumps(data, indent=indent, sort_keys=True),
            encoding="utf-8",
        )

    @staticmethod
    def get_timestamp() -> int:
        """
        Return the current UTC time as unix seconds.

        Returns:
            The current UTC time truncated to whole seconds.

        """
        return int(
            datetime.now(tz=timezone.utc)
            .replace(
                microsecond=0,
            )
            .timestamp()
        )

    @staticmethod
    def config_hash(data: dict[str, Any]) -> str:
        """
        Hash a JSON-compatible mapping independently of key order.

        Args:
            data: Mapping holding every field that influences results.

        Returns:
            Hex sha256 digest of the canonical JSON encoding.

        """
        canonical: str = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    @staticmethod
    def resolve_threads(threads: int | None) -> int:
        """
        Pick the worker count from the flag, then the environment.

        Args:
            threads: Value of ``--threads``, or ``None`` when not given.

        Returns:
            A positive worker count, 1 when neither source is set.

        Raises:
            ConfigError: If the resolved value is not a positive integer.

        """
        if threads is None:
            raw: str = os.environ.get(THREADS_ENV_VAR, "").strip()
            if not raw:
                return 1
            try:
                threads = int(raw)
            except ValueError as error:
                msg = f"{THREADS_ENV_VAR} must be an integer, got {raw!r}"
                raise ConfigError(msg) from error

        if threads < 1:
            msg = f"thread count must be positive, got {threads}"
            raise ConfigError(msg)
        return threads
