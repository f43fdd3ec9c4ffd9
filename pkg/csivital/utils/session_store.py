"""
Session store for csivital.

Stands in for the raw-CSI database: every monitoring session is kept as a
record pointing at its trace file, with the estimates produced for it. The
store is append-only; records come back in insertion order.
"""

import hashlib
import json
import logging
import os
from abc import ABC, abstractmethod
from dataclasses import asdict
from pathlib import Path
from typing import Dict, List, Optional, Union

from .data_models import SessionRecord
from .errors import DataError, DuplicateSessionError

logger = logging.getLogger(__name__)


class BaseSessionBackend(ABC):
    """
    An abstract base class for all session store backends.
    """

    @abstractmethod
    def session_ids(self) -> List[str]:
        """Returns stored session ids in insertion order."""
        pass

    @abstractmethod
    def load(self, session_id: str) -> Dict:
        pass

    @abstractmethod
    def append(self, record: Dict):
        """Durably appends one record."""
        pass


class JSONSessionBackend(BaseSessionBackend):
    """
    A backend that keeps one JSON file per session plus an append-only index.
    """

    INDEX_NAME = "index.jsonl"

    def __init__(self, path: Union[str, Path] = ".csivital_sessions"):
        """Initialize the store directory."""
        self.root = Path(path)
        self.index_path = self.root / self.INDEX_NAME

    def _record_path(self, session_id: str) -> Path:
        return self.root / f"{session_id}.json"

    def session_ids(self) -> List[str]:
        if not self.index_path.exists():
            logger.debug(f"No index at '{self.index_path}'; store is empty.")
            return []
        ids = []
        with open(self.index_path, "r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line:
                    ids.append(json.loads(line)["session_id"])
        return ids

    def load(self, session_id: str) -> Dict:
        try:
            with open(self._record_path(session_id), "r", encoding="utf-8") as f:
                return json.load(f)
        except (json.JSONDecodeError, IOError) as e:
            raise DataError(f"Could not read session '{session_id}': {e}") from e

    def append(self, record: Dict):
        self.root.mkdir(parents=True, exist_ok=True)
        with open(self._record_path(record["session_id"]), "x", encoding="utf-8") as f:
            json.dump(record, f, indent=4)
            f.flush()
            os.fsync(f.fileno())
        with open(self.index_path, "a", encoding="utf-8") as f:
            f.write(json.dumps({"session_id": record["session_id"]}) + "\n")
            f.flush()
            os.fsync(f.fileno())
        logger.debug(f"Appended session '{record['session_id']}' to '{self.root}'")


def file_checksum(file_path: Union[str, Path]) -> Optional[str]:
    """sha256 of a file, or None if it cannot be read."""
    hash_obj = hashlib.sha256()
    try:
        with open(file_path, "rb") as f:
            for chunk in iter(lambda: f.read(65536), b""):
                hash_obj.update(chunk)
        return hash_obj.hexdigest()
    except (IOError, FileNotFoundError) as e:
        logger.error(f"Could not compute hash for file {file_path}: {e}", exc_info=True)
        return None


class SessionStore:
    """
    Inject a backend (such as JSONSessionBackend) that handles the actual storage.
    Single writer per store; readers of completed records are safe.
    """

    def __init__(self, backend: BaseSessionBackend):
        self.backend = backend

    def append_session(self, record: SessionRecord):
        """
        Appends a session record.

        Raises:
            DuplicateSessionError: If a session with the same id already exists.
        """
        if record.session_id in self.backend.session_ids():
            raise DuplicateSessionError(f"Session '{record.session_id}' already exists.")
        try:
            self.backend.append(asdict(record))
        except FileExistsError as e:
            raise DuplicateSessionError(f"Session '{record.session_id}' already exists.") from e
        logger.info(f"Session '{record.session_id}' stored.")

    def list_sessions(self) -> List[SessionRecord]:
        return [SessionRecord(**self.backend.load(sid)) for sid in self.backend.session_ids()]


def append_session(store_path: Union[str, Path], record: SessionRecord):
    SessionStore(JSONSessionBackend(store_path)).append_session(record)


def list_sessions(store_path: Union[str, Path]) -> List[SessionRecord]:
    return SessionStore(JSONSessionBackend(store_path)).list_sessions()
