"""Pseudonym handles: authenticated-encryption PIDs, name aliases, I-numbers.

A PID is the hex form of ``nonce || AES-256-GCM(master_key, nonce, record_id)``.
Only a holder of the master key can walk back from a PID to the enrollment
record id, and any bit flip in a stored PID is detected by the auth tag
instead of silently resolving to a different subject.
"""

from __future__ import annotations

import hashlib
import os
from importlib import resources
from typing import Callable, Sequence

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .domain import Alias, InstallationNumber, Pid, SubjectRecordId, canonical_bytes

MASTER_KEY_LEN = 32
NONCE_LEN = 12
TAG_LEN = 16
# nonce || 8-byte ciphertext || tag, hex-encoded
PID_HEX_LENGTH = 2 * (NONCE_LEN + 8 + TAG_LEN)

MIN_DICTIONARY_SIZE = 1000


class PseudonymError(Exception):
    """Base class for pseudonymization failures."""


class MalformedPid(PseudonymError):
    """Input does not even parse as a PID (wrong length or alphabet)."""


class AuthFailure(PseudonymError):
    """PID parses but fails authenticated decryption (tampered or wrong key)."""


class KeyLoadError(PseudonymError):
    pass


class UnknownAlias(PseudonymError):
    pass


class AliasDictionaryError(PseudonymError):
    pass


def generate_master_key(path: str, *, rng: Callable[[int], bytes] = os.urandom) -> None:
    key = rng(MASTER_KEY_LEN)
    if len(key) != MASTER_KEY_LEN:
        raise KeyLoadError("key generator returned wrong length")
    with open(path, "wb") as fh:
        fh.write(key)
    os.chmod(path, 0o600)


def load_master_key(path: str) -> bytes:
    try:
        with open(path, "rb") as fh:
            key = fh.read()
    except OSError as exc:
        raise KeyLoadError(f"cannot read master key: {exc}") from exc
    if len(key) != MASTER_KEY_LEN:
        raise KeyLoadError(
            f"master key must be exactly {MASTER_KEY_LEN} bytes, found {len(key)}"
        )
    return key


class PseudonymEngine:
    """Maps enrollment record ids to PIDs and back, under one master key."""

    def __init__(self, master_key: bytes, *, nonce_source: Callable[[int], bytes] = os.urandom):
        if len(master_key) != MASTER_KEY_LEN:
            raise KeyLoadError(f"master key must be {MASTER_KEY_LEN} bytes")
        self._aead = AESGCM(master_key)
        self._nonce_source = nonce_source
        self._seen_nonces: set[bytes] = set()

    def new_pid(self, record_id: SubjectRecordId) -> Pid:
        # Nonce reuse under GCM would leak key material, so re-draw on the
        # (vanishingly rare with a sane source) repeat.
        for _ in range(64):
            nonce = self._nonce_source(NONCE_LEN)
            if len(nonce) != NONCE_LEN:
                raise PseudonymError("nonce source returned wrong length")
            if nonce not in self._seen_nonces:
                break
        else:
            raise PseudonymError("nonce source keeps repeating values")
        self._seen_nonces.add(nonce)
        sealed = self._aead.encrypt(nonce, canonical_bytes(record_id), None)
        return Pid((nonce + sealed).hex())

    def reidentify(self, pid: Pid | str) -> SubjectRecordId:
        value = pid.value if isinstance(pid, Pid) else pid
        if len(value) != PID_HEX_LENGTH or value != value.lower():
            raise MalformedPid(f"pid must be {PID_HEX_LENGTH} lowercase hex chars")
        try:
            raw = bytes.fromhex(value)
        except ValueError:
            raise MalformedPid("pid is not valid hex") from None
        try:
            plain = self._aead.decrypt(raw[:NONCE_LEN], raw[NONCE_LEN:], None)
        except InvalidTag:
            raise AuthFailure("pid failed authentication") from None
        return SubjectRecordId(int.from_bytes(plain, "big"))


def _default_dictionary() -> list[str]:
    text = resources.files("telecare").joinpath("data/alias_names.txt").read_text("utf-8")
    return [line.strip() for line in text.splitlines() if line.strip()]


def _probe_start(pid: Pid, size: int) -> int:
    digest = hashlib.sha256(pid.value.encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big") % size


class AliasDirectory:
    """Hands each PID a short proper-name alias, with no clashes ever.

    The base name is picked by hashing the PID into the dictionary and
    linearly probing to the first free entry, so assignment order is the
    only state that matters and replaying the same PID sequence yields the
    same aliases.  Once every base name is taken, numbered variants of the
    hashed-to name are used.
    """

    def __init__(self, names: Sequence[str] | None = None):
        self._names = list(names) if names is not None else _default_dictionary()
        if len(self._names) < MIN_DICTIONARY_SIZE:
            raise AliasDictionaryError(
                f"alias dictionary needs at least {MIN_DICTIONARY_SIZE} names, "
                f"found {len(self._names)}"
            )
        if len(set(self._names)) != len(self._names):
            raise AliasDictionaryError("alias dictionary contains duplicates")
        self._by_pid: dict[str, Alias] = {}
        self._by_alias: dict[str, Pid] = {}
        self._next_suffix: dict[str, int] = {}
        self._plain_taken = 0

    def assign(self, pid: Pid) -> Alias:
        existing = self._by_pid.get(pid.value)
        if existing is not None:
            return existing
        start = _probe_start(pid, len(self._names))
        chosen: str | None = None
        if self._plain_taken < len(self._names):  # probing a full table is futile
            for step in range(len(self._names)):
                candidate = self._names[(start + step) % len(self._names)]
                if candidate not in self._by_alias:
                    chosen = candidate
                    self._plain_taken += 1
                    break
        if chosen is None:
            base = self._names[start]
            n = self._next_suffix.get(base, 2)
            while f"{base}-{n}" in self._by_alias:
                n += 1
            self._next_suffix[base] = n + 1
            chosen = f"{base}-{n}"
        alias = Alias(chosen)
        self._by_pid[pid.value] = alias
        self._by_alias[chosen] = pid
        return alias

    def alias_for(self, pid: Pid) -> Alias:
        try:
            return self._by_pid[pid.value]
        except KeyError:
            raise UnknownAlias(f"no alias assigned for pid {pid.value[:8]}…") from None

    def pid_for(self, alias: Alias | str) -> Pid:
        value = alias.value if isinstance(alias, Alias) else alias
        try:
            return self._by_alias[value]
        except KeyError:
            raise UnknownAlias(f"unknown alias {value!r}") from None

    def __len__(self) -> int:
        return len(self._by_pid)


class InstallationSequence:
    """Issues I-numbers: I-0001, I-0002, ... zero-padded to at least 4 digits."""

    def __init__(self, start: int = 1):
        if start < 1:
            raise ValueError("installation numbering starts at 1")
        self._next = start

    def next(self) -> InstallationNumber:
        number = InstallationNumber(f"I-{self._next:04d}")
        self._next += 1
        return number

    @property
    def upcoming(self) -> int:
        return self._next
