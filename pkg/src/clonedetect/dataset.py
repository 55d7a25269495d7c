"""Account records, datasets and their on-disk formats.

Layout of a dataset directory::

    accounts.jsonl   one JSON object per line (AccountProfile fields)
    edges.tsv        id_a <TAB> id_b <TAB> kind      (kind: follower | friend)
    labels.tsv       victim_id <TAB> clone_id        (optional)
    manifest.json    reference_date, seed, provenance
"""

from __future__ import annotations

import datetime as dt
import json
import os
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

EDGE_KINDS = ("follower", "friend")
_COUNT_FIELDS = ("followers_count", "friends_count", "tweet_count", "favorites_count", "list_count")
_FLAG_FIELDS = ("has_profile_background", "uses_default_profile_image", "has_url")


class DatasetError(ValueError):
    pass


@dataclass
class AccountProfile:
    id: str
    username: str
    screen_name: str
    registered_on: dt.date
    location: str = ""
    description: str = ""
    followers_count: int = 0
    friends_count: int = 0
    tweet_count: int = 0
    favorites_count: int = 0
    list_count: int = 0
    has_profile_background: bool = False
    uses_default_profile_image: bool = False
    has_url: bool = False
    posts: list = field(default_factory=list)

    def to_json(self) -> dict:
        d = asdict(self)
        d["registered_on"] = self.registered_on.isoformat()
        return d

    @classmethod
    def from_json(cls, d: dict) -> "AccountProfile":
        try:
            kwargs = dict(d)
            kwargs["id"] = str(kwargs["id"])
            kwargs["registered_on"] = dt.date.fromisoformat(kwargs["registered_on"])
            for name in _COUNT_FIELDS:
                v = int(kwargs.get(name, 0))
                if v < 0:
                    raise ValueError(f"{name} must be non-negative")
                kwargs[name] = v
            for name in _FLAG_FIELDS:
                kwargs[name] = bool(kwargs.get(name, False))
            posts = kwargs.get("posts", [])
            if not isinstance(posts, list) or not all(isinstance(p, str) for p in posts):
                raise ValueError("posts must be a list of strings")
            return cls(**kwargs)
        except KeyError as exc:
            raise ValueError(f"missing field {exc.args[0]!r}") from None
        except TypeError as exc:
            raise ValueError(str(exc)) from None


def pair_key(a: str, b: str) -> tuple:
    return (a, b) if a <= b else (b, a)


@dataclass
class Dataset:
    accounts: list
    edges: list = field(default_factory=list)
    labels: set = field(default_factory=set)
    reference_date: dt.date = dt.date(2022, 1, 1)
    manifest: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    @property
    def ids(self) -> list:
        return [a.id for a in self.accounts]

    def by_id(self) -> dict:
        return {a.id: a for a in self.accounts}

    @property
    def seed(self) -> int:
        return int(self.manifest.get("seed", 0))

    def validate(self) -> None:
        if not self.accounts:
            raise DatasetError("empty dataset")
        seen = set()
        dups = set()
        for a in self.accounts:
            if not a.id:
                raise DatasetError("account id must be nonempty")
            if a.id in seen:
                dups.add(a.id)
            seen.add(a.id)
        if dups:
            raise DatasetError(f"duplicate account ids: {sorted(dups)}")
        for a, b, kind in self.edges:
            if kind not in EDGE_KINDS:
                raise DatasetError(f"unknown edge kind {kind!r}")
            for x in (a, b):
                if x not in seen:
                    raise DatasetError(f"edge references unknown account id {x!r}")
        for a, b in self.labels:
            for x in (a, b):
                if x not in seen:
                    raise DatasetError(f"label references unknown account id {x!r}")
            if a == b:
                raise DatasetError(f"label pair must join distinct accounts: {a!r}")

    def label_pairs(self) -> set:
        return {pair_key(a, b) for a, b in self.labels}


def read_accounts(path) -> list:
    accounts = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                accounts.append(AccountProfile.from_json(json.loads(line)))
            except (ValueError, json.JSONDecodeError) as exc:
                raise DatasetError(f"{path}:{lineno}: malformed account record: {exc}") from None
    return accounts


def _read_tsv(path, ncols: int, what: str) -> list:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != ncols or not all(parts):
                raise DatasetError(f"{path}:{lineno}: malformed {what} record")
            rows.append(tuple(parts))
    return rows


def ingest(accounts_path, edges_path, labels_path=None, manifest_path=None) -> Dataset:
    """Load and validate a dataset from files.

    Without an explicit manifest, ``manifest.json`` beside the accounts
    file is used; failing that the reference date falls back to the
    latest registration date.
    """
    accounts = read_accounts(accounts_path)
    if not accounts:
        raise DatasetError("empty dataset")
    edges = _read_tsv(edges_path, 3, "edge") if edges_path else []
    for lineno, (_, _, kind) in enumerate(edges, 1):
        if kind not in EDGE_KINDS:
            raise DatasetError(f"{edges_path}: unknown edge kind {kind!r}")
    labels = set(_read_tsv(labels_path, 2, "label")) if labels_path else set()
    if manifest_path is None:
        candidate = os.path.join(os.path.dirname(os.path.abspath(accounts_path)), "manifest.json")
        if os.path.exists(candidate):
            manifest_path = candidate
    manifest = {}
    if manifest_path is not None:
        with open(manifest_path, encoding="utf-8") as fh:
            manifest = json.load(fh)
    if "reference_date" in manifest:
        ref = dt.date.fromisoformat(manifest["reference_date"])
    else:
        ref = max(a.registered_on for a in accounts)
        manifest["reference_date"] = ref.isoformat()
    return Dataset(accounts, edges, labels, ref, manifest)


def write_dataset(ds: Dataset, directory) -> dict:
    os.makedirs(directory, exist_ok=True)
    paths = {
        "accounts": os.path.join(directory, "accounts.jsonl"),
        "edges": os.path.join(directory, "edges.tsv"),
        "labels": os.path.join(directory, "labels.tsv"),
        "manifest": os.path.join(directory, "manifest.json"),
    }
    with open(paths["accounts"], "w", encoding="utf-8") as fh:
        for a in ds.accounts:
            fh.write(json.dumps(a.to_json(), ensure_ascii=False, sort_keys=True) + "\n")
    _write_rows(paths["edges"], ds.edges)
    _write_rows(paths["labels"], sorted(ds.labels))
    manifest = dict(ds.manifest)
    manifest["reference_date"] = ds.reference_date.isoformat()
    with open(paths["manifest"], "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths


def _write_rows(path, rows: Iterable[Sequence]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write("\t".join(str(x) for x in row) + "\n")


def load_dataset_dir(directory, require_labels: bool = False) -> Dataset:
    labels = os.path.join(directory, "labels.tsv")
    if not os.path.exists(labels):
        if require_labels:
            raise DatasetError(f"{labels} not found")
        labels = None
    return ingest(os.path.join(directory, "accounts.jsonl"), os.path.join(directory, "edges.tsv"), labels)
