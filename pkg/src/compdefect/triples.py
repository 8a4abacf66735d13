"""The function-triple record shared by mining, synthesis and training."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Iterator

from .jparse import JParseError, parse_function
from .labels import DefectLabel


class TripleError(ValueError):
    pass


@dataclass(frozen=True)
class FunctionTriple:
    id: str
    repo: str
    fix_commit: str
    inducing_commit: str | None
    label: DefectLabel
    clean_src: str
    buggy_src: str
    fixed_src: str
    buggy_line: int
    fixed_line: int
    file_path: str

    def validate(self) -> None:
        names = set()
        for attr in ("clean_src", "buggy_src", "fixed_src"):
            try:
                names.add(parse_function(getattr(self, attr)).name)
            except JParseError as exc:
                raise TripleError(f"{self.id}: {attr} does not parse: {exc}") from exc
        if len(names) != 1:
            raise TripleError(f"{self.id}: versions name different functions {sorted(names)}")
        if self.label is DefectLabel.CLEAN and self.fixed_src != self.buggy_src:
            raise TripleError(f"{self.id}: clean triple must have fixed_src == buggy_src")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["label"] = self.label.name
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_dict(cls, d: dict) -> "FunctionTriple":
        names = [f.name for f in fields(cls)]
        missing = [n for n in names if n not in d]
        if missing:
            raise TripleError(f"triple record missing fields {missing}")
        vals = {n: d[n] for n in names}
        vals["label"] = DefectLabel.parse(d["label"])
        return cls(**vals)


def write_jsonl(triples: Iterable[FunctionTriple], path: str | Path, validate: bool = True) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for t in triples:
            if validate:
                t.validate()
            fh.write(t.to_json() + "\n")
            n += 1
    return n


def iter_jsonl(path: str | Path) -> Iterator[FunctionTriple]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield FunctionTriple.from_dict(json.loads(line))
            except (json.JSONDecodeError, ValueError) as exc:
                raise TripleError(f"{path}:{lineno}: {exc}") from exc


def read_jsonl(path: str | Path) -> list[FunctionTriple]:
    return list(iter_jsonl(path))
