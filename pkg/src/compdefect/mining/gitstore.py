"""Minimal git object-store access: loose objects, v2 pack indexes with
offset/ref deltas, refs, first-parent history, tree diffs and line blame.

A small loose-object writer is included for building fixture repositories.
"""
from __future__ import annotations

import difflib
import hashlib
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path


class RepositoryError(Exception):
    pass


@dataclass(frozen=True)
class Commit:
    sha: str
    tree: str
    parents: tuple[str, ...]
    author: str
    committer: str
    message: str

    @property
    def first_parent(self) -> str | None:
        return self.parents[0] if self.parents else None

    @property
    def summary(self) -> str:
        return self.message.strip().splitlines()[0] if self.message.strip() else ""


@dataclass(frozen=True)
class TreeEntry:
    mode: str
    name: str
    sha: str

    @property
    def is_tree(self) -> bool:
        return self.mode in ("40000", "040000")


@dataclass(frozen=True)
class BlameLine:
    commit: str
    line: int  # 1-based line number in that commit's version of the file


_TYPES = {1: "commit", 2: "tree", 3: "blob", 4: "tag"}


class _Pack:
    def __init__(self, idx_path: Path):
        self.pack_path = idx_path.with_suffix(".pack")
        data = idx_path.read_bytes()
        if data[:4] != b"\377tOc" or struct.unpack(">I", data[4:8])[0] != 2:
            raise RepositoryError(f"unsupported pack index {idx_path.name}")
        fanout = struct.unpack(">256I", data[8 : 8 + 1024])
        n = fanout[-1]
        pos = 8 + 1024
        shas = [data[pos + 20 * i : pos + 20 * (i + 1)].hex() for i in range(n)]
        pos += 20 * n + 4 * n  # skip crc32 table
        small = struct.unpack(f">{n}I", data[pos : pos + 4 * n])
        pos += 4 * n
        self.offsets: dict[str, int] = {}
        for sha, off in zip(shas, small):
            if off & 0x80000000:
                k = off & 0x7FFFFFFF
                off = struct.unpack(">Q", data[pos + 8 * k : pos + 8 * k + 8])[0]
            self.offsets[sha] = off
        self._data: bytes | None = None

    @property
    def data(self) -> bytes:
        if self._data is None:
            self._data = self.pack_path.read_bytes()
            if self._data[:4] != b"PACK":
                raise RepositoryError(f"bad pack file {self.pack_path.name}")
        return self._data

    def read_at(self, offset: int, repo: "Repository") -> tuple[str, bytes]:
        d = self.data
        c = d[offset]
        typ = (c >> 4) & 7
        size = c & 15
        shift = 4
        p = offset + 1
        while c & 0x80:
            c = d[p]
            p += 1
            size |= (c & 0x7F) << shift
            shift += 7
        if typ == 6:
            c = d[p]
            p += 1
            back = c & 0x7F
            while c & 0x80:
                c = d[p]
                p += 1
                back = ((back + 1) << 7) | (c & 0x7F)
            base_type, base = self.read_at(offset - back, repo)
            return base_type, apply_delta(base, _inflate(d, p))
        if typ == 7:
            base_sha = d[p : p + 20].hex()
            base_type, base = repo.read_object(base_sha)
            return base_type, apply_delta(base, _inflate(d, p + 20))
        if typ not in _TYPES:
            raise RepositoryError(f"unknown pack object type {typ}")
        return _TYPES[typ], _inflate(d, p)


def _inflate(buf: bytes, start: int) -> bytes:
    z = zlib.decompressobj()
    out = z.decompress(memoryview(buf)[start:])
    return out + z.flush()


def _varint(buf: bytes, p: int) -> tuple[int, int]:
    v = shift = 0
    while True:
        c = buf[p]
        p += 1
        v |= (c & 0x7F) << shift
        shift += 7
        if not c & 0x80:
            return v, p


def apply_delta(base: bytes, delta: bytes) -> bytes:
    src_size, p = _varint(delta, 0)
    dst_size, p = _varint(delta, p)
    if src_size != len(base):
        raise RepositoryError("delta base size mismatch")
    out = bytearray()
    while p < len(delta):
        op = delta[p]
        p += 1
        if op & 0x80:
            off = size = 0
            for i in range(4):
                if op & (1 << i):
                    off |= delta[p] << (8 * i)
                    p += 1
            for i in range(3):
                if op & (1 << (4 + i)):
                    size |= delta[p] << (8 * i)
                    p += 1
            size = size or 0x10000
            out += base[off : off + size]
        elif op:
            out += delta[p : p + op]
            p += op
        else:
            raise RepositoryError("reserved delta opcode 0")
    if len(out) != dst_size:
        raise RepositoryError("delta result size mismatch")
    return bytes(out)


class Repository:
    """Read-only view of a repository's object store."""

    def __init__(self, path: str | Path):
        p = Path(path)
        if (p / ".git").is_dir():
            p = p / ".git"
        if not (p / "objects").is_dir():
            raise RepositoryError(f"{path} is not a git repository")
        self.git_dir = p
        self.name = (p.parent if p.name == ".git" else p).name
        self._packs: list[_Pack] | None = None
        self._cache: dict[str, tuple[str, bytes]] = {}

    # objects ---------------------------------------------------------------

    @property
    def packs(self) -> list[_Pack]:
        if self._packs is None:
            pack_dir = self.git_dir / "objects" / "pack"
            self._packs = [_Pack(i) for i in sorted(pack_dir.glob("*.idx"))] if pack_dir.is_dir() else []
        return self._packs

    def read_object(self, sha: str) -> tuple[str, bytes]:
        if sha in self._cache:
            return self._cache[sha]
        loose = self.git_dir / "objects" / sha[:2] / sha[2:]
        if loose.is_file():
            raw = zlib.decompress(loose.read_bytes())
            head, _, body = raw.partition(b"\0")
            typ, size = head.decode().split(" ")
            if int(size) != len(body):
                raise RepositoryError(f"object {sha} has a bad length")
            obj = (typ, body)
        else:
            for pack in self.packs:
                if sha in pack.offsets:
                    obj = pack.read_at(pack.offsets[sha], self)
                    break
            else:
                raise RepositoryError(f"object {sha} not found")
        self._cache[sha] = obj
        return obj

    def resolve(self, rev: str) -> str:
        """Full hash for a hash, unique hash prefix, ref name or HEAD."""
        if rev == "HEAD":
            head = (self.git_dir / "HEAD").read_text().strip()
            if head.startswith("ref: "):
                return self.resolve(head[5:])
            return head
        for cand in (rev, f"refs/heads/{rev}", f"refs/tags/{rev}"):
            f = self.git_dir / cand
            if f.is_file():
                return f.read_text().strip()
        packed = self.git_dir / "packed-refs"
        if packed.is_file():
            for line in packed.read_text().splitlines():
                if line and line[0] not in "#^":
                    sha, name = line.split(" ", 1)
                    if name in (rev, f"refs/heads/{rev}", f"refs/tags/{rev}"):
                        return sha
        rev_l = rev.lower()
        if 4 <= len(rev_l) <= 40 and all(c in "0123456789abcdef" for c in rev_l):
            if len(rev_l) == 40:
                return rev_l
            hits = {s for s in self._all_shas() if s.startswith(rev_l)}
            if len(hits) == 1:
                return hits.pop()
            if len(hits) > 1:
                raise RepositoryError(f"ambiguous revision {rev}")
        raise RepositoryError(f"unknown revision {rev}")

    def _all_shas(self) -> set[str]:
        out = set()
        obj = self.git_dir / "objects"
        for d in obj.iterdir():
            if len(d.name) == 2 and d.is_dir():
                out.update(d.name + f.name for f in d.iterdir())
        for p in self.packs:
            out.update(p.offsets)
        return out

    def commit(self, rev: str) -> Commit:
        sha = self.resolve(rev)
        typ, body = self.read_object(sha)
        if typ != "commit":
            raise RepositoryError(f"{sha} is a {typ}, not a commit")
        text = body.decode("utf-8", errors="replace")
        header, _, message = text.partition("\n\n")
        tree, parents, author, committer = "", [], "", ""
        for line in header.splitlines():
            key, _, val = line.partition(" ")
            if key == "tree":
                tree = val
            elif key == "parent":
                parents.append(val)
            elif key == "author":
                author = val
            elif key == "committer":
                committer = val
        return Commit(sha, tree, tuple(parents), author, committer, message)

    def tree(self, sha: str) -> list[TreeEntry]:
        typ, body = self.read_object(sha)
        if typ != "tree":
            raise RepositoryError(f"{sha} is not a tree")
        out, p = [], 0
        while p < len(body):
            sp = body.index(b" ", p)
            nul = body.index(b"\0", sp)
            out.append(TreeEntry(body[p:sp].decode(), body[sp + 1 : nul].decode("utf-8", "replace"), body[nul + 1 : nul + 21].hex()))
            p = nul + 21
        return out

    def files(self, commit: str) -> dict[str, str]:
        """path -> blob hash for every file in the commit's tree."""
        out: dict[str, str] = {}

        def walk(tree_sha: str, prefix: str) -> None:
            for e in self.tree(tree_sha):
                path = prefix + e.name
                if e.is_tree:
                    walk(e.sha, path + "/")
                elif not e.mode.startswith("160"):  # skip submodules
                    out[path] = e.sha

        walk(self.commit(commit).tree, "")
        return out

    def blob_at(self, commit: str, path: str) -> bytes | None:
        sha = self.files(commit).get(path)
        return None if sha is None else self.read_object(sha)[1]

    def text_at(self, commit: str, path: str) -> str | None:
        b = self.blob_at(commit, path)
        return None if b is None else b.decode("utf-8", errors="replace")

    # history ---------------------------------------------------------------

    def first_parent_log(self, rev: str = "HEAD") -> list[Commit]:
        """Commits from ``rev`` back to the root along first parents."""
        out, sha = [], self.resolve(rev)
        seen = set()
        while sha and sha not in seen:
            seen.add(sha)
            c = self.commit(sha)
            out.append(c)
            sha = c.first_parent
        return out

    def changed_files(self, commit: str) -> list[tuple[str, str | None, str | None]]:
        """(path, old_blob, new_blob) against the first parent, sorted by path."""
        c = self.commit(commit)
        new = self.files(c.sha)
        old = self.files(c.first_parent) if c.first_parent else {}
        out = []
        for path in sorted(set(old) | set(new)):
            if old.get(path) != new.get(path):
                out.append((path, old.get(path), new.get(path)))
        return out

    def commit_diff(self, commit: str) -> str:
        """Zero-context unified diff of ``commit`` against its first parent."""
        chunks = []
        for path, a, b in self.changed_files(commit):
            da = self.read_object(a)[1] if a else b""
            db = self.read_object(b)[1] if b else b""
            chunks.append(f"diff --git a/{path} b/{path}")
            if b"\0" in da or b"\0" in db:
                chunks.append(f"Binary files a/{path} and b/{path} differ")
                continue
            la = da.decode("utf-8", "replace").splitlines()
            lb = db.decode("utf-8", "replace").splitlines()
            body = list(
                difflib.unified_diff(
                    la, lb, "a/" + path if a else "/dev/null", "b/" + path if b else "/dev/null", n=0, lineterm=""
                )
            )
            chunks.extend(body)
        return "\n".join(chunks) + ("\n" if chunks else "")

    def blame(self, commit: str, path: str) -> list[BlameLine]:
        """Origin of every line of ``path`` at ``commit`` along first parents."""
        start = self.commit(commit)
        text = self.text_at(start.sha, path)
        if text is None:
            raise RepositoryError(f"{path} does not exist at {start.sha[:10]}")
        n = len(text.splitlines())
        result: list[BlameLine | None] = [None] * n
        pending = {i: i for i in range(n)}  # line of the start version -> line at ``cur``
        cur, cur_lines = start, text.splitlines()
        while pending:
            parent_sha = cur.first_parent
            par_text = self.text_at(parent_sha, path) if parent_sha else None
            if par_text is None:
                for i, ci in pending.items():
                    result[i] = BlameLine(cur.sha, ci + 1)
                break
            par_lines = par_text.splitlines()
            mapping = {}
            if par_lines == cur_lines:
                mapping = {i: i for i in range(len(cur_lines))}
            else:
                sm = difflib.SequenceMatcher(None, par_lines, cur_lines, autojunk=False)
                for a, b, size in sm.get_matching_blocks():
                    for k in range(size):
                        mapping[b + k] = a + k
            nxt = {}
            for i, ci in pending.items():
                if ci in mapping:
                    nxt[i] = mapping[ci]
                else:
                    result[i] = BlameLine(cur.sha, ci + 1)
            pending = nxt
            cur, cur_lines = self.commit(parent_sha), par_lines
        return [r for r in result if r is not None]


# ---------------------------------------------------------------------------
# writer (fixtures)


def _hash_object(typ: str, body: bytes) -> tuple[str, bytes]:
    raw = f"{typ} {len(body)}".encode() + b"\0" + body
    return hashlib.sha1(raw).hexdigest(), raw


class RepoWriter:
    """Builds a repository of loose objects with deterministic timestamps."""

    def __init__(self, path: str | Path, branch: str = "main", start_time: int = 1_600_000_000):
        self.root = Path(path)
        self.git_dir = self.root / ".git"
        for d in ("objects", "refs/heads", "refs/tags"):
            (self.git_dir / d).mkdir(parents=True, exist_ok=True)
        (self.git_dir / "HEAD").write_text(f"ref: refs/heads/{branch}\n")
        self.branch = branch
        self.time = start_time
        self.files: dict[str, bytes] = {}
        head = self.git_dir / "refs" / "heads" / branch
        self.head: str | None = head.read_text().strip() if head.is_file() else None

    def write_object(self, typ: str, body: bytes) -> str:
        sha, raw = _hash_object(typ, body)
        p = self.git_dir / "objects" / sha[:2] / sha[2:]
        if not p.exists():
            p.parent.mkdir(exist_ok=True)
            p.write_bytes(zlib.compress(raw, 9))
        return sha

    def _tree(self, files: dict[str, bytes]) -> str:
        entries: dict[str, dict | bytes] = {}
        for path, data in files.items():
            parts = path.split("/")
            node = entries
            for part in parts[:-1]:
                node = node.setdefault(part, {})  # type: ignore[assignment]
            node[parts[-1]] = data

        def build(node: dict) -> str:
            rows = []
            for name, val in node.items():
                if isinstance(val, dict):
                    rows.append((name + "/", b"40000 " + name.encode() + b"\0" + bytes.fromhex(build(val))))
                else:
                    rows.append((name, b"100644 " + name.encode() + b"\0" + bytes.fromhex(self.write_object("blob", val))))
            rows.sort(key=lambda r: r[0])  # git orders trees as if names had a trailing slash
            return self.write_object("tree", b"".join(r[1] for r in rows))

        return build(entries)

    def commit(self, changes: dict[str, str | bytes | None], message: str, author: str = "Dev <dev@example.com>") -> str:
        """Apply ``changes`` (None deletes a path) on top of HEAD and commit."""
        for path, content in changes.items():
            if content is None:
                self.files.pop(path, None)
            else:
                self.files[path] = content.encode() if isinstance(content, str) else content
        tree = self._tree(self.files)
        self.time += 60
        lines = [f"tree {tree}"]
        if self.head:
            lines.append(f"parent {self.head}")
        stamp = f"{author} {self.time} +0000"
        lines += [f"author {stamp}", f"committer {stamp}"]
        body = ("\n".join(lines) + "\n\n" + message.rstrip("\n") + "\n").encode()
        sha = self.write_object("commit", body)
        (self.git_dir / "refs" / "heads" / self.branch).write_text(sha + "\n")
        self.head = sha
        return sha


def is_repository(path: str | Path) -> bool:
    p = Path(path)
    return (p / ".git" / "objects").is_dir() or (p / "objects").is_dir() and (p / "HEAD").is_file()


__all__ = [
    "BlameLine",
    "Commit",
    "RepoWriter",
    "Repository",
    "RepositoryError",
    "TreeEntry",
    "apply_delta",
    "is_repository",
]
