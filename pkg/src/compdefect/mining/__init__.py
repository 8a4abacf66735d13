from .gitstore import BlameLine, Commit, RepoWriter, Repository, RepositoryError
from .pipeline import (
    BUG_KEYWORDS,
    CommitKind,
    CommitPrediction,
    FunctionPrediction,
    Hunk,
    MalformedDiff,
    MiningReport,
    Rejected,
    RejectReason,
    apply_to_commit,
    classify_commit_message,
    commit_hunks,
    extract_negative,
    extract_triple,
    find_inducing_commit,
    locate_enclosing_function,
    mine_repository,
    split_hunks,
)

__all__ = [
    "BUG_KEYWORDS",
    "BlameLine",
    "Commit",
    "CommitKind",
    "CommitPrediction",
    "FunctionPrediction",
    "Hunk",
    "MalformedDiff",
    "MiningReport",
    "Rejected",
    "RejectReason",
    "RepoWriter",
    "Repository",
    "RepositoryError",
    "apply_to_commit",
    "classify_commit_message",
    "commit_hunks",
    "extract_negative",
    "extract_triple",
    "find_inducing_commit",
    "locate_enclosing_function",
    "mine_repository",
    "split_hunks",
]
