"""LIBSVM dataset loading for the SVM experiments."""

import os
from pathlib import Path

import numpy as np
from sklearn.datasets import load_svmlight_file

from .oracle import SvmProblem

# Files expected under $PROXBUNDLE_DATA (or ./data) when the real sets are used.
LIBSVM_FILES = {
    "colon-cancer": "colon-cancer",
    "duke": "duke",
    "leu": "leu",
}


def preprocess_features(X, scaling="maxabs"):
    """Drop all-zero features, scale each to unit max-abs value, append a 1 column."""
    X = np.asarray(X, dtype=float)
    keep = np.any(X != 0, axis=0)
    X = X[:, keep]
    if scaling == "maxabs":
        X = X / np.max(np.abs(X), axis=0)
    elif scaling != "none":
        raise ValueError(f"unknown scaling {scaling!r}")
    return np.hstack([X, np.ones((X.shape[0], 1))])


def load_libsvm(path, scaling="maxabs"):
    """Read a LIBSVM text file; returns dense preprocessed features and +/-1 labels."""
    X, y = load_svmlight_file(str(path))
    y = np.asarray(y, dtype=float)
    labels = np.unique(y)
    if len(labels) != 2:
        raise ValueError(f"{path}: expected binary labels, found {labels}")
    y = np.where(y == labels.max(), 1.0, -1.0)
    return preprocess_features(X.toarray(), scaling=scaling), y


def data_dir():
    return Path(os.environ.get("PROXBUNDLE_DATA", "data"))


def find_dataset(name):
    """Path to a known LIBSVM dataset if it has been downloaded, else None."""
    fname = LIBSVM_FILES.get(name, name)
    for candidate in (data_dir() / fname, data_dir() / (fname + ".txt")):
        if candidate.exists():
            return candidate
    return None


def load_svm_problem(name, lam, scaling="maxabs"):
    path = find_dataset(name)
    if path is None:
        raise FileNotFoundError(f"dataset {name!r} not found under {data_dir()}")
    X, y = load_libsvm(path, scaling=scaling)
    return SvmProblem(X, y, lam, name=name)
