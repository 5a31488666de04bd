"""Problem files and solution reports.

Both are JSON documents. Complex numbers are always two-element ``[re, im]``
arrays. Floats are written with Python's shortest round-trip repr, so
``parse(emit(x)) == x`` exactly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .ensemble import StateEnsemble, validate
from .errors import CertificateViolation, DimensionMismatch, InputError, PriorsInvalid, WeightsInvalid
from .feasible import TOL_PSD

CLASSIFICATIONS = ("interior", "boundary", "singular")


def complex_to_json(a):
    """Nested lists with every complex entry replaced by ``[re, im]``."""
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def complex_from_json(obj, where):
    try:
        a = np.asarray(obj, dtype=float)
    except (TypeError, ValueError):
        raise DimensionMismatch(f"{where}: expected numbers in [re, im] pairs") from None
    if a.ndim == 0 or a.shape[-1] != 2:
        raise DimensionMismatch(f"{where}: expected [re, im] pairs, got shape {a.shape}")
    return a[..., 0] + 1j * a[..., 1]


def _real_vector(obj, where, err):
    try:
        v = np.asarray(obj, dtype=float)
    except (TypeError, ValueError):
        raise err(f"{where}: expected a list of numbers") from None
    if v.ndim != 1:
        raise err(f"{where}: expected a flat list, got shape {v.shape}")
    return v


@dataclass
class ProblemFile:
    states: list  # n vectors of complex amplitudes
    priors: np.ndarray | None
    weights: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc) -> "ProblemFile":
        if not isinstance(doc, dict):
            raise InputError("problem: top level must be an object")
        if "states" not in doc:
            raise DimensionMismatch("states: missing")
        raw = doc["states"]
        if not isinstance(raw, list) or not raw:
            raise DimensionMismatch("states: expected a non-empty list of vectors")
        states = [complex_from_json(v, f"states[{i}]") for i, v in enumerate(raw)]
        for i, v in enumerate(states):
            if v.ndim != 1:
                raise DimensionMismatch(f"states[{i}]: expected a list of [re, im] pairs")
        priors = doc.get("priors")
        priors = None if priors is None else _real_vector(priors, "priors", PriorsInvalid)
        weights = doc.get("weights")
        weights = None if weights is None else _real_vector(weights, "weights", WeightsInvalid)
        meta = doc.get("metadata", {})
        if not isinstance(meta, dict) or not all(isinstance(k, str) for k in meta):
            raise InputError("metadata: expected a string map")
        return cls(states, priors, weights, {k: str(v) for k, v in meta.items()})

    def to_dict(self) -> dict:
        doc = {"states": [complex_to_json(v) for v in self.states]}
        if self.priors is not None:
            doc["priors"] = np.asarray(self.priors, dtype=float).tolist()
        if self.weights is not None:
            doc["weights"] = np.asarray(self.weights, dtype=float).tolist()
        if self.metadata:
            doc["metadata"] = dict(self.metadata)
        return doc

    def ensemble(self) -> StateEnsemble:
        """Validated ensemble; uniform priors stand in when the file has none."""
        priors = self.priors
        if priors is None:
            priors = np.full(len(self.states), 1 / len(self.states))
        return validate(self.states, priors)


def load_problem(path) -> ProblemFile:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return ProblemFile.from_dict(doc)


def dump_problem(problem: ProblemFile, path=None) -> str:
    text = json.dumps(problem.to_dict(), indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def _plain(x):
    """JSON-ready copy of a residual value."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_plain(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    return float(x)


@dataclass
class SolutionReport:
    p: list
    lam: float
    p_bar: float
    classification: str
    zero_set: list | None = None
    phases: list | None = None
    residuals: dict = field(default_factory=dict)
    povm: dict | None = None
    oracle_gap: float | None = None

    @classmethod
    def from_solution(cls, sol, **extra) -> "SolutionReport":
        return cls(
            p=[float(x) for x in sol.p_opt],
            lam=float(sol.lam),
            p_bar=float(sol.p_bar),
            classification=str(sol.classification.value),
            zero_set=[int(i) for i in sol.zero_set] if sol.zero_set else None,
            residuals=_plain(sol.residuals),
            **extra,
        )

    def to_dict(self) -> dict:
        doc = {"p": list(self.p), "lambda": self.lam, "p_bar": self.p_bar,
               "classification": self.classification}
        for f in ("zero_set", "phases", "povm", "oracle_gap"):
            value = getattr(self, f)
            if value is not None:
                doc[f] = value
        doc["residuals"] = self.residuals
        return doc

    @classmethod
    def from_dict(cls, doc) -> "SolutionReport":
        known = {f.name for f in fields(cls)} - {"lam"}
        kwargs = {k: v for k, v in doc.items() if k in known}
        return cls(lam=doc["lambda"], **kwargs)

    def validate(self):
        """Re-check the report's own invariants; raise :class:`CertificateViolation`."""
        p = np.asarray(self.p, dtype=float)
        if self.classification not in CLASSIFICATIONS:
            raise CertificateViolation("classification", float("nan"), 0.0)
        if not np.all(np.isfinite(p)):
            raise CertificateViolation("p", float("nan"), 0.0)
        if np.min(p) < -TOL_PSD or np.max(p) > 1 + TOL_PSD:
            bad = float(p[np.argmax(np.abs(p - 0.5))])
            raise CertificateViolation("p", bad, TOL_PSD)
        if not -TOL_PSD <= self.p_bar <= 1 + TOL_PSD:
            raise CertificateViolation("p_bar", self.p_bar, TOL_PSD)
        if self.lam < 0:
            raise CertificateViolation("lambda", self.lam, 0.0)
        if self.classification == "boundary":
            if not self.zero_set:
                raise CertificateViolation("zero_set", 0.0, 0.0)
            z = float(np.max(np.abs(p[self.zero_set])))
            if z > TOL_PSD:
                raise CertificateViolation("zero_set", z, TOL_PSD)
        return self

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def loads(cls, text) -> "SolutionReport":
        return cls.from_dict(json.loads(text))
