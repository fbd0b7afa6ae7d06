"""Replayable verification certificates.

Every verifier returns a Certificate: the verdict, the parameters it was
checked against, per-cell or per-component witnesses on a pass, exactly one
replayable counterexample on a fail, and the child certificates of composed
constructions.  Serialization is deterministic (sorted keys, no timestamps)
so identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

SCHEMA_VERSION = 1


@dataclass
class Certificate:
    verdict: str                      # "pass" | "fail"
    kind: str
    parameters: dict = field(default_factory=dict)
    detail: dict = field(default_factory=dict)
    witnesses: dict | None = None
    counterexample: dict | None = None
    children: list = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    @property
    def ok(self):
        return self.verdict == "pass"

    @staticmethod
    def passed(kind, detail=None, witnesses=None, parameters=None, children=None):
        return Certificate(verdict="pass", kind=kind,
                           parameters=parameters or {},
                           detail=detail or {},
                           witnesses=witnesses,
                           children=list(children or []))

    @staticmethod
    def failed(kind, counterexample, detail=None, parameters=None, children=None):
        return Certificate(verdict="fail", kind=kind,
                           parameters=parameters or {},
                           detail=detail or {},
                           counterexample=counterexample,
                           children=list(children or []))

    def require(self, what="verification"):
        if not self.ok:
            raise VerificationError(f"{what} failed: "
                                    f"{json.dumps(self.counterexample, sort_keys=True, default=str)}")
        return self

    def to_json(self):
        out = {
            "schema_version": self.schema_version,
            "verdict": self.verdict,
            "kind": self.kind,
            "parameters": self.parameters,
            "detail": self.detail,
        }
        if self.witnesses is not None:
            out["witnesses"] = self.witnesses
        if self.counterexample is not None:
            out["counterexample"] = self.counterexample
        if self.children:
            out["children"] = [c.to_json() for c in self.children]
        return out

    @staticmethod
    def from_json(data):
        return Certificate(
            verdict=data["verdict"],
            kind=data["kind"],
            parameters=data.get("parameters", {}),
            detail=data.get("detail", {}),
            witnesses=data.get("witnesses"),
            counterexample=data.get("counterexample"),
            children=[Certificate.from_json(c) for c in data.get("children", [])],
            schema_version=data.get("schema_version", SCHEMA_VERSION))

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True, indent=1, default=str)


class VerificationError(Exception):
    """A construction handed the verifier something it could not certify."""
