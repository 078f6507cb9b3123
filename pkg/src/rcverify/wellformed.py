"""Well-formedness constraints and the derived node/transition maps."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .machine import NodeDecl, StMach, TransDecl

CONSTRAINTS = {
    1: "node identifiers are distinct",
    2: "the initial identifier is a declared node",
    3: "the initial node is not final",
    4: "every transition source is a declared, non-final node",
    5: "every transition target is a declared node",
}


@dataclass(frozen=True)
class Violation:
    constraint: int
    subject: str
    message: str

    def to_json(self) -> dict:
        return {"constraint": self.constraint, "subject": self.subject, "message": self.message}

    def __str__(self) -> str:
        return f"({self.constraint}) {self.subject}: {self.message}"


@dataclass(frozen=True)
class WfReport:
    violations: tuple[Violation, ...] = ()
    warnings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def constraints(self) -> set[int]:
        return {v.constraint for v in self.violations}

    def to_json(self) -> dict:
        return {"wellformed": self.ok,
                "violations": [v.to_json() for v in self.violations],
                "warnings": list(self.warnings)}

    def text(self) -> str:
        lines = [f"violation {v}" for v in self.violations]
        lines += [f"warning: {w}" for w in self.warnings]
        if self.ok:
            lines.insert(0, "well-formed")
        return "\n".join(lines)


class IllFormedMachine(Exception):
    def __init__(self, report: WfReport):
        super().__init__("; ".join(str(v) for v in report.violations))
        self.report = report


def check_wf(m: StMach) -> WfReport:
    names = m.node_names()
    nnames = set(names)
    fnames = set(m.finals)
    out: list[Violation] = []
    for name, count in sorted(Counter(names).items()):
        if count > 1:
            out.append(Violation(1, name, f"node {name} is declared {count} times"))
    if m.init not in nnames:
        out.append(Violation(2, m.init, f"initial node {m.init} is not declared"))
    if m.init in fnames:
        out.append(Violation(3, m.init, f"initial node {m.init} is final"))
    for t in m.transs:
        if t.src not in nnames:
            out.append(Violation(4, t.tid, f"source {t.src} of {t.tid} is not declared"))
        elif t.src in fnames:
            out.append(Violation(4, t.tid, f"source {t.src} of {t.tid} is a final node"))
        if t.tgt not in nnames:
            out.append(Violation(5, t.tid, f"target {t.tgt} of {t.tid} is not declared"))

    warnings: list[str] = []
    for tid, count in sorted(Counter(t.tid for t in m.transs).items()):
        if count > 1:
            warnings.append(f"transition identifier {tid} is used {count} times")
    for f in m.finals:
        if f not in nnames:
            warnings.append(f"final {f} names no declared node")
    if not out:
        for n in sorted(nnames - _reachable(m)):
            warnings.append(f"node {n} is unreachable from {m.init}")
    return WfReport(tuple(out), tuple(warnings))


def _reachable(m: StMach) -> set[str]:
    seen = {m.init}
    todo = [m.init]
    while todo:
        n = todo.pop()
        for t in m.transs:
            if t.src == n and t.tgt not in seen:
                seen.add(t.tgt)
                todo.append(t.tgt)
    return seen


@dataclass(frozen=True)
class MachineViews:
    nnames: frozenset[str]
    fnames: frozenset[str]
    nmap: dict[str, NodeDecl] = field(hash=False)
    tmap: dict[str, tuple[TransDecl, ...]] = field(hash=False)
    ninit: NodeDecl
    inters: tuple[NodeDecl, ...]


def views(m: StMach) -> MachineViews:
    """Total maps over node names; only defined for well-formed machines."""
    report = check_wf(m)
    if not report.ok:
        raise IllFormedMachine(report)
    nmap = {n.nname: n for n in m.nodes}
    tmap = {n.nname: tuple(t for t in m.transs if t.src == n.nname) for n in m.nodes}
    fnames = frozenset(m.finals)
    return MachineViews(
        nnames=frozenset(nmap),
        fnames=fnames,
        nmap=nmap,
        tmap=tmap,
        ninit=nmap[m.init],
        inters=tuple(n for n in m.nodes if n.nname not in fnames),
    )
