"""Level-scheme file parsing, validation, and serialization.

A scheme file is the single configuration surface of the toolkit. It
declares the matter levels (grouped into conformer families), the photon
modes, the couplings between levels, the pulse schedule, and the emission
detectors. Everything downstream (basis enumeration, operator assembly,
propagation, reachability) is derived from a parsed ``Scheme``.

Format: UTF-8, line oriented, ``#`` comments, one declaration per line,
bracketed section headers. Header keys appear before the first section:

    unit = model | eV
    max-photons-per-mode = 1
    resonance-tolerance = 1e-06
    gate-tolerance = 1e-06
    transfer = 0.0

Sections and declaration shapes:

    [family <name>]  LABEL j=.. g=.. term=Sigma|Pi|Delta spin=1|3 energy=..
    [modes]          ID omega=.. [note=..] [transfer=..]
    [couplings]      dipole A.X B.Y mode=ID strength=.. [phase=..]
                     spinorbit A.X B.Y strength=.. [phase=..]
    [pulses]         MODE_ID time=..
    [detectors]      ID target=A.X mode=ID threshold=.. [rate=..]

Level references use ``family.label`` syntax (e.g. ``Z.S1``). Energies
and frequencies are in model units with hbar = 1; ``unit = eV`` only
switches the time-axis annotation downstream (model time unit becomes
hbar/eV), it does not rescale stored values.

Validation rules (``validate_scheme``):

    ground-order        first-family ground not above second-family ground  WARNING
    selection.spin      coupling declaration violates the spin rule         ERROR
    selection.parity    coupling declaration violates the orbital rule      ERROR
    pulse-order         pulse times decrease in file order                  ERROR
    detector-threshold  threshold outside (0, 1]                            ERROR
    detector-rate       negative stochastic rate                            ERROR

Parsing and validation never raise on bad input; they report diagnostics
with line/column positions and stable rule identifiers.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional

# Orbital label -> Lambda quantum number, used as the parity proxy.
LAMBDA = {"Sigma": 0, "Pi": 1, "Delta": 2}

SPINS = (1, 3)

# hbar in eV*fs; one model time unit equals this many fs when unit=eV.
HBAR_EV_FS = 0.6582119569

_IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-]*$")
_TOKEN_RE = re.compile(r"\S+")

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    """One parse or validation finding, tied to a source location."""

    severity: str
    rule: str
    message: str
    line: int
    column: int = 1

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.severity}: [{self.rule}] {self.message}"


@dataclass(frozen=True)
class LevelLabel:
    """One matter (electronuclear) base state."""

    family: str
    label: str
    j: int
    g: int
    term: str
    spin: int
    energy: float
    line: int = field(default=0, compare=False)

    @property
    def ref(self) -> str:
        return f"{self.family}.{self.label}"

    @property
    def lam(self) -> int:
        return LAMBDA[self.term]


@dataclass(frozen=True)
class PhotonMode:
    """One photon mode: its quantum energy and bookkeeping notes."""

    id: str
    omega: float
    note: str = ""
    transfer: Optional[float] = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class CouplingDecl:
    """A declared coupling between two levels (dipole or spinorbit)."""

    kind: str
    a: LevelLabel
    b: LevelLabel
    mode: Optional[PhotonMode]
    strength: float
    phase: float = 0.0
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class PulseDecl:
    """A scheduled photon injection: one quantum of ``mode`` at ``time``."""

    mode: PhotonMode
    time: float
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class DetectorDecl:
    """An emission monitor on the precursor matter state of one mode."""

    id: str
    target: LevelLabel
    mode: PhotonMode
    threshold: float
    rate: Optional[float] = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Scheme:
    """A fully resolved level scheme."""

    unit: str = "model"
    max_photons: int = 1
    resonance_tolerance: float = 1e-6
    gate_tolerance: float = 1e-6
    transfer: float = 0.0
    families: tuple[str, ...] = ()
    levels: tuple[LevelLabel, ...] = ()
    modes: tuple[PhotonMode, ...] = ()
    couplings: tuple[CouplingDecl, ...] = ()
    pulses: tuple[PulseDecl, ...] = ()
    detectors: tuple[DetectorDecl, ...] = ()

    def level(self, ref: str) -> LevelLabel:
        for lv in self.levels:
            if lv.ref == ref:
                return lv
        raise KeyError(f"unknown level reference {ref!r}")

    def mode(self, mode_id: str) -> PhotonMode:
        for m in self.modes:
            if m.id == mode_id:
                return m
        raise KeyError(f"unknown mode {mode_id!r}")

    def levels_of(self, family: str) -> tuple[LevelLabel, ...]:
        return tuple(lv for lv in self.levels if lv.family == family)

    def family_ground(self, family: str) -> LevelLabel:
        members = self.levels_of(family)
        if not members:
            raise KeyError(f"family {family!r} has no levels")
        return min(members, key=lambda lv: (lv.energy, lv.j, lv.g))

    def transfer_strength(self, mode: PhotonMode) -> float:
        return self.transfer if mode.transfer is None else mode.transfer

    @property
    def family_rank(self) -> dict[str, int]:
        return {fam: i for i, fam in enumerate(self.families)}


@dataclass
class ParseResult:
    """Outcome of ``parse_scheme``: a scheme or error diagnostics, never both."""

    scheme: Optional[Scheme]
    diagnostics: list[Diagnostic]

    @property
    def ok(self) -> bool:
        return self.scheme is not None


# ---------------------------------------------------------------------------
# Level-pair selection rules (shared with the operator layer)
# ---------------------------------------------------------------------------


def dipole_level_violation(a: LevelLabel, b: LevelLabel) -> Optional[tuple[str, str]]:
    """Return (rule, detail) if a one-photon transition a<->b is forbidden."""
    if a.spin != b.spin:
        return ("spin", f"dipole cannot change spin multiplicity ({a.spin} -> {b.spin})")
    if abs(a.lam - b.lam) != 1:
        return (
            "parity",
            f"direct EM transition forbidden: |dLambda| = {abs(a.lam - b.lam)}, need 1 "
            f"({a.term} <-> {b.term})",
        )
    return None


def spinorbit_level_violation(a: LevelLabel, b: LevelLabel) -> Optional[tuple[str, str]]:
    """Return (rule, detail) if a spin-orbit mixing a<->b is forbidden."""
    if abs(a.spin - b.spin) != 2:
        return ("spin", f"spin-orbit mixing links singlet and triplet, got {a.spin} <-> {b.spin}")
    if abs(a.lam - b.lam) != 1:
        return (
            "parity",
            f"spin-orbit mixing requires |dLambda| = 1, got {abs(a.lam - b.lam)} "
            f"({a.term} <-> {b.term})",
        )
    return None


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _tokens(text: str) -> list[tuple[str, int]]:
    """Split a line into (token, 1-based column) pairs, dropping comments."""
    hash_pos = text.find("#")
    if hash_pos >= 0:
        text = text[:hash_pos]
    return [(m.group(0), m.start() + 1) for m in _TOKEN_RE.finditer(text)]


class _Parser:
    _HEADER_KEYS = {
        "unit",
        "max-photons-per-mode",
        "resonance-tolerance",
        "gate-tolerance",
        "transfer",
    }

    def __init__(self) -> None:
        self.diags: list[Diagnostic] = []
        self.header: dict[str, object] = {}
        self.families: list[str] = []
        self.levels: list[LevelLabel] = []
        self.modes: list[PhotonMode] = []
        # raw coupling/pulse/detector rows, resolved after all levels/modes exist
        self.raw_couplings: list[tuple[list[tuple[str, int]], int]] = []
        self.raw_pulses: list[tuple[list[tuple[str, int]], int]] = []
        self.raw_detectors: list[tuple[list[tuple[str, int]], int]] = []

    def error(self, rule: str, msg: str, line: int, col: int = 1) -> None:
        self.diags.append(Diagnostic(ERROR, rule, msg, line, col))

    # -- field helpers ------------------------------------------------------

    def _split_fields(
        self, toks: list[tuple[str, int]], line: int
    ) -> Optional[dict[str, tuple[str, int]]]:
        fields: dict[str, tuple[str, int]] = {}
        for tok, col in toks:
            if "=" not in tok:
                self.error("bad-field", f"expected key=value, got {tok!r}", line, col)
                return None
            key, _, value = tok.partition("=")
            if key in fields:
                self.error("duplicate-field", f"field {key!r} given twice", line, col)
                return None
            fields[key] = (value, col)
        return fields

    def _take_float(
        self, fields: dict[str, tuple[str, int]], key: str, line: int, required: bool = True
    ) -> Optional[float]:
        if key not in fields:
            if required:
                self.error("missing-field", f"missing required field {key!r}", line)
            return None
        raw, col = fields.pop(key)
        try:
            value = float(raw)
        except ValueError:
            self.error("non-numeric", f"field {key!r} is not a number: {raw!r}", line, col)
            return None
        if not math.isfinite(value):
            self.error("non-numeric", f"field {key!r} must be finite, got {raw!r}", line, col)
            return None
        return value

    def _take_int(
        self, fields: dict[str, tuple[str, int]], key: str, line: int
    ) -> Optional[int]:
        if key not in fields:
            self.error("missing-field", f"missing required field {key!r}", line)
            return None
        raw, col = fields.pop(key)
        try:
            return int(raw)
        except ValueError:
            self.error("non-numeric", f"field {key!r} is not an integer: {raw!r}", line, col)
            return None

    def _reject_leftovers(self, fields: dict[str, tuple[str, int]], line: int) -> None:
        for key, (_, col) in fields.items():
            self.error("unknown-field", f"unknown field {key!r}", line, col)

    # -- section bodies -----------------------------------------------------

    def header_line(self, toks: list[tuple[str, int]], line: int) -> None:
        # header lines are "key = value" or "key=value"
        joined = "".join(t for t, _ in toks)
        key, eq, value = joined.partition("=")
        if not eq:
            self.error("bad-header", f"expected key = value before first section", line)
            return
        key = key.strip()
        value = value.strip()
        if key not in self._HEADER_KEYS:
            self.error("unknown-field", f"unknown header key {key!r}", line)
            return
        if key == "unit":
            if value not in ("model", "eV"):
                self.error("bad-header", f"unit must be 'model' or 'eV', got {value!r}", line)
                return
            self.header["unit"] = value
            return
        try:
            num = float(value)
        except ValueError:
            self.error("non-numeric", f"header {key!r} is not a number: {value!r}", line)
            return
        if key == "max-photons-per-mode":
            if num != int(num) or num < 0:
                self.error("bad-header", "max-photons-per-mode must be a non-negative integer", line)
                return
            self.header["max_photons"] = int(num)
        elif key == "resonance-tolerance":
            self.header["resonance_tolerance"] = num
        elif key == "gate-tolerance":
            self.header["gate_tolerance"] = num
        else:
            self.header["transfer"] = num

    def level_line(self, family: str, toks: list[tuple[str, int]], line: int) -> None:
        label, col = toks[0]
        if not _IDENT_RE.match(label):
            self.error("bad-label", f"invalid level label {label!r}", line, col)
            return
        fields = self._split_fields(toks[1:], line)
        if fields is None:
            return
        j = self._take_int(fields, "j", line)
        g = self._take_int(fields, "g", line)
        energy = self._take_float(fields, "energy", line)
        term = fields.pop("term", (None, 1))
        spin_raw = fields.pop("spin", (None, 1))
        self._reject_leftovers(fields, line)
        if None in (j, g, energy) or term[0] is None or spin_raw[0] is None:
            if term[0] is None:
                self.error("missing-field", "missing required field 'term'", line)
            if spin_raw[0] is None:
                self.error("missing-field", "missing required field 'spin'", line)
            return
        if term[0] not in LAMBDA:
            self.error("bad-term", f"term must be one of {sorted(LAMBDA)}, got {term[0]!r}", line, term[1])
            return
        try:
            spin = int(spin_raw[0])
        except ValueError:
            self.error("non-numeric", f"field 'spin' is not an integer: {spin_raw[0]!r}", line, spin_raw[1])
            return
        if spin not in SPINS:
            self.error("bad-spin", f"spin multiplicity must be 1 or 3, got {spin}", line, spin_raw[1])
            return
        if j < 0 or g < 0:
            self.error("bad-label", "j and g must be non-negative", line)
            return
        for lv in self.levels:
            if lv.family == family and lv.label == label:
                self.error("duplicate-label", f"level {family}.{label} already declared", line, col)
                return
            if lv.family == family and lv.j == j and lv.g == g:
                self.error(
                    "duplicate-label",
                    f"quantum numbers (j={j}, g={g}) already used by {lv.ref}",
                    line,
                    col,
                )
                return
        self.levels.append(
            LevelLabel(family=family, label=label, j=j, g=g, term=term[0], spin=spin,
                       energy=energy, line=line)
        )

    def mode_line(self, toks: list[tuple[str, int]], line: int) -> None:
        mode_id, col = toks[0]
        if not _IDENT_RE.match(mode_id):
            self.error("bad-label", f"invalid mode id {mode_id!r}", line, col)
            return
        if any(m.id == mode_id for m in self.modes):
            self.error("duplicate-label", f"mode {mode_id!r} already declared", line, col)
            return
        fields = self._split_fields(toks[1:], line)
        if fields is None:
            return
        omega = self._take_float(fields, "omega", line)
        note = fields.pop("note", ("", 1))[0]
        transfer = self._take_float(fields, "transfer", line, required=False)
        self._reject_leftovers(fields, line)
        if omega is None:
            return
        if omega <= 0:
            self.error("bad-mode", f"mode omega must be positive, got {omega}", line)
            return
        self.modes.append(PhotonMode(id=mode_id, omega=omega, note=note, transfer=transfer, line=line))

    # -- reference resolution -----------------------------------------------

    def _resolve_level(self, ref: str, line: int, col: int) -> Optional[LevelLabel]:
        for lv in self.levels:
            if lv.ref == ref:
                return lv
        self.error("unresolved-reference", f"unknown level reference {ref!r}", line, col)
        return None

    def _resolve_mode(self, mode_id: str, line: int, col: int) -> Optional[PhotonMode]:
        for m in self.modes:
            if m.id == mode_id:
                return m
        self.error("unresolved-reference", f"unknown mode {mode_id!r}", line, col)
        return None

    def resolve_coupling(self, toks: list[tuple[str, int]], line: int) -> Optional[CouplingDecl]:
        if len(toks) < 3:
            self.error("bad-declaration", "coupling needs: kind endpoint endpoint fields...", line)
            return None
        kind, kcol = toks[0]
        if kind not in ("dipole", "spinorbit"):
            self.error("bad-declaration", f"coupling kind must be dipole or spinorbit, got {kind!r}", line, kcol)
            return None
        a = self._resolve_level(toks[1][0], line, toks[1][1])
        b = self._resolve_level(toks[2][0], line, toks[2][1])
        fields = self._split_fields(toks[3:], line)
        if a is None or b is None or fields is None:
            return None
        if a == b:
            self.error("bad-declaration", "coupling endpoints must be distinct", line, toks[2][1])
            return None
        mode = None
        if kind == "dipole":
            if "mode" not in fields:
                self.error("missing-field", "dipole coupling requires mode=...", line)
                return None
            mode_id, mcol = fields.pop("mode")
            mode = self._resolve_mode(mode_id, line, mcol)
            if mode is None:
                return None
        elif "mode" in fields:
            _, mcol = fields.pop("mode")
            self.error("bad-declaration", "spinorbit coupling takes no mode", line, mcol)
            return None
        strength = self._take_float(fields, "strength", line)
        phase = self._take_float(fields, "phase", line, required=False)
        self._reject_leftovers(fields, line)
        if strength is None:
            return None
        return CouplingDecl(kind=kind, a=a, b=b, mode=mode, strength=strength,
                            phase=phase or 0.0, line=line)

    def resolve_pulse(self, toks: list[tuple[str, int]], line: int) -> Optional[PulseDecl]:
        mode = self._resolve_mode(toks[0][0], line, toks[0][1])
        fields = self._split_fields(toks[1:], line)
        if mode is None or fields is None:
            return None
        time = self._take_float(fields, "time", line)
        self._reject_leftovers(fields, line)
        if time is None:
            return None
        if time < 0:
            self.error("bad-declaration", f"pulse time must be non-negative, got {time}", line)
            return None
        return PulseDecl(mode=mode, time=time, line=line)

    def resolve_detector(self, toks: list[tuple[str, int]], line: int) -> Optional[DetectorDecl]:
        det_id, col = toks[0]
        if not _IDENT_RE.match(det_id):
            self.error("bad-label", f"invalid detector id {det_id!r}", line, col)
            return None
        fields = self._split_fields(toks[1:], line)
        if fields is None:
            return None
        if "target" not in fields or "mode" not in fields:
            self.error("missing-field", "detector requires target=... and mode=...", line)
            return None
        target_ref, tcol = fields.pop("target")
        mode_id, mcol = fields.pop("mode")
        target = self._resolve_level(target_ref, line, tcol)
        mode = self._resolve_mode(mode_id, line, mcol)
        threshold = self._take_float(fields, "threshold", line)
        rate = self._take_float(fields, "rate", line, required=False)
        self._reject_leftovers(fields, line)
        if target is None or mode is None or threshold is None:
            return None
        return DetectorDecl(id=det_id, target=target, mode=mode, threshold=threshold,
                            rate=rate, line=line)


def parse_scheme(text: str) -> ParseResult:
    """Parse a scheme document.

    Returns a ``ParseResult`` holding either a ``Scheme`` (element order
    preserves file order) or a non-empty list of error diagnostics, never
    both.
    """
    p = _Parser()
    section: Optional[str] = None
    section_family: Optional[str] = None

    for line_no, raw in enumerate(text.splitlines(), start=1):
        toks = _tokens(raw)
        if not toks:
            continue
        first, col = toks[0]
        if first.startswith("["):
            header = raw[raw.find("[") :].strip()
            if not header.endswith("]"):
                p.error("bad-section", f"unterminated section header {header!r}", line_no, col)
                section = None
                continue
            inner = header[1:-1].strip()
            parts = inner.split()
            if len(parts) == 2 and parts[0] == "family":
                if not _IDENT_RE.match(parts[1]):
                    p.error("bad-section", f"invalid family name {parts[1]!r}", line_no, col)
                    section = None
                    continue
                section, section_family = "family", parts[1]
                if parts[1] not in p.families:
                    p.families.append(parts[1])
            elif len(parts) == 1 and parts[0] in ("modes", "couplings", "pulses", "detectors"):
                section, section_family = parts[0], None
            else:
                p.error("unknown-section", f"unknown section header [{inner}]", line_no, col)
                section = None
            continue

        if section is None:
            p.header_line(toks, line_no)
        elif section == "family":
            p.level_line(section_family, toks, line_no)
        elif section == "modes":
            p.mode_line(toks, line_no)
        elif section == "couplings":
            p.raw_couplings.append((toks, line_no))
        elif section == "pulses":
            p.raw_pulses.append((toks, line_no))
        elif section == "detectors":
            p.raw_detectors.append((toks, line_no))

    couplings = [c for c in (p.resolve_coupling(t, ln) for t, ln in p.raw_couplings) if c]
    pulses = [u for u in (p.resolve_pulse(t, ln) for t, ln in p.raw_pulses) if u]
    detectors = [d for d in (p.resolve_detector(t, ln) for t, ln in p.raw_detectors) if d]
    seen_det: set[str] = set()
    for d in detectors:
        if d.id in seen_det:
            p.error("duplicate-label", f"detector {d.id!r} already declared", d.line)
        seen_det.add(d.id)

    if p.diags:
        return ParseResult(scheme=None, diagnostics=p.diags)

    scheme = Scheme(
        unit=p.header.get("unit", "model"),
        max_photons=p.header.get("max_photons", 1),
        resonance_tolerance=p.header.get("resonance_tolerance", 1e-6),
        gate_tolerance=p.header.get("gate_tolerance", 1e-6),
        transfer=p.header.get("transfer", 0.0),
        families=tuple(p.families),
        levels=tuple(p.levels),
        modes=tuple(p.modes),
        couplings=tuple(couplings),
        pulses=tuple(pulses),
        detectors=tuple(detectors),
    )
    return ParseResult(scheme=scheme, diagnostics=[])


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate_scheme(s: Scheme) -> list[Diagnostic]:
    """Check a parsed scheme against the domain rules.

    Pure: repeated calls yield identical diagnostics. Ground-state
    ordering is reported as a warning so inverted schemes stay usable.
    """
    diags: list[Diagnostic] = []

    if len(s.families) >= 2:
        first, second = s.families[0], s.families[1]
        g1, g2 = s.family_ground(first), s.family_ground(second)
        if not g1.energy > g2.energy:
            diags.append(
                Diagnostic(
                    WARNING,
                    "ground-order",
                    f"ground-state ordering: expected {first} ground above {second} ground, "
                    f"got {g1.energy} <= {g2.energy}",
                    g1.line,
                )
            )

    for c in s.couplings:
        check = dipole_level_violation if c.kind == "dipole" else spinorbit_level_violation
        violation = check(c.a, c.b)
        if violation is not None:
            rule, detail = violation
            diags.append(
                Diagnostic(ERROR, f"selection.{rule}", f"{c.kind} {c.a.ref} {c.b.ref}: {detail}", c.line)
            )

    last_time: Optional[float] = None
    for u in s.pulses:
        if last_time is not None and u.time < last_time:
            diags.append(
                Diagnostic(
                    ERROR,
                    "pulse-order",
                    f"pulse times must be non-decreasing in file order "
                    f"({u.time} after {last_time})",
                    u.line,
                )
            )
        last_time = u.time

    for d in s.detectors:
        if not (0.0 < d.threshold <= 1.0):
            diags.append(
                Diagnostic(
                    ERROR,
                    "detector-threshold",
                    f"detector {d.id}: threshold must lie in (0, 1], got {d.threshold}",
                    d.line,
                )
            )
        if d.rate is not None and d.rate < 0:
            diags.append(
                Diagnostic(
                    ERROR,
                    "detector-rate",
                    f"detector {d.id}: stochastic rate must be non-negative, got {d.rate}",
                    d.line,
                )
            )

    return diags


def has_errors(diags: list[Diagnostic]) -> bool:
    return any(d.severity == ERROR for d in diags)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def serialize_scheme(s: Scheme) -> str:
    """Render a scheme back to its file form.

    Output re-parses to a structurally equal Scheme (declaration order is
    preserved; numbers are written in round-trip precision).
    """
    out: list[str] = []
    out.append(f"unit = {s.unit}")
    out.append(f"max-photons-per-mode = {s.max_photons}")
    out.append(f"resonance-tolerance = {_fmt(s.resonance_tolerance)}")
    out.append(f"gate-tolerance = {_fmt(s.gate_tolerance)}")
    out.append(f"transfer = {_fmt(s.transfer)}")

    for fam in s.families:
        out.append("")
        out.append(f"[family {fam}]")
        for lv in s.levels_of(fam):
            out.append(
                f"{lv.label} j={lv.j} g={lv.g} term={lv.term} spin={lv.spin} "
                f"energy={_fmt(lv.energy)}"
            )

    out.append("")
    out.append("[modes]")
    for m in s.modes:
        row = f"{m.id} omega={_fmt(m.omega)}"
        if m.note:
            row += f" note={m.note}"
        if m.transfer is not None:
            row += f" transfer={_fmt(m.transfer)}"
        out.append(row)

    out.append("")
    out.append("[couplings]")
    for c in s.couplings:
        row = f"{c.kind} {c.a.ref} {c.b.ref}"
        if c.mode is not None:
            row += f" mode={c.mode.id}"
        row += f" strength={_fmt(c.strength)}"
        if c.phase:
            row += f" phase={_fmt(c.phase)}"
        out.append(row)

    out.append("")
    out.append("[pulses]")
    for u in s.pulses:
        out.append(f"{u.mode.id} time={_fmt(u.time)}")

    out.append("")
    out.append("[detectors]")
    for d in s.detectors:
        row = f"{d.id} target={d.target.ref} mode={d.mode.id} threshold={_fmt(d.threshold)}"
        if d.rate is not None:
            row += f" rate={_fmt(d.rate)}"
        out.append(row)

    return "\n".join(out) + "\n"
