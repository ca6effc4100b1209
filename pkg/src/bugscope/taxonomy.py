"""Three-level bug taxonomy and label handling.

The taxonomy has three primary failure families (Syntax, Runtime,
Functional) plus a Pass state and an Ambiguous Problem bucket for tasks
whose own statement is defective. Below the primaries sit 12 secondary
types, and three of those split further (logic errors into six
sub-labels, API misuse by exception kind, and the two "minors" buckets).

Labels are exchanged as short path strings: ``"A.3"``, ``"D"``,
``"C.1/MissingCornerCases"``. `parse_label_code` and `BugLabel.path`
round-trip these.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional


class UnknownLabel(ValueError):
    """Label code names a node that does not exist in the taxonomy."""


class InconsistentPath(ValueError):
    """Label components exist but do not nest (e.g. B.3 with a B.1 kind)."""


class PrimaryType(str, Enum):
    PASS = "Pass"
    SYNTAX = "Syntax"
    RUNTIME = "Runtime"
    FUNCTIONAL = "Functional"
    AMBIGUOUS_PROBLEM = "AmbiguousProblem"


class SecondaryType(str, Enum):
    A1_INCOMPLETE_SYNTAX = "A1_IncompleteSyntax"
    A2_INCORRECT_INDENTATION = "A2_IncorrectIndentation"
    A3_LIBRARY_IMPORT_ERROR = "A3_LibraryImportError"
    B1_API_MISUSE = "B1_ApiMisuse"
    B2_DEFINITION_MISSING = "B2_DefinitionMissing"
    B3_INCORRECT_BOUNDARY_CHECK = "B3_IncorrectBoundaryCheck"
    B4_INCORRECT_ARGUMENT = "B4_IncorrectArgument"
    B5_MINORS = "B5_Minors"
    C1_MISUNDERSTANDING_LOGIC = "C1_MisunderstandingLogic"
    C2_HALLUCINATION = "C2_Hallucination"
    C3_IO_FORMAT_ERROR = "C3_IOFormatError"
    C4_MINORS = "C4_Minors"


class TertiaryType(str, Enum):
    # splits of C.1 (misunderstanding and logic error)
    TEST_CASE_DRIVEN = "TestCaseDriven"
    MISSING_CORNER_CASES = "MissingCornerCases"
    REFERENCE_MISUNDERSTANDING = "ReferenceMisunderstanding"
    INCORRECT_CONDITIONAL_BRANCHES = "IncorrectConditionalBranches"
    SPECIFIC_CONCEPTION_MISUNDERSTANDING = "SpecificConceptionMisunderstanding"
    RESIDUAL_LOGIC_MISUNDERSTANDING = "ResidualLogicMisunderstanding"
    # splits of B.1 (API misuse) by the exception kind observed
    ATTRIBUTE_KIND = "AttributeKind"
    TYPE_KIND = "TypeKind"
    VALUE_KIND = "ValueKind"
    # splits of B.5 (runtime minors)
    TIMEOUT = "Timeout"
    LLM_DEFINED_EXCEPTION = "LlmDefinedException"
    # splits of C.4 (functional minors)
    INCORRECT_INITIALIZATION = "IncorrectInitialization"
    SUB_OPTIMAL_CODE = "SubOptimalCode"
    INFINITE_LOOP = "InfiniteLoop"


class Provenance(str, Enum):
    AUTOMATIC = "automatic"
    HEURISTIC = "heuristic"
    MODEL_SUGGESTED = "model_suggested"
    HUMAN = "human"


PRIMARY_LETTER = {
    PrimaryType.SYNTAX: "A",
    PrimaryType.RUNTIME: "B",
    PrimaryType.FUNCTIONAL: "C",
    PrimaryType.AMBIGUOUS_PROBLEM: "D",
}
LETTER_PRIMARY = {v: k for k, v in PRIMARY_LETTER.items()}

SECONDARY_CODE = {
    SecondaryType.A1_INCOMPLETE_SYNTAX: "A.1",
    SecondaryType.A2_INCORRECT_INDENTATION: "A.2",
    SecondaryType.A3_LIBRARY_IMPORT_ERROR: "A.3",
    SecondaryType.B1_API_MISUSE: "B.1",
    SecondaryType.B2_DEFINITION_MISSING: "B.2",
    SecondaryType.B3_INCORRECT_BOUNDARY_CHECK: "B.3",
    SecondaryType.B4_INCORRECT_ARGUMENT: "B.4",
    SecondaryType.B5_MINORS: "B.5",
    SecondaryType.C1_MISUNDERSTANDING_LOGIC: "C.1",
    SecondaryType.C2_HALLUCINATION: "C.2",
    SecondaryType.C3_IO_FORMAT_ERROR: "C.3",
    SecondaryType.C4_MINORS: "C.4",
}
CODE_SECONDARY = {v: k for k, v in SECONDARY_CODE.items()}

SECONDARY_PRIMARY = {
    sec: LETTER_PRIMARY[code[0]] for sec, code in SECONDARY_CODE.items()
}

TERTIARY_SECONDARY = {
    TertiaryType.TEST_CASE_DRIVEN: SecondaryType.C1_MISUNDERSTANDING_LOGIC,
    TertiaryType.MISSING_CORNER_CASES: SecondaryType.C1_MISUNDERSTANDING_LOGIC,
    TertiaryType.REFERENCE_MISUNDERSTANDING: SecondaryType.C1_MISUNDERSTANDING_LOGIC,
    TertiaryType.INCORRECT_CONDITIONAL_BRANCHES: SecondaryType.C1_MISUNDERSTANDING_LOGIC,
    TertiaryType.SPECIFIC_CONCEPTION_MISUNDERSTANDING: SecondaryType.C1_MISUNDERSTANDING_LOGIC,
    TertiaryType.RESIDUAL_LOGIC_MISUNDERSTANDING: SecondaryType.C1_MISUNDERSTANDING_LOGIC,
    TertiaryType.ATTRIBUTE_KIND: SecondaryType.B1_API_MISUSE,
    TertiaryType.TYPE_KIND: SecondaryType.B1_API_MISUSE,
    TertiaryType.VALUE_KIND: SecondaryType.B1_API_MISUSE,
    TertiaryType.TIMEOUT: SecondaryType.B5_MINORS,
    TertiaryType.LLM_DEFINED_EXCEPTION: SecondaryType.B5_MINORS,
    TertiaryType.INCORRECT_INITIALIZATION: SecondaryType.C4_MINORS,
    TertiaryType.SUB_OPTIMAL_CODE: SecondaryType.C4_MINORS,
    TertiaryType.INFINITE_LOOP: SecondaryType.C4_MINORS,
}

# Human-facing names and one-line interpretations for every taxonomy node.
# These feed the machine-readable listing, the repair-prompt category block,
# and the review UI picker.
PRIMARY_INFO = {
    PrimaryType.SYNTAX: (
        "Syntax Bug",
        "The code violates the grammar of the language and is rejected before it runs.",
    ),
    PrimaryType.RUNTIME: (
        "Runtime Bug",
        "The code parses but breaks a runtime rule while executing.",
    ),
    PrimaryType.FUNCTIONAL: (
        "Functional Bug",
        "The code runs cleanly but does not implement the required behavior, so unit tests fail.",
    ),
    PrimaryType.AMBIGUOUS_PROBLEM: (
        "Ambiguous Problem",
        "The task statement itself is incomplete or ambiguous; the failure is attributable to the problem, not the code.",
    ),
}

SECONDARY_INFO = {
    SecondaryType.A1_INCOMPLETE_SYNTAX: (
        "Incomplete Syntax Structure",
        "An opened syntax element is never finished: unmatched parentheses, unclosed quotes, missing colons, or truncated statements.",
    ),
    SecondaryType.A2_INCORRECT_INDENTATION: (
        "Incorrect Indentation",
        "Indentation levels are inconsistent with the block structure the code needs.",
    ),
    SecondaryType.A3_LIBRARY_IMPORT_ERROR: (
        "Library Import Error",
        "A library is missing, imported at an illegal position, or imported at the wrong level.",
    ),
    SecondaryType.B1_API_MISUSE: (
        "API Misuse",
        "An API is invoked on the wrong receiver type, with arguments of the wrong type, or with values outside its accepted range.",
    ),
    SecondaryType.B2_DEFINITION_MISSING: (
        "Definition Missing",
        "A variable or function is used before any definition of it exists.",
    ),
    SecondaryType.B3_INCORRECT_BOUNDARY_CHECK: (
        "Incorrect Boundary Condition Check",
        "Edge or limit inputs (empty collections, zero divisors, extreme indices) are not checked before an operation that requires them.",
    ),
    SecondaryType.B4_INCORRECT_ARGUMENT: (
        "Incorrect Argument",
        "The argument list does not match the input format the problem specifies: wrong count, order, or shape of parameters.",
    ),
    SecondaryType.B5_MINORS: (
        "Minors (Runtime)",
        "Execution exceeds the time limit, or the code raises an exception it invented for branches the problem leaves unspecified.",
    ),
    SecondaryType.C1_MISUNDERSTANDING_LOGIC: (
        "Misunderstanding and Logic Error",
        "The requirement is misread, or the implemented logic does not realize it even when it was understood.",
    ),
    SecondaryType.C2_HALLUCINATION: (
        "Hallucination",
        "The code is syntactically plausible but unrelated to what the problem actually asks for.",
    ),
    SecondaryType.C3_IO_FORMAT_ERROR: (
        "Input/Output Format Error",
        "Inputs or outputs are consumed or produced in the wrong order, format, or numeric precision.",
    ),
    SecondaryType.C4_MINORS: (
        "Minors (Functional)",
        "Wrong initial values, a sub-optimal algorithm that passes only some tests, or a loop that never exits for certain inputs.",
    ),
}

TERTIARY_INFO = {
    TertiaryType.TEST_CASE_DRIVEN: (
        "Test-case-driven Code Generation",
        "The code is fitted to the sample inputs and outputs instead of the described functionality.",
    ),
    TertiaryType.MISSING_CORNER_CASES: (
        "Missing Checks for Corner Cases",
        "The main logic is right but edge cases are not handled.",
    ),
    TertiaryType.REFERENCE_MISUNDERSTANDING: (
        "Reference Relationship Misunderstanding",
        "Numerical relationships or the order of operations in the description are misread.",
    ),
    TertiaryType.INCORRECT_CONDITIONAL_BRANCHES: (
        "Incorrect Conditional Branches",
        "Only some of the required conditional branches are implemented or handled correctly.",
    ),
    TertiaryType.SPECIFIC_CONCEPTION_MISUNDERSTANDING: (
        "Specific Conception Misunderstanding",
        "A concept the problem defines is interpreted incorrectly.",
    ),
    TertiaryType.RESIDUAL_LOGIC_MISUNDERSTANDING: (
        "Residual Logic Misunderstanding",
        "The whole description is misunderstood, or understanding is right but no correct logic was constructed.",
    ),
    TertiaryType.ATTRIBUTE_KIND: (
        "AttributeError",
        "An invalid reference to an attribute the receiver does not have.",
    ),
    TertiaryType.TYPE_KIND: (
        "TypeError",
        "An API applied to an object of an incorrect type.",
    ),
    TertiaryType.VALUE_KIND: (
        "ValueError",
        "An argument of the right type but an inappropriate value.",
    ),
    TertiaryType.TIMEOUT: (
        "Timeout",
        "Execution exceeds the time limit, typically from high algorithmic complexity or excessive iteration.",
    ),
    TertiaryType.LLM_DEFINED_EXCEPTION: (
        "LLM-Defined Exception",
        "The code raises an exception it defined itself for conditions the problem never specified.",
    ),
    TertiaryType.INCORRECT_INITIALIZATION: (
        "Incorrect Initialization",
        "Logic is correct but a variable starts from the wrong value.",
    ),
    TertiaryType.SUB_OPTIMAL_CODE: (
        "Sub-optimal Code",
        "A weaker algorithm passes some unit tests but not all.",
    ),
    TertiaryType.INFINITE_LOOP: (
        "Infinite Loop",
        "Loop exit conditions are never met for some inputs.",
    ),
}

PASS_PATH = "PASS"


@dataclass(frozen=True)
class BugLabel:
    """A taxonomy assignment with provenance and review bookkeeping.

    `version` implements optimistic concurrency for review writes:
    version 0 is the machine label, each accepted human review bumps it
    by one.
    """

    primary: PrimaryType
    secondary: Optional[SecondaryType] = None
    tertiary: Optional[TertiaryType] = None
    provenance: Provenance = Provenance.AUTOMATIC
    confidence: float = 1.0
    version: int = 0

    def __post_init__(self) -> None:
        if self.secondary is not None:
            if SECONDARY_PRIMARY[self.secondary] is not self.primary:
                raise InconsistentPath(
                    f"secondary {self.secondary.value} does not belong to primary {self.primary.value}"
                )
        if self.tertiary is not None:
            if self.secondary is None:
                raise InconsistentPath("tertiary label requires a secondary label")
            if TERTIARY_SECONDARY[self.tertiary] is not self.secondary:
                raise InconsistentPath(
                    f"tertiary {self.tertiary.value} does not belong to secondary {self.secondary.value}"
                )
        if self.primary is PrimaryType.PASS and (self.secondary or self.tertiary):
            raise InconsistentPath("Pass carries no secondary or tertiary label")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if self.version < 0:
            raise ValueError("version must be non-negative")

    @property
    def path(self) -> str:
        """Short path string: ``PASS``, ``D``, ``A.3``, ``C.1/MissingCornerCases``."""
        if self.primary is PrimaryType.PASS:
            return PASS_PATH
        if self.secondary is None:
            return PRIMARY_LETTER[self.primary]
        code = SECONDARY_CODE[self.secondary]
        if self.tertiary is None:
            return code
        return f"{code}/{self.tertiary.value}"

    def with_meta(self, **changes) -> "BugLabel":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "primary": self.primary.value,
            "secondary": self.secondary.value if self.secondary else None,
            "tertiary": self.tertiary.value if self.tertiary else None,
            "provenance": self.provenance.value,
            "confidence": self.confidence,
            "version": self.version,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BugLabel":
        return cls(
            primary=PrimaryType(d["primary"]),
            secondary=SecondaryType(d["secondary"]) if d.get("secondary") else None,
            tertiary=TertiaryType(d["tertiary"]) if d.get("tertiary") else None,
            provenance=Provenance(d.get("provenance", "automatic")),
            confidence=float(d.get("confidence", 1.0)),
            version=int(d.get("version", 0)),
        )


_TERTIARY_BY_NAME = {t.value: t for t in TertiaryType}


def parse_label_code(
    code: str,
    provenance: Provenance = Provenance.AUTOMATIC,
    confidence: float = 1.0,
    version: int = 0,
) -> BugLabel:
    """Parse a label path string into a `BugLabel`.

    Accepts the grammar ``[ABCD](.N)?(/TertiaryName)?`` plus the literal
    ``PASS``. Raises `UnknownLabel` for codes absent from the taxonomy
    and `InconsistentPath` for components that exist but do not nest.
    """
    code = code.strip()
    if code == PASS_PATH:
        return BugLabel(PrimaryType.PASS, provenance=provenance,
                        confidence=confidence, version=version)
    if not code:
        raise UnknownLabel("empty label code")

    head, _, tert_name = code.partition("/")
    letter = head[0]
    if letter not in LETTER_PRIMARY:
        raise UnknownLabel(f"unknown primary letter {letter!r}")
    primary = LETTER_PRIMARY[letter]

    secondary: Optional[SecondaryType] = None
    if len(head) > 1:
        if head not in CODE_SECONDARY:
            raise UnknownLabel(f"unknown label code {head!r}")
        secondary = CODE_SECONDARY[head]

    tertiary: Optional[TertiaryType] = None
    if tert_name:
        if tert_name not in _TERTIARY_BY_NAME:
            raise UnknownLabel(f"unknown tertiary label {tert_name!r}")
        tertiary = _TERTIARY_BY_NAME[tert_name]
        if secondary is None:
            raise InconsistentPath(f"tertiary {tert_name} requires a secondary code")

    return BugLabel(primary, secondary, tertiary,
                    provenance=provenance, confidence=confidence, version=version)


@dataclass(frozen=True)
class TaxonomyNode:
    code: str
    name: str
    level: str  # primary | secondary | tertiary
    parent: Optional[str]
    description: str


def taxonomy_nodes() -> list[TaxonomyNode]:
    """Every node of the taxonomy as a flat, machine-readable listing."""
    nodes: list[TaxonomyNode] = []
    for primary, (name, desc) in PRIMARY_INFO.items():
        nodes.append(TaxonomyNode(PRIMARY_LETTER[primary], name, "primary", None, desc))
    for secondary, (name, desc) in SECONDARY_INFO.items():
        code = SECONDARY_CODE[secondary]
        nodes.append(TaxonomyNode(code, name, "secondary", code[0], desc))
    for tertiary, (name, desc) in TERTIARY_INFO.items():
        parent = SECONDARY_CODE[TERTIARY_SECONDARY[tertiary]]
        code = f"{parent}/{tertiary.value}"
        nodes.append(TaxonomyNode(code, name, "tertiary", parent, desc))
    return nodes


def render_taxonomy_listing() -> str:
    """Plain-text category block for prompts: one line per node."""
    lines = []
    for node in taxonomy_nodes():
        indent = {"primary": "", "secondary": "  ", "tertiary": "    "}[node.level]
        lines.append(f"{indent}{node.code} {node.name}: {node.description}")
    return "\n".join(lines)
