"""Teacher prompt construction and verdict parsing.

The prompt text must stay byte-identical to the analyzer's own prompt
builder (pinned by the golden files under the analyzer's fixtures); both
sides of the pipeline must show the teacher exactly the same text.
"""

from __future__ import annotations

from .instances import Instance

CONTEXT_RADIUS = 2  # the window is the flagged line +/- 2 lines

_PROMPT_TEMPLATE = """\
You are an experienced infrastructure-as-code security analyst. A rule-based
static analyzer has flagged one line of {technology} code as a potential
security smell. The rules over-approximate on purpose, so some warnings are
false alarms. Decide whether this warning is a true positive (a real
security smell) or a false positive (benign code that merely matches the
rule's pattern).

Warning type: {smell}
Rule rationale: {rationale}
The flagged line is marked with '>>>':

{window}

Answer with exactly two lines. The first line must be exactly
'DECISION: TP' or 'DECISION: FP'. The second line must start with
'REASON: ' followed by one short sentence.
"""


class UnparseableResponse(Exception):
    """The teacher's reply carries no usable TP/FP decision."""


def build_prompt(instance: Instance) -> str:
    context_lines = instance.context.split("\n")
    target_index = min(instance.line - 1, CONTEXT_RADIUS)
    marked = []
    for i, line in enumerate(context_lines):
        prefix = ">>> " if i == target_index else "    "
        marked.append(prefix + line)
    return _PROMPT_TEMPLATE.format(
        technology=instance.technology,
        smell=instance.smell,
        rationale=instance.rationale,
        window="\n".join(marked),
    )


def parse_teacher_response(text: str) -> str:
    """Extract the first DECISION line; returns "TP" or "FP"."""
    for line in text.splitlines():
        head, sep, rest = line.partition(":")
        if sep and head.strip().lower() == "decision":
            verdict = rest.strip().rstrip(".").upper()
            if verdict in ("TP", "FP"):
                return verdict
            raise UnparseableResponse(f"ambiguous decision: {rest.strip()!r}")
    raise UnparseableResponse("no DECISION line in response")
