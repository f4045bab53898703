"""Prompt assembly from text templates with {placeholder} substitution."""

from __future__ import annotations

import re
from importlib import resources

from ..primitives import PerceptionResult, aggregate_perception

_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")

TEMPLATES = ("angle", "length", "maze", "generic")

_TASK_TEMPLATE = {
    "angle": "angle",
    "length": "length",
    "maze2": "maze",
    "maze3": "maze",
}


class PromptError(Exception):
    pass


def template_for_task(task: str) -> str:
    return _TASK_TEMPLATE.get(task, "generic")


def load_template(name: str) -> str:
    if name not in TEMPLATES:
        raise PromptError(f"unknown template {name!r}")
    ref = resources.files("pvdkit.tasks") / "templates" / f"{name}.txt"
    return ref.read_text(encoding="utf-8")


def assemble_prompt(
    template_name: str,
    perception: PerceptionResult | str,
    fields: dict | None = None,
) -> str:
    """Fill a template; substitution is literal (no re-escaping).

    {perception} is bound to the aggregated perception text; all other
    placeholders must be provided in fields. Unbound placeholders raise.
    """
    text = load_template(template_name)
    if isinstance(perception, PerceptionResult):
        perception_text = aggregate_perception(perception) if perception.objects else "{}"
    else:
        perception_text = perception
    bindings = {"perception": perception_text}
    bindings.update(fields or {})

    out = []
    pos = 0
    for m in _PLACEHOLDER_RE.finditer(text):
        name = m.group(1)
        if name not in bindings:
            raise PromptError(f"unbound placeholder {{{name}}}")
        out.append(text[pos : m.start()])
        out.append(str(bindings[name]))
        pos = m.end()
    out.append(text[pos:])
    return "".join(out)
