"""Prompt templates: one text file per task kind with ``{{name}}`` placeholders.

Placeholders are filled from the task's payload fields. ``{{payload}}``
expands to the full input as indented JSON. Lists render as bullet lines and
nested objects as JSON. A placeholder with no matching field renders as
``(none)``.
"""

from __future__ import annotations

import json
import re
from importlib import resources
from pathlib import Path
from typing import Any

from ..errors import ConfigurationError
from .tasks import OracleTask, TaskKind

PLACEHOLDER = re.compile(r"\{\{\s*([a-z_]+)\s*\}\}")
REASK_ADDENDUM = (
    "\n\nYour previous reply could not be read. Answer strictly in the required "
    "fenced block format, with no other text inside the block."
)


def _render_value(value: Any) -> str:
    if value is None or value == [] or value == "":
        return "(none)"
    if isinstance(value, str):
        return value
    if isinstance(value, list) and all(isinstance(v, str) for v in value):
        return "\n".join(f"- {v}" for v in value)
    if isinstance(value, list):
        return "\n".join(json.dumps(v, ensure_ascii=False, sort_keys=True) for v in value)
    return json.dumps(value, ensure_ascii=False, sort_keys=True)


class PromptLibrary:
    def __init__(self, templates: dict[TaskKind, str]) -> None:
        missing = [k.value for k in TaskKind if k not in templates]
        if missing:
            raise ConfigurationError(f"prompt templates missing for: {', '.join(missing)}")
        self.templates = templates

    @classmethod
    def from_directory(cls, directory: str | Path | None = None) -> PromptLibrary:
        templates = {}
        for kind in TaskKind:
            name = f"{kind.value}.txt"
            if directory is None:
                text = resources.files(__package__).joinpath("prompts", name).read_text(encoding="utf-8")
            else:
                path = Path(directory) / name
                if not path.exists():
                    raise ConfigurationError(f"prompt template not found: {path}")
                text = path.read_text(encoding="utf-8")
            templates[kind] = text
        return cls(templates)

    def render(self, task: OracleTask) -> str:
        inputs = task.inputs
        template = self.templates[task.kind]

        def fill(m: re.Match[str]) -> str:
            name = m.group(1)
            if name == "payload":
                return json.dumps(inputs, ensure_ascii=False, sort_keys=True, indent=2)
            return _render_value(inputs.get(name))

        text = PLACEHOLDER.sub(fill, template)
        if inputs.get("reask"):
            text += REASK_ADDENDUM
        return text
