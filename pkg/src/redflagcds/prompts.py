"""Prompt templates: orchestrator routing, 7x2 specialist prompts, 2 single-LLM baselines.

Templates are external text files so guideline criteria can be edited without
touching code. The packaged defaults live in prompt_templates/; any directory
with the same layout can be loaded instead.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

from .domain import RedFlag, Vignette
from .encoding import read_text_fallback

PLACEHOLDER = "{{VIGNETTE}}"

ORCHESTRATOR = "orchestrator"
BASELINE = "baseline"


class TemplateMissing(FileNotFoundError):
    pass


class TemplateInvalid(ValueError):
    pass


class PromptStrategy(enum.Enum):
    QPROMPT = "qprompt"
    GPROMPT = "gprompt"


@dataclass(frozen=True)
class PromptTemplate:
    role: str  # "orchestrator", "specialist", or "baseline"
    flag: Optional[RedFlag]
    strategy: Optional[PromptStrategy]
    body: str
    source_path: str

    def render(self, vignette: Vignette) -> str:
        return self.body.replace(PLACEHOLDER, vignette.text)


def _template_key(role: str, flag: Optional[RedFlag], strategy: Optional[PromptStrategy]):
    return (role, flag, strategy)


class PromptLibrary:
    """All templates for one run, loaded once and immutable afterwards."""

    def __init__(self, templates: dict):
        self._templates = dict(templates)

    @classmethod
    def load(cls, directory) -> "PromptLibrary":
        """Load and lint a template directory.

        Layout: orchestrator.txt, <flag>/{qprompt,gprompt}.txt for each of the
        seven flags, baseline/{qprompt,gprompt}.txt. Raises TemplateMissing for
        absent files and TemplateInvalid for lint failures.
        """
        directory = Path(directory)
        templates = {}

        def read_one(rel: str, role: str, flag, strategy) -> None:
            path = directory / rel
            if not path.is_file():
                raise TemplateMissing(str(path))
            body = read_text_fallback(path)
            templates[_template_key(role, flag, strategy)] = PromptTemplate(
                role=role, flag=flag, strategy=strategy, body=body, source_path=str(path)
            )

        read_one("orchestrator.txt", ORCHESTRATOR, None, None)
        for flag in RedFlag:
            for strategy in PromptStrategy:
                read_one(f"{flag.value}/{strategy.value}.txt", "specialist", flag, strategy)
        for strategy in PromptStrategy:
            read_one(f"baseline/{strategy.value}.txt", BASELINE, None, strategy)

        problems = []
        for key, tpl in templates.items():
            count = tpl.body.count(PLACEHOLDER)
            if count != 1:
                problems.append(f"{tpl.source_path}: {count} vignette placeholders (need exactly 1)")
        for flag in RedFlag:
            q = templates[_template_key("specialist", flag, PromptStrategy.QPROMPT)]
            g = templates[_template_key("specialist", flag, PromptStrategy.GPROMPT)]
            if len(g.body) <= len(q.body):
                problems.append(f"{flag.value}: gprompt is not longer than qprompt")
            if "Definition" not in g.body:
                problems.append(f"{flag.value}: gprompt lacks a Definition block")
        if problems:
            raise TemplateInvalid("; ".join(problems))
        return cls(templates)

    @classmethod
    def default(cls) -> "PromptLibrary":
        return cls.load(resources.files("redflagcds") / "prompt_templates")

    def _get(self, role, flag, strategy) -> PromptTemplate:
        try:
            return self._templates[_template_key(role, flag, strategy)]
        except KeyError:
            label = flag.value if flag else role
            raise TemplateMissing(f"{label}/{strategy.value if strategy else ''}") from None

    def orchestrator_prompt(self, vignette: Vignette) -> str:
        return self._get(ORCHESTRATOR, None, None).render(vignette)

    def specialist_prompt(self, flag: RedFlag, strategy: PromptStrategy, vignette: Vignette) -> str:
        return self._get("specialist", flag, strategy).render(vignette)

    def baseline_prompt(self, strategy: PromptStrategy, vignette: Vignette) -> str:
        return self._get(BASELINE, None, strategy).render(vignette)
