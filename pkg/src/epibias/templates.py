"""Multilingual prompt templates and deterministic prompt rendering."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .dictionary import Concept, DictionaryBundle
from .errors import ParseError, ValidationError

PLACEHOLDER_DEMOGRAPHIC = "{demographic}"
PLACEHOLDER_DISEASE = "{disease}"


@dataclass(frozen=True)
class TemplateSet:
    """An ordered set of sentence templates for one language.

    Every template must contain ``{demographic}`` and ``{disease}`` exactly
    once and no other braces; this is enforced at construction so rendering
    can never emit residual placeholders. ``suffix`` is an optional stem
    (for example " in America") appended only when rendering is asked to.
    """

    language: str
    templates: tuple[str, ...]
    suffix: str | None = None

    def __post_init__(self):
        if not self.language:
            raise ValidationError("template set needs a language code")
        if not self.templates:
            raise ValidationError("template set needs at least one template")
        for i, template in enumerate(self.templates):
            for placeholder in (PLACEHOLDER_DEMOGRAPHIC, PLACEHOLDER_DISEASE):
                n = template.count(placeholder)
                if n != 1:
                    raise ValidationError(
                        f"template {i} must contain {placeholder} exactly once (found {n}): "
                        f"{template!r}"
                    )
            stripped = template.replace(PLACEHOLDER_DEMOGRAPHIC, "").replace(PLACEHOLDER_DISEASE, "")
            if "{" in stripped or "}" in stripped:
                raise ValidationError(f"template {i} contains stray braces: {template!r}")


@dataclass(frozen=True)
class RenderedPrompt:
    disease_id: str
    subgroup_id: str
    category: str
    template_index: int
    language: str
    text: str


def load_templates(path) -> TemplateSet:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ParseError(f"cannot read templates {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be an object")
    language = data.get("language")
    templates = data.get("templates")
    suffix = data.get("suffix")
    if not isinstance(language, str) or not isinstance(templates, list):
        raise ParseError(f"{path}: expected {{'language': str, 'templates': [str], 'suffix': str|null}}")
    if not all(isinstance(t, str) for t in templates):
        raise ParseError(f"{path}: templates must all be strings")
    if suffix is not None and not isinstance(suffix, str):
        raise ParseError(f"{path}: suffix must be a string or null")
    return TemplateSet(language=language, templates=tuple(templates), suffix=suffix)


def render(
    tset: TemplateSet,
    disease: Concept,
    subgroup: Concept,
    with_suffix: bool = False,
) -> list[RenderedPrompt]:
    """Render every template for one (disease, subgroup) pair.

    Display forms are inserted verbatim (no grammatical agreement) and
    whitespace runs collapse to single spaces, which leaves CJK text
    untouched since no spaces are introduced around substitutions.
    """
    disease_display = disease.display_for(tset.language)
    subgroup_display = subgroup.display_for(tset.language)
    suffix = tset.suffix if (with_suffix and tset.suffix) else ""
    prompts = []
    for index, template in enumerate(tset.templates):
        text = template.replace(PLACEHOLDER_DEMOGRAPHIC, subgroup_display)
        text = text.replace(PLACEHOLDER_DISEASE, disease_display)
        text = " ".join((text + suffix).split())
        prompts.append(
            RenderedPrompt(
                disease_id=disease.id,
                subgroup_id=subgroup.id,
                category=subgroup.category,
                template_index=index,
                language=tset.language,
                text=text,
            )
        )
    return prompts


def render_matrix(
    tset: TemplateSet,
    bundle: DictionaryBundle,
    category: str,
    with_suffix: bool = False,
) -> list[RenderedPrompt]:
    """Render the full cartesian product in (disease, subgroup, template)
    lexical order; output is deterministic for fixed inputs."""
    diseases = sorted(bundle.diseases, key=lambda c: c.id)
    subgroups = sorted(bundle.concepts(category), key=lambda c: c.id)
    prompts: list[RenderedPrompt] = []
    for disease in diseases:
        for subgroup in subgroups:
            prompts.extend(render(tset, disease, subgroup, with_suffix=with_suffix))
    return prompts


def write_prompts_jsonl(prompts, path) -> None:
    """Prompt JSONL consumed by logit harvesters; one prompt per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for p in prompts:
            fh.write(
                json.dumps(
                    {
                        "disease": p.disease_id,
                        "subgroup": p.subgroup_id,
                        "category": p.category,
                        "template": p.template_index,
                        "language": p.language,
                        "text": p.text,
                    },
                    ensure_ascii=False,
                )
            )
            fh.write("\n")
