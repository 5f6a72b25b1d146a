"""Question files and converters from the native benchmark layouts.

The neutral format is JSON Lines, one object per line::

    {"id": "...", "question": "...", "topic_entities": ["..."], "answers": ["..."]}
"""

from __future__ import annotations

import json
import re
from collections.abc import Iterable, Iterator
from pathlib import Path
from typing import Any, TextIO

from .errors import DatasetError
from .pipeline.types import PipelineResult, Question

_METAQA_TOPIC = re.compile(r"\[([^\]]+)\]")


def question_to_dict(q: Question) -> dict[str, Any]:
    return {
        "id": q.id,
        "question": q.text,
        "topic_entities": list(q.topic_entities),
        "answers": list(q.gold_answers),
    }


def parse_questions(lines: Iterable[str]) -> list[Question]:
    questions = []
    seen: set[str] = set()
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"invalid JSON: {exc.msg}", line_no) from exc
        if not isinstance(obj, dict):
            raise DatasetError("expected a JSON object", line_no)
        try:
            q = Question(
                id=str(obj["id"]),
                text=str(obj["question"]),
                topic_entities=tuple(str(e) for e in obj.get("topic_entities") or []),
                gold_answers=tuple(str(a) for a in obj.get("answers") or []),
            )
        except KeyError as exc:
            raise DatasetError(f"missing field {exc.args[0]!r}", line_no) from exc
        except ValueError as exc:
            raise DatasetError(str(exc), line_no) from exc
        if q.id in seen:
            raise DatasetError(f"duplicate question id {q.id!r}", line_no)
        seen.add(q.id)
        questions.append(q)
    return questions


def load_questions(path: str | Path) -> list[Question]:
    with open(path, encoding="utf-8") as fh:
        return parse_questions(fh)


def dump_questions(questions: Iterable[Question], fh: TextIO) -> int:
    n = 0
    for q in questions:
        fh.write(json.dumps(question_to_dict(q), ensure_ascii=False) + "\n")
        n += 1
    return n


def dump_results(results: Iterable[PipelineResult], fh: TextIO) -> None:
    for r in results:
        fh.write(json.dumps(r.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")


def iter_webqsp(data: dict[str, Any]) -> Iterator[Question]:
    """Questions from a WebQSP ``*.json`` document (``{"Questions": [...]}``)."""
    items = data.get("Questions")
    if not isinstance(items, list):
        raise DatasetError("WebQSP file has no 'Questions' array")
    for item in items:
        topics: list[str] = []
        answers: list[str] = []
        for parse in item.get("Parses") or []:
            mid = parse.get("TopicEntityMid")
            if mid and mid not in topics:
                topics.append(mid)
            for ans in parse.get("Answers") or []:
                value = ans.get("EntityName") if ans.get("AnswerType") == "Entity" else None
                value = value or ans.get("AnswerArgument")
                if value and value not in answers:
                    answers.append(value)
        text = item.get("RawQuestion") or item.get("ProcessedQuestion") or ""
        yield Question(id=str(item["QuestionId"]), text=text, topic_entities=tuple(topics),
                       gold_answers=tuple(answers))


def iter_metaqa(lines: Iterable[str], prefix: str = "metaqa") -> Iterator[Question]:
    """Questions from MetaQA ``question<TAB>ans1|ans2`` lines; the topic is bracketed."""
    n = 0
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        if "\t" not in line:
            raise DatasetError("expected question<TAB>answers", line_no)
        text, answers = line.split("\t", 1)
        topics = _METAQA_TOPIC.findall(text)
        n += 1
        yield Question(
            id=f"{prefix}-{n:06d}",
            text=_METAQA_TOPIC.sub(r"\1", text).strip(),
            topic_entities=tuple(dict.fromkeys(topics)),
            gold_answers=tuple(a.strip() for a in answers.split("|") if a.strip()),
        )
