"""Bundled desk-scale fixture pack: toy graph, twelve questions, two cassettes."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from ..datasets import load_questions
from ..kg_store import KnowledgeGraph, load_graph
from ..oracle import Cassette
from ..pipeline.types import Question

DATA_DIR = Path(str(resources.files(__package__).joinpath("data")))
KG_PATH = DATA_DIR / "toy_kg.tsv"
CVT_PATH = DATA_DIR / "toy_cvt.txt"
QUESTIONS_PATH = DATA_DIR / "questions.jsonl"
CASSETTE_PATHS = {
    "mindful": DATA_DIR / "mindful_cassette.json",
    "baseline": DATA_DIR / "baseline_cassette.json",
}


def load_fixture_graph() -> KnowledgeGraph:
    return load_graph(KG_PATH, CVT_PATH)


def load_fixture_questions() -> list[Question]:
    return load_questions(QUESTIONS_PATH)


def load_fixture_cassette(pipeline: str) -> Cassette:
    return Cassette.load(CASSETTE_PATHS[pipeline])
