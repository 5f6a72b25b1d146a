"""Scripted model behaviour behind the bundled cassettes.

Each fixture question has a script saying how a careful model (for the
mindful pipeline) and a surface-matching model (for the baseline) would
answer every task. Running both pipelines against these scripts through a
recording backend regenerates ``mindful_cassette.json`` and
``baseline_cassette.json``::

    python -m mindful_kgqa.fixtures.authoring
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..oracle import Cassette, RecordingBackend, ScriptedBackend, TaskKind


@dataclass
class MindfulHop:
    rank: list[tuple[str, float, str]]
    decision: str
    select: list[str]


@dataclass
class BaselineHop:
    relation: str
    decision: str
    select: list[str] = field(default_factory=list)
    constraints: list[str] = field(default_factory=list)


@dataclass
class Script:
    entities: list[str]
    tokens: list[str]
    intent: str
    context: list[str]
    constraints: dict[str, Any]
    mindful: dict[str, MindfulHop]
    baseline: dict[str, BaselineHop]


SCRIPTS: dict[str, Script] = {
    "Who is Niall Ferguson's wife?": Script(
        entities=["Niall Ferguson"],
        tokens=["wife"],
        intent="identify spouse",
        context=["personal relationships", "marital status", "current spouse"],
        constraints={
            "temporal": "current",
            "aggregation": "none",
            "other": ["names of spouses", "marriage start and end times", "location of the ceremony"],
        },
        mindful={
            "Niall Ferguson": MindfulHop(
                rank=[
                    ("people.person.spouse_s", 0.95, "spouse records answer the intent directly"),
                    ("people.person.wife", 0.7, "wife relation"),
                    ("people.marriage.spouse", 0.6, "spouse inside marriage records"),
                ],
                decision="answer",
                select=["ayaan_hirsi_ali"],
            ),
        },
        baseline={
            "Niall Ferguson": BaselineHop("people.person.spouse_s", "answer", ["sue_douglas"]),
        },
    ),
    "What is the state flower of Arizona?": Script(
        entities=["Arizona"],
        tokens=["state", "flower"],
        intent="identify state flower",
        context=["botany", "state symbols", "Arizona's official flora"],
        constraints={"aggregation": "none"},
        mindful={
            "Arizona": MindfulHop(
                rank=[
                    ("government.governmental_jurisdiction.official_symbols", 0.92,
                     "official symbols include the state flower"),
                    ("base.locations.states_and_provinces.country", 0.08, "geographic only"),
                ],
                decision="answer",
                select=["saguaro_blossom"],
            ),
        },
        baseline={
            "Arizona": BaselineHop("base.locations.states_and_provinces.country", "unknown"),
        },
    ),
    "Where did Andy Murray start playing tennis?": Script(
        entities=["Andy Murray"],
        tokens=["start", "playing", "tennis"],
        intent="identify place where he began playing tennis",
        context=["tennis career", "childhood", "places lived"],
        constraints={"temporal": "childhood", "aggregation": "none"},
        mindful={
            "Andy Murray": MindfulHop(
                rank=[
                    ("people.person.places_lived", 0.85, "where he grew up and trained"),
                    ("people.place_lived.location", 0.6, "location of residence records"),
                    ("people.person.place_of_birth", 0.3, "birth is not where he started playing"),
                ],
                decision="answer",
                select=["dunblane"],
            ),
        },
        baseline={
            "Andy Murray": BaselineHop("people.person.place_of_birth", "answer", ["glasgow"]),
        },
    ),
    "What country was Justin Bieber born in?": Script(
        entities=["Justin Bieber"],
        tokens=["country", "born"],
        intent="identify country of birth",
        context=["birthplace", "national geography", "country-level location"],
        constraints={"geographic": "country level", "aggregation": "none"},
        mindful={
            "Justin Bieber": MindfulHop(
                rank=[("people.person.place_of_birth", 0.9, "birthplace, then its country")],
                decision="continue",
                select=["london_ontario"],
            ),
            "London": MindfulHop(
                rank=[("location.location.containedby", 1.0, "country containing the city")],
                decision="answer",
                select=["canada"],
            ),
        },
        baseline={
            "Justin Bieber": BaselineHop("people.person.place_of_birth", "answer", ["london_ontario"]),
        },
    ),
    "What language do people in Serbia speak?": Script(
        entities=["Serbia"],
        tokens=["language", "speak"],
        intent="identify main language",
        context=["national language", "official language", "majority population"],
        constraints={"aggregation": "none", "other": ["main national language"]},
        mindful={
            "Serbia": MindfulHop(
                rank=[("location.country.languages_spoken", 0.95, "languages spoken in the country")],
                decision="answer",
                select=["serbian_language"],
            ),
        },
        baseline={
            "Serbia": BaselineHop("location.country.languages_spoken", "answer", ["hungarian_language"]),
        },
    ),
    "What was Jackie Robinson's first team?": Script(
        entities=["Jackie Robinson"],
        tokens=["first", "team"],
        intent="identify first team",
        context=["baseball career", "team history", "earliest team"],
        constraints={"temporal": "earliest", "aggregation": "first"},
        mindful={
            "Jackie Robinson": MindfulHop(
                rank=[
                    ("sports.pro_athlete.teams", 0.95, "roster spells with start years"),
                    ("sports.sports_team_roster.team", 0.7, "team inside roster records"),
                ],
                decision="answer",
                select=["kansas_city_monarchs"],
            ),
        },
        baseline={
            "Jackie Robinson": BaselineHop("sports.pro_athlete.teams", "answer", ["brooklyn_dodgers"], ["first"]),
        },
    ),
    "What year was George W. Bush elected?": Script(
        entities=["George W. Bush"],
        tokens=["year", "elected"],
        intent="identify election years",
        context=["presidential elections", "political career", "every election won"],
        constraints={"aggregation": "all"},
        mindful={
            "George W. Bush": MindfulHop(
                rank=[("government.politician.election_years", 0.95, "years he won elections")],
                decision="answer",
                select=["2000", "2004"],
            ),
        },
        baseline={
            "George W. Bush": BaselineHop("government.politician.election_years", "answer", ["2000"]),
        },
    ),
    "What songs did Justin Bieber write?": Script(
        entities=["Justin Bieber"],
        tokens=["songs", "write"],
        intent="list songs written",
        context=["music", "songwriting", "compositions"],
        constraints={"aggregation": "all"},
        mindful={
            "Justin Bieber": MindfulHop(
                rank=[("music.composer.compositions", 0.95, "songs he composed")],
                decision="answer",
                select=["baby_song", "one_time", "never_say_never"],
            ),
        },
        baseline={
            "Justin Bieber": BaselineHop("music.composer.compositions", "answer", ["baby_song"]),
        },
    ),
    "What genres are the films written by the director of Harbor Lights?": Script(
        entities=["Harbor Lights"],
        tokens=["genres", "films", "written", "director"],
        intent="identify genres of films written by the director",
        context=["film direction", "screenwriting", "film genres"],
        constraints={"aggregation": "all"},
        mindful={
            "Harbor Lights": MindfulHop(
                rank=[
                    ("movie.directed_by", 0.9, "find the director first"),
                    ("movie.written_by", 0.3, "writer of this film, not the director"),
                ],
                decision="continue",
                select=["elena_voss"],
            ),
            "Elena Voss": MindfulHop(
                rank=[("person.wrote", 0.9, "films written by the director")],
                decision="continue",
                select=["glass_orchard", "quiet_meridian"],
            ),
            "Glass Orchard|Quiet Meridian": MindfulHop(
                rank=[("movie.has_genre", 0.95, "genres of those films")],
                decision="answer",
                select=["drama", "comedy"],
            ),
        },
        baseline={
            "Harbor Lights": BaselineHop("movie.directed_by", "continue", ["elena_voss"]),
            "Elena Voss": BaselineHop("person.wrote", "continue", ["glass_orchard", "quiet_meridian"]),
            "Glass Orchard|Quiet Meridian": BaselineHop("movie.has_genre", "continue"),
        },
    ),
    "Where was Andy Murray born?": Script(
        entities=["Andy Murray"],
        tokens=["born"],
        intent="identify birthplace",
        context=["biography", "place of birth"],
        constraints={"aggregation": "none"},
        mindful={
            "Andy Murray": MindfulHop(
                rank=[("people.person.place_of_birth", 0.95, "birthplace")],
                decision="answer",
                select=["glasgow"],
            ),
        },
        baseline={
            "Andy Murray": BaselineHop("people.person.place_of_birth", "answer", ["glasgow"]),
        },
    ),
    "Who directed Harbor Lights?": Script(
        entities=["Harbor Lights"],
        tokens=["directed"],
        intent="identify director",
        context=["film", "direction"],
        constraints={"aggregation": "none"},
        mindful={
            "Harbor Lights": MindfulHop(
                rank=[("movie.directed_by", 0.95, "director of the film")],
                decision="answer",
                select=["elena_voss"],
            ),
        },
        baseline={
            "Harbor Lights": BaselineHop("movie.directed_by", "answer", ["elena_voss"]),
        },
    ),
    "What is the capital of Serbia?": Script(
        entities=["Serbia"],
        tokens=["capital"],
        intent="identify capital city",
        context=["geography", "seat of government"],
        constraints={"aggregation": "none"},
        mindful={
            "Serbia": MindfulHop(
                rank=[("location.country.capital", 0.95, "capital of the country")],
                decision="answer",
                select=["belgrade"],
            ),
        },
        baseline={
            "Serbia": BaselineHop("location.country.capital", "answer", ["belgrade"]),
        },
    ),
}


def _block(*lines: str) -> str:
    return "```\n" + "\n".join(lines) + "\n```"


def _constraint_lines(script: Script) -> list[str]:
    c = script.constraints
    return [
        f"temporal: {c.get('temporal', '')}",
        f"geographic: {c.get('geographic', '')}",
        f"aggregation: {c.get('aggregation', 'none')}",
        f"other: {'; '.join(c.get('other', []))}",
    ]


def _frontier_key(inputs: dict[str, Any]) -> str:
    return "|".join(inputs.get("frontier", []))


def respond(kind: TaskKind | str, inputs: dict[str, Any]) -> str:
    """Scripted model output for one task; raises ``KeyError`` for unscripted input."""
    kind = TaskKind(kind)
    script = SCRIPTS[inputs["question"]]
    if kind is TaskKind.IDENTIFY_ELEMENTS:
        lines = [f"entities: {'; '.join(script.entities)}", f"tokens: {'; '.join(script.tokens)}"]
        if inputs.get("fused"):
            lines += [f"intent: {script.intent}", f"context: {'; '.join(script.context)}",
                      *_constraint_lines(script)]
        return "The question is about the following.\n" + _block(*lines)
    if kind is TaskKind.IDENTIFY_INTENT:
        return "Looking at the key terms:\n" + _block(f"intent: {script.intent}")
    if kind is TaskKind.IDENTIFY_CONTEXT:
        return "Context and constraints:\n" + _block(
            f"context: {'; '.join(script.context)}", *_constraint_lines(script))
    if kind is TaskKind.RANK_RELATIONS:
        hop = script.mindful[_frontier_key(inputs)]
        return "Ranking by intent and context:\n" + _block(
            *(f"relation: {r} | {s} | {why}" for r, s, why in hop.rank)
        )
    if kind is TaskKind.ALIGN_CONSTRAINTS:
        hop = script.mindful[_frontier_key(inputs)]
        return _block(
            f"decision: {hop.decision}",
            f"select: {'; '.join(hop.select)}",
            "rationale: candidates checked against the constraints",
        )
    if kind is TaskKind.VALIDATE_ANSWER:
        return _block("verdict: accept", "reason: the answer matches the intent and context")
    if kind is TaskKind.BASELINE_SELECT:
        return _block(f"relation: {script.baseline[_frontier_key(inputs)].relation}")
    if kind is TaskKind.BASELINE_ANSWER:
        frontier = _baseline_frontier(script, inputs["relation"])
        hop = script.baseline[frontier]
        lines = [f"decision: {hop.decision}"]
        if hop.select:
            lines.append(f"select: {'; '.join(hop.select)}")
        if hop.constraints:
            lines.append(f"constraints: {'; '.join(hop.constraints)}")
        return _block(*lines)
    raise KeyError(kind)


def _baseline_frontier(script: Script, relation: str) -> str:
    # BaselineAnswer payloads carry the relation, not the frontier.
    for key, hop in script.baseline.items():
        if hop.relation == relation:
            return key
    raise KeyError(relation)


def scripted_backend() -> ScriptedBackend:
    return ScriptedBackend(lambda task: respond(task.kind, task.inputs))


def author_cassettes(out_dir: str | Path | None = None) -> dict[str, Cassette]:
    """Run both pipelines over the fixture pack and return (and optionally save) the cassettes."""
    from ..pipeline import PIPELINES, PipelineConfig
    from . import load_fixture_graph, load_fixture_questions

    kg = load_fixture_graph()
    questions = load_fixture_questions()
    config = PipelineConfig()
    cassettes = {}
    for name, run in PIPELINES.items():
        recorder = RecordingBackend(scripted_backend())
        for q in questions:
            run(kg, q, config, recorder)
        cassettes[name] = recorder.cassette
        if out_dir is not None:
            recorder.cassette.save(Path(out_dir) / f"{name}_cassette.json")
    return cassettes


if __name__ == "__main__":
    from . import DATA_DIR

    for name, cassette in author_cassettes(DATA_DIR).items():
        print(f"{name}: {len(cassette)} entries")
