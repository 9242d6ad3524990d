"""Scripted multi-user runs: parsing, execution through HTTP, determinism."""

import pytest

from lexhive.cli import packaged_study_script
from lexhive.core.errors import ParseError, ScriptError
from lexhive.scenario import load_script, parse_script, run_scenario

BASE = {
    "users": ["Ada", "Ben"],
    "actions": [
        {
            "at": "2025-06-02T09:00:00Z",
            "user": "Ada",
            "do": "create_term",
            "label": "phonon",
            "tags": ["physics"],
        },
        {
            "at": "2025-06-02T09:05:00Z",
            "user": "Ada",
            "do": "add_definition",
            "term": "phonon",
            "body": "a quantum of lattice vibration",
        },
        {
            "at": "2025-06-02T09:10:00Z",
            "user": "Ben",
            "do": "add_example",
            "term": "phonon",
            "body": "phonon scattering limits thermal conductivity",
        },
        {
            "at": "2025-06-02T09:15:00Z",
            "user": "Ben",
            "do": "generate_ai",
            "term": "phonon",
        },
        {
            "at": "2025-06-02T09:20:00Z",
            "user": "Ada",
            "do": "comment",
            "term": "phonon",
            "target": "ai",
            "body": "mention heat transport",
            "disposition": "feedback",
        },
        {
            "at": "2025-06-02T09:25:00Z",
            "user": "Ben",
            "do": "refine_ai",
            "term": "phonon",
        },
        {
            "at": "2025-06-02T09:30:00Z",
            "user": "Ada",
            "do": "vote",
            "term": "phonon",
            "target": "ai",
            "value": 1,
        },
        {
            "at": "2025-06-02T09:35:00Z",
            "user": "Ben",
            "do": "vote",
            "term": "phonon",
            "target": "ai",
            "value": 1,
        },
    ],
}


def _with(**overrides) -> dict:
    data = {key: list(value) for key, value in BASE.items()}
    data.update(overrides)
    return data


# -- parsing -------------------------------------------------------------


def test_parse_round_trip():
    script = parse_script(BASE)
    assert script.users == ("Ada", "Ben")
    assert script.backend_failures == ()
    assert len(script.actions) == 8
    assert script.actions[0].do == "create_term"
    assert script.actions[0].args["label"] == "phonon"


def test_parse_accepts_user_mappings():
    script = parse_script(_with(users=[{"name": "Ada"}, {"name": "Ben"}]))
    assert script.users == ("Ada", "Ben")


@pytest.mark.parametrize(
    "mangle",
    [
        lambda d: [],  # not a mapping
        lambda d: _with(users=[]),
        lambda d: _with(users=[""]),
        lambda d: _with(actions=[]),
        lambda d: _with(actions=[{"user": "Ada", "do": "create_term"}]),  # no at
        lambda d: _with(actions=[dict(d["actions"][0], at="yesterday")]),
        lambda d: _with(actions=[dict(d["actions"][0], user="Zoe")]),
        lambda d: _with(actions=[dict(d["actions"][0], do="dance")]),
        lambda d: _with(actions=[d["actions"][1], d["actions"][0]]),  # time reversed
    ],
)
def test_parse_rejects_bad_scripts(mangle):
    with pytest.raises(ParseError):
        parse_script(mangle(BASE))


def test_load_script_rejects_garbage(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("users: [unclosed", encoding="utf-8")
    with pytest.raises(ParseError):
        load_script(path)


# -- execution -----------------------------------------------------------


def test_run_counts_everything():
    run = run_scenario(parse_script(BASE))
    assert run.summary == {
        "terms": 1,
        "human_definitions": 1,
        "ai_definitions": 1,
        "generation_failures": 0,
        "comments": 1,
        "votes": 2,
        "terms_with_multiple_human_definitions": 0,
    }
    assert run.term_ids == {"phonon": "t-0001"}


def test_identical_scripts_produce_identical_logs():
    first = run_scenario(parse_script(BASE))
    second = run_scenario(parse_script(BASE))
    assert first.log_jsonl
    assert first.log_jsonl == second.log_jsonl
    assert first.summary == second.summary


def test_scheduled_failure_is_counted_not_fatal():
    script = parse_script(_with(backend_failures=["phonon"], actions=BASE["actions"][:4]))
    run = run_scenario(script)
    assert run.summary["ai_definitions"] == 0
    assert run.summary["generation_failures"] == 1


def test_action_against_unknown_term_fails():
    actions = [dict(BASE["actions"][1], term="ghost")]
    first = dict(BASE["actions"][0])
    with pytest.raises(ScriptError):
        run_scenario(parse_script(_with(actions=[first, actions[0]])))


def test_vote_target_needs_an_ai_definition():
    actions = list(BASE["actions"][:2]) + [
        dict(BASE["actions"][6], at="2025-06-02T09:06:00Z")
    ]
    with pytest.raises(ScriptError):
        run_scenario(parse_script(_with(actions=actions)))


def test_missing_human_definition_index_fails():
    actions = list(BASE["actions"][:2]) + [
        {
            "at": "2025-06-02T09:06:00Z",
            "user": "Ben",
            "do": "vote",
            "term": "phonon",
            "target": "human:2",
            "value": 1,
        }
    ]
    with pytest.raises(ScriptError):
        run_scenario(parse_script(_with(actions=actions)))


def test_rejected_write_surfaces_as_script_error():
    actions = list(BASE["actions"][:1]) + [
        dict(BASE["actions"][1], body="   ", at="2025-06-02T09:01:00Z")
    ]
    with pytest.raises(ScriptError) as excinfo:
        run_scenario(parse_script(_with(actions=actions)))
    assert "422" in str(excinfo.value)


# -- the packaged study script -------------------------------------------


def test_packaged_study_script_runs_to_its_summary():
    script = load_script(packaged_study_script())
    assert len(script.users) == 6
    run = run_scenario(script)
    assert run.summary["terms"] == 20
    assert run.summary["ai_definitions"] == 19
    assert run.summary["generation_failures"] == 1
    assert run.summary["terms_with_multiple_human_definitions"] >= 1
