import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from seeval.audio import Waveform, save_wav
from seeval.service import create_app
from seeval.service.model import (
    PRACTICE_TRIALS,
    TOTAL_PRESENTATIONS,
    parse_definition,
    participant_schedule,
)
from seeval.errors import ValidationError

FS = 16000


def make_definition(audio_root, seed=0):
    conditions = [f"c{i}" for i in range(1, 6)]
    panels = []
    scale_orders = {}
    for p in range(4):
        panel_id = f"panel{p}"
        panels.append({
            "panel_id": panel_id,
            "sample_ids": [f"s{p * 32 + i:03d}" for i in range(32)],
            "participant_slots": 8,
        })
        scale_orders[panel_id] = "SIG_FIRST" if p < 2 else "BAK_FIRST"
    practice = [
        {"trial_id": f"anchor{i:02d}", "wav_path": f"practice/anchor{i:02d}.wav"}
        for i in range(48)
    ]
    return {
        "conditions": conditions,
        "panels": panels,
        "scale_orders": scale_orders,
        "practice_block": practice,
        "audio_root": str(audio_root),
        "seed": seed,
    }


@pytest.fixture()
def client(tmp_path, audio_root):
    app = create_app(tmp_path / "state")
    return TestClient(app)


def _create(client, audio_root, seed=0):
    resp = client.post("/experiments", json=make_definition(audio_root, seed))
    assert resp.status_code == 201, resp.text
    return resp.json()["experiment_id"]


def _enroll(client, exp_id):
    resp = client.post(f"/experiments/{exp_id}/enroll")
    assert resp.status_code == 200, resp.text
    return resp.json()


def _step(client, token, vote=3):
    """Drive one presentation to completion; returns the presentation doc."""
    nxt = client.get(f"/participants/{token}/next").json()
    while nxt["type"] == "session_break":
        nxt = client.get(f"/participants/{token}/next").json()
    assert nxt["type"] == "presentation"
    ref = nxt["presentation_ref"]
    audio = client.get(nxt["audio_url"])
    assert audio.status_code == 200
    assert client.post(
        f"/participants/{token}/played", json={"presentation_ref": ref}
    ).status_code == 200
    assert client.post(
        f"/participants/{token}/vote", json={"presentation_ref": ref, "vote": vote}
    ).status_code == 200
    return nxt


# ---- definition validation ----

def test_parse_valid_definition(audio_root):
    defn = parse_definition(make_definition(audio_root))
    assert len(defn.panels) == 4
    assert len(defn.conditions) == 5


def test_three_panels_rejected(audio_root):
    doc = make_definition(audio_root)
    doc["panels"] = doc["panels"][:3]
    with pytest.raises(ValidationError) as exc:
        parse_definition(doc)
    assert any("panels" in v for v in exc.value.violations)


def test_duplicate_sample_rejected(audio_root):
    doc = make_definition(audio_root)
    doc["panels"][1]["sample_ids"][0] = doc["panels"][0]["sample_ids"][0]
    with pytest.raises(ValidationError) as exc:
        parse_definition(doc)
    assert any("appears in panels" in v for v in exc.value.violations)


def test_unbalanced_scale_orders_rejected(audio_root):
    doc = make_definition(audio_root)
    doc["scale_orders"] = {p["panel_id"]: "SIG_FIRST" for p in doc["panels"]}
    with pytest.raises(ValidationError) as exc:
        parse_definition(doc)
    assert any("counterbalanced" in v for v in exc.value.violations)


def test_validation_lists_all_violations(audio_root):
    doc = make_definition(audio_root)
    doc["conditions"] = doc["conditions"][:3]
    doc["practice_block"] = doc["practice_block"][:10]
    with pytest.raises(ValidationError) as exc:
        parse_definition(doc)
    assert len(exc.value.violations) >= 2


def test_create_experiment_http_validation(client, audio_root):
    doc = make_definition(audio_root)
    doc["panels"] = doc["panels"][:2]
    resp = client.post("/experiments", json=doc)
    assert resp.status_code == 422
    assert resp.json()["error"] == "ValidationError"


# ---- schedules ----

def test_schedule_arithmetic(audio_root):
    defn = parse_definition(make_definition(audio_root))
    trials = participant_schedule(defn, 0, 0)
    assert len(trials) == 208
    assert sum(1 for t in trials if t.practice) == 48
    assert sum(1 for t in trials if not t.practice) == 160
    # every (sample, condition) duplet exactly once
    duplets = {(t.sample_id, t.condition_id) for t in trials if not t.practice}
    assert len(duplets) == 160


def test_schedule_scale_orders_sig_first(audio_root):
    defn = parse_definition(make_definition(audio_root))
    trials = participant_schedule(defn, 0, 0)  # panel0 is SIG_FIRST
    assert trials[0].scales == ("SIG", "BAK", "OVRL")
    assert trials[23].scales == ("SIG", "BAK", "OVRL")
    assert trials[24].scales == ("BAK", "SIG", "OVRL")  # practice midpoint switch
    for t in trials:
        if not t.practice:
            expected = ("SIG", "BAK", "OVRL") if t.session_index in (2, 3) \
                else ("BAK", "SIG", "OVRL")
            assert t.scales == expected
        assert t.scales[2] == "OVRL"


def test_schedule_bak_first_panel(audio_root):
    defn = parse_definition(make_definition(audio_root))
    trials = participant_schedule(defn, 2, 0)  # panel2 is BAK_FIRST
    assert trials[0].scales == ("BAK", "SIG", "OVRL")
    test_trial = next(t for t in trials if t.session_index == 4)
    assert test_trial.scales == ("SIG", "BAK", "OVRL")


def test_schedule_deterministic_and_distinct(audio_root):
    defn = parse_definition(make_definition(audio_root))
    a1 = participant_schedule(defn, 0, 0)
    a2 = participant_schedule(defn, 0, 0)
    b = participant_schedule(defn, 0, 1)
    assert a1 == a2
    assert [t.sample_id for t in a1] != [t.sample_id for t in b]


def test_sliders_in_range(audio_root):
    defn = parse_definition(make_definition(audio_root))
    values = [
        v for t in participant_schedule(defn, 1, 3) for v in t.sliders
    ]
    assert set(values) <= {1, 2, 3, 4, 5}
    assert len(set(values)) == 5  # randomized, all positions occur


# ---- protocol flow ----

def test_enrollment_fills_slots(client, audio_root):
    exp_id = _create(client, audio_root)
    seen = []
    for _ in range(32):
        seen.append(_enroll(client, exp_id))
    panels = [e["panel_id"] for e in seen]
    assert panels.count("panel0") == 8
    orders = {e["panel_id"]: e["scale_order"] for e in seen}
    assert sorted(orders.values()).count("SIG_FIRST") == 2
    resp = client.post(f"/experiments/{exp_id}/enroll")
    assert resp.status_code == 422  # all slots taken


def test_first_presentation_is_practice(client, audio_root):
    exp_id = _create(client, audio_root)
    token = _enroll(client, exp_id)["participant_token"]
    nxt = client.get(f"/participants/{token}/next").json()
    assert nxt["type"] == "presentation"
    assert nxt["practice"] is True
    assert nxt["session_index"] == 1
    assert 1 <= nxt["slider_initial_position"] <= 5


def test_play_once_enforced(client, audio_root):
    exp_id = _create(client, audio_root)
    token = _enroll(client, exp_id)["participant_token"]
    nxt = client.get(f"/participants/{token}/next").json()
    ref = nxt["presentation_ref"]
    assert client.get(nxt["audio_url"]).status_code == 200
    second = client.get(nxt["audio_url"])
    assert second.status_code == 409
    assert second.json()["error"] == "AlreadyPlayed"
    # played twice also refused
    assert client.post(f"/participants/{token}/played",
                       json={"presentation_ref": ref}).status_code == 200
    again = client.post(f"/participants/{token}/played",
                        json={"presentation_ref": ref})
    assert again.status_code == 409


def test_vote_before_play_rejected(client, audio_root):
    exp_id = _create(client, audio_root)
    token = _enroll(client, exp_id)["participant_token"]
    nxt = client.get(f"/participants/{token}/next").json()
    ref = nxt["presentation_ref"]
    resp = client.post(f"/participants/{token}/vote",
                       json={"presentation_ref": ref, "vote": 3})
    assert resp.status_code == 409
    assert resp.json()["error"] == "NotPlayedYet"


def test_invalid_vote_rejected(client, audio_root):
    exp_id = _create(client, audio_root)
    token = _enroll(client, exp_id)["participant_token"]
    nxt = client.get(f"/participants/{token}/next").json()
    ref = nxt["presentation_ref"]
    client.get(nxt["audio_url"])
    client.post(f"/participants/{token}/played", json={"presentation_ref": ref})
    resp = client.post(f"/participants/{token}/vote",
                       json={"presentation_ref": ref, "vote": 6})
    assert resp.status_code == 422
    assert resp.json()["error"] == "InvalidVote"


def test_future_presentation_rejected(client, audio_root):
    exp_id = _create(client, audio_root)
    token = _enroll(client, exp_id)["participant_token"]
    app_store = client.app.state.store
    exp = app_store._token_index[token]
    future_ref = exp.presentation_ref(token, 5)
    resp = client.post(f"/participants/{token}/played",
                       json={"presentation_ref": future_ref})
    assert resp.status_code == 409
    assert resp.json()["error"] == "OutOfOrder"
    assert client.get(f"/audio/{future_ref}").status_code == 409


def test_replay_after_vote_rejected(client, audio_root):
    exp_id = _create(client, audio_root)
    token = _enroll(client, exp_id)["participant_token"]
    nxt = _step(client, token)
    resp = client.get(nxt["audio_url"])
    assert resp.status_code == 409
    vote_again = client.post(
        f"/participants/{token}/vote",
        json={"presentation_ref": nxt["presentation_ref"], "vote": 2},
    )
    assert vote_again.status_code == 409
    assert vote_again.json()["error"] == "DuplicateVote"


def test_votes_arrive_in_scale_order(client, audio_root):
    exp_id = _create(client, audio_root)
    token = _enroll(client, exp_id)["participant_token"]
    scales = [_step(client, token)["scale"] for _ in range(6)]
    assert scales[0:3] == ["SIG", "BAK", "OVRL"]
    assert scales[3:6] == ["SIG", "BAK", "OVRL"]


def test_session_break_after_practice(client, audio_root):
    exp_id = _create(client, audio_root)
    token = _enroll(client, exp_id)["participant_token"]
    for _ in range(PRACTICE_TRIALS * 3):
        _step(client, token)
    nxt = client.get(f"/participants/{token}/next").json()
    assert nxt["type"] == "session_break"
    assert nxt["next_session"] == 2
    after = client.get(f"/participants/{token}/next").json()
    assert after["type"] == "presentation"
    assert after["session_index"] == 2
    assert after["practice"] is False


def test_level_offset_flow(client, audio_root):
    exp_id = _create(client, audio_root)
    token = _enroll(client, exp_id)["participant_token"]
    assert client.post(f"/participants/{token}/level",
                       json={"offset_db": 0.7}).status_code == 200
    resp = client.post(f"/participants/{token}/level", json={"offset_db": -7})
    assert resp.status_code == 422
    assert resp.json()["error"] == "OutOfRange"
    _step(client, token, vote=4)
    export = client.get(f"/experiments/{exp_id}/export").json()
    assert export["votes"][0]["level_offset_db"] == pytest.approx(0.7)


def test_default_level_zero(client, audio_root):
    exp_id = _create(client, audio_root)
    token = _enroll(client, exp_id)["participant_token"]
    _step(client, token)
    export = client.get(f"/experiments/{exp_id}/export").json()
    assert export["votes"][0]["level_offset_db"] == 0.0


def test_slider_positions_match_schedule(client, audio_root):
    exp_id = _create(client, audio_root)
    enrollment = _enroll(client, exp_id)
    token = enrollment["participant_token"]
    store = client.app.state.store
    exp = store._token_index[token]
    p = exp.participants[token]
    expected = p.schedule[0].sliders
    for k in range(3):
        nxt = client.get(f"/participants/{token}/next").json()
        assert nxt["slider_initial_position"] == expected[k]
        _step(client, token)


def test_crash_restart_resumes(tmp_path, audio_root):
    state_dir = tmp_path / "state"
    app1 = create_app(state_dir)
    c1 = TestClient(app1)
    exp_id = _create(c1, audio_root)
    token = _enroll(c1, exp_id)["participant_token"]
    for i in range(7):
        _step(c1, token, vote=(i % 5) + 1)
    # fetch audio of presentation 7 but "crash" before voting
    nxt = c1.get(f"/participants/{token}/next").json()
    c1.get(nxt["audio_url"])

    app2 = create_app(state_dir)  # simulated restart: replay the log
    c2 = TestClient(app2)
    resumed = c2.get(f"/participants/{token}/next").json()
    assert resumed["type"] == "presentation"
    assert resumed["presentation_ref"] == nxt["presentation_ref"]
    assert resumed["audio_fetched"] is True  # fetch survived the crash
    assert c2.get(nxt["audio_url"]).status_code == 409  # still single-use
    assert c2.post(f"/participants/{token}/played",
                   json={"presentation_ref": nxt["presentation_ref"]}).status_code == 200
    assert c2.post(f"/participants/{token}/vote",
                   json={"presentation_ref": nxt["presentation_ref"], "vote": 5}
                   ).status_code == 200
    export = c2.get(f"/experiments/{exp_id}/export").json()
    assert len(export["votes"]) == 8


def test_torn_log_line_dropped(tmp_path, audio_root):
    state_dir = tmp_path / "state"
    app1 = create_app(state_dir)
    c1 = TestClient(app1)
    exp_id = _create(c1, audio_root)
    token = _enroll(c1, exp_id)["participant_token"]
    for _ in range(3):
        _step(c1, token)
    events = state_dir / "experiments" / exp_id / "events.jsonl"
    with open(events, "a") as fh:
        fh.write('{"type": "vote", "token": "' + token + '", "pos": 3, "rec')
    app2 = create_app(state_dir)
    c2 = TestClient(app2)
    export = c2.get(f"/experiments/{exp_id}/export").json()
    assert len(export["votes"]) == 3  # torn line lost, earlier votes intact


def test_export_mos_and_completeness(client, audio_root):
    exp_id = _create(client, audio_root)
    token = _enroll(client, exp_id)["participant_token"]
    for _ in range(9):
        _step(client, token, vote=4)
    export = client.get(f"/experiments/{exp_id}/export").json()
    assert len(export["votes"]) == 9
    assert all(v["practice"] for v in export["votes"])
    assert export["mos"] == []  # practice votes excluded from MOS
    comp = export["completeness"]
    assert comp["n_enrolled"] == 1
    assert comp["expected_votes_per_condition_scale"] == 1024
    info = comp["participants"][token]
    assert info["complete"] is False
    assert info["expected_per_scale"] == 160


def test_unknown_token_404(client):
    assert client.get("/participants/nope/next").status_code == 404
