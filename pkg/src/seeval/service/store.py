"""Durable experiment state: append-only JSONL event log with replay.

Every state change (enrollment, audio fetch, playback confirmation, vote,
level change) is one fsynced JSONL line under
``<data_dir>/experiments/<id>/events.jsonl``. Recovery replays the log, so
a crash between two votes loses at most the in-flight vote; a torn final
line is discarded.
"""

import hashlib
import json
import os
import time
import uuid
from pathlib import Path

from ..errors import (
    AlreadyPlayed,
    DuplicateVote,
    InvalidVote,
    NotEnrolled,
    NotPlayedYet,
    OutOfOrder,
    OutOfRange,
    SeevalError,
    ValidationError,
)
from . import model
from .model import (
    SCALES_PER_TRIAL,
    TOTAL_PRESENTATIONS,
    parse_definition,
    participant_schedule,
    session_start_positions,
)

_LEVEL_MIN = -6.0
_LEVEL_MAX = 6.0


class _Participant:
    def __init__(self, token, panel_idx, slot_idx, schedule):
        self.token = token
        self.panel_idx = panel_idx
        self.slot_idx = slot_idx
        self.schedule = schedule
        self.votes_count = 0
        self.fetched_current = False
        self.played_current = False
        self.level_offset_db = 0.0
        self.served_breaks = set()  # advisory, not persisted

    def trial_and_scale(self, pos):
        trial = self.schedule[pos // SCALES_PER_TRIAL]
        k = pos % SCALES_PER_TRIAL
        return trial, trial.scales[k], trial.sliders[k], k


class _Experiment:
    def __init__(self, experiment_id, defn, directory):
        self.experiment_id = experiment_id
        self.defn = defn
        self.directory = Path(directory)
        self.participants = {}
        self.enrolled_order = []
        self.votes = []
        secret = f"{experiment_id}:{defn.seed}".encode()
        self.secret = hashlib.sha256(secret).hexdigest()

    def next_free_slot(self):
        taken = {(p.panel_idx, p.slot_idx) for p in self.participants.values()}
        for panel_idx, panel in enumerate(self.defn.panels):
            for slot_idx in range(panel.participant_slots):
                if (panel_idx, slot_idx) not in taken:
                    return panel_idx, slot_idx
        raise ValidationError(["all participant slots are taken"])

    def presentation_ref(self, token, pos):
        sig = hashlib.sha256(
            f"{self.secret}:{token}:{pos}".encode()
        ).hexdigest()[:16]
        return f"{token}.{pos}.{sig}"

    def parse_ref(self, ref):
        try:
            token, pos_text, sig = ref.rsplit(".", 2)
            pos = int(pos_text)
        except ValueError:
            raise OutOfOrder(f"malformed presentation ref {ref!r}") from None
        if self.presentation_ref(token, pos) != ref:
            raise OutOfOrder("presentation ref signature mismatch")
        return token, pos


class ExperimentStore:
    """All experiments under one data directory. Not thread-safe by itself;
    the HTTP layer serializes access."""

    def __init__(self, data_dir):
        self.data_dir = Path(data_dir)
        self.experiments_dir = self.data_dir / "experiments"
        self.experiments_dir.mkdir(parents=True, exist_ok=True)
        self.experiments = {}
        self._token_index = {}
        for exp_dir in sorted(self.experiments_dir.iterdir()):
            if (exp_dir / "definition.json").exists():
                self._load_experiment(exp_dir)

    # ---- persistence ----

    def _load_experiment(self, exp_dir):
        with open(exp_dir / "definition.json", encoding="utf-8") as fh:
            doc = json.load(fh)
        exp = _Experiment(exp_dir.name, parse_definition(doc), exp_dir)
        events_path = exp_dir / "events.jsonl"
        if events_path.exists():
            with open(events_path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        event = json.loads(line)
                    except json.JSONDecodeError:
                        break  # torn tail from a crash: drop it
                    self._apply(exp, event)
        self.experiments[exp.experiment_id] = exp

    def _append(self, exp, event):
        path = exp.directory / "events.jsonl"
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def _apply(self, exp, event):
        kind = event["type"]
        if kind == "enroll":
            schedule = participant_schedule(exp.defn, event["panel_idx"], event["slot_idx"])
            participant = _Participant(
                event["token"], event["panel_idx"], event["slot_idx"], schedule
            )
            exp.participants[event["token"]] = participant
            exp.enrolled_order.append(event["token"])
            self._token_index[event["token"]] = exp
        elif kind == "fetch":
            p = exp.participants[event["token"]]
            if event["pos"] == p.votes_count:
                p.fetched_current = True
        elif kind == "played":
            p = exp.participants[event["token"]]
            if event["pos"] == p.votes_count:
                p.played_current = True
        elif kind == "vote":
            p = exp.participants[event["token"]]
            exp.votes.append(event["record"])
            p.votes_count += 1
            p.fetched_current = False
            p.played_current = False
        elif kind == "level":
            exp.participants[event["token"]].level_offset_db = event["offset_db"]

    def _record(self, exp, event):
        self._append(exp, event)
        self._apply(exp, event)

    # ---- operations ----

    def create_experiment(self, doc: dict) -> str:
        defn = parse_definition(doc)  # raises ValidationError
        experiment_id = uuid.uuid4().hex[:12]
        exp_dir = self.experiments_dir / experiment_id
        exp_dir.mkdir(parents=True)
        with open(exp_dir / "definition.json", "w", encoding="utf-8") as fh:
            json.dump(doc, fh, sort_keys=True, indent=2)
        self.experiments[experiment_id] = _Experiment(experiment_id, defn, exp_dir)
        return experiment_id

    def _experiment(self, experiment_id) -> _Experiment:
        if experiment_id not in self.experiments:
            raise NotEnrolled(f"unknown experiment {experiment_id}")
        return self.experiments[experiment_id]

    def _participant(self, token):
        exp = self._token_index.get(token)
        if exp is None:
            raise NotEnrolled(f"unknown participant token {token}")
        return exp, exp.participants[token]

    def enroll(self, experiment_id) -> dict:
        exp = self._experiment(experiment_id)
        panel_idx, slot_idx = exp.next_free_slot()
        token = uuid.uuid4().hex
        self._record(exp, {
            "type": "enroll",
            "token": token,
            "panel_idx": panel_idx,
            "slot_idx": slot_idx,
            "ts": time.time(),
        })
        panel = exp.defn.panels[panel_idx]
        return {
            "participant_token": token,
            "panel_id": panel.panel_id,
            "slot_index": slot_idx,
            "scale_order": panel.scale_order,
        }

    def next_presentation(self, token) -> dict:
        exp, p = self._participant(token)
        pos = p.votes_count
        if pos >= TOTAL_PRESENTATIONS:
            return {"type": "done", "votes": pos}
        starts = session_start_positions()
        if pos in starts and not p.fetched_current:
            session = 2 + starts.index(pos)
            if session not in p.served_breaks:
                p.served_breaks.add(session)
                return {
                    "type": "session_break",
                    "completed_session": session - 1,
                    "next_session": session,
                }
        trial, scale, slider, k = p.trial_and_scale(pos)
        ref = exp.presentation_ref(token, pos)
        return {
            "type": "presentation",
            "presentation_ref": ref,
            "audio_url": f"/audio/{ref}",
            "scale": scale,
            "slider_initial_position": slider,
            "session_index": trial.session_index,
            "trial_in_session": trial.trial_in_session,
            "presentation_index": k,
            "practice": trial.practice,
            "audio_fetched": p.fetched_current,
            "played": p.played_current,
        }

    def fetch_audio(self, ref) -> Path:
        """Resolve a presentation ref to its WAV path, enforcing single use."""
        token_guess = ref.split(".", 1)[0]
        exp = self._token_index.get(token_guess)
        if exp is None:
            raise NotEnrolled(f"unknown participant in ref {ref!r}")
        token, pos = exp.parse_ref(ref)
        p = exp.participants[token]
        if pos < p.votes_count:
            raise AlreadyPlayed("presentation already completed")
        if pos > p.votes_count:
            raise OutOfOrder("presentation is not current yet")
        if p.fetched_current:
            raise AlreadyPlayed("audio for this presentation was already served")
        trial, _, _, _ = p.trial_and_scale(pos)
        path = Path(exp.defn.audio_root) / trial.audio_relpath
        if not path.exists():
            raise SeevalError(f"audio file missing: {path}")
        self._record(exp, {"type": "fetch", "token": token, "pos": pos})
        return path

    def mark_played(self, token, ref) -> dict:
        exp, p = self._participant(token)
        ref_token, pos = exp.parse_ref(ref)
        if ref_token != token:
            raise OutOfOrder("presentation ref belongs to another participant")
        if pos < p.votes_count:
            raise AlreadyPlayed("presentation already completed")
        if pos > p.votes_count:
            raise OutOfOrder("presentation is not current yet")
        if p.played_current:
            raise AlreadyPlayed("playback already confirmed")
        if not p.fetched_current:
            raise OutOfOrder("audio has not been served for this presentation")
        self._record(exp, {"type": "played", "token": token, "pos": pos})
        return {"status": "ok"}

    def submit_vote(self, token, ref, vote) -> dict:
        exp, p = self._participant(token)
        ref_token, pos = exp.parse_ref(ref)
        if ref_token != token:
            raise OutOfOrder("presentation ref belongs to another participant")
        if not isinstance(vote, int) or isinstance(vote, bool) or not 1 <= vote <= 5:
            raise InvalidVote(f"vote must be an integer 1..5, got {vote!r}")
        if pos < p.votes_count:
            raise DuplicateVote("this presentation was already voted on")
        if pos > p.votes_count:
            raise OutOfOrder("presentation is not current yet")
        if not p.played_current:
            raise NotPlayedYet("playback must complete before voting")
        trial, scale, slider, k = p.trial_and_scale(pos)
        panel = exp.defn.panels[p.panel_idx]
        record = {
            "participant_id": token,
            "panel_id": panel.panel_id,
            "session_index": trial.session_index,
            "trial_index": trial.index,
            "presentation_index": k,
            "sample_id": trial.sample_id,
            "condition_id": trial.condition_id,
            "scale": scale,
            "vote": vote,
            "slider_initial_position": slider,
            "level_offset_db": p.level_offset_db,
            "practice": trial.practice,
            "timestamp": time.time(),
        }
        self._record(exp, {"type": "vote", "token": token, "pos": pos, "record": record})
        return {
            "status": "ok",
            "votes_completed": p.votes_count,
            "done": p.votes_count >= TOTAL_PRESENTATIONS,
        }

    def set_level(self, token, offset_db) -> dict:
        exp, p = self._participant(token)
        if not (_LEVEL_MIN <= offset_db <= _LEVEL_MAX):
            raise OutOfRange(
                f"level offset {offset_db} outside [{_LEVEL_MIN}, {_LEVEL_MAX}] dB"
            )
        self._record(exp, {"type": "level", "token": token, "offset_db": float(offset_db)})
        return {"status": "ok", "level_offset_db": float(offset_db)}

    def export(self, experiment_id) -> dict:
        exp = self._experiment(experiment_id)
        votes = list(exp.votes)
        mos_cells = {}
        for v in votes:
            if v["practice"]:
                continue
            key = (v["sample_id"], v["condition_id"], v["scale"])
            mos_cells.setdefault(key, []).append(v["vote"])
        mos_table = [
            {
                "sample_id": sample_id,
                "condition_id": condition_id,
                "scale": scale,
                "mos": sum(vs) / len(vs),
                "n_votes": len(vs),
            }
            for (sample_id, condition_id, scale), vs in sorted(mos_cells.items())
        ]

        per_scale_expected = model.TEST_TRIALS
        participants = {}
        for token in exp.enrolled_order:
            p = exp.participants[token]
            counts = {s: 0 for s in ("SIG", "BAK", "OVRL")}
            for v in votes:
                if v["participant_id"] == token and not v["practice"]:
                    counts[v["scale"]] += 1
            participants[token] = {
                "panel_id": exp.defn.panels[p.panel_idx].panel_id,
                "test_votes_per_scale": counts,
                "expected_per_scale": per_scale_expected,
                "complete": all(c == per_scale_expected for c in counts.values()),
            }
        return {
            "experiment_id": experiment_id,
            "votes": votes,
            "mos": mos_table,
            "completeness": {
                "participants": participants,
                "n_enrolled": len(exp.participants),
                "expected_votes_per_condition_scale":
                    model.SAMPLES_PER_PANEL * model.N_PANELS * model.SLOTS_PER_PANEL,
            },
        }
