"""Experiment definition, validation, and deterministic trial sequencing."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ValidationError

N_PANELS = 4
SAMPLES_PER_PANEL = 32
SLOTS_PER_PANEL = 8
N_CONDITIONS = 5
PRACTICE_TRIALS = 48
TEST_TRIALS = SAMPLES_PER_PANEL * N_CONDITIONS  # 160
TEST_SESSIONS = 4
TRIALS_PER_SESSION = TEST_TRIALS // TEST_SESSIONS  # 40
SCALES_PER_TRIAL = 3
TOTAL_TRIALS = PRACTICE_TRIALS + TEST_TRIALS
TOTAL_PRESENTATIONS = TOTAL_TRIALS * SCALES_PER_TRIAL

SIG_FIRST = "SIG_FIRST"
BAK_FIRST = "BAK_FIRST"

_ORDERS = {
    SIG_FIRST: (("SIG", "BAK", "OVRL"), ("BAK", "SIG", "OVRL")),
    BAK_FIRST: (("BAK", "SIG", "OVRL"), ("SIG", "BAK", "OVRL")),
}


@dataclass(frozen=True)
class PanelDef:
    panel_id: str
    sample_ids: tuple
    participant_slots: int
    scale_order: str


@dataclass(frozen=True)
class PracticeTrialDef:
    trial_id: str
    wav_path: str


@dataclass(frozen=True)
class ExperimentDefinition:
    conditions: tuple
    panels: tuple
    practice_block: tuple
    audio_root: str
    seed: int


@dataclass(frozen=True)
class Trial:
    index: int               # 0..207 across the whole experiment
    session_index: int       # 1 = practice, 2..5 = test sessions
    trial_in_session: int
    practice: bool
    sample_id: str
    condition_id: str
    audio_relpath: str
    scales: tuple            # presentation order of the three rating scales
    sliders: tuple           # randomized initial slider positions (1..5)


def parse_definition(doc: dict) -> ExperimentDefinition:
    """Validate a definition document; raises ValidationError listing every
    violated invariant."""
    violations = []

    conditions = tuple(doc.get("conditions", ()))
    if len(conditions) != N_CONDITIONS:
        violations.append(f"expected {N_CONDITIONS} conditions, got {len(conditions)}")
    if len(set(conditions)) != len(conditions):
        violations.append("condition ids must be unique")

    raw_panels = doc.get("panels", ())
    scale_orders = doc.get("scale_orders", {})
    if len(raw_panels) != N_PANELS:
        violations.append(f"expected {N_PANELS} panels, got {len(raw_panels)}")

    panels = []
    seen_samples = {}
    order_counts = {SIG_FIRST: 0, BAK_FIRST: 0}
    for p in raw_panels:
        panel_id = str(p.get("panel_id"))
        sample_ids = tuple(p.get("sample_ids", ()))
        slots = int(p.get("participant_slots", 0))
        if len(sample_ids) != SAMPLES_PER_PANEL:
            violations.append(
                f"panel {panel_id}: expected {SAMPLES_PER_PANEL} samples, "
                f"got {len(sample_ids)}"
            )
        if slots != SLOTS_PER_PANEL:
            violations.append(
                f"panel {panel_id}: expected {SLOTS_PER_PANEL} participant slots, "
                f"got {slots}"
            )
        for sid in sample_ids:
            if sid in seen_samples:
                violations.append(
                    f"sample {sid} appears in panels {seen_samples[sid]} and {panel_id}"
                )
            seen_samples[sid] = panel_id
        order = scale_orders.get(panel_id)
        if order not in _ORDERS:
            violations.append(f"panel {panel_id}: scale order must be one of {list(_ORDERS)}")
        else:
            order_counts[order] += 1
        panels.append(PanelDef(panel_id, sample_ids, slots, order or SIG_FIRST))

    if len(raw_panels) == N_PANELS and order_counts[SIG_FIRST] != N_PANELS // 2:
        violations.append(
            "scale orders must be counterbalanced: exactly 2 panels SIG-first "
            f"and 2 BAK-first, got {order_counts}"
        )

    practice = tuple(
        PracticeTrialDef(str(t.get("trial_id", i)), str(t.get("wav_path", "")))
        for i, t in enumerate(doc.get("practice_block", ()))
    )
    if len(practice) != PRACTICE_TRIALS:
        violations.append(
            f"practice block must hold {PRACTICE_TRIALS} trials, got {len(practice)}"
        )
    for t in practice:
        if not t.wav_path:
            violations.append(f"practice trial {t.trial_id}: missing wav_path")

    audio_root = doc.get("audio_root")
    if not audio_root:
        violations.append("audio_root is required")

    if violations:
        raise ValidationError(violations)
    return ExperimentDefinition(
        conditions=conditions,
        panels=tuple(panels),
        practice_block=practice,
        audio_root=str(audio_root),
        seed=int(doc.get("seed", 0)),
    )


def participant_schedule(defn: ExperimentDefinition, panel_idx: int,
                         slot_idx: int) -> list:
    """The participant's full trial sequence, derived deterministically.

    Practice trials run in definition order with the scale order switching
    halfway; the 160 test duplets are shuffled once per participant and
    split into 4 sessions of 40.
    """
    panel = defn.panels[panel_idx]
    rng = np.random.default_rng([defn.seed, panel_idx, slot_idx])

    duplets = [(sid, cond) for sid in panel.sample_ids for cond in defn.conditions]
    order = rng.permutation(len(duplets))
    shuffled = [duplets[i] for i in order]
    sliders = rng.integers(1, 6, size=TOTAL_TRIALS * SCALES_PER_TRIAL)

    early, late = _ORDERS[panel.scale_order]
    trials = []
    for i, practice_trial in enumerate(defn.practice_block):
        scales = early if i < PRACTICE_TRIALS // 2 else late
        trials.append(Trial(
            index=i,
            session_index=1,
            trial_in_session=i,
            practice=True,
            sample_id=practice_trial.trial_id,
            condition_id="practice",
            audio_relpath=practice_trial.wav_path,
            scales=scales,
            sliders=tuple(int(v) for v in sliders[i * 3:i * 3 + 3]),
        ))
    for j, (sample_id, condition_id) in enumerate(shuffled):
        session = j // TRIALS_PER_SESSION  # 0..3
        scales = early if session < TEST_SESSIONS // 2 else late
        index = PRACTICE_TRIALS + j
        trials.append(Trial(
            index=index,
            session_index=2 + session,
            trial_in_session=j % TRIALS_PER_SESSION,
            practice=False,
            sample_id=sample_id,
            condition_id=condition_id,
            audio_relpath=str(Path(condition_id) / f"{sample_id}.wav"),
            scales=scales,
            sliders=tuple(int(v) for v in sliders[index * 3:index * 3 + 3]),
        ))
    return trials


def session_start_positions() -> list:
    """Presentation positions at which sessions 2..5 begin."""
    starts = []
    pos = PRACTICE_TRIALS * SCALES_PER_TRIAL
    for _ in range(TEST_SESSIONS):
        starts.append(pos)
        pos += TRIALS_PER_SESSION * SCALES_PER_TRIAL
    return starts
