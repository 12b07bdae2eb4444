import json

import numpy as np
import pytest

from seeval.audio import Waveform, save_wav
from synth import colored_noise, exp_decay_rir, synth_utterance

FS = 16000


@pytest.fixture(scope="session")
def audio_root(tmp_path_factory):
    """Stimulus tree for listening-test experiments: 5 conditions x 128
    samples plus 48 practice anchors (tiny identical blips)."""
    root = tmp_path_factory.mktemp("lt_audio")
    blip = Waveform(np.sin(np.arange(800) * 0.2) * 0.5, FS)
    (root / "practice").mkdir()
    for i in range(48):
        save_wav(blip, root / "practice" / f"anchor{i:02d}.wav", "16")
    for c in range(1, 6):
        (root / f"c{c}").mkdir()
        for s in range(128):
            save_wav(blip, root / f"c{c}" / f"s{s:03d}.wav", "16")
    return root


@pytest.fixture(scope="session")
def desk_corpus(tmp_path_factory):
    """Small self-generated corpus: RIR catalog, speech, noise, patterns."""
    base = tmp_path_factory.mktemp("corpus")
    rng = np.random.default_rng(20240501)

    # RIRs: 2 homes x 2 rooms x 1 array x 4 positions x 2 channels
    rir_dir = base / "rirs"
    rir_dir.mkdir()
    catalog = []
    for home in ("h1", "h2"):
        for room in ("living", "kitchen"):
            for array in ("a1",):
                for pos in ("p1", "p2", "p3", "p4"):
                    rt60 = rng.uniform(0.12, 0.22)
                    for chan in ("c1", "c2"):
                        h = exp_decay_rir(rt60, FS, rng, duration_factor=1.2)
                        h[0] = 1.0
                        h /= np.sqrt(np.sum(h ** 2))
                        name = f"{home}_{room}_{array}_{pos}_{chan}.wav"
                        save_wav(Waveform(h * 0.5, FS), rir_dir / name, "32f")
                        catalog.append({
                            "home_id": home, "room_id": room, "array_id": array,
                            "source_position_id": pos, "channel_id": chan,
                            "wav_path": f"rirs/{name}",
                        })
    with open(base / "rir_catalog.json", "w") as fh:
        json.dump(catalog, fh, indent=1)

    # speech: 6 speakers x 4 utterances
    speech_dir = base / "speech"
    speech_dir.mkdir()
    corpus = []
    for i in range(6):
        gender = "m" if i % 2 == 0 else "f"
        utts = []
        for j in range(4):
            x = synth_utterance(rng.uniform(2.2, 3.6), FS, rng)
            name = f"spk{i}_utt{j}.wav"
            save_wav(Waveform(x, FS), speech_dir / name, "32f")
            utts.append(f"speech/{name}")
        corpus.append({"speaker_id": f"spk{i}", "gender": gender, "utterances": utts})
    with open(base / "speech_corpus.json", "w") as fh:
        json.dump(corpus, fh, indent=1)

    # noise: 3 segments of varied length
    noise_dir = base / "noise"
    noise_dir.mkdir()
    noise_manifest = []
    for i, dur in enumerate((3.0, 6.5, 9.0)):
        x = colored_noise(dur, FS, rng)
        name = f"seg{i}.wav"
        save_wav(Waveform(x, FS), noise_dir / name, "32f")
        noise_manifest.append({"segment_id": f"seg{i}", "wav_path": f"noise/{name}"})
    with open(base / "noise_manifest.json", "w") as fh:
        json.dump(noise_manifest, fh, indent=1)

    # activity patterns: two templates per speaker count
    patterns = [
        {"recording_id": "pat1a", "duration_s": 5.0,
         "tracks": [{"speaker_id": "A", "intervals": [[0.3, 2.2], [2.8, 4.6]]}]},
        {"recording_id": "pat1b", "duration_s": 4.4,
         "tracks": [{"speaker_id": "A", "intervals": [[0.2, 3.9]]}]},
        {"recording_id": "pat2a", "duration_s": 4.5,
         "tracks": [{"speaker_id": "A", "intervals": [[0.2, 2.5]]},
                    {"speaker_id": "B", "intervals": [[1.5, 4.0]]}]},
        {"recording_id": "pat2b", "duration_s": 5.5,
         "tracks": [{"speaker_id": "A", "intervals": [[0.4, 2.0], [3.0, 5.2]]},
                    {"speaker_id": "B", "intervals": [[1.2, 3.6]]}]},
        {"recording_id": "pat3a", "duration_s": 5.0,
         "tracks": [{"speaker_id": "A", "intervals": [[0.2, 3.0]]},
                    {"speaker_id": "B", "intervals": [[1.0, 4.2]]},
                    {"speaker_id": "C", "intervals": [[2.0, 4.5]]}]},
        {"recording_id": "pat3b", "duration_s": 4.6,
         "tracks": [{"speaker_id": "A", "intervals": [[0.3, 2.8]]},
                    {"speaker_id": "B", "intervals": [[0.8, 3.9]]},
                    {"speaker_id": "C", "intervals": [[1.5, 4.2]]}]},
    ]
    with open(base / "patterns.json", "w") as fh:
        json.dump(patterns, fh, indent=1)

    return base
