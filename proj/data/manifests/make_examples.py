#!/usr/bin/env python3
# Copyright 2026 The speakaug Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes the metadata-only example manifests (no audio is shipped)."""

import json
import os

CORPORA = ["VCTK", "GRID", "WSJ1", "WSJCAM", "TIMIT"]
DIALECTS = ["American", "Canadian", "English", "Irish", "Northern Irish", "Scottish"]
TEXTS = [
    "the quick brown fox jumps over the lazy dog",
    "she sells sea shells by the sea shore",
    "a rainbow is a division of white light",
]
UTTS_PER_SPEAKER = 2


def speakers(corpus, prefix, n_train, n_dev, n_test, dialects, rate, start=1):
    out = []
    idx = start
    for split, n in (("train", n_train), ("dev", n_dev), ("test", n_test)):
        for _ in range(n):
            out.append((corpus, f"{prefix}{idx:03d}", split, dialects[idx % len(dialects)],
                        "F" if idx % 2 else "M", rate))
            idx += 1
    return out


def records(spk_list):
    rows = []
    for corpus, spk, split, dialect, gender, rate in spk_list:
        for u in range(UTTS_PER_SPEAKER):
            utt = f"{spk}_{u + 1:03d}"
            rows.append({
                "utt_id": utt, "speaker_id": spk, "corpus_id": corpus, "dialect": dialect,
                "split": split, "text": TEXTS[u % len(TEXTS)], "token_kind": "char",
                "audio_path": f"{corpus}/wav/{spk}/{utt}.wav", "sample_rate": rate,
                "gender": gender,
            })
    return rows


def write(path, corpus_list, rows):
    with open(path, "w") as f:
        f.write(json.dumps({"manifest_version": 1, "corpus_list": corpus_list,
                            "dialect_list": DIALECTS}) + "\n")
        for r in rows:
            f.write(json.dumps(r) + "\n")


def main():
    here = os.path.dirname(os.path.abspath(__file__))
    vctk = speakers("VCTK", "vctk_p", 100, 4, 4,
                    ["English", "Scottish", "American", "Irish", "Northern Irish", "Canadian"],
                    48000, start=225)
    write(os.path.join(here, "vctk.jsonl"), ["VCTK"], records(vctk))
    low = (speakers("GRID", "grid_s", 15, 2, 0, ["English", "Scottish"], 50000)
           + speakers("WSJ1", "wsj1_", 50, 2, 0, ["American"], 16000)
           + speakers("WSJCAM", "wsjcam_", 85, 2, 0, ["English"], 16000)
           + speakers("TIMIT", "timit_", 50, 2, 0, ["American"], 16000))
    write(os.path.join(here, "vctk_5c.jsonl"), CORPORA, records(vctk + low))


if __name__ == "__main__":
    main()
