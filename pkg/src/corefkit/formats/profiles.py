"""Dataset profile files: one JSON object describing the annotation policy."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

from corefkit.corpus import DatasetProfile


def profile_to_dict(profile: DatasetProfile) -> dict:
    return {
        "name": profile.name,
        "annotates_singletons": profile.annotates_singletons,
        "has_speakers": profile.has_speakers,
        "has_genre": profile.has_genre,
        "partially_annotated": profile.partially_annotated,
        "markable_restriction_note": profile.markable_restriction_note,
    }


def profile_from_dict(data: dict) -> DatasetProfile:
    return DatasetProfile(
        name=data["name"],
        annotates_singletons=bool(data.get("annotates_singletons", True)),
        has_speakers=bool(data.get("has_speakers", False)),
        has_genre=bool(data.get("has_genre", False)),
        partially_annotated=bool(data.get("partially_annotated", False)),
        markable_restriction_note=data.get("markable_restriction_note", ""),
    )


def load_profile(path: Union[str, Path]) -> DatasetProfile:
    with open(path, encoding="utf-8") as f:
        return profile_from_dict(json.load(f))


def save_profile(profile: DatasetProfile, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(profile_to_dict(profile), f, indent=2)
        f.write("\n")
