"""Per-viewer display preferences: validation, persistence, render directives."""
from __future__ import annotations

import dataclasses
import json
import logging
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Literal, Mapping

log = logging.getLogger(__name__)

Contrast = Literal["light", "dark", "high_contrast"]
Placement = Literal["bottom", "top", "near_speaker"]
VerbosityPref = Literal["off", "minimal", "verbose"]

FONT_SCALE_MIN, FONT_SCALE_MAX = 0.5, 3.0
MAX_LINES_MIN, MAX_LINES_MAX = 1, 5

_CONTRASTS = ("light", "dark", "high_contrast")
_PLACEMENTS = ("bottom", "top", "near_speaker")
_VERBOSITIES = ("off", "minimal", "verbose")

_PROFILE_NAME_RE = re.compile(r"^[a-z0-9_-]{1,32}$")

PROFILES_DIR_ENV = "CAPFUSE_PROFILES_DIR"


class InvalidPreference(ValueError):
    """A preference patch field failed validation; the profile is unchanged."""

    def __init__(self, field: str, reason: str):
        super().__init__(f"invalid preference {field}: {reason}")
        self.field = field
        self.reason = reason


class StorageFailure(OSError):
    """Profile persistence hit an I/O problem."""


@dataclass(frozen=True, slots=True)
class PreferenceProfile:
    font_scale: float = 1.0
    contrast: Contrast = "dark"
    placement: Placement = "bottom"
    verbosity: VerbosityPref = "minimal"
    show_tone: bool = True
    show_gestures: bool = True
    max_lines: int = 2

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in dataclasses.fields(cls))


@dataclass(frozen=True, slots=True)
class RenderDirectives:
    """Abstract display directives derived deterministically from a profile."""

    font_scale: float
    foreground: str
    background: str
    anchor: Placement
    line_budget: int


_THEME_COLORS = {
    "light": ("#1A1A1A", "#F5F5F5"),
    "dark": ("#F5F5F5", "#1A1A1A"),
    "high_contrast": ("#FFFFFF", "#000000"),
}


def _check_enum(field: str, value: Any, allowed: tuple[str, ...]) -> str:
    if not isinstance(value, str):
        raise InvalidPreference(field, f"expected one of {allowed}")
    normalized = value.strip().lower()
    if normalized not in allowed:
        raise InvalidPreference(field, f"expected one of {allowed}, got {value!r}")
    return normalized


def _check_bool(field: str, value: Any) -> bool:
    if not isinstance(value, bool):
        raise InvalidPreference(field, "expected a boolean")
    return value


def validate_patch(patch: Mapping[str, Any]) -> dict[str, Any]:
    """Normalize a partial preference update, rejecting unknown fields and
    out-of-range values. An empty patch is valid and returns {}."""
    known = set(PreferenceProfile.field_names())
    normalized: dict[str, Any] = {}
    for field, value in patch.items():
        if field not in known:
            raise InvalidPreference(field, "unknown field")
        if field == "font_scale":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise InvalidPreference(field, "expected a number")
            scale = float(value)
            if not (FONT_SCALE_MIN <= scale <= FONT_SCALE_MAX):
                raise InvalidPreference(
                    field, f"out of range [{FONT_SCALE_MIN}, {FONT_SCALE_MAX}]"
                )
            normalized[field] = scale
        elif field == "max_lines":
            if isinstance(value, bool) or not isinstance(value, int):
                raise InvalidPreference(field, "expected an integer")
            if not (MAX_LINES_MIN <= value <= MAX_LINES_MAX):
                raise InvalidPreference(
                    field, f"out of range [{MAX_LINES_MIN}, {MAX_LINES_MAX}]"
                )
            normalized[field] = value
        elif field == "contrast":
            normalized[field] = _check_enum(field, value, _CONTRASTS)
        elif field == "placement":
            normalized[field] = _check_enum(field, value, _PLACEMENTS)
        elif field == "verbosity":
            normalized[field] = _check_enum(field, value, _VERBOSITIES)
        else:  # show_tone / show_gestures
            normalized[field] = _check_bool(field, value)
    return normalized


def apply_patch(profile: PreferenceProfile, patch: Mapping[str, Any]) -> PreferenceProfile:
    """Field-wise overwrite of a validated patch; untouched fields preserved."""
    if not patch:
        return profile
    return dataclasses.replace(profile, **dict(patch))


def to_render_directives(profile: PreferenceProfile) -> RenderDirectives:
    fg, bg = _THEME_COLORS[profile.contrast]
    return RenderDirectives(
        font_scale=profile.font_scale,
        foreground=fg,
        background=bg,
        anchor=profile.placement,
        line_budget=profile.max_lines,
    )


@dataclass(frozen=True, slots=True)
class ProfileLoadResult:
    profile: PreferenceProfile
    found: bool
    recovered_from_corruption: bool = False


class ProfileStore:
    """One pretty-printed JSON file per named profile under a directory.

    The directory comes from an explicit path, the CAPFUSE_PROFILES_DIR
    environment variable, or a per-user default, in that order.
    """

    def __init__(self, directory: str | os.PathLike[str] | None = None):
        if directory is None:
            directory = os.environ.get(PROFILES_DIR_ENV) or (
                Path.home() / ".capfuse" / "profiles"
            )
        self.directory = Path(directory)

    def _path(self, name: str) -> Path:
        if not _PROFILE_NAME_RE.match(name):
            raise ValueError(f"profile name must match [a-z0-9_-]{{1,32}}: {name!r}")
        return self.directory / f"{name}.json"

    def save(self, name: str, profile: PreferenceProfile) -> Path:
        path = self._path(name)
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".json.tmp")
            tmp.write_text(json.dumps(profile.to_dict(), indent=2) + "\n", encoding="utf-8")
            tmp.replace(path)
        except OSError as exc:
            raise StorageFailure(f"cannot persist profile {name!r}: {exc}") from exc
        return path

    def load(self, name: str) -> ProfileLoadResult:
        """Load a named profile; a missing name yields defaults.

        A corrupt file is preserved under a `.bad` suffix and defaults are
        returned with the recovery flag set.
        """
        path = self._path(name)
        try:
            raw = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            return ProfileLoadResult(PreferenceProfile(), found=False)
        except OSError as exc:
            raise StorageFailure(f"cannot read profile {name!r}: {exc}") from exc

        try:
            data = json.loads(raw)
            if not isinstance(data, dict):
                raise ValueError("profile file must hold a JSON object")
            patch = validate_patch(data)
            if set(data) != set(PreferenceProfile.field_names()):
                missing = set(PreferenceProfile.field_names()) - set(data)
                if missing:
                    raise ValueError(f"profile file missing fields: {sorted(missing)}")
            profile = apply_patch(PreferenceProfile(), patch)
        except (ValueError, InvalidPreference) as exc:
            bad = path.with_suffix(".json.bad")
            log.warning("corrupt profile %r (%s); preserving as %s", name, exc, bad)
            try:
                path.replace(bad)
            except OSError:
                pass
            return ProfileLoadResult(PreferenceProfile(), found=True, recovered_from_corruption=True)
        return ProfileLoadResult(profile, found=True)
