"""Key-value config file for batch runs and the service.

Plain `key = value` lines, `#` comments.  Endpoints may also come from
the environment; an explicit config value wins.  Credentials are
environment-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from diarfuse.errors import NotFoundError, ParseError, ValidationError
from diarfuse.merge import MergeConfig

_KNOWN_KEYS = {
    "parallelism",
    "artifact_dir",
    "s3_endpoint",
    "llm_endpoint",
    "llm_weight",
    "flag_threshold",
    "llm_enabled",
    "roles",
}

_BOOL_VALUES = {
    "true": True,
    "yes": True,
    "1": True,
    "false": False,
    "no": False,
    "0": False,
}


@dataclass(frozen=True)
class PipelineConfig:
    parallelism: int = 2
    artifact_dir: str = "artifacts"
    s3_endpoint: str = ""
    llm_endpoint: str = ""
    merge: MergeConfig = field(default_factory=MergeConfig)

    def __post_init__(self):
        if self.parallelism < 1:
            raise ValidationError(f"parallelism must be at least 1, got {self.parallelism}")


def parse_roles(text: str) -> dict[str, str]:
    """Parse `spk0=Doctor,spk1=Patient` into a roles map."""
    roles: dict[str, str] = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        speaker, sep, label = part.partition("=")
        speaker, label = speaker.strip(), label.strip()
        if not sep or not speaker or not label:
            raise ValidationError(f"role mapping {part!r} is not of the form speaker=Label")
        if speaker in roles:
            raise ValidationError(f"duplicate role mapping for speaker {speaker!r}")
        roles[speaker] = label
    return roles


def parse_config(text: str) -> PipelineConfig:
    values: dict[str, str] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ParseError(f"config line {line_no}: expected key = value", line=line_no)
        if key not in _KNOWN_KEYS:
            raise ParseError(f"config line {line_no}: unknown key {key!r}", line=line_no)
        if key in values:
            raise ParseError(f"config line {line_no}: duplicate key {key!r}", line=line_no)
        values[key] = value

    try:
        merge = MergeConfig(
            llm_weight=float(values.get("llm_weight", MergeConfig().llm_weight)),
            roles=parse_roles(values.get("roles", "")),
            flag_threshold=float(values.get("flag_threshold", MergeConfig().flag_threshold)),
            llm_enabled=_parse_bool(values.get("llm_enabled", "false")),
        )
        return PipelineConfig(
            parallelism=int(values.get("parallelism", "2")),
            artifact_dir=values.get("artifact_dir", "artifacts"),
            s3_endpoint=values.get("s3_endpoint", ""),
            llm_endpoint=values.get("llm_endpoint", ""),
            merge=merge,
        )
    except (ValueError, ValidationError) as exc:
        raise ParseError(f"config: {exc}") from exc


def _parse_bool(text: str) -> bool:
    try:
        return _BOOL_VALUES[text.strip().lower()]
    except KeyError:
        raise ValueError(f"expected a boolean, got {text!r}") from None


def parse_config_file(path: str | Path) -> PipelineConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise NotFoundError(f"config file not found: {path}") from None
    except UnicodeDecodeError as exc:
        raise ParseError(f"config file {path}: not valid UTF-8 at byte {exc.start}") from exc
    return parse_config(text)
