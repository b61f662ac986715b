"""Contextual speaker guesses from a chat-completion endpoint.

An oracle reads the whole (unlabeled) dialog, is told the role labels,
and names the role most likely to have spoken one target phrase.  The
HTTP oracle talks to any OpenAI-compatible `/v1/chat/completions`
endpoint; the stub oracle replays scripted answers for reproducible
tests and batch runs.

Every failure path degrades to an abstention (None): a phrase without a
guess is merely flagged for review, which is cheaper than a mislabel.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Protocol

import requests

from diarfuse.errors import ParseError
from diarfuse.formats.models import Transcript

logger = logging.getLogger(__name__)

ENDPOINT_ENV_VAR = "DIARFUSE_LLM_ENDPOINT"

# The literal answer an oracle gives when it declines to guess.
ABSTAIN = "ABSTAIN"


class SpeakerOracle(Protocol):
    """Given the dialog, the roles, and a target phrase index, return the
    chosen speaker_id, or None to abstain."""

    def choose(
        self, transcript: Transcript, roles: Mapping[str, str], target_index: int
    ) -> str | None: ...


@dataclass(frozen=True)
class OracleConfig:
    """Connection settings for the HTTP oracle."""

    endpoint: str = ""
    model: str = "default"
    timeout: float = 30.0
    max_retries: int = 2
    context_window: int | None = None  # phrases of context each side; None = whole file

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError(f"timeout must be positive, got {self.timeout}")
        if self.max_retries < 0:
            raise ValueError(f"max_retries must be non-negative, got {self.max_retries}")

    def resolved_endpoint(self) -> str:
        return self.endpoint or os.environ.get(ENDPOINT_ENV_VAR, "")


def build_prompt(
    transcript: Transcript,
    roles: Mapping[str, str],
    target_index: int,
    context_window: int | None = None,
) -> str:
    """Render the dialog with the target line marked.

    The prompt lists the role labels, shows the surrounding dialog
    (all of it, or `context_window` phrases on each side), marks the
    target line, and asks for exactly one role label or ABSTAIN.
    """
    if target_index >= len(transcript.phrases) or target_index < 0:
        raise IndexError(f"target index {target_index} out of range")
    labels = sorted(set(roles.values()))
    options = ", ".join(labels + [ABSTAIN])

    lo, hi = 0, len(transcript.phrases)
    if context_window is not None:
        lo = max(0, target_index - context_window)
        hi = min(hi, target_index + context_window + 1)

    lines = []
    for phrase in transcript.phrases[lo:hi]:
        marker = ">>" if phrase.id == target_index else "  "
        lines.append(f"{marker} [{phrase.id}] {phrase.text}")
    dialog = "\n".join(lines)

    return (
        f"The speakers in this conversation are: {', '.join(labels)}.\n"
        f"Dialog (the line marked with >> is the one to attribute):\n"
        f"{dialog}\n\n"
        f"Which speaker said the marked line [{target_index}]? "
        f"Answer with exactly one of: {options}."
    )


def map_response(text: str, roles: Mapping[str, str]) -> str | None:
    """Map a raw model response to a speaker_id.

    Only an exact, case-insensitive match of a role label counts;
    anything else (hedged answers, unknown labels, an explicit ABSTAIN)
    maps to None.  If two speakers share a label the answer is
    ambiguous and also maps to None.
    """
    answer = text.strip().casefold()
    if not answer or answer == ABSTAIN.casefold():
        return None
    matches = [sid for sid, label in roles.items() if label.strip().casefold() == answer]
    if len(matches) == 1:
        return matches[0]
    return None


def query(
    oracle: SpeakerOracle | None,
    transcript: Transcript,
    roles: Mapping[str, str],
    target_index: int,
) -> str | None:
    """Ask the oracle for a speaker; never raises, abstains on failure."""
    if oracle is None:
        return None
    try:
        return oracle.choose(transcript, roles, target_index)
    except Exception:
        logger.warning(
            "oracle failed on phrase %d of %s", target_index, transcript.source_id, exc_info=True
        )
        return None


_SYSTEM_PROMPT = (
    "You attribute lines of a conversation transcript to speakers. "
    "Reply with exactly one of the offered labels and nothing else."
)


class HttpChatOracle:
    """Speaker oracle backed by an OpenAI-compatible chat endpoint.

    Requests are pinned to temperature 0 so a rerun with the same
    inputs reproduces the same answers.
    """

    def __init__(self, config: OracleConfig, session: requests.Session | None = None):
        self.config = config
        self.session = session or requests.Session()

    def choose(
        self, transcript: Transcript, roles: Mapping[str, str], target_index: int
    ) -> str | None:
        endpoint = self.config.resolved_endpoint()
        if not endpoint:
            logger.warning("no oracle endpoint configured; abstaining")
            return None
        prompt = build_prompt(
            transcript, roles, target_index, context_window=self.config.context_window
        )
        body = {
            "model": self.config.model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": _SYSTEM_PROMPT},
                {"role": "user", "content": prompt},
            ],
        }
        url = endpoint.rstrip("/") + "/v1/chat/completions"
        last_error: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            try:
                response = self.session.post(url, json=body, timeout=self.config.timeout)
                response.raise_for_status()
                content = response.json()["choices"][0]["message"]["content"]
                return map_response(str(content), roles)
            except Exception as exc:
                last_error = exc
                if attempt < self.config.max_retries:
                    time.sleep(min(0.25 * 2**attempt, 2.0))
        logger.warning(
            "oracle request failed after %d attempts: %s",
            self.config.max_retries + 1,
            last_error,
        )
        return None


class StubOracle:
    """Table-driven oracle: phrase index -> scripted response text.

    Responses go through the same strict label mapping as real model
    output, so a fixture can script correct answers, wrong answers,
    abstentions, and junk.  Indices without an entry abstain.
    """

    def __init__(self, answers: Mapping[int, str]):
        self.answers = {int(k): str(v) for k, v in answers.items()}

    @classmethod
    def from_bytes(cls, raw: bytes, what: str = "oracle fixture") -> "StubOracle":
        """Parse a JSON fixture: an object mapping phrase index to answer."""
        try:
            data = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ParseError(f"{what}: {exc}") from exc
        if not isinstance(data, dict):
            raise ParseError(f"{what}: expected a JSON object")
        try:
            return cls({int(k): str(v) for k, v in data.items()})
        except ValueError as exc:
            raise ParseError(f"{what}: keys must be phrase indices: {exc}") from exc

    @classmethod
    def from_file(cls, path: str | Path) -> "StubOracle":
        return cls.from_bytes(Path(path).read_bytes(), what=f"oracle fixture {path}")

    def choose(
        self, transcript: Transcript, roles: Mapping[str, str], target_index: int
    ) -> str | None:
        answer = self.answers.get(target_index)
        if answer is None:
            return None
        return map_response(answer, roles)


class AbstainingOracle:
    """Oracle that abstains on every phrase (e.g. a missing fixture)."""

    def choose(
        self, transcript: Transcript, roles: Mapping[str, str], target_index: int
    ) -> str | None:
        return None
