"""Job input/output locations: local paths and S3-compatible objects.

The object store client is deliberately small: GET/PUT/HEAD with
path-style addressing and AWS signature v4, enough to talk to a locally
hosted S3-compatible server.  Credentials and endpoint come from the
environment so they never land in config files.
"""

from __future__ import annotations

import hashlib
import hmac
import logging
import os
import time
import urllib.parse
from dataclasses import dataclass
from pathlib import Path

import requests

from diarfuse.errors import DownstreamError, NotFoundError, ValidationError

logger = logging.getLogger(__name__)

ENDPOINT_ENV_VAR = "DIARFUSE_S3_ENDPOINT"
ACCESS_KEY_ENV_VAR = "DIARFUSE_S3_ACCESS_KEY"
SECRET_KEY_ENV_VAR = "DIARFUSE_S3_SECRET_KEY"

_EMPTY_SHA256 = hashlib.sha256(b"").hexdigest()


@dataclass(frozen=True)
class S3Credentials:
    access_key: str
    secret_key: str


@dataclass(frozen=True)
class StoreLocation:
    """Where a job input lives: a local file or an s3://bucket/key object."""

    raw: str
    scheme: str  # "local" or "s3"
    path: str = ""
    bucket: str = ""
    key: str = ""

    @classmethod
    def parse(cls, text: str) -> "StoreLocation":
        if text.startswith("s3://"):
            rest = text[len("s3://") :]
            bucket, _, key = rest.partition("/")
            if not bucket or not key:
                raise ValidationError(f"object address {text!r} needs both bucket and key")
            return cls(raw=text, scheme="s3", bucket=bucket, key=key)
        if not text:
            raise ValidationError("empty location")
        return cls(raw=text, scheme="local", path=text)

    def __str__(self) -> str:
        return self.raw


def _sign(key: bytes, msg: str) -> bytes:
    return hmac.new(key, msg.encode("utf-8"), hashlib.sha256).digest()


def _canonical_key_path(bucket: str, key: str) -> str:
    # Each path segment is percent-encoded per the v4 canonical URI rules;
    # slashes between segments stay literal.
    segments = f"{bucket}/{key}".split("/")
    return "/" + "/".join(urllib.parse.quote(seg, safe="-_.~") for seg in segments)


def sigv4_headers(
    method: str,
    url: str,
    body: bytes,
    credentials: S3Credentials,
    region: str = "us-east-1",
    now: time.struct_time | None = None,
) -> dict[str, str]:
    """AWS signature v4 headers for one S3 request (path-style URL)."""
    parts = urllib.parse.urlsplit(url)
    host = parts.netloc
    payload_hash = hashlib.sha256(body).hexdigest() if body else _EMPTY_SHA256
    if now is None:
        now = time.gmtime()
    amz_date = time.strftime("%Y%m%dT%H%M%SZ", now)
    datestamp = time.strftime("%Y%m%d", now)

    canonical_headers = (
        f"host:{host}\n"
        f"x-amz-content-sha256:{payload_hash}\n"
        f"x-amz-date:{amz_date}\n"
    )
    signed_headers = "host;x-amz-content-sha256;x-amz-date"
    canonical_request = "\n".join(
        [
            method,
            parts.path or "/",
            parts.query,
            canonical_headers,
            signed_headers,
            payload_hash,
        ]
    )
    scope = f"{datestamp}/{region}/s3/aws4_request"
    string_to_sign = "\n".join(
        [
            "AWS4-HMAC-SHA256",
            amz_date,
            scope,
            hashlib.sha256(canonical_request.encode("utf-8")).hexdigest(),
        ]
    )
    signing_key = _sign(
        _sign(_sign(_sign(("AWS4" + credentials.secret_key).encode("utf-8"), datestamp), region), "s3"),
        "aws4_request",
    )
    signature = hmac.new(signing_key, string_to_sign.encode("utf-8"), hashlib.sha256).hexdigest()
    return {
        "x-amz-date": amz_date,
        "x-amz-content-sha256": payload_hash,
        "Authorization": (
            f"AWS4-HMAC-SHA256 Credential={credentials.access_key}/{scope}, "
            f"SignedHeaders={signed_headers}, Signature={signature}"
        ),
    }


class ObjectStore:
    """Minimal S3-compatible client: GET, PUT, and existence checks."""

    def __init__(
        self,
        endpoint: str,
        credentials: S3Credentials | None = None,
        region: str = "us-east-1",
        timeout: float = 10.0,
        max_retries: int = 2,
        session: requests.Session | None = None,
    ):
        if not endpoint:
            raise ValidationError("object store endpoint is empty")
        self.endpoint = endpoint.rstrip("/")
        self.credentials = credentials
        self.region = region
        self.timeout = timeout
        self.max_retries = max_retries
        self.session = session or requests.Session()

    @classmethod
    def from_env(cls, endpoint: str = "") -> "ObjectStore | None":
        """Build a store from the environment; None when unconfigured."""
        endpoint = endpoint or os.environ.get(ENDPOINT_ENV_VAR, "")
        if not endpoint:
            return None
        access = os.environ.get(ACCESS_KEY_ENV_VAR, "")
        secret = os.environ.get(SECRET_KEY_ENV_VAR, "")
        credentials = S3Credentials(access, secret) if access and secret else None
        return cls(endpoint, credentials=credentials)

    def _url(self, bucket: str, key: str) -> str:
        return self.endpoint + _canonical_key_path(bucket, key)

    def _request(self, method: str, bucket: str, key: str, body: bytes = b"") -> requests.Response:
        url = self._url(bucket, key)
        headers = {}
        if self.credentials is not None:
            headers = sigv4_headers(method, url, body, self.credentials, region=self.region)
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            try:
                response = self.session.request(
                    method, url, data=body or None, headers=headers, timeout=self.timeout
                )
            except requests.RequestException as exc:
                last_error = exc
            else:
                if response.status_code == 404:
                    raise NotFoundError(f"object s3://{bucket}/{key} not found")
                if response.status_code < 500:
                    if response.status_code >= 400:
                        raise DownstreamError(
                            f"store rejected {method} s3://{bucket}/{key}: "
                            f"{response.status_code}"
                        )
                    return response
                last_error = DownstreamError(
                    f"store error {response.status_code} on {method} s3://{bucket}/{key}"
                )
            if attempt < self.max_retries:
                time.sleep(min(0.1 * 2**attempt, 1.0))
        raise DownstreamError(
            f"store unreachable after {self.max_retries + 1} attempts: {last_error}"
        )

    def get(self, bucket: str, key: str) -> bytes:
        return self._request("GET", bucket, key).content

    def put(self, bucket: str, key: str, body: bytes) -> None:
        self._request("PUT", bucket, key, body=body)

    def exists(self, bucket: str, key: str) -> bool:
        try:
            self._request("HEAD", bucket, key)
        except NotFoundError:
            return False
        return True


def read_location(location: StoreLocation, store: ObjectStore | None = None) -> bytes:
    """Fetch the bytes behind a location."""
    if location.scheme == "local":
        try:
            return Path(location.path).read_bytes()
        except FileNotFoundError:
            raise NotFoundError(f"input file not found: {location.path}") from None
        except IsADirectoryError:
            raise ValidationError(f"input location is a directory: {location.path}") from None
    if store is None:
        raise ValidationError(f"no object store configured for {location.raw}")
    return store.get(location.bucket, location.key)


def location_exists(location: StoreLocation, store: ObjectStore | None = None) -> bool:
    if location.scheme == "local":
        return Path(location.path).is_file()
    if store is None:
        raise ValidationError(f"no object store configured for {location.raw}")
    return store.exists(location.bucket, location.key)
