"""Request authentication and role-based authorization.

Two principal kinds mirror the two security-principal lists in a ledger
descriptor: certificate-based principals sign each request (detached
Ed25519 signature over method || path || body digest || nonce, with a
strictly increasing per-principal nonce for replay protection), and
token-based principals present a static bearer token whose SHA-256 the
service knows. Roles gate actions: Administrator does everything,
Contributor appends and reads, Reader only reads.
"""

from __future__ import annotations

import hmac
from dataclasses import dataclass

from .. import crypto
from ..encoding import enc_str, enc_u64

KIND_CERT = "CertBased"
KIND_TOKEN = "TokenBased"

ROLE_ADMINISTRATOR = "Administrator"
ROLE_CONTRIBUTOR = "Contributor"
ROLE_READER = "Reader"
ROLES = (ROLE_ADMINISTRATOR, ROLE_CONTRIBUTOR, ROLE_READER)

ACTION_ADMIN_CRUD = "AdminCrud"
ACTION_APPEND = "Append"
ACTION_READ = "Read"
ACTIONS = (ACTION_ADMIN_CRUD, ACTION_APPEND, ACTION_READ)

_ROLE_ALLOWS = {
    ROLE_ADMINISTRATOR: frozenset(ACTIONS),
    ROLE_CONTRIBUTOR: frozenset({ACTION_APPEND, ACTION_READ}),
    ROLE_READER: frozenset({ACTION_READ}),
}

HEADER_PRINCIPAL = "x-pipechain-principal"
HEADER_NONCE = "x-pipechain-nonce"
HEADER_SIGNATURE = "x-pipechain-signature"


class ApiError(Exception):
    """HTTP-mappable failure: status code plus a stable error kind."""

    def __init__(self, status: int, error: str, message: str):
        super().__init__(message)
        self.status = status
        self.error = error
        self.message = message


class AuthError(ApiError):
    pass


def unauthorized(error: str, message: str) -> AuthError:
    return AuthError(401, error, message)


def forbidden(message: str) -> AuthError:
    return AuthError(403, "Forbidden", message)


@dataclass(frozen=True)
class Principal:
    principal_id: str
    kind: str
    credential: bytes  # Ed25519 public key (cert) or sha256(token) (token)
    role: str
    tenant_id: str = ""


def request_preimage(method: str, path_with_query: str, body: bytes, nonce: int) -> bytes:
    return (
        enc_str(method.upper())
        + enc_str(path_with_query)
        + crypto.sha256(body)
        + enc_u64(nonce)
    )


def sign_request(
    key: crypto.SigningKey, method: str, path_with_query: str, body: bytes, nonce: int
) -> str:
    return key.sign(request_preimage(method, path_with_query, body, nonce)).hex()


def token_digest(token: str) -> bytes:
    return crypto.sha256(token.encode("utf-8"))


def tokens_equal(a: bytes, b: bytes) -> bool:
    return hmac.compare_digest(a, b)


def allowed(role: str, action: str) -> bool:
    return action in _ROLE_ALLOWS.get(role, frozenset())


def authorize(principal: Principal, action: str) -> None:
    """403 unless the principal's role covers the action."""
    if not allowed(principal.role, action):
        raise forbidden(
            f"role {principal.role} may not perform {action}"
        )
