"""Gateway service configuration (key-value file, INI syntax).

    [service]
    host = 127.0.0.1
    port = 8100
    master_seed = <64 hex>        ; derives per-principal entry-signing keys

    [principal dews-admin]
    kind = token
    token = <secret string>
    role = Administrator
    tenant_id = 00000000-0000-0000-0000-000000000000

    [principal ops-auditor]
    kind = cert
    public_key = <64 hex>         ; request-signing Ed25519 public key
    role = Reader

Bootstrap principals authenticate on every ledger; per-ledger principals
live in the ledger descriptors managed over the admin API. Environment:
PIPECHAIN_CONFIG names the default config path, PIPECHAIN_DATA_DIR the
default node data directory.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from . import auth


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BootstrapPrincipal:
    principal_id: str
    kind: str
    role: str | None = None
    tenant_id: str = ""
    public_key: bytes | None = None
    token: str | None = None


@dataclass
class GatewayConfig:
    master_seed: bytes
    host: str = "127.0.0.1"
    port: int = 8100
    principals: list[BootstrapPrincipal] = field(default_factory=list)


def load_gateway_config(path: str | Path) -> GatewayConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if not parser.read(path):
        raise ConfigError(f"cannot read config file {path}")
    if "service" not in parser:
        raise ConfigError("missing [service] section")
    service = parser["service"]
    try:
        master_seed = bytes.fromhex(service["master_seed"])
    except (KeyError, ValueError):
        raise ConfigError("service.master_seed must be 64 hex chars") from None
    if len(master_seed) != 32:
        raise ConfigError("service.master_seed must be 32 bytes")
    config = GatewayConfig(
        master_seed=master_seed,
        host=service.get("host", "127.0.0.1"),
        port=service.getint("port", 8100),
    )
    for section in parser.sections():
        if not section.startswith("principal "):
            continue
        principal_id = section[len("principal ") :].strip()
        body = parser[section]
        kind = body.get("kind", "")
        role = body.get("role") or None
        if role is not None and role not in auth.ROLES:
            raise ConfigError(f"bad role for {principal_id}: {role!r}")
        if kind == "token":
            token = body.get("token")
            if not token:
                raise ConfigError(f"token principal {principal_id} needs a token")
            config.principals.append(
                BootstrapPrincipal(
                    principal_id=principal_id,
                    kind=auth.KIND_TOKEN,
                    role=role,
                    tenant_id=body.get("tenant_id", ""),
                    token=token,
                )
            )
        elif kind == "cert":
            try:
                public_key = bytes.fromhex(body["public_key"])
            except (KeyError, ValueError):
                raise ConfigError(f"cert principal {principal_id} needs public_key hex") from None
            if len(public_key) != 32:
                raise ConfigError(f"{principal_id}: public_key must be 32 bytes")
            config.principals.append(
                BootstrapPrincipal(
                    principal_id=principal_id,
                    kind=auth.KIND_CERT,
                    role=role,
                    public_key=public_key,
                )
            )
        else:
            raise ConfigError(f"{principal_id}: kind must be cert or token")
    return config
