"""REST surface over the gateway service (HTTP/1.1, optional TLS at serve time).

Routes mirror the documented interface:

    PUT    /ledgers/{name}                         create
    GET    /ledgers/{name}                         descriptor
    PATCH  /ledgers/{name}                         update principal lists
    DELETE /ledgers/{name}                         delete registration
    POST   /ledgers/{name}/transactions            submit reading/registration
    GET    /ledgers/{name}/transactions/{id}
    GET    /ledgers/{name}/transactions/{id}/receipt
    GET    /ledgers/{name}/contracts/{cid}/readings[?index=k]

Signature verification needs the exact request bytes, so handlers read the
raw body and parse JSON themselves rather than using model binding.
"""

from __future__ import annotations

import json

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from . import auth
from .auth import ApiError
from .service import GatewayService


def _path_with_query(request: Request) -> str:
    path = request.url.path
    if request.url.query:
        path += "?" + request.url.query
    return path


def _json_body(raw: bytes) -> dict:
    if not raw:
        return {}
    try:
        body = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ApiError(400, "MalformedBody", f"body is not valid JSON: {exc}") from exc
    if not isinstance(body, dict):
        raise ApiError(400, "MalformedBody", "body must be a JSON object")
    return body


def create_app(service: GatewayService) -> FastAPI:
    app = FastAPI(title="pipechain gateway", docs_url=None, redoc_url=None)

    @app.exception_handler(ApiError)
    async def on_api_error(_request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": exc.error, "message": exc.message},
        )

    async def principal_for(request: Request, action: str, ledger_name: str | None):
        raw = await request.body()
        principal = service.authenticate(
            request.method,
            _path_with_query(request),
            raw,
            dict(request.headers),
            ledger_name=ledger_name,
        )
        auth.authorize(principal, action)
        return principal, raw

    @app.put("/ledgers/{name}")
    async def create_ledger(name: str, request: Request):
        # the ledger does not exist yet: service-scope principals only
        _principal, raw = await principal_for(request, auth.ACTION_ADMIN_CRUD, None)
        descriptor = service.create_ledger(name, _json_body(raw))
        return JSONResponse(status_code=201, content=descriptor)

    @app.get("/ledgers/{name}")
    async def get_ledger(name: str, request: Request):
        await principal_for(request, auth.ACTION_READ, name)
        return service.get_ledger(name)

    @app.patch("/ledgers/{name}")
    async def update_ledger(name: str, request: Request):
        _principal, raw = await principal_for(request, auth.ACTION_ADMIN_CRUD, name)
        return service.update_ledger(name, _json_body(raw))

    @app.delete("/ledgers/{name}")
    async def delete_ledger(name: str, request: Request):
        await principal_for(request, auth.ACTION_ADMIN_CRUD, name)
        service.delete_ledger(name)
        return Response(status_code=204)

    @app.post("/ledgers/{name}/transactions")
    async def post_transaction(name: str, request: Request):
        principal, raw = await principal_for(request, auth.ACTION_APPEND, name)
        return service.post_transaction(name, principal, _json_body(raw))

    @app.get("/ledgers/{name}/transactions/{tx_id}")
    async def get_transaction(name: str, tx_id: str, request: Request):
        await principal_for(request, auth.ACTION_READ, name)
        return service.get_transaction(name, tx_id)

    @app.get("/ledgers/{name}/transactions/{tx_id}/receipt")
    async def get_receipt(name: str, tx_id: str, request: Request):
        await principal_for(request, auth.ACTION_READ, name)
        return service.get_receipt(name, tx_id)

    @app.get("/ledgers/{name}/contracts/{contract_id}/readings")
    async def query_contract(name: str, contract_id: str, request: Request):
        await principal_for(request, auth.ACTION_READ, name)
        index_raw = request.query_params.get("index")
        index = None
        if index_raw is not None:
            try:
                index = int(index_raw)
            except ValueError:
                raise ApiError(400, "MalformedBody", "index must be an integer") from None
            if index < 0:
                raise ApiError(416, "IndexOutOfRange", "index must be non-negative")
        return service.query_contract(name, contract_id, index)

    return app
