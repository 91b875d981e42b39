"""HTTP generation API over a frozen model bundle.

Endpoints: GET /classes, GET /health, POST /generate (JSON with base64 PNGs,
or ?format=grid for a raw PNG). The bundle is loaded once and treated as an
immutable snapshot; per-request randomness is request-local.
"""

import base64
import secrets
from typing import Optional

import numpy as np
from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field

from .colors import CLASSES
from .models import ModelBundle
from .training import png_bytes, tile_grid

MAX_COUNT = 256


class GenerateRequest(BaseModel):
    class_name: str = Field(alias="class")
    count: int = Field(default=64, ge=1, le=MAX_COUNT)
    seed: Optional[int] = Field(default=None, ge=0, lt=2**63)


def bundle_checksum(bundle: ModelBundle) -> str:
    import hashlib

    h = hashlib.sha256()
    for net in (bundle.G, bundle.D, bundle.Q):
        for name, tensor in net.state_dict().items():
            h.update(name.encode())
            h.update(tensor.detach().numpy().tobytes())
    return h.hexdigest()


def create_app(bundle: ModelBundle) -> FastAPI:
    app = FastAPI(title="logan generation service")

    @app.exception_handler(RequestValidationError)
    async def validation_to_400(request: Request, exc: RequestValidationError):
        detail = [
            {"field": ".".join(str(p) for p in err["loc"] if p != "body"),
             "message": err["msg"]}
            for err in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"detail": detail})

    @app.get("/classes")
    def classes():
        return list(CLASSES)

    @app.get("/health")
    def health():
        return {"status": "ok", "checkpoint": bundle.checkpoint_id}

    @app.post("/generate")
    def generate(req: GenerateRequest, format: str = Query(default="json")):
        if req.class_name not in CLASSES:
            return JSONResponse(
                status_code=400,
                content={
                    "detail": [{
                        "field": "class",
                        "message": f"unknown class {req.class_name!r}; "
                                   f"valid classes: {', '.join(CLASSES)}",
                    }]
                },
            )
        seed = req.seed if req.seed is not None else secrets.randbelow(2**31)
        images = bundle.generate(CLASSES.index(req.class_name), req.count, seed)
        grid_png = png_bytes(tile_grid(np.asarray(images)))
        if format == "grid":
            return Response(
                content=grid_png,
                media_type="image/png",
                headers={"X-Seed-Used": str(seed)},
            )
        return {
            "class": req.class_name,
            "count": req.count,
            "seed_used": seed,
            "images": [
                base64.b64encode(png_bytes(img)).decode() for img in images
            ],
            "grid": base64.b64encode(grid_png).decode(),
        }

    return app
