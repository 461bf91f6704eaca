"""HTTP front end: a thin FastAPI layer over AuthService."""

from __future__ import annotations

from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from markguard.decision import CostMatrix, InvalidCostMatrix
from markguard.pipeline import CaptureMeta, ImageDecodeError, Venue
from markguard.service.core import AuthService, ServiceError


class FeedbackBody(BaseModel):
    request_id: str
    expert_label: str
    submitter: str = "anonymous"


class ThresholdsBody(BaseModel):
    cost_false_genuine: float
    cost_false_counterfeit: float
    cost_reject: float


def _error(status: int, code: str, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code, "detail": detail})


def create_app(service: AuthService) -> FastAPI:
    app = FastAPI(title="mark authentication service")
    app.state.service = service

    @app.exception_handler(ServiceError)
    async def service_error(_request: Request, exc: ServiceError):
        return _error(exc.http_status, exc.code, str(exc))

    @app.exception_handler(ImageDecodeError)
    async def decode_error(_request: Request, exc: ImageDecodeError):
        return _error(400, "malformed image", str(exc))

    @app.exception_handler(InvalidCostMatrix)
    async def cost_error(_request: Request, exc: InvalidCostMatrix):
        return _error(422, "invalid cost matrix", str(exc))

    @app.post("/v1/authenticate")
    def post_authenticate(
        image: UploadFile = File(...),
        device_id: str = Form("unknown"),
        venue: str = Form("unknown"),
    ):
        try:
            where = Venue(venue)
        except ValueError:
            return _error(400, "unknown venue", f"venue must be one of {[v.value for v in Venue]}")
        data = image.file.read()
        meta = CaptureMeta(device_id=device_id, venue=where)
        record = service.handle_authenticate(data, meta)
        return record.to_json_dict()

    @app.post("/v1/feedback")
    def post_feedback(body: FeedbackBody):
        record = service.record_feedback(body.request_id, body.expert_label, body.submitter)
        return record.to_json_dict()

    @app.put("/v1/thresholds")
    def put_thresholds(body: ThresholdsBody):
        costs = CostMatrix(
            cost_false_genuine=body.cost_false_genuine,
            cost_false_counterfeit=body.cost_false_counterfeit,
            cost_reject=body.cost_reject,
        )
        band = service.recalibrate(costs)
        return {"lower": band.lower, "upper": band.upper, "version": band.version}

    @app.get("/v1/metrics")
    def get_metrics():
        return service.snapshot_metrics()

    @app.get("/v1/models")
    def get_models():
        return {"models": service.registered_models()}

    @app.post("/v1/models/{version}/activate")
    def post_activate(version: str):
        snapshot = service.activate_model(version)
        return {
            "active_model_version": snapshot.model_version,
            "thresholds_version": snapshot.thresholds_version,
        }

    @app.get("/v1/tradeoff")
    def get_tradeoff():
        return service.tradeoff().to_json_dict()

    return app


def serve(service: AuthService, host: str = "127.0.0.1", port: int = 8000) -> None:
    """Run the app in the foreground (blocks until interrupted)."""
    import uvicorn

    uvicorn.run(create_app(service), host=host, port=port, log_level="warning")


__all__ = ["FeedbackBody", "ThresholdsBody", "create_app", "serve"]
