"""FastAPI surface over the service handlers.

The app keeps no global state beyond a small checkpoint registry used by
/predict so repeated predictions against the same checkpoint skip the
reload. Error mapping: UsageError -> 422, DataError -> 400.
"""
from __future__ import annotations

from fastapi import FastAPI, HTTPException

from . import handlers
from . import schemas as S


def create_app() -> FastAPI:
    app = FastAPI(title="avscene", description="audio-visual scene classification",
                  version=handlers.health().version)

    def guard(fn, *args):
        try:
            return fn(*args)
        except handlers.UsageError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except handlers.DataError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    @app.get("/health", response_model=S.HealthResponse)
    def health():
        return handlers.health()

    @app.post("/synthetic", response_model=S.SyntheticResponse)
    def synthetic(req: S.SyntheticRequest):
        return guard(handlers.prepare_synthetic, req)

    @app.post("/features", response_model=S.FeatureResponse)
    def features(req: S.FeatureRequest):
        return guard(handlers.extract_features, req)

    @app.post("/train", response_model=S.TrainResponse)
    def train(req: S.TrainRequest):
        return guard(handlers.train, req)

    @app.post("/evaluate", response_model=S.EvaluateResponse)
    def evaluate(req: S.EvaluateRequest):
        return guard(handlers.evaluate, req)

    @app.post("/predict", response_model=S.PredictResponse)
    def predict(req: S.PredictRequest):
        return guard(handlers.predict, req)

    @app.post("/params", response_model=S.ParamsResponse)
    def params(req: S.ParamsRequest):
        return guard(handlers.params, req)

    @app.post("/gradcheck", response_model=S.GradcheckResponse)
    def gradcheck(req: S.GradcheckRequest):
        return guard(handlers.gradcheck, req)

    return app
