import os
import threading
import time
from pathlib import Path

import pytest
import uvicorn

from scoring_service.app import create_app
from scoring_service.bootstrap import build_decoder_only, train_encoder_decoder

MODEL_CACHE = Path(__file__).resolve().parent.parent / ".model_cache" / "tiny-t5"


@pytest.fixture(scope="session")
def model_dir():
    """Trained encoder-decoder backend; trains once and caches on disk."""
    override = os.environ.get("SCORING_SERVICE_MODEL_DIR")
    if override:
        return Path(override)
    if not (MODEL_CACHE / "backend.json").exists():
        train_encoder_decoder(MODEL_CACHE, log=lambda *_: None)
    return MODEL_CACHE


@pytest.fixture(scope="session")
def decoder_model_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("decoder") / "tiny-gpt"
    build_decoder_only(out)
    return out


@pytest.fixture(scope="session")
def server_url(model_dir):
    """The service on a real port, for concurrency and end-to-end tests."""
    app = create_app(model_dir=str(model_dir))
    config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 30
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("scoring service failed to start")
        time.sleep(0.05)
    port = server.servers[0].sockets[0].getsockname()[1]
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=10)
