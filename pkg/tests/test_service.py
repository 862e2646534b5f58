import json
import time

import pytest
from fastapi.testclient import TestClient

from eedkit.images import decode_image_bytes, encode_png_bytes, save_image
from eedkit.params import DiffusionParams
from eedkit.service import ServiceConfig, create_app
from eedkit.synthetic import street_scene

FAST_PARAMS = {
    "kappa": 0.1,
    "presmooth_sigma": 1.0,
    "presmooth_kernel": 3,
    "tau": 0.2,
    "steps": 6,
}


@pytest.fixture
def crop_png(tmp_path):
    img, _ = street_scene(20, 24, seed=2)
    path = tmp_path / "crop.png"
    save_image(img, path)
    return path.read_bytes()


@pytest.fixture
def client():
    app = create_app(ServiceConfig(max_concurrent_jobs=1, queue_capacity=2, size_cap=64))
    with TestClient(app) as tc:
        yield tc


def submit(client, png, params, stride=2):
    return client.post(
        "/jobs",
        files={"image": ("crop.png", png, "image/png")},
        data={"params": json.dumps(params), "stride": str(stride)},
    )


def wait_for(client, job_id, states, timeout=30.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        status = client.get(f"/jobs/{job_id}").json()
        if status["state"] in states:
            return status
        time.sleep(0.01)
    raise AssertionError(f"job {job_id} did not reach {states} within {timeout}s")


class TestPresetsEndpoint:
    def test_lists_builtins(self, client):
        body = client.get("/presets").json()
        assert set(body) == {"P_strong", "P_mild"}
        DiffusionParams.from_dict(body["P_strong"])  # parseable
        assert body["P_strong"]["kappa"] == 0.1


class TestCreateJob:
    def test_valid_request_queues(self, client, crop_png):
        r = submit(client, crop_png, FAST_PARAMS)
        assert r.status_code == 201
        body = r.json()
        assert body["state"] == "queued"
        status = wait_for(client, body["job_id"], {"done"})
        assert status["error"] is None

    def test_invalid_kappa_field_level_message(self, client, crop_png):
        r = submit(client, crop_png, {**FAST_PARAMS, "kappa": -1.0})
        assert r.status_code == 400
        assert "kappa" in r.json()["detail"]

    def test_invalid_tau_rejected(self, client, crop_png):
        r = submit(client, crop_png, {**FAST_PARAMS, "tau": 0.3})
        assert r.status_code == 400
        assert "tau" in r.json()["detail"]

    def test_garbage_image_rejected(self, client):
        r = submit(client, b"not a png", FAST_PARAMS)
        assert r.status_code == 400
        assert "decode" in r.json()["detail"]

    def test_size_cap_echoed(self, client, tmp_path):
        import numpy as np

        big = tmp_path / "big.png"
        save_image(np.zeros((80, 80, 3)), big)
        r = submit(client, big.read_bytes(), FAST_PARAMS)
        assert r.status_code == 400
        assert "64x64" in r.json()["detail"]

    def test_queue_full_returns_429(self, crop_png):
        app = create_app(ServiceConfig(max_concurrent_jobs=1, queue_capacity=1, size_cap=64))
        slow = {**FAST_PARAMS, "steps": 20000}
        with TestClient(app) as tc:
            first = submit(tc, crop_png, slow)
            assert first.status_code == 201
            # worker busy; fill the queue, then overflow it
            responses = [submit(tc, crop_png, slow) for _ in range(3)]
            assert 429 in [r.status_code for r in responses]
            # cancel everything so shutdown is fast
            ids = [first.json()["job_id"]] + [
                r.json()["job_id"] for r in responses if r.status_code == 201
            ]
            for job_id in ids:
                tc.post(f"/jobs/{job_id}/cancel")


class TestStatusAndFrames:
    def test_unknown_job_404(self, client):
        assert client.get("/jobs/zzz").status_code == 404
        assert client.post("/jobs/zzz/cancel").status_code == 404

    def test_stride_frame_indices(self, client, crop_png):
        r = submit(client, crop_png, FAST_PARAMS, stride=2)
        status = wait_for(client, r.json()["job_id"], {"done"})
        assert status["frames"] == [2, 4, 6]

    def test_final_step_included_when_off_stride(self, client, crop_png):
        r = submit(client, crop_png, {**FAST_PARAMS, "steps": 7}, stride=3)
        status = wait_for(client, r.json()["job_id"], {"done"})
        assert status["frames"] == [3, 6, 7]

    def test_frame_bytes_stable_and_missing_404(self, client, crop_png):
        r = submit(client, crop_png, FAST_PARAMS, stride=3)
        job_id = r.json()["job_id"]
        wait_for(client, job_id, {"done"})
        a = client.get(f"/jobs/{job_id}/frames/6")
        b = client.get(f"/jobs/{job_id}/frames/6")
        assert a.status_code == 200
        assert a.headers["content-type"] == "image/png"
        assert a.content == b.content
        assert client.get(f"/jobs/{job_id}/frames/5").status_code == 404

    def test_zero_step_job_returns_reencoded_crop(self, client, crop_png):
        r = submit(client, crop_png, {**FAST_PARAMS, "steps": 0})
        job_id = r.json()["job_id"]
        status = wait_for(client, job_id, {"done"})
        assert status["frames"] == [0]
        frame = client.get(f"/jobs/{job_id}/frames/0").content
        assert frame == encode_png_bytes(decode_image_bytes(crop_png))

    def test_frame_matches_eed_run_exactly(self, client, crop_png):
        """Service adds no numerical deviation over the library path."""
        from eedkit.diffusion import eed_run

        r = submit(client, crop_png, FAST_PARAMS, stride=6)
        job_id = r.json()["job_id"]
        wait_for(client, job_id, {"done"})
        frame = client.get(f"/jobs/{job_id}/frames/6").content
        params = DiffusionParams.from_dict({**FAST_PARAMS, "snapshots": [6]})
        (_, expected), = eed_run(decode_image_bytes(crop_png), params)
        assert frame == encode_png_bytes(expected)


class TestCancel:
    def test_cancel_queued_job_never_runs(self, crop_png):
        app = create_app(ServiceConfig(max_concurrent_jobs=1, queue_capacity=4, size_cap=64))
        with TestClient(app) as tc:
            blocker = submit(tc, crop_png, {**FAST_PARAMS, "steps": 20000}).json()["job_id"]
            queued = submit(tc, crop_png, FAST_PARAMS).json()["job_id"]
            r = tc.post(f"/jobs/{queued}/cancel")
            assert r.json()["state"] == "cancelled"
            tc.post(f"/jobs/{blocker}/cancel")
            wait_for(tc, blocker, {"cancelled"})
            final = tc.get(f"/jobs/{queued}").json()
            assert final["state"] == "cancelled"
            assert final["frames"] == []

    def test_cancel_done_job_stays_done(self, client, crop_png):
        job_id = submit(client, crop_png, FAST_PARAMS).json()["job_id"]
        wait_for(client, job_id, {"done"})
        r = client.post(f"/jobs/{job_id}/cancel")
        assert r.json()["state"] == "done"

    def test_cancel_running_freezes_frames(self, client, crop_png):
        job_id = submit(
            client, crop_png, {**FAST_PARAMS, "steps": 50000}, stride=50
        ).json()["job_id"]
        wait_for(client, job_id, {"running"})
        client.post(f"/jobs/{job_id}/cancel")
        status = wait_for(client, job_id, {"cancelled"})
        frames_at_cancel = status["frames"]
        assert status["current_step"] <= 50000
        time.sleep(0.2)
        after = client.get(f"/jobs/{job_id}").json()
        assert after["state"] == "cancelled"
        assert after["frames"] == frames_at_cancel
