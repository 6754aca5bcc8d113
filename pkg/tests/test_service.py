import hashlib
import io

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from camcond import io_formats
from camcond.pipeline import compile_bundle, prepare_scene
from camcond.service import create_app


from conftest import write_golden_bundle


@pytest.fixture(scope="module")
def shared_bundle(tmp_path_factory):
    return write_golden_bundle(tmp_path_factory.mktemp("svc") / "proj")


@pytest.fixture(scope="module")
def scene(shared_bundle):
    # CompiledScene is immutable; each test still gets its own session/app
    return prepare_scene(io_formats.read_bundle(shared_bundle))


@pytest.fixture
def client(scene):
    return TestClient(create_app(scene))


def dolly_payload(frames=8, magnitude=0.8):
    return {"mode": "preset",
            "preset": {"kind": "dolly", "magnitude": magnitude,
                       "frames": frames, "anchor": [0.0, 0.0, 2.0]}}


class TestState:
    def test_initial_state(self, client):
        doc = client.get("/state").json()
        assert doc["revision"] == 0
        assert doc["num_frames"] == 8
        assert doc["width"] == 64 and doc["height"] == 64
        assert doc["trajectory"]["mode"] == "preset"
        assert doc["trajectory"]["preset"]["kind"] == "dolly"
        assert doc["parameters"]["num_steps"] == 10

    def test_put_bumps_revision(self, client):
        r = client.put("/trajectory", json=dolly_payload(magnitude=0.4))
        assert r.status_code == 200
        assert r.json()["revision"] == 1
        assert client.get("/state").json()["revision"] == 1
        r2 = client.put("/trajectory", json=dolly_payload(magnitude=0.5))
        assert r2.json()["revision"] == 2

    def test_state_reflects_new_trajectory(self, client):
        client.put("/trajectory", json={
            "mode": "preset",
            "preset": {"kind": "orbit", "magnitude": 20.0, "frames": 8,
                       "anchor": [0.0, 0.0, 2.0]}})
        doc = client.get("/state").json()
        assert doc["trajectory"]["preset"]["kind"] == "orbit"
        assert doc["trajectory"]["preset"]["magnitude"] == 20.0


class TestPutValidation:
    def test_wrong_frame_count_rejected_revision_unchanged(self, client):
        r = client.put("/trajectory", json=dolly_payload(frames=5))
        assert r.status_code == 422
        assert client.get("/state").json()["revision"] == 0

    def test_unknown_preset_kind_rejected(self, client):
        bad = dolly_payload()
        bad["preset"]["kind"] = "crane"
        assert client.put("/trajectory", json=bad).status_code == 422

    def test_keyframes_must_start_at_zero(self, client):
        cam = client.get("/state").json()["trajectory"]
        payload = {"mode": "keyframes", "keyframes": [
            {"index": 1, "camera": {
                "width": 64, "height": 64,
                "intrinsics": {"fx": 64.0, "fy": 64.0, "cx": 32.0, "cy": 32.0},
                "rotation": [1.0, 0.0, 0.0, 0.0],
                "translation": [0.0, 0.0, 0.0]}}]}
        r = client.put("/trajectory", json=payload)
        assert r.status_code == 422
        assert client.get("/state").json()["revision"] == 0

    def test_rejected_update_does_not_change_frames(self, client):
        before = client.get("/frame/0?mode=depth").content
        client.put("/trajectory", json=dolly_payload(frames=3))
        assert client.get("/frame/0?mode=depth").content == before


class TestFrames:
    def test_png_content_and_headers(self, client):
        r = client.get("/frame/0?mode=pose")
        assert r.status_code == 200
        assert r.headers["content-type"] == "image/png"
        assert r.headers["X-Revision"] == "0"
        digest = hashlib.sha256(r.content).hexdigest()
        assert r.headers["X-Content-Digest"] == digest
        img = np.asarray(Image.open(io.BytesIO(r.content)))
        assert img.shape == (64, 64, 3)

    def test_index_out_of_range_404(self, client):
        assert client.get("/frame/8").status_code == 404
        assert client.get("/frame/-1").status_code == 404

    def test_bad_mode_and_scale_rejected(self, client):
        assert client.get("/frame/0?mode=rgb").status_code == 422
        assert client.get("/frame/0?scale=0").status_code == 422
        assert client.get("/frame/0?scale=1.5").status_code == 422

    def test_conditional_request_304(self, client):
        r = client.get("/frame/2?mode=composite")
        etag = r.headers["ETag"]
        r2 = client.get("/frame/2?mode=composite",
                        headers={"If-None-Match": etag})
        assert r2.status_code == 304
        assert r2.headers["ETag"] == etag
        # a trajectory edit invalidates the tag
        client.put("/trajectory", json=dolly_payload(magnitude=0.1))
        r3 = client.get("/frame/2?mode=composite",
                        headers={"If-None-Match": etag})
        assert r3.status_code == 200
        assert r3.headers["X-Revision"] == "1"

    def test_scaled_frame_dimensions(self, client):
        r = client.get("/frame/0?mode=depth&scale=0.5")
        img = np.asarray(Image.open(io.BytesIO(r.content)))
        assert img.shape[:2] == (32, 32)

    def test_revision_header_tracks_edits(self, client):
        assert client.get("/frame/0").headers["X-Revision"] == "0"
        client.put("/trajectory", json=dolly_payload(magnitude=0.2))
        assert client.get("/frame/0").headers["X-Revision"] == "1"

    def test_edit_changes_rendered_bytes(self, client):
        before = client.get("/frame/7?mode=depth").content
        client.put("/trajectory", json=dolly_payload(magnitude=0.05))
        after = client.get("/frame/7?mode=depth").content
        assert before != after

    def test_repeated_requests_identical(self, client):
        a = client.get("/frame/3?mode=composite").content
        b = client.get("/frame/3?mode=composite").content
        assert a == b


class TestBatchParity:
    def test_served_frames_byte_identical_to_batch(self, shared_bundle, scene):
        bundle = io_formats.read_bundle(shared_bundle)
        out = compile_bundle(bundle)["output_dir"]
        client = TestClient(create_app(scene))
        mode_dirs = {"pose": "pose", "composite": "pose_depth", "depth": "depth"}
        for mode, sub in mode_dirs.items():
            for i in range(8):
                disk = (out / sub / f"{i:05d}.png").read_bytes()
                served = client.get(f"/frame/{i}?mode={mode}").content
                assert served == disk, f"{mode} frame {i} differs"
