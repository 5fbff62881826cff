"""End-to-end smoke test for the Python bindings.

Run after `pip install --no-build-isolation -e crates/python`:

    python3 python/smoke_test.py
"""

import json
import math
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

import rgbd_annotate_py as ra

W, H = 64, 48


def make_frames(root: Path, n: int):
    (root / "rgb").mkdir(parents=True)
    (root / "depth").mkdir()
    rgb, depth = [], []
    for i in range(n):
        img = np.zeros((H, W, 3), np.uint8)
        img[:] = (20, 40, 200)
        img[12:36, 20:44] = (220, 30, 30)
        Image.fromarray(img).save(root / "rgb" / f"{i:06}.png")
        Image.fromarray(np.full((H, W), 1500, np.uint16)).save(root / "depth" / f"{i:06}.png")
        rgb.append(f"rgb/{i:06}.png")
        depth.append(f"depth/{i:06}.png")
    return rgb, depth


def check_geometry():
    cam = ra.CameraIntrinsics(60.0, 60.0, 31.5, 23.5, W, H)
    u, v = cam.project([0.1, -0.2, 2.0])
    back = cam.backproject(u, v, 2.0)
    assert max(abs(a - b) for a, b in zip(back, [0.1, -0.2, 2.0])) < 1e-12
    half = [math.cos(math.pi / 8), 0.0, 0.0, math.sin(math.pi / 8)]
    q = ra.slerp([1.0, 0.0, 0.0, 0.0], [math.cos(math.pi / 4), 0.0, 0.0, math.sin(math.pi / 4)], 0.5)
    assert max(abs(a - b) for a, b in zip(q, half)) < 1e-12
    return cam


def check_tracks():
    track = ra.BoxTrack(1, "chair")
    track.insert_keyframe(ra.Box3D(1, "chair", 0, [0.0, 0.0, 3.0], [0.5, 0.5, 0.5]))
    track.insert_keyframe(ra.Box3D(1, "chair", 10, [1.0, 0.0, 3.0], [0.5, 0.5, 0.5]))
    dense = track.interpolate(mode="linear")
    assert len(dense) == 11
    assert abs(dense[5].center[0] - 0.5) < 1e-12
    assert len(dense[0].corners()) == 8
    try:
        ra.Box3D(1, "chair", 0, [0.0, 0.0, 3.0], [-1.0, 0.5, 0.5])
    except ra.AnnotationError as e:
        assert str(e).startswith("NonPositiveSize"), e
    else:
        raise AssertionError("negative size accepted")
    return track


def check_segmentation():
    img = np.zeros((H, W, 3), np.uint8)
    img[:] = (20, 40, 200)
    img[12:36, 20:44] = (220, 30, 30)
    mask, energy = ra.grabcut(img.tobytes(), W, H, (16, 8, 48, 40), iterations=5, padding=4)
    truth = np.zeros((H, W), bool)
    truth[12:36, 20:44] = True
    got = np.array(mask)
    assert got.shape == (H, W)
    score = ra.mask_iou(got.tolist(), truth.tolist())
    assert score > 0.95, score
    assert all(b <= a + 1e-6 * abs(a) for a, b in zip(energy, energy[1:])), energy


def check_project(cam, track):
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        rgb, depth = make_frames(root, 11)
        project = ra.Project.create(root, rgb, depth, cam)
        project.put_track(track)
        project.save()

        reloaded = ra.Project.load(root)
        assert reloaded.frame_count == 11 and reloaded.track_ids() == [1]
        csv = Path(reloaded.export_boxes(mode="linear")).read_text().splitlines()
        assert len(csv) == 12, len(csv)

        user = reloaded.annotation_set_json()
        report = json.loads(ra.evaluate(user, user))
        assert report["boxes"]["ate"] == 0.0

        try:
            reloaded.track(99)
        except KeyError:
            pass
        else:
            raise AssertionError("missing track returned")

        assert reloaded.undistort() == 11
        assert (root / "frames_undistorted" / "rgb" / "000000.png").exists()


def main():
    cam = check_geometry()
    track = check_tracks()
    check_segmentation()
    check_project(cam, track)
    print("python smoke test: OK")


if __name__ == "__main__":
    main()
