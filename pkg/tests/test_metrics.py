import numpy as np
import pytest

from oracles import brute_force_mpjpe

from camcond.errors import ShapeMismatch, ZeroBaseline
from camcond.geom import (CameraFrame, Extrinsics, Intrinsics, project,
                          unproject)
from camcond.metrics import (FundamentalMatrix, fundamental_from_cameras,
                             mpjpe, sampson_error)
from camcond.motion_fit import MotionSequence, Skeleton

from conftest import random_rotation, synthetic_motion


def make_cam(q, t, fx=120.0, fy=110.0, cx=40.0, cy=30.0):
    return CameraFrame(Intrinsics(fx, fy, cx, cy), Extrinsics(q, t), 80, 60)


def camera_pair(seed=0):
    rng = np.random.default_rng(seed)
    c1 = make_cam(random_rotation(rng), rng.normal(scale=0.3, size=3))
    c2 = make_cam(random_rotation(rng), rng.normal(scale=0.3, size=3) + 1.0)
    return c1, c2


def true_matches(c1, c2, n=100, seed=1):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        u, v = rng.uniform(5, 55, 2)
        d = rng.uniform(1.0, 6.0)
        p = unproject(c1, u, v, d)
        try:
            u2, v2, d2 = project(c2, p)
        except Exception:
            continue
        out.append((np.array([u, v, 1.0]), np.array([u2, v2, 1.0])))
    return out


class TestMpjpe:
    def seq(self, joints):
        return MotionSequence(joints, Skeleton.body18())

    def test_identical_sequences_zero(self):
        a = synthetic_motion(5)
        assert mpjpe(a, a) == 0.0

    def test_uniform_offset(self):
        a = synthetic_motion(4)
        b = self.seq(a.joints + np.array([3.0, 0.0, 4.0]))
        assert mpjpe(a, b) == pytest.approx(5.0, abs=1e-12)

    def test_matches_triple_loop_oracle(self):
        rng = np.random.default_rng(61)
        a = self.seq(rng.normal(size=(6, 18, 3)))
        b = self.seq(rng.normal(size=(6, 18, 3)))
        assert mpjpe(a, b) == pytest.approx(
            brute_force_mpjpe(a.joints, b.joints), rel=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(62)
        a = self.seq(rng.normal(size=(3, 18, 3)))
        b = self.seq(rng.normal(size=(3, 18, 3)))
        assert mpjpe(a, b) == mpjpe(b, a)

    def test_triangle_inequality(self):
        rng = np.random.default_rng(63)
        a = self.seq(rng.normal(size=(3, 18, 3)))
        b = self.seq(rng.normal(size=(3, 18, 3)))
        c = self.seq(rng.normal(size=(3, 18, 3)))
        assert mpjpe(a, c) <= mpjpe(a, b) + mpjpe(b, c) + 1e-12

    def test_root_alignment_removes_global_shift(self):
        rng = np.random.default_rng(64)
        a = self.seq(rng.normal(size=(4, 18, 3)))
        shifts = rng.normal(size=(4, 1, 3))
        b = self.seq(a.joints + shifts)
        assert mpjpe(a, b) > 0
        assert mpjpe(a, b, align_root=True) == pytest.approx(0.0, abs=1e-12)

    def test_root_alignment_custom_joint(self):
        rng = np.random.default_rng(65)
        a = self.seq(rng.normal(size=(2, 18, 3)))
        b = self.seq(a.joints + np.array([1.0, 2.0, 3.0]))
        assert mpjpe(a, b, align_root=True, root_joint=7) == pytest.approx(
            0.0, abs=1e-12)

    def test_shape_mismatch(self):
        a = synthetic_motion(3)
        b = synthetic_motion(4)
        with pytest.raises(ShapeMismatch):
            mpjpe(a, b)


class TestFundamental:
    def test_projection_pairs_lie_on_epipolar_lines(self):
        c1, c2 = camera_pair(2)
        F = fundamental_from_cameras(c1, c2)
        for x, xp in true_matches(c1, c2, 100, seed=3):
            assert abs(xp @ F.F @ x) < 1e-9

    def test_unit_frobenius_norm(self):
        c1, c2 = camera_pair(4)
        F = fundamental_from_cameras(c1, c2)
        assert np.linalg.norm(F.F) == pytest.approx(1.0, abs=1e-12)

    def test_rank_two(self):
        c1, c2 = camera_pair(5)
        F = fundamental_from_cameras(c1, c2)
        s = np.linalg.svd(F.F, compute_uv=False)
        assert s[2] < 1e-12

    def test_zero_baseline_rejected(self):
        rng = np.random.default_rng(66)
        q1, q2 = random_rotation(rng), random_rotation(rng)
        c = rng.normal(size=3)
        # same center, different orientation
        from camcond.geom import quat_to_matrix
        cam1 = make_cam(q1, -quat_to_matrix(q1) @ c)
        cam2 = make_cam(q2, -quat_to_matrix(q2) @ c)
        with pytest.raises(ZeroBaseline):
            fundamental_from_cameras(cam1, cam2)

    def test_shape_validation(self):
        with pytest.raises(ShapeMismatch):
            FundamentalMatrix(np.zeros((2, 3)))


class TestSampson:
    def test_exact_matches_give_zero(self):
        c1, c2 = camera_pair(6)
        F = fundamental_from_cameras(c1, c2)
        assert sampson_error(F, true_matches(c1, c2, 50, seed=7)) < 1e-12

    def test_direct_substitution(self):
        # F = diag-free skew so that Fx and the residual are tiny integers
        F = FundamentalMatrix(np.array([[0.0, 0, 0], [0, 0, -1.0], [0, 1.0, 0]]))
        x = np.array([0.0, 0.0, 1.0])    # Fx = (0, -1, 0)
        xp = np.array([0.0, 1.0, 1.0])   # F^T xp = (0, 1, -1); x'^T F x = -1
        # denominator: 0 + 1 + 0 + 1 = 2 -> error 1/2
        assert sampson_error(F, [(x, xp)]) == 0.5

    def test_scale_invariance_of_f(self):
        c1, c2 = camera_pair(8)
        F = fundamental_from_cameras(c1, c2)
        rng = np.random.default_rng(67)
        matches = [(np.array([*rng.uniform(0, 60, 2), 1.0]),
                    np.array([*rng.uniform(0, 60, 2), 1.0])) for _ in range(20)]
        e1 = sampson_error(F, matches)
        e2 = sampson_error(FundamentalMatrix(7.5 * F.F), matches)
        assert e1 == pytest.approx(e2, rel=1e-12)

    def test_monotone_under_noise(self):
        c1, c2 = camera_pair(9)
        F = fundamental_from_cameras(c1, c2)
        clean = true_matches(c1, c2, 200, seed=10)
        rng = np.random.default_rng(68)
        noise = rng.normal(size=(200, 2))
        errs = []
        for sigma in (0.5, 1.0, 2.0):
            noisy = [(x, xp + sigma * np.array([nx, ny, 0.0]))
                     for (x, xp), (nx, ny) in zip(clean, noise)]
            errs.append(sampson_error(F, noisy))
        assert errs[0] < errs[1] < errs[2]

    def test_empty_matches_rejected(self):
        c1, c2 = camera_pair(11)
        F = fundamental_from_cameras(c1, c2)
        with pytest.raises(ShapeMismatch):
            sampson_error(F, [])
