"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (bypassing pytest capture) with the measured quantity.

Criteria and tolerances are fixed here; nothing is deferred to later
calibration. The street-scene thresholds (Dirichlet ratio <= 20%, strong
original contrast >= 0.05, diffused visibility > 1e-3) were calibrated on
the frozen fixture before the suite was sealed.
"""

import sys

import numpy as np

from eedkit import (
    DiffusionParams,
    charbonnier,
    convolve_gaussian,
    diffusion_tensor,
    dirichlet_energy,
    divergence_step,
    eed_run,
    energy,
    gaussian_kernel,
    get_preset,
    smooth_tensor,
    spatial_gradient,
    structure_tensor,
)
from eedkit.images import save_image
from eedkit.kernels import convolve_plane
from eedkit.metrics import (
    acc_rel,
    boundary_visibilities,
    class_iou,
    connected_components,
    s_iou,
)
from eedkit.pipeline import DatasetJob, run_job
from eedkit.synthetic import street_scene, textured_image

import conftest
from conftest import assemble_update_matrix, random_psd_field, random_spd_field
from test_metrics import flood_fill_components, oracle_confusion


def report(name: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line, file=sys.__stdout__, flush=True)
    assert ok, line


def with_steps(preset_name: str, **overrides) -> DiffusionParams:
    base = get_preset(preset_name).to_dict()
    base["snapshots"] = []
    base.update(overrides)
    return DiffusionParams.from_dict(base)


def test_charbonnier_exactness():
    errs = []
    for kappa in (0.1, 1.0 / 15.0):
        errs.append(abs(charbonnier(0.0, kappa) - 1.0))
        errs.append(abs(charbonnier(3.0 * kappa * kappa, kappa) - 0.5))
    report(
        "charbonnier exactness",
        max(errs) == 0.0,
        f"max |g - expected| = {max(errs):.1e} for kappa in {{0.1, 1/15}}",
    )


def test_conservation_1000_steps():
    rng = np.random.default_rng(101)
    img = rng.random((64, 64, 3))
    params = with_steps("P_mild", steps=1000)
    _, out = eed_run(img, params)[-1]
    drift = max(
        abs(out[..., c].mean() - img[..., c].mean()) / abs(img[..., c].mean())
        for c in range(3)
    )
    report(
        "conservation (1000 steps P_mild, 64x64x3)",
        drift <= 1e-9,
        f"max relative channel-mean drift = {drift:.3e} (tol 1e-9)",
    )


def test_isotropic_limit_oracle():
    rng = np.random.default_rng(202)
    img = rng.random((64, 64))
    params = DiffusionParams(
        kappa=1e6, presmooth_sigma=3.0, presmooth_kernel=9, tau=0.2, steps=250
    )
    _, out = eed_run(img, params)[-1]
    ref = convolve_gaussian(img, gaussian_kernel(10.0, 81))
    interior = (slice(5, -5), slice(5, -5))
    err = float(np.abs(out[interior + (0,)] - ref[interior]).max())
    report(
        "isotropic limit (kappa=1e6, T=50 vs Gaussian sigma=10)",
        err <= 1e-2,
        f"interior max abs error = {err:.3e} (tol 1e-2)",
    )


def test_stencil_matrix_oracle():
    rng = np.random.default_rng(303)
    worst = 0.0
    for _ in range(100):
        u = rng.random((8, 8))
        d = random_spd_field(8, 8, rng)
        m = assemble_update_matrix(d, tau=0.2)
        ref = (m @ u.ravel()).reshape(8, 8)
        out = divergence_step(u, d, 0.2)
        worst = max(worst, float(np.abs(out - ref).max()))
    report(
        "stencil vs sparse assembly (100 random 8x8)",
        worst <= 1e-12,
        f"max abs diff = {worst:.3e} (tol 1e-12)",
    )


def test_energy_descent_200_steps():
    params = get_preset("P_strong")
    pre = gaussian_kernel(params.presmooth_sigma, params.presmooth_kernel)
    orient = gaussian_kernel(params.orient_sigma, params.orient_kernel)
    u = textured_image(64, 64, seed=11)
    worst_uptick = -np.inf
    snap_energies = [dirichlet_energy(u)]
    for _ in range(200):
        u_sigma = convolve_gaussian(u, pre)
        d = diffusion_tensor(
            smooth_tensor(structure_tensor(spatial_gradient(u_sigma)), orient),
            params.kappa,
        )
        e_before = energy(u, d)
        u = divergence_step(u, d, params.tau)
        worst_uptick = max(worst_uptick, energy(u, d) - e_before)
        snap_energies.append(dirichlet_energy(u))
    monotone = bool(np.all(np.diff(snap_energies) <= 1e-10))
    report(
        "energy descent (200 steps P_strong, frozen D)",
        worst_uptick <= 1e-8 and monotone,
        f"worst energy uptick = {worst_uptick:.3e} (tol 1e-8), "
        f"snapshot Dirichlet monotone = {monotone}",
    )


def test_symmetry_equivariance():
    rng = np.random.default_rng(404)
    img = rng.random((48, 48, 3))
    params = with_steps("P_mild", steps=64)
    _, base = eed_run(img, params)[-1]
    worst = 0.0
    for transform in (
        lambda x: np.ascontiguousarray(x[:, ::-1]),
        lambda x: np.ascontiguousarray(x[::-1]),
        lambda x: np.ascontiguousarray(np.rot90(x, axes=(0, 1))),
    ):
        _, moved = eed_run(transform(img), params)[-1]
        worst = max(worst, float(np.abs(moved - transform(base)).max()))
    report(
        "symmetry equivariance (t=64 P_mild, flips + rot90)",
        worst <= 1e-6,
        f"max abs commutator = {worst:.3e} (tol 1e-6)",
    )


def test_orientation_smoothing_psd_and_componentwise():
    rng = np.random.default_rng(505)
    k = gaussian_kernel(3.0, 9)
    worst_diff = 0.0
    worst_det = np.inf
    for _ in range(20):
        t = random_psd_field(16, 16, rng)
        s = smooth_tensor(t, k)
        worst_det = min(worst_det, float(s.determinant().min()))
        for plane_in, plane_out in ((t.a, s.a), (t.b, s.b), (t.c, s.c)):
            worst_diff = max(
                worst_diff, float(np.abs(plane_out - convolve_plane(plane_in, k)).max())
            )
    report(
        "orientation smoothing (PSD + component-wise oracle)",
        worst_diff <= 1e-12 and worst_det >= -1e-10,
        f"component diff = {worst_diff:.3e} (tol 1e-12), min det = {worst_det:.3e}",
    )


def test_metrics_oracles():
    rng = np.random.default_rng(606)

    # class_iou against brute-force confusion counts, 50 random pairs
    iou_exact = True
    for _ in range(50):
        gt = rng.integers(0, 3, (16, 16))
        pred = rng.integers(0, 3, (16, 16))
        rep = class_iou(pred, gt, classes=[0, 1, 2])
        tp, fp, fn = oracle_confusion(pred, gt, [0, 1, 2])
        for c in (0, 1, 2):
            denom = tp[c] + fp[c] + fn[c]
            if denom == 0:
                iou_exact &= c in rep.absent_classes
            else:
                iou_exact &= rep.class_iou[c] == tp[c] / denom

    # connected components against flood fill
    cc_exact = True
    for _ in range(10):
        mask = rng.integers(0, 3, (16, 16))
        got = {
            (s.class_id, frozenset(map(tuple, s.pixels)))
            for s in connected_components(mask)
        }
        cc_exact &= got == set(flood_fill_components(mask))

    # hand-enumerated s_iou fixture: 2 of 4 segment pixels hit, 2 outside
    gt = np.zeros((6, 6), dtype=np.int64)
    gt[2:4, 2:4] = 1
    seg = next(s for s in connected_components(gt) if s.class_id == 1)
    pred = np.zeros((6, 6), dtype=np.int64)
    pred[2:4, 1:3] = 1
    siou_exact = s_iou(pred, seg) == 2.0 / 6.0 and s_iou(gt, seg) == 1.0

    acc_exact = acc_rel(0.9, 0.45) == 0.5 and acc_rel(0.7312, 0.7312) == 1.0

    report(
        "metrics oracles (class_iou / components / s_iou / acc_rel)",
        iou_exact and cc_exact and siou_exact and acc_exact,
        f"class_iou exact = {iou_exact}, components exact = {cc_exact}, "
        f"s_iou exact = {siou_exact}, acc_rel exact = {acc_exact}",
    )


def test_pipeline_determinism_and_idempotence(tmp_path):
    rng = np.random.default_rng(707)
    input_root = tmp_path / "in"
    for i in range(10):
        save_image(rng.random((12, 14, 3)), input_root / f"city/frame_{i:02d}.png")
    params = DiffusionParams(
        kappa=0.1, presmooth_sigma=1.0, presmooth_kernel=3, steps=3, snapshots=(3,)
    )

    def job(out, workers):
        return DatasetJob(
            input_root=input_root,
            output_root=tmp_path / out,
            params=params,
            preset_name="fast",
            workers=workers,
        )

    _, first = run_job(job("out1", 1))
    _, second = run_job(job("out1", 1))
    idempotent = second.processed == 0 and second.skipped == 10 and second.failed == 0

    run_job(job("out4", 4))
    files1 = sorted((tmp_path / "out1").rglob("*.png"))
    files4 = sorted((tmp_path / "out4").rglob("*.png"))
    identical = [f.relative_to(tmp_path / "out1") for f in files1] == [
        f.relative_to(tmp_path / "out4") for f in files4
    ] and all(a.read_bytes() == b.read_bytes() for a, b in zip(files1, files4))

    report(
        "pipeline determinism + idempotence (10 images, workers 1 vs 4)",
        first.processed == 10 and idempotent and identical,
        f"first run processed = {first.processed}, rerun skipped = {second.skipped}, "
        f"bit-identical across workers = {identical}",
    )


def test_street_scene_texture_removed_shapes_survive():
    img, mask = street_scene(96, 128, seed=0)
    params = with_steps("P_strong", steps=5792)
    _, out = eed_run(img, params)[-1]

    e_ratio = dirichlet_energy(out) / dirichlet_energy(img)

    segments = connected_components(mask)
    vis_orig = boundary_visibilities(img, segments)
    vis_eed = boundary_visibilities(out, segments)
    strong = [ve for vo, ve in zip(vis_orig, vis_eed) if vo >= 0.05]
    mean_vis = float(np.mean(strong))

    report(
        "street scene: texture removed, shapes survive (P_strong t=5792)",
        e_ratio <= 0.20 and len(strong) > 0 and mean_vis > 1e-3,
        f"dirichlet ratio = {e_ratio:.4%} (tol 20%), strong-contrast segments = "
        f"{len(strong)}, mean diffused visibility = {mean_vis:.4f} (> 1e-3)",
    )
