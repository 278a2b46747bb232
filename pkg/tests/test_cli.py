import subprocess
import sys

import numpy as np
import pytest

from oracles import scalar_chan_vese
from mvseg import io as mio
from mvseg import levelset as ls
from mvseg.cli import main
from mvseg.image import ManifoldImage, gradient_magnitude
from mvseg.synthetic import region_mask
from mvseg.texture import texture_to_mvi


def run(*argv):
    return main([str(a) for a in argv])


def test_gen_writes_mvi_mask_and_manifest(tmp_path):
    out = tmp_path / "s2.mvi"
    assert run("gen", "--kind", "s2", "--height", 64, "--width", 64,
               "--shape", "circle:32,32,16", "--out", out) == 0
    img = mio.read_mvi(out)
    mask = mio.read_mask(tmp_path / "s2_mask.pgm")
    np.testing.assert_array_equal(mask, region_mask(64, 64, ls.Circle(32, 32, 16)))
    assert img.shape == (64, 64)
    manifest = mio.read_manifest(tmp_path / "s2_manifest.txt")
    assert manifest["kind"] == "s2" and manifest["seed"] == "0"


def test_gen_is_deterministic(tmp_path):
    for name in ("a", "b"):
        assert run("gen", "--kind", "so3", "--noise", 0.2, "--seed", 9, "--out", tmp_path / f"{name}.mvi") == 0
    assert (tmp_path / "a.mvi").read_bytes() == (tmp_path / "b.mvi").read_bytes()
    assert (tmp_path / "a_mask.pgm").read_bytes() == (tmp_path / "b_mask.pgm").read_bytes()


def test_gen_rejects_point_off_manifold(tmp_path, capsys):
    code = run("gen", "--kind", "s2", "--inside", "1,1,1", "--out", tmp_path / "x.mvi")
    assert code == 2
    assert "--inside" in capsys.readouterr().err
    assert not (tmp_path / "x.mvi").exists()


def test_usage_errors_exit_2(tmp_path):
    with pytest.raises(SystemExit) as info:
        run("gen", "--out", tmp_path / "x.mvi")  # missing --kind
    assert info.value.code == 2
    assert run("gen", "--kind", "torus", "--out", tmp_path / "x.mvi") == 2


def test_grad_matches_library(tmp_path):
    run("gen", "--kind", "spd:2", "--noise", 0.1, "--out", tmp_path / "p.mvi")
    assert run("grad", "--in", tmp_path / "p.mvi", "--out", tmp_path / "g.pgm") == 0
    raw = np.load(tmp_path / "g.npy")
    np.testing.assert_array_equal(raw, gradient_magnitude(mio.read_mvi(tmp_path / "p.mvi")))
    assert mio.read_pgm_u8(tmp_path / "g.pgm").max() == 255


def test_grad_of_constant_image_is_zero(tmp_path):
    run("gen", "--kind", "s1", "--shape", "rect:0,0,63,63", "--out", tmp_path / "c.mvi")
    assert run("grad", "--in", tmp_path / "c.mvi", "--out", tmp_path / "g.pgm") == 0
    assert mio.read_pgm_u8(tmp_path / "g.pgm").max() == 0


def test_grad_of_ramp_is_uniform_inside(tmp_path):
    ramp = np.tile(np.linspace(0, 1, 20)[:, None], (1, 16))
    mio.write_pgm(ramp, tmp_path / "r.pgm")
    assert run("grad", "--in-pgm", tmp_path / "r.pgm", "--out", tmp_path / "g.pgm") == 0
    raw = np.load(tmp_path / "g.npy")
    assert raw[1:-1, 1:-1].min() > 0
    assert np.ptp(raw[1:-1, 1:-1]) < 1 / 255 + 1e-12


def test_cv_on_noise_free_spd(tmp_path):
    run("gen", "--kind", "spd:3", "--height", 40, "--width", 40, "--shape", "rect:10,10,29,29",
        "--out", tmp_path / "p.mvi")
    code = run("cv", "--in", tmp_path / "p.mvi", "--init", "circle:24,24,9",
               "--out-prefix", tmp_path / "run/cv", "--snapshot-every", 20)
    assert code in (0, 3)
    mask = mio.read_mask(tmp_path / "run/cv_mask.pgm")
    truth = mio.read_mask(tmp_path / "p_mask.pgm")
    assert ls.dice(mask, truth) >= 0.99
    manifest = mio.read_manifest(tmp_path / "run/cv_manifest.txt")
    assert manifest["converged"] == ("1" if code == 0 else "0")
    header = (tmp_path / "run/cv_energy.csv").read_text().splitlines()[0]
    assert header == "iter,length,area,data_in,data_out,total"
    assert (tmp_path / "run/cv_snap_00020.pgm").exists()
    contours = mio.read_contours(tmp_path / "run/cv_contours.txt")
    assert len(contours) >= 1


def test_cv_from_pgm_matches_scalar_chan_vese(tmp_path):
    rng = np.random.default_rng(3)
    x, y = np.meshgrid(np.arange(40.0), np.arange(40.0), indexing="ij")
    gray = np.clip(0.3 + 0.4 * (np.hypot(x - 20, y - 20) < 9) + 0.05 * rng.standard_normal((40, 40)), 0, 1)
    mio.write_pgm(gray, tmp_path / "d.pgm")
    run("cv", "--in-pgm", tmp_path / "d.pgm", "--init", "circle:18,22,12", "--max-iters", 150,
        "--out-prefix", tmp_path / "cv")
    quantized = mio.read_pgm(tmp_path / "d.pgm")
    ref, _ = scalar_chan_vese(quantized, ls.init_shape(40, 40, ls.Circle(18, 22, 12)), max_iters=150)
    assert ls.dice(mio.read_mask(tmp_path / "cv_mask.pgm"), ref) >= 0.999


def test_gac_on_constant_image(tmp_path):
    mio.write_pgm(np.full((32, 32), 0.5), tmp_path / "c.pgm")
    code = run("gac", "--in-pgm", tmp_path / "c.pgm", "--init", "circle:16,16,10", "--max-iters", 60,
               "--out-prefix", tmp_path / "g")
    mask = mio.read_mask(tmp_path / "g_mask.pgm")
    # no edges to stop on: either the run hits max iterations or the contour has shrunk
    assert code == 3 or mask.sum() < (ls.init_shape(32, 32, ls.Circle(16, 16, 10)) < 0).sum()


def test_solver_rejects_bad_init(tmp_path, capsys):
    run("gen", "--kind", "s2", "--height", 20, "--width", 20, "--shape", "circle:10,10,4",
        "--out", tmp_path / "a.mvi")
    code = run("cv", "--in", tmp_path / "a.mvi", "--init", "circle:10,10,15", "--out-prefix", tmp_path / "x")
    assert code == 2
    assert "--init" in capsys.readouterr().err
    assert run("gac", "--in", tmp_path / "a.mvi", "--init", "oval:1", "--out-prefix", tmp_path / "x") == 2


def test_format_error_exit_4(tmp_path):
    (tmp_path / "bad.mvi").write_bytes(b"NOPE" + bytes(20))
    assert run("gac", "--in", tmp_path / "bad.mvi", "--init", "circle:5,5,2", "--out-prefix", tmp_path / "x") == 4
    (tmp_path / "bad.pgm").write_bytes(b"P2\n1 1\n255\n0")
    assert run("texture", "--in-pgm", tmp_path / "bad.pgm", "--out", tmp_path / "t.mvi") == 4


def test_texture_matches_library_and_feeds_cv(tmp_path):
    assert run("gen-texture", "--height", 40, "--width", 40, "--out", tmp_path / "t.pgm") == 0
    assert run("texture", "--in-pgm", tmp_path / "t.pgm", "--patch", 3, "--window", 7,
               "--out", tmp_path / "t.mvi") == 0
    from mvseg.texture import TextureFeatureParams

    expected = texture_to_mvi(mio.read_pgm(tmp_path / "t.pgm"), TextureFeatureParams(3, 7))
    got = mio.read_mvi(tmp_path / "t.mvi")
    assert got.data.tobytes() == expected.data.tobytes()
    code = run("cv", "--in", tmp_path / "t.mvi", "--init", "circle:20,28,8", "--max-iters", 5,
               "--mean-every", 5, "--out-prefix", tmp_path / "tcv")
    assert code in (0, 3)


def test_texture_of_constant_image_is_constant(tmp_path):
    mio.write_pgm(np.full((16, 16), 0.5), tmp_path / "c.pgm")
    assert run("texture", "--in-pgm", tmp_path / "c.pgm", "--ridge", "0.001", "--out", tmp_path / "c.mvi") == 0
    data = mio.read_mvi(tmp_path / "c.mvi").data
    assert np.all(data == data[0, 0])
    assert run("texture", "--in-pgm", tmp_path / "c.pgm", "--ridge", "lots", "--out", tmp_path / "d.mvi") == 2


def test_render_outputs(tmp_path):
    run("gen", "--kind", "spd:3", "--height", 8, "--width", 8, "--shape", "rect:2,2,5,5",
        "--out", tmp_path / "p.mvi")
    assert run("render", "--in", tmp_path / "p.mvi", "--mask", tmp_path / "p_mask.pgm",
               "--out-ppm", tmp_path / "p.ppm", "--cell", 7) == 0
    rgb = mio.read_ppm(tmp_path / "p.ppm")
    assert rgb.shape == (56, 56, 3)
    assert run("render", "--in", tmp_path / "p.mvi", "--mask", tmp_path / "p_mask.pgm",
               "--out-ppm", tmp_path / "q.ppm", "--cell", 7) == 0
    assert (tmp_path / "p.ppm").read_bytes() == (tmp_path / "q.ppm").read_bytes()
    mio.write_mask(np.zeros((3, 3), bool), tmp_path / "small.pgm")
    assert run("render", "--in", tmp_path / "p.mvi", "--mask", tmp_path / "small.pgm",
               "--out-ppm", tmp_path / "r.ppm") == 2


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "mvseg.cli", "gen", "--kind", "s1", "--height", "8",
                           "--width", "8", "--shape", "rect:2,2,5,5", "--out", str(tmp_path / "a.mvi")],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "mvseg.cli", "gen"], capture_output=True, text=True)
    assert proc.returncode == 2


def test_threads_flag_is_bit_exact(tmp_path):
    run("gen", "--kind", "s2", "--height", 40, "--width", 40, "--shape", "rect:10,10,29,29",
        "--noise", 0.1, "--out", tmp_path / "s.mvi")
    for threads in (1, 3):
        run("cv", "--threads", threads, "--in", tmp_path / "s.mvi", "--init", "circle:20,20,12",
            "--max-iters", 30, "--out-prefix", tmp_path / f"t{threads}")
    assert (tmp_path / "t1_mask.pgm").read_bytes() == (tmp_path / "t3_mask.pgm").read_bytes()
    assert (tmp_path / "t1_energy.csv").read_bytes() == (tmp_path / "t3_energy.csv").read_bytes()


def test_render_manifest_does_not_clobber_solver_manifest(tmp_path):
    run("gen", "--kind", "s1", "--height", 16, "--width", 16, "--shape", "rect:4,4,11,11",
        "--out", tmp_path / "a.mvi")
    run("cv", "--in", tmp_path / "a.mvi", "--init", "circle:8,8,5", "--max-iters", 5,
        "--out-prefix", tmp_path / "seg")
    assert run("render", "--in", tmp_path / "a.mvi", "--mask", tmp_path / "seg_mask.pgm",
               "--out-ppm", tmp_path / "seg.ppm") == 0
    assert mio.read_manifest(tmp_path / "seg_manifest.txt")["command"] == "cv"
    assert mio.read_manifest(tmp_path / "seg_render_manifest.txt")["command"] == "render"
