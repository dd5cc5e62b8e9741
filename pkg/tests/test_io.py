import json

import numpy as np
import pytest

from vorwave.dispersion import WavePhysics
from vorwave.fields import TorusField
from vorwave.io import SNAPSHOT_FORMAT, SnapshotError, load_snapshot, read_field_csv, save_snapshot, write_field_csv
from vorwave.nonres import SiteSelection
from vorwave.solver import linear_seed


def random_embedding(seed=0, depth=1.7):
    rng = np.random.default_rng(seed)
    p = WavePhysics(g=1.1, kappa=0.9, gamma=-0.4, depth=depth)
    emb = linear_seed(p, SiteSelection((1, 3), (1, -1)), n_phi=4, n_modes=10, epsilon=3e-3)
    return emb.copy(
        theta_sin=rng.normal(size=emb.theta_sin.shape),
        i_cos=rng.normal(size=emb.i_cos.shape),
        z_normal=rng.normal(size=emb.z_normal.shape) / 3.0,
        omega=emb.omega + rng.normal(size=2) * 1e-5,
    )


@pytest.mark.parametrize("depth", [1.7, float("inf")])
def test_snapshot_round_trip_is_bit_exact(tmp_path, depth):
    emb = random_embedding(depth=depth)
    jpath, cpath = save_snapshot(emb, tmp_path / "torus", extra={"note": "x"})
    assert json.loads(jpath.read_text())["format"] == SNAPSHOT_FORMAT
    back = load_snapshot(cpath)  # either file names the snapshot
    for name in ("xi", "omega", "alpha", "theta_sin", "i_cos", "z_normal"):
        np.testing.assert_array_equal(getattr(back, name), getattr(emb, name))
    assert back.epsilon == emb.epsilon and back.physics == emb.physics and back.sites == emb.sites
    save_snapshot(back, tmp_path / "again")
    assert (tmp_path / "again.csv").read_bytes() == cpath.read_bytes()


def test_csv_rows_carry_consistent_wavenumbers(tmp_path):
    emb = random_embedding()
    _, cpath = save_snapshot(emb, tmp_path / "t")
    lines = cpath.read_text().splitlines()
    assert lines[0] == "ell_1,ell_2,j,re,im"
    for line in lines[1:]:
        l1, l2, j, _, im = line.split(",")
        assert int(j) == -(int(l1) - 3 * int(l2)) and im == "0.0"


def _corrupt(tmp_path, fn):
    jpath, cpath = save_snapshot(random_embedding(), tmp_path / "t")
    fn(jpath, cpath)
    with pytest.raises(SnapshotError):
        load_snapshot(jpath)


def test_bad_snapshots_are_rejected(tmp_path):
    def bad_format(j, c):
        d = json.loads(j.read_text())
        d["format"] = "other/9"
        j.write_text(json.dumps(d))

    def wrong_j(j, c):
        lines = c.read_text().splitlines()
        parts = lines[1].split(",")
        parts[2] = str(int(parts[2]) + 1)
        c.write_text("\n".join([lines[0], ",".join(parts), *lines[2:]]) + "\n")

    def imaginary(j, c):
        lines = c.read_text().splitlines()
        c.write_text("\n".join([lines[0], lines[1][: lines[1].rfind(",")] + ",1e-3", *lines[2:]]) + "\n")

    def outside(j, c):
        c.write_text(c.read_text() + "9,9,-18,1.0,0.0\n")

    def header(j, c):
        c.write_text("a,b,c\n")

    def garbage(j, c):
        j.write_text("{not json")

    def missing(j, c):
        c.unlink()

    for fn in (bad_format, wrong_j, imaginary, outside, header, garbage, missing):
        _corrupt(tmp_path / fn.__name__, fn)


def test_field_csv_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    c = rng.normal(size=(5, 5, 9)) + 1j * rng.normal(size=(5, 5, 9))
    c = 0.5 * (c + np.conj(c[::-1, ::-1, ::-1]))
    u = TorusField(2, 2, 4, c)
    back = read_field_csv(write_field_csv(u, tmp_path / "u.csv"))
    assert (back.nu, back.n_phi, back.n_modes) == (2, 2, 4)
    np.testing.assert_array_equal(back.coeffs, u.coeffs)
    (tmp_path / "bad.csv").write_text("x,y\n")
    with pytest.raises(SnapshotError):
        read_field_csv(tmp_path / "bad.csv")
