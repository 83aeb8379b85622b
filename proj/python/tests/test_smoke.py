"""End-to-end smoke tests for the python bindings."""

import os
import tempfile

import numpy as np

import fstk


def test_sthosvd_round_trip():
    rng = np.random.default_rng(7)
    a = rng.standard_normal((4, 1))
    b = rng.standard_normal((5, 1))
    c = rng.standard_normal((3, 1))
    u = np.einsum("il,jl,kl->ijk", a, b, c)
    # The error certificate bottoms out near sqrt(machine eps), so the rank
    # collapse on separable data is checked at a moderate tolerance.
    dec = fstk.sthosvd(u, 1e-6)
    assert dec.ranks == [1, 1, 1]
    back = fstk.reconstruct(dec)
    assert np.linalg.norm(back - u) <= 1e-10 * np.linalg.norm(u)
    assert dec.achieved_error <= 1e-6


def test_basis_eval():
    leg = fstk.BasisSpec.legendre(2)
    v = fstk.eval_basis(leg, 1.0)
    assert np.allclose(v, [1.0, np.sqrt(3.0), np.sqrt(5.0)], atol=1e-12)
    haar = fstk.BasisSpec.wavelet(1, 0)
    w = fstk.eval_basis(haar, -0.5)
    assert np.allclose(w, [1.0, -1.0], atol=1e-12)


def test_assemble_evaluate_save_load():
    nodes = np.linspace(0.0, 1.0, 33)
    x, y = np.meshgrid(nodes, nodes, indexing="ij")
    u = (1.0 + 0.5 * np.cos(np.pi * x)) * (2.0 - y)
    dec = fstk.sthosvd(np.asfortranarray(u), 1e-8)
    cands = [[fstk.BasisSpec.legendre(10), fstk.BasisSpec.wavelet(3, 1)]] * 2
    model = fstk.assemble(dec, [list(nodes)] * 2, cands)
    pts = np.array([[0.25, 0.5], [0.75, 0.125]])
    vals = model.evaluate_batch(pts)
    truth = (1.0 + 0.5 * np.cos(np.pi * pts[:, 0])) * (2.0 - pts[:, 1])
    assert np.allclose(vals, truth, atol=1e-6)

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "model.fstk")
        model.save(path)
        again = fstk.load_model(path)
        assert np.array_equal(again.evaluate_batch(pts), vals)
        assert again.ranks == model.ranks
    assert model.storage()["coefficients"] > 0
    assert model.compression_ratio(len(nodes) ** 2) > 1.0


def test_reestimate_core_refines():
    rng = np.random.default_rng(3)
    nodes = np.linspace(0.0, 1.0, 17)
    x, y = np.meshgrid(nodes, nodes, indexing="ij")
    u = np.exp(-x) * (1.0 + y)
    dec = fstk.sthosvd(np.asfortranarray(u), 1e-6)
    cands = [[fstk.BasisSpec.legendre(8)]] * 2
    model = fstk.assemble(dec, [list(nodes)] * 2, cands)

    pts = rng.uniform(0.0, 1.0, size=(4000, 2))
    vals = np.exp(-pts[:, 0]) * (1.0 + pts[:, 1])
    new_model, info = fstk.reestimate_core(model, pts, vals, seed=1)
    assert info["sample_rows"] > np.prod(model.ranks)
    assert info["residual_after"] <= max(info["residual_before"], 1e-3)


def test_synth_and_interpolate():
    pts, vals = fstk.synth_field_cloud("smooth", 2, 6000, seed=5)
    grid = fstk.interpolate_to_grid(pts, vals, [20, 20], [0.0, 0.0], [1.0, 1.0])
    assert grid.shape == (20, 20)
    assert np.all(np.isfinite(grid))
    field = fstk.synth_field_grid("smooth", [20, 20], seed=5)
    assert field.shape == (20, 20)


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"ok {name}")
    print("python smoke tests passed")
