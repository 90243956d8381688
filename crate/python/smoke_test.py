"""Smoke test for the `schottky` extension module."""

import sys

import schottky


def main() -> int:
    names = schottky.zoo_names()
    assert "bring" in names, names

    b, meta = schottky.zoo_matrix("rm_tau", 1 + 1j)
    assert meta["genus"] == 4 and b.genus == 4
    print(b)

    z = [0.1 + 0.05j, -0.2j, 0.3, 0.0]
    v0, grad = schottky.theta(z, b)
    v1, _ = schottky.theta([-x for x in z], b)
    assert abs(v0 - v1) < 1e-12, (v0, v1)
    assert len(grad) == 4
    _, odd_grad = schottky.theta([0j] * 4, b, p=[0.5, 0, 0, 0], q=[0.5, 0, 0, 0])
    assert any(abs(x) > 1e-6 for x in odd_grad)

    exact = abs(schottky.schottky_igusa(b))
    off = abs(schottky.schottky_igusa(b.perturb_diag(0.1)))
    print(f"|sigma| exact {exact:.2e}, perturbed {off:.2e}")
    assert exact < 1e-12 < off

    red, t = b.reduce()
    assert len(t) == 8 and red.y_min >= (0.75 ** 0.5) - 1e-9

    v = schottky.check(b)
    print(f"exact: in_locus={v['in_locus']} delta={v['best_delta']:.2e}")
    assert v["in_locus"]
    v = schottky.check(b.perturb_diag(0.1))
    print(f"perturbed: in_locus={v['in_locus']} delta={v['best_delta']:.2e}")
    assert not v["in_locus"]

    rows = schottky.sweep(b, [0.0, 1e-12])
    assert rows[0]["best_residual"] <= 1e-12

    try:
        schottky.RiemannMatrix([[1j, 0.1], [0, 1j]])
    except ValueError:
        pass
    else:
        raise AssertionError("asymmetric matrix accepted")
    try:
        schottky.zoo_matrix("nope")
    except KeyError:
        pass
    else:
        raise AssertionError("unknown name accepted")
    print("ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
