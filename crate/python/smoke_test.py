"""Smoke test for the Python extension.

Build it first:

    cargo build -p autodse-py --features extension-module

The script imports ``autodse`` from the path, or else loads the most
recently built library from the cargo target directory.
"""

import importlib.machinery
import importlib.util
import json
import pathlib
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_autodse():
    try:
        import autodse

        return autodse
    except ImportError:
        pass
    libs = [ROOT / "target" / p / "libautodse_py.so" for p in ("release", "debug")]
    libs = sorted((l for l in libs if l.exists()), key=lambda l: l.stat().st_mtime, reverse=True)
    for lib in libs[:1]:
        loader = importlib.machinery.ExtensionFileLoader("autodse", str(lib))
        spec = importlib.util.spec_from_loader("autodse", loader)
        module = importlib.util.module_from_spec(spec)
        loader.exec_module(module)
        sys.modules["autodse"] = module
        return module
    sys.exit("autodse extension not found; build crates/py first")


def main():
    ad = load_autodse()

    assert abs(ad.util_penalty([0.5]) - 4.0) < 1e-9
    assert abs(ad.finite_difference(-5.0, 10.0) + 0.5) < 1e-9
    assert ad.finite_difference(-5.0, 0.0) == "pure_gain"

    text = (
        "loop: L\n"
        "#pragma ACCEL PIPELINE mode=auto{ options: P1=[x for x in [off,cg,fg]]; default: off }\n"
        "#pragma ACCEL PARALLEL factor=auto{ options: P2=[x for x in [1,2] if P1!=cg]; default: 1 }\n"
    )
    ds = ad.DesignSpace.parse(text)
    assert len(ds) == 2 and ds.params() == ["P1", "P2"]
    assert ds.size()["grid_points"] == 6
    assert not ds.is_valid({"P1": "cg", "P2": 2})
    assert ds.options("P2", {"P1": "fg", "P2": 1}) == [1, 2]
    assert ad.DesignSpace.parse(ds.to_text()).to_text() == ds.to_text()
    try:
        ad.DesignSpace.parse("loop: L\n#pragma ACCEL @")
        raise AssertionError("malformed space accepted")
    except ValueError as e:
        assert "2:15" in str(e), e

    kernel = ad.KernelModel.load(ROOT / "models" / "gemm.kernel")
    ev = ad.MockEvaluator(kernel)
    default = ev.space.default_config()
    r = ev.evaluate(default)
    assert r["status"] == "OK" and r["cycles"] > 0, r

    best = ev.explore("bottleneck", max_evals=100)
    assert best["feasible"] and best["best_cycles"] < r["cycles"]
    assert best["evaluations"] <= 100
    cd = ev.explore("cd", max_evals=100)
    print(f"gemm: default {r['cycles']}, bottleneck {best['best_cycles']}, cd {cd['best_cycles']}")

    with tempfile.TemporaryDirectory() as out:
        report = ad.run(str(ROOT / "models" / "stencil.kernel"), out, threads=2, max_evals=80, seed=1)
        on_disk = json.loads((pathlib.Path(out) / "report.json").read_text())
        assert report == on_disk
        print(f"stencil: best {report['best']['cycles']} cycles in partition {report['best']['partition']}")

    print("smoke test passed")


if __name__ == "__main__":
    main()
