#!/usr/bin/env python3
"""Smoke test for the soundseek_py extension module.

Build the extension first:

    cargo build --release -p soundseek-python

then run this script from the repository root (or pass the repo root as the
first argument). It copies the built cdylib next to a temp import path under
the canonical module name and exercises the main types and operations.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

FAILURES = []


def check(name, condition, detail=""):
    status = "ok" if condition else "FAIL"
    print(f"  {name}: {status} {detail}")
    if not condition:
        FAILURES.append(name)


def locate_library(root: Path) -> Path:
    names = ["libsoundseek_py.so", "libsoundseek_py.dylib", "soundseek_py.dll"]
    candidates = []
    for profile in ("release", "debug"):
        for name in names:
            p = root / "target" / profile / name
            if p.exists():
                candidates.append(p)
    if not candidates:
        sys.exit(
            "extension not found; run `cargo build --release -p soundseek-python` first"
        )
    return max(candidates, key=lambda p: p.stat().st_mtime)


def main():
    root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parents[1]
    lib = locate_library(root)
    print(f"using {lib}")
    with tempfile.TemporaryDirectory() as tmp:
        suffix = ".pyd" if lib.suffix == ".dll" else ".so"
        shutil.copy(lib, Path(tmp) / f"soundseek_py{suffix}")
        sys.path.insert(0, tmp)
        import soundseek_py as ss

        print(f"imported soundseek_py {ss.__version__}")

        # Acoustic field: near field, far field, superposition.
        world = ss.AcousticWorld([(0.0, 0.0, 1e8)])
        near = world.intensity_at(0.5, 0.0)
        check("near-field intensity", abs(near - 1e8 / (4 * math.pi)) < 1e-3)
        far = world.intensity_at(10.0, 0.0)
        check("far-field intensity", abs(far - 1e8 / (4 * math.pi * 100)) < 1e-6)
        double = ss.AcousticWorld([(0.0, 0.0, 1e8), (0.0, 0.0, 1e8)])
        check("superposition", double.intensity_at(10.0, 0.0) == 2 * far)

        # Microphone array geometry and channel ordering.
        array = ss.MicrophoneArray(0.0, 0.0, 0.1)
        positions = array.positions()
        check("six channels", len(positions) == 6)
        check("channel 1 on +x", abs(positions[0][0] - 0.1) < 1e-12)
        east = ss.AcousticWorld([(50.0, 0.0, 1e8)])
        channels = array.channel_intensities(east)
        check("channel 1 loudest", max(channels) == channels[0])
        check("channel 4 quietest", min(channels) == channels[3])

        # Estimators: reset adoption and the product rule.
        g = ss.GaussianEstimate(1.0)
        check("reset variance is infinite", math.isinf(g.variance))
        g = g.update(2.0)
        check("first update adopts measurement", g.mean == 2.0 and g.variance == 1.0)
        g = g.update(4.0)
        check("precision-weighted fuse", abs(g.mean - 3.0) < 1e-12 and abs(g.variance - 0.5) < 1e-12)

        vm = ss.VonMisesEstimate(1.0).update(0.0).update(math.pi / 2)
        check("von Mises fuse", abs(vm.concentration - math.sqrt(2)) < 1e-12
              and abs(vm.mean - math.pi / 4) < 1e-12)

        # DoA / step operations.
        theta = ss.array_doa(list(channels), positions)
        check("array DoA east", abs(theta) < 1e-12)
        beta = 4.0 * math.sqrt(1e13)
        s = ss.array_step(list(channels), beta)
        check("array step ~31.79", abs(s - 31.79) < 0.01, f"(s = {s:.4f})")

        square = [(1.0, 1.0), (1.0, -1.0), (-1.0, -1.0), (-1.0, 1.0)]
        omni = [east.intensity_at(x, y) for (x, y) in square]
        theta = ss.formation_doa(omni, square, [(1, 0), (3, 0)])
        check("formation DoA east", abs(theta) < 1e-9)

        # Samplers are deterministic per seed.
        a = ss.sample_doa_series(9, 5, 0.3, 100.0)
        b = ss.sample_doa_series(9, 5, 0.3, 100.0)
        check("seeded sampler replay", a == b)
        draws = ss.sample_doa_series(1, 20000, 0.3, 1e6)
        spread = max(abs(ss.normalize_angle(d - 0.3)) for d in draws)
        check("concentrated draws", spread < 0.01, f"(max |err| = {spread:.5f})")

        # Full runs through the config surface.
        cfg = ss.ScenarioConfig("single")
        cfg.set_noise(1e-8, 1e8)
        cfg.duration_s = 400.0
        result = ss.run_single(cfg, 7)
        check("single-source convergence", result.converged, f"(t_s = {result.t_s})")
        check("bearing maintenance", result.max_bearing_error < 0.05)
        again = ss.run_single(cfg, 7)
        check("single replay determinism", again.t_s == result.t_s
              and len(again.events()) == len(result.events()))

        mcfg = ss.ScenarioConfig("multi")
        mcfg.set_agents([(10.0, 0.0)])
        mcfg.set_sources([(0.0, 0.0, 1e8)])
        mcfg.set_noise(1e-8, 1e8)
        mcfg.duration_s = 300.0
        mres = ss.run_multi(mcfg, 3)
        check("multi-source detection", mres.sources_located == 1,
              f"(detections = {mres.detection_count})")

        # Config round trip.
        echoed = ss.ScenarioConfig.from_toml(mcfg.to_toml())
        check("config round trip", echoed.to_toml() == mcfg.to_toml())

        # Invalid input surfaces as an error, not a crash.
        try:
            ss.ScenarioConfig.from_toml("scenario = \"multi\"\nbogus=1\n")
            check("unknown key rejected", False)
        except ValueError as e:
            check("unknown key rejected", "bogus" in str(e))

    if FAILURES:
        print(f"\n{len(FAILURES)} check(s) failed: {', '.join(FAILURES)}")
        sys.exit(1)
    print("\nall smoke checks passed")


if __name__ == "__main__":
    main()
