import importlib.util
import pathlib

BENCH = pathlib.Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"


def test_benchmark_runs(capsys):
    spec = importlib.util.spec_from_file_location("bench_kernels", BENCH)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    mod.main(["--steps", "20", "--repeat", "1"])
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[-1].startswith("sol") and len([ln for ln in lines if ln[:3] in ("e3 ", "nil", "sol")]) == 9
