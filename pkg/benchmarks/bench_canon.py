"""Time canonical keys with the compiled kernel against the pure-Python one.

    python3 benchmarks/bench_canon.py [--repeat N]
"""
import argparse
import random
import time

from cubeflip import _canon_py, canon
from cubeflip.flips import grid_refine, moves
from cubeflip.meshes import bicuboid, cube_boundary, quad_torus, single_hex


def workload():
    meshes = [cube_boundary(), bicuboid(), single_hex(), quad_torus(6, 8),
              grid_refine(cube_boundary(), 3).without_coords(), grid_refine(single_hex(), 3).without_coords()]
    rng = random.Random(0)
    c = cube_boundary()
    for _ in range(40):
        options = [res for _, res in moves(c) if len(res.cells) <= 40]
        c = rng.choice(options)
        meshes.append(c)
    return meshes


def kernel_inputs(m):
    """Arguments the kernel sees for each component, built once."""
    vtok = canon.vertex_tokens(m)
    out = []
    for comp in canon.components(m):
        captured = []
        canon.component_code(m, comp, vtok, kernel=lambda *a: captured.append(a))
        out.append(captured[0])
    return out


def timed_kernel(inputs, kernel, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        codes = [kernel(*args) for args in inputs]
        best = min(best, time.perf_counter() - t)
    return best, codes


def timed(meshes, kernel, repeat):
    best = float("inf")
    keys = None
    for _ in range(repeat):
        t = time.perf_counter()
        keys = [canon.canonicalize(m, kernel=kernel) for m in meshes]
        best = min(best, time.perf_counter() - t)
    return best, keys


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    meshes = workload()
    inputs = [a for m in meshes for a in kernel_inputs(m)]
    print(f"meshes: {len(meshes)}  cells: {sum(len(m.cells) for m in meshes)}")
    k_slow, k_ref = timed_kernel(inputs, _canon_py.canonical_code, args.repeat)
    slow, ref = timed(meshes, _canon_py.canonical_code, args.repeat)
    print(f"{'':10}{'kernel only':>14}{'end to end':>14}")
    print(f"{'python':10}{k_slow * 1e3:11.1f} ms{slow * 1e3:11.1f} ms")
    if canon.BACKEND != "compiled":
        print("compiled  unavailable (extension not built or disabled)")
        return
    k_fast, k_got = timed_kernel(inputs, canon._KERNEL, args.repeat)
    fast, got = timed(meshes, None, args.repeat)
    assert got == ref and [list(x) for x in k_got] == [list(x) for x in k_ref], "kernels disagree"
    print(f"{'compiled':10}{k_fast * 1e3:11.1f} ms{fast * 1e3:11.1f} ms")
    print(f"{'speedup':10}{k_slow / k_fast:12.1f}x {slow / fast:12.1f}x")


if __name__ == "__main__":
    main()
