import random
from functools import lru_cache

import pytest

from cubeflip.flips import grid_refine, moves, pillow
from cubeflip.geometry import hex_torus
from cubeflip.meshes import bicuboid, bicuboid_boundary, cube_boundary, quad_grid, quad_torus, single_hex


def random_walk(c, steps, seed, cap):
    """Apply ``steps`` random flips, never exceeding ``cap`` cells."""
    rng = random.Random(seed)
    for _ in range(steps):
        options = [(s, r) for s, r in moves(c) if len(r.cells) <= cap]
        if not options:
            break
        c = rng.choice(options)[1]
    return c


@lru_cache(maxsize=None)
def sphere_corpus():
    """Closed quad spheres: references, refinements and random flip products."""
    base = cube_boundary().without_coords()
    out = [base, bicuboid_boundary().without_coords()]
    out += [grid_refine(cube_boundary(), m).without_coords() for m in (2, 3)]
    for seed in range(110):
        out.append(random_walk(base, 1 + seed % 6, seed, 14))
    return tuple(out)


@lru_cache(maxsize=None)
def disk_corpus():
    out = []
    for n, m in ((1, 1), (1, 2), (2, 2), (2, 3)):
        out.append(quad_grid(n, m).without_coords())
    for seed in range(50):
        g = quad_grid(1 + seed % 2, 1 + seed % 3).without_coords()
        out.append(random_walk(g, 1 + seed % 4, seed, 10))
    return tuple(out)


@lru_cache(maxsize=None)
def hex_corpus():
    out = [single_hex().without_coords(), bicuboid().without_coords(),
           pillow(single_hex(), 0).without_coords(),
           hex_torus(3, 2).complex, hex_torus(3, 3).complex,
           grid_refine(single_hex(), 2).without_coords()]
    for seed in range(40):
        out.append(random_walk(bicuboid().without_coords(), 1 + seed % 3, seed, 12))
    return tuple(out)


@lru_cache(maxsize=None)
def full_corpus():
    return sphere_corpus() + disk_corpus() + hex_corpus() + (quad_torus().without_coords(),)


@pytest.fixture(scope="session")
def spheres():
    return sphere_corpus()


@pytest.fixture(scope="session")
def corpus():
    return full_corpus()
