"""Tile grid and k-nearest query tests, anchored to a brute-force oracle."""

import numpy as np
import pytest

from crossview.tiles import (
    TileFileError,
    TileRecord,
    TileSet,
    generate_grid,
    k_nearest,
    load_tiles,
    save_tiles,
)


def brute_force_k_nearest(tile_set, point, k):
    """Reference implementation: full scan, sort by (squared distance, id)."""
    px, py = float(point[0]), float(point[1])
    scored = [
        ((t.x - px) ** 2 + (t.y - py) ** 2, t.tile_id, t) for t in tile_set.tiles
    ]
    scored.sort(key=lambda item: (item[0], item[1]))
    return [t for _, _, t in scored[:k]]


@pytest.fixture(scope="module")
def grid_861():
    return generate_grid(0.0, 2000.0, 0.0, 1000.0, 50.0)


# --- generation -----------------------------------------------------------


def test_generate_grid_counts():
    assert len(generate_grid(0.0, 100.0, 0.0, 100.0, 50.0).tiles) == 9


def test_generate_grid_861(grid_861):
    assert len(grid_861.tiles) == 861
    assert grid_861.nx == 41 and grid_861.ny == 21


def test_grid_row_major_ids_and_spacing(grid_861):
    tiles = grid_861.tiles
    for t in tiles[:100]:
        row, col = divmod(t.tile_id, grid_861.nx)
        assert t.x == pytest.approx(0.0 + 50.0 * col)
        assert t.y == pytest.approx(0.0 + 50.0 * row)
    xs = sorted({t.x for t in tiles})
    assert np.allclose(np.diff(xs), 50.0)


def test_generate_grid_rejects_bad_bounds():
    with pytest.raises(ValueError):
        generate_grid(100.0, 0.0, 0.0, 100.0, 50.0)
    with pytest.raises(ValueError):
        generate_grid(0.0, 100.0, 0.0, 100.0, -50.0)


def test_tile_record_validation():
    with pytest.raises(ValueError):
        TileRecord(-1, 0.0, 0.0)
    with pytest.raises(ValueError):
        TileRecord(0, float("nan"), 0.0)
    t = TileRecord(3, 10.0, 20.0)
    assert t.center == (10.0, 20.0)
    assert t.altitude == 300.0 and t.heading == 0.0


def test_tileset_rejects_inconsistent_tiles():
    good = generate_grid(0.0, 100.0, 0.0, 100.0, 50.0)
    # drop a tile: count no longer matches the bounds
    with pytest.raises(ValueError):
        TileSet(good.tiles[:-1], 0.0, 100.0, 0.0, 100.0, 50.0)
    # move a tile off the lattice
    moved = list(good.tiles)
    moved[4] = TileRecord(4, 51.0, 50.0)
    with pytest.raises(ValueError):
        TileSet(tuple(moved), 0.0, 100.0, 0.0, 100.0, 50.0)


# --- k_nearest ------------------------------------------------------------


def test_k_nearest_on_node_interior(grid_861):
    got = k_nearest(grid_861, (500.0, 500.0), 9)
    ids = {t.tile_id for t in got}
    anchor = next(t for t in grid_861.tiles if t.x == 500.0 and t.y == 500.0)
    row, col = divmod(anchor.tile_id, grid_861.nx)
    expected = {
        (row + dr) * grid_861.nx + (col + dc)
        for dr in (-1, 0, 1)
        for dc in (-1, 0, 1)
    }
    assert ids == expected
    # nearest first: the anchor tile itself leads the list
    assert got[0].tile_id == anchor.tile_id


def test_k_nearest_tie_break_by_id(grid_861):
    # query point equidistant from four lattice nodes
    got = k_nearest(grid_861, (525.0, 525.0), 4)
    d2 = [(t.x - 525.0) ** 2 + (t.y - 525.0) ** 2 for t in got]
    assert np.allclose(d2, d2[0])
    ids = [t.tile_id for t in got]
    assert ids == sorted(ids)


def test_k_nearest_matches_brute_force(grid_861):
    rng = np.random.default_rng(31)
    for _ in range(300):
        point = (
            float(rng.uniform(-300.0, 2300.0)),
            float(rng.uniform(-300.0, 1300.0)),
        )
        k = int(rng.integers(1, 16))
        fast = k_nearest(grid_861, point, k)
        slow = brute_force_k_nearest(grid_861, point, k)
        assert [t.tile_id for t in fast] == [t.tile_id for t in slow]


def test_k_nearest_full_set_sorted(grid_861):
    small = generate_grid(0.0, 100.0, 0.0, 100.0, 50.0)
    got = k_nearest(small, (12.0, 34.0), len(small.tiles))
    assert len(got) == 9
    d2 = [(t.x - 12.0) ** 2 + (t.y - 34.0) ** 2 for t in got]
    assert all(a <= b + 1e-12 for a, b in zip(d2, d2[1:]))


def test_k_nearest_rejects_bad_k(grid_861):
    with pytest.raises(ValueError):
        k_nearest(grid_861, (0.0, 0.0), 0)
    with pytest.raises(ValueError):
        k_nearest(grid_861, (0.0, 0.0), 862)
    with pytest.raises(ValueError):
        k_nearest(grid_861, (0.0, 0.0), 2.5)


def test_k_nearest_far_outside_query(grid_861):
    got = k_nearest(grid_861, (-5000.0, -5000.0), 3)
    slow = brute_force_k_nearest(grid_861, (-5000.0, -5000.0), 3)
    assert [t.tile_id for t in got] == [t.tile_id for t in slow]
    assert got[0].tile_id == 0


# --- save / load ----------------------------------------------------------


def test_save_load_round_trip(tmp_path, grid_861):
    path = tmp_path / "tiles.txt"
    save_tiles(grid_861, path)
    loaded = load_tiles(path)
    assert loaded == grid_861


def test_save_is_byte_deterministic(tmp_path, grid_861):
    a = tmp_path / "a.txt"
    b = tmp_path / "b.txt"
    save_tiles(grid_861, a)
    save_tiles(grid_861, b)
    assert a.read_bytes() == b.read_bytes()


def test_load_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("#something-else\nbounds 0 100 0 100 50\n0 0.0 0.0\n")
    with pytest.raises(TileFileError, match="header"):
        load_tiles(path)


def test_load_rejects_empty_body(tmp_path):
    path = tmp_path / "empty.txt"
    path.write_text("#crossview-tiles-v1\nbounds 0 100 0 100 50\n")
    with pytest.raises(TileFileError):
        load_tiles(path)


def test_load_rejects_garbage_row(tmp_path):
    good = generate_grid(0.0, 100.0, 0.0, 100.0, 50.0)
    path = tmp_path / "tiles.txt"
    save_tiles(good, path)
    lines = path.read_text().splitlines()
    lines[4] = "4 not-a-number 50.0"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(TileFileError, match=r":5:"):
        load_tiles(path)


def test_load_rejects_missing_bounds(tmp_path):
    path = tmp_path / "tiles.txt"
    path.write_text("#crossview-tiles-v1\n0 0.0 0.0\n")
    with pytest.raises(TileFileError):
        load_tiles(path)
