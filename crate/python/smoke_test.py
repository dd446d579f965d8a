"""Smoke test for the pyhtmjoin extension."""

import os
import tempfile

import pyhtmjoin as h


def main():
    assert h.encode(45.0, 35.2643897, 0) == 15
    start, end = h.id_range(15, 20)
    assert (start, end) == (15 << 40, 16 << 40)
    assert h.level_of(h.encode(10.0, 20.0, 9)) == 9
    assert len(h.decode(h.encode(10.0, 20.0, 9))) == 3

    regions = h.synthetic_regions(4, passes=3, seed=7)
    assert len(regions) == 4 and all(r.area > 0 for r in regions)
    back = h.parse_regions(h.export_regions(regions))
    assert [r.id for r in back] == [r.id for r in regions]

    points = h.synthetic_points(5000, seed=8, regions=regions)
    cover = h.Cover.build(regions, 10)
    assert len(cover) > 0 and cover.maxlevel == 10
    matches = cover.classify(points)
    assert all(kind in ("full", "partial") for _, _, kind in matches)
    expected = h.nested_loop_join(regions, points)
    assert [(p, r) for p, r, _ in matches] == expected, "join disagrees with brute force"
    cands = {(p, r) for p, r, _ in cover.prefilter(points)}
    assert set(expected) <= cands

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "c.htmc")
        n = cover.save(path)
        assert n == os.path.getsize(path)
        again = h.Cover.load(path)
        assert again.to_bytes() == cover.to_bytes()
        assert again.classify(points) == matches

    try:
        h.encode(0.0, 95.0, 3)
    except ValueError:
        pass
    else:
        raise AssertionError("bad latitude accepted")

    print(f"ok: {len(regions)} regions, {len(cover)} rows, {len(matches)} matches")


if __name__ == "__main__":
    main()
