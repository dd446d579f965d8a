mod common;

use common::{angle, cross, dot, edge_margin, in_triangle, point_in, triangle_area, unit, V};
use htmjoin::geom::point_in_ring;
use htmjoin::htm::{
    ancestry, id_range, level_of, parent, point_in_trixel, root_trixels, trixel_of, HtmId,
};
use htmjoin::synth::{rng, uniform_points};
use htmjoin::{encode, UnitVec};
use proptest::prelude::*;
use rand::Rng;

fn random_unit(r: &mut impl Rng) -> UnitVec {
    let (_, lon, lat) = uniform_points(1, r)[0];
    UnitVec::from_lonlat(lon, lat).unwrap()
}

fn corners(id: u64) -> [V; 3] {
    trixel_of(HtmId::new(id).unwrap()).unwrap().vertices.map(|v| v.to_array())
}

#[test]
fn roots_layout_and_area() {
    let roots = root_trixels();
    let ids: Vec<u64> = roots.iter().map(|t| t.id.value()).collect();
    assert_eq!(ids, (8..16).collect::<Vec<_>>());
    for t in &roots {
        let [a, b, c] = t.vertices.map(|v| v.to_array());
        assert!((triangle_area(a, b, c) - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!((t.area() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }
    let n3 = trixel_of(HtmId::new(15).unwrap()).unwrap();
    assert_eq!(n3.vertices, [UnitVec::Y, UnitVec::Z, UnitVec::X]);
}

#[test]
fn roots_cover_the_sphere() {
    let roots = root_trixels();
    let mut r = rng(41);
    for _ in 0..100_000 {
        let p = random_unit(&mut r);
        let hits = roots.iter().filter(|t| point_in_trixel(p, t)).count();
        assert!(hits >= 1);
        let clear = roots
            .iter()
            .all(|t| edge_margin(p.to_array(), t.vertices.map(|v| v.to_array())) >= 1e-9);
        if clear {
            assert_eq!(hits, 1);
        }
    }
}

#[test]
fn children_ids_areas_and_sampling() {
    let t15 = HtmId::new(15).unwrap();
    let kids: Vec<u64> = t15.children().unwrap().iter().map(|k| k.value()).collect();
    assert_eq!(kids, [60, 61, 62, 63]);
    let mut r = rng(42);
    for &id in &[8u64, 15, 61, 250, 4 * 250 + 3, 1 << 25, (1 << 41) + 12345] {
        let t = trixel_of(HtmId::new(id).unwrap()).unwrap();
        let [a, b, c] = corners(id);
        let kids = t.id.children().unwrap();
        let sum: f64 = kids.iter().map(|k| {
            let [a, b, c] = corners(k.value());
            triangle_area(a, b, c)
        }).sum();
        assert!((sum - triangle_area(a, b, c)).abs() < 1e-10);
        for _ in 0..200 {
            let p = point_in([a, b, c], &mut r);
            let kc: Vec<[V; 3]> = kids.iter().map(|k| corners(k.value())).collect();
            if kc.iter().any(|k| edge_margin(p, *k) < 1e-9) {
                continue;
            }
            let pu = UnitVec::new(p[0], p[1], p[2]).unwrap();
            let n = kids.iter().filter(|k| trixel_of(**k).unwrap().contains(pu)).count();
            assert_eq!(n, 1, "id {id}");
        }
    }
}

#[test]
fn center_child_uses_edge_midpoints() {
    for id in [9u64, 14, 57, 1000] {
        let t = trixel_of(HtmId::new(id).unwrap()).unwrap();
        let c = trixel_of(HtmId::new(4 * id + 3).unwrap()).unwrap();
        let [a, b, d] = t.vertices.map(|v| v.to_array());
        let mid = |x: V, y: V| unit([x[0] + y[0], x[1] + y[1], x[2] + y[2]]);
        let want = [mid(b, d), mid(d, a), mid(a, b)];
        for (got, want) in c.vertices.iter().zip(want) {
            assert!(angle(got.to_array(), want) < 1e-15, "id {id}");
        }
    }
}

#[test]
fn encode_diagonal_by_plane_signs() {
    let d = [1.0 / 3f64.sqrt(); 3];
    // the root that has d on the positive side of all three edge planes
    let hits: Vec<u64> = (8..16)
        .filter(|&id| {
            let t = corners(id);
            (0..3).all(|i| dot(cross(t[i], t[(i + 1) % 3]), d) > 0.0)
        })
        .collect();
    assert_eq!(hits, [15]);
    let p = UnitVec::new(d[0], d[1], d[2]).unwrap();
    assert_eq!(encode(p, 0).unwrap().value(), 15);
}

#[test]
fn encode_roundtrip_all_levels() {
    let mut r = rng(43);
    for _ in 0..100_000 {
        let p = random_unit(&mut r);
        let level = r.gen_range(0..=20);
        let id = encode(p, level).unwrap();
        assert_eq!(id.level(), level);
        let t = trixel_of(id).unwrap();
        assert!(point_in_trixel(p, &t));
        assert!(in_triangle(p.to_array(), t.vertices.map(|v| v.to_array()), 1e-12));
    }
}

#[test]
fn trixel_membership_matches_ring() {
    let mut r = rng(44);
    for &id in &[12u64, 55, 2234, 9_000_001] {
        let t = trixel_of(HtmId::new(id).unwrap()).unwrap();
        let ring = t.to_ring();
        let tv = t.vertices.map(|v| v.to_array());
        assert!(t.contains(t.vertices[0]));
        assert!(!t.contains(t.centroid().antipode()));
        for _ in 0..2000 {
            // half the samples from inside, half from a wider cap
            let p = if r.gen_bool(0.5) {
                point_in(tv, &mut r)
            } else {
                let cap = t.cap();
                htmjoin::synth::destination(cap.center, r.gen_range(0.0..6.28), r.gen_range(0.0..3.0 * cap.radius()))
                    .to_array()
            };
            if edge_margin(p, tv) < 1e-9 {
                continue;
            }
            let pu = UnitVec::new(p[0], p[1], p[2]).unwrap();
            assert_eq!(point_in_trixel(pu, &t), point_in_ring(pu, &ring));
        }
    }
}

#[test]
fn id_range_cases() {
    let r = id_range(HtmId::new(15).unwrap(), 20).unwrap();
    assert_eq!((r.start, r.end), (15 << 40, 16 << 40));
    let leaf = encode(UnitVec::X, 20).unwrap();
    let r = id_range(leaf, 20).unwrap();
    assert_eq!((r.start, r.end), (leaf.value(), leaf.value() + 1));

    let mut g = rng(45);
    for id in [13u64, 222, 3333] {
        let t = trixel_of(HtmId::new(id).unwrap()).unwrap();
        let range = id_range(t.id, 20).unwrap();
        assert_eq!(range.end - range.start, 1 << (2 * (20 - t.level())));
        for _ in 0..10_000 / 3 {
            let p = point_in(t.vertices.map(|v| v.to_array()), &mut g);
            let pu = UnitVec::new(p[0], p[1], p[2]).unwrap();
            if edge_margin(p, t.vertices.map(|v| v.to_array())) < 1e-9 {
                continue;
            }
            assert!(range.contains(encode(pu, 20).unwrap().value()));
        }
    }
}

#[test]
fn level_and_parent() {
    assert_eq!(level_of(15).unwrap(), 0);
    assert_eq!(level_of(63).unwrap(), 1);
    assert_eq!(parent(63).unwrap().value(), 15);
    let mut r = rng(46);
    for _ in 0..1000 {
        assert_eq!(encode(random_unit(&mut r), 14).unwrap().level(), 14);
    }
    assert!(HtmId::new(7).is_err());
    assert!(encode(UnitVec::X, 29).is_err());
}

#[test]
fn edge_length_halves_per_level() {
    let mut r = rng(47);
    let mean_edge = |level: u32, r: &mut rand_chacha::ChaCha8Rng| -> f64 {
        let mut total = 0.0;
        for _ in 0..2000 {
            let t = trixel_of(encode(random_unit(r), level).unwrap()).unwrap();
            let v = t.vertices.map(|v| v.to_array());
            total += angle(v[0], v[1]) + angle(v[1], v[2]) + angle(v[2], v[0]);
        }
        total / 6000.0
    };
    let mut prev = mean_edge(3, &mut r);
    for level in 4..=12 {
        let cur = mean_edge(level, &mut r);
        assert!((cur / prev - 0.5).abs() < 0.025, "level {level}: {}", cur / prev);
        prev = cur;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn descendant_ranges_nest(seed in any::<u64>(), level in 0u32..=18, extra in 1u32..=6) {
        let mut r = rng(seed);
        let p = random_unit(&mut r);
        let t = encode(p, level).unwrap();
        let d = encode(p, (level + extra).min(20)).unwrap();
        let ts = id_range(t, 20).unwrap();
        prop_assert!(id_range(d, 20).unwrap().is_subset_of(&ts));
        let chain = ancestry(d).unwrap();
        prop_assert_eq!(chain[t.level() as usize].id, t);
    }

    #[test]
    fn sibling_ranges_partition_parent(seed in any::<u64>(), level in 0u32..=19) {
        let t = encode(random_unit(&mut rng(seed)), level).unwrap();
        let parent = id_range(t, 20).unwrap();
        let kids: Vec<_> = t.children().unwrap().iter().map(|k| id_range(*k, 20).unwrap()).collect();
        prop_assert_eq!(kids[0].start, parent.start);
        prop_assert_eq!(kids[3].end, parent.end);
        for w in kids.windows(2) {
            prop_assert_eq!(w[0].end, w[1].start);
        }
        for k in t.children().unwrap() {
            prop_assert_eq!(k.parent().unwrap(), t);
            prop_assert!(8 << (2 * k.level()) <= k.value() && k.value() < 16 << (2 * k.level()));
        }
    }

    #[test]
    fn refinement_is_monotone(seed in any::<u64>(), level in 0u32..20) {
        let p = random_unit(&mut rng(seed));
        let outer = trixel_of(encode(p, level).unwrap()).unwrap();
        let inner = trixel_of(encode(p, level + 1).unwrap()).unwrap();
        let ov = outer.vertices.map(|v| v.to_array());
        for v in inner.vertices {
            prop_assert!(in_triangle(v.to_array(), ov, 1e-12));
        }
        let n = outer.normals;
        for (i, nv) in n.iter().enumerate() {
            prop_assert!(outer.vertices[(i + 2) % 3].dot(*nv) >= -1e-12);
        }
    }
}
