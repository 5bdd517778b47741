//! Mesh construction, refinement, crack extension, sieves and the text format.

use std::collections::{HashMap, HashSet};

use crackslope_core::mesh::{
    build_mesh, build_sieve, extend_crack, CrackPath, Domain, EdgeLabel, Mesh, MeshBuilder, MeshText, Point, Sizing,
};
use crackslope_core::{Error, GeometryError};
use proptest::prelude::*;

fn p(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

fn square_loop() -> CrackPath {
    CrackPath::ClosedPolygon { points: vec![p(0.3, 0.3), p(0.7, 0.3), p(0.7, 0.7), p(0.3, 0.7)] }
}

/// Components of Ω∖S by flood fill over triangles sharing an edge.
fn flood_fill_components(m: &Mesh) -> usize {
    let mut by_edge: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (t, tri) in m.triangles().iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            by_edge.entry((a.min(b), a.max(b))).or_default().push(t);
        }
    }
    let nt = m.triangles().len();
    let mut seen = vec![false; nt];
    let mut count = 0;
    for start in 0..nt {
        if seen[start] {
            continue;
        }
        count += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(t) = stack.pop() {
            let tri = m.triangles()[t];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                for &o in &by_edge[&(a.min(b), a.max(b))] {
                    if !seen[o] {
                        seen[o] = true;
                        stack.push(o);
                    }
                }
            }
        }
    }
    count
}

fn check_invariants(m: &Mesh, crack: Option<&CrackPath>) {
    for t in 0..m.triangles().len() {
        assert!(m.area(t) > 0.0, "triangle {t} has area {}", m.area(t));
    }
    for &(a, b) in m.seam_pairs() {
        assert_ne!(a, b);
        assert_eq!(m.node(a), m.node(b));
    }
    let tags = m.tagged_edges();
    let plus = tags.iter().filter(|(_, l)| *l == EdgeLabel::CrackPlus).count();
    let minus = tags.iter().filter(|(_, l)| *l == EdgeLabel::CrackMinus).count();
    assert_eq!(plus, m.crack_edges().len());
    assert_eq!(minus, m.crack_edges().len());
    for e in m.crack_edges() {
        for k in 0..2 {
            assert_eq!(m.node(e.plus[k]), m.node(e.minus[k]));
        }
        assert!((e.normal.norm() - 1.0).abs() < 1e-12);
    }
    if let Some(c) = crack {
        let total: f64 = m.crack_edges().iter().map(|e| e.length).sum();
        assert!((total - c.length()).abs() <= 1e-12 * c.length());
    }
    let tris = m.node_triangles();
    for &tip in m.tip_nodes() {
        let mut sides = HashSet::new();
        for e in m.crack_edges().iter().filter(|e| e.plus.contains(&tip)) {
            let other = if e.plus[0] == tip { e.plus[1] } else { e.plus[0] };
            let dir = m.node(other) - m.node(tip);
            for &t in &tris[tip] {
                let c = m.triangle_points(t).iter().fold(Point::default(), |a, b| a + *b) * (1.0 / 3.0);
                let s = dir.cross(c - m.node(tip));
                if s.abs() > 1e-12 {
                    sides.insert(s > 0.0);
                }
            }
        }
        assert_eq!(sides.len(), 2, "tip {tip} sees only one face");
    }
}

#[test]
fn crackless_square_has_no_seam() {
    let m = build_mesh(Domain::UnitSquare, None, 0.25).unwrap();
    assert!(m.triangles().len() >= 32);
    assert!(m.seam_pairs().is_empty() && m.tip_nodes().is_empty());
    assert!(m.h() <= 1.5 * 0.25);
    check_invariants(&m, None);
    assert_eq!(flood_fill_components(&m), 1);
}

#[test]
fn segment_crack_is_resolved_with_two_tips() {
    let c = CrackPath::segment(p(0.3, 0.5), p(0.7, 0.5));
    let m = build_mesh(Domain::UnitSquare, Some(c.clone()), 0.1).unwrap();
    assert!(!m.seam_pairs().is_empty());
    assert_eq!(m.tip_nodes().len(), 2);
    assert!(m.h() <= 0.15);
    check_invariants(&m, Some(&c));
    assert_eq!(flood_fill_components(&m), 1);
    let tips: Vec<Point> = m.tip_nodes().iter().map(|&i| m.node(i)).collect();
    assert!(tips.contains(&p(0.3, 0.5)) && tips.contains(&p(0.7, 0.5)));
}

#[test]
fn closed_polygon_has_interior_component() {
    let c = square_loop();
    let m = build_mesh(Domain::UnitSquare, Some(c.clone()), 0.05).unwrap();
    assert!(m.tip_nodes().is_empty());
    assert_eq!(flood_fill_components(&m), 2);
    assert_eq!(m.components().0, 2);
    check_invariants(&m, Some(&c));
}

#[test]
fn circle_surrogate_meets_chord_bound() {
    let h = 1.0 / 32.0;
    let c = CrackPath::circle(p(0.5, 0.5), 0.25, h);
    let pts = c.points();
    for w in 0..pts.len() {
        let (a, b) = (pts[w], pts[(w + 1) % pts.len()]);
        assert!((a.dist(p(0.5, 0.5)) - 0.25).abs() < 1e-14);
        let mid = a.lerp(b, 0.5);
        assert!(0.25 - mid.dist(p(0.5, 0.5)) <= h * h);
        assert!(a.dist(b) <= h * (1.0 + 1e-12));
    }
    let m = build_mesh(Domain::UnitSquare, Some(c.clone()), h).unwrap();
    assert_eq!(flood_fill_components(&m), 2);
    check_invariants(&m, Some(&c));
}

#[test]
fn polyline_and_other_domains() {
    let c = CrackPath::Polyline { points: vec![p(0.6, 0.5), p(1.0, 0.7), p(1.4, 0.5)] };
    let m = build_mesh(Domain::rectangle(0.0, 0.0, 2.0, 1.0), Some(c.clone()), 0.08).unwrap();
    assert!((m.total_area() - 2.0).abs() < 1e-12);
    assert_eq!(m.tip_nodes().len(), 2);
    check_invariants(&m, Some(&c));

    let d = Domain::disk(p(0.0, 0.0), 1.0);
    let s = CrackPath::segment(p(-0.3, 0.0), p(0.3, 0.0));
    let m = build_mesh(d, Some(s.clone()), 0.1).unwrap();
    assert!((m.total_area() - std::f64::consts::PI).abs() < 0.02);
    check_invariants(&m, Some(&s));
}

#[test]
fn boundary_edges_are_counterclockwise() {
    let m = build_mesh(Domain::UnitSquare, None, 0.2).unwrap();
    let c = p(0.5, 0.5);
    for e in m.boundary_edges() {
        let (a, b) = (m.node(e[0]), m.node(e[1]));
        assert!((b - a).cross(c - a) > 0.0);
    }
}

#[test]
fn invalid_geometry_is_rejected() {
    let touching = CrackPath::segment(p(0.0, 0.5), p(0.7, 0.5));
    assert!(matches!(
        build_mesh(Domain::UnitSquare, Some(touching), 0.1),
        Err(Error::Geometry(GeometryError::TouchesBoundary { .. }))
    ));
    let leaving = CrackPath::segment(p(0.5, 0.5), p(1.5, 0.5));
    assert!(matches!(build_mesh(Domain::UnitSquare, Some(leaving), 0.1), Err(Error::Geometry(_))));
    let bow = CrackPath::ClosedPolygon { points: vec![p(0.2, 0.2), p(0.8, 0.8), p(0.8, 0.2), p(0.2, 0.8)] };
    assert!(matches!(
        build_mesh(Domain::UnitSquare, Some(bow), 0.1),
        Err(Error::Geometry(GeometryError::SelfIntersecting))
    ));
    assert!(matches!(build_mesh(Domain::UnitSquare, None, 0.0), Err(Error::Geometry(GeometryError::InvalidSize(_)))));
    assert!(build_mesh(Domain::UnitSquare, None, -1.0).is_err());
    let a = CrackPath::segment(p(0.3, 0.5), p(0.7, 0.5));
    let b = CrackPath::segment(p(0.5, 0.3), p(0.5, 0.7));
    assert!(MeshBuilder::new(Domain::UnitSquare, Sizing::uniform(0.1)).cracks([a, b]).build().is_err());
}

#[test]
fn refinement_of_open_crack() {
    let c = CrackPath::segment(p(0.3, 0.5), p(0.7, 0.5));
    let m = build_mesh(Domain::UnitSquare, Some(c.clone()), 0.2).unwrap();
    let r = m.refine().unwrap();
    assert_eq!(r.triangles().len(), 4 * m.triangles().len());
    assert!((r.h() - 0.5 * m.h()).abs() < 1e-12);
    // seam edges split in two, one new pair per old edge
    assert_eq!(r.crack_edges().len(), 2 * m.crack_edges().len());
    assert_eq!(r.seam_pairs().len(), 2 * m.seam_pairs().len() + 1);
    assert_eq!(r.tip_nodes().len(), 2);
    assert!((r.total_area() - m.total_area()).abs() < 1e-12);
    assert!((r.crack_length() - m.crack_length()).abs() < 1e-12);
    check_invariants(&r, Some(&c));
}

#[test]
fn refinement_of_closed_crack() {
    let m = build_mesh(Domain::UnitSquare, Some(square_loop()), 0.1).unwrap();
    let r = m.refine().unwrap();
    assert_eq!(r.triangles().len(), 4 * m.triangles().len());
    assert_eq!(r.seam_pairs().len(), 2 * m.seam_pairs().len());
    assert!((r.crack_length() - m.crack_length()).abs() < 1e-12);
    assert!((r.total_area() - 1.0).abs() < 1e-12);
    assert_eq!(flood_fill_components(&r), 2);
}

#[test]
fn meshing_is_deterministic() {
    let c = CrackPath::segment(p(0.3, 0.5), p(0.7, 0.5));
    let a = MeshText::from_mesh(&build_mesh(Domain::UnitSquare, Some(c.clone()), 0.07).unwrap()).write();
    let b = MeshText::from_mesh(&build_mesh(Domain::UnitSquare, Some(c), 0.07).unwrap()).write();
    assert_eq!(a, b);
}

#[test]
fn text_format_round_trip() {
    let c = CrackPath::segment(p(0.3, 0.5), p(0.7, 0.5));
    let m = build_mesh(Domain::UnitSquare, Some(c), 0.1).unwrap();
    let t = MeshText::from_mesh(&m);
    let s = t.write();
    let header = s.lines().next().unwrap();
    assert_eq!(header, format!("nodes {} triangles {} seams {}", m.n_nodes(), m.triangles().len(), m.seam_pairs().len()));
    let back = MeshText::parse(&s).unwrap();
    assert_eq!(back, t);
    assert_eq!(back.write(), s);
    assert!(s.lines().any(|l| l.starts_with("edge ") && l.ends_with("crack_plus")));
    assert!(s.lines().any(|l| l.ends_with("outer_boundary")));
}

#[test]
fn text_format_rejects_garbage() {
    assert!(matches!(MeshText::parse(""), Err(Error::Parse { .. })));
    assert!(matches!(MeshText::parse("nodes 1 triangles 0"), Err(Error::Parse { .. })));
    assert!(matches!(MeshText::parse("nodes 1 triangles 0 seams 0\n0 x 1\n"), Err(Error::Parse { .. })));
    assert!(matches!(MeshText::parse("nodes 1 triangles 1 seams 0\n0 0 0\n0 0 0 5\n"), Err(Error::Parse { .. })));
}

#[test]
fn extend_crack_examples() {
    let s = CrackPath::segment(p(0.3, 0.5), p(0.7, 0.5));
    assert_eq!(extend_crack(&s, 0.0, &Domain::UnitSquare).unwrap(), s);
    let CrackPath::Segment { a, b } = extend_crack(&s, 0.1, &Domain::UnitSquare).unwrap() else { panic!("segment expected") };
    assert!(a.dist(p(0.2, 0.5)) < 1e-15 && b == p(0.7, 0.5));
    for ds in [0.01, 0.02, 0.04] {
        let e = extend_crack(&s, ds, &Domain::UnitSquare).unwrap();
        assert!((e.length() - (s.length() + ds)).abs() < 1e-15);
    }
    assert_eq!(extend_crack(&s, 0.3, &Domain::UnitSquare), Err(GeometryError::ExtensionExitsDomain(0.3)));
    assert!(extend_crack(&s, -0.1, &Domain::UnitSquare).is_err());
    assert!(extend_crack(&square_loop(), 0.1, &Domain::UnitSquare).is_err());
}

#[test]
fn sieve_examples() {
    let base = CrackPath::segment(p(0.0, 0.5), p(1.0, 0.5));
    let full = build_sieve(&base, 4, 0.0);
    assert_eq!(full.teeth, vec![base.clone()]);
    assert!(build_sieve(&base, 4, 1.0).teeth.is_empty());
    let half = build_sieve(&base, 4, 0.5);
    assert_eq!(half.teeth.len(), 4);
    for (i, t) in half.teeth.iter().enumerate() {
        assert!((t.length() - 0.125).abs() < 1e-15);
        let ends = t.endpoints();
        let centre = 0.5 * (ends[0].x + ends[1].x);
        assert!((centre - (i as f64 + 0.5) * 0.25).abs() < 1e-15);
        assert!(ends.iter().all(|e| e.y == 0.5 && e.x >= 0.0 && e.x <= 1.0));
    }
    for w in half.teeth.windows(2) {
        assert!(w[0].endpoints()[1].x < w[1].endpoints()[0].x);
    }
    assert!((half.teeth_length() - 0.5).abs() < 1e-15);
}

#[test]
fn sieve_mesh_has_tips_at_teeth_ends() {
    let base = CrackPath::segment(p(0.1, 0.5), p(0.9, 0.5));
    let sieve = build_sieve(&base, 4, 0.5);
    let m = MeshBuilder::new(Domain::UnitSquare, Sizing::uniform(0.05)).cracks(sieve.teeth.clone()).build().unwrap();
    assert_eq!(m.tip_nodes().len(), 8);
    assert!((m.crack_length() - sieve.teeth_length()).abs() < 1e-12);
    assert_eq!(flood_fill_components(&m), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_segments_give_valid_meshes(
        x0 in 0.15f64..0.85, y0 in 0.15f64..0.85, ang in 0.0f64..std::f64::consts::PI, len in 0.1f64..0.3, h in 0.04f64..0.12
    ) {
        let a = p(x0, y0);
        let b = a + Point::new(ang.cos(), ang.sin()) * len;
        prop_assume!(Domain::UnitSquare.inner_distance(b) > 0.05);
        let c = CrackPath::segment(a, b);
        let m = build_mesh(Domain::UnitSquare, Some(c.clone()), h).unwrap();
        prop_assert!(m.h() <= 1.5 * h);
        prop_assert_eq!(m.tip_nodes().len(), 2);
        prop_assert!((m.total_area() - 1.0).abs() < 1e-12);
        check_invariants(&m, Some(&c));
        let r = m.refine().unwrap();
        prop_assert!((r.crack_length() - m.crack_length()).abs() < 1e-12 * m.crack_length());
        prop_assert!((r.total_area() - m.total_area()).abs() < 1e-12);
    }

    #[test]
    fn sieve_teeth_are_disjoint_sub_arcs(gap in 0.05f64..0.95, n in 1usize..9, len in 0.2f64..1.0) {
        let base = CrackPath::Polyline { points: vec![p(0.0, 0.0), p(len, 0.0), p(len, len)] };
        let s = build_sieve(&base, n, gap);
        prop_assert_eq!(s.teeth.len(), n);
        prop_assert!((s.teeth_length() - (1.0 - gap) * base.length()).abs() < 1e-12);
        let segs = base.segments();
        for t in &s.teeth {
            for q in t.points() {
                let on = segs.iter().any(|(a, b)| crackslope_core::mesh::geometry::point_segment_distance(q, *a, *b).0 < 1e-12);
                prop_assert!(on);
            }
        }
        let period = base.length() / n as f64;
        for (i, t) in s.teeth.iter().enumerate() {
            prop_assert!((t.length() - (1.0 - gap) * period).abs() < 1e-12);
            if i + 1 < s.teeth.len() {
                let gap_pts = (t.endpoints()[1], s.teeth[i + 1].endpoints()[0]);
                prop_assert!(gap_pts.0.dist(gap_pts.1) > 0.0);
            }
        }
    }
}
