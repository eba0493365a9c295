mod common;

use bnav_core::geometry::{
    check_quad, homography_between, homography_unit_square, register_board, select_board_corners,
    CanonicalSize, Direction, GeometryError, Homography, MarkerDetection, Point2, DEFAULT_CANONICAL_SIZE,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn canonical() -> [Point2; 4] {
    DEFAULT_CANONICAL_SIZE.quad()
}

#[test]
fn two_step_map_matches_direct_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..300 {
        let (a, b) = (common::random_unit_quad(&mut rng), common::random_unit_quad(&mut rng));
        let h = homography_between(&a, &b).unwrap().matrix();
        let (abs, _) = common::matrix_diff(&h, &common::dlt(&a, &b));
        assert!(abs < 1e-9, "{abs:e}");
    }
}

#[test]
fn camera_scale_map_matches_direct_solve_relatively() {
    // Pixel-scale systems are badly conditioned and the m33 = 1 scaling can
    // make entries large, so only the relative difference is meaningful.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..300 {
        let q = common::random_convex_quad(&mut rng);
        let h = homography_between(&q, &canonical()).unwrap().matrix();
        let (_, rel) = common::matrix_diff(&h, &common::dlt(&q, &canonical()));
        assert!(rel < 1e-9, "{rel:e}");
    }
}

#[test]
fn unit_square_maps_match_direct_solve() {
    let unit = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(1.0, 1.0), Point2::new(0.0, 1.0)];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let q = common::random_convex_quad(&mut rng);
        let inv = homography_unit_square(&q, Direction::Inverse).unwrap().matrix();
        let (_, rel) = common::matrix_diff(&inv, &common::dlt(&unit, &q));
        assert!(rel < 1e-9, "{rel:e}");
    }
}

/// Marker squares placed outside each board corner of `board` (cyclic order).
fn markers_around(board: &[Point2; 4], side: f64) -> Vec<MarkerDetection> {
    let [ul, ur, lr, ll] = *board;
    let square = |x0: f64, y0: f64| {
        [Point2::new(x0, y0), Point2::new(x0 + side, y0), Point2::new(x0, y0 + side), Point2::new(x0 + side, y0 + side)]
    };
    vec![
        MarkerDetection { id: 1, corners: square(ul.x - side, ul.y - side) },
        MarkerDetection { id: 2, corners: square(ur.x, ur.y - side) },
        MarkerDetection { id: 3, corners: square(ll.x - side, ll.y) },
        MarkerDetection { id: 4, corners: square(lr.x, lr.y) },
    ]
}

#[test]
fn inner_corners_are_the_ones_nearest_the_board_center() {
    // Oracle: in an axis-aligned layout the corner each marker shares with
    // the board is the one closest to the board's centroid.
    let board = [Point2::new(100.0, 80.0), Point2::new(540.0, 80.0), Point2::new(540.0, 400.0), Point2::new(100.0, 400.0)];
    let centroid = Point2::new(320.0, 240.0);
    let markers = markers_around(&board, 30.0);
    let corners = select_board_corners(&markers).unwrap();
    for (slot, m) in corners.iter().zip(&markers) {
        let nearest = m
            .corners
            .iter()
            .copied()
            .min_by(|a, b| a.distance(centroid).total_cmp(&b.distance(centroid)))
            .unwrap();
        assert_eq!(*slot, nearest);
    }
    assert_eq!(corners, [board[0], board[1], board[3], board[2]]);
}

#[test]
fn marker_order_does_not_matter() {
    let board = [Point2::new(60.0, 50.0), Point2::new(600.0, 70.0), Point2::new(580.0, 430.0), Point2::new(40.0, 420.0)];
    let mut markers = markers_around(&board, 25.0);
    let a = select_board_corners(&markers).unwrap();
    markers.reverse();
    assert_eq!(select_board_corners(&markers).unwrap(), a);
}

#[test]
fn registration_keeps_previous_on_missing_marker() {
    let board = [Point2::new(60.0, 50.0), Point2::new(600.0, 70.0), Point2::new(580.0, 430.0), Point2::new(40.0, 420.0)];
    let markers = markers_around(&board, 25.0);
    let reg = register_board(None, &markers, DEFAULT_CANONICAL_SIZE, 1.0).unwrap();
    for (cam, want) in board.iter().zip(canonical()) {
        let got = reg.to_board(*cam).unwrap();
        assert!(got.distance(want) < 1e-9);
    }
    let kept = register_board(Some(&reg), &markers[..3], DEFAULT_CANONICAL_SIZE, 2.0).unwrap();
    assert_eq!(kept, reg);
    assert!(matches!(register_board(None, &markers[1..], DEFAULT_CANONICAL_SIZE, 2.0), Err(GeometryError::NoRegistration)));
    let bad = CanonicalSize { width: 0.0, height: 300.0 };
    assert!(matches!(register_board(None, &markers, bad, 2.0), Err(GeometryError::InvalidCanonicalSize(..))));
}

#[test]
fn degenerate_quads_are_rejected() {
    let collinear = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(2.0, 0.0), Point2::new(0.0, 1.0)];
    assert_eq!(check_quad(&collinear), Err(GeometryError::DegenerateQuad));
    let bowtie = [Point2::new(0.0, 0.0), Point2::new(1.0, 1.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
    assert_eq!(check_quad(&bowtie), Err(GeometryError::DegenerateQuad));
    let repeated = [Point2::new(0.0, 0.0), Point2::new(0.0, 0.0), Point2::new(1.0, 1.0), Point2::new(0.0, 1.0)];
    assert!(homography_between(&repeated, &canonical()).is_err());
}

fn quad_strategy() -> impl Strategy<Value = [Point2; 4]> {
    any::<u64>().prop_map(|s| common::random_convex_quad(&mut ChaCha8Rng::seed_from_u64(s)))
}

proptest! {
    #[test]
    fn corners_reproject(q in quad_strategy()) {
        let h = homography_between(&q, &canonical()).unwrap();
        for (src, dst) in q.iter().zip(canonical()) {
            prop_assert!(h.apply(*src).unwrap().distance(dst) < 1e-9);
        }
    }

    #[test]
    fn inverse_round_trips(q in quad_strategy(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let h = homography_between(&q, &canonical()).unwrap();
        let inv = h.inverse().unwrap();
        let p = Point2::new(u * 500.0, v * 300.0);
        let back = h.apply(inv.apply(p).unwrap()).unwrap();
        prop_assert!(back.distance(p) < 1e-9);
    }

    #[test]
    fn composition_is_application_in_order(a in quad_strategy(), b in quad_strategy(), u in 0.05f64..0.95, v in 0.05f64..0.95) {
        let hab = homography_between(&a, &b).unwrap();
        let hbc = homography_between(&b, &canonical()).unwrap();
        let hac = hab.compose(&hbc).unwrap();
        let direct = homography_between(&a, &canonical()).unwrap();
        let to_unit = homography_unit_square(&a, Direction::Inverse).unwrap();
        let p = to_unit.apply(Point2::new(u, v)).unwrap();
        prop_assert!(hac.apply(p).unwrap().distance(direct.apply(p).unwrap()) < 1e-7);
        prop_assert!(hac.apply(p).unwrap().distance(hbc.apply(hab.apply(p).unwrap()).unwrap()) < 1e-7);
    }

    #[test]
    fn normalized_to_unit_m33(q in quad_strategy()) {
        let m = homography_between(&q, &canonical()).unwrap().matrix();
        prop_assert_eq!(m[2][2], 1.0);
    }

    #[test]
    fn translation_is_exact(dx in -1e3f64..1e3, dy in -1e3f64..1e3, x in -1e3f64..1e3, y in -1e3f64..1e3) {
        let p = Homography::translation(dx, dy).apply(Point2::new(x, y)).unwrap();
        prop_assert_eq!(p, Point2::new(x + dx, y + dy));
    }
}
