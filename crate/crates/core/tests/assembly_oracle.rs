mod common;

use common::{FormOracle, load_oracle, mirrored_pair, penalty_oracle, random_convex_polygon, scaled_error};
use pwdg::analytic::{l2_error, l2_norm, HankelSolution, PlaneWaveSolution};
use pwdg::assembly::{assemble, impedance_data_from_exact, BoundarySource, PwdgSpace};
use pwdg::conditioning::hermitian_part;
use pwdg::geometry::Point2;
use pwdg::linalg::{dot_conj, hermitian_eigenvalues, LuFactor, C64};
use pwdg::mesh::{unit_square_mesh, unit_square_mesh_seeded, MeshKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn check_all_entries(space: &PwdgSpace, g: &dyn BoundarySource, tol: f64) {
    let sys = assemble(space, g).unwrap();
    let oracle = FormOracle::new(space);
    let worst = oracle.worst_error(&sys.matrix);
    assert!(worst <= tol, "matrix entries off by {worst:e} of their integrand mass");
    let (want, scale) = load_oracle(space, g);
    for (i, got) in sys.rhs.iter().enumerate() {
        assert!(scaled_error(*got, want[i], scale[i]) <= tol, "b[{i}] = {got} vs {}", want[i]);
    }
}

#[test]
fn entries_match_quadrature_on_unit_square_meshes() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for kind in [MeshKind::Quad, MeshKind::Tri, MeshKind::Poly] {
        for m in 1..=3 {
            let k = rng.random_range(1.0..25.0);
            let p = rng.random_range(1..=7);
            let theta0 = rng.random_range(0.0..1.0);
            let mesh = unit_square_mesh_seeded(kind, m, rng.random()).unwrap();
            let space = PwdgSpace::new(mesh, k, p, theta0).unwrap();
            let g = |x: Point2, n: Point2| C64::new(x.x - 2.0 * n.y, x.y * x.y + n.x);
            check_all_entries(&space, &g, 1e-10);
        }
    }
}

#[test]
fn entries_match_quadrature_on_random_polygon_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let size = rng.random_range(0.05..1.5);
        let poly = random_convex_polygon(&mut rng, size);
        let mesh = mirrored_pair(&poly);
        let space = PwdgSpace::new(mesh, rng.random_range(1.0..30.0), rng.random_range(1..=9), 0.0).unwrap();
        let g = |x: Point2, _: Point2| C64::cis(3.0 * x.x);
        check_all_entries(&space, &g, 1e-10);
    }
}

#[test]
fn real_part_of_form_is_the_penalty() {
    let mesh = unit_square_mesh(MeshKind::Quad, 2).unwrap();
    let space = PwdgSpace::new(mesh, 10.0, 3, 0.0).unwrap();
    let sys = assemble(&space, &|_: Point2, _: Point2| C64::new(0.0, 0.0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let v: Vec<C64> = (0..space.dim())
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        // A_h(v, v) = conj(v)^T A v with A[test][trial]
        let form = dot_conj(&v, &sys.matrix.mul_vec(&v));
        let penalty = penalty_oracle(&space, &v);
        assert!(form.re >= 0.0);
        assert!((form.re - penalty).abs() <= 1e-9 * penalty, "{} vs {penalty}", form.re);
    }
}

#[test]
fn local_blocks_have_positive_hermitian_part() {
    let mesh = unit_square_mesh(MeshKind::Quad, 4).unwrap();
    for p in 1..=15 {
        let space = PwdgSpace::new(mesh.clone(), 10.0, p, 0.0).unwrap();
        let sys = assemble(&space, &|_: Point2, _: Point2| C64::new(0.0, 0.0)).unwrap();
        for e in 0..mesh.num_elements() {
            let ev = hermitian_eigenvalues(&hermitian_part(&sys.local_block(e).unwrap())).unwrap();
            assert!(ev[0] > 0.0, "p = {p}, element {e}: {}", ev[0]);
        }
    }
}

#[test]
fn plane_wave_is_recovered() {
    for kind in [MeshKind::Quad, MeshKind::Tri, MeshKind::Poly] {
        let mesh = unit_square_mesh(kind, 3).unwrap();
        let space = PwdgSpace::new(mesh, 8.0, 7, 0.0).unwrap();
        let exact = PlaneWaveSolution::new(8.0, space.directions().get(0)).unwrap();
        let sys = assemble(&space, &impedance_data_from_exact(&exact)).unwrap();
        let u = LuFactor::new(&sys.matrix).unwrap().solve(&sys.rhs);
        let err = l2_error(&space, &u, &exact).unwrap() / l2_norm(&space, &exact).unwrap();
        assert!(err <= 1e-8, "{kind}: {err}");
    }
}

#[test]
fn hankel_impedance_data_matches_finite_differences() {
    let exact = HankelSolution::new(10.0).unwrap();
    let g = impedance_data_from_exact(&exact);
    let h = 1e-6;
    for (x, n) in [
        (Point2::new(0.0, 0.3), Point2::new(-1.0, 0.0)),
        (Point2::new(1.0, 0.7), Point2::new(1.0, 0.0)),
        (Point2::new(0.4, 0.0), Point2::new(0.0, -1.0)),
        (Point2::new(0.9, 1.0), Point2::new(0.0, 1.0)),
    ] {
        let dn = (exact.try_value(x + n * h).unwrap() - exact.try_value(x - n * h).unwrap()) / (2.0 * h);
        let want = dn + C64::new(0.0, 10.0) * exact.try_value(x).unwrap();
        assert!((g.eval(x, n) - want).norm() <= 1e-6 * want.norm().max(1.0));
    }
}
