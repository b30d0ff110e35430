use cgmimo::detect::{detect_cg, detect_cgls, detect_explicit, detect_neumann, Link, Tracker};
use cgmimo::linalg::{gram_regularized, ComplexMatrix, ComplexVector, Side};
use cgmimo::phy::channel::complex_gaussian;
use cgmimo::phy::{rayleigh_channel, Constellation, Modulation};
use cgmimo::solvers::neumann_inverse;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn received(h: &ComplexMatrix, c: &Constellation, link: &Link, rng: &mut ChaCha8Rng) -> ComplexVector {
    let n = c.points().len();
    let x = ComplexVector::from_fn(h.cols(), |_| c.points()[rng.gen_range(0..n)]);
    let hx = h.matvec(&x).unwrap();
    ComplexVector::from_fn(h.rows(), |i| hx[i] + complex_gaussian(rng) * link.n0.sqrt())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn cg_with_u_iterations_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let c = Constellation::new(Modulation::Qam16);
    for (b, u) in [(8, 4), (32, 8), (64, 16)] {
        for snr_db in [0.0, 10.0, 25.0] {
            let h = rayleigh_channel(b, u, &mut rng);
            let link = Link::uplink(10f64.powf(snr_db / 10.0), u);
            let y = received(&h, &c, &link, &mut rng);
            let e = detect_explicit(&h, &y, &link, &c).unwrap();
            let cg = detect_cg(&h, &y, &link, &c, u, Tracker::Exact).unwrap();
            assert!(cg.xhat.sub(&e.xhat).norm2() < 1e-8 * e.xhat.norm2());
            for (a, b) in cg.llrs.iter().zip(&e.llrs) {
                assert!((a - b).abs() < 1e-6, "{a} vs {b}");
            }
        }
    }
}

#[test]
fn cgls_detection_matches_cg_estimates() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let c = Constellation::new(Modulation::Qam16);
    let h = rayleigh_channel(32, 8, &mut rng);
    let link = Link::uplink(20.0, 8);
    let y = received(&h, &c, &link, &mut rng);
    for k in 1..=8 {
        let a = detect_cg(&h, &y, &link, &c, k, Tracker::Approx).unwrap();
        let b = detect_cgls(&h, &y, &link, &c, k).unwrap();
        assert!(a.xhat.sub(&b.xhat).norm2() < 1e-9 * a.xhat.norm2(), "k = {k}");
        // both drive the approximate tracker with the same step sizes
        for (x, y) in a.mu.iter().zip(&b.mu) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

#[test]
fn approximate_tracker_is_close_on_tall_channels() {
    // B/U = 16 makes the Gram matrix nearly diagonal
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let c = Constellation::new(Modulation::Qam64);
    let (mut dmu, mut drho) = (Vec::new(), Vec::new());
    for _ in 0..200 {
        let h = rayleigh_channel(128, 8, &mut rng);
        let link = Link::uplink(10f64.powf(rng.gen_range(0.0..2.0)), 8);
        let y = received(&h, &c, &link, &mut rng);
        let k = rng.gen_range(1..=4);
        let e = detect_cg(&h, &y, &link, &c, k, Tracker::Exact).unwrap();
        let a = detect_cg(&h, &y, &link, &c, k, Tracker::Approx).unwrap();
        dmu.extend(a.mu.iter().zip(&e.mu).map(|(a, e)| (a - e).abs() / e.abs()));
        drho.extend(a.rho.iter().zip(&e.rho).map(|(a, e)| (a - e).abs() / e.abs()));
    }
    let (m, r) = (median(dmu), median(drho));
    assert!(m < 0.15 && r < 0.15, "median rel deviation mu {m}, rho {r}");
}

#[test]
fn neumann_residual_shrinks_with_terms() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let h = rayleigh_channel(128, 8, &mut rng);
    let a = gram_regularized(&h, 0.1, Side::Uplink);
    let full = a.to_full();
    let eye = ComplexMatrix::identity(8);
    let residual = |k| eye.sub(&neumann_inverse(&a, k).unwrap().matmul(&full).unwrap()).unwrap().frobenius_norm();
    let r: Vec<f64> = (1..=3).map(residual).collect();
    assert!(r[0] > r[1] && r[1] > r[2], "{r:?}");
}

#[test]
fn neumann_detection_improves_with_terms_on_tall_channels() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let c = Constellation::new(Modulation::Qam16);
    let h = rayleigh_channel(128, 8, &mut rng);
    let link = Link::uplink(100.0, 8);
    let y = received(&h, &c, &link, &mut rng);
    let e = detect_explicit(&h, &y, &link, &c).unwrap();
    let err = |k| detect_neumann(&h, &y, &link, &c, k).unwrap().xhat.sub(&e.xhat).norm2();
    assert!(err(1) > err(2) && err(2) > err(3));
}
