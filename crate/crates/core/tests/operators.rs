use cvradar_core::echo::{simulate_echo, EchoMatrix};
use cvradar_core::geometry::ImagingGeometry;
use cvradar_core::image::{ImageComplex, ImageReal};
use cvradar_core::operators::{ista_reconstruct, oracle_adjoint, IstaOptions, OperatorPlan};
use cvradar_core::rng;
use cvradar_core::scene::{Scatterer, Scene};
use cvradar_core::Error;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn desk() -> ImagingGeometry {
    ImagingGeometry::desk()
}

fn small() -> ImagingGeometry {
    ImagingGeometry { num_freq: 32, num_angle: 32, pixels_x: 32, pixels_y: 32, region_x: 0.096, region_y: 0.096, ..desk() }
}

fn gaussian(r: &mut impl Rng) -> Complex64 {
    Complex64::new(StandardNormal.sample(r), StandardNormal.sample(r))
}

fn unit_at(x: f64, y: f64, g: &ImagingGeometry) -> EchoMatrix {
    simulate_echo(&Scene::new(vec![Scatterer { x, y, amp: 1.0.into() }], g), g)
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

#[test]
fn adjoint_identity_on_random_pairs() {
    let g = desk();
    let plan = OperatorPlan::new(&g).unwrap();
    let mut r = rng::stream(17, "adjoint", 0, 0);
    for _ in 0..20 {
        let mut u = ImageComplex::zeros(&g);
        u.values.iter_mut().for_each(|v| *v = gaussian(&mut r));
        let mut v = EchoMatrix::zeros(&g);
        v.values.iter_mut().for_each(|x| *x = gaussian(&mut r));
        let au = plan.forward_echo(&u).unwrap();
        let ahv = plan.adjoint_image(&v).unwrap();
        let lhs = dot(&au.values, &v.values);
        let rhs = dot(&u.values, &ahv.values);
        let nu = u.norm();
        let nv = v.values.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        assert!((lhs - rhs).norm() <= 1e-9 * nu * nv, "{lhs} vs {rhs}");
    }
}

/// Per-pixel direct evaluation with every phase recomputed from scratch.
fn naive_adjoint(echo: &EchoMatrix, g: &ImagingGeometry) -> Vec<Complex64> {
    let c = 299_792_458.0;
    let k = |m: usize| 2.0 * std::f64::consts::PI * (g.f_min + (g.f_max - g.f_min) * m as f64 / (g.num_freq - 1) as f64) / c;
    let phi = |n: usize| g.phi_min + (g.phi_max - g.phi_min) * n as f64 / (g.num_angle - 1) as f64;
    let px = |p: usize| -g.region_x / 2.0 + (p as f64 + 0.5) * g.region_x / g.pixels_x as f64;
    let py = |q: usize| -g.region_y / 2.0 + (q as f64 + 0.5) * g.region_y / g.pixels_y as f64;
    let raw = |e: &EchoMatrix, x: f64, y: f64| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for m in 0..g.num_freq {
            for n in 0..g.num_angle {
                let arg = 2.0 * k(m) * (x * phi(n).cos() + y * phi(n).sin());
                acc += e.get(m, n) * Complex64::from_polar(1.0, arg);
            }
        }
        acc
    };
    let mut ones = EchoMatrix::zeros(g);
    ones.values.fill(1.0.into());
    let mut peak: f64 = 0.0;
    for q in 0..g.pixels_y {
        for p in 0..g.pixels_x {
            peak = peak.max(raw(&ones, px(p), py(q)).norm());
        }
    }
    let mut out = Vec::with_capacity(g.pixel_count());
    for q in 0..g.pixels_y {
        for p in 0..g.pixels_x {
            out.push(raw(echo, px(p), py(q)) / peak);
        }
    }
    out
}

#[test]
fn oracle_matches_naive_reference() {
    let g = small();
    let mut r = rng::stream(3, "oracle", 0, 0);
    for trial in 0..3u64 {
        let n = 1 + (trial as usize * 4);
        let scs = (0..n)
            .map(|_| Scatterer { x: r.gen_range(-0.048..0.048), y: r.gen_range(-0.048..0.048), amp: gaussian(&mut r) })
            .collect();
        let echo = simulate_echo(&Scene::new(scs, &g), &g);
        let fast = oracle_adjoint(&echo, &g).unwrap();
        let slow = naive_adjoint(&echo, &g);
        let scale = slow.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let dev = fast.values.iter().zip(&slow).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(dev <= 1e-12 * scale, "trial {trial}: {dev:e} of {scale:e}");
    }
}

#[test]
fn oracle_centered_scatterer_has_unit_peak_at_center() {
    // odd grid so a pixel sits on the rotation center
    let g = ImagingGeometry { pixels_x: 33, pixels_y: 33, region_x: 0.099, region_y: 0.099, ..desk() };
    let img = oracle_adjoint(&unit_at(0.0, 0.0, &g), &g).unwrap().magnitude();
    assert_eq!(img.argmax(), (16, 16));
    assert!((img.max() - 1.0).abs() < 1e-9);
}

#[test]
fn oracle_is_symmetric_in_y_for_a_line_scene() {
    // a symmetric aperture makes phi -> -phi a symmetry of the sample set
    let g = ImagingGeometry { phi_min: -0.03, phi_max: 0.03, ..small() };
    let scene = Scene::new(
        vec![
            Scatterer { x: 0.011, y: 0.0, amp: 1.5.into() },
            Scatterer { x: -0.027, y: 0.0, amp: (-0.7).into() },
            Scatterer { x: 0.003, y: 0.0, amp: 0.2.into() },
        ],
        &g,
    );
    let img = oracle_adjoint(&simulate_echo(&scene, &g), &g).unwrap();
    let scale = img.max_abs();
    for q in 0..g.pixels_y {
        for p in 0..g.pixels_x {
            let a = img.get(q, p);
            let b = img.get(g.pixels_y - 1 - q, p);
            assert!((a - b).norm() <= 1e-9 * scale);
        }
    }
}

#[test]
fn oracle_refuses_oversized_geometry() {
    let g = ImagingGeometry::paper();
    let err = oracle_adjoint(&EchoMatrix::zeros(&g), &g).unwrap_err();
    assert!(matches!(err, Error::TooLarge { .. }));
}

#[test]
fn fast_adjoint_close_to_oracle_near_center() {
    let g = desk();
    let plan = OperatorPlan::new(&g).unwrap();
    // a scatterer on the pixel nearest the origin
    let (x, y) = (g.pixel_x(32), g.pixel_y(32));
    let echo = unit_at(x, y, &g);
    let fast = plan.adjoint_image(&echo).unwrap().get(32, 32);
    let exact = oracle_adjoint(&echo, &g).unwrap().get(32, 32);
    let rel = (fast - exact).norm() / exact.norm();
    eprintln!("center-pixel gap between grid and exact matched filter: {rel:.3e}");
    assert!(rel < 0.02, "center-pixel gap {rel:e}");
}

fn neighborhood_peak(img: &ImageReal, row: usize, col: usize, radius: usize) -> (usize, usize) {
    let mut best = (row, col);
    for r in row.saturating_sub(radius)..(row + radius + 1).min(img.height) {
        for c in col.saturating_sub(radius)..(col + radius + 1).min(img.width) {
            if img.get(r, c) > img.get(best.0, best.1) {
                best = (r, c);
            }
        }
    }
    best
}

#[test]
fn central_quarter_peaks_within_one_pixel() {
    let g = desk();
    let plan = OperatorPlan::new(&g).unwrap();
    let mut r = rng::stream(8, "peaks", 0, 0);
    for _ in 0..20 {
        let x = r.gen_range(-g.region_x / 4.0..g.region_x / 4.0);
        let y = r.gen_range(-g.region_y / 4.0..g.region_y / 4.0);
        let img = plan.adjoint_image(&unit_at(x, y, &g)).unwrap().magnitude();
        let (row, col) = img.argmax();
        let dx = (g.pixel_x(col) - x).abs() / g.pitch_x();
        let dy = (g.pixel_y(row) - y).abs() / g.pitch_y();
        assert!(dx <= 1.0 && dy <= 1.0, "({x}, {y}) imaged at ({col}, {row})");
    }
}

/// Pixels at or above -3 dB of the local peak, flood-filled from the peak.
fn mainlobe_area(img: &ImageReal, peak: (usize, usize)) -> usize {
    let level = img.get(peak.0, peak.1) / 2f64.sqrt();
    let mut seen = vec![false; img.values.len()];
    let mut stack = vec![peak];
    let mut area = 0;
    while let Some((r, c)) = stack.pop() {
        let k = r * img.width + c;
        if seen[k] || img.get(r, c) < level {
            continue;
        }
        seen[k] = true;
        area += 1;
        if r > 0 {
            stack.push((r - 1, c));
        }
        if c > 0 {
            stack.push((r, c - 1));
        }
        if r + 1 < img.height {
            stack.push((r + 1, c));
        }
        if c + 1 < img.width {
            stack.push((r, c + 1));
        }
    }
    area
}

#[test]
fn corner_scatterer_defocuses() {
    // 0.75 mm pixels so the -3 dB mainlobe spans many pixels
    let g = ImagingGeometry { pixels_x: 256, pixels_y: 256, ..desk() };
    let plan = OperatorPlan::new(&g).unwrap();
    let center = plan.adjoint_image(&unit_at(g.pixel_x(128), g.pixel_y(128), &g)).unwrap().magnitude();
    let corner = plan.adjoint_image(&unit_at(g.pixel_x(236), g.pixel_y(236), &g)).unwrap().magnitude();
    let a0 = mainlobe_area(&center, center.argmax());
    let a1 = mainlobe_area(&corner, neighborhood_peak(&corner, 236, 236, 24));
    assert!(a1 > a0, "corner mainlobe {a1} px, center {a0} px");
    assert!(corner.max() < center.max());
}

#[test]
fn impulse_forward_tracks_point_echo() {
    // the rectangular model against the exact echo of the same on-pixel point
    let g = desk();
    let plan = OperatorPlan::new(&g).unwrap();
    let mut img = ImageComplex::zeros(&g);
    img.values[32 * g.pixels_x + 32] = 1.0.into();
    let model = plan.forward_echo(&img).unwrap();
    let exact = unit_at(g.pixel_x(32), g.pixel_y(32), &g);
    let s = 1.0 / plan.scale();
    let worst = model.values.iter().zip(&exact.values).map(|(a, b)| (a * s - b).norm()).fold(0.0, f64::max);
    // amplitudes are flat; the residual is the phase error of the grid approximation
    assert!(model.values.iter().all(|v| (v.norm() * s - 1.0).abs() < 1e-12));
    eprintln!("grid model vs exact point echo, max deviation: {worst:.3e}");
    assert!(worst < 0.05, "max deviation {worst:e}");
}

#[test]
fn ista_objective_is_monotone() {
    let g = desk();
    let plan = OperatorPlan::new(&g).unwrap();
    let echo = unit_at(0.01, -0.02, &g);
    let out = ista_reconstruct(&echo, &plan, IstaOptions { iters: 100, ..Default::default() }).unwrap();
    assert_eq!(out.objective.len(), 101);
    let slack = 1e-10 * out.objective[0];
    for w in out.objective.windows(2) {
        assert!(w[1] <= w[0] + slack, "{} -> {}", w[0], w[1]);
    }
    assert!(out.objective.last().unwrap() < &(0.1 * out.objective[0]));
}

#[test]
fn ista_recovers_three_sparse_on_grid_scene() {
    let g = desk();
    let plan = OperatorPlan::new(&g).unwrap();
    let pixels = [(20usize, 25usize), (40, 33), (31, 44)];
    let scs = pixels
        .iter()
        .zip([Complex64::new(1.0, 0.0), Complex64::new(0.0, -0.8), Complex64::new(-0.6, 0.6)])
        .map(|(&(row, col), amp)| Scatterer { x: g.pixel_x(col), y: g.pixel_y(row), amp })
        .collect();
    let echo = simulate_echo(&Scene::new(scs, &g), &g);
    let out = ista_reconstruct(&echo, &plan, IstaOptions::default()).unwrap();
    let mag = out.image.magnitude();
    let mut order: Vec<usize> = (0..mag.values.len()).collect();
    order.sort_by(|&a, &b| mag.values[b].total_cmp(&mag.values[a]));
    let mut top: Vec<(usize, usize)> = order[..3].iter().map(|&k| (k / g.pixels_x, k % g.pixels_x)).collect();
    top.sort();
    let mut want = pixels.to_vec();
    want.sort();
    assert_eq!(top, want);
}

#[test]
fn ista_with_huge_lambda_returns_zero() {
    let g = desk();
    let plan = OperatorPlan::new(&g).unwrap();
    let echo = unit_at(0.0, 0.0, &g);
    let out = ista_reconstruct(&echo, &plan, IstaOptions { lambda: Some(1e12), iters: 5, ..Default::default() }).unwrap();
    assert!(out.image.values.iter().all(|v| v.norm() == 0.0));
}

#[test]
fn ista_rejects_bad_options() {
    let g = desk();
    let plan = OperatorPlan::new(&g).unwrap();
    let echo = unit_at(0.0, 0.0, &g);
    assert!(ista_reconstruct(&echo, &plan, IstaOptions { iters: 0, ..Default::default() }).is_err());
    assert!(ista_reconstruct(&echo, &plan, IstaOptions { lambda: Some(-1.0), ..Default::default() }).is_err());
}
