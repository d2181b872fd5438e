use cvradar_core::config::{Config, Preset};
use cvradar_core::echo::{simulate_echo, EchoMatrix};
use cvradar_core::eval::{intensity, letter_scene, render, render_pgm, rmse, sweep, time_methods, Cnn, Imager, MatchedFilter};
use cvradar_core::geometry::ImagingGeometry;
use cvradar_core::image::{ImageComplex, ImageReal};
use cvradar_core::io::{self, DataFile};
use cvradar_core::nn::{loss, Network, NetworkKind};
use cvradar_core::operators::OperatorPlan;
use cvradar_core::rng;
use cvradar_core::scene::{generate_scene, render_ground_truth};
use cvradar_core::Result;
use num_complex::Complex64;
use proptest::prelude::*;

fn image(values: Vec<f64>) -> ImageReal {
    let n = values.len();
    ImageReal::from_values(n, 1, values, 0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rmse_is_a_metric(triple in prop::collection::vec((0.0..5.0f64, 0.0..5.0f64, 0.0..5.0f64), 1..40)) {
        let a = image(triple.iter().map(|t| t.0).collect());
        let b = image(triple.iter().map(|t| t.1).collect());
        let c = image(triple.iter().map(|t| t.2).collect());
        prop_assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        prop_assert_eq!(rmse(&a, &b).unwrap(), rmse(&b, &a).unwrap());
        prop_assert!(rmse(&a, &c).unwrap() <= rmse(&a, &b).unwrap() + rmse(&b, &c).unwrap() + 1e-12);
    }

    #[test]
    fn rmse_relates_to_half_squared_loss(pairs in prop::collection::vec((0.0..5.0f64, 0.0..5.0f64), 1..40)) {
        let p = image(pairs.iter().map(|t| t.0).collect());
        let t = image(pairs.iter().map(|t| t.1).collect());
        let n = pairs.len() as f64;
        let want = (2.0 * loss(&p, &t).unwrap() / n).sqrt();
        prop_assert!((rmse(&p, &t).unwrap() - want).abs() <= 1e-12 * want.max(1.0));
    }

    #[test]
    fn render_is_monotone(a in 0.0..10.0f64, b in 0.0..10.0f64, vmax in 10.0..20.0f64, dr in 1.0..80.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(intensity(lo, vmax, dr) <= intensity(hi, vmax, dr));
    }

    #[test]
    fn echo_files_round_trip(vals in prop::collection::vec((-1e6..1e6f64, -1e6..1e6f64), 6), gid in any::<u64>()) {
        let echo = EchoMatrix { num_freq: 2, num_angle: 3, values: vals.iter().map(|&(r, i)| Complex64::new(r, i)).collect(), geometry_id: gid };
        prop_assert_eq!(io::from_bytes(&io::echo_to_bytes(&echo)).unwrap(), DataFile::Echo(echo));
        let img = ImageComplex { width: 3, height: 2, values: vals.iter().map(|&(r, i)| Complex64::new(r, i)).collect(), geometry_id: gid };
        prop_assert_eq!(io::from_bytes(&io::complex_image_to_bytes(&img)).unwrap(), DataFile::ComplexImage(img));
    }
}

#[test]
fn rmse_examples() {
    assert_eq!(rmse(&image(vec![0.0; 4]), &image(vec![1.0; 4])).unwrap(), 1.0);
    assert!(rmse(&image(vec![0.0; 4]), &image(vec![1.0; 3])).is_err());
}

#[test]
fn intensity_examples() {
    assert_eq!(intensity(2.0, 2.0, 35.0), 255);
    assert_eq!(intensity(2.0 * 10f64.powf(-35.0 / 20.0), 2.0, 35.0), 0);
    assert_eq!(intensity(0.2, 2.0, 35.0), 109);
    assert_eq!(intensity(0.0, 2.0, 35.0), 0);
    assert_eq!(intensity(1e-9, 2.0, 35.0), 0);
}

#[test]
fn render_writes_pgm_and_warns_on_zero() {
    let dir = tempfile::tempdir().unwrap();
    let img = ImageReal::from_values(3, 2, vec![0.0, 1.0, 0.1, 0.5, 0.0, 0.01], 1).unwrap();
    let path = dir.path().join("a.pgm");
    assert_eq!(render(&img, 35.0, &path).unwrap(), None);
    let bytes = std::fs::read(&path).unwrap();
    assert!(bytes.starts_with(b"P5\n3 2\n255\n"));
    assert_eq!(bytes.len(), b"P5\n3 2\n255\n".len() + 6);
    let zero = ImageReal::from_values(2, 2, vec![0.0; 4], 1).unwrap();
    let r = render_pgm(&zero, 35.0).unwrap();
    assert!(r.warning.is_some());
    assert!(r.pixels.iter().all(|&p| p == 0));
    let negative = ImageReal { width: 1, height: 1, values: vec![-1.0], geometry_id: 0 };
    assert!(render_pgm(&negative, 35.0).is_err());
    assert!(render_pgm(&img, 0.0).is_err());
}

fn local_maxima(img: &ImageReal, floor: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for r in 0..img.height {
        for c in 0..img.width {
            let v = img.get(r, c);
            if v < floor {
                continue;
            }
            let mut is_max = true;
            for dr in -1isize..=1 {
                for dc in -1isize..=1 {
                    let (rr, cc) = (r as isize + dr, c as isize + dc);
                    if (dr, dc) == (0, 0) || rr < 0 || cc < 0 || rr >= img.height as isize || cc >= img.width as isize {
                        continue;
                    }
                    if img.get(rr as usize, cc as usize) >= v {
                        is_max = false;
                    }
                }
            }
            if is_max {
                out.push((r, c));
            }
        }
    }
    out
}

#[test]
fn letter_scene_has_one_peak_per_scatterer() {
    let g = ImagingGeometry::desk();
    for text in ["ISAR", "radar", "X"] {
        let scene = letter_scene(text, &g).unwrap();
        assert_eq!(scene, letter_scene(text, &g).unwrap());
        assert!(scene.scatterers.iter().all(|s| (s.amp.norm() - 1.0).abs() < 1e-15));
        // off the pixel grid
        assert!(scene.scatterers.iter().all(|s| {
            let fx = (s.x + g.region_x / 2.0) / g.pitch_x() - 0.5;
            (fx - fx.round()).abs() > 1e-3
        }));
        let truth = render_ground_truth(&scene, &g);
        let peaks = local_maxima(&truth, 0.3);
        assert_eq!(peaks.len(), scene.scatterers.len(), "{text}");
        for s in &scene.scatterers {
            let near = peaks.iter().any(|&(r, c)| (g.pixel_x(c) - s.x).abs() <= g.pitch_x() && (g.pixel_y(r) - s.y).abs() <= g.pitch_y());
            assert!(near, "{text}: no peak near ({}, {})", s.x, s.y);
        }
    }
    assert!(letter_scene("IS@R", &g).is_err());
}

struct Oracle;

impl Imager for Oracle {
    fn name(&self) -> &str {
        "oracle"
    }
    fn image(&self, _echo: &EchoMatrix) -> Result<ImageReal> {
        unreachable!()
    }
    fn image_for_trial(&self, _echo: &EchoMatrix, truth: &ImageReal) -> Result<ImageReal> {
        Ok(truth.clone())
    }
}

#[test]
fn sweep_reports_are_reproducible_and_exact_for_an_oracle() {
    let config = Config::preset(Preset::Desk);
    let plan = OperatorPlan::new(&config.geometry).unwrap();
    let mf = MatchedFilter::new(&plan);
    let snrs = [-10.0, 0.0, 10.0];
    let a = sweep(&[&Oracle, &mf], &config, &snrs, 3, 99).unwrap();
    let b = sweep(&[&Oracle, &mf], &config, &snrs, 3, 99).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.rmse_csv(), b.rmse_csv());
    assert!(a.rmse[0].iter().all(|&v| v == 0.0));
    assert!(a.rmse[1].iter().all(|&v| v > 0.0));
    assert_eq!(a.cell("oracle", 0.0), Some(0.0));
    let csv = a.rmse_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "method,snr_db,rmse,trials");
    assert_eq!(lines.len(), 1 + 2 * 3);
    assert!(lines[1..].iter().all(|l| l.ends_with(",3")));
    assert!(a.to_table().starts_with("# network outputs"));
    let c = sweep(&[&Oracle, &mf], &config, &snrs, 3, 100).unwrap();
    assert_ne!(a.rmse[1], c.rmse[1]);
    assert!(sweep(&[&mf], &config, &snrs, 0, 1).is_err());
}

#[test]
fn timing_reports_stages() {
    let config = Config::preset(Preset::Desk);
    let g = &config.geometry;
    let plan = OperatorPlan::new(g).unwrap();
    let net = Network::init(NetworkKind::Complex, &config.network.complex_specs(), g.id(), 1.0, &mut rng::stream(1, "t", 0, 0))
        .unwrap();
    let cnn = Cnn::new(&net, &plan).unwrap();
    let mf = MatchedFilter::new(&plan);
    let echoes: Vec<EchoMatrix> =
        (0..2).map(|i| simulate_echo(&generate_scene(g, 5, &mut rng::stream(1, "t", i, 1)), g)).collect();
    let stats = time_methods(&[&mf, &cnn], &echoes, 4).unwrap();
    assert_eq!(stats.len(), 2);
    assert_eq!(stats[0].method, "matched-filter");
    assert!(stats[0].network.is_none());
    assert_eq!(stats[1].method, "cv-cnn");
    let net_stage = stats[1].network.unwrap();
    assert!(stats.iter().all(|s| s.runs == 4 && s.total.mean > 0.0 && s.total.std >= 0.0));
    assert!((stats[1].total.mean - stats[1].operator.mean - net_stage.mean).abs() < 1e-6);
    assert!(time_methods(&[&mf], &[], 4).is_err());
}

#[test]
fn cnn_rejects_foreign_geometry() {
    let config = Config::preset(Preset::Desk);
    let plan = OperatorPlan::new(&config.geometry).unwrap();
    let net = Network::zeros(NetworkKind::Complex, &config.network.complex_specs(), 12345, 1.0).unwrap();
    assert!(Cnn::new(&net, &plan).is_err());
}

#[test]
fn image_files_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let g = ImagingGeometry::desk();
    let scene = generate_scene(&g, 4, &mut rng::stream(2, "io", 0, 0));
    let truth = render_ground_truth(&scene, &g);
    let echo = simulate_echo(&scene, &g);
    io::write_real_image(dir.path().join("t.img"), &truth).unwrap();
    io::write_echo(dir.path().join("e.echo"), &echo).unwrap();
    assert_eq!(io::read_real_image(dir.path().join("t.img")).unwrap(), truth);
    assert_eq!(io::read_echo(dir.path().join("e.echo")).unwrap(), echo);
    assert!(io::read_echo(dir.path().join("t.img")).is_err());
    let mf = OperatorPlan::new(&g).unwrap().adjoint_image(&echo).unwrap();
    io::write_complex_image(dir.path().join("m.img"), &mf).unwrap();
    assert_eq!(io::read_real_image(dir.path().join("m.img")).unwrap(), mf.magnitude());
}
