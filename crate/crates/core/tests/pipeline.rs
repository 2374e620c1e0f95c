use std::sync::OnceLock;

use num_complex::Complex;
use optidisc::detection::{pixel_photon_numbers, PixelArray};
use optidisc::disc::{mask_from_bits, reflect, Bits};
use optidisc::field::{FieldProfile, Grid1D};
use optidisc::noise::{noise_mode, NoiseParams, NoiseTable};
use optidisc::propagation::{to_detector_plane, PropagationSpec};
use optidisc::readout::{decide, mean_candidates, monte_carlo_error_rate, ReadConfig, Sampling};
use optidisc::{System64, SystemConfig64};

fn system() -> &'static System64 {
    static SYS: OnceLock<System64> = OnceLock::new();
    SYS.get_or_init(|| System64::with_defaults().unwrap())
}

fn shot() -> &'static NoiseTable<f64> {
    static T: OnceLock<NoiseTable<f64>> = OnceLock::new();
    T.get_or_init(|| system().noise_table(&NoiseParams::shot(25.0).unwrap()).unwrap())
}

fn squeezed() -> &'static NoiseTable<f64> {
    static T: OnceLock<NoiseTable<f64>> = OnceLock::new();
    T.get_or_init(|| system().noise_table(&NoiseParams::squeezed(10.0, 25.0).unwrap()).unwrap())
}

#[test]
fn spot_and_pitch_follow_configuration() {
    let s = system();
    assert!((s.pitch / s.w0 - 0.8).abs() < 1e-12);
    assert!((s.incident.photon_number() - 25.0).abs() < 1e-9);
    let b = s.array.boundaries();
    let r = s.lens.aperture_radius();
    assert!((b[0] + r).abs() < 1e-15 && (b[5] - r).abs() < 1e-15);
    assert!((b[3] - 0.4 * r).abs() < 1e-15 && (b[4] - 0.8 * r).abs() < 1e-15);
}

#[test]
fn blank_disc_is_a_mirror() {
    let s = system();
    let seq = s.sequence("000", 0.0).unwrap();
    let out = s.reflected(&seq).unwrap();
    assert_eq!(out.amplitude(), s.incident.amplitude());
}

#[test]
fn all_ones_flips_alternate_cells() {
    let s = system();
    let seq = s.sequence("111", 0.0).unwrap();
    let out = s.reflected(&seq).unwrap();
    for (x, (a, b)) in s.incident.grid().points().zip(out.amplitude().iter().zip(s.incident.amplitude())) {
        let level = [-1.0, 0.0, 1.0].iter().filter(|&&t| x > t * s.pitch).count();
        let sign = if level % 2 == 0 { 1.0 } else { -1.0 };
        assert!((a - b * sign).norm() < 1e-15);
    }
    assert!((out.photon_number() - 25.0).abs() < 1e-9);
}

#[test]
fn unmerged_matrix_holds_mirror_pairs_equal() {
    let s = system();
    let m = s.signal_matrix(0.0, false).unwrap();
    assert_eq!(m.size(), 8);
    let tol = 1e-8 * m.max_abs();
    for (a, b) in [("001", "100"), ("011", "110")] {
        for j in &m.labels {
            assert!((m.get(a, j).unwrap() - m.get(b, j).unwrap()).abs() < tol);
        }
    }
    let shifted = s.signal_matrix(s.w0 / 6.0, false).unwrap();
    let d = (shifted.get("001", "000").unwrap() - shifted.get("100", "000").unwrap()).abs();
    assert!(d > 1e-3 * shifted.max_abs());
}

#[test]
fn rows_are_distinct_and_extremes_differ_everywhere() {
    let m = system().signal_matrix(0.0, true).unwrap();
    for j in 0..6 {
        assert!(m.entries[0][j] != m.entries[5][j]);
    }
    for a in 0..6 {
        for b in a + 1..6 {
            assert_ne!(m.entries[a], m.entries[b]);
        }
    }
}

#[test]
fn gain_rescaling_keeps_candidates() {
    let t = shot();
    for i in 0..6 {
        let base = mean_candidates(t, i, 3.0).unwrap();
        let scale = [0.5, 2.0, 3.0, 0.1, 7.0, 1.5];
        let means: Vec<f64> = t.means(i).iter().zip(scale).map(|(m, c)| m * c).collect();
        let sigmas: Vec<f64> = t.sigmas(i).iter().zip(scale).map(|(s, c)| s * c).collect();
        assert_eq!(decide(&means, &sigmas, 3.0).unwrap().candidates(), base);
    }
}

#[test]
fn noise_modes_are_unit_and_flip_at_pixel_edges() {
    let t = shot();
    let s = system();
    for i in 0..6 {
        for j in 0..6 {
            let m = noise_mode(t.labels[i].clone(), &t.profiles[i], &t.gains[j], &s.array).unwrap();
            assert!((m.profile.photon_number() - 1.0).abs() < 1e-10);
            let u = &t.profiles[i];
            for (k, (w, a)) in m.profile.amplitude().iter().zip(u.amplitude()).enumerate() {
                let x = u.grid().x(k);
                match s.array.pixel_of(x) {
                    None => assert_eq!(w.norm(), 0.0),
                    Some(p) => {
                        let ratio = (w * a.conj()).re * t.gains[j].gains[p];
                        assert!(ratio >= -1e-30);
                    }
                }
            }
        }
    }
}

#[test]
fn squeezed_basis_reconstructs_every_diagonal_mode() {
    let t = squeezed();
    let s = system();
    assert!(t.basis.dimension() <= 6 && t.basis.dimension() >= 1);
    assert!(t.basis.orthonormality_error().unwrap() < 1e-10);
    for i in 0..6 {
        let m = noise_mode(t.labels[i].clone(), &t.profiles[i], &t.gains[i], &s.array).unwrap();
        let p = t.basis.parallel_fraction(&m.profile).unwrap();
        assert!((1.0 - p).abs() < 1e-8);
    }
}

#[test]
fn classical_noise_grows_with_the_mean_only() {
    let s = system();
    let c = s.noise_table(&s.config.classical_noise().unwrap()).unwrap();
    let sh = shot();
    for i in 0..6 {
        for j in 0..6 {
            let (a, b) = (c.budget(i, j), sh.budget(i, j));
            assert_eq!(a.mean, b.mean);
            assert!((a.var_quantum - b.var_quantum).abs() < 1e-12 * b.var_quantum);
            let expected = 10.0 * a.mean * a.mean / 25.0;
            assert!((a.var_classical - expected).abs() <= 1e-12 * expected.max(1e-300));
        }
    }
}

#[test]
fn noiseless_limit_never_errs() {
    let t = shot().scale_variances(1e-12);
    let r = monte_carlo_error_rate(&t, &ReadConfig { trials: 500, ..ReadConfig::default() }).unwrap();
    for s in &r.sequences {
        // only the diagonal can leave its 3σ band, and then nothing is read
        assert_eq!(s.errors, 0);
        assert_eq!(s.ambiguous, 0);
        assert_eq!(s.correct + s.none, 500);
    }
}

#[test]
fn monte_carlo_is_reproducible() {
    let cfg = ReadConfig { trials: 300, seed: 42, ..ReadConfig::default() };
    let a = monte_carlo_error_rate(squeezed(), &cfg).unwrap();
    let b = monte_carlo_error_rate(squeezed(), &cfg).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    let other = monte_carlo_error_rate(squeezed(), &ReadConfig { seed: 43, ..cfg }).unwrap();
    assert_ne!(a, other);
}

#[test]
fn error_rate_falls_with_photon_number() {
    let s = system();
    let cfg = ReadConfig { trials: 4000, seed: 5, ..ReadConfig::default() };
    let rates: Vec<f64> = [10.0, 25.0, 100.0]
        .iter()
        .map(|&n| {
            let t = s.noise_table(&NoiseParams::shot(n).unwrap()).unwrap();
            monte_carlo_error_rate(&t, &cfg).unwrap().mean_failure_rate()
        })
        .collect();
    assert!(rates[0] >= rates[1] && rates[1] >= rates[2], "{rates:?}");
}

#[test]
fn correlated_sampling_matches_marginals() {
    let t = squeezed();
    for i in 0..6 {
        let cov = t.pixel_covariance(i).unwrap();
        for j in 0..6 {
            let g = t.gains[j].gains;
            let v: f64 = (0..5).flat_map(|k| (0..5).map(move |l| (k, l))).map(|(k, l)| g[k] * g[l] * cov[k][l]).sum();
            let want = t.budget(i, j).var_total;
            assert!((v - want).abs() < 5e-3 * want, "{i}{j} {v} {want}");
        }
    }
    let cfg = ReadConfig { trials: 2000, seed: 9, sampling: Sampling::Correlated, ..ReadConfig::default() };
    let r = monte_carlo_error_rate(t, &cfg).unwrap();
    assert!(r.mean_failure_rate() < 0.5);
}

#[test]
fn detected_photons_exclude_aperture_losses() {
    let s = system();
    let set = s.far_fields(0.0).unwrap();
    let (_, blank) = &set.profiles[0];
    let detected: f64 = pixel_photon_numbers(blank, &s.array).unwrap().iter().sum();
    assert!(detected < 25.0 && detected > 20.0, "{detected}");
    for u in &shot().profiles {
        let n: f64 = pixel_photon_numbers(u, &s.array).unwrap().iter().sum();
        assert!((n - 25.0).abs() < 1e-9);
    }
}

#[test]
fn slit_far_field_is_a_sinc() {
    // a uniform line source of width a radiates a·sinc(k a s / 2)
    let lambda = 780e-9;
    let a = 2e-6;
    let spec = PropagationSpec::for_aperture(lambda, 0.3, 4e-3).unwrap();
    let grid = Grid1D::symmetric(2.0 * a, 4001).unwrap();
    let u = FieldProfile::from_fn(grid, |x: f64| {
        Complex::new(if x.abs() <= a / 2.0 { 1.0 } else { 0.0 }, 0.0)
    })
    .unwrap();
    let far = to_detector_plane(&u, &spec).unwrap();
    let k = std::f64::consts::TAU / lambda;
    let f = spec.focal_length;
    for (xi, v) in far.grid().points().zip(far.amplitude()).step_by(37) {
        if xi.abs() > spec.aperture_radius() {
            assert_eq!(v.norm(), 0.0);
            continue;
        }
        let r0 = (f * f + xi * xi).sqrt();
        let s = xi / r0;
        let arg = k * a * s / 2.0;
        let sinc = if arg.abs() < 1e-12 { 1.0 } else { arg.sin() / arg };
        let expected = (f / r0) * (k / (std::f64::consts::TAU * r0)).sqrt() * a * sinc.abs();
        assert!((v.norm() - expected).abs() < 2e-3 * (f / r0) * (k / (std::f64::consts::TAU * r0)).sqrt() * a);
    }
}

#[test]
fn equal_stripes_are_available_but_not_default() {
    let s = system();
    let eq = PixelArray::equal(s.lens.aperture_radius()).unwrap();
    assert_ne!(eq.boundaries(), s.array.boundaries());
    let cfg = SystemConfig64 {
        pixel_inner: 0.2,
        pixel_outer: 0.6,
        ..Default::default()
    };
    let alt = System64::new(cfg).unwrap();
    for (a, b) in alt.array.boundaries().iter().zip(eq.boundaries()) {
        assert!((a - b).abs() < 1e-18);
    }
}

#[test]
fn mask_grid_must_cover_the_bits() {
    let s = system();
    let narrow = Grid1D::symmetric(s.pitch, 64).unwrap();
    let seq = s.sequence("101", 0.0).unwrap();
    assert!(mask_from_bits(&seq, narrow).is_err());
    let mask = mask_from_bits(&seq, *s.incident.grid()).unwrap();
    let out = reflect(&s.incident, &mask).unwrap();
    assert_eq!(out.grid().len(), s.incident.grid().len());
    assert_eq!("101".parse::<Bits>().unwrap().count_ones(), 2);
}
