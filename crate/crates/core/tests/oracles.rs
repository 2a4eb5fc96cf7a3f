//! Independent numerical checks of the closed-form kernels and the integrator.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

use phcqed::band_model::{AtomCoupling, BandEdge};
use phcqed::dynamics::{
    evolve_single_excitation, evolve_single_excitation_with, AmplitudeState, IntegratorOptions,
    LossModel,
};
use phcqed::interactions::{
    coupling_matrix_1d, coupling_matrix_2d, multi_drive_sum, two_d_factor, AtomArray, AtomArray2d,
    CouplingMatrix, DriveField,
};
use phcqed::par::Exec;
use phcqed::units::hz_to_rad;

fn apcw(detuning_hz: f64) -> (BandEdge, AtomCoupling) {
    let band = BandEdge::zone_boundary(hz_to_rad(333e12), 10.6, 371e-9).unwrap();
    let c = AtomCoupling::builder(hz_to_rad(detuning_hz), hz_to_rad(5e6))
        .g_cell(hz_to_rad(12.2e9))
        .build(&band)
        .unwrap();
    (band, c)
}

/// `int_{-inf}^{inf} cos(b t) / (1 + t^2) dt` by composite Simpson on
/// `[0, T]` plus the leading integration-by-parts tail.
fn lorentz_cosine(b: f64) -> f64 {
    let t_max = 2.0e4_f64;
    let h = 0.005;
    let n = (t_max / h) as usize;
    let f = |t: f64| (b * t).cos() / (1.0 + t * t);
    let mut s = f(0.0) + f(t_max);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(i as f64 * h);
    }
    let body = s * h / 3.0;
    let tail = if b == 0.0 {
        (1.0 / t_max).atan()
    } else {
        -(b * t_max).sin() / (b * (1.0 + t_max * t_max))
    };
    2.0 * (body + tail)
}

/// Exchange rate from the k-space sum `g^2 int dq e^{i q z} / (Delta + A q^2)`
/// over the quadratic band at zero photon loss.
fn u_from_k_integral(band: &BandEdge, c: &AtomCoupling, z: f64) -> f64 {
    let a_coef = band.curvature_coefficient();
    let l = (a_coef / c.detuning).sqrt();
    let g2 = c.g(band).powi(2);
    g2 / (c.detuning * l) * lorentz_cosine(z.abs() / l)
}

#[test]
fn one_d_kernel_matches_k_integral() {
    for detuning in [400e9, 800e9, 1300e9, 2800e9] {
        let (band, c) = apcw(detuning);
        let positions: Vec<f64> = [0.0, 1.0, 7.0, 20.0, 45.0].iter().map(|m| m * band.a).collect();
        let atoms = AtomArray::flat(positions.clone(), c.gamma).unwrap();
        let u = coupling_matrix_1d(&atoms, &band, &c).unwrap();
        for (j, z) in positions.iter().enumerate() {
            let want = u_from_k_integral(&band, &c, *z);
            let got = u.get(0, j).re;
            assert!(((got - want) / want).abs() < 1e-6, "Delta = {detuning:e}, z = {z:e}: {got} vs {want}");
        }
    }
}

/// `int d^2q e^{i q.r} / (q^2 + 1)` via the proper-time representation
/// `1 / (q^2 + 1) = int_0^inf ds e^{-s (q^2 + 1)}`, with the Gaussian
/// k-space integrals done as separable trapezoid sums and the `s` integral
/// as a trapezoid rule in `ln s`.
fn two_d_k_integral(r: f64) -> f64 {
    let gaussian_sum = |x: f64, s: f64| -> f64 {
        let q_max = (46.0 / s).sqrt();
        let h = 2.0 * PI / (x + (4.0 * s * 46.0).sqrt()) / 1.5;
        let n = (q_max / h).ceil() as usize;
        let mut acc = 1.0;
        for k in 1..=n {
            let q = k as f64 * h;
            acc += 2.0 * (q * x).cos() * (-s * q * q).exp();
        }
        acc * h
    };
    let (u_lo, u_hi) = ((1e-7_f64).ln(), 60.0_f64.ln());
    let du = 0.01;
    let n = ((u_hi - u_lo) / du).ceil() as usize;
    let du = (u_hi - u_lo) / n as f64;
    let mut total = 0.0;
    for i in 0..=n {
        let s = (u_lo + i as f64 * du).exp();
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        // Put the separation along the diagonal so both sums oscillate.
        let x = r / 2f64.sqrt();
        total += w * s * (-s).exp() * gaussian_sum(x, s) * gaussian_sum(x, s);
    }
    total * du
}

#[test]
fn two_d_kernel_matches_k_integral() {
    for r in [0.1, 0.3, 0.7, 1.0, 2.0, 3.5, 5.0] {
        // (2/pi) K0 = (2/pi) (1/2pi) int d^2q e^{iqr} / (q^2 + 1)
        let want = 2.0 / PI * two_d_k_integral(r) / (2.0 * PI);
        let got = two_d_factor(r, 1.0);
        assert!(((got - want) / want).abs() < 1e-4, "r/L = {r}: {got} vs {want}");
    }
}

fn hermitian_eigen(u: &CouplingMatrix) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = u.values.clone().symmetric_eigen();
    (eig.eigenvalues.iter().cloned().collect(), eig.eigenvectors)
}

fn random_chain(n: usize, seed: u64) -> CouplingMatrix {
    let (band, c) = apcw(600e9);
    let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (x >> 11) as f64 / (1u64 << 53) as f64
    };
    let positions: Vec<f64> = (0..n).map(|_| 60.0 * band.a * next()).collect();
    let bloch: Vec<Complex64> = (0..n).map(|_| Complex64::from_polar(0.5 + next(), 2.0 * PI * next())).collect();
    let atoms = AtomArray::new(positions, bloch, c.gamma).unwrap();
    coupling_matrix_1d(&atoms, &band, &c).unwrap()
}

#[test]
fn evolution_frequencies_match_diagonalization() {
    for n in 2..=6 {
        let u = random_chain(n, n as u64);
        let (lambda, v) = hermitian_eigen(&u);
        let scale = lambda.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
        let psi0 = AmplitudeState::localized(n, 0).unwrap();
        // Phases stay below pi so frequencies can be read off unambiguously.
        let t = 2.5 / scale;
        let times: Vec<f64> = (1..=5).map(|k| k as f64 * t / 5.0).collect();
        let traj = evolve_single_excitation(&u, &LossModel::lossless(), &psi0, &times).unwrap();
        let c0 = v.adjoint() * DVector::from_column_slice(&psi0.amplitudes);
        for state in &traj.states {
            let exact: DVector<Complex64> = &v
                * DVector::from_iterator(n, (0..n).map(|k| c0[k] * Complex64::from_polar(1.0, -lambda[k] * state.time)));
            for (a, b) in state.amplitudes.iter().zip(exact.iter()) {
                assert!((a - b).norm() < 1e-8, "N = {n}, t = {}", state.time);
            }
            let ct = v.adjoint() * DVector::from_column_slice(&state.amplitudes);
            for k in 0..n {
                if c0[k].norm() < 1e-3 {
                    continue;
                }
                let freq = -(ct[k] / c0[k]).arg() / state.time;
                assert!((freq - lambda[k]).abs() <= 1e-8 * scale, "N = {n}: {freq} vs {}", lambda[k]);
            }
        }
    }
}

#[test]
fn two_d_matrix_scale_and_symmetry() {
    let (band, c) = apcw(800e9);
    let l = band.decay_length(c.detuning).unwrap();
    let pts = vec![[0.0, 0.0], [l, 0.0], [0.0, 2.0 * l], [3.0 * l, 4.0 * l]];
    let atoms = AtomArray2d::new(pts.clone(), vec![Complex64::new(1.0, 0.0); 4], c.gamma).unwrap();
    let u = coupling_matrix_2d(&atoms, &band, &c).unwrap();
    let g = c.g_cell * band.a / l;
    let pre = g * g / (2.0 * c.detuning);
    assert!(((u.get(0, 1).re - pre * two_d_factor(l, l)) / u.get(0, 1).re).abs() < 1e-14);
    assert!(((u.get(0, 3).re - pre * two_d_factor(5.0 * l, l)) / u.get(0, 3).re).abs() < 1e-14);
    assert_eq!(u.hermiticity_defect(), 0.0);
}

#[test]
fn parallel_evolution_matches_sequential() {
    let u = random_chain(40, 99);
    let psi0 = AmplitudeState::localized(40, 20).unwrap();
    let scale = u.max_abs();
    let times = [1.0 / scale, 4.0 / scale];
    let rates = vec![1e-3 * scale; 40];
    let opts = IntegratorOptions::default();
    let a = evolve_single_excitation_with(&u, &rates, &psi0, &times, opts, Exec::Sequential).unwrap();
    let b = evolve_single_excitation_with(&u, &rates, &psi0, &times, opts, Exec::Parallel).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coupling_matrices_are_hermitian(
        seed in 0u64..10_000,
        n in 1usize..12,
        detuning in 300e9f64..3000e9,
    ) {
        let (band, c) = apcw(detuning);
        let u = random_chain(n, seed);
        prop_assert!(u.hermiticity_defect() <= 1e-12);
        let atoms = AtomArray::chain(&band, n, 3, c.gamma).unwrap();
        let v = coupling_matrix_1d(&atoms, &band, &c).unwrap();
        prop_assert!(v.hermiticity_defect() <= 1e-12);
        for j in 0..n {
            prop_assert_eq!(v.get(j, j).im, 0.0);
        }
    }

    #[test]
    fn kernel_depends_on_z_over_l_only(
        z in 0.0f64..80.0,
        l in 0.5f64..50.0,
        k in 0.1f64..10.0,
        phase in 0.0f64..std::f64::consts::TAU,
    ) {
        let e = Complex64::from_polar(1.0, phase);
        let one = Complex64::new(1.0, 0.0);
        let a = phcqed::interactions::exponential_factor(0.0, z, l, e, one);
        let b = phcqed::interactions::exponential_factor(0.0, k * z, k * l, e, one);
        prop_assert!((a - b).norm() <= 1e-14 * a.norm().max(1e-300));
    }

    #[test]
    fn flipping_the_edge_negates_couplings(detuning in 300e9f64..3000e9, n in 2usize..8) {
        let (band, c) = apcw(detuning);
        let upper = band.with_alpha(-band.alpha).unwrap();
        let cu = AtomCoupling::builder(-c.detuning, c.gamma).g_cell(c.g_cell).build(&upper).unwrap();
        let atoms = AtomArray::chain(&band, n, 5, c.gamma).unwrap();
        let lo = coupling_matrix_1d(&atoms, &band, &c).unwrap();
        let hi = coupling_matrix_1d(&atoms, &upper, &cu).unwrap();
        prop_assert_eq!(lo.values, -hi.values);
    }

    #[test]
    fn drive_sums_are_additive(
        d1 in 300e9f64..900e9,
        d2 in 1000e9f64..2000e9,
        d3 in 2100e9f64..4000e9,
        r in 0.01f64..0.3,
    ) {
        let (band, c) = apcw(-100e9);
        let atoms = AtomArray::chain(&band, 6, 4, c.gamma).unwrap();
        let drive = |dl: f64| DriveField::lambda(r * hz_to_rad(dl), hz_to_rad(dl), c.detuning);
        let all = multi_drive_sum(&atoms, &band, &c, &[drive(d1), drive(d2), drive(d3)]).unwrap();
        let a = multi_drive_sum(&atoms, &band, &c, &[drive(d1)]).unwrap();
        let b = multi_drive_sum(&atoms, &band, &c, &[drive(d2), drive(d3)]).unwrap();
        let diff = (&all.values - (&a.values + &b.values)).iter().map(|v| v.norm()).fold(0.0, f64::max);
        prop_assert!(diff <= 1e-14 * all.max_abs());
    }
}
