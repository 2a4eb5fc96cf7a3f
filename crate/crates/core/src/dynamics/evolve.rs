use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{AmplitudeState, LossModel};
use crate::error::{ensure_finite, Error, Result};
use crate::interactions::CouplingMatrix;
use crate::par::{self, Exec};

/// Tolerances of the adaptive Dormand-Prince integrator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions { rtol: 1e-9, atol: 1e-12, max_steps: 10_000_000 }
    }
}

/// States sampled on a time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<AmplitudeState>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.time).collect()
    }

    /// Site populations, one row per sample.
    pub fn populations(&self) -> Vec<Vec<f64>> {
        self.states.iter().map(|s| s.populations()).collect()
    }

    pub fn norms(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.norm_sqr()).collect()
    }

    pub fn last(&self) -> Option<&AmplitudeState> {
        self.states.last()
    }
}

/// Farthest site from `origin` whose population reaches `threshold`, per sample.
pub fn light_cone_front(traj: &Trajectory, origin: usize, threshold: f64) -> Vec<(f64, usize)> {
    traj.states
        .iter()
        .map(|s| {
            let front = s
                .amplitudes
                .iter()
                .enumerate()
                .filter(|(_, a)| a.norm_sqr() >= threshold)
                .map(|(j, _)| j.abs_diff(origin))
                .max()
                .unwrap_or(0);
            (s.time, front)
        })
        .collect()
}

/// Evolves one excitation under `i d psi/dt = (U - (i/2) Gamma_eff) psi`
/// with identical atoms.
pub fn evolve_single_excitation(
    u: &CouplingMatrix,
    losses: &LossModel,
    psi0: &AmplitudeState,
    times: &[f64],
) -> Result<Trajectory> {
    let rates = vec![losses.gamma_eff(); u.len()];
    evolve_single_excitation_with(u, &rates, psi0, times, IntegratorOptions::default(), Exec::Sequential)
}

/// As [`evolve_single_excitation`] with one decay rate per atom, explicit
/// tolerances and a choice of sequential or row-parallel matrix products.
/// Both execution modes give bit-identical trajectories.
pub fn evolve_single_excitation_with(
    u: &CouplingMatrix,
    site_rates: &[f64],
    psi0: &AmplitudeState,
    times: &[f64],
    options: IntegratorOptions,
    exec: Exec,
) -> Result<Trajectory> {
    let n = u.len();
    if psi0.amplitudes.len() != n || site_rates.len() != n {
        return Err(Error::invalid(format!(
            "matrix is {n} x {n} but the state has {} sites and {} loss rates",
            psi0.amplitudes.len(),
            site_rates.len()
        )));
    }
    if site_rates.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
        return Err(Error::invalid("site loss rates must be finite and non-negative"));
    }
    if (psi0.norm_sqr() - 1.0).abs() > 1e-10 {
        return Err(Error::invalid(format!(
            "initial state must be normalized, |psi|^2 = {}",
            psi0.norm_sqr()
        )));
    }
    ensure_finite("t0", psi0.time)?;
    let mut prev = psi0.time;
    for &t in times {
        ensure_finite("time", t)?;
        if t < prev {
            return Err(Error::invalid("time grid must be non-decreasing and start after psi0"));
        }
        prev = t;
    }

    let rows: Vec<Complex64> = (0..n)
        .flat_map(|j| (0..n).map(move |l| (j, l)))
        .map(|(j, l)| u.values[(j, l)])
        .collect();
    let half_rates: Vec<f64> = site_rates.iter().map(|g| 0.5 * g).collect();
    let system = System { n, rows, half_rates, exec };

    let scale = (0..n)
        .map(|j| system.rows[j * n..(j + 1) * n].iter().map(|v| v.norm()).sum::<f64>() + system.half_rates[j])
        .fold(0.0, f64::max);
    let mut h = if scale > 0.0 { 0.05 / scale } else { f64::INFINITY };

    let mut state = psi0.clone();
    let mut out = Vec::with_capacity(times.len());
    let mut steps = 0usize;
    let mut work = Work::new(n);
    for &target in times {
        while state.time < target {
            if steps >= options.max_steps {
                return Err(Error::Integrator {
                    reason: format!("exceeded {} steps", options.max_steps),
                    last: Box::new(state),
                });
            }
            let remaining = target - state.time;
            let last = h >= remaining;
            let step = if last { remaining } else { h };
            let err = system.dopri_step(&state.amplitudes, step, &options, &mut work);
            steps += 1;
            if !err.is_finite() {
                return Err(Error::Integrator {
                    reason: "non-finite amplitudes".into(),
                    last: Box::new(state),
                });
            }
            if err <= 1.0 {
                std::mem::swap(&mut state.amplitudes, &mut work.y_new);
                state.time = if last { target } else { state.time + step };
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            let proposed = step * factor;
            if !last || err > 1.0 {
                h = proposed;
            } else {
                h = h.max(proposed);
            }
            if h <= 1e-15 * state.time.abs().max(f64::MIN_POSITIVE) {
                return Err(Error::Integrator {
                    reason: format!("step size underflow (h = {h:e})"),
                    last: Box::new(state),
                });
            }
        }
        out.push(state.clone());
    }
    Ok(Trajectory { states: out })
}

struct System {
    n: usize,
    rows: Vec<Complex64>,
    half_rates: Vec<f64>,
    exec: Exec,
}

struct Work {
    k: [Vec<Complex64>; 7],
    tmp: Vec<Complex64>,
    y_new: Vec<Complex64>,
}

impl Work {
    fn new(n: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n];
        Work {
            k: std::array::from_fn(|_| z.clone()),
            tmp: z.clone(),
            y_new: z,
        }
    }
}

const ROW_CHUNK: usize = 32;

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B_HIGH: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B_LOW: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

impl System {
    /// `out = -i U psi - (Gamma / 2) psi`.
    fn rhs(&self, psi: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        let minus_i = Complex64::new(0.0, -1.0);
        par::for_each_chunk(self.exec, out, ROW_CHUNK, |ci, chunk| {
            for (k, v) in chunk.iter_mut().enumerate() {
                let j = ci * ROW_CHUNK + k;
                let row = &self.rows[j * n..(j + 1) * n];
                let mut acc = Complex64::new(0.0, 0.0);
                for (a, b) in row.iter().zip(psi) {
                    acc += a * b;
                }
                *v = minus_i * acc - psi[j] * self.half_rates[j];
            }
        });
    }

    /// One Dormand-Prince 5(4) step from `y`; the candidate lands in
    /// `work.y_new` and the scaled error norm is returned.
    fn dopri_step(&self, y: &[Complex64], h: f64, opt: &IntegratorOptions, work: &mut Work) -> f64 {
        let Work { k, tmp, y_new } = work;
        self.rhs(y, &mut k[0]);
        for s in 1..7 {
            for i in 0..self.n {
                let mut acc = Complex64::new(0.0, 0.0);
                for (r, kr) in k.iter().enumerate().take(s) {
                    acc += kr[i] * A[s][r];
                }
                tmp[i] = y[i] + acc * h;
            }
            self.rhs(tmp, &mut k[s]);
        }
        // Row 6 of A is the fifth-order solution, already in tmp.
        y_new.copy_from_slice(tmp);
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            let mut e = Complex64::new(0.0, 0.0);
            for (r, kr) in k.iter().enumerate() {
                e += kr[i] * (B_HIGH[r] - B_LOW[r]);
            }
            let sc = opt.atol + opt.rtol * y[i].norm().max(y_new[i].norm());
            worst = worst.max(e.norm() * h / sc);
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::exchange_simulate;
    use crate::interactions::{fill_hermitian, MatrixKind};
    use std::f64::consts::PI;

    fn uniform(n: usize, u0: f64) -> CouplingMatrix {
        CouplingMatrix {
            values: nalgebra::DMatrix::from_element(n, n, Complex64::new(u0, 0.0)),
            kind: MatrixKind::TwoLevel1d,
        }
    }

    #[test]
    fn two_sites_match_closed_form() {
        let u12 = Complex64::new(0.7, 0.0);
        let m = CouplingMatrix {
            values: nalgebra::DMatrix::from_row_slice(2, 2, &[
                Complex64::new(0.0, 0.0),
                u12,
                u12,
                Complex64::new(0.0, 0.0),
            ]),
            kind: MatrixKind::TwoLevel1d,
        };
        let losses = LossModel::new(0.05, 0.02, 0.3).unwrap();
        let times: Vec<f64> = (0..=40).map(|i| i as f64 * 0.25).collect();
        let psi0 = AmplitudeState::localized(2, 0).unwrap();
        let num = evolve_single_excitation(&m, &losses, &psi0, &times).unwrap();
        let exact = exchange_simulate(u12, &losses, &times).unwrap();
        for (a, b) in num.states.iter().zip(&exact.states) {
            for (x, y) in a.amplitudes.iter().zip(&b.amplitudes) {
                assert!((x - y).norm() < 1e-8, "t = {}: {x} vs {y}", a.time);
            }
        }
    }

    #[test]
    fn uniform_coupling_revives() {
        let n = 5;
        let u0 = 1.3;
        let period = 2.0 * PI / (n as f64 * u0);
        let psi0 = AmplitudeState::localized(n, 2).unwrap();
        let traj = evolve_single_excitation(&uniform(n, u0), &LossModel::lossless(), &psi0, &[0.4 * period, period, 3.0 * period]).unwrap();
        assert!((traj.states[1].populations()[2] - 1.0).abs() < 1e-8);
        assert!((traj.states[2].populations()[2] - 1.0).abs() < 1e-8);
        assert!(traj.states[0].populations()[2] < 0.99);
    }

    #[test]
    fn lossless_conserves_norm_and_energy() {
        let n = 8;
        let values = fill_hermitian(n, Exec::Sequential, |j, l| {
            let d = j.abs_diff(l) as f64;
            Complex64::from_polar((-d / 3.0).exp(), 0.1 * (j as f64 - l as f64))
        });
        let m = CouplingMatrix { values, kind: MatrixKind::TwoLevel1d };
        let psi0 = AmplitudeState::localized(n, 0).unwrap();
        let energy = |s: &AmplitudeState| {
            let v = nalgebra::DVector::from_column_slice(&s.amplitudes);
            (v.adjoint() * &m.values * &v)[(0, 0)].re
        };
        let e0 = energy(&psi0);
        let check = |traj: Trajectory| {
            for s in &traj.states {
                assert!((s.norm_sqr() - 1.0).abs() < 1e-8, "t = {}", s.time);
                assert!(((energy(s) - e0) / e0).abs() < 1e-8, "t = {}: {}", s.time, (energy(s) - e0) / e0);
            }
        };
        let short: Vec<f64> = (1..=10).map(|i| i as f64 * 0.5).collect();
        check(evolve_single_excitation(&m, &LossModel::lossless(), &psi0, &short).unwrap());
        let long: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let tight = IntegratorOptions { rtol: 1e-11, atol: 1e-14, ..Default::default() };
        check(evolve_single_excitation_with(&m, &[0.0; 8], &psi0, &long, tight, Exec::Sequential).unwrap());
    }

    #[test]
    fn losses_only_shrink_norm() {
        let n = 6;
        let psi0 = AmplitudeState::localized(n, 0).unwrap();
        let rates: Vec<f64> = (0..n).map(|j| 0.01 * j as f64).collect();
        let times: Vec<f64> = (1..=30).map(|i| i as f64 * 0.5).collect();
        let traj = evolve_single_excitation_with(&uniform(n, 0.4), &rates, &psi0, &times, IntegratorOptions::default(), Exec::Sequential).unwrap();
        let norms = traj.norms();
        assert!(norms.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!(norms[norms.len() - 1] < 1.0);
    }

    #[test]
    fn parallel_matches_sequential_bitwise() {
        let n = 70;
        let values = fill_hermitian(n, Exec::Sequential, |j, l| {
            Complex64::new((-(j.abs_diff(l) as f64) / 10.0).exp(), 0.0)
        });
        let m = CouplingMatrix { values, kind: MatrixKind::TwoLevel1d };
        let psi0 = AmplitudeState::localized(n, 35).unwrap();
        let rates = vec![0.01; n];
        let run = |exec| {
            evolve_single_excitation_with(&m, &rates, &psi0, &[1.0, 2.0], IntegratorOptions::default(), exec).unwrap()
        };
        assert_eq!(run(Exec::Sequential), run(Exec::Parallel));
    }

    #[test]
    fn front_spreads_outward() {
        let n = 21;
        let values = fill_hermitian(n, Exec::Sequential, |j, l| {
            Complex64::new((-(j.abs_diff(l) as f64) / 2.0).exp(), 0.0)
        });
        let m = CouplingMatrix { values, kind: MatrixKind::TwoLevel1d };
        let psi0 = AmplitudeState::localized(n, 10).unwrap();
        let traj = evolve_single_excitation(&m, &LossModel::lossless(), &psi0, &[0.0, 0.5, 2.0]).unwrap();
        let front = light_cone_front(&traj, 10, 1e-3);
        assert_eq!(front[0].1, 0);
        assert!(front[2].1 > front[1].1);
    }

    #[test]
    fn input_validation() {
        let m = uniform(3, 1.0);
        let bad = AmplitudeState { amplitudes: vec![Complex64::new(1.0, 0.0); 3], time: 0.0 };
        assert!(evolve_single_excitation(&m, &LossModel::lossless(), &bad, &[1.0]).is_err());
        let psi0 = AmplitudeState::localized(3, 0).unwrap();
        assert!(evolve_single_excitation(&m, &LossModel::lossless(), &psi0, &[1.0, 0.5]).is_err());
        let short = AmplitudeState::localized(2, 0).unwrap();
        assert!(evolve_single_excitation(&m, &LossModel::lossless(), &short, &[1.0]).is_err());
        let opts = IntegratorOptions { max_steps: 2, ..Default::default() };
        match evolve_single_excitation_with(&m, &[0.0; 3], &psi0, &[100.0], opts, Exec::Sequential) {
            Err(Error::Integrator { last, .. }) => assert!(last.time < 100.0),
            other => panic!("{other:?}"),
        }
    }
}
