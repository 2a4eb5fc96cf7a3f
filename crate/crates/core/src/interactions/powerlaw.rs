use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::band_model::BandEdge;
use crate::error::{ensure_finite, Error, Result};

/// Target and solver settings for synthesizing `z^{-eta}` from exponentials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawSpec {
    pub eta: f64,
    /// Fit window in lattice units, sampled on the integers inside it.
    pub z_min: f64,
    pub z_max: f64,
    pub n_drives: usize,
    /// Hard bounds on the decay rates `s_i` (per lattice constant).
    pub s_min: f64,
    pub s_max: f64,
    /// Lower end of the log-spaced initial rates.
    pub s_init_min: f64,
    pub n_starts: usize,
    pub max_iterations: usize,
}

impl PowerLawSpec {
    pub fn new(eta: f64, z_min: f64, z_max: f64, n_drives: usize) -> Self {
        PowerLawSpec {
            eta,
            z_min,
            z_max,
            n_drives,
            s_min: 1e-6,
            s_max: 10.0,
            s_init_min: 1e-3,
            n_starts: 8,
            max_iterations: 500,
        }
    }

    /// Starts the initial rates at the shortest cloud the band can support,
    /// `k0 a sqrt(beta / (alpha omega_b))`.
    pub fn with_band_floor(mut self, band: &BandEdge, beta: f64) -> Self {
        let floor = band.k0 * band.a * (beta / (band.alpha * band.omega_b)).abs().sqrt();
        if floor.is_finite() && floor > self.s_min && floor < 1.0 {
            self.s_init_min = floor;
        }
        self
    }

    /// Integer sample points inside the window.
    pub fn grid(&self) -> Vec<f64> {
        let lo = self.z_min.ceil() as i64;
        let hi = self.z_max.floor() as i64;
        (lo..=hi).map(|z| z as f64).collect()
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eta", self.eta),
            ("z_min", self.z_min),
            ("z_max", self.z_max),
            ("s_min", self.s_min),
            ("s_max", self.s_max),
            ("s_init_min", self.s_init_min),
        ] {
            ensure_finite(name, v)?;
        }
        if self.eta < 0.0 {
            return Err(Error::invalid("eta must be non-negative"));
        }
        if self.z_min < 1.0 {
            return Err(Error::invalid("z_min must be at least one lattice constant"));
        }
        if self.n_drives == 0 {
            return Err(Error::invalid("at least one drive is required"));
        }
        if !(self.s_min > 0.0 && self.s_max > self.s_min) {
            return Err(Error::invalid("need 0 < s_min < s_max"));
        }
        if self.n_starts == 0 || self.max_iterations == 0 {
            return Err(Error::invalid("n_starts and max_iterations must be positive"));
        }
        let m = self.grid().len();
        if m < 2 * self.n_drives {
            return Err(Error::invalid(format!(
                "{m} grid points cannot determine {} parameters",
                2 * self.n_drives
            )));
        }
        Ok(())
    }
}

/// A fitted sum `sum_i w_i exp(-s_i z)`, rates sorted in decreasing order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub eta: f64,
    pub weights: Vec<f64>,
    pub rates: Vec<f64>,
    /// Band detunings `Delta_L,i` realizing each rate (rad/s, same units as the band).
    pub detunings: Vec<f64>,
    pub max_error: f64,
    pub rms_error: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl PowerLawFit {
    pub fn evaluate(&self, z: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.rates)
            .map(|(w, s)| w * (-s * z).exp())
            .sum()
    }

    /// `(z, fit, target, fit - target)` on the given points.
    pub fn residuals(&self, grid: &[f64]) -> Vec<(f64, f64, f64, f64)> {
        grid.iter()
            .map(|&z| {
                let f = self.evaluate(z);
                let t = z.powf(-self.eta);
                (z, f, t, f - t)
            })
            .collect()
    }
}

/// `s = k0 a sqrt(Delta_L / (alpha omega_b))`, i.e. `a / L(Delta_L)`.
pub fn detuning_to_rate(band: &BandEdge, detuning_l: f64) -> Result<f64> {
    let l = band.decay_length(detuning_l)?;
    Ok(band.a / l)
}

/// Inverse of [`detuning_to_rate`]: `Delta_L = alpha omega_b (s / (k0 a))^2`.
pub fn rate_to_detuning(band: &BandEdge, rate: f64) -> Result<f64> {
    ensure_finite("rate", rate)?;
    if rate <= 0.0 {
        return Err(Error::invalid("decay rate must be positive"));
    }
    let x = rate / (band.k0 * band.a);
    Ok(band.alpha * band.omega_b * x * x)
}

struct Problem {
    z: Vec<f64>,
    y: DVector<f64>,
    lo: f64,
    hi: f64,
}

struct Eval {
    weights: DVector<f64>,
    residual: DVector<f64>,
    cost: f64,
}

impl Problem {
    fn basis(&self, p: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.z.len(), p.len(), |k, i| (-p[i].exp() * self.z[k]).exp())
    }

    fn eval(&self, p: &[f64]) -> Eval {
        let a = self.basis(p);
        let svd = a.clone().svd(true, true);
        let weights = svd
            .solve(&self.y, 1e-13)
            .unwrap_or_else(|_| DVector::zeros(p.len()));
        let residual = &a * &weights - &self.y;
        let cost = residual.norm_squared();
        Eval { weights, residual, cost }
    }

    fn clamp(&self, p: &mut [f64]) {
        for v in p {
            *v = v.clamp(self.lo, self.hi);
        }
    }

    fn jacobian(&self, p: &[f64], base: &Eval) -> DMatrix<f64> {
        let n = p.len();
        let mut jac = DMatrix::zeros(self.z.len(), n);
        for i in 0..n {
            let h = 1e-6 * p[i].abs().max(1.0);
            let mut q = p.to_vec();
            q[i] += h;
            let forward = self.eval(&q).residual;
            q[i] = p[i] - h;
            let backward = self.eval(&q).residual;
            let col = if p[i] + h > self.hi {
                (&base.residual - backward) / h
            } else if p[i] - h < self.lo {
                (forward - &base.residual) / h
            } else {
                (forward - backward) / (2.0 * h)
            };
            jac.set_column(i, &col);
        }
        jac
    }
}

struct Run {
    p: Vec<f64>,
    eval: Eval,
    iterations: usize,
    converged: bool,
}

/// Levenberg-Marquardt on `ln s` over the variable-projection residual.
fn levenberg_marquardt(problem: &Problem, start: Vec<f64>, max_iterations: usize) -> Run {
    let n = start.len();
    let mut p = start;
    problem.clamp(&mut p);
    let mut cur = problem.eval(&p);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iterations {
        iterations += 1;
        let jac = problem.jacobian(&p, &cur);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &cur.residual;
        if grad.amax() <= 1e-15 * cur.cost.max(1e-300).sqrt() {
            converged = true;
            break;
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let mut lhs = jtj.clone();
            for i in 0..n {
                lhs[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = lhs.cholesky().map(|c| c.solve(&(-&grad))) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            problem.clamp(&mut trial);
            let next = problem.eval(&trial);
            if next.cost < cur.cost {
                let gain = (cur.cost - next.cost) / cur.cost.max(1e-300);
                let moved = trial
                    .iter()
                    .zip(&p)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                p = trial;
                cur = next;
                lambda = (lambda * 0.3).max(1e-12);
                accepted = true;
                if gain < 1e-13 || moved < 1e-11 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // No descent direction left within the bounds: a stationary point.
            converged = true;
        }
        if converged {
            break;
        }
    }
    Run { p, eval: cur, iterations, converged }
}

/// Lowest 2-norm, then lowest max error, then lowest rate spread.
fn pick<'a>(pool: impl IntoIterator<Item = &'a Run>) -> Option<&'a Run> {
    let rank = |r: &Run| (r.eval.cost, max_abs(&r.eval.residual), spread(&r.p));
    pool.into_iter().min_by(|a, b| {
        let (ca, ma, sa) = rank(a);
        let (cb, mb, sb) = rank(b);
        // Costs within round-off are ties.
        if (ca - cb).abs() > 1e-10 * ca.max(cb) {
            ca.total_cmp(&cb)
        } else if (ma - mb).abs() > 1e-12 {
            ma.total_cmp(&mb)
        } else {
            sa.total_cmp(&sb)
        }
    })
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn spread(p: &[f64]) -> f64 {
    let lo = p.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

fn starts(spec: &PowerLawSpec) -> Vec<Vec<f64>> {
    let lo = spec.s_init_min.max(spec.s_min).ln();
    let hi = 1.0_f64.min(spec.s_max).ln();
    let n = spec.n_drives;
    (0..spec.n_starts)
        .map(|k| {
            let shift = k as f64 / spec.n_starts as f64;
            (0..n)
                .map(|i| {
                    let t = if n == 1 {
                        shift
                    } else {
                        (i as f64 + shift) / (n as f64 - 1.0 + shift.max(1e-9))
                    };
                    lo + (hi - lo) * t.clamp(0.0, 1.0)
                })
                .collect()
        })
        .collect()
}

/// Fits `sum_i w_i exp(-s_i z)` to `z^{-eta}` on the integer grid of the
/// window by multistart variable projection and maps each rate onto a band
/// detuning. Candidates are ranked by 2-norm, then max error, then rate spread.
pub fn power_law_designer(spec: &PowerLawSpec, band: &BandEdge) -> Result<PowerLawFit> {
    spec.validate()?;
    let z = spec.grid();
    let y = DVector::from_iterator(z.len(), z.iter().map(|z| z.powf(-spec.eta)));
    let problem = Problem { z, y, lo: spec.s_min.ln(), hi: spec.s_max.ln() };

    let runs: Vec<Run> = starts(spec)
        .into_iter()
        .map(|s| levenberg_marquardt(&problem, s, spec.max_iterations))
        .collect();
    let total_iterations = runs.iter().map(|r| r.iterations).sum();
    let converged: Vec<&Run> = runs.iter().filter(|r| r.converged).collect();
    let any_converged = !converged.is_empty();
    let best = if any_converged {
        pick(converged)
    } else {
        pick(runs.iter())
    }
    .ok_or_else(|| Error::numerical("no fit candidates"))?;

    let mut pairs: Vec<(f64, f64)> = best
        .p
        .iter()
        .map(|p| p.exp())
        .zip(best.eval.weights.iter().cloned())
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let rates: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let detunings = rates
        .iter()
        .map(|&s| rate_to_detuning(band, s))
        .collect::<Result<Vec<_>>>()?;
    let m = problem.z.len() as f64;
    let fit = PowerLawFit {
        eta: spec.eta,
        weights: pairs.iter().map(|p| p.1).collect(),
        rates,
        detunings,
        max_error: max_abs(&best.eval.residual),
        rms_error: (best.eval.cost / m).sqrt(),
        iterations: best.iterations,
        converged: any_converged,
    };
    if any_converged {
        Ok(fit)
    } else {
        Err(Error::FitFailed { iterations: total_iterations, best: Box::new(fit) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band() -> BandEdge {
        BandEdge::zone_boundary(1.0, 0.2, 1.0).unwrap()
    }

    #[test]
    fn rate_detuning_round_trip() {
        let b = band();
        let s1 = detuning_to_rate(&b, 1.723e-3).unwrap();
        let s2 = detuning_to_rate(&b, 1.612e-6).unwrap();
        assert!((s1 - 0.2916).abs() < 5e-5, "{s1}");
        assert!((s2 - 0.0089).abs() < 5e-5, "{s2}");
        for s in [1e-4, 0.01, 0.2916, 2.0] {
            let back = detuning_to_rate(&b, rate_to_detuning(&b, s).unwrap()).unwrap();
            assert!((back - s).abs() < 1e-14 * s);
        }
        assert!(detuning_to_rate(&b, -1e-3).is_err());
        assert!(rate_to_detuning(&b, 0.0).is_err());
    }

    #[test]
    fn quarter_power_two_drives() {
        let fit = power_law_designer(&PowerLawSpec::new(0.25, 1.0, 50.0, 2), &band()).unwrap();
        assert!(fit.converged);
        let want = [(0.5480, 0.2916), (0.5684, 0.0089)];
        for ((w, s), (wp, sp)) in fit.weights.iter().zip(&fit.rates).zip(want) {
            assert!(((w - wp) / wp).abs() < 0.01, "{w} vs {wp}");
            assert!(((s - sp) / sp).abs() < 0.01, "{s} vs {sp}");
        }
        assert!(fit.max_error < 0.03);
        let grid = PowerLawSpec::new(0.25, 1.0, 50.0, 2).grid();
        let worst = fit.residuals(&grid).iter().map(|r| r.3.abs()).fold(0.0, f64::max);
        assert!((worst - fit.max_error).abs() < 1e-12);
    }

    #[test]
    fn constant_target() {
        let fit = power_law_designer(&PowerLawSpec::new(0.0, 1.0, 40.0, 1), &band()).unwrap();
        assert!((fit.weights[0] - 1.0).abs() < 1e-4);
        assert!(fit.rates[0] < 1e-4);
        assert!(fit.max_error < 1e-4);
    }

    #[test]
    fn inverse_distance_three_drives() {
        let fit = power_law_designer(&PowerLawSpec::new(1.0, 1.0, 30.0, 3), &band()).unwrap();
        assert!(fit.max_error <= 0.02, "{}", fit.max_error);
        assert!(fit.rates.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn iteration_cap_reports_best() {
        let mut spec = PowerLawSpec::new(0.25, 1.0, 50.0, 2);
        spec.max_iterations = 1;
        spec.n_starts = 2;
        match power_law_designer(&spec, &band()) {
            Err(Error::FitFailed { best, .. }) => {
                assert_eq!(best.weights.len(), 2);
                assert!(best.max_error.is_finite());
            }
            other => panic!("expected FitFailed, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let b = band();
        assert!(power_law_designer(&PowerLawSpec::new(-1.0, 1.0, 50.0, 2), &b).is_err());
        assert!(power_law_designer(&PowerLawSpec::new(0.5, 0.5, 50.0, 2), &b).is_err());
        assert!(power_law_designer(&PowerLawSpec::new(0.5, 1.0, 50.0, 0), &b).is_err());
        assert!(power_law_designer(&PowerLawSpec::new(0.5, 1.0, 2.0, 2), &b).is_err());
    }
}
