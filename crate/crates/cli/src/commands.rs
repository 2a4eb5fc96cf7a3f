//! One function per subcommand. Each returns machine-readable data plus a
//! short human summary.

use log::info;
use serde::Serialize;
use serde_json::json;

use phcqed::band_model::{sweep_detuning, AtomCoupling, BandEdge, StandingWave};
use phcqed::disorder::{disorder_sweep, lyapunov_mc, DielectricStack, LocalizationResult, Xi};
use phcqed::dynamics::{
    evolve_single_excitation, exchange_simulate, light_cone_front, optimize_exchange, AmplitudeState,
    ExchangeResult, LossModel,
};
use phcqed::interactions::{
    coupling_matrix_1d, multi_drive_sum, power_law_designer, AtomArray, CouplingMatrix, DriveField, PowerLawFit,
    PowerLawSpec,
};
use num_complex::Complex64;
use phcqed::par::Exec;
use phcqed::units::UnitSystem;
use phcqed::Error;

use crate::config::{BlochKind, GridConfig, RunConfig};
use crate::error::CliError;
use crate::output::{pretty, Cell, Table};
use crate::Format;

/// Machine-readable `data` for stdout or `--out`, and a `summary` for stderr.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub data: String,
    pub summary: String,
}

const DEFAULT_GRID: GridConfig = GridConfig { min: -10.0, max: 10.0, points: 401 };

fn linspace(g: &GridConfig) -> Result<Vec<f64>, CliError> {
    check_grid(g)?;
    if g.points == 1 {
        return Ok(vec![g.min]);
    }
    let step = (g.max - g.min) / (g.points - 1) as f64;
    Ok((0..g.points).map(|i| g.min + step * i as f64).collect())
}

fn logspace(g: &GridConfig) -> Result<Vec<f64>, CliError> {
    check_grid(g)?;
    if g.min <= 0.0 {
        return Err(CliError::Config("logarithmic grid needs min > 0".into()));
    }
    let (lo, hi) = (g.min.ln(), g.max.ln());
    if g.points == 1 {
        return Ok(vec![g.min]);
    }
    Ok((0..g.points)
        .map(|i| (lo + (hi - lo) * i as f64 / (g.points - 1) as f64).exp())
        .collect())
}

fn check_grid(g: &GridConfig) -> Result<(), CliError> {
    if g.points == 0 || !(g.min.is_finite() && g.max.is_finite()) || g.max < g.min {
        return Err(CliError::Config(format!("bad grid [{}, {}] with {} points", g.min, g.max, g.points)));
    }
    Ok(())
}

/// Frequencies in output: Hz under si, `omega_b` under dimensionless.
fn out_freq(cfg: &RunConfig, rad: f64) -> f64 {
    rad / cfg.freq_scale()
}

fn freq_unit(cfg: &RunConfig) -> &'static str {
    match cfg.unit_system() {
        UnitSystem::Si => "Hz",
        UnitSystem::Dimensionless => "omega_b",
    }
}

pub fn bound_state(cfg: &RunConfig, format: Format) -> Result<Report, CliError> {
    let band = cfg.band_edge()?;
    let base = cfg.atom_coupling(&band, Some(0.0))?;
    let grid = cfg
        .bound_state
        .as_ref()
        .and_then(|p| p.grid.clone())
        .unwrap_or(DEFAULT_GRID);
    let xs = linspace(&grid)?;
    let detunings: Vec<f64> = xs.iter().map(|x| x * base.beta).collect();
    let states = sweep_detuning(&band, &base, &detunings, Exec::default())?;

    let mut table = Table::new([
        "detuning_over_beta",
        "delta_over_beta",
        "p_excited",
        "p_photon",
        "l_over_a",
        "gbar_c",
        "validity",
    ]);
    for (x, s) in xs.iter().zip(&states) {
        table.push(vec![
            Cell::from(*x),
            Cell::from(s.delta / base.beta),
            Cell::from(s.excited_population()),
            Cell::from(s.photon_population()),
            Cell::from(s.decay_length / band.a),
            Cell::from(out_freq(cfg, s.gbar_c)),
            Cell::from(s.validity),
        ]);
    }
    let invalid = states.iter().filter(|s| !s.is_valid()).count();
    let summary = format!(
        "bound-state: {} points over Delta/beta in [{}, {}], beta = {:.6e} {}, {} outside the quadratic-band regime",
        xs.len(),
        grid.min,
        grid.max,
        out_freq(cfg, base.beta),
        freq_unit(cfg),
        invalid
    );
    Ok(Report { data: render(&table, format), summary })
}

pub fn interactions(cfg: &RunConfig, format: Format) -> Result<Report, CliError> {
    let band = cfg.band_edge()?;
    let params = cfg.interactions.clone().unwrap_or_default();
    let f = cfg.freq_scale();
    let detunings: Vec<f64> = match (&params.detunings, cfg.coupling.as_ref().and_then(|c| c.detuning)) {
        (Some(list), _) if !list.is_empty() => list.clone(),
        (_, Some(d)) => vec![d],
        _ => return Err(CliError::Config("no detunings: set interactions.detunings or coupling.detuning".into())),
    };
    let gamma = cfg.coupling.as_ref().and_then(|c| c.gamma).unwrap_or(0.0);
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(CliError::Config("coupling.gamma must be positive to normalize |U| / gamma".into()));
    }
    let max_sep = params.max_separation.unwrap_or(55);
    let positions: Vec<f64> = (0..=max_sep).map(|m| m as f64 * band.a).collect();
    let atoms = AtomArray::flat(positions, gamma * f)?;

    let mut header = vec!["separation_a".to_string()];
    let mut columns = Vec::with_capacity(detunings.len());
    let mut lengths = Vec::new();
    for &d in &detunings {
        let coupling = cfg.atom_coupling(&band, None)?.with_detuning(d * f);
        let u = coupling_matrix_1d(&atoms, &band, &coupling)?;
        header.push(match cfg.unit_system() {
            UnitSystem::Si => format!("u_over_gamma_{}ghz", d / 1e9),
            UnitSystem::Dimensionless => format!("u_over_gamma_{d}"),
        });
        columns.push((0..=max_sep).map(|m| u.get(0, m).norm() / (gamma * f)).collect::<Vec<f64>>());
        lengths.push(band.decay_length(d * f)? / band.a);
    }
    let mut table = Table::new(header);
    for m in 0..=max_sep {
        let mut row = vec![Cell::from(m)];
        row.extend(columns.iter().map(|c| Cell::from(c[m])));
        table.push(row);
    }
    let summary = format!(
        "interactions: {} curves, separations 0..{}a, L/a = {}",
        detunings.len(),
        max_sep,
        lengths.iter().map(|l| format!("{l:.4}")).collect::<Vec<_>>().join(", ")
    );
    Ok(Report { data: render(&table, format), summary })
}

#[derive(Serialize)]
struct FitReport<'a> {
    eta: f64,
    weights: &'a [f64],
    rates: &'a [f64],
    /// Band detunings of the drives in units of `omega_b`.
    detunings: Vec<f64>,
    max_error: f64,
    rms_error: f64,
    iterations: usize,
    converged: bool,
}

fn fit_json(fit: &PowerLawFit, band: &BandEdge) -> Result<String, CliError> {
    pretty(&FitReport {
        eta: fit.eta,
        weights: &fit.weights,
        rates: &fit.rates,
        detunings: fit.detunings.iter().map(|d| d / band.omega_b).collect(),
        max_error: fit.max_error,
        rms_error: fit.rms_error,
        iterations: fit.iterations,
        converged: fit.converged,
    })
}

pub fn design_powerlaw(cfg: &RunConfig, format: Format) -> Result<Report, CliError> {
    let band = cfg.band_edge()?;
    let p = cfg
        .powerlaw
        .as_ref()
        .ok_or_else(|| CliError::Config("missing `powerlaw` section".into()))?;
    let mut spec = PowerLawSpec::new(p.eta, p.z_min, p.z_max, p.n_drives);
    if let Some(v) = p.s_min {
        spec.s_min = v;
    }
    if let Some(v) = p.s_max {
        spec.s_max = v;
    }
    if let Some(v) = p.n_starts {
        spec.n_starts = v;
    }
    if let Some(v) = p.max_iterations {
        spec.max_iterations = v;
    }
    if cfg.coupling.is_some() {
        let coupling = cfg.atom_coupling(&band, Some(0.0))?;
        spec = spec.with_band_floor(&band, coupling.beta);
    }
    let fit = match power_law_designer(&spec, &band) {
        Ok(fit) => fit,
        Err(Error::FitFailed { iterations, best }) => {
            return Err(CliError::FitFailed {
                message: format!("power-law fit did not converge after {iterations} iterations"),
                report: fit_json(&best, &band)?,
            });
        }
        Err(e) => return Err(e.into()),
    };
    let data = match format {
        Format::Json => fit_json(&fit, &band)?,
        Format::Csv => {
            let mut table = Table::new(["z", "fit", "target", "residual"]);
            for (z, fv, t, r) in fit.residuals(&spec.grid()) {
                table.push(vec![Cell::from(z), Cell::from(fv), Cell::from(t), Cell::from(r)]);
            }
            table.to_csv()
        }
    };
    let summary = format!(
        "design-powerlaw: eta = {}, {} drives, weights = {:?}, rates = {:?}, max error = {:.4e}",
        fit.eta, spec.n_drives, fit.weights, fit.rates, fit.max_error
    );
    Ok(Report { data, summary })
}

/// Photon loss rate in rad/s: explicit `kappa_p`, or the value giving the
/// requested cooperativity at the configured detuning.
fn kappa_p(cfg: &RunConfig, band: &BandEdge, coupling: &AtomCoupling) -> Result<f64, CliError> {
    let losses = cfg.losses.clone().unwrap_or_default();
    match (losses.kappa_p, losses.cooperativity) {
        (Some(_), Some(_)) => Err(CliError::Config("set losses.kappa_p or losses.cooperativity, not both".into())),
        (Some(k), None) => Ok(k * cfg.freq_scale()),
        (None, Some(c)) => {
            if !(c > 0.0 && coupling.gamma > 0.0) {
                return Err(CliError::Config("cooperativity and coupling.gamma must be positive".into()));
            }
            let l = band.decay_length(coupling.detuning)?;
            let g = coupling.gbar_c(band, l);
            Ok(g * g / (c * coupling.gamma))
        }
        (None, None) => Err(CliError::Config("missing losses.kappa_p or losses.cooperativity".into())),
    }
}

#[derive(Serialize)]
struct ExchangeReport<'a> {
    #[serde(flatten)]
    result: &'a ExchangeResult,
    kappa_p: f64,
    pi_over_sqrt_c: f64,
    ratio: f64,
}

pub fn exchange(cfg: &RunConfig, format: Format) -> Result<Report, CliError> {
    let band = cfg.band_edge()?;
    let coupling = cfg.atom_coupling(&band, None)?;
    let kappa = kappa_p(cfg, &band, &coupling)?;
    let losses = LossModel::new(kappa, coupling.gamma, 0.0)?;
    let params = cfg.exchange.clone().unwrap_or_default();
    let separation = params.separation.unwrap_or(0.0) * band.a;
    let result = optimize_exchange(&band, &coupling, &losses, separation)?;
    let law = std::f64::consts::PI / result.cooperativity.sqrt();

    let data = match format {
        Format::Json => pretty(&ExchangeReport {
            result: &result,
            kappa_p: out_freq(cfg, kappa),
            pi_over_sqrt_c: law,
            ratio: result.error / law,
        })?,
        Format::Csv => {
            let n = params.samples.unwrap_or(201).max(2);
            let times: Vec<f64> = (0..n).map(|i| 2.0 * result.tau * i as f64 / (n - 1) as f64).collect();
            let traj = exchange_simulate(
                Complex64::new(result.u12, 0.0),
                &losses.with_theta(result.theta),
                &times,
            )?;
            let mut table = Table::new(["t", "p1", "p2", "norm"]);
            for s in &traj.states {
                let p = s.populations();
                table.push(vec![Cell::from(s.time), Cell::from(p[0]), Cell::from(p[1]), Cell::from(s.norm_sqr())]);
            }
            table.to_csv()
        }
    };
    let summary = format!(
        "exchange: C = {:.4e}, error = {:.4e}, pi/sqrt(C) = {:.4e}, ratio = {:.4}, optimal detuning = {:.4e} {}",
        result.cooperativity,
        result.error,
        law,
        result.error / law,
        out_freq(cfg, result.optimal_detuning),
        freq_unit(cfg)
    );
    Ok(Report { data, summary })
}

fn atom_array(cfg: &RunConfig, band: &BandEdge, gamma: f64) -> Result<AtomArray, CliError> {
    let spec = cfg
        .atoms
        .as_ref()
        .ok_or_else(|| CliError::Config("missing `atoms` section".into()))?;
    let cells: Vec<f64> = match (&spec.positions, spec.count) {
        (Some(p), _) => p.clone(),
        (None, Some(n)) => {
            let step = spec.spacing_cells.unwrap_or(1) as f64;
            (0..n).map(|i| i as f64 * step).collect()
        }
        (None, None) => return Err(CliError::Config("atoms needs `positions` or `count`".into())),
    };
    let positions: Vec<f64> = cells.iter().map(|z| z * band.a).collect();
    Ok(match spec.bloch.unwrap_or_default() {
        BlochKind::StandingWave => AtomArray::sampled(positions, &StandingWave { k0: band.k0 }, gamma)?,
        BlochKind::Flat => AtomArray::flat(positions, gamma)?,
    })
}

fn drive_fields(cfg: &RunConfig, atom_detuning: f64) -> Vec<DriveField> {
    let f = cfg.freq_scale();
    cfg.drives
        .iter()
        .flatten()
        .map(|d| {
            let mut field = DriveField::four_level(d.omega * f, d.delta_l * f, atom_detuning, d.phi.unwrap_or(0.0));
            field.omega_prime = d.omega_prime.unwrap_or(0.0) * f;
            field
        })
        .collect()
}

pub fn evolve(cfg: &RunConfig, format: Format) -> Result<Report, CliError> {
    let band = cfg.band_edge()?;
    let coupling = cfg.atom_coupling(&band, None)?;
    let atoms = atom_array(cfg, &band, coupling.gamma)?;
    let drives = drive_fields(cfg, coupling.detuning);
    let u: CouplingMatrix = if drives.is_empty() {
        coupling_matrix_1d(&atoms, &band, &coupling)?
    } else {
        multi_drive_sum(&atoms, &band, &coupling, &drives)?
    };
    let theta = phcqed::band_model::effective_cavity(&band, &coupling)?.theta;
    let losses = cfg.losses.clone().unwrap_or_default();
    let kappa = losses.kappa_p.unwrap_or(0.0) * cfg.freq_scale();
    let loss_model = LossModel::new(kappa, coupling.gamma, losses.theta.unwrap_or(theta))?;

    let p = cfg.evolve.clone().unwrap_or_default();
    let n = atoms.len();
    let site = p.initial_site.unwrap_or(n / 2);
    let psi0 = AmplitudeState::localized(n, site)?;
    let scale = u.max_abs();
    if scale.is_nan() || scale <= 0.0 {
        return Err(CliError::Config("coupling matrix vanishes; nothing to evolve".into()));
    }
    let t_end = p.duration.unwrap_or(20.0) / scale;
    let samples = p.samples.unwrap_or(101).max(2);
    let times: Vec<f64> = (0..samples).map(|i| t_end * i as f64 / (samples - 1) as f64).collect();
    let traj = evolve_single_excitation(&u, &loss_model, &psi0, &times)?;
    let front = light_cone_front(&traj, site, p.front_threshold.unwrap_or(1e-3));
    info!("evolved {n} sites to t = {t_end:e}");

    let data = match format {
        Format::Csv => {
            let mut header = vec!["t".to_string()];
            header.extend((1..=n).map(|j| format!("p_{j}")));
            header.push("norm".into());
            let mut table = Table::new(header);
            for s in &traj.states {
                let mut row = vec![Cell::from(s.time)];
                row.extend(s.populations().into_iter().map(Cell::from));
                row.push(Cell::from(s.norm_sqr()));
                table.push(row);
            }
            table.to_csv()
        }
        Format::Json => pretty(&json!({
            "times": traj.times(),
            "populations": traj.populations(),
            "norms": traj.norms(),
            "front": front,
        }))?,
    };
    let reach = front.last().map(|f| f.1).unwrap_or(0);
    let summary = format!(
        "evolve: {n} sites from site {site}, t_end = {t_end:.4e}, final norm = {:.6}, front reached {reach} sites",
        traj.last().map(|s| s.norm_sqr()).unwrap_or(1.0)
    );
    Ok(Report { data, summary })
}

fn stack(cfg: &RunConfig) -> Result<(DielectricStack, usize), CliError> {
    let d = cfg
        .disorder
        .as_ref()
        .ok_or_else(|| CliError::Config("missing `disorder` section".into()))?;
    let s = DielectricStack::new(
        d.r,
        d.phi_b.unwrap_or(std::f64::consts::FRAC_PI_2),
        d.epsilon,
        d.n_cells.unwrap_or(10_000),
        cfg.seed.unwrap_or(0),
    )?;
    Ok((s, d.n_trials.unwrap_or(200)))
}

fn xi_cell(x: Xi) -> Cell {
    match x {
        Xi::Finite(v) => Cell::from(v),
        Xi::Unbounded => Cell::Text("unbounded".into()),
    }
}

pub fn disorder(cfg: &RunConfig, format: Format) -> Result<Report, CliError> {
    let (stack, trials) = stack(cfg)?;
    match format {
        Format::Json => {
            let r = lyapunov_mc(&stack, trials)?;
            let summary = format!(
                "disorder: eps = {:e}, sigma = {:.6e}, xi_analytic/a = {}, xi_mc/a = {} +- {:.3}",
                r.epsilon, r.sigma, r.xi_analytic, r.xi_mc, r.xi_mc_stderr
            );
            Ok(Report { data: pretty(&r)?, summary })
        }
        Format::Csv => {
            let grid = cfg
                .disorder
                .as_ref()
                .and_then(|d| d.sweep.clone())
                .unwrap_or(GridConfig { min: 1e-4, max: 1e-2, points: 9 });
            let eps = logspace(&grid)?;
            let results: Vec<LocalizationResult> = disorder_sweep(&stack, &eps, trials)?;
            let mut table = Table::new(["epsilon", "sigma", "xi_analytic", "xi_mc", "xi_mc_stderr"]);
            for r in &results {
                table.push(vec![
                    Cell::from(r.epsilon),
                    Cell::from(r.sigma),
                    xi_cell(r.xi_analytic),
                    xi_cell(r.xi_mc),
                    Cell::from(r.xi_mc_stderr),
                ]);
            }
            let summary = format!(
                "disorder: {} strengths in [{:e}, {:e}], {} cells, {} trials each",
                results.len(),
                grid.min,
                grid.max,
                stack.n_cells,
                trials
            );
            Ok(Report { data: table.to_csv(), summary })
        }
    }
}

#[derive(Serialize)]
struct PresetEntry {
    name: &'static str,
    description: &'static str,
    config: RunConfig,
}

pub fn preset_list() -> Result<Report, CliError> {
    let entries: Vec<PresetEntry> = crate::presets::NAMES
        .iter()
        .map(|&name| PresetEntry {
            name,
            description: crate::presets::describe(name).unwrap_or_default(),
            config: crate::presets::get(name).expect("listed preset exists"),
        })
        .collect();
    Ok(Report { data: pretty(&entries)?, summary: format!("presets: {}", crate::presets::NAMES.join(", ")) })
}

fn render(table: &Table, format: Format) -> String {
    match format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    }
}
