//! The four batch suites. Each writes one CSV table into the output directory
//! and reports whether its checks passed.

use std::fs;
use std::path::{Path, PathBuf};

use affqft::states::QUASIFREE_TOLERANCE;
use affqft::{
    check_affine_quasifree, ground_state, truncated_moments, DualObservable, InducedAffineState, Kappa, Lattice,
    ObservableFamily, Perturbed, PhaseBasis, Section, StateFunctional,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};

/// Largest recovery error accepted by the source-reconstruction demo.
pub const RECOVERY_TOLERANCE: f64 = 1e-9;

/// Largest relative class change accepted by the time-slice suite.
pub const DEFORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("computation failed: {0}")]
    Core(#[from] affqft::Error),
    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },
}

/// Result of one suite.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub command: &'static str,
    pub passed: bool,
    pub summary: String,
    pub table: PathBuf,
}

/// Floats are written with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

struct Table {
    path: PathBuf,
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new(out: &Path, name: &str, header: &[&str]) -> Result<Self, RunError> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let path = out.join(name);
        writer.write_record(header).map_err(|e| RunError::Output { path: path.clone(), message: e.to_string() })?;
        Ok(Self { path, writer })
    }

    fn row(&mut self, fields: &[String]) -> Result<(), RunError> {
        self.writer
            .write_record(fields)
            .map_err(|e| RunError::Output { path: self.path.clone(), message: e.to_string() })
    }

    fn finish(self) -> Result<PathBuf, RunError> {
        let err = |m: String| RunError::Output { path: self.path.clone(), message: m };
        let bytes = self.writer.into_inner().map_err(|e| err(e.to_string()))?;
        if let Some(dir) = self.path.parent() {
            fs::create_dir_all(dir).map_err(|e| err(e.to_string()))?;
        }
        fs::write(&self.path, bytes).map_err(|e| err(e.to_string()))?;
        Ok(self.path)
    }
}

fn join(v: &[usize]) -> String {
    v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

/// Random sparse observable with both parts in the interior slices.
pub fn random_observable(l: &Lattice, rng: &mut impl Rng, sites: usize) -> DualObservable {
    let mut constant = Section::zeros(l);
    let mut linear = Section::zeros(l);
    for _ in 0..sites {
        let t = rng.gen_range(1..l.n_t() - 1);
        let x = rng.gen_range(0..l.n_x());
        linear.set(t, x, linear.get(t, x) + rng.gen_range(-1.0..1.0));
        let t = rng.gen_range(1..l.n_t() - 1);
        let x = rng.gen_range(0..l.n_x());
        constant.set(t, x, constant.get(t, x) + rng.gen_range(-1.0..1.0));
    }
    DualObservable { constant, linear }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Recovers `J` from the observables `⟨P_V(δ_s), ·⟩`: on-shell they evaluate to
/// `−vol·J(s)`, both directly on `ŝ*` and as one-point values of the induced
/// ground state.
pub fn demo_inhomogeneous(cfg: &RunConfig, out: &Path) -> Result<Outcome, RunError> {
    let ps = cfg.phase_space()?;
    let l = *ps.lattice();
    let j = ps.operator().source();
    let basis = PhaseBasis::canonical(&ps)?;
    let algebra = basis.ccr()?;
    let state = InducedAffineState::new(ground_state(&l)?, Kappa::reference(&ps, &basis)?)?;

    let mut table = Table::new(
        out,
        "demo_inhomogeneous.csv",
        &["t", "x", "j_input", "f_direct", "f_one_point", "j_recovered", "error"],
    )?;
    let mut max_err: f64 = 0.0;
    for t in l.compact_slices() {
        for x in 0..l.n_x() {
            let lin = ps.kg().apply(&Section::delta(&l, t, x)?)?;
            let phi = DualObservable::new(Section::zeros(&l), lin)?;
            let direct = phi.functional(ps.reference())?;
            let generator = basis.generator(&ps.classify(&phi)?, &algebra)?;
            let one_point = state.evaluate(&generator)?.re;
            // the system F = −vol·J is diagonal in the delta family
            let recovered = -one_point / l.vol();
            let err = (recovered - j.get(t, x)).abs().max((direct - one_point).abs() / l.vol());
            max_err = max_err.max(err);
            table.row(&[
                t.to_string(),
                x.to_string(),
                fmt_f64(j.get(t, x)),
                fmt_f64(direct),
                fmt_f64(one_point),
                fmt_f64(recovered),
                fmt_f64(err),
            ])?;
        }
    }
    let passed = max_err <= RECOVERY_TOLERANCE;
    Ok(Outcome {
        command: "demo-inhomogeneous",
        passed,
        summary: format!("recovered {} source values, max error {:.3e}", l.compact_slices().count() * l.n_x(), max_err),
        table: table.finish()?,
    })
}

fn moments_for<S: StateFunctional>(
    state: &S,
    family: &ObservableFamily,
    tuples: &[Vec<usize>],
    out: &Path,
) -> Result<(bool, String, PathBuf), RunError> {
    let mut table =
        Table::new(out, "moments.csv", &["tuple", "n", "args", "re", "im", "truncated_re", "truncated_im", "flagged"])?;
    for (k, args) in tuples.iter().enumerate() {
        for row in truncated_moments(state, family, args)? {
            let ratio = row.truncated.norm() / row.scale.max(row.moment.norm()).max(1.0);
            let flagged = row.n > 2 && ratio > QUASIFREE_TOLERANCE;
            table.row(&[
                k.to_string(),
                row.n.to_string(),
                join(&row.args),
                fmt_f64(row.moment.re),
                fmt_f64(row.moment.im),
                fmt_f64(row.truncated.re),
                fmt_f64(row.truncated.im),
                (flagged as u8).to_string(),
            ])?;
        }
    }
    let report = check_affine_quasifree(state, family, tuples)?;
    let summary = format!(
        "{} truncated moments of order > 2 checked, max relative size {:.3e}",
        report.checked, report.max_ratio
    );
    Ok((report.passed, summary, table.finish()?))
}

/// Moment tables `ωₙ`, `ω^Tₙ` of the induced ground state over seeded random
/// observables; higher truncated moments must vanish.
pub fn moments(cfg: &RunConfig, out: &Path) -> Result<Outcome, RunError> {
    let ps = cfg.phase_space()?;
    let l = *ps.lattice();
    let mut r = rng(cfg.seed);
    let observables: Vec<_> = (0..cfg.samples).map(|_| random_observable(&l, &mut r, 2)).collect();
    let tuples: Vec<Vec<usize>> =
        (0..cfg.tuples).map(|_| (0..cfg.order).map(|_| r.gen_range(0..cfg.samples)).collect()).collect();
    let family = ObservableFamily::new(&ps, observables)?;
    let state = family.induced_ground_state(&ps)?;
    let (passed, summary, table) = if cfg.perturb != 0.0 {
        let base = Perturbed { base: state.base().clone(), epsilon: cfg.perturb };
        let perturbed = InducedAffineState::new(base, state.kappa().clone())?;
        moments_for(&perturbed, &family, &tuples, out)?
    } else {
        moments_for(&state, &family, &tuples, out)?
    };
    Ok(Outcome { command: "moments", passed, summary, table })
}

/// Scan of `τ` and generator commutators between delta observables on slice
/// `n_t/2` and every site within `scan_half_width` slices of it.
pub fn causality_scan(cfg: &RunConfig, out: &Path) -> Result<Outcome, RunError> {
    let ps = cfg.phase_space()?;
    let l = *ps.lattice();
    let t0 = l.n_t() / 2;
    let w = cfg.scan_half_width.min(t0 - 1).min(l.n_t() - 2 - t0);
    let mut sites = Vec::new();
    for t in t0 - w..=t0 + w {
        for x in 0..l.n_x() {
            sites.push((t, x));
        }
    }
    let mut observables = sites
        .iter()
        .map(|&(t, x)| DualObservable::new(Section::zeros(&l), Section::delta(&l, t, x)?))
        .collect::<affqft::Result<Vec<_>>>()?;
    // an observable with empty support
    observables.push(DualObservable::zero(&l));
    let empty = observables.len() - 1;
    let family = ObservableFamily::new(&ps, observables)?;

    let mut table = Table::new(
        out,
        "causality_scan.csv",
        &["t1", "x1", "t2", "x2", "dt", "distance", "disjoint", "tau", "commutator"],
    )?;
    let (mut disjoint_pairs, mut violations, mut nonzero_boundary) = (0usize, 0usize, 0usize);
    let refs: Vec<usize> = (0..sites.len()).filter(|&i| sites[i].0 == t0).collect();
    let mut partners: Vec<usize> = (0..sites.len()).collect();
    partners.push(empty);
    for &i in &refs {
        for &j in &partners {
            let (si, sj) = (&family.observables()[i], &family.observables()[j]);
            let disjoint = l.causally_disjoint(&si.support(), &sj.support());
            let tau = family.basis().gram()[(i + 1, j + 1)];
            let comm = family.generator(i).commutator(family.generator(j))?;
            let norm = comm.max_coefficient();
            let (t2, x2, dt, dist) = if j == empty {
                (String::new(), String::new(), String::new(), String::new())
            } else {
                let (t, x) = sites[j];
                let d = l.circle_distance(sites[i].1, x);
                (t.to_string(), x.to_string(), (t as i64 - t0 as i64).to_string(), d.to_string())
            };
            if disjoint {
                disjoint_pairs += 1;
                if tau != 0.0 || norm != 0.0 {
                    violations += 1;
                }
            } else if j != empty && tau != 0.0 {
                let (t, x) = sites[j];
                if l.circle_distance(sites[i].1, x) == t.abs_diff(t0) {
                    nonzero_boundary += 1;
                }
            }
            table.row(&[
                t0.to_string(),
                sites[i].1.to_string(),
                t2,
                x2,
                dt,
                dist,
                (disjoint as u8).to_string(),
                fmt_f64(tau),
                fmt_f64(norm),
            ])?;
        }
    }
    Ok(Outcome {
        command: "causality-scan",
        passed: violations == 0,
        summary: format!(
            "{disjoint_pairs} causally disjoint pairs, {violations} violations, {nonzero_boundary} nonzero cone-boundary pairs"
        ),
        table: table.finish()?,
    })
}

/// Deforms seeded observables into the configured window and checks support
/// and canonical form.
pub fn timeslice(cfg: &RunConfig, out: &Path) -> Result<Outcome, RunError> {
    let ps = cfg.phase_space()?;
    let l = *ps.lattice();
    let (t_a, t_b) = cfg.window_or_default();
    let region = l.window(t_a, t_b)?;
    let mut r = rng(cfg.seed);
    let mut table = Table::new(
        out,
        "timeslice.csv",
        &["index", "t_min_in", "t_max_in", "t_min_out", "t_max_out", "leakage", "delta"],
    )?;
    let (mut max_leak, mut max_delta) = (0usize, 0f64);
    for k in 0..cfg.samples {
        let phi = random_observable(&l, &mut r, 3);
        let deformed = ps.timeslice_deform(&phi, &region)?;
        let leak = deformed.support().iter().filter(|s| s.t <= t_a || s.t >= t_b).count();
        let (a, b) = (ps.classify(&phi)?, ps.classify(&deformed)?);
        let delta = a.sub(&b).max_abs() / a.max_abs().max(1.0);
        max_leak = max_leak.max(leak);
        max_delta = max_delta.max(delta);
        let ext = |o: Option<(usize, usize)>| {
            o.map_or((String::new(), String::new()), |(p, q)| (p.to_string(), q.to_string()))
        };
        let (i0, i1) = ext(phi.time_extent());
        let (o0, o1) = ext(deformed.time_extent());
        table.row(&[k.to_string(), i0, i1, o0, o1, leak.to_string(), fmt_f64(delta)])?;
    }
    let spanning = ps.timeslice_check(&region);
    let passed = max_leak == 0 && max_delta <= DEFORM_TOLERANCE && spanning.surjective;
    Ok(Outcome {
        command: "timeslice",
        passed,
        summary: format!(
            "window [{t_a}, {t_b}]: {} samples, max leakage {max_leak}, max delta {max_delta:.3e}; spanning set recovered: {}",
            cfg.samples, spanning.surjective
        ),
        table: table.finish()?,
    })
}

pub fn run_suite(name: &str, cfg: &RunConfig, out: &Path) -> Result<Outcome, RunError> {
    match name {
        "demo-inhomogeneous" => demo_inhomogeneous(cfg, out),
        "moments" => moments(cfg, out),
        "causality-scan" => causality_scan(cfg, out),
        "timeslice" => timeslice(cfg, out),
        _ => Err(ConfigError::Unsupported(format!("unknown suite `{name}`")).into()),
    }
}
