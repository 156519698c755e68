//! Configuration-driven experiment runner behind the command-line tool.
//!
//! [`run`] dispatches on the configured command and returns a [`RunReport`];
//! [`write_outputs`] turns it into `<prefix>.<command>.<csv|json>` files plus
//! a `<prefix>.manifest.json`. Everything in the report except the timings is
//! a pure function of the configuration, independent of the worker count.

pub mod config;

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::assembly::{assemble, MatrixKind};
use crate::blocks::{word_expectation_mc, BlockMeasure, MeasureFamily};
use crate::error::{Error, Result};
use crate::graph::{sample_edges, GraphFamily, GraphSpec};
use crate::rng::{derived_stream, seed_stream, StreamRng};
use crate::spectral::{
    eigenvalues_with_limit, empirical_moments, esd_histogram, ks_distance, EmpiricalMoments,
    Spectrum,
};
use crate::stats::{Accumulator, Estimate};
use crate::theory::ema::{ema_continuous_density, ema_moments, EmaParams, DEFAULT_EPSILON};
use crate::theory::mp::{mp_continuous_moment, mp_density, mp_moments, MpParams};
use crate::theory::radii::{general_radii_moments, GeneralRadiiParams};
use crate::theory::ratio::{measure_ratio_factor, RatioCase};
use crate::theory::TheoreticalCdf;
use crate::walks::{classify_word, enumerate_tree_walks, finite_rank_limit, Crossing, Word};

pub use config::{Command, ExperimentConfig, Format};

/// Eigenvalues with `|lambda|` at or below this are treated as exact zeros.
pub const ZERO_TOL: f64 = 1e-8;

/// Execution settings that must not influence results.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

/// A CSV table; `name` is `None` for the command's primary table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: Option<String>,
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: ExperimentConfig,
    /// Command-specific results.
    pub results: Value,
    pub tables: Vec<Table>,
    pub checks: Vec<CheckOutcome>,
    /// Wall-clock seconds per phase; kept out of the deterministic outputs.
    pub timings: Vec<(String, f64)>,
}

impl RunReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// The deterministic JSON document written for `format = json`. For
    /// `words` this is the moment polynomial itself.
    pub fn document(&self) -> Value {
        if self.config.command == Command::Words {
            return self.results["polynomial"].clone();
        }
        let config: serde_json::Map<String, Value> = self
            .config
            .entries()
            .into_iter()
            .map(|(k, v)| (k.to_string(), Value::from(v)))
            .collect();
        json!({
            "command": self.config.command.name(),
            "config": config,
            "config_hash": self.config.hash(),
            "results": self.results,
            "checks": self.checks.iter().map(|c| json!({
                "name": c.name, "passed": c.passed, "detail": c.detail,
            })).collect::<Vec<_>>(),
        })
    }

    pub fn manifest(&self, outputs: &[PathBuf]) -> Value {
        let timings: serde_json::Map<String, Value> = self
            .timings
            .iter()
            .map(|(k, v)| (k.clone(), Value::from(*v)))
            .collect();
        json!({
            "software": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.config.command.name(),
            "config_hash": self.config.hash(),
            "seed": self.config.seed,
            "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "checks_passed": self.all_passed(),
            "timings_seconds": timings,
        })
    }
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn estimate_json(e: Estimate) -> Value {
    json!({ "mean": e.value, "stderr": e.stderr })
}

/// Runs `f(0..n)` on a pool of `jobs` workers, returning results in index order.
fn par_indexed<T, F>(jobs: usize, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Resource(format!("thread pool: {e}")))?;
    pool.install(|| (0..n).into_par_iter().map(&f).collect())
}

/// Limiting law of a finite-rank ensemble, for eigenvalues divided by `scale`.
#[derive(Debug, Clone)]
enum Law {
    Ema(EmaParams),
    Mp(MpParams),
}

#[derive(Debug, Clone)]
struct ScaledLaw {
    law: Law,
    scale: f64,
}

impl ScaledLaw {
    /// Finite-rank blocks with one common norm `R` and parameter `t`.
    fn for_measure(kind: MatrixKind, m: &BlockMeasure, t: f64) -> Result<Option<Self>> {
        if m.family().is_full_rank() || m.radii().iter().any(|&r| r != m.radius()) {
            return Ok(None);
        }
        let law = match kind {
            MatrixKind::Adjacency => Law::Ema(EmaParams::new(t)?),
            MatrixKind::Laplacian => Law::Mp(MpParams::new(t)?),
        };
        Ok(Some(Self {
            law,
            scale: m.radius() * m.radius(),
        }))
    }

    fn cdf(&self) -> Result<TheoreticalCdf> {
        match &self.law {
            Law::Ema(p) => TheoreticalCdf::ema(p),
            Law::Mp(p) => Ok(TheoreticalCdf::marchenko_pastur(p)),
        }
    }

    /// Density of the unscaled eigenvalues at `x`.
    fn density(&self, x: f64) -> f64 {
        let y = x / self.scale;
        let rho = match &self.law {
            Law::Ema(p) => ema_continuous_density(y, p, DEFAULT_EPSILON).unwrap_or(f64::NAN),
            Law::Mp(p) => {
                if y > 0.0 {
                    mp_density(y, p)
                } else {
                    0.0
                }
            }
        };
        rho / self.scale
    }

    fn describe(&self) -> Value {
        match &self.law {
            Law::Ema(p) => json!({
                "law": "ema", "t": p.t(), "scale": self.scale, "atom": p.atom_mass(),
                "support": p.support().iter().map(|&(a, b)| [a, b]).collect::<Vec<_>>(),
            }),
            Law::Mp(p) => json!({
                "law": "marchenko-pastur", "t": p.t(), "scale": self.scale,
                "atom": p.atom_mass(), "lower": p.lower(), "upper": p.upper(),
            }),
        }
    }
}

fn scaled(s: &Spectrum, scale: f64) -> Result<Spectrum> {
    let mut out = Spectrum::new(
        s.eigenvalues().iter().map(|v| v / scale).collect(),
        s.n_vertices(),
        s.block_dim(),
    )?;
    out.snap_zeros(ZERO_TOL);
    Ok(out)
}

struct Realization {
    spectrum: Spectrum,
    n_edges: usize,
}

fn realize(
    cfg: &ExperimentConfig,
    graph: &GraphSpec,
    m: &BlockMeasure,
    rng: &mut StreamRng,
) -> Result<Realization> {
    let edges = sample_edges(graph, rng)?;
    let a = assemble(cfg.kind, &edges, m, rng)?;
    let mut spectrum = eigenvalues_with_limit(&a, cfg.dense_limit)?;
    spectrum.snap_zeros(ZERO_TOL);
    Ok(Realization {
        spectrum,
        n_edges: edges.len(),
    })
}

/// `mu_0..=mu_{p_max}` of the limiting law, when one is known.
fn theory_moments(
    kind: MatrixKind,
    m: &BlockMeasure,
    z: f64,
    p_max: usize,
) -> Result<Option<Vec<f64>>> {
    if m.family().is_full_rank() {
        return Ok(None);
    }
    match kind {
        MatrixKind::Adjacency => {
            let p = GeneralRadiiParams::new(z, m.dim(), m.radii().to_vec())?;
            let even = general_radii_moments(&p, p_max / 2)?;
            Ok(Some(
                (0..=p_max)
                    .map(|k| if k % 2 == 0 { even[k / 2] } else { 0.0 })
                    .collect(),
            ))
        }
        MatrixKind::Laplacian => {
            if m.radii().iter().any(|&r| r != m.radius()) {
                return Ok(None);
            }
            let t = m.rank() as f64 * z / m.dim() as f64;
            let scale = m.radius() * m.radius();
            let mu = mp_moments(&MpParams::new(t)?, p_max)?;
            Ok(Some(
                mu.iter()
                    .enumerate()
                    .map(|(k, v)| v * scale.powi(k as i32))
                    .collect(),
            ))
        }
    }
}

/// Executes the configured command.
pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = match cfg.command {
        Command::SampleSpectrum => run_sample_spectrum(cfg, opts),
        Command::Moments => run_moments(cfg, opts),
        Command::Theory => run_theory(cfg),
        Command::Universality => run_universality(cfg, opts),
        Command::Words => run_words(cfg),
        Command::Convergence => run_convergence(cfg, opts),
    }?;
    report
        .timings
        .push(("total".into(), start.elapsed().as_secs_f64()));
    Ok(report)
}

fn new_report(
    cfg: &ExperimentConfig,
    results: Value,
    tables: Vec<Table>,
    checks: Vec<CheckOutcome>,
) -> RunReport {
    RunReport {
        config: cfg.clone(),
        results,
        tables,
        checks,
        timings: Vec::new(),
    }
}

fn run_sample_spectrum(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport> {
    let m = cfg.block_measure()?;
    let graph = cfg.graph_spec();
    let law = ScaledLaw::for_measure(cfg.kind, &m, cfg.theory_t())?;
    let cdf = law.as_ref().map(ScaledLaw::cdf).transpose()?;
    let runs = par_indexed(opts.jobs, cfg.realizations, |r| {
        let real = realize(cfg, &graph, &m, &mut seed_stream(cfg.seed, r as u64))?;
        let ks = match (&law, &cdf) {
            (Some(l), Some(c)) => Some(ks_distance(&scaled(&real.spectrum, l.scale)?, c)?),
            _ => None,
        };
        Ok((real, ks))
    })?;

    let mut spectrum_csv = String::from("realization,eigenvalue\n");
    let mut pooled = Vec::new();
    let mut summaries = Vec::new();
    let mut ks_acc = Accumulator::new();
    for (r, (real, ks)) in runs.iter().enumerate() {
        for &v in real.spectrum.eigenvalues() {
            spectrum_csv.push_str(&format!("{r},{}\n", num(v)));
        }
        pooled.extend_from_slice(real.spectrum.eigenvalues());
        let mom = empirical_moments(&real.spectrum, 4);
        if let Some(k) = ks {
            ks_acc.push(*k);
        }
        summaries.push(json!({
            "realization": r,
            "edges": real.n_edges,
            "mu2": mom.get(2),
            "mu4": mom.get(4),
            "zero_fraction": real.spectrum.zero_fraction(ZERO_TOL),
            "spectral_radius": real.spectrum.spectral_radius(),
            "ks": ks,
        }));
    }
    let pooled = Spectrum::from_values(pooled)?;
    let (mut lo, mut hi) = (
        pooled.eigenvalues()[0],
        *pooled.eigenvalues().last().expect("nonempty"),
    );
    if hi - lo < 1e-12 {
        lo -= 1.0;
        hi += 1.0;
    }
    let hist = esd_histogram(&pooled, cfg.bins, (lo, hi))?;
    let mut hist_csv = String::from("x,density,theory\n");
    for &(x, y) in &hist {
        let th = law.as_ref().map(|l| l.density(x));
        hist_csv.push_str(&format!("{},{},{}\n", num(x), num(y), opt_num(th)));
    }

    let ks = (ks_acc.count() > 0).then(|| Estimate::from(&ks_acc));
    let mut checks = Vec::new();
    if let Some(k) = ks {
        checks.push(CheckOutcome::new(
            "ks",
            k.value <= cfg.ks_max,
            format!("mean KS {} vs limit {}", k.value, cfg.ks_max),
        ));
    }
    let results = json!({
        "law": law.as_ref().map(ScaledLaw::describe),
        "ks": ks.map(estimate_json),
        "realizations": summaries,
    });
    let tables = vec![
        Table {
            name: None,
            text: spectrum_csv,
        },
        Table {
            name: Some("histogram".into()),
            text: hist_csv,
        },
    ];
    Ok(new_report(cfg, results, tables, checks))
}

fn moments_table(avg: &EmpiricalMoments, theory: Option<&[f64]>) -> (String, Vec<Value>, f64) {
    let mut csv = String::from("p,mu,stderr,theory,z\n");
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for p in 0..avg.moments.len() {
        let th = theory.map(|t| t[p]);
        let se = avg.stderr_of(p);
        let z = th.filter(|_| se > 0.0).map(|t| (avg.get(p) - t) / se);
        if let Some(z) = z {
            worst = worst.max(z.abs());
        }
        csv.push_str(&format!(
            "{p},{},{},{},{}\n",
            num(avg.get(p)),
            num(se),
            opt_num(th),
            opt_num(z)
        ));
        rows.push(json!({ "p": p, "mu": avg.get(p), "stderr": se, "theory": th, "z": z }));
    }
    (csv, rows, worst)
}

fn run_moments(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport> {
    let m = cfg.block_measure()?;
    let graph = cfg.graph_spec();
    let per = par_indexed(opts.jobs, cfg.realizations, |r| {
        let real = realize(cfg, &graph, &m, &mut seed_stream(cfg.seed, r as u64))?;
        Ok(empirical_moments(&real.spectrum, cfg.p_max))
    })?;
    let avg = EmpiricalMoments::average(&per)?;
    let theory = theory_moments(cfg.kind, &m, cfg.mean_degree, cfg.p_max)?;
    let (csv, rows, worst) = moments_table(&avg, theory.as_deref());
    let mut checks = Vec::new();
    if theory.is_some() && cfg.realizations >= 2 {
        checks.push(CheckOutcome::new(
            "moments",
            worst <= cfg.z_max,
            format!("largest |z| {worst} vs limit {}", cfg.z_max),
        ));
    }
    let results = json!({ "moments": rows, "theory_available": theory.is_some() });
    Ok(new_report(
        cfg,
        results,
        vec![Table {
            name: None,
            text: csv,
        }],
        checks,
    ))
}

fn run_theory(cfg: &ExperimentConfig) -> Result<RunReport> {
    let t = cfg.theory_t();
    let n = cfg.bins;
    let mut csv = String::from("x,density\n");
    let mut moments = Vec::new();
    let mut checks = Vec::new();
    let header;
    match cfg.kind {
        MatrixKind::Adjacency => {
            let p = EmaParams::new(t)?;
            let edge = p.edge();
            for k in 0..n {
                let x = -1.1 * edge + 2.2 * edge * (k as f64 + 0.5) / n as f64;
                csv.push_str(&format!(
                    "{},{}\n",
                    num(x),
                    num(ema_continuous_density(x, &p, DEFAULT_EPSILON)?)
                ));
            }
            let polys = ema_moments(cfg.p_max / 2)?;
            for (k, poly) in polys.iter().enumerate() {
                moments.push(json!({
                    "p": 2 * k, "polynomial": poly.to_string(),
                    "coefficients": poly.to_json_map(), "value": poly.eval(t),
                }));
            }
            let mass = crate::theory::ema::ema_continuous_mass(&p, DEFAULT_EPSILON, 1e-10)?
                + p.atom_mass();
            checks.push(CheckOutcome::new(
                "mass",
                (mass - 1.0).abs() < 1e-6,
                format!("total mass {mass}"),
            ));
            header = json!({
                "law": "ema", "t": t, "atom": p.atom_mass(), "edge": edge,
                "support": p.support().iter().map(|&(a, b)| [a, b]).collect::<Vec<_>>(),
            });
        }
        MatrixKind::Laplacian => {
            let p = MpParams::new(t)?;
            for k in 0..n {
                let x = 1.1 * p.upper() * (k as f64 + 0.5) / n as f64;
                csv.push_str(&format!("{},{}\n", num(x), num(mp_density(x, &p))));
            }
            for (k, v) in mp_moments(&p, cfg.p_max)?.iter().enumerate() {
                moments.push(json!({ "p": k, "value": v }));
            }
            let mass = mp_continuous_moment(&p, 0, 1e-12) + p.atom_mass();
            checks.push(CheckOutcome::new(
                "mass",
                (mass - 1.0).abs() < 1e-6,
                format!("total mass {mass}"),
            ));
            header = json!({
                "law": "marchenko-pastur", "t": t, "lower": p.lower(), "upper": p.upper(), "atom": p.atom_mass(),
            });
        }
    }
    let results = json!({ "header": header, "moments": moments });
    Ok(new_report(
        cfg,
        results,
        vec![Table {
            name: None,
            text: csv,
        }],
        checks,
    ))
}

fn ratio_measures(case: RatioCase, d: usize, radius: f64) -> Result<(BlockMeasure, BlockMeasure)> {
    let (family, reference) = match case {
        RatioCase::VectorSphere => (MeasureFamily::RankOneSphere, MeasureFamily::RankOneGauss),
        RatioCase::VectorBall => (MeasureFamily::RankOneBall, MeasureFamily::RankOneGauss),
        RatioCase::MatrixFixed => (MeasureFamily::FullFixedTrace, MeasureFamily::FullGauss),
        RatioCase::MatrixBounded => (MeasureFamily::FullBoundedTrace, MeasureFamily::FullGauss),
    };
    Ok((
        BlockMeasure::new(family, d, radius)?,
        BlockMeasure::new(reference, d, radius)?,
    ))
}

fn case_name(case: RatioCase) -> &'static str {
    match case {
        RatioCase::VectorBall => "vector-ball",
        RatioCase::VectorSphere => "vector-sphere",
        RatioCase::MatrixBounded => "matrix-bounded",
        RatioCase::MatrixFixed => "matrix-fixed",
    }
}

/// Monte-Carlo `<tr X^power>_measure / <tr X^power>_reference` with
/// independent streams for numerator and denominator.
pub fn mc_trace_ratio(
    case: RatioCase,
    d: usize,
    power: u32,
    samples: usize,
    seed: u64,
    cell: u64,
) -> Result<Estimate> {
    let (m, reference) = ratio_measures(case, d, 1.0)?;
    let word: Word = format!("1^{power}").parse()?;
    let num = word_expectation_mc(&m, &word, samples, &mut derived_stream(seed, cell, 0))?;
    let den = word_expectation_mc(
        &reference,
        &word,
        samples,
        &mut derived_stream(seed, cell, 1),
    )?;
    Ok(num.ratio(den))
}

pub const RATIO_CASES: [RatioCase; 4] = [
    RatioCase::VectorSphere,
    RatioCase::VectorBall,
    RatioCase::MatrixFixed,
    RatioCase::MatrixBounded,
];

fn run_universality(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport> {
    let mut cells = Vec::new();
    for &d in &cfg.d_list {
        for case in RATIO_CASES {
            for power in [2u32, 4] {
                cells.push((d, case, power));
            }
        }
    }
    let est = par_indexed(opts.jobs, cells.len(), |k| {
        let (d, case, power) = cells[k];
        let ratio = mc_trace_ratio(case, d, power, cfg.samples, cfg.seed, k as u64 + 1)?;
        let factor = measure_ratio_factor(case, d, &[power])?;
        Ok((ratio, factor))
    })?;
    let mut csv = String::from("d,case,power,ratio,stderr,factor,z\n");
    let mut rows = Vec::new();
    let mut within = 0;
    for (&(d, case, power), &(ratio, factor)) in cells.iter().zip(&est) {
        let z = ratio.z_score(factor);
        if z.abs() < 3.0 {
            within += 1;
        }
        csv.push_str(&format!(
            "{d},{},{power},{},{},{},{}\n",
            case_name(case),
            num(ratio.value),
            num(ratio.stderr),
            num(factor),
            num(z)
        ));
        rows.push(json!({
            "d": d, "case": case_name(case), "power": power,
            "ratio": ratio.value, "stderr": ratio.stderr, "factor": factor, "z": z,
        }));
    }
    let frac = within as f64 / cells.len() as f64;
    let checks = vec![CheckOutcome::new(
        "ratios",
        frac >= 0.95,
        format!("{within}/{} cells within 3 stderr", cells.len()),
    )];
    Ok(new_report(
        cfg,
        json!({ "cells": rows }),
        vec![Table {
            name: None,
            text: csv,
        }],
        checks,
    ))
}

fn run_words(cfg: &ExperimentConfig) -> Result<RunReport> {
    let p = cfg.p_max as u32;
    let mp = enumerate_tree_walks(p)?;
    let mut csv = String::from("z,word,mult,crossing\n");
    for t in mp.terms() {
        let crossing = classify_word(&t.word) == Crossing::Crossing;
        csv.push_str(&format!("{},{},{},{}\n", t.z, t.word, t.mult, crossing));
    }
    let ema = ema_moments(p as usize)?;
    let mut limits_csv = String::from("p,walk_limit,series\n");
    let mut limits = Vec::new();
    let mut all_match = true;
    for q in 1..=p {
        let walk = finite_rank_limit(&enumerate_tree_walks(q)?);
        let series = &ema[q as usize];
        all_match &= &walk == series;
        limits_csv.push_str(&format!("{q},{walk},{series}\n"));
        limits.push(json!({ "p": q, "walk_limit": walk.to_string(), "series": series.to_string(), "match": &walk == series }));
    }
    let checks = vec![CheckOutcome::new(
        "finite-rank-limit",
        all_match,
        format!("walk limits vs non-crossing series for p <= {p}"),
    )];
    let results = json!({ "polynomial": mp.to_json(), "limits": limits });
    let tables = vec![
        Table {
            name: None,
            text: csv,
        },
        Table {
            name: Some("limits".into()),
            text: limits_csv,
        },
    ];
    Ok(new_report(cfg, results, tables, checks))
}

fn run_convergence(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport> {
    let t = cfg.theory_t();
    let mut csv =
        String::from("d,z,ks,ks_stderr,mu2,mu2_stderr,mu2_theory,mu4,mu4_stderr,mu4_theory\n");
    let mut rows = Vec::new();
    let mut ks_points = Vec::new();
    for (k, &d) in cfg.d_list.iter().enumerate() {
        let m = cfg.block_measure_at(d)?;
        if m.family().is_full_rank() {
            return Err(Error::Config {
                field: "measure".into(),
                message: "convergence needs a finite-rank measure".into(),
            });
        }
        let z = t * d as f64 / m.rank() as f64;
        if cfg.graph == GraphFamily::Regular && z.fract() != 0.0 {
            return Err(Error::Config {
                field: "d_list".into(),
                message: format!("degree {z} at d = {d} is not an integer"),
            });
        }
        let graph = GraphSpec {
            n_vertices: cfg.n_vertices,
            mean_degree: z,
            family: cfg.graph,
        };
        graph.validate().map_err(|e| Error::Config {
            field: "d_list".into(),
            message: e.to_string(),
        })?;
        let law = ScaledLaw::for_measure(cfg.kind, &m, t)?.ok_or_else(|| Error::Config {
            field: "measure".into(),
            message: "no limiting law for distinct radii".into(),
        })?;
        let cdf = law.cdf()?;
        let per = par_indexed(opts.jobs, cfg.realizations, |r| {
            let real = realize(
                cfg,
                &graph,
                &m,
                &mut derived_stream(cfg.seed, k as u64 + 1, r as u64),
            )?;
            let ks = ks_distance(&scaled(&real.spectrum, law.scale)?, &cdf)?;
            Ok((ks, empirical_moments(&real.spectrum, 4)))
        })?;
        let ks = Estimate::from(&per.iter().map(|(k, _)| *k).collect::<Accumulator>());
        let moms: Vec<EmpiricalMoments> = per.into_iter().map(|(_, m)| m).collect();
        let avg = EmpiricalMoments::average(&moms)?;
        let theory = theory_moments(cfg.kind, &m, z, 4)?.expect("finite-rank law has moments");
        csv.push_str(&format!(
            "{d},{},{},{},{},{},{},{},{},{}\n",
            num(z),
            num(ks.value),
            num(ks.stderr),
            num(avg.get(2)),
            num(avg.stderr_of(2)),
            num(theory[2]),
            num(avg.get(4)),
            num(avg.stderr_of(4)),
            num(theory[4])
        ));
        rows.push(json!({
            "d": d, "z": z, "ks": estimate_json(ks),
            "mu2": { "mean": avg.get(2), "stderr": avg.stderr_of(2), "theory": theory[2] },
            "mu4": { "mean": avg.get(4), "stderr": avg.stderr_of(4), "theory": theory[4] },
        }));
        ks_points.push(ks);
    }
    let mut checks = Vec::new();
    if let (Some(first), Some(last)) = (ks_points.first(), ks_points.last()) {
        if ks_points.len() >= 2 {
            let margin = (first.stderr.powi(2) + last.stderr.powi(2)).sqrt();
            checks.push(CheckOutcome::new(
                "ks-decreases",
                first.value - last.value > margin,
                format!(
                    "KS {} -> {} (combined stderr {margin})",
                    first.value, last.value
                ),
            ));
        }
        checks.push(CheckOutcome::new(
            "ks-final",
            last.value <= cfg.ks_max,
            format!("final KS {} vs limit {}", last.value, cfg.ks_max),
        ));
    }
    Ok(new_report(
        cfg,
        json!({ "t": t, "rows": rows }),
        vec![Table {
            name: None,
            text: csv,
        }],
        checks,
    ))
}

/// Writes the report files and the manifest; returns every path written.
pub fn write_outputs(report: &RunReport) -> Result<Vec<PathBuf>> {
    let cfg = &report.config;
    let prefix = &cfg.output;
    let command = cfg.command.name();
    if let Some(parent) = PathBuf::from(prefix).parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut written = Vec::new();
    match cfg.format {
        Format::Json => {
            let path = PathBuf::from(format!("{prefix}.{command}.json"));
            std::fs::write(
                &path,
                serde_json::to_string_pretty(&report.document())? + "\n",
            )?;
            written.push(path);
        }
        Format::Csv => {
            for table in &report.tables {
                let path = match &table.name {
                    None => PathBuf::from(format!("{prefix}.{command}.csv")),
                    Some(name) => PathBuf::from(format!("{prefix}.{command}.{name}.csv")),
                };
                std::fs::write(&path, &table.text)?;
                written.push(path);
            }
        }
    }
    let manifest = PathBuf::from(format!("{prefix}.manifest.json"));
    std::fs::write(
        &manifest,
        serde_json::to_string_pretty(&report.manifest(&written))? + "\n",
    )?;
    written.push(manifest);
    Ok(written)
}
