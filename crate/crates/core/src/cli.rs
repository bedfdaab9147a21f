//! Reproducible command runs: configuration, reports and output files.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds::{capacitor_bound, gy_annuli, hersch_bound, radial_sphere_map};
use crate::capacity::{capacity_report, isocapacity_constant, mazja_bracket, CandidateFamily, Capacitor};
use crate::error::{Error, Result};
use crate::measure::{ball_growth_diagnostic, default_radii, DiscreteMeasure, MeasureKind, MeasureSpec, Trend};
use crate::mesh::{assemble_stiffness, disk, flat_torus, graph_ball, grid_square, icosphere, load_mesh_file, Region, TriangleMesh};
use crate::optimize::{maximize_lambda1, resume, Checkpoint, DensityCapSchedule, MaximizerOptions, RunStatus};
use crate::spectrum::{assemble_mass, solve_spectrum_with, SpectrumOptions};
use crate::variation::{extremality_certificate, separating_direction, VariationOptions};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Eigs,
    Maximize,
    Capacity,
    Bounds,
    Extremality,
    Diagnose,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Eigs => "eigs",
            Command::Maximize => "maximize",
            Command::Capacity => "capacity",
            Command::Bounds => "bounds",
            Command::Extremality => "extremality",
            Command::Diagnose => "diagnose",
        }
    }
}

/// `F = B(center, r)`, `G = B(center, big_r)` in graph distance, or explicit
/// vertex lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacitorSpec {
    pub center: Option<usize>,
    pub r: Option<f64>,
    pub big_r: Option<f64>,
    pub f: Option<Vec<usize>>,
    pub g: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CommandOptions {
    pub k: Option<usize>,
    pub tol: Option<f64>,
    pub cluster_tol: Option<f64>,
    pub caps: Option<Vec<f64>>,
    pub budget: Option<usize>,
    pub resume: Option<PathBuf>,
    pub capacitor: Option<CapacitorSpec>,
    pub degree: Option<usize>,
    pub dump_eigenfunctions: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    /// File path, or `gen:icosphere:L`, `gen:torus:N`, `gen:disk:R`,
    /// `gen:square:N`.
    pub mesh: String,
    pub measure: MeasureSpec,
    #[serde(default)]
    pub options: CommandOptions,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// SHA-256 of the compact JSON serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

/// Builds a mesh from a path or a `gen:` descriptor.
pub fn load_mesh_source(src: &str) -> Result<TriangleMesh> {
    if let Some(rest) = src.strip_prefix("gen:") {
        let (kind, arg) = rest.split_once(':').ok_or_else(|| Error::invalid(format!("bad generator {src:?}")))?;
        let n: usize = arg.parse().map_err(|_| Error::invalid(format!("bad generator size in {src:?}")))?;
        return match kind {
            "icosphere" => Ok(icosphere(n)),
            "torus" => flat_torus(n),
            "disk" => disk(n),
            "square" => grid_square(n, 1.0),
            _ => Err(Error::invalid(format!("unknown generator {kind:?}"))),
        };
    }
    load_mesh_file(Path::new(src))
}

/// `uniform`, `boundary`, `atomic:v:m,v:m,…`, a measure descriptor `.json`
/// file, or any other path read as a serialized measure.
pub fn parse_measure(arg: &str) -> Result<MeasureSpec> {
    match arg {
        "uniform" => return Ok(MeasureSpec::uniform()),
        "boundary" => return Ok(MeasureSpec::boundary()),
        _ => {}
    }
    if let Some(rest) = arg.strip_prefix("atomic:") {
        let atoms = rest
            .split(',')
            .map(|p| {
                let (v, m) = p.split_once(':').ok_or_else(|| Error::invalid(format!("bad atom {p:?}")))?;
                Ok((
                    v.parse().map_err(|_| Error::invalid(format!("bad atom vertex {v:?}")))?,
                    m.parse().map_err(|_| Error::invalid(format!("bad atom mass {m:?}")))?,
                ))
            })
            .collect::<Result<Vec<(usize, f64)>>>()?;
        return Ok(MeasureSpec { kind: MeasureKind::Atomic, atoms: Some(atoms), ..MeasureSpec::uniform() });
    }
    let text = std::fs::read_to_string(arg)?;
    if let Ok(spec) = serde_json::from_str::<MeasureSpec>(&text) {
        return Ok(spec);
    }
    Ok(MeasureSpec { kind: MeasureKind::File, path: Some(arg.to_string()), ..MeasureSpec::uniform() })
}

/// A float that serializes non-finite values as strings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else if self.0.is_nan() {
            s.serialize_str("nan")
        } else if self.0 > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        Ok(Real(match Repr::deserialize(d)? {
            Repr::Num(x) => x,
            Repr::Text(t) => match t.as_str() {
                "inf" => f64::INFINITY,
                "-inf" => f64::NEG_INFINITY,
                _ => f64::NAN,
            },
        }))
    }
}

fn reals(v: &[f64]) -> Vec<Real> {
    v.iter().map(|&x| Real(x)).collect()
}

/// Pretty JSON with every float written to 17 significant digits.
struct FixedFloats<'a>(serde_json::ser::PrettyFormatter<'a>);

impl serde_json::ser::Formatter for FixedFloats<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        write!(w, "{:.16e}", value as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn end_object_key<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_key(w)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes `value` as pretty JSON with fixed 17-digit floats.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats(serde_json::ser::PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("JSON is UTF-8"))
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'static str,
    version: &'static str,
    config_hash: String,
    seed: u64,
    config: &'a RunConfig,
    result: T,
}

/// Files written by a run and the one-line summary.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: String,
    pub report: PathBuf,
    pub files: Vec<PathBuf>,
    /// 0 on success, 2 when the run ended in a numerical failure.
    pub exit_code: i32,
}

/// Binary eigenfunction dump: `EIGF`, version, rows, cols as `u32`, then
/// row-major little-endian `f64` (one row per eigenfunction).
pub fn write_eigf(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut out = Vec::with_capacity(16 + 8 * rows.len() * cols);
    out.extend_from_slice(b"EIGF");
    out.extend_from_slice(&1u32.to_le_bytes());
    out.extend_from_slice(&(rows.len() as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    for r in rows {
        if r.len() != cols {
            return Err(Error::invalid("ragged eigenfunction rows"));
        }
        for x in r {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_eigf(path: &Path) -> Result<Vec<Vec<f64>>> {
    let b = std::fs::read(path)?;
    if b.len() < 16 || &b[..4] != b"EIGF" {
        return Err(Error::invalid("not an EIGF file"));
    }
    let word = |i: usize| u32::from_le_bytes(b[i..i + 4].try_into().unwrap()) as usize;
    let (rows, cols) = (word(8), word(12));
    if b.len() != 16 + 8 * rows * cols {
        return Err(Error::invalid("EIGF size mismatch"));
    }
    Ok((0..rows)
        .map(|r| (0..cols).map(|c| f64::from_le_bytes(b[16 + 8 * (r * cols + c)..][..8].try_into().unwrap())).collect())
        .collect())
}

fn write_report<T: Serialize>(config: &RunConfig, result: T) -> Result<PathBuf> {
    std::fs::create_dir_all(&config.output_dir)?;
    let name = config.command.name();
    let env = Envelope { command: name, version: VERSION, config_hash: config.hash(), seed: config.seed, config, result };
    let path = config.output_dir.join(format!("{name}.json"));
    std::fs::write(&path, to_json_string(&env)?)?;
    let stamp = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    std::fs::write(config.output_dir.join(format!("{name}.timestamp")), format!("{stamp}\n"))?;
    Ok(path)
}

#[derive(Serialize)]
struct EigsReport {
    eigenvalues: Vec<Real>,
    normalized: Vec<Real>,
    residuals: Vec<f64>,
    clusters: Vec<Vec<usize>>,
    n_finite: usize,
    total_mass: f64,
}

#[derive(Serialize)]
struct DiagnoseReport {
    label: &'static str,
    verdict: &'static str,
    growth_q1: crate::measure::GrowthProfile,
    growth_q2: crate::measure::GrowthProfile,
    isocapacity: Vec<IsoRow>,
    isocapacity_trend: Trend,
}

#[derive(Serialize)]
struct IsoRow {
    radius: f64,
    beta_lower: f64,
    center: usize,
}

/// Runs one command, writing `<command>.json` (and, for `maximize`, a
/// trace CSV and a checkpoint) into the output directory.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    let mesh = load_mesh_source(&config.mesh)?;
    let mu = config.measure.realize(&mesh)?;
    let o = &config.options;
    let k = assemble_stiffness(&mesh);
    let spec_opts = SpectrumOptions { seed: config.seed, tol: o.tol.unwrap_or(1e-10).min(1e-8), ..Default::default() };
    let mut files = Vec::new();
    let mut exit_code = 0;
    let (report, summary) = match config.command {
        Command::Eigs => {
            let kk = o.k.unwrap_or(5).max(1);
            let r = solve_spectrum_with(&k, &assemble_mass(&mesh, &mu)?, kk, &spec_opts)?;
            let shown = (kk + 1).min(r.eigenvalues.len());
            if o.dump_eigenfunctions {
                let p = config.output_dir.join("eigenfunctions.eigf");
                std::fs::create_dir_all(&config.output_dir)?;
                write_eigf(&p, &r.eigenfunctions[..shown.min(r.eigenfunctions.len())])?;
                files.push(p);
            }
            let clusters = r.clusters(o.cluster_tol.unwrap_or(1e-6)).into_iter().filter(|c| c[0] < shown).collect::<Vec<_>>();
            let mult = clusters.iter().find(|c| c.contains(&1)).map_or(0, |c| c.len());
            let summary = format!("eigs: lambda1*mass = {:.10} ({:.6} x 8pi), multiplicity {mult}", r.normalized(1), r.normalized(1) / (8.0 * PI));
            let rep = EigsReport {
                eigenvalues: reals(&r.eigenvalues[..shown]),
                normalized: (0..shown).map(|j| Real(r.normalized(j))).collect(),
                residuals: r.residuals.iter().take(shown).copied().collect(),
                clusters,
                n_finite: r.n_finite,
                total_mass: r.total_mass,
            };
            (write_report(config, rep)?, summary)
        }
        Command::Extremality => {
            let kk = o.k.unwrap_or(1).max(1);
            let tol = o.tol.unwrap_or(1e-2);
            let vo = VariationOptions { cluster_tol: o.cluster_tol.unwrap_or(1e-6), spectrum: spec_opts, ..Default::default() };
            let cert = extremality_certificate(&mesh, &mu, kk, tol, &vo)?;
            let sep = separating_direction(&mesh, &mu, kk, tol, &vo)?;
            let summary = format!(
                "extremality: verdict {:?}, residual {:.3e}, coefficients {:?}",
                cert.verdict,
                cert.residual,
                cert.coefficients.iter().map(|c| (c * 1e4).round() / 1e4).collect::<Vec<_>>()
            );
            #[derive(Serialize)]
            struct Rep {
                certificate: crate::variation::ExtremalityCertificate,
                separating_direction: Option<crate::variation::Separation>,
            }
            (write_report(config, Rep { certificate: cert, separating_direction: sep })?, summary)
        }
        Command::Maximize => {
            let caps = o.caps.clone().unwrap_or_else(|| vec![10.0, 100.0]);
            let schedule = DensityCapSchedule::uniform_budget(caps, o.budget.unwrap_or(60))?;
            let mo = MaximizerOptions { spectrum: spec_opts, tol: o.tol.unwrap_or(1e-3), ..Default::default() };
            let result = match &o.resume {
                Some(p) => resume(&mesh, &k, Checkpoint::load(p)?, &mo)?,
                None => maximize_lambda1(&mesh, &k, &schedule, config.seed, &mo)?,
            };
            std::fs::create_dir_all(&config.output_dir)?;
            let csv = config.output_dir.join("trace.csv");
            let mut text = String::from("iteration,stage,cap,lambda1,step,certificate_residual,lp_bound,cluster,concentration\n");
            for r in &result.trace {
                let _ = writeln!(
                    text,
                    "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}",
                    r.iteration, r.stage, r.cap, r.lambda1, r.step, r.certificate_residual, r.lp_bound, r.cluster, r.concentration
                );
            }
            std::fs::write(&csv, text)?;
            files.push(csv);
            let cpp = config.output_dir.join("checkpoint.json");
            result.checkpoint.save(&cpp)?;
            files.push(cpp);
            if let RunStatus::NumericalFailure(_) = result.status {
                exit_code = 2;
            }
            let summary = format!(
                "maximize: lambda1*mass = {:.10} ({:.6} x 8pi) after {} iterations, status {:?}",
                result.lambda1,
                result.lambda1 / (8.0 * PI),
                result.trace.len(),
                result.status
            );
            (write_report(config, &result)?, summary)
        }
        Command::Capacity => {
            let c = o.capacitor.as_ref().ok_or_else(|| Error::invalid("capacity needs a capacitor"))?;
            let capacitor = capacitor_from_spec(&mesh, c)?;
            let rep = capacity_report(&mesh, &k, &mu, &capacitor)?;
            let mz = mazja_bracket(&mesh, &k, &mu, &capacitor.g, 0.05)?;
            let summary = format!("capacity: CAP = {:.10}, tone = {:.6e}, beta_lower = {:.6e}", rep.cap_value, rep.tone, rep.beta_lower);
            #[derive(Serialize)]
            struct Rep {
                capacity: crate::capacity::CapacityReport,
                mazja: crate::capacity::MazjaReport,
            }
            (write_report(config, Rep { capacity: rep, mazja: mz })?, summary)
        }
        Command::Bounds => {
            let kk = o.k.unwrap_or(1).max(1);
            let hersch = if mesh.genus()? == 0 && mesh.is_closed() {
                Some(hersch_bound(&mesh, &k, &mu, &radial_sphere_map(&mesh), o.degree.unwrap_or(1), 0.02)?)
            } else {
                None
            };
            let sys = gy_annuli(&mesh, &mu, kk)?;
            let cb = capacitor_bound(&mesh, &k, &mu, &sys, kk, 1e-9)?;
            let lam = solve_spectrum_with(&k, &assemble_mass(&mesh, &mu)?, 1, &spec_opts)?.normalized(1);
            let summary = format!(
                "bounds: lambda1*mass = {:.6}, hersch = {}, kappa/v = {:.6} vs lambda_{kk} = {:.6}",
                lam,
                hersch.as_ref().map_or("n/a".to_string(), |h| format!("{:.6}", h.bound)),
                cb.bound,
                cb.lambda_k
            );
            let hersch = hersch.map(|mut h| {
                h.lambda1_mass = Some(lam);
                h
            });
            #[derive(Serialize)]
            struct Rep {
                hersch: Option<crate::bounds::HerschReport>,
                annuli: crate::bounds::AnnulusSystem,
                capacitor_bound: crate::bounds::CapacitorBound,
            }
            (write_report(config, Rep { hersch, annuli: sys, capacitor_bound: cb })?, summary)
        }
        Command::Diagnose => {
            let rep = diagnose(&mesh, &mu)?;
            let summary = format!("diagnose: {} ({})", rep.verdict, rep.label);
            (write_report(config, rep)?, summary)
        }
    };
    Ok(RunOutcome { summary, report, files, exit_code })
}

fn capacitor_from_spec(mesh: &TriangleMesh, c: &CapacitorSpec) -> Result<Capacitor> {
    match (c.center, c.r, c.big_r, &c.f, &c.g) {
        (Some(x), Some(r), Some(big_r), None, None) => Capacitor::new(graph_ball(mesh, x, r)?, graph_ball(mesh, x, big_r)?),
        (None, None, None, Some(f), Some(g)) => Capacitor::new(Region::custom(f.clone()), Region::custom(g.clone())),
        _ => Err(Error::invalid("capacitor needs either center, r, big_r or explicit f and g")),
    }
}

fn diagnose(mesh: &TriangleMesh, mu: &DiscreteMeasure) -> Result<DiagnoseReport> {
    let radii = default_radii(mesh, 16);
    let growth_q1 = ball_growth_diagnostic(mesh, mu, 1.0, &radii)?;
    let growth_q2 = ball_growth_diagnostic(mesh, mu, 2.0, &radii)?;
    let k = assemble_stiffness(mesh);
    let h = mesh.median_edge_length();
    let n = mesh.n_vertices();
    let support = mu.support();
    let stride = (support.len() / 6).max(1);
    let centers: Vec<usize> = support.iter().copied().step_by(stride).take(6).collect();
    let family = CandidateFamily { ball_centers: 4, levels: 4, ..Default::default() };
    let mut isocapacity = Vec::new();
    for r in [8.0 * h, 4.0 * h, 2.0 * h, 1.01 * h] {
        let mut best = IsoRow { radius: r, beta_lower: 0.0, center: 0 };
        for &c in &centers {
            let b = graph_ball(mesh, c, r)?;
            if b.is_empty() || b.len() >= n {
                continue;
            }
            let e = isocapacity_constant(mesh, &k, mu, &b, &family)?;
            if e.beta_lower > best.beta_lower {
                best = IsoRow { radius: r, beta_lower: e.beta_lower, center: c };
            }
        }
        isocapacity.push(best);
    }
    let peak = isocapacity.iter().map(|r| r.beta_lower).fold(0.0, f64::max);
    let isocapacity_trend = if isocapacity.last().map_or(0.0, |r| r.beta_lower) < 0.5 * peak { Trend::Decaying } else { Trend::NonDecaying };
    let verdict = if mu.has_atoms() || growth_q1.trend == Trend::NonDecaying {
        "degenerate"
    } else if growth_q2.trend == Trend::Decaying && isocapacity_trend == Trend::Decaying {
        "compact-like"
    } else {
        "positive-lambda1-like"
    };
    Ok(DiagnoseReport { label: "heuristic", verdict, growth_q1, growth_q2, isocapacity, isocapacity_trend })
}
