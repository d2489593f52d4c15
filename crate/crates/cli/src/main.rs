use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use spiral_voronoi::diophantine::{cf_expand, CfInput, QuadraticSurd};
use spiral_voronoi::geom::{clip_to_rect, ConvexPolygon};
use spiral_voronoi::spiral::{self, linearization, SiteId, SpiralConfig, SpiralError, SpiralFamily, SpiralSet};
use spiral_voronoi::tessellation::{area_sweep, cell, cells_for, family_cell, CellRecord};
use spiral_voronoi::verify::{self, VerifyOptions};

#[derive(Parser)]
#[command(name = "spiral-voronoi", version, about = "Voronoi tessellations of spiral lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Exponent α of the spiral z_j = j^α e^{ijθ}.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Divergence angle: radians, or 2*pi*x with x a number, golden, sqrt2 or e.
    #[arg(long, default_value = "2*pi*golden", allow_hyphen_values = true)]
    divergence: String,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw the cells meeting a rectangle as SVG.
    Tessellate {
        #[command(flatten)]
        common: Common,
        /// x0,x1,y0,y1 (default: the square around the first ~1296 sites).
        #[arg(long, allow_hyphen_values = true)]
        range: Option<String>,
        #[arg(long)]
        jmin: Option<u64>,
        #[arg(long)]
        jmax: Option<u64>,
    },
    /// Cell areas as CSV: j, area, normalized_area.
    Areas {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        jmin: u64,
        #[arg(long, default_value_t = 10_000)]
        jmax: u64,
    },
    /// Run the certification suites and print a JSON report.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = verify::DEFAULT_SEED)]
        seed: u64,
        /// Random samples per suite.
        #[arg(long, default_value_t = verify::DEFAULT_SAMPLES)]
        samples: usize,
        /// Multiplies every bound; below 1 it makes the suites fail.
        #[arg(long, default_value_t = 1.0, hide = true)]
        bound_scale: f64,
    },
    /// Predicted and observed parastichy numbers at μ (or at site j).
    Parastichy {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with = "j", required_unless_present = "j")]
        mu: Option<f64>,
        #[arg(long)]
        j: Option<u64>,
    },
}

/// A bad invocation: exit status 2.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

enum Outcome {
    Ok,
    CheckFailed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    let common = match &cli.command {
        Command::Tessellate { common, .. }
        | Command::Areas { common, .. }
        | Command::Verify { common, .. }
        | Command::Parastichy { common, .. } => common,
    };
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let cfg = parse_divergence(&common.divergence, common.alpha)?;
    let rect = match &cli.command {
        Command::Tessellate { range: Some(r), .. } => parse_range(r)?,
        _ => default_range(common.alpha),
    };
    let mut out = open_output(&common.out)?;
    let outcome = match &cli.command {
        Command::Tessellate { jmin, jmax, .. } => tessellate(&cfg, rect, *jmin, *jmax, &mut out)?,
        Command::Areas { jmin, jmax, .. } => areas(&cfg, *jmin, *jmax, &mut out)?,
        Command::Verify { seed, samples, bound_scale, .. } => {
            let opts = VerifyOptions {
                seed: *seed,
                samples: *samples,
                bound_scale: *bound_scale,
            };
            run_verify(&cfg, &opts, &mut out)?
        }
        Command::Parastichy { mu, j, .. } => {
            let mu = mu.unwrap_or_else(|| j.expect("clap requires --mu or --j") as f64);
            parastichy(&cfg, mu, &mut out)?
        }
    };
    out.flush()?;
    Ok(outcome)
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Named constants use exact expansions when they are quadratic surds.
fn parse_divergence(expr: &str, alpha: f64) -> Result<SpiralConfig> {
    let s: String = expr.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
    let bad = || usage(format!("invalid divergence expression {expr:?}"));
    let cfg = if let Some(x) = s.strip_prefix("2*pi*") {
        match x {
            "golden" => SpiralConfig::from_surd(alpha, QuadraticSurd::GOLDEN),
            "sqrt2" => SpiralConfig::from_surd(alpha, QuadraticSurd::SQRT2),
            _ => {
                let x = if x == "e" { std::f64::consts::E } else { x.parse().map_err(|_| bad())? };
                let cf = cf_expand(&CfInput::Float(x), spiral::FLOAT_DEPTH).map_err(|e| usage(e.to_string()))?;
                SpiralConfig::from_cf(alpha, cf)
            }
        }
    } else {
        SpiralConfig::new(alpha, s.parse().map_err(|_| bad())?)
    };
    cfg.map_err(|e| usage(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Rect {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

fn parse_range(s: &str) -> Result<Rect> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| usage(format!("invalid --range {s:?}; expected x0,x1,y0,y1")))?;
    let [x0, x1, y0, y1] = v[..] else {
        return Err(usage(format!("--range needs four numbers, got {}", v.len())));
    };
    if !(x0 < x1 && y0 < y1) || v.iter().any(|t| !t.is_finite()) {
        return Err(usage(format!("--range {s:?} is empty")));
    }
    Ok(Rect { x0, x1, y0, y1 })
}

/// `±6^{4α}`: the square that holds about 1296 sites.
fn default_range(alpha: f64) -> Rect {
    let h = 6f64.powf(4.0 * alpha);
    Rect {
        x0: -h,
        x1: h,
        y0: -h,
        y1: h,
    }
}

const BATCH: u64 = 512;
const MAX_SITES: u64 = 20_000_000;

/// Cells that can meet `rect`. Without `jmax`, batches are added until one
/// lies entirely beyond the rectangle's farthest corner.
fn cells_near(cfg: &SpiralConfig, rect: Rect, jmin: u64, jmax: Option<u64>) -> Result<Vec<CellRecord>> {
    let reach = [rect.x0.abs().max(rect.x1.abs()), rect.y0.abs().max(rect.y1.abs())];
    let reach = reach[0].hypot(reach[1]);
    let beyond = |r: &CellRecord| spiral::site(cfg, r.j).pos.norm() - r.max_vertex_distance > reach;
    let mut out = Vec::new();
    let mut lo = jmin;
    loop {
        let hi = match jmax {
            Some(m) => m.min(lo + BATCH - 1),
            None => lo + BATCH - 1,
        };
        if lo > hi {
            break;
        }
        let batch = cells_for(cfg, &(lo..=hi).collect::<Vec<_>>())?;
        let done = jmax.is_none() && batch.iter().all(beyond);
        out.extend(batch.into_iter().filter(|r| !beyond(r)));
        if done || jmax.is_some_and(|m| hi >= m) {
            break;
        }
        if hi >= MAX_SITES {
            anyhow::bail!("range needs more than {MAX_SITES} sites; pass --jmax");
        }
        lo = hi + 1;
    }
    Ok(out)
}

fn fill(vertices: usize) -> &'static str {
    match vertices {
        4 => "#f4d35e",
        5 => "#ee964b",
        6 => "#9cc5d6",
        7 => "#f95738",
        _ => "#cccccc",
    }
}

fn tessellate(cfg: &SpiralConfig, rect: Rect, jmin: Option<u64>, jmax: Option<u64>, out: &mut dyn Write) -> Result<Outcome> {
    let jmin = jmin.unwrap_or(0);
    if jmax.is_some_and(|m| m < jmin) {
        return Err(usage("--jmax is below --jmin"));
    }
    let cells = cells_near(cfg, rect, jmin, jmax)?;
    let (w, h) = (rect.x1 - rect.x0, rect.y1 - rect.y0);
    let prec = (6 - w.max(h).log10().floor() as i32).max(0) as usize;
    let num = |t: f64| format!("{:.*}", prec, t + 0.0);
    let (px_w, px_h) = if w >= h { (800.0, 800.0 * h / w) } else { (800.0 * w / h, 800.0) };

    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#)?;
    writeln!(
        out,
        r#"<!DOCTYPE svg PUBLIC "-//W3C//DTD SVG 1.1//EN" "http://www.w3.org/Graphics/SVG/1.1/DTD/svg11.dtd">"#
    )?;
    // y points down in SVG, so the drawing uses (x, −y)
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{px_w:.0}" height="{px_h:.0}" viewBox="{} {} {} {}">"#,
        num(rect.x0),
        num(-rect.y1),
        num(w),
        num(h)
    )?;
    writeln!(
        out,
        r##"<g stroke="#333333" stroke-width="{}" stroke-linejoin="round">"##,
        num(w.max(h) / 1000.0)
    )?;
    for rec in &cells {
        let clipped: ConvexPolygon = clip_to_rect(&rec.cell, rect.x0, rect.x1, rect.y0, rect.y1);
        if clipped.is_empty() {
            continue;
        }
        let pts: Vec<String> = clipped.vertices().iter().map(|p| format!("{},{}", num(p.re), num(-p.im))).collect();
        writeln!(
            out,
            r#"<polygon id="j{}" fill="{}" points="{}"/>"#,
            rec.j,
            fill(rec.cell.len()),
            pts.join(" ")
        )?;
    }
    writeln!(out, "</g>")?;
    writeln!(out, "</svg>")?;
    Ok(Outcome::Ok)
}

fn areas(cfg: &SpiralConfig, jmin: u64, jmax: u64, out: &mut dyn Write) -> Result<Outcome> {
    if jmax < jmin {
        return Err(usage("--jmax is below --jmin"));
    }
    let mut rows = Vec::new();
    if jmin == 0 {
        rows.push(cell(cfg, 0)?);
    }
    if jmax >= 1 {
        rows.extend(area_sweep(cfg, jmin.max(1), jmax)?);
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["j", "area", "normalized_area"])?;
    for r in &rows {
        let norm = r.normalized_area.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([r.j.to_string(), r.area.to_string(), norm])?;
    }
    w.flush()?;
    Ok(Outcome::Ok)
}

fn run_verify(cfg: &SpiralConfig, opts: &VerifyOptions, out: &mut dyn Write) -> Result<Outcome> {
    let reports = verify::run_all(cfg, opts)?;
    serde_json::to_writer_pretty(&mut *out, &reports)?;
    writeln!(out)?;
    Ok(if reports.values().all(|r| r.passed) {
        Outcome::Ok
    } else {
        Outcome::CheckFailed
    })
}

/// Differences `|n|` to the edge neighbors of site `0` in `S_μ`.
fn observed_numbers(cfg: &SpiralConfig, mu: f64) -> Result<Vec<u64>> {
    let fam = SpiralFamily::new(cfg, SpiralSet::Parameterized { mu })?;
    let c = family_cell(&fam, SiteId::Index(0), None)?;
    let set: BTreeSet<u64> = c
        .neighbors
        .iter()
        .filter_map(|n| match n {
            SiteId::Index(k) => Some(k.unsigned_abs()),
            SiteId::Origin => None,
        })
        .collect();
    Ok(set.into_iter().collect())
}

fn parastichy(cfg: &SpiralConfig, mu: f64, out: &mut dyn Write) -> Result<Outcome> {
    let lin = match linearization(cfg, mu) {
        Ok(l) => l,
        Err(e @ (SpiralError::RationalDivergence | SpiralError::InvalidMu(_))) => return Err(usage(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let observed = observed_numbers(cfg, mu)?;
    let predicted: Vec<u64> = lin.parastichy_numbers.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let agree = predicted == observed;
    let doc = json!({
        "mu": mu,
        "regime": { "i": lin.i, "k": lin.k, "shape": lin.shape },
        "predicted": predicted,
        "observed": observed,
        "agree": agree,
    });
    serde_json::to_writer_pretty(&mut *out, &doc)?;
    writeln!(out)?;
    if !agree {
        eprintln!("warning: predicted and observed parastichy numbers differ at μ = {mu}");
    }
    Ok(if agree { Outcome::Ok } else { Outcome::CheckFailed })
}
