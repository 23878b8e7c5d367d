//! The `report` pipeline: run log in, artifact bundle out.
//!
//! The bundle is built entirely in memory and keyed by file name, so it can
//! be compared or written atomically afterwards.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::codecs::Representation;
use crate::frontier::{
    fit_rho_powerlaw, frontier, min_loss_envelope, published, EnvelopeGrid, FrontierError, FrontierPoint, RhoFit,
};
use crate::plot::{num, plot_csv, plot_svg, PlotError, PlotPoint, PlotSpec, Series};
use crate::runlog::{load_runs_bytes, LoadError, LoadedRuns, RecordDiagnostic};
use crate::scaling::{fit_bivariate, FitConfig, FitReport};
use crate::tokenizer::sha256_hex;

pub const DEFAULT_C_MIN: f64 = 1e14;
pub const DEFAULT_C_MAX: f64 = 1.95e18;
pub const DEFAULT_LEVELS: usize = 12;
const PLOT_LEVELS: usize = 49;
/// Slack allowed when comparing our slopes to the reported ones.
pub const SLOPE_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportConfig {
    pub fit: FitConfig,
    pub c_min: f64,
    pub c_max: f64,
    pub levels: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            fit: FitConfig::default(),
            c_min: DEFAULT_C_MIN,
            c_max: DEFAULT_C_MAX,
            levels: DEFAULT_LEVELS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("no representation could be fitted")]
    NothingFitted(BTreeMap<String, String>),
    #[error(transparent)]
    Frontier(#[from] FrontierError),
    #[error(transparent)]
    Plot(#[from] PlotError),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Bundle {
    pub files: BTreeMap<String, Vec<u8>>,
}

impl Bundle {
    pub fn insert(&mut self, name: impl Into<String>, bytes: impl Into<Vec<u8>>) {
        self.files.insert(name.into(), bytes.into());
    }

    pub fn json<T: Serialize>(&mut self, name: impl Into<String>, value: &T) {
        let mut bytes = serde_json::to_vec_pretty(value).expect("report values serialize");
        bytes.push(b'\n');
        self.insert(name, bytes);
    }

    /// Writes every file to `dir` through a temporary name and a rename.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        write_files(dir, self.files.iter().map(|(k, v)| (k.as_str(), v.as_slice())))
    }
}

pub fn write_files<'a>(dir: &Path, files: impl IntoIterator<Item = (&'a str, &'a [u8])>) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let files: Vec<_> = files.into_iter().collect();
    let mut staged = Vec::with_capacity(files.len());
    for (name, bytes) in &files {
        let tmp = dir.join(format!(".{name}.tmp"));
        if let Err(e) = std::fs::write(&tmp, bytes) {
            for (t, _) in &staged {
                let _ = std::fs::remove_file(t);
            }
            return Err(e);
        }
        staged.push((tmp, dir.join(name)));
    }
    for (tmp, dst) in staged {
        std::fs::rename(tmp, dst)?;
    }
    Ok(())
}

/// Pearson correlation; `None` when either side is constant.
pub fn correlation(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierRow {
    pub representation: Representation,
    #[serde(rename = "C_min")]
    pub c_min: f64,
    #[serde(rename = "C_max")]
    pub c_max: f64,
    pub rho_at_c_min: f64,
    pub rho_at_c_max: f64,
    pub corr_log_rho: Option<f64>,
    #[serde(rename = "L_opt_at_c_min")]
    pub l_at_c_min: f64,
    #[serde(rename = "L_opt_at_c_max")]
    pub l_at_c_max: f64,
    pub corr_loss: Option<f64>,
    /// Compute span covered by the single-epoch grid.
    pub grid_c_min: f64,
    pub grid_c_max: f64,
}

pub fn frontier_row(repr: Representation, pts: &[FrontierPoint<f64>], grid: (f64, f64)) -> FrontierRow {
    let (first, last) = (pts[0], pts[pts.len() - 1]);
    let lc: Vec<f64> = pts.iter().map(|p| p.c.log10()).collect();
    let lr: Vec<f64> = pts.iter().map(|p| p.rho_opt.log10()).collect();
    let l: Vec<f64> = pts.iter().map(|p| p.l_opt).collect();
    FrontierRow {
        representation: repr,
        c_min: first.c,
        c_max: last.c,
        rho_at_c_min: first.rho_opt,
        rho_at_c_max: last.rho_opt,
        corr_log_rho: correlation(&lc, &lr),
        l_at_c_min: first.l_opt,
        l_at_c_max: last.l_opt,
        corr_loss: correlation(&lc, &l),
        grid_c_min: grid.0,
        grid_c_max: grid.1,
    }
}

pub fn frontier_csv(pts: &[FrontierPoint<f64>], grid: (f64, f64), flops_per_token: f64) -> String {
    let mut out = String::from("C,P_opt,D_opt,rho_opt,L_opt,in_range\n");
    for p in pts {
        let in_range = p.c >= grid.0 && p.c <= grid.1;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            num(p.c * flops_per_token),
            num(p.p_opt),
            num(p.d_opt),
            num(p.rho_opt),
            num(p.l_opt),
            in_range
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoRow {
    pub representation: Representation,
    pub s: f64,
    pub factor: f64,
    pub b: f64,
    pub a: f64,
    /// `(alpha - beta) / (alpha + beta)` from the fitted exponents.
    pub closed_form_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct ReportSummary<'a> {
    schema: u32,
    input_sha256: String,
    config: &'a ReportConfig,
    representations: Vec<Representation>,
    failed: BTreeMap<String, String>,
    rejected_records: &'a [RecordDiagnostic],
    files: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct Consistency {
    fitted: Vec<RhoRow>,
    reported: published::ConsistencyReport,
}

fn fits_csv(fits: &[FitReport<f64>]) -> String {
    let mut out = String::from("representation,alpha,beta,mae,rmse,n,L_inf,k_P,k_D,converged\n");
    for f in fits {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            f.representation.name(),
            num(f.alpha),
            num(f.beta),
            num(f.mae),
            num(f.rmse),
            f.n,
            num(f.l_inf),
            num(f.k_p),
            num(f.k_d),
            f.converged
        );
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), num)
}

fn frontier_table(rows: &[FrontierRow]) -> String {
    let mut out = String::from(
        "representation,C_min,C_max,rho_at_C_min,rho_at_C_max,corr_log_rho,L_opt_at_C_min,L_opt_at_C_max,corr_loss,grid_C_min,grid_C_max\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.representation.name(),
            num(r.c_min),
            num(r.c_max),
            num(r.rho_at_c_min),
            num(r.rho_at_c_max),
            opt(r.corr_log_rho),
            num(r.l_at_c_min),
            num(r.l_at_c_max),
            opt(r.corr_loss),
            num(r.grid_c_min),
            r.grid_c_max
        );
    }
    out
}

fn rho_table(rows: &[RhoRow]) -> String {
    let mut out = String::from("representation,s,factor,b,a,closed_form_s\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.representation.name(),
            num(r.s),
            num(r.factor),
            num(r.b),
            num(r.a),
            num(r.closed_form_s)
        );
    }
    out
}

fn frontier_plot(
    repr: Representation,
    pts: &[FrontierPoint<f64>],
    runs: &LoadedRuns,
    grid: (f64, f64),
) -> Result<(String, String), PlotError> {
    let line = pts
        .iter()
        .map(|p| PlotPoint {
            x: p.c,
            y: p.l_opt,
            in_range: p.c >= grid.0 && p.c <= grid.1,
        })
        .collect();
    let observed = runs
        .observations(repr)
        .iter()
        .filter(|o| !o.is_multi_epoch())
        .map(|o| PlotPoint {
            x: o.p * o.d,
            y: o.loss,
            in_range: true,
        })
        .collect();
    let series = [Series::line("frontier", line), Series::scatter("runs", observed)];
    let spec = PlotSpec {
        title: format!("{} compute-optimal loss", repr.name()),
        x_label: "C = P·D".into(),
        y_label: "validation loss".into(),
        log_x: true,
        log_y: false,
        shade: Some(grid),
    };
    Ok((plot_csv(&series), plot_svg(&spec, &series)?))
}

fn envelope_plot(repr: Representation, runs: &LoadedRuns) -> Result<Option<(String, String)>, ReportError> {
    let traj = runs.trajectories(repr);
    if traj.is_empty() {
        return Ok(None);
    }
    let env = min_loss_envelope(&traj, EnvelopeGrid::Union, false)?;
    let points = env
        .iter()
        .map(|e| PlotPoint {
            x: e.c,
            y: e.loss,
            in_range: true,
        })
        .collect();
    let series = [Series::line("envelope", points)];
    let spec = PlotSpec {
        title: format!("{} minimum loss envelope", repr.name()),
        x_label: "C = P·tokens".into(),
        y_label: "validation loss".into(),
        log_x: true,
        log_y: false,
        shade: None,
    };
    let mut csv = String::from("C,loss,run_id\n");
    for e in &env {
        let _ = writeln!(
            csv,
            "{},{},{}",
            num(e.c),
            num(e.loss),
            crate::metrics::csv_field(&e.run_id)
        );
    }
    Ok(Some((csv, plot_svg(&spec, &series)?)))
}

/// Runs fit, frontier, ratio fit and tables for every representation in the
/// log. Representations whose fit fails are listed in `report.json`.
pub fn build_report(input: &[u8], cfg: &ReportConfig) -> Result<Bundle, ReportError> {
    let runs = load_runs_bytes(input)?;
    let mut bundle = Bundle::default();
    let mut fits = Vec::new();
    let mut frontier_rows = Vec::new();
    let mut rho_rows = Vec::new();
    let mut failed = BTreeMap::new();

    for repr in runs.representations() {
        let obs = runs.observations(repr);
        let (params, diag) = match fit_bivariate::<f64>(&obs, &cfg.fit) {
            Ok(v) => v,
            Err(e) => {
                failed.insert(repr.name().to_string(), e.to_string());
                continue;
            }
        };
        let report = FitReport::new(repr, &params, &diag);
        bundle.json(format!("fit_{}.json", repr.name()), &report);
        fits.push(report);

        let grid = runs.compute_span(repr).unwrap_or((f64::NAN, f64::NAN));
        let table_pts = frontier(&params, cfg.c_min, cfg.c_max, cfg.levels)?;
        frontier_rows.push(frontier_row(repr, &table_pts, grid));

        let samples: Vec<(f64, f64)> = table_pts.iter().map(|p| (p.c, p.rho_opt)).collect();
        let RhoFit { s, b, a, factor } = fit_rho_powerlaw(&samples)?;
        rho_rows.push(RhoRow {
            representation: repr,
            s,
            factor,
            b,
            a,
            closed_form_s: published::implied_slope(params.alpha, params.beta),
        });

        let lo = cfg.c_min.min(grid.0);
        let hi = cfg.c_max.max(grid.1);
        let plot_pts = frontier(&params, lo, hi, PLOT_LEVELS)?;
        bundle.insert(
            format!("frontier_{}.csv", repr.name()),
            frontier_csv(&plot_pts, grid, 1.0),
        );
        let (csv, svg) = frontier_plot(repr, &plot_pts, &runs, grid)?;
        bundle.insert(format!("frontier_{}_plot.csv", repr.name()), csv);
        bundle.insert(format!("frontier_{}.svg", repr.name()), svg);
        if let Some((csv, svg)) = envelope_plot(repr, &runs)? {
            bundle.insert(format!("envelope_{}.csv", repr.name()), csv);
            bundle.insert(format!("envelope_{}.svg", repr.name()), svg);
        }
    }
    if fits.is_empty() {
        return Err(ReportError::NothingFitted(failed));
    }
    bundle.insert("table_fits.csv", fits_csv(&fits));
    bundle.insert("table_frontier.csv", frontier_table(&frontier_rows));
    bundle.insert("table_rho.csv", rho_table(&rho_rows));
    bundle.json(
        "consistency.json",
        &Consistency {
            fitted: rho_rows.clone(),
            reported: published::slope_consistency(SLOPE_TOLERANCE),
        },
    );
    let files = bundle.files.iter().map(|(k, v)| (k.clone(), sha256_hex(v))).collect();
    let summary = ReportSummary {
        schema: 1,
        input_sha256: sha256_hex(input),
        config: cfg,
        representations: fits.iter().map(|f| f.representation).collect(),
        failed,
        rejected_records: &runs.diagnostics,
        files,
    };
    bundle.json("report.json", &summary);
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correlation_signs() {
        assert_eq!(correlation(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]), Some(1.0));
        assert_eq!(correlation(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(correlation(&[1.0, 2.0], &[5.0, 5.0]), None);
    }

    #[test]
    fn write_files_leaves_no_temporaries() {
        let dir = std::env::temp_dir().join(format!("molscale-report-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        let mut b = Bundle::default();
        b.insert("a.csv", "x\n");
        b.json("b.json", &[1, 2]);
        b.write_to(&dir).unwrap();
        let mut names: Vec<String> = std::fs::read_dir(&dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert_eq!(names, ["a.csv", "b.json"]);
        assert_eq!(
            std::fs::read_to_string(dir.join("b.json")).unwrap(),
            "[\n  1,\n  2\n]\n"
        );
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
