use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use plotters::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CurveSet, RunOutcome, SolverResult, METRICS};
use crate::error::{Error, Result};

/// Plotted values below this are drawn at this level on the log axis.
const PLOT_FLOOR: f64 = 1e-16;

// Headers are written explicitly so a file with no rows still has one.
fn writer(path: &Path, header: &[&str]) -> Result<csv::Writer<std::fs::File>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    Ok(w)
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Malformed(format!("{}: {other:?}", path.display())),
    }
}

#[derive(Debug, Serialize)]
struct TraceRow<'a> {
    solver: &'a str,
    run: usize,
    iter: usize,
    metric: &'a str,
    value: f64,
}

/// One row of the averaged CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedRow {
    pub solver: String,
    pub iter: usize,
    pub metric: String,
    pub mean: f64,
}

pub(super) fn write_solver_csv(out: &Path, name: &str, index: usize, runs: &[RunOutcome]) -> Result<PathBuf> {
    let path = out.join(format!("{name}.csv"));
    let mut w = writer(&path, &["solver", "run", "iter", "metric", "value"])?;
    for r in runs {
        if let SolverResult::Finished { curves, .. } = &r.solvers[index].result {
            for n in 0..curves.distance.len() {
                for metric in METRICS {
                    let row = TraceRow { solver: name, run: r.run, iter: n, metric, value: curves.metric(metric, n) };
                    w.serialize(row).map_err(|e| csv_err(&path, e))?;
                }
            }
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub(super) fn write_averaged_csv(out: &Path, curves: &CurveSet) -> Result<PathBuf> {
    let path = out.join("averaged.csv");
    let mut w = writer(&path, &["solver", "iter", "metric", "mean"])?;
    for s in curves.solvers.iter().filter(|s| s.runs_used > 0) {
        for n in 0..=curves.iters {
            for (metric, series) in METRICS.iter().zip([&s.distance, &s.objective_gap, &s.infeasible]) {
                let row = AveragedRow { solver: s.name.clone(), iter: n, metric: metric.to_string(), mean: series[n] };
                w.serialize(row).map_err(|e| csv_err(&path, e))?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub(super) fn write_certificates_csv(out: &Path, runs: &[RunOutcome]) -> Result<PathBuf> {
    let path = out.join("certificates.csv");
    let mut w = writer(&path, &["solver", "run", "certificate", "value"])?;
    for r in runs {
        for s in &r.solvers {
            if let SolverResult::Finished { certificates: Some(c), .. } = &s.result {
                for (name, value) in c.rows() {
                    w.serialize((&s.name, r.run, name, value)).map_err(|e| csv_err(&path, e))?;
                }
            }
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn read_averaged_csv(path: &Path) -> Result<Vec<AveragedRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = r.headers().map_err(|e| csv_err(path, e))?;
    if headers != vec!["solver", "iter", "metric", "mean"] {
        return Err(Error::Malformed(format!("{}: unexpected header {headers:?}", path.display())));
    }
    r.deserialize().map(|row| row.map_err(|e| csv_err(path, e))).collect()
}

// metric -> solver -> (iter, value), in first-seen solver order
type Series = BTreeMap<String, Vec<(String, Vec<(usize, f64)>)>>;

fn group(rows: &[AveragedRow]) -> Series {
    let mut out = Series::new();
    for row in rows.iter().filter(|r| r.metric != "infeasible") {
        let per_metric = out.entry(row.metric.clone()).or_default();
        let idx = match per_metric.iter().position(|(s, _)| *s == row.solver) {
            Some(i) => i,
            None => {
                per_metric.push((row.solver.clone(), Vec::new()));
                per_metric.len() - 1
            }
        };
        per_metric[idx].1.push((row.iter, row.mean.abs().max(PLOT_FLOOR)));
    }
    out
}

/// Renders each metric of an averaged CSV as a log-scale line plot with one
/// series per solver: `<metric>.svg` plus an equivalent `<metric>.gp` gnuplot
/// script with the data inlined. Objective gaps are plotted in absolute value.
pub fn emit_plots(curve_csv: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let rows = read_averaged_csv(curve_csv)?;
    let series = group(&rows);
    if series.is_empty() {
        return Err(Error::Malformed(format!("{}: no solver series to plot", curve_csv.display())));
    }
    let mut files = Vec::new();
    for (metric, solvers) in &series {
        let svg = out.join(format!("{metric}.svg"));
        draw_svg(&svg, metric, solvers)?;
        let gp = out.join(format!("{metric}.gp"));
        std::fs::write(&gp, gnuplot_script(metric, solvers)).map_err(|e| Error::io(&gp, e))?;
        files.push(svg);
        files.push(gp);
    }
    Ok(files)
}

fn draw_svg(path: &Path, metric: &str, solvers: &[(String, Vec<(usize, f64)>)]) -> Result<()> {
    let plot_err = |e: &dyn std::fmt::Display| Error::Malformed(format!("{}: {e}", path.display()));
    let x_max = solvers.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)).max().unwrap_or(1).max(1) as f64;
    let (lo, hi) = solvers
        .iter()
        .flat_map(|(_, p)| p.iter().map(|q| q.1))
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo / 10.0, lo * 10.0) };

    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(metric, ("sans-serif", 20))
        .margin(10)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(0.0..x_max, (lo..hi).log_scale())
        .map_err(|e| plot_err(&e))?;
    chart
        .configure_mesh()
        .x_desc("iteration")
        .y_desc(metric)
        .draw()
        .map_err(|e| plot_err(&e))?;
    for (k, (name, points)) in solvers.iter().enumerate() {
        let color = Palette99::pick(k).to_rgba();
        chart
            .draw_series(LineSeries::new(points.iter().map(|&(n, v)| (n as f64, v)), color))
            .map_err(|e| plot_err(&e))?
            .label(name.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| plot_err(&e))?;
    root.present().map_err(|e| plot_err(&e))?;
    Ok(())
}

fn gnuplot_script(metric: &str, solvers: &[(String, Vec<(usize, f64)>)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set terminal svg size 800,500");
    let _ = writeln!(s, "set output '{metric}_gnuplot.svg'");
    let _ = writeln!(s, "set logscale y");
    let _ = writeln!(s, "set xlabel 'iteration'");
    let _ = writeln!(s, "set ylabel '{metric}'");
    let _ = writeln!(s, "set title '{metric}'");
    for (k, (_, points)) in solvers.iter().enumerate() {
        let _ = writeln!(s, "$s{k} << EOD");
        for (n, v) in points {
            let _ = writeln!(s, "{n} {v:e}");
        }
        let _ = writeln!(s, "EOD");
    }
    let plots: Vec<String> = solvers
        .iter()
        .enumerate()
        .map(|(k, (name, _))| format!("$s{k} using 1:2 with lines title '{name}'"))
        .collect();
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, body: &str) -> PathBuf {
        let p = dir.join("averaged.csv");
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn empty_csv_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "solver,iter,metric,mean\n");
        assert!(matches!(emit_plots(&p, dir.path()), Err(Error::Malformed(_))));
    }

    #[test]
    fn malformed_csv_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "solver,iter,metric,mean\nfm-hsdm,zero,distance,1\n");
        assert!(matches!(emit_plots(&p, dir.path()), Err(Error::Malformed(_))));
        let p = write(dir.path(), "a,b\n1,2\n");
        assert!(matches!(emit_plots(&p, dir.path()), Err(Error::Malformed(_))));
    }

    #[test]
    fn single_solver_two_metrics() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::from("solver,iter,metric,mean\n");
        for n in 0..5 {
            let v = 0.5f64.powi(n);
            body += &format!("fm-hsdm,{n},distance,{v}\nfm-hsdm,{n},objective_gap,{v}\nfm-hsdm,{n},infeasible,0\n");
        }
        let p = write(dir.path(), &body);
        let files = emit_plots(&p, dir.path()).unwrap();
        assert_eq!(files.len(), 4);
        let gp = std::fs::read_to_string(dir.path().join("distance.gp")).unwrap();
        assert_eq!(gp.matches("with lines").count(), 1);
        assert!(std::fs::read_to_string(dir.path().join("distance.svg")).unwrap().contains("<svg"));
    }
}
