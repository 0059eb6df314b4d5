//! Task pipelines.

use std::path::PathBuf;

use fractal_spectra::analysis::{ratio_set, sturm_profile, weyl_alpha, weyl_series};
use fractal_spectra::graphs::{
    assemble_operator, build_interval_graph, build_sg_graph, dense_spectrum, GraphApprox,
    CLUSTER_TOL,
};
use fractal_spectra::interval_decimation::{
    continue_limit, full_spectrum_interval, interval_eigenvalues,
};
use fractal_spectra::models::{IntervalParams, ModelKind, SgParams};
use fractal_spectra::sg_decimation::{continue_limit_sg, full_spectrum_sg, sg_eigenvalues};
use fractal_spectra::spacetime::{
    delta, nearest_vertex, orthonormal_basis, time_series, DeltaConvention, Evolution,
};
use fractal_spectra::spectrum::{cluster_ranges, BoundaryCondition, Spectrum};
use fractal_spectra::variants::{
    hierarchical_graph, hierarchical_spectrum, threshold_graph, threshold_partition,
    threshold_spectrum,
};

use crate::config::{DeltaArg, Format, RunConfig, Task, Variant};
use crate::emit::{spectrum_table, Cell, Table};
use crate::svg::{emit_plot_svg, Axes, PlotKind, Series};
use crate::CliError;

/// Files written and a short human-readable summary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

/// Bin width of the ratio histogram.
const RATIO_BIN: f64 = 0.01;
/// Ratio clusters are sorted runs with neighbour gaps at most this.
const RATIO_GAP: f64 = 0.02;

fn graph(cfg: &RunConfig) -> Result<GraphApprox, CliError> {
    let m = cfg.level;
    Ok(match (&cfg.variant, cfg.model) {
        (Variant::None, ModelKind::Interval) => {
            build_interval_graph(&IntervalParams::new(cfg.parameter)?, m)?
        }
        (Variant::None, ModelKind::Sg) => build_sg_graph(&SgParams::new(cfg.parameter)?, m)?,
        (Variant::Threshold(c), _) => threshold_graph(&threshold_partition(cfg.parameter, *c, m)?)?,
        (Variant::Hierarchical(h), _) => hierarchical_graph(h, m)?,
    })
}

/// Full spectrum with eigenfunctions: decimation where available, the dense
/// solver otherwise.
pub fn spectrum(cfg: &RunConfig, graph: &GraphApprox) -> Result<Spectrum, CliError> {
    let (p, m, bc) = (cfg.parameter, cfg.level, cfg.bc);
    Ok(match (&cfg.variant, bc) {
        (Variant::None, BoundaryCondition::Dirichlet) => match cfg.model {
            ModelKind::Interval => full_spectrum_interval(p, m)?,
            ModelKind::Sg => full_spectrum_sg(p, m)?,
        },
        (Variant::None, BoundaryCondition::Neumann) => {
            dense_spectrum(&assemble_operator(graph, bc))?
        }
        (Variant::Threshold(c), _) => threshold_spectrum(p, *c, m, bc)?,
        (Variant::Hierarchical(h), _) => hierarchical_spectrum(h, m, bc)?,
    })
}

/// Sorted renormalized eigenvalues, without eigenfunctions when possible.
pub fn eigenvalues(cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    match (&cfg.variant, cfg.bc, cfg.model) {
        (Variant::None, BoundaryCondition::Dirichlet, ModelKind::Interval) => {
            Ok(interval_eigenvalues(cfg.parameter, cfg.level)?)
        }
        (Variant::None, BoundaryCondition::Dirichlet, ModelKind::Sg) => {
            Ok(sg_eigenvalues(cfg.parameter, cfg.level)?)
        }
        _ => Ok(spectrum(cfg, &graph(cfg)?)?.eigenvalues()),
    }
}

fn extension(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

struct Out<'a> {
    cfg: &'a RunConfig,
    report: Report,
}

impl Out<'_> {
    fn path(&self, stem: &str, ext: &str) -> PathBuf {
        self.cfg.out.join(format!("{stem}.{ext}"))
    }

    fn table(&mut self, stem: &str, table: &Table) -> Result<(), CliError> {
        let path = self.path(stem, extension(self.cfg.format));
        table.write(&path, self.cfg.format)?;
        self.report.files.push(path);
        Ok(())
    }

    fn plot(
        &mut self,
        stem: &str,
        series: &[Series],
        kind: PlotKind,
        axes: Axes,
    ) -> Result<(), CliError> {
        if self.cfg.svg {
            let path = self.path(stem, "svg");
            emit_plot_svg(series, kind, &axes, &path)?;
            self.report.files.push(path);
        }
        Ok(())
    }

    fn say(&mut self, line: String) {
        self.report.summary.push(line);
    }
}

fn axes(title: impl Into<String>, x: &str, y: &str) -> Axes {
    Axes {
        title: title.into(),
        x_label: x.into(),
        y_label: y.into(),
    }
}

fn label(cfg: &RunConfig) -> String {
    let name = match cfg.model {
        ModelKind::Interval => "p",
        ModelKind::Sg => "r",
    };
    let variant = match &cfg.variant {
        Variant::None => String::new(),
        Variant::Threshold(c) => format!(", c={c}"),
        Variant::Hierarchical(h) => format!(", sequence {:?}", h.sequence),
    };
    format!("{name}={}{variant}, m={}", cfg.parameter, cfg.level)
}

/// Execute one configured task, writing its artifacts under `cfg.out`.
pub fn run(cfg: &RunConfig) -> Result<Report, CliError> {
    std::fs::create_dir_all(&cfg.out)?;
    let mut out = Out {
        cfg,
        report: Report::default(),
    };
    let stem = cfg.task.name();
    match cfg.task {
        Task::Spectrum => {
            let g = graph(cfg)?;
            let s = spectrum(cfg, &g)?;
            out.table(stem, &spectrum_table(&s))?;
            let pts = s
                .pairs
                .iter()
                .enumerate()
                .map(|(i, p)| ((i + 1) as f64, p.eigenvalue.log10()))
                .collect();
            out.plot(
                stem,
                &[Series::new("eigenvalues", pts)],
                PlotKind::Scatter,
                axes(label(cfg), "n", "log10 lambda_n"),
            )?;
            out.say(format!("{} eigenvalues", s.len()));
        }
        Task::Eigenfunctions => {
            let g = graph(cfg)?;
            let s = spectrum(cfg, &g)?;
            let k = cfg.count.unwrap_or(16).min(s.len());
            let mut header = vec!["vertex".to_string(), "x".into(), "y".into()];
            header.extend((1..=k).map(|i| format!("f{i}")));
            let mut t = Table::new(header);
            for (v, c) in g.coords.iter().enumerate() {
                let mut row = vec![Cell::Int(v), Cell::Float(c[0]), Cell::Float(c[1])];
                row.extend(s.pairs[..k].iter().map(|p| Cell::Float(p.eigenfunction[v])));
                t.push(row);
            }
            out.table(stem, &t)?;
            let kind = if cfg.model == ModelKind::Interval {
                PlotKind::Line
            } else {
                PlotKind::Scatter
            };
            let series: Vec<Series> = s.pairs[..k]
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let pts = g
                        .coords
                        .iter()
                        .zip(&p.eigenfunction)
                        .map(|(c, f)| (c[0], *f))
                        .collect();
                    Series::new(format!("f{}", i + 1), pts)
                })
                .collect();
            out.plot(stem, &series, kind, axes(label(cfg), "x", "f"))?;
            out.say(format!(
                "{k} eigenfunctions on {} vertices",
                g.vertex_count()
            ));
        }
        Task::Counting => {
            let values = eigenvalues(cfg)?;
            let mut t = Table::new(["lambda", "count"]);
            let mut pts = Vec::new();
            for range in cluster_ranges(&values, CLUSTER_TOL) {
                let lambda = values[range.start];
                t.push(vec![Cell::Float(lambda), Cell::Int(range.end)]);
                pts.push((lambda, range.end as f64));
            }
            out.table(stem, &t)?;
            out.plot(
                stem,
                &[Series::new("N", pts)],
                PlotKind::Step,
                axes(label(cfg), "lambda", "N(lambda)"),
            )?;
            out.say(format!(
                "{} distinct eigenvalues, {} in total",
                t.rows.len(),
                values.len()
            ));
        }
        Task::Weyl => {
            let values = eigenvalues(cfg)?;
            let alpha = weyl_alpha(cfg.model, cfg.parameter)?;
            let series = weyl_series(&values, alpha, 200)?;
            let mut t = Table::new(["lambda", "count", "w"]);
            for s in &series.samples {
                t.push(vec![
                    Cell::Float(s.lambda),
                    Cell::Int(s.count),
                    Cell::Float(s.w),
                ]);
            }
            out.table(stem, &t)?;
            let pts = series
                .samples
                .iter()
                .map(|s| (s.lambda.log10(), s.w))
                .collect();
            out.plot(
                stem,
                &[Series::new("W", pts)],
                PlotKind::Line,
                axes(label(cfg), "log10 lambda", "W(lambda)"),
            )?;
            let mut summary = Table::new(["alpha", "slope", "w_min", "w_max", "w_ratio"]);
            summary.push(vec![
                Cell::Float(alpha),
                Cell::Float(series.slope),
                Cell::Float(series.w_min),
                Cell::Float(series.w_max),
                Cell::Float(series.w_ratio()),
            ]);
            out.table("weyl_summary", &summary)?;
            out.say(format!(
                "alpha {alpha:.6}, regression slope {:.6}, W max/min {:.4}",
                series.slope,
                series.w_ratio()
            ));
        }
        Task::Ratios => {
            let mut values = eigenvalues(cfg)?;
            if cfg.model == ModelKind::Sg {
                values = cluster_ranges(&values, CLUSTER_TOL)
                    .into_iter()
                    .map(|r| values[r.start])
                    .collect();
            }
            let window = cfg
                .count
                .unwrap_or(if cfg.model == ModelKind::Sg { 3 } else { 1 });
            let set = ratio_set(&values, window, RATIO_BIN)?;
            let mut t = Table::new(["bin_centre", "count"]);
            for &(c, n) in &set.histogram {
                t.push(vec![Cell::Float(c), Cell::Int(n)]);
            }
            out.table(stem, &t)?;
            let pts = set.histogram.iter().map(|&(c, n)| (c, n as f64)).collect();
            out.plot(
                stem,
                &[Series::new("ratios", pts)],
                PlotKind::Bar,
                axes(label(cfg), "lambda_j / lambda_i", "count"),
            )?;
            let clusters = set.clusters(RATIO_GAP, 1e-3);
            let mut ct = Table::new(["centre", "size"]);
            for &(c, n) in &clusters {
                ct.push(vec![Cell::Float(c), Cell::Int(n)]);
            }
            out.table("ratio_clusters", &ct)?;
            out.say(format!(
                "{} ratios (window {window}, {} excluded), {} clusters",
                set.ratios.len(),
                set.excluded,
                clusters.len()
            ));
        }
        Task::Sturm => {
            let g = graph(cfg)?;
            let s = spectrum(cfg, &g)?;
            let x: Vec<f64> = g.coords.iter().map(|c| c[0]).collect();
            let fs: Vec<Vec<f64>> = s.pairs.iter().map(|p| p.eigenfunction.clone()).collect();
            let prof = sturm_profile(&fs, &x)?;
            let mut t = Table::new([
                "index",
                "eigenvalue",
                "zeros",
                "extrema",
                "vertex_zeros",
                "one_extremum_per_nodal_domain",
                "extrema_signs_ok",
            ]);
            for (e, p) in prof.entries.iter().zip(&s.pairs) {
                t.push(vec![
                    Cell::Int(e.index),
                    Cell::Float(p.eigenvalue),
                    Cell::Int(e.zeros),
                    Cell::Int(e.extrema),
                    Cell::Int(e.vertex_zeros),
                    Cell::Bool(e.one_extremum_per_nodal_domain),
                    Cell::Bool(e.extrema_signs_ok),
                ]);
            }
            out.table(stem, &t)?;
            out.say(format!(
                "{} eigenfunctions, {} failed checks, {} interlacing failures",
                prof.entries.len(),
                prof.failures(),
                prof.interlacing_failures.len()
            ));
        }
        Task::Heat | Task::Wave => evolve(cfg, &mut out)?,
        Task::Limits => {
            let k = cfg.count.unwrap_or(4);
            let (values, factor) = match cfg.model {
                ModelKind::Interval => (
                    interval_eigenvalues(cfg.parameter, cfg.level)?,
                    IntervalParams::new(cfg.parameter)?.renorm_factor(),
                ),
                ModelKind::Sg => (
                    sg_eigenvalues(cfg.parameter, cfg.level)?,
                    SgParams::new(cfg.parameter)?.renorm_factor(),
                ),
            };
            if k > values.len() {
                return Err(CliError::Usage(format!(
                    "--count {k} exceeds the {} level-{} eigenvalues",
                    values.len(),
                    cfg.level
                )));
            }
            let scale = factor.powi(cfg.level as i32);
            let mut t = Table::new(["n", "limit", "relative_change", "converged"]);
            for (i, v) in values[..k].iter().enumerate() {
                let graph_value = v / scale;
                let (value, change, converged) = match cfg.model {
                    ModelKind::Interval => {
                        let e = continue_limit(cfg.parameter, cfg.level, graph_value, cfg.depth)?;
                        (e.value, e.relative_change, e.converged)
                    }
                    ModelKind::Sg => {
                        let e =
                            continue_limit_sg(cfg.parameter, cfg.level, graph_value, cfg.depth)?;
                        (e.value, e.relative_change, e.converged)
                    }
                };
                t.push(vec![
                    Cell::Int(i + 1),
                    Cell::Float(value),
                    Cell::Float(change),
                    Cell::Bool(converged),
                ]);
                out.say(format!("lambda_{} -> {value:.6e}", i + 1));
            }
            out.table(stem, &t)?;
        }
    }
    Ok(out.report)
}

fn evolve(cfg: &RunConfig, out: &mut Out<'_>) -> Result<(), CliError> {
    let g = graph(cfg)?;
    let s = spectrum(cfg, &g)?;
    let basis = orthonormal_basis(&s, &g.pointmass)?;
    let point = match (&cfg.delta_at, cfg.model) {
        (Some(d), ModelKind::Interval) => [d[0], 0.0],
        (Some(d), ModelKind::Sg) => [d[0], d[1]],
        (None, ModelKind::Interval) => [0.5, 0.0],
        (None, ModelKind::Sg) => [0.5, 3f64.sqrt() / 6.0],
    };
    let x0 = nearest_vertex(&g.coords, point);
    let convention = match cfg.delta {
        DeltaArg::Mass => DeltaConvention::UnitMass,
        DeltaArg::Value => DeltaConvention::UnitValue,
    };
    let f = delta(&g.pointmass, x0, convention)?;
    let kind = if cfg.task == Task::Heat {
        Evolution::Heat
    } else {
        Evolution::Wave
    };
    let solutions = time_series(&basis, &f, &cfg.times, kind)?;
    let stem = cfg.task.name();
    let mut t = Table::new(["t", "x", "y", "value"]);
    for (time, u) in cfg.times.iter().zip(&solutions) {
        for (c, v) in g.coords.iter().zip(u) {
            t.push(vec![
                Cell::Float(*time),
                Cell::Float(c[0]),
                Cell::Float(c[1]),
                Cell::Float(*v),
            ]);
        }
    }
    out.table(stem, &t)?;
    let plot_kind = if cfg.model == ModelKind::Interval {
        PlotKind::Line
    } else {
        PlotKind::Scatter
    };
    for (i, (time, u)) in cfg.times.iter().zip(&solutions).enumerate() {
        let pts = g.coords.iter().zip(u).map(|(c, v)| (c[0], *v)).collect();
        out.plot(
            &format!("{stem}_{i:03}"),
            &[Series::new(format!("t={time}"), pts)],
            plot_kind,
            axes(format!("{stem}, {}, t={time}", label(cfg)), "x", "u"),
        )?;
    }
    out.say(format!(
        "{} time steps on {} vertices, source at vertex {x0} ({:.6}, {:.6})",
        cfg.times.len(),
        g.vertex_count(),
        g.coords[x0][0],
        g.coords[x0][1]
    ));
    Ok(())
}
