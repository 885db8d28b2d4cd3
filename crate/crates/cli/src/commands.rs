use std::fs;
use std::path::{Path, PathBuf};

use copula_transport::io::{
    self, ClusterDoc, DistanceMatrixDoc, Manifest, ManifestEntry, MergeDoc,
};
use copula_transport::{
    agglomerate, cut, default_noise_levels, default_resolution, distance_matrix,
    emd_exact, emd_sinkhorn, empirical_copula_transform, intra_distance, power_csv, power_curve,
    tdc, ClassPattern, ClassSpec, Error, EstimatorId, Linkage, MatrixMode, NullModel, Panel,
    PatternKind, PatternSpec, PowerConfig, Result, SinkhornParams, TargetPolicy, TargetSet,
};
use serde::Serialize;

use crate::{
    ClusterArgs, Command, EmdArgs, GenCommand, GenDatasetArgs, GenGaussianArgs, GenPatternArgs,
    IntraArgs, LinkageArg, MatrixArgs, MatrixModeArg, NullArg, PowerArgs, SolverArg, TdcArgs,
    TransformArgs,
};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Transform(args) => transform(args),
        Command::Emd(args) => emd(args),
        Command::Intra(args) => intra(args),
        Command::Tdc(args) => tdc_cmd(args),
        Command::Matrix(args) => matrix(args),
        Command::Cluster(args) => cluster(args),
        Command::Power(args) => power(args),
        Command::Gen(gen) => match gen {
            GenCommand::Pattern(args) => gen_pattern(args),
            GenCommand::Dataset(args) => gen_dataset(args),
            GenCommand::Gaussian(args) => gen_gaussian(args),
        },
    }
}

/// Writes pretty JSON to `path`, or to stdout when no path is given.
fn emit_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    match path {
        Some(p) => {
            let mut buf = serde_json::to_vec_pretty(value).map_err(|e| Error::Json {
                path: p.display().to_string(),
                message: e.to_string(),
            })?;
            buf.push(b'\n');
            fs::write(p, buf).map_err(|e| Error::Io {
                path: p.display().to_string(),
                source: e,
            })
        }
        None => {
            let text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
                path: "<stdout>".into(),
                message: e.to_string(),
            })?;
            println!("{text}");
            Ok(())
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Runs `f` on a dedicated pool of `jobs` threads; output must not depend
/// on the thread count, so this only affects speed.
fn with_jobs<T, F>(jobs: Option<usize>, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> Result<T> + Send,
{
    match jobs {
        None => f(),
        Some(0) => Err(Error::InvalidParameter("jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("cannot build thread pool: {e}")))?
            .install(f),
    }
}

fn transform(args: TransformArgs) -> Result<()> {
    let (panel, headers) = io::read_panel_csv(&args.input)?;
    let sample = empirical_copula_transform(&panel);
    let rows: Vec<Vec<f64>> = (0..sample.rows())
        .map(|t| sample.row(t).to_vec())
        .collect();
    io::write_panel_csv(&args.out, &Panel::from_rows(&rows)?, &headers)
}

fn emd(args: EmdArgs) -> Result<()> {
    let a = io::read_signature_json(&args.a)?;
    let b = io::read_signature_json(&args.b)?;
    match args.solver {
        SolverArg::Exact => {
            if args.epsilon.is_some() || args.tol.is_some() || args.max_iter.is_some() {
                return Err(Error::InvalidParameter(
                    "--epsilon, --tol, and --max-iter apply to --solver sinkhorn only".into(),
                ));
            }
            println!("{}", emd_exact(&a, &b)?.cost());
        }
        SolverArg::Sinkhorn => {
            let defaults = SinkhornParams::default();
            let params = SinkhornParams {
                epsilon: args.epsilon.unwrap_or(defaults.epsilon),
                tol: args.tol.unwrap_or(defaults.tol),
                max_iter: args.max_iter.unwrap_or(defaults.max_iter),
            };
            let out = emd_sinkhorn(&a, &b, &params)?;
            if !out.converged {
                eprintln!(
                    "warning: sinkhorn stopped at marginal error {} after {} iterations",
                    out.marginal_error, out.iterations
                );
            }
            println!("{}", out.cost);
        }
    }
    Ok(())
}

fn intra(args: IntraArgs) -> Result<()> {
    let (a, _) = io::read_panel_csv(&args.a)?;
    let (b, _) = io::read_panel_csv(&args.b)?;
    let grid = args.grid.unwrap_or_else(|| default_resolution(a.cols()));
    println!("{}", intra_distance(&a, &b, grid)?);
    Ok(())
}

fn tdc_cmd(args: TdcArgs) -> Result<()> {
    let (x, _) = io::read_panel_csv(&args.x)?;
    let (y, _) = io::read_panel_csv(&args.y)?;
    let dim = x.cols() + y.cols();
    let grid = args.grid.unwrap_or_else(|| default_resolution(dim));
    let targets = match &args.targets {
        Some(path) => {
            let docs = io::read_targets_json(path)?;
            io::materialize_targets(&docs, dim, grid, args.seed)?
        }
        None => TargetSet::monotone_pair(dim, grid)?,
    };
    let result = tdc(&x, &y, &targets, grid)?;
    let text = serde_json::to_string(&result).map_err(|e| Error::Json {
        path: "<stdout>".into(),
        message: e.to_string(),
    })?;
    println!("{text}");
    Ok(())
}

fn matrix(args: MatrixArgs) -> Result<()> {
    let (panels, options) = io::load_manifest_panels(&args.manifest)?;
    if let Some(solver) = &options.solver {
        if solver != "exact" {
            return Err(Error::InvalidParameter(format!(
                "manifest solver '{solver}' is not supported: \
                 distance matrices always use the exact solver"
            )));
        }
    }
    if panels.is_empty() {
        return Err(Error::InvalidParameter("manifest lists no panels".into()));
    }
    let d = panels[0].cols();
    let seed = args.seed.or(options.seed).unwrap_or(copula_transport::DEFAULT_SEED);
    let (mode, grid) = match args.mode {
        MatrixModeArg::Intra => intra_mode(&args, &options, d)?,
        MatrixModeArg::Tdc => {
            let grid = args
                .grid
                .or(options.grid)
                .unwrap_or_else(|| default_resolution(2 * d));
            let targets = match &args.targets {
                Some(path) => {
                    let docs = io::read_targets_json(path)?;
                    io::materialize_targets(&docs, 2 * d, grid, seed)?
                }
                None => TargetSet::monotone_pair(2 * d, grid)?,
            };
            (MatrixMode::TdcDissimilarity(targets), grid)
        }
    };
    let dm = with_jobs(args.jobs, || distance_matrix(&panels, &mode, grid))?;
    emit_json(args.out.as_deref(), &DistanceMatrixDoc::from_matrix(&dm))
}

fn intra_mode(
    args: &MatrixArgs,
    options: &io::ManifestOptions,
    d: usize,
) -> Result<(MatrixMode, usize)> {
    if args.targets.is_some() {
        return Err(Error::InvalidParameter(
            "--targets applies to --mode tdc only".into(),
        ));
    }
    let grid = args
        .grid
        .or(options.grid)
        .unwrap_or_else(|| default_resolution(d));
    Ok((MatrixMode::Intra, grid))
}

fn cluster(args: ClusterArgs) -> Result<()> {
    let dm = io::read_matrix_json(&args.matrix)?;
    let linkage = match args.linkage {
        LinkageArg::Single => Linkage::Single,
        LinkageArg::Complete => Linkage::Complete,
        LinkageArg::Average => Linkage::Average,
    };
    let dendrogram = agglomerate(&dm, linkage)?;
    let assignments = cut(&dendrogram, args.k)?;
    let doc = ClusterDoc {
        linkage: linkage.name().to_string(),
        k: args.k,
        labels: dm.labels().to_vec(),
        assignments,
        merges: dendrogram.merges().iter().map(MergeDoc::from).collect(),
    };
    emit_json(args.out.as_deref(), &doc)
}

fn parse_estimators(spec: &str, grid: usize) -> Result<Vec<EstimatorId>> {
    let mut out = Vec::new();
    for name in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        out.push(match name {
            "pearson" => EstimatorId::Pearson,
            "spearman" => EstimatorId::Spearman,
            "dcor" => EstimatorId::Dcor,
            "rdc" => EstimatorId::Rdc {
                projections: 20,
                scale: 1.0 / 6.0,
            },
            "tdc" => EstimatorId::Tdc {
                resolution: grid,
                targets: TargetPolicy::PatternMatched { sample_size: None },
            },
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown estimator '{other}' \
                     (expected tdc, pearson, spearman, dcor, or rdc)"
                )))
            }
        });
    }
    if out.is_empty() {
        return Err(Error::InvalidParameter("no estimators given".into()));
    }
    Ok(out)
}

fn parse_patterns(spec: Option<&str>) -> Result<Vec<PatternKind>> {
    match spec {
        None => Ok(PatternKind::SHAPES.to_vec()),
        Some(s) => s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(str::parse)
            .collect(),
    }
}

fn parse_levels(spec: Option<&str>) -> Result<Vec<f64>> {
    match spec {
        None => Ok(default_noise_levels()),
        Some(s) => s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| {
                p.parse::<f64>()
                    .map_err(|_| Error::InvalidParameter(format!("bad noise level '{p}'")))
            })
            .collect(),
    }
}

fn power(args: PowerArgs) -> Result<()> {
    let estimators = parse_estimators(&args.estimators, args.grid)?;
    let patterns = parse_patterns(args.patterns.as_deref())?;
    let levels = parse_levels(args.levels.as_deref())?;
    let cfg = PowerConfig {
        trials: args.trials,
        alpha: args.alpha,
        sample_size: args.n,
        seed: args.seed,
        null: match args.null {
            NullArg::Resample => NullModel::Resample,
            NullArg::Permute => NullModel::Permute,
        },
    };
    let curves = with_jobs(args.jobs, || {
        estimators
            .iter()
            .map(|est| power_curve(est, &patterns, &levels, &cfg))
            .collect::<Result<Vec<_>>>()
    })?;
    let csv = power_csv(&curves);
    match &args.out {
        Some(path) => write_text(path, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn write_panel(path: &Path, panel: &Panel, headers: &[String]) -> Result<()> {
    io::write_panel_csv(path, panel, headers)
}

fn gen_pattern(args: GenPatternArgs) -> Result<()> {
    let spec = PatternSpec {
        kind: args.kind.parse()?,
        noise_level: args.noise,
        sample_size: args.n,
        seed: args.seed,
    };
    let panel = copula_transport::generate_pattern(&spec)?;
    write_panel(&args.out, &panel, &["x".into(), "y".into()])
}

fn parse_class(name: &str) -> Result<ClassPattern> {
    Ok(match name {
        "comonotone" => ClassPattern::Comonotone,
        "countermonotone" => ClassPattern::Countermonotone,
        other => ClassPattern::Shape(other.parse()?),
    })
}

fn gen_dataset(args: GenDatasetArgs) -> Result<()> {
    let classes: Vec<ClassSpec> = args
        .classes
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|name| {
            Ok(ClassSpec {
                pattern: parse_class(name)?,
                dimension: args.dim,
                noise_level: args.noise,
            })
        })
        .collect::<Result<_>>()?;
    let dataset =
        copula_transport::generate_mts_dataset(args.per_class, &classes, args.t, args.seed)?;
    fs::create_dir_all(&args.out_dir).map_err(|e| Error::Io {
        path: args.out_dir.display().to_string(),
        source: e,
    })?;
    let headers: Vec<String> = (0..args.dim).map(|j| format!("c{j}")).collect();
    let mut entries = Vec::with_capacity(dataset.len());
    for labeled in &dataset {
        let id = labeled.panel.series_id().expect("generator sets series ids");
        let file = format!("{id}.csv");
        write_panel(&args.out_dir.join(&file), &labeled.panel, &headers)?;
        entries.push(ManifestEntry {
            path: file,
            label: Some(id.to_string()),
        });
    }
    let manifest = Manifest {
        panels: entries,
        options: io::ManifestOptions::default(),
    };
    let manifest_path: PathBuf = args.out_dir.join("manifest.json");
    io::write_manifest(&manifest_path, &manifest)?;
    println!(
        "wrote {} panels and manifest.json to {}",
        dataset.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn gen_gaussian(args: GenGaussianArgs) -> Result<()> {
    let panel = copula_transport::gaussian_pair(args.rho, args.n, args.seed)?;
    write_panel(&args.out, &panel, &["x".into(), "y".into()])
}
