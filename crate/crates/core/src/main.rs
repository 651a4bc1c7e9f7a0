use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use bubble_cluster::cluster::{plateau_check, shapes, PlanarCluster};
use bubble_cluster::converge::{
    cluster_svg, improved_convergence_report, log_slope, match_structure, normal_graph, overlay_svg, ConvergeError,
};
use bubble_cluster::diffeo::{build_diffeo, diffeo_norms, DiffeoError, DiffeoOptions};
use bubble_cluster::io::{self, Config, IoError};
use bubble_cluster::optimize::{
    curvature_multipliers, solve_partition, solve_with_potential, write_log_csv, Gaussian, Potential, Quadratic,
    SolveError, SolveOptions, ZeroPotential,
};
use bubble_cluster::{End, Point};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Diffeo(#[from] DiffeoError),
    #[error(transparent)]
    Converge(#[from] ConvergeError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            _ => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "bubbles", version, about = "Planar bubble clusters: solve, check, diffeo, converge, render")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PotentialKind {
    Zero,
    Quadratic,
    Gaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeKind {
    Disk,
    DoubleBubble,
    Y2,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize perimeter (plus an optional potential) at prescribed areas.
    Solve {
        /// Comma-separated chamber areas; `pi`, `2pi`, `pi/3` are accepted.
        #[arg(long)]
        areas: String,
        /// Initial cluster file.
        #[arg(long)]
        init: PathBuf,
        #[arg(long, value_enum, default_value = "zero")]
        potential: PotentialKind,
        /// Potential parameters: quadratic `scale[,cx,cy]`, gaussian
        /// `amplitude,width[,cx,cy]`.
        #[arg(long)]
        params: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, default_value = "solution.json")]
        out: PathBuf,
        /// Iteration log; defaults to the output path with a `.csv` extension.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Validate a cluster and check Plateau's laws.
    Check {
        file: PathBuf,
        /// Curvature bound.
        #[arg(long, default_value_t = 1e3)]
        lambda: f64,
    },
    /// Build the almost-normal map from one interface of a cluster onto its
    /// counterpart in another.
    Diffeo {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Interface id in the source; defaults to the first open one.
        #[arg(long)]
        interface: Option<usize>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long, default_value = "diffeo.tsv")]
        out: PathBuf,
    },
    /// Convergence report of a sequence of clusters against a limit.
    Converge {
        #[arg(long)]
        limit: PathBuf,
        /// Sequence members, in order.
        #[arg(required = true)]
        sequence: Vec<PathBuf>,
        #[arg(long)]
        mu: Option<f64>,
        /// Defaults to `mu^2 / 2`.
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long, default_value = "report.csv")]
        out: PathBuf,
        /// Directory for one SVG overlay per member.
        #[arg(long)]
        svg_dir: Option<PathBuf>,
    },
    /// Draw a cluster, optionally over a second one.
    Render {
        file: PathBuf,
        #[arg(long)]
        overlay: Option<PathBuf>,
        #[arg(long, default_value = "cluster.svg")]
        out: PathBuf,
    },
    /// Write a standard cluster file.
    Shape {
        #[arg(value_enum)]
        kind: ShapeKind,
        /// Radius (first radius for the double bubble).
        #[arg(long, default_value_t = 1.0)]
        r1: f64,
        /// Second radius of the double bubble.
        #[arg(long, default_value_t = 1.0)]
        r2: f64,
        /// Rotation of the Y2 cone, radians.
        #[arg(long, default_value_t = 0.0)]
        rotation: f64,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, default_value = "shape.json")]
        out: PathBuf,
    },
}

fn parse_area(tok: &str) -> Option<f64> {
    let t = tok.trim().replace('π', "pi");
    let Some(at) = t.find("pi") else {
        return t.parse().ok();
    };
    let pre = t[..at].trim_end_matches('*');
    let coef = if pre.is_empty() { 1.0 } else { pre.parse().ok()? };
    let post = &t[at + 2..];
    let div = if post.is_empty() { 1.0 } else { post.strip_prefix('/')?.parse().ok()? };
    Some(coef * PI / div)
}

fn parse_areas(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| parse_area(t).filter(|v| v.is_finite()).ok_or_else(|| CliError::Usage(format!("bad area `{t}`"))))
        .collect()
}

fn parse_params(s: Option<&str>) -> Result<Vec<f64>> {
    s.map_or(Ok(Vec::new()), |s| {
        s.split(',')
            .map(|t| t.trim().parse().map_err(|_| CliError::Usage(format!("bad potential parameter `{t}`"))))
            .collect()
    })
}

fn build_potential(kind: PotentialKind, params: &[f64]) -> Result<Box<dyn Potential>> {
    let center = |at: usize| match params.get(at..at + 2) {
        Some(c) => Ok(Point::new(c[0], c[1])),
        None if params.len() == at => Ok(Point::zeros()),
        None => Err(CliError::Usage("potential center needs two coordinates".into())),
    };
    Ok(match kind {
        PotentialKind::Zero => Box::new(ZeroPotential),
        PotentialKind::Quadratic => {
            Box::new(Quadratic { scale: params.first().copied().unwrap_or(1.0), center: center(1.min(params.len()))? })
        }
        PotentialKind::Gaussian => {
            let amplitude = params.first().copied().unwrap_or(1.0);
            let width = params.get(1).copied().unwrap_or(1.0);
            Box::new(Gaussian { amplitude, width, center: center(2.min(params.len()))? })
        }
    })
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<Config> {
    let mut c = match path {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = seed {
        c.seed = s;
    }
    Ok(c)
}

fn mu_rho(cfg: &Config, mu: Option<f64>, rho: Option<f64>, default_half: bool) -> Result<(f64, f64)> {
    let mu = mu.unwrap_or(cfg.mu);
    let rho = rho.unwrap_or(if default_half && mu != cfg.mu { mu * mu / 2.0 } else { cfg.rho });
    if !(mu > 0.0 && rho > 0.0 && rho < mu * mu) {
        return Err(CliError::Usage(format!("need 0 < rho < mu^2, got mu = {mu}, rho = {rho}")));
    }
    Ok((mu, rho))
}

fn cmd_solve(
    cfg: &Config,
    areas: &str,
    init: &Path,
    potential: PotentialKind,
    params: Option<&str>,
    delta: f64,
    out: &Path,
    log: Option<&Path>,
) -> Result<()> {
    let m = parse_areas(areas)?;
    let init = io::read_cluster(init)?;
    let opts =
        SolveOptions { tol_vol: cfg.tol_vol, samples: cfg.samples, seed: cfg.seed, ..SolveOptions::default() };
    let params = parse_params(params)?;
    let sol = match potential {
        PotentialKind::Zero if delta == 0.0 => solve_partition(&m, &init, &opts)?,
        _ => solve_with_potential(&m, build_potential(potential, &params)?.as_ref(), delta, &init, &opts)?,
    };
    io::write_cluster(out, &sol.cluster)?;
    let log_path = log.map_or_else(|| out.with_extension("csv"), Path::to_path_buf);
    let mut buf = Vec::new();
    write_log_csv(&sol.log, &mut buf).expect("in-memory write");
    io::write_atomic(&log_path, &buf)?;
    println!(
        "perimeter {:.12} energy {:.12} outer iterations {} -> {}",
        sol.cluster.perimeter(),
        sol.energy,
        sol.outer_iterations,
        out.display()
    );
    Ok(())
}

fn cmd_check(cfg: &Config, file: &Path, lambda: f64) -> Result<()> {
    let c = io::read_cluster(file)?;
    let diag = c.validate_with(cfg.tol_x.max(c.tol_x()));
    let mut ok = diag.is_valid();
    if ok {
        println!("structure: valid");
    } else {
        println!("structure: invalid");
        for v in &diag.violations {
            println!("  {v}");
        }
    }
    let rep = plateau_check(&c, lambda, cfg.tol_angle, cfg.tol_curvature);
    for j in &rep.junctions {
        let a: Vec<String> = j.angles_deg.iter().map(|a| format!("{a:.4}")).collect();
        println!("junction {}: angles [{}] deviation {:.4} deg", j.triple_point, a.join(", "), j.max_deviation_deg);
    }
    for i in &rep.interfaces {
        println!(
            "interface {}: mean curvature {:.6e} std {:.3e} (limit {:.3e})",
            i.interface,
            i.mean,
            i.std_dev,
            cfg.tol_curvature * i.constancy_floor()
        );
    }
    for id in &rep.small_closed {
        println!("interface {id}: closed and smaller than 1/(2 lambda)");
    }
    println!("worst angle deviation {:.6} deg (tolerance {})", rep.max_angle_deviation(), cfg.tol_angle);
    ok &= rep.passes();
    if ok {
        match curvature_multipliers(&c) {
            Ok(m) => {
                let l: Vec<String> = m.lambda.iter().map(|v| format!("{v:.6e}")).collect();
                println!("multipliers [{}] residual {:.3e}", l.join(", "), m.residual);
            }
            Err(e) => println!("multipliers unavailable: {e}"),
        }
    }
    if ok {
        println!("check passed");
        Ok(())
    } else {
        Err(CliError::Domain("check failed".into()))
    }
}

fn cmd_diffeo(
    cfg: &Config,
    source: &Path,
    target: &Path,
    interface: Option<usize>,
    mu: Option<f64>,
    rho: Option<f64>,
    out: &Path,
) -> Result<()> {
    let (mu, rho) = mu_rho(cfg, mu, rho, true)?;
    let e = io::read_cluster(source)?;
    let ek = io::read_cluster(target)?;
    let i = match interface {
        Some(id) => e.interface_index(id).ok_or_else(|| CliError::Usage(format!("no interface with id {id}")))?,
        None => e
            .interfaces
            .iter()
            .position(|i| !i.curve.is_closed())
            .ok_or_else(|| CliError::Usage("source has no open interface".into()))?,
    };
    let s0 = &e.interfaces[i].curve;
    if s0.is_closed() {
        return Err(CliError::Usage("interface is closed".into()));
    }
    let m = match_structure(&e, &ek)?;
    let s = m.oriented_curve(&ek, i);
    let opts = DiffeoOptions { tol_root_rel: cfg.tol_root, ..DiffeoOptions::default() };
    let graph = normal_graph(s0, &s, rho, opts.extension * mu)?;
    let f0 = (s.endpoint(End::Start).expect("open"), s.endpoint(End::End).expect("open"));
    let d = build_diffeo(s0, &s, f0, Some(&graph.on_samples(s0.len())), mu, rho, &opts)?;
    let mut buf = Vec::new();
    d.write_table(&mut buf).expect("in-memory write");
    io::write_atomic(out, &buf)?;
    let n = diffeo_norms(&d);
    println!(
        "c0 {:.6e} c1 {:.6e} c11 {:.6e} tangential_c1 {:.6e} endpoint_c0 {:.6e} ratio {:.6}",
        n.c0, n.c1, n.c11, n.tangential_c1, n.endpoint_c0, n.ratio
    );
    println!("psi c0 {:.6e} c1 {:.6e}", graph.c0, graph.c1);
    if !d.hypotheses.hold() {
        eprintln!("warning: closeness hypotheses do not hold: {:?}", d.hypotheses);
    }
    Ok(())
}

fn cmd_converge(
    cfg: &Config,
    limit: &Path,
    sequence: &[PathBuf],
    mu: Option<f64>,
    rho: Option<f64>,
    out: &Path,
    svg_dir: Option<&Path>,
) -> Result<()> {
    let mu = mu.unwrap_or(cfg.mu);
    let (mu, rho) = mu_rho(cfg, Some(mu), Some(rho.unwrap_or(mu * mu / 2.0)), true)?;
    let e = io::read_cluster(limit)?;
    let seq = sequence.iter().map(|p| io::read_cluster(p)).collect::<std::result::Result<Vec<PlanarCluster>, _>>()?;
    let rep = improved_convergence_report(&e, &seq, mu, rho)?;
    let mut buf = Vec::new();
    rep.write_csv(&mut buf).expect("in-memory write");
    io::write_atomic(out, &buf)?;
    if let Some(dir) = svg_dir {
        std::fs::create_dir_all(dir).map_err(|source| IoError::File { path: dir.to_owned(), source })?;
        for (k, ek) in seq.iter().enumerate() {
            io::write_atomic(&dir.join(format!("overlay_{k:03}.svg")), overlay_svg(&e, ek).as_bytes())?;
        }
    }
    for (k, row) in rep.rows.iter().enumerate() {
        if let Err(err) = row {
            eprintln!("warning: member {k} failed: {err}");
        }
    }
    let ok: Vec<_> = rep.successes().collect();
    println!("{} of {} members succeeded -> {}", ok.len(), rep.rows.len(), out.display());
    let pairs: Vec<(f64, f64)> = ok
        .iter()
        .map(|r| (r.delta, r.curvature_deviation))
        .filter(|(d, c)| *d > 0.0 && *c > 0.0)
        .collect();
    if pairs.len() >= 2 {
        let (d, c): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        println!("log-log slope of curvature deviation against delta: {:.4}", log_slope(&d, &c));
    }
    Ok(())
}

fn cmd_render(file: &Path, overlay: Option<&Path>, out: &Path) -> Result<()> {
    let c = io::read_cluster(file)?;
    let svg = match overlay {
        Some(p) => overlay_svg(&c, &io::read_cluster(p)?),
        None => cluster_svg(&c),
    };
    io::write_atomic(out, svg.as_bytes())?;
    Ok(())
}

fn cmd_shape(kind: ShapeKind, r1: f64, r2: f64, rotation: f64, samples: usize, out: &Path) -> Result<()> {
    if !(r1 > 0.0 && r2 > 0.0 && samples >= 8) {
        return Err(CliError::Usage("radii must be positive and samples at least 8".into()));
    }
    let c = match kind {
        ShapeKind::Disk => shapes::disk(Point::zeros(), r1, samples),
        ShapeKind::DoubleBubble => shapes::double_bubble(r1, r2, samples),
        ShapeKind::Y2 => shapes::steiner_y2(r1, samples, rotation),
    };
    io::write_cluster(out, &c)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(cli.config.as_deref(), cli.seed)?;
    match cli.command {
        Command::Solve { areas, init, potential, params, delta, out, log } => {
            cmd_solve(&cfg, &areas, &init, potential, params.as_deref(), delta, &out, log.as_deref())
        }
        Command::Check { file, lambda } => cmd_check(&cfg, &file, lambda),
        Command::Diffeo { source, target, interface, mu, rho, out } => {
            cmd_diffeo(&cfg, &source, &target, interface, mu, rho, &out)
        }
        Command::Converge { limit, sequence, mu, rho, out, svg_dir } => {
            cmd_converge(&cfg, &limit, &sequence, mu, rho, &out, svg_dir.as_deref())
        }
        Command::Render { file, overlay, out } => cmd_render(&file, overlay.as_deref(), &out),
        Command::Shape { kind, r1, r2, rotation, samples, out } => cmd_shape(kind, r1, r2, rotation, samples, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn area_tokens() {
        assert_eq!(parse_area("pi"), Some(PI));
        assert_eq!(parse_area("π"), Some(PI));
        assert_eq!(parse_area("2pi"), Some(2.0 * PI));
        assert_eq!(parse_area("0.5*pi"), Some(0.5 * PI));
        assert_eq!(parse_area("pi/50"), Some(PI / 50.0));
        assert_eq!(parse_area("3.5"), Some(3.5));
        assert_eq!(parse_area("pie"), None);
    }
}
