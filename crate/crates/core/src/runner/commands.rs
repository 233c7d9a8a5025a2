use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::diffeo::TorusMap;
use crate::error::KamError;
use crate::factory::{
    conjugacy_residuals, group_relation_residual, make_conjugated_perturbation, normalize_input, ActionPair,
    ConjugacyResiduals, GeneratorSpec,
};
use crate::kam::{run, verify_decay, DecayReport, JsonlSink, StateNorms, RELATION_BUDGET};
use crate::scalar::norm2;
use crate::spectral::{eval_at, grid_coords};
use crate::torus_algebra::{
    estimate_diophantine, DiophantineCertificate, EigenData, EigenSelector, ToralAutomorphism,
    DEFAULT_DIOPHANTINE_FLOOR,
};

use super::config::RunConfig;

/// A failed command: message plus process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(e: impl std::fmt::Display) -> Self {
        Self { code: 1, message: e.to_string() }
    }
}

impl From<KamError> for CliError {
    fn from(e: KamError) -> Self {
        Self::input(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::input(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `"2,1;1,1"` into matrix rows.
pub fn parse_matrix(s: &str) -> Result<Vec<Vec<i64>>, String> {
    s.split(';')
        .map(|row| {
            row.split(',')
                .map(|x| x.trim().parse::<i64>().map_err(|e| format!("bad matrix entry {x:?}: {e}")))
                .collect()
        })
        .collect()
}

/// `largest`, `smallest`, `largest_abs` or `index:<i>`.
pub fn parse_eigen(s: &str) -> Result<EigenSelector, String> {
    match s {
        "largest" => Ok(EigenSelector::Largest),
        "smallest" => Ok(EigenSelector::Smallest),
        "largest_abs" => Ok(EigenSelector::LargestAbs),
        _ => s
            .strip_prefix("index:")
            .and_then(|i| i.parse().ok())
            .map(EigenSelector::Index)
            .ok_or_else(|| format!("unknown eigenvalue selector {s:?}")),
    }
}

/// Search radius for the Diophantine scan, keeping the ball near 10^5 points.
pub fn certificate_cutoff(dim: usize) -> i64 {
    match dim {
        0..=2 => 200,
        3 => 30,
        4 => 12,
        _ => 6,
    }
}

/// Verification grid per axis.
pub fn verification_grid(dim: usize) -> usize {
    match dim {
        0..=2 => 32,
        3 => 12,
        _ => 6,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub converged: bool,
    pub steps: usize,
    pub error: Option<String>,
    pub lambda: f64,
    pub scale: f64,
    /// Drift of the normalized action.
    pub v_star: Option<Vec<f64>>,
    /// `v_star / scale`, the drift of the input action.
    pub v_star_physical: Option<Vec<f64>>,
    pub delta: Option<f64>,
    pub initial_norms: StateNorms,
    pub final_norms: Option<StateNorms>,
    pub residuals: Option<ConjugacyResiduals>,
    pub relation_residual: f64,
    pub certificate: DiophantineCertificate,
    pub decay: Option<DecayReport>,
}

/// Result of `cmd_run`; `code` is the process exit status.
#[derive(Debug)]
pub struct RunReport {
    pub code: i32,
    pub summary: RunSummary,
    pub out_dir: PathBuf,
}

fn load_pair(cfg: &RunConfig, base: &Path, aut: &ToralAutomorphism, v: &[f64], cap: u32) -> CliResult<ActionPair<f64>> {
    if let Some(spec) = &cfg.generator {
        return Ok(make_conjugated_perturbation(aut, v, spec, cap)?.pair);
    }
    let path = base.join(cfg.input.as_ref().expect("config checked"));
    let text = fs::read_to_string(&path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let pair = ActionPair::from_text(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    if pair.dim() != aut.dim() {
        return Err(CliError::input(format!("input pair has dimension {}, matrix {}", pair.dim(), aut.dim())));
    }
    Ok(pair)
}

/// normalize → run → verify_decay; writes trace, conjugacy and summary.
pub fn cmd_run(config: &Path) -> CliResult<RunReport> {
    let cfg = RunConfig::load(config).map_err(|e| CliError::input(format!("{}: {e}", config.display())))?;
    let base = config.parent().unwrap_or(Path::new("."));
    let aut = ToralAutomorphism::new(cfg.matrix.clone())?;
    let d = aut.dim();
    let eig = EigenData::<f64>::new(&aut, cfg.eigen)?;
    let sched = cfg.schedule(d)?;
    let v = match &cfg.v {
        Some(v) if v.len() != d => return Err(CliError::input(format!("v has {} components, expected {d}", v.len()))),
        Some(v) => v.clone(),
        None => eig.v_unit.clone(),
    };
    let certificate =
        estimate_diophantine(&v, (d - 1) as f64, certificate_cutoff(d), DEFAULT_DIOPHANTINE_FLOOR)?;
    let pair = load_pair(&cfg, base, &aut, &v, sched.cutoff_cap)?;
    let relation_residual = group_relation_residual(&pair);
    if !(relation_residual <= RELATION_BUDGET) {
        return Err(CliError::input(format!(
            "input violates the group relation: residual {relation_residual:e} exceeds {RELATION_BUDGET:e}"
        )));
    }
    let norm = normalize_input(&pair, &aut, &eig, sched.r)?;
    let scale = norm.scale;
    let vtil = norm.state.vtil();

    let out_dir = cfg.out_dir(base);
    fs::create_dir_all(&out_dir)?;
    let trace_file = fs::File::create(out_dir.join(&cfg.output.trace))?;
    let mut sink = JsonlSink(BufWriter::new(trace_file));
    let initial_norms = norm.state.norms;
    let mut summary = RunSummary {
        converged: false,
        steps: 0,
        error: None,
        lambda: eig.lambda,
        scale,
        v_star: None,
        v_star_physical: None,
        delta: sched.delta,
        initial_norms,
        final_norms: None,
        residuals: None,
        relation_residual,
        certificate,
        decay: None,
    };
    let code = match run(norm.state, &eig, &sched, &mut sink) {
        Ok(out) => {
            let grid = verification_grid(d);
            let res = conjugacy_residuals(&out.h_total, &pair.atil, &vtil, &out.v_star, grid);
            fs::write(out_dir.join(&cfg.output.conjugacy), out.h_total.to_text())?;
            summary.converged = out.converged;
            summary.steps = out.steps;
            summary.delta = out.delta;
            summary.v_star_physical = Some(out.v_star.iter().map(|x| x / scale).collect());
            summary.v_star = Some(out.v_star);
            summary.final_norms = Some(out.state.norms);
            summary.residuals = Some(res);
            summary.decay = Some(verify_decay(&out.trace, &sched));
            if out.converged {
                0
            } else {
                2
            }
        }
        Err(KamError::Io(e)) => return Err(e.into()),
        Err(e) => {
            summary.error = Some(e.to_string());
            2
        }
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(out_dir.join(&cfg.output.summary), json + "\n")?;
    Ok(RunReport { code, summary, out_dir })
}

/// Flags of `gen`.
#[derive(Clone, Debug)]
pub struct GenArgs {
    pub matrix: Vec<Vec<i64>>,
    pub eigen: EigenSelector,
    pub spec: GeneratorSpec,
    pub cutoff: u32,
    pub out: PathBuf,
}

#[derive(Clone, Debug, Serialize)]
pub struct GenManifest {
    pub matrix: Vec<Vec<i64>>,
    pub eigen: EigenSelector,
    pub lambda: f64,
    pub v: Vec<f64>,
    pub generator: GeneratorSpec,
    pub cutoff: u32,
    pub relation_residual: f64,
    pub alias_tail: f64,
    pub files: Vec<String>,
}

/// Writes `pair.txt`, `truth.txt` (the conjugacy `G`) and `manifest.json`.
pub fn cmd_gen(args: &GenArgs) -> CliResult<GenManifest> {
    let aut = ToralAutomorphism::new(args.matrix.clone())?;
    let eig = EigenData::<f64>::new(&aut, args.eigen)?;
    let p = make_conjugated_perturbation(&aut, &eig.v_unit, &args.spec, args.cutoff)?;
    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("pair.txt"), p.pair.to_text())?;
    fs::write(args.out.join("truth.txt"), p.g.to_text())?;
    let manifest = GenManifest {
        matrix: args.matrix.clone(),
        eigen: args.eigen,
        lambda: eig.lambda,
        v: eig.v_unit.clone(),
        generator: args.spec.clone(),
        cutoff: args.cutoff,
        relation_residual: p.relation_residual,
        alias_tail: p.tail,
        files: vec!["pair.txt".into(), "truth.txt".into()],
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(args.out.join("manifest.json"), json + "\n")?;
    Ok(manifest)
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    /// Grid mean of `DH·ṽ`.
    pub v_star: Vec<f64>,
    pub map_residual: f64,
    pub flow_residual: f64,
    pub grid: usize,
    pub tol: f64,
    pub pass: bool,
}

/// Checks a conjugacy against an action pair without knowing `v*`.
pub fn cmd_verify(pair_path: &Path, conj_path: &Path, tol: f64) -> CliResult<VerifyReport> {
    let read = |p: &Path| fs::read_to_string(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())));
    let pair = ActionPair::<f64>::from_text(&read(pair_path)?)
        .map_err(|e| CliError::input(format!("{}: {e}", pair_path.display())))?;
    let h = TorusMap::<f64>::from_text(&read(conj_path)?)
        .map_err(|e| CliError::input(format!("{}: {e}", conj_path.display())))?;
    let d = pair.dim();
    if h.dim() != d {
        return Err(CliError::input("conjugacy and pair dimensions differ"));
    }
    if !h.linear.is_identity() {
        return Err(CliError::input("conjugacy must be homotopic to the identity"));
    }
    let grid = verification_grid(d);
    let pts: Vec<Vec<f64>> = (0..grid.pow(d as u32)).map(|i| grid_coords(i, grid, d)).collect();
    let vt = eval_at(&pair.vtil, &pts);
    let partials: Vec<Vec<Vec<f64>>> = (0..d).map(|j| eval_at(&h.periodic.partial(j), &pts)).collect();
    let mut v_star = vec![0.0; d];
    for i in 0..pts.len() {
        for r in 0..d {
            v_star[r] += vt[i][r] + (0..d).map(|j| partials[j][i][r] * vt[i][j]).sum::<f64>();
        }
    }
    v_star.iter_mut().for_each(|x| *x /= pts.len() as f64);
    let res = conjugacy_residuals(&h, &pair.atil, &pair.vtil, &v_star, grid);
    let pass = res.map < tol && res.flow < tol && norm2(&v_star) > 0.0;
    Ok(VerifyReport { v_star, map_residual: res.map, flow_residual: res.flow, grid, tol, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_parsers() {
        assert_eq!(parse_matrix("2,1;1,1").unwrap(), vec![vec![2, 1], vec![1, 1]]);
        assert!(parse_matrix("2,x;1,1").is_err());
        assert_eq!(parse_eigen("index:2").unwrap(), EigenSelector::Index(2));
        assert_eq!(parse_eigen("smallest").unwrap(), EigenSelector::Smallest);
        assert!(parse_eigen("middle").is_err());
    }
}
