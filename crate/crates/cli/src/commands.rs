use std::fs;
use std::path::Path;
use std::sync::Arc;

use bdlab::covering::{build_covering, components};
use bdlab::graph::{validate_graph, GraphIssue};
use bdlab::kms::StateFile;
use bdlab::measures::{LevelMeasureFile, TowerFile};
use bdlab::spectral::{perron, pf_tower};
use bdlab::{run_suite, Graph, Kms, KmsState, MeasureTower, OmegaPrefix, PathSystem, RawGraph, Spectrum, Suite};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::{Cli, CliError, Command, GraphCommand, KmsCommand, SuiteArg};

#[derive(Deserialize)]
struct OmegaFile {
    omega: Vec<usize>,
    #[serde(default)]
    divergent: bool,
}

/// A measure file holds either a full tower or a single level.
#[derive(Deserialize)]
#[serde(untagged)]
enum MeasureInput {
    Tower(TowerFile),
    Level(LevelMeasureFile),
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn require<'a>(p: &'a Option<std::path::PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    p.as_deref()
        .ok_or_else(|| CliError::Input(format!("this command needs {flag}")))
}

fn load_graph(cli: &Cli) -> Result<Graph, CliError> {
    let raw: RawGraph = read_json(require(&cli.graph, "-g/--graph")?)?;
    Ok(Graph::from_raw(&raw)?)
}

fn load_omega(cli: &Cli, divergent: bool) -> Result<OmegaPrefix, CliError> {
    let f: OmegaFile = read_json(require(&cli.omega, "-w/--omega")?)?;
    Ok(OmegaPrefix::new(&f.omega)?.with_divergence(f.divergent || divergent))
}

fn load_system(cli: &Cli, divergent: bool) -> Result<Arc<PathSystem>, CliError> {
    let g = load_graph(cli)?;
    Ok(PathSystem::new(&g, &load_omega(cli, divergent)?)?)
}

fn kms(cli: &Cli) -> Result<Kms<f64>, CliError> {
    Ok(Kms::with_tolerances(load_system(cli, false)?, cli.tol.resolve())?)
}

/// Per-class masses of each state at the first stable level.
fn class_summary(k: &Kms<f64>, states: &[KmsState<f64>]) -> Result<Value, CliError> {
    let sys = k.system();
    let g = sys.graph();
    let k0 = sys.stable_level()?;
    let classes = components(g, sys.n(k0))?.classes();
    let names: Vec<Vec<&str>> = classes
        .iter()
        .map(|c| c.iter().map(|v| g.vertex_name(*v)).collect())
        .collect();
    let rows: Vec<Value> = states
        .iter()
        .map(|s| {
            json!({
                "provenance": s.provenance(),
                "class_masses": s.class_masses(k0, &classes),
                "measure": s.tower().to_file(sys),
            })
        })
        .collect();
    Ok(json!({ "level": k0, "classes": names, "states": rows }))
}

/// Output value and exit status.
pub fn run(cli: &Cli) -> Result<(Value, u8), CliError> {
    match &cli.command {
        Command::Graph {
            command: GraphCommand::Validate,
        } => {
            let raw: RawGraph = read_json(require(&cli.graph, "-g/--graph")?)?;
            match validate_graph(&raw) {
                Ok(g) => {
                    let issues: Vec<String> = g.issues().iter().map(GraphIssue::to_string).collect();
                    Ok((
                        json!({
                            "valid": true,
                            "vertices": g.vertex_count(),
                            "edges": g.edge_count(),
                            "strongly_connected": g.is_strongly_connected(),
                            "issues": issues,
                        }),
                        0,
                    ))
                }
                Err(issues) => {
                    let issues: Vec<String> = issues.iter().map(GraphIssue::to_string).collect();
                    Ok((json!({ "valid": false, "issues": issues }), 1))
                }
            }
        }
        Command::Cover { n, dot } => {
            let g = load_graph(cli)?;
            let cov = build_covering(&g, *n)?;
            let part = components(&g, *n)?;
            if let Some(path) = dot {
                fs::write(path, cov.to_dot(Some(&part)))
                    .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            }
            let classes = cov.weak_components().iter().max().map_or(0, |m| m + 1);
            Ok((
                json!({
                    "n": n,
                    "vertices": cov.vertex_count(),
                    "edges": cov.edge_count(),
                    "components": classes,
                }),
                0,
            ))
        }
        Command::Components { n } => {
            let g = load_graph(cli)?;
            Ok((components(&g, *n)?.to_json(), 0))
        }
        Command::Period => {
            let g = load_graph(cli)?;
            g.require_strongly_connected()?;
            Ok((json!({ "period": g.period()? }), 0))
        }
        Command::Perron => {
            let g = load_graph(cli)?;
            g.require_no_sources()?;
            Ok((serde_json::to_value(perron::<f64>(&g.adjacency())?).expect("serialises"), 0))
        }
        Command::PfMeasure => {
            let sys = load_system(cli, false)?;
            let spec = Spectrum::<f64>::new(sys.graph())?;
            let tower = pf_tower(&sys, &spec)?;
            Ok((json!({ "rho": spec.rho(), "tower": tower.to_file(&sys) }), 0))
        }
        Command::Kms { command } => run_kms(cli, command),
        Command::Simple { divergent } => {
            let sys = load_system(cli, *divergent)?;
            Ok((
                json!({
                    "simple": bdlab::kms::is_simple(&sys)?,
                    "classes": sys.class_count()?,
                    "period": sys.period()?,
                }),
                0,
            ))
        }
        Command::Verify { suite, seed } => {
            let suite = match suite {
                SuiteArg::Algebra => Suite::Algebra,
                SuiteArg::Spectral => Suite::Spectral,
                SuiteArg::Kms => Suite::Kms,
                SuiteArg::All => Suite::All,
            };
            let report = run_suite(suite, *seed, &cli.tol.resolve());
            let status = if report.passed { 0 } else { 3 };
            Ok((serde_json::to_value(report).expect("serialises"), status))
        }
    }
}

fn run_kms(cli: &Cli, command: &KmsCommand) -> Result<(Value, u8), CliError> {
    let k = kms(cli)?;
    let sys = k.system().clone();
    let critical = k.critical_beta();
    let tol = k.tolerances().eigen;
    match command {
        KmsCommand::Simplex { beta } => {
            if *beta < critical - tol {
                return Err(CliError::Precondition(format!(
                    "beta = {beta} is below the critical value {critical}: there are no KMS states"
                )));
            }
            if (*beta - critical).abs() <= tol {
                let states = k.critical_states()?;
                Ok((
                    json!({
                        "beta": beta,
                        "critical_beta": critical,
                        "regime": "critical",
                        "extreme_points": states.len(),
                        "beta_range": [critical, critical],
                        "per_class": class_summary(&k, &states)?,
                    }),
                    0,
                ))
            } else {
                let sizes: Vec<usize> = (1..=sys.depth()).map(|l| sys.size(l)).collect();
                Ok((
                    json!({
                        "beta": beta,
                        "critical_beta": critical,
                        "regime": "supercritical",
                        "parametrised_by": "probability measures on the boundary path space",
                        "beta_range": [critical, null],
                        "level_sizes": sizes,
                        "y": k.y_vector(*beta)?,
                    }),
                    0,
                ))
            }
        }
        KmsCommand::Critical => {
            let states = k.critical_states()?;
            Ok((
                json!({
                    "critical_beta": critical,
                    "count": states.len(),
                    "per_class": class_summary(&k, &states)?,
                }),
                0,
            ))
        }
        KmsCommand::FromBoundary { beta, measure } => {
            let (sys, tower) = match read_json::<MeasureInput>(measure)? {
                MeasureInput::Tower(t) => {
                    let sys = truncate(&sys, t.levels.len())?;
                    let tower = MeasureTower::from_file(&sys, &t)?;
                    (sys, tower)
                }
                MeasureInput::Level(l) => {
                    let sys = truncate(&sys, l.level)?;
                    let top = bdlab::LevelMeasure::from_file(&sys, &l)?;
                    let tower = MeasureTower::from_top(&sys, top)?;
                    (sys, tower)
                }
            };
            let k = Kms::with_tolerances(sys, cli.tol.resolve())?;
            let state: StateFile = k.state_from_boundary(&tower, *beta)?.to_file();
            Ok((serde_json::to_value(state).expect("serialises"), 0))
        }
    }
}

/// The system restricted to its first `depth` levels.
fn truncate(sys: &Arc<PathSystem>, depth: usize) -> Result<Arc<PathSystem>, CliError> {
    if depth == sys.depth() {
        return Ok(sys.clone());
    }
    let omega = sys.omega().truncate(depth)?;
    Ok(PathSystem::new(sys.graph(), &omega)?)
}
