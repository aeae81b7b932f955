//! Batch driver: validates domain files, builds maps and decompositions,
//! runs extensions and checkers, executes the verification suite and renders
//! SVG figures. Reports are written as REP1 JSON; exit codes: 0 ok,
//! 2 invariant failure, 3 resolution error, 4 input error.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::conditions;
use crate::conformal::{build_approximation_family, build_disk_map, build_exterior_map};
use crate::extension;
use crate::geometry::{ComplementRegion, Point, PolygonalDomain};
use crate::render::{render_svg, Layer};
use crate::report::RunReport;
use crate::triangulation::{self, GeodesicOptions};
use crate::verify::{self, VerifyScope};
use crate::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "sobext",
    about = "Extension operators, curve-condition checkers and capacity estimates for planar polygonal domains"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Domain JSON file: {"outer": [[x,y],...], "slits": [...], "resolution_hint": h}
    #[arg(long, global = true)]
    pub domain: Option<PathBuf>,
    /// Grid spacing; defaults to the domain's resolution hint
    #[arg(long, global = true)]
    pub h: Option<f64>,
    /// Truncation depth of the triangulation
    #[arg(long, default_value_t = 6, global = true)]
    pub k_max: u32,
    /// Override the automatically selected k0
    #[arg(long, global = true)]
    pub k0: Option<u32>,
    /// Mark-gap parameter for the decomposition
    #[arg(long, default_value_t = 0.5, global = true)]
    pub delta: f64,
    /// Boundary-proximity parameter for exterior-map probes
    #[arg(long, default_value_t = 0.0625, global = true)]
    pub delta1: f64,
    /// Curve-condition cutoff constant
    #[arg(long, default_value_t = 50.0, global = true)]
    pub cmax: f64,
    /// Sampled pair count for checkers
    #[arg(long, default_value_t = 32, global = true)]
    pub pairs: usize,
    /// Seed for all randomized batteries
    #[arg(long, default_value_t = 7, global = true)]
    pub seed: u64,
    /// Output directory for reports and artifacts
    #[arg(long, default_value = "out", global = true)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Validate a domain file and report its topology
    Validate,
    /// Build the disk map (and exterior map for Jordan domains), cache it
    Map,
    /// Build the Whitney decomposition and hyperbolic triangulation
    Decompose,
    /// Extend an expression-sampled field and report the norm ratios
    Extend {
        /// Analytic expression in x, y to extend
        #[arg(long, default_value = "x")]
        expr: String,
    },
    /// Estimate the quasiconvexity constant of the complement
    CheckQc,
    /// Check the overlap-free curve condition
    CheckCurve,
    /// Check the weighted curve condition for an exponent p in (1,2)
    CheckP {
        #[arg(long, default_value_t = 1.5)]
        p: f64,
    },
    /// Conformal capacity between two plates given as point lists
    Capacity {
        /// E plate: "x1,y1;x2,y2;..."
        #[arg(long)]
        e_plate: String,
        /// F plate: same syntax
        #[arg(long)]
        f_plate: String,
    },
    /// Run the gradient blow-up probe along a slit geodesic
    ProbeNecessity,
    /// Run the verification suite (acceptance criteria table)
    Verify {
        /// Run the full desk-scale resolutions instead of the quick pass
        #[arg(long)]
        full: bool,
    },
    /// Render SVG layers of the domain and its triangulation
    Render {
        /// Comma-separated layers: domain,triangulation,cutpoints,extension
        #[arg(long, default_value = "domain")]
        layers: String,
        #[arg(long, default_value = "x")]
        expr: String,
    },
}

pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    if let Ok(threads) = std::env::var("SOBEXT_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_domain(cli: &Cli) -> Result<PolygonalDomain> {
    let path = cli
        .domain
        .as_ref()
        .ok_or_else(|| Error::InvalidDomain("--domain is required".into()))?;
    let text = std::fs::read_to_string(path)?;
    PolygonalDomain::from_json(&text)
}

fn grid_h(cli: &Cli, d: &PolygonalDomain) -> f64 {
    cli.h.unwrap_or(d.resolution_hint)
}

fn parse_plate(text: &str) -> Result<crate::geometry::Polyline> {
    let pts: Vec<Point> = text
        .split(';')
        .map(|pair| -> Result<Point> {
            let mut it = pair.split(',');
            let x = it
                .next()
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad plate point '{pair}'")))?;
            let y = it
                .next()
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad plate point '{pair}'")))?;
            Ok(Point::new(x, y))
        })
        .collect::<Result<Vec<_>>>()?;
    crate::geometry::Polyline::open(pts)
}

pub fn run(cli: &Cli) -> Result<()> {
    std::fs::create_dir_all(&cli.out)?;
    let started = Instant::now();
    let config = json!({
        "domain": cli.domain.as_ref().map(|p| p.display().to_string()),
        "h": cli.h,
        "k_max": cli.k_max,
        "k0": cli.k0,
        "delta": cli.delta,
        "delta1": cli.delta1,
        "cmax": cli.cmax,
        "pairs": cli.pairs,
        "seed": cli.seed,
    });
    let (name, payload, artifacts) = dispatch(cli)?;
    let mut report = RunReport::new(name, config);
    report.payload = payload;
    report.artifacts = artifacts;
    report.wall_seconds = started.elapsed().as_secs_f64();
    let path = cli.out.join(format!("{name}.json"));
    report.write(&path)?;
    println!("report: {}", path.display());
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(&'static str, serde_json::Value, Vec<String>)> {
    match &cli.command {
        Command::Validate => {
            let d = load_domain(cli)?;
            d.validate()?;
            Ok((
                "validate",
                json!({
                    "ok": true,
                    "outer_vertices": d.outer.vertices().len(),
                    "slits": d.slits.len(),
                    "diameter": d.diameter(),
                    "area": d.area(),
                }),
                vec![],
            ))
        }
        Command::Map => {
            let d = load_domain(cli)?;
            let mesh = d.diameter() / 96.0;
            let m = build_disk_map(&d, mesh)?;
            let cache = cli.out.join("map_cache.json");
            std::fs::write(&cache, m.to_cache_json())?;
            let residual = m.conformality_residual(12, 1e-5);
            let exterior = if d.slits.is_empty() {
                let em = build_exterior_map(&d, mesh)?;
                json!({"farfield_constant": em.farfield_constant})
            } else {
                serde_json::Value::Null
            };
            Ok((
                "map",
                json!({
                    "base_point": [m.base_point.x, m.base_point.y],
                    "conformality_residual": residual,
                    "boundary_samples": m.boundary_table.thetas.len(),
                    "exterior": exterior,
                }),
                vec![cache.display().to_string()],
            ))
        }
        Command::Decompose => {
            let d = load_domain(cli)?;
            let mesh = d.diameter() / 96.0;
            let m = build_disk_map(&d, mesh)?;
            let k0 = match cli.k0 {
                Some(k0) => k0,
                None => triangulation::select_k0(&m, cli.delta)?.0,
            };
            let dec = triangulation::build_decomposition(&m, k0, cli.k_max, cli.delta)?;
            let opts = GeodesicOptions::for_domain(&d);
            let tri = if d.slits.is_empty() {
                let em = build_exterior_map(&d, mesh)?;
                triangulation::build_triangles(
                    &m,
                    &dec,
                    &triangulation::GeodesicSource::Direct(&em),
                    &opts,
                )?
            } else {
                let fam = build_approximation_family(&m, 10, mesh)?;
                triangulation::build_triangles(
                    &m,
                    &dec,
                    &triangulation::GeodesicSource::Family(&fam),
                    &opts,
                )?
            };
            let dump = cli.out.join("triangulation.json");
            std::fs::write(&dump, triangulation_dump(&tri))?;
            let degenerate = tri
                .triangles
                .iter()
                .filter(|t| t.degenerate != triangulation::DegenerateCase::None)
                .count();
            Ok((
                "decompose",
                json!({
                    "k0": k0,
                    "k_max": cli.k_max,
                    "max_gap": dec.max_gap,
                    "lambda_max": dec.lambda_max,
                    "edges": tri.edges.len(),
                    "triangles": tri.triangles.len(),
                    "degenerate": degenerate,
                    "classes": tri.chains.classes.len(),
                    "edge_length_constant": tri.edge_length_constant,
                }),
                vec![dump.display().to_string()],
            ))
        }
        Command::Extend { expr } => {
            let d = load_domain(cli)?;
            let h = grid_h(cli, &d);
            let mesh = d.diameter() / 96.0;
            let pipe = extension::build_pipeline(&d, mesh, cli.k_max, cli.delta, 10)?;
            let u = extension::sample_on_domain(&d, expr, h)?;
            let ext = extension::extend_simply_connected(
                &d, &u, &pipe.map, &pipe.dec, &pipe.tri, h,
            )?;
            let base = cli.out.join("extension");
            crate::report::write_field(&base, &ext.field, Some(&ext.tags))?;
            Ok((
                "extend",
                serde_json::to_value(&ext.report).map_err(|e| Error::Parse(e.to_string()))?,
                vec![base.with_extension("json").display().to_string()],
            ))
        }
        Command::CheckQc => {
            let d = load_domain(cli)?;
            let h = grid_h(cli, &d);
            let region = ComplementRegion::closed(&d);
            let rep = conditions::quasiconvexity_constant(&region, cli.pairs, h, cli.seed)?;
            let witness = cli.out.join("qc_witness.json");
            std::fs::write(
                &witness,
                serde_json::to_string_pretty(&rep.witness_path)
                    .map_err(|e| Error::Parse(e.to_string()))?,
            )?;
            Ok((
                "check-qc",
                json!({
                    "condition": "quasiconvexity",
                    "constant": rep.constant_estimate,
                    "worst_pair": rep.worst_pair,
                    "witness_path_file": witness.display().to_string(),
                    "samples": rep.sample_count,
                    "resolution": rep.resolution,
                }),
                vec![witness.display().to_string()],
            ))
        }
        Command::CheckCurve => {
            let d = load_domain(cli)?;
            let h = grid_h(cli, &d);
            let rep = conditions::check_curve_condition(&d, cli.pairs, h, cli.cmax, cli.seed)?;
            Ok((
                "check-curve",
                json!({
                    "condition": "curve-condition",
                    "satisfied": rep.satisfied,
                    "constant": rep.worst_ratio,
                    "c_max": rep.c_max,
                    "resolution": rep.resolution,
                    "witnesses": rep.witnesses,
                }),
                vec![],
            ))
        }
        Command::CheckP { p } => {
            let d = load_domain(cli)?;
            let h = grid_h(cli, &d);
            let rep = conditions::check_p_condition(&d, *p, cli.pairs, h, cli.cmax, cli.seed)?;
            Ok((
                "check-p",
                serde_json::to_value(&rep).map_err(|e| Error::Parse(e.to_string()))?,
                vec![],
            ))
        }
        Command::Capacity { e_plate, f_plate } => {
            let d = load_domain(cli)?;
            let h = grid_h(cli, &d);
            let e = parse_plate(e_plate)?;
            let f = parse_plate(f_plate)?;
            let (lo, hi) = d.bbox();
            let grid = crate::fields::GridSpec::covering(lo, hi, h);
            let problem = crate::capacity::CapacityProblem::from_predicates(
                grid,
                |p| d.contains(p) || d.dist_to_boundary(p) <= 0.51 * h,
                |p| e.dist_to(p),
                |p| f.dist_to(p),
            )?;
            let est = crate::capacity::conformal_capacity(&problem)?;
            let base = cli.out.join("capacity_minimizer");
            crate::report::write_field(&base, &est.minimizer, None)?;
            Ok((
                "capacity",
                json!({
                    "value": est.value,
                    "residual": est.residual,
                    "h": h,
                    "fattening": est.fattening,
                }),
                vec![base.with_extension("json").display().to_string()],
            ))
        }
        Command::ProbeNecessity => {
            let d = load_domain(cli)?;
            if d.slits.is_empty() {
                return Err(Error::InvalidDomain(
                    "probe-necessity expects a slit domain (vacuous otherwise)".into(),
                ));
            }
            let h = grid_h(cli, &d);
            let mesh = d.diameter() / 96.0;
            let pipe = extension::build_pipeline(&d, mesh, cli.k_max, cli.delta, 10)?;
            let fam = build_approximation_family(&pipe.map, 10, mesh)?;
            let slit = &d.slits[0];
            let len = slit.length();
            let find = |target: Point| -> f64 {
                let mut best = (f64::INFINITY, 0.0);
                for i in 0..4096 {
                    let t = 2.0 * std::f64::consts::PI * i as f64 / 4096.0;
                    let p = pipe.map.boundary_point(t);
                    if p.dist(target) < best.0 {
                        best = (p.dist(target), t);
                    }
                }
                best.1
            };
            let labels = (
                find(slit.point_at(0.3 * len)),
                find(slit.point_at(0.7 * len)),
            );
            let mut opts = GeodesicOptions::for_domain(&d);
            opts.tol = 4e-3 * d.diameter();
            let gamma = triangulation::piecewise_geodesic(labels, &pipe.map, &fam, &opts)?;
            let probe = extension::necessity_probe(
                &d,
                h,
                &pipe.map,
                &pipe.dec,
                &pipe.tri,
                &gamma,
                4.0 * h,
            )?;
            Ok((
                "probe-necessity",
                serde_json::to_value(&probe).map_err(|e| Error::Parse(e.to_string()))?,
                vec![],
            ))
        }
        Command::Verify { full } => {
            let scope = if *full {
                VerifyScope::Full
            } else {
                VerifyScope::Quick
            };
            let results = verify::run_all(cli.seed, scope);
            let all = results.iter().all(|r| r.passed);
            let payload =
                serde_json::to_value(&results).map_err(|e| Error::Parse(e.to_string()))?;
            if !all {
                // still write the report before signalling failure
                let mut report = RunReport::new("verify", json!({"seed": cli.seed}));
                report.payload = payload;
                report.write(&cli.out.join("verify.json"))?;
                return Err(Error::Invariant("verification suite failed".into()));
            }
            Ok(("verify", payload, vec![]))
        }
        Command::Render { layers, expr } => {
            let d = load_domain(cli)?;
            let mesh = d.diameter() / 96.0;
            let mut doc_layers: Vec<&str> = layers.split(',').map(|s| s.trim()).collect();
            doc_layers.dedup();
            // build what the requested layers need
            let need_tri = doc_layers
                .iter()
                .any(|l| *l == "triangulation" || *l == "extension");
            let need_cut = doc_layers.contains(&"cutpoints");
            let need_ext = doc_layers.contains(&"extension");
            let pipe = if need_tri {
                Some(extension::build_pipeline(&d, mesh, cli.k_max, cli.delta, 10)?)
            } else {
                None
            };
            let map_for_cut;
            let cut = if need_cut {
                let m = match &pipe {
                    Some(p) => &p.map,
                    None => {
                        map_for_cut = build_disk_map(&d, mesh)?;
                        &map_for_cut
                    }
                };
                Some(triangulation::detect_cut_points(
                    m,
                    None,
                    4096,
                    0.015 * d.diameter(),
                )?)
            } else {
                None
            };
            let ext = if need_ext {
                let pipe = pipe.as_ref().unwrap();
                let h = grid_h(cli, &d);
                let u = extension::sample_on_domain(&d, expr, h)?;
                Some(extension::extend_simply_connected(
                    &d, &u, &pipe.map, &pipe.dec, &pipe.tri, h,
                )?)
            } else {
                None
            };
            let mut layer_objs: Vec<Layer> = Vec::new();
            for name in &doc_layers {
                match *name {
                    "domain" => layer_objs.push(Layer::Domain(&d)),
                    "triangulation" => {
                        layer_objs.push(Layer::Triangulation(&pipe.as_ref().unwrap().tri))
                    }
                    "cutpoints" => layer_objs.push(Layer::CutPoints(cut.as_ref().unwrap())),
                    "extension" => layer_objs.push(Layer::Extension(ext.as_ref().unwrap())),
                    "" => {}
                    other => {
                        return Err(Error::InvalidDomain(format!("unknown layer '{other}'")))
                    }
                }
            }
            let svg = render_svg(&layer_objs);
            let path = cli.out.join("render.svg");
            std::fs::write(&path, &svg)?;
            Ok((
                "render",
                json!({"layers": doc_layers, "bytes": svg.len()}),
                vec![path.display().to_string()],
            ))
        }
    }
}

/// Triangulation dump: indices, polylines, class ids, ancestors, chains.
fn triangulation_dump(tri: &triangulation::Triangulation) -> String {
    let edges: Vec<serde_json::Value> = tri
        .edges
        .values()
        .map(|e| {
            json!({
                "k": e.id.0,
                "j": e.id.1,
                "polyline": e.polyline.vertices().iter().map(|p| [p.x, p.y]).collect::<Vec<_>>(),
                "length": e.polyline.length(),
                "mark_gap": e.mark_gap,
            })
        })
        .collect();
    let triangles: Vec<serde_json::Value> = tri
        .triangles
        .iter()
        .map(|t| {
            json!({
                "k": t.k,
                "j": t.j,
                "degenerate": format!("{:?}", t.degenerate),
                "area": t.area,
                "active_component": t.active_component,
            })
        })
        .collect();
    let classes: Vec<serde_json::Value> = tri
        .chains
        .classes
        .iter()
        .map(|c| {
            json!({
                "id": c.id,
                "members": c.members,
                "ancestor": c.ancestor,
                "forced": c.forced,
            })
        })
        .collect();
    serde_json::to_string_pretty(&json!({
        "k0": tri.k0,
        "k_max": tri.kmax,
        "edges": edges,
        "triangles": triangles,
        "classes": classes,
        "chains": tri.chains.chains.iter().map(|(k, v)| json!({"piece": k, "chain": v})).collect::<Vec<_>>(),
    }))
    .unwrap()
}
