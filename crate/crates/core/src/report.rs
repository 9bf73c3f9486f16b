//! Command layer behind the `pegtrace` binary: polygon files, JSON reports,
//! SVG figures and exit codes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coincidence::{count_m, CoincidenceReport};
use crate::diameters::{analyze, chord_is_interior, EndpointKind, Extremum, Orientation};
use crate::generate::{generate, GenerateError, GeneratorConfig};
use crate::geom::{LabeledRectangle, Point, Polygon, PolygonError};
use crate::index::RectIndex;
use crate::oracle::sample_all;
use crate::shape::{
    check_differential, differential_step, shape_curve, shape_loop, sweep_tolerance, verify_sweep, DifferentialCheck,
    SweepReport,
};
use crate::tracer::{inscribing_sequence, trace_all, ArcComponent, ComponentClass, SeedRef, TraceConfig, TraceError, TraceResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_FAULT: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Diameters,
    Trace,
    Verify,
    Coincidences,
    Generate,
}

/// Everything that determines a run; echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
    /// Oracle grid density: loop search for tracing, cross-check when set.
    pub grid: Option<usize>,
    pub svg: bool,
    pub dump: bool,
    /// Multiplies the perimeter-relative default tracer steps.
    pub step_scale: f64,
    /// Polygon generation.
    pub vertices: usize,
    pub count: usize,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            input: None,
            out_dir: None,
            seed: 0,
            grid: None,
            svg: false,
            dump: false,
            step_scale: 1.0,
            vertices: 6,
            count: 1,
        }
    }

    pub fn trace_config(&self, p: &Polygon) -> TraceConfig {
        let mut cfg = TraceConfig::for_polygon(p).with_step_scale(self.step_scale);
        if let Some(n) = self.grid {
            cfg.loop_grid = n;
        }
        cfg
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: parse error at line {line}, column {column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },
    #[error("invalid polygon: {0}")]
    Polygon(#[from] PolygonError),
    #[error("{0}")]
    Trace(#[from] TraceError),
    #[error("{0}")]
    Generate(#[from] GenerateError),
    #[error("missing --input")]
    MissingInput,
    #[error("invalid option: {0}")]
    BadOption(String),
}

impl ReportError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ReportError::Trace(e) => match e {
                TraceError::BadConfig(_) | TraceError::TrickyDiameter | TraceError::NonGeneric(_) => EXIT_INPUT,
                _ => EXIT_FAULT,
            },
            _ => EXIT_INPUT,
        }
    }
}

/// On-disk polygon format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonFile {
    pub vertices: Vec<[f64; 2]>,
}

impl From<&Polygon> for PolygonFile {
    fn from(p: &Polygon) -> Self {
        Self { vertices: p.vertices().iter().map(|v| [v.x, v.y]).collect() }
    }
}

pub fn parse_polygon(text: &str, path: &Path) -> Result<Polygon, ReportError> {
    let file: PolygonFile = serde_json::from_str(text).map_err(|e| ReportError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Ok(Polygon::new(file.vertices.iter().map(|v| Point::new(v[0], v[1])).collect())?)
}

pub fn read_polygon(path: &Path) -> Result<Polygon, ReportError> {
    let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io { path: path.to_path_buf(), source })?;
    parse_polygon(&text, path)
}

pub fn polygon_json(p: &Polygon) -> String {
    to_json(&PolygonFile::from(p))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serialization");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiameterEntry {
    pub q1: [f64; 2],
    pub q2: [f64; 2],
    /// Endpoint kinds, `"vertex i"` or `"edge i"`.
    pub ends: [String; 2],
    pub length: f64,
    pub orientation: Orientation,
    pub extremum: Extremum,
    pub stable: bool,
    pub tricky: bool,
    pub interior: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiametersReport {
    pub config: RunConfig,
    pub vertices: usize,
    pub perimeter: f64,
    pub area: f64,
    pub delta_plus: usize,
    pub diameters: Vec<DiameterEntry>,
    pub parallel_families: usize,
    pub ambiguous: usize,
    pub warnings: Vec<String>,
}

fn end_kind(k: EndpointKind) -> String {
    match k {
        EndpointKind::Vertex(i) => format!("vertex {i}"),
        EndpointKind::EdgeInterior(i) => format!("edge {i}"),
    }
}

pub fn diameters_report(p: &Polygon, cfg: &RunConfig) -> DiametersReport {
    let rep = analyze(p);
    let mut warnings = vec![];
    if !rep.families.is_empty() {
        warnings.push(format!(
            "degenerate polygon: {} parallel-edge families carry continua of degenerate rectangles",
            rep.families.len()
        ));
    }
    if !rep.ambiguous.is_empty() {
        warnings.push(format!("{} chords could not be classified at first order", rep.ambiguous.len()));
    }
    if rep.has_tricky() {
        warnings.push("tricky diameter present: tracing and coincidence counting are refused".into());
    }
    let diameters = rep
        .diameters
        .iter()
        .map(|d| DiameterEntry {
            q1: [d.q1.point.x, d.q1.point.y],
            q2: [d.q2.point.x, d.q2.point.y],
            ends: [end_kind(d.q1.kind), end_kind(d.q2.kind)],
            length: d.length,
            orientation: d.orientation,
            extremum: d.extremum,
            stable: d.stable,
            tricky: d.tricky,
            interior: chord_is_interior(p, &d.chord()),
        })
        .collect();
    DiametersReport {
        config: cfg.clone(),
        vertices: p.len(),
        perimeter: p.perimeter(),
        area: p.area(),
        delta_plus: rep.delta_plus(),
        diameters,
        parallel_families: rep.families.len(),
        ambiguous: rep.ambiguous.len(),
        warnings,
    }
}

/// One component in `trace --dump` format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDump {
    pub class: ComponentClass,
    pub shift: usize,
    pub endpoints: Vec<SeedRef>,
    /// `[R1x, R1y, R2x, R2y, R3x, R3y, R4x, R4y, X, Y]` per sample.
    pub samples: Vec<[f64; 10]>,
    pub inscribing: Vec<[usize; 4]>,
}

pub fn component_dump(comp: &ArcComponent, n_edges: usize) -> ComponentDump {
    let samples = comp
        .samples
        .iter()
        .map(|s| {
            let v = s.rect.v;
            [v[0].x, v[0].y, v[1].x, v[1].y, v[2].x, v[2].y, v[3].x, v[3].y, s.rect.x, s.rect.y]
        })
        .collect();
    let inscribing = inscribing_sequence(comp, n_edges).unwrap_or_else(|_| comp.charts.clone());
    ComponentDump {
        class: comp.class,
        shift: comp.shift,
        endpoints: comp.endpoints.map(|e| e.to_vec()).unwrap_or_default(),
        samples,
        inscribing,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub class: ComponentClass,
    pub shift: usize,
    pub orbit: usize,
    pub endpoints: Vec<SeedRef>,
    pub samples: usize,
    pub length: f64,
    pub charts: usize,
    pub node_passed: bool,
}

/// Bidirectional oracle cross-check at a given grid density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub grid: usize,
    pub hits: usize,
    /// Largest distance from a refined hit to the nearest traced sample.
    pub max_hit_to_trace: f64,
    /// Bound for the above, `10 h_max`.
    pub hit_tolerance: f64,
    /// Largest distance from a traced sample to the nearest refined hit.
    pub max_trace_to_hit: f64,
    /// Bound for the above, the grid resolution `2P / (n N)`.
    pub trace_tolerance: f64,
    pub pass: bool,
}

/// Largest nearest-neighbour distance from `from` into `to`; exact above
/// `radius` by falling back to a linear scan.
fn max_nearest(from: &[LabeledRectangle], to: &[LabeledRectangle], radius: f64) -> f64 {
    let idx = RectIndex::from_rects(radius, to.iter().copied());
    from.iter()
        .map(|r| match idx.nearest_within(r, radius) {
            Some((_, d)) => d,
            None => to.iter().map(|q| q.distance(r)).fold(f64::INFINITY, f64::min),
        })
        .fold(0.0, f64::max)
}

/// Every traced sample rectangle, all components.
pub fn traced_rectangles(trace: &TraceResult) -> Vec<LabeledRectangle> {
    trace.components.iter().flat_map(|c| c.samples.iter().map(|s| s.rect)).collect()
}

pub fn oracle_check(p: &Polygon, trace: &TraceResult, grid: usize) -> OracleCheck {
    let hits = sample_all(p, grid);
    let samples = traced_rectangles(trace);
    let hit_tolerance = 10.0 * trace.config.h_max;
    let trace_tolerance = 2.0 * p.perimeter() / (grid.max(2) * p.len()) as f64;
    let max_hit_to_trace = max_nearest(&hits, &samples, hit_tolerance);
    let max_trace_to_hit = max_nearest(&samples, &hits, trace_tolerance);
    OracleCheck {
        grid,
        hits: hits.len(),
        max_hit_to_trace,
        hit_tolerance,
        max_trace_to_hit,
        trace_tolerance,
        pass: max_hit_to_trace <= hit_tolerance && max_trace_to_hit <= trace_tolerance,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub config: RunConfig,
    pub trace_config: TraceConfig,
    pub delta_plus: usize,
    pub arcs: usize,
    pub loops: usize,
    pub structure_pass: bool,
    pub components: Vec<ComponentSummary>,
    pub oracle: Option<OracleCheck>,
}

pub fn trace_report(p: &Polygon, trace: &TraceResult, cfg: &RunConfig) -> TraceReport {
    let components = trace
        .components
        .iter()
        .map(|c| ComponentSummary {
            class: c.class,
            shift: c.shift,
            orbit: c.orbit,
            endpoints: c.endpoints.map(|e| e.to_vec()).unwrap_or_default(),
            samples: c.samples.len(),
            length: c.length(),
            charts: c.charts.len(),
            node_passed: c.node_passed,
        })
        .collect();
    let arcs = trace.arcs().count();
    TraceReport {
        config: cfg.clone(),
        trace_config: trace.config,
        delta_plus: trace.delta_plus(),
        arcs,
        loops: trace.loops().count(),
        structure_pass: arcs == 2 * trace.delta_plus(),
        components,
        oracle: cfg.grid.map(|n| oracle_check(p, trace, n)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferentialRow {
    pub component: usize,
    #[serde(flatten)]
    pub check: DifferentialCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub config: RunConfig,
    pub trace_config: TraceConfig,
    pub area: f64,
    pub tolerance: f64,
    pub components: Vec<SweepReport>,
    pub differential: Vec<DifferentialRow>,
    pub pass: bool,
}

/// Stencil cap for the differential check, relative to the perimeter.
pub const DIFFERENTIAL_CAP: f64 = 0.005;

pub fn verify_report(p: &Polygon, trace: &TraceResult, cfg: &RunConfig) -> VerifyReport {
    let tol = sweep_tolerance(p, &trace.config);
    let mut components = vec![];
    let mut differential = vec![];
    let mut pass = true;
    for (i, c) in trace.components.iter().enumerate() {
        let s = verify_sweep(p, c, tol).unwrap_or(SweepReport {
            class: c.class,
            shape_area: f64::NAN,
            target: if c.class == ComponentClass::Hyperbolic { p.area() } else { 0.0 },
            residual: f64::INFINITY,
            pass: false,
        });
        pass &= s.pass;
        components.push(s);
        let h = differential_step(c, DIFFERENTIAL_CAP * p.perimeter());
        let d = check_differential(p, c, &trace.config, h);
        pass &= d.pass;
        differential.push(DifferentialRow { component: i, check: d });
    }
    VerifyReport { config: cfg.clone(), trace_config: trace.config, area: p.area(), tolerance: tol, components, differential, pass }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidencesReport {
    pub config: RunConfig,
    #[serde(flatten)]
    pub report: CoincidenceReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateReport {
    pub config: RunConfig,
    pub generator: GeneratorConfig,
    pub files: Vec<String>,
    pub delta_plus: Vec<usize>,
}

/// A file produced by a command.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

/// Result of a command: the JSON report, extra files and the exit status.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: String,
    pub artifacts: Vec<Artifact>,
    pub exit_code: i32,
}

fn artifact(name: &str, contents: String) -> Artifact {
    Artifact { name: name.into(), contents }
}

fn load(cfg: &RunConfig) -> Result<Polygon, ReportError> {
    read_polygon(cfg.input.as_deref().ok_or(ReportError::MissingInput)?)
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, ReportError> {
    if !(cfg.step_scale > 0.0 && cfg.step_scale.is_finite()) {
        return Err(ReportError::BadOption(format!("step scale {}", cfg.step_scale)));
    }
    match cfg.command {
        Command::Diameters => {
            let p = load(cfg)?;
            let rep = diameters_report(&p, cfg);
            let mut artifacts = vec![];
            if cfg.svg {
                artifacts.push(artifact("diameters.svg", diameters_svg(&p)));
            }
            let report = to_json(&rep);
            artifacts.push(artifact("diameters.json", report.clone()));
            Ok(Outcome { report, artifacts, exit_code: EXIT_OK })
        }
        Command::Trace => {
            let p = load(cfg)?;
            let trace = trace_all(&p, &cfg.trace_config(&p))?;
            let rep = trace_report(&p, &trace, cfg);
            let mut artifacts = vec![];
            if cfg.dump {
                let dump: Vec<ComponentDump> = trace.components.iter().map(|c| component_dump(c, p.len())).collect();
                artifacts.push(artifact("trace_dump.json", to_json(&dump)));
            }
            if cfg.svg {
                artifacts.push(artifact("shapes.svg", shape_curves_svg(&trace)));
            }
            let ok = rep.structure_pass && rep.oracle.is_none_or(|o| o.pass);
            let report = to_json(&rep);
            artifacts.push(artifact("trace.json", report.clone()));
            Ok(Outcome { report, artifacts, exit_code: if ok { EXIT_OK } else { EXIT_VERIFY } })
        }
        Command::Verify => {
            let p = load(cfg)?;
            let trace = trace_all(&p, &cfg.trace_config(&p))?;
            let rep = verify_report(&p, &trace, cfg);
            let report = to_json(&rep);
            let mut artifacts = vec![artifact("verify.json", report.clone())];
            if cfg.svg {
                artifacts.push(artifact("shapes.svg", shape_curves_svg(&trace)));
            }
            Ok(Outcome { report, artifacts, exit_code: if rep.pass { EXIT_OK } else { EXIT_VERIFY } })
        }
        Command::Coincidences => {
            let p = load(cfg)?;
            let trace = trace_all(&p, &cfg.trace_config(&p))?;
            let rep = CoincidencesReport { config: cfg.clone(), report: count_m(&p, &trace) };
            let ok = rep.report.pass_generic && rep.report.pass_nontricky;
            let report = to_json(&rep);
            let mut artifacts = vec![artifact("coincidences.json", report.clone())];
            if cfg.svg {
                artifacts.push(artifact("shapes.svg", shape_curves_svg(&trace)));
            }
            Ok(Outcome { report, artifacts, exit_code: if ok { EXIT_OK } else { EXIT_VERIFY } })
        }
        Command::Generate => {
            let gen = GeneratorConfig::new(cfg.vertices);
            let polys = generate(&gen, cfg.count, cfg.seed)?;
            let mut artifacts = vec![];
            let mut files = vec![];
            for (k, p) in polys.iter().enumerate() {
                let name = format!("polygon_{k:04}.json");
                artifacts.push(artifact(&name, polygon_json(p)));
                if cfg.svg {
                    artifacts.push(artifact(&format!("polygon_{k:04}.svg"), diameters_svg(p)));
                }
                files.push(name);
            }
            let rep = GenerateReport {
                config: cfg.clone(),
                generator: gen,
                files,
                delta_plus: polys.iter().map(crate::diameters::delta_plus).collect(),
            };
            let report = to_json(&rep);
            artifacts.push(artifact("generate.json", report.clone()));
            Ok(Outcome { report, artifacts, exit_code: EXIT_OK })
        }
    }
}

/// Writes every artifact into `dir`, creating it if needed.
pub fn write_artifacts(dir: &Path, outcome: &Outcome) -> Result<(), ReportError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ReportError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    for a in &outcome.artifacts {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.contents).map_err(io(&path))?;
    }
    Ok(())
}

/// Affine map from a bounding box into the 1000-unit viewport, y up.
struct View {
    scale: f64,
    x0: f64,
    y0: f64,
    ox: f64,
    oy: f64,
}

const VIEWPORT: f64 = 1000.0;
const MARGIN: f64 = 50.0;

impl View {
    fn fit(min: (f64, f64), max: (f64, f64)) -> Self {
        let w = (max.0 - min.0).max(1e-12);
        let h = (max.1 - min.1).max(1e-12);
        let inner = VIEWPORT - 2.0 * MARGIN;
        let scale = inner / w.max(h);
        let ox = MARGIN + 0.5 * (inner - w * scale);
        let oy = MARGIN + 0.5 * (inner - h * scale);
        Self { scale, x0: min.0, y0: min.1, ox, oy }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (self.ox + (x - self.x0) * self.scale, VIEWPORT - (self.oy + (y - self.y0) * self.scale))
    }

    fn path(&self, pts: impl IntoIterator<Item = (f64, f64)>, close: bool) -> String {
        let mut d = String::new();
        for (k, (x, y)) in pts.into_iter().enumerate() {
            let (u, v) = self.map(x, y);
            d.push_str(&format!("{}{:.2},{:.2} ", if k == 0 { 'M' } else { 'L' }, u, v));
        }
        if close {
            d.push('Z');
        }
        d.trim_end().to_string()
    }
}

fn svg_open() -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {v} {v}\" width=\"{v}\" height=\"{v}\">\n\
         <rect x=\"0\" y=\"0\" width=\"{v}\" height=\"{v}\" style=\"fill:#ffffff;stroke:none\"/>\n",
        v = VIEWPORT
    )
}

/// The polygon with its diameters: positive in red, negative dashed gray.
pub fn diameters_svg(p: &Polygon) -> String {
    let vs = p.vertices();
    let min = vs.iter().fold((f64::INFINITY, f64::INFINITY), |m, v| (m.0.min(v.x), m.1.min(v.y)));
    let max = vs.iter().fold((f64::NEG_INFINITY, f64::NEG_INFINITY), |m, v| (m.0.max(v.x), m.1.max(v.y)));
    let view = View::fit(min, max);
    let mut s = svg_open();
    s.push_str(&format!(
        "<path d=\"{}\" style=\"fill:#eef2f7;stroke:#1f2937;stroke-width:3;stroke-linejoin:round\"/>\n",
        view.path(vs.iter().map(|v| (v.x, v.y)), true)
    ));
    for d in &analyze(p).diameters {
        let style = match d.orientation {
            Orientation::Positive => "stroke:#c0392b;stroke-width:3",
            Orientation::Negative => "stroke:#7f8c8d;stroke-width:2;stroke-dasharray:8,6",
        };
        let (a, b) = (view.map(d.q1.point.x, d.q1.point.y), view.map(d.q2.point.x, d.q2.point.y));
        s.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" style=\"{style}\"/>\n",
            a.0, a.1, b.0, b.1
        ));
    }
    for v in vs {
        let (x, y) = view.map(v.x, v.y);
        s.push_str(&format!("<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"4\" style=\"fill:#1f2937\"/>\n"));
    }
    s.push_str("</svg>\n");
    s
}

fn class_color(c: ComponentClass) -> &'static str {
    match c {
        ComponentClass::Hyperbolic => "#2563eb",
        ComponentClass::NullX | ComponentClass::NullY => "#16a34a",
        ComponentClass::Loop => "#9333ea",
    }
}

/// Shape curves in the `(X, Y)` quadrant with axes; each closed shape loop is
/// shaded. One curve per orbit and swap (half-turn relabelings coincide).
pub fn shape_curves_svg(trace: &TraceResult) -> String {
    let comps: Vec<&ArcComponent> = trace.components.iter().filter(|c| c.shift < 2).collect();
    let mut hi: f64 = 0.0;
    for c in &comps {
        for s in &c.samples {
            hi = hi.max(s.rect.x).max(s.rect.y);
        }
    }
    let view = View::fit((0.0, 0.0), (hi.max(1e-12), hi.max(1e-12)));
    let mut s = svg_open();
    let (o, xe, ye) = (view.map(0.0, 0.0), view.map(hi, 0.0), view.map(0.0, hi));
    for (a, b) in [(o, xe), (o, ye)] {
        s.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" style=\"stroke:#111827;stroke-width:2\"/>\n",
            a.0, a.1, b.0, b.1
        ));
    }
    for c in &comps {
        let color = class_color(c.class);
        if let Ok(lp) = shape_loop(&shape_curve(c)) {
            s.push_str(&format!(
                "<path d=\"{}\" style=\"fill:{color};fill-opacity:0.12;stroke:none;fill-rule:evenodd\"/>\n",
                view.path(lp.chain.iter().copied(), true)
            ));
        }
        let pts = c.samples.iter().map(|q| (q.rect.x, q.rect.y));
        s.push_str(&format!(
            "<path d=\"{}\" style=\"fill:none;stroke:{color};stroke-width:2;stroke-linejoin:round\"/>\n",
            view.path(pts, c.is_loop())
        ));
    }
    s.push_str("</svg>\n");
    s
}
