//! Problem files, the end-to-end pipeline, JSON reports and DOT exports.
//!
//! Vertex ids are 1-based in every file this module reads or writes and
//! 0-based inside the library; vertex `k` in a file is vertex `k - 1` in code.
//! Face ids are 0-based in both, with the outer face always at 0.

use crate::embedding::{
    build_flow_graph, embed_from_coords, embed_from_rotation, resolve_outer, triangulate,
    OuterFaceHint, PlanarEmbedding, TriangulatedGraph,
};
use crate::extract::{extract, extract_between, Disjointness, Extraction, DEFAULT_ATTEMPTS};
use crate::flowfield::{
    net_flux, probability_current, stationary_distribution, NetFluxField, StationaryDistribution,
    TransitionMatrix,
};
use crate::partition::{brute_force_cmax, stirling2, Part, ThreePartition, DEFAULT_MAX_N};
use crate::potential::{compute_psi, extrema_pairs, max_circulation, CurlPotential};
use crate::tolerance::Tolerances;
use crate::Error;
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error as ThisError;

/// Iteration cap for the power-iteration fallback of the stationary solve.
pub const STATIONARY_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, PartialEq, ThisError)]
pub enum CliError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed problem file: {0}")]
    Parse(String),
    #[error("invalid problem file: {0}")]
    Schema(String),
    #[error("report is inconsistent: {0}")]
    Report(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Parse(_) => "parse",
            CliError::Schema(_) => "schema",
            CliError::Report(_) => "report_inconsistent",
        }
    }
}

/// Outer-face designation as written in a file: a face id or a 1-based
/// boundary cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OuterFaceSpec {
    Index(usize),
    Cycle(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemOptions {
    pub tolerances: Tolerances,
    /// Also triangulate the outer face.
    pub include_outer: bool,
    /// Restrict brute-force checks to partitions with connected parts.
    pub connected_only: bool,
    /// Project the field onto its divergence-free part before validation.
    pub center_flux: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition_matrix: Option<Vec<Vec<f64>>>,
    /// `(u, v, flux)` with `F_uv = flux`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux_edges: Option<Vec<(usize, usize, f64)>>,
    /// Vertex count for `flux_edges` input; defaults to the largest id used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<[f64; 2]>>,
    /// Counterclockwise neighbour list per vertex. Takes precedence over coords.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_face: Option<OuterFaceSpec>,
    /// Chords inserted before the automatic fan triangulation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chords: Option<Vec<(usize, usize)>>,
    #[serde(default)]
    pub options: ProblemOptions,
}

impl ProblemFile {
    /// Vertex count implied by the file.
    pub fn vertex_count(&self) -> usize {
        if let Some(rows) = &self.transition_matrix {
            return rows.len();
        }
        let from_edges = self
            .flux_edges
            .iter()
            .flatten()
            .map(|&(u, v, _)| u.max(v))
            .max()
            .unwrap_or(0);
        self.n.unwrap_or(from_edges)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        match (&self.transition_matrix, &self.flux_edges) {
            (Some(_), Some(_)) => {
                return Err(CliError::Schema(
                    "give either transition_matrix or flux_edges, not both".into(),
                ))
            }
            (None, None) => {
                return Err(CliError::Schema("one of transition_matrix or flux_edges is required".into()))
            }
            _ => {}
        }
        if self.coords.is_none() && self.rotation.is_none() {
            return Err(CliError::Schema("one of coords or rotation is required".into()));
        }
        let n = self.vertex_count();
        if self.transition_matrix.is_some() && self.n.is_some_and(|k| k != n) {
            return Err(CliError::Schema(format!("n = {} disagrees with a {n}-row matrix", self.n.unwrap())));
        }
        let check = |v: usize, what: &str| {
            if v == 0 || v > n {
                Err(CliError::Schema(format!("{what} refers to vertex {v}, expected 1..={n}")))
            } else {
                Ok(())
            }
        };
        for &(u, v, _) in self.flux_edges.iter().flatten() {
            check(u, "flux_edges")?;
            check(v, "flux_edges")?;
        }
        for &v in self.rotation.iter().flatten().flatten() {
            check(v, "rotation")?;
        }
        for &(u, v) in self.chords.iter().flatten() {
            check(u, "chords")?;
            check(v, "chords")?;
        }
        if let Some(OuterFaceSpec::Cycle(cycle)) = &self.outer_face {
            for &v in cycle {
                check(v, "outer_face")?;
            }
        }
        Ok(())
    }

    fn outer_hint(&self) -> Option<OuterFaceHint> {
        self.outer_face.as_ref().map(|spec| match spec {
            OuterFaceSpec::Index(i) => OuterFaceHint::Index(*i),
            OuterFaceSpec::Cycle(c) => OuterFaceHint::Cycle(c.iter().map(|v| v - 1).collect()),
        })
    }
}

/// Parses and validates a problem file.
pub fn parse_problem(text: &str) -> Result<ProblemFile, CliError> {
    let problem: ProblemFile = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    problem.validate()?;
    Ok(problem)
}

pub fn read_problem(path: &Path) -> Result<ProblemFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_problem(&text)
}

/// Flux field of a problem together with its Markov provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedField {
    pub field: NetFluxField,
    pub stationary: Option<StationaryDistribution>,
    pub stationary_residual: Option<f64>,
    pub centered: bool,
}

/// Derives the net-flux field and checks it is divergence-free.
pub fn load_field(problem: &ProblemFile, tol: &Tolerances, center: bool) -> Result<LoadedField, Error> {
    let (mut field, stationary, residual) = if let Some(rows) = &problem.transition_matrix {
        let tm = TransitionMatrix::from_rows(rows, tol.row)?;
        let pi = stationary_distribution(&tm, tol.fixed_point, STATIONARY_MAX_ITER)?;
        let residual = pi.residual(&tm);
        let p = probability_current(&tm, &pi)?;
        (net_flux(&p, tol.flux_snap), Some(pi), Some(residual))
    } else {
        let edges: Vec<(usize, usize, f64)> = problem
            .flux_edges
            .iter()
            .flatten()
            .map(|&(u, v, w)| (u - 1, v - 1, w))
            .collect();
        (NetFluxField::from_edges(problem.vertex_count(), &edges)?, None, None)
    };
    if center {
        field = field.centered().snapped(tol.flux_snap);
    }
    field.check_divergence_free(tol.divergence)?;
    Ok(LoadedField { field, stationary, stationary_residual: residual, centered: center })
}

/// Planar embedding of the field's support as described by the problem.
pub fn embed_problem(problem: &ProblemFile, field: &NetFluxField) -> Result<PlanarEmbedding, Error> {
    let g = build_flow_graph(field)?;
    let hint = problem.outer_hint();
    if let Some(rotation) = &problem.rotation {
        let rot: Vec<Vec<usize>> = rotation.iter().map(|r| r.iter().map(|v| v - 1).collect()).collect();
        return Ok(embed_from_rotation(&g, &rot, hint.as_ref())?);
    }
    let coords = problem.coords.as_deref().unwrap_or_default();
    let emb = embed_from_coords(&g, coords)?;
    match hint {
        Some(h) => {
            let outer = resolve_outer(&emb, &h)?;
            Ok(emb.reroot_outer_face(outer)?)
        }
        None => Ok(emb),
    }
}

/// Triangulated embedding, honouring forced chords.
pub fn triangulate_problem(
    problem: &ProblemFile,
    emb: &PlanarEmbedding,
    include_outer: bool,
) -> Result<TriangulatedGraph, Error> {
    let forced: Vec<(usize, usize)> =
        problem.chords.iter().flatten().map(|&(u, v)| (u - 1, v - 1)).collect();
    Ok(triangulate(emb, include_outer, &forced)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AnalyzeFlags {
    pub brute_check: bool,
    pub include_outer: bool,
    pub center_flux: bool,
    pub tol: Option<f64>,
    pub all_extrema: bool,
}

/// Effective tolerances and switches after merging file options and flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub tolerances: Tolerances,
    pub include_outer: bool,
    pub connected_only: bool,
    pub center_flux: bool,
}

impl Settings {
    pub fn resolve(options: &ProblemOptions, flags: &AnalyzeFlags) -> Self {
        Settings {
            tolerances: flags.tol.map(Tolerances::uniform).unwrap_or(options.tolerances),
            include_outer: options.include_outer || flags.include_outer,
            connected_only: options.connected_only,
            center_flux: options.center_flux || flags.center_flux,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alternative {
    pub min_face: usize,
    pub max_face: usize,
    pub outcome: Result<Extraction, Error>,
}

/// Every intermediate result of one pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub settings: Settings,
    pub loaded: LoadedField,
    pub embedding: PlanarEmbedding,
    pub triangulated: TriangulatedGraph,
    pub psi: CurlPotential,
    pub extraction: Extraction,
    pub alternatives: Option<Vec<Alternative>>,
    pub brute_force: Option<crate::partition::BruteForceResult>,
}

/// Runs the whole pipeline on a validated problem.
pub fn analyze(problem: &ProblemFile, flags: &AnalyzeFlags) -> Result<Analysis, Error> {
    let settings = Settings::resolve(&problem.options, flags);
    let tol = settings.tolerances;
    let loaded = load_field(problem, &tol, settings.center_flux)?;
    let embedding = embed_problem(problem, &loaded.field)?;
    let triangulated = triangulate_problem(problem, &embedding, settings.include_outer)?;
    let psi = compute_psi(&triangulated.dual, tol.potential)?;
    log::info!(
        "faces: {}, gap {:e} between f{} and f{}",
        psi.len(),
        max_circulation(&psi),
        psi.face_min(),
        psi.face_max()
    );
    let extraction = extract(&triangulated, &loaded.field, &psi, tol.potential)?;
    let alternatives = flags.all_extrema.then(|| {
        extrema_pairs(&psi, tol.potential)
            .into_iter()
            .map(|(lo, hi)| Alternative {
                min_face: lo,
                max_face: hi,
                outcome: extract_between(
                    &triangulated,
                    &loaded.field,
                    &psi,
                    lo,
                    hi,
                    tol.potential,
                    DEFAULT_ATTEMPTS,
                )
                .map_err(Error::from),
            })
            .collect()
    });
    let brute_force = if flags.brute_check {
        Some(brute_force_cmax(&loaded.field, settings.connected_only, DEFAULT_MAX_N)?)
    } else {
        None
    };
    Ok(Analysis {
        settings,
        loaded,
        embedding,
        triangulated,
        psi,
        extraction,
        alternatives,
        brute_force,
    })
}

fn one_based(vs: &[usize]) -> Vec<usize> {
    vs.iter().map(|v| v + 1).collect()
}

fn parts_of(p: &ThreePartition) -> [Vec<usize>; 3] {
    Part::ALL.map(|part| one_based(&p.members(part)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryReport {
    pub distribution: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxEdgeReport {
    pub tail: usize,
    pub head: usize,
    pub flux: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxSummary {
    pub edges: Vec<FluxEdgeReport>,
    pub total_positive: f64,
    pub max_divergence: f64,
    pub markov_normalized: bool,
    pub centered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeReport {
    pub tail: usize,
    pub head: usize,
    pub flux: f64,
    pub chord: bool,
    pub left_face: usize,
    pub right_face: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub vertices: usize,
    pub edges: Vec<EdgeReport>,
    pub chords: Vec<[usize; 2]>,
    pub include_outer: bool,
    pub euler_characteristic: i64,
    pub faces_before_triangulation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceReport {
    pub id: usize,
    pub vertices: Vec<usize>,
    pub psi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremaReport {
    pub min_face: usize,
    pub max_face: usize,
    pub psi_min: f64,
    pub psi_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathReport {
    pub faces: Vec<usize>,
    pub crossed_edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub parts: [Vec<usize>; 3],
    pub connected_in_support: [bool; 3],
    pub disjointness: Disjointness,
    pub attempts: usize,
    pub paths: Vec<PathReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub circulation: f64,
    pub gap: f64,
    pub residual: f64,
    /// A→B, B→C, C→A.
    pub pairwise_fluxes: [f64; 3],
    pub boundary_sizes: [usize; 3],
    pub density_fluxes: [Option<f64>; 3],
    pub f_min: f64,
    pub f_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlternativeReport {
    pub min_face: usize,
    pub max_face: usize,
    pub parts: Option<[Vec<usize>; 3]>,
    pub circulation: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceReport {
    pub n: usize,
    pub connected_only: bool,
    pub value: f64,
    pub parts: [Vec<usize>; 3],
    pub examined: u64,
    pub feasible: u64,
    pub search_space: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteComparison {
    #[serde(flatten)]
    pub result: BruteForceReport,
    /// Brute-force optimum minus the potential gap.
    pub excess_over_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub n: usize,
    pub settings: Settings,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stationary: Option<StationaryReport>,
    pub flux: FluxSummary,
    pub embedding: EmbeddingReport,
    pub faces: Vec<FaceReport>,
    pub extrema: ExtremaReport,
    pub max_circulation: f64,
    pub partition: PartitionReport,
    pub verification: VerificationReport,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alternatives: Option<Vec<AlternativeReport>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub brute_force: Option<BruteComparison>,
    pub timing_ms: f64,
}

fn brute_report(f: &NetFluxField, r: &crate::partition::BruteForceResult, connected_only: bool) -> BruteForceReport {
    BruteForceReport {
        n: f.n(),
        connected_only,
        value: r.value,
        parts: parts_of(&r.best),
        examined: r.examined,
        feasible: r.feasible,
        search_space: stirling2(f.n(), 3),
    }
}

impl Analysis {
    pub fn report(&self, timing_ms: f64) -> AnalysisReport {
        let f = &self.loaded.field;
        let emb = &self.triangulated.embedding;
        let gap = max_circulation(&self.psi);
        let flux_edges = build_flow_graph(f)
            .map(|g| {
                g.edges()
                    .iter()
                    .map(|e| FluxEdgeReport { tail: e.tail + 1, head: e.head + 1, flux: e.weight })
                    .collect()
            })
            .unwrap_or_default();
        let edges = emb
            .edges()
            .iter()
            .enumerate()
            .map(|(e, edge)| EdgeReport {
                tail: edge.tail + 1,
                head: edge.head + 1,
                flux: edge.flux,
                chord: edge.chord,
                left_face: emb.left_face(e),
                right_face: emb.right_face(e),
            })
            .collect();
        let faces = (0..emb.face_count())
            .map(|id| FaceReport { id, vertices: one_based(&emb.face_vertices(id)), psi: self.psi.value(id) })
            .collect();
        let ex = &self.extraction;
        let paths = ex
            .triple
            .paths
            .iter()
            .map(|p| PathReport {
                faces: p.faces.clone(),
                crossed_edges: p
                    .edges
                    .iter()
                    .map(|&e| [emb.edges()[e].tail + 1, emb.edges()[e].head + 1])
                    .collect(),
            })
            .collect();
        let r = &ex.report;
        let chords = self.triangulated.chord_pairs();
        AnalysisReport {
            n: f.n(),
            settings: self.settings,
            stationary: self.loaded.stationary.as_ref().map(|pi| StationaryReport {
                distribution: pi.probabilities().to_vec(),
                residual: self.loaded.stationary_residual.unwrap_or(0.0),
            }),
            flux: FluxSummary {
                edges: flux_edges,
                total_positive: f.total_positive(),
                max_divergence: f.max_divergence(),
                markov_normalized: f.is_markov_normalized(self.settings.tolerances.row),
                centered: self.loaded.centered,
            },
            embedding: EmbeddingReport {
                vertices: emb.n(),
                edges,
                chords: chords.iter().map(|&(u, v)| [u + 1, v + 1]).collect(),
                include_outer: self.triangulated.include_outer,
                euler_characteristic: emb.euler_characteristic(),
                faces_before_triangulation: self.embedding.face_count(),
            },
            faces,
            extrema: ExtremaReport {
                min_face: self.psi.face_min(),
                max_face: self.psi.face_max(),
                psi_min: self.psi.psi_min(),
                psi_max: self.psi.psi_max(),
            },
            max_circulation: gap,
            partition: PartitionReport {
                parts: parts_of(&ex.partition),
                connected_in_support: ex.connected_in_support,
                disjointness: ex.triple.class,
                attempts: ex.attempts,
                paths,
            },
            verification: VerificationReport {
                circulation: r.circulation,
                gap,
                residual: (r.circulation - gap).abs(),
                pairwise_fluxes: r.pairwise_fluxes,
                boundary_sizes: [0, 1, 2].map(|k| r.boundaries[k].len()),
                density_fluxes: [0, 1, 2].map(|k| (!r.density_undefined[k]).then_some(r.density_fluxes[k])),
                f_min: r.f_min,
                f_max: r.f_max,
            },
            alternatives: self.alternatives.as_ref().map(|alts| {
                alts.iter()
                    .map(|a| match &a.outcome {
                        Ok(x) => AlternativeReport {
                            min_face: a.min_face,
                            max_face: a.max_face,
                            parts: Some(parts_of(&x.partition)),
                            circulation: Some(x.report.circulation),
                            error: None,
                        },
                        Err(e) => AlternativeReport {
                            min_face: a.min_face,
                            max_face: a.max_face,
                            parts: None,
                            circulation: None,
                            error: Some(e.kind().to_string()),
                        },
                    })
                    .collect()
            }),
            brute_force: self.brute_force.as_ref().map(|b| BruteComparison {
                result: brute_report(f, b, self.settings.connected_only),
                excess_over_gap: b.value - gap,
            }),
            timing_ms,
        }
    }
}

/// Re-checks a report on its own terms: the partition is a valid 3-partition
/// of its vertices, every listed edge closes against the face potentials, and
/// the partition circulation equals the potential gap.
pub fn check_report(report: &AnalysisReport) -> Result<(), Error> {
    let n = report.n;
    let zero: [Vec<usize>; 3] = report.partition.parts.clone().map(|p| p.iter().map(|v| v.wrapping_sub(1)).collect());
    let partition = ThreePartition::from_parts(n, [&zero[0], &zero[1], &zero[2]])?;
    let tol = report.settings.tolerances.potential;
    let psi: Vec<f64> = report.faces.iter().map(|f| f.psi).collect();
    for (k, face) in report.faces.iter().enumerate() {
        if face.id != k {
            return Err(CliError::Report(format!("face {k} listed with id {}", face.id)).into());
        }
    }
    for e in &report.embedding.edges {
        let (l, r) = (e.left_face, e.right_face);
        if l >= psi.len() || r >= psi.len() {
            return Err(CliError::Report(format!("edge {}-{} names a missing face", e.tail, e.head)).into());
        }
        let residual = psi[l] - psi[r] - e.flux;
        if residual.abs() > tol {
            return Err(CliError::Report(format!(
                "edge {}-{} fails to close by {residual:e}",
                e.tail, e.head
            ))
            .into());
        }
    }
    let edges: Vec<(usize, usize, f64)> = report
        .embedding
        .edges
        .iter()
        .filter(|e| !e.chord)
        .map(|e| (e.tail - 1, e.head - 1, e.flux))
        .collect();
    let field = NetFluxField::from_edges(n, &edges)?;
    let c = crate::partition::circulation(&field, &partition, tol * edges.len().max(1) as f64)?;
    let slack = tol * report.embedding.edges.len().max(1) as f64;
    if (c.circulation - report.max_circulation).abs() > slack {
        return Err(CliError::Report(format!(
            "partition circulation {} differs from gap {}",
            c.circulation, report.max_circulation
        ))
        .into());
    }
    Ok(())
}

/// Brute-force search on the problem's field.
pub fn brute_force(problem: &ProblemFile, connected: bool, max_n: usize) -> Result<BruteForceReport, Error> {
    let tol = problem.options.tolerances;
    let loaded = load_field(problem, &tol, problem.options.center_flux)?;
    let connected_only = connected || problem.options.connected_only;
    let r = brute_force_cmax(&loaded.field, connected_only, max_n)?;
    Ok(brute_report(&loaded.field, &r, connected_only))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DotKind {
    Flux,
    Dual,
    Triangulated,
    Partition,
}

const PART_COLORS: [&str; 3] = ["#e06666", "#6fa8dc", "#93c47d"];

/// DOT rendering of one stage of the pipeline. Output depends only on the
/// problem, so repeated exports are byte-identical.
pub fn export_dot(problem: &ProblemFile, what: DotKind) -> Result<String, Error> {
    let settings = Settings::resolve(&problem.options, &AnalyzeFlags::default());
    let loaded = load_field(problem, &settings.tolerances, settings.center_flux)?;
    let f = &loaded.field;
    let mut out = String::new();
    match what {
        DotKind::Flux => {
            let g = build_flow_graph(f)?;
            out.push_str("digraph flux {\n  node [shape=circle];\n");
            for v in 0..f.n() {
                let _ = writeln!(out, "  {};", v + 1);
            }
            for e in g.edges() {
                let _ = writeln!(out, "  {} -> {} [label=\"{}\"];", e.tail + 1, e.head + 1, e.weight);
            }
            out.push_str("}\n");
        }
        DotKind::Triangulated => {
            let emb = embed_problem(problem, f)?;
            let t = triangulate_problem(problem, &emb, settings.include_outer)?;
            out.push_str("graph triangulated {\n  node [shape=circle];\n");
            for v in 0..f.n() {
                let _ = writeln!(out, "  {};", v + 1);
            }
            for e in t.embedding.edges() {
                if e.chord {
                    let _ = writeln!(out, "  {} -- {} [style=dashed, label=\"0\"];", e.tail + 1, e.head + 1);
                } else {
                    let _ = writeln!(out, "  {} -- {} [label=\"{}\"];", e.tail + 1, e.head + 1, e.flux);
                }
            }
            out.push_str("}\n");
        }
        DotKind::Dual => {
            let emb = embed_problem(problem, f)?;
            let t = triangulate_problem(problem, &emb, settings.include_outer)?;
            let psi = compute_psi(&t.dual, settings.tolerances.potential).ok();
            out.push_str("graph dual {\n  node [shape=box];\n");
            for face in 0..t.embedding.face_count() {
                match &psi {
                    Some(p) => {
                        let _ = writeln!(out, "  f{face} [label=\"f{face}\\npsi={}\"];", p.value(face));
                    }
                    None => {
                        let _ = writeln!(out, "  f{face} [label=\"f{face}\"];");
                    }
                }
            }
            for d in t.dual.edges() {
                let pe = &t.embedding.edges()[d.primal];
                let _ = writeln!(
                    out,
                    "  f{} -- f{} [label=\"{}-{}: {}\"];",
                    d.right,
                    d.left,
                    pe.tail + 1,
                    pe.head + 1,
                    d.flux
                );
            }
            out.push_str("}\n");
        }
        DotKind::Partition => {
            let a = analyze(problem, &AnalyzeFlags::default())?;
            let p = &a.extraction.partition;
            out.push_str("graph partition {\n  node [shape=circle, style=filled];\n");
            for v in 0..f.n() {
                let part = p.label(v);
                let _ = writeln!(
                    out,
                    "  {} [fillcolor=\"{}\", label=\"{} ({})\"];",
                    v + 1,
                    PART_COLORS[part.index()],
                    v + 1,
                    part
                );
            }
            for e in a.triangulated.embedding.edges().iter().filter(|e| !e.chord) {
                let _ = writeln!(out, "  {} -- {} [label=\"{}\"];", e.tail + 1, e.head + 1, e.flux);
            }
            out.push_str("}\n");
        }
    }
    Ok(out)
}

#[derive(Debug, Parser)]
#[command(name = "circa", version, about = "Macroscopic circulation of Markov flow on planar graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full pipeline and print a JSON report.
    Analyze {
        file: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Compare against an exhaustive search over all 3-partitions.
        #[arg(long)]
        brute_check: bool,
        #[arg(long)]
        include_outer: bool,
        /// Project the flux onto its divergence-free part first.
        #[arg(long)]
        center_flux: bool,
        /// Override every comparison tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Also extract partitions for every tied pair of extremal faces.
        #[arg(long)]
        all_extrema: bool,
    },
    /// Exhaustive maximal circulation over all 3-partitions.
    BruteForce {
        file: PathBuf,
        #[arg(long)]
        connected: bool,
        #[arg(long, default_value_t = DEFAULT_MAX_N)]
        max_n: usize,
    },
    /// Graphviz rendering of one pipeline stage.
    ExportDot {
        file: PathBuf,
        #[arg(long, value_enum)]
        what: DotKind,
    },
}

impl Error {
    /// Process exit code: 1 for malformed or invalid input, 2 for failures
    /// inside the pipeline.
    pub fn exit_code(&self) -> i32 {
        use crate::embedding::EmbeddingError as E;
        use crate::flowfield::FlowError as F;
        use crate::partition::PartitionError as P;
        let validation = match self {
            Error::Cli(e) => !matches!(e, CliError::Report(_)),
            Error::Flow(e) => matches!(
                e,
                F::BadShape { .. }
                    | F::NonFinite { .. }
                    | F::NegativeEntry { .. }
                    | F::RowSum { .. }
                    | F::DimensionMismatch { .. }
                    | F::NotAntisymmetric { .. }
                    | F::BadEdge { .. }
            ),
            Error::Embedding(e) => matches!(
                e,
                E::BadCoords(_)
                    | E::BadRotation { .. }
                    | E::BadChord { .. }
                    | E::MissingOuterFace
                    | E::OuterFaceNotFound
                    | E::AmbiguousOuterFace
                    | E::NoSuchFace(_)
            ),
            Error::Partition(e) => matches!(
                e,
                P::BadLength { .. } | P::EmptyPart(_) | P::BadVertex { .. } | P::TooLarge { .. }
            ),
            Error::Potential(_) | Error::Extract(_) => false,
        };
        if validation {
            1
        } else {
            2
        }
    }

    /// `{"error": {"module", "kind", "message"}}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "error": {
                "module": self.module(),
                "kind": self.kind(),
                "message": self.to_string(),
            }
        })
    }
}

fn emit(out: &mut dyn Write, text: &str) -> i32 {
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Ok(()) => 0,
        Err(e) => {
            log::error!("cannot write output: {e}");
            2
        }
    }
}

fn fail(out: &mut dyn Write, err: Error) -> i32 {
    log::error!("{err}");
    let text = serde_json::to_string_pretty(&err.to_json()).unwrap_or_default() + "\n";
    emit(out, &text);
    err.exit_code()
}

/// Executes a parsed command, writing reports or error JSON to `out`.
/// Returns the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write) -> i32 {
    match cli.command {
        Command::Analyze { file, out: dest, brute_check, include_outer, center_flux, tol, all_extrema } => {
            let flags = AnalyzeFlags { brute_check, include_outer, center_flux, tol, all_extrema };
            let start = Instant::now();
            let result = read_problem(&file).map_err(Error::from).and_then(|p| analyze(&p, &flags));
            let analysis = match result {
                Ok(a) => a,
                Err(e) => return fail(out, e),
            };
            let report = analysis.report(start.elapsed().as_secs_f64() * 1e3);
            let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
            match dest {
                Some(path) => match std::fs::write(&path, text) {
                    Ok(()) => 0,
                    Err(e) => fail(
                        out,
                        CliError::Io { path: path.display().to_string(), message: e.to_string() }.into(),
                    ),
                },
                None => emit(out, &text),
            }
        }
        Command::BruteForce { file, connected, max_n } => {
            match read_problem(&file).map_err(Error::from).and_then(|p| brute_force(&p, connected, max_n)) {
                Ok(r) => emit(out, &(serde_json::to_string_pretty(&r).expect("report serializes") + "\n")),
                Err(e) => fail(out, e),
            }
        }
        Command::ExportDot { file, what } => {
            match read_problem(&file).map_err(Error::from).and_then(|p| export_dot(&p, what)) {
                Ok(dot) => emit(out, &dot),
                Err(e) => fail(out, e),
            }
        }
    }
}

/// Parses `args` and runs. Usage errors exit with 1; help and version with 0.
pub fn main_with<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli, out),
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            code
        }
    }
}
