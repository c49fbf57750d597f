//! One function per subcommand; each returns its checks and data.

use isodisplay::diagnostics::{self, GroupSource, TransitivityKind, DEFAULT_EPS_GRID};
use isodisplay::fixtures;
use isodisplay::free_space::{self, FiniteMetricSpace, FreeIsometryConfig, ORACLE_SUPPORT_CAP};
use isodisplay::graph_norm::{self, Completeness, GammaSpace};
use isodisplay::graphs::{build_display_graph, verify_gadget, GadgetVerdict};
use isodisplay::pimple::{default_sequence, display_renorm, isometry_group_from_extremes, DisplayConfig, DisplayResult};
use isodisplay::report::{Check, Verdict};
use isodisplay::scalar::{format_rational, homogenize, Homogeneous, Rational};
use isodisplay::selftest::{self, SelftestConfig, CRITERIA};
use isodisplay::space::NormedSpace;
use serde_json::{json, Value};

use crate::args::{DiagCommand, DisplayBuildArgs, DisplayCommand, FreeSpaceCommand, GadgetArgs, GraphNormCommand, MetricArgs, SelftestArgs, Transform};
use crate::{input, CliError, Global};

pub type Outcome = Result<(Vec<Check>, Value), CliError>;

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Invalid(e.to_string()))
}

fn rationals(v: &[Rational]) -> Vec<String> {
    v.iter().map(format_rational).collect()
}

pub fn graph_norm(cmd: &GraphNormCommand) -> Outcome {
    match cmd {
        GraphNormCommand::Eval { graph, vector } => {
            let space = GammaSpace::new(input::graph(graph)?)?;
            let v = input::vector(vector)?;
            if v.len() != space.dim() {
                return Err(CliError::Invalid(format!("vector has length {}, graph has {} vertices", v.len(), space.dim())));
            }
            let data = match homogenize(&v)? {
                Homogeneous::Exact(a) => {
                    let norm = space.norm(&a)?;
                    let phi = space.support(&a)?;
                    let pairing = phi.eval(&a);
                    json!({
                        "mode": "exact",
                        "norm": format_rational(&norm),
                        "support": rationals(&phi.dense(space.dim())),
                        "pairing": format_rational(&pairing),
                    })
                }
                Homogeneous::Float(a) => json!({ "mode": "float", "norm": space.norm_f64(&a)? }),
            };
            Ok((vec![Check::pass("evaluated", format!("norm {}", data["norm"]))], data))
        }
        GraphNormCommand::Extremes { graph, cap } => {
            let space = GammaSpace::new(input::graph(graph)?)?;
            let (_, rep) = graph_norm::extreme_points(&space, *cap)?;
            let detail = format!("{} vertices, {} signed unit vectors", rep.vertex_count, 2 * rep.dim);
            let non_unit = |v: &&Vec<String>| v.iter().filter(|c| c.as_str() != "0").count() != 1 || v.iter().any(|c| !["0", "1", "-1"].contains(&c.as_str()));
            let extra: Vec<&Vec<String>> = rep.vertices.iter().filter(non_unit).take(8).collect();
            let check = Check::from_bool("extreme points are the signed unit vectors", rep.signed_units_only, detail, || json!({ "non_unit_vertices": extra }));
            Ok((vec![check], to_value(&rep)?))
        }
        GraphNormCommand::Isom { graph, extreme_cap } => {
            let space = GammaSpace::new(input::graph(graph)?)?;
            let group = graph_norm::gamma_isometry_group(&space, *extreme_cap)?;
            let rep = &group.report;
            let mut checks = vec![Check::from_bool("generators preserve the facets", rep.generators_certified, format!("order {}", rep.order), || {
                json!({ "generators": group.automorphisms.generators().iter().map(|p| p.0.clone()).collect::<Vec<_>>() })
            })];
            checks.push(match rep.completeness {
                Completeness::Verified => Check::pass("completeness", "extreme points are the signed unit vectors"),
                Completeness::CertifiedByIncidence => Check::pass("completeness", "signed unit vectors form an invariant incidence class"),
                Completeness::Unverified => Check::with_verdict("completeness", Verdict::Unverified, "other linear isometries not excluded", None),
            });
            if let Some(agrees) = rep.brute_force_agrees {
                checks.push(Check::from_bool("brute force agrees", agrees, "exhaustive signed vertex maps", || {
                    json!({ "brute_force": graph_norm::brute_force_signed_maps(&space).ok() })
                }));
            }
            let generators: Vec<Vec<usize>> = group.automorphisms.generators().into_iter().map(|p| p.0).collect();
            Ok((checks, json!({ "report": to_value(rep)?, "automorphism_generators": generators })))
        }
    }
}

pub fn gadget(args: &GadgetArgs) -> Outcome {
    let h = input::perm_group(&args.group)?;
    let (g, layout) = build_display_graph(&h, &args.depths)?;
    let rep = verify_gadget(&g, &layout, &h)?;
    let detail = format!("{} vertices, automorphism group order {}, group order {}", g.n(), rep.aut_order, rep.group_order);
    let check = match rep.verdict {
        GadgetVerdict::Equal => Check::pass("restriction equals the group", detail),
        GadgetVerdict::KClosureGap => Check::with_verdict("restriction equals the group", Verdict::KClosureGap, detail, Some(to_value(&rep.restricted)?)),
        GadgetVerdict::Mismatch => Check::fail("restriction equals the group", detail, to_value(&rep.restricted)?),
    };
    Ok((vec![check], json!({ "graph": to_value(&g.to_record())?, "report": to_value(&rep)? })))
}

fn display_checks(r: &DisplayResult) -> Vec<Check> {
    let mut checks = vec![
        Check::from_bool("separation bounds", r.separation.passed(), format!("(a) {} and (b) {} inequalities", r.separation.a_checked, r.separation.b_checked), || {
            json!(r.separation)
        }),
        Check::from_bool("spike-norm properties", r.properties.passed, format!("max decomposition gap {:.2e}", r.properties.max_decomposition_gap), || {
            json!({ "failures": r.properties.failures })
        }),
    ];
    if let Some(iso) = &r.isometry {
        let recovered: Vec<Vec<Vec<f64>>> = iso.candidates.iter().filter(|c| c.accepted).map(|c| c.matrix.clone()).collect();
        checks.push(Check::from_bool(
            "isometry group equals input",
            iso.equals_input,
            format!("{} candidates, order {} (input {})", iso.candidates.len(), iso.order, r.group.elements.len()),
            || json!({ "recovered": recovered }),
        ));
        let weak: Vec<&isodisplay::pimple::display::Candidate> =
            iso.candidates.iter().filter(|c| !c.member && c.deviation <= iso.rejection_threshold).collect();
        checks.push(Check::from_bool(
            "non-members rejected",
            weak.is_empty(),
            format!("threshold {:.1e}", iso.rejection_threshold),
            || json!(weak),
        ));
    }
    checks
}

pub fn display(cmd: &DisplayCommand, global: &Global) -> Outcome {
    match cmd {
        DisplayCommand::Build(args) => display_build(args, global),
        DisplayCommand::Verify { result } => {
            // accept a bare result or a saved `display build` report
            let mut value = input::load_value(result)?;
            if value.get("verdict").is_some() {
                value = value["data"].take();
            }
            let mut r: DisplayResult = serde_json::from_value(value).map_err(|e| CliError::Invalid(format!("{result}: {e}")))?;
            r.isometry = Some(isometry_group_from_extremes(&r)?);
            Ok((display_checks(&r), to_value(&r.isometry)?))
        }
    }
}

fn display_build(args: &DisplayBuildArgs, global: &Global) -> Outcome {
    let g = input::matrix_group(&args.group, global.tolerance)?;
    if let Some(d) = args.dim {
        if d != g.dim() {
            return Err(CliError::Invalid(format!("--dim {d} but the group acts in dimension {}", g.dim())));
        }
    }
    let x = match &args.sequence {
        Some(s) => input::vectors(s)?,
        None => default_sequence(g.dim()),
    };
    let cfg = DisplayConfig { seed: global.seed, tolerance: global.tolerance, samples: args.samples, ..DisplayConfig::default() };
    let mut r = display_renorm(&g, &x, &cfg)?;
    if !args.no_verify {
        r.isometry = Some(isometry_group_from_extremes(&r)?);
    }
    Ok((display_checks(&r), to_value(&r)?))
}

fn transformed(args: &MetricArgs) -> Result<(FiniteMetricSpace, Value), CliError> {
    let d1 = input::metric(&args.metric)?;
    Ok(match args.transform {
        Transform::None => (d1, Value::Null),
        Transform::Bounded => (d1.transform_bounded(), Value::Null),
        Transform::Concave => {
            let (d3, rep) = d1.transform_bounded().transform_concave()?;
            (d3, to_value(&rep)?)
        }
    })
}

pub fn free_space(cmd: &FreeSpaceCommand, global: &Global) -> Outcome {
    let tol = global.tolerance;
    match cmd {
        FreeSpaceCommand::Norm { metric, molecule } => {
            let (space, concavity) = transformed(metric)?;
            let m = input::molecule(molecule)?.to_vector(&space)?;
            let t = free_space::ae_norm_primal(&space, &m)?;
            let dual = free_space::ae_norm_dual(&space, &m)?;
            let support = m.iter().filter(|v| **v != 0.0).count();
            let mut checks = vec![Check::from_bool("primal = dual", (t.value - dual.value).abs() <= tol, format!("primal {}, dual {}", t.value, dual.value), || {
                json!({ "primal": t.value, "dual": dual.value, "potential": dual.witness })
            })];
            let mut oracle = None;
            if support <= ORACLE_SUPPORT_CAP {
                let o = free_space::transport_by_bases(&space, &m)?;
                oracle = Some(o);
                checks.push(Check::from_bool("primal = oracle", (t.value - o).abs() <= tol, format!("basis enumeration {o}"), || json!({ "primal": t.value, "oracle": o })));
            }
            Ok((checks, json!({ "value": t.value, "plan": to_value(&t.plan)?, "oracle": oracle, "points": space.points(), "concavity": concavity })))
        }
        FreeSpaceCommand::Dual { metric, molecule } => {
            let (space, concavity) = transformed(metric)?;
            let m = input::molecule(molecule)?.to_vector(&space)?;
            let dual = free_space::ae_norm_dual(&space, &m)?;
            let primal = free_space::ae_norm_primal(&space, &m)?.value;
            let checks = vec![
                Check::from_bool("potential is 1-Lipschitz", dual.max_lipschitz_excess <= tol, format!("max excess {:.2e}", dual.max_lipschitz_excess), || {
                    json!(dual.witness)
                }),
                Check::from_bool("dual = primal", (primal - dual.value).abs() <= tol, format!("dual {}, primal {primal}", dual.value), || {
                    json!({ "primal": primal, "dual": dual.value })
                }),
            ];
            Ok((checks, json!({ "value": dual.value, "potential": dual.witness, "points": space.points(), "concavity": concavity })))
        }
        FreeSpaceCommand::Isom { metric, samples } => {
            let (space, _) = transformed(metric)?;
            let cfg = FreeIsometryConfig { samples: *samples, seed: global.seed, ..FreeIsometryConfig::default() };
            let rep = free_space::ae_isometry_group(&space, &cfg)?;
            let checks = vec![
                Check::from_bool("order = 2·|Isom(Y)|", rep.order == rep.expected_order, format!("order {}, |Isom(Y)| = {}", rep.order, rep.metric_group.len()), || {
                    json!({ "order": rep.order, "expected": rep.expected_order })
                }),
                Check::from_bool("no extra isometries", rep.extra_isometries == 0 && rep.missing_candidates == 0, format!("{} assignments tried", rep.assignments_tried), || {
                    json!({ "extra": rep.extra_isometries, "missing": rep.missing_candidates })
                }),
                Check::from_bool("candidates preserve the norm", rep.candidates_preserve_atoms && rep.max_sampled_deviation <= tol, format!("max sampled deviation {:.2e}", rep.max_sampled_deviation), || {
                    json!({ "max_sampled_deviation": rep.max_sampled_deviation })
                }),
            ];
            Ok((checks, to_value(&rep)?))
        }
    }
}

fn finite_group(space: &NormedSpace, source: &str, global: &Global) -> Result<GroupSource, CliError> {
    let g = input::group_source(source, global.seed, global.tolerance)?;
    if g.dim() != space.dim() {
        return Err(CliError::Invalid(format!("group acts in dimension {}, space has dimension {}", g.dim(), space.dim())));
    }
    Ok(g)
}

pub fn diag(cmd: &DiagCommand, global: &Global) -> Outcome {
    let tol = global.tolerance;
    match cmd {
        DiagCommand::ConvexTransitive { space, group, x, xstar } => {
            let s = input::space(space)?;
            let g = finite_group(&s, group, global)?;
            let v = diagnostics::convex_transitivity_test(&s, &g, &input::float_vector(x)?, &input::float_vector(xstar)?, tol)?;
            let detail = format!("sup x*(Tx) = {} over {} elements", v.sup, v.elements_checked);
            let check = match v.kind {
                TransitivityKind::Fails => Check::fail("convex transitivity", detail, to_value(&v.witness)?),
                _ if !v.exact => Check::with_verdict("convex transitivity", Verdict::Unverified, format!("{detail} (sampled group)"), None),
                _ => Check::pass("convex transitivity", detail),
            };
            Ok((vec![check], to_value(&v)?))
        }
        DiagCommand::Necessary { space, group, samples } => {
            let s = input::space(space)?;
            let g = finite_group(&s, group, global)?;
            let rep = diagnostics::necessary_conditions(&s, &g, *samples, global.seed, tol)?;
            let mut checks = vec![Check::from_bool("(i) contains -Id", rep.contains_minus_identity, "", || json!({ "missing": "-Id" }))];
            checks.push(match rep.closed {
                Some(true) => Check::pass("(ii) closed", rep.closure_note.clone()),
                Some(false) => Check::fail("(ii) closed", rep.closure_note.clone(), json!({})),
                None => Check::with_verdict("(ii) closed", Verdict::Unverified, rep.closure_note.clone(), None),
            });
            // a witness shows the group is not convex transitive: consistent with
            // a proper subgroup, so it is reported rather than failed
            checks.push(Check::with_verdict(
                "(iii) separating pair",
                Verdict::Pass,
                if rep.witness_found() { format!("witness found, sup {:.6}", rep.best_sup) } else { format!("no witness, best sup {:.6}", rep.best_sup) },
                rep.witness.as_ref().map(|w| json!(w)),
            ));
            Ok((checks, to_value(&rep)?))
        }
        DiagCommand::Distinguished { space, group, x } => {
            let s = input::space(space)?;
            let g = input::matrix_group(group, tol)?;
            let rep = diagnostics::distinguished_point_check(&s, &g, &input::float_vector(x)?, tol)?;
            let check = Check::from_bool("discrete orbit", rep.distinguished, format!("min displacement {}", rep.min_displacement), || {
                json!({ "element": rep.argmin.map(|i| g.elements()[i].to_rows()) })
            });
            Ok((vec![check], to_value(&rep)?))
        }
        DiagCommand::Lur { space, x, eps, directions } => {
            let s = input::space(space)?;
            let grid = eps.clone().unwrap_or_else(|| DEFAULT_EPS_GRID.to_vec());
            let m = diagnostics::lur_modulus(&s, &input::float_vector(x)?, &grid, *directions, global.seed)?;
            let flat = m.table.iter().find(|e| e.eps > 0.0 && e.delta <= tol);
            let check = Check::from_bool("positive modulus", !m.not_lur_evidence, format!("{} grid points", m.table.len()), || json!(flat));
            Ok((vec![check], to_value(&m)?))
        }
        DiagCommand::Uniform { space, eps, points, directions } => {
            let s = input::space(space)?;
            let grid = eps.clone().unwrap_or_else(|| DEFAULT_EPS_GRID.to_vec());
            let m = diagnostics::uniform_convexity_modulus(&s, &grid, *points, *directions, global.seed)?;
            let flat = m.table.iter().find(|e| e.eps > 0.0 && e.delta <= tol);
            let check = Check::from_bool("positive modulus", flat.is_none(), format!("{} sphere points", m.points_sampled), || json!(flat));
            Ok((vec![check], to_value(&m)?))
        }
        DiagCommand::Separation { space, group, y, directions } => {
            let s = input::space(space)?;
            let g = input::matrix_group(group, tol)?;
            let w = diagnostics::separation_witness(&s, &g, &input::float_vector(y)?, *directions, global.seed)?;
            let check = Check::from_bool("sup x*(Tx) <= 1 - beta, beta > 0", w.verified && w.beta > 0.0, format!("beta {:.3e}, sup {}", w.beta, w.sup), || json!(w));
            Ok((vec![check], to_value(&w)?))
        }
    }
}

pub fn selftest(args: &SelftestArgs, global: &Global) -> Outcome {
    let ids = args.criteria.clone().unwrap_or_else(|| (1..=CRITERIA).collect());
    if let Some(bad) = ids.iter().find(|&&i| i == 0 || i > CRITERIA) {
        return Err(CliError::Usage(format!("no criterion {bad}; expected 1..={CRITERIA}")));
    }
    let cfg = SelftestConfig { seed: global.seed, tolerance: global.tolerance };
    let results: Vec<selftest::CriterionResult> = ids.iter().map(|&id| selftest::run_criterion(id, &cfg)).collect();
    let checks = results
        .iter()
        .map(|r| {
            let name = format!("criterion {}: {}", r.id, r.title);
            if r.passed {
                Check::pass(name, r.headline())
            } else {
                let failing: Vec<&Check> = r.checks.iter().filter(|c| c.verdict != Verdict::Pass).collect();
                let verdict = if failing.iter().any(|c| c.verdict == Verdict::Fail) { Verdict::Fail } else { failing[0].verdict };
                Check::with_verdict(name, verdict, r.headline(), Some(json!(failing)))
            }
        })
        .collect();
    for r in &results {
        eprintln!("criterion {} took {:.2} s", r.id, r.seconds);
    }
    let data: Vec<Value> = results.iter().map(|r| json!({ "id": r.id, "title": r.title, "passed": r.passed, "limit_seconds": r.limit_seconds, "checks": r.checks })).collect();
    Ok((checks, Value::Array(data)))
}

pub fn fixtures(name: Option<&str>) -> Outcome {
    match name {
        Some(n) => Ok((vec![Check::pass("fixture", n)], fixtures::fixture_json(n)?)),
        None => Ok((vec![Check::pass("catalog", format!("{} fixtures", fixtures::catalog().len()))], to_value(&fixtures::catalog())?)),
    }
}
