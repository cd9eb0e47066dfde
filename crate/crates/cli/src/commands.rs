use std::fs;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::{json, Value as Json};
use wcoj::bounds::{
    agm_bound_for_query, modular_bound, polymatroid_bound, pow2_display, shannon_flow_completion, shannon_flow_dual,
    DualCertificate, PairWeight,
};
use wcoj::exec::{
    backtrack_join, bruteforce_join, default_thetas, panda_interpret, triangle_heavy_light, AnnotatedStep,
    ExecutionReport,
};
use wcoj::lp::{parse_rational, rational_text};
use wcoj::proof::{derive, ProofSequence};
use wcoj::query::{acyclicize, dependency_graph, topological_order, validate_db, ConstraintSet, Query};
use wcoj::relation::{write_csv, Dictionary, Threshold};
use wcoj::workbench::{load_instance, write_instance, GenKind, GenSpec};
use wcoj::{Error, Rational};

use crate::{Algo, BoundMethod, Cli, Command, Failure, GenKindArg, Inputs, ProofAction};

type Outcome = Result<String, Failure>;

pub fn dispatch(cli: &Cli) -> Outcome {
    let ctx = Context { deterministic: cli.deterministic };
    match &cli.command {
        Command::Bound { inputs, method } => ctx.bound(inputs, *method),
        Command::Run { inputs, data, algo, order, no_validate, seq, delta, theta, output } => ctx.run(RunArgs {
            inputs,
            data,
            algo: *algo,
            order: order.as_deref(),
            validate: !no_validate,
            seq: seq.as_deref(),
            delta,
            theta: theta.as_deref(),
            output: output.as_deref(),
        }),
        Command::Acyclicize { inputs, output } => ctx.acyclicize(inputs, output.as_deref()),
        Command::Proof { action, inputs, seq, delta, output } => {
            ctx.proof(*action, inputs, seq.as_deref(), delta, output.as_deref())
        }
        Command::Gen { kind, out, seed, m, query, n, sizes, domain } => {
            ctx.gen(*kind, out, *seed, *m, query.as_deref(), *n, sizes.clone(), *domain)
        }
    }
}

struct RunArgs<'a> {
    inputs: &'a Inputs,
    data: &'a Path,
    algo: Algo,
    order: Option<&'a [String]>,
    validate: bool,
    seq: Option<&'a Path>,
    delta: &'a str,
    theta: Option<&'a [String]>,
    output: Option<&'a Path>,
}

struct Context {
    deterministic: bool,
}

fn load(inputs: &Inputs) -> Result<(Query, ConstraintSet), Error> {
    let q = Query::from_file(&inputs.query)?;
    let dc = ConstraintSet::from_file(&inputs.constraints, &q)?;
    Ok((q, dc))
}

fn rational(s: &str) -> Result<Rational, Failure> {
    parse_rational(s.trim()).ok_or_else(|| Failure::Usage(format!("`{s}` is not a rational number")))
}

fn text(r: &Rational) -> String {
    rational_text(r)
}

/// `δ` and, when it comes from the LP, the whole certificate.
fn delta_for(spec: &str, dc: &ConstraintSet) -> Result<(Vec<PairWeight>, Option<DualCertificate>), Failure> {
    if spec == "dual" {
        let (_, cert) = shannon_flow_dual(dc)?;
        return Ok((cert.delta.clone(), Some(cert)));
    }
    let w = rational(spec)?;
    Ok((dc.iter().map(|c| PairWeight { x: c.x, y: c.y, weight: w.clone() }).collect(), None))
}

fn certificate(delta: Vec<PairWeight>, cert: Option<DualCertificate>, dc: &ConstraintSet) -> Result<DualCertificate, Failure> {
    match cert {
        Some(c) => Ok(c),
        None => shannon_flow_completion(&delta, dc.var_names())?.ok_or_else(|| Failure::Rejected {
            report: json!({"shannon_flow": false}).to_string(),
            msg: "the given δ does not yield a Shannon-flow inequality".into(),
        }),
    }
}

fn write_file(path: &Path, body: &str) -> Result<(), Failure> {
    fs::write(path, body).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

impl Context {
    fn finish(&self, mut report: Json) -> Outcome {
        if !self.deterministic {
            let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            report["timestamp"] = json!(now);
        }
        Ok(serde_json::to_string_pretty(&report).expect("json"))
    }

    fn bound(&self, inputs: &Inputs, method: BoundMethod) -> Outcome {
        let (q, dc) = load(inputs)?;
        let (name, log2, extra) = match method {
            BoundMethod::Agm => {
                let b = agm_bound_for_query(&q, &dc)?;
                ("agm", b.log2.clone(), json!({"cover": b.cover.iter().map(text).collect::<Vec<_>>()}))
            }
            BoundMethod::Modular => {
                let b = modular_bound(&dc)?;
                let v: Vec<String> = b.v.iter().map(text).collect();
                ("modular", b.log2.clone(), json!({"v": v, "acyclic": b.acyclic}))
            }
            BoundMethod::Polymatroid => ("polymatroid", polymatroid_bound(&dc)?.log2, json!({})),
            BoundMethod::Dual => {
                let (v, cert) = shannon_flow_dual(&dc)?;
                ("dual", v, json!({"certificate": cert.to_json()}))
            }
        };
        let mut report = json!({
            "method": name,
            "value_log2": text(&log2),
            "bound": pow2_display(&log2),
        });
        if let (Json::Object(r), Json::Object(e)) = (&mut report, extra) {
            r.extend(e);
        }
        self.finish(report)
    }

    fn run(&self, a: RunArgs<'_>) -> Outcome {
        let (q, dc) = load(a.inputs)?;
        // resolved before touching the data so cyclic constraints fail fast
        let order = match (a.algo, a.order) {
            (Algo::Backtrack, Some(names)) => names
                .iter()
                .map(|n| q.var_index(n.trim()).ok_or_else(|| Failure::Usage(format!("unknown variable `{n}`"))))
                .collect::<Result<Vec<_>, _>>()?,
            (Algo::Backtrack, None) => topological_order(&dc)?,
            _ => Vec::new(),
        };
        let mut dict = Dictionary::new();
        let db = load_instance(&q, a.data, &mut dict)?;
        let mut validation = Json::Null;
        if a.validate {
            let v = validate_db(&q, &dc, &db)?;
            validation = serde_json::to_value(&v).expect("json");
            if !v.ok {
                return Err(Failure::Rejected {
                    report: serde_json::to_string_pretty(&json!({"validation": validation})).expect("json"),
                    msg: "database violates the declared constraints (use --no-validate to skip)".into(),
                });
            }
        }

        let start = Instant::now();
        let (relation, report) = match a.algo {
            Algo::Backtrack => {
                let out = backtrack_join(&q, &dc, &order, &db)?;
                let names: Vec<&str> = order.iter().map(|&v| q.var_names()[v].as_str()).collect();
                let report = ExecutionReport::new("backtrack", out.relation.len(), out.counters)
                    .with_details(json!({"order": names, "probes_by_depth": out.probes_by_depth}));
                (out.relation, report)
            }
            Algo::HeavyLight => {
                let atoms = q.bind(&db)?;
                if atoms.len() != 3 {
                    return Err(Failure::Usage("heavy-light expects a triangle query with three atoms".into()));
                }
                let out = triangle_heavy_light(&atoms[0], &atoms[1], &atoms[2])?;
                let relation = out.relation.reordered(q.var_names())?.with_name(q.name());
                let budget = wcoj::exec::HeavyLightOutput::budget(atoms[0].len(), atoms[1].len(), atoms[2].len());
                let report = ExecutionReport::new("heavy-light", relation.len(), out.counters).with_details(json!({
                    "theta": out.theta.as_ref().map(Threshold::to_f64),
                    "heavy_intermediate": out.heavy_intermediate,
                    "light_intermediate": out.light_intermediate,
                    "budget": budget,
                }));
                (relation, report)
            }
            Algo::Panda => {
                let (delta, cert) = delta_for(a.delta, &dc)?;
                let seq = match a.seq {
                    Some(p) => {
                        let body = fs::read_to_string(p).map_err(|e| Error::Invalid(format!("{}: {e}", p.display())))?;
                        ProofSequence::parse(&body, q.var_names())?
                    }
                    None => derive(&certificate(delta.clone(), cert, &dc)?)?,
                };
                let thetas = match a.theta {
                    Some(ts) => ts.iter().map(|t| Ok(Threshold::new(rational(t)?)?)).collect::<Result<Vec<_>, Failure>>()?,
                    None => default_thetas(&seq, &dc)?,
                };
                let steps = AnnotatedStep::annotate(&seq, &thetas)?;
                let out = panda_interpret(&q, &db, &dc, &delta, &steps)?;
                let report = ExecutionReport::new("panda", out.relation.len(), out.counters).with_details(json!({
                    "steps": seq.len(),
                    "branches": out.branches,
                    "fallbacks": out.fallbacks,
                    "max_intermediate": out.max_intermediate(),
                    "trace": out.trace,
                }));
                (out.relation, report)
            }
            Algo::Bruteforce => {
                let rel = bruteforce_join(&q, &db)?;
                let mut counters = wcoj::Counters::new();
                counters.emitted = rel.len() as u64;
                let report = ExecutionReport::new("bruteforce", rel.len(), counters);
                (rel, report)
            }
        };
        let elapsed = start.elapsed();
        let mut report = report;
        if !self.deterministic {
            report = report.with_time(elapsed);
        }
        report = attach_bounds(report, &q, &dc);
        if let Some(path) = a.output {
            write_csv(&relation, path, Some(&dict))?;
        }
        let mut json = serde_json::to_value(&report).expect("json");
        json["validation"] = validation;
        self.finish(json)
    }

    fn acyclicize(&self, inputs: &Inputs, output: Option<&Path>) -> Outcome {
        let (q, dc) = load(inputs)?;
        let before = polymatroid_bound(&dc)?.log2;
        let acyclic = dependency_graph(&dc).is_acyclic();
        let dc2 = acyclicize(&dc, |d| polymatroid_bound(d).map(|b| b.log2))?;
        let after = polymatroid_bound(&dc2)?.log2;
        let body = dc2.to_text(&q);
        if let Some(p) = output {
            write_file(p, &body)?;
        }
        let names = dc2.var_names();
        let edges: Vec<String> =
            dependency_graph(&dc2).edges().iter().map(|&(x, y)| format!("{}->{}", names[x], names[y])).collect();
        self.finish(json!({
            "input_acyclic": acyclic,
            "constraints": body,
            "edges": edges,
            "bound_log2": text(&before),
            "acyclic_bound_log2": text(&after),
        }))
    }

    fn proof(&self, action: ProofAction, inputs: &Inputs, seq: Option<&Path>, delta: &str, output: Option<&Path>) -> Outcome {
        let (q, dc) = load(inputs)?;
        let (delta, cert) = delta_for(delta, &dc)?;
        match action {
            ProofAction::Derive => {
                let cert = certificate(delta, cert, &dc)?;
                let seq = derive(&cert)?;
                let body = seq.to_text();
                if let Some(p) = output {
                    write_file(p, &body)?;
                }
                self.finish(json!({"steps": seq.len(), "sequence": body, "valid": seq.validate(&cert.delta).valid}))
            }
            ProofAction::Validate => {
                let path = seq.ok_or_else(|| Failure::Usage("validate needs --seq".into()))?;
                let body = fs::read_to_string(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
                let seq = ProofSequence::parse(&body, q.var_names())?;
                let v = seq.validate(&delta);
                let report = serde_json::to_value(&v).expect("json");
                if v.valid {
                    self.finish(report)
                } else {
                    Err(Failure::Rejected {
                        report: serde_json::to_string_pretty(&report).expect("json"),
                        msg: format!(
                            "sequence invalid at step index {}: {}",
                            v.failed_at.map_or("?".into(), |s| s.to_string()),
                            v.reason.unwrap_or_default()
                        ),
                    })
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn gen(
        &self,
        kind: GenKindArg,
        out: &Path,
        seed: u64,
        m: Option<u64>,
        query: Option<&Path>,
        n: Option<u64>,
        sizes: Option<Vec<u64>>,
        domain: Option<u64>,
    ) -> Outcome {
        let need = |what: &str| Failure::Usage(format!("--{what} is required for this kind"));
        let query_text = || -> Result<String, Failure> {
            let p = query.ok_or_else(|| need("query"))?;
            Ok(Query::from_file(p)?.to_string())
        };
        let kind = match kind {
            GenKindArg::Grid => GenKind::GridTriangle { m: m.ok_or_else(|| need("m"))? },
            GenKindArg::AgmTight => GenKind::AgmTight { query: query_text()?, n: n.ok_or_else(|| need("n"))? },
            GenKindArg::Random => {
                GenKind::Random { query: query_text()?, sizes: sizes.ok_or_else(|| need("sizes"))?, domain }
            }
        };
        let spec = GenSpec { kind, seed };
        let db = spec.generate()?;
        let manifest = write_instance(out, &spec, &db)?;
        self.finish(serde_json::to_value(&manifest).expect("json"))
    }
}

/// Adds every bound that applies; failures (unbounded, too many
/// variables) are simply left out.
fn attach_bounds(mut report: ExecutionReport, q: &Query, dc: &ConstraintSet) -> ExecutionReport {
    if let Ok(b) = agm_bound_for_query(q, dc) {
        report = report.with_bound("agm", &b.log2);
    }
    if let Ok(b) = polymatroid_bound(dc) {
        report = report.with_bound("polymatroid", &b.log2);
    }
    report
}
