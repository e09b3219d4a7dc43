use ale_core::io::read_explanations;
use ale_core::oracle::{
    corner_oracle, minimality_oracle, sample_oracle, sphere_containment_oracle, OracleReport, Violation,
};
use ale_core::verify::max_favoring;
use ale_core::{logits, model::argmax_lowest, verify_with_margin, AleError, Anchor};
use anyhow::{bail, Result};
use serde_json::json;

use crate::args::{DocOracleArgs, OracleCommand};
use crate::common::{emit, load_model, verify_config, Status};
use crate::verify::{collect_instances, document_bounds};

/// Relative tolerance between the favoring-corner gap and the corner optimum.
pub const GAP_TOL: f64 = 1e-9;

#[derive(Clone, Copy)]
enum Kind {
    Corners,
    Sample { n: usize, seed: u64 },
    Minimality,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Corners => "corners",
            Kind::Sample { .. } => "sample",
            Kind::Minimality => "minimality",
        }
    }
}

pub fn run_oracle(cmd: &OracleCommand) -> Result<Status> {
    match cmd {
        OracleCommand::Corners(docs) => run_doc_oracle(docs, Kind::Corners),
        OracleCommand::Sample { docs, n, seed } => run_doc_oracle(docs, Kind::Sample { n: *n, seed: *seed }),
        OracleCommand::Minimality(docs) => run_doc_oracle(docs, Kind::Minimality),
        OracleCommand::Sphere { c1, r1, c2, r2, n, seed } => {
            let r = sphere_containment_oracle(c1, *r1, c2, *r2, *n, *seed)?;
            emit(&serde_json::to_string(&r)?)?;
            Ok(if r.report.passed() { Status::Success } else { Status::Breach })
        }
    }
}

fn run_doc_oracle(args: &DocOracleArgs, kind: Kind) -> Result<Status> {
    let bundle = load_model(&args.bundle, &args.model)?;
    let docs = read_explanations(&args.explanation)?;
    if docs.is_empty() {
        bail!("{} holds no explanation documents", args.explanation.display());
    }
    let ids = docs.iter().map(|d| d.instance_id.clone()).collect();
    let instances = collect_instances(&args.dataset, &ids)?;

    let mut status = Status::Success;
    for doc in &docs {
        let Some(inst) = instances.get(&doc.instance_id) else {
            eprintln!("{}: instance not found in dataset", doc.instance_id);
            status = status.worst(Status::InputError);
            continue;
        };
        let result = (|| -> Result<(OracleReport, Status, bool)> {
            let (bounds, c) = document_bounds(&bundle, doc, Some(inst), &args.model)?;
            let verification = verify_with_margin(&bounds, &bundle, c, args.model.margin)?;
            match kind {
                Kind::Corners => {
                    let best = corner_oracle(&bounds, &bundle, c)?;
                    let mut report = OracleReport::new(0);
                    for (k, opt) in best {
                        let corner = max_favoring(&bounds, &bundle, k, c)?;
                        let h = logits(&corner, &bundle)?;
                        let gap = h[k] - h[c];
                        report.checked += 1;
                        if (gap - opt.gap).abs() > GAP_TOL * (1.0 + opt.gap.abs()) {
                            report.violations += 1;
                            report.first_violation.get_or_insert(Violation {
                                input: json!({ "class": k }),
                                expected: json!(opt.gap),
                                got: json!(gap),
                            });
                        }
                    }
                    let s = if report.passed() { Status::Success } else { Status::Breach };
                    Ok((report, s, verification.verified))
                }
                Kind::Sample { n, seed } => {
                    if verification.verified {
                        let report = sample_oracle(&bounds, &bundle, c, n, seed)?;
                        let s = if report.passed() { Status::Success } else { Status::Breach };
                        return Ok((report, s, true));
                    }
                    // Unverified: each witness must change the prediction
                    // (only guaranteed without a margin).
                    let mut report = OracleReport::new(seed);
                    if args.model.margin == 0.0 {
                        for (k, w) in &verification.witnesses {
                            let got = argmax_lowest(&logits(&w.vector, &bundle)?);
                            report.checked += 1;
                            if got == c {
                                report.violations += 1;
                                report.first_violation.get_or_insert(Violation {
                                    input: json!({ "witness_for": k, "vector": w.vector }),
                                    expected: json!("class change"),
                                    got: json!(got),
                                });
                            }
                        }
                    }
                    let s = if report.passed() { Status::Unverified } else { Status::Breach };
                    Ok((report, s, false))
                }
                Kind::Minimality => {
                    let anchor = Anchor::new(&bundle, inst)?;
                    let cfg = verify_config(&bundle, &args.model, doc.paradigm)?;
                    match minimality_oracle(&doc.explanation()?, &anchor, &cfg) {
                        Ok(report) => {
                            let s = if report.passed() { Status::Success } else { Status::Breach };
                            Ok((report, s, true))
                        }
                        Err(AleError::NotVerified) => Ok((OracleReport::new(0), Status::Unverified, false)),
                        Err(e) => Err(e.into()),
                    }
                }
            }
        })();
        match result {
            Ok((report, s, verified)) => {
                emit(&serde_json::to_string(&json!({
                        "oracle": kind.name(),
                        "instance_id": doc.instance_id,
                        "paradigm": doc.paradigm,
                        "verified": verified,
                        "report": report,
                    }))?)?;
                status = status.worst(s);
            }
            Err(e) => {
                eprintln!("{}: {e:#}", doc.instance_id);
                status = status.worst(Status::InputError);
            }
        }
    }
    Ok(status)
}
