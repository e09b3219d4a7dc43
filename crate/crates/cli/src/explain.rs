use ale_core::io::write_json;
use anyhow::Result;

use crate::args::ExplainArgs;
use crate::common::{explain_one, file_stem_for, load_model, process_dataset, search_config, LineSink, Status};

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct ExplainSummary {
    pub instances: usize,
    pub verified: usize,
    pub unverified: usize,
    pub failed: usize,
}

pub fn run_explain(args: &ExplainArgs) -> Result<Status> {
    let bundle = load_model(&args.bundle, &args.model)?;
    let mut cfg = search_config(args.paradigm, &bundle, &args.model, &args.search)?;
    cfg.record_trace = args.trace;
    let per_file_dir = args.out.as_deref().filter(|p| p.is_dir());
    let mut lines = match per_file_dir {
        Some(_) => None,
        None => Some(LineSink::open(args.out.as_deref())?),
    };

    let mut summary = ExplainSummary::default();
    let mut status = Status::Success;
    process_dataset(
        &args.dataset,
        args.search.jobs,
        None,
        |inst| explain_one(&bundle, inst, &cfg, args.trace),
        |_, (doc, _, s)| {
            summary.instances += 1;
            match s {
                Status::Success => summary.verified += 1,
                Status::Unverified => summary.unverified += 1,
                _ => summary.failed += 1,
            }
            status = status.worst(s);
            match (&mut lines, per_file_dir) {
                (Some(sink), _) => sink.line(&serde_json::to_string(&doc)?),
                (None, Some(dir)) => {
                    let path = dir.join(format!("{}.json", file_stem_for(&doc.instance_id)));
                    Ok(write_json(path, &doc)?)
                }
                (None, None) => unreachable!(),
            }
        },
    )?;
    if let Some(sink) = lines {
        sink.finish()?;
    }
    eprintln!(
        "{} instances ({}): {} verified, {} unverified, {} failed",
        summary.instances, args.paradigm, summary.verified, summary.unverified, summary.failed
    );
    Ok(status)
}
