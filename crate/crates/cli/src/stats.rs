use std::collections::BTreeSet;

use ale_core::io::{for_each_record, write_json, InstanceHeader};
use ale_core::report::{sample_per_class, InstanceRecord, StatsReport};
use ale_core::{Paradigm, SearchConfig};
use anyhow::{Context, Result};
use serde_json::json;

use crate::args::{ReportFormat, StatsArgs};
use crate::common::{emit, explain_one, load_model, process_dataset, search_config, Status};

/// Runs every requested paradigm on the (sampled) dataset and aggregates
/// the sizes. The JSON report is also written to `--out` when given.
pub fn cmd_stats(args: &StatsArgs) -> Result<StatsReport> {
    let bundle = load_model(&args.bundle, &args.model)?;
    let paradigms: Vec<Paradigm> = if args.paradigm.is_empty() {
        Paradigm::ALL.to_vec()
    } else {
        let mut seen = BTreeSet::new();
        args.paradigm.iter().copied().filter(|p| seen.insert(*p)).collect()
    };
    let configs: Vec<SearchConfig> = paradigms
        .iter()
        .map(|&p| search_config(p, &bundle, &args.model, &args.search))
        .collect::<Result<_>>()?;

    let chosen = match args.sample_per_class {
        Some(k) => {
            let mut labels = Vec::new();
            for_each_record(&args.dataset, |h: InstanceHeader| {
                labels.push(h.label);
                Ok(())
            })
            .with_context(|| format!("reading dataset {}", args.dataset.display()))?;
            Some(sample_per_class(&labels, k, args.seed).into_iter().collect::<BTreeSet<_>>())
        }
        None => None,
    };

    let mut records: Vec<Vec<InstanceRecord>> = vec![Vec::new(); paradigms.len()];
    let mut grids = Vec::new();
    process_dataset(
        &args.dataset,
        args.search.jobs,
        chosen.as_ref(),
        |inst| {
            configs
                .iter()
                .map(|cfg| explain_one(&bundle, inst, cfg, false).1)
                .collect::<Vec<_>>()
        },
        |inst, per_paradigm| {
            grids.push(inst.grid);
            for (slot, r) in records.iter_mut().zip(per_paradigm) {
                slot.push(r);
            }
            Ok(())
        },
    )?;

    let name = args.name.clone().unwrap_or_else(|| {
        args.dataset
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    });
    let config = json!({
        "paradigms": paradigms,
        "strategy": args.search.strategy,
        "init": args.search.init,
        "slack": bundle.distance_slack(),
        "margin": args.model.margin,
        "epsilon": bundle.sigma().epsilon,
        "max_pairs": args.search.max_pairs,
        "timeout_per_instance": args.search.timeout_per_instance.map(|d| humantime::format_duration(d).to_string()),
        "sample_per_class": args.sample_per_class,
        "seed": args.seed,
    });
    let report = StatsReport::build(name, &paradigms, &records, &grids, config, args.timing);
    report.validate().context("internal error: inconsistent report")?;
    if let Some(out) = &args.out {
        write_json(out, &report)?;
    }
    Ok(report)
}

pub fn run_stats(args: &StatsArgs) -> Result<Status> {
    let report = cmd_stats(args)?;
    match args.format {
        ReportFormat::Table => emit(report.render_table().trim_end())?,
        ReportFormat::Json => emit(&serde_json::to_string_pretty(&report)?)?,
    }
    Ok(Status::Success)
}
