use std::fs;

use ale_core::io::{write_json, write_ndjson};
use ale_core::synth::{generate_corpus, running_example, CorpusSpec};
use anyhow::{Context, Result};

use crate::args::{SynthArgs, SynthKind};
use crate::common::Status;

pub fn run_synth(args: &SynthArgs) -> Result<Status> {
    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let (bundle, instances) = match args.kind {
        SynthKind::RunningExample => {
            let (bundle, instance) = running_example();
            (bundle, vec![instance])
        }
        SynthKind::Table => generate_corpus(&CorpusSpec::table_analogue(args.instances, args.seed))?,
        SynthKind::Separated => generate_corpus(&CorpusSpec::well_separated(4, 8, 4, args.instances, args.seed))?,
    };
    let bundle_path = args.out_dir.join("bundle.json");
    let dataset_path = args.out_dir.join("dataset.ndjson");
    write_json(&bundle_path, &bundle.to_document())?;
    write_ndjson(&dataset_path, &instances)?;
    eprintln!(
        "wrote {} ({} classes, {} prototypes, D = {}) and {} ({} instance{})",
        bundle_path.display(),
        bundle.num_classes(),
        bundle.num_prototypes(),
        bundle.latent_dim(),
        dataset_path.display(),
        instances.len(),
        if instances.len() == 1 { "" } else { "s" }
    );
    Ok(Status::Success)
}
