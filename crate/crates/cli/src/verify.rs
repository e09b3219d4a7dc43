use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use ale_core::io::{for_each_instance, read_explanations, ExplanationDocument};
use ale_core::{verify_with_margin, ActivationBounds, Anchor, AleError, LatentInstance, ModelBundle, Registry, VerifyResult};
use anyhow::{anyhow, bail, Context, Result};

use crate::args::{ModelOpts, VerifyArgs};
use crate::common::{emit, load_model, verify_config, Status};

/// Instances of `dataset` whose id is in `ids`.
pub fn collect_instances(dataset: &Path, ids: &BTreeSet<String>) -> Result<HashMap<String, LatentInstance>> {
    let mut found = HashMap::new();
    for_each_instance(dataset, |inst| {
        if ids.contains(&inst.id) {
            found.insert(inst.id.clone(), inst);
        }
        Ok(())
    })
    .with_context(|| format!("reading dataset {}", dataset.display()))?;
    Ok(found)
}

/// Bounds of a document, recomputed from the instance when one is given and
/// taken from the document otherwise. Returns them with the predicted class.
pub fn document_bounds(
    bundle: &ModelBundle,
    doc: &ExplanationDocument,
    instance: Option<&LatentInstance>,
    model: &ModelOpts,
) -> Result<(ActivationBounds, usize)> {
    let explanation = doc.explanation()?;
    match instance {
        Some(inst) => {
            let anchor = Anchor::new(bundle, inst)?;
            if let Some(recorded) = doc.predicted_class {
                if recorded != anchor.predicted {
                    bail!(
                        "stale explanation for {}: recorded class {recorded}, model predicts {}",
                        doc.instance_id,
                        anchor.predicted
                    );
                }
            }
            let cfg = verify_config(bundle, model, doc.paradigm)?;
            let explainer = Registry::builtin().explainer(doc.paradigm.name())?;
            let bounds = explainer.bounds(&anchor, &explanation, cfg.slack)?;
            Ok((bounds, anchor.predicted))
        }
        None => {
            let bounds = doc
                .bounds
                .clone()
                .ok_or_else(|| anyhow!("{}: no dataset given and no embedded bounds", doc.instance_id))?;
            let c = doc
                .predicted_class
                .ok_or_else(|| anyhow!("{}: embedded bounds without predicted_class", doc.instance_id))?;
            if bounds.len() != bundle.num_prototypes() {
                return Err(AleError::DimensionMismatch(format!(
                    "{}: bounds cover {} prototypes, bundle has {}",
                    doc.instance_id,
                    bounds.len(),
                    bundle.num_prototypes()
                ))
                .into());
            }
            explanation.validate(bundle.num_prototypes(), usize::MAX)?;
            Ok((bounds, c))
        }
    }
}

pub fn describe(doc: &ExplanationDocument, v: &VerifyResult) -> String {
    let what = match (&doc.prototypes, &doc.pairs) {
        (Some(p), _) => format!("{p:?}"),
        (_, Some(p)) => format!("{} pairs", p.len()),
        _ => String::new(),
    };
    if v.verified {
        return format!("{} {} {what}: verified", doc.instance_id, doc.paradigm);
    }
    let mut text = format!("{} {} {what}: unverified", doc.instance_id, doc.paradigm);
    for (k, w) in &v.witnesses {
        let vector: Vec<String> = w.vector.iter().map(|x| format!("{x}")).collect();
        text.push_str(&format!(
            "\n  class {k} not dominated: witness [{}], logit gap {}",
            vector.join(", "),
            w.gap
        ));
    }
    text
}

pub fn run_verify(args: &VerifyArgs) -> Result<Status> {
    let bundle = load_model(&args.bundle, &args.model)?;
    let docs = read_explanations(&args.explanation)?;
    if docs.is_empty() {
        bail!("{} holds no explanation documents", args.explanation.display());
    }
    let instances = match &args.dataset {
        Some(path) => {
            let ids = docs.iter().map(|d| d.instance_id.clone()).collect();
            Some(collect_instances(path, &ids)?)
        }
        None => None,
    };

    let mut status = Status::Success;
    for doc in &docs {
        let instance = match &instances {
            Some(found) => match found.get(&doc.instance_id) {
                Some(inst) => Some(inst),
                None => {
                    eprintln!("{}: instance not found in dataset", doc.instance_id);
                    status = status.worst(Status::InputError);
                    continue;
                }
            },
            None => None,
        };
        let checked = document_bounds(&bundle, doc, instance, &args.model)
            .and_then(|(bounds, c)| Ok(verify_with_margin(&bounds, &bundle, c, args.model.margin)?));
        match checked {
            Ok(v) => {
                emit(&describe(doc, &v))?;
                if !v.verified {
                    status = status.worst(Status::Unverified);
                }
            }
            Err(e) => {
                eprintln!("{}: {e:#}", doc.instance_id);
                status = status.worst(Status::InputError);
            }
        }
    }
    Ok(status)
}
