use crate::dataset::LabeledSequence;
use crate::error::Result;

use super::{mirror_swap, phase_subsample};

/// Doubles the corpus by mirroring, then splits every sequence into its
/// phase-shifted copies at `target_rate`. Output size is
/// `input size * 2 * stride`; labels are copied unchanged and every variant
/// keeps its parent's `source`.
///
/// Variant ids: `<id>` / `<id>~m` for original and mirror, with `~p<k>`
/// appended for phase `k` when the stride exceeds one.
pub fn augment(corpus: &[LabeledSequence], target_rate: f64) -> Result<Vec<LabeledSequence>> {
    let mut out = Vec::new();
    for item in corpus {
        let mirrored = mirror_swap(&item.sequence);
        for (suffix, seq) in [("", &item.sequence), ("~m", &mirrored)] {
            let phases = phase_subsample(seq, target_rate)?;
            let many = phases.len() > 1;
            for (k, phase) in phases.into_iter().enumerate() {
                let id = if many {
                    format!("{}{suffix}~p{k}", item.id)
                } else {
                    format!("{}{suffix}", item.id)
                };
                out.push(LabeledSequence {
                    id,
                    source: item.source.clone(),
                    sequence: phase,
                    emotion: item.emotion.clone(),
                    intensity: item.intensity,
                });
            }
        }
    }
    Ok(out)
}
