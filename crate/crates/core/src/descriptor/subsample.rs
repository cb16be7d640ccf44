use crate::error::{Error, Result};

use super::PoseSequence;

/// Integer ratio between two sample rates.
pub fn stride_between(source_rate: f64, target_rate: f64) -> Result<usize> {
    if !(target_rate.is_finite() && target_rate > 0.0) {
        return Err(Error::Rate(format!("target rate must be positive, got {target_rate}")));
    }
    let ratio = source_rate / target_rate;
    let stride = ratio.round();
    if stride < 1.0 || (ratio - stride).abs() > 1e-9 {
        return Err(Error::Rate(format!(
            "source rate {source_rate} Hz is not an integer multiple of {target_rate} Hz"
        )));
    }
    Ok(stride as usize)
}

/// Splits a sequence into `stride` phase-shifted copies at `target_rate`;
/// copy `k` holds frames `k, k + stride, k + 2 * stride, ...`.
pub fn phase_subsample(seq: &PoseSequence, target_rate: f64) -> Result<Vec<PoseSequence>> {
    let stride = stride_between(seq.sample_rate(), target_rate)?;
    if stride == 1 {
        return Ok(vec![seq.clone()]);
    }
    if seq.len() < stride {
        return Err(Error::Rate(format!(
            "sequence of {} frames is too short for stride {stride}",
            seq.len()
        )));
    }
    Ok((0..stride)
        .map(|k| PoseSequence {
            frames: seq.frames().iter().skip(k).step_by(stride).cloned().collect(),
            sample_rate: target_rate,
            topology: seq.topology().clone(),
            source: seq.source().to_string(),
        })
        .collect())
}
