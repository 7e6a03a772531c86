//! Routing plans for a depth-flexible UNet.
//!
//! A UNet with L levels halves the resolution per encoder level. For an
//! input at r_in the active path enters at `entry_depth = log2(r_max/r_in)`
//! and exits at `exit_depth = log2(r_max/r_out)`; lower-resolution states
//! bypass the shallow blocks entirely. Resolution-preserving work uses a
//! symmetric encoder/decoder path; a resolution-increasing step activates
//! one extra decoder block, and the skip connections of the bypassed encoder
//! levels are fed zero tensors.
//!
//! The MAC estimate is a coarse per-block cost model
//! `resolution(level)^2 * channels(level)^2 * k^2` with k = 3 and the channel
//! profile [64, 128, 256, 512] repeated at depth.

use crate::error::{Result, SsdError};
use crate::schedules::ResolutionSchedule;

pub const DEFAULT_CONV_KERNEL: u64 = 3;

const BASE_CHANNELS: [u64; 4] = [64, 128, 256, 512];

/// Channel width at each UNet level (truncated or extended to `levels`).
pub fn channel_profile(levels: usize) -> Vec<u64> {
    (0..levels)
        .map(|l| BASE_CHANNELS[l.min(BASE_CHANNELS.len() - 1)])
        .collect()
}

/// Which blocks of the UNet one denoising step activates, and what it costs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutingPlan {
    pub unet_levels: usize,
    pub entry_depth: usize,
    pub exit_depth: usize,
    /// Encoder levels traversed, shallow to deep.
    pub active_encoder_blocks: Vec<usize>,
    /// Decoder levels traversed, deep to shallow.
    pub active_decoder_blocks: Vec<usize>,
    /// Encoder levels whose skip connections are replaced by zero tensors.
    pub zero_filled_skips: Vec<usize>,
    pub mac_estimate: u64,
}

fn depth_of(r_max: usize, r: usize) -> Result<usize> {
    if r == 0 || !r_max.is_multiple_of(r) {
        return Err(SsdError::Parameter(format!(
            "resolution {r} is not r_max/2^k of {r_max}"
        )));
    }
    let ratio = r_max / r;
    if !ratio.is_power_of_two() {
        return Err(SsdError::Parameter(format!(
            "resolution {r} is not r_max/2^k of {r_max}"
        )));
    }
    Ok(ratio.trailing_zeros() as usize)
}

/// Routes one (r_in -> r_out) step through an L-level UNet.
pub fn plan_route(
    r_in: usize,
    r_out: usize,
    unet_levels: usize,
    r_max: usize,
) -> Result<RoutingPlan> {
    if r_out != r_in && r_out != 2 * r_in {
        return Err(SsdError::Parameter(format!(
            "output resolution must be r_in or 2*r_in, got {r_in} -> {r_out}"
        )));
    }
    let entry_depth = depth_of(r_max, r_in)?;
    let exit_depth = depth_of(r_max, r_out)?;
    if entry_depth > unet_levels - 1 || exit_depth > unet_levels - 1 {
        return Err(SsdError::Parameter(format!(
            "depths ({entry_depth}, {exit_depth}) exceed the {unet_levels}-level UNet"
        )));
    }
    let active_encoder_blocks: Vec<usize> = (entry_depth..unet_levels).collect();
    let active_decoder_blocks: Vec<usize> = (exit_depth..unet_levels).rev().collect();
    let zero_filled_skips: Vec<usize> = if r_out > r_in {
        (exit_depth..entry_depth).collect()
    } else {
        Vec::new()
    };

    let profile = channel_profile(unet_levels);
    let block_cost = |level: usize| -> u64 {
        let res = (r_max >> level) as u64;
        res * res * profile[level] * profile[level] * DEFAULT_CONV_KERNEL * DEFAULT_CONV_KERNEL
    };
    let mac_estimate = active_encoder_blocks
        .iter()
        .chain(active_decoder_blocks.iter())
        .map(|&l| block_cost(l))
        .sum();

    Ok(RoutingPlan {
        unet_levels,
        entry_depth,
        exit_depth,
        active_encoder_blocks,
        active_decoder_blocks,
        zero_filled_skips,
        mac_estimate,
    })
}

/// Total MAC estimate over one full reverse chain of the schedule.
pub fn chain_mac_total(rs: &ResolutionSchedule, unet_levels: usize) -> Result<u64> {
    let r_max = rs.r_max();
    let mut total = 0u64;
    for t in 1..=rs.t_max() {
        let plan = plan_route(rs.resolution(t), rs.resolution(t - 1), unet_levels, r_max)?;
        total += plan.mac_estimate;
    }
    Ok(total)
}
