//! Per-base-point drivers on the rayon pool; results are gathered in input order.

use mlwf_core::grid::SampledField;
use mlwf_core::modulation::{mod_norm, wf_mod_point, Window};
use mlwf_core::wavefront::{wf_point, Fan, WavefrontQuery, WavefrontReport};
use rayon::prelude::*;

use crate::error::CliResult;

/// Caps the global worker pool; later calls are ignored by rayon.
pub fn init_pool(jobs: Option<usize>) {
    if let Some(j) = jobs.filter(|&j| j > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
}

pub fn wf_estimate(f: &SampledField, q: &WavefrontQuery) -> CliResult<WavefrontReport> {
    let g = f.grid;
    q.validate(&g)?;
    let fan = Fan::new(&g, q)?;
    let per_point = (0..q.base_points.len())
        .into_par_iter()
        .map(|p| wf_point(f, q, &fan, p))
        .collect::<mlwf_core::Result<Vec<_>>>()?;
    Ok(WavefrontReport { grid: g, query: q.clone(), entries: per_point.into_iter().flatten().collect() })
}

pub fn wf_modulation(f: &SampledField, q: &WavefrontQuery, window: &Window) -> CliResult<WavefrontReport> {
    let g = f.grid;
    q.validate(&g)?;
    let fan = Fan::new(&g, q)?;
    let reference = mod_norm(f, &q.weight, &q.space, window)?;
    let per_point = (0..q.base_points.len())
        .into_par_iter()
        .map(|p| wf_mod_point(f, q, &fan, window, p, reference))
        .collect::<mlwf_core::Result<Vec<_>>>()?;
    Ok(WavefrontReport { grid: g, query: q.clone(), entries: per_point.into_iter().flatten().collect() })
}
