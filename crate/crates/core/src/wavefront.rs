//! Wave-front sets with respect to Fourier-Banach spaces.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::geometry::{direction_fan, make_cutoff, Cone, CutoffSpec, ShellMap};
use crate::grid::{forward_transform, Grid, SampledField};
use crate::spaces::bf::Reducer;
use crate::spaces::seminorm::{masked_norm, weighted_magnitudes};
use crate::spaces::{decide, BfSpec, DecayOptions, NormKind, Weight};
use crate::symbol::CharSetReport;

fn default_directions() -> usize {
    16
}

fn default_cutoff() -> [f64; 2] {
    [0.05, 1.3]
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavefrontQuery {
    pub base_points: Vec<[f64; 2]>,
    /// Direction bins in two dimensions; one dimension always uses the two signs.
    #[serde(default = "default_directions")]
    pub directions: usize,
    /// Inner and outer radius of the localizing cutoff.
    #[serde(default = "default_cutoff")]
    pub cutoff: [f64; 2],
    /// Cone half-angle; defaults to 1.5 bin half-widths.
    #[serde(default)]
    pub half_angle: Option<f64>,
    /// Inner cone radius; defaults to `n / 16`.
    #[serde(default)]
    pub inner_radius: Option<f64>,
    pub weight: Weight,
    pub space: BfSpec,
    #[serde(default)]
    pub decay: DecayOptions,
    /// Repeat each point with a half-radius cutoff and flag disagreement.
    #[serde(default = "yes")]
    pub half_probe: bool,
}

impl WavefrontQuery {
    pub fn new(base_points: Vec<[f64; 2]>, weight: Weight, space: BfSpec) -> Self {
        WavefrontQuery {
            base_points,
            directions: default_directions(),
            cutoff: default_cutoff(),
            half_angle: None,
            inner_radius: None,
            weight,
            space,
            decay: DecayOptions::default(),
            half_probe: true,
        }
    }

    pub fn bins(&self, dim: usize) -> usize {
        if dim == 1 {
            2
        } else {
            self.directions
        }
    }

    pub fn radius(&self, grid: &Grid) -> f64 {
        self.inner_radius.unwrap_or(grid.n() as f64 / 16.0).max(1.0)
    }

    pub fn cutoff_at(&self, grid: &Grid, center: [f64; 2]) -> Result<CutoffSpec> {
        let c = if grid.dim() == 1 { [center[0], 0.0] } else { center };
        CutoffSpec::new(c, self.cutoff[0], self.cutoff[1])
    }

    pub fn cones(&self, grid: &Grid) -> Result<Vec<Cone>> {
        let dim = grid.dim();
        let dirs = direction_fan(dim, self.bins(dim));
        let half = if dim == 1 {
            FRAC_PI_2
        } else {
            self.half_angle.unwrap_or(1.5 * PI / dirs.len() as f64)
        };
        let r = self.radius(grid);
        dirs.iter().map(|&d| Cone::new(d, half, r)).collect()
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if self.base_points.is_empty() {
            return Err(param("query needs at least one base point"));
        }
        if grid.dim() == 2 && self.directions < 2 {
            return Err(param("at least two direction bins are needed"));
        }
        if grid.dim() == 2 {
            let half = self.half_angle.unwrap_or(1.5 * PI / self.directions as f64);
            if half < PI / self.directions as f64 {
                return Err(param("cone aperture must cover a full bin"));
            }
        }
        self.space.validate()?;
        self.weight.validate()?;
        CutoffSpec::new([0.0; 2], self.cutoff[0], self.cutoff[1])?;
        if !(self.decay.eta > 0.0) {
            return Err(param("slope threshold must be positive"));
        }
        Ok(())
    }
}

/// Cone membership and shell labels shared by every base point.
#[derive(Debug, Clone)]
pub struct Fan {
    pub grid: Grid,
    pub cones: Vec<Cone>,
    pub members: Vec<Vec<u32>>,
    pub masks: Vec<Vec<bool>>,
    pub shells: ShellMap,
}

impl Fan {
    pub fn new(grid: &Grid, q: &WavefrontQuery) -> Result<Self> {
        let cones = q.cones(grid)?;
        let masks: Vec<Vec<bool>> = cones.iter().map(|c| c.mask(grid)).collect();
        let members = masks
            .iter()
            .map(|m| m.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i as u32).collect())
            .collect();
        let shells = ShellMap::new(grid, q.radius(grid))?;
        Ok(Fan { grid: *grid, cones, members, masks, shells })
    }

    /// Per cone: the masked norm and its shell norms.
    pub fn cone_norms(&self, kind: NormKind, mag: &[f64]) -> Vec<(f64, Vec<f64>)> {
        let count = self.shells.count;
        self.members
            .iter()
            .zip(&self.masks)
            .map(|(members, mask)| match kind {
                NormKind::Lp { p } => {
                    let mut total = Reducer::new(p);
                    let mut shells = vec![Reducer::new(p); count];
                    for &k in members {
                        let v = mag[k as usize];
                        total.push(v, 1.0);
                        if let Some(s) = self.shells.shell_of[k as usize] {
                            shells[s as usize].push(v, 1.0);
                        }
                    }
                    (total.value(), shells.iter().map(|r| r.value()).collect())
                }
                _ => {
                    let total = masked_norm(kind, &self.grid, mag, |i| mask[i]);
                    let shells = (0..count)
                        .map(|s| masked_norm(kind, &self.grid, mag, |i| mask[i] && self.shells.shell_of[i] == Some(s as u16)))
                        .collect();
                    (total, shells)
                }
            })
            .collect()
    }

    pub fn selections(&self) -> Vec<crate::spaces::Selection> {
        self.members
            .iter()
            .map(|m| crate::spaces::Selection {
                members: m.iter().map(|&k| (k, self.shells.shell_of[k as usize])).collect(),
                shells: self.shells.count,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WfEntry {
    pub point: usize,
    pub bin: usize,
    #[serde(with = "crate::serde_float")]
    pub value: f64,
    #[serde(with = "crate::serde_float")]
    pub slope: f64,
    pub singular: bool,
    pub unstable: bool,
    pub shells: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavefrontReport {
    pub grid: Grid,
    pub query: WavefrontQuery,
    pub entries: Vec<WfEntry>,
}

impl WavefrontReport {
    pub fn bins(&self) -> usize {
        self.query.bins(self.grid.dim())
    }

    pub fn singular(&self, point: usize, bin: usize) -> bool {
        self.entries[point * self.bins() + bin].singular
    }

    pub fn singular_count(&self) -> usize {
        self.entries.iter().filter(|e| e.singular).count()
    }

    pub fn flags(&self) -> Vec<bool> {
        self.entries.iter().map(|e| e.singular).collect()
    }

    pub fn singular_entries(&self) -> Vec<(usize, usize)> {
        self.entries.iter().filter(|e| e.singular).map(|e| (e.point, e.bin)).collect()
    }

    /// Adds characteristic entries as singular (same points and bins required).
    pub fn union_with_char(&self, ch: &CharSetReport) -> Result<WavefrontReport> {
        if ch.base_points.len() != self.query.base_points.len() || ch.directions.len() != self.bins() {
            return Err(param("characteristic report uses different points or bins"));
        }
        let mut out = self.clone();
        for (e, c) in out.entries.iter_mut().zip(&ch.entries) {
            e.singular |= c.characteristic;
        }
        Ok(out)
    }
}

/// Turns per-cone norms into entries; `half` holds the half-radius probe if any.
pub fn decide_entries(
    point: usize,
    full: Vec<(f64, Vec<f64>)>,
    half: Option<Vec<(f64, Vec<f64>)>>,
    empty: &[bool],
    reference: f64,
    opts: &DecayOptions,
) -> Vec<WfEntry> {
    let mut half = half.map(|h| h.into_iter());
    full.into_iter()
        .enumerate()
        .map(|(bin, (value, shells))| {
            let r = decide(value, shells, reference, opts);
            let regular = empty[bin] || r.regular;
            let (singular, unstable) = match half.as_mut().and_then(|h| h.next()) {
                Some((hv, hs)) => {
                    let hr = empty[bin] || decide(hv, hs, reference, opts).regular;
                    (!regular || !hr, regular != hr)
                }
                None => (!regular, false),
            };
            WfEntry { point, bin, value: r.value, slope: r.decay_slope, singular, unstable, shells: r.shell_norms }
        })
        .collect()
}

/// Entries for base point `point` of the query.
pub fn wf_point(f: &SampledField, q: &WavefrontQuery, fan: &Fan, point: usize) -> Result<Vec<WfEntry>> {
    let g = f.grid;
    let x0 = q.base_points.get(point).copied().ok_or_else(|| param("base point index out of range"))?;
    let x_ref = if g.dim() == 1 { [x0[0], 0.0] } else { x0 };
    let full_mag = weighted_magnitudes(&forward_transform(f), &q.weight, &q.space, x_ref);
    let reference = masked_norm(q.space.kind, &g, &full_mag, |_| true);
    let spec = q.cutoff_at(&g, x0)?;
    let norms = |s: &CutoffSpec| -> Result<Vec<(f64, Vec<f64>)>> {
        let loc = make_cutoff(s, g)?.mul(f)?;
        let mag = weighted_magnitudes(&forward_transform(&loc), &q.weight, &q.space, x_ref);
        Ok(fan.cone_norms(q.space.kind, &mag))
    };
    let full = norms(&spec)?;
    let half = if q.half_probe { Some(norms(&spec.scaled(0.5))?) } else { None };
    let empty: Vec<bool> = fan.members.iter().map(|m| m.is_empty()).collect();
    Ok(decide_entries(point, full, half, &empty, reference, &q.decay))
}

pub fn wf_estimate(f: &SampledField, q: &WavefrontQuery) -> Result<WavefrontReport> {
    let g = f.grid;
    q.validate(&g)?;
    let fan = Fan::new(&g, q)?;
    let mut entries = Vec::with_capacity(q.base_points.len() * fan.cones.len());
    for p in 0..q.base_points.len() {
        entries.extend(wf_point(f, q, &fan, p)?);
    }
    Ok(WavefrontReport { grid: g, query: q.clone(), entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyMode {
    Sup,
    Inf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub mode: FamilyMode,
    pub combined: WavefrontReport,
    pub members: Vec<WavefrontReport>,
}

/// Combines member reports computed with a shared cone geometry.
pub fn combine_family(mode: FamilyMode, members: Vec<WavefrontReport>) -> Result<FamilyReport> {
    let first = members.first().ok_or_else(|| param("weight family must not be empty"))?;
    for m in &members {
        if m.entries.len() != first.entries.len() {
            return Err(Error::Parameter("family members use different binning".into()));
        }
    }
    let mut combined = first.clone();
    for (i, e) in combined.entries.iter_mut().enumerate() {
        let decisive = members.iter().map(|m| &m.entries[i]).find(|m| match mode {
            FamilyMode::Sup => m.singular,
            FamilyMode::Inf => !m.singular,
        });
        match decisive {
            Some(d) => *e = d.clone(),
            None => *e = members[members.len() - 1].entries[i].clone(),
        }
    }
    Ok(FamilyReport { mode, combined, members })
}

/// Sup-type (regular iff regular for every member) or inf-type family.
pub fn wf_family(f: &SampledField, q: &WavefrontQuery, family: &[(Weight, BfSpec)], mode: FamilyMode) -> Result<FamilyReport> {
    if family.is_empty() {
        return Err(param("weight family must not be empty"));
    }
    let members = family
        .iter()
        .map(|(w, s)| {
            let mut qj = q.clone();
            qj.weight = w.clone();
            qj.space = s.clone();
            wf_estimate(f, &qj)
        })
        .collect::<Result<Vec<_>>>()?;
    combine_family(mode, members)
}

/// Sup-type family over `<xi>^j`, `j = 0..=j_max`, all with the query's space.
pub fn classical_family(q: &WavefrontQuery, j_max: u32) -> Result<Vec<(Weight, BfSpec)>> {
    if j_max < 2 {
        return Err(param("classical wave-front needs j_max >= 2"));
    }
    Ok((0..=j_max).map(|j| (Weight::sigma(j as f64), q.space.clone())).collect())
}

pub fn wf_classical(f: &SampledField, q: &WavefrontQuery, j_max: u32) -> Result<FamilyReport> {
    wf_family(f, q, &classical_family(q, j_max)?, FamilyMode::Sup)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub subset: bool,
    /// Singular entries of the first report with no singular neighbour in the second.
    pub violations: Vec<(usize, usize)>,
    pub jaccard: f64,
}

fn unmatched(a: &WavefrontReport, b: &WavefrontReport, slack: usize) -> Vec<(usize, usize)> {
    let bins = a.bins();
    // sign bins in one dimension have no neighbours
    let slack = if a.grid.dim() == 1 { 0 } else { slack.min(bins / 2) };
    a.singular_entries()
        .into_iter()
        .filter(|&(p, j)| {
            !(0..=2 * slack).any(|s| {
                let bin = (j + bins + s - slack) % bins;
                b.singular(p, bin)
            })
        })
        .collect()
}

/// Inclusion of singular sets up to `slack` neighbouring bins, and the slack-aware Jaccard index.
pub fn compare_reports(a: &WavefrontReport, b: &WavefrontReport, slack: usize) -> Result<Comparison> {
    if a.grid != b.grid || a.query.base_points.len() != b.query.base_points.len() || a.bins() != b.bins() {
        return Err(Error::Parameter(format!(
            "reports use different binning ({} x {} vs {} x {})",
            a.query.base_points.len(),
            a.bins(),
            b.query.base_points.len(),
            b.bins()
        )));
    }
    let va = unmatched(a, b, slack);
    let vb = unmatched(b, a, slack);
    let na = a.singular_count();
    let nb = b.singular_count();
    let jaccard = if na + nb == 0 { 1.0 } else { ((na - va.len()) + (nb - vb.len())) as f64 / (na + nb) as f64 };
    Ok(Comparison { subset: va.is_empty(), violations: va, jaccard })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{delta, gaussian, generate};

    fn query(points: Vec<[f64; 2]>) -> WavefrontQuery {
        let mut q = WavefrontQuery::new(points, Weight::sigma(0.0), BfSpec::lp(1.0));
        q.inner_radius = Some(8.0);
        q
    }

    #[test]
    fn gaussian_is_smooth_and_delta_is_not() {
        let g = Grid::new(2, 128).unwrap();
        let c = [PI, PI];
        let q = query(vec![c, [PI + 2.0, PI]]);
        let gauss = generate(&gaussian(c, 1.0), g, 0).unwrap();
        let r = wf_estimate(&gauss, &q).unwrap();
        assert_eq!(r.singular_count(), 0);
        let d = generate(&delta(c), g, 0).unwrap();
        let r = wf_estimate(&d, &q).unwrap();
        assert!((0..16).all(|j| r.singular(0, j)));
        assert!((0..16).all(|j| !r.singular(1, j)));
        let cmp = compare_reports(&r, &wf_estimate(&gauss, &q).unwrap(), 1).unwrap();
        assert!(!cmp.subset);
        assert_eq!(cmp.violations.len(), 16);
    }

    #[test]
    fn zero_field_is_regular() {
        let g = Grid::new(1, 64).unwrap();
        let r = wf_estimate(&SampledField::zeros(g), &query(vec![[1.0, 0.0]])).unwrap();
        assert_eq!(r.singular_count(), 0);
        let cmp = compare_reports(&r, &r, 1).unwrap();
        assert!(cmp.subset && cmp.jaccard == 1.0);
    }
}
