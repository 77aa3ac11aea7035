use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest neighbour count for which a full LBP code fits the 32-bit code planes.
pub const MAX_LBP_POINTS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescriptorKind {
    Lbp,
    Lbpriu,
    Var,
    Wld,
    LbpriuVar,
    WldVar,
}

impl DescriptorKind {
    pub const ALL: [DescriptorKind; 6] = [
        DescriptorKind::Lbp,
        DescriptorKind::Lbpriu,
        DescriptorKind::Var,
        DescriptorKind::Wld,
        DescriptorKind::LbpriuVar,
        DescriptorKind::WldVar,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DescriptorKind::Lbp => "lbp",
            DescriptorKind::Lbpriu => "lbpriu",
            DescriptorKind::Var => "var",
            DescriptorKind::Wld => "wld",
            DescriptorKind::LbpriuVar => "lbpriu_var",
            DescriptorKind::WldVar => "wld_var",
        }
    }

    /// Per-pixel parts computed at each scale, in concatenation order.
    pub fn parts(self) -> &'static [ComponentKind] {
        match self {
            DescriptorKind::Lbp => &[ComponentKind::Lbp],
            DescriptorKind::Lbpriu => &[ComponentKind::Lbpriu],
            DescriptorKind::Var => &[ComponentKind::Var],
            DescriptorKind::Wld => &[ComponentKind::Wld],
            DescriptorKind::LbpriuVar => &[ComponentKind::Lbpriu, ComponentKind::Var],
            DescriptorKind::WldVar => &[ComponentKind::Wld, ComponentKind::Var],
        }
    }

    pub fn uses_var(self) -> bool {
        self.parts().contains(&ComponentKind::Var)
    }
}

impl fmt::Display for DescriptorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DescriptorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DescriptorKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown descriptor kind {s:?}")))
    }
}

/// A single-scale per-pixel code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    Lbp,
    Lbpriu,
    Var,
    Wld,
}

/// Neighbour count `P` and radius `R` in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Scale {
    pub points: usize,
    pub radius: u32,
}

impl Scale {
    pub const fn new(points: usize, radius: u32) -> Self {
        Scale { points, radius }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.points, self.radius)
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("scale must be P,R, got {s:?}"));
        let (p, r) = s.split_once(',').ok_or_else(bad)?;
        Ok(Scale {
            points: p.trim().parse().map_err(|_| bad())?,
            radius: r.trim().parse().map_err(|_| bad())?,
        })
    }
}

/// The three scales used for multi-resolution descriptors.
pub const MULTI_SCALE: [Scale; 3] = [Scale::new(8, 1), Scale::new(16, 2), Scale::new(24, 3)];

/// Joint WLD histogram shape: `T` orientations, `M` excitation segments of `S` sub-bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WldParams {
    pub orientations: usize,
    pub segments: usize,
    pub sub_bins: usize,
}

impl Default for WldParams {
    fn default() -> Self {
        WldParams {
            orientations: 8,
            segments: 6,
            sub_bins: 20,
        }
    }
}

impl WldParams {
    pub fn bin_count(&self) -> usize {
        self.orientations * self.segments * self.sub_bins
    }
}

pub const DEFAULT_VAR_BINS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorConfig {
    pub kind: DescriptorKind,
    pub scales: Vec<Scale>,
    pub var_bins: usize,
    /// One ascending threshold list per scale; empty until trained.
    #[serde(default)]
    pub var_boundaries: Vec<Vec<f64>>,
    pub wld: WldParams,
}

impl DescriptorConfig {
    pub fn new(kind: DescriptorKind, scales: Vec<Scale>) -> Result<Self> {
        let config = DescriptorConfig {
            kind,
            scales,
            var_bins: DEFAULT_VAR_BINS,
            var_boundaries: Vec::new(),
            wld: WldParams::default(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn single(kind: DescriptorKind, points: usize, radius: u32) -> Result<Self> {
        DescriptorConfig::new(kind, vec![Scale::new(points, radius)])
    }

    pub fn multi_scale(kind: DescriptorKind) -> Result<Self> {
        DescriptorConfig::new(kind, MULTI_SCALE.to_vec())
    }

    pub fn validate(&self) -> Result<()> {
        if self.scales.is_empty() {
            return Err(Error::InvalidConfig("no scales".into()));
        }
        for s in &self.scales {
            if s.points < 4 || s.radius < 1 {
                return Err(Error::InvalidConfig(format!(
                    "scale ({s}) needs P >= 4 and R >= 1"
                )));
            }
            if self.kind == DescriptorKind::Lbp && s.points > MAX_LBP_POINTS {
                return Err(Error::InvalidConfig(format!(
                    "LBP supports P <= {MAX_LBP_POINTS}, got {}",
                    s.points
                )));
            }
            if s.points > 64 {
                return Err(Error::InvalidConfig(format!("P={} is too large", s.points)));
            }
        }
        if self.kind.uses_var() && self.var_bins < 2 {
            return Err(Error::InvalidConfig("VAR needs at least 2 bins".into()));
        }
        let w = &self.wld;
        if matches!(self.kind, DescriptorKind::Wld | DescriptorKind::WldVar)
            && (w.orientations == 0 || w.segments == 0 || w.sub_bins == 0)
        {
            return Err(Error::InvalidConfig("WLD parameters must be positive".into()));
        }
        if !self.var_boundaries.is_empty() {
            if self.var_boundaries.len() != self.scales.len() {
                return Err(Error::InvalidConfig(format!(
                    "{} VAR boundary lists for {} scales",
                    self.var_boundaries.len(),
                    self.scales.len()
                )));
            }
            for b in &self.var_boundaries {
                if b.len() >= self.var_bins {
                    return Err(Error::InvalidConfig(format!(
                        "{} VAR boundaries for {} bins",
                        b.len(),
                        self.var_bins
                    )));
                }
                if b.iter().any(|v| !v.is_finite()) || b.windows(2).any(|p| p[0] >= p[1]) {
                    return Err(Error::InvalidConfig(
                        "VAR boundaries must be finite and strictly ascending".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn needs_var_training(&self) -> bool {
        self.kind.uses_var() && self.var_boundaries.is_empty()
    }

    pub fn max_radius(&self) -> u32 {
        self.scales.iter().map(|s| s.radius).max().unwrap_or(0)
    }

    /// Components in concatenation order: scale-major, then the kind's parts.
    pub fn components(&self) -> Vec<Component> {
        self.scales
            .iter()
            .enumerate()
            .flat_map(|(scale_index, &scale)| {
                self.kind.parts().iter().map(move |&kind| Component {
                    kind,
                    scale,
                    scale_index,
                })
            })
            .collect()
    }

    pub fn component_bin_count(&self, component: &Component) -> usize {
        match component.kind {
            ComponentKind::Lbp => 1usize << component.scale.points,
            ComponentKind::Lbpriu => component.scale.points + 2,
            ComponentKind::Var => self.var_bins,
            ComponentKind::Wld => self.wld.bin_count(),
        }
    }

    /// Total length of the (possibly concatenated) histogram.
    pub fn bin_count(&self) -> usize {
        self.components()
            .iter()
            .map(|c| self.component_bin_count(c))
            .sum()
    }

    pub fn component_layout_id(&self, component: &Component) -> u64 {
        let desc = format!(
            "{:?}/{}/{}/{}",
            component.kind,
            component.scale.points,
            component.scale.radius,
            self.component_bin_count(component)
        );
        fnv1a(FNV_OFFSET, desc.as_bytes())
    }

    /// Layout identifier of the full histogram. Trained VAR boundaries do
    /// not change the layout.
    pub fn layout_id(&self) -> u64 {
        combine_layout_ids(
            self.components()
                .iter()
                .map(|c| self.component_layout_id(c)),
        )
    }

    pub fn var_boundaries_for(&self, scale_index: usize) -> Option<&[f64]> {
        self.var_boundaries.get(scale_index).map(Vec::as_slice)
    }
}

/// One single-scale code plane of a descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Component {
    pub kind: ComponentKind,
    pub scale: Scale,
    pub scale_index: usize,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Layout id of a concatenation. A single part keeps its own id.
pub(crate) fn combine_layout_ids(ids: impl IntoIterator<Item = u64>) -> u64 {
    let ids: Vec<u64> = ids.into_iter().collect();
    if ids.len() == 1 {
        return ids[0];
    }
    ids.iter()
        .fold(fnv1a(FNV_OFFSET, b"concat"), |h, id| fnv1a(h, &id.to_le_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bin_counts_follow_kind() {
        for p in [8usize, 16, 24] {
            let r = (p / 8) as u32;
            let lbp = DescriptorConfig::single(DescriptorKind::Lbp, p, r).unwrap();
            assert_eq!(lbp.bin_count(), 1 << p);
            let riu = DescriptorConfig::single(DescriptorKind::Lbpriu, p, r).unwrap();
            assert_eq!(riu.bin_count(), p + 2);
            let wld = DescriptorConfig::single(DescriptorKind::Wld, p, r).unwrap();
            assert_eq!(wld.bin_count(), 8 * 6 * 20);
            let var = DescriptorConfig::single(DescriptorKind::Var, p, r).unwrap();
            assert_eq!(var.bin_count(), 16);
        }
    }

    #[test]
    fn concatenated_layouts() {
        let c = DescriptorConfig::multi_scale(DescriptorKind::LbpriuVar).unwrap();
        assert_eq!(c.components().len(), 6);
        assert_eq!(c.bin_count(), (10 + 16) + (18 + 16) + (26 + 16));
        let c = DescriptorConfig::multi_scale(DescriptorKind::Wld).unwrap();
        assert_eq!(c.bin_count(), 3 * 960);
        assert_eq!(c.max_radius(), 3);
    }

    #[test]
    fn rejects_bad_scales() {
        assert!(DescriptorConfig::new(DescriptorKind::Wld, vec![]).is_err());
        assert!(DescriptorConfig::single(DescriptorKind::Wld, 3, 1).is_err());
        assert!(DescriptorConfig::single(DescriptorKind::Wld, 8, 0).is_err());
        assert!(DescriptorConfig::single(DescriptorKind::Lbp, 32, 4).is_err());
        assert!(DescriptorConfig::single(DescriptorKind::Lbpriu, 32, 4).is_ok());
    }

    #[test]
    fn boundaries_must_ascend() {
        let mut c = DescriptorConfig::single(DescriptorKind::Var, 8, 1).unwrap();
        c.var_boundaries = vec![vec![1.0, 1.0]];
        assert!(c.validate().is_err());
        c.var_boundaries = vec![vec![1.0, 2.0]];
        assert!(c.validate().is_ok());
        c.var_boundaries = vec![vec![1.0], vec![2.0]];
        assert!(c.validate().is_err());
    }

    #[test]
    fn layout_id_ignores_boundaries() {
        let mut c = DescriptorConfig::single(DescriptorKind::Var, 8, 1).unwrap();
        let id = c.layout_id();
        c.var_boundaries = vec![vec![3.0]];
        assert_eq!(c.layout_id(), id);
        let other = DescriptorConfig::single(DescriptorKind::Var, 16, 2).unwrap();
        assert_ne!(other.layout_id(), id);
    }

    #[test]
    fn parse_kind_and_scale() {
        assert_eq!("wld_var".parse::<DescriptorKind>().unwrap(), DescriptorKind::WldVar);
        assert!("sift".parse::<DescriptorKind>().is_err());
        assert_eq!("16,2".parse::<Scale>().unwrap(), Scale::new(16, 2));
        assert!("16".parse::<Scale>().is_err());
    }
}
