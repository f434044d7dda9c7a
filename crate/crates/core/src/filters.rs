//! Uniform dispatch over the four filters.

use std::fmt;
use std::str::FromStr;

use crate::baseline::{ggif_filter, gif_filter, wgif_filter, BaselineParams};
use crate::epgif::{epgif_filter, EpgifParams};
use crate::error::{Error, Result};
use crate::image::{ImagePlane, MultiPlaneImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FilterKind {
    Gif,
    Wgif,
    Ggif,
    Epgif,
}

impl FilterKind {
    pub const ALL: [FilterKind; 4] = [
        FilterKind::Gif,
        FilterKind::Wgif,
        FilterKind::Ggif,
        FilterKind::Epgif,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Gif => "gif",
            FilterKind::Wgif => "wgif",
            FilterKind::Ggif => "ggif",
            FilterKind::Epgif => "epgif",
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gif" => Ok(FilterKind::Gif),
            "wgif" => Ok(FilterKind::Wgif),
            "ggif" => Ok(FilterKind::Ggif),
            "epgif" => Ok(FilterKind::Epgif),
            other => Err(Error::param(format!(
                "unknown filter {other:?}, expected gif, wgif, ggif or epgif"
            ))),
        }
    }
}

/// A filter together with the full parameter set. The baseline filters use
/// only `radius`, `lambda` and `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub kind: FilterKind,
    pub params: EpgifParams,
}

impl FilterConfig {
    pub fn new(kind: FilterKind, params: EpgifParams) -> Self {
        Self { kind, params }
    }

    pub fn baseline_params(&self) -> BaselineParams {
        BaselineParams {
            radius: self.params.radius,
            lambda: self.params.lambda,
            epsilon: self.params.epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            FilterKind::Epgif => self.params.validate(),
            _ => self.baseline_params().validate(),
        }
    }

    pub fn apply(&self, x: &ImagePlane, g: &ImagePlane) -> Result<ImagePlane> {
        match self.kind {
            FilterKind::Gif => gif_filter(x, g, &self.baseline_params()),
            FilterKind::Wgif => wgif_filter(x, g, &self.baseline_params()),
            FilterKind::Ggif => ggif_filter(x, g, &self.baseline_params()),
            FilterKind::Epgif => epgif_filter(x, g, &self.params),
        }
    }

    /// Filters every plane of `x`. `None` guides each plane by itself; a
    /// one-plane guidance is shared by all planes; otherwise plane counts
    /// must agree.
    pub fn apply_image(
        &self,
        x: &MultiPlaneImage,
        guide: Option<&MultiPlaneImage>,
    ) -> Result<MultiPlaneImage> {
        if let Some(g) = guide {
            if !x.same_shape(g) {
                return Err(Error::shape(format!(
                    "input {}x{} vs guidance {}x{}",
                    x.width(),
                    x.height(),
                    g.width(),
                    g.height()
                )));
            }
            if g.num_planes() != 1 && g.num_planes() != x.num_planes() {
                return Err(Error::shape(format!(
                    "guidance has {} planes, input has {}",
                    g.num_planes(),
                    x.num_planes()
                )));
            }
        }
        x.try_map_planes(|i, p| match guide {
            None => self.apply(p, p),
            Some(g) if g.num_planes() == 1 => self.apply(p, g.plane(0)),
            Some(g) => self.apply(p, g.plane(i)),
        })
    }
}
