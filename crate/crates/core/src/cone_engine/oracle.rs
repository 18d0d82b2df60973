use super::cone::GeneratorCone;
use super::lp::validate_lp;
use super::membership::{ConeOracle, MembershipResult, Query};
use super::omax::{omax_margin, omax_query, validate_omax, OmaxOptions};
use crate::error::Result;
use crate::opsys_core::{HermLevel, SpaceRef};

/// The initial cone at level 1 and its maximal matrix ordering above.
#[derive(Debug, Clone)]
pub struct BaseOracle {
    pub cone: GeneratorCone,
    pub opts: OmaxOptions,
}

impl BaseOracle {
    pub fn new(cone: GeneratorCone, opts: OmaxOptions) -> Self {
        Self { cone, opts }
    }
}

impl ConeOracle for BaseOracle {
    fn space(&self) -> &SpaceRef {
        &self.cone.space
    }

    fn name(&self) -> String {
        format!("omax({} generators)", self.cone.len())
    }

    fn query(&self, q: &Query) -> Result<MembershipResult> {
        omax_query(&self.cone, q, &self.opts)
    }

    fn validate(&self, q: &Query, r: &MembershipResult) -> bool {
        if q.level() == 1 {
            validate_lp(&self.cone, q, r)
        } else {
            validate_omax(&self.cone, q, r)
        }
    }

    fn margin(&self, x: &HermLevel) -> Option<f64> {
        omax_margin(&self.cone, x, &self.opts).ok().flatten().map(|m| m.0)
    }

    fn margin_supergradient(&self, x: &HermLevel) -> Option<(f64, HermLevel)> {
        let (m, g) = omax_margin(&self.cone, x, &self.opts).ok().flatten()?;
        Some((m, g?))
    }
}
