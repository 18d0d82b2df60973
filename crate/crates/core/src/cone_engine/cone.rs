use nalgebra::DMatrix;
use serde::Serialize;

use super::tseq::TSequence;
use crate::error::{Error, Result};
use crate::opsys_core::{make_generator, GeneratorSpec, HermLevel, SpaceKind, SpaceRef, VElement};

/// A level-1 cone given by finitely many generators, read with
/// Archimedean ε-semantics: `y` is a member at ε when `y + εe` is a
/// nonnegative combination of generators.
#[derive(Debug, Clone)]
pub struct GeneratorCone {
    pub space: SpaceRef,
    pub generators: Vec<VElement>,
    /// Provenance of each generator; `None` for generators added by hand.
    pub specs: Vec<Option<GeneratorSpec>>,
    pub n_max: usize,
    pub tseq: TSequence,
    gmat: DMatrix<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConeDescription {
    pub space: SpaceTagJson,
    pub level: usize,
    pub tseq: TSequence,
    #[serde(rename = "N_max")]
    pub n_max: usize,
    pub generator_count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpaceTagJson {
    pub kind: SpaceKind,
    pub d: usize,
}

impl GeneratorCone {
    pub fn new(
        space: &SpaceRef,
        generators: Vec<VElement>,
        specs: Vec<Option<GeneratorSpec>>,
        n_max: usize,
        tseq: TSequence,
    ) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::InvalidParameter("N_max must be at least 1".into()));
        }
        if generators.is_empty() {
            return Err(Error::InvalidInput(
                "a cone needs at least one generator".into(),
            ));
        }
        if generators.iter().any(|g| !g.space.same_as(space)) {
            return Err(Error::DimensionMismatch(
                "generator from a different space".into(),
            ));
        }
        let mut keep_g = Vec::new();
        let mut keep_s = Vec::new();
        for (g, s) in generators.into_iter().zip(specs) {
            if !keep_g.iter().any(|h: &VElement| h.coeffs == g.coeffs) {
                keep_g.push(g);
                keep_s.push(s);
            }
        }
        let gmat = DMatrix::from_fn(space.dim, keep_g.len(), |k, j| keep_g[j].coeffs[k]);
        Ok(Self {
            space: space.clone(),
            generators: keep_g,
            specs: keep_s,
            n_max,
            tseq,
            gmat,
        })
    }

    /// `dim × g` matrix whose columns are the generator coordinates.
    pub fn gmat(&self) -> &DMatrix<f64> {
        &self.gmat
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// A copy with extra generators appended.
    pub fn with_extra(&self, extra: &[VElement]) -> Result<Self> {
        let mut g = self.generators.clone();
        let mut s = self.specs.clone();
        for v in extra {
            g.push(v.clone());
            s.push(None);
        }
        Self::new(&self.space, g, s, self.n_max, self.tseq.clone())
    }

    /// The generators as level-1 elements.
    pub fn generator_levels(&self) -> Vec<HermLevel> {
        self.generators.iter().map(VElement::to_level).collect()
    }

    pub fn describe(&self) -> ConeDescription {
        ConeDescription {
            space: SpaceTagJson {
                kind: self.space.kind,
                d: self.space.d,
            },
            level: 1,
            tseq: self.tseq.clone(),
            n_max: self.n_max,
            generator_count: self.len(),
        }
    }
}

/// The generator specs of the initial cone, in a fixed order.
pub fn initial_generator_specs(
    space: &SpaceRef,
    tseq: &TSequence,
    n_max: usize,
) -> Vec<GeneratorSpec> {
    let mut specs = Vec::new();
    match space.kind {
        SpaceKind::Sic => {
            let m = space.dim;
            specs.extend((1..=m).map(GeneratorSpec::BasisProj));
            specs.extend((1..=m).map(GeneratorSpec::BasisProjPerp));
            for n in 1..=n_max {
                let t = tseq.t(n);
                for i in 1..=m {
                    for j in 1..=m {
                        if i != j {
                            specs.push(GeneratorSpec::XPlus { i, j, n, t });
                            specs.push(GeneratorSpec::XMinus { i, j, n, t });
                        }
                    }
                }
            }
        }
        SpaceKind::Mub => {
            let d = space.d;
            specs.extend((1..=space.num_projections()).map(GeneratorSpec::BasisProj));
            for n in 1..=n_max {
                let t = tseq.t(n);
                for x in 1..=d + 1 {
                    for i in 1..=d {
                        for y in 1..=d + 1 {
                            if x == y {
                                continue;
                            }
                            for j in 1..=d {
                                specs.push(GeneratorSpec::YPlus { x, i, y, j, n, t });
                                specs.push(GeneratorSpec::YMinus { x, i, y, j, n, t });
                            }
                        }
                    }
                }
            }
        }
    }
    specs
}

pub fn build_initial_cone(
    space: &SpaceRef,
    tseq: &TSequence,
    n_max: usize,
) -> Result<GeneratorCone> {
    tseq.validate()?;
    if n_max == 0 {
        return Err(Error::InvalidParameter("N_max must be at least 1".into()));
    }
    let specs = initial_generator_specs(space, tseq, n_max);
    let gens = specs
        .iter()
        .map(|s| make_generator(space, s))
        .collect::<Result<Vec<_>>>()?;
    GeneratorCone::new(
        space,
        gens,
        specs.into_iter().map(Some).collect(),
        n_max,
        tseq.clone(),
    )
}
