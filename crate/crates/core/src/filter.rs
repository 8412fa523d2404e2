//! One type over every filter variant, for code that builds, stores or
//! measures filters without caring which kind it holds.

use crate::ada::AdaBfFilter;
use crate::codec::{FilterKind, Reader};
use crate::disjoint::DisjointFilter;
use crate::error::Result;
use crate::learned::{LbfFilter, SandwichFilter};
use crate::standard::StandardBloom;

#[derive(Clone, Debug, PartialEq)]
pub enum Filter {
    Standard(StandardBloom),
    Learned(LbfFilter),
    Sandwiched(SandwichFilter),
    Ada(AdaBfFilter),
    Disjoint(DisjointFilter),
}

impl Filter {
    pub fn kind(&self) -> FilterKind {
        match self {
            Filter::Standard(_) => FilterKind::Standard,
            Filter::Learned(_) => FilterKind::Learned,
            Filter::Sandwiched(_) => FilterKind::Sandwiched,
            Filter::Ada(_) => FilterKind::Ada,
            Filter::Disjoint(_) => FilterKind::Disjoint,
        }
    }

    /// Membership query. The standard filter ignores `score`.
    #[inline]
    pub fn contains(&self, item: &[u8], score: f64) -> bool {
        match self {
            Filter::Standard(f) => f.contains(item),
            Filter::Learned(f) => f.contains(item, score),
            Filter::Sandwiched(f) => f.contains(item, score),
            Filter::Ada(f) => f.contains(item, score),
            Filter::Disjoint(f) => f.contains(item, score),
        }
    }

    pub fn bitmap_bits(&self) -> u64 {
        match self {
            Filter::Standard(f) => f.len_bits(),
            Filter::Learned(f) => f.bitmap_bits(),
            Filter::Sandwiched(f) => f.bitmap_bits(),
            Filter::Ada(f) => f.bitmap_bits(),
            Filter::Disjoint(f) => f.bitmap_bits(),
        }
    }

    /// Bits charged for the score model; always 0 for the standard filter.
    pub fn model_bits(&self) -> u64 {
        match self {
            Filter::Standard(_) => 0,
            Filter::Learned(f) => f.model_bits(),
            Filter::Sandwiched(f) => f.model_bits(),
            Filter::Ada(f) => f.model_bits(),
            Filter::Disjoint(f) => f.model_bits(),
        }
    }

    pub fn total_bits(&self) -> u64 {
        self.bitmap_bits() + self.model_bits()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            Filter::Standard(f) => f.to_bytes(),
            Filter::Learned(f) => f.to_bytes(),
            Filter::Sandwiched(f) => f.to_bytes(),
            Filter::Ada(f) => f.to_bytes(),
            Filter::Disjoint(f) => f.to_bytes(),
        }
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (kind, r) = Reader::open(bytes)?;
        Ok(match kind {
            FilterKind::Standard => Filter::Standard(StandardBloom::read_body(r)?),
            FilterKind::Learned => Filter::Learned(LbfFilter::read_body(r)?),
            FilterKind::Sandwiched => Filter::Sandwiched(SandwichFilter::read_body(r)?),
            FilterKind::Ada => Filter::Ada(AdaBfFilter::read_body(r)?),
            FilterKind::Disjoint => Filter::Disjoint(DisjointFilter::read_body(r)?),
        })
    }
}

macro_rules! impl_from {
    ($($variant:ident($ty:ty)),*) => {
        $(impl From<$ty> for Filter {
            fn from(f: $ty) -> Self {
                Filter::$variant(f)
            }
        })*
    };
}

impl_from!(
    Standard(StandardBloom),
    Learned(LbfFilter),
    Sandwiched(SandwichFilter),
    Ada(AdaBfFilter),
    Disjoint(DisjointFilter)
);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ada::{build_ada, AdaBfParams};
    use crate::disjoint::build_disjoint;
    use crate::learned::{build_lbf, build_sandwiched};
    use crate::score::{gen_synthetic, partition_by_ratio, BetaShape};
    use crate::standard::build_standard;

    #[test]
    fn every_kind_round_trips() {
        let ds = gen_synthetic(1000, 1000, BetaShape::KEYS, BetaShape::NONKEYS, 1).unwrap();
        let keys: Vec<&[u8]> = ds.keys().map(|it| it.id.as_bytes()).collect();
        let p = partition_by_ratio(&ds, 4, 2.0).unwrap();
        let filters: Vec<Filter> = vec![
            build_standard(keys, 8000, 5, 1).unwrap().into(),
            build_lbf(&ds, 8000, 0.6, 2)
                .unwrap()
                .with_model_bits(100)
                .into(),
            build_sandwiched(&ds, 8000, 0.6, 3).unwrap().into(),
            build_ada(&ds, 8000, AdaBfParams::new(p, 2.0, 5, 2).unwrap(), 4)
                .unwrap()
                .into(),
            build_disjoint(&ds, 8000, 4, 2.0, 5).unwrap().into(),
        ];
        for f in filters {
            let back = Filter::from_bytes(&f.to_bytes()).unwrap();
            assert_eq!(back.kind(), f.kind());
            assert_eq!(back, f);
            for it in ds.items() {
                assert_eq!(
                    back.contains(it.id.as_bytes(), it.score),
                    f.contains(it.id.as_bytes(), it.score)
                );
            }
        }
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let ds = gen_synthetic(100, 100, BetaShape::KEYS, BetaShape::NONKEYS, 1).unwrap();
        let bytes = Filter::from(build_lbf(&ds, 800, 0.5, 1).unwrap()).to_bytes();
        assert!(Filter::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(Filter::from_bytes(&extra).is_err());
        assert!(Filter::from_bytes(b"").is_err());
    }
}
