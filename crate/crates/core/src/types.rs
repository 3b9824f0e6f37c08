//! Pure, dirty and skeletal types, structural subtyping, and the lattice
//! operations used by minimal-type synthesis.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::syntax::Name;

/// A finite set of instances an effect-typed expression may denote.
pub type Region = BTreeSet<Name>;

/// A single operation `ι#op`: an operation symbol paired with an instance.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Operation {
    pub instance: Name,
    pub op: Name,
}

impl Operation {
    pub fn new(instance: impl Into<Name>, op: impl Into<Name>) -> Self {
        Operation {
            instance: instance.into(),
            op: op.into(),
        }
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.instance, self.op)
    }
}

/// A finite set of operations a computation may call.
pub type Dirt = BTreeSet<Operation>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PureType {
    Bool,
    Nat,
    Unit,
    Empty,
    Arrow(Box<PureType>, Box<DirtyType>),
    Effect(Name, Region),
    Handler(Box<DirtyType>, Box<DirtyType>),
}

/// A pure type tagged with the operations that may be called: `A ! Δ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DirtyType {
    pub pure: PureType,
    pub dirt: Dirt,
}

impl DirtyType {
    pub fn new(pure: PureType, dirt: Dirt) -> Self {
        DirtyType { pure, dirt }
    }

    pub fn pure(pure: PureType) -> Self {
        DirtyType {
            pure,
            dirt: Dirt::new(),
        }
    }
}

impl PureType {
    pub fn arrow(dom: PureType, cod: DirtyType) -> Self {
        PureType::Arrow(Box::new(dom), Box::new(cod))
    }

    pub fn handler(ingoing: DirtyType, outgoing: DirtyType) -> Self {
        PureType::Handler(Box::new(ingoing), Box::new(outgoing))
    }

    pub fn effect<I, S>(effect: impl Into<Name>, region: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<Name>,
    {
        PureType::Effect(effect.into(), region.into_iter().map(Into::into).collect())
    }

    /// Ground types are the ones whose closed values can be compared
    /// structurally and enumerated.
    pub fn is_ground(&self) -> bool {
        matches!(
            self,
            PureType::Bool | PureType::Nat | PureType::Unit | PureType::Empty
        )
    }
}

/// Effect-erased types.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SkeletalType {
    Bool,
    Nat,
    Unit,
    Empty,
    Arrow(Box<SkeletalType>, Box<SkeletalType>),
    Effect(Name),
    Handler(Box<SkeletalType>, Box<SkeletalType>),
}

impl SkeletalType {
    pub fn arrow(dom: SkeletalType, cod: SkeletalType) -> Self {
        SkeletalType::Arrow(Box::new(dom), Box::new(cod))
    }

    pub fn handler(ingoing: SkeletalType, outgoing: SkeletalType) -> Self {
        SkeletalType::Handler(Box::new(ingoing), Box::new(outgoing))
    }
}

pub fn skeleton(ty: &PureType) -> SkeletalType {
    match ty {
        PureType::Bool => SkeletalType::Bool,
        PureType::Nat => SkeletalType::Nat,
        PureType::Unit => SkeletalType::Unit,
        PureType::Empty => SkeletalType::Empty,
        PureType::Arrow(a, c) => SkeletalType::arrow(skeleton(a), skeleton_dirty(c)),
        PureType::Effect(e, _) => SkeletalType::Effect(e.clone()),
        PureType::Handler(c, d) => SkeletalType::handler(skeleton_dirty(c), skeleton_dirty(d)),
    }
}

pub fn skeleton_dirty(ty: &DirtyType) -> SkeletalType {
    skeleton(&ty.pure)
}

pub fn subtype_pure(a: &PureType, b: &PureType) -> bool {
    match (a, b) {
        (PureType::Bool, PureType::Bool)
        | (PureType::Nat, PureType::Nat)
        | (PureType::Unit, PureType::Unit)
        | (PureType::Empty, PureType::Empty) => true,
        (PureType::Arrow(a1, c1), PureType::Arrow(a2, c2)) => {
            subtype_pure(a2, a1) && subtype_dirty(c1, c2)
        }
        (PureType::Effect(e1, r1), PureType::Effect(e2, r2)) => e1 == e2 && r1.is_subset(r2),
        (PureType::Handler(c1, d1), PureType::Handler(c2, d2)) => {
            subtype_dirty(c2, c1) && subtype_dirty(d1, d2)
        }
        _ => false,
    }
}

pub fn subtype_dirty(c: &DirtyType, d: &DirtyType) -> bool {
    c.dirt.is_subset(&d.dirt) && subtype_pure(&c.pure, &d.pure)
}

/// Least upper bound of two pure types with equal skeletons; `None` when the
/// skeletons differ.
pub fn join_pure(a: &PureType, b: &PureType) -> Option<PureType> {
    lattice_pure(a, b, true)
}

/// Greatest lower bound of two pure types with equal skeletons.
pub fn meet_pure(a: &PureType, b: &PureType) -> Option<PureType> {
    lattice_pure(a, b, false)
}

pub fn join_dirty(c: &DirtyType, d: &DirtyType) -> Option<DirtyType> {
    lattice_dirty(c, d, true)
}

pub fn meet_dirty(c: &DirtyType, d: &DirtyType) -> Option<DirtyType> {
    lattice_dirty(c, d, false)
}

fn lattice_dirty(c: &DirtyType, d: &DirtyType, upper: bool) -> Option<DirtyType> {
    let pure = lattice_pure(&c.pure, &d.pure, upper)?;
    let dirt = if upper {
        c.dirt.union(&d.dirt).cloned().collect()
    } else {
        c.dirt.intersection(&d.dirt).cloned().collect()
    };
    Some(DirtyType { pure, dirt })
}

fn lattice_pure(a: &PureType, b: &PureType, upper: bool) -> Option<PureType> {
    Some(match (a, b) {
        (PureType::Bool, PureType::Bool) => PureType::Bool,
        (PureType::Nat, PureType::Nat) => PureType::Nat,
        (PureType::Unit, PureType::Unit) => PureType::Unit,
        (PureType::Empty, PureType::Empty) => PureType::Empty,
        (PureType::Arrow(a1, c1), PureType::Arrow(a2, c2)) => PureType::arrow(
            lattice_pure(a1, a2, !upper)?,
            lattice_dirty(c1, c2, upper)?,
        ),
        (PureType::Effect(e1, r1), PureType::Effect(e2, r2)) if e1 == e2 => {
            let region = if upper {
                r1.union(r2).cloned().collect()
            } else {
                r1.intersection(r2).cloned().collect()
            };
            PureType::Effect(e1.clone(), region)
        }
        (PureType::Handler(c1, d1), PureType::Handler(c2, d2)) => PureType::handler(
            lattice_dirty(c1, c2, !upper)?,
            lattice_dirty(d1, d2, upper)?,
        ),
        _ => return None,
    })
}
