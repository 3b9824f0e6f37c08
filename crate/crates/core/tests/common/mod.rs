//! Fixtures shared by the integration tests: the program corpus, the
//! checked-in programs, a type generator and independent reference
//! implementations used as oracles.

#![allow(dead_code)]

pub mod declarative;
pub mod naive;

use std::path::PathBuf;

use coreff::equiv::{lab_table, standard_corpus};
use coreff::surface::{parse_program, ProgramFile};
use coreff::syntax::{Comp, EffectTable};
use coreff::types::{Dirt, DirtyType, Operation, PureType, SkeletalType};

pub fn programs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../programs")
}

pub fn read(name: &str) -> String {
    std::fs::read_to_string(programs_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn load(name: &str) -> ProgramFile {
    parse_program(&read(name)).unwrap_or_else(|e| panic!("{name}:{e}"))
}

/// Every `.eff` file under `programs/`, sorted by name.
pub fn program_files() -> Vec<(String, ProgramFile)> {
    let mut names: Vec<String> = std::fs::read_dir(programs_dir())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".eff"))
        .collect();
    names.sort();
    names.into_iter().map(|n| (n.clone(), load(&n))).collect()
}

/// A closed computation together with the table it is checked against.
#[derive(Debug)]
pub struct Sample {
    pub origin: String,
    pub table: EffectTable,
    pub comp: Comp,
}

/// The enumerated corpus up to `size` followed by the checked-in programs.
pub fn corpus(size: usize) -> Vec<Sample> {
    let table = lab_table();
    let mut out: Vec<Sample> = standard_corpus(&table, size)
        .into_iter()
        .enumerate()
        .map(|(i, comp)| Sample {
            origin: format!("corpus #{i}"),
            table: table.clone(),
            comp,
        })
        .collect();
    out.extend(program_files().into_iter().map(|(name, p)| Sample {
        origin: name,
        table: p.table,
        comp: p.body,
    }));
    out
}

pub fn ops(list: &[(&str, &str)]) -> Dirt {
    list.iter().map(|(i, o)| Operation::new(*i, *o)).collect()
}

/// Pure types over the lab effects, `size` counting base types as 1 and
/// each arrow or handler constructor as 1.
pub fn types_up_to(size: usize) -> Vec<PureType> {
    let base = vec![
        PureType::Unit,
        PureType::Bool,
        PureType::Nat,
        PureType::Empty,
        PureType::effect("ref", Vec::<&str>::new()),
        PureType::effect("ref", ["i"]),
        PureType::effect("ref", ["j"]),
        PureType::effect("ref", ["i", "j"]),
        PureType::effect("choice", Vec::<&str>::new()),
        PureType::effect("choice", ["ch"]),
        PureType::effect("exc", ["ex"]),
    ];
    let dirts = [
        ops(&[]),
        ops(&[("i", "lookup")]),
        ops(&[("i", "lookup"), ("i", "update")]),
        ops(&[("j", "lookup")]),
    ];
    let mut by_size: Vec<Vec<PureType>> = vec![Vec::new(), base];
    for n in 2..=size {
        let mut level = Vec::new();
        for left in 1..n - 1 {
            let right = n - 1 - left;
            for a in &by_size[left] {
                for b in &by_size[right] {
                    for d in &dirts {
                        level.push(PureType::arrow(a.clone(), DirtyType::new(b.clone(), d.clone())));
                        for d2 in &dirts {
                            level.push(PureType::handler(
                                DirtyType::new(a.clone(), d.clone()),
                                DirtyType::new(b.clone(), d2.clone()),
                            ));
                        }
                    }
                }
            }
        }
        by_size.push(level);
    }
    by_size.into_iter().flatten().collect()
}

/// Subtyping read off as a covariance/contravariance walk: a pair is related
/// when the two types have the same constructors everywhere and every region
/// or dirt sits in the right inclusion for the polarity of its position.
pub fn reference_subtype(a: &PureType, b: &PureType) -> bool {
    fn walk(a: &PureType, b: &PureType, positive: bool) -> bool {
        match (a, b) {
            (PureType::Unit, PureType::Unit)
            | (PureType::Bool, PureType::Bool)
            | (PureType::Nat, PureType::Nat)
            | (PureType::Empty, PureType::Empty) => true,
            (PureType::Effect(e1, r1), PureType::Effect(e2, r2)) => {
                let (small, big) = lo_hi(r1, r2, positive);
                e1 == e2 && small.iter().all(|x| big.contains(x))
            }
            (PureType::Arrow(a1, c1), PureType::Arrow(a2, c2)) => {
                walk(a1, a2, !positive) && walk_dirty(c1, c2, positive)
            }
            (PureType::Handler(c1, d1), PureType::Handler(c2, d2)) => {
                walk_dirty(c1, c2, !positive) && walk_dirty(d1, d2, positive)
            }
            _ => false,
        }
    }
    fn lo_hi<'a, T>(x: &'a T, y: &'a T, positive: bool) -> (&'a T, &'a T) {
        if positive {
            (x, y)
        } else {
            (y, x)
        }
    }
    fn walk_dirty(c: &DirtyType, d: &DirtyType, positive: bool) -> bool {
        let (small, big) = lo_hi(&c.dirt, &d.dirt, positive);
        small.iter().all(|o| big.contains(o)) && walk(&c.pure, &d.pure, positive)
    }
    walk(a, b, true)
}

/// Skeleton by erasing every region and dirt.
pub fn reference_skeleton(ty: &PureType) -> SkeletalType {
    match ty {
        PureType::Unit => SkeletalType::Unit,
        PureType::Bool => SkeletalType::Bool,
        PureType::Nat => SkeletalType::Nat,
        PureType::Empty => SkeletalType::Empty,
        PureType::Effect(e, _) => SkeletalType::Effect(e.clone()),
        PureType::Arrow(a, c) => SkeletalType::arrow(reference_skeleton(a), reference_skeleton(&c.pure)),
        PureType::Handler(c, d) => {
            SkeletalType::handler(reference_skeleton(&c.pure), reference_skeleton(&d.pure))
        }
    }
}
