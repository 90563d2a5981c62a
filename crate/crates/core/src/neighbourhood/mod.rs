//! Neighbourhood templates and the structures instantiated from variable
//! types.
//!
//! A structure is a chain of lifts ending in an atomic, direct or
//! synchronised template. Instantiation starts at the outermost type of a
//! variable, adds every template applicable there, then descends through
//! each liftable container.

mod apply;

use std::fmt;

use crate::domain::Domain;
use crate::lang::Model;

pub use apply::{apply_structure, domain_local_ok, Outcome, MAX_ATTEMPTS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Atomic,
    Direct,
    HigherOrder,
    Synchronised,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Template {
    BoolReassign,
    EnumAssignRandom,
    IntAssignRandom,
    IntAssignRandomFromViolation,
    SetAdd,
    SetRemove,
    MSetAdd,
    MSetRemove,
    SeqAdd,
    SeqRemove,
    SeqReverseSub,
    SeqPositionsSwap,
    SeqReassignSub,
    FuncAdd,
    FuncRemove,
    FuncUnifyImages,
    FuncSplitImages,
    FuncSwap,
    FuncSwapAlongAxis,
    PartMoveParts,
    PartSwapParts,
    PartMergeParts,
    PartSplitPart,
    LiftSingle,
    LiftMultiple,
    SetMove,
    SetCrossover,
    SeqMove,
    SeqCrossover,
    FuncCrossover,
}

use Template::*;

pub const CATALOGUE: [Template; 30] = [
    BoolReassign,
    EnumAssignRandom,
    IntAssignRandom,
    IntAssignRandomFromViolation,
    SetAdd,
    SetRemove,
    MSetAdd,
    MSetRemove,
    SeqAdd,
    SeqRemove,
    SeqReverseSub,
    SeqPositionsSwap,
    SeqReassignSub,
    FuncAdd,
    FuncRemove,
    FuncUnifyImages,
    FuncSplitImages,
    FuncSwap,
    FuncSwapAlongAxis,
    PartMoveParts,
    PartSwapParts,
    PartMergeParts,
    PartSplitPart,
    LiftSingle,
    LiftMultiple,
    SetMove,
    SetCrossover,
    SeqMove,
    SeqCrossover,
    FuncCrossover,
];

impl Template {
    pub fn family(self) -> Family {
        match self {
            BoolReassign | EnumAssignRandom | IntAssignRandom | IntAssignRandomFromViolation => Family::Atomic,
            LiftSingle | LiftMultiple => Family::HigherOrder,
            SetMove | SetCrossover | SeqMove | SeqCrossover | FuncCrossover => Family::Synchronised,
            _ => Family::Direct,
        }
    }

    /// Type constructor the template applies to.
    pub fn type_name(self) -> &'static str {
        match self {
            BoolReassign => "bool",
            EnumAssignRandom => "enum",
            IntAssignRandom | IntAssignRandomFromViolation => "int",
            SetAdd | SetRemove | SetMove | SetCrossover => "set",
            MSetAdd | MSetRemove => "mset",
            SeqAdd | SeqRemove | SeqReverseSub | SeqPositionsSwap | SeqReassignSub | SeqMove | SeqCrossover => {
                "sequence"
            }
            FuncAdd | FuncRemove | FuncUnifyImages | FuncSplitImages | FuncSwap | FuncSwapAlongAxis
            | FuncCrossover => "function",
            PartMoveParts | PartSwapParts | PartMergeParts | PartSplitPart => "partition",
            LiftSingle | LiftMultiple => "container",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BoolReassign => "boolReassign",
            EnumAssignRandom => "enumAssignRandom",
            IntAssignRandom => "intAssignRandom",
            IntAssignRandomFromViolation => "intAssignRandomFromViolation",
            SetAdd => "SetAdd",
            SetRemove => "SetRemove",
            MSetAdd => "MSetAdd",
            MSetRemove => "MSetRemove",
            SeqAdd => "SeqAdd",
            SeqRemove => "SeqRemove",
            SeqReverseSub => "SeqReverseSub",
            SeqPositionsSwap => "SeqPositionsSwap",
            SeqReassignSub => "SeqReassignSub",
            FuncAdd => "FuncAdd",
            FuncRemove => "FuncRemove",
            FuncUnifyImages => "FuncUnifyImages",
            FuncSplitImages => "FuncSplitImages",
            FuncSwap => "FuncSwap",
            FuncSwapAlongAxis => "FuncSwapAlongAxis",
            PartMoveParts => "PartMoveParts",
            PartSwapParts => "PartSwapParts",
            PartMergeParts => "PartMergeParts",
            PartSplitPart => "PartSplitPart",
            LiftSingle => "LiftSingle",
            LiftMultiple => "LiftMultiple",
            SetMove => "SetMove",
            SetCrossover => "SetCrossover",
            SeqMove => "SeqMove",
            SeqCrossover => "SeqCrossover",
            FuncCrossover => "FuncCrossover",
        }
    }

    /// Whether the template may be instantiated directly on `d`, after
    /// attribute filtering. Synchronised templates answer for the member
    /// type they are lifted onto.
    pub fn applies(self, d: &Domain) -> bool {
        let resizable = !d.fixed_size();
        match (self, d) {
            (BoolReassign, Domain::Bool) => true,
            (EnumAssignRandom, Domain::Enum { names, .. }) => names.len() > 1,
            (IntAssignRandom | IntAssignRandomFromViolation, Domain::Int(i)) => i.count() > 1,
            (SetAdd | SetRemove | SetMove, Domain::Set { .. }) => resizable,
            (SetCrossover, Domain::Set { .. }) => true,
            (MSetAdd | MSetRemove, Domain::MSet { .. }) => resizable,
            (SeqAdd | SeqReassignSub, Domain::Seq { injective, .. }) => {
                !injective && (self == SeqReassignSub || resizable)
            }
            (SeqRemove | SeqMove, Domain::Seq { .. }) => resizable,
            (SeqReverseSub | SeqPositionsSwap | SeqCrossover, Domain::Seq { .. }) => true,
            (FuncAdd | FuncRemove, Domain::Func { total, .. }) => !total && resizable,
            (FuncUnifyImages | FuncSplitImages, Domain::Func { injective, .. }) => !injective,
            (FuncSwap | FuncCrossover, Domain::Func { .. }) => true,
            (FuncSwapAlongAxis, Domain::Func { from, .. }) => {
                matches!(&**from, Domain::Tuple(ds) if !ds.is_empty() && ds.iter().all(Domain::is_atomic))
            }
            (PartMoveParts | PartSwapParts, Domain::Part { .. }) => true,
            (PartMergeParts | PartSplitPart, Domain::Part { parts, .. }) => !parts.is_fixed(),
            (LiftSingle | LiftMultiple, Domain::Set { .. } | Domain::MSet { .. } | Domain::Seq { .. } | Domain::Func { .. }) => {
                true
            }
            _ => false,
        }
    }
}

/// Name prefix of a liftable container type.
fn container_prefix(d: &Domain) -> &'static str {
    match d {
        Domain::Set { .. } => "Set",
        Domain::MSet { .. } => "MSet",
        Domain::Seq { .. } => "Seq",
        Domain::Func { .. } => "Func",
        _ => unreachable!("not liftable"),
    }
}

/// A template chain bound to one decision variable.
#[derive(Clone, Debug, PartialEq)]
pub struct Structure {
    pub var: usize,
    pub name: String,
    /// Lift templates from the outermost type inwards.
    pub lifts: Vec<Template>,
    pub template: Template,
    /// Domain at each level: `domains[k]` is the type after `k` lifts.
    pub domains: Vec<Domain>,
}

impl Structure {
    /// Whether selection may consult attributed violation.
    pub fn uses_violation(&self) -> bool {
        !self.lifts.is_empty() || self.template == IntAssignRandomFromViolation
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Every structure for every variable of `model`, in variable order.
pub fn instantiate_structures(model: &Model) -> Vec<Structure> {
    let mut out = Vec::new();
    for (var, find) in model.finds.iter().enumerate() {
        let mut chains = Vec::new();
        chains_for(&find.domain, &mut Vec::new(), &mut chains);
        for (lifts, template, domains) in chains {
            let mut name = String::new();
            for (k, l) in lifts.iter().enumerate() {
                name.push_str(container_prefix(&domains[k]));
                name.push_str(l.name());
                name.push('_');
            }
            name.push_str(template.name());
            out.push(Structure { var, name, lifts, template, domains });
        }
    }
    out
}

type Chain = (Vec<Template>, Template, Vec<Domain>);

fn chains_for(d: &Domain, outer: &mut Vec<(Template, Domain)>, out: &mut Vec<Chain>) {
    let emit = |t: Template, outer: &[(Template, Domain)], inner: &Domain, out: &mut Vec<Chain>| {
        let lifts = outer.iter().map(|x| x.0).collect();
        let mut domains: Vec<Domain> = outer.iter().map(|x| x.1.clone()).collect();
        domains.push(inner.clone());
        out.push((lifts, t, domains));
    };
    for &t in &CATALOGUE {
        if matches!(t.family(), Family::Atomic | Family::Direct) && t.applies(d) {
            emit(t, outer, d, out);
        }
    }
    if !LiftSingle.applies(d) {
        return;
    }
    let inner = d.inner().expect("container member type");
    outer.push((LiftSingle, d.clone()));
    chains_for(inner, outer, out);
    outer.pop();
    outer.push((LiftMultiple, d.clone()));
    for &t in &CATALOGUE {
        if t.family() == Family::Synchronised && t.applies(inner) {
            emit(t, outer, inner, out);
        }
    }
    outer.pop();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Card;
    use crate::lang::{instantiate, parse_params, parse_spec};

    fn names(spec: &str) -> Vec<String> {
        let m = instantiate(&parse_spec(spec).unwrap(), &parse_params("").unwrap()).unwrap();
        instantiate_structures(&m).into_iter().map(|s| s.name).collect()
    }

    #[test]
    fn catalogue_counts_per_family_and_type() {
        let count = |f: Family, ty: &str| CATALOGUE.iter().filter(|t| t.family() == f && t.type_name() == ty).count();
        assert_eq!(count(Family::Atomic, "bool"), 1);
        assert_eq!(count(Family::Atomic, "enum"), 1);
        assert_eq!(count(Family::Atomic, "int"), 2);
        assert_eq!(count(Family::Direct, "set"), 2);
        assert_eq!(count(Family::Direct, "mset"), 2);
        assert_eq!(count(Family::Direct, "sequence"), 5);
        assert_eq!(count(Family::Direct, "function"), 6);
        assert_eq!(count(Family::Direct, "partition"), 4);
        assert_eq!(CATALOGUE.iter().filter(|t| t.family() == Family::HigherOrder).count(), 2);
        assert_eq!(count(Family::Synchronised, "set"), 2);
        assert_eq!(count(Family::Synchronised, "sequence"), 2);
        assert_eq!(count(Family::Synchronised, "function"), 1);
    }

    #[test]
    fn fixed_size_set_gets_no_cardinality_changes() {
        assert_eq!(names("find s : set (size 3) of int(1..6)"), ["SetLiftSingle_intAssignRandom", "SetLiftSingle_intAssignRandomFromViolation"]);
    }

    #[test]
    fn injective_sequence_keeps_permuting_moves() {
        let n = names("find t : sequence (size 4, injective) of int(1..4)");
        assert_eq!(n[..2], ["SeqReverseSub", "SeqPositionsSwap"]);
        assert!(!n.iter().any(|x| x.contains("Add") || x.contains("ReassignSub")));
    }

    #[test]
    fn partitions_are_not_lifted() {
        assert_eq!(
            names("find p : partition from int(1..6)"),
            ["PartMoveParts", "PartSwapParts", "PartMergeParts", "PartSplitPart"]
        );
    }

    #[test]
    fn applicability_respects_attributes() {
        let fixed = Domain::set(Card::exact(2), Domain::int(1, 5));
        assert!(!SetAdd.applies(&fixed));
        assert!(SetCrossover.applies(&fixed));
        assert!(SetAdd.applies(&Domain::set(Card::any(), Domain::int(1, 5))));
    }
}
