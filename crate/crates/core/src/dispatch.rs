//! Handler-case dispatch shared by both operational semantics.

use crate::subst::{fresh_name, Subst, Term};
use crate::syntax::{Comp, Expr, OpCases};

/// `ocs_{ι#op}(arg, kont)`: runs the first case whose instance and operation
/// match, binding its parameter to `arg` and its continuation to `kont`.
/// Without a match the call is forwarded as `ι#op(arg; y. kont y)`.
///
/// Case instances that are not instance literals never match; in closed
/// programs every case instance is a literal.
pub fn ocs_dispatch(ocs: &OpCases, instance: &str, op: &str, arg: &Expr, kont: &Expr) -> Comp {
    for case in &ocs.cases {
        let hit = matches!(&case.instance, Expr::Inst(i) if i == instance) && case.op == op;
        if hit {
            let mut sigma = Subst::new();
            sigma.insert(case.param.clone(), arg.clone());
            // A repeated binder is shadowed by the continuation.
            sigma.insert(case.kont.clone(), kont.clone());
            return case.body.apply(&sigma);
        }
    }
    let y = fresh_name("y", &kont.free_vars());
    Comp::op(
        Expr::inst(instance),
        op,
        arg.clone(),
        y.clone(),
        Comp::app(kont.clone(), Expr::Var(y)),
    )
}
