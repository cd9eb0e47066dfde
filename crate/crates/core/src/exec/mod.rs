//! Query evaluation engines, all instrumented with [`Counters`].

mod backtrack;
mod brute;
mod heavy_light;
mod panda;
mod report;

pub use self::backtrack::{backtrack_join, BacktrackOutput};
pub use self::brute::bruteforce_join;
pub use self::heavy_light::{triangle_heavy_light, HeavyLightOutput};
pub use self::panda::{balance_theta, default_thetas, panda_interpret, AnnotatedStep, PandaOutput, TraceLine};
pub use self::report::ExecutionReport;

use crate::counters::Counters;
use crate::error::{Error, Result};
use crate::query::{DegreeConstraint, Query};
use crate::relation::{semijoin_counted, Relation};

/// Atom index of the relation guarding `c`: its named guard, or else the
/// first atom whose variables contain `Y`.
pub(crate) fn guard_atom_for(query: &Query, c: &DegreeConstraint) -> Result<usize> {
    match &c.guard {
        Some(g) => query.guard_atom(g, c.y),
        None => query
            .atoms()
            .iter()
            .position(|a| c.y.is_subset(a.var_set()))
            .ok_or_else(|| Error::Unaffiliated(c.label(query.var_names()))),
    }
}

/// Semijoin-reduces `rel` by each of `others`. A relation sharing no
/// attribute only matters when it is empty.
pub(crate) fn semijoin_all(rel: Relation, others: &[Relation], counters: &mut Counters) -> Result<Relation> {
    let mut out = rel;
    for o in others {
        if o.schema().iter().any(|a| out.column_index(a).is_some()) {
            out = semijoin_counted(&out, o, counters)?;
        } else if o.is_empty() {
            out = Relation::empty(out.name(), out.schema().to_vec());
        }
        if out.is_empty() {
            break;
        }
    }
    Ok(out)
}
