//! Comparator analyses: Cox regression, O'Brien's rank-sum test, and the
//! odds-ratio test on a 2x2 table.

mod contingency;
mod cox;
mod obrien;

pub use contingency::{contingency_from_continuous, contingency_or_test, OrResult};
pub use cox::{cox_fit, cox_fit_observed, CoxDesign, CoxModel, CoxResult};
pub use obrien::{obrien_continuous, obrien_survival, obrien_test, ObrienResult};
