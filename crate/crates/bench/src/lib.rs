//! Fixtures shared by the benchmarks.

use rigidity_core::{catalog, unit_disc, Domain, RefractionField};

/// Unit disc with the catalog bump medium.
pub fn bump_fixture() -> (Domain, RefractionField) {
    let d = unit_disc();
    let f = catalog::bump(&d).expect("catalog medium is valid");
    (d, f)
}
