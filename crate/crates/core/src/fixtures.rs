//! Networks shipped with the crate.
//!
//! | name | contents |
//! |------|----------|
//! | `two-od` | two ODs sharing one line through a transfer, five runs |
//! | `synthetic4` | four crossing lines, sixteen ODs of 2000 users |
//! | `mtr-previous` | central Hong Kong MTR before the cross-harbour extensions |
//! | `mtr-current` | the same area after them |
//!
//! The MTR networks are reconstructions: line topology follows public maps,
//! demand follows published smart-card totals, and timetables are regular
//! headways with approximate running times.

use crate::error::{Error, Result};
use crate::network::Network;

pub const TWO_OD: &str = include_str!("../fixtures/two_od.json");
pub const SYNTHETIC4: &str = include_str!("../fixtures/synthetic4.json");
pub const MTR_PREVIOUS: &str = include_str!("../fixtures/mtr_previous.json");
pub const MTR_CURRENT: &str = include_str!("../fixtures/mtr_current.json");

pub const NAMES: [&str; 4] = ["two-od", "synthetic4", "mtr-previous", "mtr-current"];

pub fn source(name: &str) -> Option<&'static str> {
    match name {
        "two-od" => Some(TWO_OD),
        "synthetic4" => Some(SYNTHETIC4),
        "mtr-previous" => Some(MTR_PREVIOUS),
        "mtr-current" => Some(MTR_CURRENT),
        _ => None,
    }
}

pub fn load(name: &str) -> Result<Network> {
    let text = source(name).ok_or_else(|| Error::Config(format!("no built-in network {name}")))?;
    Network::from_json(text)
}

pub fn two_od() -> Network {
    load("two-od").expect("bundled fixture is valid")
}

pub fn synthetic4() -> Network {
    load("synthetic4").expect("bundled fixture is valid")
}

pub fn mtr_previous() -> Network {
    load("mtr-previous").expect("bundled fixture is valid")
}

pub fn mtr_current() -> Network {
    load("mtr-current").expect("bundled fixture is valid")
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_fixtures_load() {
        for name in super::NAMES {
            super::load(name).unwrap();
        }
    }

    #[test]
    fn mtr_demand_total() {
        assert_eq!(super::mtr_current().total_demand(), 52_717);
        assert_eq!(super::mtr_previous().total_demand(), 52_717);
    }
}
