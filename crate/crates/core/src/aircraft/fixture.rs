//! The nine-aircraft reference table and the four-runway airport it runs on.

use super::model::{Aircraft, CaseModel};
use super::table::read_table;

pub const ARRIVALS_CSV: &str = include_str!("../../../../fixtures/arrivals.csv");
pub const AIRPORT_JSON: &str = include_str!("../../../../fixtures/airport.json");

pub fn arrivals() -> Vec<Aircraft> {
    read_table(ARRIVALS_CSV.as_bytes()).expect("reference table parses")
}

pub fn case_model() -> CaseModel {
    serde_json::from_str(AIRPORT_JSON).expect("reference airport parses")
}

pub fn airport() -> super::model::Airport {
    case_model().airport
}
