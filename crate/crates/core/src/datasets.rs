//! Embedded real data sets.

use crate::records::IntSequence;

const XIE_GOH: &str = include_str!("../data/xie_goh.txt");
const EARTHQUAKES: &str = include_str!("../data/earthquakes.txt");

/// Inspection counts between defects (support starting at 1).
pub fn xie_goh() -> IntSequence {
    IntSequence::parse(XIE_GOH, 1).expect("embedded data parse")
}

/// Yearly counts of major earthquakes, 1950-2023.
pub fn earthquakes() -> IntSequence {
    IntSequence::parse(EARTHQUAKES, 0).expect("embedded data parse")
}
