//! Shared fixtures for the benchmarks: the benchmark models, read from the
//! workspace `models/` directory at compile time.

use cbls_core::lang::{instantiate, parse_params, parse_spec, Model};

pub const MODELS: &[(&str, &str, &str)] = &[
    ("sonet", include_str!("../../../models/sonet.spec"), include_str!("../../../models/sonet.param")),
    ("tsp", include_str!("../../../models/tsp.spec"), include_str!("../../../models/tsp.param")),
    ("knapsack", include_str!("../../../models/knapsack.spec"), include_str!("../../../models/knapsack.param")),
    ("binpacking", include_str!("../../../models/binpacking.spec"), include_str!("../../../models/binpacking.param")),
    ("meb", include_str!("../../../models/meb.spec"), include_str!("../../../models/meb.param")),
];

pub fn model(spec: &str, params: &str) -> Model {
    instantiate(&parse_spec(spec).expect("spec"), &parse_params(params).expect("params")).expect("instance")
}

#[cfg(test)]
mod tests {
    #[test]
    fn every_model_instantiates() {
        for (_, s, p) in super::MODELS {
            assert!(!super::model(s, p).finds.is_empty());
        }
    }
}
