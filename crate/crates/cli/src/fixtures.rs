//! Scenarios shipped with the binary, usable by name with `--scenario`.

pub const NAMES: [&str; 7] = ["example1", "example2", "stationary", "gue-d4-seed7", "sigma-x", "qubit-flip", "qubit-plus"];

pub fn builtin(name: &str) -> Option<&'static str> {
    Some(match name {
        "example1" => include_str!("../fixtures/example1.json"),
        "example2" => include_str!("../fixtures/example2.json"),
        "stationary" => include_str!("../fixtures/stationary.json"),
        "gue-d4-seed7" => include_str!("../fixtures/gue-d4-seed7.json"),
        "sigma-x" => include_str!("../fixtures/sigma-x.json"),
        "qubit-flip" => include_str!("../fixtures/qubit-flip.json"),
        "qubit-plus" => include_str!("../fixtures/qubit-plus.json"),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioSpec;

    #[test]
    fn every_fixture_parses() {
        for name in NAMES {
            let text = builtin(name).unwrap();
            let spec = ScenarioSpec::parse(text, name).unwrap();
            assert_eq!(spec.name, name);
            spec.resolve(name, Some(text)).unwrap();
        }
    }
}
