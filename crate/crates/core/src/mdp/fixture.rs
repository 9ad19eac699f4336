use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TabularMdp;
use crate::error::{Error, Result};

/// On-disk form of a [`TabularMdp`]: counts, flattened row-major tensors,
/// the discount and the initial distribution, as TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpFixture {
    pub n_states: usize,
    pub n_actions: usize,
    pub gamma: f64,
    pub initial_distribution: Vec<f64>,
    /// Indexed `(s, a, s')`.
    pub transition: Vec<f64>,
    /// Indexed `(s, a, s')`.
    pub reward: Vec<f64>,
}

impl From<&TabularMdp> for MdpFixture {
    fn from(mdp: &TabularMdp) -> Self {
        Self {
            n_states: mdp.n_states(),
            n_actions: mdp.n_actions(),
            gamma: mdp.gamma(),
            initial_distribution: mdp.initial_distribution().to_vec(),
            transition: mdp.transition().to_vec(),
            reward: mdp.reward().to_vec(),
        }
    }
}

impl TryFrom<MdpFixture> for TabularMdp {
    type Error = Error;

    fn try_from(f: MdpFixture) -> Result<Self> {
        TabularMdp::new(
            f.n_states,
            f.n_actions,
            f.transition,
            f.reward,
            f.gamma,
            f.initial_distribution,
        )
    }
}

impl TabularMdp {
    pub fn to_toml_string(&self) -> String {
        toml::to_string(&MdpFixture::from(self)).expect("fixture is always serializable")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let fixture: MdpFixture = toml::from_str(text).map_err(|e| Error::Fixture(e.to_string()))?;
        fixture.try_into()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_toml_string())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Fixture(e.to_string()))?;
        Self::from_toml_str(&text)
    }
}

#[cfg(test)]
mod tests {
    use crate::mdp::{random_mdp, TabularMdp};

    #[test]
    fn toml_round_trip_is_exact() {
        let mdp = random_mdp(3, 2, 0.95, 42).unwrap();
        let back = TabularMdp::from_toml_str(&mdp.to_toml_string()).unwrap();
        assert_eq!(mdp, back);
    }

    #[test]
    fn invalid_fixture_is_rejected() {
        let text = "n_states = 1\nn_actions = 1\ngamma = 0.9\ninitial_distribution = [1.0]\n\
                    transition = [0.7]\nreward = [0.0]\n";
        assert!(TabularMdp::from_toml_str(text).is_err());
        assert!(TabularMdp::from_toml_str("n_states = 1").is_err());
    }
}
