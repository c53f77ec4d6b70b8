//! Composite Hilbert space of a single-excitation Rydberg system and a set of
//! three-level environment atoms.
//!
//! Basis states are ordered system-major: the flat index of
//! `|pi_n> (x) |l_0 l_1 ... l_{M-1}>` is `n * 3^M + sum_a l_a * 3^(M-1-a)`,
//! so environment atom 0 is the most significant environment digit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Internal level of an environment atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EnvLevel {
    Ground = 0,
    Intermediate = 1,
    Rydberg = 2,
}

impl EnvLevel {
    pub const ALL: [EnvLevel; 3] = [EnvLevel::Ground, EnvLevel::Intermediate, EnvLevel::Rydberg];

    pub fn from_digit(d: usize) -> Option<Self> {
        match d {
            0 => Some(EnvLevel::Ground),
            1 => Some(EnvLevel::Intermediate),
            2 => Some(EnvLevel::Rydberg),
            _ => None,
        }
    }

    pub fn digit(self) -> usize {
        self as usize
    }
}

/// Sizes of the system and environment registers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceSpec {
    n_system: usize,
    n_env: usize,
}

/// A decoded basis label.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasisIndex {
    pub excitation_site: usize,
    pub env_levels: Vec<EnvLevel>,
}

impl SpaceSpec {
    pub fn new(n_system: usize, n_env: usize) -> Result<Self> {
        if n_system < 2 {
            return Err(Error::InvalidSpace(format!(
                "need at least two system atoms, got {n_system}"
            )));
        }
        if n_env < 1 {
            return Err(Error::InvalidSpace(
                "need at least one environment atom".to_string(),
            ));
        }
        // 3^M must fit comfortably; M = 12 is already half a million states.
        if n_env > 16 {
            return Err(Error::InvalidSpace(format!("{n_env} environment atoms is too many")));
        }
        Ok(Self { n_system, n_env })
    }

    pub fn n_system(&self) -> usize {
        self.n_system
    }

    pub fn n_env(&self) -> usize {
        self.n_env
    }

    /// Number of environment configurations, `3^M`.
    pub fn env_dimension(&self) -> usize {
        3usize.pow(self.n_env as u32)
    }

    /// Total Hilbert-space dimension `N * 3^M`.
    pub fn dimension(&self) -> usize {
        self.n_system * self.env_dimension()
    }

    /// Place value of environment atom `alpha` inside the environment index.
    pub fn env_stride(&self, alpha: usize) -> usize {
        debug_assert!(alpha < self.n_env);
        3usize.pow((self.n_env - 1 - alpha) as u32)
    }

    pub fn flatten(&self, excitation_site: usize, env_levels: &[EnvLevel]) -> Result<usize> {
        if excitation_site >= self.n_system {
            return Err(Error::IndexOutOfRange {
                index: excitation_site,
                limit: self.n_system,
            });
        }
        if env_levels.len() != self.n_env {
            return Err(Error::DimensionMismatch {
                expected: self.n_env,
                found: env_levels.len(),
            });
        }
        let env = env_levels
            .iter()
            .fold(0usize, |acc, level| acc * 3 + level.digit());
        Ok(excitation_site * self.env_dimension() + env)
    }

    pub fn unflatten(&self, index: usize) -> Result<BasisIndex> {
        let dim = self.dimension();
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, limit: dim });
        }
        let env_dim = self.env_dimension();
        let mut env = index % env_dim;
        let mut env_levels = vec![EnvLevel::Ground; self.n_env];
        for slot in env_levels.iter_mut().rev() {
            *slot = EnvLevel::from_digit(env % 3).expect("digit below 3");
            env /= 3;
        }
        Ok(BasisIndex {
            excitation_site: index / env_dim,
            env_levels,
        })
    }

    /// Excitation site of a flat index, without decoding the environment.
    pub fn site_of(&self, index: usize) -> usize {
        index / self.env_dimension()
    }

    /// Level of environment atom `alpha` in a flat index.
    pub fn env_level_of(&self, index: usize, alpha: usize) -> EnvLevel {
        let digit = (index / self.env_stride(alpha)) % 3;
        EnvLevel::from_digit(digit).expect("digit below 3")
    }

    /// Flat index of `|pi_site> (x) |g g ... g>`.
    pub fn ground_index(&self, excitation_site: usize) -> usize {
        excitation_site * self.env_dimension()
    }
}
