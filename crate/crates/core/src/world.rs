//! Synthetic pouring world.
//!
//! A closed-form stochastic stand-in for the physics simulation: trial
//! parameters are drawn from truncated normals, the relative volume follows
//! from the capacity ratio and fill level with multiplicative packing noise,
//! and spillage is a Bernoulli draw combining an overflow term and a
//! rim-interaction term.
//!
//! The default coefficients are frozen; `examples/calibrate.rs` re-derives the
//! rim coefficients and prints every calibration band.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CausalGraph, Node, VariableKind};
use crate::rng::{derive_seed, seeded, Rng};

pub const RC: &str = "RC";
pub const FU: &str = "FU";
pub const RD: &str = "RD";
pub const RV: &str = "RV";
pub const S: &str = "S";

pub const RC_SUPPORT: (f64, f64) = (0.5, 2.0);
pub const FU_SUPPORT: (f64, f64) = (0.3, 1.0);
pub const RD_SUPPORT: (f64, f64) = (0.5, 1.5);
/// fu/rc spans [0.15, 2.0]; the margin absorbs packing noise.
pub const RV_SUPPORT: (f64, f64) = (0.05, 2.5);

/// (mean, sd) of the untruncated normals the parameters are drawn from.
pub const RC_PRIOR: (f64, f64) = (1.0, 0.25);
pub const FU_PRIOR: (f64, f64) = (0.7, 0.2);
pub const RD_PRIOR: (f64, f64) = (1.0, 0.25);

/// One pouring record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    /// target capacity / source capacity
    pub rc: f64,
    /// source fill fraction
    pub fu: f64,
    /// target rim diameter / source rim diameter
    pub rd: f64,
    /// poured volume / target capacity
    pub rv: f64,
    #[serde(with = "bool_as_int")]
    pub spillage: bool,
}

impl Trial {
    pub fn get(&self, var: &str) -> Option<f64> {
        match var {
            RC => Some(self.rc),
            FU => Some(self.fu),
            RD => Some(self.rd),
            RV => Some(self.rv),
            S => Some(f64::from(u8::from(self.spillage))),
            _ => None,
        }
    }

    pub fn check(&self) -> Result<()> {
        let inside = |v: f64, (lo, hi): (f64, f64)| v.is_finite() && v >= lo && v <= hi;
        if !inside(self.rc, RC_SUPPORT)
            || !inside(self.fu, FU_SUPPORT)
            || !inside(self.rd, RD_SUPPORT)
            || !(self.rv.is_finite() && self.rv > 0.0)
        {
            return Err(Error::Schema(format!("trial outside the variable supports: {self:?}")));
        }
        Ok(())
    }
}

mod bool_as_int {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u8),
            Bool(bool),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(0) => Ok(false),
            Raw::Int(1) => Ok(true),
            Raw::Bool(b) => Ok(b),
            Raw::Text(t) => match t.trim() {
                "0" | "false" => Ok(false),
                "1" | "true" => Ok(true),
                other => Err(de::Error::custom(format!("invalid spillage value `{other}`"))),
            },
            Raw::Int(n) => Err(de::Error::custom(format!("invalid spillage value {n}"))),
        }
    }
}

/// Parameters that may be changed when a trial is replayed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    pub rc: Option<f64>,
    pub fu: Option<f64>,
    pub rd: Option<f64>,
}

impl Overrides {
    pub fn single(var: &str, value: f64) -> Result<Self> {
        let mut o = Overrides::default();
        match var {
            RC => o.rc = Some(value),
            FU => o.fu = Some(value),
            RD => o.rd = Some(value),
            other => return Err(Error::InvalidConfig(format!("`{other}` is not a trial parameter"))),
        }
        Ok(o)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    /// sd of the multiplicative packing noise on the relative volume
    pub sigma_pack: f64,
    /// relative volume at which overflow spillage is 50% likely; above 1
    /// because marbles heap over the rim before they roll off
    pub overflow_onset: f64,
    pub overflow_width: f64,
    /// rim spill is 50% likely when fu = rim_slope * rd + rim_intercept
    pub rim_slope: f64,
    pub rim_intercept: f64,
    pub rim_width: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            sigma_pack: 0.03,
            overflow_onset: 1.45,
            overflow_width: 0.04,
            rim_slope: 1.5,
            rim_intercept: -0.70,
            rim_width: 0.03,
        }
    }
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        let positive =
            [("overflow_width", self.overflow_width), ("rim_width", self.rim_width), ("rim_slope", self.rim_slope)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.sigma_pack >= 0.0 && self.sigma_pack.is_finite()) {
            return Err(Error::InvalidConfig("sigma_pack must be non-negative".into()));
        }
        Ok(())
    }

    pub fn overflow_probability(&self, rv: f64) -> f64 {
        logistic((rv - self.overflow_onset) / self.overflow_width)
    }

    pub fn rim_probability(&self, fu: f64, rd: f64) -> f64 {
        logistic((fu - (self.rim_slope * rd + self.rim_intercept)) / self.rim_width)
    }

    /// Ground-truth spill probability.
    pub fn spill_probability(&self, fu: f64, rd: f64, rv: f64) -> f64 {
        1.0 - (1.0 - self.overflow_probability(rv)) * (1.0 - self.rim_probability(fu, rd))
    }

    /// Draws (rc, fu, rd) from their truncated normals.
    pub fn sample_parameters(&self, rng: &mut Rng) -> (f64, f64, f64) {
        let rc = truncated_normal(rng, RC_PRIOR, RC_SUPPORT);
        let fu = truncated_normal(rng, FU_PRIOR, FU_SUPPORT);
        let rd = truncated_normal(rng, RD_PRIOR, RD_SUPPORT);
        (rc, fu, rd)
    }

    /// Poured volume is fu * C_src and target capacity is rc * C_src, so the
    /// noiseless ratio is fu / rc.
    pub fn derive_rv(&self, rc: f64, fu: f64, rng: &mut Rng) -> f64 {
        let eps = if self.sigma_pack > 0.0 {
            Normal::new(0.0, self.sigma_pack).expect("validated sd").sample(rng)
        } else {
            0.0
        };
        (fu / rc * (1.0 + eps)).max(1e-6)
    }

    pub fn resolve_spillage(&self, fu: f64, rd: f64, rv: f64, rng: &mut Rng) -> bool {
        rng.random::<f64>() < self.spill_probability(fu, rd, rv)
    }

    fn trial(&self, rng: &mut Rng) -> Trial {
        let (rc, fu, rd) = self.sample_parameters(rng);
        let rv = self.derive_rv(rc, fu, rng);
        let spillage = self.resolve_spillage(fu, rd, rv, rng);
        Trial { rc, fu, rd, rv, spillage }
    }

    /// `n` independent trials; trial `i` uses the stream `derive_seed(seed, i)`.
    pub fn generate_dataset(&self, n: usize, seed: u64) -> Vec<Trial> {
        (0..n as u64).into_par_iter().map(|i| self.trial(&mut seeded(derive_seed(seed, i)))).collect()
    }

    /// Re-runs a trial `replications` times with the given parameters
    /// overridden; returns the number of runs without spillage.
    pub fn replay(&self, trial: &Trial, overrides: &Overrides, replications: usize, seed: u64) -> usize {
        let rc = overrides.rc.unwrap_or(trial.rc);
        let fu = overrides.fu.unwrap_or(trial.fu);
        let rd = overrides.rd.unwrap_or(trial.rd);
        let mut rng = seeded(seed);
        (0..replications)
            .filter(|_| {
                let rv = self.derive_rv(rc, fu, &mut rng);
                !self.resolve_spillage(fu, rd, rv, &mut rng)
            })
            .count()
    }
}

/// Rejection sampler for a normal truncated to `[lo, hi]`.
pub fn truncated_normal(rng: &mut Rng, (mean, sd): (f64, f64), (lo, hi): (f64, f64)) -> f64 {
    let normal = Normal::new(mean, sd).expect("positive sd");
    loop {
        let x = normal.sample(rng);
        if (lo..=hi).contains(&x) {
            return x;
        }
    }
}

/// The pouring DAG: RC -> RV <- FU, FU -> S, RD -> S, RV -> S.
pub fn pouring_graph() -> CausalGraph {
    let c = |(lo, hi): (f64, f64)| VariableKind::continuous(lo, hi);
    CausalGraph::new(
        vec![
            Node::new(RC, c(RC_SUPPORT)),
            Node::new(FU, c(FU_SUPPORT)),
            Node::new(RD, c(RD_SUPPORT)),
            Node::new(RV, c(RV_SUPPORT)),
            Node::new(S, VariableKind::Binary),
        ],
        [(RC, RV), (FU, RV), (FU, S), (RD, S), (RV, S)].iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
    )
    .expect("pouring graph is a DAG")
}
