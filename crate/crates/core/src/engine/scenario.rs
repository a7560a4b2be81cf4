//! Scenario files: TOML with strict key checking.

use std::path::Path;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::criteria::can::CanCriterion;
use crate::criteria::leader::LeaderCriterion;
use crate::criteria::pastry::{LeafCriterion, NeighborhoodCriterion, RoutingCriterion};
use crate::criteria::proximity::ProximityCriterion;
use crate::criteria::query::QueryCriterion;
use crate::criteria::{compose_monotonic, Criterion, GlobalCriterion, LocalCriterion};
use crate::demons::{DemonClass, DemonSpec};
use crate::overlays::pastry::PastryParams;

use super::EngineError;

/// Largest system the engine accepts.
pub const MAX_NODES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    Lsa,
    Can,
    Pastry,
    Leader,
    #[serde(alias = "one-shot-query")]
    Query,
}

impl ProtocolKind {
    /// Criteria each protocol can be evaluated with.
    pub fn criteria(self) -> &'static [&'static str] {
        match self {
            ProtocolKind::Lsa => &["proximity"],
            ProtocolKind::Can => &["can"],
            ProtocolKind::Pastry => &["pastry-routing", "pastry-leaf", "pastry-neighbor"],
            ProtocolKind::Leader => &["leader"],
            ProtocolKind::Query => &["query"],
        }
    }
}

/// One criterion name or a list composed monotonically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CriterionRef {
    Single(String),
    Composite(Vec<String>),
}

impl CriterionRef {
    pub fn names(&self) -> Vec<&str> {
        match self {
            CriterionRef::Single(s) => vec![s.as_str()],
            CriterionRef::Composite(v) => v.iter().map(String::as_str).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemonConfig {
    pub class: DemonClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_min_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<usize>,
    /// Defaults to a value derived from the scenario seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub protocol: ProtocolKind,
    pub criterion: CriterionRef,
    pub initial_nodes: usize,
    pub horizon: u64,
    pub seed: u64,
    pub demon: DemonConfig,
    #[serde(default)]
    pub protocol_params: toml::Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LsaParams {
    pub dims: usize,
    /// Positions are drawn from `[0, extent)` per coordinate.
    pub extent: i64,
    /// Initial out-degree of every node.
    pub degree: usize,
}

impl Default for LsaParams {
    fn default() -> Self {
        LsaParams { dims: 2, extent: 100, degree: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CanParams {
    pub dims: usize,
}

impl Default for CanParams {
    fn default() -> Self {
        CanParams { dims: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LeaderParams {
    /// Number of stable nodes, which is also the number of responses a
    /// query round waits for.
    pub alpha: usize,
}

impl Default for LeaderParams {
    fn default() -> Self {
        LeaderParams { alpha: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QueryParams {
    pub degree: usize,
    pub items_per_node: usize,
    /// Values starting with this string match the query.
    pub prefix: String,
}

impl Default for QueryParams {
    fn default() -> Self {
        QueryParams { degree: 2, items_per_node: 2, prefix: "a".into() }
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, EngineError> {
        let s: Scenario = toml::from_str(text).map_err(|e| EngineError::Schema(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, EngineError> {
        Scenario::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenarios serialize")
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let schema = |m: String| Err(EngineError::Schema(m));
        if self.initial_nodes == 0 || self.initial_nodes > MAX_NODES {
            return schema(format!("initial_nodes must be in 1..={MAX_NODES}"));
        }
        let names = self.criterion.names();
        if names.is_empty() {
            return schema("empty criterion list".into());
        }
        for n in &names {
            if !self.protocol.criteria().contains(n) {
                return schema(format!("criterion {n:?} does not apply to {:?}", self.protocol));
            }
        }
        match self.protocol {
            ProtocolKind::Lsa => {
                let p: LsaParams = self.params()?;
                if p.dims == 0 || p.extent <= 0 {
                    return schema("lsa needs dims >= 1 and extent >= 1".into());
                }
            }
            ProtocolKind::Can => {
                let p: CanParams = self.params()?;
                if p.dims == 0 || p.dims > 8 {
                    return schema("can dims must be in 1..=8".into());
                }
            }
            ProtocolKind::Pastry => {
                let p: PastryParams = self.params()?;
                if p.b == 0 || p.b as usize * p.digits >= 64 || p.leaf % 2 == 1 {
                    return schema("pastry needs b >= 1, b * digits < 64 and an even leaf size".into());
                }
            }
            ProtocolKind::Leader => {
                let p: LeaderParams = self.params()?;
                if p.alpha == 0 || p.alpha > self.initial_nodes {
                    return schema(format!("alpha must be in 1..={}", self.initial_nodes));
                }
            }
            ProtocolKind::Query => {
                self.params::<QueryParams>()?;
            }
        }
        self.criterion()?;
        Ok(())
    }

    /// Typed protocol parameters, defaults filled in.
    pub fn params<T: DeserializeOwned>(&self) -> Result<T, EngineError> {
        toml::Value::Table(self.protocol_params.clone()).try_into().map_err(|e| EngineError::Schema(e.to_string()))
    }

    pub fn demon_spec(&self) -> DemonSpec {
        DemonSpec {
            class: self.demon.class,
            bound: self.demon.bound,
            kernel_min_size: self.demon.kernel_min_size,
            events: self.demon.events,
            rng_seed: self.demon.seed.unwrap_or(self.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0xd1b5),
            horizon: self.horizon,
        }
    }

    fn local(&self, name: &str) -> Result<Arc<dyn LocalCriterion>, EngineError> {
        Ok(match name {
            "proximity" => Arc::new(ProximityCriterion),
            "can" => Arc::new(CanCriterion { dims: self.params::<CanParams>()?.dims }),
            "pastry-routing" => Arc::new(RoutingCriterion { params: self.params()? }),
            "pastry-leaf" => Arc::new(LeafCriterion { params: self.params()? }),
            "pastry-neighbor" => Arc::new(NeighborhoodCriterion { params: self.params()? }),
            "leader" => Arc::new(LeaderCriterion),
            "query" => Arc::new(QueryCriterion),
            other => return Err(EngineError::Schema(format!("unknown criterion {other:?}"))),
        })
    }

    /// The global criterion named by the scenario.
    pub fn criterion(&self) -> Result<Arc<dyn Criterion>, EngineError> {
        match &self.criterion {
            CriterionRef::Single(n) => Ok(Arc::new(GlobalCriterion::new(self.local(n)?))),
            CriterionRef::Composite(names) => {
                let parts = names
                    .iter()
                    .map(|n| Ok(GlobalCriterion::new(self.local(n)?)))
                    .collect::<Result<_, EngineError>>()?;
                Ok(Arc::new(compose_monotonic(parts).map_err(|e| EngineError::Schema(e.to_string()))?))
            }
        }
    }
}
