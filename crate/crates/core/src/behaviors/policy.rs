use std::collections::BTreeMap;

use super::lateral::{integrate_along, LaneTracking};
use super::{BehaviorError, BehaviorKind, BehaviorModel, BehaviorSpec};
use crate::world::{ObservedWorld, Trajectory};

/// Stand-in for an externally trained policy: a lookup table from speed
/// bins of width `v_bin` to accelerations `a0, a1, ...`, applied while
/// keeping the nearest lane.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTableModel {
    pub v_bin: f64,
    pub table: Vec<f64>,
}

impl PolicyTableModel {
    pub(crate) fn from_params(p: &BTreeMap<String, f64>) -> Self {
        let table = (0..)
            .map_while(|i| p.get(&format!("a{i}")).copied())
            .collect();
        Self {
            v_bin: p["v_bin"],
            table,
        }
    }

    pub fn lookup(&self, v: f64) -> f64 {
        let bin = (v.max(0.0) / self.v_bin).floor() as usize;
        self.table[bin.min(self.table.len() - 1)]
    }
}

impl BehaviorModel for PolicyTableModel {
    fn plan(&mut self, dt: f64, observed: &ObservedWorld<'_>) -> Result<Trajectory, BehaviorError> {
        let ego = observed.ego();
        let corridor = &ego.corridor;
        let chain = &corridor.chains()[corridor.nearest_chain(ego.state.position())];
        let a = self.lookup(ego.state.v);
        integrate_along(
            chain,
            &ego.state,
            dt,
            &LaneTracking::default(),
            observed.time(),
            |_, _, _| a,
        )
    }

    fn spec(&self) -> BehaviorSpec {
        let mut s = BehaviorSpec::new(BehaviorKind::PolicyStub).with("v_bin", self.v_bin);
        for (i, a) in self.table.iter().enumerate() {
            s.params.insert(format!("a{i}"), *a);
        }
        s
    }

    fn box_clone(&self) -> Box<dyn BehaviorModel> {
        Box::new(self.clone())
    }
}
