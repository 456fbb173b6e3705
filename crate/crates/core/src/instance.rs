use crate::apf::{through_time, ApfConfig, ThroughTime};
use crate::error::Result;
use crate::network::{LinkId, RoadNetwork};
use crate::time_domain::TimeTableBinding;

/// Network, table binding and cost configuration of one scenario.
#[derive(Clone, Copy, Debug)]
pub struct Instance<'a> {
    pub net: &'a RoadNetwork,
    pub binding: &'a TimeTableBinding,
    pub cfg: &'a ApfConfig,
}

impl<'a> Instance<'a> {
    pub fn new(net: &'a RoadNetwork, binding: &'a TimeTableBinding, cfg: &'a ApfConfig) -> Result<Self> {
        cfg.check_binding(binding, net.link_count())?;
        Ok(Self { net, binding, cfg })
    }

    /// Through-time of `link` for a departure at `t`.
    #[inline]
    pub fn traverse(&self, link: LinkId, t: u64) -> ThroughTime {
        let l = self.net.link(link);
        through_time(l, t, self.binding.table_for(l), self.cfg, self.binding.query_offset(l))
    }

    #[inline]
    pub fn arrival(&self, link: LinkId, t: u64) -> Option<u64> {
        self.traverse(link, t).completed().map(|d| t + d as u64)
    }
}
