//! Deterministic in-process storage cluster.
//!
//! Nodes exchange [`RepairMessage`]s only through a [`Network`] that meters
//! every payload and appends an event record `R<round> <sender>-><receiver>
//! <symbols>` (1-based nodes). A failed node's repair logic sees nothing but
//! its inbox. Messages are produced in `(round, sender, receiver)` order, so
//! logs and meters are reproducible byte for byte.

use crate::bounds::{meter_close, BoundReport, RepairShape, RepairTranscript};
use crate::code::{encode, mds_decode, parity_residual, CodeParams, NodeVector};
use crate::error::{Error, Result};
use crate::field::Symbol;
use crate::repair::{
    helper_round1_response, round1_decode, round2_finish, round2_message, RepairMessage, RepairPlan,
};

mod oracle {
    use crate::code::NodeVector;

    /// Copy of the encoded nodes kept for test comparison. Nothing in the
    /// repair path can reach it.
    #[derive(Debug, Clone)]
    pub struct Oracle {
        nodes: Vec<NodeVector>,
    }

    impl Oracle {
        pub(super) fn new(nodes: Vec<NodeVector>) -> Self {
            Oracle { nodes }
        }

        pub fn node(&self, i: usize) -> &NodeVector {
            &self.nodes[i]
        }
    }
}

pub use oracle::Oracle;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Slot {
    Live(NodeVector),
    Failed,
}

impl Slot {
    pub fn as_live(&self) -> Option<&NodeVector> {
        match self {
            Slot::Live(v) => Some(v),
            Slot::Failed => None,
        }
    }
}

struct Network<'a> {
    session: RepairTranscript,
    log: &'a mut Vec<String>,
    inboxes: Vec<Vec<RepairMessage>>,
}

impl<'a> Network<'a> {
    fn new(n: usize, log: &'a mut Vec<String>) -> Self {
        Network {
            session: RepairTranscript::new(),
            log,
            inboxes: vec![Vec::new(); n],
        }
    }

    fn send(&mut self, msg: RepairMessage) {
        self.session.record(&msg);
        let entry = *self.session.messages().last().expect("just recorded");
        self.log.push(entry.to_string());
        self.inboxes[msg.receiver].push(msg);
    }

    fn take_inbox(&mut self, node: usize) -> Vec<RepairMessage> {
        std::mem::take(&mut self.inboxes[node])
    }
}

#[derive(Debug, Clone)]
pub struct Cluster {
    params: CodeParams,
    slots: Vec<Slot>,
    meter: RepairTranscript,
    log: Vec<String>,
    oracle: Option<Oracle>,
}

impl Cluster {
    /// Encodes `message` onto a fresh cluster.
    pub fn init(params: CodeParams, message: &[Symbol]) -> Result<Self> {
        let nodes = encode(&params, message)?.into_nodes();
        Ok(Cluster {
            slots: nodes.iter().cloned().map(Slot::Live).collect(),
            oracle: Some(Oracle::new(nodes)),
            params,
            meter: RepairTranscript::new(),
            log: Vec::new(),
        })
    }

    /// A cluster from existing node contents; `None` marks a failed node.
    /// There is no oracle copy.
    pub fn from_slots(params: CodeParams, slots: Vec<Option<NodeVector>>) -> Result<Self> {
        if slots.len() != params.n() {
            return Err(Error::Shape(format!(
                "{} slots, expected {}",
                slots.len(),
                params.n()
            )));
        }
        let slots = slots
            .into_iter()
            .map(|s| match s {
                Some(v) => params.check_node(&v).map(|_| Slot::Live(v)),
                None => Ok(Slot::Failed),
            })
            .collect::<Result<Vec<_>>>()?;
        let failed = slots.iter().filter(|s| matches!(s, Slot::Failed)).count();
        if failed > params.rho() {
            return Err(Error::ClusterLost {
                failed,
                tolerance: params.rho(),
            });
        }
        Ok(Cluster {
            params,
            slots,
            meter: RepairTranscript::new(),
            log: Vec::new(),
            oracle: None,
        })
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn node(&self, i: usize) -> Option<&NodeVector> {
        self.slots.get(i).and_then(Slot::as_live)
    }

    /// Mutable access to a live node, for fault injection.
    pub fn live_node_mut(&mut self, i: usize) -> Option<&mut NodeVector> {
        match self.slots.get_mut(i) {
            Some(Slot::Live(v)) => Some(v),
            _ => None,
        }
    }

    pub fn failed(&self) -> Vec<usize> {
        (0..self.slots.len())
            .filter(|&i| matches!(self.slots[i], Slot::Failed))
            .collect()
    }

    pub fn live(&self) -> Vec<usize> {
        (0..self.slots.len())
            .filter(|&i| matches!(self.slots[i], Slot::Live(_)))
            .collect()
    }

    /// Every message and summary line since the cluster was created.
    pub fn event_log(&self) -> &[String] {
        &self.log
    }

    /// Every metered message since the cluster was created.
    pub fn meter(&self) -> &RepairTranscript {
        &self.meter
    }

    pub fn oracle(&self) -> Option<&Oracle> {
        self.oracle.as_ref()
    }

    /// Marks nodes failed and drops their content. Failing a failed node is
    /// a no-op; exceeding `n - k` failures leaves the cluster untouched and
    /// errors.
    pub fn fail_nodes(&mut self, nodes: &[usize]) -> Result<()> {
        let n = self.params.n();
        if let Some(&i) = nodes.iter().find(|&&i| i >= n) {
            return Err(Error::OutOfRange { value: i, limit: n });
        }
        let mut after = self.failed();
        after.extend_from_slice(nodes);
        after.sort_unstable();
        after.dedup();
        if after.len() > self.params.rho() {
            return Err(Error::ClusterLost {
                failed: after.len(),
                tolerance: self.params.rho(),
            });
        }
        for &i in nodes {
            self.slots[i] = Slot::Failed;
        }
        Ok(())
    }

    fn check_failed(&self, nodes: &[usize]) -> Result<()> {
        for &i in nodes {
            match self.slots.get(i) {
                None => {
                    return Err(Error::OutOfRange {
                        value: i,
                        limit: self.params.n(),
                    })
                }
                Some(Slot::Live(_)) => {
                    return Err(Error::Plan(format!("node {} has not failed", i + 1)))
                }
                Some(Slot::Failed) => {}
            }
        }
        Ok(())
    }

    fn close(
        &mut self,
        mut session: RepairTranscript,
        failed: usize,
        helpers: usize,
    ) -> BoundReport {
        session.canonicalize();
        let report = meter_close(
            &session,
            RepairShape {
                k: self.params.k() as u64,
                l: self.params.l() as u64,
                failed: failed as u64,
                helpers: helpers as u64,
            },
        );
        self.log.extend(report.summary_lines());
        for e in session.messages() {
            self.meter.push(*e);
        }
        report
    }

    /// Two-round cooperative repair of `failed` from `helpers`.
    pub fn run_cooperative_repair(
        &mut self,
        failed: &[usize],
        helpers: &[usize],
    ) -> Result<BoundReport> {
        if failed.is_empty() {
            return Ok(self.close(RepairTranscript::new(), 0, helpers.len()));
        }
        self.check_failed(failed)?;
        let live = self.live().len();
        if live < self.params.d() {
            return Err(Error::NotEnoughLive {
                needed: self.params.d(),
                live,
            });
        }
        for &i in helpers {
            if self.node(i).is_none() {
                return Err(Error::Plan(format!("helper {} is not alive", i + 1)));
            }
        }
        let params = self.params.clone();
        let plan = RepairPlan::new(&params, failed, helpers)?;
        let h = plan.failed().len();
        let mut net = Network::new(params.n(), &mut self.log);

        for &i in plan.helpers() {
            let content = self.slots[i].as_live().expect("checked live");
            for u in 0..h {
                net.send(helper_round1_response(&params, &plan, i, content, u)?);
            }
        }

        // Barrier: every round-one message is delivered before any decode.
        let partials = (0..h)
            .map(|u| {
                let inbox = net.take_inbox(plan.failed()[u]);
                round1_decode(&params, &plan, u, &inbox)
            })
            .collect::<Result<Vec<_>>>()?;

        for sender in &partials {
            for u in (0..h).filter(|&u| u != sender.rank()) {
                net.send(round2_message(sender, &plan, u)?);
            }
        }

        let mut repaired = Vec::with_capacity(h);
        for partial in partials {
            let owner = partial.owner();
            let inbox = net.take_inbox(owner);
            repaired.push((owner, round2_finish(&params, &plan, partial, &inbox)?));
        }
        let session = net.session;
        for (i, node) in repaired {
            self.slots[i] = Slot::Live(node);
        }
        Ok(self.close(session, h, plan.helpers().len()))
    }

    /// Baseline: every failed node downloads `k` whole live nodes (the
    /// lowest-numbered ones) and decodes the codeword.
    pub fn run_naive_repair(&mut self, failed: &[usize]) -> Result<BoundReport> {
        let k = self.params.k();
        if failed.is_empty() {
            return Ok(self.close(RepairTranscript::new(), 0, k));
        }
        self.check_failed(failed)?;
        let mut failed = failed.to_vec();
        failed.sort_unstable();
        failed.dedup();
        let live = self.live();
        if live.len() < k {
            return Err(Error::NotEnoughLive {
                needed: k,
                live: live.len(),
            });
        }
        let sources = &live[..k];
        let params = self.params.clone();
        let mut net = Network::new(params.n(), &mut self.log);
        for &src in sources {
            let content = self.slots[src].as_live().expect("live");
            for &dst in &failed {
                net.send(RepairMessage {
                    round: 1,
                    sender: src,
                    receiver: dst,
                    payload: content.as_slice().to_vec(),
                });
            }
        }
        let mut repaired = Vec::with_capacity(failed.len());
        for &dst in &failed {
            let available = net
                .take_inbox(dst)
                .into_iter()
                .map(|m| {
                    Ok((
                        m.sender,
                        NodeVector::from_symbols(params.span(), m.payload)?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            let word = mds_decode(&params, &available)?;
            repaired.push((dst, word.node(dst).clone()));
        }
        let session = net.session;
        for (i, node) in repaired {
            self.slots[i] = Slot::Live(node);
        }
        Ok(self.close(session, failed.len(), k))
    }

    /// True iff the live nodes agree with a single codeword.
    pub fn verify(&self) -> Result<bool> {
        let live = self.live();
        let k = self.params.k();
        if live.len() < k {
            return Err(Error::NotEnoughLive {
                needed: k,
                live: live.len(),
            });
        }
        let basis: Vec<(usize, NodeVector)> = live[..k]
            .iter()
            .map(|&i| (i, self.node(i).expect("live").clone()))
            .collect();
        let word = mds_decode(&self.params, &basis)?;
        if live[k..]
            .iter()
            .any(|&i| self.node(i) != Some(word.node(i)))
        {
            return Ok(false);
        }
        if live.len() == self.params.n() {
            let nodes: Vec<NodeVector> = live
                .iter()
                .map(|&i| self.node(i).unwrap().clone())
                .collect();
            return Ok(parity_residual(&self.params, &nodes)?.is_zero());
        }
        Ok(true)
    }

    /// True iff every live node equals the oracle copy. `None` without one.
    pub fn matches_oracle(&self) -> Option<bool> {
        let oracle = self.oracle.as_ref()?;
        Some(
            self.live()
                .iter()
                .all(|&i| self.node(i) == Some(oracle.node(i))),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cluster(n: usize, k: usize, h: usize, d: usize, seed: u64) -> Cluster {
        let p = CodeParams::new(n, k, h, d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let order = p.field().order();
        let msg: Vec<Symbol> = (0..p.k() * p.l())
            .map(|_| rng.gen_range(0..order) as Symbol)
            .collect();
        Cluster::init(p, &msg).unwrap()
    }

    #[test]
    fn fresh_cluster_verifies() {
        let c = cluster(6, 3, 2, 4, 1);
        assert!(c.verify().unwrap());
        assert_eq!(c.matches_oracle(), Some(true));
    }

    #[test]
    fn zero_message_gives_zero_shards() {
        let p = CodeParams::new(6, 3, 2, 4).unwrap();
        let c = Cluster::init(p.clone(), &vec![0; p.k() * p.l()]).unwrap();
        assert!(c
            .slots()
            .iter()
            .all(|s| s.as_live().unwrap().as_slice().iter().all(|&x| x == 0)));
    }

    #[test]
    fn failure_injection() {
        let mut c = cluster(6, 3, 2, 4, 2);
        c.fail_nodes(&[1, 4]).unwrap();
        assert_eq!(c.failed(), vec![1, 4]);
        c.fail_nodes(&[1]).unwrap();
        assert_eq!(c.failed(), vec![1, 4]);
        assert!(matches!(
            c.fail_nodes(&[0, 2]),
            Err(Error::ClusterLost {
                failed: 4,
                tolerance: 3
            })
        ));
        assert_eq!(c.failed(), vec![1, 4]);
        c.fail_nodes(&[0]).unwrap();
        assert!(c.verify().unwrap());
    }

    #[test]
    fn corruption_is_detected() {
        let mut c = cluster(6, 3, 2, 4, 3);
        c.live_node_mut(5).unwrap().as_mut_slice()[7] ^= 3;
        assert!(!c.verify().unwrap());
        let mut c = cluster(6, 3, 2, 4, 3);
        c.fail_nodes(&[0]).unwrap();
        c.live_node_mut(4).unwrap().as_mut_slice()[0] ^= 1;
        assert!(!c.verify().unwrap());
    }

    #[test]
    fn cooperative_run() {
        let mut c = cluster(6, 3, 2, 4, 4);
        c.fail_nodes(&[0, 3]).unwrap();
        let report = c.run_cooperative_repair(&[0, 3], &[1, 2, 4, 5]).unwrap();
        assert!(report.co_met && report.ce_met);
        assert_eq!(report.total, 640);
        assert!(c.failed().is_empty());
        assert!(c.verify().unwrap());
        assert_eq!(c.matches_oracle(), Some(true));

        let log = c.event_log();
        let last_r1 = log.iter().rposition(|l| l.starts_with("R1 ")).unwrap();
        let first_r2 = log.iter().position(|l| l.starts_with("R2 ")).unwrap();
        assert!(last_r1 < first_r2);
        assert_eq!(log[0], "R1 2->1 64");
        assert_eq!(log.last().unwrap(), "co bound met: yes; ce bound met: yes");
        assert_eq!(c.meter().total(), 640);
    }

    #[test]
    fn empty_repair_is_free() {
        let mut c = cluster(6, 3, 2, 4, 5);
        let r = c.run_cooperative_repair(&[], &[]).unwrap();
        assert_eq!(r.total, 0);
        let r = c.run_naive_repair(&[]).unwrap();
        assert_eq!(r.total, 0);
    }

    #[test]
    fn repair_preconditions() {
        let mut c = cluster(6, 3, 2, 4, 6);
        c.fail_nodes(&[0, 1]).unwrap();
        assert!(c.run_cooperative_repair(&[0, 2], &[1, 3, 4, 5]).is_err());
        assert!(c.run_cooperative_repair(&[0, 1], &[2, 3, 4]).is_err());
        c.fail_nodes(&[2]).unwrap();
        assert!(matches!(
            c.run_cooperative_repair(&[0, 1], &[2, 3, 4, 5]),
            Err(Error::NotEnoughLive { needed: 4, live: 3 })
        ));
        // The naive baseline still works with k = 3 live nodes.
        let r = c.run_naive_repair(&[0, 1, 2]).unwrap();
        assert_eq!(r.total, 3 * 3 * 192);
        assert_eq!(c.matches_oracle(), Some(true));
    }

    #[test]
    fn naive_matches_cooperative() {
        let mut a = cluster(6, 3, 2, 4, 7);
        let mut b = a.clone();
        a.fail_nodes(&[2, 5]).unwrap();
        b.fail_nodes(&[2, 5]).unwrap();
        let ra = a.run_cooperative_repair(&[2, 5], &[0, 1, 3, 4]).unwrap();
        let rb = b.run_naive_repair(&[2, 5]).unwrap();
        assert_eq!((ra.total, rb.total), (640, 1152));
        assert_eq!(rb.naive, 1152);
        assert_eq!(a.slots(), b.slots());
    }

    #[test]
    fn runs_are_reproducible() {
        let run = || {
            let mut c = cluster(7, 3, 3, 4, 8);
            c.fail_nodes(&[1, 2, 6]).unwrap();
            c.run_cooperative_repair(&[1, 2, 6], &[0, 3, 4, 5]).unwrap();
            (c.event_log().to_vec(), c.meter().clone())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn from_slots_without_oracle() {
        let c = cluster(6, 3, 2, 4, 9);
        let slots: Vec<Option<NodeVector>> = (0..6)
            .map(|i| (i != 2).then(|| c.node(i).unwrap().clone()))
            .collect();
        let mut d = Cluster::from_slots(c.params().clone(), slots).unwrap();
        assert_eq!(d.failed(), vec![2]);
        assert!(d.oracle().is_none());
        d.fail_nodes(&[4]).unwrap();
        d.run_cooperative_repair(&[2, 4], &[0, 1, 3, 5]).unwrap();
        assert_eq!(d.slots(), c.slots());
    }
}
