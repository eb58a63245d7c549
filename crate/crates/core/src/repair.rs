//! Two-round cooperative repair of `h` failed nodes from `d` helpers.
//!
//! Failed nodes are ranked `0..h` by ascending node index. Write `p` for the
//! failed node of rank `u` and `a(p, a_p + j)` for index `a` with digit `p`
//! advanced by `j` modulo `s`. The combination that node `p` asks of every
//! other node `i` is
//!
//! ```text
//! y(i, a) = sum_{j < s-1} c(i, j, a(p, a_p + j)) + c(i, s-1+u, a(p, a_p + s-1))
//! ```
//!
//! Summing the parity checks of the `s` slices involved shows that
//! `(c(p, ., .) terms, y(i, a) for i != p)` is a GRS word of length
//! `n + s - 1` with `n - k` checks, so the `d` helper values determine the
//! rest. That yields planes `0..s-1` and `s-1+u` of node `p` outright, plus
//! `y(q, a)` for every other failed node `q`: exactly what `q` needs in
//! round two to peel off plane `s-1+u` of itself.

use crate::bounds::RepairTranscript;
use crate::code::{CodeParams, ErasureSolver, NodeVector};
use crate::error::{Error, Result};
use crate::field::Symbol;

/// Failed set, helper set and the rank of each failed node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairPlan {
    failed: Vec<usize>,
    helpers: Vec<usize>,
}

impl RepairPlan {
    pub fn new(params: &CodeParams, failed: &[usize], helpers: &[usize]) -> Result<Self> {
        let n = params.n();
        let mut failed = failed.to_vec();
        let mut helpers = helpers.to_vec();
        failed.sort_unstable();
        helpers.sort_unstable();
        for set in [&failed, &helpers] {
            if let Some(&i) = set.iter().find(|&&i| i >= n) {
                return Err(Error::OutOfRange { value: i, limit: n });
            }
            if set.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Plan("repeated node index".into()));
            }
        }
        if failed.len() != params.h() {
            return Err(Error::Plan(format!(
                "{} failed nodes, the code repairs exactly h = {}",
                failed.len(),
                params.h()
            )));
        }
        if helpers.len() != params.d() {
            return Err(Error::Plan(format!(
                "{} helpers, the code needs exactly d = {}",
                helpers.len(),
                params.d()
            )));
        }
        if let Some(i) = helpers.iter().find(|i| failed.contains(i)) {
            return Err(Error::Plan(format!(
                "node {} is both failed and a helper",
                i + 1
            )));
        }
        Ok(RepairPlan { failed, helpers })
    }

    pub fn failed(&self) -> &[usize] {
        &self.failed
    }

    pub fn helpers(&self) -> &[usize] {
        &self.helpers
    }

    /// Rank of failed node `i`, its position in ascending order.
    pub fn rank_of(&self, i: usize) -> Option<usize> {
        self.failed.binary_search(&i).ok()
    }

    pub fn failed_node(&self, rank: usize) -> Result<usize> {
        self.failed.get(rank).copied().ok_or(Error::OutOfRange {
            value: rank,
            limit: self.failed.len(),
        })
    }

    fn is_helper(&self, i: usize) -> bool {
        self.helpers.binary_search(&i).is_ok()
    }
}

/// One metered transfer. `payload[a]` is indexed by the plane index `a`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairMessage {
    pub round: u8,
    pub sender: usize,
    pub receiver: usize,
    pub payload: Vec<Symbol>,
}

/// The plane read for shift `j` by the failed node of rank `u`.
#[inline]
fn plane_for_shift(s: usize, u: usize, j: usize) -> usize {
    if j + 1 < s {
        j
    } else {
        s - 1 + u
    }
}

/// `y(i, a)` for all `a`, read from the content of node `i`.
fn combination(
    params: &CodeParams,
    content: &NodeVector,
    target: usize,
    rank: usize,
) -> Vec<Symbol> {
    let (s, radix) = (params.s(), params.radix());
    (0..params.span())
        .map(|a| {
            (0..s).fold(0, |acc, j| {
                acc ^ content.get(plane_for_shift(s, rank, j), radix.shifted(a, target, j))
            })
        })
        .collect()
}

/// What helper `helper` sends the failed node of rank `rank` in round one.
pub fn helper_round1_response(
    params: &CodeParams,
    plan: &RepairPlan,
    helper: usize,
    content: &NodeVector,
    rank: usize,
) -> Result<RepairMessage> {
    if !plan.is_helper(helper) {
        return Err(Error::Plan(format!("node {} is not a helper", helper + 1)));
    }
    let target = plan.failed_node(rank)?;
    params.check_node(content)?;
    Ok(RepairMessage {
        round: 1,
        sender: helper,
        receiver: target,
        payload: combination(params, content, target, rank),
    })
}

/// State of a failed node between the two rounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialNode {
    owner: usize,
    rank: usize,
    node: NodeVector,
    known: Vec<bool>,
    // Indexed by rank; `None` at the owner's own rank.
    cross_sums: Vec<Option<Vec<Symbol>>>,
}

impl PartialNode {
    pub fn owner(&self) -> usize {
        self.owner
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Planes recovered in round one, ascending.
    pub fn known_planes(&self) -> Vec<usize> {
        (0..self.known.len()).filter(|&b| self.known[b]).collect()
    }

    pub fn plane(&self, b: usize) -> Option<&[Symbol]> {
        self.known
            .get(b)
            .copied()
            .unwrap_or(false)
            .then(|| self.node.plane(b))
    }

    /// The combination recovered about the failed node of rank `rank`.
    pub fn cross_sum(&self, rank: usize) -> Option<&[Symbol]> {
        self.cross_sums.get(rank).and_then(|x| x.as_deref())
    }

    pub fn known_symbols(&self) -> usize {
        self.known_planes().len() * self.node.span()
    }

    pub fn cross_sum_symbols(&self) -> usize {
        self.cross_sums.iter().flatten().map(Vec::len).sum()
    }
}

/// Round-one decode at the failed node of rank `rank`.
pub fn round1_decode(
    params: &CodeParams,
    plan: &RepairPlan,
    rank: usize,
    responses: &[RepairMessage],
) -> Result<PartialNode> {
    let owner = plan.failed_node(rank)?;
    let (n, s, span) = (params.n(), params.s(), params.span());
    let radix = params.radix();
    let field = params.field();

    // GRS coordinate layout: shifts 0..s of the owner, then every other node
    // in ascending order.
    let others: Vec<usize> = (0..n).filter(|&i| i != owner).collect();
    let position_of = |i: usize| s + others.binary_search(&i).expect("not the owner");

    let mut by_helper: Vec<Option<&[Symbol]>> = vec![None; n];
    for msg in responses {
        if msg.round != 1 || msg.receiver != owner {
            return Err(Error::Protocol(format!(
                "round {} message {}->{} delivered to round-one decode at node {}",
                msg.round,
                msg.sender + 1,
                msg.receiver + 1,
                owner + 1
            )));
        }
        if !plan.is_helper(msg.sender) {
            return Err(Error::Protocol(format!(
                "node {} is not a helper",
                msg.sender + 1
            )));
        }
        if by_helper[msg.sender].is_some() {
            return Err(Error::Protocol(format!(
                "duplicate response from node {}",
                msg.sender + 1
            )));
        }
        if msg.payload.len() != span {
            return Err(Error::Length {
                expected: span,
                got: msg.payload.len(),
            });
        }
        by_helper[msg.sender] = Some(&msg.payload);
    }
    if let Some(&missing) = plan.helpers().iter().find(|&&i| by_helper[i].is_none()) {
        return Err(Error::Protocol(format!(
            "no response from helper {}",
            missing + 1
        )));
    }

    let len = n + s - 1;
    let helper_pos: Vec<usize> = plan.helpers().iter().map(|&i| position_of(i)).collect();
    let unknown: Vec<usize> = (0..len).filter(|p| !helper_pos.contains(p)).collect();

    let mut node = params.zero_node();
    let mut cross_sums: Vec<Option<Vec<Symbol>>> = (0..plan.failed().len())
        .map(|w| (w != rank).then(|| vec![0; span]))
        .collect();
    let mut points = vec![0 as Symbol; len];
    let mut values = vec![0 as Symbol; len];

    for a in 0..span {
        let own_digit = radix.digit(a, owner);
        for (j, p) in points.iter_mut().take(s).enumerate() {
            *p = params.point(owner, (own_digit + j) % s);
        }
        for (idx, &i) in others.iter().enumerate() {
            points[s + idx] = params.point(i, radix.digit(a, i));
        }
        for (&i, &pos) in plan.helpers().iter().zip(&helper_pos) {
            values[pos] = by_helper[i].expect("checked above")[a];
        }
        let solver = ErasureSolver::new(field, &points, &unknown)?;
        solver.fill(field, &mut values);

        for (j, &v) in values.iter().take(s).enumerate() {
            node.set(plane_for_shift(s, rank, j), radix.shifted(a, owner, j), v);
        }
        for (w, slot) in cross_sums.iter_mut().enumerate() {
            if let Some(sums) = slot {
                sums[a] = values[position_of(plan.failed()[w])];
            }
        }
    }

    let mut known = vec![false; params.m()];
    for j in 0..s {
        known[plane_for_shift(s, rank, j)] = true;
    }
    Ok(PartialNode {
        owner,
        rank,
        node,
        known,
        cross_sums,
    })
}

/// Round-two message from `sender` to the failed node of rank `receiver_rank`,
/// served verbatim from the sender's round-one result.
pub fn round2_message(
    sender: &PartialNode,
    plan: &RepairPlan,
    receiver_rank: usize,
) -> Result<RepairMessage> {
    let receiver = plan.failed_node(receiver_rank)?;
    if plan.rank_of(sender.owner) != Some(sender.rank) {
        return Err(Error::Plan(format!(
            "node {} is not failed under this plan",
            sender.owner + 1
        )));
    }
    let payload = sender.cross_sum(receiver_rank).ok_or_else(|| {
        Error::Protocol(format!(
            "node {} holds no round-one result for node {}",
            sender.owner + 1,
            receiver + 1
        ))
    })?;
    Ok(RepairMessage {
        round: 2,
        sender: sender.owner,
        receiver,
        payload: payload.to_vec(),
    })
}

/// Completes a failed node from its round-one state and the `h - 1`
/// round-two messages.
pub fn round2_finish(
    params: &CodeParams,
    plan: &RepairPlan,
    partial: PartialNode,
    messages: &[RepairMessage],
) -> Result<NodeVector> {
    let (s, span) = (params.s(), params.span());
    let radix = params.radix();
    if plan.failed_node(partial.rank)? != partial.owner {
        return Err(Error::Plan(format!(
            "node {} does not have rank {} under this plan",
            partial.owner + 1,
            partial.rank
        )));
    }

    let PartialNode {
        owner,
        mut node,
        mut known,
        ..
    } = partial;
    for msg in messages {
        if msg.round != 2 || msg.receiver != owner {
            return Err(Error::Protocol(format!(
                "round {} message {}->{} delivered to round-two finish at node {}",
                msg.round,
                msg.sender + 1,
                msg.receiver + 1,
                owner + 1
            )));
        }
        let w = plan
            .rank_of(msg.sender)
            .filter(|&w| w != plan.rank_of(owner).unwrap_or(usize::MAX))
            .ok_or_else(|| {
                Error::Protocol(format!(
                    "node {} is not another failed node",
                    msg.sender + 1
                ))
            })?;
        if msg.payload.len() != span {
            return Err(Error::Length {
                expected: span,
                got: msg.payload.len(),
            });
        }
        let target = s - 1 + w;
        if known[target] {
            return Err(Error::Protocol(format!(
                "duplicate message from node {}",
                msg.sender + 1
            )));
        }
        for a in 0..span {
            let mut v = msg.payload[a];
            for j in 0..s - 1 {
                v ^= node.get(j, radix.shifted(a, msg.sender, j));
            }
            node.set(target, radix.shifted(a, msg.sender, s - 1), v);
        }
        known[target] = true;
    }
    if let Some(b) = known.iter().position(|&k| !k) {
        return Err(Error::Protocol(format!(
            "node {} is missing plane {} after round two",
            owner + 1,
            b
        )));
    }
    Ok(node)
}

/// Runs both rounds in-process. `surviving[i]` is the content of node `i` if
/// it is alive; only the helpers named in `plan` are read. Repaired nodes
/// come back in ascending failed-node order.
pub fn cooperative_repair(
    params: &CodeParams,
    plan: &RepairPlan,
    surviving: &[Option<NodeVector>],
) -> Result<(Vec<NodeVector>, RepairTranscript)> {
    if surviving.len() != params.n() {
        return Err(Error::Shape(format!(
            "{} node slots, expected {}",
            surviving.len(),
            params.n()
        )));
    }
    let h = plan.failed().len();
    let mut transcript = RepairTranscript::new();

    let mut partials = Vec::with_capacity(h);
    for u in 0..h {
        let mut responses = Vec::with_capacity(plan.helpers().len());
        for &i in plan.helpers() {
            let content = surviving[i]
                .as_ref()
                .ok_or_else(|| Error::Plan(format!("helper {} is not alive", i + 1)))?;
            let msg = helper_round1_response(params, plan, i, content, u)?;
            transcript.record(&msg);
            responses.push(msg);
        }
        partials.push(round1_decode(params, plan, u, &responses)?);
    }

    let mut inboxes: Vec<Vec<RepairMessage>> = vec![Vec::new(); h];
    for (u, inbox) in inboxes.iter_mut().enumerate() {
        for (w, sender) in partials.iter().enumerate() {
            if w != u {
                let msg = round2_message(sender, plan, u)?;
                transcript.record(&msg);
                inbox.push(msg);
            }
        }
    }

    let repaired = partials
        .into_iter()
        .zip(&inboxes)
        .map(|(partial, inbox)| round2_finish(params, plan, partial, inbox))
        .collect::<Result<Vec<_>>>()?;
    transcript.canonicalize();
    Ok((repaired, transcript))
}
