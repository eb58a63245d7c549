//! Cut-set bounds, node-size formulas and the repair-traffic meter.
//!
//! For an `(n, k, l)` MDS array code, repairing `f` failed nodes from `r`
//! helpers needs at least
//!
//! ```text
//! cooperative:  f (r + f - 1) l / (f + r - k)
//! centralized:  f r l / (f + r - k)
//! ```
//!
//! symbols. The calculators take raw `(k, l, f, r)` so they can score
//! parameter sets that this crate cannot build, and they return exact
//! rationals: a non-integral bound means the parameters are outside any
//! construction that could meet it.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_integer::{binomial, Integer};
use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::repair::RepairMessage;

fn check_bound_args(k: u64, f: u64, r: u64) -> Result<()> {
    if f < 1 {
        return Err(Error::InvalidParams(
            "cut-set bound needs at least one failed node".into(),
        ));
    }
    if r < k {
        return Err(Error::InvalidParams(format!(
            "cut-set bound needs r >= k (r={r}, k={k})"
        )));
    }
    Ok(())
}

/// Cooperative cut-set bound `f (r + f - 1) l / (f + r - k)`.
pub fn cutset_cooperative(k: u64, l: u64, f: u64, r: u64) -> Result<Ratio<u64>> {
    check_bound_args(k, f, r)?;
    Ok(Ratio::new(f * (r + f - 1) * l, f + r - k))
}

/// Centralized cut-set bound `f r l / (f + r - k)`.
pub fn cutset_centralized(k: u64, l: u64, f: u64, r: u64) -> Result<Ratio<u64>> {
    check_bound_args(k, f, r)?;
    Ok(Ratio::new(f * r * l, f + r - k))
}

/// A node size kept as a product of integer powers, so that sizes like
/// `3^(C(n, h))` never have to be materialized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSize {
    factors: Vec<(u64, u64)>,
}

impl NodeSize {
    fn new(factors: Vec<(u64, u64)>) -> Self {
        NodeSize { factors }
    }

    /// `(base, exponent)` pairs whose product is the size.
    pub fn factors(&self) -> &[(u64, u64)] {
        &self.factors
    }

    /// `log2` of the size, `None` when the formula evaluates to zero (the
    /// construction does not exist for those parameters).
    pub fn log2(&self) -> Option<f64> {
        let mut acc = 0.0;
        for &(base, exp) in &self.factors {
            if exp == 0 {
                continue;
            }
            if base == 0 {
                return None;
            }
            acc += exp as f64 * (base as f64).log2();
        }
        Some(acc)
    }

    /// The size itself when it fits in a `u128`.
    pub fn exact(&self) -> Option<u128> {
        self.factors.iter().try_fold(1u128, |acc, &(base, exp)| {
            let exp = u32::try_from(exp).ok()?;
            acc.checked_mul((base as u128).checked_pow(exp)?)
        })
    }
}

/// Node sizes of three `(h, d)`-MSR constructions for the same parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSizeTable {
    /// Centralized-only construction: `lcm(d-k+1, ..., d-k+h)^n`.
    pub centralized_lcm: NodeSize,
    /// Transform-based cooperative construction:
    /// `((h+d-k)(d-k)^(h-1))^C(n,h)`.
    pub transform: NodeSize,
    /// Replicated construction built here: `(h+d-k)(d-k+1)^n`.
    pub replicated: NodeSize,
}

pub fn node_size_table(n: u64, k: u64, h: u64, d: u64) -> Result<NodeSizeTable> {
    if !(1 <= k && k < n && k <= d && 1 <= h && h + d <= n) {
        return Err(Error::InvalidParams(format!(
            "need 1 <= k < n, k <= d, 1 <= h <= n - d (n={n}, k={k}, h={h}, d={d})"
        )));
    }
    let spread = d - k;
    let lcm = (spread + 1..=spread + h).fold(1u64, |acc, x| acc.lcm(&x));
    let transform_base = (h + spread)
        .checked_mul(spread.checked_pow((h - 1) as u32).ok_or_else(overflow)?)
        .ok_or_else(overflow)?;
    Ok(NodeSizeTable {
        centralized_lcm: NodeSize::new(vec![(lcm, n)]),
        transform: NodeSize::new(vec![(transform_base, binomial(n, h))]),
        replicated: NodeSize::new(vec![(h + spread, 1), (spread + 1, n)]),
    })
}

fn overflow() -> Error {
    Error::InvalidParams("node-size base overflows u64".into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TranscriptEntry {
    pub round: u8,
    pub sender: usize,
    pub receiver: usize,
    pub symbols: u64,
}

impl std::fmt::Display for TranscriptEntry {
    /// `R<round> <sender>-><receiver> <symbols>` with 1-based node numbers.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "R{} {}->{} {}",
            self.round,
            self.sender + 1,
            self.receiver + 1,
            self.symbols
        )
    }
}

/// Every transfer of a repair session with its size in symbols.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RepairTranscript {
    entries: Vec<TranscriptEntry>,
}

impl RepairTranscript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, msg: &RepairMessage) {
        self.push(TranscriptEntry {
            round: msg.round,
            sender: msg.sender,
            receiver: msg.receiver,
            symbols: msg.payload.len() as u64,
        });
    }

    pub fn push(&mut self, entry: TranscriptEntry) {
        self.entries.push(entry);
    }

    /// Sorts by `(round, sender, receiver)`.
    pub fn canonicalize(&mut self) {
        self.entries.sort();
    }

    pub fn messages(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|e| e.symbols).sum()
    }

    pub fn round_total(&self, round: u8) -> u64 {
        self.entries
            .iter()
            .filter(|e| e.round == round)
            .map(|e| e.symbols)
            .sum()
    }

    /// Symbols per `(sender, receiver)` edge across both rounds.
    pub fn edge_totals(&self) -> BTreeMap<(usize, usize), u64> {
        let mut out = BTreeMap::new();
        for e in &self.entries {
            *out.entry((e.sender, e.receiver)).or_insert(0) += e.symbols;
        }
        out
    }
}

/// What a repair session is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepairShape {
    pub k: u64,
    pub l: u64,
    /// Number of failed nodes.
    pub failed: u64,
    /// Number of helpers.
    pub helpers: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundReport {
    pub co_bound: Ratio<u64>,
    pub ce_bound: Ratio<u64>,
    /// Downloading `k` whole nodes per failed node.
    pub naive: u64,
    pub round1_total: u64,
    pub round2_total: u64,
    pub total: u64,
    pub co_met: bool,
    pub ce_met: bool,
    pub warnings: Vec<String>,
}

/// An integer when the ratio is one, `num/den` otherwise.
pub fn fmt_ratio(r: &Ratio<u64>) -> String {
    if r.is_integer() {
        r.to_integer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

impl BoundReport {
    /// Human-readable totals and verdicts.
    pub fn summary_lines(&self) -> Vec<String> {
        let mut out = vec![
            format!(
                "total symbols: round1={} round2={} all={}",
                self.round1_total, self.round2_total, self.total
            ),
            format!(
                "cooperative cut-set bound: {}; centralized cut-set bound: {}; naive: {}",
                fmt_ratio(&self.co_bound),
                fmt_ratio(&self.ce_bound),
                self.naive
            ),
            format!(
                "co bound met: {}; ce bound met: {}",
                yes_no(self.co_met),
                yes_no(self.ce_met)
            ),
        ];
        out.extend(self.warnings.iter().map(|w| format!("warning: {w}")));
        out
    }

    /// Machine-checkable trailer lines.
    pub fn check_lines(&self) -> Vec<String> {
        vec![
            format!(
                "#CHECK total={} round1={} round2={}",
                self.total, self.round1_total, self.round2_total
            ),
            format!(
                "#CHECK co_bound={} co_met={}",
                fmt_ratio(&self.co_bound),
                self.co_met
            ),
            format!(
                "#CHECK ce_bound={} ce_met={}",
                fmt_ratio(&self.ce_bound),
                self.ce_met
            ),
            format!("#CHECK naive={}", self.naive),
        ]
    }
}

/// Totals a finished transcript and compares it with both bounds.
pub fn meter_close(transcript: &RepairTranscript, shape: RepairShape) -> BoundReport {
    let (co_bound, ce_bound, mut warnings) = if shape.failed == 0 {
        (Ratio::from_integer(0), Ratio::from_integer(0), Vec::new())
    } else {
        match (
            cutset_cooperative(shape.k, shape.l, shape.failed, shape.helpers),
            cutset_centralized(shape.k, shape.l, shape.failed, shape.helpers),
        ) {
            (Ok(co), Ok(ce)) => (co, ce, Vec::new()),
            (Err(e), _) | (_, Err(e)) => (
                Ratio::from_integer(0),
                Ratio::from_integer(0),
                vec![format!("bounds unavailable: {e}")],
            ),
        }
    };
    for (name, b) in [("cooperative", &co_bound), ("centralized", &ce_bound)] {
        if !b.is_integer() {
            warnings.push(format!("{name} bound {} is not an integer", fmt_ratio(b)));
        }
    }

    let round1_total = transcript.round_total(1);
    let round2_total = transcript.round_total(2);
    let total = transcript.total();
    let meets = |measured: u64, bound: &Ratio<u64>| {
        !(transcript.is_empty() && shape.failed > 0) && *bound == Ratio::from_integer(measured)
    };
    BoundReport {
        co_met: meets(total, &co_bound),
        ce_met: meets(round1_total, &ce_bound),
        co_bound,
        ce_bound,
        naive: shape.failed * shape.k * shape.l,
        round1_total,
        round2_total,
        total,
        warnings,
    }
}

/// Transcript export: one line per message, then totals and verdicts.
pub fn render_transcript(transcript: &RepairTranscript, report: &BoundReport) -> String {
    let mut out = String::new();
    for e in transcript.messages() {
        writeln!(out, "{e}").unwrap();
    }
    for line in report.summary_lines() {
        writeln!(out, "{line}").unwrap();
    }
    out
}
