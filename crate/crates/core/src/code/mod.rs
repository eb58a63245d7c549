//! Code parameters, systematic encoding, parity checks and MDS decoding.
//!
//! A codeword has `n` nodes, each holding `l = m * s^n` symbols arranged as
//! `m = d + h - k` planes of `s^n` symbols (`s = d + 1 - k`). Symbol
//! `(b, a)` of node `i` lives at offset `b * s^n + a` of that node.
//!
//! Every `(b, a)` slice across the nodes satisfies the parity checks
//!
//! ```text
//! sum_i  lambda(i, a_i)^t * c(i, b, a) = 0      for t in 0..n-k
//! ```
//!
//! where `a_i` is digit `i` of `a` and `lambda` is the `n x s` table of
//! evaluation points. Nodes are 0-based in this crate; node `i` here is
//! node `i + 1` in the CLI and the event log.

mod grs;
mod index;

pub use grs::{grs_erasure_solve, ErasureSolver};
pub use index::{digits, from_digits, replace_digit, Radix};

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{Field, Symbol};

/// Default ceiling on `n * l`, the symbols in one codeword.
pub const DEFAULT_MAX_SYMBOLS: usize = 1 << 26;

#[derive(Debug, Clone)]
pub struct ParamOptions {
    /// Field width to use instead of the smallest that fits.
    pub width: Option<u32>,
    /// Shuffle the evaluation points with this seed instead of using the
    /// canonical enumeration.
    pub seed: Option<u64>,
    pub max_symbols: usize,
}

impl Default for ParamOptions {
    fn default() -> Self {
        ParamOptions {
            width: None,
            seed: None,
            max_symbols: DEFAULT_MAX_SYMBOLS,
        }
    }
}

/// Parameters of an `(n, k, l)` array code with `(h, d)` cooperative repair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeParams {
    n: usize,
    k: usize,
    h: usize,
    d: usize,
    s: usize,
    m: usize,
    l: usize,
    radix: Radix,
    field: Arc<Field>,
    seed: Option<u64>,
    // Row-major n x s: points[i * s + j] = lambda(i, j).
    points: Vec<Symbol>,
}

fn check_inequalities(n: usize, k: usize, h: usize, d: usize) -> Result<()> {
    let fail = |what: &str| {
        Err(Error::InvalidParams(format!(
            "{what} violated (n={n}, k={k}, h={h}, d={d})"
        )))
    };
    if k < 1 {
        return fail("1 <= k");
    }
    if k >= n {
        return fail("k < n");
    }
    if d < k {
        return fail("k <= d");
    }
    if h < 1 {
        return fail("1 <= h");
    }
    if h + d > n {
        return fail("h <= n - d");
    }
    Ok(())
}

impl CodeParams {
    pub fn new(n: usize, k: usize, h: usize, d: usize) -> Result<Self> {
        Self::with_options(n, k, h, d, &ParamOptions::default())
    }

    pub fn with_options(
        n: usize,
        k: usize,
        h: usize,
        d: usize,
        opts: &ParamOptions,
    ) -> Result<Self> {
        check_inequalities(n, k, h, d)?;
        let s = d + 1 - k;
        let m = d + h - k;
        let radix = Radix::new(s, n)?;
        let too_big = || Error::SizeGuard {
            symbols: usize::MAX,
            limit: opts.max_symbols,
        };
        let l = m.checked_mul(radix.span()).ok_or_else(too_big)?;
        let total = l.checked_mul(n).ok_or_else(too_big)?;
        if total > opts.max_symbols {
            return Err(Error::SizeGuard {
                symbols: total,
                limit: opts.max_symbols,
            });
        }

        let needed = s * n + 1;
        let field = match opts.width {
            Some(w) => {
                let f = Field::new(w)?;
                if f.order() < needed {
                    return Err(Error::FieldTooSmall {
                        order: f.order(),
                        needed,
                    });
                }
                f
            }
            None => Field::smallest_with_order(needed)?,
        };

        let mut pool: Vec<Symbol> = (1..field.order()).map(|x| x as Symbol).collect();
        if let Some(seed) = opts.seed {
            pool.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        pool.truncate(s * n);

        Ok(CodeParams {
            n,
            k,
            h,
            d,
            s,
            m,
            l,
            radix,
            field: Arc::new(field),
            seed: opts.seed,
            points: pool,
        })
    }

    /// Parameters with an explicit `n x s` point table, row-major.
    pub fn with_points(
        n: usize,
        k: usize,
        h: usize,
        d: usize,
        width: u32,
        points: Vec<Symbol>,
    ) -> Result<Self> {
        let opts = ParamOptions {
            width: Some(width),
            ..Default::default()
        };
        let mut params = Self::with_options(n, k, h, d, &opts)?;
        if points.len() != params.s * n {
            return Err(Error::Length {
                expected: params.s * n,
                got: points.len(),
            });
        }
        let mut sorted = points.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != points.len()
            || sorted[0] == 0
            || !params.field.contains(sorted[sorted.len() - 1])
        {
            return Err(Error::BadPoints);
        }
        params.points = points;
        Ok(params)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn h(&self) -> usize {
        self.h
    }
    pub fn d(&self) -> usize {
        self.d
    }
    /// `d + 1 - k`, the digit base.
    pub fn s(&self) -> usize {
        self.s
    }
    /// Plane count `d + h - k`.
    pub fn m(&self) -> usize {
        self.m
    }
    /// Node size in symbols.
    pub fn l(&self) -> usize {
        self.l
    }
    /// Parity checks per slice, `n - k`.
    pub fn rho(&self) -> usize {
        self.n - self.k
    }
    /// Symbols per plane, `s^n`.
    pub fn span(&self) -> usize {
        self.radix.span()
    }
    pub fn radix(&self) -> &Radix {
        &self.radix
    }
    pub fn field(&self) -> &Field {
        &self.field
    }
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Evaluation point `lambda(i, j)`.
    #[inline]
    pub fn point(&self, i: usize, j: usize) -> Symbol {
        self.points[i * self.s + j]
    }

    pub fn points(&self) -> &[Symbol] {
        &self.points
    }

    /// Points `(lambda(0, a_0), ..., lambda(n-1, a_{n-1}))` of slice `a`.
    pub fn slice_points(&self, a: usize) -> Vec<Symbol> {
        (0..self.n)
            .map(|i| self.point(i, self.radix.digit(a, i)))
            .collect()
    }

    pub fn zero_node(&self) -> NodeVector {
        NodeVector::zeros(self.m, self.span())
    }

    pub fn check_node(&self, node: &NodeVector) -> Result<()> {
        if node.span() != self.span() || node.len() != self.l {
            return Err(Error::Shape(format!(
                "node has {} symbols in planes of {}, expected {} in planes of {}",
                node.len(),
                node.span(),
                self.l,
                self.span()
            )));
        }
        Ok(())
    }
}

/// The `l` symbols stored by one node, plane-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeVector {
    span: usize,
    data: Vec<Symbol>,
}

impl NodeVector {
    pub fn zeros(planes: usize, span: usize) -> Self {
        NodeVector {
            span,
            data: vec![0; planes * span],
        }
    }

    pub fn from_symbols(span: usize, data: Vec<Symbol>) -> Result<Self> {
        if span == 0 || !data.len().is_multiple_of(span) {
            return Err(Error::Shape(format!(
                "{} symbols do not split into planes of {span}",
                data.len()
            )));
        }
        Ok(NodeVector { span, data })
    }

    pub fn span(&self) -> usize {
        self.span
    }

    pub fn planes(&self) -> usize {
        self.data.len() / self.span
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, b: usize, a: usize) -> Symbol {
        self.data[b * self.span + a]
    }

    #[inline]
    pub fn set(&mut self, b: usize, a: usize, v: Symbol) {
        self.data[b * self.span + a] = v;
    }

    pub fn plane(&self, b: usize) -> &[Symbol] {
        &self.data[b * self.span..(b + 1) * self.span]
    }

    pub fn plane_mut(&mut self, b: usize) -> &mut [Symbol] {
        &mut self.data[b * self.span..(b + 1) * self.span]
    }

    pub fn as_slice(&self) -> &[Symbol] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Symbol] {
        &mut self.data
    }

    pub fn into_symbols(self) -> Vec<Symbol> {
        self.data
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codeword {
    nodes: Vec<NodeVector>,
}

impl Codeword {
    pub fn from_nodes(params: &CodeParams, nodes: Vec<NodeVector>) -> Result<Self> {
        if nodes.len() != params.n() {
            return Err(Error::Shape(format!(
                "{} nodes, expected {}",
                nodes.len(),
                params.n()
            )));
        }
        for node in &nodes {
            params.check_node(node)?;
        }
        Ok(Codeword { nodes })
    }

    pub fn nodes(&self) -> &[NodeVector] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &NodeVector {
        &self.nodes[i]
    }

    pub fn node_mut(&mut self, i: usize) -> &mut NodeVector {
        &mut self.nodes[i]
    }

    pub fn into_nodes(self) -> Vec<NodeVector> {
        self.nodes
    }

    /// Componentwise sum of two codewords of the same shape.
    pub fn add(&self, other: &Codeword) -> Codeword {
        let nodes = self
            .nodes
            .iter()
            .zip(&other.nodes)
            .map(|(x, y)| NodeVector {
                span: x.span,
                data: x.data.iter().zip(&y.data).map(|(p, q)| p ^ q).collect(),
            })
            .collect();
        Codeword { nodes }
    }
}

/// Encodes `k * l` message symbols. Node `i < k` stores
/// `message[i * l..(i + 1) * l]` verbatim; the `n - k` parity nodes are
/// solved slice by slice.
pub fn encode(params: &CodeParams, message: &[Symbol]) -> Result<Codeword> {
    let (n, k, l, span) = (params.n(), params.k(), params.l(), params.span());
    if message.len() != k * l {
        return Err(Error::Length {
            expected: k * l,
            got: message.len(),
        });
    }
    let field = params.field();
    if let Some(&bad) = message.iter().find(|&&x| !field.contains(x)) {
        return Err(Error::Format(format!(
            "symbol {bad:#x} is outside GF(2^{})",
            field.width()
        )));
    }

    let mut nodes: Vec<NodeVector> = (0..n)
        .map(|i| {
            if i < k {
                NodeVector {
                    span,
                    data: message[i * l..(i + 1) * l].to_vec(),
                }
            } else {
                params.zero_node()
            }
        })
        .collect();

    let parity: Vec<usize> = (k..n).collect();
    let mut slice = vec![0 as Symbol; n];
    for a in 0..span {
        let solver = ErasureSolver::new(field, &params.slice_points(a), &parity)?;
        for b in 0..params.m() {
            for (i, node) in nodes.iter().enumerate().take(k) {
                slice[i] = node.get(b, a);
            }
            solver.fill(field, &mut slice);
            for i in k..n {
                nodes[i].set(b, a, slice[i]);
            }
        }
    }
    Ok(Codeword { nodes })
}

/// Parity-check syndromes of a word, indexed by `(t, b, a)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Residual {
    checks: usize,
    planes: usize,
    span: usize,
    values: Vec<Symbol>,
}

impl Residual {
    pub fn get(&self, t: usize, b: usize, a: usize) -> Symbol {
        self.values[(t * self.planes + b) * self.span + a]
    }

    pub fn checks(&self) -> usize {
        self.checks
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&x| x == 0)
    }

    pub fn nonzero_count(&self) -> usize {
        self.values.iter().filter(|&&x| x != 0).count()
    }
}

pub fn parity_residual(params: &CodeParams, nodes: &[NodeVector]) -> Result<Residual> {
    if nodes.len() != params.n() {
        return Err(Error::Shape(format!(
            "{} nodes, expected {}",
            nodes.len(),
            params.n()
        )));
    }
    for node in nodes {
        params.check_node(node)?;
    }
    let field = params.field();
    let (rho, m, span) = (params.rho(), params.m(), params.span());
    let mut values = vec![0 as Symbol; rho * m * span];
    for a in 0..span {
        let pts = params.slice_points(a);
        for t in 0..rho {
            let powers: Vec<Symbol> = pts
                .iter()
                .map(|&p| field.pow(p, t as u64))
                .collect::<Result<_>>()?;
            for b in 0..m {
                let sum = nodes
                    .iter()
                    .zip(&powers)
                    .fold(0, |acc, (node, &w)| acc ^ field.mul(w, node.get(b, a)));
                values[(t * m + b) * span + a] = sum;
            }
        }
    }
    Ok(Residual {
        checks: rho,
        planes: m,
        span,
        values,
    })
}

/// Recovers the full codeword from exactly `k` nodes.
pub fn mds_decode(params: &CodeParams, available: &[(usize, NodeVector)]) -> Result<Codeword> {
    let (n, k) = (params.n(), params.k());
    if available.len() != k {
        return Err(Error::NotEnoughLive {
            needed: k,
            live: available.len(),
        });
    }
    let mut slots: Vec<Option<NodeVector>> = vec![None; n];
    for (i, node) in available {
        if *i >= n {
            return Err(Error::OutOfRange {
                value: *i,
                limit: n,
            });
        }
        params.check_node(node)?;
        if slots[*i].is_some() {
            return Err(Error::Shape(format!("node {} supplied twice", i + 1)));
        }
        slots[*i] = Some(node.clone());
    }

    let missing: Vec<usize> = (0..n).filter(|&i| slots[i].is_none()).collect();
    let mut nodes: Vec<NodeVector> = slots
        .into_iter()
        .map(|s| s.unwrap_or_else(|| params.zero_node()))
        .collect();

    let field = params.field();
    let mut slice = vec![0 as Symbol; n];
    for a in 0..params.span() {
        let solver = ErasureSolver::new(field, &params.slice_points(a), &missing)?;
        for b in 0..params.m() {
            for (i, node) in nodes.iter().enumerate() {
                slice[i] = node.get(b, a);
            }
            solver.fill(field, &mut slice);
            for &i in &missing {
                nodes[i].set(b, a, slice[i]);
            }
        }
    }
    Ok(Codeword { nodes })
}
