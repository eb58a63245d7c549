//! Arithmetic over GF(2^w) for w in {4, 8, 16}.
//!
//! Elements are stored as `u16` bit patterns: bit `i` is the coefficient of
//! `x^i` in the polynomial basis. Multiplication goes through log/antilog
//! tables built once per [`Field`].
//!
//! The reduction polynomials are fixed so that shard files written on one
//! machine decode identically on another:
//!
//! | width | polynomial                    | hex       |
//! |-------|-------------------------------|-----------|
//! | 4     | x^4 + x + 1                   | `0x13`    |
//! | 8     | x^8 + x^4 + x^3 + x + 1       | `0x11B`   |
//! | 16    | x^16 + x^12 + x^3 + x + 1     | `0x1100B` |
//!
//! `x` is not a generator modulo `0x11B`, so the table generator is the
//! smallest element of full multiplicative order (3 for that polynomial).

use crate::error::{Error, Result};

/// A single field symbol.
pub type Symbol = u16;

pub const SUPPORTED_WIDTHS: [u32; 3] = [4, 8, 16];

/// The documented reduction polynomial for a supported width.
pub fn reduction_polynomial(width: u32) -> Result<u32> {
    match width {
        4 => Ok(0x13),
        8 => Ok(0x11B),
        16 => Ok(0x1_100B),
        w => Err(Error::UnsupportedWidth(w)),
    }
}

/// Shift-and-reduce multiply. Used to build the tables and as a test oracle.
pub fn mul_slow(a: u32, b: u32, width: u32, poly: u32) -> u32 {
    let top = 1u32 << width;
    let (mut a, mut b, mut acc) = (a, b, 0u32);
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & top != 0 {
            a ^= poly;
        }
    }
    acc
}

/// GF(2^w) with precomputed log/antilog tables. Immutable once built.
#[derive(Clone)]
pub struct Field {
    width: u32,
    poly: u32,
    generator: Symbol,
    // exp has 2*(order-1) entries so log(a)+log(b) never needs a modulo.
    exp: Vec<Symbol>,
    log: Vec<u32>,
}

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Field")
            .field("width", &self.width)
            .field("poly", &format_args!("{:#x}", self.poly))
            .field("generator", &self.generator)
            .finish()
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width && self.poly == other.poly
    }
}

impl Eq for Field {}

impl Field {
    pub fn new(width: u32) -> Result<Self> {
        let poly = reduction_polynomial(width)?;
        let order = 1u32 << width;
        let group = order - 1;

        let generator = (2..order)
            .find(|&g| {
                let mut x = 1u32;
                for step in 1..=group {
                    x = mul_slow(x, g, width, poly);
                    if x == 1 {
                        return step == group;
                    }
                }
                false
            })
            .expect("reduction polynomial is irreducible, so a generator exists");

        let mut exp = vec![0 as Symbol; 2 * group as usize];
        let mut log = vec![0u32; order as usize];
        let mut x = 1u32;
        for e in 0..group {
            exp[e as usize] = x as Symbol;
            exp[(e + group) as usize] = x as Symbol;
            log[x as usize] = e;
            x = mul_slow(x, generator, width, poly);
        }

        Ok(Field {
            width,
            poly,
            generator: generator as Symbol,
            exp,
            log,
        })
    }

    /// Smallest supported field with at least `min_order` elements.
    pub fn smallest_with_order(min_order: usize) -> Result<Self> {
        for w in SUPPORTED_WIDTHS {
            if (1usize << w) >= min_order {
                return Field::new(w);
            }
        }
        Err(Error::FieldTooSmall {
            order: 1 << 16,
            needed: min_order,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn order(&self) -> usize {
        1 << self.width
    }

    pub fn polynomial(&self) -> u32 {
        self.poly
    }

    pub fn generator(&self) -> Symbol {
        self.generator
    }

    /// Bytes used to serialize one symbol.
    pub fn symbol_bytes(&self) -> usize {
        self.width.div_ceil(8) as usize
    }

    pub fn contains(&self, a: Symbol) -> bool {
        (a as usize) < self.order()
    }

    /// Addition and subtraction coincide in characteristic 2.
    #[inline]
    pub fn add(&self, a: Symbol, b: Symbol) -> Symbol {
        a ^ b
    }

    #[inline]
    pub fn sub(&self, a: Symbol, b: Symbol) -> Symbol {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: Symbol, b: Symbol) -> Symbol {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[(self.log[a as usize] + self.log[b as usize]) as usize]
    }

    pub fn inv(&self, a: Symbol) -> Result<Symbol> {
        if a == 0 {
            return Err(Error::ZeroInverse);
        }
        let group = self.order() as u32 - 1;
        Ok(self.exp[((group - self.log[a as usize]) % group) as usize])
    }

    pub fn div(&self, a: Symbol, b: Symbol) -> Result<Symbol> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: Symbol, t: u64) -> Result<Symbol> {
        if a == 0 {
            return if t == 0 {
                Err(Error::ZeroToZeroPower)
            } else {
                Ok(0)
            };
        }
        let group = self.order() as u64 - 1;
        let e = (self.log[a as usize] as u64 * (t % group)) % group;
        Ok(self.exp[e as usize])
    }

    /// `acc[i] += coef * src[i]` over the whole slice.
    pub fn mul_acc(&self, acc: &mut [Symbol], src: &[Symbol], coef: Symbol) {
        if coef == 0 {
            return;
        }
        let lc = self.log[coef as usize];
        for (dst, &x) in acc.iter_mut().zip(src) {
            if x != 0 {
                *dst ^= self.exp[(lc + self.log[x as usize]) as usize];
            }
        }
    }
}
