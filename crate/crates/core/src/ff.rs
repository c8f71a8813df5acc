//! Exact arithmetic in the finite field `F_{p^n}`.
//!
//! A [`FieldCtx`] fixes a concrete model of the field: the lexicographically
//! smallest monic irreducible modulus of degree `n` over `Z_p` (coefficients
//! compared high-degree-first) and the smallest generator of the
//! multiplicative group. Elements are base-`p` digit strings packed into a
//! `u32`, so arithmetic is table-driven. The same encoding doubles as the
//! frequency space `Z_p^n` of the additive characters; the two are glued by
//! the trace pairing `b . j = Tr(bj)`.
//!
//! Construction is deterministic: `make_field(p, n)` always yields the same
//! modulus, generator and element order.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;
use thiserror::Error;

/// Largest supported field order (`q = p^n`).
pub const MAX_FIELD_ORDER: u64 = 1 << 20;

static NEXT_CTX_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("extension degree must be at least 1")]
    DegreeZero,
    #[error("field order {p}^{n} exceeds 2^20")]
    FieldTooLarge { p: u32, n: u32 },
    #[error("elements from different field contexts")]
    MixedContexts,
    #[error("division by zero")]
    DivisionByZero,
    #[error("value {0} does not encode an element of this field")]
    NotInField(u32),
}

/// An element of `F_{p^n}`, packed as `sum_i c_i p^i` with digits `c_i` in
/// `[0, p)` (coefficient of `x^i` in the residue-class representative).
///
/// Elements carry the id of their context; operations on elements from
/// different contexts fail with [`FieldError::MixedContexts`]. The derived
/// order sorts by context first and then by packed value, which is exactly
/// the coefficient order used for all canonical-form tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldElement {
    ctx: u64,
    val: u32,
}

impl FieldElement {
    /// Packed integer encoding of this element.
    pub fn val(&self) -> u32 {
        self.val
    }

    pub(crate) fn ctx_id(&self) -> u64 {
        self.ctx
    }
}

/// A frequency `l` in `Z_p^n`, with the same digit encoding as
/// [`FieldElement`]. Frequencies index the additive characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Frequency {
    ctx: u64,
    val: u32,
}

impl Frequency {
    pub fn val(&self) -> u32 {
        self.val
    }

    pub fn is_zero(&self) -> bool {
        self.val == 0
    }
}

/// Multiplicative character selector for [`FieldCtx::gauss_sum`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiplicativeChar {
    /// Constant 1 on `F_q^*` (vanishing at zero by convention).
    Trivial,
    /// The quadratic character: +1 on squares, -1 on non-squares, 0 at 0.
    Quadratic,
}

/// Parity of the exponent `d` in the Gauss-sum classification `i^d sqrt(q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// A computed Gauss sum `G(m, chi_k) = sum_{x != 0} m(x) chi_k(x)`.
///
/// For the quadratic character and a nontrivial additive character the value
/// lies in `{+-sqrt(q), +-i sqrt(q)}`; `d` records which fourth root of
/// unity, with only its parity asserted against theory.
#[derive(Debug, Clone, Copy)]
pub struct GaussSumValue {
    pub value: Complex64,
    pub modulus_sq: f64,
    /// Exponent in `i^d sqrt(q)`; set only for the quadratic character at a
    /// nonzero frequency.
    pub d: Option<u8>,
}

impl GaussSumValue {
    pub fn d_parity(&self) -> Option<Parity> {
        self.d.map(|d| if d % 2 == 0 { Parity::Even } else { Parity::Odd })
    }
}

/// A concrete model of `F_{p^n}` with precomputed exp/log tables.
pub struct FieldCtx {
    id: u64,
    p: u32,
    n: u32,
    q: u32,
    /// Monic modulus, little-endian coefficients, length `n + 1`.
    modulus: Vec<u32>,
    generator: u32,
    /// `exp[i] = generator^i`, length `q - 1`.
    exp: Vec<u32>,
    /// `log[exp[i]] = i`; entry 0 is unused.
    log: Vec<u32>,
}

impl fmt::Debug for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldCtx")
            .field("p", &self.p)
            .field("n", &self.n)
            .field("q", &self.q)
            .field("modulus", &self.modulus)
            .field("generator", &self.generator)
            .finish()
    }
}

impl PartialEq for FieldCtx {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

/// Builds the canonical `F_{p^n}` context. Deterministic in `(p, n)`.
pub fn make_field(p: u32, n: u32) -> Result<FieldCtx, FieldError> {
    FieldCtx::new(p, n)
}

impl FieldCtx {
    pub fn new(p: u32, n: u32) -> Result<Self, FieldError> {
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        if n == 0 {
            return Err(FieldError::DegreeZero);
        }
        let mut q: u64 = 1;
        for _ in 0..n {
            q *= p as u64;
            if q > MAX_FIELD_ORDER {
                return Err(FieldError::FieldTooLarge { p, n });
            }
        }
        let q = q as u32;
        let modulus = smallest_irreducible(p, n);
        let mut ctx = FieldCtx {
            id: NEXT_CTX_ID.fetch_add(1, Ordering::Relaxed),
            p,
            n,
            q,
            modulus,
            generator: 0,
            exp: Vec::new(),
            log: Vec::new(),
        };
        ctx.generator = ctx.find_generator();
        ctx.build_tables();
        Ok(ctx)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    /// `true` when `p` is odd (required by the projective-group pipeline).
    pub fn odd(&self) -> bool {
        self.p != 2
    }

    /// Monic modulus polynomial, little-endian coefficients.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    /// Field spec in the textual `p^n` form.
    pub fn spec_string(&self) -> String {
        format!("{}^{}", self.p, self.n)
    }

    pub(crate) fn id(&self) -> u64 {
        self.id
    }

    // ---- element constructors ----

    pub fn zero(&self) -> FieldElement {
        FieldElement { ctx: self.id, val: 0 }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement { ctx: self.id, val: 1 }
    }

    pub fn generator(&self) -> FieldElement {
        FieldElement { ctx: self.id, val: self.generator }
    }

    pub fn element_from_val(&self, val: u32) -> Result<FieldElement, FieldError> {
        if val < self.q {
            Ok(FieldElement { ctx: self.id, val })
        } else {
            Err(FieldError::NotInField(val))
        }
    }

    /// Builds an element from coefficients of `x^0 .. x^{n-1}`; digits are
    /// reduced mod `p`, missing trailing digits are zero.
    pub fn element(&self, coeffs: &[u32]) -> Result<FieldElement, FieldError> {
        if coeffs.len() > self.n as usize {
            return Err(FieldError::NotInField(u32::MAX));
        }
        let mut val = 0u32;
        for (i, &c) in coeffs.iter().enumerate() {
            val += (c % self.p) * self.p.pow(i as u32);
        }
        Ok(FieldElement { ctx: self.id, val })
    }

    /// Scalar from the prime subfield.
    pub fn scalar(&self, c: u32) -> FieldElement {
        FieldElement { ctx: self.id, val: c % self.p }
    }

    pub fn coeffs(&self, a: FieldElement) -> Vec<u32> {
        self.check(a);
        self.decode(a.val)
    }

    /// All `q` elements in packed-value order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.q).map(move |val| FieldElement { ctx: self.id, val })
    }

    pub fn nonzero_elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (1..self.q).map(move |val| FieldElement { ctx: self.id, val })
    }

    // ---- frequencies ----

    pub fn frequency_from_val(&self, val: u32) -> Result<Frequency, FieldError> {
        if val < self.q {
            Ok(Frequency { ctx: self.id, val })
        } else {
            Err(FieldError::NotInField(val))
        }
    }

    pub fn frequencies(&self) -> impl Iterator<Item = Frequency> + '_ {
        (0..self.q).map(move |val| Frequency { ctx: self.id, val })
    }

    pub fn frequency_coords(&self, k: Frequency) -> Vec<u32> {
        assert_eq!(k.ctx, self.id, "frequency from another field context");
        self.decode(k.val)
    }

    /// Identifies a frequency with the field element sharing its digits.
    pub fn frequency_as_element(&self, k: Frequency) -> FieldElement {
        assert_eq!(k.ctx, self.id, "frequency from another field context");
        FieldElement { ctx: self.id, val: k.val }
    }

    pub fn element_as_frequency(&self, a: FieldElement) -> Frequency {
        self.check(a);
        Frequency { ctx: self.id, val: a.val }
    }

    // ---- arithmetic ----

    pub fn add(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        self.check2(a, b)?;
        Ok(FieldElement { ctx: self.id, val: self.add_val(a.val, b.val) })
    }

    pub fn sub(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        self.check2(a, b)?;
        Ok(FieldElement { ctx: self.id, val: self.sub_val(a.val, b.val) })
    }

    pub fn neg(&self, a: FieldElement) -> FieldElement {
        self.check(a);
        FieldElement { ctx: self.id, val: self.sub_val(0, a.val) }
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        self.check2(a, b)?;
        Ok(FieldElement { ctx: self.id, val: self.mul_val(a.val, b.val) })
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement, FieldError> {
        self.check(a);
        if a.val == 0 {
            return Err(FieldError::DivisionByZero);
        }
        Ok(FieldElement { ctx: self.id, val: self.inv_val(a.val) })
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        let bi = self.inv(b)?;
        self.mul(a, bi)
    }

    pub fn pow(&self, a: FieldElement, e: u64) -> FieldElement {
        self.check(a);
        FieldElement { ctx: self.id, val: self.pow_val(a.val, e) }
    }

    /// Multiplicative order; `None` for zero.
    pub fn multiplicative_order(&self, a: FieldElement) -> Option<u32> {
        self.check(a);
        if a.val == 0 {
            return None;
        }
        let m = self.q - 1;
        let l = self.log[a.val as usize];
        Some(m / gcd(m, l))
    }

    /// Discrete log base the canonical generator; `None` for zero.
    pub fn log(&self, a: FieldElement) -> Option<u32> {
        self.check(a);
        if a.val == 0 {
            None
        } else {
            Some(self.log[a.val as usize])
        }
    }

    // ---- trace machinery ----

    /// `Tr_{F_{p^n}/F_p}(a) = sum_{m=0}^{n-1} a^{p^m}`, returned in `Z_p`.
    pub fn trace(&self, a: FieldElement) -> u32 {
        self.check(a);
        let mut frob = a.val;
        let mut acc = a.val;
        for _ in 1..self.n {
            frob = self.pow_val(frob, self.p as u64);
            acc = self.add_val(acc, frob);
        }
        let digits = self.decode(acc);
        debug_assert!(digits[1..].iter().all(|&d| d == 0), "trace left the prime subfield");
        digits[0]
    }

    /// Trace pairing `b . j = Tr(bj)`, the bilinear form indexing additive
    /// characters.
    pub fn dot(&self, b: FieldElement, j: FieldElement) -> Result<u32, FieldError> {
        self.check2(b, j)?;
        Ok(self.trace(FieldElement { ctx: self.id, val: self.mul_val(b.val, j.val) }))
    }

    /// Additive character `chi_k(j) = omega_p^{k . j}`.
    pub fn additive_char(&self, k: Frequency, j: FieldElement) -> Complex64 {
        assert_eq!(k.ctx, self.id, "frequency from another field context");
        self.check(j);
        let d = self
            .dot(FieldElement { ctx: self.id, val: k.val }, j)
            .expect("same context");
        Complex64::from_polar(1.0, TAU * d as f64 / self.p as f64)
    }

    /// Quadratic character: +1 on squares, -1 on non-squares, 0 at zero.
    pub fn quadratic_char(&self, a: FieldElement) -> i32 {
        self.check(a);
        if a.val == 0 {
            0
        } else if self.log[a.val as usize].is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    pub fn is_square(&self, a: FieldElement) -> bool {
        self.quadratic_char(a) == 1
    }

    /// Gauss sum `G(m, chi_k)` by direct summation over `F_q^*`.
    pub fn gauss_sum(&self, m: MultiplicativeChar, k: Frequency) -> GaussSumValue {
        assert_eq!(k.ctx, self.id, "frequency from another field context");
        let mut value = Complex64::new(0.0, 0.0);
        for x in self.nonzero_elements() {
            let weight = match m {
                MultiplicativeChar::Trivial => 1.0,
                MultiplicativeChar::Quadratic => self.quadratic_char(x) as f64,
            };
            value += weight * self.additive_char(k, x);
        }
        let modulus_sq = value.norm_sqr();
        let d = if m == MultiplicativeChar::Quadratic && k.val != 0 {
            let root = (self.q as f64).sqrt();
            let mut best = 0u8;
            let mut best_dist = f64::INFINITY;
            for cand in 0..4u8 {
                let target = Complex64::from_polar(root, TAU * cand as f64 / 4.0);
                let dist = (value - target).norm();
                if dist < best_dist {
                    best_dist = dist;
                    best = cand;
                }
            }
            Some(best)
        } else {
            None
        };
        GaussSumValue { value, modulus_sq, d }
    }

    // ---- raw digit/table arithmetic (context already validated) ----

    fn check(&self, a: FieldElement) {
        assert_eq!(a.ctx, self.id, "element from another field context");
    }

    fn check2(&self, a: FieldElement, b: FieldElement) -> Result<(), FieldError> {
        if a.ctx != self.id || b.ctx != self.id {
            return Err(FieldError::MixedContexts);
        }
        Ok(())
    }

    pub(crate) fn decode(&self, mut val: u32) -> Vec<u32> {
        let mut digits = vec![0u32; self.n as usize];
        for d in digits.iter_mut() {
            *d = val % self.p;
            val /= self.p;
        }
        digits
    }

    pub(crate) fn add_val(&self, a: u32, b: u32) -> u32 {
        let (mut a, mut b) = (a, b);
        let mut out = 0u32;
        let mut place = 1u32;
        for _ in 0..self.n {
            let s = (a % self.p + b % self.p) % self.p;
            out += s * place;
            a /= self.p;
            b /= self.p;
            place *= self.p;
        }
        out
    }

    pub(crate) fn sub_val(&self, a: u32, b: u32) -> u32 {
        let (mut a, mut b) = (a, b);
        let mut out = 0u32;
        let mut place = 1u32;
        for _ in 0..self.n {
            let s = (a % self.p + self.p - b % self.p) % self.p;
            out += s * place;
            a /= self.p;
            b /= self.p;
            place *= self.p;
        }
        out
    }

    pub(crate) fn mul_val(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        let m = (self.q - 1) as u64;
        let s = (self.log[a as usize] as u64 + self.log[b as usize] as u64) % m;
        self.exp[s as usize]
    }

    pub(crate) fn inv_val(&self, a: u32) -> u32 {
        debug_assert!(a != 0);
        let m = self.q - 1;
        self.exp[((m - self.log[a as usize]) % m) as usize]
    }

    pub(crate) fn pow_val(&self, a: u32, e: u64) -> u32 {
        if a == 0 {
            return if e == 0 { 1 } else { 0 };
        }
        let m = (self.q - 1) as u128;
        let s = (self.log[a as usize] as u128 * e as u128) % m;
        self.exp[s as usize]
    }

    /// `exp(2 pi i c / p)` for a prime-subfield scalar `c`.
    pub(crate) fn root_of_unity(&self, c: u32) -> Complex64 {
        Complex64::from_polar(1.0, TAU * (c % self.p) as f64 / self.p as f64)
    }

    // ---- construction helpers ----

    /// Polynomial product mod the modulus, digit arithmetic only. Used to
    /// bootstrap the exp table before any table exists.
    fn mul_poly_val(&self, a: u32, b: u32) -> u32 {
        let n = self.n as usize;
        let p = self.p as u64;
        let da = self.decode(a);
        let db = self.decode(b);
        let mut buf = vec![0u64; 2 * n - 1];
        for (i, &ca) in da.iter().enumerate() {
            if ca == 0 {
                continue;
            }
            for (j, &cb) in db.iter().enumerate() {
                buf[i + j] = (buf[i + j] + ca as u64 * cb as u64) % p;
            }
        }
        for i in (n..2 * n - 1).rev() {
            let c = buf[i] % p;
            if c != 0 {
                // x^n = -(modulus minus leading term)
                for k in 0..n {
                    let m = self.modulus[k] as u64 % p;
                    buf[i - n + k] = (buf[i - n + k] + c * (p - m)) % p;
                }
            }
            buf[i] = 0;
        }
        let mut val = 0u32;
        let mut place = 1u32;
        for item in buf.iter().take(n) {
            val += (*item as u32) * place;
            place *= self.p;
        }
        val
    }

    fn pow_poly_val(&self, a: u32, mut e: u64) -> u32 {
        let mut base = a;
        let mut acc = 1u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_poly_val(acc, base);
            }
            base = self.mul_poly_val(base, base);
            e >>= 1;
        }
        acc
    }

    fn find_generator(&self) -> u32 {
        let m = (self.q - 1) as u64;
        if m == 1 {
            return 1;
        }
        let factors = prime_factors(m);
        'outer: for cand in 1..self.q {
            for &r in &factors {
                if self.pow_poly_val(cand, m / r) == 1 {
                    continue 'outer;
                }
            }
            return cand;
        }
        unreachable!("F_q^* is cyclic, a generator exists");
    }

    fn build_tables(&mut self) {
        let m = (self.q - 1) as usize;
        self.exp = vec![0u32; m];
        self.log = vec![0u32; self.q as usize];
        let mut cur = 1u32;
        for i in 0..m {
            self.exp[i] = cur;
            self.log[cur as usize] = i as u32;
            cur = self.mul_poly_val(cur, self.generator);
        }
        debug_assert_eq!(cur, 1, "generator order is not q - 1");
    }
}

fn is_prime(m: u32) -> bool {
    if m < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= m as u64 {
        if m.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn prime_factors(mut m: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= m {
        if m.is_multiple_of(d) {
            out.push(d);
            while m.is_multiple_of(d) {
                m /= d;
            }
        }
        d += 1;
    }
    if m > 1 {
        out.push(m);
    }
    out
}

/// Remainder of `a` by monic `m`, both little-endian over `Z_p`.
fn poly_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let p = p as u64;
    let dm = m.len() - 1;
    let mut r: Vec<u64> = a.iter().map(|&c| c as u64 % p).collect();
    while r.len() > dm {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - dm;
        if lead != 0 {
            for k in 0..=dm {
                let s = (lead * (m[k] as u64 % p)) % p;
                r[shift + k] = (r[shift + k] + p - s) % p;
            }
        }
        r.pop();
    }
    r.iter().map(|&c| c as u32).collect()
}

fn is_zero_poly(a: &[u32]) -> bool {
    a.iter().all(|&c| c == 0)
}

/// The lexicographically smallest monic irreducible of degree `n` over `Z_p`,
/// comparing non-leading coefficients high-degree-first (equivalently, by the
/// packed base-`p` value of the non-leading part). Tested by trial division
/// against every monic polynomial of degree up to `n/2`.
fn smallest_irreducible(p: u32, n: u32) -> Vec<u32> {
    let n = n as usize;
    let mut low_count = 1u64;
    for _ in 0..n {
        low_count *= p as u64;
    }
    'cand: for low in 0..low_count {
        let mut cand = vec![0u32; n + 1];
        let mut v = low;
        for c in cand.iter_mut().take(n) {
            *c = (v % p as u64) as u32;
            v /= p as u64;
        }
        cand[n] = 1;
        let half = n / 2;
        for deg in 1..=half {
            let mut div_count = 1u64;
            for _ in 0..deg {
                div_count *= p as u64;
            }
            for dlow in 0..div_count {
                let mut div = vec![0u32; deg + 1];
                let mut w = dlow;
                for c in div.iter_mut().take(deg) {
                    *c = (w % p as u64) as u32;
                    w /= p as u64;
                }
                div[deg] = 1;
                if is_zero_poly(&poly_rem(&cand, &div, p)) {
                    continue 'cand;
                }
            }
        }
        return cand;
    }
    unreachable!("irreducible polynomials of every degree exist over Z_p");
}
