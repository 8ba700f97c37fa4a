//! Baker–Campbell–Hausdorff series.
//!
//! Orders up to four use the closed form. Higher orders come from expanding
//! `log(exp X · exp Y)` in the free associative algebra on two letters and
//! projecting each homogeneous part onto Lie elements with the
//! Dynkin–Specht–Wever map: a Lie polynomial `P` of degree `n` equals
//! `(1/n) Σ_w c_w [w_1, [w_2, … [w_{n-1}, w_n]…]]`.

use std::collections::HashMap;
use std::sync::OnceLock;

use nalgebra::DVector;

use crate::algebra::GradedAlgebra;
use crate::error::{HensError, Result};

/// Largest series order available.
pub const MAX_BCH_ORDER: usize = 12;

/// A word in the letters `X` (bit 0) and `Y` (bit 1); letter `i` is bit `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Word {
    len: u8,
    bits: u16,
}

impl Word {
    #[cfg(test)]
    fn letter(self, i: usize) -> bool {
        (self.bits >> i) & 1 == 1
    }

    fn concat(self, other: Word) -> Word {
        Word {
            len: self.len + other.len,
            bits: self.bits | (other.bits << self.len),
        }
    }
}

type FreePoly = HashMap<Word, f64>;

fn mul_truncated(a: &FreePoly, b: &FreePoly, max_len: usize) -> FreePoly {
    let mut out = FreePoly::new();
    for (wa, ca) in a {
        for (wb, cb) in b {
            if (wa.len + wb.len) as usize <= max_len {
                *out.entry(wa.concat(*wb)).or_insert(0.0) += ca * cb;
            }
        }
    }
    out
}

/// Per-order lists of `(word, c_w / n)`, so that the order-`n` BCH term is the
/// sum of the listed coefficients times right-nested brackets.
fn coefficients() -> &'static Vec<Vec<(Word, f64)>> {
    static TABLE: OnceLock<Vec<Vec<(Word, f64)>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = MAX_BCH_ORDER;
        // A = exp(X) exp(Y) − 1 = Σ_{a+b ≥ 1} X^a Y^b / (a! b!)
        let mut fact = vec![1.0f64; n + 1];
        for k in 1..=n {
            fact[k] = fact[k - 1] * k as f64;
        }
        let mut a = FreePoly::new();
        for i in 0..=n {
            for j in 0..=n - i {
                if i + j == 0 {
                    continue;
                }
                let w = Word {
                    len: (i + j) as u8,
                    bits: (((1u32 << j) - 1) << i) as u16,
                };
                a.insert(w, 1.0 / (fact[i] * fact[j]));
            }
        }
        // log(1 + A) = Σ_k (−1)^{k+1} A^k / k
        let mut log = FreePoly::new();
        let mut power = a.clone();
        for k in 1..=n {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            for (w, c) in &power {
                *log.entry(*w).or_insert(0.0) += sign * c / k as f64;
            }
            if k < n {
                power = mul_truncated(&power, &a, n);
            }
        }
        let mut table = vec![Vec::new(); n + 1];
        for (w, c) in log {
            if c.abs() > 1e-15 && w.len >= 1 {
                table[w.len as usize].push((w, c / w.len as f64));
            }
        }
        for terms in &mut table {
            terms.sort_by_key(|(w, _)| w.bits);
        }
        table
    })
}

/// Homogeneous BCH term of the given order, evaluated with `alg`'s bracket.
fn term(alg: &GradedAlgebra, x: &DVector<f64>, y: &DVector<f64>, order: usize) -> DVector<f64> {
    let terms = &coefficients()[order];
    let mut out = DVector::zeros(x.len());
    if terms.is_empty() {
        return out;
    }
    // Right-nested brackets of every word of length `order`, built from the
    // innermost letter outwards: nested[w] for words of growing suffix length.
    let mut nested: HashMap<Word, DVector<f64>> = HashMap::new();
    nested.insert(Word { len: 1, bits: 0 }, x.clone());
    nested.insert(Word { len: 1, bits: 1 }, y.clone());
    for len in 2..=order {
        let mut next = HashMap::with_capacity(nested.len() * 2);
        for (suffix, val) in &nested {
            if val.iter().all(|&v| v == 0.0) {
                continue;
            }
            for (letter, vec) in [(0u16, x), (1u16, y)] {
                let w = Word {
                    len: len as u8,
                    bits: letter | (suffix.bits << 1),
                };
                next.insert(w, alg.bracket_raw(vec, val));
            }
        }
        nested = next;
    }
    for (w, c) in terms {
        if let Some(v) = nested.get(w) {
            out.axpy(*c, v, 1.0);
        }
    }
    out
}

/// The closed form through order four.
fn low_order(alg: &GradedAlgebra, x: &DVector<f64>, y: &DVector<f64>, order: usize) -> DVector<f64> {
    let mut z = x + y;
    if order < 2 {
        return z;
    }
    let xy = alg.bracket_raw(x, y);
    z.axpy(0.5, &xy, 1.0);
    if order < 3 {
        return z;
    }
    let x_xy = alg.bracket_raw(x, &xy);
    let y_xy = alg.bracket_raw(y, &xy);
    z.axpy(1.0 / 12.0, &x_xy, 1.0);
    z.axpy(-1.0 / 12.0, &y_xy, 1.0);
    if order < 4 {
        return z;
    }
    let y_x_xy = alg.bracket_raw(y, &x_xy);
    z.axpy(-1.0 / 24.0, &y_x_xy, 1.0);
    z
}

/// BCH series truncated after the given order.
pub fn bch_series(
    alg: &GradedAlgebra,
    x: &DVector<f64>,
    y: &DVector<f64>,
    order: usize,
) -> Result<DVector<f64>> {
    if order > MAX_BCH_ORDER {
        return Err(HensError::BchOrderTooLarge(order));
    }
    for v in [x, y] {
        if v.len() != alg.dim() {
            return Err(HensError::DimensionMismatch {
                expected: alg.dim(),
                got: v.len(),
            });
        }
    }
    let mut z = low_order(alg, x, y, order.min(4));
    for k in 5..=order {
        z += term(alg, x, y, k);
    }
    Ok(z)
}

/// BCH series built entirely from the generated coefficients, used to
/// cross-check the closed form.
pub fn bch_series_generated(
    alg: &GradedAlgebra,
    x: &DVector<f64>,
    y: &DVector<f64>,
    order: usize,
) -> Result<DVector<f64>> {
    if order > MAX_BCH_ORDER {
        return Err(HensError::BchOrderTooLarge(order));
    }
    let mut z = DVector::zeros(alg.dim());
    for k in 1..=order {
        z += term(alg, x, y, k);
    }
    Ok(z)
}
