//! Disjoint unions of directed cycles and their cyclic loop conditions.
//!
//! A [`CycleSet`] `C` names both the digraph `C_C` (one directed cycle per length)
//! and the loop condition `Σ_C` of that digraph. All decisions here are arithmetic.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use thiserror::Error;

use crate::digraph::Digraph;

pub const LCM_LIMIT: u64 = 1_000_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CyclesError {
    #[error("cycle set must be non-empty")]
    Empty,
    #[error("cycle lengths must be positive")]
    Zero,
    #[error("lcm {0} exceeds {LCM_LIMIT}")]
    LcmTooLarge(u128),
    #[error("cannot parse cycle set {0:?}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CycleSet(Vec<u64>);

impl CycleSet {
    pub fn new(lengths: impl IntoIterator<Item = u64>) -> Result<Self, CyclesError> {
        let mut v: Vec<u64> = lengths.into_iter().collect();
        if v.contains(&0) {
            return Err(CyclesError::Zero);
        }
        v.sort_unstable();
        v.dedup();
        if v.is_empty() {
            return Err(CyclesError::Empty);
        }
        Ok(CycleSet(v))
    }

    pub fn lengths(&self) -> &[u64] {
        &self.0
    }

    pub fn contains(&self, a: u64) -> bool {
        self.0.binary_search(&a).is_ok()
    }

    /// `C⊘c`.
    pub fn dotdiv(&self, c: u64) -> CycleSet {
        CycleSet::new(self.0.iter().map(|&a| dotdiv(a, c))).unwrap()
    }

    pub fn rad(&self) -> CycleSet {
        CycleSet::new(self.0.iter().map(|&a| rad(a))).unwrap()
    }

    pub fn lcm(&self) -> Result<u64, CyclesError> {
        let mut l: u128 = 1;
        for &a in &self.0 {
            l = l.lcm(&(a as u128));
            if l > LCM_LIMIT as u128 {
                return Err(CyclesError::LcmTooLarge(l));
            }
        }
        Ok(l as u64)
    }

    /// One directed cycle per length on fresh vertices.
    pub fn to_digraph(&self) -> Digraph {
        Digraph::cycles(&self.0)
    }
}

impl FromStr for CycleSet {
    type Err = CyclesError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Result<Vec<u64>, _> = s.split(',').map(|p| p.trim().parse::<u64>()).collect();
        match parts {
            Ok(v) => CycleSet::new(v),
            Err(_) => Err(CyclesError::Parse(s.to_string())),
        }
    }
}

impl fmt::Display for CycleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.0.iter().map(u64::to_string).collect();
        write!(f, "{}", s.join(","))
    }
}

/// A set of primes; `Σ_P` is a prime cyclic loop condition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PrimeSet(Vec<u64>);

impl PrimeSet {
    /// Panics unless every element is prime.
    pub fn new(primes: impl IntoIterator<Item = u64>) -> Self {
        let mut v: Vec<u64> = primes.into_iter().collect();
        assert!(v.iter().all(|&p| is_prime(p)), "not all prime: {v:?}");
        v.sort_unstable();
        v.dedup();
        PrimeSet(v)
    }

    pub fn primes(&self) -> &[u64] {
        &self.0
    }

    pub fn is_subset(&self, other: &PrimeSet) -> bool {
        self.0.iter().all(|p| other.0.contains(p))
    }

    pub fn as_cycles(&self) -> CycleSet {
        CycleSet::new(self.0.iter().copied()).unwrap()
    }
}

impl fmt::Display for PrimeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.0.iter().map(u64::to_string).collect();
        write!(f, "{}", s.join(","))
    }
}

pub fn dotdiv(a: u64, c: u64) -> u64 {
    a / a.gcd(&c)
}

fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

/// Distinct prime factors, ascending.
pub fn prime_factors(mut a: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= a {
        if a % d == 0 {
            out.push(d);
            while a % d == 0 {
                a /= d;
            }
        }
        d += 1;
    }
    if a > 1 {
        out.push(a);
    }
    out
}

pub fn rad(a: u64) -> u64 {
    prime_factors(a).into_iter().product()
}

fn divisors(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            small.push(d);
            if d * d != n {
                large.push(n / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

/// `a` divides `lcm(xs)`, without forming the lcm.
fn divides_lcm(a: u64, xs: &[u64]) -> bool {
    xs.iter().fold(1u64, |l, &x| l.lcm(&a.gcd(&x))) == a
}

/// `C_c ⊨ Σ_d`: for every map `h: d → c` some `a ∈ c` divides `lcm{h(b)⊘b}`.
pub fn satisfies_clc(c: &CycleSet, d: &CycleSet) -> bool {
    let (cs, ds) = (c.lengths(), d.lengths());
    let mut sel = vec![0usize; ds.len()];
    let mut vals = vec![0u64; ds.len()];
    loop {
        for i in 0..ds.len() {
            vals[i] = dotdiv(cs[sel[i]], ds[i]);
        }
        if !cs.iter().any(|&a| divides_lcm(a, &vals)) {
            return false;
        }
        let mut i = 0;
        loop {
            if i == sel.len() {
                return true;
            }
            sel[i] += 1;
            if sel[i] < cs.len() {
                break;
            }
            sel[i] = 0;
            i += 1;
        }
    }
}

/// `Σ_c ⇒ Σ_d`: every `a ∈ c` has some `b ∈ d` with `rad(b) | rad(a)`.
pub fn clc_implies(c: &CycleSet, d: &CycleSet) -> bool {
    c.lengths().iter().all(|&a| {
        let ra = rad(a);
        d.lengths().iter().any(|&b| ra % rad(b) == 0)
    })
}

/// Divisors `c'` of `lcm(C)` that are maximal for `C`, one per distinct `C⊘c'`.
pub fn maximal_divisors(c: &CycleSet) -> Result<Vec<u64>, CyclesError> {
    let l = c.lcm()?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for cp in divisors(l) {
        let s = c.dotdiv(cp);
        if s.contains(1) {
            continue;
        }
        // checking primes suffices: a 1 in C⊘(c'p) survives any further division
        let maximal = prime_factors(s.lcm()?).into_iter().all(|p| c.dotdiv(cp * p).contains(1));
        if maximal && seen.insert(s) {
            out.push(cp);
        }
    }
    Ok(out)
}

/// Prime sets of the conditions `Σ_{C⊘c'}` for maximal `c'`.
fn maximal_prime_sets(c: &CycleSet) -> Result<BTreeSet<PrimeSet>, CyclesError> {
    Ok(maximal_divisors(c)?
        .into_iter()
        .map(|cp| PrimeSet::new(c.dotdiv(cp).lengths().iter().flat_map(|&a| prime_factors(a))))
        .collect())
}

/// Strongest prime loop conditions jointly equivalent to `Σ_C` (inclusion-minimal sets).
pub fn pcl_decomposition(c: &CycleSet) -> Result<BTreeSet<PrimeSet>, CyclesError> {
    let all = maximal_prime_sets(c)?;
    Ok(all.iter().filter(|p| !all.iter().any(|q| q != *p && q.is_subset(p))).cloned().collect())
}

/// Weakest prime loop conditions that `C_C` fails (inclusion-maximal sets).
/// `C_C ⊨ Σ_P` exactly when `P` is contained in none of them.
pub fn pcl_of_cycles(c: &CycleSet) -> Result<BTreeSet<PrimeSet>, CyclesError> {
    let all = maximal_prime_sets(c)?;
    Ok(all.iter().filter(|p| !all.iter().any(|q| q != *p && p.is_subset(q))).cloned().collect())
}

/// `C_d ≤ C_c` in the pp-constructability order: every prime-saturated
/// `Σ_{c⊘c'}` failed by `C_c` is also failed by `C_d`.
pub fn cycles_ppleq(d: &CycleSet, c: &CycleSet) -> Result<bool, CyclesError> {
    for cp in divisors(c.lcm()?) {
        let s = c.dotdiv(cp);
        let saturated = s.lengths().iter().all(|&a| s.lengths().iter().any(|&p| is_prime(p) && a % p == 0));
        if saturated && satisfies_clc(d, &s) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Square-free cycle set pp-equivalent to `c`.
pub fn square_free_rep(c: &CycleSet) -> Result<CycleSet, CyclesError> {
    let gens: Vec<PrimeSet> = pcl_of_cycles(c)?.into_iter().collect();
    let mut picks: BTreeSet<u64> = BTreeSet::new();
    let mut sel = vec![0usize; gens.len()];
    loop {
        let mut l = 1u64;
        for (g, &i) in gens.iter().zip(&sel) {
            l = l.lcm(&g.primes()[i]);
        }
        picks.insert(l);
        let mut i = 0;
        loop {
            if i == sel.len() {
                let keep: Vec<u64> =
                    picks.iter().copied().filter(|&a| !picks.iter().any(|&b| b != a && a % b == 0)).collect();
                return CycleSet::new(keep);
            }
            sel[i] += 1;
            if sel[i] < gens[i].primes().len() {
                break;
            }
            sel[i] = 0;
            i += 1;
        }
    }
}

/// `[Σ_c] ∧ [Σ_d]`.
pub fn clc_meet(c: &CycleSet, d: &CycleSet) -> CycleSet {
    CycleSet::new(c.lengths().iter().chain(d.lengths()).copied()).unwrap()
}

/// `[Σ_c] ∨ [Σ_d]`.
pub fn clc_join(c: &CycleSet, d: &CycleSet) -> CycleSet {
    CycleSet::new(c.lengths().iter().flat_map(|&a| d.lengths().iter().map(move |&b| a * b))).unwrap()
}
