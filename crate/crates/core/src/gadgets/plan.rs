//! Parameter planners and their independent verifiers.
//!
//! Every quantity is evaluated with arbitrary-precision integers; plan
//! fields are `u64` and serialise as decimal strings above 2^53.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::{Error, Result};

/// Upper end of the scan for the treewidth `n`.
pub const MAX_TW_N: u64 = 1 << 16;

const JSON_SAFE: u64 = 1 << 53;

pub(crate) fn ser_u64<S: Serializer>(v: &u64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if *v > JSON_SAFE {
        s.serialize_str(&v.to_string())
    } else {
        s.serialize_u64(*v)
    }
}

fn ser_opt_u64<S: Serializer>(v: &Option<u64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => ser_u64(v, s),
        None => s.serialize_none(),
    }
}

pub(crate) fn ser_big<S: Serializer>(v: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    match i64::try_from(v) {
        Ok(x) if x.unsigned_abs() <= JSON_SAFE => s.serialize_i64(x),
        _ => s.serialize_str(&v.to_string()),
    }
}

fn big(x: u64) -> BigInt {
    BigInt::from(x)
}

fn pow2(e: u64) -> BigInt {
    BigInt::one() << e as usize
}

fn to_u64(v: &BigInt, what: &str) -> Result<u64> {
    u64::try_from(v).map_err(|_| Error::Parameter(format!("{what} = {v} does not fit in 64 bits")))
}

/// Least positive integer `x` with `x * coef > rhs`, for `coef > 0`.
fn least_exceeding(coef: &BigInt, rhs: &BigInt) -> BigInt {
    if rhs.is_negative() {
        return BigInt::one();
    }
    (rhs / coef + 1u32).max(BigInt::one())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "=")]
    Eq,
}

/// One evaluated inequality with both sides.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    #[serde(serialize_with = "ser_big")]
    pub lhs: BigInt,
    pub relation: Relation,
    #[serde(serialize_with = "ser_big")]
    pub rhs: BigInt,
    pub holds: bool,
}

impl Check {
    fn new(name: &str, lhs: BigInt, relation: Relation, rhs: BigInt) -> Self {
        let holds = match relation {
            Relation::Gt => lhs > rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Lt => lhs < rhs,
            Relation::Eq => lhs == rhs,
        };
        Self { name: name.to_string(), lhs, relation, rhs, holds }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PlanReport {
    pub checks: Vec<Check>,
}

impl PlanReport {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn violations(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.holds).collect()
    }

    pub fn violates(&self, name: &str) -> bool {
        self.checks.iter().any(|c| c.name == name && !c.holds)
    }
}

/// Evaluated size and length expressions of the pathwidth argument.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Bounds {
    /// Upper bound on the part of a Bicolit a span-bounded decomposition can skip.
    #[serde(serialize_with = "ser_big")]
    pub skipped_bound: BigInt,
    /// Lower bound `m(2^{β+2}+2pn-3)` on the Bicolit size.
    #[serde(serialize_with = "ser_big")]
    pub bicolit_lower: BigInt,
    #[serde(serialize_with = "ser_big")]
    pub gadget_size: BigInt,
    /// Upper bound on what a decomposition of H without Supp can cover.
    #[serde(serialize_with = "ser_big")]
    pub cover_upper: BigInt,
    /// Lower bound on the size of H.
    #[serde(serialize_with = "ser_big")]
    pub h_lower: BigInt,
}

/// `(1)`..`(4)` and the gadget size at the given parameters.
pub fn bounds(k: u64, delta: u64, beta: u64, p: u64, n: u64, m: u64, l: u64) -> Bounds {
    let (k1, d, p, n, m, l) = (big(k + 1), big(delta), big(p), big(n), big(m), big(l));
    let g_minus_one = pow2(beta + 2) + 2 * &p * &n - 3;
    Bounds {
        skipped_bound: &k1 * (&d * (pow2(beta + 4) * &m + &p * &n) + 1),
        bicolit_lower: &m * &g_minus_one,
        gadget_size: &g_minus_one + 1,
        cover_upper: &k1 * (&n * &d * &m * (&p * &n + pow2(beta + 1)) + &l),
        h_lower: (&n + 1) * &m * &g_minus_one + &n * (&l - 1),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PwPlan {
    #[serde(serialize_with = "ser_u64")]
    pub k: u64,
    #[serde(serialize_with = "ser_u64")]
    pub delta: u64,
    #[serde(serialize_with = "ser_u64")]
    pub beta: u64,
    #[serde(serialize_with = "ser_u64")]
    pub n: u64,
    #[serde(serialize_with = "ser_u64")]
    pub p: u64,
    #[serde(serialize_with = "ser_u64")]
    pub m: u64,
    #[serde(serialize_with = "ser_u64")]
    pub l: u64,
    #[serde(serialize_with = "ser_u64")]
    pub alpha: u64,
}

fn check_inputs(k: u64, delta: u64, beta: u64) -> Result<()> {
    if k == 0 || delta == 0 {
        return Err(Error::Parameter("k and delta must be at least 1".into()));
    }
    if beta > 60 {
        return Err(Error::Parameter("beta above 60 is not supported".into()));
    }
    Ok(())
}

/// `2^{β+2} + 2pn - 3 - (k+1)δ2^{β+4}`, the per-gadget surplus.
fn surplus(k: u64, delta: u64, beta: u64, p: &BigInt, n: &BigInt) -> BigInt {
    pow2(beta + 2) + 2 * p * n - 3 - big(k + 1) * big(delta) * pow2(beta + 4)
}

pub fn plan_pw(k: u64, delta: u64, beta: u64) -> Result<PwPlan> {
    check_inputs(k, delta, beta)?;
    let n = if (k + 2) % 2 == 1 { k + 2 } else { k + 3 };
    let nb = big(n);
    // surplus > 0  <=>  2pn > (k+1)δ2^{β+4} - 2^{β+2} + 3
    let c = big(k + 1) * big(delta) * pow2(beta + 4) - pow2(beta + 2) + 3;
    let p = least_exceeding(&(2 * &nb), &c);
    let x = surplus(k, delta, beta, &p, &nb);
    let m = least_exceeding(&x, &(big(k + 1) * (big(delta) * &p * &nb + 1)));
    let rhs = big(k + 1) * &nb * big(delta) * &m * (&p * &nb + pow2(beta + 1))
        - (&nb + 1) * &m * (pow2(beta + 2) + 2 * &p * &nb - 3)
        + &nb;
    let l = least_exceeding(&big(n - k - 1), &rhs);
    Ok(PwPlan {
        k,
        delta,
        beta,
        n,
        p: to_u64(&p, "p")?,
        m: to_u64(&m, "m")?,
        l: to_u64(&l, "l")?,
        alpha: delta * (n + 1),
    })
}

pub fn verify_pw(plan: &PwPlan) -> PlanReport {
    let PwPlan { k, delta, beta, n, p, m, l, alpha } = *plan;
    let b = bounds(k, delta, beta, p, n, m, l);
    let zero = BigInt::zero();
    let checks = vec![
        Check::new("p >= 1", big(p), Relation::Ge, BigInt::one()),
        Check::new("gadget surplus > 0", surplus(k, delta, beta, &big(p), &big(n)), Relation::Gt, zero.clone()),
        Check::new("m >= 1", big(m), Relation::Ge, BigInt::one()),
        Check::new("(2) > (1)", b.bicolit_lower, Relation::Gt, b.skipped_bound),
        Check::new("l >= 1", big(l), Relation::Ge, BigInt::one()),
        Check::new("(4) > (3)", b.h_lower, Relation::Gt, b.cover_upper),
        Check::new("n odd", big(n % 2), Relation::Eq, BigInt::one()),
        Check::new("n >= k + 2", big(n), Relation::Ge, big(k + 2)),
        Check::new("alpha = delta(n + 1)", big(alpha), Relation::Eq, big(delta) * big(n + 1)),
    ];
    PlanReport { checks }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TwPlan {
    #[serde(serialize_with = "ser_u64")]
    pub k: u64,
    #[serde(serialize_with = "ser_u64")]
    pub delta: u64,
    #[serde(serialize_with = "ser_u64")]
    pub beta: u64,
    #[serde(serialize_with = "ser_u64")]
    pub p: u64,
    #[serde(serialize_with = "ser_u64")]
    pub l: u64,
    /// `2δ(p+2) + 2δ`; the tighter `2δ(p+2)` is in `d_tight`.
    #[serde(serialize_with = "ser_u64")]
    pub d: u64,
    #[serde(serialize_with = "ser_u64")]
    pub d_tight: u64,
    #[serde(serialize_with = "ser_u64")]
    pub n: u64,
    #[serde(serialize_with = "ser_u64")]
    pub h: u64,
    #[serde(rename = "N", serialize_with = "ser_u64")]
    pub big_n: u64,
    /// Free parameter; no closed form is fixed.
    #[serde(serialize_with = "ser_opt_u64")]
    pub alpha: Option<u64>,
}

/// `⌈log2(k+2)⌉`.
pub fn ceil_log2(x: u64) -> u64 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros() as u64
    }
}

/// Largest `h ≥ 0` with `(2k+3) 4^h ≤ 2^{n-1}`, if any.
pub fn tw_h(k: u64, n: u64) -> Option<u64> {
    if n == 0 {
        return None;
    }
    let cap = pow2(n - 1);
    let base = big(2 * k + 3);
    if base > cap {
        return None;
    }
    let mut h = 0;
    while &base * pow2(2 * (h + 1)) <= cap {
        h += 1;
    }
    Some(h)
}

/// `(2^h - 1) + (4k+4)(2^{n-h+1} - 1) + 1`.
pub fn tw_big_n(k: u64, n: u64, h: u64) -> BigInt {
    (pow2(h) - 1) + big(4 * k + 4) * (pow2(n + 1 - h) - 1) + 1
}

fn tw_constraints(k: u64, n: u64, h: u64, big_n: &BigInt) -> Vec<Check> {
    let sources: BigInt = pow2(n + 1) - 1;
    let kk = big(2 * k + 3);
    let c1_lhs = if n > h { pow2(n - h - 1) } else { BigInt::zero() };
    vec![
        Check::new("leaves per h-tree", c1_lhs, Relation::Ge, &kk * (pow2(h) - 1)),
        Check::new("bridges fit", &kk * (big_n - 1) + big(k + 1), Relation::Lt, sources.clone()),
        Check::new(
            "large component is a majority",
            (&sources - big(k + 1) - big_n) * 2,
            Relation::Gt,
            sources,
        ),
    ]
}

impl TwPlan {
    /// Plan with an explicit `n`; `h` and `N` follow from their formulas.
    pub fn at_n(k: u64, delta: u64, beta: u64, n: u64) -> Result<Self> {
        check_inputs(k, delta, beta)?;
        let h = tw_h(k, n).ok_or_else(|| Error::Parameter(format!("no h >= 0 for n = {n}")))?;
        let big_n = to_u64(&tw_big_n(k, n, h), "N")?;
        let p = ceil_log2(k + 2);
        Ok(Self {
            k,
            delta,
            beta,
            p,
            l: 1 << beta,
            d: 2 * delta * (p + 2) + 2 * delta,
            d_tight: 2 * delta * (p + 2),
            n,
            h,
            big_n,
            alpha: None,
        })
    }

    pub fn with_alpha(mut self, alpha: u64) -> Self {
        self.alpha = Some(alpha);
        self
    }
}

pub fn plan_tw(k: u64, delta: u64, beta: u64) -> Result<TwPlan> {
    check_inputs(k, delta, beta)?;
    for n in 1..=MAX_TW_N {
        let Some(h) = tw_h(k, n) else { continue };
        let big_n = tw_big_n(k, n, h);
        if tw_constraints(k, n, h, &big_n).iter().all(|c| c.holds) {
            return TwPlan::at_n(k, delta, beta, n);
        }
    }
    Err(Error::SearchBound(format!("no n <= {MAX_TW_N} satisfies the constraints for k = {k}")))
}

pub fn verify_tw(plan: &TwPlan) -> PlanReport {
    let TwPlan { k, delta, beta, p, l, d, d_tight, n, h, big_n, .. } = *plan;
    let mut checks = vec![
        Check::new("p = ceil(log2(k + 2))", big(p), Relation::Eq, big(ceil_log2(k + 2))),
        Check::new("l = 2^beta", big(l), Relation::Eq, pow2(beta)),
        Check::new("d = 2delta(p + 2) + 2delta", big(d), Relation::Eq, big(2 * delta * (p + 3))),
        Check::new("d_tight = 2delta(p + 2)", big(d_tight), Relation::Eq, big(2 * delta * (p + 2))),
        Check::new("h >= 0 exists", pow2(n.saturating_sub(1)) * u32::from(n > 0), Relation::Ge, big(2 * k + 3)),
    ];
    // h maximal: (2k+3)4^h <= 2^{n-1} < (2k+3)4^{h+1}.
    let cap = if n > 0 { pow2(n - 1) } else { BigInt::zero() };
    checks.push(Check::new("h fits", big(2 * k + 3) * pow2(2 * h), Relation::Lt, &cap + 1));
    checks.push(Check::new("h maximal", big(2 * k + 3) * pow2(2 * h + 2), Relation::Gt, cap));
    checks.push(Check::new("N formula", big(big_n), Relation::Eq, tw_big_n(k, n, h)));
    checks.extend(tw_constraints(k, n, h, &big(big_n)));
    PlanReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct scan for the least positive integer satisfying `pred`.
    fn scan(pred: impl Fn(u64) -> bool) -> u64 {
        (1..).find(|&x| pred(x)).unwrap()
    }

    #[test]
    fn pw_small_plan_matches_scans() {
        let plan = plan_pw(1, 1, 1).unwrap();
        assert_eq!((plan.n, plan.alpha), (3, 4));
        let (k, d, b, n) = (1i128, 1i128, 1u32, 3i128);
        let p = scan(|p| 2i128.pow(b + 2) + 2 * p as i128 * n - 3 - (k + 1) * d * 2i128.pow(b + 4) > 0);
        assert_eq!(plan.p, p);
        let x = 2i128.pow(b + 2) + 2 * p as i128 * n - 3;
        let m = scan(|m| m as i128 * x > (k + 1) * (d * (2i128.pow(b + 4) * m as i128 + p as i128 * n) + 1));
        assert_eq!(plan.m, m);
        let l = scan(|l| {
            let l = l as i128;
            let four = (n + 1) * m as i128 * x + n * (l - 1);
            let three = (k + 1) * (n * d * m as i128 * (p as i128 * n + 2i128.pow(b + 1)) + l);
            four > three
        });
        assert_eq!(plan.l, l);
        assert!(verify_pw(&plan).ok());
    }

    #[test]
    fn bounds_examples() {
        let b = bounds(1, 1, 1, 1, 1, 2, 1);
        assert_eq!(b.bicolit_lower, big(14));
        assert_eq!(b.gadget_size, big(8));
        assert!(b.skipped_bound >= big(2));
    }

    #[test]
    fn pw_even_k_bumps_n() {
        let plan = plan_pw(2, 1, 0).unwrap();
        assert_eq!(plan.n, 5);
        assert!(verify_pw(&plan).ok());
    }

    #[test]
    fn pw_zero_l_is_rejected() {
        let mut plan = plan_pw(1, 1, 1).unwrap();
        plan.l = 0;
        assert!(verify_pw(&plan).violates("l >= 1"));
    }

    #[test]
    fn tw_small_plan() {
        let plan = plan_tw(1, 1, 1).unwrap();
        assert_eq!((plan.p, plan.l, plan.d, plan.d_tight), (2, 2, 10, 8));
        assert!(verify_tw(&plan).ok());
        // Independent scan with exact integers.
        let least = (1u32..200)
            .find(|&n| {
                let two = |e: u32| BigInt::one() << e as usize;
                let Some(h) = (0..n).filter(|&h| big(5) * two(2 * h) <= two(n - 1)).max() else {
                    return false;
                };
                let nn = (two(h) - 1) + big(8) * (two(n + 1 - h) - 1) + 1;
                let s = two(n + 1) - 1;
                two(n - h - 1) >= big(5) * (two(h) - 1)
                    && big(5) * (&nn - 1) + 2 < s
                    && 2 * (&s - 2 - &nn) > s
            })
            .unwrap();
        assert_eq!(plan.n, least as u64);
    }

    #[test]
    fn tw_micro_override_is_nonconforming() {
        let micro = TwPlan::at_n(1, 1, 1, 4).unwrap();
        assert_eq!(micro.h, 0);
        assert!(!verify_tw(&micro).ok());
        assert!(TwPlan::at_n(1, 1, 1, 2).is_err());
    }

    #[test]
    fn serialisation_keeps_large_values_exact() {
        let c = Check::new("x", pow2(80), Relation::Gt, big(3));
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["lhs"], serde_json::json!(pow2(80).to_string()));
        assert_eq!(v["rhs"], serde_json::json!(3));
    }
}
