//! Exact nonnegative rationals in lowest terms.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio as BigRatio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A reduced fraction `num/den` with `den > 0`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ratio(BigRatio<u64>);

impl Ratio {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidParameter("ratio with zero denominator".into()));
        }
        Ok(Ratio(BigRatio::new(num, den)))
    }

    pub fn from_integer(v: u64) -> Self {
        Ratio(BigRatio::from_integer(v))
    }

    pub fn num(&self) -> u64 {
        *self.0.numer()
    }

    pub fn den(&self) -> u64 {
        *self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        self.num() as f64 / self.den() as f64
    }

    pub fn is_zero(&self) -> bool {
        self.num() == 0
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> Ordering {
        // cross-multiplication is exact in u128
        let lhs = self.num() as u128 * other.den() as u128;
        let rhs = other.num() as u128 * self.den() as u128;
        lhs.cmp(&rhs)
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num(), self.den())
    }
}

impl fmt::Debug for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ratio({self})")
    }
}

/// Accepts `p/q`, a plain integer, or a finite decimal such as `0.25`.
impl FromStr for Ratio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidParameter(format!("not a nonnegative rational: {s:?}"));
        if let Some((p, q)) = s.split_once('/') {
            let p = p.trim().parse::<u64>().map_err(|_| bad())?;
            let q = q.trim().parse::<u64>().map_err(|_| bad())?;
            return Ratio::new(p, q);
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.is_empty() || frac.len() > 18 || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let int = if int.is_empty() {
                0
            } else {
                int.parse::<u64>().map_err(|_| bad())?
            };
            let den = 10u64.pow(frac.len() as u32);
            let frac = frac.parse::<u64>().map_err(|_| bad())?;
            let num = int.checked_mul(den).and_then(|v| v.checked_add(frac)).ok_or_else(bad)?;
            return Ratio::new(num, den);
        }
        s.parse::<u64>().map(Ratio::from_integer).map_err(|_| bad())
    }
}

#[derive(Serialize, Deserialize)]
struct RatioDoc {
    num: u64,
    den: u64,
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        RatioDoc {
            num: self.num(),
            den: self.den(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = RatioDoc::deserialize(deserializer)?;
        Ratio::new(doc.num, doc.den).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduces_to_lowest_terms() {
        let r = Ratio::new(20, 18).unwrap();
        assert_eq!((r.num(), r.den()), (10, 9));
        assert_eq!(r.to_string(), "10/9");
        assert!(Ratio::new(1, 0).is_err());
    }

    #[test]
    fn ordering_is_exact() {
        let a = Ratio::new(17, 15).unwrap();
        let b = Ratio::new(7, 6).unwrap();
        assert!(a < b);
        assert!(Ratio::new(4, 3).unwrap() > Ratio::new(1333, 1000).unwrap());
        assert_eq!(Ratio::new(2, 4).unwrap(), Ratio::new(1, 2).unwrap());
    }

    #[test]
    fn parses_forms() {
        assert_eq!("3".parse::<Ratio>().unwrap(), Ratio::from_integer(3));
        assert_eq!("6/4".parse::<Ratio>().unwrap(), Ratio::new(3, 2).unwrap());
        assert_eq!("0.25".parse::<Ratio>().unwrap(), Ratio::new(1, 4).unwrap());
        assert_eq!(".5".parse::<Ratio>().unwrap(), Ratio::new(1, 2).unwrap());
        assert!("-1".parse::<Ratio>().is_err());
        assert!("1/0".parse::<Ratio>().is_err());
        assert!("x".parse::<Ratio>().is_err());
    }

    #[test]
    fn serde_shape() {
        let r = Ratio::new(10, 9).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, r#"{"num":10,"den":9}"#);
        assert_eq!(serde_json::from_str::<Ratio>(&s).unwrap(), r);
        assert!(serde_json::from_str::<Ratio>(r#"{"num":1,"den":0}"#).is_err());
    }
}
