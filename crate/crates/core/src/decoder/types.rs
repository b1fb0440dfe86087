use std::fmt;

use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Exact rational used for pseudo-codeword coordinates, costs and weights.
pub type Rational = Ratio<i64>;

/// Set of flipped positions of a BSC noise realization on the all-zero
/// codeword. Positions are 0-based and kept sorted and duplicate-free; the
/// serialized form lists them 1-based.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "SerializedFlips", try_from = "SerializedFlips")]
pub struct FlipSupport {
    n: usize,
    support: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct SerializedFlips {
    n: usize,
    positions: Vec<usize>,
}

impl From<FlipSupport> for SerializedFlips {
    fn from(f: FlipSupport) -> Self {
        SerializedFlips {
            positions: f.one_based(),
            n: f.n,
        }
    }
}

impl TryFrom<SerializedFlips> for FlipSupport {
    type Error = FlipError;

    fn try_from(s: SerializedFlips) -> Result<Self, FlipError> {
        FlipSupport::from_one_based(s.n, s.positions)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FlipError {
    #[error("position {pos} is out of range 1..={n}")]
    OutOfRange { pos: usize, n: usize },
    #[error("position {0} listed more than once")]
    Duplicate(usize),
    #[error("cannot parse flip list: {0:?}")]
    Parse(String),
}

impl FlipSupport {
    /// From 0-based positions; sorts, rejects duplicates and out-of-range entries.
    pub fn new(n: usize, positions: impl IntoIterator<Item = usize>) -> Result<Self, FlipError> {
        let mut support: Vec<usize> = positions.into_iter().collect();
        support.sort_unstable();
        if let Some(&p) = support.iter().find(|&&p| p >= n) {
            return Err(FlipError::OutOfRange { pos: p + 1, n });
        }
        if let Some(w) = support.windows(2).find(|w| w[0] == w[1]) {
            return Err(FlipError::Duplicate(w[0] + 1));
        }
        Ok(FlipSupport { n, support })
    }

    /// From 1-based positions as used in files and on the command line.
    pub fn from_one_based(n: usize, positions: impl IntoIterator<Item = usize>) -> Result<Self, FlipError> {
        let zero_based = positions
            .into_iter()
            .map(|p| p.checked_sub(1).ok_or(FlipError::OutOfRange { pos: 0, n }))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(n, zero_based)
    }

    /// Parses a comma separated 1-based list such as `"3,17,40"`; empty means no flips.
    pub fn parse_one_based(n: usize, text: &str) -> Result<Self, FlipError> {
        let positions = text
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<usize>().map_err(|_| FlipError::Parse(t.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_one_based(n, positions)
    }

    pub fn empty(n: usize) -> Self {
        FlipSupport { n, support: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Sorted 0-based positions.
    pub fn positions(&self) -> &[usize] {
        &self.support
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.support.iter().map(|p| p + 1).collect()
    }

    pub fn contains(&self, pos: usize) -> bool {
        self.support.binary_search(&pos).is_ok()
    }

    /// The support with `pos` removed.
    pub fn without(&self, pos: usize) -> FlipSupport {
        FlipSupport {
            n: self.n,
            support: self.support.iter().copied().filter(|&p| p != pos).collect(),
        }
    }

    pub fn is_subset_of(&self, other: &FlipSupport) -> bool {
        self.support.iter().all(|&p| other.contains(p))
    }
}

impl fmt::Display for FlipSupport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.one_based().iter().map(|p| p.to_string()).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

impl fmt::Debug for FlipSupport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FlipSupport(n={}, {})", self.n, self)
    }
}

/// Scaled BSC log-likelihood ratios: +1 where the received bit is 0, -1 where
/// it was flipped to 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LlrVector {
    pub gamma: Vec<i8>,
}

impl LlrVector {
    pub fn as_f64(&self) -> Vec<f64> {
        self.gamma.iter().map(|&g| g as f64).collect()
    }
}

pub fn llr_from_flips(flips: &FlipSupport) -> LlrVector {
    let mut gamma = vec![1i8; flips.n()];
    for &p in flips.positions() {
        gamma[p] = -1;
    }
    LlrVector { gamma }
}

/// The f-part of an LCLP vertex, coordinates exactly in [0, 1].
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PseudoCodeword {
    f: Vec<Rational>,
}

impl PseudoCodeword {
    pub fn new(f: Vec<Rational>) -> Self {
        debug_assert!(f.iter().all(|v| *v >= Rational::zero() && *v <= Rational::one()));
        PseudoCodeword { f }
    }

    pub fn zero(n: usize) -> Self {
        PseudoCodeword { f: vec![Rational::zero(); n] }
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    pub fn coords(&self) -> &[Rational] {
        &self.f
    }

    pub fn is_zero(&self) -> bool {
        self.f.iter().all(Zero::is_zero)
    }

    pub fn is_integral(&self) -> bool {
        self.f.iter().all(|v| v.is_integer())
    }

    /// Positions with nonzero value, 0-based.
    pub fn support(&self) -> Vec<usize> {
        (0..self.f.len()).filter(|&i| !self.f[i].is_zero()).collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.f.iter().map(|v| *v.numer() as f64 / *v.denom() as f64).collect()
    }
}

impl fmt::Debug for PseudoCodeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let nz: Vec<String> = self
            .support()
            .into_iter()
            .map(|i| format!("{}:{}", i + 1, self.f[i]))
            .collect();
        write!(f, "PseudoCodeword(n={}, [{}])", self.f.len(), nz.join(" "))
    }
}

impl Serialize for PseudoCodeword {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<String> = self.f.iter().map(ToString::to_string).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PseudoCodeword {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        let f = v
            .iter()
            .map(|s| s.parse::<Rational>().map_err(serde::de::Error::custom))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PseudoCodeword { f })
    }
}

/// Serde helper for a single `Rational` written as `"p/q"`.
pub mod rational_str {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutcomeKind {
    AllZero,
    NonzeroCodeword,
    FractionalPcw,
    ZeroCostTie,
}

/// Classified result of one LP decode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeOutcome {
    pub kind: OutcomeKind,
    pub pcw: Option<PseudoCodeword>,
    #[serde(with = "rational_str")]
    pub cost: Rational,
}

impl DecodeOutcome {
    /// Anything other than decoding to the all-zero codeword.
    pub fn is_failure(&self) -> bool {
        self.kind != OutcomeKind::AllZero
    }
}

/// C(r, p) = Σ_{i∉supp r} p_i − Σ_{i∈supp r} p_i.
pub fn cost(flips: &FlipSupport, pcw: &PseudoCodeword) -> Rational {
    assert_eq!(flips.n(), pcw.len(), "flip support and pseudo-codeword lengths differ");
    let total: Rational = pcw.f.iter().sum();
    let flipped: Rational = flips.positions().iter().map(|&i| pcw.f[i]).sum();
    total - flipped * 2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn llr_examples() {
        let g = |s: &[usize]| llr_from_flips(&FlipSupport::from_one_based(4, s.iter().copied()).unwrap()).gamma;
        assert_eq!(g(&[]), vec![1, 1, 1, 1]);
        assert_eq!(g(&[2]), vec![1, -1, 1, 1]);
        assert_eq!(g(&[1, 2, 3, 4]), vec![-1, -1, -1, -1]);
    }

    #[test]
    fn cost_formula() {
        let mut f = vec![r(0, 1); 6];
        f[0] = r(1, 1);
        f[1] = r(1, 1);
        f[2] = r(1, 2);
        let p = PseudoCodeword::new(f);
        let s = FlipSupport::from_one_based(6, [1, 2]).unwrap();
        assert_eq!(cost(&s, &p), r(-3, 2));
        assert_eq!(cost(&s, &PseudoCodeword::zero(6)), r(0, 1));
    }

    #[test]
    fn flip_parsing() {
        let s = FlipSupport::parse_one_based(10, "3, 1,7").unwrap();
        assert_eq!(s.positions(), &[0, 2, 6]);
        assert_eq!(s.to_string(), "{1,3,7}");
        assert!(FlipSupport::parse_one_based(10, "").unwrap().is_empty());
        assert_eq!(FlipSupport::parse_one_based(10, "11"), Err(FlipError::OutOfRange { pos: 11, n: 10 }));
        assert_eq!(FlipSupport::parse_one_based(10, "0"), Err(FlipError::OutOfRange { pos: 0, n: 10 }));
        assert_eq!(FlipSupport::parse_one_based(10, "2,2"), Err(FlipError::Duplicate(2)));
        assert!(matches!(FlipSupport::parse_one_based(10, "a"), Err(FlipError::Parse(_))));
    }

    #[test]
    fn pcw_serde_roundtrip() {
        let p = PseudoCodeword::new(vec![r(1, 3), r(0, 1), r(1, 1)]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"["1/3","0","1"]"#);
        let back: PseudoCodeword = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
