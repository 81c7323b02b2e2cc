//! Two-level fractional factorials `2^(k-p)` built from generator
//! equations such as `D=ABC`, together with their defining relation and
//! alias structure.
//!
//! Effect words are bitmasks over factor positions; multiplying two words is
//! XOR, since every letter squares to the identity.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

use super::letter_names;
use super::matrix::{DesignClass, DesignMatrix};

/// Letters available for factor names, `I` excluded.
pub const FACTOR_LETTERS: &str = "ABCDEFGHJKLMNOPQRSTUVWXYZ";

/// Alias groups are listed in full, so the total number of factors is
/// bounded.
const MAX_ALIAS_FACTORS: usize = 20;

/// Product of factor letters, as a bitmask over factor positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Word(pub u32);

impl Word {
    pub const IDENTITY: Word = Word(0);

    pub fn letter(i: usize) -> Word {
        Word(1 << i)
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_identity(self) -> bool {
        self.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.is_identity()
    }

    pub fn times(self, other: Word) -> Word {
        Word(self.0 ^ other.0)
    }

    pub fn positions(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |i| self.0 & (1 << i) != 0)
    }

    /// Renders the word with the given factor names; `I` for the identity.
    pub fn render(self, names: &[String]) -> String {
        if self.is_identity() {
            return "I".to_string();
        }
        let single = names.iter().all(|n| n.chars().count() == 1);
        let parts: Vec<&str> = self.positions().map(|i| names[i].as_str()).collect();
        if single {
            parts.concat()
        } else {
            parts.join("*")
        }
    }

    /// Shorter words first, then lexicographic in factor order.
    pub fn canonical_cmp(self, other: Word) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| {
            let a: Vec<usize> = self.positions().collect();
            let b: Vec<usize> = other.positions().collect();
            a.cmp(&b)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Resolution {
    Finite(u32),
    /// Unfractionated design: no defining words.
    Unbounded,
}

impl Resolution {
    pub fn at_least(self, r: u32) -> bool {
        self >= Resolution::Finite(r)
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const ROMAN: [&str; 11] = ["0", "I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX", "X"];
        match *self {
            Resolution::Finite(r) if (r as usize) < ROMAN.len() => f.write_str(ROMAN[r as usize]),
            Resolution::Finite(r) => write!(f, "{r}"),
            Resolution::Unbounded => f.write_str("∞"),
        }
    }
}

impl Serialize for Resolution {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Resolution::Finite(r) => s.serialize_u32(r),
            Resolution::Unbounded => s.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AliasStructure {
    pub factor_names: Vec<String>,
    /// Defining-relation subgroup, identity first.
    pub defining_relation: Vec<Word>,
    /// Cosets of the defining relation other than the subgroup itself; each
    /// group and the list of groups are in canonical word order.
    pub alias_groups: Vec<Vec<Word>>,
    pub resolution: Resolution,
}

impl AliasStructure {
    /// Builds the structure from independent generator words (each the full
    /// word `I = word`) over `factor_names`.
    pub fn from_generators(factor_names: Vec<String>, generator_words: &[Word]) -> Result<Self> {
        let n = factor_names.len();
        if n > MAX_ALIAS_FACTORS {
            return Err(Error::Capacity {
                what: "alias structure",
                requested: 1u128 << n,
                cap: 1u128 << MAX_ALIAS_FACTORS,
            });
        }
        let g = generator_words.len();
        let mut defining: Vec<Word> = (0..1u32 << g)
            .map(|subset| {
                generator_words
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| subset & (1 << i) != 0)
                    .fold(Word::IDENTITY, |acc, (_, &w)| acc.times(w))
            })
            .collect();
        defining.sort_by(|a, b| a.canonical_cmp(*b));
        defining.dedup();
        if defining.len() != 1 << g {
            return Err(Error::Generator {
                word: generator_words
                    .iter()
                    .map(|w| w.render(&factor_names))
                    .collect::<Vec<_>>()
                    .join(", "),
                reason: "generators are not independent".into(),
            });
        }

        let resolution = defining
            .iter()
            .filter(|w| !w.is_identity())
            .map(|w| w.len())
            .min()
            .map_or(Resolution::Unbounded, Resolution::Finite);

        // Every coset of the defining subgroup has a unique smallest word;
        // group all words by that representative.
        let mut cosets: BTreeMap<u32, Vec<Word>> = BTreeMap::new();
        for raw in 1u32..(1u32 << n) {
            let w = Word(raw);
            let rep = defining
                .iter()
                .map(|d| w.times(*d))
                .min_by(|a, b| a.canonical_cmp(*b))
                .expect("identity is always present");
            if rep.is_identity() {
                continue;
            }
            cosets.entry(rep.0).or_default().push(w);
        }
        let mut alias_groups: Vec<Vec<Word>> = cosets
            .into_values()
            .map(|mut grp| {
                grp.sort_by(|a, b| a.canonical_cmp(*b));
                grp
            })
            .collect();
        alias_groups.sort_by(|a, b| a[0].canonical_cmp(b[0]));

        Ok(AliasStructure {
            factor_names,
            defining_relation: defining,
            alias_groups,
            resolution,
        })
    }

    pub fn group_of(&self, word: Word) -> Option<&[Word]> {
        self.alias_groups
            .iter()
            .find(|g| g.contains(&word))
            .map(|g| g.as_slice())
    }

    pub fn are_aliased(&self, a: Word, b: Word) -> bool {
        a != b && self.defining_relation.contains(&a.times(b))
    }

    /// Defining relation rendered as `I = ABC = ...`.
    pub fn defining_relation_strings(&self) -> Vec<String> {
        self.defining_relation
            .iter()
            .map(|w| w.render(&self.factor_names))
            .collect()
    }

    /// Alias groups rendered as `A = BC`.
    pub fn alias_group_strings(&self) -> Vec<String> {
        self.alias_groups
            .iter()
            .map(|g| {
                g.iter()
                    .map(|w| w.render(&self.factor_names))
                    .collect::<Vec<_>>()
                    .join(" = ")
            })
            .collect()
    }
}

impl Serialize for AliasStructure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("AliasStructure", 3)?;
        st.serialize_field("defining_relation", &self.defining_relation_strings())?;
        st.serialize_field("alias_groups", &self.alias_group_strings())?;
        st.serialize_field("resolution", &self.resolution)?;
        st.end()
    }
}

struct Generator {
    new_factor: usize,
    rhs: Word,
}

fn parse_generator(text: &str, letters: &mut Vec<String>, base: usize) -> Result<Generator> {
    let err = |reason: &str| Error::Generator {
        word: text.to_string(),
        reason: reason.to_string(),
    };
    let (lhs, rhs) = text.split_once('=').ok_or_else(|| err("expected `X=WORD`"))?;
    let (lhs, rhs) = (lhs.trim(), rhs.trim());
    let mut lhs_chars = lhs.chars();
    let new_letter = match (lhs_chars.next(), lhs_chars.next()) {
        (Some(c), None) if FACTOR_LETTERS.contains(c) => c.to_string(),
        _ => return Err(err("left-hand side must be one factor letter other than I")),
    };
    if letters.contains(&new_letter) {
        return Err(err("left-hand letter is already a factor"));
    }
    let mut mask = 0u32;
    for c in rhs.chars() {
        let pos = letters
            .iter()
            .take(base)
            .position(|l| l.starts_with(c))
            .ok_or_else(|| err("right-hand side may only use base factor letters"))?;
        if mask & (1 << pos) != 0 {
            return Err(err("repeated letter in right-hand side"));
        }
        mask |= 1 << pos;
    }
    if mask.count_ones() < 2 {
        return Err(err("right-hand side needs at least two base letters"));
    }
    letters.push(new_letter);
    Ok(Generator {
        new_factor: letters.len() - 1,
        rhs: Word(mask),
    })
}

/// `2^k` runs over `k` base factors plus one generated factor per
/// generator equation. Base columns form a full factorial (first factor
/// slowest); each generated column is the element-wise product of the base
/// columns named on its right-hand side.
pub fn fractional_factorial(
    base: usize,
    generators: &[&str],
) -> Result<(DesignMatrix, AliasStructure)> {
    if base == 0 || base > 24 {
        return Err(Error::InvalidArgument(format!(
            "base factor count {base} must be in 1..=24"
        )));
    }
    if base + generators.len() > FACTOR_LETTERS.len() {
        return Err(Error::InvalidArgument(format!(
            "at most {} factors are supported",
            FACTOR_LETTERS.len()
        )));
    }
    let mut letters = letter_names(base);
    let mut parsed = Vec::with_capacity(generators.len());
    for g in generators {
        let gen = parse_generator(g, &mut letters, base)?;
        if parsed.iter().any(|p: &Generator| p.rhs == gen.rhs) {
            return Err(Error::Generator {
                word: g.to_string(),
                reason: "duplicates the column of an earlier generator".into(),
            });
        }
        parsed.push(gen);
    }

    let runs = 1usize << base;
    let n = letters.len();
    let mut rows = Vec::with_capacity(runs);
    for r in 0..runs {
        let mut row = vec![0.0; n];
        for (j, cell) in row.iter_mut().enumerate().take(base) {
            *cell = if (r >> (base - 1 - j)) & 1 == 1 { 1.0 } else { -1.0 };
        }
        for gen in &parsed {
            row[gen.new_factor] = gen.rhs.positions().map(|p| row[p]).product();
        }
        rows.push(row);
    }

    let words: Vec<Word> = parsed
        .iter()
        .map(|g| g.rhs.times(Word::letter(g.new_factor)))
        .collect();
    let alias = AliasStructure::from_generators(letters.clone(), &words)?;

    let mut design = DesignMatrix::new(
        letters,
        rows,
        if parsed.is_empty() {
            DesignClass::FullFactorial
        } else {
            DesignClass::FractionalFactorial
        },
    );
    design.generator_words = Some(generators.iter().map(|g| g.replace(' ', "")).collect());
    Ok((design, alias))
}

/// Node budget per target resolution in [`auto_generators`].
const GENERATOR_SEARCH_BUDGET: usize = 200_000;

/// Generator equations for a `2^(n_factors - base)` fraction with the
/// highest resolution found by depth-first search over right-hand sides,
/// higher-order interactions first.
pub fn auto_generators(n_factors: usize, base: usize) -> Result<(Vec<String>, Resolution)> {
    if base == 0 || base > n_factors || n_factors > FACTOR_LETTERS.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot build a fraction of {n_factors} factors on {base} base factors"
        )));
    }
    let g = n_factors - base;
    if g == 0 {
        return Ok((Vec::new(), Resolution::Unbounded));
    }
    let mut candidates: Vec<u32> = (1u32..1 << base).filter(|m| m.count_ones() >= 2).collect();
    if candidates.len() < g {
        return Err(Error::InvalidArgument(format!(
            "{n_factors} two-level factors need more than {} runs",
            1usize << base
        )));
    }
    candidates.sort_by_key(|&m| (std::cmp::Reverse(m.count_ones()), m));

    struct Search<'a> {
        candidates: &'a [u32],
        base: usize,
        g: usize,
        target: u32,
        nodes: usize,
    }
    impl Search<'_> {
        fn run(&mut self, start: usize, chosen: &mut Vec<u32>, span: &mut Vec<u32>) -> bool {
            if chosen.len() == self.g {
                return true;
            }
            for i in start..self.candidates.len() {
                if self.nodes >= GENERATOR_SEARCH_BUDGET
                    || self.candidates.len() - i < self.g - chosen.len()
                {
                    return false;
                }
                self.nodes += 1;
                let full = self.candidates[i] | 1 << (self.base + chosen.len());
                let added: Vec<u32> = span.iter().map(|x| x ^ full).collect();
                if added.iter().any(|w| w.count_ones() < self.target) {
                    continue;
                }
                let len = span.len();
                span.extend(added);
                chosen.push(self.candidates[i]);
                if self.run(i + 1, chosen, span) {
                    return true;
                }
                chosen.pop();
                span.truncate(len);
            }
            false
        }
    }

    let letters: Vec<char> = FACTOR_LETTERS.chars().collect();
    for target in (3..=base as u32 + 1).rev() {
        let mut search = Search {
            candidates: &candidates,
            base,
            g,
            target,
            nodes: 0,
        };
        let mut chosen = Vec::with_capacity(g);
        if search.run(0, &mut chosen, &mut vec![0]) {
            let gens = chosen
                .iter()
                .enumerate()
                .map(|(i, &rhs)| {
                    let word: String = (0..base)
                        .filter(|j| rhs >> j & 1 == 1)
                        .map(|j| letters[j])
                        .collect();
                    format!("{}={word}", letters[base + i])
                })
                .collect();
            return Ok((gens, Resolution::Finite(target)));
        }
    }
    unreachable!("distinct right-hand sides of two or more letters give resolution III")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(a: &AliasStructure) -> Vec<String> {
        a.alias_group_strings()
    }

    #[test]
    fn half_fraction_of_three() {
        let (d, a) = fractional_factorial(2, &["C=AB"]).unwrap();
        assert_eq!(d.n_runs(), 4);
        assert_eq!(d.factor_names, vec!["A", "B", "C"]);
        assert_eq!(a.defining_relation_strings(), vec!["I", "ABC"]);
        assert_eq!(names(&a), vec!["A = BC", "B = AC", "C = AB"]);
        assert_eq!(a.resolution, Resolution::Finite(3));
        for row in &d.rows {
            assert_eq!(row[2], row[0] * row[1]);
        }
    }

    #[test]
    fn resolution_four() {
        let (d, a) = fractional_factorial(3, &["D=ABC"]).unwrap();
        assert_eq!(d.n_runs(), 8);
        assert_eq!(a.resolution, Resolution::Finite(4));
        assert_eq!(a.resolution.to_string(), "IV");
        assert!(a.are_aliased(Word(0b0011), Word(0b1100))); // AB = CD
    }

    #[test]
    fn no_generators_is_full_factorial() {
        let (d, a) = fractional_factorial(3, &[]).unwrap();
        assert_eq!(d.n_runs(), 8);
        assert_eq!(d.design_class, DesignClass::FullFactorial);
        assert_eq!(a.resolution, Resolution::Unbounded);
        assert_eq!(a.resolution.to_string(), "∞");
        assert_eq!(a.alias_groups.len(), 7);
        assert!(a.alias_groups.iter().all(|g| g.len() == 1));
    }

    #[test]
    fn quarter_fraction() {
        let (d, a) = fractional_factorial(3, &["D=AB", "E=AC"]).unwrap();
        assert_eq!(d.n_runs(), 8);
        assert_eq!(d.n_factors(), 5);
        assert_eq!(
            a.defining_relation_strings(),
            vec!["I", "ABD", "ACE", "BCDE"]
        );
        assert_eq!(a.resolution, Resolution::Finite(3));
        assert_eq!(a.alias_groups.len(), 7);
        assert!(a.alias_groups.iter().all(|g| g.len() == 4));
    }

    #[test]
    fn malformed_generators() {
        let bad = |gens: &[&str], needle: &str| {
            let err = fractional_factorial(3, gens).unwrap_err();
            assert!(err.to_string().contains(needle), "{err}");
        };
        bad(&["DABC"], "DABC");
        bad(&["D=A"], "D=A");
        bad(&["C=AB"], "C=AB");
        bad(&["I=ABC"], "I=ABC");
        bad(&["D=ABX"], "D=ABX");
        bad(&["D=AAB"], "D=AAB");
        bad(&["D=ABC", "E=ABC"], "E=ABC");
        bad(&["D=AB", "D=BC"], "D=BC");
        assert!(fractional_factorial(0, &[]).is_err());
    }

    #[test]
    fn auto_generators_reach_known_resolutions() {
        for (k, base, res) in [(5, 4, 5), (6, 5, 6), (6, 4, 4), (7, 4, 4), (8, 4, 4), (7, 3, 3), (9, 5, 4)] {
            let (gens, r) = auto_generators(k, base).unwrap();
            assert_eq!(gens.len(), k - base);
            assert_eq!(r, Resolution::Finite(res), "{k} factors on {base}");
            let refs: Vec<&str> = gens.iter().map(String::as_str).collect();
            let (_, a) = fractional_factorial(base, &refs).unwrap();
            assert_eq!(a.resolution, r);
        }
        assert_eq!(auto_generators(5, 4).unwrap().0, vec!["E=ABCD"]);
        assert_eq!(auto_generators(3, 3).unwrap(), (vec![], Resolution::Unbounded));
        assert!(auto_generators(8, 2).is_err());
    }

    #[test]
    fn saturated_eight_run_design() {
        let (d, a) = fractional_factorial(3, &["D=AB", "E=AC", "F=BC", "G=ABC"]).unwrap();
        assert_eq!(d.n_runs(), 8);
        assert_eq!(d.n_factors(), 7);
        assert_eq!(a.resolution, Resolution::Finite(3));
        assert_eq!(a.defining_relation.len(), 16);
    }

    #[test]
    fn resolution_five() {
        let (_, a) = fractional_factorial(4, &["E=ABCD"]).unwrap();
        assert_eq!(a.resolution, Resolution::Finite(5));
        let (_, a) = fractional_factorial(6, &["G=ABCD", "H=ABEF"]).unwrap();
        assert_eq!(a.resolution, Resolution::Finite(5));
    }
}
