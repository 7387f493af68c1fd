//! The shipped LS_2[3](2,4,8): two generator matrices and three tables of
//! orbit representatives, each row packed into a byte.

use std::collections::HashMap;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::design::{Design, LargeSet};
use crate::error::{Error, Result};
use crate::gf2::BitMatrix;
use crate::grassmann::Subspace;
use crate::group::{parse_generators, Group};

pub const TABLE1: &str = include_str!("../data/table1.txt");
pub const TABLE2: &str = include_str!("../data/table2.txt");
pub const TABLE3: &str = include_str!("../data/table3.txt");
pub const GENERATORS: &str = include_str!("../data/generators.txt");
pub const CHECKSUMS: &str = include_str!("../data/SHA256SUMS");

/// Parameters of the shipped large set.
pub const V: usize = 8;
pub const K: usize = 4;
pub const T: usize = 2;
pub const N: usize = 3;
pub const LAMBDA: u64 = 217;

/// Four rows of a 4 x 8 matrix, row `j` holding `sum c_i 2^i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QuadrupleRecord {
    pub w: u8,
    pub x: u8,
    pub y: u8,
    pub z: u8,
}

impl QuadrupleRecord {
    pub fn new(values: [u64; 4]) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|&&n| n == 0 || n > 255) {
            return Err(Error::invalid(format!(
                "record entry {bad} is outside 1..=255"
            )));
        }
        Ok(QuadrupleRecord {
            w: values[0] as u8,
            x: values[1] as u8,
            y: values[2] as u8,
            z: values[3] as u8,
        })
    }

    pub fn values(&self) -> [u64; 4] {
        [self.w, self.x, self.y, self.z].map(u64::from)
    }

    pub fn decode(&self) -> BitMatrix {
        BitMatrix::from_u64_rows(V, &self.values()).expect("bytes fit in 8 columns")
    }

    /// Inverse of [`QuadrupleRecord::decode`].
    pub fn encode(m: &BitMatrix) -> Result<Self> {
        if m.n_rows() != 4 || m.n_cols() != V {
            return Err(Error::invalid(format!(
                "expected a 4x8 matrix, got {}x{}",
                m.n_rows(),
                m.n_cols()
            )));
        }
        let rows = m.u64_rows().expect("8 columns");
        QuadrupleRecord::new([rows[0], rows[1], rows[2], rows[3]])
    }

    /// The spanned 4-subspace; `index` only labels errors.
    pub fn subspace(&self, index: usize) -> Result<Subspace> {
        let s = Subspace::span(V, self.values())?;
        if s.dim() != K {
            return Err(Error::RankDeficient {
                index,
                record: self.to_string(),
                rank: s.dim(),
                expected: K,
            });
        }
        Ok(s)
    }
}

impl std::fmt::Display for QuadrupleRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{},{},{},{}]", self.w, self.x, self.y, self.z)
    }
}

/// Parses `W X Y Z` lines; blank lines are skipped.
pub fn parse_table(text: &str, path: &str) -> Result<Vec<QuadrupleRecord>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let values = line
            .split_whitespace()
            .map(str::parse::<u64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::format(path, n + 1, e.to_string()))?;
        let values: [u64; 4] = values.try_into().map_err(|v: Vec<u64>| {
            Error::format(path, n + 1, format!("expected 4 values, found {}", v.len()))
        })?;
        out.push(
            QuadrupleRecord::new(values).map_err(|e| Error::format(path, n + 1, e.to_string()))?,
        );
    }
    Ok(out)
}

pub fn format_table(records: &[QuadrupleRecord]) -> String {
    records
        .iter()
        .map(|r| format!("{} {} {} {}\n", r.w, r.x, r.y, r.z))
        .collect()
}

/// Compares the embedded data files with the pinned SHA-256 digests.
pub fn verify_checksums() -> Result<()> {
    let files = [
        ("table1.txt", TABLE1),
        ("table2.txt", TABLE2),
        ("table3.txt", TABLE3),
        ("generators.txt", GENERATORS),
    ];
    let pinned: HashMap<&str, &str> = CHECKSUMS
        .lines()
        .filter_map(|l| {
            l.split_once("  ")
                .map(|(digest, name)| (name.trim(), digest))
        })
        .collect();
    for (name, content) in files {
        let digest = hex::encode(Sha256::digest(content.as_bytes()));
        match pinned.get(name) {
            Some(&d) if d == digest => {}
            _ => return Err(Error::invalid(format!("checksum mismatch for {name}"))),
        }
    }
    Ok(())
}

pub fn tables() -> Result<[Vec<QuadrupleRecord>; 3]> {
    Ok([
        parse_table(TABLE1, "table1.txt")?,
        parse_table(TABLE2, "table2.txt")?,
        parse_table(TABLE3, "table3.txt")?,
    ])
}

/// The two generator matrices, in file order.
pub fn generator_matrices() -> Result<Vec<BitMatrix>> {
    parse_generators(GENERATORS, "generators.txt")
}

/// The group generated by the shipped matrices.
pub fn group() -> Result<Group> {
    Group::from_matrices(&generator_matrices()?)
}

/// Union of the orbits of `reps` under `group`, verified as a `t`-design.
/// Fails if two representatives share an orbit.
pub fn build_design_from_reps(
    reps: &[QuadrupleRecord],
    group: &Group,
    t: usize,
    expected_lambda: u64,
) -> Result<Design> {
    let seeds = reps
        .iter()
        .enumerate()
        .map(|(i, r)| r.subspace(i))
        .collect::<Result<Vec<_>>>()?;
    let orbits: Vec<Vec<Subspace>> = seeds
        .par_iter()
        .map(|s| group.orbit(s))
        .collect::<Result<_>>()?;
    let mut owner: HashMap<&Subspace, usize> = HashMap::new();
    for (i, orbit) in orbits.iter().enumerate() {
        for b in orbit {
            if let Some(&j) = owner.get(b) {
                return Err(Error::OverlappingOrbits {
                    first: j,
                    second: i,
                });
            }
            owner.insert(b, i);
        }
    }
    let blocks = orbits.into_iter().flatten().collect();
    Design::verified(group.dim(), K, t, blocks, Some(expected_lambda))
}

/// The three shipped designs, each verified as a 2-(8,4,217) design.
pub fn designs(group: &Group) -> Result<Vec<Design>> {
    tables()?
        .iter()
        .map(|reps| build_design_from_reps(reps, group, T, LAMBDA))
        .collect()
}

/// The shipped large set; members are verified, the large set itself is not.
pub fn large_set(group: &Group) -> Result<LargeSet> {
    LargeSet::new(designs(group)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::DEFAULT_GROUP_CAP;

    #[test]
    fn decode_examples() {
        let r = QuadrupleRecord::new([1, 2, 4, 8]).unwrap();
        assert_eq!(r.decode().u64_rows().unwrap(), vec![1, 2, 4, 8]);
        let r = QuadrupleRecord::new([1, 34, 40, 192]).unwrap();
        let m = r.decode();
        let ones = |j: usize| (0..8).filter(|&i| m.get(j, i)).collect::<Vec<_>>();
        assert_eq!(ones(0), vec![0]);
        assert_eq!(ones(1), vec![1, 5]);
        assert_eq!(ones(2), vec![3, 5]);
        assert_eq!(ones(3), vec![6, 7]);
        let m = QuadrupleRecord::new([2, 4, 8, 112]).unwrap().decode();
        assert!(m.get(3, 4) && m.get(3, 5) && m.get(3, 6) && !m.get(3, 7));
        assert_eq!(
            QuadrupleRecord::encode(&m).unwrap().values(),
            [2, 4, 8, 112]
        );
    }

    #[test]
    fn out_of_range_entries() {
        assert!(QuadrupleRecord::new([0, 1, 2, 4]).is_err());
        assert!(QuadrupleRecord::new([256, 1, 2, 4]).is_err());
    }

    #[test]
    fn table_parse_errors_carry_line_numbers() {
        match parse_table("1 2 4 8\n\n1 2 x 8\n", "t.txt") {
            Err(Error::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        match parse_table("1 2 4\n", "t.txt") {
            Err(Error::Format { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rank_deficient_record() {
        let r = QuadrupleRecord::new([1, 2, 3, 8]).unwrap();
        assert!(matches!(
            r.subspace(5),
            Err(Error::RankDeficient {
                index: 5,
                rank: 3,
                ..
            })
        ));
    }

    #[test]
    fn embedded_data_is_pinned() {
        verify_checksums().unwrap();
        let [a, b, c] = tables().unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (346, 357, 358));
        for t in [&a, &b, &c] {
            let text = format_table(t);
            assert_eq!(&parse_table(&text, "mem").unwrap(), t);
        }
        assert_eq!(format_table(&a), TABLE1);
    }

    #[test]
    fn single_rep_with_trivial_group_is_not_a_design() {
        let g = Group::trivial(8);
        let r = QuadrupleRecord::new([1, 34, 40, 192]).unwrap();
        assert!(matches!(
            build_design_from_reps(&[r], &g, 2, LAMBDA),
            Err(Error::NotADesign { .. })
        ));
    }

    #[test]
    fn repeated_orbit_is_rejected() {
        let g = Group::close(&group().unwrap().generators()[..1], DEFAULT_GROUP_CAP).unwrap();
        let r = QuadrupleRecord::new([1, 34, 40, 192]).unwrap();
        // a different basis of the same subspace
        let same = QuadrupleRecord::new([1, 34, 40 ^ 34, 192]).unwrap();
        assert!(matches!(
            build_design_from_reps(&[r, same], &g, 2, LAMBDA),
            Err(Error::OverlappingOrbits {
                first: 0,
                second: 1
            })
        ));
    }
}
